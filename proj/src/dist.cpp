#include "flower/dist.hpp"

#include <algorithm>
#include <cmath>
#include <math.h>
#include <limits>

#include "flower/error.hpp"

namespace flower {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) - exp(b)) for a >= b.
double log_diff_exp(double a, double b) {
  if (b == kNegInf) return a;
  if (b >= a) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

// Wichura (1988), algorithm AS241 (PPND16). q = u - 0.5.
double ppnd16(double u) {
  const double q = u - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) *
                   r +
               13731.693765509461125) *
                  r +
              1971.5909503065514427) *
                 r +
             133.14166789178437745) *
                r +
            3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) *
                   r +
               5394.1960214247511077) *
                  r +
              687.1870074920579083) *
                 r +
             42.313330701600911252) *
                r +
            1.0);
  }
  double r = q < 0 ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) *
                  r +
              3.64784832476320460504) *
                 r +
             5.7694972214606914055) *
                r +
            4.6303378461565452959) *
               r +
           1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) *
                  r +
              0.68976733498510000455) *
                 r +
             1.6763848301838038494) *
                r +
            2.05319162663775882187) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) *
                  r +
              0.29656057182850489123) *
                 r +
             1.7848265399172913358) *
                r +
            5.4637849111641143699) *
               r +
           6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) *
                  r +
              0.0148753612908506148525) *
                 r +
             0.13692988092273580531) *
                r +
            0.59983220655588793769) *
               r +
           1.0);
  }
  return q < 0.0 ? -val : val;
}

// Upper-tail probability Q(x) = 1 - Phi(x) in log space.
double log_upper_tail(double x) { return log_std_normal_cdf(-x); }

}  // namespace

double std_normal_pdf(double x) { return std::exp(std_normal_log_pdf(x)); }

double std_normal_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double log_std_normal_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
  if (x > -35.0) return std::log(0.5 * std::erfc(-x * kInvSqrt2));
  // Asymptotic expansion of the Mills ratio.
  const double z = 1.0 / (x * x);
  const double series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z)));
  return -0.5 * x * x - std::log(-x) - kLogSqrt2Pi + std::log(series);
}

double std_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("std_normal_quantile: u must lie in (0, 1)");
  return ppnd16(u);
}

double log_std_normal_interval(double a, double b) {
  if (!(a < b)) return kNegInf;
  if (a >= 0.0) return log_diff_exp(log_upper_tail(a), log_upper_tail(b));
  if (b <= 0.0) return log_diff_exp(log_std_normal_cdf(b), log_std_normal_cdf(a));
  return std::log1p(-(std_normal_cdf(a) + std_normal_cdf(-b)));
}

double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double clamped_normal_score(double u) {
  return std_normal_quantile(std::clamp(u, kProbClamp, 1.0 - kProbClamp));
}

void TruncNormalParams::validate() const {
  if (!std::isfinite(mean) || !std::isfinite(variance) || !(variance > 0.0))
    throw ParameterError("truncated normal: variance must be finite and positive");
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper))
    throw ParameterError("truncated normal: lower bound must be below upper bound");
}

TruncatedNormal::TruncatedNormal(const TruncNormalParams& p) {
  p.validate();
  mean_ = p.mean;
  sd_ = std::sqrt(p.variance);
  lower_ = p.lower;
  upper_ = p.upper;
  alpha_ = (lower_ - mean_) / sd_;
  beta_ = (upper_ - mean_) / sd_;
  log_mass_ = log_std_normal_interval(alpha_, beta_);
  log_norm_ = std::log(sd_) + log_mass_;
}

double TruncatedNormal::log_pdf(double x) const {
  if (x < lower_ || x > upper_) return kNegInf;
  const double xi = (x - mean_) / sd_;
  return std_normal_log_pdf(xi) - log_norm_;
}

double TruncatedNormal::pdf(double x) const {
  if (x < lower_ || x > upper_) return 0.0;
  return std::exp(log_pdf(x));
}

double TruncatedNormal::cdf(double x) const {
  if (x <= lower_) return 0.0;
  if (x >= upper_) return 1.0;
  const double xi = (x - mean_) / sd_;
  // Whichever of F and 1-F is smaller is computed directly.
  const double log_below = log_std_normal_interval(alpha_, xi);
  const double log_above = log_std_normal_interval(xi, beta_);
  if (log_below <= log_above) return std::min(1.0, std::exp(log_below - log_mass_));
  return std::max(0.0, -std::expm1(log_above - log_mass_));
}

double TruncatedNormal::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("tn_quantile: u must lie in [0, 1]");
  if (u == 0.0) return lower_;
  if (u == 1.0) return upper_;

  double xi;
  if (alpha_ >= 0.0) {
    // Upper tail: Q(xi) = (1-u) Q(alpha) + u Q(beta).
    const double a = std::log1p(-u) + log_upper_tail(alpha_);
    const double b = std::log(u) + log_upper_tail(beta_);
    const double hi = std::max(a, b);
    const double log_q = hi + std::log1p(std::exp(std::min(a, b) - hi));
    const double q = std::exp(log_q);
    xi = (q > 0.0 && q < 1.0) ? -ppnd16(q) : alpha_;
  } else if (beta_ <= 0.0) {
    const double a = std::log1p(-u) + log_std_normal_cdf(alpha_);
    const double b = std::log(u) + log_std_normal_cdf(beta_);
    const double hi = std::max(a, b);
    const double log_p = hi + std::log1p(std::exp(std::min(a, b) - hi));
    const double p = std::exp(log_p);
    xi = (p > 0.0 && p < 1.0) ? ppnd16(p) : beta_;
  } else {
    const double mass = std::exp(log_mass_);
    const double p = std_normal_cdf(alpha_) + u * mass;
    if (p <= 0.5) {
      xi = ppnd16(std::clamp(p, std::numeric_limits<double>::min(), 0.5));
    } else {
      const double q = std_normal_cdf(-beta_) + (1.0 - u) * mass;
      xi = -ppnd16(std::clamp(q, std::numeric_limits<double>::min(), 0.5));
    }
  }
  double x = std::clamp(mean_ + sd_ * xi, lower_, upper_);

  // Safeguarded Newton polish on the CDF.
  double lo = lower_, hi = upper_;
  for (int it = 0; it < 60; ++it) {
    const double f = cdf(x) - u;
    if (f == 0.0) break;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double dens = pdf(x);
    const double step = dens > 0.0 ? f / dens : std::numeric_limits<double>::infinity();
    // A Newton step below rounding level means x is already the closest double.
    if (std::fabs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(x))) break;
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  return x;
}

double tn_pdf(double x, const TruncNormalParams& p) { return TruncatedNormal(p).pdf(x); }
double tn_log_pdf(double x, const TruncNormalParams& p) { return TruncatedNormal(p).log_pdf(x); }
double tn_cdf(double x, const TruncNormalParams& p) { return TruncatedNormal(p).cdf(x); }
double tn_quantile(double u, const TruncNormalParams& p) { return TruncatedNormal(p).quantile(u); }

}  // namespace flower
