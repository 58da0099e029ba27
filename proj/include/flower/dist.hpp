#pragma once

// Standard-normal and truncated-normal primitives. Everything here is a pure
// function of its arguments.

namespace flower {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

/// Lower bound used when clamping probabilities before the inverse normal map.
inline constexpr double kProbClamp = 1e-12;

double std_normal_pdf(double x);
double std_normal_log_pdf(double x);
double std_normal_cdf(double x);
/// log Phi(x), accurate far into the lower tail.
double log_std_normal_cdf(double x);
/// Inverse standard-normal CDF. Throws DomainError unless 0 < u < 1.
double std_normal_quantile(double u);
/// log(Phi(b) - Phi(a)) for a < b, computed on whichever tail avoids cancellation.
double log_std_normal_interval(double a, double b);

/// log Gamma(x) for x > 0; reentrant (does not touch the global signgam).
double log_gamma(double x);

/// Clamp to [kProbClamp, 1 - kProbClamp] and map through the inverse normal CDF.
double clamped_normal_score(double u);

struct TruncNormalParams {
  double mean = 0.0;
  double variance = 1.0;
  double lower = 0.0;
  double upper = 1.0;

  /// Throws ParameterError for variance <= 0, non-finite values or lower >= upper.
  void validate() const;
};

/// Normal(mean, variance) truncated to [lower, upper], with the normalizing
/// constant computed once at construction.
class TruncatedNormal {
 public:
  explicit TruncatedNormal(const TruncNormalParams& p);
  TruncatedNormal(double mean, double variance, double lower, double upper)
      : TruncatedNormal(TruncNormalParams{mean, variance, lower, upper}) {}

  double pdf(double x) const;
  /// -inf outside the support.
  double log_pdf(double x) const;
  double cdf(double x) const;
  /// Throws DomainError unless 0 <= u <= 1.
  double quantile(double u) const;

  double mean() const { return mean_; }
  double sd() const { return sd_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  /// log(sd * (Phi(beta) - Phi(alpha))); log_pdf(x) = std_normal_log_pdf(xi) - this.
  double log_scale_normalizer() const { return log_norm_; }

 private:
  double mean_, sd_, lower_, upper_;
  double alpha_, beta_;
  double log_mass_;  // log(Phi(beta) - Phi(alpha))
  double log_norm_;
};

double tn_pdf(double x, const TruncNormalParams& p);
double tn_log_pdf(double x, const TruncNormalParams& p);
double tn_cdf(double x, const TruncNormalParams& p);
double tn_quantile(double u, const TruncNormalParams& p);

}  // namespace flower
