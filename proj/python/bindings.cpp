#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "flower/chain_store.hpp"
#include "flower/cli.hpp"
#include "flower/dist.hpp"
#include "flower/error.hpp"
#include "flower/estimators.hpp"
#include "flower/ingest.hpp"
#include "flower/rng.hpp"
#include "flower/sampler.hpp"
#include "flower/simgen.hpp"

namespace py = pybind11;
using namespace flower;

namespace {

using RowMajorXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMajorXi = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Python sees units as rows: x is (n, d) and c is (n, p) with 0-based codes.
Dataset make_dataset(const Eigen::Ref<const RowMajorXd>& x, const Eigen::Ref<const RowMajorXi>& c,
                     const std::vector<int>& levels) {
  if (c.rows() != x.rows()) throw DataError("x and c must have the same number of rows");
  if (c.cols() != static_cast<Eigen::Index>(levels.size())) throw DataError("c needs one column per covariate");
  Dataset d;
  d.x = x.transpose();
  d.c = c.transpose();
  d.levels = levels;
  d.fill_defaults();
  return d;
}

py::dict dataset_dict(const SimulatedData& sim) {
  py::dict out;
  out["x"] = RowMajorXd(sim.data.x.transpose());
  out["c"] = RowMajorXi(sim.data.c.transpose());
  out["levels"] = sim.data.levels;
  out["truth"] = sim.model;
  return out;
}

py::tuple estimate_tuple(const DensityEstimate& f) {
  return py::make_tuple(f.grid.points(), f.values);
}

py::dict score_dict(const Score& s) {
  py::dict out;
  out["ise"] = s.ise;
  out["ise_mean"] = s.ise_mean;
  out["ise_sum"] = s.ise_sum;
  out["ari"] = s.ari;
  out["ari_mean"] = s.ari_mean;
  out["single_cluster"] = s.single_cluster;
  out["R_hat"] = s.R_hat;
  out["R_max_abs_error"] = s.R_max_abs_error;
  return out;
}

py::dict acceptance_dict(const AcceptanceSummary& a) {
  py::dict out;
  out["alpha"] = a.alpha;
  out["phi"] = a.phi;
  out["mu"] = a.mu;
  out["sigma2"] = a.sigma2;
  out["b"] = a.b;
  out["theta"] = a.theta;
  out["joint_s"] = a.joint_s;
  return out;
}

TruncNormalParams tn(double mean, double variance, double lower, double upper) {
  TruncNormalParams p{mean, variance, lower, upper};
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_flower, m) {
  m.doc() = "Bayesian density regression for multivariate responses with categorical covariates";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  m.def(
      "tn_pdf", [](double x, double mean, double variance, double lower, double upper) {
        return tn_pdf(x, tn(mean, variance, lower, upper));
      },
      py::arg("x"), py::arg("mean"), py::arg("variance"), py::arg("lower"), py::arg("upper"));
  m.def(
      "tn_cdf", [](double x, double mean, double variance, double lower, double upper) {
        return tn_cdf(x, tn(mean, variance, lower, upper));
      },
      py::arg("x"), py::arg("mean"), py::arg("variance"), py::arg("lower"), py::arg("upper"));
  m.def(
      "tn_quantile", [](double u, double mean, double variance, double lower, double upper) {
        return tn_quantile(u, tn(mean, variance, lower, upper));
      },
      py::arg("u"), py::arg("mean"), py::arg("variance"), py::arg("lower"), py::arg("upper"));
  m.def("std_normal_quantile", &std_normal_quantile, py::arg("u"));

  py::class_<Hyperparameters>(m, "Hyperparameters")
      .def(py::init<>())
      .def_readwrite("K", &Hyperparameters::K)
      .def_readwrite("K_star", &Hyperparameters::K_star)
      .def_readwrite("lower", &Hyperparameters::lower)
      .def_readwrite("upper", &Hyperparameters::upper)
      .def_readwrite("a_alpha", &Hyperparameters::a_alpha)
      .def_readwrite("b_alpha", &Hyperparameters::b_alpha)
      .def_readwrite("a_phi", &Hyperparameters::a_phi)
      .def_readwrite("b_phi", &Hyperparameters::b_phi)
      .def_readwrite("alpha0", &Hyperparameters::alpha0)
      .def_readwrite("phi_star", &Hyperparameters::phi_star)
      .def_readwrite("a_sigma", &Hyperparameters::a_sigma)
      .def_readwrite("b_sigma", &Hyperparameters::b_sigma)
      .def_readwrite("m0", &Hyperparameters::m0)
      .def_readwrite("s0", &Hyperparameters::s0)
      .def_readwrite("grid_b", &Hyperparameters::grid_b)
      .def_readwrite("grid_theta", &Hyperparameters::grid_theta)
      .def_property(
          "latent", [](const Hyperparameters& h) { return to_string(h.latent); },
          [](Hyperparameters& h, const std::string& s) { h.latent = latent_transform_from_string(s); })
      .def_readwrite("iterations", &Hyperparameters::iterations)
      .def_readwrite("burnin", &Hyperparameters::burnin)
      .def_readwrite("thin", &Hyperparameters::thin)
      .def_readwrite("seed", &Hyperparameters::seed)
      .def_readwrite("threads", &Hyperparameters::threads)
      .def("retained", &Hyperparameters::retained);

  py::class_<TrueModel>(m, "TrueModel")
      .def_readonly("levels", &TrueModel::levels)
      .def_readonly("R", &TrueModel::R)
      .def_property_readonly("d", &TrueModel::d)
      .def_property_readonly("p", &TrueModel::p)
      .def("density", &TrueModel::density, py::arg("l"), py::arg("combo"), py::arg("x"))
      .def("cdf", &TrueModel::cdf, py::arg("l"), py::arg("combo"), py::arg("x"))
      .def("to_json", &true_model_to_json)
      .def_static("from_json", &true_model_from_json, py::arg("text"));

  py::class_<PosteriorDraws>(m, "Posterior")
      .def("__len__", &PosteriorDraws::size)
      .def_property_readonly("levels", [](const PosteriorDraws& p) { return p.info.levels; })
      .def_property_readonly("d", [](const PosteriorDraws& p) { return p.info.d; })
      .def_property_readonly("acceptance", [](const PosteriorDraws& p) { return acceptance_dict(p.acceptance); })
      .def(
          "marginal_density",
          [](const PosteriorDraws& p, int l, const std::vector<int>& combo, int grid) {
            return estimate_tuple(cond_marginal_density(p, l, combo, DensityGrid{p.info.lower, p.info.upper, grid}));
          },
          py::arg("l"), py::arg("combo"), py::arg("grid") = 300)
      .def(
          "uncond_density",
          [](const PosteriorDraws& p, int l, int grid) {
            return estimate_tuple(uncond_density(p, l, DensityGrid{p.info.lower, p.info.upper, grid}));
          },
          py::arg("l"), py::arg("grid") = 300)
      .def(
          "joint_density",
          [](const PosteriorDraws& p, const std::vector<int>& L, const std::vector<int>& combo, int grid) {
            const DensityEstimate f = cond_joint_density(p, L, combo, DensityGrid{p.info.lower, p.info.upper, grid});
            std::vector<py::ssize_t> shape(L.size(), grid);
            py::array_t<double> values(shape);
            std::copy(f.values.data(), f.values.data() + f.values.size(), values.mutable_data());
            return py::make_tuple(f.grid.points(), values);
          },
          py::arg("L"), py::arg("combo"), py::arg("grid") = 100)
      .def("correlation", &correlation_estimate)
      .def("map_partitions",
           [](const PosteriorDraws& p) {
             py::list out;
             for (const CoordinatePartition& cp : map_partitions(p)) {
               py::dict d;
               d["s"] = cp.s;
               d["shape"] = cp.shape;
               d["s_star"] = cp.s_star;
               d["combinations"] = cp.combinations;
               d["frequency"] = cp.frequency;
               out.append(d);
             }
             return out;
           })
      .def("save", [](const PosteriorDraws& p, const std::string& path) { write_draws(path, p); }, py::arg("path"))
      .def_static("load", py::overload_cast<const std::string&>(&read_draws), py::arg("path"));

  m.def(
      "simulate_scenario1",
      [](int n, std::uint64_t seed) {
        Rng rng(seed);
        return dataset_dict(scenario1(n, rng));
      },
      py::arg("n") = 1000, py::arg("seed"));
  m.def(
      "simulate_scenario2",
      [](int n, int d, std::uint64_t seed) {
        Rng rng(seed);
        return dataset_dict(scenario2(nhanes_like_model(d), Eigen::MatrixXi(), n, rng));
      },
      py::arg("n") = 6307, py::arg("d") = 6, py::arg("seed"));

  m.def(
      "fit",
      [](const Eigen::Ref<const RowMajorXd>& x, const Eigen::Ref<const RowMajorXi>& c, const std::vector<int>& levels,
         const Hyperparameters& hp, const std::string& draws_path) {
        const Dataset data = make_dataset(x, c, levels);
        py::gil_scoped_release release;
        Sampler sampler(data, hp);
        if (draws_path.empty()) return sampler.run();
        NdjsonDrawWriter writer(draws_path);
        return sampler.run(&writer);
      },
      py::arg("x"), py::arg("c"), py::arg("levels"), py::arg("hp") = Hyperparameters{}, py::arg("draws_path") = "",
      "Runs the sampler. x is (n, d) on the support, c is (n, p) with 0-based codes.");

  m.def(
      "score",
      [](const TrueModel& truth, const PosteriorDraws& fit, int grid) { return score_dict(score_fit(truth, fit, grid)); },
      py::arg("truth"), py::arg("fit"), py::arg("grid") = 300);
  m.def("truth_as_posterior", &truth_as_draws, py::arg("truth"));
  m.def("adjusted_rand_index", &ari, py::arg("a"), py::arg("b"));

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process and returns (exit code, stdout, stderr).");
}
