// Python bindings for the numeric core: simulation, rates, likelihood,
// per-series Gibbs fits and the influence statistics.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "urlflow/error.hpp"
#include "urlflow/gibbs.hpp"
#include "urlflow/hawkes.hpp"
#include "urlflow/influence.hpp"
#include "urlflow/pipeline.hpp"
#include "urlflow/util.hpp"

namespace py = pybind11;
using namespace urlflow;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

Matrix<double> to_matrix(const DoubleArray& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  Matrix<double> m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

BinnedCounts to_counts(const IntArray& a) {
  if (a.ndim() != 2) throw py::value_error("counts must be a (bins, communities) array");
  BinnedCounts b;
  b.counts = Matrix<int>(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), b.counts.data().begin());
  return b;
}

template <typename T>
py::array_t<T> from_matrix(const Matrix<T>& m) {
  py::array_t<T> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

LagKernelGrid make_grid(const std::optional<std::vector<int>>& edges, int max_lag) {
  return edges ? LagKernelGrid(*edges) : LagKernelGrid::default_for(max_lag);
}

HawkesParams make_params(const std::vector<double>& lambda0, const DoubleArray& weights,
                         const std::optional<DoubleArray>& lag_pmf,
                         const std::optional<std::vector<int>>& edges, int max_lag) {
  HawkesParams p(make_grid(edges, max_lag), lambda0, to_matrix(weights));
  if (lag_pmf) {
    const auto K = p.communities(), B = p.grid.bins();
    if (lag_pmf->ndim() != 3 || static_cast<std::size_t>(lag_pmf->shape(0)) != K ||
        static_cast<std::size_t>(lag_pmf->shape(1)) != K ||
        static_cast<std::size_t>(lag_pmf->shape(2)) != B) {
      throw py::value_error("lag_pmf must have shape (K, K, B)");
    }
    std::copy(lag_pmf->data(), lag_pmf->data() + lag_pmf->size(), p.lag_pmf.begin());
  }
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Discrete-time multivariate Hawkes models of URL diffusion";
  m.attr("__version__") = std::string(kVersion);

  auto base = py::register_exception<Error>(m, "UrlflowError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ModelError>(m, "ModelError", base.ptr());
  py::register_exception<FitError>(m, "FitError", base.ptr());

  m.def("default_lag_edges", [](int max_lag) {
    auto g = LagKernelGrid::default_for(max_lag);
    return std::vector<int>(g.edges().begin(), g.edges().end());
  }, py::arg("max_lag") = 720);

  m.def("simulate",
        [](const std::vector<double>& lambda0, const DoubleArray& weights, std::size_t bins,
           std::uint64_t seed, const std::optional<DoubleArray>& lag_pmf,
           const std::optional<std::vector<int>>& edges, int max_lag) {
          auto p = make_params(lambda0, weights, lag_pmf, edges, max_lag);
          return from_matrix(simulate(p, bins, seed).counts);
        },
        py::arg("lambda0"), py::arg("weights"), py::arg("bins"), py::arg("seed"),
        py::arg("lag_pmf") = py::none(), py::arg("edges") = py::none(),
        py::arg("max_lag") = 720,
        "Simulate a (bins, K) count matrix. The lag pmf defaults to uniform over lag bins.");

  m.def("compute_rates",
        [](const IntArray& counts, const std::vector<double>& lambda0, const DoubleArray& weights,
           const std::optional<DoubleArray>& lag_pmf, const std::optional<std::vector<int>>& edges,
           int max_lag) {
          auto p = make_params(lambda0, weights, lag_pmf, edges, max_lag);
          return from_matrix(compute_rates(p, to_counts(counts)).rates);
        },
        py::arg("counts"), py::arg("lambda0"), py::arg("weights"), py::arg("lag_pmf") = py::none(),
        py::arg("edges") = py::none(), py::arg("max_lag") = 720);

  m.def("log_likelihood",
        [](const IntArray& counts, const std::vector<double>& lambda0, const DoubleArray& weights,
           const std::optional<DoubleArray>& lag_pmf, const std::optional<std::vector<int>>& edges,
           int max_lag) {
          auto p = make_params(lambda0, weights, lag_pmf, edges, max_lag);
          return log_likelihood(p, to_counts(counts));
        },
        py::arg("counts"), py::arg("lambda0"), py::arg("weights"), py::arg("lag_pmf") = py::none(),
        py::arg("edges") = py::none(), py::arg("max_lag") = 720);

  m.def("spectral_radius",
        [](const DoubleArray& weights) { return spectral_radius(to_matrix(weights)); },
        py::arg("weights"));

  py::class_<Priors>(m, "Priors")
      .def(py::init<>())
      .def(py::init([](double a0, double b0, double aw, double bw, double gamma) {
             return Priors{a0, b0, aw, bw, gamma};
           }),
           py::arg("lambda0_shape") = 1.0, py::arg("lambda0_rate") = 1.0,
           py::arg("weight_shape") = 1.0, py::arg("weight_rate") = 5.0,
           py::arg("pmf_concentration") = 1.0)
      .def_readwrite("lambda0_shape", &Priors::lambda0_shape)
      .def_readwrite("lambda0_rate", &Priors::lambda0_rate)
      .def_readwrite("weight_shape", &Priors::weight_shape)
      .def_readwrite("weight_rate", &Priors::weight_rate)
      .def_readwrite("pmf_concentration", &Priors::pmf_concentration);

  m.def("fit",
        [](const IntArray& counts, std::uint64_t seed, const std::optional<std::vector<int>>& edges,
           int max_lag, int burn_in, int samples, int thin, const Priors& priors) {
          const auto grid = make_grid(edges, max_lag);
          const auto b = to_counts(counts);
          PosteriorSummary s;
          {
            py::gil_scoped_release release;
            s = fit(b, grid, priors, GibbsSchedule{burn_in, samples, thin}, seed);
          }
          const auto K = s.mean_lambda0.size();
          py::array_t<double> pmf({K, K, grid.bins()});
          std::copy(s.mean_pmf.begin(), s.mean_pmf.end(), pmf.mutable_data());
          py::dict out;
          out["lambda0"] = py::array(py::cast(s.mean_lambda0));
          out["lambda0_sd"] = py::array(py::cast(s.sd_lambda0));
          out["weights"] = from_matrix(s.mean_weights);
          out["weights_sd"] = from_matrix(s.sd_weights);
          out["lag_pmf"] = pmf;
          out["attributed"] = from_matrix(s.mean_edge_counts);
          out["background"] = py::array(py::cast(s.mean_background));
          out["n_samples"] = s.n_samples;
          out["edges"] = std::vector<int>(grid.edges().begin(), grid.edges().end());
          return out;
        },
        py::arg("counts"), py::arg("seed"), py::arg("edges") = py::none(),
        py::arg("max_lag") = 720, py::arg("burn_in") = 200, py::arg("samples") = 500,
        py::arg("thin") = 1, py::arg("priors") = Priors{},
        "Gibbs fit of one (bins, K) count matrix; returns posterior means and sds.");

  m.def("ks_two_sample",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          auto r = ks_two_sample(a, b);
          return py::make_tuple(r.statistic, r.p_value);
        },
        py::arg("a"), py::arg("b"), "Two-sample KS test; returns (D, p).");
  m.def("kolmogorov_survival", &kolmogorov_survival, py::arg("x"));
  m.def("significance_stars", [](double p) { return std::string(significance_stars(p)); },
        py::arg("p"));

  m.def("influence_percentage",
        [](const std::vector<DoubleArray>& weights, const std::vector<std::vector<long>>& totals) {
          if (weights.size() != totals.size()) {
            throw py::value_error("weights and totals need one entry per URL");
          }
          std::vector<UrlInfluenceInput> urls;
          for (std::size_t i = 0; i < weights.size(); ++i) {
            urls.push_back({to_matrix(weights[i]), totals[i]});
          }
          const auto pct = influence_percentage(urls);
          py::array_t<double> out({pct.rows(), pct.cols()});
          auto* d = out.mutable_data();
          for (std::size_t a = 0; a < pct.rows(); ++a) {
            for (std::size_t b = 0; b < pct.cols(); ++b) {
              *d++ = pct(a, b).value_or(std::numeric_limits<double>::quiet_NaN());
            }
          }
          return out;
        },
        py::arg("weights"), py::arg("totals"),
        "Percent of target events attributable to each source; NaN where a target has no events.");

  m.def("url_seed", &url_seed, py::arg("run_seed"), py::arg("url"));
}
