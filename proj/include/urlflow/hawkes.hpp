#pragma once

// Discrete-time multivariate Hawkes model.
//
// Rate of community k in bin t:
//
//   lambda[t][k] = lambda0[k] + sum_{k'} sum_{t' < t, t - t' <= D}
//                  s[t'][k'] * W[k'][k] * g[k'->k][t - t']
//
// The lag kernel g is piecewise constant over a LagKernelGrid: a pmf G over
// B lag bins, spread uniformly across the integer lags inside each bin.
// Events sharing a bin never excite each other.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "urlflow/events.hpp"
#include "urlflow/matrix.hpp"

namespace urlflow {

class LagKernelGrid {
 public:
  // edges[0] == 1, strictly increasing, edges.back() == D + 1.
  explicit LagKernelGrid(std::vector<int> edges);

  // Log-spaced bins: {1,2,4,8,16,64,256,512,721} for D = 720, otherwise
  // powers of two capped at D + 1.
  static LagKernelGrid default_for(int max_lag);

  int max_lag() const noexcept { return edges_.back() - 1; }
  std::size_t bins() const noexcept { return edges_.size() - 1; }
  std::span<const int> edges() const noexcept { return edges_; }
  int width(std::size_t bin) const { return edges_[bin + 1] - edges_[bin]; }
  // Lag in [1, D].
  std::size_t bin_of(int lag) const { return lag_bin_[static_cast<std::size_t>(lag)]; }

  bool operator==(const LagKernelGrid& o) const { return edges_ == o.edges_; }

 private:
  std::vector<int> edges_;
  std::vector<std::size_t> lag_bin_;  // indexed by lag, entry 0 unused
};

struct HawkesParams {
  LagKernelGrid grid;
  std::vector<double> lambda0;  // K, events per bin
  Matrix<double> weights;       // K x K, row = source, column = target
  std::vector<double> lag_pmf;  // K x K x B, [source][target][bin]

  // Lag pmfs start uniform over bins.
  HawkesParams(LagKernelGrid grid, std::vector<double> lambda0,
               Matrix<double> weights);

  std::size_t communities() const noexcept { return lambda0.size(); }

  std::span<double> pmf(std::size_t source, std::size_t target) {
    return {lag_pmf.data() + (source * communities() + target) * grid.bins(),
            grid.bins()};
  }
  std::span<const double> pmf(std::size_t source, std::size_t target) const {
    return {lag_pmf.data() + (source * communities() + target) * grid.bins(),
            grid.bins()};
  }

  // Per-lag kernel g[source->target][lag]; zero outside [1, D].
  double lag_kernel(std::size_t source, std::size_t target, int lag) const;

  // Throws std::invalid_argument on negative entries, shape mismatch or a pmf
  // that does not sum to one.
  void validate() const;
};

// Dense K*K*(D+1) table of W * g, indexed [source][target][lag].
std::vector<double> impulse_table(const HawkesParams& params);

double impulse(const HawkesParams& params, std::size_t source,
               std::size_t target, int lag);

struct RateMatrix {
  Matrix<double> rates;  // T x K
};

RateMatrix compute_rates(const HawkesParams& params, const BinnedCounts& counts);

// Poisson log-likelihood of the counts. Throws ModelError when an occupied
// bin has zero rate.
double log_likelihood(const HawkesParams& params, const BinnedCounts& counts);
double log_likelihood(const RateMatrix& rates, const BinnedCounts& counts);

// Perron root of a non-negative matrix: power iteration on W + I within each
// strongly connected block.
double spectral_radius(const Matrix<double>& weights);

// Draws T bins of counts in time order. Throws ModelError unless
// spectral_radius(W) < 1. The result has delta_t = 1 and origin = 0.
BinnedCounts simulate(const HawkesParams& params, std::size_t bins,
                      std::uint64_t seed);

// Flat CSV bundle: lambda0.csv, W.csv, G.csv, grid.csv in `dir`.
void save_params(const HawkesParams& params, const std::filesystem::path& dir);
HawkesParams load_params(const std::filesystem::path& dir);

}  // namespace urlflow
