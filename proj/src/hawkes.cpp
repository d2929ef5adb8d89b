#include "urlflow/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "urlflow/error.hpp"
#include "urlflow/util.hpp"

namespace urlflow {

LagKernelGrid::LagKernelGrid(std::vector<int> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2) {
    throw std::invalid_argument("lag grid needs at least one bin");
  }
  if (edges_.front() != 1) {
    throw std::invalid_argument("lag grid must start at lag 1");
  }
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i] <= edges_[i - 1]) {
      throw std::invalid_argument("lag grid edges must strictly increase");
    }
  }
  lag_bin_.assign(static_cast<std::size_t>(edges_.back()), 0);
  for (std::size_t b = 0; b + 1 < edges_.size(); ++b) {
    for (int d = edges_[b]; d < edges_[b + 1]; ++d) {
      lag_bin_[static_cast<std::size_t>(d)] = b;
    }
  }
}

LagKernelGrid LagKernelGrid::default_for(int max_lag) {
  if (max_lag < 1) throw std::invalid_argument("max lag must be >= 1");
  if (max_lag == 720) {
    return LagKernelGrid({1, 2, 4, 8, 16, 64, 256, 512, 721});
  }
  std::vector<int> edges{1};
  while (edges.back() * 2 < max_lag + 1) edges.push_back(edges.back() * 2);
  edges.push_back(max_lag + 1);
  return LagKernelGrid(std::move(edges));
}

HawkesParams::HawkesParams(LagKernelGrid g, std::vector<double> l0,
                           Matrix<double> w)
    : grid(std::move(g)), lambda0(std::move(l0)), weights(std::move(w)) {
  const std::size_t k = lambda0.size();
  if (weights.rows() != k || weights.cols() != k) {
    throw std::invalid_argument("weight matrix must be K x K");
  }
  lag_pmf.assign(k * k * grid.bins(), 1.0 / static_cast<double>(grid.bins()));
}

double HawkesParams::lag_kernel(std::size_t source, std::size_t target,
                                int lag) const {
  if (lag < 1 || lag > grid.max_lag()) return 0.0;
  auto b = grid.bin_of(lag);
  return pmf(source, target)[b] / grid.width(b);
}

void HawkesParams::validate() const {
  const std::size_t k = communities();
  if (k == 0) throw std::invalid_argument("model has no communities");
  if (weights.rows() != k || weights.cols() != k) {
    throw std::invalid_argument("weight matrix must be K x K");
  }
  if (lag_pmf.size() != k * k * grid.bins()) {
    throw std::invalid_argument("lag pmf array must be K x K x B");
  }
  auto bad = [](double v) { return !(v >= 0.0) || !std::isfinite(v); };
  if (std::any_of(lambda0.begin(), lambda0.end(), bad) ||
      std::any_of(weights.data().begin(), weights.data().end(), bad) ||
      std::any_of(lag_pmf.begin(), lag_pmf.end(), bad)) {
    throw std::invalid_argument("model parameters must be finite and >= 0");
  }
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      double sum = 0.0;
      for (double p : pmf(s, t)) sum += p;
      if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("lag pmf does not sum to 1");
      }
    }
  }
}

std::vector<double> impulse_table(const HawkesParams& params) {
  const std::size_t k = params.communities();
  const auto span = static_cast<std::size_t>(params.grid.max_lag()) + 1;
  std::vector<double> table(k * k * span, 0.0);
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      double* row = table.data() + (s * k + t) * span;
      for (int d = 1; d <= params.grid.max_lag(); ++d) {
        row[d] = params.weights(s, t) * params.lag_kernel(s, t, d);
      }
    }
  }
  return table;
}

double impulse(const HawkesParams& params, std::size_t source,
               std::size_t target, int lag) {
  if (lag < 1) throw std::invalid_argument("impulse lag must be >= 1");
  if (lag > params.grid.max_lag()) return 0.0;
  return params.weights(source, target) * params.lag_kernel(source, target, lag);
}

RateMatrix compute_rates(const HawkesParams& params, const BinnedCounts& counts) {
  const std::size_t k = params.communities();
  if (counts.communities() != k) {
    throw std::invalid_argument("counts have " +
                                std::to_string(counts.communities()) +
                                " columns, model has " + std::to_string(k));
  }
  const std::size_t bins = counts.bins();
  const auto max_lag = static_cast<std::size_t>(params.grid.max_lag());
  const std::size_t span = max_lag + 1;
  const auto table = impulse_table(params);

  RateMatrix out{Matrix<double>(bins, k)};
  for (std::size_t t = 0; t < bins; ++t) {
    for (std::size_t j = 0; j < k; ++j) out.rates(t, j) = params.lambda0[j];
  }
  for (std::size_t tp = 0; tp < bins; ++tp) {
    for (std::size_t src = 0; src < k; ++src) {
      const int s = counts.counts(tp, src);
      if (s == 0) continue;
      const std::size_t last = std::min(max_lag, bins - 1 - tp);
      for (std::size_t tgt = 0; tgt < k; ++tgt) {
        const double* h = table.data() + (src * k + tgt) * span;
        for (std::size_t d = 1; d <= last; ++d) {
          out.rates(tp + d, tgt) += s * h[d];
        }
      }
    }
  }
  return out;
}

double log_likelihood(const RateMatrix& rates, const BinnedCounts& counts) {
  if (rates.rates.rows() != counts.bins() ||
      rates.rates.cols() != counts.communities()) {
    throw std::invalid_argument("rate and count shapes differ");
  }
  double ll = 0.0;
  for (std::size_t t = 0; t < counts.bins(); ++t) {
    for (std::size_t k = 0; k < counts.communities(); ++k) {
      const int s = counts.counts(t, k);
      const double lam = rates.rates(t, k);
      if (s > 0) {
        if (!(lam > 0.0)) {
          throw ModelError("zero rate at occupied bin " + std::to_string(t) +
                           ", community " + std::to_string(k));
        }
        ll += s * std::log(lam) - std::lgamma(s + 1.0);
      }
      ll -= lam;
    }
  }
  return ll;
}

double log_likelihood(const HawkesParams& params, const BinnedCounts& counts) {
  return log_likelihood(compute_rates(params, counts), counts);
}

namespace {

// Perron root of an irreducible non-negative block. W + I is then primitive,
// so the Collatz-Wielandt bounds close geometrically.
double irreducible_root(const Matrix<double>& w, const std::vector<std::size_t>& idx) {
  const std::size_t k = idx.size();
  std::vector<double> x(k, 1.0 / static_cast<double>(k)), y(k);
  double lo = 0.0, hi = 0.0;
  constexpr int kMaxIterations = 1'000'000;
  for (int it = 0; it < kMaxIterations; ++it) {
    lo = std::numeric_limits<double>::infinity();
    hi = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double acc = x[i];
      for (std::size_t j = 0; j < k; ++j) acc += w(idx[i], idx[j]) * x[j];
      y[i] = acc;
      norm += acc;
      lo = std::min(lo, acc / x[i]);
      hi = std::max(hi, acc / x[i]);
    }
    for (std::size_t i = 0; i < k; ++i) x[i] = y[i] / norm;
    if (hi - lo <= 1e-12 * hi) break;
  }
  return std::max(0.0, 0.5 * (lo + hi) - 1.0);
}

}  // namespace

double spectral_radius(const Matrix<double>& w) {
  const std::size_t k = w.rows();
  if (k == 0) return 0.0;
  if (w.cols() != k) throw std::invalid_argument("matrix must be square");

  // The root of a reducible matrix is the largest root among its strongly
  // connected blocks; find them from the transitive closure.
  std::vector<char> reach(k * k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) reach[i * k + j] = i == j || w(i, j) > 0.0;
  }
  for (std::size_t m = 0; m < k; ++m) {
    for (std::size_t i = 0; i < k; ++i) {
      if (!reach[i * k + m]) continue;
      for (std::size_t j = 0; j < k; ++j) reach[i * k + j] |= reach[m * k + j];
    }
  }
  std::vector<char> done(k, 0);
  double rho = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (done[i]) continue;
    std::vector<std::size_t> block;
    for (std::size_t j = i; j < k; ++j) {
      if (reach[i * k + j] && reach[j * k + i]) {
        block.push_back(j);
        done[j] = 1;
      }
    }
    rho = std::max(rho, block.size() == 1 ? w(i, i) : irreducible_root(w, block));
  }
  return rho;
}

BinnedCounts simulate(const HawkesParams& params, std::size_t bins,
                      std::uint64_t seed) {
  params.validate();
  if (bins < 1) throw std::invalid_argument("simulation needs T >= 1");
  const double rho = spectral_radius(params.weights);
  if (!(rho < 1.0)) {
    throw ModelError("weight matrix is not subcritical (spectral radius " +
                     format_fixed(rho, 6) + " >= 1)");
  }
  const std::size_t k = params.communities();
  const auto max_lag = static_cast<std::size_t>(params.grid.max_lag());
  const std::size_t span = max_lag + 1;
  const auto table = impulse_table(params);

  std::mt19937_64 rng(seed);
  BinnedCounts out;
  out.counts = Matrix<int>(bins, k, 0);
  // Ring buffer of excitation already scheduled for the next D bins.
  Matrix<double> pending(span, k, 0.0);
  for (std::size_t t = 0; t < bins; ++t) {
    auto slot = pending.row(t % span);
    for (std::size_t j = 0; j < k; ++j) {
      const double rate = params.lambda0[j] + slot[j];
      int n = 0;
      if (rate > 0.0) n = std::poisson_distribution<int>(rate)(rng);
      out.counts(t, j) = n;
      slot[j] = 0.0;
    }
    for (std::size_t src = 0; src < k; ++src) {
      const int s = out.counts(t, src);
      if (s == 0) continue;
      for (std::size_t tgt = 0; tgt < k; ++tgt) {
        const double* h = table.data() + (src * k + tgt) * span;
        for (std::size_t d = 1; d <= max_lag; ++d) {
          pending((t + d) % span, tgt) += s * h[d];
        }
      }
    }
  }
  return out;
}

namespace {

std::vector<std::vector<std::string>> read_csv_body(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

double to_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(path.string() + ": not a number '" + s + "'");
  }
}

}  // namespace

void save_params(const HawkesParams& params, const std::filesystem::path& dir) {
  params.validate();
  std::filesystem::create_directories(dir);
  const std::size_t k = params.communities();
  {
    std::ofstream os(dir / "lambda0.csv");
    os << "community,lambda0\n";
    for (std::size_t i = 0; i < k; ++i) {
      os << i << ',' << format_exact(params.lambda0[i]) << '\n';
    }
  }
  {
    std::ofstream os(dir / "W.csv");
    os << "source";
    for (std::size_t j = 0; j < k; ++j) os << ",target_" << j;
    os << '\n';
    for (std::size_t i = 0; i < k; ++i) {
      os << i;
      for (std::size_t j = 0; j < k; ++j) os << ',' << format_exact(params.weights(i, j));
      os << '\n';
    }
  }
  {
    std::ofstream os(dir / "G.csv");
    os << "source,target";
    for (std::size_t b = 0; b < params.grid.bins(); ++b) os << ",bin_" << b;
    os << '\n';
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        os << i << ',' << j;
        for (double p : params.pmf(i, j)) os << ',' << format_exact(p);
        os << '\n';
      }
    }
  }
  {
    std::ofstream os(dir / "grid.csv");
    os << "edge\n";
    for (int e : params.grid.edges()) os << e << '\n';
  }
}

HawkesParams load_params(const std::filesystem::path& dir) {
  std::vector<int> edges;
  for (auto& row : read_csv_body(dir / "grid.csv")) {
    edges.push_back(static_cast<int>(to_double(row.at(0), dir / "grid.csv")));
  }
  auto l0_rows = read_csv_body(dir / "lambda0.csv");
  const std::size_t k = l0_rows.size();
  std::vector<double> lambda0(k);
  for (auto& row : l0_rows) {
    if (row.size() != 2) throw DataError("lambda0.csv: expected 2 columns");
    auto i = static_cast<std::size_t>(to_double(row[0], dir / "lambda0.csv"));
    if (i >= k) throw DataError("lambda0.csv: community index out of range");
    lambda0[i] = to_double(row[1], dir / "lambda0.csv");
  }
  Matrix<double> w(k, k);
  auto w_rows = read_csv_body(dir / "W.csv");
  if (w_rows.size() != k) throw DataError("W.csv: expected K rows");
  for (auto& row : w_rows) {
    if (row.size() != k + 1) throw DataError("W.csv: expected K+1 columns");
    auto i = static_cast<std::size_t>(to_double(row[0], dir / "W.csv"));
    if (i >= k) throw DataError("W.csv: source index out of range");
    for (std::size_t j = 0; j < k; ++j) w(i, j) = to_double(row[j + 1], dir / "W.csv");
  }
  HawkesParams params(LagKernelGrid(std::move(edges)), std::move(lambda0),
                      std::move(w));
  auto g_rows = read_csv_body(dir / "G.csv");
  if (g_rows.size() != k * k) throw DataError("G.csv: expected K*K rows");
  for (auto& row : g_rows) {
    if (row.size() != 2 + params.grid.bins()) {
      throw DataError("G.csv: expected B+2 columns");
    }
    auto i = static_cast<std::size_t>(to_double(row[0], dir / "G.csv"));
    auto j = static_cast<std::size_t>(to_double(row[1], dir / "G.csv"));
    if (i >= k || j >= k) throw DataError("G.csv: index out of range");
    auto p = params.pmf(i, j);
    for (std::size_t b = 0; b < p.size(); ++b) p[b] = to_double(row[b + 2], dir / "G.csv");
  }
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(dir.string() + ": " + e.what());
  }
  return params;
}

}  // namespace urlflow
