#include "urlflow/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "urlflow/error.hpp"
#include "urlflow/util.hpp"

namespace urlflow {

void Priors::validate() const {
  for (double v : {lambda0_shape, lambda0_rate, weight_shape, weight_rate,
                   pmf_concentration}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("prior hyperparameters must be positive");
    }
  }
}

void GibbsSchedule::validate() const {
  if (burn_in < 0 || samples < 1 || thin < 1) {
    throw std::invalid_argument(
        "Gibbs schedule needs burn_in >= 0, samples >= 1, thin >= 1");
  }
}

EventIndex::EventIndex(const BinnedCounts& counts, int max_lag)
    : totals_(counts.column_totals()),
      bins_(counts.bins()),
      communities_(counts.communities()) {
  if (max_lag < 1) throw std::invalid_argument("max lag must be >= 1");
  for (std::size_t t = 0; t < bins_; ++t) {
    for (std::size_t k = 0; k < communities_; ++k) {
      if (int c = counts.counts(t, k); c > 0) cells_.push_back({t, k, c});
      else if (c < 0) throw std::invalid_argument("negative event count");
    }
  }
  first_.resize(cells_.size());
  last_.resize(cells_.size());
  const auto lag = static_cast<std::size_t>(max_lag);
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const std::size_t t = cells_[i].bin;
    while (cells_[lo].bin + lag < t) ++lo;
    while (cells_[hi].bin < t) ++hi;
    first_[i] = lo;
    last_[i] = hi;
  }
}

ParentAttribution ParentAttribution::all_background(const EventIndex& index,
                                                    std::size_t lag_bins) {
  const std::size_t k = index.communities();
  ParentAttribution a;
  a.background.resize(index.cells().size());
  a.from_parents.assign(index.cells().size(), 0);
  a.background_by_community.assign(k, 0);
  a.edge_counts = Matrix<long>(k, k, 0);
  a.lag_counts.assign(k * k * lag_bins, 0);
  for (std::size_t i = 0; i < index.cells().size(); ++i) {
    const auto& c = index.cells()[i];
    a.background[i] = c.count;
    a.background_by_community[c.community] += c.count;
  }
  return a;
}

Matrix<int> ParentAttribution::background_matrix(const EventIndex& index) const {
  Matrix<int> m(index.bins(), index.communities(), 0);
  for (std::size_t i = 0; i < index.cells().size(); ++i) {
    const auto& c = index.cells()[i];
    m(c.bin, c.community) = background[i];
  }
  return m;
}

ParentAttribution sample_parents(const HawkesParams& params,
                                 const EventIndex& index, Rng& rng,
                                 const AssignmentObserver* observer) {
  const std::size_t k = params.communities();
  const std::size_t nb = params.grid.bins();
  if (index.communities() != k) {
    throw std::invalid_argument("event index and model disagree on K");
  }
  // W[s][t] * G[s][t][b] / width(b), flattened [s][t][b].
  std::vector<double> kernel(k * k * nb);
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      auto pmf = params.pmf(s, t);
      for (std::size_t b = 0; b < nb; ++b) {
        kernel[(s * k + t) * nb + b] =
            params.weights(s, t) * pmf[b] / params.grid.width(b);
      }
    }
  }

  ParentAttribution attr;
  const auto cells = index.cells();
  attr.background.assign(cells.size(), 0);
  attr.from_parents.assign(cells.size(), 0);
  attr.background_by_community.assign(k, 0);
  attr.edge_counts = Matrix<long>(k, k, 0);
  attr.lag_counts.assign(k * k * nb, 0);

  std::vector<double> cumulative;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& child = cells[i];
    const std::size_t first = index.window_first(i);
    const std::size_t last = index.window_last(i);
    cumulative.resize(last - first + 1);
    double total = params.lambda0[child.community];
    cumulative[0] = total;
    for (std::size_t p = first; p < last; ++p) {
      const auto& parent = cells[p];
      const int lag = static_cast<int>(child.bin - parent.bin);
      total += parent.count *
               kernel[(parent.community * k + child.community) * nb +
                      params.grid.bin_of(lag)];
      cumulative[p - first + 1] = total;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw ModelError("zero total rate at occupied bin " +
                       std::to_string(child.bin) + ", community " +
                       std::to_string(child.community));
    }
    for (int unit_event = 0; unit_event < child.count; ++unit_event) {
      const double u = unit(rng) * total;
      auto pos = static_cast<std::size_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), u) -
          cumulative.begin());
      // Guard against u landing exactly on the final edge.
      pos = std::min(pos, cumulative.size() - 1);
      // Zero-weight candidates share their predecessor's edge and are never
      // selected by upper_bound.
      if (pos == 0) {
        ++attr.background[i];
        ++attr.background_by_community[child.community];
        if (observer) (*observer)(i, std::nullopt);
      } else {
        const std::size_t p = first + pos - 1;
        const auto& parent = cells[p];
        const int lag = static_cast<int>(child.bin - parent.bin);
        ++attr.from_parents[i];
        ++attr.edge_counts(parent.community, child.community);
        ++attr.lag_counts[(parent.community * k + child.community) * nb +
                          params.grid.bin_of(lag)];
        if (observer) (*observer)(i, p);
      }
    }
  }
  return attr;
}

ParentAttribution sample_parents(const HawkesParams& params,
                                 const BinnedCounts& counts, Rng& rng) {
  EventIndex index(counts, params.grid.max_lag());
  return sample_parents(params, index, rng);
}

GammaPosterior lambda0_posterior(const Priors& priors, long background_events,
                                 std::size_t bins) {
  return {priors.lambda0_shape + static_cast<double>(background_events),
          priors.lambda0_rate + static_cast<double>(bins)};
}

GammaPosterior weight_posterior(const Priors& priors, long attributed_events,
                                long source_events) {
  return {priors.weight_shape + static_cast<double>(attributed_events),
          priors.weight_rate + static_cast<double>(source_events)};
}

namespace {

double draw_gamma(const GammaPosterior& g, Rng& rng) {
  return std::gamma_distribution<double>(g.shape, 1.0 / g.rate)(rng);
}

}  // namespace

std::vector<double> update_lambda0(const ParentAttribution& attr,
                                   std::size_t bins, const Priors& priors,
                                   Rng& rng) {
  std::vector<double> out(attr.background_by_community.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = draw_gamma(
        lambda0_posterior(priors, attr.background_by_community[k], bins), rng);
  }
  return out;
}

Matrix<double> update_W(const ParentAttribution& attr,
                        std::span<const long> source_totals,
                        const Priors& priors, Rng& rng) {
  const std::size_t k = attr.edge_counts.rows();
  if (source_totals.size() != k) {
    throw std::invalid_argument("source totals must have K entries");
  }
  Matrix<double> w(k, k);
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      w(s, t) = draw_gamma(
          weight_posterior(priors, attr.edge_counts(s, t), source_totals[s]),
          rng);
    }
  }
  return w;
}

std::vector<double> update_G(const ParentAttribution& attr,
                             std::size_t communities, std::size_t lag_bins,
                             const Priors& priors, Rng& rng) {
  if (attr.lag_counts.size() != communities * communities * lag_bins) {
    throw std::invalid_argument("lag counts must be K x K x B");
  }
  std::vector<double> out(attr.lag_counts.size());
  for (std::size_t pair = 0; pair < communities * communities; ++pair) {
    double sum = 0.0;
    for (std::size_t b = 0; b < lag_bins; ++b) {
      const double shape = priors.pmf_concentration +
                           static_cast<double>(attr.lag_counts[pair * lag_bins + b]);
      double g = std::gamma_distribution<double>(shape, 1.0)(rng);
      out[pair * lag_bins + b] = g;
      sum += g;
    }
    for (std::size_t b = 0; b < lag_bins; ++b) {
      // All draws can underflow for tiny concentrations; fall back to uniform.
      out[pair * lag_bins + b] = sum > 0.0 ? out[pair * lag_bins + b] / sum
                                           : 1.0 / static_cast<double>(lag_bins);
    }
  }
  return out;
}

namespace {

// Running mean and variance (Welford) over a flat vector of quantities.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(std::size_t n) : mean_(n, 0.0), m2_(n, 0.0) {}

  template <class Range>
  void add(const Range& values) {
    ++count_;
    std::size_t i = 0;
    for (auto v : values) {
      const double x = static_cast<double>(v);
      const double delta = x - mean_[i];
      mean_[i] += delta / count_;
      m2_[i] += delta * (x - mean_[i]);
      ++i;
    }
  }

  const std::vector<double>& mean() const { return mean_; }
  std::vector<double> sd() const {
    std::vector<double> out(mean_.size(), 0.0);
    if (count_ < 2) return out;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::sqrt(std::max(0.0, m2_[i] / (count_ - 1)));
    }
    return out;
  }

 private:
  std::vector<double> mean_, m2_;
  double count_ = 0.0;
};

Matrix<double> as_matrix(const std::vector<double>& v, std::size_t k) {
  Matrix<double> m(k, k);
  std::copy(v.begin(), v.end(), m.data().begin());
  return m;
}

void check_finite(const HawkesParams& p, int sweep) {
  auto bad = [](double v) { return !std::isfinite(v); };
  if (std::any_of(p.lambda0.begin(), p.lambda0.end(), bad) ||
      std::any_of(p.weights.data().begin(), p.weights.data().end(), bad) ||
      std::any_of(p.lag_pmf.begin(), p.lag_pmf.end(), bad)) {
    throw ModelError("non-finite parameter after Gibbs sweep " +
                     std::to_string(sweep));
  }
}

}  // namespace

PosteriorSummary fit(const BinnedCounts& counts, const LagKernelGrid& grid,
                     const Priors& priors, const GibbsSchedule& schedule,
                     std::uint64_t seed) {
  priors.validate();
  schedule.validate();
  if (counts.bins() == 0 || counts.communities() == 0) {
    throw std::invalid_argument("cannot fit an empty count matrix");
  }
  const std::size_t k = counts.communities();
  const std::size_t nb = grid.bins();
  const EventIndex index(counts, grid.max_lag());

  HawkesParams params(grid, std::vector<double>(k, priors.lambda0_shape / priors.lambda0_rate),
                      Matrix<double>(k, k, priors.weight_shape / priors.weight_rate));
  Rng rng(seed);

  MomentAccumulator lambda0_acc(k), weight_acc(k * k), pmf_acc(k * k * nb),
      edge_acc(k * k), background_acc(k);
  const long sweeps = schedule.burn_in + static_cast<long>(schedule.samples) * schedule.thin;
  for (long sweep = 0; sweep < sweeps; ++sweep) {
    const auto attr = sample_parents(params, index, rng);
    params.lambda0 = update_lambda0(attr, index.bins(), priors, rng);
    params.weights = update_W(attr, index.source_totals(), priors, rng);
    params.lag_pmf = update_G(attr, k, nb, priors, rng);
    check_finite(params, static_cast<int>(sweep));

    const long kept = sweep - schedule.burn_in + 1;
    if (kept > 0 && kept % schedule.thin == 0) {
      lambda0_acc.add(params.lambda0);
      weight_acc.add(params.weights.data());
      pmf_acc.add(params.lag_pmf);
      edge_acc.add(attr.edge_counts.data());
      background_acc.add(attr.background_by_community);
    }
  }

  PosteriorSummary out;
  out.mean_lambda0 = lambda0_acc.mean();
  out.sd_lambda0 = lambda0_acc.sd();
  out.mean_weights = as_matrix(weight_acc.mean(), k);
  out.sd_weights = as_matrix(weight_acc.sd(), k);
  out.mean_pmf = pmf_acc.mean();
  out.mean_edge_counts = as_matrix(edge_acc.mean(), k);
  out.mean_background = background_acc.mean();
  out.n_samples = schedule.samples;
  out.seed = seed;
  out.bins = index.bins();
  return out;
}

void write_posteriors(std::ostream& os, std::span<const PosteriorRow> rows,
                      std::span<const std::string> names) {
  const std::size_t k = names.size();
  std::vector<std::string> header{"url", "news_class", "n_samples"};
  for (auto& n : names) header.push_back("lambda0:" + n);
  for (const char* prefix : {"W:", "sd_W:"}) {
    for (auto& s : names) {
      for (auto& t : names) header.push_back(prefix + s + "->" + t);
    }
  }
  for (auto& n : names) header.push_back("sd_lambda0:" + n);
  for (auto& s : names) {
    for (auto& t : names) header.push_back("N:" + s + "->" + t);
  }
  header.push_back("bins");
  header.push_back("seed");
  write_csv_row(os, header);

  for (const auto& row : rows) {
    const auto& p = row.summary;
    if (p.mean_lambda0.size() != k) {
      throw std::invalid_argument("posterior row has wrong community count");
    }
    std::vector<std::string> f{row.url, std::string(to_string(row.news_class)),
                               std::to_string(p.n_samples)};
    for (double v : p.mean_lambda0) f.push_back(format_exact(v));
    for (double v : p.mean_weights.data()) f.push_back(format_exact(v));
    for (double v : p.sd_weights.data()) f.push_back(format_exact(v));
    for (double v : p.sd_lambda0) f.push_back(format_exact(v));
    for (double v : p.mean_edge_counts.data()) f.push_back(format_exact(v));
    f.push_back(std::to_string(p.bins));
    f.push_back(std::to_string(p.seed));
    write_csv_row(os, f);
  }
}

PosteriorTable read_posteriors(std::istream& is) {
  PosteriorTable table;
  std::string line;
  if (!std::getline(is, line)) throw DataError("posteriors file is empty");
  auto header = split_csv_line(line);
  for (auto& h : header) {
    if (h.starts_with("lambda0:")) table.community_names.push_back(h.substr(8));
  }
  const std::size_t k = table.community_names.size();
  const std::size_t expected = 3 + k + 2 * k * k + k + k * k + 2;
  if (k == 0 || header.size() != expected || header[0] != "url") {
    throw DataError("posteriors header has unexpected layout");
  }
  std::size_t lineno = 1;
  auto num = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw DataError("posteriors line " + std::to_string(lineno) +
                    ": bad number '" + s + "'");
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != expected) {
      throw DataError("posteriors line " + std::to_string(lineno) +
                      ": expected " + std::to_string(expected) + " fields");
    }
    PosteriorRow row;
    row.url = f[0];
    auto cls = parse_news_class(f[1]);
    if (!cls) throw DataError("posteriors line " + std::to_string(lineno) + ": bad news_class");
    row.news_class = *cls;
    auto& p = row.summary;
    p.n_samples = static_cast<int>(num(f[2]));
    std::size_t c = 3;
    for (std::size_t i = 0; i < k; ++i) p.mean_lambda0.push_back(num(f[c++]));
    p.mean_weights = Matrix<double>(k, k);
    for (auto& v : p.mean_weights.data()) v = num(f[c++]);
    p.sd_weights = Matrix<double>(k, k);
    for (auto& v : p.sd_weights.data()) v = num(f[c++]);
    for (std::size_t i = 0; i < k; ++i) p.sd_lambda0.push_back(num(f[c++]));
    p.mean_edge_counts = Matrix<double>(k, k);
    for (auto& v : p.mean_edge_counts.data()) v = num(f[c++]);
    p.bins = static_cast<std::size_t>(num(f[c++]));
    p.seed = std::stoull(f[c++]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace urlflow
