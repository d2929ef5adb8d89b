#pragma once

// Gibbs sampling for one URL's Hawkes parameters, using the latent parent of
// every event (the background or one earlier event) as auxiliary variable.
// Given the parents, lambda0 and W have Gamma posteriors and each lag pmf a
// Dirichlet posterior.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "urlflow/events.hpp"
#include "urlflow/hawkes.hpp"
#include "urlflow/matrix.hpp"

namespace urlflow {

using Rng = std::mt19937_64;

struct Priors {
  double lambda0_shape = 1.0;
  double lambda0_rate = 1.0;
  double weight_shape = 1.0;
  double weight_rate = 5.0;
  double pmf_concentration = 1.0;

  void validate() const;
};

struct GibbsSchedule {
  int burn_in = 200;
  int samples = 500;
  int thin = 1;

  void validate() const;
};

// Occupied cells of a count matrix, ordered by (bin, community), with the
// range of earlier cells that may parent each one.
class EventIndex {
 public:
  struct Cell {
    std::size_t bin = 0;
    std::size_t community = 0;
    int count = 0;
  };

  EventIndex(const BinnedCounts& counts, int max_lag);

  std::span<const Cell> cells() const noexcept { return cells_; }
  // Candidate parents of cell i are cells [first, last).
  std::size_t window_first(std::size_t i) const { return first_[i]; }
  std::size_t window_last(std::size_t i) const { return last_[i]; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t communities() const noexcept { return communities_; }
  std::span<const long> source_totals() const noexcept { return totals_; }

 private:
  std::vector<Cell> cells_;
  std::vector<std::size_t> first_, last_;
  std::vector<long> totals_;
  std::size_t bins_ = 0, communities_ = 0;
};

struct ParentAttribution {
  std::vector<int> background;           // per index cell
  std::vector<int> from_parents;         // per index cell
  std::vector<long> background_by_community;  // N0, length K
  Matrix<long> edge_counts;              // N[source][target]
  std::vector<long> lag_counts;          // K x K x B

  // All-background attribution for the given index.
  static ParentAttribution all_background(const EventIndex& index,
                                          std::size_t lag_bins);

  // Dense T x K view of the background counts.
  Matrix<int> background_matrix(const EventIndex& index) const;
};

// Called once per unit event: (child cell, parent cell or nullopt for the
// background).
using AssignmentObserver =
    std::function<void(std::size_t child, std::optional<std::size_t> parent)>;

ParentAttribution sample_parents(const HawkesParams& params,
                                 const EventIndex& index, Rng& rng,
                                 const AssignmentObserver* observer = nullptr);
ParentAttribution sample_parents(const HawkesParams& params,
                                 const BinnedCounts& counts, Rng& rng);

struct GammaPosterior {
  double shape = 1.0;
  double rate = 1.0;
  double mean() const noexcept { return shape / rate; }
  double variance() const noexcept { return shape / (rate * rate); }
};

GammaPosterior lambda0_posterior(const Priors& priors, long background_events,
                                 std::size_t bins);
GammaPosterior weight_posterior(const Priors& priors, long attributed_events,
                                long source_events);

std::vector<double> update_lambda0(const ParentAttribution& attr,
                                   std::size_t bins, const Priors& priors,
                                   Rng& rng);
Matrix<double> update_W(const ParentAttribution& attr,
                        std::span<const long> source_totals,
                        const Priors& priors, Rng& rng);
std::vector<double> update_G(const ParentAttribution& attr,
                             std::size_t communities, std::size_t lag_bins,
                             const Priors& priors, Rng& rng);

struct PosteriorSummary {
  std::vector<double> mean_lambda0, sd_lambda0;
  Matrix<double> mean_weights, sd_weights;
  std::vector<double> mean_pmf;           // K x K x B
  Matrix<double> mean_edge_counts;        // posterior mean of N[source][target]
  std::vector<double> mean_background;    // posterior mean of N0 per community
  int n_samples = 0;
  std::uint64_t seed = 0;
  std::size_t bins = 0;
};

PosteriorSummary fit(const BinnedCounts& counts, const LagKernelGrid& grid,
                     const Priors& priors, const GibbsSchedule& schedule,
                     std::uint64_t seed);

// One line of posteriors.csv.
struct PosteriorRow {
  std::string url;
  NewsClass news_class = NewsClass::Mainstream;
  PosteriorSummary summary;
};

// Column order: url, news_class, n_samples, lambda0:<c> (K), W:<s>-><t> (K*K
// row-major), sd_W:<s>-><t> (K*K), sd_lambda0:<c> (K), N:<s>-><t> (K*K),
// bins, seed. Values use 17 significant digits.
void write_posteriors(std::ostream& os, std::span<const PosteriorRow> rows,
                      std::span<const std::string> community_names);

struct PosteriorTable {
  std::vector<std::string> community_names;
  std::vector<PosteriorRow> rows;
};

PosteriorTable read_posteriors(std::istream& is);

}  // namespace urlflow
