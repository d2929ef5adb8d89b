#pragma once

// Aggregation of per-URL posterior means into cross-community influence
// tables: mean weights per news class, the share of each community's events
// attributable to every source, and two-sample KS tests between classes.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urlflow/events.hpp"
#include "urlflow/gibbs.hpp"
#include "urlflow/matrix.hpp"

namespace urlflow {

// Per-URL posterior-mean weights, grouped by (class, source, target).
class WeightSampleSet {
 public:
  explicit WeightSampleSet(std::size_t communities);

  void add(NewsClass cls, const Matrix<double>& weights);

  std::span<const double> cell(NewsClass cls, std::size_t source,
                               std::size_t target) const;
  std::size_t url_count(NewsClass cls) const noexcept;
  std::size_t communities() const noexcept { return k_; }

 private:
  std::size_t k_;
  std::array<std::vector<std::vector<double>>, 2> samples_;
};

Matrix<double> mean_weight_matrix(const WeightSampleSet& set, NewsClass cls);

// What the percentage formula needs from one URL.
struct UrlInfluenceInput {
  Matrix<double> weights;          // posterior-mean W
  std::vector<long> event_totals;  // events per community over the series
};

// Pct[a][b] = 100 * sum_u W_u[a][b] * n_u[a] / sum_u n_u[b]; nullopt where
// community b has no events.
Matrix<std::optional<double>> influence_percentage(
    std::span<const UrlInfluenceInput> urls);

struct KsResult {
  double statistic = 0.0;  // D
  double p_value = 1.0;
};

// Survival function of the Kolmogorov distribution, Q(x) = P(K > x).
double kolmogorov_survival(double x);

// Two-sided two-sample KS test; p from the asymptotic distribution at
// sqrt(n_a n_b / (n_a + n_b)) * D.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// "**" for p < 0.01, "*" for p < 0.05, otherwise empty.
std::string_view significance_stars(double p);

// Cell renderings used by the report tables.
std::string format_weight(double w);                   // 4 decimals
std::string format_rate(double lambda0);               // 6 decimals
std::string format_percent(std::optional<double> pct);  // 2 decimals or "—"

struct InfluenceReport {
  struct ClassSection {
    NewsClass news_class = NewsClass::Mainstream;
    std::size_t urls = 0;
    std::vector<std::size_t> urls_per_community;  // URLs with >= 1 event there
    std::vector<long> events_per_community;
    std::vector<double> mean_lambda0;
    Matrix<double> mean_weights;
    Matrix<std::optional<double>> pct;
  };

  std::vector<std::string> community_names;
  std::vector<ClassSection> classes;  // only classes with fitted URLs
  // Present when both classes have URLs.
  std::optional<Matrix<double>> ks_statistic;
  std::optional<Matrix<double>> ks_p;
  std::vector<std::string> warnings;

  const ClassSection* section(NewsClass cls) const;
};

// Posterior rows and per-URL event totals must cover the same URL set;
// otherwise DataError lists the orphans.
InfluenceReport build_report(std::span<const PosteriorRow> posteriors,
                             const std::map<std::string, std::vector<long>>& event_totals,
                             std::span<const std::string> community_names);

// Writes influence_report.json, mean_w_<class>.csv, pct_<class>.csv,
// ks_p.csv, hawkes_table.csv, weights_comparison.csv and the long-format
// heatmap_mean_w.csv / heatmap_pct.csv.
void write_report(const InfluenceReport& report,
                  const std::filesystem::path& out_dir);

}  // namespace urlflow
