#include "urlflow/influence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "urlflow/error.hpp"
#include "urlflow/util.hpp"

namespace urlflow {

namespace {

std::size_t class_slot(NewsClass c) {
  return c == NewsClass::Alternative ? 0 : 1;
}

}  // namespace

WeightSampleSet::WeightSampleSet(std::size_t communities) : k_(communities) {
  for (auto& s : samples_) s.resize(k_ * k_);
}

void WeightSampleSet::add(NewsClass cls, const Matrix<double>& weights) {
  if (weights.rows() != k_ || weights.cols() != k_) {
    throw std::invalid_argument("weight matrix must be K x K");
  }
  auto& cells = samples_[class_slot(cls)];
  for (std::size_t i = 0; i < k_ * k_; ++i) cells[i].push_back(weights.data()[i]);
}

std::span<const double> WeightSampleSet::cell(NewsClass cls, std::size_t source,
                                              std::size_t target) const {
  return samples_[class_slot(cls)].at(source * k_ + target);
}

std::size_t WeightSampleSet::url_count(NewsClass cls) const noexcept {
  const auto& cells = samples_[class_slot(cls)];
  return cells.empty() ? 0 : cells.front().size();
}

Matrix<double> mean_weight_matrix(const WeightSampleSet& set, NewsClass cls) {
  const std::size_t k = set.communities();
  Matrix<double> out(k, k);
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      auto values = set.cell(cls, s, t);
      if (values.empty()) {
        throw DataError("no " + std::string(to_string(cls)) +
                        " weights for pair " + std::to_string(s) + "->" +
                        std::to_string(t));
      }
      double sum = 0.0;
      for (double v : values) sum += v;
      out(s, t) = sum / static_cast<double>(values.size());
    }
  }
  return out;
}

Matrix<std::optional<double>> influence_percentage(
    std::span<const UrlInfluenceInput> urls) {
  if (urls.empty()) return {};
  const std::size_t k = urls.front().weights.rows();
  std::vector<double> numer(k * k, 0.0), denom(k, 0.0);
  for (const auto& u : urls) {
    if (u.weights.rows() != k || u.weights.cols() != k ||
        u.event_totals.size() != k) {
      throw std::invalid_argument("inconsistent community count across URLs");
    }
    for (std::size_t a = 0; a < k; ++a) {
      denom[a] += static_cast<double>(u.event_totals[a]);
      for (std::size_t b = 0; b < k; ++b) {
        numer[a * k + b] += u.weights(a, b) * static_cast<double>(u.event_totals[a]);
      }
    }
  }
  Matrix<std::optional<double>> pct(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (denom[b] > 0.0) pct(a, b) = 100.0 * numer[a * k + b] / denom[b];
    }
  }
  return pct;
}

double kolmogorov_survival(double x) {
  if (!(x > 0.0)) return 1.0;
  constexpr double kTermFloor = 1e-10;
  double p;
  if (x < 1.18) {
    // Theta-function form of the CDF converges fast for small x.
    const double pi2_8x2 = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double cdf = 0.0;
    for (int j = 1; j < 1000; ++j) {
      const double odd = 2.0 * j - 1.0;
      const double term = std::exp(-odd * odd * pi2_8x2);
      cdf += term;
      if (term < kTermFloor) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
    p = 1.0 - cdf;
  } else {
    p = 0.0;
    double sign = 1.0;
    for (int j = 1; j < 1000; ++j) {
      const double term = std::exp(-2.0 * j * j * x * x);
      p += sign * term;
      sign = -sign;
      if (term < kTermFloor) break;
    }
    p *= 2.0;
  }
  return std::clamp(p, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("KS test needs two non-empty samples");
  }
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double effective = na * nb / (na + nb);
  return {d, kolmogorov_survival(std::sqrt(effective) * d)};
}

std::string_view significance_stars(double p) {
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::string format_weight(double w) { return format_fixed(w, 4); }
std::string format_rate(double lambda0) { return format_fixed(lambda0, 6); }
std::string format_percent(std::optional<double> pct) {
  return pct ? format_fixed(*pct, 2) : "—";
}

const InfluenceReport::ClassSection* InfluenceReport::section(NewsClass cls) const {
  for (const auto& s : classes) {
    if (s.news_class == cls) return &s;
  }
  return nullptr;
}

InfluenceReport build_report(std::span<const PosteriorRow> posteriors,
                             const std::map<std::string, std::vector<long>>& event_totals,
                             std::span<const std::string> community_names) {
  if (posteriors.empty()) throw DataError("no fitted URLs to report on");
  const std::size_t k = community_names.size();

  std::set<std::string> posterior_urls;
  std::vector<std::string> orphans;
  for (const auto& row : posteriors) {
    posterior_urls.insert(row.url);
    if (!event_totals.count(row.url)) orphans.push_back(row.url + " (no events)");
  }
  for (const auto& [url, totals] : event_totals) {
    if (!posterior_urls.count(url)) orphans.push_back(url + " (no posterior)");
  }
  if (!orphans.empty()) {
    std::string msg = "posterior and event URL sets differ:";
    for (std::size_t i = 0; i < orphans.size() && i < 20; ++i) msg += " " + orphans[i];
    if (orphans.size() > 20) msg += " ... (" + std::to_string(orphans.size()) + " total)";
    throw DataError(msg);
  }

  InfluenceReport report;
  report.community_names.assign(community_names.begin(), community_names.end());
  WeightSampleSet samples(k);
  for (NewsClass cls : kNewsClasses) {
    std::vector<UrlInfluenceInput> inputs;
    InfluenceReport::ClassSection sec;
    sec.news_class = cls;
    sec.urls_per_community.assign(k, 0);
    sec.events_per_community.assign(k, 0);
    sec.mean_lambda0.assign(k, 0.0);
    for (const auto& row : posteriors) {
      if (row.news_class != cls) continue;
      const auto& totals = event_totals.at(row.url);
      if (totals.size() != k || row.summary.mean_lambda0.size() != k) {
        throw DataError("url '" + row.url + "' has the wrong community count");
      }
      samples.add(cls, row.summary.mean_weights);
      inputs.push_back({row.summary.mean_weights, totals});
      ++sec.urls;
      for (std::size_t c = 0; c < k; ++c) {
        if (totals[c] > 0) ++sec.urls_per_community[c];
        sec.events_per_community[c] += totals[c];
        sec.mean_lambda0[c] += row.summary.mean_lambda0[c];
      }
    }
    if (sec.urls == 0) {
      report.warnings.push_back("no " + std::string(to_string(cls)) +
                                " URLs; section omitted");
      continue;
    }
    for (auto& v : sec.mean_lambda0) v /= static_cast<double>(sec.urls);
    sec.mean_weights = mean_weight_matrix(samples, cls);
    sec.pct = influence_percentage(inputs);
    report.classes.push_back(std::move(sec));
  }

  if (report.classes.size() == 2) {
    Matrix<double> d(k, k), p(k, k);
    for (std::size_t s = 0; s < k; ++s) {
      for (std::size_t t = 0; t < k; ++t) {
        auto r = ks_two_sample(samples.cell(NewsClass::Alternative, s, t),
                               samples.cell(NewsClass::Mainstream, s, t));
        d(s, t) = r.statistic;
        p(s, t) = r.p_value;
      }
    }
    report.ks_statistic = std::move(d);
    report.ks_p = std::move(p);
  } else {
    report.warnings.push_back("KS tests need both news classes; skipped");
  }
  return report;
}

namespace {

template <class Cell>
void write_matrix_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& names,
                      const Matrix<Cell>& m, auto&& render) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  std::vector<std::string> header{"source"};
  header.insert(header.end(), names.begin(), names.end());
  write_csv_row(os, header);
  for (std::size_t s = 0; s < m.rows(); ++s) {
    std::vector<std::string> row{names[s]};
    for (std::size_t t = 0; t < m.cols(); ++t) row.push_back(render(m(s, t)));
    write_csv_row(os, row);
  }
}

}  // namespace

void write_report(const InfluenceReport& report,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto& names = report.community_names;
  const std::size_t k = names.size();
  using nlohmann::ordered_json;

  ordered_json doc;
  doc["communities"] = names;
  doc["weight_point_estimate"] = "per-URL posterior mean";
  doc["ks_p_value"] = "asymptotic Kolmogorov distribution";
  ordered_json classes = ordered_json::object();
  for (const auto& sec : report.classes) {
    const std::string cls(to_string(sec.news_class));
    ordered_json j;
    j["urls"] = sec.urls;
    j["urls_per_community"] = sec.urls_per_community;
    j["events_per_community"] = sec.events_per_community;
    j["mean_lambda0"] = sec.mean_lambda0;
    ordered_json w = ordered_json::array(), pct = ordered_json::array();
    for (std::size_t s = 0; s < k; ++s) {
      ordered_json wrow = ordered_json::array(), prow = ordered_json::array();
      for (std::size_t t = 0; t < k; ++t) {
        wrow.push_back(sec.mean_weights(s, t));
        if (sec.pct(s, t)) prow.push_back(*sec.pct(s, t));
        else prow.push_back(nullptr);
      }
      w.push_back(wrow);
      pct.push_back(prow);
    }
    j["mean_w"] = w;
    j["pct"] = pct;
    classes[cls] = j;

    write_matrix_csv(out_dir / ("mean_w_" + cls + ".csv"), names, sec.mean_weights,
                     [](double v) { return format_weight(v); });
    write_matrix_csv(out_dir / ("pct_" + cls + ".csv"), names, sec.pct,
                     [](const std::optional<double>& v) { return format_percent(v); });
  }
  doc["classes"] = classes;
  if (report.ks_p) {
    ordered_json ks;
    ordered_json dm = ordered_json::array(), pm = ordered_json::array(),
                 sm = ordered_json::array();
    for (std::size_t s = 0; s < k; ++s) {
      ordered_json dr = ordered_json::array(), pr = ordered_json::array(),
                   sr = ordered_json::array();
      for (std::size_t t = 0; t < k; ++t) {
        dr.push_back((*report.ks_statistic)(s, t));
        pr.push_back((*report.ks_p)(s, t));
        sr.push_back(std::string(significance_stars((*report.ks_p)(s, t))));
      }
      dm.push_back(dr);
      pm.push_back(pr);
      sm.push_back(sr);
    }
    ks["statistic"] = dm;
    ks["p"] = pm;
    ks["stars"] = sm;
    doc["ks"] = ks;
    write_matrix_csv(out_dir / "ks_p.csv", names, *report.ks_p,
                     [](double v) { return format_exact(v); });
  }
  doc["warnings"] = report.warnings;
  {
    std::ofstream os(out_dir / "influence_report.json");
    os << doc.dump(2) << '\n';
  }

  // Table layout: counts and mean background rate per community and class.
  {
    std::ofstream os(out_dir / "hawkes_table.csv");
    std::vector<std::string> header{"metric", "class"};
    header.insert(header.end(), names.begin(), names.end());
    write_csv_row(os, header);
    auto emit = [&](const std::string& metric, const std::string& cls,
                    auto&& value) {
      std::vector<std::string> row{metric, cls};
      for (std::size_t c = 0; c < k; ++c) row.push_back(value(c));
      write_csv_row(os, row);
    };
    for (const char* metric : {"URLs", "Events"}) {
      const bool urls = std::string_view(metric) == "URLs";
      for (const auto& sec : report.classes) {
        emit(metric, std::string(to_string(sec.news_class)), [&](std::size_t c) {
          return std::to_string(urls ? static_cast<long>(sec.urls_per_community[c])
                                     : sec.events_per_community[c]);
        });
      }
      emit(metric, "total", [&](std::size_t c) {
        long sum = 0;
        for (const auto& sec : report.classes) {
          sum += urls ? static_cast<long>(sec.urls_per_community[c])
                      : sec.events_per_community[c];
        }
        return std::to_string(sum);
      });
    }
    for (const auto& sec : report.classes) {
      emit("Mean lambda0", std::string(to_string(sec.news_class)),
           [&](std::size_t c) { return format_rate(sec.mean_lambda0[c]); });
    }
  }

  // Weight comparison between classes, one row per ordered pair.
  const auto* alt = report.section(NewsClass::Alternative);
  const auto* mainstream = report.section(NewsClass::Mainstream);
  {
    std::ofstream os(out_dir / "weights_comparison.csv");
    os << "source,target,alternative,mainstream,change_pct,ks_d,ks_p,stars\n";
    for (std::size_t s = 0; s < k; ++s) {
      for (std::size_t t = 0; t < k; ++t) {
        std::vector<std::string> row{names[s], names[t]};
        row.push_back(alt ? format_weight(alt->mean_weights(s, t)) : "");
        row.push_back(mainstream ? format_weight(mainstream->mean_weights(s, t)) : "");
        if (alt && mainstream && mainstream->mean_weights(s, t) > 0.0) {
          const double m = mainstream->mean_weights(s, t);
          row.push_back(format_fixed(100.0 * (alt->mean_weights(s, t) - m) / m, 2));
        } else {
          row.push_back("");
        }
        if (report.ks_p) {
          row.push_back(format_exact((*report.ks_statistic)(s, t)));
          row.push_back(format_exact((*report.ks_p)(s, t)));
          row.push_back(std::string(significance_stars((*report.ks_p)(s, t))));
        } else {
          row.insert(row.end(), {"", "", ""});
        }
        write_csv_row(os, row);
      }
    }
  }

  // Long format for external heatmaps.
  std::ofstream heat_w(out_dir / "heatmap_mean_w.csv");
  std::ofstream heat_p(out_dir / "heatmap_pct.csv");
  heat_w << "source,target,class,value\n";
  heat_p << "source,target,class,value\n";
  for (const auto& sec : report.classes) {
    const std::string cls(to_string(sec.news_class));
    for (std::size_t s = 0; s < k; ++s) {
      for (std::size_t t = 0; t < k; ++t) {
        std::vector<std::string> rw{names[s], names[t], cls,
                                    format_exact(sec.mean_weights(s, t))};
        write_csv_row(heat_w, rw);
        std::vector<std::string> rp{names[s], names[t], cls,
                                    sec.pct(s, t) ? format_exact(*sec.pct(s, t)) : ""};
        write_csv_row(heat_p, rp);
      }
    }
  }
}

}  // namespace urlflow
