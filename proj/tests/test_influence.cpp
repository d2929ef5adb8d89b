#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "urlflow/error.hpp"
#include "urlflow/influence.hpp"
#include "urlflow/util.hpp"

using namespace urlflow;
using Catch::Approx;

namespace {

Matrix<double> mat(std::size_t k, std::vector<double> v) {
  Matrix<double> m(k, k);
  std::copy(v.begin(), v.end(), m.data().begin());
  return m;
}

PosteriorRow row(std::string url, NewsClass cls, Matrix<double> w, std::vector<double> l0) {
  PosteriorRow r;
  r.url = std::move(url);
  r.news_class = cls;
  const auto k = l0.size();
  r.summary.mean_lambda0 = std::move(l0);
  r.summary.sd_lambda0.assign(k, 0.0);
  r.summary.mean_weights = std::move(w);
  r.summary.sd_weights = Matrix<double>(k, k, 0.0);
  r.summary.mean_edge_counts = Matrix<double>(k, k, 0.0);
  r.summary.n_samples = 1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Brute-force sup |F_a - F_b| evaluated at every pooled point.
double ks_oracle(std::vector<double> a, std::vector<double> b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  double d = 0.0;
  for (double x : pooled) {
    const double fa = std::count_if(a.begin(), a.end(), [&](double v) { return v <= x; }) /
                      static_cast<double>(a.size());
    const double fb = std::count_if(b.begin(), b.end(), [&](double v) { return v <= x; }) /
                      static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

}  // namespace

TEST_CASE("mean_weight_matrix") {
  WeightSampleSet set(2);
  set.add(NewsClass::Alternative, mat(2, {0.1, 0, 0, 0}));
  set.add(NewsClass::Alternative, mat(2, {0.3, 0, 0, 0}));
  CHECK(mean_weight_matrix(set, NewsClass::Alternative)(0, 0) == Approx(0.2).epsilon(1e-15));

  WeightSampleSet single(2);
  auto w = mat(2, {0.1, 0.2, 0.3, 0.4});
  single.add(NewsClass::Mainstream, w);
  CHECK(mean_weight_matrix(single, NewsClass::Mainstream) == w);

  try {
    mean_weight_matrix(single, NewsClass::Alternative);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("0") != std::string::npos);
  }

  // Order of URLs does not matter.
  WeightSampleSet fwd(1), rev(1);
  const std::vector<double> vals = {0.125, 0.5, 0.25, 0.0625};
  for (double v : vals) fwd.add(NewsClass::Mainstream, mat(1, {v}));
  for (auto it = vals.rbegin(); it != vals.rend(); ++it) rev.add(NewsClass::Mainstream, mat(1, {*it}));
  CHECK(mean_weight_matrix(fwd, NewsClass::Mainstream) ==
        mean_weight_matrix(rev, NewsClass::Mainstream));
}

TEST_CASE("influence_percentage") {
  SECTION("one URL") {
    std::vector<UrlInfluenceInput> in = {{mat(2, {0, 0.1, 0, 0}), {50, 100}}};
    auto p = influence_percentage(in);
    CHECK(*p(0, 1) == Approx(5.0).epsilon(1e-15));
  }
  SECTION("zero weights give zero percent") {
    std::vector<UrlInfluenceInput> in = {{mat(2, {0, 0, 0, 0}), {5, 7}}};
    auto p = influence_percentage(in);
    for (const auto& v : p.data()) CHECK(*v == 0.0);
  }
  SECTION("a target with no events is undefined") {
    std::vector<UrlInfluenceInput> in = {{mat(2, {0.2, 0.3, 0.1, 0.4}), {5, 0}}};
    auto p = influence_percentage(in);
    CHECK(p(0, 0).has_value());
    CHECK_FALSE(p(0, 1).has_value());
    CHECK_FALSE(p(1, 1).has_value());
    CHECK(format_percent(p(0, 1)) == "—");
  }
}

TEST_CASE("ks_two_sample") {
  const std::vector<double> same = {0.3, 0.1, 0.2};
  auto r = ks_two_sample(same, same);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == Approx(1.0).margin(1e-12));

  const std::vector<double> a = {1, 2, 3, 4}, b = {5, 6, 7, 8};
  auto d = ks_two_sample(a, b);
  CHECK(d.statistic == 1.0);
  // scipy.special.kolmogorov(sqrt(2)) = 0.03663105270711935
  CHECK(d.p_value == Approx(0.03663105270711935).margin(1e-9));

  // scipy.special.kolmogorov(sqrt(12/7) * 0.5) = 0.784769805922802
  const std::vector<double> x = {0.1, 0.4, 0.7}, y = {0.2, 0.5, 0.8, 0.9};
  auto k = ks_two_sample(x, y);
  CHECK(k.statistic == Approx(0.5).margin(1e-6));
  CHECK(k.p_value == Approx(0.784769805922802).margin(1e-3));

  const std::vector<double> empty;
  CHECK_THROWS_AS(ks_two_sample(empty, x), std::invalid_argument);
}

TEST_CASE("ks_two_sample properties on random samples") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 25);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(size(rng)), b(size(rng));
    for (auto& v : a) v = std::round(n01(rng) * 4) / 4;  // ties on purpose
    for (auto& v : b) v = std::round((n01(rng) + 0.5) * 4) / 4;
    auto ab = ks_two_sample(a, b), ba = ks_two_sample(b, a);
    CHECK(ab.statistic == ba.statistic);
    CHECK(ab.p_value == ba.p_value);
    CHECK(ab.statistic == Approx(ks_oracle(a, b)).margin(1e-12));
    CHECK(ab.statistic >= 0.0);
    CHECK(ab.statistic <= 1.0);
    CHECK(ab.p_value >= 0.0);
    CHECK(ab.p_value <= 1.0);
  }
}

TEST_CASE("kolmogorov survival is monotone and matches reference points") {
  double prev = 1.0;
  for (double x = 0.05; x < 3.0; x += 0.01) {
    const double q = kolmogorov_survival(x);
    CHECK(q <= prev + 1e-12);
    prev = q;
  }
  // Values from scipy.special.kolmogorov, on both sides of the series switch.
  CHECK(kolmogorov_survival(0.5) == Approx(0.9639452436648751).margin(1e-9));
  CHECK(kolmogorov_survival(1.0) == Approx(0.26999967167735456).margin(1e-9));
  CHECK(kolmogorov_survival(1.36) == Approx(0.049485876755377876).margin(1e-9));
  CHECK(kolmogorov_survival(2.0) == Approx(0.0006709252557796953).margin(1e-12));
  CHECK(kolmogorov_survival(0.0) == 1.0);
}

TEST_CASE("significance stars") {
  CHECK(significance_stars(0.005) == "**");
  CHECK(significance_stars(0.003) == "**");
  CHECK(significance_stars(0.03) == "*");
  CHECK(significance_stars(0.01) == "*");
  CHECK(significance_stars(0.05) == "");
  CHECK(significance_stars(0.5) == "");
}

TEST_CASE("cell formatting") {
  CHECK(format_weight(0.10957) == "0.1096");
  CHECK(format_weight(0.1554) == "0.1554");
  CHECK(format_rate(0.00233) == "0.002330");
  CHECK(format_percent(12.345678) == "12.35");
}

TEST_CASE("build_report on a two-URL-per-class fixture") {
  const std::vector<std::string> names = {"twitter", "pol"};
  std::vector<PosteriorRow> rows = {
      row("a1", NewsClass::Alternative, mat(2, {0.2, 0.1, 0.0, 0.4}), {0.001, 0.003}),
      row("a2", NewsClass::Alternative, mat(2, {0.4, 0.3, 0.2, 0.0}), {0.003, 0.001}),
      row("m1", NewsClass::Mainstream, mat(2, {0.1, 0.0, 0.1, 0.1}), {0.002, 0.002}),
      row("m2", NewsClass::Mainstream, mat(2, {0.3, 0.2, 0.1, 0.3}), {0.004, 0.0}),
  };
  std::map<std::string, std::vector<long>> totals = {
      {"a1", {10, 0}}, {"a2", {30, 10}}, {"m1", {5, 5}}, {"m2", {15, 20}}};
  auto rep = build_report(rows, totals, names);
  REQUIRE(rep.classes.size() == 2);
  const auto* alt = rep.section(NewsClass::Alternative);
  REQUIRE(alt);
  CHECK(alt->urls == 2);
  CHECK(alt->urls_per_community == std::vector<std::size_t>{2, 1});
  CHECK(alt->events_per_community == std::vector<long>{40, 10});
  CHECK(alt->mean_lambda0[0] == Approx(0.002).epsilon(1e-15));
  CHECK(alt->mean_weights(0, 1) == Approx(0.2).epsilon(1e-15));
  // twitter -> pol, alternative: (0.1*10 + 0.3*30) / (0 + 10) * 100
  CHECK(*alt->pct(0, 1) == Approx(100.0).epsilon(1e-15));
  // pol -> twitter: (0*0 + 0.2*10) / 40 * 100
  CHECK(*alt->pct(1, 0) == Approx(5.0).epsilon(1e-15));
  REQUIRE(rep.ks_p);
  // Alternative {0.2, 0.4} vs mainstream {0.1, 0.3} for twitter -> twitter.
  CHECK((*rep.ks_statistic)(0, 0) == Approx(0.5));
  CHECK(rep.warnings.empty());
}

TEST_CASE("build_report errors and warnings") {
  const std::vector<std::string> names = {"twitter"};
  std::vector<PosteriorRow> rows = {row("u1", NewsClass::Mainstream, mat(1, {0.1}), {0.01})};
  CHECK_THROWS_AS(build_report(std::vector<PosteriorRow>{}, {}, names), DataError);

  try {
    build_report(rows, {{"u2", {3}}}, names);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("u1") != std::string::npos);
    CHECK(msg.find("u2") != std::string::npos);
  }

  auto rep = build_report(rows, {{"u1", {3}}}, names);
  CHECK(rep.classes.size() == 1);
  CHECK_FALSE(rep.section(NewsClass::Alternative));
  CHECK_FALSE(rep.ks_p);
  CHECK(rep.warnings.size() == 2);
}

TEST_CASE("report files render the table layouts") {
  // Per-class means constructed to land on 0.1096 / 0.1554 and 0.002330.
  const std::vector<std::string> names = {"twitter", "pol"};
  std::vector<PosteriorRow> rows = {
      row("a1", NewsClass::Alternative, mat(2, {0.1500, 0.01, 0.02, 0.03}), {0.00230, 0.001}),
      row("a2", NewsClass::Alternative, mat(2, {0.1608, 0.01, 0.02, 0.03}), {0.00236, 0.001}),
      row("m1", NewsClass::Mainstream, mat(2, {0.1000, 0.01, 0.02, 0.03}), {0.00233, 0.002}),
      row("m2", NewsClass::Mainstream, mat(2, {0.1192, 0.01, 0.02, 0.03}), {0.00233, 0.002}),
  };
  std::map<std::string, std::vector<long>> totals = {
      {"a1", {10, 2}}, {"a2", {30, 0}}, {"m1", {5, 5}}, {"m2", {15, 20}}};
  auto rep = build_report(rows, totals, names);
  const auto dir = std::filesystem::temp_directory_path() / "urlflow_report_test";
  std::filesystem::remove_all(dir);
  write_report(rep, dir);

  const auto mean_m = slurp(dir / "mean_w_mainstream.csv");
  const auto mean_a = slurp(dir / "mean_w_alternative.csv");
  CHECK(mean_m.find("twitter,0.1096,") != std::string::npos);
  CHECK(mean_a.find("twitter,0.1554,") != std::string::npos);
  const auto table = slurp(dir / "hawkes_table.csv");
  CHECK(table.find("Mean lambda0,alternative,0.002330,0.001000") != std::string::npos);
  CHECK(table.find("URLs,alternative,2,1") != std::string::npos);
  CHECK(table.find("Events,total,60,27") != std::string::npos);
  const auto cmp = slurp(dir / "weights_comparison.csv");
  CHECK(cmp.find("twitter,twitter,0.1554,0.1096,41.79,") != std::string::npos);

  auto doc = nlohmann::json::parse(slurp(dir / "influence_report.json"));
  CHECK(doc["classes"]["alternative"]["urls"] == 2);
  CHECK(doc["ks"]["p"].size() == 2);
  for (const char* f : {"pct_alternative.csv", "pct_mainstream.csv", "ks_p.csv",
                        "heatmap_mean_w.csv", "heatmap_pct.csv"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  std::istringstream heat(slurp(dir / "heatmap_pct.csv"));
  std::string line;
  std::getline(heat, line);
  CHECK(line == "source,target,class,value");
  int lines = 0;
  while (std::getline(heat, line)) ++lines;
  CHECK(lines == 8);
  std::filesystem::remove_all(dir);
}
