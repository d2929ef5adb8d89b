#include <catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "urlflow/error.hpp"
#include "urlflow/events.hpp"
#include "urlflow/util.hpp"

using namespace urlflow;

namespace {

CommunityRegistry registry() {
  return CommunityRegistry({"twitter", "reddit", "pol", "The_Donald"});
}

RawEvent ev(std::string url, std::size_t community, std::int64_t t,
            NewsClass cls = NewsClass::Mainstream) {
  return {std::move(url), "", CommunityId{community}, t, std::nullopt, cls};
}

UrlSeries series_with(std::string url, std::vector<std::vector<std::int64_t>> times) {
  UrlSeries s;
  s.url = std::move(url);
  s.times = std::move(times);
  bool first = true;
  for (const auto& v : s.times) {
    for (auto t : v) {
      s.t_first = first ? t : std::min(s.t_first, t);
      s.t_last = first ? t : std::max(s.t_last, t);
      first = false;
    }
  }
  return s;
}

}  // namespace

TEST_CASE("registry maps names to dense indices") {
  CommunityRegistry reg;
  CHECK(reg.add("twitter").index == 0);
  CHECK(reg.add("pol").index == 1);
  CHECK(reg.find("pol")->index == 1);
  CHECK_FALSE(reg.find("Pol"));
  CHECK_THROWS_AS(reg.add("pol"), std::invalid_argument);
  CHECK_THROWS_AS(reg.at("myspace"), ConfigError);
}

TEST_CASE("parse_events maps CSV fields directly") {
  auto reg = registry();
  std::istringstream in(
      "url,domain,community,timestamp,user,news_class\n"
      "u1,breitbart.com,twitter,1000,alice,alternative\n");
  auto r = parse_events(in, reg);
  REQUIRE(r.events.size() == 1);
  const auto& e = r.events[0];
  CHECK(e.url == "u1");
  CHECK(e.community == reg.at("twitter"));
  CHECK(e.timestamp == 1000);
  CHECK(e.user == std::optional<std::string>("alice"));
  CHECK(e.news_class == NewsClass::Alternative);
  CHECK(r.summary.rows == 1);
  CHECK(r.summary.accepted == 1);
}

TEST_CASE("parse_events on an empty stream returns nothing") {
  std::istringstream in("");
  auto r = parse_events(in, registry());
  CHECK(r.events.empty());
  CHECK(r.summary.rows == 0);
}

TEST_CASE("parse_events counts unknown communities and malformed rows") {
  std::istringstream in(
      "url,domain,community,timestamp,user,news_class\n"
      "u1,a.com,myspace,10,,mainstream\n"
      "u2,a.com,twitter,notanumber,,mainstream\n"
      "u3,a.com,twitter,-5,,mainstream\n"
      "u4,a.com,twitter,7,,neither\n"
      "u5,a.com,twitter,8,,mainstream\n");
  auto r = parse_events(in, registry());
  CHECK(r.events.size() == 1);
  CHECK(r.summary.rows == 5);
  CHECK(r.summary.unknown_community == 1);
  CHECK(r.summary.malformed == 3);
  CHECK(r.summary.errors.size() == 4);
  CHECK(r.summary.errors[0].line == 2);
}

TEST_CASE("parse_events reads NDJSON and treats an empty user as absent") {
  std::istringstream in(
      R"({"url":"https://Example.com/a#frag","domain":"example.com","community":"pol","timestamp":5,"user":"","news_class":"mainstream"})"
      "\n"
      R"({"url":"https://example.com/b","domain":"example.com","community":"reddit","timestamp":6,"user":"bob","news_class":"alternative"})"
      "\n");
  auto r = parse_events(in, registry());
  REQUIRE(r.events.size() == 2);
  CHECK(r.events[0].url == "https://example.com/a");
  CHECK_FALSE(r.events[0].user);
  CHECK(r.events[1].user == std::optional<std::string>("bob"));
}

TEST_CASE("parse_events rejects a domain that disagrees with the url host") {
  std::istringstream in(
      "url,domain,community,timestamp,user,news_class\n"
      "https://www.rt.com/x,breitbart.com,twitter,1,,alternative\n"
      "https://www.rt.com/y,rt.com,twitter,1,,alternative\n");
  auto r = parse_events(in, registry());
  CHECK(r.events.size() == 1);
  CHECK(r.summary.malformed == 1);
}

TEST_CASE("missing file reports its path") {
  try {
    parse_events_file("/nonexistent/events.csv", registry());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/events.csv") != std::string::npos);
  }
}

TEST_CASE("url normalization") {
  CHECK(normalize_url("HTTPS://WWW.Example.COM/Path?q=1#top") ==
        "https://www.example.com/Path?q=1");
  CHECK(registrable_domain("https://www.example.com:8080/x") == "example.com");
  CHECK(registrable_domain("u1") == "");
}

TEST_CASE("events round-trip through the store format") {
  auto reg = registry();
  std::vector<RawEvent> events = {
      {"https://a.com/1", "a.com", CommunityId{0}, 10, std::string("x,y"), NewsClass::Alternative},
      {"https://b.com/2", "b.com", CommunityId{3}, 20, std::nullopt, NewsClass::Mainstream},
  };
  std::ostringstream out;
  write_events_csv(out, events, reg);
  std::istringstream in(out.str());
  auto r = parse_events(in, reg);
  REQUIRE(r.events.size() == 2);
  CHECK(r.events[0].user == events[0].user);
  CHECK(r.events[1].community == events[1].community);
  CHECK(r.summary.malformed == 0);
}

TEST_CASE("group_by_url sets the time span") {
  std::vector<RawEvent> events = {ev("u1", 0, 5), ev("u1", 2, 3)};
  auto s = group_by_url(events, 4);
  REQUIRE(s.size() == 1);
  CHECK(s[0].t_first == 3);
  CHECK(s[0].t_last == 5);

  std::vector<RawEvent> one = {ev("u", 1, 42)};
  auto single = group_by_url(one, 4);
  CHECK(single[0].t_first == single[0].t_last);
}

TEST_CASE("group_by_url rejects conflicting classes naming the url") {
  std::vector<RawEvent> events = {ev("u9", 0, 1, NewsClass::Alternative),
                                  ev("u9", 1, 2, NewsClass::Mainstream)};
  try {
    group_by_url(events, 4);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("u9") != std::string::npos);
  }
}

TEST_CASE("group_by_url matches a sort-and-split oracle on random input") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> url(0, 2), comm(0, 3), ts(0, 1000);
  for (int round = 0; round < 20; ++round) {
    std::vector<RawEvent> events;
    for (int i = 0; i < 200; ++i) {
      events.push_back(ev("u" + std::to_string(url(rng)), comm(rng), ts(rng)));
    }
    std::map<std::string, std::vector<std::vector<std::int64_t>>> oracle;
    for (const auto& e : events) {
      auto& v = oracle[e.url];
      v.resize(4);
      v[e.community.index].push_back(e.timestamp);
    }
    for (auto& [u, v] : oracle) {
      for (auto& times : v) std::sort(times.begin(), times.end());
    }
    auto got = group_by_url(events, 4);
    REQUIRE(got.size() == oracle.size());
    std::size_t total = 0;
    for (const auto& s : got) {
      CHECK(s.times == oracle.at(s.url));
      total += s.total_events();
    }
    CHECK(total == events.size());
    CHECK(std::is_sorted(got.begin(), got.end(),
                         [](const auto& a, const auto& b) { return a.url < b.url; }));
    // flatten then regroup is the identity on series.
    auto flat = flatten(got);
    auto again = group_by_url(flat, 4);
    REQUIRE(again.size() == got.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(again[i].times == got[i].times);
  }
}

TEST_CASE("filter_cross_platform") {
  const std::set<CommunityId> tw_pol = {CommunityId{0}, CommunityId{2}};
  const std::set<CommunityId> subs = {CommunityId{1}, CommunityId{3}};
  auto only_tw = series_with("a", {{1}, {}, {}, {}});
  auto three = series_with("b", {{1}, {}, {2}, {3}});
  std::vector<UrlSeries> all = {only_tw, three};

  CHECK(filter_cross_platform(std::vector{only_tw}, tw_pol, {}).empty());
  auto kept = filter_cross_platform(all, tw_pol, subs);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].url == "b");
  CHECK(filter_cross_platform(all, {}, {}).size() == 2);
  CHECK_THROWS_AS(filter_cross_platform(all, tw_pol, tw_pol), std::invalid_argument);

  // Idempotent, and shrinking `required` never loses a kept series.
  auto twice = filter_cross_platform(kept, tw_pol, subs);
  CHECK(twice.size() == kept.size());
  CHECK(filter_cross_platform(all, {CommunityId{0}}, subs).size() >= kept.size());
}

TEST_CASE("drop_gap_overlapping") {
  GapSchedule gaps({{CommunityId{0}, 0, 1000}});
  std::vector<UrlSeries> overlapping;
  for (int d = 1; d <= 10; ++d) {
    overlapping.push_back(series_with("u" + std::to_string(d), {{100, 100 + d}}));
  }

  SECTION("ten overlapping, ten percent drops the shortest") {
    auto r = drop_gap_overlapping(overlapping, gaps, 0.10);
    REQUIRE(r.dropped.size() == 1);
    CHECK(r.dropped[0].duration() == 1);
    CHECK(r.kept.size() == 9);
  }
  SECTION("series clear of every gap are kept") {
    std::vector<UrlSeries> clear = {series_with("x", {{5000, 5001}}),
                                    series_with("y", {{2000, 9000}})};
    auto r = drop_gap_overlapping(clear, gaps, 0.5);
    CHECK(r.dropped.empty());
    CHECK(r.kept.size() == 2);
  }
  SECTION("fraction zero drops nothing") {
    CHECK(drop_gap_overlapping(overlapping, gaps, 0.0).dropped.empty());
  }
  SECTION("ceil rounding and url tie-break") {
    std::vector<UrlSeries> tied = {series_with("b", {{10, 20}}), series_with("a", {{10, 20}}),
                                   series_with("c", {{10, 50}})};
    auto r = drop_gap_overlapping(tied, gaps, 0.4);  // ceil(1.2) = 2
    REQUIRE(r.dropped.size() == 2);
    CHECK(r.dropped[0].url == "a");
    CHECK(r.dropped[1].url == "b");
  }
  SECTION("end of a gap is exclusive") {
    std::vector<UrlSeries> edge = {series_with("e", {{1000, 1010}})};
    CHECK(drop_gap_overlapping(edge, gaps, 1.0).dropped.empty());
  }
  CHECK_THROWS_AS(GapSchedule({{CommunityId{0}, 5, 5}}), ConfigError);
}

TEST_CASE("bin_series") {
  SECTION("floor division into bins") {
    auto b = bin_series(series_with("u", {{30, 90}}), 60, 1);
    CHECK(b.bins() == 2);
    CHECK(b.origin == 0);
    CHECK(b.counts(0, 0) == 1);
    CHECK(b.counts(1, 0) == 1);
  }
  SECTION("same bin") {
    auto b = bin_series(series_with("u", {{0, 59}}), 60, 1);
    CHECK(b.bins() == 1);
    CHECK(b.counts(0, 0) == 2);
  }
  SECTION("origin snaps down to the bin boundary") {
    auto b = bin_series(series_with("u", {{}, {130, 250}}), 60, 2);
    CHECK(b.origin == 120);
    CHECK(b.bins() == 3);
    CHECK(b.counts(2, 1) == 1);
  }
  SECTION("empty series is an error") {
    CHECK_THROWS(bin_series(series_with("u", {{}, {}}), 60, 2));
  }
  SECTION("column sums equal a brute-force recount") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> comm(0, 3);
    std::uniform_int_distribution<std::int64_t> ts(1'500'000'000, 1'500'100'000);
    std::vector<std::vector<std::int64_t>> times(4);
    for (int i = 0; i < 1000; ++i) times[comm(rng)].push_back(ts(rng));
    for (auto& v : times) std::sort(v.begin(), v.end());
    auto s = series_with("u", times);
    auto b = bin_series(s, 60, 4);
    auto cols = b.column_totals();
    for (std::size_t k = 0; k < 4; ++k) CHECK(cols[k] == static_cast<long>(times[k].size()));
    CHECK(b.total() == 1000);
    for (std::size_t k = 0; k < 4; ++k) {
      for (auto t : times[k]) {
        const auto row = static_cast<std::size_t>((t - b.origin) / 60);
        CHECK(row < b.bins());
      }
    }
  }
}

TEST_CASE("csv helpers") {
  auto f = split_csv_line(R"(a,"b,c","say ""hi""",)");
  REQUIRE(f.size() == 4);
  CHECK(f[1] == "b,c");
  CHECK(f[2] == "say \"hi\"");
  CHECK(f[3].empty());
  CHECK(csv_escape("x,y") == "\"x,y\"");
  CHECK(csv_escape("plain") == "plain");
}

TEST_CASE("url_seed depends only on run seed and url") {
  CHECK(url_seed(1, "a") == url_seed(1, "a"));
  CHECK(url_seed(1, "a") != url_seed(2, "a"));
  CHECK(url_seed(1, "a") != url_seed(1, "b"));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
