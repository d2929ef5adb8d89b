#pragma once

// Synthetic event fixture for the timing analytics plus brute-force
// recounts computed straight from raw events.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "urlflow/events.hpp"
#include "urlflow/temporal.hpp"

namespace fixture {

using namespace urlflow;

// Communities: twitter, r_politics, r_news, pol, gab. Groups T, R, 4; gab is
// outside every group.
inline CommunityRegistry registry() {
  return CommunityRegistry({"twitter", "r_politics", "r_news", "pol", "gab"});
}

inline GroupMap groups(const CommunityRegistry& reg) {
  return GroupMap({{"T", {"twitter"}}, {"R", {"r_politics", "r_news"}}, {"4", {"pol"}}}, reg);
}

inline std::vector<RawEvent> events(std::uint64_t seed, int n_urls) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> domains = {"breitbart.com", "rt.com", "nytimes.com",
                                            "cnn.com", "infowars.com"};
  std::uniform_int_distribution<int> n_events(1, 12), comm(0, 4), dom(0, 4), user(0, 9);
  std::uniform_int_distribution<std::int64_t> start(1'470'000'000, 1'480'000'000);
  std::exponential_distribution<double> gap(1.0 / 20000.0);
  std::bernoulli_distribution coarse(0.2);
  std::vector<RawEvent> out;
  for (int u = 0; u < n_urls; ++u) {
    const int d = dom(rng);
    const auto cls = d < 2 || d == 4 ? NewsClass::Alternative : NewsClass::Mainstream;
    const std::string url = "https://" + domains[d] + "/story/" + std::to_string(u);
    std::int64_t t = start(rng);
    const int n = n_events(rng);
    for (int i = 0; i < n; ++i) {
      std::optional<std::string> who;
      if (user(rng) > 0) who = "user" + std::to_string(user(rng));
      out.push_back({url, domains[d], CommunityId{static_cast<std::size_t>(comm(rng))}, t,
                     who, cls});
      // Coarse steps produce same-second ties across groups.
      t += coarse(rng) ? 0 : static_cast<std::int64_t>(gap(rng));
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

struct Firsts {
  std::string domain;
  NewsClass cls = NewsClass::Mainstream;
  std::map<std::size_t, std::int64_t> first;  // group index -> first time
};

inline std::map<std::string, Firsts> firsts(const std::vector<RawEvent>& events,
                                            const GroupMap& g) {
  std::map<std::string, Firsts> out;
  for (const auto& e : events) {
    auto grp = g.group_of(e.community);
    if (!grp) continue;
    auto& f = out[e.url];
    f.domain = e.domain;
    f.cls = e.news_class;
    auto it = f.first.find(grp->index);
    if (it == f.first.end() || e.timestamp < it->second) f.first[grp->index] = e.timestamp;
  }
  return out;
}

// Groups ordered by first time, ties by group index.
inline std::vector<std::size_t> order(const Firsts& f) {
  std::vector<std::pair<std::int64_t, std::size_t>> v;
  for (auto [g, t] : f.first) v.push_back({t, g});
  std::sort(v.begin(), v.end());
  std::vector<std::size_t> out;
  for (auto [t, g] : v) out.push_back(g);
  return out;
}

inline std::string join(const std::vector<std::size_t>& idx, const GroupMap& g) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += "→";
    s += g.name(GroupId{idx[i]});
  }
  return s;
}

// label -> [alternative, mainstream]
inline std::map<std::string, std::array<long, 2>> first_hop_counts(
    const std::map<std::string, Firsts>& fs, const GroupMap& g) {
  std::map<std::string, std::array<long, 2>> out;
  for (const auto& [url, f] : fs) {
    auto o = order(f);
    std::string label = o.size() == 1 ? g.name(GroupId{o[0]}) + " only"
                                      : join({o[0], o[1]}, g);
    ++out[label][f.cls == NewsClass::Alternative ? 0 : 1];
  }
  return out;
}

inline std::map<std::string, std::array<long, 2>> full_counts(
    const std::map<std::string, Firsts>& fs, const GroupMap& g) {
  std::map<std::string, std::array<long, 2>> out;
  for (const auto& [url, f] : fs) {
    if (f.first.size() != g.size()) continue;
    ++out[join(order(f), g)][f.cls == NewsClass::Alternative ? 0 : 1];
  }
  return out;
}

// (from, to) -> unique URLs, for one class.
inline std::map<std::pair<std::string, std::string>, long> flow_counts(
    const std::map<std::string, Firsts>& fs, const GroupMap& g, NewsClass cls) {
  std::map<std::pair<std::string, std::string>, long> out;
  for (const auto& [url, f] : fs) {
    if (f.cls != cls) continue;
    auto o = order(f);
    ++out[{f.domain, g.name(GroupId{o[0]})}];
    if (o.size() > 1) ++out[{g.name(GroupId{o[0]}), g.name(GroupId{o[1]})}];
  }
  return out;
}

}  // namespace fixture
