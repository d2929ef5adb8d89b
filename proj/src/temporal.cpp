#include "urlflow/temporal.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

#include "urlflow/error.hpp"
#include "urlflow/util.hpp"

namespace urlflow {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;
constexpr std::string_view kArrow = "→";

std::size_t slot(NewsClass c) { return c == NewsClass::Alternative ? 0 : 1; }

// Sorted timestamps of a series restricted to one group.
std::vector<std::int64_t> group_times(const UrlSeries& s, const GroupMap& groups,
                                      GroupId group) {
  std::vector<std::int64_t> out;
  for (std::size_t c = 0; c < s.times.size(); ++c) {
    if (groups.group_of(CommunityId{c}) == group) {
      out.insert(out.end(), s.times[c].begin(), s.times[c].end());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

GroupMap::GroupMap(std::vector<Group> groups, const CommunityRegistry& registry)
    : groups_(std::move(groups)), by_community_(registry.size()) {
  std::set<std::string> names;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].name.empty() || !names.insert(groups_[g].name).second) {
      throw ConfigError("group names must be unique and non-empty");
    }
    for (const auto& c : groups_[g].communities) {
      auto id = registry.at(c);
      if (by_community_[id.index]) {
        throw ConfigError("community '" + c + "' belongs to two groups");
      }
      by_community_[id.index] = GroupId{g};
    }
  }
}

GroupId GroupMap::at(std::string_view name) const {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].name == name) return GroupId{g};
  }
  throw ConfigError("unknown group '" + std::string(name) + "'");
}

std::optional<GroupId> GroupMap::group_of(CommunityId c) const {
  if (c.index >= by_community_.size()) return std::nullopt;
  return by_community_[c.index];
}

std::optional<std::int64_t> SequenceRecord::first_in(GroupId g) const {
  for (const auto& [group, t] : firsts) {
    if (group == g) return t;
  }
  return std::nullopt;
}

std::vector<SequenceRecord> build_sequences(std::span<const UrlSeries> series,
                                            const GroupMap& groups) {
  std::vector<SequenceRecord> out;
  for (const auto& s : series) {
    std::vector<std::optional<std::int64_t>> first(groups.size());
    for (std::size_t c = 0; c < s.times.size(); ++c) {
      auto g = groups.group_of(CommunityId{c});
      if (!g || s.times[c].empty()) continue;
      auto t = s.times[c].front();
      auto& f = first[g->index];
      if (!f || t < *f) f = t;
    }
    SequenceRecord rec{s.url, s.domain, s.news_class, {}};
    for (std::size_t g = 0; g < first.size(); ++g) {
      if (first[g]) rec.firsts.emplace_back(GroupId{g}, *first[g]);
    }
    if (rec.firsts.empty()) continue;
    // Stable sort on time keeps group order for ties.
    std::stable_sort(rec.firsts.begin(), rec.firsts.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<DailyRatio> normalized_daily_occurrence(
    std::span<const RawEvent> events, const GroupMap& groups, GroupId group,
    NewsClass cls, std::optional<std::pair<std::int64_t, std::int64_t>> day_span) {
  std::map<std::int64_t, long> per_day;
  for (const auto& ev : events) {
    if (ev.news_class != cls || groups.group_of(ev.community) != group) continue;
    ++per_day[ev.timestamp / kSecondsPerDay];
  }
  if (per_day.empty()) {
    throw DataError("no " + std::string(to_string(cls)) + " events in group '" +
                    groups.name(group) + "'");
  }
  auto [first, last] = day_span.value_or(
      std::pair{per_day.begin()->first, per_day.rbegin()->first});
  if (last < first) throw std::invalid_argument("day span is reversed");

  std::vector<DailyRatio> out;
  long total = 0;
  for (auto day = first; day <= last; ++day) {
    auto it = per_day.find(day);
    long n = it == per_day.end() ? 0 : it->second;
    out.push_back({day, n, 0.0});
    total += n;
  }
  if (total == 0) throw DataError("no events inside the requested day span");
  const double mean = static_cast<double>(total) / static_cast<double>(out.size());
  for (auto& d : out) d.ratio = static_cast<double>(d.count) / mean;
  return out;
}

UserFractionResult user_alternative_fraction(std::span<const RawEvent> events) {
  std::map<std::string, std::pair<long, long>> counts;
  UserFractionResult out;
  for (const auto& ev : events) {
    if (!ev.user || ev.user->empty()) {
      ++out.skipped_without_user;
      continue;
    }
    auto& [alt, total] = counts[*ev.user];
    if (ev.news_class == NewsClass::Alternative) ++alt;
    ++total;
  }
  for (const auto& [user, c] : counts) {
    out.users.push_back({user, c.first, c.second,
                         static_cast<double>(c.first) / static_cast<double>(c.second)});
  }
  return out;
}

std::vector<UrlLags> repost_lags(std::span<const UrlSeries> series,
                                 const GroupMap& groups, GroupId group) {
  std::vector<UrlLags> out;
  for (const auto& s : series) {
    auto times = group_times(s, groups, group);
    if (times.size() < 2) continue;
    UrlLags lags{s.url, s.news_class, {}};
    for (std::size_t i = 1; i < times.size(); ++i) {
      lags.deltas.push_back(times[i] - times[0]);
    }
    out.push_back(std::move(lags));
  }
  return out;
}

std::vector<UrlValue> mean_interarrival(std::span<const UrlSeries> series,
                                        const GroupMap& groups, GroupId group) {
  std::vector<UrlValue> out;
  for (const auto& s : series) {
    auto times = group_times(s, groups, group);
    if (times.size() < 2) continue;
    out.push_back({s.url, s.news_class,
                   static_cast<double>(times.back() - times.front()) /
                       static_cast<double>(times.size() - 1)});
  }
  return out;
}

std::vector<UrlDelta> first_occurrence_delta(std::span<const SequenceRecord> records,
                                             GroupId a, GroupId b) {
  std::vector<UrlDelta> out;
  for (const auto& r : records) {
    auto ta = r.first_in(a), tb = r.first_in(b);
    if (ta && tb) out.push_back({r.url, r.news_class, *tb - *ta});
  }
  return out;
}

FasterCounts count_faster(std::span<const UrlDelta> deltas, NewsClass cls) {
  FasterCounts c;
  for (const auto& d : deltas) {
    if (d.news_class != cls) continue;
    if (d.delta > 0) ++c.first_faster;
    else if (d.delta < 0) ++c.second_faster;
    else ++c.simultaneous;
  }
  return c;
}

long SequenceTable::count(std::string_view label, NewsClass cls) const {
  for (const auto& r : rows) {
    if (r.label == label) return r.counts[slot(cls)];
  }
  return 0;
}

double SequenceTable::percent(const Row& row, NewsClass cls) const {
  const long total = totals[slot(cls)];
  return total > 0 ? 100.0 * static_cast<double>(row.counts[slot(cls)]) /
                         static_cast<double>(total)
                   : 0.0;
}

SequenceTable classify_sequences(std::span<const SequenceRecord> records,
                                 const GroupMap& groups, SequenceDepth depth) {
  SequenceTable table;
  std::map<std::string, std::size_t> row_of;
  auto add_row = [&](std::string label) {
    row_of[label] = table.rows.size();
    table.rows.push_back({std::move(label), {}});
  };
  const std::size_t n = groups.size();
  if (depth == SequenceDepth::FirstHop) {
    for (std::size_t g = 0; g < n; ++g) {
      add_row(groups.name(GroupId{g}) + " only");
      for (std::size_t h = 0; h < n; ++h) {
        if (h != g) {
          add_row(groups.name(GroupId{g}) + std::string(kArrow) +
                  groups.name(GroupId{h}));
        }
      }
    }
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    do {
      std::string label;
      for (std::size_t i = 0; i < n; ++i) {
        if (i) label += kArrow;
        label += groups.name(GroupId{order[i]});
      }
      add_row(std::move(label));
    } while (std::next_permutation(order.begin(), order.end()));
  }

  for (const auto& r : records) {
    std::string label;
    if (depth == SequenceDepth::FirstHop) {
      label = groups.name(r.firsts[0].first);
      label += r.firsts.size() == 1
                   ? std::string(" only")
                   : std::string(kArrow) + groups.name(r.firsts[1].first);
    } else {
      if (r.firsts.size() != n) continue;
      for (std::size_t i = 0; i < n; ++i) {
        if (i) label += kArrow;
        label += groups.name(r.firsts[i].first);
      }
    }
    ++table.rows[row_of.at(label)].counts[slot(r.news_class)];
    ++table.totals[slot(r.news_class)];
  }
  return table;
}

long FlowGraph::weight(std::string_view from, std::string_view to) const {
  for (const auto& e : edges) {
    if (e.from == from && e.to == to) return e.weight;
  }
  return 0;
}

FlowGraph build_flow_graph(std::span<const SequenceRecord> records,
                           const GroupMap& groups, std::optional<NewsClass> cls) {
  // (from_domain, from, to) -> unique URLs
  std::map<std::tuple<bool, std::string, std::string>, long> weights;
  std::set<std::string> domains;
  for (const auto& r : records) {
    if (cls && r.news_class != *cls) continue;
    const auto& first = groups.name(r.firsts[0].first);
    if (!r.domain.empty()) {
      domains.insert(r.domain);
      ++weights[{true, r.domain, first}];
    }
    if (r.firsts.size() >= 2) {
      ++weights[{false, first, groups.name(r.firsts[1].first)}];
    }
  }
  FlowGraph g;
  g.domains.assign(domains.begin(), domains.end());
  for (const auto& grp : groups.groups()) g.groups.push_back(grp.name);
  for (const auto& [key, w] : weights) {
    const auto& [from_domain, from, to] = key;
    g.edges.push_back({from, to, w, from_domain});
  }
  return g;
}

void write_dot(std::ostream& os, const FlowGraph& graph, std::string_view name) {
  long max_weight = 1;
  for (const auto& e : graph.edges) max_weight = std::max(max_weight, e.weight);
  auto domain_id = [](const std::string& d) { return dot_quote("domain:" + d); };
  auto group_id = [](const std::string& g) { return dot_quote("group:" + g); };

  os << "digraph " << dot_quote(name) << " {\n";
  os << "  rankdir=LR;\n";
  for (const auto& g : graph.groups) {
    os << "  " << group_id(g) << " [label=" << dot_quote(g) << ", shape=box];\n";
  }
  for (const auto& d : graph.domains) {
    os << "  " << domain_id(d) << " [label=" << dot_quote(d) << ", shape=ellipse];\n";
  }
  for (const auto& e : graph.edges) {
    const double pen = 8.0 * static_cast<double>(e.weight) / static_cast<double>(max_weight);
    os << "  " << (e.from_domain ? domain_id(e.from) : group_id(e.from)) << " -> "
       << group_id(e.to) << " [weight=" << e.weight
       << ", penwidth=" << format_fixed(pen, 3)
       << ", label=" << dot_quote(std::to_string(e.weight)) << "];\n";
  }
  os << "}\n";
}

void write_cdf(std::ostream& os, std::vector<double> values) {
  os << "value,cdf\n";
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    os << format_exact(values[i]) << ',' << format_exact(static_cast<double>(i + 1) / n)
       << '\n';
  }
}

}  // namespace urlflow
