#pragma once

// Descriptive cross-community timing analytics over raw events: daily
// occurrence, per-user alternative share, repost lags, inter-arrival means,
// first-appearance orderings and domain flow graphs.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "urlflow/events.hpp"

namespace urlflow {

struct GroupId {
  std::size_t index = 0;
  auto operator<=>(const GroupId&) const = default;
};

// Analysis groups over communities. Group order doubles as tie-break
// precedence when two groups see a URL first in the same second.
class GroupMap {
 public:
  struct Group {
    std::string name;  // short label, e.g. "T", "R", "4"
    std::vector<std::string> communities;
  };

  GroupMap(std::vector<Group> groups, const CommunityRegistry& registry);

  std::size_t size() const noexcept { return groups_.size(); }
  const std::string& name(GroupId g) const { return groups_.at(g.index).name; }
  GroupId at(std::string_view name) const;  // throws ConfigError
  std::optional<GroupId> group_of(CommunityId c) const;
  const std::vector<Group>& groups() const noexcept { return groups_; }

 private:
  std::vector<Group> groups_;
  std::vector<std::optional<GroupId>> by_community_;
};

struct SequenceRecord {
  std::string url;
  std::string domain;
  NewsClass news_class = NewsClass::Mainstream;
  std::vector<std::pair<GroupId, std::int64_t>> firsts;  // ascending time

  std::optional<std::int64_t> first_in(GroupId g) const;
};

// One record per series with at least one event in a mapped group.
std::vector<SequenceRecord> build_sequences(std::span<const UrlSeries> series,
                                            const GroupMap& groups);

struct DailyRatio {
  std::int64_t day = 0;  // days since the epoch, UTC
  long count = 0;
  double ratio = 0.0;
};

// Daily event counts for (group, class) divided by their mean over every day
// of the span, empty days included. The span defaults to the selection's
// first through last day.
std::vector<DailyRatio> normalized_daily_occurrence(
    std::span<const RawEvent> events, const GroupMap& groups, GroupId group,
    NewsClass cls,
    std::optional<std::pair<std::int64_t, std::int64_t>> day_span = std::nullopt);

struct UserFraction {
  std::string user;
  long alternative = 0;
  long total = 0;
  double fraction = 0.0;
};

struct UserFractionResult {
  std::vector<UserFraction> users;  // sorted by user
  std::size_t skipped_without_user = 0;
};

// Post-level: every event counts, repeated URLs included.
UserFractionResult user_alternative_fraction(std::span<const RawEvent> events);

struct UrlLags {
  std::string url;
  NewsClass news_class = NewsClass::Mainstream;
  std::vector<std::int64_t> deltas;  // seconds since the first occurrence
};

std::vector<UrlLags> repost_lags(std::span<const UrlSeries> series,
                                 const GroupMap& groups, GroupId group);

struct UrlValue {
  std::string url;
  NewsClass news_class = NewsClass::Mainstream;
  double value = 0.0;
};

// (t_n - t_1) / (n - 1) over a URL's events in the group, for n >= 2.
std::vector<UrlValue> mean_interarrival(std::span<const UrlSeries> series,
                                        const GroupMap& groups, GroupId group);

struct UrlDelta {
  std::string url;
  NewsClass news_class = NewsClass::Mainstream;
  std::int64_t delta = 0;  // first(b) - first(a); positive means a was earlier
};

std::vector<UrlDelta> first_occurrence_delta(std::span<const SequenceRecord> records,
                                             GroupId a, GroupId b);

struct FasterCounts {
  long first_faster = 0;
  long second_faster = 0;
  long simultaneous = 0;
};

FasterCounts count_faster(std::span<const UrlDelta> deltas, NewsClass cls);

enum class SequenceDepth { FirstHop, Full };

struct SequenceTable {
  struct Row {
    std::string label;
    std::array<long, 2> counts{};  // [alternative, mainstream]
  };
  std::vector<Row> rows;
  std::array<long, 2> totals{};

  long count(std::string_view label, NewsClass cls) const;
  double percent(const Row& row, NewsClass cls) const;
};

// FirstHop: "<G> only" or "<G1>→<G2>" over every record. Full: complete
// orderings such as "R→T→4", restricted to records present in every group.
// Every possible label gets a row, zero counts included.
SequenceTable classify_sequences(std::span<const SequenceRecord> records,
                                 const GroupMap& groups, SequenceDepth depth);

struct FlowGraph {
  struct Edge {
    std::string from;
    std::string to;
    long weight = 0;  // unique URLs
    bool from_domain = false;
  };
  std::vector<std::string> domains;  // sorted
  std::vector<std::string> groups;   // group order
  std::vector<Edge> edges;  // group->group first, then domain->group; each by (from, to)

  long weight(std::string_view from, std::string_view to) const;
};

// domain -> first group and first group -> second group, one unit per URL.
FlowGraph build_flow_graph(std::span<const SequenceRecord> records,
                           const GroupMap& groups,
                           std::optional<NewsClass> cls = std::nullopt);

// DOT digraph with `weight` and `penwidth` proportional to unique URLs.
void write_dot(std::ostream& os, const FlowGraph& graph, std::string_view name);

// Two-column empirical CDF: value, cumulative probability.
void write_cdf(std::ostream& os, std::vector<double> values);

}  // namespace urlflow
