#pragma once

// Event data model: ingestion of raw URL-share logs, grouping into per-URL
// series, dataset filters and time binning.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urlflow/matrix.hpp"

namespace urlflow {

enum class NewsClass { Alternative, Mainstream };

inline constexpr NewsClass kNewsClasses[] = {NewsClass::Alternative,
                                             NewsClass::Mainstream};

std::string_view to_string(NewsClass c) noexcept;
std::optional<NewsClass> parse_news_class(std::string_view s);

struct CommunityId {
  std::size_t index = 0;
  auto operator<=>(const CommunityId&) const = default;
};

// Dense name <-> index mapping. Names are unique and case-sensitive.
class CommunityRegistry {
 public:
  CommunityRegistry() = default;
  explicit CommunityRegistry(std::vector<std::string> names);

  CommunityId add(std::string name);
  std::optional<CommunityId> find(std::string_view name) const;
  CommunityId at(std::string_view name) const;  // throws ConfigError
  const std::string& name(CommunityId id) const { return names_.at(id.index); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }

 private:
  std::vector<std::string> names_;
};

struct RawEvent {
  std::string url;
  std::string domain;
  CommunityId community;
  std::int64_t timestamp = 0;  // epoch seconds, UTC
  std::optional<std::string> user;
  NewsClass news_class = NewsClass::Mainstream;
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct ParseSummary {
  std::size_t rows = 0;  // data rows seen, header excluded
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::size_t unknown_community = 0;
  std::vector<RowError> errors;  // first few problems, for diagnostics
};

struct ParseResult {
  std::vector<RawEvent> events;
  ParseSummary summary;
};

enum class EventFormat { Auto, Csv, Ndjson };

// Lowercases scheme and host, strips the fragment, keeps the query.
std::string normalize_url(std::string_view url);

// Host of an absolute URL with any port and leading "www." removed;
// empty when the URL has no scheme://host part.
std::string registrable_domain(std::string_view url);

ParseResult parse_events(std::istream& in, const CommunityRegistry& registry,
                         EventFormat format = EventFormat::Auto);
ParseResult parse_events_file(const std::filesystem::path& path,
                              const CommunityRegistry& registry);

// Writes the CSV event-log schema (header included).
void write_events_csv(std::ostream& os, std::span<const RawEvent> events,
                      const CommunityRegistry& registry);

struct UrlSeries {
  std::string url;
  std::string domain;
  NewsClass news_class = NewsClass::Mainstream;
  std::vector<std::vector<std::int64_t>> times;  // per community, sorted
  std::int64_t t_first = 0;
  std::int64_t t_last = 0;

  std::size_t total_events() const noexcept;
  bool has_events(CommunityId c) const noexcept {
    return c.index < times.size() && !times[c.index].empty();
  }
  std::int64_t duration() const noexcept { return t_last - t_first; }
};

// One series per distinct url, sorted by url. Throws DataError when the same
// url carries both news classes.
std::vector<UrlSeries> group_by_url(std::span<const RawEvent> events,
                                    std::size_t community_count);

// Flattens series back into events (one per timestamp), ordered by url then
// time then community. User fields are not retained by UrlSeries.
std::vector<RawEvent> flatten(std::span<const UrlSeries> series);

std::vector<UrlSeries> filter_cross_platform(
    std::span<const UrlSeries> series, const std::set<CommunityId>& required,
    const std::set<CommunityId>& any_of);

class GapSchedule {
 public:
  struct Interval {
    CommunityId community;
    std::int64_t start = 0;  // inclusive
    std::int64_t end = 0;    // exclusive
  };

  GapSchedule() = default;
  explicit GapSchedule(std::vector<Interval> intervals);  // validates

  // True when the closed span [first, last] meets any [start, end).
  bool overlaps(std::int64_t first, std::int64_t last) const noexcept;
  const std::vector<Interval>& intervals() const noexcept { return intervals_; }

 private:
  std::vector<Interval> intervals_;
};

struct GapFilterResult {
  std::vector<UrlSeries> kept;
  std::vector<UrlSeries> dropped;  // shortest duration first
};

// Among series whose span meets a gap, drops the ceil(fraction * n) shortest
// ones (ties by url). Series clear of every gap are always kept.
GapFilterResult drop_gap_overlapping(std::span<const UrlSeries> series,
                                     const GapSchedule& gaps, double fraction);

struct BinnedCounts {
  Matrix<int> counts;  // T rows (bins) x K columns (communities)
  std::int64_t delta_t = 1;
  std::int64_t origin = 0;

  std::size_t bins() const noexcept { return counts.rows(); }
  std::size_t communities() const noexcept { return counts.cols(); }
  long total() const noexcept;
  std::vector<long> column_totals() const;
};

BinnedCounts bin_series(const UrlSeries& series, std::int64_t delta_t,
                        std::size_t community_count);

}  // namespace urlflow
