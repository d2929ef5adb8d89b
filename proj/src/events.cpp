#include "urlflow/events.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "urlflow/error.hpp"
#include "urlflow/util.hpp"

namespace urlflow {

namespace {

constexpr std::size_t kMaxRecordedErrors = 50;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return v;
}

// Fields of one input record before validation.
struct RawFields {
  std::string url, domain, community, timestamp, user, news_class;
  bool timestamp_is_number = false;
  std::int64_t timestamp_value = 0;
};

class RowSink {
 public:
  RowSink(const CommunityRegistry& registry, ParseResult& out)
      : registry_(registry), out_(out) {}

  void reject(std::size_t line, std::string msg, bool unknown_community) {
    if (unknown_community) {
      ++out_.summary.unknown_community;
    } else {
      ++out_.summary.malformed;
    }
    if (out_.summary.errors.size() < kMaxRecordedErrors) {
      out_.summary.errors.push_back({line, std::move(msg)});
    }
  }

  void accept(std::size_t line, const RawFields& f) {
    ++out_.summary.rows;
    RawEvent ev;
    ev.url = normalize_url(trim(f.url));
    if (ev.url.empty()) return reject(line, "empty url", false);

    std::optional<std::int64_t> ts =
        f.timestamp_is_number ? std::optional(f.timestamp_value)
                              : parse_int(f.timestamp);
    if (!ts) return reject(line, "timestamp is not an integer", false);
    if (*ts < 0) return reject(line, "negative timestamp", false);
    ev.timestamp = *ts;

    auto cls = parse_news_class(f.news_class);
    if (!cls) {
      return reject(line, "bad news_class '" + f.news_class + "'", false);
    }
    ev.news_class = *cls;

    std::string host = registrable_domain(ev.url);
    ev.domain = lower(trim(f.domain));
    if (ev.domain.starts_with("www.")) ev.domain.erase(0, 4);
    if (ev.domain.empty()) ev.domain = host;
    if (!host.empty() && host != ev.domain &&
        !host.ends_with("." + ev.domain)) {
      return reject(line, "domain '" + ev.domain + "' does not match url host",
                    false);
    }

    auto community = registry_.find(trim(f.community));
    if (!community) {
      return reject(line, "unknown community '" + f.community + "'", true);
    }
    ev.community = *community;

    auto user = trim(f.user);
    if (!user.empty()) ev.user = std::string(user);

    out_.events.push_back(std::move(ev));
    ++out_.summary.accepted;
  }

 private:
  const CommunityRegistry& registry_;
  ParseResult& out_;
};

constexpr std::array<std::string_view, 6> kColumns = {
    "url", "domain", "community", "timestamp", "user", "news_class"};

void parse_csv(std::istream& in, RowSink& sink, ParseResult& out) {
  std::string line;
  std::size_t lineno = 0;
  std::array<std::size_t, 6> col{};
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      for (std::size_t c = 0; c < kColumns.size(); ++c) {
        auto it = std::find_if(fields.begin(), fields.end(), [&](auto& h) {
          return trim(h) == kColumns[c];
        });
        if (it == fields.end()) {
          throw DataError("line " + std::to_string(lineno) +
                          ": CSV header lacks column '" +
                          std::string(kColumns[c]) + "'");
        }
        col[c] = static_cast<std::size_t>(it - fields.begin());
      }
      have_header = true;
      continue;
    }
    std::size_t needed = *std::max_element(col.begin(), col.end()) + 1;
    if (fields.size() < needed) {
      ++out.summary.rows;
      sink.reject(lineno, "expected " + std::to_string(needed) + " fields", false);
      continue;
    }
    RawFields f{fields[col[0]], fields[col[1]], fields[col[2]],
                fields[col[3]], fields[col[4]], fields[col[5]]};
    sink.accept(lineno, f);
  }
}

void parse_ndjson(std::istream& in, RowSink& sink, ParseResult& out) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      ++out.summary.rows;
      sink.reject(lineno, "not a JSON object", false);
      continue;
    }
    auto str = [&](const char* key) -> std::string {
      auto it = obj.find(key);
      if (it == obj.end() || it->is_null()) return {};
      if (it->is_string()) return it->get<std::string>();
      return it->dump();
    };
    RawFields f{str("url"), str("domain"), str("community"), str("timestamp"),
                str("user"), str("news_class")};
    if (auto it = obj.find("timestamp");
        it != obj.end() && it->is_number_integer()) {
      f.timestamp_is_number = true;
      f.timestamp_value = it->get<std::int64_t>();
    }
    sink.accept(lineno, f);
  }
}

}  // namespace

std::string_view to_string(NewsClass c) noexcept {
  return c == NewsClass::Alternative ? "alternative" : "mainstream";
}

std::optional<NewsClass> parse_news_class(std::string_view s) {
  auto v = lower(trim(s));
  if (v == "alternative") return NewsClass::Alternative;
  if (v == "mainstream") return NewsClass::Mainstream;
  return std::nullopt;
}

CommunityRegistry::CommunityRegistry(std::vector<std::string> names) {
  for (auto& n : names) add(std::move(n));
}

CommunityId CommunityRegistry::add(std::string name) {
  if (name.empty()) throw std::invalid_argument("empty community name");
  if (find(name)) {
    throw std::invalid_argument("duplicate community name '" + name + "'");
  }
  names_.push_back(std::move(name));
  return CommunityId{names_.size() - 1};
}

std::optional<CommunityId> CommunityRegistry::find(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return CommunityId{static_cast<std::size_t>(it - names_.begin())};
}

CommunityId CommunityRegistry::at(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw ConfigError("unknown community '" + std::string(name) + "'");
}

std::string normalize_url(std::string_view url) {
  std::string out(url.substr(0, url.find('#')));
  auto scheme_end = out.find("://");
  if (scheme_end == std::string::npos) return out;
  auto host_end = out.find_first_of("/?", scheme_end + 3);
  if (host_end == std::string::npos) host_end = out.size();
  std::transform(out.begin(),
                 out.begin() + static_cast<std::ptrdiff_t>(host_end),
                 out.begin(), [](unsigned char c) {
                   return static_cast<char>(std::tolower(c));
                 });
  return out;
}

std::string registrable_domain(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) return {};
  auto rest = url.substr(scheme_end + 3);
  auto host = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = host.rfind('@'); at != std::string_view::npos) {
    host = host.substr(at + 1);
  }
  host = host.substr(0, host.find(':'));
  std::string h = lower(host);
  if (h.starts_with("www.")) h.erase(0, 4);
  return h;
}

ParseResult parse_events(std::istream& in, const CommunityRegistry& registry,
                         EventFormat format) {
  if (registry.empty()) throw ConfigError("community registry is empty");
  if (!in) throw DataError("event stream is not readable");
  ParseResult out;
  RowSink sink(registry, out);
  if (format == EventFormat::Auto) {
    format = EventFormat::Csv;
    while (in) {
      int c = in.peek();
      if (c == EOF) break;
      if (std::isspace(c)) {
        in.get();
        continue;
      }
      if (c == '{') format = EventFormat::Ndjson;
      break;
    }
  }
  if (format == EventFormat::Ndjson) {
    parse_ndjson(in, sink, out);
  } else {
    parse_csv(in, sink, out);
  }
  if (in.bad()) throw DataError("I/O error while reading events");
  return out;
}

ParseResult parse_events_file(const std::filesystem::path& path,
                              const CommunityRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open event log " + path.string());
  try {
    return parse_events(in, registry);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_events_csv(std::ostream& os, std::span<const RawEvent> events,
                      const CommunityRegistry& registry) {
  os << "url,domain,community,timestamp,user,news_class\n";
  for (const auto& ev : events) {
    std::string fields[] = {ev.url,
                            ev.domain,
                            registry.name(ev.community),
                            std::to_string(ev.timestamp),
                            ev.user.value_or(""),
                            std::string(to_string(ev.news_class))};
    write_csv_row(os, fields);
  }
}

std::size_t UrlSeries::total_events() const noexcept {
  std::size_t n = 0;
  for (const auto& t : times) n += t.size();
  return n;
}

std::vector<UrlSeries> group_by_url(std::span<const RawEvent> events,
                                    std::size_t community_count) {
  std::map<std::string, UrlSeries, std::less<>> by_url;
  for (const auto& ev : events) {
    if (ev.community.index >= community_count) {
      throw std::invalid_argument("event community index out of range");
    }
    auto [it, inserted] = by_url.try_emplace(ev.url);
    UrlSeries& s = it->second;
    if (inserted) {
      s.url = ev.url;
      s.domain = ev.domain;
      s.news_class = ev.news_class;
      s.times.resize(community_count);
      s.t_first = s.t_last = ev.timestamp;
    } else if (s.news_class != ev.news_class) {
      throw DataError("url '" + ev.url + "' is labelled both alternative and mainstream");
    }
    s.times[ev.community.index].push_back(ev.timestamp);
    s.t_first = std::min(s.t_first, ev.timestamp);
    s.t_last = std::max(s.t_last, ev.timestamp);
  }
  std::vector<UrlSeries> out;
  out.reserve(by_url.size());
  for (auto& [url, s] : by_url) {
    for (auto& t : s.times) std::sort(t.begin(), t.end());
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RawEvent> flatten(std::span<const UrlSeries> series) {
  std::vector<RawEvent> out;
  for (const auto& s : series) {
    std::size_t begin = out.size();
    for (std::size_t c = 0; c < s.times.size(); ++c) {
      for (auto t : s.times[c]) {
        out.push_back({s.url, s.domain, CommunityId{c}, t, std::nullopt,
                       s.news_class});
      }
    }
    std::stable_sort(out.begin() + static_cast<std::ptrdiff_t>(begin), out.end(),
                     [](const RawEvent& a, const RawEvent& b) {
                       return a.timestamp < b.timestamp;
                     });
  }
  return out;
}

std::vector<UrlSeries> filter_cross_platform(
    std::span<const UrlSeries> series, const std::set<CommunityId>& required,
    const std::set<CommunityId>& any_of) {
  for (auto c : required) {
    if (any_of.count(c)) {
      throw std::invalid_argument("required and any_of communities overlap");
    }
  }
  std::vector<UrlSeries> out;
  for (const auto& s : series) {
    bool keep = std::all_of(required.begin(), required.end(),
                            [&](CommunityId c) { return s.has_events(c); });
    if (keep && !any_of.empty()) {
      keep = std::any_of(any_of.begin(), any_of.end(),
                         [&](CommunityId c) { return s.has_events(c); });
    }
    if (keep) out.push_back(s);
  }
  return out;
}

GapSchedule::GapSchedule(std::vector<Interval> intervals)
    : intervals_(std::move(intervals)) {
  for (const auto& iv : intervals_) {
    if (!(iv.start < iv.end)) {
      throw ConfigError("gap interval must satisfy start < end");
    }
  }
  auto sorted = intervals_;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.community, a.start) < std::tie(b.community, b.start);
  });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].community == sorted[i - 1].community &&
        sorted[i].start < sorted[i - 1].end) {
      throw ConfigError("gap intervals overlap for one community");
    }
  }
}

bool GapSchedule::overlaps(std::int64_t first, std::int64_t last) const noexcept {
  return std::any_of(intervals_.begin(), intervals_.end(), [&](const auto& iv) {
    return first < iv.end && last >= iv.start;
  });
}

GapFilterResult drop_gap_overlapping(std::span<const UrlSeries> series,
                                     const GapSchedule& gaps, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("drop fraction must lie in [0, 1]");
  }
  std::vector<std::size_t> overlapping;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (gaps.overlaps(series[i].t_first, series[i].t_last)) {
      overlapping.push_back(i);
    }
  }
  std::sort(overlapping.begin(), overlapping.end(),
            [&](std::size_t a, std::size_t b) {
              auto da = series[a].duration(), db = series[b].duration();
              if (da != db) return da < db;
              return series[a].url < series[b].url;
            });
  // The epsilon keeps products like 0.1 * 30 = 3.0000000000000004 at 3.
  double want = std::ceil(fraction * static_cast<double>(overlapping.size()) - 1e-9);
  auto n_drop = static_cast<std::size_t>(
      std::clamp(want, 0.0, static_cast<double>(overlapping.size())));

  std::vector<bool> drop(series.size(), false);
  GapFilterResult out;
  for (std::size_t i = 0; i < n_drop; ++i) {
    drop[overlapping[i]] = true;
    out.dropped.push_back(series[overlapping[i]]);
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!drop[i]) out.kept.push_back(series[i]);
  }
  return out;
}

long BinnedCounts::total() const noexcept {
  long n = 0;
  for (int v : counts.data()) n += v;
  return n;
}

std::vector<long> BinnedCounts::column_totals() const {
  std::vector<long> tot(counts.cols(), 0);
  for (std::size_t t = 0; t < counts.rows(); ++t) {
    for (std::size_t k = 0; k < counts.cols(); ++k) tot[k] += counts(t, k);
  }
  return tot;
}

BinnedCounts bin_series(const UrlSeries& series, std::int64_t delta_t,
                        std::size_t community_count) {
  if (delta_t <= 0) throw std::invalid_argument("delta_t must be positive");
  if (series.total_events() == 0) {
    throw DataError("cannot bin url '" + series.url + "': no events");
  }
  BinnedCounts b;
  b.delta_t = delta_t;
  b.origin = (series.t_first / delta_t) * delta_t;
  auto rows = static_cast<std::size_t>((series.t_last - b.origin) / delta_t + 1);
  b.counts = Matrix<int>(rows, community_count, 0);
  for (std::size_t k = 0; k < community_count && k < series.times.size(); ++k) {
    for (auto t : series.times[k]) {
      ++b.counts(static_cast<std::size_t>((t - b.origin) / delta_t), k);
    }
  }
  return b;
}

}  // namespace urlflow
