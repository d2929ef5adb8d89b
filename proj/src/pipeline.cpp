#include "urlflow/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "urlflow/error.hpp"
#include "urlflow/gibbs.hpp"
#include "urlflow/hawkes.hpp"
#include "urlflow/temporal.hpp"
#include "urlflow/util.hpp"

namespace urlflow {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

void note(const CommandContext& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << msg << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  return os;
}

void write_json(const fs::path& path, const ordered_json& doc) {
  auto os = open_out(path);
  os << doc.dump(2) << '\n';
}

void write_manifest(const fs::path& out_dir, std::string_view command,
                    const CommandContext& ctx,
                    const std::vector<std::pair<std::string, fs::path>>& inputs) {
  ordered_json doc;
  doc["command"] = command;
  doc["version"] = kVersion;
  doc["seed"] = ctx.config.seed;
  doc["config_digest"] = ctx.config_digest;
  ordered_json in = ordered_json::object();
  for (const auto& [name, path] : inputs) {
    in[name] = {{"path", path.filename().string()}, {"digest", file_digest(path)}};
  }
  doc["inputs"] = in;
  write_json(out_dir / "run_manifest.json", doc);
}

std::vector<RawEvent> load_store(const CommandContext& ctx, const fs::path& store) {
  auto parsed = parse_events_file(store, ctx.config.communities);
  const auto& s = parsed.summary;
  if (s.malformed || s.unknown_community) {
    note(ctx, "warning: " + std::to_string(s.malformed + s.unknown_community) +
                  " unusable rows in " + store.string());
  }
  return std::move(parsed.events);
}

std::set<CommunityId> ids(const CommunityRegistry& reg,
                          const std::vector<std::string>& names) {
  std::set<CommunityId> out;
  for (const auto& n : names) out.insert(reg.at(n));
  return out;
}

std::string file_token(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    out.push_back(std::isalnum(c) || c == '-' || c == '_' ? static_cast<char>(c) : '_');
  }
  return out;
}

// URLs and events per community and class, shaped like the fitting table.
ordered_json breakdown(std::span<const UrlSeries> series, const CommunityRegistry& reg) {
  ordered_json doc = ordered_json::object();
  for (NewsClass cls : kNewsClasses) {
    ordered_json urls = ordered_json::object(), events = ordered_json::object();
    for (std::size_t c = 0; c < reg.size(); ++c) {
      long u = 0, e = 0;
      for (const auto& s : series) {
        if (s.news_class != cls || !s.has_events(CommunityId{c})) continue;
        ++u;
        e += static_cast<long>(s.times[c].size());
      }
      urls[reg.names()[c]] = u;
      events[reg.names()[c]] = e;
    }
    doc[std::string(to_string(cls))] = {{"urls", urls}, {"events", events}};
  }
  return doc;
}

}  // namespace

CommandContext CommandContext::from_file(const fs::path& path) {
  CommandContext ctx;
  ctx.config = load_config(path);
  ctx.config_digest = file_digest(path);
  return ctx;
}

CommandContext CommandContext::from_text(std::string_view json_text) {
  CommandContext ctx;
  ctx.config = parse_config(json_text);
  ctx.config_digest = "fnv1a64:" + hex64(fnv1a64(json_text));
  return ctx;
}

std::string civil_date(std::int64_t days) {
  // Howard Hinnant's days-to-civil conversion.
  days += 719468;
  const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const auto doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  if (m <= 2) ++y;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u", static_cast<long long>(y), m, d);
  return buf;
}

IngestResult cmd_ingest(const CommandContext& ctx, const fs::path& input,
                        const fs::path& out_dir) {
  const auto& reg = ctx.config.communities;
  auto parsed = parse_events_file(input, reg);
  auto& events = parsed.events;
  std::sort(events.begin(), events.end(), [](const RawEvent& a, const RawEvent& b) {
    return std::tie(a.url, a.timestamp, a.community, a.user) <
           std::tie(b.url, b.timestamp, b.community, b.user);
  });
  // Class conflicts surface here rather than at fit time.
  group_by_url(events, reg.size());

  fs::create_directories(out_dir);
  IngestResult result{parsed.summary, out_dir / "events.csv"};
  {
    auto os = open_out(result.store);
    write_events_csv(os, events, reg);
  }

  const auto& s = parsed.summary;
  ordered_json doc;
  doc["rows"] = s.rows;
  doc["accepted"] = s.accepted;
  doc["malformed"] = s.malformed;
  doc["unknown_community"] = s.unknown_community;
  ordered_json per = ordered_json::object();
  for (NewsClass cls : kNewsClasses) {
    ordered_json row = ordered_json::object();
    for (const auto& name : reg.names()) row[name] = 0;
    for (const auto& ev : events) {
      if (ev.news_class == cls) {
        row[reg.name(ev.community)] = row[reg.name(ev.community)].get<long>() + 1;
      }
    }
    per[std::string(to_string(cls))] = row;
  }
  doc["events"] = per;
  ordered_json errs = ordered_json::array();
  for (const auto& e : s.errors) errs.push_back({{"line", e.line}, {"message", e.message}});
  doc["errors"] = errs;
  write_json(out_dir / "ingest_summary.json", doc);
  write_manifest(out_dir, "ingest", ctx, {{"input", input}});
  note(ctx, "ingest: " + std::to_string(s.accepted) + " events accepted, " +
                std::to_string(s.malformed) + " malformed, " +
                std::to_string(s.unknown_community) + " unknown community");
  return result;
}

fs::path cmd_simulate(const CommandContext& ctx, const SimulateOptions& options,
                      const fs::path& out_dir) {
  const auto& cfg = ctx.config;
  auto params = load_params(options.params_dir);
  if (params.communities() != cfg.communities.size()) {
    throw ConfigError("parameter bundle has " + std::to_string(params.communities()) +
                      " communities, config has " +
                      std::to_string(cfg.communities.size()));
  }
  const double rho = spectral_radius(params.weights);
  if (!(rho < 1.0)) {
    throw ModelError("weight matrix is not subcritical (spectral radius " +
                     format_fixed(rho, 6) + ")");
  }
  if (options.n_urls > 0 && options.bins < 1) {
    throw ConfigError("simulation needs at least one bin");
  }

  std::vector<RawEvent> events;
  for (std::size_t u = 0; u < options.n_urls; ++u) {
    char id[32];
    std::snprintf(id, sizeof id, "%06zu", u);
    const std::string url = std::string("https://sim.example/url/") + id;
    NewsClass cls = options.news_class == SimulatedClass::Alternative
                        ? NewsClass::Alternative
                        : NewsClass::Mainstream;
    if (options.news_class == SimulatedClass::Mixed && u % 2 == 0) {
      cls = NewsClass::Alternative;
    }
    const auto counts = simulate(params, options.bins, url_seed(cfg.seed, url));
    for (std::size_t t = 0; t < counts.bins(); ++t) {
      for (std::size_t k = 0; k < counts.communities(); ++k) {
        for (int n = 0; n < counts.counts(t, k); ++n) {
          events.push_back({url, "sim.example", CommunityId{k},
                            options.origin + static_cast<std::int64_t>(t) * cfg.delta_t,
                            std::nullopt, cls});
        }
      }
    }
  }

  fs::create_directories(out_dir);
  const auto store = out_dir / "events.csv";
  {
    auto os = open_out(store);
    write_events_csv(os, events, cfg.communities);
  }
  save_params(params, out_dir / "truth");

  ordered_json meta;
  meta["n_urls"] = options.n_urls;
  meta["bins"] = options.bins;
  meta["delta_t"] = cfg.delta_t;
  meta["origin"] = options.origin;
  meta["seed"] = cfg.seed;
  meta["events"] = events.size();
  meta["spectral_radius"] = rho;
  meta["truth"] = "truth/";
  write_json(out_dir / "simulate_meta.json", meta);
  write_manifest(out_dir, "simulate", ctx,
                 {{"lambda0", options.params_dir / "lambda0.csv"},
                  {"W", options.params_dir / "W.csv"},
                  {"G", options.params_dir / "G.csv"},
                  {"grid", options.params_dir / "grid.csv"}});
  note(ctx, "simulate: " + std::to_string(options.n_urls) + " urls, " +
                std::to_string(events.size()) + " events");
  return store;
}

FitResult cmd_fit(const CommandContext& ctx, const fs::path& store,
                  const fs::path& out_dir) {
  const auto& cfg = ctx.config;
  const auto& reg = cfg.communities;
  const auto events = load_store(ctx, store);
  const auto series = group_by_url(events, reg.size());

  FitResult result;
  result.urls_total = series.size();
  auto filtered = filter_cross_platform(series, ids(reg, cfg.required), ids(reg, cfg.any_of));
  result.urls_after_filter = filtered.size();
  auto gap = drop_gap_overlapping(filtered, cfg.gap_schedule(), cfg.drop_fraction);
  result.urls_dropped = gap.dropped.size();
  const auto& todo = gap.kept;
  note(ctx, "fit: " + std::to_string(result.urls_total) + " urls, " +
                std::to_string(result.urls_after_filter) + " pass the cross-platform filter, " +
                std::to_string(result.urls_dropped) + " dropped for gap overlap");
  if (todo.empty()) throw DataError("no URLs survive filtering");

  fs::create_directories(out_dir);
  {
    auto os = open_out(out_dir / "dropped_urls.csv");
    os << "url,news_class,duration_seconds\n";
    for (const auto& s : gap.dropped) {
      std::string f[] = {s.url, std::string(to_string(s.news_class)),
                         std::to_string(s.duration())};
      write_csv_row(os, f);
    }
  }

  const auto grid = cfg.grid();
  std::vector<std::optional<PosteriorRow>> rows(todo.size());
  std::vector<std::string> errors(todo.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++) {
      if (abort) return;
      const auto& s = todo[i];
      try {
        const auto span_bins = s.t_last / cfg.delta_t - s.t_first / cfg.delta_t + 1;
        if (static_cast<std::uint64_t>(span_bins) > cfg.max_bins) {
          throw DataError("series spans " + std::to_string(span_bins) +
                          " bins, above binning.max_bins");
        }
        const auto counts = bin_series(s, cfg.delta_t, reg.size());
        const auto seed = url_seed(cfg.seed, s.url);
        rows[i] = PosteriorRow{s.url, s.news_class,
                               fit(counts, grid, cfg.priors, cfg.schedule, seed)};
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (ctx.strict) abort = true;
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(std::max(1, cfg.workers));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(n_workers, todo.size()); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<PosteriorRow> fitted;
  {
    auto os = open_out(out_dir / "fit_failures.csv");
    os << "url,error\n";
    for (std::size_t i = 0; i < todo.size(); ++i) {
      if (rows[i]) {
        fitted.push_back(std::move(*rows[i]));
      } else if (!errors[i].empty()) {
        ++result.failures;
        std::string f[] = {todo[i].url, errors[i]};
        write_csv_row(os, f);
        note(ctx, "warning: fit failed for " + todo[i].url + ": " + errors[i]);
      }
    }
  }
  result.urls_fitted = fitted.size();
  result.posteriors = out_dir / "posteriors.csv";
  {
    auto os = open_out(result.posteriors);
    write_posteriors(os, fitted, reg.names());
  }

  ordered_json summary;
  summary["urls_total"] = result.urls_total;
  summary["urls_after_filter"] = result.urls_after_filter;
  summary["urls_dropped"] = result.urls_dropped;
  summary["urls_fitted"] = result.urls_fitted;
  summary["failures"] = result.failures;
  summary["fitted_breakdown"] = breakdown(todo, reg);
  write_json(out_dir / "fit_summary.json", summary);
  write_manifest(out_dir, "fit", ctx, {{"store", store}});
  note(ctx, "fit: " + std::to_string(result.urls_fitted) + " urls fitted, " +
                std::to_string(result.failures) + " failed");
  for (NewsClass cls : kNewsClasses) {
    const auto& b = summary["fitted_breakdown"][std::string(to_string(cls))];
    std::string line = "  " + std::string(to_string(cls)) + " urls:";
    for (const auto& n : reg.names()) line += " " + n + "=" + b["urls"][n].dump();
    note(ctx, line);
  }

  if (result.failures > 0 && ctx.strict) {
    throw FitError(std::to_string(result.failures) + " URL fit(s) failed");
  }
  return result;
}

InfluenceReport cmd_influence(const CommandContext& ctx, const fs::path& posteriors,
                              const fs::path& store, const fs::path& out_dir) {
  const auto& reg = ctx.config.communities;
  std::ifstream in(posteriors);
  if (!in) throw DataError("cannot open posteriors " + posteriors.string());
  auto table = read_posteriors(in);
  if (table.community_names != reg.names()) {
    throw DataError("posteriors communities do not match the config registry");
  }

  std::set<std::string> wanted;
  for (const auto& r : table.rows) wanted.insert(r.url);
  std::map<std::string, std::vector<long>> totals;
  for (const auto& s : group_by_url(load_store(ctx, store), reg.size())) {
    if (!wanted.count(s.url)) continue;
    auto& t = totals[s.url];
    for (const auto& times : s.times) t.push_back(static_cast<long>(times.size()));
  }
  auto report = build_report(table.rows, totals, reg.names());
  for (const auto& w : report.warnings) note(ctx, "warning: " + w);
  write_report(report, out_dir);
  write_manifest(out_dir, "influence", ctx, {{"posteriors", posteriors}, {"store", store}});
  return report;
}

void cmd_temporal(const CommandContext& ctx, const fs::path& store,
                  const fs::path& out_dir) {
  const auto& cfg = ctx.config;
  if (cfg.groups.empty()) throw ConfigError("temporal analysis needs configured groups");
  const auto groups = cfg.group_map();
  const auto events = load_store(ctx, store);
  const auto series = group_by_url(events, cfg.communities.size());
  const auto records = build_sequences(series, groups);
  fs::create_directories(out_dir);

  auto write_table = [&](const fs::path& path, const SequenceTable& t) {
    auto os = open_out(path);
    os << "sequence,alternative,alternative_pct,mainstream,mainstream_pct\n";
    for (const auto& r : t.rows) {
      std::string f[] = {r.label,
                         std::to_string(r.counts[0]),
                         format_fixed(t.percent(r, NewsClass::Alternative), 2),
                         std::to_string(r.counts[1]),
                         format_fixed(t.percent(r, NewsClass::Mainstream), 2)};
      write_csv_row(os, f);
    }
  };
  write_table(out_dir / "sequences_first_hop.csv",
              classify_sequences(records, groups, SequenceDepth::FirstHop));
  write_table(out_dir / "sequences_full.csv",
              classify_sequences(records, groups, SequenceDepth::Full));

  auto cdf_file = [&](const std::string& stem, std::vector<double> values) {
    auto os = open_out(out_dir / (stem + ".csv"));
    write_cdf(os, std::move(values));
  };

  {
    auto os = open_out(out_dir / "first_occurrence_summary.csv");
    os << "comparison,news_class,first_faster,second_faster,simultaneous\n";
    for (std::size_t a = 0; a < groups.size(); ++a) {
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        const GroupId ga{a}, gb{b};
        const auto deltas = first_occurrence_delta(records, ga, gb);
        for (NewsClass cls : kNewsClasses) {
          const auto c = count_faster(deltas, cls);
          std::string f[] = {groups.name(ga) + " vs " + groups.name(gb),
                             std::string(to_string(cls)), std::to_string(c.first_faster),
                             std::to_string(c.second_faster),
                             std::to_string(c.simultaneous)};
          write_csv_row(os, f);
          std::vector<double> v;
          for (const auto& d : deltas) {
            if (d.news_class == cls) v.push_back(static_cast<double>(d.delta));
          }
          cdf_file("cdf_first_delta_" + file_token(groups.name(ga)) + "_" +
                       file_token(groups.name(gb)) + "_" + std::string(to_string(cls)),
                   std::move(v));
        }
      }
    }
  }

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const GroupId gid{g};
    const auto lags = repost_lags(series, groups, gid);
    const auto gaps = mean_interarrival(series, groups, gid);
    for (NewsClass cls : kNewsClasses) {
      std::vector<double> lag_values, gap_values;
      for (const auto& l : lags) {
        if (l.news_class != cls) continue;
        for (auto d : l.deltas) lag_values.push_back(static_cast<double>(d));
      }
      for (const auto& v : gaps) {
        if (v.news_class == cls) gap_values.push_back(v.value);
      }
      const auto suffix = file_token(groups.name(gid)) + "_" + std::string(to_string(cls));
      cdf_file("cdf_repost_lag_" + suffix, std::move(lag_values));
      cdf_file("cdf_interarrival_" + suffix, std::move(gap_values));
    }
  }

  {
    auto os = open_out(out_dir / "daily_occurrence.csv");
    os << "group,news_class,date,count,ratio\n";
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (NewsClass cls : kNewsClasses) {
        std::vector<DailyRatio> days;
        try {
          days = normalized_daily_occurrence(events, groups, GroupId{g}, cls);
        } catch (const DataError&) {
          continue;  // nothing of this class in the group
        }
        for (const auto& d : days) {
          std::string f[] = {groups.name(GroupId{g}), std::string(to_string(cls)),
                             civil_date(d.day), std::to_string(d.count),
                             format_exact(d.ratio)};
          write_csv_row(os, f);
        }
      }
    }
  }

  const auto users = user_alternative_fraction(events);
  {
    auto os = open_out(out_dir / "user_fractions.csv");
    os << "user,alternative_posts,news_posts,fraction\n";
    for (const auto& u : users.users) {
      std::string f[] = {u.user, std::to_string(u.alternative), std::to_string(u.total),
                         format_exact(u.fraction)};
      write_csv_row(os, f);
    }
    std::vector<double> v;
    for (const auto& u : users.users) v.push_back(u.fraction);
    cdf_file("cdf_user_alternative_fraction", std::move(v));
  }

  for (NewsClass cls : kNewsClasses) {
    const auto graph = build_flow_graph(records, groups, cls);
    auto os = open_out(out_dir / ("flow_" + std::string(to_string(cls)) + ".dot"));
    write_dot(os, graph, "flow_" + std::string(to_string(cls)));
  }

  ordered_json summary;
  summary["urls"] = series.size();
  summary["urls_in_groups"] = records.size();
  summary["events"] = events.size();
  summary["events_without_user"] = users.skipped_without_user;
  summary["user_fraction_counts"] = "posts (repeated URLs counted)";
  summary["day_boundaries"] = "UTC";
  summary["time_unit"] = "seconds";
  write_json(out_dir / "temporal_summary.json", summary);
  write_manifest(out_dir, "temporal", ctx, {{"store", store}});
  note(ctx, "temporal: " + std::to_string(records.size()) + " url sequences");
}

}  // namespace urlflow
