// urlflow: ingest, simulate, fit and report on per-URL cross-community
// Hawkes models.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "urlflow/error.hpp"
#include "urlflow/pipeline.hpp"

namespace fs = std::filesystem;
using namespace urlflow;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool strict = false;
  bool quiet = false;
  std::optional<std::string> out, input, store, posteriors, params;
  std::size_t n_urls = 0;
  std::size_t bins = 20160;
  std::string news_class = "mainstream";
  std::int64_t origin = 0;
};

fs::path pick(const std::optional<std::string>& flag,
              const std::optional<fs::path>& from_config, const char* what) {
  if (flag) return *flag;
  if (from_config) return *from_config;
  throw ConfigError(std::string("no ") + what + " given (flag or config paths." + what + ")");
}

CommandContext make_context(const Options& o) {
  auto ctx = CommandContext::from_file(o.config);
  if (o.seed) ctx.config.seed = *o.seed;
  if (o.workers) ctx.config.workers = *o.workers;
  ctx.config.validate();
  ctx.strict = o.strict;
  ctx.log = o.quiet ? nullptr : &std::cerr;
  return ctx;
}

int run(const std::string& command, const Options& o) {
  const auto ctx = make_context(o);
  const auto& cfg = ctx.config;
  const auto out = pick(o.out, cfg.out, "out");
  if (command == "ingest") {
    cmd_ingest(ctx, pick(o.input, cfg.input, "input"), out);
  } else if (command == "simulate") {
    SimulateOptions so;
    so.params_dir = pick(o.params, cfg.params, "params");
    so.n_urls = o.n_urls;
    so.bins = o.bins;
    so.origin = o.origin;
    if (o.news_class == "alternative") {
      so.news_class = SimulatedClass::Alternative;
    } else if (o.news_class == "mixed") {
      so.news_class = SimulatedClass::Mixed;
    } else {
      so.news_class = SimulatedClass::Mainstream;
    }
    cmd_simulate(ctx, so, out);
  } else if (command == "fit") {
    cmd_fit(ctx, pick(o.store, cfg.store, "store"), out);
  } else if (command == "influence") {
    cmd_influence(ctx, pick(o.posteriors, cfg.posteriors, "posteriors"),
                  pick(o.store, cfg.store, "store"), out);
  } else if (command == "temporal") {
    cmd_temporal(ctx, pick(o.store, cfg.store, "store"), out);
  } else if (command == "report") {
    const auto store = pick(o.store, cfg.store, "store");
    cmd_influence(ctx, pick(o.posteriors, cfg.posteriors, "posteriors"), store,
                  out / "influence");
    cmd_temporal(ctx, store, out / "temporal");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-URL cross-community Hawkes modelling of news URL diffusion"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override the run seed");
    sub->add_option("--workers", o.workers, "Override the worker count")->check(CLI::PositiveNumber);
    sub->add_flag("--strict", o.strict, "Exit 3 if any per-URL fit fails");
    sub->add_flag("--quiet,-q", o.quiet, "Suppress progress messages");
    sub->add_option("--out", o.out, "Output directory");
  };

  auto* ingest = app.add_subcommand("ingest", "Normalize an event log into a store");
  common(ingest);
  ingest->add_option("--input", o.input, "Event log (CSV or NDJSON)");

  auto* simulate = app.add_subcommand("simulate", "Simulate URLs from a parameter bundle");
  common(simulate);
  simulate->add_option("--params", o.params, "Directory with lambda0.csv, W.csv, G.csv, grid.csv");
  simulate->add_option("--n-urls", o.n_urls, "Number of URLs")->required();
  simulate->add_option("--bins", o.bins, "Bins per URL")->capture_default_str();
  simulate->add_option("--news-class", o.news_class, "Class label for simulated URLs")
      ->check(CLI::IsMember({"alternative", "mainstream", "mixed"}))
      ->capture_default_str();
  simulate->add_option("--origin", o.origin, "Epoch seconds of bin 0")->capture_default_str();

  auto* fit = app.add_subcommand("fit", "Fit every URL in a store");
  common(fit);
  fit->add_option("--store", o.store, "Event store CSV");

  auto* influence = app.add_subcommand("influence", "Aggregate posteriors into influence tables");
  common(influence);
  influence->add_option("--posteriors", o.posteriors, "posteriors.csv from fit");
  influence->add_option("--store", o.store, "Event store CSV");

  auto* temporal = app.add_subcommand("temporal", "Timing analytics over a store");
  common(temporal);
  temporal->add_option("--store", o.store, "Event store CSV");

  auto* report = app.add_subcommand("report", "influence and temporal together");
  common(report);
  report->add_option("--posteriors", o.posteriors, "posteriors.csv from fit");
  report->add_option("--store", o.store, "Event store CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const FitError& e) {
    std::cerr << "fit failed: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
