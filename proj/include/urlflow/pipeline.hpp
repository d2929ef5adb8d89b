#pragma once

// Command implementations behind the CLI. Each writes its outputs plus a
// run_manifest.json into the output directory and reports failures through
// the exception types in error.hpp.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "urlflow/config.hpp"
#include "urlflow/events.hpp"
#include "urlflow/influence.hpp"

namespace urlflow {

inline constexpr std::string_view kVersion = "0.1.0";

struct CommandContext {
  RunConfig config;
  std::string config_digest;
  bool strict = false;
  std::ostream* log = nullptr;  // progress messages; null silences them

  static CommandContext from_file(const std::filesystem::path& path);
  static CommandContext from_text(std::string_view json_text);
};

struct IngestResult {
  ParseSummary summary;
  std::filesystem::path store;
};

IngestResult cmd_ingest(const CommandContext& ctx,
                        const std::filesystem::path& input,
                        const std::filesystem::path& out_dir);

enum class SimulatedClass { Alternative, Mainstream, Mixed };

struct SimulateOptions {
  std::filesystem::path params_dir;
  std::size_t n_urls = 0;
  std::size_t bins = 0;
  SimulatedClass news_class = SimulatedClass::Mainstream;
  std::int64_t origin = 0;  // epoch seconds of bin 0
};

// Returns the written store path. Seed comes from ctx.config.seed.
std::filesystem::path cmd_simulate(const CommandContext& ctx,
                                   const SimulateOptions& options,
                                   const std::filesystem::path& out_dir);

struct FitResult {
  std::size_t urls_total = 0;
  std::size_t urls_after_filter = 0;
  std::size_t urls_dropped = 0;
  std::size_t urls_fitted = 0;
  std::size_t failures = 0;
  std::filesystem::path posteriors;
};

// Filters, bins and fits every URL in the store. Output is independent of
// ctx.config.workers.
FitResult cmd_fit(const CommandContext& ctx, const std::filesystem::path& store,
                  const std::filesystem::path& out_dir);

InfluenceReport cmd_influence(const CommandContext& ctx,
                              const std::filesystem::path& posteriors,
                              const std::filesystem::path& store,
                              const std::filesystem::path& out_dir);

void cmd_temporal(const CommandContext& ctx, const std::filesystem::path& store,
                  const std::filesystem::path& out_dir);

// YYYY-MM-DD for a count of days since 1970-01-01.
std::string civil_date(std::int64_t days);

}  // namespace urlflow
