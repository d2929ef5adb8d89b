#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "urlflow/events.hpp"
#include "urlflow/gibbs.hpp"
#include "urlflow/hawkes.hpp"
#include "urlflow/temporal.hpp"

namespace urlflow {

// Everything a run needs. Defaults reproduce the reference setup: one-minute
// bins, a 720-bin (12 h) excitation window, 10% gap drop, 200 + 500 sweeps.
struct RunConfig {
  CommunityRegistry communities;
  std::vector<GroupMap::Group> groups;

  std::int64_t delta_t = 60;
  int delta_t_max = 720;
  std::size_t max_bins = 5'000'000;  // per-URL cap; longer series fail to fit
  std::vector<int> lag_edges;  // empty: LagKernelGrid::default_for

  std::vector<GapSchedule::Interval> gaps;
  std::vector<std::string> required;
  std::vector<std::string> any_of;
  double drop_fraction = 0.10;

  Priors priors;
  GibbsSchedule schedule;
  std::uint64_t seed = 1;
  int workers = 1;

  // Optional default paths; command-line flags win.
  std::optional<std::filesystem::path> input, store, posteriors, params, out;

  LagKernelGrid grid() const;
  GroupMap group_map() const;
  GapSchedule gap_schedule() const;

  // Throws ConfigError on any inconsistency.
  void validate() const;
};

RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace urlflow
