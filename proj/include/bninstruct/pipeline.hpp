#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bninstruct/core.hpp"
#include "bninstruct/filters.hpp"
#include "bninstruct/seedpool.hpp"
#include "bninstruct/teacher.hpp"

namespace bninstruct {

struct PipelineConfig {
  int target_pairs = 100000;
  int k = 8;                 // seeds per round
  int batch_size = 20;       // candidates per round
  int draft_count = 3;       // drafts per instruction
  std::array<double, 3> complexity_targets = {0.40, 0.40, 0.20};
  double complexity_tolerance = 0.05;
  // Uniform task-type shares are enforced with this tolerance; negative disables.
  double task_type_tolerance = 0.10;
  std::uint64_t rng_seed = 42;
  int max_rounds = 0;        // 0 means 50 * ceil(target_pairs / batch_size)
  int max_failed_rounds = 3; // consecutive aborted rounds before run() gives up
  Thresholds thresholds;
  LengthPolicy length_policy;
};

/// Throws Error(config_error).
void validate(const PipelineConfig& config);
int effective_max_rounds(const PipelineConfig& config);
json to_json(const PipelineConfig& config);
/// Strict: unknown keys are rejected. Missing keys keep their defaults.
PipelineConfig pipeline_config_from_json(const json& j);

struct Counters {
  std::size_t candidates = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t deferred = 0;
  std::size_t errored = 0;
  std::size_t failed_rounds = 0;
  std::array<std::size_t, kCategoryCount> accepted_per_category{};
  std::array<std::size_t, 3> accepted_per_complexity{};
  std::array<std::size_t, 3> accepted_per_task_type{};
  std::map<std::string, std::size_t> rejected_by_criterion;
  std::map<std::string, std::size_t> rejected_by_reason;
  std::map<std::string, std::size_t> deferred_by_reason;

  bool operator==(const Counters&) const = default;
};

struct PipelineState {
  int round = 0;
  SeedPool pool;
  std::vector<InstructPair> accepted;
  NoveltyIndex index;
  Rng rng;
  Counters counters;
};

/// Fresh state: round 0, the pool's tasks indexed, RNG seeded from the config.
PipelineState make_initial_state(SeedPool pool, const PipelineConfig& config);

namespace deferral {
inline constexpr std::string_view kTargetReached = "target_reached";
inline constexpr std::string_view kComplexityQuota = "complexity_quota";
inline constexpr std::string_view kTaskTypeQuota = "task_type_quota";
}  // namespace deferral

struct RoundReport {
  int round = 0;
  Category target_category = Category::c1;
  std::size_t candidates = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t deferred = 0;
  std::size_t errored = 0;
  std::map<std::string, std::size_t> reasons;
  std::vector<std::string> deferred_ids;
};

/// Share quota over three buckets: whether one more item in `bucket` still
/// leaves every bucket able to finish inside target +- tolerance at `total`.
bool quota_allows(const std::array<std::size_t, 3>& counts, std::size_t bucket,
                  const std::array<double, 3>& targets, double tolerance, std::size_t total);
/// False when no final split of `total` items can meet the quota.
bool quota_satisfiable(const std::array<double, 3>& targets, double tolerance, std::size_t total);

/// Executes one generation round. Teacher failures abort the round: the state
/// is left as it was apart from counters.failed_rounds, and the error rethrown.
RoundReport run_round(PipelineState& state, const PipelineConfig& config, Teacher& generator,
                      Teacher& judge);

struct RunOptions {
  std::string dataset_path;      // JSONL output; skipped when empty
  std::string manifest_path;     // JSON output; skipped when empty
  std::string checkpoint_path;   // skipped when empty
  int checkpoint_every = 1;      // rounds
  // Called after each committed round; returning false stops the run.
  std::function<bool(const PipelineState&, const RoundReport&)> on_round;
};

struct DatasetManifest {
  std::string status;  // complete | max_rounds_exhausted | stopped
  json document;
};

/// Rounds until target_pairs are accepted or max_rounds is reached, then
/// writes the dataset and manifest. A max_rounds stop is reported in the
/// manifest status (partial output is still written).
DatasetManifest run(PipelineState& state, const PipelineConfig& config, Teacher& generator,
                    Teacher& judge, const RunOptions& options = {});

json build_manifest(const PipelineState& state, const PipelineConfig& config,
                    std::string_view status);

}  // namespace bninstruct
