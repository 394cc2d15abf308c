#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "bninstruct/core.hpp"

namespace bninstruct {

/// Random source used everywhere the pipeline draws. The engine's textual
/// state is portable, so checkpoints can carry it.
using Rng = std::mt19937_64;

/// Uniform integer in [0, bound) by rejection, independent of the standard
/// library's distribution implementation.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

// Append-only collection of seed tasks with running tallies.
class SeedPool {
 public:
  SeedPool() = default;

  const std::vector<SeedTask>& tasks() const { return tasks_; }
  std::size_t size() const { return tasks_.size(); }
  bool empty() const { return tasks_.empty(); }

  const std::array<std::size_t, kCategoryCount>& category_counts() const { return category_counts_; }
  const std::array<std::size_t, 3>& complexity_counts() const { return complexity_counts_; }

  bool contains(const std::string& id) const { return ids_.count(id) > 0; }

  /// Throws Error(duplicate_id) if the id is already present.
  void add(SeedTask task);

 private:
  std::vector<SeedTask> tasks_;
  std::unordered_set<std::string> ids_;
  std::array<std::size_t, kCategoryCount> category_counts_{};
  std::array<std::size_t, 3> complexity_counts_{};
};

struct DistributionReport {
  std::array<std::size_t, kCategoryCount> per_category{};
  std::array<double, 3> per_complexity{};
  std::vector<std::string> violations;
};

struct DistributionPolicy {
  double category_share_min = 0.09;
  double category_share_max = 0.11;
  std::array<double, 3> complexity_targets = {0.40, 0.40, 0.20};
  double complexity_tolerance = 0.05;
};

/// Fail-fast JSONL loader. Throws io_error, parse_error or duplicate_id; the
/// message names the offending line.
SeedPool load_seeds(const std::string& path);
void write_seeds(const std::string& path, const SeedPool& pool);

/// Checks category balance and complexity mix. Throws Error(empty_pool).
DistributionReport validate_distribution(const SeedPool& pool,
                                         const DistributionPolicy& policy = {});

/// k distinct tasks, uniform without replacement. Throws insufficient_pool.
std::vector<SeedTask> sample_seeds(const SeedPool& pool, std::size_t k, Rng& rng);

/// Returns the pool extended by the accepted pair's instruction.
/// Throws Error(rejected_pair) when the pair was not accepted.
SeedPool absorb(SeedPool pool, const InstructPair& pair);
/// In-place variant used by the pipeline.
void absorb_into(SeedPool& pool, const InstructPair& pair);

json to_json(const DistributionReport& report);

}  // namespace bninstruct
