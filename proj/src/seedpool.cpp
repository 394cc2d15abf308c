#include "bninstruct/seedpool.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "bninstruct/unicode.hpp"

namespace bninstruct {

std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::precondition_violation, "uniform_below(0)");
  const std::uint64_t limit = Rng::max() - (Rng::max() % bound);
  for (;;) {
    std::uint64_t x = rng();
    if (x < limit) return x % bound;
  }
}

void SeedPool::add(SeedTask task) {
  if (!ids_.insert(task.id).second) {
    throw Error(ErrorCode::duplicate_id, "duplicate seed id \"" + task.id + "\"");
  }
  ++category_counts_[category_index(task.category)];
  ++complexity_counts_[complexity_index(task.complexity)];
  tasks_.push_back(std::move(task));
}

SeedPool load_seeds(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open seed file " + path);

  SeedPool pool;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    if (auto bad = find_invalid_utf8(line)) {
      throw Error(ErrorCode::parse_error, where + ": invalid UTF-8");
    }
    if (trim(line).empty()) continue;
    SeedTask task;
    try {
      task = seed_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse_error, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::parse_error, where + ": " + e.detail());
    }
    if (pool.contains(task.id)) {
      throw Error(ErrorCode::duplicate_id,
                  where + ": duplicate id \"" + task.id + "\" on line " + std::to_string(lineno));
    }
    pool.add(std::move(task));
  }
  if (in.bad()) throw Error(ErrorCode::io_error, "read failed for " + path);
  return pool;
}

void write_seeds(const std::string& path, const SeedPool& pool) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  for (const auto& t : pool.tasks()) out << to_json(t).dump() << '\n';
}

DistributionReport validate_distribution(const SeedPool& pool, const DistributionPolicy& policy) {
  if (pool.empty()) throw Error(ErrorCode::empty_pool, "seed pool is empty");

  DistributionReport report;
  const double total = static_cast<double>(pool.size());
  // Small slack so that e.g. 45/500 sits on the window edge rather than off it.
  constexpr double eps = 1e-9;

  report.per_category = pool.category_counts();
  for (auto c : kAllCategories) {
    const double share = static_cast<double>(report.per_category[category_index(c)]) / total;
    if (share < policy.category_share_min - eps || share > policy.category_share_max + eps) {
      report.violations.push_back("category_imbalance:" + to_string(c));
    }
  }

  bool mix_ok = true;
  for (auto c : kAllComplexities) {
    const auto i = complexity_index(c);
    report.per_complexity[i] = static_cast<double>(pool.complexity_counts()[i]) / total;
    if (std::abs(report.per_complexity[i] - policy.complexity_targets[i]) >
        policy.complexity_tolerance + eps) {
      mix_ok = false;
    }
  }
  if (!mix_ok) report.violations.emplace_back("complexity_mix");
  return report;
}

std::vector<SeedTask> sample_seeds(const SeedPool& pool, std::size_t k, Rng& rng) {
  if (k == 0) throw Error(ErrorCode::precondition_violation, "k must be at least 1");
  if (pool.size() < k) {
    throw Error(ErrorCode::insufficient_pool, "pool has " + std::to_string(pool.size()) +
                                                  " tasks, need " + std::to_string(k));
  }
  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<SeedTask> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    auto j = i + static_cast<std::size_t>(uniform_below(rng, idx.size() - i));
    std::swap(idx[i], idx[j]);
    out.push_back(pool.tasks()[idx[i]]);
  }
  return out;
}

void absorb_into(SeedPool& pool, const InstructPair& pair) {
  if (!pair.report.accepted) {
    throw Error(ErrorCode::rejected_pair, "pair " + pair.id + " was not accepted");
  }
  SeedTask t;
  t.id = pair.id;
  t.text = pair.instruction;
  t.category = pair.category;
  t.complexity = pair.complexity;
  t.origin = Origin::bootstrapped;
  pool.add(std::move(t));
}

SeedPool absorb(SeedPool pool, const InstructPair& pair) {
  absorb_into(pool, pair);
  return pool;
}

json to_json(const DistributionReport& report) {
  json cats = json::object();
  for (auto c : kAllCategories) cats[to_string(c)] = report.per_category[category_index(c)];
  json mix = json::object();
  for (auto c : kAllComplexities) {
    mix[std::string(to_string(c))] = report.per_complexity[complexity_index(c)];
  }
  return json{{"per_category", cats}, {"per_complexity", mix}, {"violations", report.violations}};
}

}  // namespace bninstruct
