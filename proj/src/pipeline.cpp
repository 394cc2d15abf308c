#include "bninstruct/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "bninstruct/checkpoint.hpp"

namespace bninstruct {

void validate(const PipelineConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::config_error, m); };
  if (c.target_pairs < 1) fail("target_pairs must be >= 1");
  if (c.k < 1) fail("k must be >= 1");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (c.draft_count < 1) fail("draft_count must be >= 1");
  double sum = 0;
  for (double t : c.complexity_targets) {
    if (t < 0 || t > 1) fail("complexity targets must lie in [0, 1]");
    sum += t;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail("complexity targets must sum to 1");
  if (c.complexity_tolerance < 0 || c.complexity_tolerance > 1) {
    fail("complexity_tolerance must lie in [0, 1]");
  }
  if (c.task_type_tolerance > 1) fail("task_type_tolerance must be <= 1");
  if (c.max_rounds < 0) fail("max_rounds must be >= 0");
  if (c.max_failed_rounds < 1) fail("max_failed_rounds must be >= 1");
  for (int m : {c.length_policy.open_ended, c.length_policy.classification,
                c.length_policy.generation}) {
    if (m < 1) fail("length_policy values must be >= 1");
  }
}

int effective_max_rounds(const PipelineConfig& c) {
  if (c.max_rounds > 0) return c.max_rounds;
  const long long per = (c.target_pairs + c.batch_size - 1) / c.batch_size;
  return static_cast<int>(std::min<long long>(50LL * per, 1LL << 30));
}

json to_json(const PipelineConfig& c) {
  return json{{"target_pairs", c.target_pairs},
              {"k", c.k},
              {"batch_size", c.batch_size},
              {"draft_count", c.draft_count},
              {"complexity_targets",
               {{"basic", c.complexity_targets[0]},
                {"intermediate", c.complexity_targets[1]},
                {"advanced", c.complexity_targets[2]}}},
              {"complexity_tolerance", c.complexity_tolerance},
              {"task_type_tolerance", c.task_type_tolerance},
              {"rng_seed", c.rng_seed},
              {"max_rounds", c.max_rounds},
              {"max_failed_rounds", c.max_failed_rounds},
              {"thresholds", to_json(c.thresholds)},
              {"length_policy", to_json(c.length_policy)}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::config_error, "pipeline config must be an object");
  PipelineConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "target_pairs") c.target_pairs = v.get<int>();
      else if (key == "k") c.k = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "draft_count") c.draft_count = v.get<int>();
      else if (key == "complexity_targets") {
        if (!v.is_object()) throw Error(ErrorCode::config_error, "complexity_targets must be an object");
        for (const auto& [level, share] : v.items()) {
          auto lvl = parse_complexity(level);
          if (!lvl) throw Error(ErrorCode::config_error, "unknown complexity \"" + level + "\"");
          c.complexity_targets[complexity_index(*lvl)] = share.get<double>();
        }
      }
      else if (key == "complexity_tolerance") c.complexity_tolerance = v.get<double>();
      else if (key == "task_type_tolerance") c.task_type_tolerance = v.get<double>();
      else if (key == "rng_seed") c.rng_seed = v.get<std::uint64_t>();
      else if (key == "max_rounds") c.max_rounds = v.get<int>();
      else if (key == "max_failed_rounds") c.max_failed_rounds = v.get<int>();
      else if (key == "thresholds") c.thresholds = thresholds_from_json(v);
      else if (key == "length_policy") c.length_policy = length_policy_from_json(v);
      else throw Error(ErrorCode::config_error, "unknown config key \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, e.what());
  }
  validate(c);
  return c;
}

PipelineState make_initial_state(SeedPool pool, const PipelineConfig& config) {
  PipelineState s;
  for (const auto& t : pool.tasks()) s.index.insert(t.id, t.category, t.text);
  s.pool = std::move(pool);
  s.rng.seed(config.rng_seed);
  return s;
}

// ---------------------------------------------------------------------------
// Quotas

namespace {

constexpr double kSlack = 1e-9;

std::size_t quota_max(double target, double tol, std::size_t total) {
  return static_cast<std::size_t>(std::floor((target + tol) * static_cast<double>(total) + kSlack));
}

std::size_t quota_min(double target, double tol, std::size_t total) {
  const double x = std::ceil((target - tol) * static_cast<double>(total) - kSlack);
  return x <= 0 ? 0 : static_cast<std::size_t>(x);
}

}  // namespace

bool quota_satisfiable(const std::array<double, 3>& targets, double tol, std::size_t total) {
  std::size_t lo = 0, hi = 0;
  for (double t : targets) {
    const auto mn = quota_min(t, tol, total);
    const auto mx = quota_max(t, tol, total);
    if (mn > mx) return false;
    lo += mn;
    hi += mx;
  }
  return lo <= total && total <= hi;
}

bool quota_allows(const std::array<std::size_t, 3>& counts, std::size_t bucket,
                  const std::array<double, 3>& targets, double tol, std::size_t total) {
  auto after = counts;
  ++after[bucket];
  const std::size_t filled = after[0] + after[1] + after[2];
  if (filled > total) return false;
  // The remaining slots must fit between every bucket's floor and cap.
  std::size_t need = 0, room = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    const auto mn = quota_min(targets[b], tol, total);
    const auto mx = quota_max(targets[b], tol, total);
    if (mn > mx || after[b] > mx) return false;
    if (after[b] < mn) need += mn - after[b];
    room += mx - after[b];
  }
  const std::size_t left = total - filled;
  return need <= left && left <= room;
}

// ---------------------------------------------------------------------------
// Rounds

namespace {

struct Processed {
  TaskType task_type = TaskType::open_ended;
  ResponseDraft draft;
  std::exception_ptr error;
  bool errored = false;
};

Category least_covered(const Counters& c) {
  Category best = Category::c1;
  for (auto cat : kAllCategories) {
    if (c.accepted_per_category[category_index(cat)] <
        c.accepted_per_category[category_index(best)]) {
      best = cat;
    }
  }
  return best;
}

bool is_candidate_level(ErrorCode code) {
  return code == ErrorCode::malformed_reply || code == ErrorCode::precondition_violation;
}

void process_candidates(const std::vector<InstructionCandidate>& candidates,
                        std::vector<Processed>& out, const PipelineConfig& config,
                        Teacher& generator, Teacher& judge) {
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= candidates.size()) return;
      auto& slot = out[i];
      try {
        slot.task_type = classify_task(judge, candidates[i]);
        auto drafts = draft_responses(generator, judge, candidates[i], slot.task_type,
                                      config.draft_count);
        slot.draft = select_draft(drafts);
      } catch (const Error& e) {
        if (is_candidate_level(e.code())) {
          slot.errored = true;
          spdlog::warn("candidate {} dropped: {}", candidates[i].id, e.what());
        } else {
          slot.error = std::current_exception();
        }
      } catch (...) {
        slot.error = std::current_exception();
      }
    }
  };
  const auto workers = std::min<std::size_t>(
      candidates.size(),
      static_cast<std::size_t>(std::max(generator.config().max_in_flight,
                                        judge.config().max_in_flight)));
  if (workers <= 1) {
    work();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
}

std::string criterion_failed(const FilterReport& r) {
  // First failing criterion, for the per-criterion tally.
  if (!r.language_ok) return "language";
  if (!r.cultural_ok) return "cultural";
  if (!r.quality_ok) return "quality";
  return "novelty";
}

}  // namespace

RoundReport run_round(PipelineState& state, const PipelineConfig& config, Teacher& generator,
                      Teacher& judge) {
  if (state.accepted.size() >= static_cast<std::size_t>(config.target_pairs)) {
    throw Error(ErrorCode::precondition_violation, "target already reached");
  }
  const int round = state.round + 1;
  const Rng saved_rng = state.rng;

  RoundReport report;
  report.round = round;
  report.target_category = least_covered(state.counters);

  std::vector<InstructionCandidate> candidates;
  std::vector<Processed> processed;
  try {
    GenerationRequest request;
    request.seeds = sample_seeds(state.pool, static_cast<std::size_t>(config.k), state.rng);
    request.target_category = report.target_category;
    request.batch_size = config.batch_size;
    candidates = generate_instructions(generator, request, round);

    processed.resize(candidates.size());
    process_candidates(candidates, processed, config, generator, judge);
    for (const auto& p : processed) {
      if (p.error) std::rethrow_exception(p.error);
    }
  } catch (...) {
    state.rng = saved_rng;
    ++state.counters.failed_rounds;
    throw;
  }

  // Single-writer commit, in candidate order.
  const auto total = static_cast<std::size_t>(config.target_pairs);
  const bool complexity_quota =
      quota_satisfiable(config.complexity_targets, config.complexity_tolerance, total);
  const std::array<double, 3> uniform = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const bool type_quota = config.task_type_tolerance >= 0 &&
                          quota_satisfiable(uniform, config.task_type_tolerance, total);

  auto& counters = state.counters;
  report.candidates = candidates.size();
  counters.candidates += candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    const auto& done = processed[i];
    if (done.errored) {
      ++report.errored;
      ++counters.errored;
      continue;
    }

    InstructPair pair;
    pair.id = cand.id;
    pair.instruction = cand.text;
    pair.response = done.draft.text;
    pair.task_type = done.task_type;
    pair.category = cand.category;
    pair.round = round;
    pair.verdict = done.draft.verdict.value_or(JudgeVerdict{});
    pair.complexity = pair.verdict.complexity;
    pair.report = accept({pair.instruction, pair.response, pair.task_type, pair.category},
                         pair.verdict, state.index, config.length_policy, config.thresholds);

    if (!pair.report.accepted) {
      ++report.rejected;
      ++counters.rejected;
      ++counters.rejected_by_criterion[criterion_failed(pair.report)];
      for (const auto& r : pair.report.reasons) {
        ++report.reasons[r];
        ++counters.rejected_by_reason[r];
      }
      continue;
    }

    std::string_view deferred;
    if (state.accepted.size() >= total) {
      deferred = deferral::kTargetReached;
    } else if (complexity_quota &&
               !quota_allows(counters.accepted_per_complexity, complexity_index(pair.complexity),
                             config.complexity_targets, config.complexity_tolerance, total)) {
      deferred = deferral::kComplexityQuota;
    } else if (type_quota &&
               !quota_allows(counters.accepted_per_task_type, task_type_index(pair.task_type),
                             uniform, config.task_type_tolerance, total)) {
      deferred = deferral::kTaskTypeQuota;
    }
    if (!deferred.empty()) {
      spdlog::debug("deferred {} ({}, {}, {})", pair.id, deferred, to_string(pair.complexity),
                    to_string(pair.task_type));
      ++report.deferred;
      ++counters.deferred;
      ++counters.deferred_by_reason[std::string(deferred)];
      report.deferred_ids.push_back(pair.id);
      continue;
    }

    absorb_into(state.pool, pair);
    state.index.insert(pair.id, pair.category, pair.instruction, pair.response);
    ++report.accepted;
    ++counters.accepted;
    ++counters.accepted_per_category[category_index(pair.category)];
    ++counters.accepted_per_complexity[complexity_index(pair.complexity)];
    ++counters.accepted_per_task_type[task_type_index(pair.task_type)];
    state.accepted.push_back(std::move(pair));
  }
  state.round = round;
  return report;
}

// ---------------------------------------------------------------------------
// Run

namespace {

template <std::size_t N, typename Label>
json fractions(const std::array<std::size_t, N>& counts, Label label) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  json out = json::object();
  for (std::size_t i = 0; i < N; ++i) {
    out[std::string(label(i))] =
        total == 0 ? 0.0 : static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return out;
}

json tally(const std::map<std::string, std::size_t>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k] = v;
  return out;
}

}  // namespace

json build_manifest(const PipelineState& state, const PipelineConfig& config,
                    std::string_view status) {
  const auto& c = state.counters;
  const std::size_t judged = c.candidates - c.errored;
  json per_category = json::object();
  for (auto cat : kAllCategories) per_category[to_string(cat)] = c.accepted_per_category[category_index(cat)];

  return json{
      {"status", status},
      {"rounds", state.round},
      {"target_pairs", config.target_pairs},
      {"accepted", state.accepted.size()},
      {"candidates", c.candidates},
      {"rejected", c.rejected},
      {"deferred", c.deferred},
      {"errored", c.errored},
      {"failed_rounds", c.failed_rounds},
      // Share of judged pairs that passed the four-criteria filter.
      {"acceptance_rate",
       judged == 0 ? 0.0 : static_cast<double>(c.accepted + c.deferred) / static_cast<double>(judged)},
      {"pool_size", state.pool.size()},
      {"per_category", per_category},
      {"per_complexity",
       fractions(c.accepted_per_complexity, [](std::size_t i) { return to_string(kAllComplexities[i]); })},
      {"per_task_type",
       fractions(c.accepted_per_task_type, [](std::size_t i) { return to_string(kAllTaskTypes[i]); })},
      {"rejections_by_criterion", tally(c.rejected_by_criterion)},
      {"rejections_by_reason", tally(c.rejected_by_reason)},
      {"deferrals_by_reason", tally(c.deferred_by_reason)},
      {"rng_seed", config.rng_seed},
      {"config", to_json(config)}};
}

DatasetManifest run(PipelineState& state, const PipelineConfig& config, Teacher& generator,
                    Teacher& judge, const RunOptions& options) {
  validate(config);
  const auto target = static_cast<std::size_t>(config.target_pairs);
  const int max_rounds = effective_max_rounds(config);
  std::string status = "complete";
  int consecutive_failures = 0;
  for (const auto* path : {&options.dataset_path, &options.manifest_path, &options.checkpoint_path}) {
    const auto parent = std::filesystem::path(*path).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot create " + parent.string() + ": " + ec.message());
  }

  while (state.accepted.size() < target) {
    if (state.round >= max_rounds) {
      status = std::string(to_string(ErrorCode::max_rounds_exhausted));
      break;
    }
    RoundReport report;
    try {
      report = run_round(state, config, generator, judge);
      consecutive_failures = 0;
    } catch (const Error& e) {
      ++consecutive_failures;
      spdlog::error("round {} aborted: {}", state.round + 1, e.what());
      if (consecutive_failures >= config.max_failed_rounds) throw;
      continue;
    }
    spdlog::info("round {}: {} candidates, {} accepted, {} rejected, {} deferred, {} errored "
                 "(total {}/{})",
                 report.round, report.candidates, report.accepted, report.rejected,
                 report.deferred, report.errored, state.accepted.size(), target);
    if (!options.checkpoint_path.empty() && options.checkpoint_every > 0 &&
        state.round % options.checkpoint_every == 0) {
      checkpoint(state, options.checkpoint_path);
    }
    if (options.on_round && !options.on_round(state, report)) {
      status = "stopped";
      break;
    }
  }

  if (!options.checkpoint_path.empty()) checkpoint(state, options.checkpoint_path);
  if (!options.dataset_path.empty()) write_pairs(options.dataset_path, state.accepted);
  DatasetManifest manifest{status, build_manifest(state, config, status)};
  if (!options.manifest_path.empty()) {
    std::ofstream out(options.manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + options.manifest_path);
    out << manifest.document.dump(2) << '\n';
  }
  return manifest;
}

}  // namespace bninstruct
