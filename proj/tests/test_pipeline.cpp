#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bninstruct/checkpoint.hpp"
#include "bninstruct/mock_teacher.hpp"
#include "bninstruct/pipeline.hpp"
#include "support/util.hpp"

using namespace bninstruct;
namespace m = bninstruct::mock;

namespace {

SeedPool mini_pool() { return load_seeds(testutil::source_path("data/seeds_mini.jsonl")); }

// Eight seeds, all carrying `marker`, so every sampled batch sees it.
SeedPool marked_pool(std::string_view marker) {
  static const char* texts[] = {"নদীর ধারে একটি গ্রামের বর্ণনা দিন", "বাংলা নববর্ষ কীভাবে পালিত হয়",
                                "শীতকালের সকালের অনুভূতি জানান", "একজন কৃষকের দিনলিপি তৈরি করুন",
                                "পিঠা উৎসবের ইতিহাস বলুন", "শহরের যানজট কমানোর উপায় কী",
                                "মাতৃভাষা দিবসের তাৎপর্য আলোচনা করুন", "একটি লোককাহিনি সংক্ষেপে বলুন"};
  SeedPool pool;
  for (int i = 0; i < 8; ++i) {
    pool.add({"m" + std::to_string(i), std::string(texts[i]) + " " + std::string(marker),
              kAllCategories[static_cast<std::size_t>(i)], Complexity::basic, Origin::human});
  }
  return pool;
}

std::unique_ptr<Teacher> mock_teacher(std::uint64_t seed = 42) {
  auto cfg = testutil::fast_config();
  cfg.max_in_flight = 4;
  return std::make_unique<Teacher>(cfg, std::make_shared<m::MockTransport>(m::MockOptions{seed, {0.7, 0.9, 0.8}}));
}

PipelineConfig small_config(int target) {
  PipelineConfig c;
  c.target_pairs = target;
  c.k = 8;
  c.batch_size = 20;
  c.draft_count = 3;
  c.rng_seed = 42;
  return c;
}

void check_conservation(const PipelineState& s, std::size_t initial_pool) {
  const auto& c = s.counters;
  CHECK(c.candidates == c.accepted + c.rejected + c.deferred + c.errored);
  CHECK(c.accepted == s.accepted.size());
  CHECK(s.pool.size() == initial_pool + s.accepted.size());
  CHECK(s.index.size() == s.pool.size());
  std::size_t per_cat = 0, per_cx = 0, per_tt = 0;
  for (auto n : c.accepted_per_category) per_cat += n;
  for (auto n : c.accepted_per_complexity) per_cx += n;
  for (auto n : c.accepted_per_task_type) per_tt += n;
  CHECK(per_cat == c.accepted);
  CHECK(per_cx == c.accepted);
  CHECK(per_tt == c.accepted);
  std::size_t by_crit = 0;
  for (const auto& [k, n] : c.rejected_by_criterion) by_crit += n;
  CHECK(by_crit == c.rejected);
  std::size_t deferred = 0;
  for (const auto& [k, n] : c.deferred_by_reason) deferred += n;
  CHECK(deferred == c.deferred);
  for (const auto& p : s.accepted) {
    CHECK(p.report.accepted);
    CHECK(validate_pair(p).empty());
  }
}

// Brute force: is there a final split reachable from `after` that meets the quota?
bool quota_oracle(std::array<std::size_t, 3> counts, std::size_t bucket,
                  const std::array<double, 3>& targets, double tol, std::size_t total) {
  ++counts[bucket];
  auto ok = [&](std::size_t b, std::size_t x) {
    const double share = static_cast<double>(x) / static_cast<double>(total);
    return share >= targets[b] - tol - 1e-9 && share <= targets[b] + tol + 1e-9;
  };
  for (std::size_t x0 = counts[0]; x0 <= total; ++x0) {
    for (std::size_t x1 = counts[1]; x0 + x1 <= total; ++x1) {
      const std::size_t x2 = total - x0 - x1;
      if (x2 < counts[2]) continue;
      if (ok(0, x0) && ok(1, x1) && ok(2, x2)) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("pipeline config") {
  CHECK_NOTHROW(validate(PipelineConfig{}));
  PipelineConfig c;
  c.complexity_targets = {0.5, 0.4, 0.2};
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.k = 0;
  CHECK_THROWS_AS(validate(c), Error);

  CHECK(effective_max_rounds(small_config(200)) == 500);
  c = small_config(200);
  c.max_rounds = 7;
  CHECK(effective_max_rounds(c) == 7);

  const auto parsed = pipeline_config_from_json(
      json::parse(R"({"target_pairs":30,"complexity_targets":{"basic":0.3,"intermediate":0.5,"advanced":0.2}})"));
  CHECK(parsed.target_pairs == 30);
  CHECK(parsed.complexity_targets == std::array<double, 3>{0.3, 0.5, 0.2});
  CHECK(parsed.thresholds == Thresholds{});
  try {
    pipeline_config_from_json(json::parse(R"({"batchsize":3})"));
    FAIL("expected config_error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
  }
  CHECK(pipeline_config_from_json(to_json(small_config(9))).target_pairs == 9);
}

TEST_CASE("quota examples") {
  const std::array<double, 3> t = {0.4, 0.4, 0.2};
  CHECK(quota_satisfiable(t, 0.05, 200));
  CHECK(quota_satisfiable(t, 0.05, 1) == false);
  CHECK(quota_satisfiable(t, 0.05, 5));
  // 200 pairs: basic may reach 90, not 91.
  CHECK(quota_allows({89, 0, 0}, 0, t, 0.05, 200));
  CHECK_FALSE(quota_allows({90, 0, 0}, 0, t, 0.05, 200));
  // 170 filled with no advanced: 30 of the last 30 must be advanced to reach 0.15.
  CHECK_FALSE(quota_allows({85, 85, 0}, 0, t, 0.05, 200));
  CHECK(quota_allows({85, 85, 0}, 2, t, 0.05, 200));
  CHECK_FALSE(quota_allows({100, 100, 0}, 2, t, 0.05, 200));
}

TEST_CASE("quota_allows agrees with a brute-force search") {
  Rng rng(17);
  const std::array<std::array<double, 3>, 3> targets = {
      std::array<double, 3>{0.4, 0.4, 0.2}, std::array<double, 3>{1.0 / 3, 1.0 / 3, 1.0 / 3},
      std::array<double, 3>{0.7, 0.2, 0.1}};
  for (int trial = 0; trial < 3000; ++trial) {
    const auto& t = targets[uniform_below(rng, 3)];
    const double tol = std::array<double, 4>{0.0, 0.05, 0.1, 0.25}[uniform_below(rng, 4)];
    const std::size_t total = 1 + uniform_below(rng, 30);
    std::array<std::size_t, 3> counts{};
    const auto filled = uniform_below(rng, total);
    for (std::size_t i = 0; i < filled; ++i) ++counts[uniform_below(rng, 3)];
    const std::size_t bucket = uniform_below(rng, 3);
    CAPTURE(total);
    CAPTURE(tol);
    CHECK(quota_allows(counts, bucket, t, tol, total) == quota_oracle(counts, bucket, t, tol, total));
  }
}

TEST_CASE("initial state indexes the pool and seeds the RNG") {
  const PipelineConfig cfg = small_config(10);
  auto s = make_initial_state(mini_pool(), cfg);
  CHECK(s.round == 0);
  CHECK(s.index.size() == 20);
  CHECK(s.index.contains("s01"));
  Rng expected(cfg.rng_seed);
  CHECK(s.rng == expected);
}

TEST_CASE("counters are conserved and accepted pairs only grow") {
  const auto cfg = small_config(200);
  auto gen = mock_teacher();
  auto judge = mock_teacher();
  auto s = make_initial_state(mini_pool(), cfg);
  std::vector<InstructPair> previous;
  for (int r = 0; r < 6; ++r) {
    const auto before = s.counters;
    const auto report = run_round(s, cfg, *gen, *judge);
    CHECK(report.round == r + 1);
    CHECK(s.round == r + 1);
    CHECK(report.candidates == report.accepted + report.rejected + report.deferred + report.errored);
    CHECK(s.counters.candidates - before.candidates == report.candidates);
    REQUIRE(s.accepted.size() >= previous.size());
    CHECK(std::equal(previous.begin(), previous.end(), s.accepted.begin()));
    previous = s.accepted;
    check_conservation(s, 20);
  }
  CHECK(s.accepted.size() > 0);
}

TEST_CASE("the least covered category is targeted") {
  const auto cfg = small_config(200);
  auto gen = mock_teacher();
  auto judge = mock_teacher();
  auto s = make_initial_state(mini_pool(), cfg);
  CHECK(run_round(s, cfg, *gen, *judge).target_category == Category::c1);
  const auto r2 = run_round(s, cfg, *gen, *judge);
  CHECK(r2.target_category == Category::c2);
  for (const auto& p : s.accepted) CHECK((p.category == Category::c1 || p.category == Category::c2));
}

TEST_CASE("a target below the batch size defers the surplus") {
  const auto cfg = small_config(3);
  auto gen = mock_teacher();
  auto judge = mock_teacher();
  auto s = make_initial_state(mini_pool(), cfg);
  const auto m = run(s, cfg, *gen, *judge);
  CHECK(m.status == "complete");
  CHECK(s.accepted.size() == 3);
  CHECK(s.counters.deferred_by_reason.count(std::string(deferral::kTargetReached)) == 1);
  check_conservation(s, 20);
  CHECK_THROWS_AS(run_round(s, cfg, *gen, *judge), Error);
}

TEST_CASE("a failed round leaves the state untouched") {
  const auto cfg = small_config(50);
  auto judge = mock_teacher();
  auto broken = std::make_shared<testutil::FakeTransport>(
      [](const ChatRequest&, std::size_t) -> std::string { throw TransportError(401, "denied"); });
  Teacher gen(testutil::fast_config(), broken);
  auto s = make_initial_state(mini_pool(), cfg);
  const auto rng = s.rng;
  try {
    run_round(s, cfg, gen, *judge);
    FAIL("expected backend_error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::backend_error);
  }
  CHECK(s.rng == rng);
  CHECK(s.round == 0);
  CHECK(s.accepted.empty());
  CHECK(s.counters.failed_rounds == 1);
  CHECK(s.counters.candidates == 0);

  // run() gives up after max_failed_rounds consecutive aborts.
  CHECK_THROWS_AS(run(s, cfg, gen, *judge), Error);
  CHECK(s.counters.failed_rounds == 1 + static_cast<std::size_t>(cfg.max_failed_rounds));
}

TEST_CASE("a round that fails mid-way still restores the RNG") {
  const auto cfg = small_config(50);
  auto judge = mock_teacher();
  auto real = m::MockTransport({42, {0.7, 0.9, 0.8}});
  auto flaky = std::make_shared<testutil::FakeTransport>(
      [&](const ChatRequest& r, std::size_t n) -> std::string {
        if (n > 5) throw TransportError(0, "gone");
        return real.complete(r);
      });
  Teacher gen(testutil::fast_config(0), flaky);
  auto s = make_initial_state(mini_pool(), cfg);
  const auto rng = s.rng;
  CHECK_THROWS_AS(run_round(s, cfg, gen, *judge), Error);
  CHECK(s.rng == rng);
  CHECK(s.accepted.empty());
  CHECK(s.pool.size() == 20);
}

TEST_CASE("max_rounds and on_round stop the run") {
  auto cfg = small_config(100000);
  cfg.max_rounds = 2;
  auto gen = mock_teacher();
  auto judge = mock_teacher();
  auto s = make_initial_state(mini_pool(), cfg);
  const auto m = run(s, cfg, *gen, *judge);
  CHECK(m.status == "max_rounds_exhausted");
  CHECK(m.document["status"] == "max_rounds_exhausted");
  CHECK(s.round == 2);

  cfg.max_rounds = 0;
  auto s2 = make_initial_state(mini_pool(), cfg);
  RunOptions opts;
  int calls = 0;
  opts.on_round = [&](const PipelineState&, const RoundReport&) { return ++calls < 3; };
  CHECK(run(s2, cfg, *gen, *judge, opts).status == "stopped");
  CHECK(s2.round == 3);
}

TEST_CASE("run writes dataset, manifest and checkpoint") {
  testutil::TempDir dir;
  const auto cfg = small_config(40);
  auto gen = mock_teacher();
  auto judge = mock_teacher();
  auto s = make_initial_state(mini_pool(), cfg);
  RunOptions opts;
  opts.dataset_path = dir.file("nested/out/data.jsonl");
  opts.manifest_path = dir.file("nested/out/manifest.json");
  opts.checkpoint_path = dir.file("nested/state.ckpt");
  const auto m = run(s, cfg, *gen, *judge, opts);
  CHECK(m.status == "complete");
  CHECK(read_pairs(opts.dataset_path) == s.accepted);
  const auto doc = json::parse(testutil::read_file(opts.manifest_path));
  CHECK(doc["accepted"] == 40);
  CHECK(doc["rounds"] == s.round);
  CHECK(doc["pool_size"] == 60);
  const auto resumed = resume(opts.checkpoint_path);
  CHECK(resumed.accepted == s.accepted);
  CHECK(resumed.counters == s.counters);
}

TEST_CASE("manifest fractions and acceptance rate") {
  PipelineState s;
  s.counters.candidates = 10;
  s.counters.errored = 2;
  s.counters.accepted = 4;
  s.counters.deferred = 2;
  s.counters.rejected = 2;
  s.counters.accepted_per_complexity = {2, 1, 1};
  const auto doc = build_manifest(s, small_config(10), "complete");
  CHECK(doc["acceptance_rate"].get<double>() == doctest::Approx(0.75));
  CHECK(doc["per_complexity"]["basic"].get<double>() == 0.5);
  CHECK(doc["per_task_type"]["generation"].get<double>() == 0.0);
  CHECK(doc["per_category"].size() == 10);
}

TEST_CASE("each mock marker triggers its filter branch") {
  struct Case {
    std::string_view marker;
    std::string_view criterion;
    std::string_view reason;
  };
  const Case cases[] = {
      {m::kMarkerGrammar, "language", reason::kGrammar},
      {m::kMarkerEnglish, "language", reason::kWordRatio},
      {m::kMarkerBias, "cultural", reason::kReligiousBias},
      {m::kMarkerRegional, "cultural", reason::kRegionalBias},
      {m::kMarkerGender, "cultural", reason::kGenderBias},
      {m::kMarkerPolitical, "cultural", reason::kPoliticalBias},
      {m::kMarkerShort, "quality", reason::kTooShort},
      {m::kMarkerIncoherent, "quality", reason::kCoherence},
      {m::kMarkerFalse, "quality", reason::kNotFactual},
      {m::kMarkerUnformatted, "quality", reason::kBadFormat},
      {m::kMarkerCopy, "novelty", reason::kTooSimilar},
      {m::kMarkerRepetitive, "novelty", reason::kLowDiversity},
  };
  for (const auto& c : cases) {
    CAPTURE(c.reason);
    const auto cfg = small_config(100);
    auto gen = mock_teacher();
    auto judge = mock_teacher();
    auto s = make_initial_state(marked_pool(c.marker), cfg);
    const auto report = run_round(s, cfg, *gen, *judge);
    CHECK(report.accepted == 0);
    CHECK(report.rejected == report.candidates);
    CHECK(report.reasons.count(std::string(c.reason)) == 1);
    CHECK(s.counters.rejected_by_reason[std::string(c.reason)] > 0);
    CHECK(s.counters.rejected_by_criterion.count(std::string(c.criterion)) == 1);
    check_conservation(s, 8);
  }
}

TEST_CASE("duplicate responses are accepted once per category") {
  const auto cfg = small_config(100);
  auto gen = mock_teacher();
  auto judge = mock_teacher();
  auto s = make_initial_state(marked_pool(m::kMarkerDuplicate), cfg);
  run_round(s, cfg, *gen, *judge);
  CHECK(s.counters.rejected_by_reason[std::string(reason::kDuplicateResponse)] > 0);
  // One accepted pair per task type at most: drafts depend only on the task type.
  CHECK(s.accepted.size() <= 3);
}

TEST_CASE("garbled and unstable judges") {
  const auto cfg = small_config(100);
  auto gen = mock_teacher();
  auto judge = mock_teacher();
  auto s = make_initial_state(marked_pool(m::kMarkerGarbled), cfg);
  const auto report = run_round(s, cfg, *gen, *judge);
  CHECK(report.errored == report.candidates);
  CHECK(s.counters.errored == report.candidates);

  auto s2 = make_initial_state(marked_pool(m::kMarkerUnstable), cfg);
  const auto r2 = run_round(s2, cfg, *gen, *judge);
  CHECK(r2.errored == 0);
  CHECK(r2.accepted > 0);
}

TEST_CASE("an outage aborts the run with backend_unreachable") {
  const auto cfg = small_config(100);
  auto gen = mock_teacher();
  auto judge = mock_teacher();
  auto s = make_initial_state(marked_pool(m::kMarkerOutage), cfg);
  try {
    run(s, cfg, *gen, *judge);
    FAIL("expected backend_unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::backend_unreachable);
  }
  CHECK(s.round == 0);
  CHECK(s.counters.failed_rounds == static_cast<std::size_t>(cfg.max_failed_rounds));
}

TEST_CASE("accepted complexity mix stays inside the quota") {
  const auto cfg = small_config(200);
  auto gen = mock_teacher();
  auto judge = mock_teacher();
  auto s = make_initial_state(mini_pool(), cfg);
  CHECK(run(s, cfg, *gen, *judge).status == "complete");
  for (std::size_t b = 0; b < 3; ++b) {
    const double share = static_cast<double>(s.counters.accepted_per_complexity[b]) / 200.0;
    CHECK(std::abs(share - cfg.complexity_targets[b]) <= cfg.complexity_tolerance + 1e-9);
    const double type_share = static_cast<double>(s.counters.accepted_per_task_type[b]) / 200.0;
    CHECK(std::abs(type_share - 1.0 / 3) <= cfg.task_type_tolerance + 1e-9);
  }
  check_conservation(s, 20);
}
