#include <doctest.h>

#include "bninstruct/core.hpp"
#include "support/util.hpp"

using namespace bninstruct;

namespace {

InstructPair good_pair() {
  InstructPair p;
  p.id = "r1-0";
  p.instruction = "বর্ষাকাল নিয়ে একটি কবিতা লিখুন।";
  p.response = "আকাশ ভরা মেঘ।";
  p.task_type = TaskType::generation;
  p.category = Category::c5;
  p.complexity = Complexity::basic;
  p.round = 1;
  p.verdict = {0.9, 0.0, 0.85, true, true, true, true, true, TaskType::generation,
               Complexity::basic};
  p.report = FilterReport::make(true, true, true, true, {}, {{"grammar", 0.9}});
  return p;
}

}  // namespace

TEST_CASE("error carries its code in what()") {
  Error e(ErrorCode::duplicate_id, "seed s1");
  CHECK(e.code() == ErrorCode::duplicate_id);
  CHECK(e.detail() == "seed s1");
  CHECK(std::string(e.what()) == "duplicate_id: seed s1");
  CHECK(to_string(ErrorCode::all_requests_failed) == "all_requests_failed");
}

TEST_CASE("enum names round-trip") {
  for (auto c : kAllCategories) CHECK(parse_category(to_string(c)) == c);
  CHECK(to_string(Category::c10) == "c10");
  CHECK_FALSE(parse_category("c11"));
  CHECK_FALSE(parse_category("C1"));
  for (auto c : kAllComplexities) CHECK(parse_complexity(to_string(c)) == c);
  for (auto t : kAllTaskTypes) CHECK(parse_task_type(to_string(t)) == t);
  CHECK(parse_origin("bootstrapped") == Origin::bootstrapped);
  CHECK_FALSE(parse_origin("machine"));
  CHECK(category_index(Category::c1) == 0);
  CHECK(category_index(Category::c10) == 9);
}

TEST_CASE("filter report verdict is the conjunction of its flags") {
  for (int mask = 0; mask < 16; ++mask) {
    auto r = FilterReport::make(mask & 1, mask & 2, mask & 4, mask & 8, {}, {});
    CHECK(r.accepted == (mask == 15));
  }
}

TEST_CASE("validate_pair flags each broken invariant") {
  CHECK(validate_pair(good_pair()).empty());

  auto p = good_pair();
  p.instruction = "  \n";
  CHECK(validate_pair(p) == std::vector<std::string>{"empty_instruction"});

  p = good_pair();
  p.response = "";
  CHECK(validate_pair(p) == std::vector<std::string>{"empty_response"});

  p = good_pair();
  p.verdict.bias = -1.5;
  CHECK(validate_pair(p) == std::vector<std::string>{"score_out_of_range"});
  p.verdict.bias = -1.0;
  CHECK(validate_pair(p).empty());

  p = good_pair();
  p.report.quality_ok = false;
  auto v = validate_pair(p);
  CHECK(std::find(v.begin(), v.end(), "conjunction_violated") != v.end());
  CHECK(std::find(v.begin(), v.end(), "missing_reason") != v.end());

  p = good_pair();
  p.report = FilterReport::make(true, true, false, true, {"too_short"}, {});
  CHECK(validate_pair(p).empty());
  p.report = FilterReport::make(true, true, false, true, {"too_similar"}, {});
  CHECK(validate_pair(p) == std::vector<std::string>{"missing_reason"});
}

TEST_CASE("make_id") { CHECK(make_id(12, 3) == "r12-3"); }

TEST_CASE("pair JSON round-trips and keeps key order") {
  const auto p = good_pair();
  const auto j = to_json(p);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"id", "instruction", "response", "task_type", "category",
                                         "complexity", "round", "report", "verdict"});
  CHECK(pair_from_json(j) == p);
  CHECK(pair_from_json(json::parse(j.dump())) == p);
}

TEST_CASE("seed records are checked strictly") {
  auto j = json::parse(R"({"id":"s1","text":"একটি প্রশ্ন","category":"c3","complexity":"advanced"})");
  auto t = seed_from_json(j);
  CHECK(t.origin == Origin::human);
  CHECK(t.category == Category::c3);

  j["text"] = "   ";
  CHECK_THROWS_AS(seed_from_json(j), Error);
  j["text"] = "ঠিক";
  j["category"] = "c0";
  CHECK_THROWS_AS(seed_from_json(j), Error);
  j["category"] = "c1";
  j.erase("complexity");
  try {
    seed_from_json(j);
    FAIL("expected parse_error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
  }
}

TEST_CASE("pairs survive a JSONL write and read byte for byte") {
  testutil::TempDir dir;
  std::vector<InstructPair> pairs{good_pair(), good_pair()};
  pairs[1].id = "r1-1";
  pairs[1].verdict.coherence = 0.1 + 0.2;  // a value that needs full precision
  write_pairs(dir.file("a.jsonl"), pairs);
  const auto back = read_pairs(dir.file("a.jsonl"));
  CHECK(back == pairs);
  write_pairs(dir.file("b.jsonl"), back);
  CHECK(testutil::read_file(dir.file("a.jsonl")) == testutil::read_file(dir.file("b.jsonl")));
}

TEST_CASE("read_pairs reports io and parse errors") {
  testutil::TempDir dir;
  CHECK_THROWS_AS(read_pairs(dir.file("missing.jsonl")), Error);
  testutil::write_file(dir.file("bad.jsonl"), "{not json}\n");
  try {
    read_pairs(dir.file("bad.jsonl"));
    FAIL("expected parse_error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
  }
}
