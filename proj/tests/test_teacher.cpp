#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "bninstruct/mock_teacher.hpp"
#include "bninstruct/prompts.hpp"
#include "bninstruct/teacher.hpp"
#include "support/util.hpp"

using namespace bninstruct;
using testutil::FakeTransport;

namespace {

std::shared_ptr<FakeTransport> fake(FakeTransport::Handler h) {
  return std::make_shared<FakeTransport>(std::move(h));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::io_error;
}

std::vector<SeedTask> mini_seeds(std::size_t n) {
  std::vector<SeedTask> seeds;
  for (std::size_t i = 0; i < n; ++i) {
    seeds.push_back({"s" + std::to_string(i), "বীজ প্রশ্ন নম্বর " + std::to_string(i),
                     kAllCategories[i % 10], Complexity::basic, Origin::human});
  }
  return seeds;
}

Teacher mock_teacher(std::uint64_t seed = 1) {
  return Teacher(testutil::fast_config(), std::make_shared<mock::MockTransport>(mock::MockOptions{seed, {0.7, 0.9, 0.8}}));
}

std::string verdict_json(double grammar, double bias, double coherence) {
  JudgeVerdict v{grammar, bias, coherence, true, true, true, true, true, TaskType::generation,
                 Complexity::advanced};
  return to_json(v).dump();
}

}  // namespace

TEST_CASE("teacher config validation and strict JSON") {
  TeacherConfig c;
  CHECK_NOTHROW(validate(c));
  c.max_in_flight = 0;
  CHECK(code_of([&] { validate(c); }) == ErrorCode::config_error);
  c = {};
  c.timeout = 0;
  CHECK(code_of([&] { validate(c); }) == ErrorCode::config_error);
  c = {};
  c.max_retries = -1;
  CHECK_THROWS_AS(validate(c), Error);

  const auto j = json{{"endpoint", "http://x/v1"}, {"model_name", "m"}, {"max_in_flight", 2}};
  const auto parsed = teacher_config_from_json(j);
  CHECK(parsed.endpoint == "http://x/v1");
  CHECK(parsed.max_in_flight == 2);
  CHECK(parsed.timeout == 60.0);
  CHECK(code_of([] { teacher_config_from_json(json{{"endpoint", "x"}, {"modle", "m"}}); }) ==
        ErrorCode::config_error);
}

TEST_CASE("wire format") {
  const ChatRequest r{"m1", {{"system", "s"}, {"user", "u"}}, 0.7};
  CHECK(to_json(r).dump() ==
        R"({"model":"m1","messages":[{"role":"system","content":"s"},{"role":"user","content":"u"}],"temperature":0.7})");
  CHECK(parse_chat_reply(R"({"choices":[{"message":{"role":"assistant","content":"হ্যাঁ"}}]})") == "হ্যাঁ");
  CHECK(code_of([] { parse_chat_reply("{}"); }) == ErrorCode::malformed_reply);
  CHECK(code_of([] { parse_chat_reply("not json"); }) == ErrorCode::malformed_reply);
  CHECK(code_of([] { parse_chat_reply(R"({"choices":[{"message":{"content":7}}]})"); }) ==
        ErrorCode::malformed_reply);
}

TEST_CASE("retry policy") {
  CHECK(is_retryable_status(0));
  CHECK(is_retryable_status(429));
  CHECK(is_retryable_status(500));
  CHECK(is_retryable_status(503));
  CHECK_FALSE(is_retryable_status(400));
  CHECK_FALSE(is_retryable_status(401));
  CHECK_FALSE(is_retryable_status(404));

  SUBCASE("transient failures are retried") {
    auto t = fake([](const ChatRequest&, std::size_t n) -> std::string {
      if (n < 2) throw TransportError(503, "busy");
      return "ok";
    });
    Teacher teacher(testutil::fast_config(3), t);
    CHECK(teacher.ask({{"user", "x"}}) == "ok");
    CHECK(t->calls() == 3);
    CHECK(teacher.requests_sent() == 3);
  }
  SUBCASE("client errors are not retried") {
    auto t = fake([](const ChatRequest&, std::size_t) -> std::string {
      throw TransportError(400, "bad request");
    });
    Teacher teacher(testutil::fast_config(3), t);
    CHECK(code_of([&] { teacher.ask({{"user", "x"}}); }) == ErrorCode::backend_error);
    CHECK(t->calls() == 1);
  }
  SUBCASE("exhausted retries map to the last status") {
    for (auto [status, code] : {std::pair{0, ErrorCode::backend_unreachable},
                                std::pair{429, ErrorCode::rate_limited},
                                std::pair{502, ErrorCode::backend_error}}) {
      auto t = fake([status = status](const ChatRequest&, std::size_t) -> std::string {
        throw TransportError(status, "down");
      });
      Teacher teacher(testutil::fast_config(2), t);
      CHECK(code_of([&] { teacher.ask({{"user", "x"}}); }) == code);
      CHECK(t->calls() == 3);
    }
  }
  SUBCASE("backoff doubles between attempts") {
    auto t = fake([](const ChatRequest&, std::size_t) -> std::string {
      throw TransportError(0, "refused");
    });
    auto cfg = testutil::fast_config(3);
    cfg.backoff_initial = 0.02;
    cfg.backoff_max = 1.0;
    Teacher teacher(cfg, t);
    const auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(teacher.ask({{"user", "x"}}), Error);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(secs >= 0.02 + 0.04 + 0.08 - 1e-3);
    CHECK(secs < 2.0);
  }
}

TEST_CASE("in-flight requests never exceed max_in_flight") {
  std::atomic<int> current{0}, peak{0};
  auto t = fake([&](const ChatRequest&, std::size_t) -> std::string {
    const int now = ++current;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --current;
    return "ok";
  });
  auto cfg = testutil::fast_config(3);
  cfg.max_in_flight = 3;
  Teacher teacher(cfg, t);
  {
    std::vector<std::jthread> threads;
    for (int i = 0; i < 16; ++i) {
      threads.emplace_back([&] {
        for (int j = 0; j < 4; ++j) teacher.ask({{"user", "x"}});
      });
    }
  }
  CHECK(peak.load() <= 3);
  CHECK(peak.load() >= 2);
}

TEST_CASE("numbered list parsing") {
  const auto items = parse_numbered_list(
      "এখানে তালিকা:\n1. প্রথম\n২) দ্বিতীয়\n 3: তৃতীয় \n৪। চতুর্থ\n5 নয়\n6.\n10. দশম\n");
  CHECK(items == std::vector<std::string>{"প্রথম", "দ্বিতীয়", "তৃতীয়", "চতুর্থ", "দশম"});
  CHECK(parse_numbered_list("কোনো তালিকা নেই").empty());
}

TEST_CASE("generate_instructions with the mock") {
  auto teacher = mock_teacher();
  GenerationRequest req{mini_seeds(8), Category::c7, 20};
  const auto out = generate_instructions(teacher, req, 4);
  CHECK(out.size() == 20);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].category == Category::c7);
    CHECK(out[i].round == 4);
    CHECK(out[i].id == make_id(4, i));
    CHECK_FALSE(out[i].text.empty());
  }
  auto again = mock_teacher();
  const auto out2 = generate_instructions(again, req, 4);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].text == out2[i].text);

  req.batch_size = 1;
  CHECK(generate_instructions(teacher, req, 4).size() == 1);

  req.seeds.clear();
  CHECK(code_of([&] { generate_instructions(teacher, req, 4); }) == ErrorCode::precondition_violation);
}

TEST_CASE("generation prompt embeds every seed and the category") {
  auto t = fake([](const ChatRequest&, std::size_t) -> std::string { return "1. একটি\n2. দুটি\n"; });
  Teacher teacher(testutil::fast_config(), t);
  GenerationRequest req{mini_seeds(8), Category::c5, 20};
  const auto out = generate_instructions(teacher, req, 1);
  CHECK(out.size() == 2);
  const auto& user = t->requests().front().messages.back().content;
  for (const auto& s : req.seeds) CHECK(user.find(s.text) != std::string::npos);
  CHECK(user.find("c5") != std::string::npos);
  CHECK(user.find(std::string(category_title(Category::c5))) != std::string::npos);
  CHECK(prompts::extract_all_tagged(user, "seed").size() == 8);
}

TEST_CASE("unparseable generator reply is malformed") {
  auto t = fake([](const ChatRequest&, std::size_t) -> std::string { return "দুঃখিত"; });
  Teacher teacher(testutil::fast_config(), t);
  GenerationRequest req{mini_seeds(2), Category::c1, 5};
  CHECK(code_of([&] { generate_instructions(teacher, req, 1); }) == ErrorCode::malformed_reply);
}

TEST_CASE("unreachable generator endpoint") {
  auto t = fake([](const ChatRequest&, std::size_t) -> std::string {
    throw TransportError(0, "connection refused");
  });
  Teacher teacher(testutil::fast_config(2), t);
  GenerationRequest req{mini_seeds(8), Category::c1, 20};
  CHECK(code_of([&] { generate_instructions(teacher, req, 1); }) == ErrorCode::backend_unreachable);
  CHECK(t->calls() == 3);
}

TEST_CASE("task classification") {
  auto judge = mock_teacher();
  InstructionCandidate c{"r1-0", "নিচের পর্যালোচনাটি ইতিবাচক না নেতিবাচক তা শ্রেণিবদ্ধ করুন।", Category::c9, 1, {}};
  CHECK(classify_task(judge, c) == TaskType::classification);
  c.text = "বর্ষাকাল নিয়ে একটি কবিতা লিখুন।";
  CHECK(classify_task(judge, c) == TaskType::generation);
  c.text = "গ্রামের জীবন সম্পর্কে আপনার মতামত ব্যাখ্যা করুন।";
  CHECK(classify_task(judge, c) == TaskType::open_ended);
  c.text = "   ";
  CHECK(code_of([&] { classify_task(judge, c); }) == ErrorCode::precondition_violation);

  CHECK(parse_task_label(" \"Open-Ended\". ") == TaskType::open_ended);
  CHECK(parse_task_label("generation") == TaskType::generation);
  CHECK_FALSE(parse_task_label("poem"));
}

TEST_CASE("classification re-asks exactly once") {
  auto t = fake([](const ChatRequest& r, std::size_t) -> std::string {
    return r.messages.size() > 2 ? "classification" : "I think it is a classification task";
  });
  Teacher judge(testutil::fast_config(), t);
  InstructionCandidate c{"r1-0", "কিছু", Category::c1, 1, {}};
  CHECK(classify_task(judge, c) == TaskType::classification);
  CHECK(t->calls() == 2);

  auto bad = fake([](const ChatRequest&, std::size_t) -> std::string { return "??"; });
  Teacher judge2(testutil::fast_config(), bad);
  CHECK(code_of([&] { classify_task(judge2, c); }) == ErrorCode::malformed_reply);
  CHECK(bad->calls() == 2);
}

TEST_CASE("drafts carry the judge's coherence and the best is kept") {
  auto gen = mock_teacher();
  auto judge = mock_teacher();
  InstructionCandidate c{"r1-0", "বর্ষাকাল নিয়ে একটি কবিতা লিখুন।", Category::c5, 1, TaskType::generation};
  const auto drafts = draft_responses(gen, judge, c, TaskType::generation, 3);
  REQUIRE(drafts.size() == 3);
  CHECK(drafts[0].coherence == 0.7);
  CHECK(drafts[1].coherence == 0.9);
  CHECK(drafts[2].coherence == 0.8);
  for (const auto& d : drafts) REQUIRE(d.verdict);
  CHECK(&select_draft(drafts) == &drafts[1]);
  CHECK(draft_responses(gen, judge, c, TaskType::generation, 1).size() == 1);

  auto empty = fake([](const ChatRequest&, std::size_t) -> std::string { return "  "; });
  Teacher blank(testutil::fast_config(), empty);
  CHECK(code_of([&] { draft_responses(blank, judge, c, TaskType::generation, 2); }) ==
        ErrorCode::malformed_reply);
}

TEST_CASE("select_draft") {
  std::vector<ResponseDraft> d{{"a", 0.8, {}}, {"b", 0.8, {}}};
  CHECK(select_draft(d).text == "a");
  std::vector<ResponseDraft> one{{"x", 0.1, {}}};
  CHECK(select_draft(one).text == "x");
  CHECK(code_of([] { select_draft(std::vector<ResponseDraft>{}); }) == ErrorCode::empty_drafts);
}

TEST_CASE("judge scores") {
  auto judge = mock_teacher();
  const auto v = judge_scores(judge, "গ্রামের জীবন সম্পর্কে লিখুন।", "গ্রামের জীবন শান্ত।");
  CHECK(v.grammar == 0.9);
  CHECK(v.bias == 0.0);
  CHECK(v.coherence == 0.85);
  CHECK(v.factual);
  CHECK(v.format_ok);
  CHECK(v.regional_ok);
  CHECK(v.gender_ok);
  CHECK(v.political_ok);

  const std::string biased = "গ্রামের জীবন সম্পর্কে লিখুন " + std::string(mock::kMarkerBias) + "।";
  CHECK(judge_scores(judge, biased, "উত্তর").bias == 0.5);
  CHECK(code_of([&] { judge_scores(judge, "প্রশ্ন", " "); }) == ErrorCode::precondition_violation);
}

TEST_CASE("judge replies are clamped, unfenced, and re-asked once") {
  auto t = fake([](const ChatRequest&, std::size_t) -> std::string {
    return "```json\n" + verdict_json(1.4, -3.0, 0.5) + "\n```";
  });
  Teacher judge(testutil::fast_config(), t);
  const auto v = judge_scores(judge, "প্রশ্ন", "উত্তর");
  CHECK(v.grammar == 1.0);
  CHECK(v.bias == -1.0);
  CHECK(v.coherence == 0.5);
  CHECK(v.complexity == Complexity::advanced);
  CHECK(t->calls() == 1);

  auto flaky = fake([](const ChatRequest& r, std::size_t) -> std::string {
    return r.messages.size() > 2 ? verdict_json(0.9, 0.0, 0.9) : "score: high";
  });
  Teacher judge2(testutil::fast_config(), flaky);
  CHECK(judge_scores(judge2, "প্রশ্ন", "উত্তর").coherence == 0.9);
  CHECK(flaky->calls() == 2);

  auto broken = fake([](const ChatRequest&, std::size_t) -> std::string { return R"({"grammar":0.9})"; });
  Teacher judge3(testutil::fast_config(), broken);
  CHECK(code_of([&] { judge_scores(judge3, "প্রশ্ন", "উত্তর"); }) == ErrorCode::malformed_reply);
  CHECK(broken->calls() == 2);
}

TEST_CASE("http transport against a local server") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string seen_auth, seen_body;
  std::mutex mu;
  server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    const int n = hits++;
    {
      std::lock_guard lock(mu);
      seen_auth = req.get_header_value("Authorization");
      seen_body = req.body;
    }
    if (n == 0) {
      res.status = 503;
      res.set_content("busy", "text/plain");
      return;
    }
    const auto in = json::parse(req.body);
    json reply{{"choices", json::array({{{"message", {{"role", "assistant"},
                                                      {"content", in["messages"].back()["content"]}}}}})}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/v1/missing", [](const httplib::Request&, httplib::Response& res) { res.status = 404; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("BNI_TEST_KEY", "secret-token", 1);
  auto cfg = testutil::fast_config(2);
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat";
  cfg.api_key_env = "BNI_TEST_KEY";
  cfg.timeout = 5;
  Teacher teacher(cfg, std::make_shared<HttpTransport>(cfg));
  CHECK(teacher.ask({{"user", "প্রতিধ্বনি"}}) == "প্রতিধ্বনি");
  CHECK(hits.load() == 2);
  {
    std::lock_guard lock(mu);
    CHECK(seen_auth == "Bearer secret-token");
    const auto body = json::parse(seen_body);
    CHECK(body["model"] == "test");
    CHECK(body["messages"][0]["role"] == "user");
  }

  auto missing = cfg;
  missing.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/missing";
  Teacher t404(missing, std::make_shared<HttpTransport>(missing));
  CHECK(code_of([&] { t404.ask({{"user", "x"}}); }) == ErrorCode::backend_error);

  server.stop();
  th.join();

  Teacher down(cfg, std::make_shared<HttpTransport>(cfg));
  CHECK(code_of([&] { down.ask({{"user", "x"}}); }) == ErrorCode::backend_unreachable);

  auto bad = cfg;
  bad.endpoint = "no-scheme";
  CHECK(code_of([&] { HttpTransport h(bad); }) == ErrorCode::config_error);
}
