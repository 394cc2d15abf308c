#include "bninstruct/eval.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "bninstruct/unicode.hpp"

namespace bninstruct {

std::string to_string(const Grader& g) {
  switch (g.kind) {
    case GraderKind::exact_match: return "exact_match";
    case GraderKind::contains: return "contains";
    case GraderKind::plugin: return "plugin:" + g.plugin;
  }
  return "exact_match";
}

Grader parse_grader(std::string_view s) {
  if (s == "exact_match") return {GraderKind::exact_match, {}};
  if (s == "contains") return {GraderKind::contains, {}};
  constexpr std::string_view prefix = "plugin:";
  if (s.substr(0, prefix.size()) == prefix && s.size() > prefix.size()) {
    return {GraderKind::plugin, std::string(s.substr(prefix.size()))};
  }
  throw Error(ErrorCode::parse_error, "unknown grader \"" + std::string(s) + "\"");
}

double pass_at_1(std::span<const EvalResult> results) {
  if (results.empty()) throw Error(ErrorCode::empty_results, "no results to score");
  std::size_t correct = 0;
  for (const auto& r : results) correct += r.correct ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(results.size());
}

std::string normalize_answer(std::string_view s) {
  auto text = decode_utf8(normalize_text(s));
  while (!text.empty() &&
         (text.back() == kDanda || text.back() == U'.' || is_space(text.back()))) {
    text.pop_back();
  }
  return encode_utf8(text);
}

void GraderRegistry::add(const std::string& name, GraderPlugin plugin) {
  plugins_[name] = std::move(plugin);
}

const GraderPlugin& GraderRegistry::get(const std::string& name) const {
  auto it = plugins_.find(name);
  if (it == plugins_.end()) {
    throw Error(ErrorCode::precondition_violation, "no grader plugin named \"" + name + "\"");
  }
  return it->second;
}

bool grade(std::string_view output, const BenchmarkItem& item, const GraderRegistry& registry) {
  switch (item.grader.kind) {
    case GraderKind::exact_match:
      return normalize_answer(output) == normalize_answer(item.expected);
    case GraderKind::contains: {
      const auto want = normalize_answer(item.expected);
      return !want.empty() && normalize_answer(output).find(want) != std::string::npos;
    }
    case GraderKind::plugin:
      return registry.get(item.grader.plugin)(output, item);
  }
  return false;
}

std::string TeacherClient::answer(const std::string& prompt) {
  std::vector<ChatMessage> messages;
  if (!system_.empty()) messages.push_back({"system", system_});
  messages.push_back({"user", prompt});
  return teacher_.ask(messages);
}

EvalReport evaluate(ModelClient& client, std::span<const BenchmarkItem> items, int concurrency,
                    const GraderRegistry& registry) {
  if (items.empty()) throw Error(ErrorCode::precondition_violation, "no benchmark items");
  if (concurrency < 1) throw Error(ErrorCode::precondition_violation, "concurrency must be >= 1");
  for (const auto& item : items) {
    if (item.grader.kind == GraderKind::plugin) registry.get(item.grader.plugin);
  }

  EvalReport report;
  report.results.resize(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      const auto& item = items[i];
      auto& r = report.results[i];
      r.item_id = item.id;
      const auto start = std::chrono::steady_clock::now();
      try {
        r.model_output = client.answer(item.prompt);
      } catch (const std::exception& e) {
        r.error = e.what();
      } catch (...) {
        r.error = "unknown failure";
      }
      r.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (r.error) {
        spdlog::warn("item {} failed: {}", item.id, *r.error);
        continue;
      }
      try {
        r.correct = grade(r.model_output, item, registry);
      } catch (const std::exception& e) {
        r.error = std::string("grader: ") + e.what();
        spdlog::warn("item {} could not be graded: {}", item.id, *r.error);
      }
    }
  };
  {
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(concurrency), items.size());
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }

  for (const auto& r : report.results) report.errored += r.error ? 1 : 0;
  if (report.errored == items.size()) {
    throw Error(ErrorCode::all_requests_failed,
                "all " + std::to_string(items.size()) + " items failed; first: " +
                    report.results.front().error.value_or(""));
  }
  report.pass_at_1 = pass_at_1(report.results);
  return report;
}

json to_json(const BenchmarkItem& item) {
  return json{{"id", item.id},
              {"prompt", item.prompt},
              {"expected", item.expected},
              {"grader", to_string(item.grader)}};
}

BenchmarkItem benchmark_item_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse_error, "benchmark item must be an object");
  BenchmarkItem item;
  try {
    item.id = j.at("id").get<std::string>();
    item.prompt = j.at("prompt").get<std::string>();
    if (j.contains("expected")) item.expected = j.at("expected").get<std::string>();
    if (j.contains("grader")) item.grader = parse_grader(j.at("grader").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, e.what());
  }
  if (item.id.empty()) throw Error(ErrorCode::parse_error, "item id is empty");
  if (item.grader.kind != GraderKind::plugin && normalize_answer(item.expected).empty()) {
    throw Error(ErrorCode::parse_error,
                "item " + item.id + ": expected answer is empty for " + to_string(item.grader));
  }
  return item;
}

std::vector<BenchmarkItem> load_benchmark(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  std::vector<BenchmarkItem> items;
  std::set<std::string> ids;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (trim(line).empty()) continue;
    const auto where = path + ":" + std::to_string(lineno);
    BenchmarkItem item;
    try {
      item = benchmark_item_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse_error, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.detail());
    }
    if (!ids.insert(item.id).second) {
      throw Error(ErrorCode::duplicate_id, where + ": item id " + item.id + " repeats");
    }
    items.push_back(std::move(item));
  }
  return items;
}

json to_json(const EvalResult& r) {
  json j{{"item_id", r.item_id},
         {"model_output", r.model_output},
         {"correct", r.correct},
         {"latency", r.latency}};
  if (r.error) j["error"] = *r.error;
  return j;
}

void write_results(const std::string& path, std::span<const EvalResult> results) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  for (const auto& r : results) out << to_json(r).dump() << '\n';
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

json summary_json(const std::string& benchmark, const EvalReport& report) {
  return json{{"benchmark", benchmark},
              {"n", report.results.size()},
              {"pass_at_1", report.pass_at_1}};
}

}  // namespace bninstruct
