#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bninstruct/core.hpp"
#include "bninstruct/teacher.hpp"

namespace bninstruct {

enum class GraderKind { exact_match, contains, plugin };

struct Grader {
  GraderKind kind = GraderKind::exact_match;
  std::string plugin;  // set when kind == plugin

  bool operator==(const Grader&) const = default;
};

/// "exact_match", "contains" or "plugin:<name>".
std::string to_string(const Grader& g);
Grader parse_grader(std::string_view s);  // throws parse_error

struct BenchmarkItem {
  std::string id;
  std::string prompt;
  std::string expected;
  Grader grader;
};

struct EvalResult {
  std::string item_id;
  std::string model_output;
  bool correct = false;
  double latency = 0.0;  // seconds
  std::optional<std::string> error;
};

/// Throws Error(empty_results).
double pass_at_1(std::span<const EvalResult> results);

/// NFC, trim, collapse internal whitespace, then drop terminal dandas and
/// periods.
std::string normalize_answer(std::string_view s);

// A plugin sees the raw output and the item; it gets no normalization.
using GraderPlugin = std::function<bool(std::string_view output, const BenchmarkItem& item)>;

class GraderRegistry {
 public:
  void add(const std::string& name, GraderPlugin plugin);
  bool contains(const std::string& name) const { return plugins_.count(name) != 0; }
  const GraderPlugin& get(const std::string& name) const;  // throws precondition_violation

 private:
  std::map<std::string, GraderPlugin> plugins_;
};

bool grade(std::string_view output, const BenchmarkItem& item, const GraderRegistry& registry = {});

class ModelClient {
 public:
  virtual ~ModelClient() = default;
  /// One sample for one prompt. Any exception counts as a failed item.
  virtual std::string answer(const std::string& prompt) = 0;
};

class TeacherClient : public ModelClient {
 public:
  explicit TeacherClient(Teacher& teacher, std::string system_prompt = {})
      : teacher_(teacher), system_(std::move(system_prompt)) {}
  std::string answer(const std::string& prompt) override;

 private:
  Teacher& teacher_;
  std::string system_;
};

struct EvalReport {
  std::vector<EvalResult> results;  // same order as the items
  double pass_at_1 = 0.0;
  std::size_t errored = 0;
};

/// One call per item, up to `concurrency` at a time. Failed items are graded
/// incorrect and logged. Throws all_requests_failed when every item failed,
/// precondition_violation for empty items, bad concurrency or an unregistered
/// plugin grader.
EvalReport evaluate(ModelClient& client, std::span<const BenchmarkItem> items, int concurrency,
                    const GraderRegistry& registry = {});

json to_json(const BenchmarkItem& item);
BenchmarkItem benchmark_item_from_json(const json& j);  // throws parse_error
/// JSONL; blank lines skipped. Throws io_error, parse_error, duplicate_id.
std::vector<BenchmarkItem> load_benchmark(const std::string& path);

json to_json(const EvalResult& result);
void write_results(const std::string& path, std::span<const EvalResult> results);
json summary_json(const std::string& benchmark, const EvalReport& report);

}  // namespace bninstruct
