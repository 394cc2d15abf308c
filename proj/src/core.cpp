#include "bninstruct/core.hpp"

#include <algorithm>
#include <fstream>

#include "bninstruct/unicode.hpp"

namespace bninstruct {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::duplicate_id: return "duplicate_id";
    case ErrorCode::empty_pool: return "empty_pool";
    case ErrorCode::insufficient_pool: return "insufficient_pool";
    case ErrorCode::rejected_pair: return "rejected_pair";
    case ErrorCode::backend_unreachable: return "backend_unreachable";
    case ErrorCode::rate_limited: return "rate_limited";
    case ErrorCode::backend_error: return "backend_error";
    case ErrorCode::malformed_reply: return "malformed_reply";
    case ErrorCode::precondition_violation: return "precondition_violation";
    case ErrorCode::empty_drafts: return "empty_drafts";
    case ErrorCode::no_words: return "no_words";
    case ErrorCode::empty_text: return "empty_text";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::max_rounds_exhausted: return "max_rounds_exhausted";
    case ErrorCode::schema_mismatch: return "schema_mismatch";
    case ErrorCode::corruption: return "corruption";
    case ErrorCode::encoding_error: return "encoding_error";
    case ErrorCode::empty_results: return "empty_results";
    case ErrorCode::all_requests_failed: return "all_requests_failed";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

std::string to_string(Category c) {
  return "c" + std::to_string(static_cast<int>(c));
}

std::optional<Category> parse_category(std::string_view s) {
  for (auto c : kAllCategories) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

std::string_view category_title(Category c) {
  switch (c) {
    case Category::c1: return "Cultural Knowledge and Heritage";
    case Category::c2: return "Academic Writing";
    case Category::c3: return "Mathematical Problem Solving";
    case Category::c4: return "Programming and Technical";
    case Category::c5: return "Creative Writing";
    case Category::c6: return "Scientific Explanation";
    case Category::c7: return "Business and Economics";
    case Category::c8: return "Social Issues Analysis";
    case Category::c9: return "Data Analysis and Statistics";
    case Category::c10: return "Language and Translation";
  }
  return "";
}

std::string_view to_string(Complexity c) {
  switch (c) {
    case Complexity::basic: return "basic";
    case Complexity::intermediate: return "intermediate";
    case Complexity::advanced: return "advanced";
  }
  return "";
}

std::optional<Complexity> parse_complexity(std::string_view s) {
  for (auto c : kAllComplexities) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

std::string_view to_string(TaskType t) {
  switch (t) {
    case TaskType::open_ended: return "open_ended";
    case TaskType::classification: return "classification";
    case TaskType::generation: return "generation";
  }
  return "";
}

std::optional<TaskType> parse_task_type(std::string_view s) {
  for (auto t : kAllTaskTypes) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

std::string_view to_string(Origin o) {
  return o == Origin::human ? "human" : "bootstrapped";
}

std::optional<Origin> parse_origin(std::string_view s) {
  if (s == "human") return Origin::human;
  if (s == "bootstrapped") return Origin::bootstrapped;
  return std::nullopt;
}

FilterReport FilterReport::make(bool language, bool cultural, bool quality, bool novelty,
                                std::vector<std::string> reasons,
                                std::map<std::string, double> measurements) {
  FilterReport r;
  r.language_ok = language;
  r.cultural_ok = cultural;
  r.quality_ok = quality;
  r.novelty_ok = novelty;
  r.accepted = language && cultural && quality && novelty;
  r.reasons = std::move(reasons);
  r.measurements = std::move(measurements);
  return r;
}

bool FilterReport::has_reason(std::string_view code) const {
  return std::find(reasons.begin(), reasons.end(), code) != reasons.end();
}

namespace {

enum class Criterion { language, cultural, quality, novelty, none };

Criterion criterion_of(std::string_view code) {
  using namespace reason;
  if (code == kNoWords || code == kWordRatio || code == kUnicode || code == kGrammar)
    return Criterion::language;
  if (code == kReligiousBias || code == kRegionalBias || code == kGenderBias ||
      code == kPoliticalBias)
    return Criterion::cultural;
  if (code == kTooShort || code == kCoherence || code == kNotFactual || code == kBadFormat)
    return Criterion::quality;
  if (code == kTooSimilar || code == kLowDiversity || code == kDuplicateResponse)
    return Criterion::novelty;
  return Criterion::none;
}

bool in_range(double x, double lo, double hi) { return x >= lo && x <= hi; }

}  // namespace

std::vector<std::string> validate_pair(const InstructPair& pair) {
  std::vector<std::string> out;
  if (trim(pair.instruction).empty()) out.emplace_back(violation::kEmptyInstruction);
  if (trim(pair.response).empty()) out.emplace_back(violation::kEmptyResponse);

  const auto& v = pair.verdict;
  if (!in_range(v.grammar, 0.0, 1.0) || !in_range(v.bias, -1.0, 1.0) ||
      !in_range(v.coherence, 0.0, 1.0)) {
    out.emplace_back(violation::kScoreOutOfRange);
  }

  const auto& r = pair.report;
  if (r.accepted != (r.language_ok && r.cultural_ok && r.quality_ok && r.novelty_ok)) {
    out.emplace_back(violation::kConjunction);
  }

  auto covered = [&](Criterion c) {
    return std::any_of(r.reasons.begin(), r.reasons.end(),
                       [&](const std::string& code) { return criterion_of(code) == c; });
  };
  if ((!r.language_ok && !covered(Criterion::language)) ||
      (!r.cultural_ok && !covered(Criterion::cultural)) ||
      (!r.quality_ok && !covered(Criterion::quality)) ||
      (!r.novelty_ok && !covered(Criterion::novelty))) {
    out.emplace_back(violation::kMissingReason);
  }
  return out;
}

std::string make_id(int round, std::size_t index) {
  return "r" + std::to_string(round) + "-" + std::to_string(index);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

[[noreturn]] void schema_fail(const std::string& what) {
  throw Error(ErrorCode::parse_error, what);
}

const json& field(const json& j, const char* key) {
  if (!j.is_object()) schema_fail("expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) schema_fail(std::string("missing field \"") + key + "\"");
  return *it;
}

std::string str_field(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) schema_fail(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

double num_field(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number()) schema_fail(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

bool bool_field(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_boolean()) schema_fail(std::string("field \"") + key + "\" must be a boolean");
  return v.get<bool>();
}

template <typename T, typename Parse>
T enum_field(const json& j, const char* key, Parse parse) {
  auto s = str_field(j, key);
  auto v = parse(s);
  if (!v) schema_fail(std::string("field \"") + key + "\" has invalid value \"" + s + "\"");
  return *v;
}

}  // namespace

json to_json(const SeedTask& t) {
  return json{{"id", t.id},
              {"text", t.text},
              {"category", to_string(t.category)},
              {"complexity", to_string(t.complexity)},
              {"origin", to_string(t.origin)}};
}

SeedTask seed_from_json(const json& j) {
  SeedTask t;
  t.id = str_field(j, "id");
  t.text = str_field(j, "text");
  t.category = enum_field<Category>(j, "category", parse_category);
  t.complexity = enum_field<Complexity>(j, "complexity", parse_complexity);
  if (j.contains("origin")) t.origin = enum_field<Origin>(j, "origin", parse_origin);
  if (t.id.empty()) schema_fail("field \"id\" must be non-empty");
  if (trim(t.text).empty()) schema_fail("field \"text\" is empty after trimming");
  return t;
}

json to_json(const JudgeVerdict& v) {
  return json{{"grammar", v.grammar},
              {"bias", v.bias},
              {"coherence", v.coherence},
              {"factual", v.factual},
              {"format_ok", v.format_ok},
              {"regional_ok", v.regional_ok},
              {"gender_ok", v.gender_ok},
              {"political_ok", v.political_ok},
              {"task_type", to_string(v.task_type)},
              {"complexity", to_string(v.complexity)}};
}

JudgeVerdict verdict_from_json(const json& j) {
  JudgeVerdict v;
  v.grammar = num_field(j, "grammar");
  v.bias = num_field(j, "bias");
  v.coherence = num_field(j, "coherence");
  v.factual = bool_field(j, "factual");
  v.format_ok = bool_field(j, "format_ok");
  v.regional_ok = bool_field(j, "regional_ok");
  v.gender_ok = bool_field(j, "gender_ok");
  v.political_ok = bool_field(j, "political_ok");
  v.task_type = enum_field<TaskType>(j, "task_type", parse_task_type);
  v.complexity = enum_field<Complexity>(j, "complexity", parse_complexity);
  return v;
}

json to_json(const FilterReport& r) {
  json m = json::object();
  for (const auto& [k, v] : r.measurements) m[k] = v;
  return json{{"language_ok", r.language_ok},
              {"cultural_ok", r.cultural_ok},
              {"quality_ok", r.quality_ok},
              {"novelty_ok", r.novelty_ok},
              {"accepted", r.accepted},
              {"reasons", r.reasons},
              {"measurements", m}};
}

FilterReport report_from_json(const json& j) {
  FilterReport r;
  r.language_ok = bool_field(j, "language_ok");
  r.cultural_ok = bool_field(j, "cultural_ok");
  r.quality_ok = bool_field(j, "quality_ok");
  r.novelty_ok = bool_field(j, "novelty_ok");
  r.accepted = bool_field(j, "accepted");
  const auto& reasons = field(j, "reasons");
  if (!reasons.is_array()) schema_fail("field \"reasons\" must be an array");
  for (const auto& x : reasons) {
    if (!x.is_string()) schema_fail("reason codes must be strings");
    r.reasons.push_back(x.get<std::string>());
  }
  const auto& m = field(j, "measurements");
  if (!m.is_object()) schema_fail("field \"measurements\" must be an object");
  for (const auto& [k, v] : m.items()) {
    if (!v.is_number()) schema_fail("measurement \"" + k + "\" must be a number");
    r.measurements[k] = v.get<double>();
  }
  return r;
}

json to_json(const InstructPair& p) {
  return json{{"id", p.id},
              {"instruction", p.instruction},
              {"response", p.response},
              {"task_type", to_string(p.task_type)},
              {"category", to_string(p.category)},
              {"complexity", to_string(p.complexity)},
              {"round", p.round},
              {"report", to_json(p.report)},
              {"verdict", to_json(p.verdict)}};
}

InstructPair pair_from_json(const json& j) {
  InstructPair p;
  p.id = str_field(j, "id");
  p.instruction = str_field(j, "instruction");
  p.response = str_field(j, "response");
  p.task_type = enum_field<TaskType>(j, "task_type", parse_task_type);
  p.category = enum_field<Category>(j, "category", parse_category);
  p.complexity = enum_field<Complexity>(j, "complexity", parse_complexity);
  const auto& round = field(j, "round");
  if (!round.is_number_integer()) schema_fail("field \"round\" must be an integer");
  p.round = round.get<int>();
  p.report = report_from_json(field(j, "report"));
  p.verdict = verdict_from_json(field(j, "verdict"));
  return p;
}

std::vector<InstructPair> read_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  std::vector<InstructPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      pairs.push_back(pair_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse_error,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(lineno) + ": " + e.detail());
    }
  }
  return pairs;
}

void write_pairs(const std::string& path, const std::vector<InstructPair>& pairs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  for (const auto& p : pairs) out << to_json(p).dump() << '\n';
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

}  // namespace bninstruct
