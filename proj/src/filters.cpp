#include "bninstruct/filters.hpp"

#include <algorithm>
#include <cmath>

#include "bninstruct/unicode.hpp"

namespace bninstruct {

int LengthPolicy::min_words(TaskType t) const {
  switch (t) {
    case TaskType::open_ended: return open_ended;
    case TaskType::classification: return classification;
    case TaskType::generation: return generation;
  }
  return open_ended;
}

json to_json(const Thresholds& t) {
  return json{{"word_ratio", t.word_ratio}, {"grammar", t.grammar},
              {"bias", t.bias},             {"coherence", t.coherence},
              {"similarity", t.similarity}, {"ttr", t.ttr}};
}

Thresholds thresholds_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::config_error, "thresholds must be an object");
  Thresholds t;
  try {
    for (const auto& [key, value] : j.items()) {
      const double x = value.get<double>();
      if (key == "word_ratio") t.word_ratio = x;
      else if (key == "grammar") t.grammar = x;
      else if (key == "bias") t.bias = x;
      else if (key == "coherence") t.coherence = x;
      else if (key == "similarity") t.similarity = x;
      else if (key == "ttr") t.ttr = x;
      else throw Error(ErrorCode::config_error, "unknown threshold \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("thresholds: ") + e.what());
  }
  return t;
}

json to_json(const LengthPolicy& p) {
  return json{{"open_ended", p.open_ended},
              {"classification", p.classification},
              {"generation", p.generation}};
}

LengthPolicy length_policy_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::config_error, "length_policy must be an object");
  LengthPolicy p;
  try {
    for (const auto& [key, value] : j.items()) {
      const int x = value.get<int>();
      if (x < 1) throw Error(ErrorCode::config_error, "length_policy." + key + " must be >= 1");
      if (key == "open_ended") p.open_ended = x;
      else if (key == "classification") p.classification = x;
      else if (key == "generation") p.generation = x;
      else throw Error(ErrorCode::config_error, "unknown length_policy key \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("length_policy: ") + e.what());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Metrics

double bengali_word_ratio(std::string_view text) {
  const auto stripped = decode_utf8(strip_code_blocks(text));
  std::size_t words = 0;
  std::size_t bengali = 0;
  for (const auto& token : split_whitespace(std::u32string_view(stripped))) {
    std::size_t alpha = 0, in_block = 0;
    for (char32_t c : token) {
      if (!is_alphabetic(c)) continue;
      ++alpha;
      if (in_bengali_block(c)) ++in_block;
    }
    if (alpha == 0) continue;
    ++words;
    if (2 * in_block >= alpha) ++bengali;
  }
  if (words == 0) throw Error(ErrorCode::no_words, "text has no alphabetic words");
  return static_cast<double>(bengali) / static_cast<double>(words);
}

namespace {

bool allowed_char(char32_t c) {
  if (in_bengali_block(c)) return true;
  if (c == kDanda || c == kDoubleDanda) return true;
  if (c >= U'0' && c <= U'9') return true;
  if (c < 0x80 && c > 0x20 && c != 0x7F && !((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'))) {
    return true;  // ASCII punctuation
  }
  return is_space(c);
}

}  // namespace

bool unicode_consistency(std::string_view text) {
  for (char32_t c : decode_utf8(strip_code_blocks(text))) {
    if (!allowed_char(c)) return false;
  }
  return true;
}

std::vector<std::uint64_t> trigram_set(std::string_view normalized) {
  const auto cps = decode_utf8(normalized);
  std::vector<std::uint64_t> out;
  if (cps.size() < 3) return out;
  out.reserve(cps.size() - 2);
  for (std::size_t i = 0; i + 2 < cps.size(); ++i) {
    out.push_back((static_cast<std::uint64_t>(cps[i]) << 42) |
                  (static_cast<std::uint64_t>(cps[i + 1]) << 21) |
                  static_cast<std::uint64_t>(cps[i + 2]));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::size_t intersection_size(const std::vector<std::uint64_t>& a,
                              const std::vector<std::uint64_t>& b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else ++n, ++i, ++j;
  }
  return n;
}

double jaccard(std::size_t inter, std::size_t a, std::size_t b) {
  const std::size_t uni = a + b - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t codepoint_count(std::string_view s) { return decode_utf8(s).size(); }

}  // namespace

double trigram_similarity(std::string_view a, std::string_view b) {
  const auto na = normalize_text(a);
  const auto nb = normalize_text(b);
  if (na.empty() || nb.empty()) throw Error(ErrorCode::empty_text, "similarity of empty text");
  if (codepoint_count(na) < 3 || codepoint_count(nb) < 3) return na == nb ? 1.0 : 0.0;
  const auto ta = trigram_set(na);
  const auto tb = trigram_set(nb);
  return jaccard(intersection_size(ta, tb), ta.size(), tb.size());
}

double type_token_ratio(std::string_view text) {
  std::vector<std::u32string> tokens;
  for (auto& w : split_whitespace(std::u32string_view(decode_utf8(nfc(text))))) {
    std::u32string core;
    for (char32_t c : w) {
      if (!is_punctuation(c)) core.push_back(c);
    }
    if (!core.empty()) tokens.push_back(std::move(core));
  }
  if (tokens.empty()) throw Error(ErrorCode::no_words, "text has no word tokens");
  std::vector<std::u32string> distinct = tokens;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  return static_cast<double>(distinct.size()) / static_cast<double>(tokens.size());
}

std::size_t word_count(std::string_view text) {
  return split_whitespace(std::u32string_view(decode_utf8(text))).size();
}

// ---------------------------------------------------------------------------
// Novelty index

void NoveltyIndex::insert(std::string id, Category category, std::string_view instruction,
                          std::string_view response) {
  if (ids_.count(id)) throw Error(ErrorCode::duplicate_id, "index already holds \"" + id + "\"");
  Entry e;
  e.id = std::move(id);
  e.category = category;
  e.instruction = normalize_text(instruction);
  e.trigrams = trigram_set(e.instruction);
  e.response = normalize_text(response);

  const auto slot = static_cast<std::uint32_t>(entries_.size());
  if (e.trigrams.empty()) short_instructions_.insert(e.instruction);
  for (auto g : e.trigrams) postings_[g].push_back(slot);
  if (!e.response.empty()) responses_[category_index(category)].insert(e.response);
  ids_.insert(e.id);
  entries_.push_back(std::move(e));
}

double NoveltyIndex::max_similarity(std::string_view instruction) const {
  const auto query = normalize_text(instruction);
  if (entries_.empty() || query.empty()) return 0.0;
  const auto grams = trigram_set(query);
  if (grams.empty()) return short_instructions_.count(query) ? 1.0 : 0.0;

  std::unordered_map<std::uint32_t, std::uint32_t> shared;
  for (auto g : grams) {
    auto it = postings_.find(g);
    if (it == postings_.end()) continue;
    for (auto slot : it->second) ++shared[slot];
  }
  double best = 0.0;
  for (const auto& [slot, inter] : shared) {
    best = std::max(best, jaccard(inter, grams.size(), entries_[slot].trigrams.size()));
  }
  return best;
}

bool NoveltyIndex::has_response(Category category, std::string_view response) const {
  return responses_[category_index(category)].count(normalize_text(response)) > 0;
}

// ---------------------------------------------------------------------------
// Criteria

CriterionOutcome language_filter(std::string_view instruction, std::string_view response,
                                 const JudgeVerdict& verdict, const Thresholds& t) {
  CriterionOutcome out;
  bool ratio_ok = false;
  try {
    // Strip each side before joining so a fence never spans the seam.
    const double ratio =
        bengali_word_ratio(strip_code_blocks(instruction) + " " + strip_code_blocks(response));
    out.measurements["word_ratio"] = ratio;
    ratio_ok = ratio >= t.word_ratio;
    if (!ratio_ok) out.reasons.emplace_back(reason::kWordRatio);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::no_words) throw;
    out.measurements["word_ratio"] = 0.0;
    out.reasons.emplace_back(reason::kNoWords);
  }
  const bool unicode_ok = unicode_consistency(instruction) && unicode_consistency(response);
  if (!unicode_ok) out.reasons.emplace_back(reason::kUnicode);

  out.measurements["grammar"] = verdict.grammar;
  const bool grammar_ok = verdict.grammar >= t.grammar;
  if (!grammar_ok) out.reasons.emplace_back(reason::kGrammar);

  out.passed = ratio_ok && unicode_ok && grammar_ok;
  return out;
}

CriterionOutcome cultural_filter(const JudgeVerdict& verdict, const Thresholds& t) {
  CriterionOutcome out;
  out.measurements["bias"] = verdict.bias;
  const bool neutral = verdict.bias >= -t.bias && verdict.bias <= t.bias;
  if (!neutral) out.reasons.emplace_back(reason::kReligiousBias);
  if (!verdict.regional_ok) out.reasons.emplace_back(reason::kRegionalBias);
  if (!verdict.gender_ok) out.reasons.emplace_back(reason::kGenderBias);
  if (!verdict.political_ok) out.reasons.emplace_back(reason::kPoliticalBias);
  out.passed = neutral && verdict.regional_ok && verdict.gender_ok && verdict.political_ok;
  return out;
}

CriterionOutcome quality_filter(std::string_view /*instruction*/, std::string_view response,
                                TaskType task_type, const JudgeVerdict& verdict,
                                const LengthPolicy& policy, const Thresholds& t) {
  CriterionOutcome out;
  const auto length = word_count(response);
  out.measurements["length"] = static_cast<double>(length);
  out.measurements["coherence"] = verdict.coherence;

  const bool long_enough = length >= static_cast<std::size_t>(policy.min_words(task_type));
  const bool coherent = verdict.coherence >= t.coherence;
  if (!long_enough) out.reasons.emplace_back(reason::kTooShort);
  if (!coherent) out.reasons.emplace_back(reason::kCoherence);
  if (!verdict.factual) out.reasons.emplace_back(reason::kNotFactual);
  if (!verdict.format_ok) out.reasons.emplace_back(reason::kBadFormat);
  out.passed = long_enough && coherent && verdict.factual && verdict.format_ok;
  return out;
}

CriterionOutcome novelty_filter(std::string_view instruction, std::string_view response,
                                Category category, const NoveltyIndex& index,
                                const Thresholds& t) {
  CriterionOutcome out;
  const double sim = index.max_similarity(instruction);
  out.measurements["max_similarity"] = sim;
  const bool novel = sim <= t.similarity;
  if (!novel) out.reasons.emplace_back(reason::kTooSimilar);

  bool diverse = false;
  try {
    const double ttr = type_token_ratio(std::string(instruction) + " " + std::string(response));
    out.measurements["ttr"] = ttr;
    diverse = ttr >= t.ttr;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::no_words) throw;
    out.measurements["ttr"] = 0.0;
  }
  if (!diverse) out.reasons.emplace_back(reason::kLowDiversity);

  const bool unique = !index.has_response(category, response);
  if (!unique) out.reasons.emplace_back(reason::kDuplicateResponse);

  out.passed = novel && diverse && unique;
  return out;
}

FilterReport accept(const PairUnderTest& pair, const JudgeVerdict& verdict,
                    const NoveltyIndex& index, const LengthPolicy& policy, const Thresholds& t) {
  auto l = language_filter(pair.instruction, pair.response, verdict, t);
  auto c = cultural_filter(verdict, t);
  auto q = quality_filter(pair.instruction, pair.response, pair.task_type, verdict, policy, t);
  auto n = novelty_filter(pair.instruction, pair.response, pair.category, index, t);

  std::vector<std::string> reasons;
  std::map<std::string, double> measurements;
  for (auto* o : {&l, &c, &q, &n}) {
    reasons.insert(reasons.end(), o->reasons.begin(), o->reasons.end());
    measurements.insert(o->measurements.begin(), o->measurements.end());
  }
  return FilterReport::make(l.passed, c.passed, q.passed, n.passed, std::move(reasons),
                            std::move(measurements));
}

}  // namespace bninstruct
