#include "bninstruct/teacher.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "bninstruct/prompts.hpp"
#include "bninstruct/unicode.hpp"

namespace bninstruct {

void validate(const TeacherConfig& c) {
  if (c.max_in_flight < 1) throw Error(ErrorCode::config_error, "max_in_flight must be >= 1");
  if (!(c.timeout > 0)) throw Error(ErrorCode::config_error, "timeout must be > 0");
  if (c.max_retries < 0) throw Error(ErrorCode::config_error, "max_retries must be >= 0");
  if (c.backoff_initial < 0 || c.backoff_max < 0) {
    throw Error(ErrorCode::config_error, "backoff must be non-negative");
  }
}

json to_json(const TeacherConfig& c) {
  return json{{"endpoint", c.endpoint},
              {"model_name", c.model_name},
              {"api_key_env", c.api_key_env},
              {"max_in_flight", c.max_in_flight},
              {"timeout", c.timeout},
              {"max_retries", c.max_retries},
              {"temperature", c.temperature},
              {"backoff_initial", c.backoff_initial},
              {"backoff_max", c.backoff_max}};
}

TeacherConfig teacher_config_from_json(const json& j, TeacherConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::config_error, "teacher config must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "endpoint") c.endpoint = value.get<std::string>();
      else if (key == "model_name") c.model_name = value.get<std::string>();
      else if (key == "api_key_env") c.api_key_env = value.get<std::string>();
      else if (key == "max_in_flight") c.max_in_flight = value.get<int>();
      else if (key == "timeout") c.timeout = value.get<double>();
      else if (key == "max_retries") c.max_retries = value.get<int>();
      else if (key == "temperature") c.temperature = value.get<double>();
      else if (key == "backoff_initial") c.backoff_initial = value.get<double>();
      else if (key == "backoff_max") c.backoff_max = value.get<double>();
      else throw Error(ErrorCode::config_error, "unknown teacher config key \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("teacher config: ") + e.what());
  }
  validate(c);
  return c;
}

json to_json(const ChatRequest& r) {
  json messages = json::array();
  for (const auto& m : r.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return json{{"model", r.model}, {"messages", messages}, {"temperature", r.temperature}};
}

std::string parse_chat_reply(std::string_view body) {
  try {
    auto j = json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw Error(ErrorCode::malformed_reply, "content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_reply, std::string("unexpected reply body: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// HTTP

HttpTransport::HttpTransport(TeacherConfig config) : config_(std::move(config)) {
  const auto& url = config_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::config_error, "endpoint must be an absolute URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpTransport::complete(const ChatRequest& request) {
  // One client per call: concurrent callers never share a socket.
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration<double>(config_.timeout);
  const auto us = std::chrono::duration_cast<std::chrono::microseconds>(secs);
  client.set_connection_timeout(us);
  client.set_read_timeout(us);
  client.set_write_timeout(us);
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      client.set_bearer_token_auth(key);
    }
  }
  auto res = client.Post(path_, to_json(request).dump(), "application/json");
  if (!res) {
    throw TransportError(0, "request to " + config_.endpoint + " failed: " +
                                httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError(res->status, "HTTP " + std::to_string(res->status) + " from " +
                                          config_.endpoint + ": " + res->body.substr(0, 200));
  }
  return parse_chat_reply(res->body);
}

// ---------------------------------------------------------------------------
// Teacher handle

bool is_retryable_status(int status) {
  return status == 0 || status == 429 || status >= 500;
}

Teacher::Teacher(TeacherConfig config, std::shared_ptr<ChatTransport> transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      slots_(std::max(1, config_.max_in_flight)) {
  validate(config_);
  if (!transport_) throw Error(ErrorCode::config_error, "teacher has no transport");
}

namespace {

struct SlotGuard {
  std::counting_semaphore<>& sem;
  explicit SlotGuard(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

}  // namespace

std::string Teacher::ask(const std::vector<ChatMessage>& messages) {
  const ChatRequest request{config_.model_name, messages, config_.temperature};
  int last_status = 0;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    {
      SlotGuard slot(slots_);
      ++requests_;
      try {
        return transport_->complete(request);
      } catch (const TransportError& e) {
        last_status = e.status();
        last_error = e.what();
        if (!is_retryable_status(e.status())) {
          throw Error(ErrorCode::backend_error, last_error);
        }
      }
    }
    if (attempt < config_.max_retries) {
      double delay = std::min(config_.backoff_max, config_.backoff_initial * std::pow(2.0, attempt));
      spdlog::debug("retrying {} in {:.3f}s after: {}", config_.endpoint, delay, last_error);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
  }
  const std::string detail =
      last_error + " (after " + std::to_string(config_.max_retries + 1) + " attempts)";
  if (last_status == 0) throw Error(ErrorCode::backend_unreachable, detail);
  if (last_status == 429) throw Error(ErrorCode::rate_limited, detail);
  throw Error(ErrorCode::backend_error, detail);
}

// ---------------------------------------------------------------------------
// Operations

namespace {

bool is_digit_char(char32_t c) {
  return (c >= U'0' && c <= U'9') || (c >= 0x09E6 && c <= 0x09EF);
}

}  // namespace

std::vector<std::string> parse_numbered_list(std::string_view reply) {
  std::vector<std::string> out;
  for (const auto& raw : [&] {
         std::vector<std::string_view> lines;
         std::size_t pos = 0;
         while (pos <= reply.size()) {
           auto nl = reply.find('\n', pos);
           lines.push_back(reply.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
           if (nl == std::string_view::npos) break;
           pos = nl + 1;
         }
         return lines;
       }()) {
    auto line = decode_utf8(trim(raw));
    std::size_t i = 0;
    while (i < line.size() && is_digit_char(line[i])) ++i;
    if (i == 0 || i >= line.size()) continue;
    const char32_t sep = line[i];
    if (sep != U'.' && sep != U')' && sep != U':' && sep != kDanda) continue;
    auto rest = trim(encode_utf8(std::u32string_view(line).substr(i + 1)));
    if (!rest.empty()) out.push_back(std::move(rest));
  }
  return out;
}

std::vector<InstructionCandidate> generate_instructions(Teacher& generator,
                                                        const GenerationRequest& request,
                                                        int round) {
  if (request.seeds.empty()) {
    throw Error(ErrorCode::precondition_violation, "generation request has no seeds");
  }
  if (request.batch_size < 1) {
    throw Error(ErrorCode::precondition_violation, "batch_size must be >= 1");
  }
  const auto reply = generator.ask(prompts::generate(request, round));
  auto items = parse_numbered_list(reply);
  if (items.empty()) {
    throw Error(ErrorCode::malformed_reply, "generator reply contains no numbered instructions");
  }
  if (items.size() > static_cast<std::size_t>(request.batch_size)) {
    items.resize(static_cast<std::size_t>(request.batch_size));
  }
  std::vector<InstructionCandidate> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    InstructionCandidate c;
    c.id = make_id(round, i);
    c.text = std::move(items[i]);
    c.category = request.target_category;
    c.round = round;
    out.push_back(std::move(c));
  }
  return out;
}

std::optional<TaskType> parse_task_label(std::string_view reply) {
  std::string s = trim(reply);
  auto strip = [](char ch) {
    return ch == '"' || ch == '\'' || ch == '`' || ch == '.' || ch == '*';
  };
  while (!s.empty() && strip(s.front())) s.erase(s.begin());
  while (!s.empty() && strip(s.back())) s.pop_back();
  for (auto& ch : s) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    if (ch == '-' || ch == ' ') ch = '_';
  }
  return parse_task_type(s);
}

TaskType classify_task(Teacher& judge, const InstructionCandidate& instruction) {
  if (trim(instruction.text).empty()) {
    throw Error(ErrorCode::precondition_violation, "cannot classify an empty instruction");
  }
  auto conversation = prompts::classify(instruction.text);
  auto reply = judge.ask(conversation);
  if (auto t = parse_task_label(reply)) return *t;
  reply = judge.ask(prompts::classify_reask(std::move(conversation), reply));
  if (auto t = parse_task_label(reply)) return *t;
  throw Error(ErrorCode::malformed_reply,
              "task label not recognised after re-ask: \"" + reply.substr(0, 80) + "\"");
}

std::vector<ResponseDraft> draft_responses(Teacher& generator, Teacher& judge,
                                           const InstructionCandidate& instruction,
                                           TaskType task_type, int draft_count) {
  if (draft_count < 1) throw Error(ErrorCode::precondition_violation, "draft_count must be >= 1");
  std::vector<ResponseDraft> drafts;
  drafts.reserve(static_cast<std::size_t>(draft_count));
  for (int n = 1; n <= draft_count; ++n) {
    auto text = generator.ask(prompts::draft(instruction.text, task_type, n, draft_count));
    if (trim(text).empty()) {
      throw Error(ErrorCode::malformed_reply, "generator returned an empty draft");
    }
    auto verdict = judge_scores(judge, instruction.text, text);
    drafts.push_back({std::move(text), verdict.coherence, verdict});
  }
  return drafts;
}

const ResponseDraft& select_draft(std::span<const ResponseDraft> drafts) {
  if (drafts.empty()) throw Error(ErrorCode::empty_drafts, "no drafts to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < drafts.size(); ++i) {
    if (drafts[i].coherence > drafts[best].coherence) best = i;
  }
  return drafts[best];
}

namespace {

double clamp_score(const char* name, double x, double lo, double hi) {
  if (std::isnan(x)) throw Error(ErrorCode::malformed_reply, std::string(name) + " is NaN");
  if (x < lo || x > hi) {
    spdlog::warn("judge score {}={} outside [{}, {}], clamped", name, x, lo, hi);
    return std::clamp(x, lo, hi);
  }
  return x;
}

std::string unfence(std::string_view reply) {
  std::string s = trim(reply);
  if (s.rfind("```", 0) == 0) {
    auto nl = s.find('\n');
    auto close = s.rfind("```");
    if (nl != std::string::npos && close != std::string::npos && close > nl) {
      s = trim(std::string_view(s).substr(nl + 1, close - nl - 1));
    }
  }
  return s;
}

}  // namespace

JudgeVerdict parse_verdict_reply(std::string_view reply) {
  json j;
  try {
    j = json::parse(unfence(reply));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_reply, std::string("judge reply is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::malformed_reply, "judge reply is not a JSON object");
  JudgeVerdict v;
  try {
    v = verdict_from_json(j);
  } catch (const Error& e) {
    throw Error(ErrorCode::malformed_reply, "judge verdict: " + e.detail());
  }
  v.grammar = clamp_score("grammar", v.grammar, 0.0, 1.0);
  v.bias = clamp_score("bias", v.bias, -1.0, 1.0);
  v.coherence = clamp_score("coherence", v.coherence, 0.0, 1.0);
  return v;
}

JudgeVerdict judge_scores(Teacher& judge, std::string_view instruction,
                          std::string_view response) {
  if (trim(instruction).empty() || trim(response).empty()) {
    throw Error(ErrorCode::precondition_violation, "judge needs a non-empty instruction and response");
  }
  auto conversation = prompts::judge(instruction, response);
  auto reply = judge.ask(conversation);
  try {
    return parse_verdict_reply(reply);
  } catch (const Error& first) {
    spdlog::debug("re-asking judge after: {}", first.detail());
  }
  reply = judge.ask(prompts::judge_reask(std::move(conversation), reply));
  return parse_verdict_reply(reply);
}

}  // namespace bninstruct
