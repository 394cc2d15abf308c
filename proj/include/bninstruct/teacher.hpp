#pragma once

#include <atomic>
#include <memory>
#include <semaphore>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bninstruct/core.hpp"

namespace bninstruct {

struct TeacherConfig {
  std::string endpoint;          // full URL of the chat-completion route
  std::string model_name;
  std::string api_key_env;       // name of the env var holding the bearer token
  int max_in_flight = 4;
  double timeout = 60.0;         // seconds
  int max_retries = 3;
  double temperature = 0.7;
  double backoff_initial = 0.5;  // seconds, doubled per retry
  double backoff_max = 30.0;
};

/// Throws Error(config_error).
void validate(const TeacherConfig& config);
json to_json(const TeacherConfig& config);
/// Strict: unknown keys are rejected.
TeacherConfig teacher_config_from_json(const json& j, TeacherConfig defaults = {});

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

/// Wire form: {"model", "messages":[{"role","content"}...], "temperature"}.
json to_json(const ChatRequest& request);
/// Extracts choices[0].message.content; throws Error(malformed_reply).
std::string parse_chat_reply(std::string_view body);

// Transport-level failure. status is the HTTP status, or 0 when no response
// arrived (connection refused, timeout, DNS).
class TransportError : public std::runtime_error {
 public:
  TransportError(int status, const std::string& what)
      : std::runtime_error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Returns the assistant message content. Throws TransportError.
  virtual std::string complete(const ChatRequest& request) = 0;
};

class HttpTransport : public ChatTransport {
 public:
  explicit HttpTransport(TeacherConfig config);
  std::string complete(const ChatRequest& request) override;

 private:
  TeacherConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

bool is_retryable_status(int status);

// A teacher backend handle: bounds concurrency and retries transient failures.
// Safe to share between threads.
class Teacher {
 public:
  Teacher(TeacherConfig config, std::shared_ptr<ChatTransport> transport);
  Teacher(const Teacher&) = delete;
  Teacher& operator=(const Teacher&) = delete;

  /// Sends one conversation. Throws backend_unreachable, rate_limited or
  /// backend_error once retries are exhausted (non-retryable statuses fail
  /// immediately).
  std::string ask(const std::vector<ChatMessage>& messages);

  const TeacherConfig& config() const { return config_; }
  std::size_t requests_sent() const { return requests_.load(); }

 private:
  TeacherConfig config_;
  std::shared_ptr<ChatTransport> transport_;
  std::counting_semaphore<> slots_;
  std::atomic<std::size_t> requests_{0};
};

struct GenerationRequest {
  std::vector<SeedTask> seeds;
  Category target_category = Category::c1;
  int batch_size = 20;
};

/// Asks the generator for a numbered batch of new instructions.
std::vector<InstructionCandidate> generate_instructions(Teacher& generator,
                                                        const GenerationRequest& request,
                                                        int round);

/// Parses "1. ...", "2) ..." style lists (ASCII or Bengali digits).
std::vector<std::string> parse_numbered_list(std::string_view reply);

/// Single-label task typing with one re-ask.
TaskType classify_task(Teacher& judge, const InstructionCandidate& instruction);
std::optional<TaskType> parse_task_label(std::string_view reply);

/// draft_count generator drafts, each scored by the judge.
std::vector<ResponseDraft> draft_responses(Teacher& generator, Teacher& judge,
                                           const InstructionCandidate& instruction,
                                           TaskType task_type, int draft_count);

/// Highest coherence, earliest on ties. Throws Error(empty_drafts).
const ResponseDraft& select_draft(std::span<const ResponseDraft> drafts);

/// Structured verdict with one re-ask on a malformed reply.
JudgeVerdict judge_scores(Teacher& judge, std::string_view instruction,
                          std::string_view response);

/// Parses a verdict reply, clamping out-of-range scores (with a warning).
/// Tolerates a surrounding ```json fence. Throws Error(malformed_reply).
JudgeVerdict parse_verdict_reply(std::string_view reply);

}  // namespace bninstruct
