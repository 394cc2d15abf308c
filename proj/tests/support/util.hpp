#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>

#include "bninstruct/teacher.hpp"

namespace testutil {

inline std::string source_path(const std::string& rel) {
  return (std::filesystem::path(BNI_SOURCE_DIR) / rel).string();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("bni-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << data;
}

// Scripted transport that records every request.
class FakeTransport : public bninstruct::ChatTransport {
 public:
  using Handler = std::function<std::string(const bninstruct::ChatRequest&, std::size_t call)>;
  explicit FakeTransport(Handler h) : handler_(std::move(h)) {}

  std::string complete(const bninstruct::ChatRequest& request) override {
    std::size_t n;
    {
      std::lock_guard lock(mu_);
      n = requests_.size();
      requests_.push_back(request);
    }
    return handler_(request, n);
  }

  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return requests_.size();
  }
  std::vector<bninstruct::ChatRequest> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

 private:
  Handler handler_;
  mutable std::mutex mu_;
  std::vector<bninstruct::ChatRequest> requests_;
};

inline bninstruct::TeacherConfig fast_config(int retries = 3) {
  bninstruct::TeacherConfig c;
  c.model_name = "test";
  c.max_retries = retries;
  c.backoff_initial = 0.0;
  c.backoff_max = 0.0;
  return c;
}

}  // namespace testutil
