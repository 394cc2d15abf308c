#pragma once

#include <memory>
#include <string>

#include "bninstruct/mock_teacher.hpp"
#include "bninstruct/pipeline.hpp"

namespace bninstruct {

enum class Backend { mock, http };

// The run configuration file. Relative paths are resolved against the
// directory holding the config file.
struct RunConfig {
  Backend backend = Backend::mock;
  std::string seeds;
  std::string dataset;
  std::string manifest;
  std::string checkpoint;
  int checkpoint_every = 1;
  mock::MockOptions mock;
  TeacherConfig generator;
  TeacherConfig judge;
  PipelineConfig pipeline;
};

/// Strict parse: unknown keys anywhere are a config_error.
RunConfig run_config_from_json(const json& j, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

struct Teachers {
  std::unique_ptr<Teacher> generator;
  std::unique_ptr<Teacher> judge;
};

/// Two independent backends, one per role.
Teachers make_teachers(const RunConfig& config);

}  // namespace bninstruct
