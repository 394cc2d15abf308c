#include "bninstruct/config.hpp"

#include <filesystem>
#include <fstream>

namespace bninstruct {

namespace {

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

mock::MockOptions mock_from_json(const json& j, std::uint64_t default_seed) {
  if (!j.is_object()) throw Error(ErrorCode::config_error, "\"mock\" must be an object");
  mock::MockOptions m;
  m.seed = default_seed;
  for (const auto& [key, v] : j.items()) {
    if (key == "seed") m.seed = v.get<std::uint64_t>();
    else if (key == "draft_coherence_cycle") {
      m.draft_coherence_cycle = v.get<std::vector<double>>();
      if (m.draft_coherence_cycle.empty()) {
        throw Error(ErrorCode::config_error, "draft_coherence_cycle must not be empty");
      }
    }
    else throw Error(ErrorCode::config_error, "unknown mock key \"" + key + "\"");
  }
  return m;
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::config_error, "config must be a JSON object");
  RunConfig c;
  c.generator.temperature = 0.7;
  c.judge.temperature = 0.0;
  try {
    if (j.contains("pipeline")) c.pipeline = pipeline_config_from_json(j.at("pipeline"));
    c.mock.seed = c.pipeline.rng_seed;
    for (const auto& [key, v] : j.items()) {
      if (key == "pipeline") continue;
      if (key == "backend") {
        const auto b = v.get<std::string>();
        if (b == "mock") c.backend = Backend::mock;
        else if (b == "http") c.backend = Backend::http;
        else throw Error(ErrorCode::config_error, "backend must be \"mock\" or \"http\"");
      }
      else if (key == "seeds") c.seeds = resolve(base_dir, v.get<std::string>());
      else if (key == "dataset") c.dataset = resolve(base_dir, v.get<std::string>());
      else if (key == "manifest") c.manifest = resolve(base_dir, v.get<std::string>());
      else if (key == "checkpoint") c.checkpoint = resolve(base_dir, v.get<std::string>());
      else if (key == "checkpoint_every") c.checkpoint_every = v.get<int>();
      else if (key == "mock") c.mock = mock_from_json(v, c.pipeline.rng_seed);
      else if (key == "generator") c.generator = teacher_config_from_json(v, c.generator);
      else if (key == "judge") c.judge = teacher_config_from_json(v, c.judge);
      else throw Error(ErrorCode::config_error, "unknown config key \"" + key + "\"");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, e.what());
  }
  if (c.seeds.empty()) throw Error(ErrorCode::config_error, "config needs a \"seeds\" path");
  if (c.dataset.empty()) throw Error(ErrorCode::config_error, "config needs a \"dataset\" path");
  if (c.checkpoint_every < 1) throw Error(ErrorCode::config_error, "checkpoint_every must be >= 1");
  if (c.backend == Backend::http) {
    for (const auto* t : {&c.generator, &c.judge}) {
      if (t->endpoint.empty() || t->model_name.empty()) {
        throw Error(ErrorCode::config_error, "http backend needs endpoint and model_name per teacher");
      }
    }
  }
  validate(c.generator);
  validate(c.judge);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, path + ": " + e.what());
  }
  auto base = std::filesystem::path(path).parent_path().string();
  return run_config_from_json(j, base.empty() ? "." : base);
}

Teachers make_teachers(const RunConfig& config) {
  Teachers t;
  if (config.backend == Backend::mock) {
    t.generator = std::make_unique<Teacher>(config.generator,
                                            std::make_shared<mock::MockTransport>(config.mock));
    t.judge = std::make_unique<Teacher>(config.judge,
                                        std::make_shared<mock::MockTransport>(config.mock));
  } else {
    t.generator = std::make_unique<Teacher>(config.generator,
                                            std::make_shared<HttpTransport>(config.generator));
    t.judge = std::make_unique<Teacher>(config.judge, std::make_shared<HttpTransport>(config.judge));
  }
  return t;
}

}  // namespace bninstruct
