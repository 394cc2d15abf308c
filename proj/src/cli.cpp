#include "bninstruct/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "bninstruct/analytics.hpp"
#include "bninstruct/checkpoint.hpp"
#include "bninstruct/config.hpp"
#include "bninstruct/eval.hpp"
#include "bninstruct/seedpool.hpp"

namespace bninstruct {

namespace {

// Writes to --out when given, stdout otherwise.
void emit(const json& doc, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::io_error, "cannot write " + out_path);
  f << doc.dump(2) << '\n';
  if (!f) throw Error(ErrorCode::io_error, "write failed for " + out_path);
}

std::optional<double> manifest_acceptance_rate(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open manifest " + path);
  try {
    const auto j = json::parse(in);
    if (j.contains("acceptance_rate") && j["acceptance_rate"].is_number()) {
      return j["acceptance_rate"].get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, path + ": " + e.what());
  }
  return std::nullopt;
}

struct Options {
  std::string seeds_file;

  std::string config_file;
  std::string resume_file;

  std::string corpus_dir;
  std::string dataset_file;
  std::string manifest_file;

  std::string items_file;
  std::string endpoint;
  std::string model = "default";
  std::string api_key_env;
  int concurrency = 4;
  double timeout = 60.0;
  int max_retries = 3;
  std::string benchmark;
  std::string results_file;

  std::string out;
};

int cmd_seeds_validate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto pool = load_seeds(o.seeds_file);
  const auto report = validate_distribution(pool);
  auto doc = to_json(report);
  doc["size"] = pool.size();
  emit(doc, o.out, out);
  if (!report.violations.empty()) {
    err << "seeds validate: " << report.violations.size() << " distribution violation(s)\n";
    return kExitDomain;
  }
  return kExitOk;
}

int cmd_generate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto config = load_run_config(o.config_file);
  validate(config.pipeline);
  PipelineState state = o.resume_file.empty()
                            ? make_initial_state(load_seeds(config.seeds), config.pipeline)
                            : resume(o.resume_file);
  auto teachers = make_teachers(config);
  RunOptions ro;
  ro.dataset_path = config.dataset;
  ro.manifest_path = config.manifest;
  ro.checkpoint_path = config.checkpoint;
  ro.checkpoint_every = config.checkpoint_every;
  const auto manifest = run(state, config.pipeline, *teachers.generator, *teachers.judge, ro);
  emit(manifest.document, o.out, out);
  if (manifest.status != "complete") {
    err << "error: " << manifest.status << ": stopped after "
        << state.round << " rounds with " << state.accepted.size() << " of "
        << config.pipeline.target_pairs << " pairs\n";
    return kExitDomain;
  }
  return kExitOk;
}

int cmd_stats_corpus(const Options& o, std::ostream& out, std::ostream&) {
  const auto files = list_corpus_files(o.corpus_dir);
  emit(to_json(corpus_stats(files)), o.out, out);
  return kExitOk;
}

int cmd_stats_dataset(const Options& o, std::ostream& out, std::ostream& err) {
  const auto pairs = read_pairs(o.dataset_file);
  std::optional<double> rate;
  if (!o.manifest_file.empty()) rate = manifest_acceptance_rate(o.manifest_file);
  const auto report = dataset_report(pairs, rate);
  emit(to_json(report), o.out, out);
  if (!report.flags.empty()) {
    err << "stats dataset: " << report.flags.size() << " distribution flag(s)\n";
    return kExitDomain;
  }
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream&) {
  const auto items = load_benchmark(o.items_file);
  TeacherConfig tc;
  tc.endpoint = o.endpoint;
  tc.model_name = o.model;
  tc.api_key_env = o.api_key_env;
  tc.max_in_flight = o.concurrency;
  tc.timeout = o.timeout;
  tc.max_retries = o.max_retries;
  tc.temperature = 0.0;
  validate(tc);
  Teacher teacher(tc, std::make_shared<HttpTransport>(tc));
  TeacherClient client(teacher);
  const auto report = evaluate(client, items, o.concurrency);
  if (!o.results_file.empty()) write_results(o.results_file, report.results);
  const auto name = o.benchmark.empty()
                        ? std::filesystem::path(o.items_file).stem().string()
                        : o.benchmark;
  emit(summary_json(name, report), o.out, out);
  return kExitOk;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bengali instruction-data bootstrapping toolkit", "bninstruct"};
  app.require_subcommand(1);
  Options o;

  auto* seeds = app.add_subcommand("seeds", "Seed pool tools");
  seeds->require_subcommand(1);
  auto* seeds_validate = seeds->add_subcommand("validate", "Check a seed file's distribution");
  seeds_validate->add_option("file", o.seeds_file, "Seed JSONL")->required();
  seeds_validate->add_option("--out", o.out, "Write the report here instead of stdout");

  auto* generate = app.add_subcommand("generate", "Run or resume dataset generation");
  generate->add_option("--config", o.config_file, "Run configuration JSON")->required();
  generate->add_option("--resume", o.resume_file, "Checkpoint to resume from");
  generate->add_option("--out", o.out, "Write the manifest here instead of stdout");

  auto* stats = app.add_subcommand("stats", "Corpus and dataset statistics");
  stats->require_subcommand(1);
  auto* stats_corpus = stats->add_subcommand("corpus", "Token and sentence counts for a directory");
  stats_corpus->add_option("dir", o.corpus_dir, "Corpus directory")->required();
  stats_corpus->add_option("--out", o.out, "Write the stats here instead of stdout");
  auto* stats_dataset = stats->add_subcommand("dataset", "Distribution report for a dataset");
  stats_dataset->add_option("file", o.dataset_file, "Dataset JSONL")->required();
  stats_dataset->add_option("--manifest", o.manifest_file, "Manifest carrying the acceptance rate");
  stats_dataset->add_option("--out", o.out, "Write the report here instead of stdout");

  auto* eval = app.add_subcommand("eval", "Pass@1 over a benchmark file");
  eval->add_option("--items", o.items_file, "Benchmark JSONL")->required();
  eval->add_option("--endpoint", o.endpoint, "Chat-completion URL")->required();
  eval->add_option("--model", o.model, "Model name sent with each request")->capture_default_str();
  eval->add_option("--api-key-env", o.api_key_env, "Env var holding the bearer token");
  eval->add_option("--concurrency", o.concurrency, "Requests in flight")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval->add_option("--timeout", o.timeout, "Per-request timeout in seconds")->capture_default_str();
  eval->add_option("--max-retries", o.max_retries, "Retries per request")->capture_default_str();
  eval->add_option("--benchmark", o.benchmark, "Name in the summary (default: file stem)");
  eval->add_option("--results", o.results_file, "Per-item results JSONL");
  eval->add_option("--out", o.out, "Write the summary here instead of stdout");

  std::vector<const char*> argv{"bninstruct"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();  // help() follows the selected subcommand
    return kExitUsage;
  }

  try {
    if (seeds_validate->parsed()) return cmd_seeds_validate(o, out, err);
    if (generate->parsed()) return cmd_generate(o, out, err);
    if (stats_corpus->parsed()) return cmd_stats_corpus(o, out, err);
    if (stats_dataset->parsed()) return cmd_stats_dataset(o, out, err);
    if (eval->parsed()) return cmd_eval(o, out, err);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.detail() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace bninstruct
