#include "bninstruct/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include <zlib.h>

namespace bninstruct {

namespace {

template <std::size_t N>
json array_json(const std::array<std::size_t, N>& a) {
  json out = json::array();
  for (auto x : a) out.push_back(x);
  return out;
}

template <std::size_t N>
std::array<std::size_t, N> array_from(const json& j) {
  if (!j.is_array() || j.size() != N) throw Error(ErrorCode::corruption, "bad counter array");
  std::array<std::size_t, N> a{};
  for (std::size_t i = 0; i < N; ++i) a[i] = j[i].get<std::size_t>();
  return a;
}

json map_json(const std::map<std::string, std::size_t>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k] = v;
  return out;
}

std::map<std::string, std::size_t> map_from(const json& j) {
  std::map<std::string, std::size_t> m;
  for (const auto& [k, v] : j.items()) m[k] = v.get<std::size_t>();
  return m;
}

json counters_json(const Counters& c) {
  return json{{"candidates", c.candidates},
              {"accepted", c.accepted},
              {"rejected", c.rejected},
              {"deferred", c.deferred},
              {"errored", c.errored},
              {"failed_rounds", c.failed_rounds},
              {"accepted_per_category", array_json(c.accepted_per_category)},
              {"accepted_per_complexity", array_json(c.accepted_per_complexity)},
              {"accepted_per_task_type", array_json(c.accepted_per_task_type)},
              {"rejected_by_criterion", map_json(c.rejected_by_criterion)},
              {"rejected_by_reason", map_json(c.rejected_by_reason)},
              {"deferred_by_reason", map_json(c.deferred_by_reason)}};
}

Counters counters_from(const json& j) {
  Counters c;
  c.candidates = j.at("candidates").get<std::size_t>();
  c.accepted = j.at("accepted").get<std::size_t>();
  c.rejected = j.at("rejected").get<std::size_t>();
  c.deferred = j.at("deferred").get<std::size_t>();
  c.errored = j.at("errored").get<std::size_t>();
  c.failed_rounds = j.at("failed_rounds").get<std::size_t>();
  c.accepted_per_category = array_from<kCategoryCount>(j.at("accepted_per_category"));
  c.accepted_per_complexity = array_from<3>(j.at("accepted_per_complexity"));
  c.accepted_per_task_type = array_from<3>(j.at("accepted_per_task_type"));
  c.rejected_by_criterion = map_from(j.at("rejected_by_criterion"));
  c.rejected_by_reason = map_from(j.at("rejected_by_reason"));
  c.deferred_by_reason = map_from(j.at("deferred_by_reason"));
  return c;
}

std::string crc_hex(std::string_view payload) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size()));
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << crc;
  return os.str();
}

}  // namespace

json state_to_json(const PipelineState& s) {
  json pool = json::array();
  for (const auto& t : s.pool.tasks()) pool.push_back(to_json(t));
  json accepted = json::array();
  for (const auto& p : s.accepted) accepted.push_back(to_json(p));
  std::ostringstream rng;
  rng << s.rng;
  return json{{"round", s.round},
              {"rng_state", rng.str()},
              {"pool", pool},
              {"accepted", accepted},
              {"counters", counters_json(s.counters)}};
}

PipelineState state_from_json(const json& j) {
  PipelineState s;
  try {
    s.round = j.at("round").get<int>();
    std::istringstream rng(j.at("rng_state").get<std::string>());
    rng >> s.rng;
    if (rng.fail()) throw Error(ErrorCode::corruption, "unreadable rng state");
    for (const auto& t : j.at("pool")) s.pool.add(seed_from_json(t));
    for (const auto& p : j.at("accepted")) s.accepted.push_back(pair_from_json(p));
    s.counters = counters_from(j.at("counters"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::corruption, std::string("checkpoint state: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::corruption) throw;
    throw Error(ErrorCode::corruption, "checkpoint state: " + e.detail());
  }

  // The index holds every pool task; absorbed tasks carry their pair's response.
  std::unordered_map<std::string, const InstructPair*> by_id;
  for (const auto& p : s.accepted) by_id[p.id] = &p;
  for (const auto& t : s.pool.tasks()) {
    auto it = by_id.find(t.id);
    s.index.insert(t.id, t.category, t.text, it == by_id.end() ? std::string_view{} : it->second->response);
  }
  return s;
}

void checkpoint(const PipelineState& state, const std::string& path) {
  const std::string payload = state_to_json(state).dump();
  const json header{{"schema_version", kCheckpointSchemaVersion},
                    {"crc32", crc_hex(payload)},
                    {"length", payload.size()}};
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write checkpoint " + tmp);
    out << header.dump() << '\n' << payload << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::io_error, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::io_error, "cannot move checkpoint into place at " + path);
  }
}

PipelineState resume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open checkpoint " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw Error(ErrorCode::corruption, "checkpoint is empty");

  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception&) {
    throw Error(ErrorCode::corruption, "checkpoint header is unreadable");
  }
  if (!header.is_object() || !header.contains("schema_version") ||
      !header["schema_version"].is_number_integer()) {
    throw Error(ErrorCode::corruption, "checkpoint header lacks a schema version");
  }
  const int version = header["schema_version"].get<int>();
  if (version != kCheckpointSchemaVersion) {
    throw Error(ErrorCode::schema_mismatch,
                "checkpoint schema version " + std::to_string(version) +
                    ", this build reads version " + std::to_string(kCheckpointSchemaVersion));
  }
  if (!header.contains("crc32") || !header.contains("length")) {
    throw Error(ErrorCode::corruption, "checkpoint header is incomplete");
  }

  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (!payload.empty() && payload.back() == '\n') payload.pop_back();
  if (payload.size() != header["length"].get<std::size_t>()) {
    throw Error(ErrorCode::corruption, "checkpoint payload is " + std::to_string(payload.size()) +
                                           " bytes, header says " +
                                           std::to_string(header["length"].get<std::size_t>()));
  }
  if (crc_hex(payload) != header["crc32"].get<std::string>()) {
    throw Error(ErrorCode::corruption, "checkpoint checksum mismatch");
  }
  try {
    return state_from_json(json::parse(payload));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::corruption, std::string("checkpoint payload: ") + e.what());
  }
}

}  // namespace bninstruct
