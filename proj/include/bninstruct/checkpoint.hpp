#pragma once

#include <string>

#include "bninstruct/pipeline.hpp"

namespace bninstruct {

inline constexpr int kCheckpointSchemaVersion = 1;

// Checkpoint file layout, two lines:
//   {"schema_version":1,"crc32":"89abcdef","length":N}
//   <N bytes of compact state JSON>
// The CRC covers exactly the payload bytes.

json state_to_json(const PipelineState& state);
/// Rebuilds the novelty index from the stored pool and accepted pairs.
PipelineState state_from_json(const json& j);

/// Atomic write (temp file + rename). Throws Error(io_error).
void checkpoint(const PipelineState& state, const std::string& path);
/// Throws io_error, schema_mismatch or corruption.
PipelineState resume(const std::string& path);

}  // namespace bninstruct
