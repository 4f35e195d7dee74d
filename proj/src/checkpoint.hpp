#pragma once

#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "model.hpp"
#include "param_store.hpp"

namespace vcore {

// Checkpoint file format VCKPT1:
//   magic "VCKPT1"
//   u32 byte length + UTF-8 run-config text
//   u32 parameter count
//   per parameter: u32 name length, name bytes, u32 rank, u32 extents[rank],
//                  little-endian f64 values
//   u32 CRC-32 of all preceding bytes
// Parameters are stored in name order; save(load(x)) is byte-identical to x.

struct Checkpoint {
  RunConfig config;
  std::string config_text;  // stored verbatim for byte-exact round trips
  std::vector<std::pair<std::string, DenseArray>> params;
};

Checkpoint make_checkpoint(const RunConfig& config, const ParameterStore& store);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Throws VersionError on an unknown header, TruncationError when the record
/// structure overruns the file, ChecksumError when the trailing CRC does not
/// match.
Checkpoint load_checkpoint(const std::string& path);

/// Copies parameter values into the model; every name and shape must match
/// the model's store exactly.
void apply_checkpoint(const Checkpoint& ckpt, Model& model);

}  // namespace vcore
