#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "train.hpp"

namespace vcore {

// Ablation harness: trains a family of config variants on identical data with
// shared seeds and merges the results into one comparison table. Axes:
//   components       - the five-stage progression from mean pooling with a
//                      linear projector up to the full causal model with a
//                      terminal summary
//   summary          - the four summary-token designs (none, terminal avgpool,
//                      prepended learnable, terminal learnable)
//   mask             - block-causal vs bidirectional from the base config
//   summary_position - terminal/prepend/none from the base config
//   spatial          - learnable aggregation vs mean pooling
//   temporal         - transformer vs linear
// Sweeps over spatial_tokens (K) or frames (T) are a separate entry point
// since they change the token geometry rather than a mode switch.

struct AblationRow {
  std::string name;
  RunConfig config;
  Metrics metrics;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::string table;
};

std::vector<std::pair<std::string, RunConfig>> ablation_variants(
    const RunConfig& base, const std::vector<std::string>& axes);

/// Trains every variant under out_dir/<name>, sharing one dataset directory.
AblationResult run_ablation(const RunConfig& base, const std::vector<std::string>& axes,
                            const std::string& out_dir);

/// Trains one variant per value of `param` ("spatial_tokens"/"K" or
/// "frames"/"T"). K-sweeps share the dataset; T-sweeps regenerate it per value.
AblationResult run_sweep(const RunConfig& base, const std::string& param,
                         const std::vector<std::size_t>& values, const std::string& out_dir);

}  // namespace vcore
