#pragma once

#include "config.hpp"
#include "rng.hpp"
#include "tape.hpp"

namespace vcore {

// Learnable spatial aggregation: a fixed set of learnable query tokens
// cross-attends over the patch features of one frame, compressing N patches
// to K salient tokens. The queries and projections are shared across frames.
// Mean pooling is the one-token ablation baseline.

namespace lsa {

inline constexpr const char* kQueries = "lsa.queries";
inline constexpr const char* kWQuery = "lsa.w_query";
inline constexpr const char* kWKey = "lsa.w_key";
inline constexpr const char* kWValue = "lsa.w_value";

/// Registers queries (K x d_v) and the three d_v x d_v projections.
void register_params(ParameterStore& store, const CatpConfig& cfg, Rng& rng);

/// One frame: N x d_v patches -> K x d_v aggregated tokens.
Var aggregate_frame(Tape& tape, Var frame_patches, const CatpConfig& cfg);

/// Mean over the patch axis: N x d_v -> 1 x d_v.
Var mean_pool_frame(Tape& tape, Var frame_patches);

/// Whole clip: applies the per-frame op in frame order and stacks the results
/// into a (T * tokens_per_frame) x d_v block.
Var aggregate_video(Tape& tape, const DenseArray& frames, const ModelConfig& cfg);

}  // namespace lsa

}  // namespace vcore
