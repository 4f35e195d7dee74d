#pragma once

#include <string>

#include "config.hpp"
#include "rng.hpp"
#include "tape.hpp"

namespace vcore {

// Causality-aware temporal projection: append the summary token, add joint
// spatio-temporal positions, run the masked transformer stack, project to the
// language embedding width. The block-causal mask allows token i to attend
// token j exactly when i's temporal slot is not earlier than j's, which keeps
// intra-frame attention full while forbidding any future-to-past flow.

namespace catp {

inline constexpr double kLayerNormEps = 1e-5;

inline constexpr const char* kPosTemporal = "catp.pos_temporal";
inline constexpr const char* kPosSpatial = "catp.pos_spatial";
inline constexpr const char* kSummaryQuery = "catp.summary_query";
inline constexpr const char* kProjWeight = "proj.weight";
inline constexpr const char* kProjBias = "proj.bias";

std::string layer_param(std::size_t layer, const char* suffix);

/// Temporal slot of token i in a sequence of length S with K tokens per
/// frame: frame tokens map to their frame index, a terminal summary to T and
/// a prepended summary to 0. Range [0, T].
std::size_t temporal_index(std::size_t i, std::size_t tokens_per_frame, std::size_t seq_len,
                           SummaryPosition summary);

/// Ordering key used by the mask. Identical to temporal_index except that a
/// prepended summary sorts strictly before frame 0 (slot -1): placed first it
/// must not read any frame, which is exactly why that ablation starves.
long long temporal_group(std::size_t i, std::size_t tokens_per_frame, std::size_t seq_len,
                         SummaryPosition summary);

/// S x S additive mask with entries in {0, -inf}. Block-causal allows (i, j)
/// iff temporal_group(i) >= temporal_group(j); bidirectional allows all.
DenseArray build_mask(const ModelConfig& cfg);

/// Renders a mask as the text dump format: a header line
/// "T=<T> K=<K> summary=<pos> mode=<mode>" then S lines of S '1'/'0' chars.
std::string render_mask(const ModelConfig& cfg);

/// Registers positional tables, the summary query (when present), the
/// transformer layer weights (when the temporal mode is transformer) and the
/// output projection.
void register_params(ParameterStore& store, const ModelConfig& cfg, Rng& rng);

/// Frame block (T*K x d_v) -> augmented sequence (S x d_v) per the summary
/// position; avgpool fills the summary slot with the mean frame token.
Var assemble_sequence(Tape& tape, Var frame_block, const ModelConfig& cfg);

/// Adds E_temp[slot] + E_spat[offset] to every row; the summary row uses the
/// reserved rows (T, K) of the two tables.
Var add_positions(Tape& tape, Var h_in, const ModelConfig& cfg);

/// The L-layer masked pre-norm transformer stack followed by the affine
/// projection to d_llm. In linear temporal mode the stack is skipped and only
/// the projection applies.
Var forward(Tape& tape, Var x0, const ModelConfig& cfg, const DenseArray& mask);

/// Summary row of the projected sequence (terminal: last, prepend: first);
/// with no summary token, the mean over all rows.
Var extract_global(Tape& tape, Var tokens, const ModelConfig& cfg);

}  // namespace catp

}  // namespace vcore
