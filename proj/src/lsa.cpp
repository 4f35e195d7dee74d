#include "lsa.hpp"

#include <cmath>

#include "error.hpp"
#include "model_init.hpp"

namespace vcore::lsa {

void register_params(ParameterStore& store, const CatpConfig& cfg, Rng& rng) {
  store.add(kQueries, normal_array({cfg.spatial_tokens, cfg.feature_dim}, kInitStd, rng));
  store.add(kWQuery, normal_array({cfg.feature_dim, cfg.feature_dim}, kInitStd, rng));
  store.add(kWKey, normal_array({cfg.feature_dim, cfg.feature_dim}, kInitStd, rng));
  store.add(kWValue, normal_array({cfg.feature_dim, cfg.feature_dim}, kInitStd, rng));
}

Var aggregate_frame(Tape& tape, Var frame_patches, const CatpConfig& cfg) {
  // copy the dims out: node references go stale as ops extend the tape
  const std::size_t n_patches = tape.val(frame_patches).is_matrix()
                                    ? tape.val(frame_patches).rows()
                                    : 0;
  if (n_patches == 0 || tape.val(frame_patches).cols() != cfg.feature_dim) {
    throw ValidationError("lsa: frame shape " + tape.val(frame_patches).shape_string() +
                          " does not match feature_dim " + std::to_string(cfg.feature_dim));
  }
  Var q = tape.matmul(tape.param(kQueries), tape.param(kWQuery));
  Var k = tape.matmul(frame_patches, tape.param(kWKey));
  Var v = tape.matmul(frame_patches, tape.param(kWValue));
  // key dim is d_v itself, no per-head split here
  Var scores = tape.scale(tape.matmul(q, tape.transpose(k)),
                          1.0 / std::sqrt(static_cast<double>(cfg.feature_dim)));
  DenseArray no_mask = DenseArray::matrix(cfg.spatial_tokens, n_patches);
  Var attn = tape.masked_softmax(scores, no_mask);
  // patches form a set: the weighted sum must not depend on their order
  return tape.matmul_sorted(attn, v);
}

Var mean_pool_frame(Tape& tape, Var frame_patches) { return tape.mean_rows(frame_patches); }

Var aggregate_video(Tape& tape, const DenseArray& frames, const ModelConfig& cfg) {
  const CatpConfig& c = cfg.catp;
  if (frames.rank() != 3 || frames.extent(0) != c.frames || frames.extent(1) != c.patches ||
      frames.extent(2) != c.feature_dim) {
    throw ValidationError("lsa: clip shape " + frames.shape_string() + " does not match config");
  }
  std::vector<Var> per_frame;
  per_frame.reserve(c.frames);
  for (std::size_t t = 0; t < c.frames; ++t) {
    Var patches = tape.constant(frames.plane(t));
    if (cfg.spatial_mode == SpatialMode::kMeanPool) {
      per_frame.push_back(mean_pool_frame(tape, patches));
    } else {
      per_frame.push_back(aggregate_frame(tape, patches, c));
    }
  }
  return tape.concat_rows(per_frame);
}

}  // namespace vcore::lsa
