#include "model.hpp"

#include "error.hpp"
#include "model_init.hpp"

namespace vcore {

Model::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(mix_seed(seed, 0x6d6f64656c));
  if (cfg_.spatial_mode == SpatialMode::kLearnableAggregation) {
    lsa::register_params(store_, cfg_.catp, rng);
  }
  catp::register_params(store_, cfg_, rng);
  const std::size_t head_in = cfg_.catp.llm_dim + 2 * cfg_.catp.feature_dim;
  store_.add(kHeadWeight, normal_array({2, head_in}, kInitStd, rng));
  store_.add(kHeadBias, DenseArray({2}));
  mask_ = catp::build_mask(cfg_);
}

Model::Forward Model::forward(Tape& tape, const DenseArray& frames) {
  Var block = lsa::aggregate_video(tape, frames, cfg_);
  Var h_in = catp::assemble_sequence(tape, block, cfg_);
  Var x0 = catp::add_positions(tape, h_in, cfg_);
  Var tokens = catp::forward(tape, x0, cfg_, mask_);
  Var global = catp::extract_global(tape, tokens, cfg_);
  return {tokens, global};
}

Var Model::logits(Tape& tape, const DenseArray& frames, const DenseArray& event_a,
                  const DenseArray& event_b) {
  const std::size_t d = cfg_.catp.feature_dim;
  if (event_a.size() != d || event_b.size() != d) {
    throw ValidationError("logits: event embeddings must have length " + std::to_string(d));
  }
  Forward f = forward(tape, frames);
  Var ea = tape.constant(DenseArray({1, d}, std::vector<double>(event_a.data(),
                                                                event_a.data() + d)));
  Var eb = tape.constant(DenseArray({1, d}, std::vector<double>(event_b.data(),
                                                                event_b.data() + d)));
  Var in = tape.concat_cols({f.global, ea, eb});
  return tape.add_bias(tape.matmul(in, tape.transpose(tape.param(kHeadWeight))),
                       tape.param(kHeadBias));
}

DenseArray Model::project(const DenseArray& frames) {
  Tape tape(&store_);
  Forward f = forward(tape, frames);
  return tape.val(f.tokens);
}

}  // namespace vcore
