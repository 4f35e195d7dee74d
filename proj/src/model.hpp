#pragma once

#include <cstdint>

#include "catp.hpp"
#include "config.hpp"
#include "lsa.hpp"
#include "param_store.hpp"
#include "tape.hpp"

namespace vcore {

/// The full projection stack (spatial aggregation, temporal projector, output
/// projection) plus the two-way ordering head. Owns the parameter store and
/// the attention mask. Forward evaluation with frozen parameters is pure;
/// training owns the instance for the duration of a step.
class Model {
 public:
  static constexpr const char* kHeadWeight = "head.weight";
  static constexpr const char* kHeadBias = "head.bias";

  Model(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  const DenseArray& mask() const { return mask_; }

  struct Forward {
    Var tokens;  // S x d_llm
    Var global;  // 1 x d_llm
  };

  /// frames: T x N x d_v constant input.
  Forward forward(Tape& tape, const DenseArray& frames);

  /// Ordering logits for a query pair of event embeddings (each 1 x d_v).
  Var logits(Tape& tape, const DenseArray& frames, const DenseArray& event_a,
             const DenseArray& event_b);

  /// Convenience forward on a private tape; returns the projected sequence.
  DenseArray project(const DenseArray& frames);

 private:
  ModelConfig cfg_;
  ParameterStore store_;
  DenseArray mask_;
};

}  // namespace vcore
