#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "dense_array.hpp"
#include "model.hpp"

namespace vcore {

// Independent verification of the causality contract: exhaustive mask checks,
// forward perturbation probes, and finite-difference Jacobian blocks between
// frame pairs. The probes read only projected outputs, so they certify the
// whole stack, not just the mask construction.

struct MaskCheck {
  bool pass = true;
  std::size_t row = 0, col = 0;  // first violation in row-major order
};

/// Exhaustively compares a mask against what the config's mask mode demands
/// for every (i, j). Failures are reported, not thrown.
MaskCheck mask_validate(const DenseArray& mask, const ModelConfig& cfg);

struct PerturbSpec {
  double magnitude = 1.0;  // added to every coordinate of the target frame
};

struct ProbeResult {
  std::vector<double> frame_deviation;  // max-abs output deviation per frame
  double summary_deviation = 0.0;       // 0 when the model has no summary slot
};

/// Runs the model twice (baseline and with frame `frame` perturbed) and
/// reports the max-abs deviation of the projected rows grouped by frame plus
/// the summary slot.
ProbeResult perturb_probe(Model& model, const DenseArray& frames, std::size_t frame,
                          const PerturbSpec& spec = {});

/// Central-difference sensitivities of frame t_out's projected rows with
/// respect to frame t_in's input coordinates. Coordinates are subsampled with
/// a seeded draw when the frame has more than max_coords of them (0 = all).
DenseArray jacobian_block(Model& model, const DenseArray& frames, std::size_t t_out,
                          std::size_t t_in, double eps, std::size_t max_coords = 0,
                          std::uint64_t seed = 0);

struct LeakageReport {
  ModelConfig config;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  MaskCheck mask_check;
  DenseArray probe_deviation;        // T x T, [src][dst], max over trials
  DenseArray jacobian_max;           // T x T, [out][in], max-abs entry
  std::vector<double> summary_reach; // per source frame, max over trials
  bool causal_clean = false;         // every (src > dst) deviation exactly 0

  /// Stable key order, key=value lines; diffable across runs.
  std::string to_text() const;
};

struct AuditOptions {
  std::size_t trials = 20;
  std::uint64_t seed = 7;
  PerturbSpec perturb;
  bool jacobian = true;
  std::size_t jacobian_max_coords = 64;
  double jacobian_eps = 1e-5;
};

/// Probes the model over seeded random inputs; deterministic in (config, seed).
LeakageReport audit_model(Model& model, const AuditOptions& opts = {});

}  // namespace vcore
