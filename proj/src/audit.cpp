#include "audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "rng.hpp"

namespace vcore {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t frame_row_begin(const ModelConfig& cfg, std::size_t frame) {
  const std::size_t offset = cfg.catp.summary_position == SummaryPosition::kPrepend ? 1 : 0;
  return offset + frame * cfg.tokens_per_frame();
}

std::optional<std::size_t> summary_row(const ModelConfig& cfg) {
  switch (cfg.catp.summary_position) {
    case SummaryPosition::kTerminal: return cfg.seq_len() - 1;
    case SummaryPosition::kPrepend: return std::size_t{0};
    default: return std::nullopt;
  }
}

double row_range_deviation(const DenseArray& a, const DenseArray& b, std::size_t begin,
                           std::size_t count) {
  double m = 0.0;
  for (std::size_t i = begin; i < begin + count; ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      m = std::max(m, std::fabs(a.at(i, j) - b.at(i, j)));
    }
  }
  return m;
}

DenseArray random_frames(const ModelConfig& cfg, std::uint64_t seed) {
  DenseArray frames({cfg.catp.frames, cfg.catp.patches, cfg.catp.feature_dim});
  Rng rng(seed);
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = rng.normal();
  return frames;
}

void check_finite_output(const DenseArray& z) {
  if (!z.all_finite()) throw NumericError("audit: non-finite model output");
}

std::vector<std::size_t> pick_coords(std::size_t total, std::size_t max_coords,
                                     std::uint64_t seed) {
  std::vector<std::size_t> coords;
  if (max_coords == 0 || total <= max_coords) {
    coords.resize(total);
    for (std::size_t i = 0; i < total; ++i) coords[i] = i;
    return coords;
  }
  Rng rng(seed);
  std::vector<std::size_t> pool(total);
  for (std::size_t i = 0; i < total; ++i) pool[i] = i;
  for (std::size_t i = 0; i < max_coords; ++i) {
    std::swap(pool[i], pool[i + rng.uniform_index(total - i)]);
  }
  pool.resize(max_coords);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

MaskCheck mask_validate(const DenseArray& mask, const ModelConfig& cfg) {
  const std::size_t s = cfg.seq_len();
  MaskCheck result;
  if (!mask.is_matrix() || mask.rows() != s || mask.cols() != s) {
    throw ValidationError("mask_validate: mask " + mask.shape_string() +
                          " does not match sequence length " + std::to_string(s));
  }
  const std::size_t k = cfg.tokens_per_frame();
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const bool allowed =
          cfg.catp.mask_mode == MaskMode::kBidirectional ||
          catp::temporal_group(i, k, s, cfg.catp.summary_position) >=
              catp::temporal_group(j, k, s, cfg.catp.summary_position);
      const double expected = allowed ? 0.0 : -kInf;
      if (mask.at(i, j) != expected) {
        result.pass = false;
        result.row = i;
        result.col = j;
        return result;
      }
    }
  }
  return result;
}

ProbeResult perturb_probe(Model& model, const DenseArray& frames, std::size_t frame,
                          const PerturbSpec& spec) {
  const ModelConfig& cfg = model.config();
  if (frame >= cfg.catp.frames) throw ValidationError("perturb_probe: frame out of range");
  if (spec.magnitude == 0.0) throw ValidationError("perturb_probe: perturbation must be nonzero");

  const DenseArray baseline = model.project(frames);
  check_finite_output(baseline);

  DenseArray shifted = frames;
  const std::size_t per_frame = cfg.catp.patches * cfg.catp.feature_dim;
  double* target = shifted.data() + frame * per_frame;
  for (std::size_t i = 0; i < per_frame; ++i) target[i] += spec.magnitude;
  const DenseArray perturbed = model.project(shifted);
  check_finite_output(perturbed);

  ProbeResult result;
  result.frame_deviation.resize(cfg.catp.frames);
  const std::size_t k = cfg.tokens_per_frame();
  for (std::size_t t = 0; t < cfg.catp.frames; ++t) {
    result.frame_deviation[t] =
        row_range_deviation(baseline, perturbed, frame_row_begin(cfg, t), k);
  }
  if (auto row = summary_row(cfg)) {
    result.summary_deviation = row_range_deviation(baseline, perturbed, *row, 1);
  }
  return result;
}

DenseArray jacobian_block(Model& model, const DenseArray& frames, std::size_t t_out,
                          std::size_t t_in, double eps, std::size_t max_coords,
                          std::uint64_t seed) {
  const ModelConfig& cfg = model.config();
  if (t_out >= cfg.catp.frames || t_in >= cfg.catp.frames) {
    throw ValidationError("jacobian_block: frame out of range");
  }
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw ValidationError("jacobian_block: eps must lie in [1e-7, 1e-3]");
  }
  const std::size_t per_frame = cfg.catp.patches * cfg.catp.feature_dim;
  const std::vector<std::size_t> coords = pick_coords(per_frame, max_coords, seed);
  const std::size_t k = cfg.tokens_per_frame();
  const std::size_t out_rows = k;
  const std::size_t out_begin = frame_row_begin(cfg, t_out);
  const std::size_t d_llm = cfg.catp.llm_dim;
  DenseArray jac = DenseArray::matrix(out_rows * d_llm, coords.size());

  DenseArray work = frames;
  double* base = work.data() + t_in * per_frame;
  for (std::size_t c = 0; c < coords.size(); ++c) {
    const double saved = base[coords[c]];
    base[coords[c]] = saved + eps;
    const DenseArray up = model.project(work);
    base[coords[c]] = saved - eps;
    const DenseArray down = model.project(work);
    base[coords[c]] = saved;
    check_finite_output(up);
    check_finite_output(down);
    for (std::size_t r = 0; r < out_rows; ++r) {
      for (std::size_t j = 0; j < d_llm; ++j) {
        jac.at(r * d_llm + j, c) =
            (up.at(out_begin + r, j) - down.at(out_begin + r, j)) / (2.0 * eps);
      }
    }
  }
  return jac;
}

LeakageReport audit_model(Model& model, const AuditOptions& opts) {
  if (opts.trials < 1) throw ValidationError("audit_model: trials must be >= 1");
  const ModelConfig& cfg = model.config();
  const std::size_t frames = cfg.catp.frames;

  LeakageReport report;
  report.config = cfg;
  report.trials = opts.trials;
  report.seed = opts.seed;
  report.mask_check = mask_validate(model.mask(), cfg);
  report.probe_deviation = DenseArray::matrix(frames, frames);
  report.jacobian_max = DenseArray::matrix(frames, frames);
  report.summary_reach.assign(frames, 0.0);

  for (std::size_t trial = 0; trial < opts.trials; ++trial) {
    const DenseArray input = random_frames(cfg, mix_seed(opts.seed, trial));
    for (std::size_t src = 0; src < frames; ++src) {
      const ProbeResult probe = perturb_probe(model, input, src, opts.perturb);
      for (std::size_t dst = 0; dst < frames; ++dst) {
        report.probe_deviation.at(src, dst) =
            std::max(report.probe_deviation.at(src, dst), probe.frame_deviation[dst]);
      }
      report.summary_reach[src] = std::max(report.summary_reach[src], probe.summary_deviation);
    }
  }

  if (opts.jacobian) {
    // One sweep per input frame covers every output frame at once.
    const DenseArray input = random_frames(cfg, mix_seed(opts.seed, 0));
    const std::size_t per_frame = cfg.catp.patches * cfg.catp.feature_dim;
    const std::size_t k = cfg.tokens_per_frame();
    DenseArray work = input;
    for (std::size_t t_in = 0; t_in < frames; ++t_in) {
      const std::vector<std::size_t> coords =
          pick_coords(per_frame, opts.jacobian_max_coords, mix_seed(opts.seed, 0xc0 + t_in));
      double* base = work.data() + t_in * per_frame;
      for (std::size_t coord : coords) {
        const double saved = base[coord];
        base[coord] = saved + opts.jacobian_eps;
        const DenseArray up = model.project(work);
        base[coord] = saved - opts.jacobian_eps;
        const DenseArray down = model.project(work);
        base[coord] = saved;
        for (std::size_t t_out = 0; t_out < frames; ++t_out) {
          const std::size_t begin = frame_row_begin(cfg, t_out);
          double m = report.jacobian_max.at(t_out, t_in);
          for (std::size_t r = begin; r < begin + k; ++r) {
            for (std::size_t j = 0; j < up.cols(); ++j) {
              m = std::max(m, std::fabs((up.at(r, j) - down.at(r, j)) /
                                        (2.0 * opts.jacobian_eps)));
            }
          }
          report.jacobian_max.at(t_out, t_in) = m;
        }
      }
    }
  }

  report.causal_clean = true;
  for (std::size_t src = 0; src < frames; ++src) {
    for (std::size_t dst = 0; dst < src; ++dst) {
      if (report.probe_deviation.at(src, dst) != 0.0) report.causal_clean = false;
    }
  }
  return report;
}

std::string LeakageReport::to_text() const {
  KvText kv;
  kv.set("mask_mode", to_string(config.catp.mask_mode));
  kv.set("summary_position", to_string(config.catp.summary_position));
  kv.set("summary_agg", to_string(config.catp.summary_agg));
  kv.set("temporal_mode", to_string(config.catp.temporal_mode));
  kv.set("spatial_mode", to_string(config.spatial_mode));
  kv.set("frames", static_cast<std::uint64_t>(config.catp.frames));
  kv.set("tokens_per_frame", static_cast<std::uint64_t>(config.tokens_per_frame()));
  kv.set("trials", static_cast<std::uint64_t>(trials));
  kv.set("seed", seed);
  kv.set("mask_check", mask_check.pass ? "pass" : "fail");
  if (!mask_check.pass) {
    kv.set("mask_violation_row", static_cast<std::uint64_t>(mask_check.row));
    kv.set("mask_violation_col", static_cast<std::uint64_t>(mask_check.col));
  }
  const std::size_t n = config.catp.frames;
  for (std::size_t src = 0; src < n; ++src) {
    for (std::size_t dst = 0; dst < n; ++dst) {
      kv.set("probe.src" + std::to_string(src) + ".dst" + std::to_string(dst),
             probe_deviation.at(src, dst));
    }
  }
  for (std::size_t out = 0; out < n; ++out) {
    for (std::size_t in = 0; in < n; ++in) {
      kv.set("jacobian.out" + std::to_string(out) + ".in" + std::to_string(in),
             jacobian_max.at(out, in));
    }
  }
  for (std::size_t src = 0; src < n; ++src) {
    kv.set("summary_reach.src" + std::to_string(src), summary_reach[src]);
  }
  kv.set("verdict", causal_clean ? "causal_clean" : "leaky");
  return kv.to_text();
}

}  // namespace vcore
