#include "catp.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"
#include "model_init.hpp"

namespace vcore::catp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SeqLayout {
  std::size_t frames;
  std::size_t tokens_per_frame;
  bool has_summary;
  bool prepend;
};

SeqLayout layout_of(std::size_t tokens_per_frame, std::size_t seq_len, SummaryPosition summary) {
  const bool has_summary = summary != SummaryPosition::kNone;
  const std::size_t frame_tokens = seq_len - (has_summary ? 1 : 0);
  if (tokens_per_frame == 0 || frame_tokens == 0 || frame_tokens % tokens_per_frame != 0) {
    throw ValidationError("temporal_index: sequence length " + std::to_string(seq_len) +
                          " inconsistent with " + std::to_string(tokens_per_frame) +
                          " tokens per frame");
  }
  return {frame_tokens / tokens_per_frame, tokens_per_frame, has_summary,
          summary == SummaryPosition::kPrepend};
}

}  // namespace

std::string layer_param(std::size_t layer, const char* suffix) {
  return "catp.layer" + std::to_string(layer) + "." + suffix;
}

std::size_t temporal_index(std::size_t i, std::size_t tokens_per_frame, std::size_t seq_len,
                           SummaryPosition summary) {
  const long long g = temporal_group(i, tokens_per_frame, seq_len, summary);
  return g < 0 ? 0 : static_cast<std::size_t>(g);
}

long long temporal_group(std::size_t i, std::size_t tokens_per_frame, std::size_t seq_len,
                         SummaryPosition summary) {
  if (i >= seq_len) {
    throw ValidationError("temporal_index: position " + std::to_string(i) + " out of sequence " +
                          std::to_string(seq_len));
  }
  const SeqLayout lay = layout_of(tokens_per_frame, seq_len, summary);
  if (lay.has_summary) {
    if (lay.prepend) {
      if (i == 0) return -1;
      return static_cast<long long>((i - 1) / lay.tokens_per_frame);
    }
    if (i == seq_len - 1) return static_cast<long long>(lay.frames);
  }
  return static_cast<long long>(i / lay.tokens_per_frame);
}

DenseArray build_mask(const ModelConfig& cfg) {
  const std::size_t s = cfg.seq_len();
  DenseArray mask = DenseArray::matrix(s, s);  // all zero = all allowed
  if (cfg.catp.mask_mode == MaskMode::kBidirectional) return mask;
  const std::size_t k = cfg.tokens_per_frame();
  std::vector<long long> group(s);
  for (std::size_t i = 0; i < s; ++i) {
    group[i] = temporal_group(i, k, s, cfg.catp.summary_position);
  }
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      if (group[i] < group[j]) mask.at(i, j) = -kInf;
    }
  }
  return mask;
}

std::string render_mask(const ModelConfig& cfg) {
  const DenseArray mask = build_mask(cfg);
  const std::size_t s = cfg.seq_len();
  std::string out = "T=" + std::to_string(cfg.catp.frames) +
                    " K=" + std::to_string(cfg.tokens_per_frame()) +
                    " summary=" + to_string(cfg.catp.summary_position) +
                    " mode=" + to_string(cfg.catp.mask_mode) + "\n";
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) out += mask.at(i, j) == 0.0 ? '1' : '0';
    out += '\n';
  }
  return out;
}

void register_params(ParameterStore& store, const ModelConfig& cfg, Rng& rng) {
  const CatpConfig& c = cfg.catp;
  const std::size_t k = cfg.tokens_per_frame();
  store.add(kPosTemporal, normal_array({c.frames + 1, c.feature_dim}, kInitStd, rng));
  store.add(kPosSpatial, normal_array({k + 1, c.feature_dim}, kInitStd, rng));
  if (c.has_summary() && c.summary_agg == SummaryAgg::kLearnableQuery) {
    store.add(kSummaryQuery, normal_array({c.feature_dim}, kInitStd, rng));
  }
  if (c.temporal_mode == TemporalMode::kTransformer) {
    for (std::size_t l = 0; l < c.layers; ++l) {
      for (const char* w : {"attn_wq", "attn_wk", "attn_wv", "attn_wo"}) {
        store.add(layer_param(l, w), normal_array({c.feature_dim, c.feature_dim}, kInitStd, rng));
      }
      store.add(layer_param(l, "ffn_w1"),
                normal_array({c.feature_dim, 4 * c.feature_dim}, kInitStd, rng));
      store.add(layer_param(l, "ffn_w2"),
                normal_array({4 * c.feature_dim, c.feature_dim}, kInitStd, rng));
      for (const char* g : {"ln1_gain", "ln2_gain"}) {
        store.add(layer_param(l, g), DenseArray::full({c.feature_dim}, 1.0));
      }
      for (const char* b : {"ln1_bias", "ln2_bias"}) {
        store.add(layer_param(l, b), DenseArray({c.feature_dim}));
      }
    }
  }
  store.add(kProjWeight, normal_array({c.llm_dim, c.feature_dim}, kInitStd, rng));
  store.add(kProjBias, DenseArray({c.llm_dim}));
}

Var assemble_sequence(Tape& tape, Var frame_block, const ModelConfig& cfg) {
  const CatpConfig& c = cfg.catp;
  const DenseArray& block = tape.val(frame_block);
  if (block.rows() != c.frames * cfg.tokens_per_frame() || block.cols() != c.feature_dim) {
    throw ValidationError("assemble_sequence: frame block " + block.shape_string() +
                          " does not match config");
  }
  if (!c.has_summary()) return frame_block;
  if (c.summary_agg == SummaryAgg::kAvgPool && c.summary_position != SummaryPosition::kTerminal) {
    throw ValidationError("assemble_sequence: avgpool summary is terminal-only");
  }
  Var summary = c.summary_agg == SummaryAgg::kAvgPool
                    ? tape.mean_rows(frame_block)
                    : tape.reshape(tape.param(kSummaryQuery), {std::size_t{1}, c.feature_dim});
  if (c.summary_position == SummaryPosition::kPrepend) {
    return tape.concat_rows({summary, frame_block});
  }
  return tape.concat_rows({frame_block, summary});
}

Var add_positions(Tape& tape, Var h_in, const ModelConfig& cfg) {
  const CatpConfig& c = cfg.catp;
  const std::size_t s = cfg.seq_len();
  const std::size_t k = cfg.tokens_per_frame();
  if (tape.val(h_in).rows() != s) {
    throw ValidationError("add_positions: sequence " + tape.val(h_in).shape_string() +
                          " does not match config length " + std::to_string(s));
  }
  std::vector<std::size_t> temporal_rows(s), spatial_rows(s);
  std::size_t frame_pos = 0;
  for (std::size_t i = 0; i < s; ++i) {
    const bool is_summary =
        (c.summary_position == SummaryPosition::kTerminal && i == s - 1) ||
        (c.summary_position == SummaryPosition::kPrepend && i == 0);
    if (is_summary) {
      temporal_rows[i] = c.frames;  // dedicated slot past every frame
      spatial_rows[i] = k;          // reserved summary row
    } else {
      temporal_rows[i] = frame_pos / k;
      spatial_rows[i] = frame_pos % k;
      ++frame_pos;
    }
  }
  Var p_temp = tape.gather_rows(tape.param(kPosTemporal), std::move(temporal_rows));
  Var p_spat = tape.gather_rows(tape.param(kPosSpatial), std::move(spatial_rows));
  return tape.add(tape.add(h_in, p_temp), p_spat);
}

namespace {

Var attention_block(Tape& tape, Var x, const CatpConfig& c, std::size_t layer,
                    const DenseArray& mask) {
  const std::size_t head_dim = c.feature_dim / c.heads;
  Var q = tape.matmul(x, tape.param(layer_param(layer, "attn_wq")));
  Var k = tape.matmul(x, tape.param(layer_param(layer, "attn_wk")));
  Var v = tape.matmul(x, tape.param(layer_param(layer, "attn_wv")));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Var> heads;
  heads.reserve(c.heads);
  for (std::size_t h = 0; h < c.heads; ++h) {
    Var qh = tape.slice_cols(q, h * head_dim, head_dim);
    Var kh = tape.slice_cols(k, h * head_dim, head_dim);
    Var vh = tape.slice_cols(v, h * head_dim, head_dim);
    Var scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt);
    Var weights = tape.masked_softmax(scores, mask);
    heads.push_back(tape.matmul(weights, vh));
  }
  Var merged = c.heads == 1 ? heads[0] : tape.concat_cols(heads);
  return tape.matmul(merged, tape.param(layer_param(layer, "attn_wo")));
}

}  // namespace

Var forward(Tape& tape, Var x0, const ModelConfig& cfg, const DenseArray& mask) {
  const CatpConfig& c = cfg.catp;
  Var x = x0;
  if (c.temporal_mode == TemporalMode::kTransformer) {
    const std::size_t s = cfg.seq_len();
    if (mask.rows() != s || mask.cols() != s) {
      throw ValidationError("catp::forward: mask " + mask.shape_string() +
                            " does not match sequence length " + std::to_string(s));
    }
    for (std::size_t l = 0; l < c.layers; ++l) {
      Var h1 = tape.layer_norm(x, tape.param(layer_param(l, "ln1_gain")),
                               tape.param(layer_param(l, "ln1_bias")), kLayerNormEps);
      x = tape.add(x, attention_block(tape, h1, c, l, mask));
      Var h2 = tape.layer_norm(x, tape.param(layer_param(l, "ln2_gain")),
                               tape.param(layer_param(l, "ln2_bias")), kLayerNormEps);
      Var f = tape.matmul(tape.gelu(tape.matmul(h2, tape.param(layer_param(l, "ffn_w1")))),
                          tape.param(layer_param(l, "ffn_w2")));
      x = tape.add(x, f);
    }
  }
  return tape.add_bias(tape.matmul(x, tape.transpose(tape.param(kProjWeight))),
                       tape.param(kProjBias));
}

Var extract_global(Tape& tape, Var tokens, const ModelConfig& cfg) {
  const std::size_t s = cfg.seq_len();
  switch (cfg.catp.summary_position) {
    case SummaryPosition::kTerminal: return tape.slice_rows(tokens, s - 1, 1);
    case SummaryPosition::kPrepend: return tape.slice_rows(tokens, 0, 1);
    default: return tape.mean_rows(tokens);
  }
}

}  // namespace vcore::catp
