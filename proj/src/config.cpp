#include "config.hpp"

#include <cmath>

#include "error.hpp"

namespace vcore {

std::string to_string(MaskMode m) {
  return m == MaskMode::kBlockCausal ? "block_causal" : "bidirectional";
}

std::string to_string(SummaryPosition p) {
  switch (p) {
    case SummaryPosition::kTerminal: return "terminal";
    case SummaryPosition::kPrepend: return "prepend";
    default: return "none";
  }
}

std::string to_string(SummaryAgg a) {
  return a == SummaryAgg::kLearnableQuery ? "learnable" : "avgpool";
}

std::string to_string(TemporalMode t) {
  return t == TemporalMode::kTransformer ? "transformer" : "linear";
}

std::string to_string(SpatialMode s) {
  return s == SpatialMode::kLearnableAggregation ? "lsa" : "meanpool";
}

namespace {

[[noreturn]] void bad_enum(const char* what, const std::string& s) {
  throw ValidationError(std::string("unknown ") + what + " '" + s + "'");
}

}  // namespace

MaskMode mask_mode_from_string(const std::string& s) {
  if (s == "block_causal") return MaskMode::kBlockCausal;
  if (s == "bidirectional") return MaskMode::kBidirectional;
  bad_enum("mask_mode", s);
}

SummaryPosition summary_position_from_string(const std::string& s) {
  if (s == "terminal") return SummaryPosition::kTerminal;
  if (s == "prepend") return SummaryPosition::kPrepend;
  if (s == "none") return SummaryPosition::kNone;
  bad_enum("summary_position", s);
}

SummaryAgg summary_agg_from_string(const std::string& s) {
  if (s == "learnable") return SummaryAgg::kLearnableQuery;
  if (s == "avgpool") return SummaryAgg::kAvgPool;
  bad_enum("summary_agg", s);
}

TemporalMode temporal_mode_from_string(const std::string& s) {
  if (s == "transformer") return TemporalMode::kTransformer;
  if (s == "linear") return TemporalMode::kLinear;
  bad_enum("temporal_mode", s);
}

SpatialMode spatial_mode_from_string(const std::string& s) {
  if (s == "lsa") return SpatialMode::kLearnableAggregation;
  if (s == "meanpool") return SpatialMode::kMeanPool;
  bad_enum("spatial_mode", s);
}

void CatpConfig::validate() const {
  if (frames < 1 || spatial_tokens < 1 || heads < 1 || feature_dim < 1 || llm_dim < 1 ||
      patches < 1) {
    throw ValidationError("config: all extents must be >= 1");
  }
  if (feature_dim % heads != 0) {
    throw ValidationError("config: feature_dim " + std::to_string(feature_dim) +
                          " not divisible by heads " + std::to_string(heads));
  }
  if (summary_agg == SummaryAgg::kAvgPool && summary_position == SummaryPosition::kPrepend) {
    throw ValidationError("config: avgpool summary aggregation requires the terminal position");
  }
}

void ModelConfig::validate() const { catp.validate(); }

std::size_t DatasetSpec::train_count() const {
  const auto n = static_cast<long long>(
      std::llround(train_split * static_cast<double>(n_samples)));
  if (n < 0) return 0;
  if (n > static_cast<long long>(n_samples)) return n_samples;
  return static_cast<std::size_t>(n);
}

void DatasetSpec::validate() const {
  if (frames < 2) throw ValidationError("dataset: frames must be >= 2 to order two events");
  if (n_samples < 1) throw ValidationError("dataset: n_samples must be >= 1");
  if (n_events < 2) throw ValidationError("dataset: n_events must be >= 2");
  if (feature_dim < 8) throw ValidationError("dataset: feature_dim must be >= 8");
  if (patches_per_event < 1 || patches_per_event > patches) {
    throw ValidationError("dataset: patches_per_event must lie in [1, patches]");
  }
  if (!(train_split > 0.0 && train_split < 1.0)) {
    throw ValidationError("dataset: train_split must lie in (0, 1)");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ValidationError("dataset: noise_std must be a finite non-negative number");
  }
  if (!std::isfinite(event_scale)) throw ValidationError("dataset: event_scale must be finite");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ValidationError("optimizer: learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("optimizer: betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ValidationError("optimizer: epsilon must be > 0");
  if (epochs < 1) throw ValidationError("optimizer: epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("optimizer: batch_size must be >= 1");
}

void RunConfig::validate() const {
  model.validate();
  data.validate();
  optim.validate();
  if (data.frames != model.catp.frames || data.patches != model.catp.patches ||
      data.feature_dim != model.catp.feature_dim) {
    throw ValidationError("config: dataset dims (frames/patches/feature_dim) must match model");
  }
}

KvText RunConfig::to_kv() const {
  KvText kv;
  const CatpConfig& c = model.catp;
  kv.set("frames", static_cast<std::uint64_t>(c.frames));
  kv.set("spatial_tokens", static_cast<std::uint64_t>(c.spatial_tokens));
  kv.set("layers", static_cast<std::uint64_t>(c.layers));
  kv.set("heads", static_cast<std::uint64_t>(c.heads));
  kv.set("feature_dim", static_cast<std::uint64_t>(c.feature_dim));
  kv.set("llm_dim", static_cast<std::uint64_t>(c.llm_dim));
  kv.set("patches", static_cast<std::uint64_t>(c.patches));
  kv.set("mask_mode", to_string(c.mask_mode));
  kv.set("summary_position", to_string(c.summary_position));
  kv.set("summary_agg", to_string(c.summary_agg));
  kv.set("temporal_mode", to_string(c.temporal_mode));
  kv.set("spatial_mode", to_string(model.spatial_mode));
  kv.set("samples", static_cast<std::uint64_t>(data.n_samples));
  kv.set("events", static_cast<std::uint64_t>(data.n_events));
  kv.set("noise_std", data.noise_std);
  kv.set("event_scale", data.event_scale);
  kv.set("patches_per_event", static_cast<std::uint64_t>(data.patches_per_event));
  kv.set("train_split", data.train_split);
  kv.set("data_seed", data.seed);
  kv.set("learning_rate", optim.learning_rate);
  kv.set("beta1", optim.beta1);
  kv.set("beta2", optim.beta2);
  kv.set("adam_epsilon", optim.epsilon);
  kv.set("epochs", static_cast<std::uint64_t>(optim.epochs));
  kv.set("batch_size", static_cast<std::uint64_t>(optim.batch_size));
  kv.set("stop_accuracy", optim.stop_accuracy);
  kv.set("seed", seed);
  kv.set("data_dir", data_dir);
  return kv;
}

void RunConfig::set_field(const std::string& key, const std::string& value) {
  CatpConfig& c = model.catp;
  auto u64 = [&](const char* k) {
    KvText kv;
    kv.set(k, value);
    return static_cast<std::size_t>(kv.get_u64(k));
  };
  auto dbl = [&](const char* k) {
    KvText kv;
    kv.set(k, value);
    return kv.get_double(k);
  };
  if (key == "frames") {
    c.frames = u64("frames");
    data.frames = c.frames;
  } else if (key == "spatial_tokens") {
    c.spatial_tokens = u64(key.c_str());
  } else if (key == "layers") {
    c.layers = u64(key.c_str());
  } else if (key == "heads") {
    c.heads = u64(key.c_str());
  } else if (key == "feature_dim") {
    c.feature_dim = u64(key.c_str());
    data.feature_dim = c.feature_dim;
  } else if (key == "llm_dim") {
    c.llm_dim = u64(key.c_str());
  } else if (key == "patches") {
    c.patches = u64(key.c_str());
    data.patches = c.patches;
  } else if (key == "mask_mode") {
    c.mask_mode = mask_mode_from_string(value);
  } else if (key == "summary_position") {
    c.summary_position = summary_position_from_string(value);
  } else if (key == "summary_agg") {
    c.summary_agg = summary_agg_from_string(value);
  } else if (key == "temporal_mode") {
    c.temporal_mode = temporal_mode_from_string(value);
  } else if (key == "spatial_mode") {
    model.spatial_mode = spatial_mode_from_string(value);
  } else if (key == "samples") {
    data.n_samples = u64(key.c_str());
  } else if (key == "events") {
    data.n_events = u64(key.c_str());
  } else if (key == "noise_std") {
    data.noise_std = dbl(key.c_str());
  } else if (key == "event_scale") {
    data.event_scale = dbl(key.c_str());
  } else if (key == "patches_per_event") {
    data.patches_per_event = u64(key.c_str());
  } else if (key == "train_split") {
    data.train_split = dbl(key.c_str());
  } else if (key == "data_seed") {
    data.seed = u64(key.c_str());
  } else if (key == "learning_rate") {
    optim.learning_rate = dbl(key.c_str());
  } else if (key == "beta1") {
    optim.beta1 = dbl(key.c_str());
  } else if (key == "beta2") {
    optim.beta2 = dbl(key.c_str());
  } else if (key == "adam_epsilon") {
    optim.epsilon = dbl(key.c_str());
  } else if (key == "epochs") {
    optim.epochs = u64(key.c_str());
  } else if (key == "batch_size") {
    optim.batch_size = u64(key.c_str());
  } else if (key == "stop_accuracy") {
    optim.stop_accuracy = dbl(key.c_str());
  } else if (key == "seed") {
    seed = u64(key.c_str());
  } else if (key == "data_dir") {
    data_dir = value;
  } else {
    throw ValidationError("config: unknown key '" + key + "'");
  }
}

RunConfig RunConfig::from_kv(const KvText& kv) {
  RunConfig cfg = RunConfig::toy_default();
  for (const auto& [k, v] : kv.pairs()) cfg.set_field(k, v);
  return cfg;
}

RunConfig RunConfig::from_text(const std::string& text) { return from_kv(KvText::parse(text)); }

RunConfig RunConfig::load(const std::string& path) { return from_kv(KvText::load(path)); }

void RunConfig::save(const std::string& path) const { to_kv().save(path); }

RunConfig RunConfig::toy_default() {
  RunConfig cfg;
  cfg.model.catp.frames = 8;
  cfg.model.catp.spatial_tokens = 4;
  cfg.model.catp.layers = 2;
  cfg.model.catp.heads = 4;
  cfg.model.catp.feature_dim = 32;
  cfg.model.catp.llm_dim = 64;
  cfg.model.catp.patches = 16;
  cfg.model.spatial_mode = SpatialMode::kLearnableAggregation;
  cfg.data.n_samples = 2500;
  cfg.data.frames = 8;
  cfg.data.patches = 16;
  cfg.data.feature_dim = 32;
  cfg.data.n_events = 8;
  cfg.data.noise_std = 0.1;
  cfg.data.event_scale = 1.0;
  cfg.data.patches_per_event = 4;
  cfg.data.train_split = 0.8;
  cfg.data.seed = 7;
  cfg.seed = 1;
  return cfg;
}

}  // namespace vcore
