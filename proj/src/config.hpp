#pragma once

#include <cstdint>
#include <string>

#include "kv.hpp"

namespace vcore {

enum class MaskMode { kBlockCausal, kBidirectional };
enum class SummaryPosition { kTerminal, kPrepend, kNone };
enum class SummaryAgg { kLearnableQuery, kAvgPool };
enum class TemporalMode { kTransformer, kLinear };
enum class SpatialMode { kLearnableAggregation, kMeanPool };

std::string to_string(MaskMode m);
std::string to_string(SummaryPosition p);
std::string to_string(SummaryAgg a);
std::string to_string(TemporalMode t);
std::string to_string(SpatialMode s);
MaskMode mask_mode_from_string(const std::string& s);
SummaryPosition summary_position_from_string(const std::string& s);
SummaryAgg summary_agg_from_string(const std::string& s);
TemporalMode temporal_mode_from_string(const std::string& s);
SpatialMode spatial_mode_from_string(const std::string& s);

/// Architecture hyperparameters of the projection stack plus the ablation
/// mode switches.
struct CatpConfig {
  std::size_t frames = 16;          // T
  std::size_t spatial_tokens = 16;  // K, per-frame token budget
  std::size_t layers = 2;           // L
  std::size_t heads = 8;            // h
  std::size_t feature_dim = 1024;   // d_v
  std::size_t llm_dim = 4096;       // d_llm
  std::size_t patches = 256;        // N, patch features per frame
  MaskMode mask_mode = MaskMode::kBlockCausal;
  SummaryPosition summary_position = SummaryPosition::kTerminal;
  SummaryAgg summary_agg = SummaryAgg::kLearnableQuery;
  TemporalMode temporal_mode = TemporalMode::kTransformer;

  bool has_summary() const { return summary_position != SummaryPosition::kNone; }
  void validate() const;
};

/// Architecture plus the spatial aggregation choice; everything a model
/// instance needs.
struct ModelConfig {
  CatpConfig catp;
  SpatialMode spatial_mode = SpatialMode::kLearnableAggregation;

  /// Tokens kept per frame after spatial aggregation (1 under mean pooling).
  std::size_t tokens_per_frame() const {
    return spatial_mode == SpatialMode::kMeanPool ? 1 : catp.spatial_tokens;
  }
  std::size_t seq_len() const {
    return catp.frames * tokens_per_frame() + (catp.has_summary() ? 1 : 0);
  }
  void validate() const;
};

struct DatasetSpec {
  std::size_t n_samples = 2500;
  std::size_t frames = 16;       // T, must match the model
  std::size_t patches = 256;     // N
  std::size_t feature_dim = 1024;  // d_v
  std::size_t n_events = 8;
  double noise_std = 0.1;
  double event_scale = 1.0;
  std::size_t patches_per_event = 4;
  double train_split = 0.8;
  std::uint64_t seed = 7;

  std::size_t train_count() const;
  void validate() const;
};

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  /// Stop after the first epoch whose test accuracy reaches this value;
  /// 0 disables early stopping.
  double stop_accuracy = 0.0;
  void validate() const;
};

/// Everything a training run needs, serializable losslessly as key=value text.
struct RunConfig {
  ModelConfig model;
  DatasetSpec data;
  OptimizerConfig optim;
  std::uint64_t seed = 1;
  /// Directory holding train.vcds/test.vcds/manifest.txt; empty means
  /// "generate from the spec".
  std::string data_dir;

  void validate() const;
  KvText to_kv() const;
  std::string to_text() const { return to_kv().to_text(); }
  static RunConfig from_kv(const KvText& kv);
  static RunConfig from_text(const std::string& text);
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;
  /// Update a single field by its config-file key.
  void set_field(const std::string& key, const std::string& value);

  /// Toy-scale defaults used throughout the test harness.
  static RunConfig toy_default();
};

}  // namespace vcore
