#pragma once

#include <map>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "config.hpp"
#include "model.hpp"
#include "synth.hpp"

namespace vcore {

/// Adam with bias correction, no weight decay, no schedule. Steps every
/// trainable parameter in name order using the store's accumulated gradients.
class Adam {
 public:
  explicit Adam(const OptimizerConfig& cfg) : cfg_(cfg) {}
  void step(ParameterStore& store);

 private:
  struct Moments {
    DenseArray m, v;
  };
  OptimizerConfig cfg_;
  std::size_t steps_ = 0;
  std::map<std::string, Moments> moments_;
};

struct EpochMetrics {
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double seconds = 0.0;
};

struct Metrics {
  std::vector<EpochMetrics> epochs;
  double final_train_loss = 0.0;
  double final_train_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  double total_seconds = 0.0;
  std::string leakage_verdict;
  std::uint32_t train_crc32 = 0;
  std::uint32_t test_crc32 = 0;

  KvText to_kv() const;
  std::string to_table() const;
};

struct TrainResult {
  Metrics metrics;
  Checkpoint checkpoint;
};

struct Evaluation {
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

/// Forward-only pass over a dataset; deterministic.
Evaluation evaluate(Model& model, const Dataset& ds, const EventVocab& vocab);

/// The full loop: seeded shuffling, fixed batch order, cross-entropy on the
/// ordering head, divergence detection, optional early stop on test accuracy.
/// Deterministic in the RunConfig; does no file I/O.
TrainResult train_model(const RunConfig& cfg, const DatasetBundle& data);

/// Wrapper handling the filesystem: loads the dataset from cfg.data_dir or
/// generates it (materializing it under out_dir/data when out_dir is given),
/// trains, audits, and writes checkpoint.vckpt, config.txt, metrics.kv,
/// metrics.txt and audit.txt into out_dir.
Metrics run_training(const RunConfig& cfg, const std::string& out_dir);

/// Rebuilds the model from the checkpoint's embedded config and scores it on
/// a dataset file. Dims must match the checkpoint config.
Evaluation evaluate_checkpoint(const std::string& ckpt_path, const std::string& dataset_path);

/// Dataset resolution shared by training and the ablation runner.
DatasetBundle resolve_dataset(const RunConfig& cfg, const std::string& out_dir);

}  // namespace vcore
