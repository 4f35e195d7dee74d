#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "dense_array.hpp"

namespace vcore {

// Synthetic event-ordering task. Each sample is a clip of per-frame patch
// features: pure noise everywhere except two frames, which carry a planted
// event embedding in a few patches. The query is the (canonically ordered)
// event pair; the label says whether the first query event's frame precedes
// the second's. Labels are known at construction time, so the task has an
// exact correctness oracle.

struct EventVocab {
  std::size_t n_events = 0;
  std::size_t feature_dim = 0;
  std::uint64_t seed = 0;
  DenseArray embeddings;  // n_events x d_v, unit rows, |pairwise cos| < 0.5

  /// Embedding row as a length-d_v vector.
  DenseArray embedding(std::size_t event) const;
};

/// Deterministic in (n_events, feature_dim, seed). Vectors violating the
/// similarity bound are redrawn, up to 1000 times in total.
EventVocab gen_vocab(std::size_t n_events, std::size_t feature_dim, std::uint64_t seed);

struct SyntheticSample {
  DenseArray frames;  // T x N x d_v
  std::size_t event_a = 0, event_b = 0;  // vocab ids, event_a < event_b
  std::size_t frame_a = 0, frame_b = 0;  // distinct frame indices
  std::vector<std::size_t> patches_a, patches_b;  // planted patch rows
  int label = 0;  // 1 iff frame_a < frame_b
  std::uint64_t noise_seed = 0;
};

/// Builds a sample with the given placement; noise and patch choice come from
/// noise_seed. label is derived from the frame order.
SyntheticSample plant_sample(const DatasetSpec& spec, const EventVocab& vocab,
                             std::size_t event_a, std::size_t event_b, std::size_t frame_a,
                             std::size_t frame_b, std::uint64_t noise_seed);

/// Sample `index` of the dataset stream: draws the event pair and frame pair
/// from a per-index seed, with the frame order chosen so labels alternate
/// (exact balance over any contiguous index range).
SyntheticSample gen_sample(const DatasetSpec& spec, const EventVocab& vocab, std::size_t index);

struct Dataset {
  std::size_t frames = 0, patches = 0, feature_dim = 0;
  std::vector<SyntheticSample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t label_count(int label) const;
};

struct DatasetBundle {
  DatasetSpec spec;
  EventVocab vocab;
  Dataset train;
  Dataset test;
};

/// Generates the full dataset: disjoint deterministic split, values passed
/// through the file format's 32-bit storage precision so an in-memory bundle
/// and a reloaded one are identical.
DatasetBundle gen_dataset(const DatasetSpec& spec);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Writes train.vcds, test.vcds and manifest.txt (spec + counts + file CRCs).
void write_dataset_dir(const DatasetBundle& bundle, const std::string& dir);
/// Reads the manifest, regenerates the vocab from the spec, loads and
/// CRC-checks both files.
DatasetBundle open_dataset_dir(const std::string& dir);

DatasetSpec spec_from_manifest(const KvText& kv);

/// The construction-time recovery rule: locate each query event's frame by
/// maximum patch inner product and compare the indices. Returns the predicted
/// label; achieves 100% accuracy at zero noise.
int solve_by_construction(const SyntheticSample& s, const EventVocab& vocab);
double oracle_accuracy(const Dataset& ds, const EventVocab& vocab);

}  // namespace vcore
