#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "crc32.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace vcore {

namespace {

// Distinct seed streams hanging off DatasetSpec::seed.
constexpr std::uint64_t kVocabStream = 0xe0cab;
constexpr std::uint64_t kSampleStream = 0x5a3b7e;

constexpr char kDatasetMagic[5] = {'V', 'C', 'D', 'S', '1'};

double storage_round(double v) { return static_cast<double>(static_cast<float>(v)); }

void draw_distinct_pair(Rng& rng, std::size_t n, std::size_t& lo, std::size_t& hi) {
  const std::size_t first = rng.uniform_index(n);
  std::size_t second = rng.uniform_index(n - 1);
  if (second >= first) ++second;
  lo = std::min(first, second);
  hi = std::max(first, second);
}

std::vector<std::size_t> draw_distinct(Rng& rng, std::size_t count, std::size_t n) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(pool[i], pool[i + rng.uniform_index(n - i)]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

DenseArray EventVocab::embedding(std::size_t event) const {
  if (event >= n_events) throw ValidationError("vocab: event id out of range");
  DenseArray e({feature_dim});
  for (std::size_t j = 0; j < feature_dim; ++j) e[j] = embeddings.at(event, j);
  return e;
}

EventVocab gen_vocab(std::size_t n_events, std::size_t feature_dim, std::uint64_t seed) {
  if (n_events < 2) throw ValidationError("gen_vocab: n_events must be >= 2");
  if (feature_dim < 8) throw ValidationError("gen_vocab: feature_dim must be >= 8");
  EventVocab vocab;
  vocab.n_events = n_events;
  vocab.feature_dim = feature_dim;
  vocab.seed = seed;
  vocab.embeddings = DenseArray::matrix(n_events, feature_dim);
  Rng rng(mix_seed(seed, kVocabStream));
  std::size_t redraws = 0;
  std::vector<double> candidate(feature_dim);
  for (std::size_t e = 0; e < n_events;) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < feature_dim; ++j) {
      candidate[j] = rng.normal();
      norm2 += candidate[j] * candidate[j];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t j = 0; j < feature_dim; ++j) candidate[j] *= inv;
    bool ok = true;
    for (std::size_t p = 0; p < e && ok; ++p) {
      double dot = 0.0;
      for (std::size_t j = 0; j < feature_dim; ++j) dot += candidate[j] * vocab.embeddings.at(p, j);
      ok = std::fabs(dot) < 0.5;
    }
    if (!ok) {
      if (++redraws > 1000) {
        throw ValidationError("gen_vocab: similarity bound unsatisfiable after 1000 redraws");
      }
      continue;
    }
    for (std::size_t j = 0; j < feature_dim; ++j) vocab.embeddings.at(e, j) = candidate[j];
    ++e;
  }
  return vocab;
}

SyntheticSample plant_sample(const DatasetSpec& spec, const EventVocab& vocab,
                             std::size_t event_a, std::size_t event_b, std::size_t frame_a,
                             std::size_t frame_b, std::uint64_t noise_seed) {
  if (spec.frames < 2) throw ValidationError("plant_sample: need at least 2 frames");
  if (frame_a == frame_b || frame_a >= spec.frames || frame_b >= spec.frames) {
    throw ValidationError("plant_sample: frame indices must be distinct and in range");
  }
  if (event_a >= vocab.n_events || event_b >= vocab.n_events) {
    throw ValidationError("plant_sample: event ids out of vocab range");
  }
  SyntheticSample s;
  s.event_a = event_a;
  s.event_b = event_b;
  s.frame_a = frame_a;
  s.frame_b = frame_b;
  s.noise_seed = noise_seed;
  s.label = frame_a < frame_b ? 1 : 0;

  Rng rng(noise_seed);
  s.frames = DenseArray({spec.frames, spec.patches, spec.feature_dim});
  if (spec.noise_std > 0.0) {
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
      s.frames[i] = rng.normal(0.0, spec.noise_std);
    }
  }
  s.patches_a = draw_distinct(rng, spec.patches_per_event, spec.patches);
  s.patches_b = draw_distinct(rng, spec.patches_per_event, spec.patches);

  const std::size_t d = spec.feature_dim;
  auto plant = [&](std::size_t frame, const std::vector<std::size_t>& rows, std::size_t event) {
    double* base = s.frames.data() + frame * spec.patches * d;
    for (std::size_t r : rows) {
      double* patch = base + r * d;
      for (std::size_t j = 0; j < d; ++j) {
        patch[j] += spec.event_scale * vocab.embeddings.at(event, j);
      }
    }
  };
  plant(frame_a, s.patches_a, event_a);
  plant(frame_b, s.patches_b, event_b);
  return s;
}

SyntheticSample gen_sample(const DatasetSpec& spec, const EventVocab& vocab, std::size_t index) {
  spec.validate();
  if (index >= spec.n_samples) throw ValidationError("gen_sample: index past n_samples");
  const std::uint64_t stream = mix_seed(spec.seed, mix_seed(kSampleStream, index));
  Rng rng(stream);
  std::size_t ev_lo, ev_hi, fr_lo, fr_hi;
  draw_distinct_pair(rng, spec.n_events, ev_lo, ev_hi);
  draw_distinct_pair(rng, spec.frames, fr_lo, fr_hi);
  // The query pair is canonical (event_a < event_b); asking about the pair in
  // the reverse order is the same question negated, and a fixed order keeps
  // the task solvable by a linear readout. Labels alternate by index.
  const bool label_one = index % 2 == 0;
  const std::size_t frame_a = label_one ? fr_lo : fr_hi;
  const std::size_t frame_b = label_one ? fr_hi : fr_lo;
  return plant_sample(spec, vocab, ev_lo, ev_hi, frame_a, frame_b, mix_seed(stream, 1));
}

std::size_t Dataset::label_count(int label) const {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.label == label ? 1 : 0;
  return n;
}

DatasetBundle gen_dataset(const DatasetSpec& spec) {
  spec.validate();
  DatasetBundle bundle;
  bundle.spec = spec;
  bundle.vocab = gen_vocab(spec.n_events, spec.feature_dim, spec.seed);
  for (Dataset* d : {&bundle.train, &bundle.test}) {
    d->frames = spec.frames;
    d->patches = spec.patches;
    d->feature_dim = spec.feature_dim;
  }
  const std::size_t n_train = spec.train_count();
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    SyntheticSample s = gen_sample(spec, bundle.vocab, i);
    for (std::size_t j = 0; j < s.frames.size(); ++j) s.frames[j] = storage_round(s.frames[j]);
    (i < n_train ? bundle.train : bundle.test).samples.push_back(std::move(s));
  }
  return bundle;
}

namespace {

template <typename T>
void write_raw(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (in.gcount() != sizeof(v)) throw TruncationError("dataset '" + path + "' is truncated");
  return v;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(kDatasetMagic, sizeof(kDatasetMagic));
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ds.samples.size()));
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ds.frames));
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ds.patches));
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(ds.feature_dim));
  std::vector<float> buf;
  for (const auto& s : ds.samples) {
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.event_a));
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.event_b));
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.frame_a));
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.frame_b));
    write_raw<std::uint8_t>(out, static_cast<std::uint8_t>(s.label));
    buf.resize(s.frames.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(s.frames[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw IoError("short write to '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[sizeof(kDatasetMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0) {
    throw VersionError("'" + path + "' is not a VCDS1 dataset");
  }
  Dataset ds;
  const auto n = read_raw<std::uint32_t>(in, path);
  ds.frames = read_raw<std::uint32_t>(in, path);
  ds.patches = read_raw<std::uint32_t>(in, path);
  ds.feature_dim = read_raw<std::uint32_t>(in, path);
  const std::size_t per = ds.frames * ds.patches * ds.feature_dim;
  std::vector<float> buf(per);
  ds.samples.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    SyntheticSample s;
    s.event_a = read_raw<std::uint32_t>(in, path);
    s.event_b = read_raw<std::uint32_t>(in, path);
    s.frame_a = read_raw<std::uint32_t>(in, path);
    s.frame_b = read_raw<std::uint32_t>(in, path);
    s.label = read_raw<std::uint8_t>(in, path);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(per * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != per * sizeof(float)) {
      throw TruncationError("dataset '" + path + "' is truncated");
    }
    s.frames = DenseArray({ds.frames, ds.patches, ds.feature_dim});
    for (std::size_t i = 0; i < per; ++i) s.frames[i] = static_cast<double>(buf[i]);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

namespace {

KvText manifest_of(const DatasetBundle& bundle, std::uint32_t train_crc, std::uint32_t test_crc) {
  const DatasetSpec& spec = bundle.spec;
  KvText kv;
  kv.set("format", "VCDS1");
  kv.set("samples", static_cast<std::uint64_t>(spec.n_samples));
  kv.set("frames", static_cast<std::uint64_t>(spec.frames));
  kv.set("patches", static_cast<std::uint64_t>(spec.patches));
  kv.set("feature_dim", static_cast<std::uint64_t>(spec.feature_dim));
  kv.set("events", static_cast<std::uint64_t>(spec.n_events));
  kv.set("noise_std", spec.noise_std);
  kv.set("event_scale", spec.event_scale);
  kv.set("patches_per_event", static_cast<std::uint64_t>(spec.patches_per_event));
  kv.set("train_split", spec.train_split);
  kv.set("data_seed", spec.seed);
  kv.set("train_count", static_cast<std::uint64_t>(bundle.train.size()));
  kv.set("test_count", static_cast<std::uint64_t>(bundle.test.size()));
  kv.set("train_crc32", static_cast<std::uint64_t>(train_crc));
  kv.set("test_crc32", static_cast<std::uint64_t>(test_crc));
  return kv;
}

}  // namespace

DatasetSpec spec_from_manifest(const KvText& kv) {
  DatasetSpec spec;
  spec.n_samples = kv.get_u64("samples");
  spec.frames = kv.get_u64("frames");
  spec.patches = kv.get_u64("patches");
  spec.feature_dim = kv.get_u64("feature_dim");
  spec.n_events = kv.get_u64("events");
  spec.noise_std = kv.get_double("noise_std");
  spec.event_scale = kv.get_double("event_scale");
  spec.patches_per_event = kv.get_u64("patches_per_event");
  spec.train_split = kv.get_double("train_split");
  spec.seed = kv.get_u64("data_seed");
  return spec;
}

void write_dataset_dir(const DatasetBundle& bundle, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  const std::string train_path = dir + "/train.vcds";
  const std::string test_path = dir + "/test.vcds";
  save_dataset(bundle.train, train_path);
  save_dataset(bundle.test, test_path);
  manifest_of(bundle, file_crc32(train_path), file_crc32(test_path)).save(dir + "/manifest.txt");
}

DatasetBundle open_dataset_dir(const std::string& dir) {
  const KvText kv = KvText::load(dir + "/manifest.txt");
  DatasetBundle bundle;
  bundle.spec = spec_from_manifest(kv);
  bundle.spec.validate();
  bundle.vocab = gen_vocab(bundle.spec.n_events, bundle.spec.feature_dim, bundle.spec.seed);
  const std::string train_path = dir + "/train.vcds";
  const std::string test_path = dir + "/test.vcds";
  if (file_crc32(train_path) != static_cast<std::uint32_t>(kv.get_u64("train_crc32")) ||
      file_crc32(test_path) != static_cast<std::uint32_t>(kv.get_u64("test_crc32"))) {
    throw ChecksumError("dataset files in '" + dir + "' do not match the manifest CRCs");
  }
  bundle.train = load_dataset(train_path);
  bundle.test = load_dataset(test_path);
  return bundle;
}

int solve_by_construction(const SyntheticSample& s, const EventVocab& vocab) {
  const std::size_t frames = s.frames.extent(0);
  const std::size_t patches = s.frames.extent(1);
  const std::size_t d = s.frames.extent(2);
  auto locate = [&](std::size_t event) {
    std::size_t best_frame = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t p = 0; p < patches; ++p) {
        const double* patch = s.frames.data() + (t * patches + p) * d;
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += patch[j] * vocab.embeddings.at(event, j);
        if (dot > best) {
          best = dot;
          best_frame = t;
        }
      }
    }
    return best_frame;
  };
  return locate(s.event_a) < locate(s.event_b) ? 1 : 0;
}

double oracle_accuracy(const Dataset& ds, const EventVocab& vocab) {
  if (ds.samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : ds.samples) {
    correct += solve_by_construction(s, vocab) == s.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.samples.size());
}

}  // namespace vcore
