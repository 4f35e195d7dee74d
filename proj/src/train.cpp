#include "train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "audit.hpp"
#include "crc32.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace vcore {

void Adam::step(ParameterStore& store) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bias1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg_.beta2, t);
  for (auto& [name, entry] : store.entries()) {
    if (!entry.trainable) continue;
    auto it = moments_.find(name);
    if (it == moments_.end()) {
      it = moments_.emplace(name, Moments{DenseArray(entry.value.shape()),
                                          DenseArray(entry.value.shape())}).first;
    }
    Moments& mo = it->second;
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      const double g = entry.grad[i];
      mo.m[i] = cfg_.beta1 * mo.m[i] + (1.0 - cfg_.beta1) * g;
      mo.v[i] = cfg_.beta2 * mo.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = mo.m[i] / bias1;
      const double vhat = mo.v[i] / bias2;
      entry.value[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

namespace {

int predict(const DenseArray& logits) { return logits[1] > logits[0] ? 1 : 0; }

void check_sample_dims(const Dataset& ds, const RunConfig& cfg, const char* which) {
  if (ds.frames != cfg.model.catp.frames || ds.patches != cfg.model.catp.patches ||
      ds.feature_dim != cfg.model.catp.feature_dim) {
    throw ValidationError(std::string(which) + " dataset dims do not match the model config");
  }
}

}  // namespace

Evaluation evaluate(Model& model, const Dataset& ds, const EventVocab& vocab) {
  Evaluation ev;
  if (ds.samples.empty()) return ev;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (const auto& s : ds.samples) {
    Tape tape(&model.params());
    Var lg = model.logits(tape, s.frames, vocab.embedding(s.event_a),
                          vocab.embedding(s.event_b));
    Var li = tape.cross_entropy(lg, static_cast<std::size_t>(s.label));
    loss_sum += tape.val(li)[0];
    correct += predict(tape.val(lg)) == s.label ? 1 : 0;
  }
  ev.mean_loss = loss_sum / static_cast<double>(ds.samples.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(ds.samples.size());
  return ev;
}

TrainResult train_model(const RunConfig& cfg, const DatasetBundle& data) {
  cfg.validate();
  check_sample_dims(data.train, cfg, "train");
  check_sample_dims(data.test, cfg, "test");

  Model model(cfg.model, cfg.seed);
  Adam optimizer(cfg.optim);
  const EventVocab& vocab = data.vocab;
  const std::size_t n_train = data.train.size();

  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  Metrics metrics;
  const auto run_start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 0; epoch < cfg.optim.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    Rng shuffle(mix_seed(cfg.seed, 0xe70c5 + epoch));
    for (std::size_t i = 0; i + 1 < n_train; ++i) {
      std::swap(order[i], order[i + shuffle.uniform_index(n_train - i)]);
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t step = 0;
    for (std::size_t begin = 0; begin < n_train; begin += cfg.optim.batch_size, ++step) {
      const std::size_t count = std::min(cfg.optim.batch_size, n_train - begin);
      Tape tape(&model.params());
      Var total{};
      for (std::size_t b = 0; b < count; ++b) {
        const SyntheticSample& s = data.train.samples[order[begin + b]];
        Var lg = model.logits(tape, s.frames, vocab.embedding(s.event_a),
                              vocab.embedding(s.event_b));
        correct += predict(tape.val(lg)) == s.label ? 1 : 0;
        Var li = tape.cross_entropy(lg, static_cast<std::size_t>(s.label));
        total = b == 0 ? li : tape.add(total, li);
      }
      const double batch_sum = tape.val(total)[0];
      if (!std::isfinite(batch_sum)) {
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch) + " step " + std::to_string(step));
      }
      loss_sum += batch_sum;
      Var loss = tape.scale(total, 1.0 / static_cast<double>(count));
      tape.backward(loss);
      optimizer.step(model.params());
      model.params().zero_grads();
    }

    EpochMetrics em;
    em.train_loss = loss_sum / static_cast<double>(n_train);
    em.train_accuracy = static_cast<double>(correct) / static_cast<double>(n_train);
    em.test_accuracy = evaluate(model, data.test, vocab).accuracy;
    em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                               epoch_start).count();
    metrics.epochs.push_back(em);
    if (cfg.optim.stop_accuracy > 0.0 && em.test_accuracy >= cfg.optim.stop_accuracy) break;
  }

  metrics.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
  if (!metrics.epochs.empty()) {
    metrics.final_train_loss = metrics.epochs.back().train_loss;
    metrics.final_train_accuracy = metrics.epochs.back().train_accuracy;
    metrics.final_test_accuracy = metrics.epochs.back().test_accuracy;
  }

  AuditOptions audit_opts;
  audit_opts.seed = cfg.seed;
  audit_opts.jacobian = false;
  LeakageReport report = audit_model(model, audit_opts);
  metrics.leakage_verdict = report.causal_clean ? "causal_clean" : "leaky";

  TrainResult result;
  result.metrics = std::move(metrics);
  result.checkpoint = make_checkpoint(cfg, model.params());
  return result;
}

KvText Metrics::to_kv() const {
  KvText kv;
  kv.set("epochs_run", static_cast<std::uint64_t>(epochs.size()));
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    const std::string p = "epoch" + std::to_string(e);
    kv.set(p + ".train_loss", epochs[e].train_loss);
    kv.set(p + ".train_accuracy", epochs[e].train_accuracy);
    kv.set(p + ".test_accuracy", epochs[e].test_accuracy);
    kv.set(p + ".seconds", epochs[e].seconds);
  }
  kv.set("final.train_loss", final_train_loss);
  kv.set("final.train_accuracy", final_train_accuracy);
  kv.set("final.test_accuracy", final_test_accuracy);
  kv.set("total_seconds", total_seconds);
  kv.set("leakage.verdict", leakage_verdict);
  kv.set("data.train_crc32", static_cast<std::uint64_t>(train_crc32));
  kv.set("data.test_crc32", static_cast<std::uint64_t>(test_crc32));
  return kv;
}

std::string Metrics::to_table() const {
  std::string out = "epoch  train_loss  train_acc  test_acc  seconds\n";
  char line[128];
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    std::snprintf(line, sizeof(line), "%5zu  %10.6f  %9.4f  %8.4f  %7.2f\n", e,
                  epochs[e].train_loss, epochs[e].train_accuracy, epochs[e].test_accuracy,
                  epochs[e].seconds);
    out += line;
  }
  std::snprintf(line, sizeof(line), "final  test_acc=%.4f  leakage=%s\n", final_test_accuracy,
                leakage_verdict.c_str());
  out += line;
  return out;
}

DatasetBundle resolve_dataset(const RunConfig& cfg, const std::string& out_dir) {
  if (!cfg.data_dir.empty()) {
    DatasetBundle bundle = open_dataset_dir(cfg.data_dir);
    if (bundle.spec.frames != cfg.data.frames || bundle.spec.patches != cfg.data.patches ||
        bundle.spec.feature_dim != cfg.data.feature_dim) {
      throw ValidationError("dataset in '" + cfg.data_dir + "' does not match the model dims");
    }
    return bundle;
  }
  DatasetBundle bundle = gen_dataset(cfg.data);
  if (!out_dir.empty()) write_dataset_dir(bundle, out_dir + "/data");
  return bundle;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("short write to '" + path + "'");
}

}  // namespace

Metrics run_training(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory '" + out_dir + "': " + ec.message());
  }
  DatasetBundle data = resolve_dataset(cfg, out_dir);
  TrainResult result = train_model(cfg, data);

  const std::string data_root = cfg.data_dir.empty() ? out_dir + "/data" : cfg.data_dir;
  if (!out_dir.empty() || !cfg.data_dir.empty()) {
    result.metrics.train_crc32 = file_crc32(data_root + "/train.vcds");
    result.metrics.test_crc32 = file_crc32(data_root + "/test.vcds");
  }

  if (!out_dir.empty()) {
    save_checkpoint(result.checkpoint, out_dir + "/checkpoint.vckpt");
    cfg.save(out_dir + "/config.txt");
    result.metrics.to_kv().save(out_dir + "/metrics.kv");
    write_text(out_dir + "/metrics.txt", result.metrics.to_table());

    Model model(cfg.model, cfg.seed);
    apply_checkpoint(result.checkpoint, model);
    AuditOptions opts;
    opts.seed = cfg.seed;
    write_text(out_dir + "/audit.txt", audit_model(model, opts).to_text());
  }
  return result.metrics;
}

Evaluation evaluate_checkpoint(const std::string& ckpt_path, const std::string& dataset_path) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const RunConfig& cfg = ckpt.config;
  Dataset ds = load_dataset(dataset_path);
  if (ds.frames != cfg.model.catp.frames || ds.patches != cfg.model.catp.patches ||
      ds.feature_dim != cfg.model.catp.feature_dim) {
    throw ValidationError("dataset '" + dataset_path + "' does not match the checkpoint config");
  }
  const EventVocab vocab = gen_vocab(cfg.data.n_events, cfg.data.feature_dim, cfg.data.seed);
  Model model(cfg.model, cfg.seed);
  apply_checkpoint(ckpt, model);
  return evaluate(model, ds, vocab);
}

}  // namespace vcore
