#include "vcore.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

#include "ablation.hpp"
#include "audit.hpp"
#include "catp.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "synth.hpp"
#include "train.hpp"

using namespace vcore;

struct vcore_config {
  RunConfig cfg;
};

struct vcore_metrics {
  KvText kv;
};

namespace {

thread_local std::string g_error;
thread_local int g_error_code = VCORE_OK;

void set_error(int code, const std::string& msg) {
  g_error_code = code;
  g_error = msg;
}

int classify(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return VCORE_ERR_IO;
  if (dynamic_cast<const NumericError*>(&e)) return VCORE_ERR_NUMERIC;
  return VCORE_ERR_VALIDATION;
}

template <typename F>
int guarded(F&& f) {
  try {
    f();
    g_error_code = VCORE_OK;
    return VCORE_OK;
  } catch (const std::exception& e) {
    set_error(classify(e), e.what());
    return g_error_code;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename F>
char* guarded_string(F&& f) {
  try {
    std::string s = f();
    g_error_code = VCORE_OK;
    return dup_string(s);
  } catch (const std::exception& e) {
    set_error(classify(e), e.what());
    return nullptr;
  }
}

std::vector<std::string> split_csv(const char* csv) {
  std::vector<std::string> out;
  if (!csv) return out;
  std::string item;
  for (const char* p = csv;; ++p) {
    if (*p == ',' || *p == '\0') {
      if (!item.empty()) out.push_back(item);
      item.clear();
      if (*p == '\0') break;
    } else if (*p != ' ') {
      item += *p;
    }
  }
  return out;
}

vcore_metrics* metrics_from_kv(KvText kv) {
  auto* m = new vcore_metrics;
  m->kv = std::move(kv);
  return m;
}

}  // namespace

extern "C" {

const char* vcore_version(void) { return "1.0.0"; }

const char* vcore_last_error(void) { return g_error.c_str(); }

int vcore_last_error_code(void) { return g_error_code; }

vcore_config* vcore_config_default(void) {
  auto* c = new vcore_config;
  c->cfg = RunConfig::toy_default();
  g_error_code = VCORE_OK;
  return c;
}

vcore_config* vcore_config_load(const char* path) {
  try {
    auto* c = new vcore_config;
    c->cfg = RunConfig::load(path);
    g_error_code = VCORE_OK;
    return c;
  } catch (const std::exception& e) {
    set_error(classify(e), e.what());
    return nullptr;
  }
}

int vcore_config_save(const vcore_config* cfg, const char* path) {
  if (!cfg || !path) {
    set_error(VCORE_ERR_VALIDATION, "null argument");
    return VCORE_ERR_VALIDATION;
  }
  return guarded([&] { cfg->cfg.save(path); });
}

int vcore_config_set(vcore_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) {
    set_error(VCORE_ERR_VALIDATION, "null argument");
    return VCORE_ERR_VALIDATION;
  }
  return guarded([&] { cfg->cfg.set_field(key, value); });
}

char* vcore_config_get(const vcore_config* cfg, const char* key) {
  if (!cfg || !key) {
    set_error(VCORE_ERR_VALIDATION, "null argument");
    return nullptr;
  }
  return guarded_string([&]() -> std::string { return cfg->cfg.to_kv().get(key); });
}

void vcore_config_free(vcore_config* cfg) { delete cfg; }

char* vcore_render_mask(const vcore_config* cfg) {
  if (!cfg) {
    set_error(VCORE_ERR_VALIDATION, "null config");
    return nullptr;
  }
  return guarded_string([&] {
    cfg->cfg.model.validate();
    return catp::render_mask(cfg->cfg.model);
  });
}

int vcore_generate_dataset(const vcore_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) {
    set_error(VCORE_ERR_VALIDATION, "null argument");
    return VCORE_ERR_VALIDATION;
  }
  return guarded([&] { write_dataset_dir(gen_dataset(cfg->cfg.data), out_dir); });
}

vcore_metrics* vcore_train(const vcore_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) {
    set_error(VCORE_ERR_VALIDATION, "null argument");
    return nullptr;
  }
  try {
    Metrics m = run_training(cfg->cfg, out_dir);
    g_error_code = VCORE_OK;
    return metrics_from_kv(m.to_kv());
  } catch (const std::exception& e) {
    set_error(classify(e), e.what());
    return nullptr;
  }
}

vcore_metrics* vcore_evaluate(const char* checkpoint_path, const char* dataset_path) {
  if (!checkpoint_path || !dataset_path) {
    set_error(VCORE_ERR_VALIDATION, "null argument");
    return nullptr;
  }
  try {
    Evaluation ev = evaluate_checkpoint(checkpoint_path, dataset_path);
    KvText kv;
    kv.set("accuracy", ev.accuracy);
    kv.set("mean_loss", ev.mean_loss);
    g_error_code = VCORE_OK;
    return metrics_from_kv(std::move(kv));
  } catch (const std::exception& e) {
    set_error(classify(e), e.what());
    return nullptr;
  }
}

char* vcore_audit(const vcore_config* cfg, const char* checkpoint_path, int trials,
                  uint64_t seed) {
  if (!cfg) {
    set_error(VCORE_ERR_VALIDATION, "null config");
    return nullptr;
  }
  return guarded_string([&] {
    RunConfig run = cfg->cfg;
    AuditOptions opts;
    opts.trials = trials > 0 ? static_cast<std::size_t>(trials) : 20;
    opts.seed = seed;
    if (checkpoint_path && *checkpoint_path) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_path);
      run = ckpt.config;
      Model model(run.model, run.seed);
      apply_checkpoint(ckpt, model);
      return audit_model(model, opts).to_text();
    }
    run.model.validate();
    Model model(run.model, run.seed);
    return audit_model(model, opts).to_text();
  });
}

char* vcore_ablate(const vcore_config* cfg, const char* axes_csv, const char* out_dir) {
  if (!cfg || !out_dir) {
    set_error(VCORE_ERR_VALIDATION, "null argument");
    return nullptr;
  }
  return guarded_string([&] {
    std::vector<std::string> axes = split_csv(axes_csv);
    if (axes.empty()) axes = {"components", "summary"};
    return run_ablation(cfg->cfg, axes, out_dir).table;
  });
}

char* vcore_sweep(const vcore_config* cfg, const char* param, const char* values_csv,
                  const char* out_dir) {
  if (!cfg || !param || !values_csv || !out_dir) {
    set_error(VCORE_ERR_VALIDATION, "null argument");
    return nullptr;
  }
  return guarded_string([&] {
    std::vector<std::size_t> values;
    for (const std::string& v : split_csv(values_csv)) {
      std::size_t end = 0;
      const unsigned long parsed = std::stoul(v, &end);
      if (end != v.size()) throw ValidationError("sweep: bad value '" + v + "'");
      values.push_back(parsed);
    }
    return run_sweep(cfg->cfg, param, values, out_dir).table;
  });
}

int vcore_forward_shape(const vcore_config* cfg, uint64_t seed, size_t* rows, size_t* cols) {
  if (!cfg || !rows || !cols) {
    set_error(VCORE_ERR_VALIDATION, "null argument");
    return VCORE_ERR_VALIDATION;
  }
  return guarded([&] {
    const ModelConfig& mc = cfg->cfg.model;
    mc.validate();
    Model model(mc, seed);
    DenseArray frames({mc.catp.frames, mc.catp.patches, mc.catp.feature_dim});
    Rng rng(mix_seed(seed, 0xf0f0));
    for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = rng.normal();
    const DenseArray z = model.project(frames);
    if (!z.all_finite()) throw NumericError("forward produced non-finite values");
    *rows = z.rows();
    *cols = z.cols();
  });
}

double vcore_metrics_get(const vcore_metrics* m, const char* key) {
  if (!m || !key || !m->kv.has(key)) return std::nan("");
  try {
    return m->kv.get_double(key);
  } catch (const std::exception&) {
    return std::nan("");
  }
}

char* vcore_metrics_text(const vcore_metrics* m) {
  if (!m) {
    set_error(VCORE_ERR_VALIDATION, "null metrics");
    return nullptr;
  }
  return dup_string(m->kv.to_text());
}

void vcore_metrics_free(vcore_metrics* m) { delete m; }

void vcore_string_free(char* s) { std::free(s); }

}  // extern "C"
