// Command-line front end. Everything goes through the C API in vcore.h; this
// translation unit deliberately includes nothing from the core library.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vcore.h"

namespace {

// Exit codes: 0 success, 1 validation failure, 2 I/O error.
int exit_code_from_status(int status) { return status == VCORE_ERR_IO ? 2 : 1; }

int fail() {
  std::fprintf(stderr, "error: %s\n", vcore_last_error());
  return exit_code_from_status(vcore_last_error_code());
}

struct ConfigHandle {
  vcore_config* ptr = nullptr;
  ~ConfigHandle() { vcore_config_free(ptr); }
};

struct StringHandle {
  char* ptr = nullptr;
  ~StringHandle() { vcore_string_free(ptr); }
};

struct MetricsHandle {
  vcore_metrics* ptr = nullptr;
  ~MetricsHandle() { vcore_metrics_free(ptr); }
};

bool build_config(ConfigHandle& cfg, const std::string& config_path,
                  const std::vector<std::string>& overrides, bool seed_given,
                  std::uint64_t seed) {
  cfg.ptr = config_path.empty() ? vcore_config_default() : vcore_config_load(config_path.c_str());
  if (!cfg.ptr) return false;
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return false;
    }
    if (vcore_config_set(cfg.ptr, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()) !=
        VCORE_OK) {
      return false;
    }
  }
  if (seed_given &&
      vcore_config_set(cfg.ptr, "seed", std::to_string(seed).c_str()) != VCORE_OK) {
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vcore: causality-constrained video-to-language projection harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir;
  app.add_option("--config", config_path, "run configuration file (key=value lines)");
  app.add_option("--set", overrides, "override a config key, e.g. --set frames=8")
      ->take_all();
  app.add_option("--seed", seed, "override the run seed")->each([&](const std::string&) {
    seed_given = true;
  });
  app.add_option("--out", out_dir, "output directory");

  auto* cmd_mask = app.add_subcommand("mask", "print the attention mask grid");
  auto* cmd_synth = app.add_subcommand("synth", "generate a dataset into --out");
  auto* cmd_train = app.add_subcommand("train", "train and checkpoint into --out");
  auto* cmd_eval = app.add_subcommand("eval", "score a checkpoint on a dataset file");
  auto* cmd_audit = app.add_subcommand("audit", "run the temporal-leakage audit");
  auto* cmd_ablate = app.add_subcommand("ablate", "train the ablation grid into --out");
  auto* cmd_sweep = app.add_subcommand("sweep", "sweep K or T into --out");

  std::string ckpt_path, data_path, axes, sweep_param, sweep_values;
  int trials = 20;
  cmd_eval->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  cmd_eval->add_option("--data", data_path, ".vcds dataset file")->required();
  cmd_audit->add_option("--ckpt", ckpt_path, "audit this checkpoint instead of a fresh model");
  cmd_audit->add_option("--trials", trials, "random inputs per probe");
  cmd_ablate->add_option("--axes", axes, "comma list: components,summary,mask,...");
  cmd_sweep->add_option("--param", sweep_param, "spatial_tokens (K) or frames (T)")->required();
  cmd_sweep->add_option("--values", sweep_values, "comma list, e.g. 1,4,8,16")->required();

  CLI11_PARSE(app, argc, argv);

  ConfigHandle cfg;
  if (!build_config(cfg, config_path, overrides, seed_given, seed)) return fail();

  auto require_out = [&](const char* cmd) {
    if (out_dir.empty()) {
      std::fprintf(stderr, "error: %s requires --out <dir>\n", cmd);
      return false;
    }
    return true;
  };

  if (cmd_mask->parsed()) {
    StringHandle text{vcore_render_mask(cfg.ptr)};
    if (!text.ptr) return fail();
    std::fputs(text.ptr, stdout);
    return 0;
  }

  if (cmd_synth->parsed()) {
    if (!require_out("synth")) return 1;
    if (vcore_generate_dataset(cfg.ptr, out_dir.c_str()) != VCORE_OK) return fail();
    std::printf("dataset written to %s\n", out_dir.c_str());
    return 0;
  }

  if (cmd_train->parsed()) {
    if (!require_out("train")) return 1;
    MetricsHandle m{vcore_train(cfg.ptr, out_dir.c_str())};
    if (!m.ptr) return fail();
    StringHandle text{vcore_metrics_text(m.ptr)};
    if (text.ptr) std::fputs(text.ptr, stdout);
    return 0;
  }

  if (cmd_eval->parsed()) {
    MetricsHandle m{vcore_evaluate(ckpt_path.c_str(), data_path.c_str())};
    if (!m.ptr) return fail();
    StringHandle text{vcore_metrics_text(m.ptr)};
    if (text.ptr) std::fputs(text.ptr, stdout);
    return 0;
  }

  if (cmd_audit->parsed()) {
    StringHandle text{vcore_audit(cfg.ptr, ckpt_path.empty() ? nullptr : ckpt_path.c_str(),
                                  trials, seed_given ? seed : 7)};
    if (!text.ptr) return fail();
    std::fputs(text.ptr, stdout);
    if (!out_dir.empty()) {
      const std::string path = out_dir + "/audit.txt";
      FILE* f = std::fopen(path.c_str(), "wb");
      if (!f) {
        std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
        return 2;
      }
      std::fputs(text.ptr, f);
      std::fclose(f);
    }
    return 0;
  }

  if (cmd_ablate->parsed()) {
    if (!require_out("ablate")) return 1;
    StringHandle table{vcore_ablate(cfg.ptr, axes.empty() ? nullptr : axes.c_str(),
                                    out_dir.c_str())};
    if (!table.ptr) return fail();
    std::fputs(table.ptr, stdout);
    return 0;
  }

  if (cmd_sweep->parsed()) {
    if (!require_out("sweep")) return 1;
    StringHandle table{vcore_sweep(cfg.ptr, sweep_param.c_str(), sweep_values.c_str(),
                                   out_dir.c_str())};
    if (!table.ptr) return fail();
    std::fputs(table.ptr, stdout);
    return 0;
  }

  return 1;
}
