#include "ablation.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "error.hpp"
#include "synth.hpp"

namespace vcore {

namespace {

RunConfig with_modes(const RunConfig& base, SpatialMode spatial, TemporalMode temporal,
                     MaskMode mask, SummaryPosition position, SummaryAgg agg) {
  RunConfig cfg = base;
  cfg.model.spatial_mode = spatial;
  cfg.model.catp.temporal_mode = temporal;
  cfg.model.catp.mask_mode = mask;
  cfg.model.catp.summary_position = position;
  cfg.model.catp.summary_agg = agg;
  return cfg;
}

void append_variants(const RunConfig& base, const std::string& axis,
                     std::vector<std::pair<std::string, RunConfig>>& out) {
  using SP = SummaryPosition;
  using SA = SummaryAgg;
  using TM = TemporalMode;
  using MM = MaskMode;
  using SM = SpatialMode;
  if (axis == "components") {
    out.emplace_back("meanpool_linear",
                     with_modes(base, SM::kMeanPool, TM::kLinear, MM::kBlockCausal, SP::kNone,
                                SA::kLearnableQuery));
    out.emplace_back("lsa_linear",
                     with_modes(base, SM::kLearnableAggregation, TM::kLinear, MM::kBlockCausal,
                                SP::kNone, SA::kLearnableQuery));
    out.emplace_back("lsa_transformer_bi",
                     with_modes(base, SM::kLearnableAggregation, TM::kTransformer,
                                MM::kBidirectional, SP::kNone, SA::kLearnableQuery));
    out.emplace_back("lsa_transformer_causal",
                     with_modes(base, SM::kLearnableAggregation, TM::kTransformer,
                                MM::kBlockCausal, SP::kNone, SA::kLearnableQuery));
    out.emplace_back("full_causal_summary",
                     with_modes(base, SM::kLearnableAggregation, TM::kTransformer,
                                MM::kBlockCausal, SP::kTerminal, SA::kLearnableQuery));
  } else if (axis == "summary") {
    out.emplace_back("summary_none",
                     with_modes(base, base.model.spatial_mode, TM::kTransformer,
                                MM::kBlockCausal, SP::kNone, SA::kLearnableQuery));
    out.emplace_back("summary_avgpool_terminal",
                     with_modes(base, base.model.spatial_mode, TM::kTransformer,
                                MM::kBlockCausal, SP::kTerminal, SA::kAvgPool));
    out.emplace_back("summary_prepend_learnable",
                     with_modes(base, base.model.spatial_mode, TM::kTransformer,
                                MM::kBlockCausal, SP::kPrepend, SA::kLearnableQuery));
    out.emplace_back("summary_terminal_learnable",
                     with_modes(base, base.model.spatial_mode, TM::kTransformer,
                                MM::kBlockCausal, SP::kTerminal, SA::kLearnableQuery));
  } else if (axis == "mask") {
    for (MM mm : {MM::kBlockCausal, MM::kBidirectional}) {
      RunConfig cfg = base;
      cfg.model.catp.mask_mode = mm;
      out.emplace_back("mask_" + to_string(mm), cfg);
    }
  } else if (axis == "summary_position") {
    for (SP sp : {SP::kTerminal, SP::kPrepend, SP::kNone}) {
      RunConfig cfg = base;
      cfg.model.catp.summary_position = sp;
      cfg.model.catp.summary_agg = SA::kLearnableQuery;
      out.emplace_back("position_" + to_string(sp), cfg);
    }
  } else if (axis == "spatial") {
    for (SM sm : {SM::kLearnableAggregation, SM::kMeanPool}) {
      RunConfig cfg = base;
      cfg.model.spatial_mode = sm;
      out.emplace_back("spatial_" + to_string(sm), cfg);
    }
  } else if (axis == "temporal") {
    for (TM tm : {TM::kTransformer, TM::kLinear}) {
      RunConfig cfg = base;
      cfg.model.catp.temporal_mode = tm;
      out.emplace_back("temporal_" + to_string(tm), cfg);
    }
  } else {
    throw ValidationError("ablation: unknown axis '" + axis +
                          "' (use components, summary, mask, summary_position, spatial, "
                          "temporal; sweep K/T via the sweep command)");
  }
}

std::string render_table(const std::vector<AblationRow>& rows, const std::string& first_column) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-28s %-9s %-12s %-13s %-9s %-9s %6s %10s %9s\n",
                first_column.c_str(), "spatial", "temporal", "mask", "summary", "agg", "epochs",
                "train_loss", "test_acc");
  out += line;
  for (const auto& row : rows) {
    const ModelConfig& m = row.config.model;
    std::snprintf(line, sizeof(line), "%-28s %-9s %-12s %-13s %-9s %-9s %6zu %10.6f %9.4f\n",
                  row.name.c_str(), to_string(m.spatial_mode).c_str(),
                  to_string(m.catp.temporal_mode).c_str(), to_string(m.catp.mask_mode).c_str(),
                  to_string(m.catp.summary_position).c_str(),
                  to_string(m.catp.summary_agg).c_str(), row.metrics.epochs.size(),
                  row.metrics.final_train_loss, row.metrics.final_test_accuracy);
    out += line;
  }
  return out;
}

std::string shared_data_dir(const RunConfig& base, const std::string& out_dir) {
  if (!base.data_dir.empty()) return base.data_dir;
  const std::string dir = out_dir + "/data";
  write_dataset_dir(gen_dataset(base.data), dir);
  return dir;
}

void write_table(const std::string& path, const std::string& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << table;
}

}  // namespace

std::vector<std::pair<std::string, RunConfig>> ablation_variants(
    const RunConfig& base, const std::vector<std::string>& axes) {
  std::vector<std::pair<std::string, RunConfig>> variants;
  for (const std::string& axis : axes) append_variants(base, axis, variants);
  return variants;
}

AblationResult run_ablation(const RunConfig& base, const std::vector<std::string>& axes,
                            const std::string& out_dir) {
  base.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory '" + out_dir + "': " + ec.message());

  const std::string data_dir = shared_data_dir(base, out_dir);
  AblationResult result;
  for (auto& [name, cfg] : ablation_variants(base, axes)) {
    cfg.data_dir = data_dir;
    AblationRow row;
    row.name = name;
    row.config = cfg;
    row.metrics = run_training(cfg, out_dir + "/" + name);
    result.rows.push_back(std::move(row));
  }
  result.table = render_table(result.rows, "variant");
  write_table(out_dir + "/ablation_table.txt", result.table);
  return result;
}

AblationResult run_sweep(const RunConfig& base, const std::string& param,
                         const std::vector<std::size_t>& values, const std::string& out_dir) {
  base.validate();
  if (values.empty()) throw ValidationError("sweep: no values given");
  const bool over_k = param == "spatial_tokens" || param == "K";
  const bool over_t = param == "frames" || param == "T";
  if (!over_k && !over_t) {
    throw ValidationError("sweep: parameter must be spatial_tokens (K) or frames (T)");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory '" + out_dir + "': " + ec.message());

  // Changing K leaves the raw clips alone, so every point shares one dataset;
  // changing T alters the clip geometry and each point generates its own.
  std::string k_data_dir;
  if (over_k) k_data_dir = shared_data_dir(base, out_dir);

  AblationResult result;
  for (std::size_t v : values) {
    RunConfig cfg = base;
    std::string name;
    if (over_k) {
      cfg.model.catp.spatial_tokens = v;
      cfg.data_dir = k_data_dir;
      name = "K" + std::to_string(v);
    } else {
      cfg.model.catp.frames = v;
      cfg.data.frames = v;
      cfg.data_dir.clear();
      name = "T" + std::to_string(v);
    }
    AblationRow row;
    row.name = name;
    row.config = cfg;
    row.metrics = run_training(cfg, out_dir + "/" + name);
    result.rows.push_back(std::move(row));
  }
  result.table = render_table(result.rows, "point");
  write_table(out_dir + "/sweep_table.txt", result.table);
  return result;
}

}  // namespace vcore
