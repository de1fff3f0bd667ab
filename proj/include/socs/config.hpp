#pragma once

#include <string>

#include "socs/dataset.hpp"
#include "socs/io.hpp"
#include "socs/model.hpp"
#include "socs/pipeline.hpp"
#include "socs/train.hpp"

namespace socs {

// One experiment, one file. The serialized form names every field
// explicitly, so a saved config is a complete record of the run.
struct ExperimentConfig {
  DatasetConfig dataset;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  std::string out_dir = "run";

  // Sub-configs plus cross-field consistency (bin counts, cloud sizes).
  void validate() const;
};

Json sampling_config_to_json(const SamplingConfig& c);
SamplingConfig sampling_config_from_json(const Json& j);
Json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);
Json eval_config_to_json(const EvalConfig& c);
EvalConfig eval_config_from_json(const Json& j);
Json experiment_to_json(const ExperimentConfig& c);
ExperimentConfig experiment_from_json(const Json& j);

ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const std::string& path,
                            const ExperimentConfig& c);

// CLI overrides: one seed fans out to every stage deterministically.
void apply_seed_override(ExperimentConfig& c, std::uint64_t seed);
// "socs" | "nocs"; NOCS switches labels only, geometry is untouched.
void apply_label_space(ExperimentConfig& c, const std::string& space);

}  // namespace socs
