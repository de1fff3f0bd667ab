#include "socs/config.hpp"

#include "socs/rng.hpp"

namespace socs {

void ExperimentConfig::validate() const {
  dataset.validate();
  model.validate();
  train.validate();
  eval.validate();
  if (model.num_bins != dataset.num_bins)
    throw ConfigError("model and dataset bin counts differ");
  if (model.input_points() != dataset.n_points)
    throw ConfigError("model input width and dataset view size differ");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

Json sampling_config_to_json(const SamplingConfig& c) {
  return Json{{"strategy", strategy_name(c.strategy)},
              {"n_train", c.n_train},
              {"n_inference", c.n_inference},
              {"sd_sigma_fraction", c.sd_sigma_fraction}};
}

SamplingConfig sampling_config_from_json(const Json& j) {
  SamplingConfig c;
  c.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  c.n_train = j.at("n_train").get<int>();
  c.n_inference = j.at("n_inference").get<int>();
  c.sd_sigma_fraction = j.at("sd_sigma_fraction").get<double>();
  c.validate();
  return c;
}

Json train_config_to_json(const TrainConfig& c) {
  return Json{{"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"total_steps", c.total_steps},
              {"anneal_start_fraction", c.anneal_start_fraction},
              {"optimizer", optimizer_name(c.optimizer)},
              {"seed", c.seed},
              {"sampling", sampling_config_to_json(c.sampling)},
              {"w_socs", c.w_socs},
              {"w_consistency", c.w_consistency},
              {"consistency_translation", c.consistency_translation},
              {"checkpoint_every", c.checkpoint_every},
              {"val_every", c.val_every},
              {"val_queries", c.val_queries},
              {"max_val_views", c.max_val_views}};
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.total_steps = j.at("total_steps").get<int>();
  c.anneal_start_fraction = j.at("anneal_start_fraction").get<double>();
  c.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.sampling = sampling_config_from_json(j.at("sampling"));
  c.w_socs = j.at("w_socs").get<double>();
  c.w_consistency = j.at("w_consistency").get<double>();
  c.consistency_translation = j.at("consistency_translation").get<double>();
  c.checkpoint_every = j.at("checkpoint_every").get<int>();
  c.val_every = j.at("val_every").get<int>();
  c.val_queries = j.at("val_queries").get<int>();
  c.max_val_views = j.at("max_val_views").get<int>();
  c.validate();
  return c;
}

Json eval_config_to_json(const EvalConfig& c) {
  return Json{{"split", c.split},
              {"strategy", strategy_name(c.strategy)},
              {"n_queries", c.n_queries},
              {"sd_sigma_fraction", c.sd_sigma_fraction},
              {"min_confidence", c.min_confidence},
              {"ransac_threshold_fraction", c.ransac_threshold_fraction},
              {"ransac_iters", c.ransac_iters},
              {"mc_samples", c.mc_samples},
              {"seed", c.seed},
              {"oracle_labels", c.oracle_labels}};
}

EvalConfig eval_config_from_json(const Json& j) {
  EvalConfig c;
  c.split = j.at("split").get<std::string>();
  c.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  c.n_queries = j.at("n_queries").get<int>();
  c.sd_sigma_fraction = j.at("sd_sigma_fraction").get<double>();
  c.min_confidence = j.at("min_confidence").get<double>();
  c.ransac_threshold_fraction =
      j.at("ransac_threshold_fraction").get<double>();
  c.ransac_iters = j.at("ransac_iters").get<int>();
  c.mc_samples = j.at("mc_samples").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.oracle_labels = j.at("oracle_labels").get<bool>();
  c.validate();
  return c;
}

Json experiment_to_json(const ExperimentConfig& c) {
  return Json{{"dataset", dataset_config_to_json(c.dataset)},
              {"model", model_config_to_json(c.model)},
              {"train", train_config_to_json(c.train)},
              {"eval", eval_config_to_json(c.eval)},
              {"out_dir", c.out_dir}};
}

ExperimentConfig experiment_from_json(const Json& j) {
  ExperimentConfig c;
  c.dataset = dataset_config_from_json(j.at("dataset"));
  c.model = model_config_from_json(j.at("model"));
  c.train = train_config_from_json(j.at("train"));
  c.eval = eval_config_from_json(j.at("eval"));
  c.out_dir = j.at("out_dir").get<std::string>();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  try {
    return experiment_from_json(load_json_file(path));
  } catch (const ConfigError&) {
    throw;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  }
}

void save_experiment_config(const std::string& path,
                            const ExperimentConfig& c) {
  save_json_file(path, experiment_to_json(c));
}

void apply_seed_override(ExperimentConfig& c, std::uint64_t seed) {
  c.dataset.seed = derive_seed(seed, 0x64617461ULL);
  c.model.init_seed = derive_seed(seed, 0x696e6974ULL);
  c.train.seed = derive_seed(seed, 0x747261696eULL);
  c.eval.seed = derive_seed(seed, 0x6576616cULL);
}

void apply_label_space(ExperimentConfig& c, const std::string& space) {
  if (space != "socs" && space != "nocs")
    throw ConfigError("label space must be socs or nocs");
  c.dataset.label_space = space;
}

}  // namespace socs
