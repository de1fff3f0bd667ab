#include "socs/train.hpp"

#include <cmath>
#include <cstdio>

namespace socs {

std::string optimizer_name(Optimizer o) {
  return o == Optimizer::kAdam ? "adam" : "ranger_like";
}

Optimizer optimizer_from_name(const std::string& name) {
  if (name == "adam") return Optimizer::kAdam;
  if (name == "ranger_like") return Optimizer::kRangerLike;
  throw ConfigError("unknown optimizer: " + name);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (!(anneal_start_fraction > 0.0 && anneal_start_fraction < 1.0))
    throw ConfigError("anneal_start_fraction must lie in (0, 1)");
  if (val_every < 1) throw ConfigError("val_every must be >= 1");
  if (val_queries < 1) throw ConfigError("val_queries must be >= 1");
  if (max_val_views < 1) throw ConfigError("max_val_views must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (consistency_translation < 0.0)
    throw ConfigError("consistency_translation must be >= 0");
  sampling.validate();
}

double lr_schedule(int step, const TrainConfig& cfg) {
  if (step < 0 || step > cfg.total_steps)
    throw ConfigError("lr_schedule: step outside [0, total_steps]");
  const double T = double(cfg.total_steps);
  const double start = cfg.anneal_start_fraction * T;
  if (double(step) < start) return cfg.learning_rate;
  const double phase = (double(step) - start) / (T - start);
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(M_PI * phase));
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write metrics csv: " + path);
  os << "step,lr,loss_socs,loss_consistency,val_error\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%d,%.10g,%.10g,%.10g,%.10g\n", r.step,
                  r.lr, r.loss_socs, r.loss_consistency, r.val_error);
    os << line;
  }
  if (!os) throw DataError("short write for metrics csv: " + path);
}

}  // namespace socs
