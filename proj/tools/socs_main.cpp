#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "socs/config.hpp"
#include "socs/checkpoint.hpp"
#include "socs/pipeline.hpp"
#include "socs/train.hpp"

namespace fs = std::filesystem;
using namespace socs;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string label_space;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "experiment config (json)");
  sub->add_option("--out", o.out_dir, "output directory");
  sub->add_option("--label-space", o.label_space, "socs | nocs")
      ->check(CLI::IsMember({"socs", "nocs"}));
  sub->add_option("--seed", o.seed, "base seed overriding every stage");
}

ExperimentConfig resolve_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = load_experiment_config(o.config_path);
  if (o.seed) apply_seed_override(cfg, *o.seed);
  if (!o.label_space.empty()) apply_label_space(cfg, o.label_space);
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  cfg.validate();
  return cfg;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_synth_gen(const CommonOpts& o) {
  const ExperimentConfig cfg = resolve_config(o);
  const std::string dir = cfg.out_dir + "/dataset";
  fs::create_directories(dir);
  build_dataset(cfg.dataset, dir);
  save_experiment_config(cfg.out_dir + "/config.json", cfg);
  const Dataset data = load_dataset(dir);
  std::printf("dataset: %zu instances, %zu views, category %s, bins %d\n",
              data.bundle.instances.size(), data.views.size(),
              category_name(data.config.category).c_str(),
              data.config.num_bins);
  std::printf("manifest hash: %016llx\n",
              (unsigned long long)fnv1a(slurp(dir + "/manifest.json")));
  return 0;
}

int run_socs_build(const CommonOpts& o, const std::string& data_dir) {
  const Dataset data = load_dataset(data_dir);
  const bool nocs = data.config.label_space == "nocs";
  double worst = 0.0;
  for (const InstanceRecord& rec : data.bundle.instances) {
    // Interpolation check: the stored warp must carry the instance
    // keypoints onto the template keypoints.
    const PointMatrix mapped = warp_points(rec.warp, rec.keypoints.keypoints);
    const double resid =
        (mapped - data.bundle.tmpl.template_keypoints.keypoints)
            .rowwise()
            .norm()
            .maxCoeff();
    worst = std::max(worst, resid);
    std::printf("instance %-12s keypoint residual %.3e\n", rec.id.c_str(),
                resid);
    if (nocs) {
      const double drift =
          (mapped - rec.keypoints.keypoints).rowwise().norm().maxCoeff();
      if (drift > 1e-9)
        throw NumericalError("nocs warp is not the identity for " + rec.id);
    }
    if (resid > 1e-6)
      throw NumericalError("warp interpolation residual above 1e-6 for " +
                           rec.id);
  }
  std::printf("%zu instances verified, worst residual %.3e%s\n",
              data.bundle.instances.size(), worst,
              nocs ? " (identity warps)" : "");
  return 0;
}

int run_train(const CommonOpts& o, const std::string& data_dir) {
  const ExperimentConfig cfg = resolve_config(o);
  const std::string dir =
      data_dir.empty() ? cfg.out_dir + "/dataset" : data_dir;
  const Dataset data = load_dataset(dir);
  fs::create_directories(cfg.out_dir);
  save_experiment_config(cfg.out_dir + "/config.json", cfg);
  const TrainResult res = train<double>(data, cfg.model, cfg.train, cfg.out_dir);
  const MetricsRow& last = res.rows.back();
  std::printf("trained %d steps: loss %.6f / %.6f, best val %.6f @ step %d\n",
              cfg.train.total_steps, last.loss_socs, last.loss_consistency,
              res.best_val_error, res.best_step);
  std::printf("checkpoints: %s %s\n", res.best_checkpoint.c_str(),
              res.final_checkpoint.c_str());
  return 0;
}

int run_eval(const CommonOpts& o, const std::string& data_dir,
             const std::string& ckpt_path) {
  ExperimentConfig cfg = resolve_config(o);
  const std::string dir =
      data_dir.empty() ? cfg.out_dir + "/dataset" : data_dir;
  const Dataset data = load_dataset(dir);

  std::optional<std::pair<ModelConfig, Parameters<double>>> loaded;
  if (!ckpt_path.empty()) loaded = load_checkpoint<double>(ckpt_path);
  if (!loaded && !cfg.eval.oracle_labels)
    throw ConfigError("eval needs --checkpoint unless oracle labels are on");

  fs::create_directories(cfg.out_dir);
  EvalOutcome out = evaluate_split(
      data, loaded ? &loaded->second : nullptr,
      loaded ? &loaded->first : nullptr, cfg.eval);
  save_json_file(cfg.out_dir + "/report.json", to_json(out.report));
  write_report_csv(cfg.out_dir + "/report.csv", out.report);
  write_records_csv(cfg.out_dir + "/records.csv", out.records,
                    cfg.eval.mc_samples,
                    derive_seed(cfg.eval.seed, 0x696f75ULL));
  std::printf(
      "eval %s: %ld records (%d failed views), IoU50 %.3f, 10deg5cm %.3f, "
      "rot med %.2f deg, trans med %.4f\n",
      cfg.eval.split.c_str(), out.report.count, out.failed_views,
      out.report.iou50, out.report.p_10deg_5cm, out.report.rot_median_deg,
      out.report.trans_median);
  return 0;
}

int run_fitpose(const std::string& input, const std::string& out_path,
                double threshold, int iters, std::uint64_t seed) {
  const Json j = load_json_file(input);
  const CorrespondenceSet corr = correspondences_from_json(j);
  FitResult fit;
  if (threshold > 0.0) {
    RansacConfig rc;
    rc.iters = iters;
    rc.inlier_threshold = threshold;
    rc.seed = seed;
    fit = fit_robust(corr, rc);
  } else {
    fit = fit_aniso(corr);
  }
  save_json_file(out_path, to_json(fit));
  std::printf("fit: rms %.6e, %d iterations, converged %d, scale [%g %g %g]\n",
              fit.rms, fit.iterations, int(fit.converged),
              fit.transform.scale.x(), fit.transform.scale.y(),
              fit.transform.scale.z());
  return 0;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct AblateAxes {
  std::string samplings = "SI";
  std::string global = "1";
  std::string consistency = "1";
  std::string bins = "128";
  std::string keypoints = "32";
  bool nocs_row = true;
};

int run_ablate(const CommonOpts& o, const AblateAxes& ax) {
  const ExperimentConfig base = resolve_config(o);
  fs::create_directories(base.out_dir);

  const std::vector<std::string> samplings = split_csv(ax.samplings);
  const std::vector<std::string> globals = split_csv(ax.global);
  const std::vector<std::string> consistencies = split_csv(ax.consistency);
  const std::vector<std::string> bins = split_csv(ax.bins);
  const std::vector<std::string> keypoints = split_csv(ax.keypoints);
  if (samplings.empty() || globals.empty() || consistencies.empty() ||
      bins.empty() || keypoints.empty())
    throw ConfigError("every ablation axis needs at least one value");

  std::ofstream csv(base.out_dir + "/ablation.csv");
  if (!csv) throw DataError("cannot open ablation.csv");
  csv << "cell,label_space,sampling,global,consistency,bins,keypoints,"
         "coord_err_median,iou_50,p_10deg_5cm,rot_median_deg,trans_median\n";

  auto run_cell = [&](const std::string& cell, const std::string& space,
                      const std::string& samp, bool gp, bool cl, int nb,
                      int nk) {
    ExperimentConfig cfg = base;
    cfg.dataset.label_space = space;
    cfg.dataset.num_bins = nb;
    cfg.dataset.n_keypoints = nk;
    cfg.model.num_bins = nb;
    cfg.model.use_global = gp;
    cfg.train.w_consistency = cl ? base.train.w_consistency : 0.0;
    cfg.train.sampling.strategy = strategy_from_name(samp);
    cfg.eval.strategy = cfg.train.sampling.strategy;
    cfg.out_dir = base.out_dir + "/cells/" + cell;
    cfg.validate();

    const std::string ddir = cfg.out_dir + "/dataset";
    fs::create_directories(ddir);
    build_dataset(cfg.dataset, ddir);
    const Dataset data = load_dataset(ddir);
    const TrainResult res =
        train<double>(data, cfg.model, cfg.train, cfg.out_dir);
    auto [mcfg, params] = load_checkpoint<double>(res.best_checkpoint);
    EvalOutcome out = evaluate_split(data, &params, &mcfg, cfg.eval);

    std::vector<double> errs = out.coord_errors;
    std::sort(errs.begin(), errs.end());
    const double med = errs.empty() ? 0.0 : errs[errs.size() / 2];
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.6g,%.6g,%.6g", med,
                  out.report.iou50, out.report.p_10deg_5cm,
                  out.report.rot_median_deg, out.report.trans_median);
    csv << cell << ',' << space << ',' << samp << ',' << int(gp) << ','
        << int(cl) << ',' << nb << ',' << nk << ',' << buf << '\n';
    csv.flush();
    std::printf("cell %s done\n", cell.c_str());
  };

  for (const std::string& samp : samplings)
    for (const std::string& g : globals)
      for (const std::string& c : consistencies)
        for (const std::string& b : bins)
          for (const std::string& k : keypoints) {
            const bool gp = g != "0";
            const bool cl = c != "0";
            const int nb = std::stoi(b);
            const int nk = std::stoi(k);
            const std::string cell = samp + "_gp" + (gp ? "1" : "0") + "_cl" +
                                     (cl ? "1" : "0") + "_b" + b + "_k" + k;
            run_cell(cell, "socs", samp, gp, cl, nb, nk);
          }

  if (ax.nocs_row) {
    const bool gp = globals.front() != "0";
    const bool cl = consistencies.front() != "0";
    const std::string cell = "nocs_" + samplings.front() + "_b" +
                             bins.front() + "_k" + keypoints.front();
    run_cell(cell, "nocs", samplings.front(), gp, cl,
             std::stoi(bins.front()), std::stoi(keypoints.front()));
  }
  std::printf("ablation table: %s/ablation.csv\n", base.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coordinate-space pose estimation experiments"};
  app.require_subcommand(1);

  CommonOpts gen_o, build_o, train_o, eval_o, ablate_o;
  std::string build_data, train_data, eval_data, eval_ckpt;
  std::string fit_input, fit_out = "fit.json";
  double fit_threshold = 0.0;
  int fit_iters = 256;
  std::uint64_t fit_seed = 0;
  AblateAxes axes;

  CLI::App* gen = app.add_subcommand("synth-gen", "generate a dataset");
  add_common(gen, gen_o);

  CLI::App* build =
      app.add_subcommand("socs-build", "verify category warps in a dataset");
  build->add_option("--data", build_data, "dataset directory")->required();

  CLI::App* tr = app.add_subcommand("train", "train the coordinate network");
  add_common(tr, train_o);
  tr->add_option("--data", train_data, "dataset directory");

  CLI::App* ev = app.add_subcommand("eval", "run inference + metrics");
  add_common(ev, eval_o);
  ev->add_option("--data", eval_data, "dataset directory");
  ev->add_option("--checkpoint", eval_ckpt, "trained checkpoint");

  CLI::App* fp = app.add_subcommand("fitpose", "fit a pose to saved pairs");
  fp->add_option("--input", fit_input, "correspondences json")->required();
  fp->add_option("--out", fit_out, "result path");
  fp->add_option("--threshold", fit_threshold,
                 "ransac inlier threshold, meters; 0 = plain fit");
  fp->add_option("--iters", fit_iters, "ransac hypothesis count");
  fp->add_option("--seed", fit_seed, "ransac seed");

  CLI::App* ab = app.add_subcommand("ablate", "run an ablation grid");
  add_common(ab, ablate_o);
  ab->add_option("--samplings", axes.samplings, "comma list: P,SD,SI");
  ab->add_option("--global", axes.global, "comma list of 0/1");
  ab->add_option("--consistency", axes.consistency, "comma list of 0/1");
  ab->add_option("--bins", axes.bins, "comma list of bin counts");
  ab->add_option("--keypoints", axes.keypoints, "comma list of counts");
  ab->add_flag("--no-nocs-row", [&](std::int64_t) { axes.nocs_row = false; },
               "skip the label-space comparison row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return run_synth_gen(gen_o);
    if (build->parsed()) return run_socs_build(build_o, build_data);
    if (tr->parsed()) return run_train(train_o, train_data);
    if (ev->parsed()) return run_eval(eval_o, eval_data, eval_ckpt);
    if (fp->parsed())
      return run_fitpose(fit_input, fit_out, fit_threshold, fit_iters,
                         fit_seed);
    if (ab->parsed()) return run_ablate(ablate_o, axes);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
