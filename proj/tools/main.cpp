#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "streamgp/checkpoint.hpp"
#include "streamgp/config.hpp"
#include "streamgp/csv.hpp"
#include "streamgp/harness.hpp"
#include "streamgp/runner.hpp"
#include "streamgp/streams.hpp"
#include "streamgp/svg.hpp"

namespace {

using namespace streamgp;

int cmd_run(const std::string& config_path, const std::string& resume,
            const std::string& output_dir, long seed, bool svg) {
  ConfigMap cfg = parse_config_file(config_path);
  if (!resume.empty()) cfg.set("run", "resume", resume);
  if (!output_dir.empty()) cfg.set("run", "output_dir", output_dir);
  if (seed >= 0) cfg.set("run", "seed", std::to_string(seed));
  if (svg) cfg.set("run", "svg", "true");

  const RunSummary summary = run_experiment(cfg);
  std::cout << "task: " << summary.task << "\n"
            << "initialization rows: " << summary.init_rows << "\n"
            << "streamed rows: " << summary.streamed << "\n"
            << "cumulative loss: " << format_double(summary.cumulative_loss)
            << "\n";
  if (summary.task == "regress") {
    std::cout << "nMSE: " << format_double(summary.regression.nmse) << "\n"
              << "mean NLL: " << format_double(summary.regression.mean_nll)
              << "\n"
              << "95% coverage: "
              << format_double(summary.regression.coverage95) << "\n";
  } else if (summary.task == "classify") {
    std::cout << "error rate: "
              << format_double(summary.classification.error_rate) << "\n"
              << "mean NLL: "
              << format_double(summary.classification.mean_nll) << "\n";
  } else if (summary.lvm_loo_error >= 0.0) {
    std::cout << "LOO 1-NN error: " << format_double(summary.lvm_loo_error)
              << "\n";
  }
  std::cout << "outputs:\n";
  for (const std::string& f : summary.outputs) {
    std::cout << "  " << f << "\n";
  }
  return 0;
}

int cmd_generate(const std::string& stream, long length, long seed,
                 const std::string& out, double x_var, double noise_var,
                 double center, long switch_at, int clusters, int obs_dim) {
  if (stream == "sinmix") {
    const auto data = make_sin_mix_stream(length, x_var, seed, noise_var);
    CsvWriter w(out, {"x_0", "y"});
    for (const auto& s : data) w.row({s.x(0), s.y});
  } else if (stream == "gp_switch") {
    const long at = switch_at >= 0 ? switch_at : length / 2;
    KernelSpec k;
    k.input_dim = 1;
    k.magnitude = 1.0;
    k.noise_var = noise_var;
    k.lengthscale = Eigen::VectorXd::Constant(1, 0.01);
    std::vector<GpSegment> segs(2);
    segs[0] = {k, at};
    k.lengthscale = Eigen::VectorXd::Constant(1, 100.0);
    segs[1] = {k, length - at};
    const auto data = make_gp_stream(segs, 1, seed);
    CsvWriter w(out, {"x_0", "y"});
    for (const auto& s : data) w.row({s.x(0), s.y});
  } else if (stream == "two_gaussians") {
    const auto data = make_two_gaussian_stream(length, center, seed);
    CsvWriter w(out, {"x_0", "x_1", "label"});
    for (const auto& s : data) {
      w.row({s.x(0), s.x(1), static_cast<double>(s.label)});
    }
  } else if (stream == "clusters") {
    LatentClusterConfig cc;
    cc.n_clusters = clusters;
    cc.obs_dim = obs_dim;
    const auto data = make_latent_cluster_stream(length, cc, seed);
    std::vector<std::string> header;
    for (int j = 0; j < obs_dim; ++j) header.push_back("y_" + std::to_string(j));
    header.push_back("label");
    CsvWriter w(out, header);
    for (const auto& s : data) {
      std::vector<double> row(s.y.data(), s.y.data() + s.y.size());
      row.push_back(static_cast<double>(s.label));
      w.row(row);
    }
  } else {
    std::cerr << "unknown stream: " << stream << "\n";
    return 1;
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_regret(const std::string& kind, int seeds, const std::string& out_dir,
               bool svg) {
  std::filesystem::create_directories(out_dir);
  const std::string csv_path = out_dir + "/regret.csv";
  if (kind == "static") {
    RegretSweepConfig cfg;
    cfg.n_seeds = seeds;
    const RegretCurve curve = static_regret_curve(cfg);
    CsvWriter w(csv_path, {"horizon", "median_regret", "regret_per_log_t",
                           "regret_per_t"});
    SvgSeries series;
    series.label = "regret / t";
    for (size_t i = 0; i < curve.horizons.size(); ++i) {
      const double t = static_cast<double>(curve.horizons[i]);
      w.row({t, curve.median_regret[i], curve.median_regret[i] / std::log(t),
             curve.median_regret[i] / t});
      series.x.push_back(t);
      series.y.push_back(curve.median_regret[i] / t);
    }
    if (svg) {
      write_svg_lines(out_dir + "/regret.svg", "Average regret", "horizon",
                      "regret / t", {series});
    }
  } else if (kind == "switching") {
    SwitchingSweepConfig cfg;
    cfg.n_seeds = seeds;
    const SwitchingCurve curve = switching_regret_curve(cfg);
    CsvWriter w(csv_path, {"horizon", "median_regret", "regret_per_t",
                           "switching_loss", "static_loss"});
    for (size_t i = 0; i < curve.horizons.size(); ++i) {
      const double t = static_cast<double>(curve.horizons[i]);
      w.row({t, curve.median_regret[i], curve.median_regret[i] / t,
             curve.median_switching_loss[i], curve.median_static_loss[i]});
    }
  } else {
    std::cerr << "unknown regret kind: " << kind << "\n";
    return 1;
  }
  std::cout << "wrote " << csv_path << "\n";
  return 0;
}

int cmd_inspect(const std::string& path) {
  try {
    const LoadedEnsemble loaded = load_ensemble_checkpoint(path);
    std::cout << "supervised checkpoint\n"
              << "next stream index: " << loaded.next_index << "\n"
              << "experts: " << loaded.ensemble->size() << "\n"
              << "steps taken: " << loaded.ensemble->step_count() << "\n"
              << "cumulative loss: "
              << format_double(loaded.ensemble->cumulative_loss()) << "\n";
    const Eigen::VectorXd w = loaded.ensemble->weights();
    for (int m = 0; m < loaded.ensemble->size(); ++m) {
      std::cout << "  expert " << m << " weight "
                << format_double(w(m))
                << (loaded.ensemble->active()[m] ? "" : " (retired)") << "\n";
    }
    return 0;
  } catch (const std::exception&) {
    // fall through to the latent-variable format
  }
  const LoadedLvm loaded = load_lvm_checkpoint(path);
  std::cout << "latent-variable checkpoint\n"
            << "next stream index: " << loaded.next_index << "\n"
            << "experts: " << loaded.ensemble->size() << "\n"
            << "steps taken: " << loaded.ensemble->step_count() << "\n"
            << "stored points: " << loaded.ensemble->index().size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming ensembles of random-feature Gaussian-process "
               "experts"};
  app.require_subcommand(1);

  std::string config_path, resume, output_dir;
  long seed = -1;
  bool svg = false;
  CLI::App* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("-c,--config", config_path, "Experiment config file")
      ->required();
  run->add_option("--resume", resume, "Checkpoint to resume from");
  run->add_option("-o,--output", output_dir, "Override output directory");
  run->add_option("--seed", seed, "Override run seed");
  run->add_flag("--svg", svg, "Write SVG charts");

  std::string stream = "sinmix", gen_out = "stream.csv";
  long length = 1000, gen_seed = 1, switch_at = -1;
  double x_var = 1.0, noise_var = 0.01, center = 2.0;
  int clusters = 3, obs_dim = 10;
  CLI::App* gen = app.add_subcommand("generate", "Write a synthetic stream");
  gen->add_option("--stream", stream,
                  "sinmix | gp_switch | two_gaussians | clusters");
  gen->add_option("--length", length, "Rows to generate");
  gen->add_option("--seed", gen_seed, "Stream seed");
  gen->add_option("--out", gen_out, "Output csv path");
  gen->add_option("--x-var", x_var, "Input variance (sinmix)");
  gen->add_option("--noise-var", noise_var, "Observation noise variance");
  gen->add_option("--center", center, "Class center (two_gaussians)");
  gen->add_option("--switch-at", switch_at, "Regime boundary (gp_switch)");
  gen->add_option("--clusters", clusters, "Cluster count (clusters)");
  gen->add_option("--obs-dim", obs_dim, "Observation dim (clusters)");

  std::string kind = "static", regret_out = "regret_out";
  int regret_seeds = 11;
  bool regret_svg = false;
  CLI::App* regret = app.add_subcommand("regret", "Run a regret sweep");
  regret->add_option("--kind", kind, "static | switching");
  regret->add_option("--seeds", regret_seeds, "Seeds per horizon");
  regret->add_option("--out", regret_out, "Output directory");
  regret->add_flag("--svg", regret_svg, "Write SVG chart");

  std::string inspect_path;
  CLI::App* inspect = app.add_subcommand("inspect", "Describe a checkpoint");
  inspect->add_option("checkpoint", inspect_path, "Checkpoint file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, resume, output_dir, seed, svg);
    }
    if (gen->parsed()) {
      return cmd_generate(stream, length, gen_seed, gen_out, x_var, noise_var,
                          center, switch_at, clusters, obs_dim);
    }
    if (regret->parsed()) {
      return cmd_regret(kind, regret_seeds, regret_out, regret_svg);
    }
    if (inspect->parsed()) {
      return cmd_inspect(inspect_path);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
