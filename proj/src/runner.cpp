#include "streamgp/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "streamgp/checkpoint.hpp"
#include "streamgp/csv.hpp"
#include "streamgp/ensemble.hpp"
#include "streamgp/harness.hpp"
#include "streamgp/hyperopt.hpp"
#include "streamgp/lvm.hpp"
#include "streamgp/streams.hpp"
#include "streamgp/svg.hpp"

namespace streamgp {
namespace {

struct Settings {
  std::string task;
  EnsembleConfig ensemble;
  int n_rf = 50;
  std::uint64_t seed = 1;
  long t0 = 100;
  bool standardize = false;
  bool fit_hyper = true;
  bool svg = false;
  std::string output_dir = "out";
  long checkpoint_every = 0;
  std::string checkpoint_path;
  std::string resume;

  std::string input;   // csv path; empty means synthetic stream
  std::string stream = "sinmix";
  long length = 1000;
  double x_var = 1.0;
  double noise_var = 0.01;
  double center = 2.0;
  long switch_at = -1;  // gp_switch; -1 means length / 2
  double lengthscale_a = 0.01;
  double lengthscale_b = 100.0;
  int clusters = 3;
  int obs_dim = 10;

  KernelFamily family = KernelFamily::kRbf;
  std::vector<double> lengthscales;
  double magnitude = 1.0;
  double dict_noise = 0.01;

  LvmOptions lvm;
};

Settings read_settings(const ConfigMap& cfg) {
  Settings s;
  s.task = cfg.get_string("run", "task", "regress");
  if (s.task != "regress" && s.task != "classify" && s.task != "reduce") {
    throw std::runtime_error("config: run.task must be regress, classify, "
                             "or reduce; got '" + s.task + "'");
  }
  s.ensemble.mode =
      ensemble_mode_from_string(cfg.get_string("run", "mode", "static"));
  s.ensemble.q0 = cfg.get_double("run", "q0", 0.99);
  s.ensemble.drift_var = cfg.get_double("run", "drift_var", 0.001);
  s.ensemble.shutdown_threshold =
      cfg.get_double("run", "shutdown_threshold", 1e-16);
  s.n_rf = static_cast<int>(cfg.get_long("run", "n_rf", 50));
  s.seed = static_cast<std::uint64_t>(cfg.get_long("run", "seed", 1));
  s.t0 = cfg.get_long("run", "t0", 100);
  s.standardize = cfg.get_bool("run", "standardize", false);
  s.fit_hyper = cfg.get_bool("run", "fit_hyper", true);
  s.svg = cfg.get_bool("run", "svg", false);
  s.output_dir = cfg.get_string("run", "output_dir", "out");
  s.checkpoint_every = cfg.get_long("run", "checkpoint_every", 0);
  s.checkpoint_path = cfg.get_string("run", "checkpoint_path",
                                     s.output_dir + "/checkpoint.bin");
  s.resume = cfg.get_string("run", "resume", "");

  s.input = cfg.get_string("data", "input", "");
  s.stream = cfg.get_string("data", "stream", "sinmix");
  s.length = cfg.get_long("data", "length", 1000);
  s.x_var = cfg.get_double("data", "x_var", 1.0);
  s.noise_var = cfg.get_double("data", "noise_var", 0.01);
  s.center = cfg.get_double("data", "center", 2.0);
  s.switch_at = cfg.get_long("data", "switch_at", -1);
  s.lengthscale_a = cfg.get_double("data", "lengthscale_a", 0.01);
  s.lengthscale_b = cfg.get_double("data", "lengthscale_b", 100.0);
  s.clusters = static_cast<int>(cfg.get_long("data", "clusters", 3));
  s.obs_dim = static_cast<int>(cfg.get_long("data", "obs_dim", 10));

  s.family = kernel_family_from_string(
      cfg.get_string("dictionary", "family", "rbf"));
  s.lengthscales = cfg.get_double_list(
      "dictionary", "lengthscales",
      s.task == "reduce" ? lengthscale_grid(-1, 1) : lengthscale_grid(-4, 6));
  s.magnitude = cfg.get_double("dictionary", "magnitude", 1.0);
  s.dict_noise = cfg.get_double("dictionary", "noise_var", 0.01);

  s.lvm.latent_dim = static_cast<int>(cfg.get_long("lvm", "latent_dim", 2));
  s.lvm.prior_var = cfg.get_double("lvm", "prior_var", 1.0);
  s.lvm.embed_max_iters =
      static_cast<int>(cfg.get_long("lvm", "embed_max_iters", 50));
  s.lvm.embed_tol = cfg.get_double("lvm", "embed_tol", 1e-6);
  s.lvm.init_max_iters =
      static_cast<int>(cfg.get_long("lvm", "init_max_iters", 200));
  s.lvm.init_tol = cfg.get_double("lvm", "init_tol", 1e-4);
  s.lvm.approximate_nn = cfg.get_bool("lvm", "approximate_nn", true);
  s.lvm.nn_max_degree =
      static_cast<int>(cfg.get_long("lvm", "nn_max_degree", 16));
  s.lvm.nn_ef = static_cast<int>(cfg.get_long("lvm", "nn_ef", 64));
  s.lvm.nn_seed =
      static_cast<std::uint64_t>(cfg.get_long("lvm", "nn_seed", 99));

  const std::vector<std::string> unknown = cfg.unused_keys();
  if (!unknown.empty()) {
    std::string list;
    for (const std::string& k : unknown) {
      if (!list.empty()) list += ", ";
      list += k;
    }
    throw std::runtime_error("config: unknown keys: " + list);
  }
  return s;
}

// Column-wise affine transform fitted on the initialization window.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_sd;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    return (x - mean).cwiseProduct(inv_sd);
  }
};

Standardizer fit_standardizer(const std::vector<Eigen::VectorXd>& xs,
                              long count) {
  if (count < 2) {
    throw std::runtime_error(
        "standardize=true needs an initialization window (t0 >= 2)");
  }
  const int d = static_cast<int>(xs[0].size());
  Standardizer out;
  out.mean = Eigen::VectorXd::Zero(d);
  for (long i = 0; i < count; ++i) out.mean += xs[i];
  out.mean /= static_cast<double>(count);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (long i = 0; i < count; ++i) {
    var += (xs[i] - out.mean).cwiseAbs2();
  }
  var /= static_cast<double>(count - 1);
  out.inv_sd = var.cwiseSqrt().cwiseMax(1e-12).cwiseInverse();
  return out;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_weight_rows(CsvWriter& w, long t, const Eigen::VectorXd& weights) {
  std::vector<double> row(weights.size() + 1);
  row[0] = static_cast<double>(t);
  for (Eigen::Index m = 0; m < weights.size(); ++m) row[m + 1] = weights(m);
  w.row(row);
}

std::vector<std::string> weight_header(int m) {
  std::vector<std::string> h{"t"};
  for (int i = 0; i < m; ++i) h.push_back("w_" + std::to_string(i));
  return h;
}

RunSummary run_supervised(const Settings& s);
RunSummary run_reduce(const Settings& s);

}  // namespace

RunSummary run_experiment(const ConfigMap& config) {
  const Settings s = read_settings(config);
  std::filesystem::create_directories(s.output_dir);
  if (s.task == "reduce") return run_reduce(s);
  return run_supervised(s);
}

namespace {

RunSummary run_supervised(const Settings& s) {
  const bool classify = s.task == "classify";

  // Materialize the stream.
  std::vector<RegressionSample> reg_data;
  std::vector<LabeledSample> cls_data;
  if (!s.input.empty()) {
    CsvReader reader(s.input);
    if (reader.columns() < 2) {
      throw std::runtime_error(s.input +
                               ": need at least one feature and a target");
    }
    std::vector<double> row;
    while (reader.next(row)) {
      const int d = static_cast<int>(row.size()) - 1;
      Eigen::VectorXd x(d);
      for (int i = 0; i < d; ++i) x(i) = row[i];
      if (classify) {
        const double raw = row[d];
        if (raw != -1.0 && raw != 0.0 && raw != 1.0) {
          throw std::runtime_error(
              s.input + ": row " + std::to_string(reader.data_rows_read()) +
              ": label must be -1, 0, or 1");
        }
        cls_data.push_back({std::move(x), raw > 0.5 ? 1 : -1});
      } else {
        reg_data.push_back({std::move(x), row[d]});
      }
    }
  } else if (classify) {
    if (s.stream != "two_gaussians") {
      throw std::runtime_error("config: classify supports stream = "
                               "two_gaussians, got '" + s.stream + "'");
    }
    cls_data = make_two_gaussian_stream(s.length, s.center, s.seed);
  } else if (s.stream == "sinmix") {
    reg_data = make_sin_mix_stream(s.length, s.x_var, s.seed, s.noise_var);
  } else if (s.stream == "gp_switch") {
    const long at = s.switch_at >= 0 ? s.switch_at : s.length / 2;
    std::vector<GpSegment> segs(2);
    KernelSpec k;
    k.family = KernelFamily::kRbf;
    k.input_dim = 1;
    k.magnitude = 1.0;
    k.noise_var = s.noise_var;
    k.lengthscale = Eigen::VectorXd::Constant(1, s.lengthscale_a);
    segs[0] = {k, at};
    k.lengthscale = Eigen::VectorXd::Constant(1, s.lengthscale_b);
    segs[1] = {k, s.length - at};
    reg_data = make_gp_stream(segs, 1, s.seed);
  } else {
    throw std::runtime_error("config: unknown regression stream '" +
                             s.stream + "'");
  }

  const long total =
      classify ? static_cast<long>(cls_data.size())
               : static_cast<long>(reg_data.size());
  if (total <= s.t0) {
    throw std::runtime_error("stream shorter than the initialization window");
  }
  const int input_dim = static_cast<int>(
      classify ? cls_data[0].x.size() : reg_data[0].x.size());

  if (s.standardize) {
    std::vector<Eigen::VectorXd> init_x;
    for (long i = 0; i < s.t0; ++i) {
      init_x.push_back(classify ? cls_data[i].x : reg_data[i].x);
    }
    const Standardizer st = fit_standardizer(init_x, s.t0);
    for (long i = 0; i < total; ++i) {
      if (classify) {
        cls_data[i].x = st.apply(cls_data[i].x);
      } else {
        reg_data[i].x = st.apply(reg_data[i].x);
      }
    }
  }

  RunSummary summary;
  summary.task = s.task;
  summary.init_rows = s.t0;

  std::unique_ptr<Ensemble> ensemble;
  RegressionTracker reg_tracker;
  ClassificationTracker cls_tracker;
  long start = s.t0;

  if (!s.resume.empty()) {
    LoadedEnsemble loaded = load_ensemble_checkpoint(s.resume);
    ensemble = std::move(loaded.ensemble);
    reg_tracker = std::move(loaded.reg_tracker);
    cls_tracker = std::move(loaded.cls_tracker);
    start = loaded.next_index;
  } else {
    std::vector<KernelSpec> dict =
        make_dictionary(s.family, input_dim, s.lengthscales, s.magnitude,
                        s.dict_noise);
    std::vector<Expert> experts;
    for (size_t m = 0; m < dict.size(); ++m) {
      KernelSpec spec = dict[m];
      spec.input_dim = input_dim;
      auto map = std::make_shared<const FeatureMap>(sample_feature_map(
          spec, s.n_rf, expert_seed(s.seed, static_cast<int>(m))));
      if (s.fit_hyper && s.t0 > 0) {
        Eigen::MatrixXd x0(s.t0, input_dim);
        for (long i = 0; i < s.t0; ++i) {
          x0.row(i) =
              (classify ? cls_data[i].x : reg_data[i].x).transpose();
        }
        if (classify) {
          Eigen::VectorXi labels(s.t0);
          for (long i = 0; i < s.t0; ++i) labels(i) = cls_data[i].label;
          const EvidenceFitResult fit =
              fit_classification_magnitude(*map, x0, labels);
          spec.magnitude = fit.magnitude;
        } else {
          Eigen::VectorXd y0(s.t0);
          for (long i = 0; i < s.t0; ++i) y0(i) = reg_data[i].y;
          MarginalFitOptions opts;
          opts.init_magnitude = spec.magnitude;
          opts.init_noise_var = spec.noise_var;
          const MarginalFitResult fit =
              fit_marginal_likelihood(*map, x0, y0, opts);
          spec.magnitude = fit.magnitude;
          spec.noise_var = fit.noise_var;
        }
      }
      experts.emplace_back(std::move(map), spec,
                           classify ? Likelihood::kLogistic
                                    : Likelihood::kGaussian);
    }
    ensemble = std::make_unique<Ensemble>(std::move(experts), s.ensemble);
  }

  const std::string metrics_path = join_path(s.output_dir, "metrics.csv");
  const std::string weights_path = join_path(s.output_dir, "weights.csv");
  CsvWriter metrics(metrics_path,
                    classify
                        ? std::vector<std::string>{"t", "label", "prob", "loss"}
                        : std::vector<std::string>{"t", "y", "mean",
                                                   "variance", "loss"});
  CsvWriter weights(weights_path, weight_header(ensemble->size()));
  summary.outputs.push_back(metrics_path);
  summary.outputs.push_back(weights_path);

  for (long t = start; t < total; ++t) {
    if (classify) {
      const EnsemblePrediction pred = ensemble->predict(cls_data[t].x);
      const double loss =
          ensemble->correct_label(cls_data[t].x, cls_data[t].label);
      cls_tracker.add(cls_data[t].label, pred.mean, loss);
      metrics.row({static_cast<double>(t),
                   static_cast<double>(cls_data[t].label), pred.mean, loss});
    } else {
      const EnsemblePrediction pred = ensemble->predict(reg_data[t].x);
      const double loss = ensemble->correct(reg_data[t].x, reg_data[t].y);
      reg_tracker.add(reg_data[t].y, pred.mean, pred.variance, loss);
      metrics.row({static_cast<double>(t), reg_data[t].y, pred.mean,
                   pred.variance, loss});
    }
    write_weight_rows(weights, t, ensemble->weights());
    if (s.checkpoint_every > 0 &&
        (t + 1 - s.t0) % s.checkpoint_every == 0) {
      save_ensemble_checkpoint(s.checkpoint_path, *ensemble, t + 1,
                               reg_tracker, cls_tracker);
    }
  }
  metrics.flush();
  weights.flush();

  summary.streamed = classify ? cls_tracker.count() : reg_tracker.count();
  summary.cumulative_loss = ensemble->cumulative_loss();
  summary.final_weights = ensemble->weights();
  summary.underflow_events = ensemble->underflow_events();
  if (classify) {
    summary.classification = cls_tracker.summary();
  } else {
    summary.regression = reg_tracker.summary();
  }

  // Human-readable recap.
  const std::string summary_path = join_path(s.output_dir, "summary.txt");
  {
    std::ofstream out(summary_path);
    out << "task: " << s.task << "\n"
        << "mode: " << to_string(ensemble->config().mode) << "\n"
        << "experts: " << ensemble->size() << "\n"
        << "streamed: " << summary.streamed << "\n"
        << "cumulative_loss: " << format_double(summary.cumulative_loss)
        << "\n";
    if (classify) {
      out << "error_rate: "
          << format_double(summary.classification.error_rate) << "\n"
          << "mean_nll: " << format_double(summary.classification.mean_nll)
          << "\n";
    } else {
      out << "nmse: " << format_double(summary.regression.nmse) << "\n"
          << "mean_nll: " << format_double(summary.regression.mean_nll)
          << "\n"
          << "coverage95: " << format_double(summary.regression.coverage95)
          << "\n";
    }
    out << "underflow_events: " << summary.underflow_events << "\n";
    for (int m = 0; m < ensemble->size(); ++m) {
      const Expert& e = ensemble->experts()[m];
      out << "expert " << m << ": family=" << to_string(e.spec().family)
          << " lengthscale=" << format_double(e.spec().lengthscale(0))
          << " magnitude=" << format_double(e.spec().magnitude)
          << " noise_var=" << format_double(e.spec().noise_var)
          << " weight=" << format_double(summary.final_weights(m))
          << (ensemble->active()[m] ? "" : " (retired)") << "\n";
    }
  }
  summary.outputs.push_back(summary_path);

  if (s.svg) {
    const std::string loss_path = join_path(s.output_dir, "loss.svg");
    SvgSeries avg;
    avg.label = "avg loss";
    const std::vector<double>& losses =
        classify ? cls_tracker.losses() : reg_tracker.losses();
    double cum = 0.0;
    for (size_t i = 0; i < losses.size(); ++i) {
      cum += losses[i];
      avg.x.push_back(static_cast<double>(i + 1));
      avg.y.push_back(cum / static_cast<double>(i + 1));
    }
    write_svg_lines(loss_path, "Running average loss", "step", "loss", {avg});
    summary.outputs.push_back(loss_path);
  }
  return summary;
}

RunSummary run_reduce(const Settings& s) {
  std::vector<LatentSample> data;
  bool have_labels = false;
  if (!s.input.empty()) {
    CsvReader reader(s.input);
    have_labels = !reader.header().empty() && reader.header().back() == "label";
    const int d = reader.columns() - (have_labels ? 1 : 0);
    if (d < 1) {
      throw std::runtime_error(s.input + ": no observation columns");
    }
    std::vector<double> row;
    while (reader.next(row)) {
      LatentSample sample;
      sample.y = Eigen::VectorXd(d);
      for (int i = 0; i < d; ++i) sample.y(i) = row[i];
      sample.label =
          have_labels ? static_cast<int>(row[d]) : 0;
      data.push_back(std::move(sample));
    }
  } else {
    if (s.stream != "clusters") {
      throw std::runtime_error("config: reduce supports stream = clusters, "
                               "got '" + s.stream + "'");
    }
    LatentClusterConfig cc;
    cc.n_clusters = s.clusters;
    cc.latent_dim = s.lvm.latent_dim;
    cc.obs_dim = s.obs_dim;
    data = make_latent_cluster_stream(s.length, cc, s.seed);
    have_labels = true;
  }

  const long total = static_cast<long>(data.size());
  if (total <= s.t0 || s.t0 < 4) {
    throw std::runtime_error("reduce needs t0 >= 4 and a longer stream");
  }

  RunSummary summary;
  summary.task = s.task;
  summary.init_rows = s.t0;

  std::unique_ptr<LvmEnsemble> ensemble;
  long start = s.t0;
  std::vector<int> labels;

  if (!s.resume.empty()) {
    LoadedLvm loaded = load_lvm_checkpoint(s.resume);
    ensemble = std::move(loaded.ensemble);
    start = loaded.next_index;
    labels = std::move(loaded.labels);
  } else {
    std::vector<std::pair<std::shared_ptr<const FeatureMap>, KernelSpec>>
        dict;
    const std::vector<KernelSpec> specs = make_dictionary(
        s.family, s.lvm.latent_dim, s.lengthscales, s.magnitude,
        s.dict_noise);
    for (size_t m = 0; m < specs.size(); ++m) {
      auto map = std::make_shared<const FeatureMap>(sample_feature_map(
          specs[m], s.n_rf, expert_seed(s.seed, static_cast<int>(m))));
      dict.emplace_back(std::move(map), specs[m]);
    }
    ensemble = std::make_unique<LvmEnsemble>(std::move(dict), s.lvm);

    Eigen::MatrixXd y0(s.t0, data[0].y.size());
    for (long i = 0; i < s.t0; ++i) y0.row(i) = data[i].y.transpose();
    ensemble->init(y0);
    labels.assign(s.t0, 0);
    for (long i = 0; i < s.t0; ++i) labels[i] = data[i].label;
  }

  const std::string metrics_path = join_path(s.output_dir, "metrics.csv");
  CsvWriter metrics(metrics_path, {"t", "selected", "loss"});
  summary.outputs.push_back(metrics_path);

  double cum_loss = 0.0;
  for (long t = start; t < total; ++t) {
    const LvmEnsemble::StepResult res = ensemble->step(data[t].y);
    labels.push_back(data[t].label);
    cum_loss += res.loss;
    metrics.row({static_cast<double>(t), static_cast<double>(res.selected),
                 res.loss});
    if (s.checkpoint_every > 0 &&
        (t + 1 - s.t0) % s.checkpoint_every == 0) {
      save_lvm_checkpoint(s.checkpoint_path, *ensemble, t + 1, labels);
    }
  }
  metrics.flush();

  const Eigen::MatrixXd reported = ensemble->reported();
  const std::string emb_path = join_path(s.output_dir, "embeddings.csv");
  {
    std::vector<std::string> header{"t"};
    for (int j = 0; j < s.lvm.latent_dim; ++j) {
      header.push_back("e_" + std::to_string(j));
    }
    if (have_labels) header.push_back("label");
    CsvWriter emb(emb_path, header);
    for (Eigen::Index i = 0; i < reported.rows(); ++i) {
      std::vector<double> row{static_cast<double>(i)};
      for (int j = 0; j < s.lvm.latent_dim; ++j) row.push_back(reported(i, j));
      if (have_labels) row.push_back(static_cast<double>(labels[i]));
      emb.row(row);
    }
  }
  summary.outputs.push_back(emb_path);

  // On resume both numbers cover this invocation only; the embedding and
  // LOO error below still span the whole stream.
  summary.streamed = total - start;
  summary.cumulative_loss = cum_loss;
  summary.final_weights = ensemble->log_weights().array().exp();
  if (have_labels) {
    summary.lvm_loo_error = loo_1nn_error(reported, labels);
  }

  const std::string summary_path = join_path(s.output_dir, "summary.txt");
  {
    std::ofstream out(summary_path);
    out << "task: reduce\n"
        << "experts: " << ensemble->size() << "\n"
        << "streamed: " << summary.streamed << "\n"
        << "cumulative_loss: " << format_double(cum_loss) << "\n";
    if (have_labels) {
      out << "loo_1nn_error: " << format_double(summary.lvm_loo_error)
          << "\n";
    }
    for (int m = 0; m < ensemble->size(); ++m) {
      const LvmExpert& e = ensemble->experts()[m];
      out << "expert " << m << ": lengthscale="
          << format_double(e.spec.lengthscale(0))
          << " weight=" << format_double(summary.final_weights(m)) << "\n";
    }
  }
  summary.outputs.push_back(summary_path);

  if (s.svg) {
    const std::string scatter_path = join_path(s.output_dir, "embedding.svg");
    write_svg_scatter(scatter_path, "Latent embedding", reported, labels);
    summary.outputs.push_back(scatter_path);
  }
  return summary;
}

}  // namespace
}  // namespace streamgp
