#include "streamgp/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace streamgp {
namespace {

constexpr char kMagic[8] = {'S', 'G', 'P', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kTagEnsemble = 1;
constexpr std::uint32_t kTagLvm = 2;

class Writer {
 public:
  explicit Writer(const std::string& path)
      : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot create checkpoint: " + path);
  }
  void raw(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void i64(std::int64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void vec(const Eigen::VectorXd& v) {
    i64(v.size());
    raw(v.data(), sizeof(double) * v.size());
  }
  void mat(const Eigen::MatrixXd& m) {
    i64(m.rows());
    i64(m.cols());
    raw(m.data(), sizeof(double) * m.size());
  }
  void doubles(const std::vector<double>& v) {
    i64(static_cast<std::int64_t>(v.size()));
    raw(v.data(), sizeof(double) * v.size());
  }
  void ints(const std::vector<int>& v) {
    i64(static_cast<std::int64_t>(v.size()));
    raw(v.data(), sizeof(int) * v.size());
  }
  void longs(const std::vector<long>& v) {
    i64(static_cast<std::int64_t>(v.size()));
    for (long x : v) i64(x);
  }
  bool good() const { return static_cast<bool>(out_); }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open checkpoint: " + path);
  }
  void raw(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw std::runtime_error("checkpoint truncated");
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  Eigen::VectorXd vec() {
    const std::int64_t n = checked_count(i64());
    Eigen::VectorXd v(n);
    raw(v.data(), sizeof(double) * n);
    return v;
  }
  Eigen::MatrixXd mat() {
    const std::int64_t r = checked_count(i64());
    const std::int64_t c = checked_count(i64());
    Eigen::MatrixXd m(r, c);
    raw(m.data(), sizeof(double) * m.size());
    return m;
  }
  std::vector<double> doubles() {
    const std::int64_t n = checked_count(i64());
    std::vector<double> v(n);
    raw(v.data(), sizeof(double) * n);
    return v;
  }
  std::vector<int> ints() {
    const std::int64_t n = checked_count(i64());
    std::vector<int> v(n);
    raw(v.data(), sizeof(int) * n);
    return v;
  }
  std::vector<long> longs() {
    const std::int64_t n = checked_count(i64());
    std::vector<long> v(n);
    for (std::int64_t i = 0; i < n; ++i) v[i] = static_cast<long>(i64());
    return v;
  }

 private:
  static std::int64_t checked_count(std::int64_t n) {
    if (n < 0 || n > (1ll << 32)) {
      throw std::runtime_error("checkpoint corrupt: bad element count");
    }
    return n;
  }
  std::ifstream in_;
};

void write_spec(Writer& w, const KernelSpec& spec) {
  w.u32(static_cast<std::uint32_t>(spec.family));
  w.u32(static_cast<std::uint32_t>(spec.input_dim));
  w.vec(spec.lengthscale);
  w.f64(spec.magnitude);
  w.f64(spec.noise_var);
}

KernelSpec read_spec(Reader& r) {
  KernelSpec spec;
  spec.family = static_cast<KernelFamily>(r.u32());
  spec.input_dim = static_cast<int>(r.u32());
  spec.lengthscale = r.vec();
  spec.magnitude = r.f64();
  spec.noise_var = r.f64();
  spec.validate();
  return spec;
}

void write_header(Writer& w, std::uint32_t tag) {
  w.raw(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u32(tag);
}

void read_header(Reader& r, std::uint32_t expected_tag) {
  char magic[8];
  r.raw(magic, sizeof magic);
  for (size_t i = 0; i < sizeof magic; ++i) {
    if (magic[i] != kMagic[i]) {
      throw std::runtime_error("not a checkpoint file (bad magic)");
    }
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version));
  }
  const std::uint32_t tag = r.u32();
  if (tag != expected_tag) {
    throw std::runtime_error("checkpoint holds a different task's state");
  }
}

void write_tracker(Writer& w, const RegressionTracker& t) {
  w.doubles(t.targets());
  w.doubles(t.means());
  w.doubles(t.variances());
  w.doubles(t.losses());
}

void write_tracker(Writer& w, const ClassificationTracker& t) {
  w.ints(t.labels());
  w.doubles(t.probabilities());
  w.doubles(t.losses());
}

}  // namespace

void save_ensemble_checkpoint(const std::string& path,
                              const Ensemble& ensemble, long next_index,
                              const RegressionTracker& reg_tracker,
                              const ClassificationTracker& cls_tracker) {
  Writer w(path);
  write_header(w, kTagEnsemble);
  w.i64(next_index);

  const EnsembleConfig& cfg = ensemble.config();
  w.u32(static_cast<std::uint32_t>(cfg.mode));
  w.f64(cfg.q0);
  w.f64(cfg.drift_var);
  w.f64(cfg.shutdown_threshold);

  w.u32(static_cast<std::uint32_t>(ensemble.size()));
  for (const Expert& e : ensemble.experts()) {
    write_spec(w, e.spec());
    w.u32(static_cast<std::uint32_t>(e.map().n_rf()));
    w.i64(static_cast<std::int64_t>(e.map().seed()));
    w.u32(e.likelihood() == Likelihood::kLogistic ? 1 : 0);
    w.vec(e.mean());
    w.mat(e.cov());
  }

  w.vec(ensemble.log_weights());
  std::vector<int> active(ensemble.size());
  for (int m = 0; m < ensemble.size(); ++m) active[m] = ensemble.active()[m];
  w.ints(active);
  w.i64(ensemble.step_count());
  w.f64(ensemble.cumulative_loss());
  w.vec(ensemble.cumulative_expert_losses());
  w.longs(ensemble.correct_calls());
  w.i64(ensemble.underflow_events());

  write_tracker(w, reg_tracker);
  write_tracker(w, cls_tracker);
  if (!w.good()) throw std::runtime_error("checkpoint write failed: " + path);
}

LoadedEnsemble load_ensemble_checkpoint(const std::string& path) {
  Reader r(path);
  read_header(r, kTagEnsemble);
  LoadedEnsemble out;
  out.next_index = static_cast<long>(r.i64());

  EnsembleConfig cfg;
  cfg.mode = static_cast<EnsembleMode>(r.u32());
  cfg.q0 = r.f64();
  cfg.drift_var = r.f64();
  cfg.shutdown_threshold = r.f64();

  const std::uint32_t m = r.u32();
  std::vector<Expert> experts;
  std::vector<std::pair<Eigen::VectorXd, Eigen::MatrixXd>> states;
  experts.reserve(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    const KernelSpec spec = read_spec(r);
    const int n_rf = static_cast<int>(r.u32());
    const std::uint64_t seed = static_cast<std::uint64_t>(r.i64());
    const Likelihood lik =
        r.u32() == 1 ? Likelihood::kLogistic : Likelihood::kGaussian;
    auto map = std::make_shared<const FeatureMap>(
        sample_feature_map(spec, n_rf, seed));
    Expert e(std::move(map), spec, lik);
    // Sequence the two reads; argument evaluation order is unspecified.
    Eigen::VectorXd mean = r.vec();
    Eigen::MatrixXd cov = r.mat();
    e.restore(std::move(mean), std::move(cov));
    experts.push_back(std::move(e));
  }

  out.ensemble = std::make_unique<Ensemble>(std::move(experts), cfg);
  Eigen::VectorXd log_w = r.vec();
  const std::vector<int> active_ints = r.ints();
  std::vector<bool> active(active_ints.size());
  for (size_t i = 0; i < active_ints.size(); ++i) active[i] = active_ints[i];
  out.ensemble->restore_weights(std::move(log_w), std::move(active));
  const long steps = static_cast<long>(r.i64());
  const double cum = r.f64();
  Eigen::VectorXd cum_expert = r.vec();
  std::vector<long> calls = r.longs();
  const long underflow = static_cast<long>(r.i64());
  out.ensemble->restore_counters(steps, cum, std::move(cum_expert),
                                 std::move(calls), underflow);

  {
    const std::vector<double> y = r.doubles();
    const std::vector<double> mean = r.doubles();
    const std::vector<double> var = r.doubles();
    const std::vector<double> loss = r.doubles();
    for (size_t i = 0; i < y.size(); ++i) {
      out.reg_tracker.add(y[i], mean[i], var[i], loss[i]);
    }
  }
  {
    const std::vector<int> labels = r.ints();
    const std::vector<double> prob = r.doubles();
    const std::vector<double> loss = r.doubles();
    for (size_t i = 0; i < labels.size(); ++i) {
      out.cls_tracker.add(labels[i], prob[i], loss[i]);
    }
  }
  return out;
}

void save_lvm_checkpoint(const std::string& path, const LvmEnsemble& ensemble,
                         long next_index, const std::vector<int>& labels) {
  Writer w(path);
  write_header(w, kTagLvm);
  w.i64(next_index);

  const LvmOptions& o = ensemble.options();
  w.u32(static_cast<std::uint32_t>(o.latent_dim));
  w.f64(o.prior_var);
  w.u32(static_cast<std::uint32_t>(o.embed_max_iters));
  w.f64(o.embed_tol);
  w.u32(static_cast<std::uint32_t>(o.init_max_iters));
  w.f64(o.init_tol);
  w.u32(o.approximate_nn ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(o.nn_max_degree));
  w.u32(static_cast<std::uint32_t>(o.nn_ef));
  w.i64(static_cast<std::int64_t>(o.nn_seed));

  w.u32(static_cast<std::uint32_t>(ensemble.size()));
  for (const LvmExpert& e : ensemble.experts()) {
    write_spec(w, e.spec);
    w.u32(static_cast<std::uint32_t>(e.map->n_rf()));
    w.i64(static_cast<std::int64_t>(e.map->seed()));
    w.mat(e.r);
    w.mat(e.b);
    w.mat(e.embeddings);
    w.f64(e.init_loglik);
  }

  w.vec(ensemble.log_weights());
  const Eigen::MatrixXd reported = ensemble.reported();
  w.mat(reported);
  w.ints(ensemble.selected_history());
  w.i64(ensemble.step_count());

  const NnIndex& index = ensemble.index();
  w.u32(static_cast<std::uint32_t>(index.dim()));
  w.i64(index.size());
  for (int i = 0; i < index.size(); ++i) w.vec(index.point(i));

  w.ints(labels);
  if (!w.good()) throw std::runtime_error("checkpoint write failed: " + path);
}

LoadedLvm load_lvm_checkpoint(const std::string& path) {
  Reader r(path);
  read_header(r, kTagLvm);
  LoadedLvm out;
  out.next_index = static_cast<long>(r.i64());

  LvmOptions o;
  o.latent_dim = static_cast<int>(r.u32());
  o.prior_var = r.f64();
  o.embed_max_iters = static_cast<int>(r.u32());
  o.embed_tol = r.f64();
  o.init_max_iters = static_cast<int>(r.u32());
  o.init_tol = r.f64();
  o.approximate_nn = r.u32() == 1;
  o.nn_max_degree = static_cast<int>(r.u32());
  o.nn_ef = static_cast<int>(r.u32());
  o.nn_seed = static_cast<std::uint64_t>(r.i64());

  const std::uint32_t m = r.u32();
  std::vector<LvmExpert> experts(m);
  std::vector<std::pair<std::shared_ptr<const FeatureMap>, KernelSpec>> dict;
  for (std::uint32_t i = 0; i < m; ++i) {
    const KernelSpec spec = read_spec(r);
    const int n_rf = static_cast<int>(r.u32());
    const std::uint64_t seed = static_cast<std::uint64_t>(r.i64());
    auto map = std::make_shared<const FeatureMap>(
        sample_feature_map(spec, n_rf, seed));
    experts[i].map = map;
    experts[i].spec = spec;
    experts[i].r = r.mat();
    experts[i].b = r.mat();
    experts[i].embeddings = r.mat();
    experts[i].init_loglik = r.f64();
    dict.emplace_back(std::move(map), spec);
  }

  Eigen::VectorXd log_w = r.vec();
  const Eigen::MatrixXd reported_mat = r.mat();
  std::vector<Eigen::VectorXd> reported;
  for (Eigen::Index i = 0; i < reported_mat.rows(); ++i) {
    reported.push_back(reported_mat.row(i).transpose());
  }
  std::vector<int> selected = r.ints();
  const long steps = static_cast<long>(r.i64());

  const int dim = static_cast<int>(r.u32());
  const long count = static_cast<long>(r.i64());
  std::vector<Eigen::VectorXd> history(count);
  for (long i = 0; i < count; ++i) {
    history[i] = r.vec();
    if (history[i].size() != dim) {
      throw std::runtime_error("checkpoint corrupt: history dim mismatch");
    }
  }

  out.ensemble = std::make_unique<LvmEnsemble>(std::move(dict), o);
  out.ensemble->restore(std::move(experts), std::move(log_w),
                        std::move(reported), std::move(selected), history,
                        steps);
  out.labels = r.ints();
  return out;
}

}  // namespace streamgp
