#include "reweave/learn.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "reweave/error.h"

namespace reweave {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using Mat = Eigen::MatrixXd;

constexpr char kCheckpointTag[] = "reweave-model";
constexpr int kCheckpointVersion = 1;

struct Activations {
  std::vector<Mat> z;  // pre-activations, one per layer
  std::vector<Mat> a;  // a[0] is the input, a[l + 1] = act(z[l])
};

Eigen::Map<const RowMat> Weights(const PredictorModel& m, int l) {
  return {m.parameters().data() + m.weight_offset(l), m.layer_dims()[l + 1],
          m.layer_dims()[l]};
}

Eigen::Map<const Eigen::VectorXd> Biases(const PredictorModel& m, int l) {
  return {m.parameters().data() + m.bias_offset(l), m.layer_dims()[l + 1]};
}

void ForwardBatch(const PredictorModel& m, const Mat& x, Activations* act) {
  const int layers = m.num_layers();
  act->z.resize(layers);
  act->a.resize(layers + 1);
  act->a[0] = x;
  for (int l = 0; l < layers; ++l) {
    act->z[l].noalias() = Weights(m, l) * act->a[l];
    act->z[l].colwise() += Biases(m, l);
    if (l + 1 < layers) {
      act->a[l + 1] = act->z[l].cwiseMax(0.0);
    } else {
      act->a[l + 1] =
          act->z[l].unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    }
  }
}

// Adds d(mean loss)/d(params) for the batch given d loss / d scores.
void BackwardBatch(const PredictorModel& m, const Activations& act,
                   const Mat& dscores, std::vector<double>* grad) {
  const int layers = m.num_layers();
  const Mat& out = act.a[layers];
  Mat dz = dscores.cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix()));
  for (int l = layers - 1; l >= 0; --l) {
    Eigen::Map<RowMat> dw(grad->data() + m.weight_offset(l),
                          m.layer_dims()[l + 1], m.layer_dims()[l]);
    Eigen::Map<Eigen::VectorXd> db(grad->data() + m.bias_offset(l),
                                   m.layer_dims()[l + 1]);
    dw.noalias() += dz * act.a[l].transpose();
    db += dz.rowwise().sum();
    if (l > 0) {
      Mat da = Weights(m, l).transpose() * dz;
      dz = da.cwiseProduct(
          (act.z[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
}

// Per-pair normalization of raw scores into split weights.
void Normalize(const PathSet& paths, const double* scores, double* weights) {
  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    const int first = paths.offset(pair);
    const int count = paths.path_count(pair);
    double sum = 0;
    for (int i = 0; i < count; ++i) sum += scores[first + i];
    for (int i = 0; i < count; ++i) {
      weights[first + i] = sum > 0.0 ? scores[first + i] / sum : 1.0 / count;
    }
  }
}

// MLU of the normalized scores under `target`, and d MLU / d scores.
double SampleLoss(const Topology& topology, const PathSet& paths,
                  const DemandMatrix& target, const double* scores,
                  double* dscores) {
  RatioConfig ratios;
  ratios.weights.resize(paths.num_routing_paths());
  Normalize(paths, scores, ratios.weights.data());
  MluReport report =
      ComputeMlu(ComputeLoads(topology, paths, target, ratios), topology);
  if (dscores == nullptr) return report.mlu;
  std::fill(dscores, dscores + paths.num_routing_paths(), 0.0);
  if (report.mlu <= 0.0) return report.mlu;
  const EdgeId hot = report.argmax;
  const double inv_cap = 1.0 / topology.edge(hot).capacity;
  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    auto [s, d] = paths.PairAt(pair);
    const double volume = target.at(s, d);
    if (volume == 0.0) continue;
    const int first = paths.offset(pair);
    const int count = paths.path_count(pair);
    double sum = 0;
    bool touches = false;
    for (int i = 0; i < count; ++i) {
      sum += scores[first + i];
      touches = touches || paths.routing_path(first + i).Contains(hot);
    }
    if (!touches || sum <= 0.0) continue;
    // d lambda_p / d o_q = (delta_pq - lambda_p) / sum
    double mean_g = 0;
    for (int i = 0; i < count; ++i) {
      double g = paths.routing_path(first + i).Contains(hot)
                     ? volume * inv_cap
                     : 0.0;
      mean_g += ratios.weights[first + i] * g;
    }
    for (int i = 0; i < count; ++i) {
      double g = paths.routing_path(first + i).Contains(hot)
                     ? volume * inv_cap
                     : 0.0;
      dscores[first + i] = (g - mean_g) / sum;
    }
  }
  return report.mlu;
}

void CheckShape(const PredictorModel& model, const Topology& topology,
                const PathSet& paths) {
  if (model.num_nodes() != paths.num_nodes() ||
      model.output_dim() != paths.num_routing_paths() ||
      topology.num_edges() != paths.num_edges()) {
    throw Error(ErrorKind::kInvalidArgument,
                "model, topology and path set dimensions do not match");
  }
}

Mat FeatureColumn(const PredictorModel& model,
                  std::span<const DemandMatrix> history) {
  std::vector<double> f = model.Features(history);
  return Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
}

double LossOnly(const PredictorModel& model, const Topology& topology,
                const PathSet& paths, std::span<const DemandMatrix> history,
                const DemandMatrix& target) {
  std::vector<double> scores = model.Scores(history);
  return SampleLoss(topology, paths, target, scores.data(), nullptr);
}

}  // namespace

PredictorModel PredictorModel::Create(int num_nodes, int num_paths,
                                      int history, std::uint64_t seed,
                                      std::vector<int> hidden) {
  if (num_nodes < 2 || num_paths < 1 || history < 1) {
    throw Error(ErrorKind::kInvalidArgument, "invalid model dimensions");
  }
  for (int h : hidden) {
    if (h < 1) {
      throw Error(ErrorKind::kInvalidArgument, "hidden widths must be >= 1");
    }
  }
  PredictorModel m;
  m.num_nodes_ = num_nodes;
  m.history_ = history;
  m.seed_ = seed;
  m.dims_.push_back(history * num_nodes * (num_nodes - 1));
  m.dims_.insert(m.dims_.end(), hidden.begin(), hidden.end());
  m.dims_.push_back(num_paths);
  m.Layout();

  std::mt19937_64 rng(seed);
  for (int l = 0; l < m.num_layers(); ++l) {
    const double bound = std::sqrt(6.0 / m.dims_[l]);
    std::uniform_real_distribution<double> u(-bound, bound);
    const size_t count = static_cast<size_t>(m.dims_[l]) * m.dims_[l + 1];
    for (size_t i = 0; i < count; ++i) {
      m.params_[m.weight_offset(l) + i] = u(rng);
    }
  }
  return m;
}

void PredictorModel::Layout() {
  offsets_.clear();
  size_t total = 0;
  for (int l = 0; l + 1 < static_cast<int>(dims_.size()); ++l) {
    offsets_.push_back(total);
    total += static_cast<size_t>(dims_[l]) * dims_[l + 1] + dims_[l + 1];
  }
  params_.assign(total, 0.0);
}

void PredictorModel::set_input_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::kInvalidArgument, "input scale must be positive");
  }
  input_scale_ = scale;
}

std::vector<double> PredictorModel::Features(
    std::span<const DemandMatrix> history) const {
  if (static_cast<int>(history.size()) != history_) {
    throw Error(ErrorKind::kInvalidArgument,
                "model expects " + std::to_string(history_) +
                    " history matrices, got " +
                    std::to_string(history.size()));
  }
  std::vector<double> out;
  out.reserve(input_dim());
  for (const DemandMatrix& dm : history) {
    if (dm.num_nodes() != num_nodes_) {
      throw Error(ErrorKind::kInvalidArgument,
                  "history matrix has the wrong node count");
    }
    for (int s = 0; s < num_nodes_; ++s) {
      for (int d = 0; d < num_nodes_; ++d) {
        if (s != d) out.push_back(dm.at(s, d) * input_scale_);
      }
    }
  }
  return out;
}

std::vector<double> PredictorModel::Scores(
    std::span<const DemandMatrix> history) const {
  Activations act;
  ForwardBatch(*this, FeatureColumn(*this, history), &act);
  const Mat& out = act.a.back();
  return std::vector<double>(out.data(), out.data() + out.size());
}

void TrainConfig::Validate() const {
  if (history < 1) throw Error(ErrorKind::kConfig, "history must be >= 1");
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorKind::kConfig, "learning rate must be positive");
  }
  if (epochs < 1) throw Error(ErrorKind::kConfig, "epochs must be >= 1");
  if (batch_size < 1) {
    throw Error(ErrorKind::kConfig, "batch size must be >= 1");
  }
  if (!(weight_decay >= 0.0)) {
    throw Error(ErrorKind::kConfig, "weight decay must be >= 0");
  }
  if (!(weight_decay >= 0.0)) {
    throw Error(ErrorKind::kConfig, "weight decay must be >= 0");
  }
  for (int h : hidden) {
    if (h < 1) throw Error(ErrorKind::kConfig, "hidden widths must be >= 1");
  }
}

RatioConfig Forward(const PredictorModel& model, const PathSet& paths,
                    std::span<const DemandMatrix> history) {
  if (model.num_nodes() != paths.num_nodes() ||
      model.output_dim() != paths.num_routing_paths()) {
    throw Error(ErrorKind::kInvalidArgument,
                "model does not match the path set");
  }
  std::vector<double> scores = model.Scores(history);
  RatioConfig out;
  out.weights.resize(scores.size());
  Normalize(paths, scores.data(), out.weights.data());
  return out;
}

LossGradient MluLossGradient(const PredictorModel& model,
                             const Topology& topology, const PathSet& paths,
                             std::span<const DemandMatrix> history,
                             const DemandMatrix& target) {
  CheckShape(model, topology, paths);
  Activations act;
  ForwardBatch(model, FeatureColumn(model, history), &act);
  Mat dscores(model.output_dim(), 1);
  LossGradient out;
  out.loss = SampleLoss(topology, paths, target, act.a.back().data(),
                        dscores.data());
  out.gradient.assign(model.num_parameters(), 0.0);
  BackwardBatch(model, act, dscores, &out.gradient);
  return out;
}

double MeanLoss(const PredictorModel& model, const Topology& topology,
                const PathSet& paths, std::span<const DemandMatrix> matrices) {
  CheckShape(model, topology, paths);
  const int h = model.history();
  if (static_cast<int>(matrices.size()) <= h) {
    throw Error(ErrorKind::kInvalidArgument,
                "need more than " + std::to_string(h) + " matrices");
  }
  double total = 0;
  for (size_t t = h; t < matrices.size(); ++t) {
    total += LossOnly(model, topology, paths, matrices.subspan(t - h, h),
                      matrices[t]);
  }
  return total / static_cast<double>(matrices.size() - h);
}

PredictorModel Train(const Topology& topology, const PathSet& paths,
                     std::span<const DemandMatrix> matrices,
                     const TrainConfig& config, TrainReport* report) {
  config.Validate();
  const int h = config.history;
  if (static_cast<int>(matrices.size()) <= h) {
    throw Error(ErrorKind::kInvalidArgument,
                "training needs more than " + std::to_string(h) +
                    " matrices, got " + std::to_string(matrices.size()));
  }
  PredictorModel model =
      PredictorModel::Create(paths.num_nodes(), paths.num_routing_paths(), h,
                             config.seed, config.hidden);
  CheckShape(model, topology, paths);

  double positive_sum = 0;
  long positive_count = 0;
  for (const DemandMatrix& dm : matrices) {
    for (double v : dm.row_major()) {
      if (v > 0.0) {
        positive_sum += v;
        ++positive_count;
      }
    }
  }
  if (positive_count > 0 && std::isfinite(positive_sum)) {
    model.set_input_scale(positive_count / positive_sum);
  }

  const int samples = static_cast<int>(matrices.size()) - h;
  Mat features(model.input_dim(), samples);
  for (int i = 0; i < samples; ++i) {
    features.col(i) = FeatureColumn(model, matrices.subspan(i, h));
  }

  TrainReport local;
  local.initial_loss = MeanLoss(model, topology, paths, matrices);

  std::vector<double>& params = model.parameters();
  std::vector<double> grad(params.size());
  std::vector<double> m1(params.size(), 0.0);
  std::vector<double> m2(params.size(), 0.0);
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  long step = 0;

  std::vector<char> decays(params.size(), 0);
  for (int l = 0; l < model.num_layers(); ++l) {
    std::fill(decays.begin() + model.weight_offset(l),
              decays.begin() + model.bias_offset(l), 1);
  }
  const double decay_step = config.learning_rate * config.weight_decay;

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> order(samples);
  std::iota(order.begin(), order.end(), 0);
  Activations act;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (int start = 0; start < samples; start += config.batch_size) {
      const int batch = std::min(config.batch_size, samples - start);
      Mat x(model.input_dim(), batch);
      for (int b = 0; b < batch; ++b) x.col(b) = features.col(order[start + b]);
      ForwardBatch(model, x, &act);
      Mat dscores(model.output_dim(), batch);
      double batch_loss = 0;
      for (int b = 0; b < batch; ++b) {
        const int t = order[start + b] + h;
        batch_loss += SampleLoss(topology, paths, matrices[t],
                                 act.a.back().col(b).data(),
                                 dscores.col(b).data());
      }
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorKind::kRuntime,
                    "training diverged: non-finite loss at epoch " +
                        std::to_string(epoch) + ", batch starting at " +
                        std::to_string(start) + " (learning rate " +
                        std::to_string(config.learning_rate) + ")");
      }
      epoch_loss += batch_loss;
      dscores /= batch;
      std::fill(grad.begin(), grad.end(), 0.0);
      BackwardBatch(model, act, dscores, &grad);

      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, step);
      const double c2 = 1.0 - std::pow(kBeta2, step);
      for (size_t i = 0; i < params.size(); ++i) {
        m1[i] = kBeta1 * m1[i] + (1 - kBeta1) * grad[i];
        m2[i] = kBeta2 * m2[i] + (1 - kBeta2) * grad[i] * grad[i];
        if (decays[i]) params[i] -= decay_step * params[i];
        params[i] -= config.learning_rate * (m1[i] / c1) /
                     (std::sqrt(m2[i] / c2) + kEps);
      }
    }
    local.epoch_loss.push_back(epoch_loss / samples);
  }
  local.final_loss = MeanLoss(model, topology, paths, matrices);
  if (!std::isfinite(local.final_loss)) {
    throw Error(ErrorKind::kRuntime, "training diverged: final loss is " +
                                         std::to_string(local.final_loss));
  }
  if (report) *report = std::move(local);
  return model;
}

GradientCheckResult GradientCheck(const PredictorModel& model,
                                  const Topology& topology,
                                  const PathSet& paths,
                                  std::span<const DemandMatrix> history,
                                  const DemandMatrix& target, int count,
                                  std::uint64_t seed) {
  constexpr double kStep = 1e-5;
  LossGradient analytic =
      MluLossGradient(model, topology, paths, history, target);
  PredictorModel probe = model;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, model.num_parameters() - 1);
  GradientCheckResult out;
  for (int i = 0; i < count; ++i) {
    const size_t idx = pick(rng);
    const double original = probe.parameters()[idx];
    probe.parameters()[idx] = original + kStep;
    const double up = LossOnly(probe, topology, paths, history, target);
    probe.parameters()[idx] = original - kStep;
    const double down = LossOnly(probe, topology, paths, history, target);
    probe.parameters()[idx] = original;
    const double numeric = (up - down) / (2 * kStep);
    const double a = analytic.gradient[idx];
    const double scale = std::max({std::abs(a), std::abs(numeric), 1e-8});
    out.max_relative_error =
        std::max(out.max_relative_error, std::abs(a - numeric) / scale);
    ++out.checked;
  }
  return out;
}

void SaveModel(const PredictorModel& model, std::ostream& out) {
  char buf[64];
  out << kCheckpointTag << ' ' << kCheckpointVersion << '\n';
  out << "num_nodes " << model.num_nodes() << '\n';
  out << "history " << model.history() << '\n';
  out << "seed " << model.seed() << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", model.input_scale());
  out << "input_scale " << buf << '\n';
  out << "dims " << model.layer_dims().size();
  for (int d : model.layer_dims()) out << ' ' << d;
  out << '\n';
  out << "params " << model.num_parameters() << '\n';
  for (double v : model.parameters()) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << '\n';
  }
  if (!out) throw Error(ErrorKind::kRuntime, "failed writing checkpoint");
}

PredictorModel LoadModel(std::istream& in) {
  auto fail = [](const std::string& what) -> Error {
    return Error(ErrorKind::kData, "bad checkpoint: " + what);
  };
  auto expect = [&](const char* key) {
    std::string word;
    if (!(in >> word) || word != key) throw fail(std::string("missing ") + key);
  };
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != kCheckpointTag) {
    throw fail("not a model checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw fail("unsupported version " + std::to_string(version));
  }
  PredictorModel m;
  std::string scale;
  expect("num_nodes");
  in >> m.num_nodes_;
  expect("history");
  in >> m.history_;
  expect("seed");
  in >> m.seed_;
  expect("input_scale");
  in >> scale;
  expect("dims");
  size_t ndims = 0;
  in >> ndims;
  if (!in || ndims < 2 || ndims > 64) throw fail("bad dims");
  m.dims_.resize(ndims);
  for (int& d : m.dims_) {
    if (!(in >> d) || d < 1) throw fail("bad layer width");
  }
  if (!in || m.num_nodes_ < 2 || m.history_ < 1 ||
      m.dims_.front() != m.history_ * m.num_nodes_ * (m.num_nodes_ - 1)) {
    throw fail("inconsistent header");
  }
  m.input_scale_ = std::strtod(scale.c_str(), nullptr);
  if (!(m.input_scale_ > 0.0)) throw fail("bad input scale");
  m.Layout();
  expect("params");
  size_t nparams = 0;
  if (!(in >> nparams) || nparams != m.params_.size()) {
    throw fail("parameter count does not match dims");
  }
  std::string token;
  for (double& v : m.params_) {
    if (!(in >> token)) throw fail("truncated parameters");
    char* end = nullptr;
    v = std::strtod(token.c_str(), &end);
    if (*end != '\0' || !std::isfinite(v)) throw fail("bad parameter " + token);
  }
  return m;
}

void SaveModelFile(const PredictorModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kRuntime, "cannot write " + path);
  SaveModel(model, out);
}

PredictorModel LoadModelFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kData, "cannot open " + path);
  try {
    return LoadModel(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace reweave
