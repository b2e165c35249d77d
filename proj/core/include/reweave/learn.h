#ifndef REWEAVE_LEARN_H
#define REWEAVE_LEARN_H

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "reweave/demand.h"
#include "reweave/pathing.h"
#include "reweave/te.h"
#include "reweave/topology.h"

namespace reweave {

// Fully connected network from the last `history` demand matrices to one
// logistic score per routing path. Hidden layers use ReLU.
//
// Parameters are stored flat, layer by layer: the weight matrix row-major
// (outputs x inputs) followed by the bias vector.
class PredictorModel {
 public:
  static constexpr int kDefaultHidden[] = {128, 128, 128, 128};

  PredictorModel() = default;

  // Symmetric uniform fan-in initialization drawn from `seed`.
  static PredictorModel Create(int num_nodes, int num_paths, int history,
                               std::uint64_t seed,
                               std::vector<int> hidden = {
                                   std::begin(kDefaultHidden),
                                   std::end(kDefaultHidden)});

  int num_nodes() const { return num_nodes_; }
  int history() const { return history_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }

  // Demand entries are multiplied by this before entering the network.
  double input_scale() const { return input_scale_; }
  void set_input_scale(double scale);

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  size_t num_parameters() const { return params_.size(); }

  // Offsets of layer l's weights and biases inside parameters().
  size_t weight_offset(int layer) const { return offsets_[layer]; }
  size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<size_t>(dims_[layer]) *
                                 dims_[layer + 1];
  }

  // Network input for a history window (oldest first), already scaled.
  std::vector<double> Features(std::span<const DemandMatrix> history) const;

  // Logistic outputs, one per routing path.
  std::vector<double> Scores(std::span<const DemandMatrix> history) const;

  bool operator==(const PredictorModel& other) const = default;

 private:
  friend PredictorModel LoadModel(std::istream& in);

  void Layout();

  int num_nodes_ = 0;
  int history_ = 1;
  std::uint64_t seed_ = 0;
  double input_scale_ = 1.0;
  std::vector<int> dims_;
  std::vector<size_t> offsets_;
  std::vector<double> params_;
};

struct TrainConfig {
  int history = 1;
  double learning_rate = 1e-3;
  int epochs = 60;
  int batch_size = 16;
  // Decoupled decay on weight matrices (biases are left alone).
  double weight_decay = 0;
  std::uint64_t seed = 1;
  std::vector<int> hidden = {std::begin(PredictorModel::kDefaultHidden),
                             std::end(PredictorModel::kDefaultHidden)};

  // Throws Error(kConfig) on non-positive values.
  void Validate() const;
};

// Scores normalized within each pair; a pair whose scores sum to 0 gets an
// even split. Throws Error(kInvalidArgument) on dimension mismatches.
RatioConfig Forward(const PredictorModel& model, const PathSet& paths,
                    std::span<const DemandMatrix> history);

struct LossGradient {
  double loss = 0;                // MLU of Forward(history) under `target`
  std::vector<double> gradient;  // d loss / d parameters
};

// Subgradient of the MLU through its most utilized link (smallest id on
// ties).
LossGradient MluLossGradient(const PredictorModel& model,
                             const Topology& topology, const PathSet& paths,
                             std::span<const DemandMatrix> history,
                             const DemandMatrix& target);

struct TrainReport {
  double initial_loss = 0;  // mean loss over all samples before training
  double final_loss = 0;    // same, after training
  std::vector<double> epoch_loss;  // running mean per epoch
};

// Fits a fresh model with Adam on samples (matrices[t-H..t-1] -> matrices[t])
// for every t >= H. Deterministic for a given config. Throws
// Error(kInvalidArgument) if there are not more than H matrices and
// Error(kRuntime) if the loss stops being finite.
PredictorModel Train(const Topology& topology, const PathSet& paths,
                     std::span<const DemandMatrix> matrices,
                     const TrainConfig& config, TrainReport* report = nullptr);

// Mean MLU loss of `model` over the same samples Train would use.
double MeanLoss(const PredictorModel& model, const Topology& topology,
                const PathSet& paths, std::span<const DemandMatrix> matrices);

struct GradientCheckResult {
  double max_relative_error = 0;
  int checked = 0;
};

// Compares MluLossGradient against central differences (step 1e-5) on
// `count` parameters drawn uniformly with `seed`.
GradientCheckResult GradientCheck(const PredictorModel& model,
                                  const Topology& topology,
                                  const PathSet& paths,
                                  std::span<const DemandMatrix> history,
                                  const DemandMatrix& target, int count = 100,
                                  std::uint64_t seed = 1);

// Text checkpoint with a version tag; round-trips bit-exactly.
void SaveModel(const PredictorModel& model, std::ostream& out);
PredictorModel LoadModel(std::istream& in);
void SaveModelFile(const PredictorModel& model, const std::string& path);
PredictorModel LoadModelFile(const std::string& path);

}  // namespace reweave

#endif  // REWEAVE_LEARN_H
