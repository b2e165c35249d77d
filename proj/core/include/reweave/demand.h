#ifndef REWEAVE_DEMAND_H
#define REWEAVE_DEMAND_H

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace reweave {

// Square matrix of offered traffic for one epoch, zero diagonal.
class DemandMatrix {
 public:
  DemandMatrix() = default;
  explicit DemandMatrix(int num_nodes, int epoch = 0)
      : num_nodes_(num_nodes),
        epoch_(epoch),
        entries_(static_cast<size_t>(num_nodes) * num_nodes, 0.0) {}

  // Throws Error(kInvalidArgument) on a wrong size, negative entries or a
  // non-zero diagonal.
  static DemandMatrix FromRowMajor(int num_nodes, std::vector<double> entries,
                                   int epoch = 0);

  int num_nodes() const { return num_nodes_; }
  int epoch() const { return epoch_; }
  void set_epoch(int epoch) { epoch_ = epoch; }

  double at(int s, int d) const { return entries_[Index(s, d)]; }
  void set(int s, int d, double v);

  std::span<const double> row_major() const { return entries_; }
  double Total() const;

  DemandMatrix Scaled(double factor) const;
  DemandMatrix Plus(const DemandMatrix& other) const;

  bool operator==(const DemandMatrix& other) const = default;

 private:
  size_t Index(int s, int d) const {
    return static_cast<size_t>(s) * num_nodes_ + d;
  }

  int num_nodes_ = 0;
  int epoch_ = 0;
  std::vector<double> entries_;
};

// Time-ordered demand matrices; the first floor(0.75 * size) form the
// training prefix.
struct DemandSeries {
  std::vector<DemandMatrix> matrices;

  int size() const { return static_cast<int>(matrices.size()); }
  int split_index() const { return size() * 3 / 4; }
};

struct GravityOptions {
  int count = 200;
  double total_volume = 1.0;
  std::uint64_t seed = 1;
  // When set, every epoch uses these node masses instead of random draws.
  std::optional<std::vector<double>> mass_override;
};

// Gravity-model series: per epoch, node masses drawn i.i.d. from Exp(1) and
// D[i][j] = total * m_i * m_j / sum_{p != q} m_p * m_q.
DemandSeries GravitySeries(int num_nodes, const GravityOptions& options);

// Single gravity matrix from explicit masses.
DemandMatrix GravityMatrix(std::span<const double> masses, double total_volume,
                           int epoch = 0);

// Multiplies each entry by its own factor drawn from U[1 - alpha, 1 + alpha].
DemandMatrix Perturb(const DemandMatrix& matrix, double alpha,
                     std::uint64_t seed);

// Deterministic prefix/suffix split. Throws Error(kInvalidArgument) if the
// series holds fewer than four matrices.
std::pair<std::vector<DemandMatrix>, std::vector<DemandMatrix>> Split(
    const DemandSeries& series);

}  // namespace reweave

#endif  // REWEAVE_DEMAND_H
