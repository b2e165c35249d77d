#include "reweave/demand.h"

#include <random>

#include "reweave/error.h"

namespace reweave {

DemandMatrix DemandMatrix::FromRowMajor(int num_nodes,
                                        std::vector<double> entries,
                                        int epoch) {
  if (num_nodes < 0 ||
      entries.size() != static_cast<size_t>(num_nodes) * num_nodes) {
    throw Error(ErrorKind::kInvalidArgument,
                "demand matrix has " + std::to_string(entries.size()) +
                    " entries, expected " +
                    std::to_string(num_nodes * num_nodes));
  }
  DemandMatrix out(num_nodes, epoch);
  for (int s = 0; s < num_nodes; ++s) {
    for (int d = 0; d < num_nodes; ++d) {
      out.set(s, d, entries[static_cast<size_t>(s) * num_nodes + d]);
    }
  }
  return out;
}

void DemandMatrix::set(int s, int d, double v) {
  if (!(v >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "demand must be non-negative");
  }
  if (s == d && v != 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "demand diagonal must be zero");
  }
  entries_[Index(s, d)] = v;
}

double DemandMatrix::Total() const {
  double total = 0;
  for (double v : entries_) total += v;
  return total;
}

DemandMatrix DemandMatrix::Scaled(double factor) const {
  DemandMatrix out = *this;
  for (double& v : out.entries_) v *= factor;
  return out;
}

DemandMatrix DemandMatrix::Plus(const DemandMatrix& other) const {
  if (other.num_nodes_ != num_nodes_) {
    throw Error(ErrorKind::kInvalidArgument, "demand size mismatch");
  }
  DemandMatrix out = *this;
  for (size_t i = 0; i < entries_.size(); ++i) {
    out.entries_[i] += other.entries_[i];
  }
  return out;
}

DemandMatrix GravityMatrix(std::span<const double> masses, double total_volume,
                           int epoch) {
  const int n = static_cast<int>(masses.size());
  double mass_sum = 0;
  double mass_sq = 0;
  for (double m : masses) {
    if (!(m >= 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "gravity mass must be >= 0");
    }
    mass_sum += m;
    mass_sq += m * m;
  }
  // sum over p != q of m_p m_q
  double norm = mass_sum * mass_sum - mass_sq;
  DemandMatrix out(n, epoch);
  if (!(norm > 0.0)) return out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) out.set(i, j, total_volume * masses[i] * masses[j] / norm);
    }
  }
  return out;
}

DemandSeries GravitySeries(int num_nodes, const GravityOptions& options) {
  if (options.count < 4) {
    throw Error(ErrorKind::kInvalidArgument,
                "a demand series needs at least 4 matrices");
  }
  if (!(options.total_volume > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "total volume must be positive");
  }
  if (options.mass_override &&
      static_cast<int>(options.mass_override->size()) != num_nodes) {
    throw Error(ErrorKind::kInvalidArgument, "mass override has wrong size");
  }
  std::mt19937_64 rng(options.seed);
  std::exponential_distribution<double> exp1(1.0);
  DemandSeries series;
  std::vector<double> masses(num_nodes);
  for (int t = 0; t < options.count; ++t) {
    if (options.mass_override) {
      masses = *options.mass_override;
    } else {
      for (double& m : masses) m = exp1(rng);
    }
    series.matrices.push_back(GravityMatrix(masses, options.total_volume, t));
  }
  return series;
}

DemandMatrix Perturb(const DemandMatrix& matrix, double alpha,
                     std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "noise alpha must be in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> factor(1.0 - alpha, 1.0 + alpha);
  DemandMatrix out = matrix;
  const int n = matrix.num_nodes();
  for (int s = 0; s < n; ++s) {
    for (int d = 0; d < n; ++d) {
      if (s == d) continue;
      // Draw for every entry so the stream does not depend on zeros.
      double f = factor(rng);
      out.set(s, d, matrix.at(s, d) * f);
    }
  }
  return out;
}

std::pair<std::vector<DemandMatrix>, std::vector<DemandMatrix>> Split(
    const DemandSeries& series) {
  if (series.size() < 4) {
    throw Error(ErrorKind::kInvalidArgument,
                "cannot split a series of fewer than 4 matrices");
  }
  const int cut = series.split_index();
  return {std::vector<DemandMatrix>(series.matrices.begin(),
                                    series.matrices.begin() + cut),
          std::vector<DemandMatrix>(series.matrices.begin() + cut,
                                    series.matrices.end())};
}

}  // namespace reweave
