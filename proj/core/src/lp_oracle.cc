#include "reweave/lp_oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "reweave/error.h"

namespace reweave {
namespace {

constexpr double kPivotTolerance = 1e-9;
constexpr double kReducedCostTolerance = 1e-11;
constexpr double kHarrisSlack = 1e-10;
constexpr int kRefactorEvery = 128;
constexpr int kDegenerateBeforeBland = 64;

bool Usable(std::span<const char> usable, int flat) {
  return usable.empty() || usable[flat];
}

// Revised primal simplex with an explicit dense basis inverse. Rows are one
// convexity row per demanded pair followed by one row per loaded link;
// columns are path weights, theta, then one slack per link row.
class MinMluSimplex {
 public:
  MinMluSimplex(const Topology& topology, const PathSet& paths,
                const DemandMatrix& demand, std::span<const char> usable)
      : topology_(topology), paths_(paths) {
    double max_demand = 0;
    for (int pair = 0; pair < paths.num_pairs(); ++pair) {
      auto [s, d] = paths.PairAt(pair);
      max_demand = std::max(max_demand, demand.at(s, d));
    }
    double max_capacity = 0;
    for (const Edge& e : topology.edges()) {
      max_capacity = std::max(max_capacity, e.capacity);
    }
    demand_scale_ = max_demand;
    capacity_scale_ = max_capacity;

    edge_row_.assign(topology.num_edges(), -1);
    for (int pair = 0; pair < paths.num_pairs(); ++pair) {
      auto [s, d] = paths.PairAt(pair);
      double volume = demand.at(s, d);
      if (volume <= 0) continue;
      int row = static_cast<int>(pair_rows_.size());
      pair_rows_.push_back(pair);
      for (int flat = paths.offset(pair); flat < paths.offset(pair + 1);
           ++flat) {
        if (!Usable(usable, flat)) continue;
        PathColumn col;
        col.flat = flat;
        col.pair_row = row;
        col.coef = volume / demand_scale_;
        for (EdgeId e : paths.routing_path(flat).edges) {
          if (edge_row_[e] < 0) {
            edge_row_[e] = -2;  // mark, numbered below
          }
        }
        path_cols_.push_back(std::move(col));
      }
    }
    int next_row = static_cast<int>(pair_rows_.size());
    for (EdgeId e = 0; e < topology.num_edges(); ++e) {
      if (edge_row_[e] == -2) {
        edge_row_[e] = next_row++;
        row_edge_.push_back(e);
      }
    }
    for (PathColumn& col : path_cols_) {
      for (EdgeId e : paths.routing_path(col.flat).edges) {
        col.edge_rows.push_back(edge_row_[e]);
      }
    }
    num_rows_ = next_row;
    theta_col_ = static_cast<int>(path_cols_.size());
    num_cols_ = theta_col_ + 1 + static_cast<int>(row_edge_.size());
  }

  int Solve(int max_iterations) {
    InitialBasis();
    Refactor();
    int iterations = 0;
    int degenerate_run = 0;
    int since_refactor = 0;
    while (true) {
      if (iterations >= max_iterations) {
        throw Error(ErrorKind::kRuntime,
                    "LP oracle hit the iteration limit (" +
                        std::to_string(max_iterations) + ")");
      }
      const bool bland = degenerate_run >= kDegenerateBeforeBland;
      int entering = ChooseEntering(bland);
      if (entering < 0) {
        if (since_refactor == 0) break;
        // Confirm optimality on a freshly factored basis.
        Refactor();
        since_refactor = 0;
        if (ChooseEntering(false) < 0) break;
        continue;
      }
      std::vector<double> w = BinvTimesColumn(entering);
      int leaving = ChooseLeaving(w, bland);
      if (leaving < 0) {
        throw Error(ErrorKind::kRuntime, "LP oracle found an unbounded ray");
      }
      double step = std::max(0.0, x_[leaving] / w[leaving]);
      degenerate_run = step > 1e-14 ? 0 : degenerate_run + 1;
      Pivot(leaving, entering, w, step);
      ++iterations;
      if (++since_refactor >= kRefactorEvery) {
        Refactor();
        since_refactor = 0;
      }
    }
    return iterations;
  }

  // Path weights for the demanded pairs (flat index -> weight); other
  // entries are left untouched.
  void ExtractWeights(std::vector<double>* weights) const {
    for (int r = 0; r < num_rows_; ++r) {
      int col = basis_[r];
      if (col < theta_col_) {
        (*weights)[path_cols_[col].flat] = std::max(0.0, x_[r]);
      }
    }
  }

  // Link prices y_e = -pi_e, clipped at zero, indexed by EdgeId.
  std::vector<double> EdgePrices() const {
    std::vector<double> pi = Duals();
    std::vector<double> prices(topology_.num_edges(), 0.0);
    for (size_t i = 0; i < row_edge_.size(); ++i) {
      int row = static_cast<int>(pair_rows_.size() + i);
      prices[row_edge_[i]] = std::max(0.0, -pi[row]);
    }
    return prices;
  }

  const std::vector<int>& pair_rows() const { return pair_rows_; }

 private:
  struct PathColumn {
    int flat = 0;
    int pair_row = 0;
    double coef = 0;
    std::vector<int> edge_rows;
  };

  double Capacity(int edge_row) const {
    return topology_.edge(row_edge_[edge_row - pair_rows_.size()]).capacity /
           capacity_scale_;
  }

  template <typename Fn>
  void ForEachEntry(int col, Fn&& fn) const {
    if (col < theta_col_) {
      const PathColumn& c = path_cols_[col];
      fn(c.pair_row, 1.0);
      for (int row : c.edge_rows) fn(row, c.coef);
    } else if (col == theta_col_) {
      for (int row = static_cast<int>(pair_rows_.size()); row < num_rows_;
           ++row) {
        fn(row, -Capacity(row));
      }
    } else {
      fn(static_cast<int>(pair_rows_.size()) + (col - theta_col_ - 1), 1.0);
    }
  }

  double Cost(int col) const { return col == theta_col_ ? 1.0 : 0.0; }

  // One path per pair at weight 1 (the first usable one), theta tight on the
  // most utilized link, slacks basic everywhere else. This basis is feasible.
  void InitialBasis() {
    basis_.assign(num_rows_, -1);
    is_basic_.assign(num_cols_, 0);
    std::vector<double> load(num_rows_, 0.0);
    int last_row = -1;
    for (int col = 0; col < theta_col_; ++col) {
      const PathColumn& c = path_cols_[col];
      if (c.pair_row == last_row) continue;
      last_row = c.pair_row;
      basis_[c.pair_row] = col;
      is_basic_[col] = 1;
      for (int row : c.edge_rows) load[row] += c.coef;
    }
    int tight = -1;
    double best = -1;
    for (int row = static_cast<int>(pair_rows_.size()); row < num_rows_;
         ++row) {
      double u = load[row] / Capacity(row);
      if (u > best) {
        best = u;
        tight = row;
      }
    }
    for (int row = static_cast<int>(pair_rows_.size()); row < num_rows_;
         ++row) {
      int col = row == tight ? theta_col_
                             : theta_col_ + 1 +
                                   (row - static_cast<int>(pair_rows_.size()));
      basis_[row] = col;
      is_basic_[col] = 1;
    }
  }

  // Gauss-Jordan inversion of the current basis, then x_B = B^-1 b.
  void Refactor() {
    const int m = num_rows_;
    std::vector<double> b(static_cast<size_t>(m) * m, 0.0);
    for (int r = 0; r < m; ++r) {
      ForEachEntry(basis_[r], [&](int row, double v) {
        b[static_cast<size_t>(row) * m + r] = v;
      });
    }
    binv_.assign(static_cast<size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) binv_[static_cast<size_t>(i) * m + i] = 1.0;

    for (int k = 0; k < m; ++k) {
      int pivot = k;
      double best = std::abs(b[static_cast<size_t>(k) * m + k]);
      for (int i = k + 1; i < m; ++i) {
        double v = std::abs(b[static_cast<size_t>(i) * m + k]);
        if (v > best) {
          best = v;
          pivot = i;
        }
      }
      if (best < 1e-13) {
        throw Error(ErrorKind::kRuntime, "LP oracle basis became singular");
      }
      if (pivot != k) {
        std::swap_ranges(b.begin() + static_cast<size_t>(k) * m,
                         b.begin() + static_cast<size_t>(k + 1) * m,
                         b.begin() + static_cast<size_t>(pivot) * m);
        std::swap_ranges(binv_.begin() + static_cast<size_t>(k) * m,
                         binv_.begin() + static_cast<size_t>(k + 1) * m,
                         binv_.begin() + static_cast<size_t>(pivot) * m);
      }
      double* brow = &b[static_cast<size_t>(k) * m];
      double* irow = &binv_[static_cast<size_t>(k) * m];
      double inv = 1.0 / brow[k];
      for (int j = 0; j < m; ++j) {
        brow[j] *= inv;
        irow[j] *= inv;
      }
      for (int i = 0; i < m; ++i) {
        if (i == k) continue;
        double f = b[static_cast<size_t>(i) * m + k];
        if (f == 0.0) continue;
        double* bi = &b[static_cast<size_t>(i) * m];
        double* ii = &binv_[static_cast<size_t>(i) * m];
        for (int j = 0; j < m; ++j) {
          bi[j] -= f * brow[j];
          ii[j] -= f * irow[j];
        }
      }
    }

    // b = 1 on pair rows, 0 on link rows.
    x_.assign(m, 0.0);
    for (int r = 0; r < m; ++r) {
      const double* row = &binv_[static_cast<size_t>(r) * m];
      double v = 0;
      for (size_t p = 0; p < pair_rows_.size(); ++p) v += row[p];
      x_[r] = v;
    }
  }

  std::vector<double> Duals() const {
    const int m = num_rows_;
    int theta_pos = -1;
    for (int r = 0; r < m; ++r) {
      if (basis_[r] == theta_col_) theta_pos = r;
    }
    std::vector<double> pi(m, 0.0);
    if (theta_pos < 0) return pi;
    const double* row = &binv_[static_cast<size_t>(theta_pos) * m];
    std::copy(row, row + m, pi.begin());
    return pi;
  }

  int ChooseEntering(bool bland) {
    std::vector<double> pi = Duals();
    int best = -1;
    double best_d = -kReducedCostTolerance;
    for (int col = 0; col < num_cols_; ++col) {
      if (is_basic_[col]) continue;
      double d = Cost(col);
      ForEachEntry(col, [&](int row, double v) { d -= pi[row] * v; });
      if (d < best_d) {
        best = col;
        best_d = d;
        if (bland) break;
      }
    }
    return best;
  }

  std::vector<double> BinvTimesColumn(int col) const {
    const int m = num_rows_;
    std::vector<double> w(m, 0.0);
    ForEachEntry(col, [&](int row, double v) {
      for (int i = 0; i < m; ++i) {
        w[i] += binv_[static_cast<size_t>(i) * m + row] * v;
      }
    });
    return w;
  }

  int ChooseLeaving(const std::vector<double>& w, bool bland) const {
    const int m = num_rows_;
    if (bland) {
      int best = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (w[i] <= kPivotTolerance) continue;
        double ratio = std::max(0.0, x_[i]) / w[i];
        if (ratio < best_ratio - 1e-15 ||
            (ratio <= best_ratio + 1e-15 && best >= 0 &&
             basis_[i] < basis_[best])) {
          best_ratio = std::min(best_ratio, ratio);
          best = i;
        }
      }
      return best;
    }
    // Harris two-pass ratio test: bound the step with a small feasibility
    // slack, then take the largest pivot element within that bound.
    double bound = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (w[i] <= kPivotTolerance) continue;
      bound = std::min(bound, (std::max(0.0, x_[i]) + kHarrisSlack) / w[i]);
    }
    int best = -1;
    for (int i = 0; i < m; ++i) {
      if (w[i] <= kPivotTolerance) continue;
      if (std::max(0.0, x_[i]) / w[i] <= bound &&
          (best < 0 || w[i] > w[best])) {
        best = i;
      }
    }
    return best;
  }

  void Pivot(int leaving, int entering, const std::vector<double>& w,
             double step) {
    const int m = num_rows_;
    for (int i = 0; i < m; ++i) x_[i] -= step * w[i];
    x_[leaving] = step;

    double* prow = &binv_[static_cast<size_t>(leaving) * m];
    const double inv = 1.0 / w[leaving];
    for (int j = 0; j < m; ++j) prow[j] *= inv;
    for (int i = 0; i < m; ++i) {
      if (i == leaving || w[i] == 0.0) continue;
      double* row = &binv_[static_cast<size_t>(i) * m];
      const double f = w[i];
      for (int j = 0; j < m; ++j) row[j] -= f * prow[j];
    }
    is_basic_[basis_[leaving]] = 0;
    basis_[leaving] = entering;
    is_basic_[entering] = 1;
  }

  const Topology& topology_;
  const PathSet& paths_;
  double demand_scale_ = 1;
  double capacity_scale_ = 1;
  std::vector<int> pair_rows_;   // row -> pair index
  std::vector<int> edge_row_;    // EdgeId -> row, -1 if unloaded
  std::vector<EdgeId> row_edge_;  // (row - #pair rows) -> EdgeId
  std::vector<PathColumn> path_cols_;
  int num_rows_ = 0;
  int num_cols_ = 0;
  int theta_col_ = 0;
  std::vector<int> basis_;
  std::vector<char> is_basic_;
  std::vector<double> binv_;
  std::vector<double> x_;
};

}  // namespace

std::vector<std::pair<NodeId, NodeId>> PairsWithoutUsablePath(
    const PathSet& paths, const DemandMatrix& demand,
    std::span<const char> usable) {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    auto [s, d] = paths.PairAt(pair);
    if (demand.at(s, d) <= 0) continue;
    bool any = false;
    for (int flat = paths.offset(pair); flat < paths.offset(pair + 1); ++flat) {
      any = any || Usable(usable, flat);
    }
    if (!any) out.emplace_back(s, d);
  }
  return out;
}

double DualBound(const Topology& topology, const PathSet& paths,
                 const DemandMatrix& demand, std::span<const char> usable,
                 std::span<const double> edge_prices) {
  double denominator = 0;
  for (const Edge& e : topology.edges()) {
    if (edge_prices[e.id] < 0) {
      throw Error(ErrorKind::kInvalidArgument, "link prices must be >= 0");
    }
    denominator += e.capacity * edge_prices[e.id];
  }
  if (denominator <= 0) return 0;
  double numerator = 0;
  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    auto [s, d] = paths.PairAt(pair);
    double volume = demand.at(s, d);
    if (volume <= 0) continue;
    double cheapest = std::numeric_limits<double>::infinity();
    for (int flat = paths.offset(pair); flat < paths.offset(pair + 1); ++flat) {
      if (!Usable(usable, flat)) continue;
      double length = 0;
      for (EdgeId e : paths.routing_path(flat).edges) length += edge_prices[e];
      cheapest = std::min(cheapest, length);
    }
    if (std::isinf(cheapest)) continue;
    numerator += volume * cheapest;
  }
  return numerator / denominator;
}

LpSolution SolveMinMlu(const Topology& topology, const PathSet& paths,
                       const DemandMatrix& demand, std::span<const char> usable,
                       const LpOptions& options) {
  if (demand.num_nodes() != paths.num_nodes() ||
      topology.num_edges() != paths.num_edges()) {
    throw Error(ErrorKind::kInvalidArgument,
                "demand, topology and path set dimensions do not match");
  }
  if (!usable.empty() &&
      static_cast<int>(usable.size()) != paths.num_routing_paths()) {
    throw Error(ErrorKind::kInvalidArgument, "usable mask has wrong size");
  }
  std::vector<std::pair<NodeId, NodeId>> stranded =
      PairsWithoutUsablePath(paths, demand, usable);
  if (!stranded.empty()) {
    std::string msg = "pairs with demand but no usable path:";
    for (size_t i = 0; i < stranded.size() && i < 10; ++i) {
      msg += " (" + topology.node(stranded[i].first).label + "," +
             topology.node(stranded[i].second).label + ")";
    }
    if (stranded.size() > 10) msg += " ...";
    throw Error(ErrorKind::kData, msg);
  }

  LpSolution out;
  out.ratios.weights.assign(paths.num_routing_paths(), 0.0);
  // Uniform over usable paths for every pair; demanded pairs are overwritten
  // by the solver below.
  for (int pair = 0; pair < paths.num_pairs(); ++pair) {
    int count = 0;
    for (int flat = paths.offset(pair); flat < paths.offset(pair + 1); ++flat) {
      count += Usable(usable, flat) ? 1 : 0;
    }
    for (int flat = paths.offset(pair); flat < paths.offset(pair + 1); ++flat) {
      if (count == 0) {
        out.ratios.weights[flat] = 1.0 / paths.path_count(pair);
      } else if (Usable(usable, flat)) {
        out.ratios.weights[flat] = 1.0 / count;
      }
    }
  }

  MinMluSimplex simplex(topology, paths, demand, usable);
  if (!simplex.pair_rows().empty()) {
    const int limit = options.max_iterations > 0
                          ? options.max_iterations
                          : 50 * (paths.num_routing_paths() +
                                  topology.num_edges() + 10);
    for (int pair : simplex.pair_rows()) {
      for (int flat = paths.offset(pair); flat < paths.offset(pair + 1);
           ++flat) {
        out.ratios.weights[flat] = 0.0;
      }
    }
    out.iterations = simplex.Solve(limit);
    simplex.ExtractWeights(&out.ratios.weights);
    for (int pair : simplex.pair_rows()) {
      double sum = 0;
      for (int flat = paths.offset(pair); flat < paths.offset(pair + 1);
           ++flat) {
        sum += out.ratios.weights[flat];
      }
      for (int flat = paths.offset(pair); flat < paths.offset(pair + 1);
           ++flat) {
        out.ratios.weights[flat] /= sum;
      }
    }
    out.edge_prices = simplex.EdgePrices();
  } else {
    out.edge_prices.assign(topology.num_edges(), 0.0);
  }

  out.report =
      ComputeMlu(ComputeLoads(topology, paths, demand, out.ratios), topology);
  double price_norm = 0;
  for (const Edge& e : topology.edges()) {
    price_norm += e.capacity * out.edge_prices[e.id];
  }
  if (price_norm > 0) {
    for (double& y : out.edge_prices) y /= price_norm;
    out.dual_bound =
        DualBound(topology, paths, demand, usable, out.edge_prices);
  }
  out.duality_gap = out.report.mlu - out.dual_bound;
  if (out.duality_gap > options.optimality_tolerance) {
    throw Error(ErrorKind::kRuntime,
                "LP oracle could not certify optimality: gap " +
                    std::to_string(out.duality_gap));
  }
  return out;
}

}  // namespace reweave
