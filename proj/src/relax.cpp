#include "invym/relax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "invym/error.hpp"
#include "invym/parallel.hpp"

namespace invym {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kConvergedReducedCost = -1e-8;
constexpr int kMultistarts = 16;
constexpr int kMaxColumnsPerPass = 60;
constexpr double kEnergyTolerance = 1e-9;
// Smallest energy decrease for which a node move is taken.
constexpr double kNodeGain = 1e-11;

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Solves the m x m row-major system a x = b by partial pivoting.
std::optional<std::vector<double>> solve_dense(std::vector<double> a, std::vector<double> b) {
  const auto m = b.size();
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r) {
      if (std::abs(a[r * m + c]) > std::abs(a[piv * m + c])) piv = r;
    }
    if (std::abs(a[piv * m + c]) < 1e-14) return std::nullopt;
    if (piv != c) {
      for (std::size_t k = 0; k < m; ++k) std::swap(a[c * m + k], a[piv * m + k]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < m; ++r) {
      const double f = a[r * m + c] / a[c * m + c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < m; ++k) a[r * m + k] -= f * a[c * m + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(m);
  for (std::size_t c = m; c-- > 0;) {
    double s = b[c];
    for (std::size_t k = c + 1; k < m; ++k) s -= a[c * m + k] * x[k];
    x[c] = s / a[c * m + c];
  }
  return x;
}

class Tableau {
 public:
  Tableau(std::span<const Mat> atoms, const Mat& target)
      : n2_(target.dim() * target.dim()),
        m_(n2_ + 1),
        k_(static_cast<int>(atoms.size())),
        cols_(k_ + m_ + 1),
        t_(static_cast<std::size_t>(m_) * cols_, 0.0),
        basis_(m_) {
    for (int r = 0; r < m_; ++r) {
      double rhs = r < n2_ ? target.entries()[r] : 1.0;
      const double sign = rhs < 0.0 ? -1.0 : 1.0;
      for (int j = 0; j < k_; ++j) {
        at(r, j) = sign * (r < n2_ ? atoms[j].entries()[r] : 1.0);
      }
      at(r, k_ + r) = 1.0;
      at(r, cols_ - 1) = sign * rhs;
      basis_[r] = k_ + r;
      scale_ = std::max(scale_, std::abs(rhs));
    }
  }

  // Phase 1 then phase 2; false when infeasible.
  bool solve(std::span<const double> costs) {
    std::vector<double> c1(k_ + m_, 0.0);
    for (int r = 0; r < m_; ++r) c1[k_ + r] = 1.0;
    run(c1, k_ + m_);
    double infeas = 0.0;
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] >= k_) infeas += at(r, cols_ - 1);
    }
    if (infeas > 1e-9 * scale_) return false;
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < k_) continue;
      for (int j = 0; j < k_; ++j) {
        if (std::abs(at(r, j)) > 1e-9) {
          pivot(r, j);
          break;
        }
      }
    }
    std::vector<double> c2(k_ + m_, 0.0);
    std::copy(costs.begin(), costs.end(), c2.begin());
    run(c2, k_);
    return true;
  }

  int rows() const { return m_; }
  int basis(int r) const { return basis_[r]; }
  bool live(int r) const { return basis_[r] < k_; }
  double value(int r) const { return at(r, cols_ - 1); }

 private:
  double& at(int r, int j) { return t_[static_cast<std::size_t>(r) * cols_ + j]; }
  double at(int r, int j) const { return t_[static_cast<std::size_t>(r) * cols_ + j]; }

  void pivot(int r, int j) {
    const double p = at(r, j);
    for (int c = 0; c < cols_; ++c) at(r, c) /= p;
    for (int o = 0; o < m_; ++o) {
      if (o == r) continue;
      const double f = at(o, j);
      if (f == 0.0) continue;
      for (int c = 0; c < cols_; ++c) at(o, c) -= f * at(r, c);
      at(o, j) = 0.0;
    }
    basis_[r] = j;
  }

  // Bland's rule: lowest-index entering column, ties in the ratio test
  // broken by lowest basic index. Only columns below `allowed` may enter.
  void run(const std::vector<double>& c, int allowed) {
    double cmax = 1.0;
    for (double v : c) cmax = std::max(cmax, std::abs(v));
    const double tol = 1e-11 * cmax;
    const int max_pivots = 50 * (k_ + m_) + 100;
    for (int it = 0; it < max_pivots; ++it) {
      int enter = -1;
      for (int j = 0; j < allowed && enter < 0; ++j) {
        double red = c[j];
        for (int r = 0; r < m_; ++r) red -= c[basis_[r]] * at(r, j);
        if (red < -tol) enter = j;
      }
      if (enter < 0) return;
      int leave = -1;
      double best = kInf;
      for (int r = 0; r < m_; ++r) {
        const double a = at(r, enter);
        if (a <= 1e-12) continue;
        const double ratio = at(r, cols_ - 1) / a;
        if (ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave < 0) return;  // unbounded direction; impossible with the mass row
      pivot(leave, enter);
    }
  }

  int n2_;
  int m_;
  int k_;
  int cols_;
  std::vector<double> t_;
  std::vector<int> basis_;
  double scale_ = 1.0;
};

std::optional<LpSolution> solve_lp(std::span<const Mat> atoms, const Mat& target,
                                   std::span<const double> costs) {
  const int n = target.dim();
  const int n2 = n * n;
  Tableau tab(atoms, target);
  if (!tab.solve(costs)) return std::nullopt;

  std::vector<int> live_rows, cols;
  for (int r = 0; r < tab.rows(); ++r) {
    if (tab.live(r)) {
      live_rows.push_back(r);
      cols.push_back(tab.basis(r));
    }
  }
  auto entry = [&](int row, int col) {
    return row < n2 ? atoms[col].entries()[row] : 1.0;
  };
  const std::size_t m = live_rows.size();
  std::vector<double> B(m * m), Bt(m * m), rhs(m), cb(m);
  for (std::size_t a = 0; a < m; ++a) {
    rhs[a] = live_rows[a] < n2 ? target.entries()[live_rows[a]] : 1.0;
    cb[a] = costs[cols[a]];
    for (std::size_t b = 0; b < m; ++b) {
      B[a * m + b] = entry(live_rows[a], cols[b]);
      Bt[b * m + a] = B[a * m + b];
    }
  }
  LpSolution sol;
  sol.weights.assign(atoms.size(), 0.0);
  const auto polished = solve_dense(B, rhs);
  const bool use_polished =
      polished && std::all_of(polished->begin(), polished->end(), [](double w) { return w > -1e-12; });
  for (std::size_t a = 0; a < m; ++a) {
    const double w = use_polished ? (*polished)[a] : tab.value(live_rows[a]);
    sol.weights[cols[a]] = std::max(0.0, w);
    sol.basis.push_back(static_cast<std::size_t>(cols[a]));
  }
  sol.moment_dual = Mat(n);
  if (const auto y = solve_dense(Bt, cb)) {
    for (std::size_t a = 0; a < m; ++a) {
      const int r = live_rows[a];
      if (r < n2) {
        sol.moment_dual(r / n, r % n) = (*y)[a];
      } else {
        sol.mass_dual = (*y)[a];
      }
    }
  }
  for (std::size_t j = 0; j < atoms.size(); ++j) sol.value += sol.weights[j] * costs[j];
  return sol;
}

double reduced_cost_at(const Mat& s, const Mat& pi, double sigma, const TestFn& W,
                       const SupportConstraints& c) {
  if (!s.all_finite() || is_singular(s)) return kInf;
  if (c.positive_det && !(s.det() > 0.0)) return kInf;
  if (c.rho_cap && !(ball_radius(s) <= *c.rho_cap)) return kInf;
  const double w = W(s).value();
  if (!std::isfinite(w)) return kInf;
  return w - pi.dot(s) - sigma;
}

std::pair<Mat, double> compass(const Mat& start, double f0,
                               const std::function<double(const Mat&)>& f) {
  const int n = start.dim();
  Mat s = start;
  double fs = f0;
  double step = 0.25 * std::max(1.0, frob_norm(s));
  int evals = 0;
  while (step > 1e-10 && evals < 2000) {
    bool improved = false;
    for (int k = 0; k < n * n && !improved; ++k) {
      for (double sign : {1.0, -1.0}) {
        Mat trial = s;
        trial(k / n, k % n) += sign * step;
        const double ft = f(trial);
        ++evals;
        if (ft < fs) {
          s = trial;
          fs = ft;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return {s, fs};
}

// Admissible atoms whose convex hull contains M: M itself, else M + t D_k
// for the smallest t in a ladder where all are admissible. Small coordinate
// perturbations of the first atom are appended so the LP rows have full rank
// and the duals are determined.
std::vector<Mat> initial_atoms(const Mat& M, const TestFn& W, const SupportConstraints& c) {
  const int n = M.dim();
  std::vector<Mat> atoms;
  if (admissible_atom(M, W, c)) {
    atoms.push_back(M);
  } else {
    std::vector<Mat> dirs;
    if (n == 1) {
      dirs = {Mat::scalar(1.0), Mat::scalar(-1.0)};
    } else if (n == 2) {
      const Mat I = Mat::identity(2), J{{0, -1}, {1, 0}};
      dirs = {I, I * -1.0, J, J * -1.0};
    } else {
      dirs = {Mat::identity(3), Mat::diag({1, -1, -1}), Mat::diag({-1, 1, -1}),
              Mat::diag({-1, -1, 1})};
    }
    for (double t : {0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 8.0}) {
      std::vector<Mat> ladder;
      for (const Mat& D : dirs) ladder.push_back(M + D * t);
      if (std::all_of(ladder.begin(), ladder.end(),
                      [&](const Mat& a) { return admissible_atom(a, W, c); })) {
        atoms = std::move(ladder);
        break;
      }
    }
    if (atoms.empty()) return atoms;
  }
  const Mat base = atoms.front();
  const double tau = 1e-3 * std::max(1.0, frob_norm(base));
  for (int k = 0; k < n * n; ++k) {
    for (double sign : {1.0, -1.0}) {
      Mat a = base;
      a(k / n, k % n) += sign * tau;
      if (admissible_atom(a, W, c)) atoms.push_back(a);
    }
  }
  return atoms;
}

struct CellState {
  std::vector<Mat> atoms;
  std::vector<double> costs;
  LpSolution lp;
  double residual = 0.0;
};

// Keeps the basic atoms of `lp` and any atom carrying weight.
void keep_basic(CellState& cell, const LpSolution& lp) {
  std::vector<bool> keep(cell.atoms.size(), false);
  for (std::size_t j : lp.basis) keep[j] = true;
  std::size_t out = 0;
  for (std::size_t j = 0; j < cell.atoms.size(); ++j) {
    if (keep[j] || lp.weights[j] > 0.0) {
      cell.atoms[out] = cell.atoms[j];
      cell.costs[out] = cell.costs[j];
      ++out;
    }
  }
  cell.atoms.resize(out);
  cell.costs.resize(out);
}

std::optional<LpSolution> cell_lp(const CellState& cell, const Mat& M) {
  if (cell.atoms.empty()) return std::nullopt;
  return solve_lp(cell.atoms, M, cell.costs);
}

void column_generation(CellState& cell, const Mat& M, const RelaxProblem& prob,
                       std::size_t index, std::uint64_t seed) {
  auto lp = cell_lp(cell, M);
  if (!lp) {
    cell.atoms = initial_atoms(M, prob.W, prob.support);
    if (cell.atoms.empty()) {
      throw Stalled("cell " + std::to_string(index) + ": no admissible atoms with moment " +
                    M.to_string());
    }
    cell.costs.clear();
    for (const Mat& a : cell.atoms) cell.costs.push_back(prob.W(a).value());
    lp = cell_lp(cell, M);
    if (!lp) throw Stalled("cell " + std::to_string(index) + ": initial LP infeasible");
    if (static_cast<int>(cell.atoms.size()) > prob.atom_budget) {
      keep_basic(cell, *lp);
      lp = cell_lp(cell, M);
      if (!lp) throw Stalled("cell " + std::to_string(index) + ": pruned LP infeasible");
    }
  }
  cell.residual = 0.0;
  for (int it = 0; it < kMaxColumnsPerPass; ++it) {
    const AtomProposal prop = refine_atoms(cell.atoms, lp->moment_dual, lp->mass_dual, prob.W,
                                           prob.support, mix_seed(seed + it));
    cell.residual = std::max(0.0, -prop.reduced_cost);
    if (prop.converged) break;
    if (static_cast<int>(cell.atoms.size()) >= prob.atom_budget) {
      keep_basic(cell, *lp);
      if (static_cast<int>(cell.atoms.size()) >= prob.atom_budget) break;
      lp = cell_lp(cell, M);
      if (!lp) throw Stalled("cell " + std::to_string(index) + ": pruned LP infeasible");
    }
    cell.atoms.push_back(prop.atom);
    cell.costs.push_back(prob.W(prop.atom).value());
    auto next = cell_lp(cell, M);
    if (!next) break;  // cannot happen: the old basis stays feasible
    lp = std::move(next);
  }
  cell.lp = std::move(*lp);
}

// Cell-average gradient of the nodal interpolant.
Mat cell_moment(int dim, int N, const std::vector<double>& y1, const std::vector<Vec>& y2,
                std::size_t c) {
  const double h = 1.0 / N;
  if (dim == 1) return Mat::scalar((y1[c + 1] - y1[c]) / h);
  const int i = static_cast<int>(c % N), j = static_cast<int>(c / N);
  const auto M = static_cast<std::size_t>(N + 1);
  auto node = [&](int a, int b) -> const Vec& { return y2[static_cast<std::size_t>(b) * M + a]; };
  const Vec &p00 = node(i, j), &p10 = node(i + 1, j), &p11 = node(i + 1, j + 1),
            &p01 = node(i, j + 1);
  Mat G(2);
  for (int r = 0; r < 2; ++r) {
    G(r, 0) = ((p10[r] - p00[r]) + (p11[r] - p01[r])) / (2 * h);
    G(r, 1) = ((p11[r] - p10[r]) + (p01[r] - p00[r])) / (2 * h);
  }
  return G;
}

}  // namespace

LpSolution lp_weights(std::span<const Mat> atoms, const Mat& target,
                      std::span<const double> costs) {
  if (atoms.empty()) throw InvalidArgument("lp_weights needs at least one atom");
  if (costs.size() != atoms.size()) throw InvalidArgument("one cost per atom required");
  for (const Mat& a : atoms) {
    if (a.dim() != target.dim()) throw InvalidArgument("atom and target dimensions differ");
    if (!a.all_finite()) throw InvalidArgument("atoms must be finite");
  }
  if (!target.all_finite()) throw InvalidArgument("target must be finite");
  for (double c : costs) {
    if (!std::isfinite(c)) throw InvalidArgument("costs must be finite");
  }
  auto sol = solve_lp(atoms, target, costs);
  if (!sol) {
    throw Infeasible("target " + target.to_string() + " is outside the convex hull of the atoms");
  }
  return std::move(*sol);
}

bool admissible_atom(const Mat& s, const TestFn& W, const SupportConstraints& c) {
  return std::isfinite(reduced_cost_at(s, Mat(s.dim()), 0.0, W, c));
}

AtomProposal refine_atoms(std::span<const Mat> atoms, const Mat& moment_dual, double mass_dual,
                          const TestFn& W, const SupportConstraints& c, std::uint64_t seed) {
  const int n = moment_dual.dim();
  auto f = [&](const Mat& s) { return reduced_cost_at(s, moment_dual, mass_dual, W, c); };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Mat> starts{Mat::identity(n)};
  for (int i = 1; i < kMultistarts; ++i) {
    Mat s = atoms.empty() ? Mat::identity(n) : atoms[(i - 1) % atoms.size()];
    const double scale = 0.3 * std::max(1.0, frob_norm(s));
    for (int r = 0; r < n; ++r) {
      for (int k = 0; k < n; ++k) s(r, k) += scale * gauss(rng);
    }
    starts.push_back(s);
  }
  AtomProposal best;
  best.atom = Mat::identity(n);
  best.reduced_cost = kInf;
  for (const Mat& s0 : starts) {
    const double f0 = f(s0);
    if (!std::isfinite(f0)) continue;
    const auto [s, fs] = compass(s0, f0, f);
    if (fs < best.reduced_cost) {
      best.atom = s;
      best.reduced_cost = fs;
    }
  }
  best.converged = !(best.reduced_cost < kConvergedReducedCost);
  if (!std::isfinite(best.reduced_cost)) best.reduced_cost = 0.0;
  return best;
}

RelaxSolution relax_solve(const RelaxProblem& prob) {
  const int dim = prob.mesh.dim();
  const int n = prob.F.dim();
  if (n != dim) throw InvalidArgument("boundary datum must be " + std::to_string(dim) + "x" +
                                      std::to_string(dim) + " for this mesh");
  if (prob.atom_budget < n * n + 1) {
    throw InvalidArgument("atom_budget must be at least n^2 + 1 = " + std::to_string(n * n + 1));
  }
  if (prob.max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!prob.F.all_finite()) throw InvalidArgument("boundary datum must be finite");
  if (prob.support.rho_cap && !(*prob.support.rho_cap >= 1.0)) {
    throw InvalidArgument("rho_cap must be >= 1");
  }

  const int N = prob.mesh.cells_per_axis();
  const double h = 1.0 / N;
  const std::size_t cells = prob.mesh.cell_count();
  const double vol = prob.mesh.cell_volume();
  std::vector<double> y1;
  std::vector<Vec> y2;
  if (dim == 1) {
    for (int i = 0; i <= N; ++i) y1.push_back(prob.F(0, 0) * (i * h));
  } else {
    for (int j = 0; j <= N; ++j) {
      for (int i = 0; i <= N; ++i) y2.push_back(prob.F * Vec{i * h, j * h});
    }
  }
  auto moment = [&](std::size_t c) { return cell_moment(dim, N, y1, y2, c); };

  std::vector<CellState> state(cells);

  auto generate = [&](int iter) {
    parallel_for(cells, [&](std::size_t c) {
      const std::uint64_t seed =
          mix_seed(prob.seed ^ mix_seed((static_cast<std::uint64_t>(iter) << 32) ^ c));
      column_generation(state[c], moment(c), prob, c, seed);
    });
    double e = 0.0;
    for (const CellState& s : state) e += vol * s.lp.value;
    return e;
  };

  // Cells touched by interior node (i, j).
  auto touching = [&](int i, int j) {
    std::vector<std::size_t> out_cells;
    if (dim == 1) return std::vector<std::size_t>{static_cast<std::size_t>(i - 1),
                                                  static_cast<std::size_t>(i)};
    for (int b = j - 1; b <= j; ++b) {
      for (int a = i - 1; a <= i; ++a) out_cells.push_back(static_cast<std::size_t>(b) * N + a);
    }
    return out_cells;
  };
  auto local_energy = [&](const std::vector<std::size_t>& cs, std::vector<LpSolution>* lps) {
    double e = 0.0;
    for (std::size_t c : cs) {
      auto lp = cell_lp(state[c], moment(c));
      if (!lp) return kInf;
      e += lp->value;
      if (lps) lps->push_back(std::move(*lp));
    }
    return e;
  };
  auto node_descent = [&] {
    double step = 0.25 * h * std::max(1.0, frob_norm(prob.F));
    for (int sweep = 0; sweep < 24 && step > 1e-9 * h; ++sweep) {
      bool moved = false;
      for (int j = dim == 1 ? 0 : 1; j < (dim == 1 ? 1 : N); ++j) {
        for (int i = 1; i < N; ++i) {
          const auto cs = touching(i, j);
          double current = local_energy(cs, nullptr);
          for (int comp = 0; comp < dim; ++comp) {
            for (double sign : {1.0, -1.0}) {
              double& coord =
                  dim == 1 ? y1[i] : y2[static_cast<std::size_t>(j) * (N + 1) + i][comp];
              const double old = coord;
              coord = old + sign * step;
              std::vector<LpSolution> lps;
              const double trial = local_energy(cs, &lps);
              if (vol * (current - trial) > kNodeGain) {
                current = trial;
                moved = true;
                for (std::size_t t = 0; t < cs.size(); ++t) state[cs[t]].lp = std::move(lps[t]);
              } else {
                coord = old;
              }
            }
          }
        }
      }
      if (!moved) step *= 0.5;
    }
  };

  // Largest |sum_j w_j s_j - cell moment| over cells for the current LPs.
  auto moment_residual = [&] {
    double r = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      Mat m(n);
      for (std::size_t j = 0; j < state[c].atoms.size(); ++j) {
        m = m + state[c].atoms[j] * state[c].lp.weights[j];
      }
      r = std::max(r, frob_norm(m - moment(c)));
    }
    return r;
  };

  std::vector<double> history;
  std::vector<double> residuals;
  bool converged = false;
  double prev = kInf;
  for (int iter = 1; iter <= prob.max_iters; ++iter) {
    if (iter > 1) node_descent();
    const double e = generate(iter);
    history.push_back(e);
    residuals.push_back(moment_residual());
    if (prev - e < kEnergyTolerance) {
      converged = true;
      break;
    }
    prev = e;
  }

  std::vector<AtomicMeasure> measures;
  measures.reserve(cells);
  double kkt = 0.0;
  for (const CellState& s : state) {
    std::vector<Atom> atoms;
    for (std::size_t j = 0; j < s.atoms.size(); ++j) {
      if (s.lp.weights[j] > 0.0) atoms.push_back({s.atoms[j], s.lp.weights[j]});
    }
    measures.emplace_back(std::move(atoms));
    kkt = std::max(kkt, s.residual);
  }
  YoungMeasureField field(prob.mesh, std::move(measures));
  double energy = 0.0;
  for (const AtomicMeasure& nu : field.measures()) energy += vol * pair(nu, prob.W).value();
  const int iterations = static_cast<int>(history.size());
  return RelaxSolution{dim == 1 ? interpolate_p1(y1) : interpolate_p1(N, y2),
                       std::move(field),
                       energy,
                       iterations,
                       kkt,
                       std::move(history),
                       std::move(residuals),
                       converged};
}

}  // namespace invym
