#include "invym/envelope.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "invym/error.hpp"
#include "invym/laminate.hpp"
#include "invym/parallel.hpp"

namespace invym {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGolden = 0.6180339887498949;

// Values of the O(rho_tilde) extension as doubles (+inf outside the ball).
struct BallFn {
  const TestFn& v;
  double rho;
  double operator()(const Mat& s) const {
    if (!in_rho_ball(s, {rho, false})) return kInf;
    return v(s).value();
  }
};

// Golden-section minimization of f on [lo, hi]; returns the best point seen.
template <class Fn>
std::pair<double, double> golden(Fn&& f, double lo, double hi, int iters) {
  double a = lo, b = hi;
  double c = b - kGolden * (b - a), d = a + kGolden * (b - a);
  double fc = f(c), fd = f(d);
  double best_x = fc <= fd ? c : d, best_f = std::min(fc, fd);
  for (int it = 0; it < iters && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
      if (fc < best_f) best_f = fc, best_x = c;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
      if (fd < best_f) best_f = fd, best_x = d;
    }
  }
  return {best_x, best_f};
}

struct HullPoint {
  double x;
  double y;
};

// Lower convex hull of points sorted by x (monotone chain).
std::vector<HullPoint> lower_hull(const std::vector<HullPoint>& pts) {
  std::vector<HullPoint> h;
  for (const HullPoint& p : pts) {
    while (h.size() >= 2) {
      const HullPoint& a = h[h.size() - 2];
      const HullPoint& b = h.back();
      const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      if (cross > 0.0) break;
      h.pop_back();
    }
    h.push_back(p);
  }
  return h;
}

// Segment of the lower hull over x0: indices (i, j) with h[i].x <= x0 <= h[j].x,
// i == j when x0 is a vertex. Empty when x0 lies outside the hull's range.
std::optional<std::pair<std::size_t, std::size_t>> hull_segment(const std::vector<HullPoint>& h,
                                                                double x0) {
  if (h.empty() || x0 < h.front().x || x0 > h.back().x) return std::nullopt;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].x == x0) return std::make_pair(i, i);
    if (i + 1 < h.size() && h[i].x < x0 && x0 < h[i + 1].x) return std::make_pair(i, i + 1);
  }
  return std::nullopt;
}

std::vector<HullPoint> sorted_unique(std::vector<HullPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const HullPoint& a, const HullPoint& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  std::vector<HullPoint> out;
  for (const HullPoint& p : pts) {
    if (!out.empty() && out.back().x == p.x) continue;
    out.push_back(p);
  }
  return out;
}

struct PolishedSplit {
  double t1;
  double t2;
  double value;
};

// Refines a split t1 < 0 < t2 of the origin, minimizing the chord value
// (t2 phi(t1) - t1 phi(t2)) / (t2 - t1) by alternating golden-section
// searches of half-width `width` around each endpoint, clamped to [lo, hi].
template <class Phi>
PolishedSplit polish_split(Phi&& phi, HullPoint left, HullPoint right, double lo, double hi,
                           double width) {
  auto chord = [](double a, double pa, double b, double pb) { return (b * pa - a * pb) / (b - a); };
  double t1 = left.x, p1 = left.y, t2 = right.x, p2 = right.y;
  double best = chord(t1, p1, t2, p2);
  for (int round = 0; round < 4; ++round) {
    const auto [n1, v1] = golden([&](double t) { return chord(t, phi(t), t2, p2); },
                                 std::max(lo, t1 - width), std::min(-1e-12, t1 + width), 80);
    if (v1 < best) {
      best = v1;
      t1 = n1;
      p1 = phi(n1);
    }
    const auto [n2, v2] = golden([&](double t) { return chord(t1, p1, t, phi(t)); },
                                 std::max(1e-12, t2 - width), std::min(hi, t2 + width), 80);
    if (v2 < best) {
      best = v2;
      t2 = n2;
      p2 = phi(n2);
    }
  }
  return {t1, t2, chord(t1, p1, t2, p2)};
}

// ---- lamination -----------------------------------------------------------

std::vector<Mat> direction_set(int n) {
  std::vector<Mat> dirs;
  if (n == 1) {
    dirs.push_back(Mat::scalar(1.0));
    return dirs;
  }
  std::vector<Vec> vecs;
  if (n == 2) {
    constexpr int kAngles = 32;
    for (int i = 0; i < kAngles; ++i) {
      const double th = M_PI * i / kAngles;
      vecs.push_back(Vec{std::cos(th), std::sin(th)});
    }
  } else {
    const std::vector<std::array<double, 3>> raw{
        {1, 0, 0}, {0, 1, 0},  {0, 0, 1},  {1, 1, 0},  {1, -1, 0}, {1, 0, 1},  {1, 0, -1},
        {0, 1, 1}, {0, 1, -1}, {1, 1, 1},  {1, 1, -1}, {1, -1, 1}, {-1, 1, 1}};
    for (const auto& r : raw) {
      const double len = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
      vecs.push_back(Vec{r[0] / len, r[1] / len, r[2] / len});
    }
  }
  for (const Vec& a : vecs) {
    for (const Vec& m : vecs) dirs.push_back(Mat::outer(a, m));
  }
  return dirs;
}

struct LamNode {
  double value = kInf;
  std::vector<Atom> atoms;
};

struct LineSplit {
  double value = kInf;
  double t1 = 0.0;  // < 0
  double t2 = 0.0;  // > 0
  std::size_t dir = 0;
};

// Directions whose coarse hull split is refined at each node.
constexpr std::size_t kPolished = 8;

class Laminator {
 public:
  Laminator(const TestFn& v, double rho, int n)
      : f_{v, rho}, dirs_(direction_set(n)), samples_(n == 1 ? 2001 : 65) {}

  LamNode solve(const Mat& F, int depth) const {
    LamNode best;
    best.value = f_(F);
    best.atoms = {{F, 1.0}};
    if (depth == 0) return best;

    const double T = f_.rho + frob_norm(F);
    std::vector<LineSplit> splits(dirs_.size());
    parallel_for(dirs_.size(), [&](std::size_t d) { splits[d] = line_split(F, d, T, false); });
    auto rank = [&] {
      std::vector<std::size_t> idx;
      for (std::size_t d = 0; d < splits.size(); ++d) {
        if (std::isfinite(splits[d].value)) idx.push_back(d);
      }
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return splits[a].value < splits[b].value;
      });
      return idx;
    };
    std::vector<std::size_t> order = rank();
    if (order.size() > kPolished) order.resize(kPolished);
    parallel_for(order.size(), [&](std::size_t i) {
      splits[order[i]] = line_split(F, order[i], T, true);
    });
    order = rank();
    if (order.size() > 2) order.resize(2);

    auto consider = [&](const Mat& c1, const Mat& c2, double lambda) {
      const LamNode n1 = solve(c1, depth - 1);
      const LamNode n2 = solve(c2, depth - 1);
      const double value = lambda * n1.value + (1.0 - lambda) * n2.value;
      if (value < best.value) {
        best.value = value;
        best.atoms.clear();
        for (const Atom& a : n1.atoms) best.atoms.push_back({a.location, lambda * a.weight});
        for (const Atom& a : n2.atoms) {
          best.atoms.push_back({a.location, (1.0 - lambda) * a.weight});
        }
      }
    };
    for (std::size_t d : order) {
      const LineSplit& s = splits[d];
      const double lambda = s.t2 / (s.t2 - s.t1);
      consider(F + dirs_[d] * s.t1, F + dirs_[d] * s.t2, lambda);
    }
    if (order.empty() && depth > 1) {
      // No single split lands in the ball: try symmetric coordinate splits
      // and let deeper levels repair the children.
      const int n = F.dim();
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          Vec ei(n), ej(n);
          ei[i] = 1.0;
          ej[j] = 1.0;
          const Mat D = Mat::outer(ei, ej);
          for (double t : {0.5, 1.0, 0.5 * f_.rho}) consider(F - D * t, F + D * t, 0.5);
        }
      }
    }
    return best;
  }

 private:
  // Best two-point split of F along direction d from the sampled lower hull,
  // optionally refined by alternating golden-section searches on the endpoints.
  LineSplit line_split(const Mat& F, std::size_t d, double T, bool polish) const {
    const Mat& D = dirs_[d];
    auto phi = [&](double t) { return f_(F + D * t); };
    std::vector<HullPoint> pts;
    const double h = 2.0 * T / (samples_ - 1);
    for (int j = 0; j < samples_; ++j) {
      const double t = -T + h * j;
      const double y = phi(t);
      if (std::isfinite(y)) pts.push_back({t, y});
    }
    const double y0 = phi(0.0);
    if (std::isfinite(y0)) pts.push_back({0.0, y0});
    const auto hull = lower_hull(sorted_unique(std::move(pts)));
    const auto seg = hull_segment(hull, 0.0);
    LineSplit s;
    s.dir = d;
    if (!seg || seg->first == seg->second) return s;
    if (!polish) {
      const HullPoint &a = hull[seg->first], &b = hull[seg->second];
      s.t1 = a.x;
      s.t2 = b.x;
      s.value = (b.x * a.y - a.x * b.y) / (b.x - a.x);
      return s;
    }
    const auto [t1, t2, value] =
        polish_split(phi, hull[seg->first], hull[seg->second], -T, T, 2 * h);
    s.value = value;
    s.t1 = t1;
    s.t2 = t2;
    return s;
  }

  BallFn f_;
  std::vector<Mat> dirs_;
  int samples_;
};

// ---- finite elements --------------------------------------------------------

std::vector<std::pair<double, double>> k_intervals(double rho) {
  return {{-rho, -1.0 / rho}, {1.0 / rho, rho}};
}

bool in_k(double s, double rho) {
  const double a = std::abs(s);
  return a >= 1.0 / rho && a <= rho;
}

// Slopes in K with the given mean: F itself, or m slopes a and N - m slopes
// -b spread evenly.
std::optional<std::vector<double>> start_slopes_1d(double F, int N, double rho) {
  if (in_k(F, rho)) return std::vector<double>(N, F);
  for (double b : {1.0, 1.0 / rho, rho, 0.5 * (1.0 + rho)}) {
    for (int m = 1; m < N; ++m) {
      const double a = (N * F + (N - m) * b) / m;
      if (!in_k(a, rho) || !in_k(-b, rho)) continue;
      std::vector<double> s(N);
      int placed = 0;
      for (int e = 0; e < N; ++e) {
        const int target = static_cast<int>(std::floor(static_cast<double>(e + 1) * m / N));
        if (target > placed) {
          s[e] = a;
          ++placed;
        } else {
          s[e] = -b;
        }
      }
      return s;
    }
  }
  return std::nullopt;
}

EnvelopeEstimate fe_1d(const TestFn& v, double F, int N, double rho, int iters) {
  const auto slopes = start_slopes_1d(F, N, rho);
  if (!slopes) throw NoFeasibleStart("no admissible 1D start for F = " + std::to_string(F));
  const double h = 1.0 / N;
  std::vector<double> y(N + 1, 0.0);
  for (int e = 0; e < N; ++e) y[e + 1] = y[e] + h * (*slopes)[e];
  y[N] = F;
  const BallFn f{v, rho};
  auto fs = [&](double s) { return f(Mat::scalar(s)); };

  for (int sweep = 0; sweep < iters; ++sweep) {
    double gain = 0.0;
    for (int i = 1; i < N; ++i) {
      const double yl = y[i - 1], yr = y[i + 1];
      auto local = [&](double yi) { return fs((yi - yl) / h) + fs((yr - yi) / h); };
      const double current = local(y[i]);
      double best_y = y[i], best = current;
      for (const auto& [kl0, kl1] : k_intervals(rho)) {
        for (const auto& [kr0, kr1] : k_intervals(rho)) {
          const double lo = std::max(yl + h * kl0, yr - h * kr1);
          const double hi = std::min(yl + h * kl1, yr - h * kr0);
          if (!(hi >= lo)) continue;
          constexpr int kSamples = 16;
          double sy = lo, sv = kInf;
          for (int j = 0; j <= kSamples; ++j) {
            const double t = lo + (hi - lo) * j / kSamples;
            const double val = local(t);
            if (val < sv) sv = val, sy = t;
          }
          const double w = (hi - lo) / kSamples;
          const auto [gy, gv] =
              golden(local, std::max(lo, sy - w), std::min(hi, sy + w), 80);
          if (gv < sv) sv = gv, sy = gy;
          if (sv < best) best = sv, best_y = sy;
        }
      }
      if (best < current) {
        gain += current - best;
        y[i] = best_y;
      }
    }
    if (gain < 1e-13) break;
  }
  EnvelopeEstimate est;
  est.witness_field = interpolate_p1(y);
  return est;
}

EnvelopeEstimate fe_2d(const TestFn& v, const Mat& F, int N, double rho, int iters) {
  const BallFn f{v, rho};
  if (!std::isfinite(f(F))) {
    throw NoFeasibleStart("F = " + F.to_string() + " is outside R_rho_tilde; no admissible "
                          "2D start is constructed");
  }
  const double h = 1.0 / N;
  const int M = N + 1;
  std::vector<Vec> y(static_cast<std::size_t>(M) * M);
  auto node = [&](int i, int j) -> Vec& { return y[static_cast<std::size_t>(j) * M + i]; };
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < M; ++i) node(i, j) = F * Vec{i * h, j * h};
  }
  // Lower-right triangle (p00, p10, p11) and upper-left (p00, p11, p01).
  auto grads = [&](int i, int j) {
    const Vec& p00 = node(i, j);
    const Vec& p10 = node(i + 1, j);
    const Vec& p11 = node(i + 1, j + 1);
    const Vec& p01 = node(i, j + 1);
    Mat lower(2), upper(2);
    for (int r = 0; r < 2; ++r) {
      lower(r, 0) = (p10[r] - p00[r]) / h;
      lower(r, 1) = (p11[r] - p10[r]) / h;
      upper(r, 0) = (p11[r] - p01[r]) / h;
      upper(r, 1) = (p01[r] - p00[r]) / h;
    }
    return std::array<Mat, 2>{lower, upper};
  };
  auto local = [&](int i, int j) {
    double e = 0.0;
    for (int sj = j - 1; sj <= j; ++sj) {
      for (int si = i - 1; si <= i; ++si) {
        if (si < 0 || sj < 0 || si >= N || sj >= N) continue;
        for (const Mat& g : grads(si, sj)) e += f(g);
      }
    }
    return e;
  };
  double step = 0.25 * h * std::max(1.0, frob_norm(F));
  for (int sweep = 0; sweep < iters && step > 1e-10 * h; ++sweep) {
    bool moved = false;
    for (int j = 1; j < N; ++j) {
      for (int i = 1; i < N; ++i) {
        double current = local(i, j);
        for (int comp = 0; comp < 2; ++comp) {
          for (double sign : {1.0, -1.0}) {
            Vec& p = node(i, j);
            const double old = p[comp];
            p[comp] = old + sign * step;
            const double trial = local(i, j);
            if (trial < current) {
              current = trial;
              moved = true;
            } else {
              p[comp] = old;
            }
          }
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  EnvelopeEstimate est;
  est.witness_field = interpolate_p1(N, y);
  return est;
}

}  // namespace

EnvelopeEstimate qinv_oracle_1d(const TestFn& v, double F, double rho_tilde, int grid) {
  if (grid < 100) throw InvalidArgument("oracle grid must be >= 100");
  if (!(rho_tilde >= 1.0)) throw InvalidArgument("rho_tilde must be >= 1 for a nonempty K");
  if (!std::isfinite(F) || std::abs(F) > rho_tilde) {
    throw InfeasibleBarycenter("|F| = " + std::to_string(std::abs(F)) + " exceeds rho_tilde = " +
                               std::to_string(rho_tilde));
  }
  const BallFn f{v, rho_tilde};
  std::vector<HullPoint> pts;
  pts.reserve(2 * static_cast<std::size_t>(grid) + 1);
  for (const auto& [lo, hi] : k_intervals(rho_tilde)) {
    for (int i = 0; i < grid; ++i) {
      const double s = i + 1 == grid ? hi : lo + (hi - lo) * i / (grid - 1);
      const double val = f(Mat::scalar(s));
      if (std::isfinite(val)) pts.push_back({s, val});
    }
  }
  if (in_k(F, rho_tilde)) {
    const double val = f(Mat::scalar(F));
    if (std::isfinite(val)) pts.push_back({F, val});
  }
  const auto hull = lower_hull(sorted_unique(std::move(pts)));
  const auto seg = hull_segment(hull, F);
  if (!seg) {
    throw InfeasibleBarycenter("F = " + std::to_string(F) +
                               " is not a barycenter of points where v is finite");
  }
  std::vector<Atom> atoms;
  if (seg->first == seg->second) {
    atoms.push_back({Mat::scalar(hull[seg->first].x), 1.0});
  } else {
    const double width = 2.0 * (rho_tilde - 1.0 / rho_tilde) / (grid - 1);
    auto phi = [&](double t) { return f(Mat::scalar(F + t)); };
    const HullPoint left{hull[seg->first].x - F, hull[seg->first].y};
    const HullPoint right{hull[seg->second].x - F, hull[seg->second].y};
    const auto split = polish_split(phi, left, right, -rho_tilde - F, rho_tilde - F, width);
    // An endpoint the polish left alone keeps its sampled abscissa; F + (x - F)
    // can round past the ball boundary.
    const double a = split.t1 == left.x ? hull[seg->first].x : F + split.t1;
    const double b = split.t2 == right.x ? hull[seg->second].x : F + split.t2;
    const double lambda = split.t2 / (split.t2 - split.t1);
    atoms.push_back({Mat::scalar(a), lambda});
    atoms.push_back({Mat::scalar(b), 1.0 - lambda});
  }
  EnvelopeEstimate est;
  est.method = "oracle1d";
  est.F = Mat::scalar(F);
  est.rho_tilde = rho_tilde;
  est.witness_measure = AtomicMeasure(std::move(atoms));
  est.value_upper = pair(*est.witness_measure, restrict_to_ball(v, rho_tilde)).value();
  est.value_exact = est.value_upper;
  return est;
}

EnvelopeEstimate qinv_laminate_upper(const TestFn& v, const Mat& F, double rho_tilde, int depth) {
  if (!(rho_tilde > 0.0)) throw InvalidArgument("rho_tilde must be positive");
  if (depth < 0 || depth > 6) throw InvalidArgument("lamination depth must lie in [0, 6]");
  const Laminator lam(v, rho_tilde, F.dim());
  LamNode node = lam.solve(F, depth);
  if (!std::isfinite(node.value)) {
    throw NoAdmissibleSplit("no laminate of depth " + std::to_string(depth) + " in R_" +
                            std::to_string(rho_tilde) + " has barycenter " + F.to_string());
  }
  double mass = 0.0;
  for (const Atom& a : node.atoms) mass += a.weight;
  node.atoms.back().weight += 1.0 - mass;
  EnvelopeEstimate est;
  est.method = "laminate";
  est.F = F;
  est.rho_tilde = rho_tilde;
  est.witness_measure = AtomicMeasure(std::move(node.atoms));
  est.value_upper = pair(*est.witness_measure, restrict_to_ball(v, rho_tilde)).value();
  return est;
}

EnvelopeEstimate qinv_fe_upper(const TestFn& v, const Mat& F, int mesh_cells, double rho_tilde,
                               int iters) {
  if (!(rho_tilde > 0.0)) throw InvalidArgument("rho_tilde must be positive");
  if (iters < 0) throw InvalidArgument("iters must be >= 0");
  const int n = F.dim();
  if (n == 3) throw InvalidArgument("direct minimization supports n = 1 or 2");
  const int max_cells = n == 1 ? 4096 : 64;
  if (mesh_cells < 1 || mesh_cells > max_cells) {
    throw InvalidArgument("mesh_cells must lie in [1, " + std::to_string(max_cells) + "]");
  }
  EnvelopeEstimate est = n == 1 ? fe_1d(v, F(0, 0), mesh_cells, rho_tilde, iters)
                                : fe_2d(v, F, mesh_cells, rho_tilde, iters);
  est.method = "fe";
  est.F = F;
  est.rho_tilde = rho_tilde;
  const WeightFn one{"1", [](const Point&) { return 1.0; }};
  est.value_upper = empirical_pairing(*est.witness_field, restrict_to_ball(v, rho_tilde), one);
  return est;
}

}  // namespace invym
