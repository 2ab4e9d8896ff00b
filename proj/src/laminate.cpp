#include "invym/laminate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "invym/error.hpp"

namespace invym {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_spec(const SequenceSpec& spec) {
  if (spec.atoms.empty()) throw InvalidArgument("laminate needs at least one atom");
  if (spec.weights.size() != spec.atoms.size()) {
    throw InvalidArgument("laminate weights and atoms differ in length");
  }
  if (spec.k < 1) throw InvalidArgument("oscillation count k must be >= 1");
  const int n = spec.atoms.front().dim();
  if (n != 1 && n != 2) throw InvalidArgument("laminate sequences are built for n = 1 or 2");
  double mass = 0.0;
  for (std::size_t i = 0; i < spec.atoms.size(); ++i) {
    if (spec.atoms[i].dim() != n) throw InvalidArgument("laminate atoms of different size");
    if (!(spec.weights[i] > 0.0) || !std::isfinite(spec.weights[i])) {
      throw InvalidArgument("laminate weights must be positive");
    }
    mass += spec.weights[i];
  }
  if (std::abs(mass - 1.0) > AtomicMeasure::kMassTolerance) {
    throw InvalidArgument("laminate weights must sum to 1");
  }
  const long pieces = static_cast<long>(spec.k) * static_cast<long>(spec.atoms.size());
  if (spec.k > kMaxLaminatePieces || pieces > kMaxLaminatePieces) {
    throw BudgetExceeded("k = " + std::to_string(spec.k) + " needs " + std::to_string(pieces) +
                         " pieces, above the limit " + std::to_string(kMaxLaminatePieces));
  }
}

// Cumulative weights W_0 = 0 < ... < W_m = 1.
std::vector<double> cumulative(const std::vector<double>& weights) {
  std::vector<double> c(weights.size() + 1, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) c[i + 1] = c[i] + weights[i];
  c.back() = 1.0;
  return c;
}

GradientField build_1d(const SequenceSpec& spec) {
  const std::vector<double> cum = cumulative(spec.weights);
  const double k = spec.k;
  std::vector<Piece> pieces;
  pieces.reserve(static_cast<std::size_t>(spec.k) * spec.atoms.size());
  double y = 0.0;
  for (int j = 0; j < spec.k; ++j) {
    for (std::size_t i = 0; i < spec.atoms.size(); ++i) {
      const double x0 = (j + cum[i]) / k;
      const double x1 = (j + cum[i + 1]) / k;
      const double a = spec.atoms[i](0, 0);
      pieces.push_back(GradientField::interval_piece(x0, x1, spec.atoms[i], Vec{y - a * x0}));
      y += a * (x1 - x0);
    }
  }
  return GradientField(1, std::move(pieces));
}

// Common lamination normal m and amplitudes a_i with A_i - A_0 = a_i (x) m.
std::pair<Vec, std::vector<Vec>> lamination_data(const std::vector<Mat>& atoms) {
  std::optional<Vec> normal;
  for (std::size_t i = 1; i < atoms.size(); ++i) {
    if (frob_norm(atoms[i] - atoms[0]) == 0.0) continue;
    const auto r1 = rank_one_difference(atoms[0], atoms[i]);
    if (!r1) {
      throw NotRankOne("atoms 0 and " + std::to_string(i) + " are not rank-one connected");
    }
    Vec m = r1->m;
    if (!normal) {
      normal = m;
      continue;
    }
    if (m.dot(*normal) < 0.0) m = m * -1.0;
    if ((m - *normal).norm() > 1e-9) {
      throw NotRankOne("atom " + std::to_string(i) + " laminates along a different normal");
    }
  }
  const Vec m = normal.value_or(Vec{1.0, 0.0});
  std::vector<Vec> amps;
  for (const Mat& a : atoms) amps.push_back((a - atoms[0]) * m);
  return {m, amps};
}

GradientField build_2d(const SequenceSpec& spec) {
  const auto [m, amps] = lamination_data(spec.atoms);
  const Polygon square = box(0.0, 1.0, 0.0, 1.0);
  const Point normal{m[0], m[1]};
  double tmin = kInf, tmax = -kInf;
  for (const Point& c : square) {
    const double t = normal[0] * c[0] + normal[1] * c[1];
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  const bool axis_aligned = normal[0] == 0.0 || normal[1] == 0.0;
  // Level t with area{m.x <= t} = target.
  auto level = [&](double target) {
    if (target <= 0.0) return tmin;
    if (target >= 1.0) return tmax;
    if (axis_aligned) return tmin + target;
    double lo = tmin, hi = tmax;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      (polygon_area(clip_halfplane(square, normal, mid)) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  const std::vector<double> cum = cumulative(spec.weights);
  const double k = spec.k;
  std::vector<Piece> pieces;
  Vec c(2);
  double t_lo = tmin;
  for (int j = 0; j < spec.k; ++j) {
    for (std::size_t i = 0; i < spec.atoms.size(); ++i) {
      const double t_hi = level((j + cum[i + 1]) / k);
      Polygon strip = clip_halfplane(square, normal, t_hi);
      strip = clip_halfplane(strip, {-normal[0], -normal[1]}, -t_lo);
      if (!strip.empty()) {
        pieces.push_back(Piece{std::move(strip), spec.atoms[i], c - amps[i] * t_lo});
      }
      c = c + amps[i] * (t_hi - t_lo);
      t_lo = t_hi;
    }
  }
  return GradientField(2, std::move(pieces));
}

Vec affine_value(const Mat& f, const Point& x) {
  Vec v(f.dim());
  for (int d = 0; d < f.dim(); ++d) v[d] = x[d];
  return f * v;
}

Vec value_at(const GradientField& field, const Point& x) {
  const auto i = field.locate(x);
  if (!i) throw InvalidArgument("field does not cover the point needed for gluing");
  return field.evaluate(*i, x);
}

double input_alpha(const GradientField& field) {
  double alpha = 0.0;
  for (const Piece& p : field.pieces()) alpha = std::max(alpha, ball_radius(p.gradient));
  return alpha;
}

void fill_report(GlueResult& r, const GradientField& input, double beta) {
  r.modified_volume = modified_volume(input, r.field);
  r.sup_gradient = r.field.sup_gradient_norm();
  r.sup_inverse = r.field.sup_inverse_norm();
  r.min_det = r.field.min_det();
  r.within_ball = true;
  for (const Piece& p : r.field.pieces()) {
    if (!in_rho_ball(p.gradient, RhoBall{beta, false})) r.within_ball = false;
  }
}

// Two-slope profile on [x0, x0 + L] from height y0 with average slope d.
void two_slope_layer(double x0, double y0, double L, double d, double beta,
                     std::vector<Piece>& out) {
  const double theta = 0.5 * (1.0 + d / beta);
  const double xm = x0 + theta * L;
  const double x1 = x0 + L;
  if (xm > x0) out.push_back(GradientField::interval_piece(x0, xm, Mat::scalar(beta),
                                                           Vec{y0 - beta * x0}));
  const double ym = y0 + beta * (xm - x0);
  if (x1 > xm) out.push_back(GradientField::interval_piece(xm, x1, Mat::scalar(-beta),
                                                           Vec{ym + beta * xm}));
}

bool layer_is_affine(const GradientField& field, double x0, double x1, double f) {
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field.clipped_region(i, x0, x1, 0.0, 0.0).empty()) continue;
    const Piece& p = field.pieces()[i];
    if (std::abs(p.gradient(0, 0) - f) > 1e-14 || std::abs(p.shift[0]) > 1e-12) return false;
  }
  return true;
}

GlueResult glue_1d(const GradientField& field, double f, double L, double beta) {
  std::vector<Piece> out;
  auto keep_input = [&](double x0, double x1) {
    for (std::size_t i = 0; i < field.size(); ++i) {
      Polygon r = field.clipped_region(i, x0, x1, 0.0, 0.0);
      if (r.empty()) continue;
      out.push_back(Piece{std::move(r), field.pieces()[i].gradient, field.pieces()[i].shift});
    }
  };
  auto layer = [&](double x0, double y0, double y1, const char* side) {
    const double d = (y1 - y0) / L;
    if (std::abs(d) > beta) {
      throw InfeasibleLayer(std::string(side) + " layer needs average slope " +
                            std::to_string(d) + " beyond alpha + epsilon = " +
                            std::to_string(beta));
    }
    two_slope_layer(x0, y0, L, d, beta, out);
  };

  if (layer_is_affine(field, 0.0, L, f)) {
    keep_input(0.0, L);
  } else {
    layer(0.0, 0.0, value_at(field, {L, 0.0})[0], "left");
  }
  keep_input(L, 1.0 - L);
  if (layer_is_affine(field, 1.0 - L, 1.0, f)) {
    keep_input(1.0 - L, 1.0);
  } else {
    layer(1.0 - L, value_at(field, {1.0 - L, 0.0})[0], f, "right");
  }
  GlueResult r{GradientField(1, std::move(out))};
  r.exact = true;
  return r;
}

// Affine interpolant of values at the triangle vertices, oriented CCW.
Piece triangle_piece(Point p0, Point p1, Point p2, Vec y0, Vec y1, Vec y2) {
  if (polygon_area({p0, p1, p2}) < 0.0) {
    std::swap(p1, p2);
    std::swap(y1, y2);
  }
  const Mat dp{{p1[0] - p0[0], p2[0] - p0[0]}, {p1[1] - p0[1], p2[1] - p0[1]}};
  const Mat dy{{y1[0] - y0[0], y2[0] - y0[0]}, {y1[1] - y0[1], y2[1] - y0[1]}};
  const Mat g = dy * invert(dp);
  return Piece{{p0, p1, p2}, g, y0 - affine_value(g, p0)};
}

GlueResult glue_2d(const GradientField& field, const Mat& F, double L) {
  const double lo = L, hi = 1.0 - L;
  std::vector<Piece> out;
  std::vector<double> bottom{lo, hi}, top{lo, hi}, left{lo, hi}, right{lo, hi};
  for (std::size_t i = 0; i < field.size(); ++i) {
    Polygon r = field.clipped_region(i, lo, hi, lo, hi);
    if (r.empty()) continue;
    for (const Point& v : r) {
      if (std::abs(v[1] - lo) <= 1e-12) bottom.push_back(v[0]);
      if (std::abs(v[1] - hi) <= 1e-12) top.push_back(v[0]);
      if (std::abs(v[0] - lo) <= 1e-12) left.push_back(v[1]);
      if (std::abs(v[0] - hi) <= 1e-12) right.push_back(v[1]);
    }
    out.push_back(Piece{std::move(r), field.pieces()[i].gradient, field.pieces()[i].shift});
  }
  auto breakpoints = [&](std::vector<double>& s) {
    std::sort(s.begin(), s.end());
    std::vector<double> u;
    for (double v : s) {
      if (v < lo - 1e-12 || v > hi + 1e-12) continue;
      if (u.empty() || v - u.back() > 1e-12) u.push_back(std::clamp(v, lo, hi));
    }
    u.front() = lo;
    u.back() = hi;
    return u;
  };
  auto inner = [&](const Point& p) { return value_at(field, p); };
  auto outer = [&](const Point& p) { return affine_value(F, p); };

  auto side = [&](std::vector<double>& raw, auto inner_pt, auto outer_pt) {
    const std::vector<double> s = breakpoints(raw);
    for (std::size_t j = 0; j + 1 < s.size(); ++j) {
      const Point a = inner_pt(s[j]), b = inner_pt(s[j + 1]);
      const Point oa = outer_pt(s[j]), ob = outer_pt(s[j + 1]);
      out.push_back(triangle_piece(oa, ob, b, outer(oa), outer(ob), inner(b)));
      out.push_back(triangle_piece(oa, b, a, outer(oa), inner(b), inner(a)));
    }
  };
  side(bottom, [&](double s) { return Point{s, lo}; }, [](double s) { return Point{s, 0.0}; });
  side(top, [&](double s) { return Point{s, hi}; }, [](double s) { return Point{s, 1.0}; });
  side(left, [&](double s) { return Point{lo, s}; }, [](double s) { return Point{0.0, s}; });
  side(right, [&](double s) { return Point{hi, s}; }, [](double s) { return Point{1.0, s}; });

  for (double cx : {0.0, 1.0}) {
    for (double cy : {0.0, 1.0}) {
      const Point o{cx, cy};
      const Point in{cx == 0.0 ? lo : hi, cy == 0.0 ? lo : hi};
      const Point a{in[0], cy};
      const Point b{cx, in[1]};
      out.push_back(triangle_piece(in, a, o, inner(in), outer(a), outer(o)));
      out.push_back(triangle_piece(in, o, b, inner(in), outer(o), outer(b)));
    }
  }
  GlueResult r{GradientField(2, std::move(out))};
  r.exact = false;
  return r;
}

}  // namespace

GradientField build_laminate_sequence(const SequenceSpec& spec) {
  validate_spec(spec);
  GradientField field = spec.atoms.front().dim() == 1 ? build_1d(spec) : build_2d(spec);
  if (!spec.boundary) return field;
  const LaminateBoundary& b = *spec.boundary;
  if (b.ell < 3) throw InvalidArgument("boundary layer needs ell >= 3");
  return boundary_glue(field, b.F, 1.0 / b.ell, b.epsilon).field;
}

double empirical_pairing(const GradientField& field, const TestFn& v, const WeightFn& g) {
  double total = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double w = field.volume(i) * g.g(field.centroid(i));
    if (w == 0.0) continue;
    const ExtReal val = v(field.pieces()[i].gradient);
    total += val.is_infinite() ? (w > 0.0 ? kInf : -kInf) : w * val.value();
  }
  return total;
}

double integrate_weight(const WeightFn& g, int dim) {
  static const double r = std::sqrt(70.0);
  static const std::array<double, 5> kNodes{
      -std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0,
      -std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0, 0.0,
      std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0,
      std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0};
  static const std::array<double, 5> kWeights{(322.0 - 13.0 * r) / 900.0,
                                              (322.0 + 13.0 * r) / 900.0, 128.0 / 225.0,
                                              (322.0 + 13.0 * r) / 900.0,
                                              (322.0 - 13.0 * r) / 900.0};
  constexpr int kPanels = 32;
  const double h = 1.0 / kPanels;
  std::vector<std::pair<double, double>> rule;
  for (int p = 0; p < kPanels; ++p) {
    for (std::size_t q = 0; q < kNodes.size(); ++q) {
      rule.emplace_back(h * (p + 0.5 * (1.0 + kNodes[q])), 0.5 * h * kWeights[q]);
    }
  }
  double s = 0.0;
  if (dim == 1) {
    for (const auto& [x, w] : rule) s += w * g.g({x, 0.0});
    return s;
  }
  for (const auto& [y, wy] : rule) {
    double row = 0.0;
    for (const auto& [x, wx] : rule) row += wx * g.g({x, y});
    s += wy * row;
  }
  return s;
}

double loglog_slope(const std::vector<int>& k, const std::vector<double>& errors, double floor) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (errors[i] > floor && std::isfinite(errors[i])) {
      xs.push_back(std::log(static_cast<double>(k[i])));
      ys.push_back(std::log(errors[i]));
    }
  }
  if (xs.size() < 2) return -kInf;
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : -kInf;
}

GenerationReport verify_generation(const SequenceSpec& spec, const std::vector<TestFn>& v_battery,
                                   const std::vector<WeightFn>& g_battery,
                                   const std::vector<int>& k_ladder) {
  if (v_battery.empty() || g_battery.empty() || k_ladder.empty()) {
    throw InvalidArgument("verify_generation needs nonempty batteries and ladder");
  }
  validate_spec(spec);
  const int n = spec.atoms.front().dim();
  GenerationReport report;
  for (const TestFn& v : v_battery) {
    double atom_average = 0.0;
    for (std::size_t i = 0; i < spec.atoms.size(); ++i) {
      atom_average += v(spec.atoms[i]).scaled(spec.weights[i]).value();
    }
    for (const WeightFn& g : g_battery) {
      GenerationSeries s;
      s.v_name = v.description();
      s.g_name = g.name;
      s.limit = atom_average * integrate_weight(g, n);
      report.series.push_back(std::move(s));
    }
  }
  for (int k : k_ladder) {
    SequenceSpec at_k = spec;
    at_k.k = k;
    const GradientField field = build_laminate_sequence(at_k);
    if (field.min_det() <= 0.0) report.det_positive = false;
    report.sup_gradient = std::max(report.sup_gradient, field.sup_gradient_norm());
    report.sup_inverse = std::max(report.sup_inverse, field.sup_inverse_norm());
    std::size_t idx = 0;
    for (const TestFn& v : v_battery) {
      for (const WeightFn& g : g_battery) {
        GenerationSeries& s = report.series[idx++];
        s.k.push_back(k);
        s.errors.push_back(std::abs(empirical_pairing(field, v, g) - s.limit));
      }
    }
  }
  for (GenerationSeries& s : report.series) {
    s.slope = loglog_slope(s.k, s.errors, GenerationReport::kErrorFloor);
    const bool vanished = std::all_of(s.errors.begin(), s.errors.end(), [](double e) {
      return e <= GenerationReport::kErrorFloor;
    });
    s.decays = vanished || (s.slope < 0.0 && s.errors.back() < s.errors.front());
  }
  return report;
}

GlueResult boundary_glue(const GradientField& field, const Mat& F, double layer, double epsilon) {
  if (F.dim() != field.dim()) throw InvalidArgument("boundary datum has the wrong dimension");
  if (!(layer > 0.0 && layer < 0.5)) throw InvalidArgument("layer width must lie in (0, 1/2)");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  const double alpha = input_alpha(field);
  if (!std::isfinite(alpha)) throw InfeasibleLayer("input field has a singular gradient");
  if (frob_norm(F) > alpha) {
    throw InfeasibleLayer("|F| = " + std::to_string(frob_norm(F)) + " exceeds alpha = " +
                          std::to_string(alpha));
  }
  const double beta = alpha + epsilon;
  GlueResult r = field.dim() == 1 ? glue_1d(field, F(0, 0), layer, beta)
                                  : glue_2d(field, F, layer);
  r.alpha = alpha;
  fill_report(r, field, beta);
  return r;
}

MixResult mix_deformations(const GradientField& y1, const GradientField& y2, double lambda,
                           int depth) {
  if (y1.dim() != y2.dim()) throw InvalidArgument("cannot mix fields of different dimension");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (depth < 1 || depth > 20) throw InvalidArgument("depth must lie in [1, 20]");
  const auto a1 = y1.affine_boundary_datum();
  const auto a2 = y2.affine_boundary_datum();
  if (!a1 || !a2 || frob_norm(*a1 - *a2) > 1e-9 * std::max(1.0, frob_norm(*a1))) {
    throw InvalidArgument("mixed fields must share one affine boundary datum");
  }
  const Mat A = *a1;
  const int dim = y1.dim();
  std::vector<Piece> out;

  auto copy_into = [&](const GradientField& src, double ax, double ay, double s) {
    Vec a(dim);
    a[0] = ax;
    if (dim == 2) a[1] = ay;
    for (const Piece& p : src.pieces()) {
      Polygon region;
      for (const Point& z : p.region) {
        region.push_back({ax + s * z[0], dim == 2 ? ay + s * z[1] : 0.0});
      }
      out.push_back(Piece{std::move(region), p.gradient, p.shift * s + (A - p.gradient) * a});
    }
  };
  // Packs columns of side 2^-l left to right (or right to left) until the
  // remaining width drops below 2^-depth; returns the packed width.
  auto pack = [&](const GradientField& src, double width, bool from_left) {
    double used = 0.0;
    for (int l = 0; l <= depth; ++l) {
      const double s = std::ldexp(1.0, -l);
      if (width - used < s) continue;
      const double x = from_left ? used : 1.0 - used - s;
      const int rows = dim == 2 ? (1 << l) : 1;
      for (int iy = 0; iy < rows; ++iy) copy_into(src, x, iy * s, s);
      used += s;
    }
    return used;
  };
  const double left = pack(y1, lambda, true);
  const double right = pack(y2, 1.0 - lambda, false);
  const double x0 = left, x1 = 1.0 - right;
  if (x1 > x0) {
    if (dim == 1) {
      out.push_back(GradientField::interval_piece(x0, x1, A, Vec(1)));
    } else {
      out.push_back(Piece{box(x0, x1, 0.0, 1.0), A, Vec(2)});
    }
  }
  MixResult r{GradientField(dim, std::move(out))};
  r.residual_fraction = std::max(0.0, x1 - x0);
  return r;
}

}  // namespace invym
