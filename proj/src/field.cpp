#include "invym/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "invym/error.hpp"

namespace invym {
namespace {

constexpr double kGeomTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct BBox {
  double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
  void add(const Point& p) {
    x0 = std::min(x0, p[0]);
    x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]);
    y1 = std::max(y1, p[1]);
  }
  bool overlaps(const BBox& o, double tol) const {
    return x0 <= o.x1 + tol && o.x0 <= x1 + tol && y0 <= o.y1 + tol && o.y0 <= y1 + tol;
  }
};

BBox bbox_of(const Polygon& poly) {
  BBox b;
  for (const Point& p : poly) b.add(p);
  return b;
}

double cross(const Point& o, const Point& a, const Point& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

bool contains(const Polygon& region, int dim, const Point& x, double tol) {
  if (dim == 1) return x[0] >= region[0][0] - tol && x[0] <= region[1][0] + tol;
  const std::size_t n = region.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = region[i];
    const Point& b = region[(i + 1) % n];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    if (cross(a, b, x) < -tol * std::max(1.0, len)) return false;
  }
  return true;
}

Polygon intersect(const Polygon& a, const Polygon& b, int dim) {
  if (dim == 1) {
    const double lo = std::max(a[0][0], b[0][0]);
    const double hi = std::min(a[1][0], b[1][0]);
    if (hi <= lo) return {};
    return {{lo, 0.0}, {hi, 0.0}};
  }
  Polygon out = a;
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n && !out.empty(); ++i) {
    const Point& p = b[i];
    const Point& q = b[(i + 1) % n];
    // Inside of a CCW edge p->q is to the left: normal (dy, -dx) . x <= normal . p.
    const Point normal{q[1] - p[1], p[0] - q[0]};
    out = clip_halfplane(out, normal, normal[0] * p[0] + normal[1] * p[1]);
  }
  return out;
}

double region_volume(const Polygon& region, int dim) {
  if (region.empty()) return 0.0;
  if (dim == 1) return region[1][0] - region[0][0];
  return polygon_area(region);
}

// Uniform bucket grid over piece bounding boxes.
class BucketIndex {
 public:
  BucketIndex(std::span<const Piece> pieces) {
    for (const Piece& p : pieces) {
      boxes_.push_back(bbox_of(p.region));
      extent_.add({boxes_.back().x0, boxes_.back().y0});
      extent_.add({boxes_.back().x1, boxes_.back().y1});
    }
    const auto g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(pieces.size()))));
    grid_ = std::clamp(g, 1, 256);
    buckets_.resize(static_cast<std::size_t>(grid_) * grid_);
    for (std::size_t i = 0; i < boxes_.size(); ++i) {
      const auto [ix0, iy0] = cell_of({boxes_[i].x0, boxes_[i].y0});
      const auto [ix1, iy1] = cell_of({boxes_[i].x1, boxes_[i].y1});
      for (int iy = iy0; iy <= iy1; ++iy) {
        for (int ix = ix0; ix <= ix1; ++ix) buckets_[iy * grid_ + ix].push_back(i);
      }
    }
  }

  const std::vector<std::size_t>& candidates(const Point& x) const {
    const auto [ix, iy] = cell_of(x);
    return buckets_[iy * grid_ + ix];
  }

 private:
  std::pair<int, int> cell_of(const Point& x) const {
    auto index = [&](double v, double lo, double hi) {
      if (hi <= lo) return 0;
      const int i = static_cast<int>(std::floor((v - lo) / (hi - lo) * grid_));
      return std::clamp(i, 0, grid_ - 1);
    };
    return {index(x[0], extent_.x0, extent_.x1), index(x[1], extent_.y0, extent_.y1)};
  }

  std::vector<BBox> boxes_;
  BBox extent_;
  int grid_ = 1;
  std::vector<std::vector<std::size_t>> buckets_;
};

}  // namespace

double polygon_area(const Polygon& poly) {
  if (poly.size() < 3) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % poly.size()];
    s += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * s;
}

Point polygon_centroid(const Polygon& poly) {
  if (poly.size() == 2) return {0.5 * (poly[0][0] + poly[1][0]), 0.5 * (poly[0][1] + poly[1][1])};
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % poly.size()];
    const double c = p[0] * q[1] - q[0] * p[1];
    a += c;
    cx += (p[0] + q[0]) * c;
    cy += (p[1] + q[1]) * c;
  }
  if (a == 0.0) return poly.front();
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

Polygon clip_halfplane(const Polygon& poly, const Point& normal, double offset) {
  Polygon out;
  const std::size_t n = poly.size();
  if (n == 0) return out;
  auto side = [&](const Point& p) { return normal[0] * p[0] + normal[1] * p[1] - offset; };
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % n];
    const double sp = side(p), sq = side(q);
    if (sp <= 0.0) out.push_back(p);
    if ((sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0)) {
      const double t = sp / (sp - sq);
      out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
    }
  }
  if (out.size() < 3 || polygon_area(out) <= kGeomTol * kGeomTol) return {};
  return out;
}

Polygon clip_box(const Polygon& poly, double x0, double x1, double y0, double y1) {
  Polygon out = clip_halfplane(poly, {1.0, 0.0}, x1);
  out = clip_halfplane(out, {-1.0, 0.0}, -x0);
  out = clip_halfplane(out, {0.0, 1.0}, y1);
  return clip_halfplane(out, {0.0, -1.0}, -y0);
}

Polygon box(double x0, double x1, double y0, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

GradientField::GradientField(int dim, std::vector<Piece> pieces)
    : dim_(dim), pieces_(std::move(pieces)) {
  if (dim != 1 && dim != 2) throw InvalidArgument("gradient fields live in dimension 1 or 2");
  if (pieces_.empty()) throw InvalidArgument("gradient field needs at least one piece");
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const Piece& p = pieces_[i];
    if (p.gradient.dim() != dim || p.shift.dim() != dim) {
      throw InvalidArgument("piece " + std::to_string(i) + " has the wrong dimension");
    }
    const bool ok = dim == 1 ? p.region.size() == 2 && p.region[1][0] > p.region[0][0]
                             : p.region.size() >= 3 && polygon_area(p.region) > 0.0;
    if (!ok) throw InvalidArgument("piece " + std::to_string(i) + " has a degenerate region");
  }
}

GradientField GradientField::affine(const Mat& f) {
  const int n = f.dim();
  if (n == 1) return GradientField(1, {interval_piece(0.0, 1.0, f, Vec(1))});
  return GradientField(n, {Piece{box(0.0, 1.0, 0.0, 1.0), f, Vec(n)}});
}

Piece GradientField::interval_piece(double x0, double x1, const Mat& gradient, const Vec& shift) {
  return Piece{{{x0, 0.0}, {x1, 0.0}}, gradient, shift};
}

double GradientField::volume(std::size_t i) const { return region_volume(pieces_[i].region, dim_); }

Point GradientField::centroid(std::size_t i) const { return polygon_centroid(pieces_[i].region); }

Vec GradientField::evaluate(std::size_t i, const Point& x) const {
  const Piece& p = pieces_[i];
  Vec xv(dim_);
  for (int d = 0; d < dim_; ++d) xv[d] = x[d];
  return p.gradient * xv + p.shift;
}

std::optional<std::size_t> GradientField::locate(const Point& x) const {
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (contains(pieces_[i].region, dim_, x, kGeomTol)) return i;
  }
  return std::nullopt;
}

double GradientField::total_volume() const {
  double v = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) v += volume(i);
  return v;
}

Mat GradientField::average_gradient() const {
  Mat sum = Mat::zero(dim_);
  double vol = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    sum += pieces_[i].gradient * volume(i);
    vol += volume(i);
  }
  return sum * (1.0 / vol);
}

Polygon GradientField::clipped_region(std::size_t i, double x0, double x1, double y0,
                                      double y1) const {
  if (dim_ == 1) return intersect(pieces_[i].region, {{x0, 0.0}, {x1, 0.0}}, 1);
  return clip_box(pieces_[i].region, x0, x1, y0, y1);
}

std::vector<Mat> GradientField::cell_average_gradients(const Mesh& mesh) const {
  if (mesh.dim() != dim_) throw InvalidArgument("mesh and field dimensions differ");
  std::vector<BBox> boxes;
  boxes.reserve(pieces_.size());
  for (const Piece& p : pieces_) boxes.push_back(bbox_of(p.region));
  const double h = mesh.cell_size();
  std::vector<Mat> out;
  out.reserve(mesh.cell_count());
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto [ox, oy] = mesh.cell_origin(c);
    const double y1 = dim_ == 1 ? 0.0 : oy + h;
    BBox cell;
    cell.add({ox, oy});
    cell.add({ox + h, y1});
    Mat sum = Mat::zero(dim_);
    double vol = 0.0;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (!boxes[i].overlaps(cell, 0.0)) continue;
      const double v = region_volume(clipped_region(i, ox, ox + h, oy, y1), dim_);
      if (v <= 0.0) continue;
      sum += pieces_[i].gradient * v;
      vol += v;
    }
    if (vol <= 0.0) throw InvalidArgument("mesh cell " + std::to_string(c) + " not covered");
    out.push_back(sum * (1.0 / vol));
  }
  return out;
}

double GradientField::continuity_defect() const {
  const BucketIndex index(pieces_);
  double worst = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    for (const Point& v : pieces_[i].region) {
      const Vec yi = evaluate(i, v);
      for (std::size_t j : index.candidates(v)) {
        if (j == i || !contains(pieces_[j].region, dim_, v, 1e-11)) continue;
        worst = std::max(worst, (evaluate(j, v) - yi).norm());
      }
    }
  }
  return worst;
}

double GradientField::sup_gradient_norm() const {
  double s = 0.0;
  for (const Piece& p : pieces_) s = std::max(s, frob_norm(p.gradient));
  return s;
}

double GradientField::sup_inverse_norm() const {
  double s = 0.0;
  for (const Piece& p : pieces_) {
    const auto inv = try_invert(p.gradient);
    if (!inv) return kInf;
    s = std::max(s, frob_norm(*inv));
  }
  return s;
}

double GradientField::min_det() const {
  double m = kInf;
  for (const Piece& p : pieces_) m = std::min(m, p.gradient.det());
  return m;
}

std::optional<Mat> GradientField::affine_boundary_datum(double tol) const {
  const Mat a = average_gradient();
  auto on_boundary = [&](const Point& x) {
    for (int d = 0; d < dim_; ++d) {
      if (std::abs(x[d]) <= kGeomTol || std::abs(x[d] - 1.0) <= kGeomTol) return true;
    }
    return false;
  };
  const double scale = std::max(1.0, frob_norm(a));
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    for (const Point& v : pieces_[i].region) {
      if (!on_boundary(v)) continue;
      Vec xv(dim_);
      for (int d = 0; d < dim_; ++d) xv[d] = v[d];
      if ((evaluate(i, v) - a * xv).norm() > tol * scale) return std::nullopt;
    }
  }
  return a;
}

double modified_volume(const GradientField& before, const GradientField& after,
                       double gradient_tol) {
  if (before.dim() != after.dim()) throw InvalidArgument("fields of different dimension");
  const int dim = before.dim();
  std::vector<BBox> boxes;
  for (const Piece& p : before.pieces()) boxes.push_back(bbox_of(p.region));
  double total = 0.0;
  for (const Piece& q : after.pieces()) {
    const BBox qb = bbox_of(q.region);
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (!boxes[i].overlaps(qb, 0.0)) continue;
      const Piece& p = before.pieces()[i];
      if (frob_norm(p.gradient - q.gradient) <= gradient_tol) continue;
      total += region_volume(intersect(q.region, p.region, dim), dim);
    }
  }
  return total;
}

YoungMeasureField young_measure_of(const GradientField& field, const Mesh& mesh) {
  if (mesh.dim() != field.dim()) throw InvalidArgument("mesh and field dimensions differ");
  const int dim = field.dim();
  const double h = mesh.cell_size();
  std::vector<AtomicMeasure> cells;
  cells.reserve(mesh.cell_count());
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto [ox, oy] = mesh.cell_origin(c);
    const double y1 = dim == 1 ? 0.0 : oy + h;
    std::vector<Atom> atoms;
    double vol = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
      const double v = region_volume(field.clipped_region(i, ox, ox + h, oy, y1), dim);
      if (v <= 0.0) continue;
      atoms.push_back({field.pieces()[i].gradient, v});
      vol += v;
    }
    if (vol <= 0.0) throw InvalidArgument("mesh cell " + std::to_string(c) + " not covered");
    for (Atom& a : atoms) a.weight /= vol;
    double mass = 0.0;
    for (const Atom& a : atoms) mass += a.weight;
    atoms.back().weight += 1.0 - mass;
    cells.emplace_back(std::move(atoms));
  }
  return YoungMeasureField(mesh, std::move(cells));
}

GradientField interpolate_p1(std::span<const double> y) {
  if (y.size() < 2) throw InvalidArgument("interpolation needs at least two nodes");
  const int n = static_cast<int>(y.size()) - 1;
  const double h = 1.0 / n;
  std::vector<Piece> pieces;
  pieces.reserve(n);
  for (int e = 0; e < n; ++e) {
    const double x0 = e * h, x1 = (e + 1) * h;
    const double s = (y[e + 1] - y[e]) / h;
    pieces.push_back(GradientField::interval_piece(x0, x1, Mat::scalar(s), Vec{y[e] - s * x0}));
  }
  return GradientField(1, std::move(pieces));
}

GradientField interpolate_p1(int cells, std::span<const Vec> y) {
  const auto m = static_cast<std::size_t>(cells + 1);
  if (cells < 1 || y.size() != m * m) throw InvalidArgument("expected (cells + 1)^2 nodes");
  const double h = 1.0 / cells;
  auto node = [&](int i, int j) -> const Vec& { return y[static_cast<std::size_t>(j) * m + i]; };
  std::vector<Piece> pieces;
  pieces.reserve(2 * m * m);
  for (int j = 0; j < cells; ++j) {
    for (int i = 0; i < cells; ++i) {
      const Vec &y00 = node(i, j), &y10 = node(i + 1, j), &y11 = node(i + 1, j + 1),
                &y01 = node(i, j + 1);
      Mat lower(2), upper(2);
      for (int r = 0; r < 2; ++r) {
        lower(r, 0) = (y10[r] - y00[r]) / h;
        lower(r, 1) = (y11[r] - y10[r]) / h;
        upper(r, 0) = (y11[r] - y01[r]) / h;
        upper(r, 1) = (y01[r] - y00[r]) / h;
      }
      const Point p00{i * h, j * h}, p10{(i + 1) * h, j * h}, p11{(i + 1) * h, (j + 1) * h},
          p01{i * h, (j + 1) * h};
      const Vec x00{p00[0], p00[1]};
      pieces.push_back(Piece{{p00, p10, p11}, lower, y00 - lower * x00});
      pieces.push_back(Piece{{p00, p11, p01}, upper, y00 - upper * x00});
    }
  }
  return GradientField(2, std::move(pieces));
}

}  // namespace invym
