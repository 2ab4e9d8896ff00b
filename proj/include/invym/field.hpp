#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "invym/matcore.hpp"
#include "invym/measure.hpp"

namespace invym {

// Point of the reference domain; the second coordinate is 0 in 1D.
using Point = std::array<double, 2>;
using Polygon = std::vector<Point>;

double polygon_area(const Polygon& poly);
Point polygon_centroid(const Polygon& poly);
// Keeps the part of a convex polygon with normal . x <= offset.
Polygon clip_halfplane(const Polygon& poly, const Point& normal, double offset);
Polygon clip_box(const Polygon& poly, double x0, double x1, double y0, double y1);
Polygon box(double x0, double x1, double y0, double y1);

// One affine piece y(x) = gradient x + shift. In 1D the region is the
// interval {region[0][0], region[1][0]}; in 2D a convex counter-clockwise polygon.
struct Piece {
  Polygon region;
  Mat gradient;
  Vec shift;
};

// Piecewise-affine deformation y of the unit interval or unit square.
class GradientField {
 public:
  static constexpr double kContinuityTolerance = 1e-10;

  // Throws InvalidArgument for an empty piece list, pieces whose gradient
  // dimension differs from `dim`, or degenerate regions.
  GradientField(int dim, std::vector<Piece> pieces);

  static GradientField affine(const Mat& f);
  static Piece interval_piece(double x0, double x1, const Mat& gradient, const Vec& shift);

  int dim() const { return dim_; }
  std::span<const Piece> pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }

  double volume(std::size_t i) const;
  Point centroid(std::size_t i) const;
  Vec evaluate(std::size_t i, const Point& x) const;
  // Index of a piece containing x, preferring the first match.
  std::optional<std::size_t> locate(const Point& x) const;

  double total_volume() const;
  Mat average_gradient() const;
  // Volume-averaged gradient over each cell of the mesh.
  std::vector<Mat> cell_average_gradients(const Mesh& mesh) const;

  // Largest jump of y between pieces at shared vertices.
  double continuity_defect() const;
  double sup_gradient_norm() const;
  // sup |(grad y)^{-1}|, +infinity if a piece gradient is singular.
  double sup_inverse_norm() const;
  double min_det() const;

  // A with y(x) = A x at every boundary vertex (within tolerance), where A is
  // the average gradient; empty if y is not affine on the boundary.
  std::optional<Mat> affine_boundary_datum(double tol = 1e-9) const;

  // Part of piece i inside the box (full interval range in 1D uses y0=y1=0).
  Polygon clipped_region(std::size_t i, double x0, double x1, double y0, double y1) const;

 private:
  int dim_;
  std::vector<Piece> pieces_;
};

// Measure of the set where the two fields have different gradients.
double modified_volume(const GradientField& before, const GradientField& after,
                       double gradient_tol = 1e-12);

// Young-measure field recorded by the gradients on each mesh cell.
YoungMeasureField young_measure_of(const GradientField& field, const Mesh& mesh);

// Continuous piecewise-affine interpolants on the unit interval / square.
// 1D: y holds cells + 1 nodal values. 2D: y holds (cells + 1)^2 nodal values,
// row-major in the second coordinate, and each square is split along its
// diagonal into (p00, p10, p11) and (p00, p11, p01).
GradientField interpolate_p1(std::span<const double> y);
GradientField interpolate_p1(int cells, std::span<const Vec> y);

}  // namespace invym
