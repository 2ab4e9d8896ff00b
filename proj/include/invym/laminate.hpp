#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "invym/field.hpp"
#include "invym/matcore.hpp"
#include "invym/testfn.hpp"

namespace invym {

// Affine boundary datum F imposed in a layer of width 1/ell.
struct LaminateBoundary {
  Mat F;
  int ell = 8;
  double epsilon = 0.5;
};

// First-order laminate: atoms A_0..A_m with A_i - A_0 = a_i (x) m for one
// common unit normal m, laid out in this order within each of k periods.
struct SequenceSpec {
  std::vector<Mat> atoms;
  std::vector<double> weights;
  int k = 1;
  std::optional<LaminateBoundary> boundary;
};

// Upper bound on pieces of a built field.
inline constexpr long kMaxLaminatePieces = 1L << 22;

// Throws NotRankOne when the atoms do not share a lamination normal,
// BudgetExceeded when k * atoms exceeds kMaxLaminatePieces, InvalidArgument
// for bad weights or k < 1. With a boundary, the result is boundary_glue'd.
GradientField build_laminate_sequence(const SequenceSpec& spec);

struct WeightFn {
  std::string name;
  std::function<double(const Point&)> g;
};

// sum over pieces of vol * v(gradient) * g(centroid). Infinite values of v
// propagate as +-infinity according to the sign of g.
double empirical_pairing(const GradientField& field, const TestFn& v, const WeightFn& g);

// Integral of g over the unit interval or square by composite Gauss-Legendre.
double integrate_weight(const WeightFn& g, int dim);

struct GenerationSeries {
  std::string v_name;
  std::string g_name;
  std::vector<int> k;
  std::vector<double> errors;
  double limit = 0.0;
  // Least-squares slope of log error against log k over errors above
  // kErrorFloor; -infinity when fewer than two such errors remain.
  double slope = 0.0;
  bool decays = false;
};

struct GenerationReport {
  static constexpr double kErrorFloor = 1e-13;
  std::vector<GenerationSeries> series;
  bool det_positive = true;
  double sup_gradient = 0.0;
  double sup_inverse = 0.0;
};

GenerationReport verify_generation(const SequenceSpec& spec, const std::vector<TestFn>& v_battery,
                                   const std::vector<WeightFn>& g_battery,
                                   const std::vector<int>& k_ladder);

double loglog_slope(const std::vector<int>& k, const std::vector<double>& errors, double floor);

struct GlueResult {
  GradientField field;
  double modified_volume = 0.0;
  double alpha = 0.0;  // ball radius of the input gradients
  double sup_gradient = 0.0;
  double sup_inverse = 0.0;
  double min_det = 0.0;
  bool within_ball = false;  // every output gradient in R_{alpha+epsilon}
  bool exact = false;        // 1D two-slope solve; 2D is an interpolation band
};

// Replaces the field in a boundary layer of width `layer` so that y = Fx on
// the boundary. Throws InfeasibleLayer when |F| exceeds alpha or, in 1D, when
// a layer would need an average slope beyond alpha + epsilon.
GlueResult boundary_glue(const GradientField& field, const Mat& F, double layer, double epsilon);

struct MixResult {
  GradientField field;
  double residual_fraction = 0.0;
};

// Packs scaled copies of y1 into [0, lambda] x [0, 1] (resp. [0, lambda]) and
// of y2 into the complement, level by level down to `depth`; the unpacked
// residual takes the shared affine datum. Throws InvalidArgument when the two
// fields do not share an affine boundary datum.
MixResult mix_deformations(const GradientField& y1, const GradientField& y2, double lambda,
                           int depth = 6);

}  // namespace invym
