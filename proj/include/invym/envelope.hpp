#pragma once

#include <optional>
#include <string>

#include "invym/field.hpp"
#include "invym/matcore.hpp"
#include "invym/measure.hpp"
#include "invym/testfn.hpp"

namespace invym {

// Estimate of the invertibility-constrained quasiconvex envelope at F. The
// witness reproduces value_upper: pairing for measures, mean energy for fields.
struct EnvelopeEstimate {
  std::string method;
  Mat F;
  double rho_tilde = 0.0;
  double value_upper = 0.0;
  std::optional<double> value_exact;  // 1D oracle only
  std::optional<AtomicMeasure> witness_measure;
  std::optional<GradientField> witness_field;
};

// Constrained convexification of v over the grid on
// K = [-rho, -1/rho] u [1/rho, rho] (plus F itself when F is in K), by a lower
// convex hull sweep. Returns a one- or two-atom witness. Throws
// InfeasibleBarycenter when |F| > rho_tilde; InvalidArgument when grid < 100
// or rho_tilde < 1.
EnvelopeEstimate qinv_oracle_1d(const TestFn& v, double F, double rho_tilde, int grid = 10000);

// Recursive rank-one splitting with children in R_rho_tilde, minimized over a
// fixed direction set; min(v(F) when F is in R_rho_tilde, best laminate).
// Throws NoAdmissibleSplit when the estimate stays infinite.
EnvelopeEstimate qinv_laminate_upper(const TestFn& v, const Mat& F, double rho_tilde,
                                     int depth = 2);

// Direct minimization of the mean of v(grad y) over continuous piecewise-affine
// y with y = Fx on the boundary: 1D intervals or 2D right triangles on a
// cells x cells grid, every element gradient kept in R_rho_tilde. Throws
// NoFeasibleStart when no admissible starting deformation is found.
EnvelopeEstimate qinv_fe_upper(const TestFn& v, const Mat& F, int mesh_cells, double rho_tilde,
                               int iters = 200);

}  // namespace invym
