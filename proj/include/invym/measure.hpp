#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "invym/matcore.hpp"
#include "invym/testfn.hpp"

namespace invym {

struct Atom {
  Mat location;
  double weight = 0.0;
};

// Finitely supported probability measure on n x n matrices. Atoms closer
// than kMergeTolerance (Frobenius distance) are merged on construction and
// zero-weight atoms are dropped; the first location of a merged group is kept.
class AtomicMeasure {
 public:
  static constexpr double kMergeTolerance = 1e-10;
  static constexpr double kMassTolerance = 1e-12;

  // Throws InvalidMeasure for empty input, mixed dimensions, negative or
  // non-finite weights, or total mass off 1 by more than kMassTolerance.
  explicit AtomicMeasure(std::vector<Atom> atoms);

  static AtomicMeasure dirac(const Mat& at) { return AtomicMeasure({{at, 1.0}}); }

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  int dim() const { return atoms_.front().location.dim(); }
  double total_mass() const;

 private:
  std::vector<Atom> atoms_;
};

// Sum of weight * v(location); +inf if any atom maps to +inf. DomainError
// from v propagates.
ExtReal pair(const AtomicMeasure& nu, const TestFn& v);

Mat first_moment(const AtomicMeasure& nu);

// Pushforward under s -> s^{-1}. Throws SingularAtom if an atom is singular.
AtomicMeasure hat_pushforward(const AtomicMeasure& nu);

// Phi_rho nu + (1 - <nu, Phi_rho>) delta_I. `phi` must be a Phi_rho cut-off.
AtomicMeasure truncate(const AtomicMeasure& nu, const CutoffFn& phi);

// sum_k lambda_k nu_k with nonnegative lambda summing to 1.
AtomicMeasure mixture(std::span<const std::pair<double, AtomicMeasure>> parts);

// |pair(nu, v) - pair(mu, v)| <= tol for every v in the family.
bool measures_equal(const AtomicMeasure& nu, const AtomicMeasure& mu,
                    std::span<const TestFn> family, double tol);

// Uniform dyadic mesh on the unit interval (dim 1) or unit square (dim 2).
// Cells are indexed row-major: index = iy * cells_per_axis + ix.
class Mesh {
 public:
  Mesh(int dim, int cells_per_axis);

  int dim() const { return dim_; }
  int cells_per_axis() const { return cells_per_axis_; }
  std::size_t cell_count() const;
  double cell_volume() const;
  double domain_volume() const { return 1.0; }
  double cell_size() const { return 1.0 / cells_per_axis_; }
  // Lower-left corner of a cell (second coordinate 0 in 1D).
  std::array<double, 2> cell_origin(std::size_t index) const;

 private:
  int dim_;
  int cells_per_axis_;
};

// Piecewise-constant family x -> nu_x: one atomic measure per mesh cell.
class YoungMeasureField {
 public:
  YoungMeasureField(Mesh mesh, std::vector<AtomicMeasure> measures);

  static YoungMeasureField constant(Mesh mesh, const AtomicMeasure& nu);

  const Mesh& mesh() const { return mesh_; }
  std::span<const AtomicMeasure> measures() const { return measures_; }
  const AtomicMeasure& cell(std::size_t i) const { return measures_[i]; }
  int matrix_dim() const { return measures_.front().dim(); }

 private:
  Mesh mesh_;
  std::vector<AtomicMeasure> measures_;
};

// Integrated moments, or the explicit infinite state when an atom is singular
// (or the penalty is infinite somewhere).
struct Moments {
  bool infinite = false;
  double p_moment = 0.0;
  double q_moment = 0.0;

  static Moments make_infinite() { return {true, 0.0, 0.0}; }
};

// (sum vol sum w |s|^p, sum vol sum w |s^{-1}|^q).
Moments moment_pq(const YoungMeasureField& field, double p, double q);
// Same, with a caller-supplied penalty in place of |s^{-1}|^q.
Moments moment_with_penalty(const YoungMeasureField& field, double p, const TestFn& penalty);

// Volume-weighted mixture of the cell measures divided by |Omega|.
AtomicMeasure homogenize(const YoungMeasureField& field);

struct ClassReport {
  ExtReal moment_p;
  ExtReal moment_negq;
  double inv_mass_deficit = 0.0;           // |Omega|^{-1} int nu_x(singular) dx
  double positive_det_mass_deficit = 0.0;  // |Omega|^{-1} int nu_x(det <= 0) dx
  bool in_Ypq = false;
  bool in_Ypq_plus = false;
};

ClassReport classify(const YoungMeasureField& field, double p, double q);

}  // namespace invym
