#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "invym/field.hpp"
#include "invym/matcore.hpp"
#include "invym/measure.hpp"
#include "invym/testfn.hpp"

namespace invym {

// Optimal weights of min sum w_i c_i over w >= 0, sum w = 1,
// sum w_i atoms_i = target, with the duals of the moment rows (as a matrix)
// and of the mass row. Reduced cost of a candidate s: c(s) - <pi, s> - sigma.
struct LpSolution {
  std::vector<double> weights;
  double value = 0.0;
  Mat moment_dual;
  double mass_dual = 0.0;
  std::vector<std::size_t> basis;  // atoms in the final simplex basis
};

// Two-phase dense simplex with Bland's rule. Throws Infeasible when target
// is outside the convex hull of the atoms, InvalidArgument on malformed input.
LpSolution lp_weights(std::span<const Mat> atoms, const Mat& target, std::span<const double> costs);

struct SupportConstraints {
  std::optional<double> rho_cap;  // max(|s|, |s^-1|) <= rho_cap
  bool positive_det = false;
};

// Invertible, inside the cap, det > 0 when required, and W(s) finite.
bool admissible_atom(const Mat& s, const TestFn& W, const SupportConstraints& c);

struct AtomProposal {
  bool converged = false;
  Mat atom;
  double reduced_cost = 0.0;
};

// Multistart compass search for the admissible s minimizing
// W(s) - <pi, s> - sigma, started from the identity and perturbed copies of
// `atoms`. Converged when the best reduced cost is >= -1e-8.
AtomProposal refine_atoms(std::span<const Mat> atoms, const Mat& moment_dual, double mass_dual,
                          const TestFn& W, const SupportConstraints& c, std::uint64_t seed);

struct RelaxProblem {
  TestFn W;
  Mesh mesh;
  Mat F;
  double p = 2.0;
  double q = 2.0;
  SupportConstraints support;
  int atom_budget = 16;  // atoms kept per cell, at least n^2 + 1
  int max_iters = 30;
  std::uint64_t seed = 0;
};

struct RelaxSolution {
  GradientField u_h;
  YoungMeasureField field;
  double energy = 0.0;
  int iterations = 0;
  // Largest remaining negative reduced cost over cells (0 at a KKT point of
  // the discretized problem).
  double kkt_residual = 0.0;
  std::vector<double> energy_history;
  // Per iterate: largest Frobenius gap between a cell's first moment and its
  // target gradient.
  std::vector<double> moment_residual_history;
  bool converged = false;
};

// Alternates per-cell column generation at fixed u_h with coordinate descent
// on the interior nodes of u_h against the cell-wise LP energies. Cell
// moments are cell averages of grad u_h. Throws Stalled when a cell admits
// no atoms, InvalidArgument on malformed problems.
RelaxSolution relax_solve(const RelaxProblem& prob);

}  // namespace invym
