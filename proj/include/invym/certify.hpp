#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "invym/field.hpp"
#include "invym/measure.hpp"
#include "invym/testfn.hpp"

namespace invym {

enum class Status { kPass, kFail, kInconclusive };

std::string to_string(Status s);

struct Check {
  std::string name;
  Status status = Status::kPass;
  double residual = 0.0;
  std::string note;  // always set for inconclusive checks
};

struct Certificate {
  std::string theorem;
  std::vector<Check> checks;
  Status verdict = Status::kPass;
  nlohmann::json data = nlohmann::json::object();  // per-check series
};

// Any fail gives fail; otherwise any inconclusive gives inconclusive.
Status aggregate(std::span<const Check> checks);

// Membership of the field in Y^{p,-q} (theorem "thm1") or, when
// require_positive_det, in Y^{p,-q}_+ (theorem "thm2"): finite moments, no
// mass on singular atoms, and no mass on det <= 0 atoms when required.
Certificate check_thm12(const YoungMeasureField& field, double p, double q,
                        bool require_positive_det);

// For each field k: I_k = int |det grad y_k|^{-q} and m_k(eps) = vol{|det| < eps}.
// Checks the Chebyshev bound m_k(eps) eps^{-q} <= I_k and flags the sequence
// as unbounded when I_k increases strictly over the last three fields and
// ends at least twice its first value.
Certificate check_support_from_sequence(std::span<const GradientField> fields,
                                        std::span<const double> epsilon_ladder, double q);

// Weak-limit gradient of the last field per cell of a mesh with
// `cells_per_axis` cells, compared with the determinant floor (n / r^2)^{n/2}
// implied by the inverse bound r = sup |grad y^{-1}| over the sequence.
// Inconclusive when the inverse bound grows by a factor >= 2 along the
// sequence. Throws HypothesisViolated when p <= n or a piece has det <= 0.
Certificate check_det_limit(std::span<const GradientField> fields, double p,
                            int cells_per_axis = 1);

// Support in R_rho, first moments against the cell-average gradients of u_h
// (plus the discrete curl test in 2D), and pair(nu_cell, v) >= Q_inv v(grad u)
// for every v in the battery: conclusive via the exact oracle in 1D, a
// one-sided test against the lamination upper bound in n >= 2.
Certificate check_thm3(const YoungMeasureField& field, const GradientField& u_h, double rho,
                       std::span<const TestFn> battery, double rho_tilde);

}  // namespace invym
