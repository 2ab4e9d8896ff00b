#include "invym/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>

#include "invym/envelope.hpp"
#include "invym/error.hpp"

namespace invym {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMomentTolerance = 1e-8;
constexpr double kJensenTolerance = 1e-6;
constexpr int kOracleGrid = 20000;

Certificate finish(std::string theorem, std::vector<Check> checks, nlohmann::json data = {}) {
  Certificate c;
  c.theorem = std::move(theorem);
  c.verdict = aggregate(checks);
  c.checks = std::move(checks);
  if (!data.is_null()) c.data = std::move(data);
  return c;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Circulation of each row of the cell moment field around every interior
// node of a 2D mesh, through the four adjacent cell centers.
double max_circulation(std::span<const Mat> moments, int N) {
  const double h = 1.0 / N;
  double worst = 0.0;
  auto at = [&](int i, int j) -> const Mat& { return moments[static_cast<std::size_t>(j) * N + i]; };
  for (int j = 1; j < N; ++j) {
    for (int i = 1; i < N; ++i) {
      const Mat &a = at(i - 1, j - 1), &b = at(i, j - 1), &c = at(i, j), &d = at(i - 1, j);
      for (int r = 0; r < 2; ++r) {
        const double circ = 0.5 * h *
                            ((b(r, 1) + c(r, 1)) - (a(r, 1) + d(r, 1)) -
                             ((d(r, 0) + c(r, 0)) - (a(r, 0) + b(r, 0))));
        worst = std::max(worst, std::abs(circ));
      }
    }
  }
  return worst;
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::kPass:
      return "pass";
    case Status::kFail:
      return "fail";
    case Status::kInconclusive:
      return "inconclusive";
  }
  return "fail";
}

Status aggregate(std::span<const Check> checks) {
  Status v = Status::kPass;
  for (const Check& c : checks) {
    if (c.status == Status::kFail) return Status::kFail;
    if (c.status == Status::kInconclusive) v = Status::kInconclusive;
  }
  return v;
}

Certificate check_thm12(const YoungMeasureField& field, double p, double q,
                        bool require_positive_det) {
  const ClassReport r = classify(field, p, q);
  std::vector<Check> checks;
  const bool finite = r.moment_p.is_finite() && r.moment_negq.is_finite();
  Check moments{"finite_moments", finite ? Status::kPass : Status::kFail,
                finite ? r.moment_p.value() + r.moment_negq.value() : kInf, ""};
  if (!finite) moments.note = "(p,-q) moment is infinite";
  checks.push_back(moments);
  Check inv{"invertible_support", r.inv_mass_deficit == 0.0 ? Status::kPass : Status::kFail,
            r.inv_mass_deficit, ""};
  if (inv.status == Status::kFail) inv.note = "mass " + num(r.inv_mass_deficit) + " on singular atoms";
  checks.push_back(inv);
  if (require_positive_det) {
    Check pos{"positive_det_support",
              r.positive_det_mass_deficit == 0.0 ? Status::kPass : Status::kFail,
              r.positive_det_mass_deficit, ""};
    if (pos.status == Status::kFail) {
      pos.note = "mass " + num(r.positive_det_mass_deficit) + " on atoms with det <= 0";
    }
    checks.push_back(pos);
  }
  return finish(require_positive_det ? "thm2" : "thm1", std::move(checks),
                {{"p", p}, {"q", q}});
}

Certificate check_support_from_sequence(std::span<const GradientField> fields,
                                        std::span<const double> epsilon_ladder, double q) {
  if (fields.empty()) throw InvalidArgument("sequence must contain at least one field");
  if (epsilon_ladder.empty()) throw InvalidArgument("epsilon ladder must be nonempty");
  if (!(q > 0.0)) throw InvalidArgument("q must be positive");
  for (double e : epsilon_ladder) {
    if (!(e > 0.0)) throw InvalidArgument("epsilon values must be positive");
  }
  std::vector<double> integrals;
  nlohmann::json small_mass = nlohmann::json::array();
  double worst_excess = -kInf;
  bool singular = false;
  for (const GradientField& f : fields) {
    double I = 0.0;
    std::vector<double> m(epsilon_ladder.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double d = std::abs(f.pieces()[i].gradient.det());
      const double vol = f.volume(i);
      if (vol <= 0.0) continue;
      if (d == 0.0 || is_singular(f.pieces()[i].gradient)) {
        singular = true;
        I = kInf;
      } else {
        I += vol * std::pow(d, -q);
      }
      for (std::size_t e = 0; e < epsilon_ladder.size(); ++e) {
        if (d < epsilon_ladder[e]) m[e] += vol;
      }
    }
    for (std::size_t e = 0; e < epsilon_ladder.size(); ++e) {
      worst_excess = std::max(worst_excess, m[e] * std::pow(epsilon_ladder[e], -q) - I);
    }
    integrals.push_back(I);
    small_mass.push_back(m);
  }
  std::vector<Check> checks;
  const bool dominated = worst_excess <= 1e-12 * std::max(1.0, integrals.back());
  checks.push_back({"chebyshev_dominance", dominated ? Status::kPass : Status::kFail,
                    worst_excess, dominated ? "" : "m(eps) eps^-q exceeds the inverse integral"});
  bool growing = integrals.size() >= 3;
  for (std::size_t k = integrals.size() >= 3 ? integrals.size() - 2 : 1; k < integrals.size();
       ++k) {
    if (!(integrals[k] > integrals[k - 1])) growing = false;
  }
  const bool unbounded =
      singular || (growing && integrals.back() >= 2.0 * integrals.front());
  Check bounded{"inverse_integral_bounded", unbounded ? Status::kFail : Status::kPass,
                integrals.back() / integrals.front(), ""};
  if (unbounded) {
    bounded.note = singular ? "a field has a singular piece"
                            : "int |det|^-q grows from " + num(integrals.front()) + " to " +
                                  num(integrals.back()) + " along the sequence";
  }
  checks.push_back(bounded);
  nlohmann::json data{{"q", q},
                      {"epsilon", std::vector<double>(epsilon_ladder.begin(), epsilon_ladder.end())},
                      {"small_det_mass", small_mass}};
  nlohmann::json ints = nlohmann::json::array();
  for (double I : integrals) {
    if (std::isfinite(I)) {
      ints.push_back(I);
    } else {
      ints.push_back("infinite");
    }
  }
  data["inverse_integral"] = ints;
  return finish("support", std::move(checks), std::move(data));
}

Certificate check_det_limit(std::span<const GradientField> fields, double p, int cells_per_axis) {
  if (fields.empty()) throw InvalidArgument("sequence must contain at least one field");
  const int n = fields.front().dim();
  if (!(p > n)) {
    throw HypothesisViolated("weak continuity of det needs p > n; got p = " + num(p) +
                             ", n = " + std::to_string(n));
  }
  std::vector<double> inverse_sup;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (fields[k].dim() != n) throw InvalidArgument("fields differ in dimension");
    if (!(fields[k].min_det() > 0.0)) {
      throw HypothesisViolated("field " + std::to_string(k) + " has a piece with det <= 0");
    }
    inverse_sup.push_back(fields[k].sup_inverse_norm());
  }
  const double r = *std::max_element(inverse_sup.begin(), inverse_sup.end());
  const double threshold = std::pow(n / (r * r), 0.5 * n);
  const Mesh mesh(n, cells_per_axis);
  const auto limits = fields.back().cell_average_gradients(mesh);
  double min_det = kInf;
  nlohmann::json limit_json = nlohmann::json::array();
  for (const Mat& G : limits) {
    min_det = std::min(min_det, G.det());
    limit_json.push_back(std::vector<double>(G.entries().begin(), G.entries().end()));
  }
  std::vector<Check> checks;
  const bool grows = inverse_sup.back() >= 2.0 * inverse_sup.front();
  Check inverse{"inverse_bound", grows ? Status::kInconclusive : Status::kPass,
                inverse_sup.back(), ""};
  if (grows) {
    inverse.note = "sup |grad y^-1| grows from " + num(inverse_sup.front()) + " to " +
                   num(inverse_sup.back()) + "; the bounded-inverse hypothesis is not supported";
  }
  checks.push_back(inverse);
  const bool above = min_det >= threshold * (1.0 - 1e-12);
  checks.push_back({"limit_det_floor", above ? Status::kPass : Status::kFail, min_det - threshold,
                    above ? "" : "limit determinant below the floor implied by the inverse bound"});
  return finish("det", std::move(checks),
                {{"p", p},
                 {"threshold", threshold},
                 {"inverse_sup", inverse_sup},
                 {"limit_gradients", limit_json},
                 {"limit_min_det", min_det}});
}

Certificate check_thm3(const YoungMeasureField& field, const GradientField& u_h, double rho,
                       std::span<const TestFn> battery, double rho_tilde) {
  if (battery.empty()) throw InvalidArgument("test-function battery must be nonempty");
  if (!(rho >= 1.0)) throw InvalidArgument("rho must be >= 1");
  if (!(rho_tilde > rho)) throw InvalidArgument("rho_tilde must exceed rho");
  const Mesh& mesh = field.mesh();
  const int n = field.matrix_dim();
  if (u_h.dim() != mesh.dim() || n != mesh.dim()) {
    throw InvalidArgument("field, mesh and u_h dimensions differ");
  }
  std::vector<Check> checks;

  double support_excess = 0.0;
  for (const AtomicMeasure& nu : field.measures()) {
    for (const Atom& a : nu.atoms()) {
      support_excess = std::max(support_excess, ball_radius(a.location) - rho);
    }
  }
  const bool supported = support_excess <= 1e-12 * rho;
  checks.push_back({"support", supported ? Status::kPass : Status::kFail, support_excess,
                    supported ? "" : "an atom lies outside R_rho"});

  const auto grads = u_h.cell_average_gradients(mesh);
  std::vector<Mat> moments;
  double moment_residual = 0.0;
  double scale = 1.0;
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    moments.push_back(first_moment(field.cell(c)));
    moment_residual = std::max(moment_residual, frob_norm(moments.back() - grads[c]));
    scale = std::max(scale, frob_norm(moments.back()));
  }
  const bool consistent = moment_residual <= kMomentTolerance;
  checks.push_back({"first_moment", consistent ? Status::kPass : Status::kFail, moment_residual,
                    consistent ? "" : "cell first moments differ from grad u_h"});
  if (mesh.dim() == 2) {
    const double circ = max_circulation(moments, mesh.cells_per_axis());
    const double tol = 1e-8 * mesh.cell_size() * scale;
    checks.push_back({"curl_free", circ <= tol ? Status::kPass : Status::kFail, circ,
                      circ <= tol ? "" : "moment field has nonzero discrete circulation"});
  }

  // Memoised Q_inv estimates keyed by (battery index, gradient entries).
  std::map<std::pair<std::size_t, std::vector<double>>, double> memo;
  double worst_gap = kInf;
  bool failed = false;
  bool open = false;
  nlohmann::json per_fn = nlohmann::json::array();
  for (std::size_t b = 0; b < battery.size(); ++b) {
    double fn_gap = kInf;
    for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
      const Mat& A = grads[c];
      const auto key = std::make_pair(b, std::vector<double>(A.entries().begin(), A.entries().end()));
      auto it = memo.find(key);
      if (it == memo.end()) {
        double est = kInf;
        try {
          est = n == 1 ? qinv_oracle_1d(battery[b], A(0, 0), rho_tilde, kOracleGrid).value_upper
                       : qinv_laminate_upper(battery[b], A, rho_tilde, 2).value_upper;
        } catch (const InfeasibleBarycenter&) {
        } catch (const NoAdmissibleSplit&) {
        }
        it = memo.emplace(key, est).first;
      }
      const double paired = pair(field.cell(c), battery[b]).value();
      const double gap = paired - it->second;
      fn_gap = std::min(fn_gap, gap);
      if (n == 1) {
        if (!(gap >= -kJensenTolerance)) failed = true;
      } else if (!(gap >= -1e-9)) {
        open = true;
      }
    }
    worst_gap = std::min(worst_gap, fn_gap);
    per_fn.push_back({{"function", battery[b].description()},
                      {"min_gap", std::isfinite(fn_gap) ? nlohmann::json(fn_gap)
                                                         : nlohmann::json("infinite")}});
  }
  Check jensen{"jensen", Status::kPass, std::isfinite(worst_gap) ? worst_gap : 0.0, ""};
  const std::string battery_note = "battery of " + std::to_string(battery.size()) +
                                   " functions; a finite battery tests a necessary condition only";
  if (n == 1) {
    jensen.status = failed ? Status::kFail : Status::kPass;
    jensen.note = battery_note + (failed ? "; pairing below the exact envelope" : "");
  } else {
    jensen.status = open ? Status::kInconclusive : Status::kPass;
    jensen.note = battery_note + "; compared with a lamination upper bound" +
                  (open ? ", pairing below the bound so the test is undecided" : "");
  }
  checks.push_back(jensen);
  return finish("thm3", std::move(checks),
                {{"rho", rho}, {"rho_tilde", rho_tilde}, {"battery", per_fn}});
}

}  // namespace invym
