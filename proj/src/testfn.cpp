#include "invym/testfn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "invym/error.hpp"
#include "invym/json_util.hpp"

namespace invym {
namespace {

// Theta_rho(r): 1 for r <= rho, 0 for r >= rho + 1, quintic in between.
double radial_bump(double r, double rho) { return 1.0 - smoothstep(r - rho); }

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Mat random_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat q(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) q(i, j) = gauss(rng);
  }
  // Gram-Schmidt on the columns.
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < j; ++k) {
      double d = 0.0;
      for (int i = 0; i < n; ++i) d += q(i, j) * q(i, k);
      for (int i = 0; i < n; ++i) q(i, j) -= d * q(i, k);
    }
    double norm = 0.0;
    for (int i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    if (norm < 1e-8) return Mat::identity(n);
    for (int i = 0; i < n; ++i) q(i, j) /= norm;
  }
  return q;
}

// Well-conditioned sample of Frobenius scale ~ t, or a rank-deficient one.
Mat sample_matrix(int n, double t, bool singular, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> log_sigma(std::log(0.5), std::log(2.0));
  Mat d(n);
  for (int i = 0; i < n; ++i) d(i, i) = t * std::exp(log_sigma(rng));
  if (singular) d(n - 1, n - 1) = 0.0;
  return random_orthogonal(n, rng) * d * random_orthogonal(n, rng);
}

double weight_for(const Growth& g, const Mat& s) {
  switch (g.kind) {
    case GrowthKind::kCp:
      return 1.0 + std::pow(frob_norm(s), g.param);
    case GrowthKind::kCpmp: {
      auto inv = try_invert(s);
      if (!inv) return std::numeric_limits<double>::infinity();
      return std::pow(frob_norm(s), g.param) + std::pow(frob_norm(*inv), g.param);
    }
    default:
      return 1.0;
  }
}

}  // namespace

std::string Growth::to_string() const {
  switch (kind) {
    case GrowthKind::kCp:
      return "C_p(" + fmt_num(param) + ")";
    case GrowthKind::kCpmp:
      return "C_{p,-p}(" + fmt_num(param) + ")";
    case GrowthKind::kC0inv:
      return "C_0inv";
    case GrowthKind::kOrho:
      return "O(" + (std::isinf(param) ? std::string("inf") : fmt_num(param)) + ")";
  }
  return "?";
}

double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

double CutoffFn::operator()(const Mat& s) const {
  switch (kind_) {
    case CutoffKind::kPhiRho: {
      auto inv = try_invert(s);
      if (!inv) return 0.0;
      return radial_bump(frob_norm(s), param_) * radial_bump(frob_norm(*inv), param_);
    }
    case CutoffKind::kDetZero:
      return 1.0 - smoothstep(std::abs(s.det()) / param_);
    case CutoffKind::kDetPlus: {
      const double d = s.det();
      if (d <= 0.0) return 1.0;
      return 1.0 - smoothstep(d / param_);
    }
  }
  return 0.0;
}

TestFn CutoffFn::as_testfn() const {
  const CutoffFn self = *this;
  std::string desc;
  Growth growth = Growth::cp(0.0);
  switch (kind_) {
    case CutoffKind::kPhiRho:
      desc = "Phi_rho cut-off, rho=" + fmt_num(param_) + " (quintic smoothstep profile)";
      growth = Growth::c0inv();
      break;
    case CutoffKind::kDetZero:
      desc = "det cut-off (|det| < eps), eps=" + fmt_num(param_) + " (quintic smoothstep profile)";
      break;
    case CutoffKind::kDetPlus:
      desc = "signed det cut-off (det <= 0), eps=" + fmt_num(param_) +
             " (quintic smoothstep profile)";
      break;
  }
  return TestFn([self](const Mat& s) { return ExtReal(self(s)); }, growth, desc);
}

CutoffFn make_phi_rho(double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("phi_rho requires rho > 0");
  return CutoffFn(CutoffKind::kPhiRho, rho);
}

CutoffFn make_det_cutoff(double epsilon, bool is_signed) {
  if (!(epsilon > 0.0)) throw InvalidArgument("det cut-off requires epsilon > 0");
  return CutoffFn(is_signed ? CutoffKind::kDetPlus : CutoffKind::kDetZero, epsilon);
}

TestFn determinant() {
  return TestFn([](const Mat& s) { return ExtReal(s.det()); }, Growth::cp(3.0), "det s");
}

TestFn frobenius_power(double p) {
  return TestFn([p](const Mat& s) { return ExtReal(std::pow(frob_norm(s), p)); },
                Growth::cp(p), "|s|^" + fmt_num(p));
}

TestFn inverse_power(double q) {
  return TestFn(
      [q](const Mat& s) {
        auto inv = try_invert(s);
        if (!inv) throw DomainError("|s^-1|^q undefined at singular " + s.to_string());
        return ExtReal(std::pow(frob_norm(*inv), q));
      },
      Growth::cpmp(q), "|s^-1|^" + fmt_num(q));
}

TestFn norm_well(double c) {
  return TestFn(
      [c](const Mat& s) {
        const double r = s.dot(s) - c;
        return ExtReal(r * r);
      },
      Growth::cp(4.0), "(|s|^2 - " + fmt_num(c) + ")^2");
}

TestFn scalar_1d(std::function<double(double)> f, Growth growth, std::string description) {
  return TestFn(
      [f = std::move(f)](const Mat& s) {
        if (s.dim() != 1) throw DomainError("scalar integrand evaluated on n != 1");
        return ExtReal(f(s(0, 0)));
      },
      growth, std::move(description));
}

TestFn hat(const TestFn& v) {
  const GrowthKind kind = v.growth().kind;
  return TestFn(
      [v, kind](const Mat& s) -> ExtReal {
        auto inv = try_invert(s);
        if (inv) return v(*inv);
        if (kind == GrowthKind::kC0inv) return 0.0;
        if (kind == GrowthKind::kOrho) return ExtReal::infinity();
        throw DomainError("hat transform undefined at singular " + s.to_string());
      },
      v.growth(), "hat(" + v.description() + ")");
}

TestFn restrict_to_ball(const TestFn& v, double rho) {
  const RhoBall ball{rho, false};
  return TestFn(
      [v, ball](const Mat& s) -> ExtReal {
        if (!in_rho_ball(s, ball)) return ExtReal::infinity();
        return v(s);
      },
      Growth::orho(rho), v.description() + " on R_" + fmt_num(rho), v.sandwich());
}

TestFn shifted(const TestFn& v, double c) {
  return TestFn([v, c](const Mat& s) { return v(s) + ExtReal(c); }, v.growth(),
                v.description() + " + " + fmt_num(c), v.sandwich());
}

TestFn product(const TestFn& v, const CutoffFn& phi) {
  return TestFn(
      [v, phi](const Mat& s) -> ExtReal {
        const double w = phi(s);
        if (w == 0.0) return 0.0;
        return v(s).scaled(w);
      },
      Growth::c0inv(), v.description() + " * cut-off");
}

TestFn builtin_energy(std::string_view name, const json& params) {
  const json& prm = params.is_null() ? json::object() : params;
  if (name == "inv_penalty") {
    require_known_keys(prm, {"p"}, "inv_penalty");
    const double p = get_number(prm, "p", 2.0);
    if (!(p >= 1.0)) throw InvalidArgument("inv_penalty requires p >= 1");
    GrowthSandwich sw{p, p, 1.0, 0.0, 1.0};
    return TestFn(
        [p](const Mat& s) -> ExtReal {
          auto inv = try_invert(s);
          if (!inv) return ExtReal::infinity();
          return std::pow(frob_norm(s), p) + std::pow(frob_norm(*inv), p);
        },
        Growth::orho(std::numeric_limits<double>::infinity()),
        "inv_penalty: |s|^p + |s^-1|^p, p=" + fmt_num(p) +
            "; sandwich 1*(|s|^p+|s^-1|^p) <= W <= 1*(1+|s|^p+|s^-1|^p)",
        sw);
  }
  if (name == "double_well_inv" || name == "shear_well_2d") {
    Mat a = Mat::scalar(1.0), b = Mat::scalar(-1.0);
    double p = 2.0, gamma = 0.0;
    if (name == "double_well_inv") {
      require_known_keys(prm, {"A", "B", "p", "gamma"}, "double_well_inv");
      if (prm.contains("A")) a = mat_from_json(prm.at("A"));
      if (prm.contains("B")) b = mat_from_json(prm.at("B"));
      if (a.dim() != b.dim()) throw InvalidArgument("double_well_inv: wells differ in size");
    } else {
      require_known_keys(prm, {"p", "gamma"}, "shear_well_2d");
      a = Mat::identity(2);
      b = Mat{{1.0, 1.0}, {0.0, 1.0}};
    }
    p = get_number(prm, "p", 2.0);
    gamma = get_number(prm, "gamma", 0.0);
    if (!(p >= 1.0) || !(gamma >= 0.0)) {
      throw InvalidArgument(std::string(name) + ": requires p >= 1 and gamma >= 0");
    }
    const double na = a.dot(a), nb = b.dot(b);
    GrowthSandwich sw;
    sw.p = 2.0;
    sw.q = p;
    sw.lower_c = std::min(0.5, gamma);
    sw.lower_shift = std::max(na, nb);
    sw.upper_c = std::max({2.0, 2.0 * std::min(na, nb), gamma});
    std::string desc = std::string(name) + ": min(|s-A|^2,|s-B|^2) + gamma|s^-1|^p, A=" +
                       a.to_string() + ", B=" + b.to_string() + ", p=" + fmt_num(p) +
                       ", gamma=" + fmt_num(gamma) + "; sandwich " + fmt_num(sw.lower_c) +
                       "*(|s|^2+|s^-1|^p) - " + fmt_num(sw.lower_shift) + " <= W <= " +
                       fmt_num(sw.upper_c) + "*(1+|s|^2+|s^-1|^p)";
    return TestFn(
        [a, b, p, gamma](const Mat& s) -> ExtReal {
          if (s.dim() != a.dim()) throw DomainError("energy evaluated at wrong dimension");
          auto inv = try_invert(s);
          if (!inv) return ExtReal::infinity();
          const Mat da = s - a, db = s - b;
          const double well = std::min(da.dot(da), db.dot(db));
          return well + (gamma > 0.0 ? gamma * std::pow(frob_norm(*inv), p) : 0.0);
        },
        Growth::orho(std::numeric_limits<double>::infinity()), desc, sw);
  }
  throw UnknownEnergy("unknown energy '" + std::string(name) + "'");
}

TestFn named_test_function(std::string_view name, const json& params) {
  const json& prm = params.is_null() ? json::object() : params;
  if (name == "det") {
    require_known_keys(prm, {}, "det");
    return determinant();
  }
  if (name == "frob") {
    require_known_keys(prm, {"p"}, "frob");
    return frobenius_power(get_number(prm, "p", 1.0));
  }
  if (name == "inv_frob") {
    require_known_keys(prm, {"q"}, "inv_frob");
    return inverse_power(get_number(prm, "q", 1.0));
  }
  if (name == "norm_well") {
    require_known_keys(prm, {"c"}, "norm_well");
    return norm_well(get_number(prm, "c", 1.0));
  }
  if (name == "phi_rho") {
    require_known_keys(prm, {"rho"}, "phi_rho");
    return make_phi_rho(get_number(prm, "rho")).as_testfn();
  }
  return builtin_energy(name, prm);
}

GrowthReport growth_check(const TestFn& v, int n, int samples, std::uint64_t seed) {
  if (samples < 1) throw InvalidArgument("growth_check requires samples >= 1");
  std::mt19937_64 rng(seed);
  GrowthReport report;
  const Growth& g = v.growth();

  if (g.kind == GrowthKind::kOrho) {
    const RhoBall ball{g.param, false};
    bool consistent = true;
    for (int j = -3; j <= 3; ++j) {
      const double t = std::pow(10.0, j * 0.5);
      for (int i = 0; i < samples; ++i) {
        const Mat s = sample_matrix(n, t, i % 5 == 4, rng);
        const bool inside = std::isinf(g.param) ? !is_singular(s) : in_rho_ball(s, ball);
        if (v(s).is_infinite() == inside) consistent = false;
      }
      report.rungs.push_back({t, 0.0});
    }
    report.pass = consistent;
    report.decays = consistent;
    report.note = consistent ? "+inf exactly off R_rho on all samples"
                             : "+inf pattern disagrees with R_rho membership";
    return report;
  }

  double singular_max = 0.0;
  for (int j = -3; j <= 3; ++j) {
    const double t = std::pow(10.0, j);
    double rung_max = 0.0;
    for (int i = 0; i < samples; ++i) {
      const Mat s = sample_matrix(n, t, false, rng);
      const double val = std::abs(v(s).value());
      rung_max = std::max(rung_max, val / weight_for(g, s));
    }
    report.rungs.push_back({t, rung_max});
    report.max_ratio = std::max(report.max_ratio, rung_max);
  }
  if (g.kind == GrowthKind::kC0inv) {
    for (int i = 0; i < samples; ++i) {
      singular_max = std::max(singular_max, std::abs(v(sample_matrix(n, 1.0, true, rng)).value()));
    }
  }

  double inner = 0.0, outer = 0.0;
  for (const auto& rung : report.rungs) {
    if (rung.scale <= 1.0001e-3 || rung.scale >= 0.9999e3) {
      outer = std::max(outer, rung.max_ratio);
    } else {
      inner = std::max(inner, rung.max_ratio);
    }
  }
  if (g.kind == GrowthKind::kC0inv) {
    report.pass = singular_max <= 1e-12 && (outer <= 1e-12 || outer <= 1e-3 * inner);
    report.decays = report.pass;
    report.note = "C_0inv: |v| on singular samples " + fmt_num(singular_max) +
                  ", outer-rung max " + fmt_num(outer);
  } else {
    report.pass = outer <= 4.0 * inner + 1e-12;
    report.decays = outer <= 0.5 * inner;
    report.note = "ratio to class weight: inner-rung max " + fmt_num(inner) +
                  ", outer-rung max " + fmt_num(outer);
  }
  return report;
}

}  // namespace invym
