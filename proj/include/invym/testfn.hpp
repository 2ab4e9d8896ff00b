#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "invym/matcore.hpp"

namespace invym {

// Real number or +infinity. Infinity is a state, never a large float.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)
  static constexpr ExtReal infinity() {
    ExtReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }
  // The finite value; +inf as a double when infinite.
  constexpr double value() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  ExtReal operator+(const ExtReal& o) const {
    return infinite_ || o.infinite_ ? infinity() : ExtReal(value_ + o.value_);
  }
  // Scaling by a nonnegative weight; 0 * inf = 0 (atoms of zero weight).
  ExtReal scaled(double w) const {
    if (infinite_) return w > 0.0 ? infinity() : ExtReal(0.0);
    return ExtReal(value_ * w);
  }
  bool operator<(const ExtReal& o) const {
    if (infinite_) return false;
    return o.infinite_ || value_ < o.value_;
  }
  bool operator==(const ExtReal& o) const {
    return infinite_ == o.infinite_ && (infinite_ || value_ == o.value_);
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

enum class GrowthKind {
  kCp,     // |v(s)| <= C (1 + |s|^p)
  kCpmp,   // C_{p,-p}: |v(s)| <= C (|s|^p + |s^{-1}|^p), undefined on singular s
  kC0inv,  // continuous, vanishing on singular s and at infinity
  kOrho,   // continuous on R_rho, +infinity outside
};

struct Growth {
  GrowthKind kind = GrowthKind::kCp;
  double param = 0.0;  // p for kCp/kCpmp, rho for kOrho (may be +inf)

  static Growth cp(double p) { return {GrowthKind::kCp, p}; }
  static Growth cpmp(double p) { return {GrowthKind::kCpmp, p}; }
  static Growth c0inv() { return {GrowthKind::kC0inv, 0.0}; }
  static Growth orho(double rho) { return {GrowthKind::kOrho, rho}; }

  std::string to_string() const;
};

// Two-sided coercivity bound on the moments:
//   lower_c * (|s|^p + |s^{-1}|^q) - lower_shift <= W(s)
//   W(s) <= upper_c * (1 + |s|^p + |s^{-1}|^q)
struct GrowthSandwich {
  double p = 2.0;
  double q = 2.0;
  double lower_c = 0.0;
  double lower_shift = 0.0;
  double upper_c = 1.0;
};

// An integrand with a declared growth class. Evaluation may return +infinity
// (O(rho) type functions, energies at singular matrices) or throw
// DomainError where the function is undefined.
class TestFn {
 public:
  using Eval = std::function<ExtReal(const Mat&)>;

  TestFn(Eval eval, Growth growth, std::string description,
         std::optional<GrowthSandwich> sandwich = std::nullopt)
      : eval_(std::move(eval)),
        growth_(growth),
        description_(std::move(description)),
        sandwich_(sandwich) {}

  ExtReal operator()(const Mat& s) const { return eval_(s); }

  const Growth& growth() const { return growth_; }
  const std::string& description() const { return description_; }
  const std::optional<GrowthSandwich>& sandwich() const { return sandwich_; }

  TestFn with_growth(Growth g) const {
    TestFn r = *this;
    r.growth_ = g;
    return r;
  }

 private:
  Eval eval_;
  Growth growth_;
  std::string description_;
  std::optional<GrowthSandwich> sandwich_;
};

// Quintic smoothstep 6t^5 - 15t^4 + 10t^3, clamped to [0, 1].
double smoothstep(double t);

enum class CutoffKind { kPhiRho, kDetZero, kDetPlus };

// The smooth cut-offs: Phi_rho (1 on R_rho, 0 off R_{rho+1}) and the
// determinant cut-offs (1 on {det = 0} resp. {det <= 0}, 0 once det >= eps).
class CutoffFn {
 public:
  CutoffKind kind() const { return kind_; }
  double param() const { return param_; }
  double operator()(const Mat& s) const;
  TestFn as_testfn() const;

 private:
  friend CutoffFn make_phi_rho(double rho);
  friend CutoffFn make_det_cutoff(double epsilon, bool is_signed);
  CutoffFn(CutoffKind kind, double param) : kind_(kind), param_(param) {}

  CutoffKind kind_;
  double param_;
};

// Phi_rho(s) = Theta_rho(|s|) * Theta_rho(|s^{-1}|), 0 on singular s.
CutoffFn make_phi_rho(double rho);
CutoffFn make_det_cutoff(double epsilon, bool is_signed);

// Simple integrands.
TestFn determinant();                // growth C_p(3) unless overridden
TestFn frobenius_power(double p);    // |s|^p
TestFn inverse_power(double q);      // |s^{-1}|^q, DomainError on singular s
TestFn norm_well(double c);          // (|s|^2 - c)^2
// Wraps f : R -> R acting on 1x1 matrices; DomainError for n != 1.
TestFn scalar_1d(std::function<double(double)> f, Growth growth,
                 std::string description);

// v(s^{-1}) on invertible s; on singular s: 0 for C0inv functions, +inf for
// O(rho) type, DomainError otherwise.
TestFn hat(const TestFn& v);
// O(rho) extension: v on R_rho, +inf elsewhere.
TestFn restrict_to_ball(const TestFn& v, double rho);
TestFn shifted(const TestFn& v, double c);
TestFn product(const TestFn& v, const CutoffFn& phi);

// Energy library. Names: inv_penalty {p}, double_well_inv {A, B, p, gamma},
// shear_well_2d {p, gamma}. Throws UnknownEnergy for other names and
// InvalidArgument for unknown or malformed parameters.
TestFn builtin_energy(std::string_view name, const nlohmann::json& params);

// Energies plus the simple integrands above, addressable by name:
// det, frob {p}, inv_frob {q}, norm_well {c}, phi_rho {rho}.
TestFn named_test_function(std::string_view name, const nlohmann::json& params);

struct GrowthRung {
  double scale = 1.0;
  double max_ratio = 0.0;
};

struct GrowthReport {
  std::vector<GrowthRung> rungs;
  double max_ratio = 0.0;
  bool pass = false;
  bool decays = false;
  std::string note;
};

// Samples matrices on a scale ladder 10^-3..10^3 and compares v against the
// weight of its declared class. Advisory only.
GrowthReport growth_check(const TestFn& v, int n, int samples,
                          std::uint64_t seed = 1);

}  // namespace invym
