// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "invym/certify.hpp"
#include "invym/envelope.hpp"
#include "invym/error.hpp"
#include "invym/laminate.hpp"
#include "invym/measure.hpp"
#include "invym/parallel.hpp"
#include "invym/relax.hpp"
#include "invym/scenario.hpp"
#include "invym/testfn.hpp"
#include "test_util.hpp"

using namespace invym;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates "name=value" fragments and the overall verdict.
class Report {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failures_.push_back(what);
    }
  }
  void note(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.3g", key.c_str(), value);
    notes_.push_back(buf);
  }
  Outcome done() const {
    std::string d;
    for (const auto& n : notes_) d += (d.empty() ? "" : " ") + n;
    for (const auto& f : failures_) d += " [failed: " + f + "]";
    return {pass_, d};
  }

 private:
  bool pass_ = true;
  std::vector<std::string> notes_;
  std::vector<std::string> failures_;
};

double ext(const ExtReal& x) { return x.is_finite() ? x.value() : INFINITY; }

Outcome hat_identity() {
  std::mt19937_64 rng(101);
  const std::vector<std::pair<TestFn, std::function<double(const Mat&)>>> fs{
      {frobenius_power(1.0), [](const Mat& s) { return frob_norm(s); }},
      {determinant(), [](const Mat& s) { return s.det(); }},
      {make_phi_rho(2.0).as_testfn(), [](const Mat& s) { return make_phi_rho(2.0)(s); }},
  };
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const AtomicMeasure nu = testing::random_measure(1 + t % 3, 1 + t % 5, rng);
    const AtomicMeasure h = hat_pushforward(nu);
    for (const auto& [f, direct] : fs) {
      double composed = 0.0;
      for (const Atom& a : nu.atoms()) composed += a.weight * direct(invert(a.location));
      worst = std::max(worst, std::abs(ext(pair(h, f)) - composed));
      worst = std::max(worst, std::abs(ext(pair(h, f)) - ext(pair(nu, hat(f)))));
    }
  }
  Report r;
  r.note("max_residual", worst);
  r.require(worst <= 1e-12, "residual above 1e-12");
  return r.done();
}

Outcome truncation() {
  std::mt19937_64 rng(102);
  const std::vector<TestFn> c0{make_phi_rho(1.5).as_testfn(), make_phi_rho(3.0).as_testfn(),
                               make_phi_rho(6.0).as_testfn()};
  double mass_err = 0.0;
  double exact_gap = 0.0;
  bool supported = true;
  bool monotone = true;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 3;
    const AtomicMeasure nu = testing::random_measure(n, 1 + t % 6, rng, 1.0 + (t % 4));
    double scale = 0.0;
    for (const Atom& a : nu.atoms()) scale = std::max(scale, ball_radius(a.location));
    for (double rho : {1.0, 2.0, 4.0}) {
      const AtomicMeasure out = truncate(nu, make_phi_rho(rho));
      mass_err = std::max(mass_err, std::abs(out.total_mass() - 1.0));
      for (const Atom& a : out.atoms()) supported &= in_rho_ball(a.location, {rho + 1.0, false});
    }
    for (const TestFn& f : c0) {
      const double target = ext(pair(nu, f));
      double prev_gap = INFINITY;
      for (double rho : {0.25 * scale, 0.5 * scale, scale, 2.0 * scale}) {
        if (rho < 1.0) continue;
        const double gap = std::abs(ext(pair(truncate(nu, make_phi_rho(rho)), f)) - target);
        monotone &= gap <= prev_gap + 1e-15;
        prev_gap = gap;
        if (rho >= scale) exact_gap = std::max(exact_gap, gap);
      }
    }
  }
  Report r;
  r.note("mass_err", mass_err);
  r.note("gap_once_covered", exact_gap);
  r.require(mass_err <= 1e-12, "not a probability measure");
  r.require(supported, "atom outside R_{rho+1}");
  r.require(exact_gap == 0.0, "pairing differs once rho covers the atoms");
  r.require(monotone, "pairing gap grows with rho");
  return r.done();
}

Outcome homogenization() {
  std::mt19937_64 rng(103);
  const std::vector<TestFn> fs{frobenius_power(1.0), frobenius_power(2.0), determinant(),
                               make_phi_rho(2.0).as_testfn(), inverse_power(1.0)};
  const Mesh mesh(1, 8);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 3;
    std::vector<AtomicMeasure> cells;
    for (int c = 0; c < 8; ++c) cells.push_back(testing::random_measure(n, 1 + (t + c) % 4, rng));
    const YoungMeasureField field(mesh, cells);
    const AtomicMeasure h = homogenize(field);
    for (const TestFn& f : fs) {
      double sum = 0.0;
      for (const AtomicMeasure& nu : field.measures()) sum += mesh.cell_volume() * ext(pair(nu, f));
      worst = std::max(worst, std::abs(ext(pair(h, f)) - sum) / std::max(1.0, std::abs(sum)));
    }
  }
  Report r;
  r.note("max_residual", worst);
  r.require(worst <= 1e-12, "residual above 1e-12");
  return r.done();
}

Outcome generation() {
  const WeightFn x = named_weight("x");
  const std::vector<int> ks{4, 8, 16, 32, 64};
  const SequenceSpec saw{{Mat::scalar(1.0), Mat::scalar(-1.0)}, {0.5, 0.5}, 1, std::nullopt};
  const TestFn s2 = scalar_1d([](double s) { return s * s; }, Growth::cp(2), "s^2");
  const TestFn s2s = scalar_1d([](double s) { return s * s + s; }, Growth::cp(2), "s^2+s");
  const auto rep = verify_generation(saw, {s2, s2s}, {x}, ks);
  const auto& a = rep.series[0];
  const auto& b = rep.series[1];
  const double rel_a = a.errors.back() / std::abs(a.limit);
  const double rel_b = b.errors.back() / std::abs(b.limit);
  const auto pos = verify_generation({{Mat::scalar(1.0), Mat::scalar(2.0)}, {0.5, 0.5}, 1,
                                      std::nullopt},
                                     {s2}, {x}, ks);
  Report r;
  r.note("slope_s2", a.slope);
  r.note("rel_err_k64_s2", rel_a);
  r.note("slope_s2+s", b.slope);
  r.note("rel_err_k64_s2+s", rel_b);
  r.require(a.slope <= -0.9 && rel_a < 1e-2, "s^2 series");
  r.require(b.slope <= -0.9 && rel_b < 1e-2, "s^2+s series");
  r.require(pos.det_positive, "slopes {1,2} produced det <= 0");
  return r.done();
}

Outcome oracle_vs_lamination() {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const TestFn well = norm_well(1.0);
  const double rt = 2.0;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double F = u(rng);
    const double lam = qinv_laminate_upper(well, Mat::scalar(F), rt).value_upper;
    const double orc = qinv_oracle_1d(well, F, rt).value_upper;
    worst = std::max(worst, std::abs(lam - orc));
  }
  const double at0 = qinv_oracle_1d(well, 0.0, rt).value_upper;
  const double sq = qinv_oracle_1d(frobenius_power(2.0), 0.0, rt).value_upper;
  Report r;
  r.note("max_gap", worst);
  r.note("oracle_well_F0", at0);
  r.note("oracle_s2_F0", sq);
  r.require(worst <= 1e-4, "laminate and oracle differ");
  r.require(std::abs(at0) <= 1e-6, "well at F=0");
  r.require(std::abs(sq - 0.25) <= 1e-4, "s^2 at F=0");
  return r.done();
}

Outcome jensen_dirac() {
  std::mt19937_64 rng(106);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int trials = 0;
  int estimates = 0;
  double worst = -INFINITY;
  while (trials < 100) {
    const int n = 1 + trials % 3;
    const double rt = 1.5 + 2.5 * u(rng);
    const Mat F = testing::random_mat(n, rng, 1.0);
    if (!in_rho_ball(F, {rt, false})) continue;
    std::vector<TestFn> vs{norm_well(0.5 + u(rng)), frobenius_power(1.0 + 2.0 * u(rng)),
                           inverse_power(1.0 + u(rng)), determinant(),
                           builtin_energy("inv_penalty", {{"p", 2.0}})};
    if (n == 1) vs.push_back(builtin_energy("double_well_inv", {{"gamma", 0.01}}));
    if (n == 2) vs.push_back(builtin_energy("shear_well_2d", {{"gamma", 0.01}}));
    const TestFn& v = vs[trials % vs.size()];
    const double vF = ext(v(F));
    std::vector<double> est;
    est.push_back(qinv_laminate_upper(v, F, rt, n == 3 ? 1 : 2).value_upper);
    if (n == 1) {
      est.push_back(qinv_oracle_1d(v, F(0, 0), rt).value_upper);
      est.push_back(qinv_fe_upper(v, F, 32, rt, 20).value_upper);
    }
    if (n == 2) est.push_back(qinv_fe_upper(v, F, 4, rt, 10).value_upper);
    for (double e : est) {
      worst = std::max(worst, e - vF);
      ++estimates;
    }
    ++trials;
  }
  Report r;
  r.note("estimates", estimates);
  r.note("max_excess_over_vF", worst);
  r.require(worst <= 1e-9, "an estimate exceeds v(F)");
  return r.done();
}

RelaxProblem criterion7_problem(std::uint64_t seed) {
  SupportConstraints support;
  support.rho_cap = 2.0;
  return RelaxProblem{builtin_energy("double_well_inv", {{"gamma", 1e-3}}),
                      Mesh(1, 32),
                      Mat::scalar(0.0),
                      2.0,
                      2.0,
                      support,
                      16,
                      30,
                      seed};
}

std::vector<RelaxSolution>& criterion7_solutions() {
  static std::vector<RelaxSolution> sols;
  return sols;
}

Outcome relaxation() {
  auto& sols = criterion7_solutions();
  sols.clear();
  const TestFn W = builtin_energy("double_well_inv", {{"gamma", 1e-3}});
  const double oracle = qinv_oracle_1d(W, 0.0, 2.0, 20000).value_upper;
  Report r;
  r.note("oracle", oracle);
  for (std::uint64_t seed : {0u, 1u}) {
    sols.push_back(relax_solve(criterion7_problem(seed)));
    const RelaxSolution& s = sols.back();
    const double gap = std::abs(s.energy - oracle);
    bool monotone = true;
    for (std::size_t i = 1; i < s.energy_history.size(); ++i) {
      monotone &= s.energy_history[i] <= s.energy_history[i - 1];
    }
    const double feas = *std::max_element(s.moment_residual_history.begin(),
                                          s.moment_residual_history.end());
    const std::string tag = "seed" + std::to_string(seed);
    r.note(tag + "_energy", s.energy);
    r.note(tag + "_gap", gap);
    r.note(tag + "_iters", s.iterations);
    r.note(tag + "_max_moment_residual", feas);
    r.require(gap <= 1e-3, tag + " energy gap");
    r.require(monotone, tag + " energy trace increases");
    r.require(feas <= 1e-8, tag + " infeasible iterate");
  }
  return r.done();
}

const Check* find_check(const Certificate& c, const std::string& name) {
  for (const Check& ch : c.checks) {
    if (ch.name == name) return &ch;
  }
  return nullptr;
}

Outcome support_and_det() {
  const std::vector<int> ks{16, 32, 64, 128};
  const double q = 2.0;
  std::vector<GradientField> inv;
  for (int k : ks) inv.push_back(inverse_slope_field(k));
  const std::vector<double> eps{0.01, 0.1, 0.5};
  const Certificate sup = check_support_from_sequence(inv, eps, q);
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double I = sup.data["inverse_integral"][i].get<double>();
    worst_ratio = std::max(worst_ratio, std::abs(I / (std::pow(ks[i], q) / 2.0) - 1.0));
  }
  const Check* bounded = find_check(sup, "inverse_integral_bounded");

  std::vector<GradientField> pos;
  for (int k : {4, 8, 16, 32}) {
    pos.push_back(build_laminate_sequence(
        {{Mat::scalar(1.0), Mat::scalar(2.0)}, {0.5, 0.5}, k, std::nullopt}));
  }
  const Certificate det = check_det_limit(pos, 2.0);
  const double limit = det.data["limit_gradients"][0][0].get<double>();
  Report r;
  r.note("max_rel_dev_from_k^q/2", worst_ratio);
  r.note("det_limit_slope", limit);
  r.require(bounded && bounded->status == Status::kFail, "1/k family not flagged");
  r.require(worst_ratio <= 0.01, "inverse integral off k^q/2 by more than 1%");
  r.require(det.verdict == Status::kPass, "slopes {1,2} fail check_det_limit");
  r.require(std::abs(limit - 1.5) <= 1e-12, "limit slope");
  return r.done();
}

Outcome certificate_coherence() {
  const auto& sols = criterion7_solutions();
  Report r;
  r.require(!sols.empty(), "criterion 7 produced no solutions");
  const TestFn W = builtin_energy("double_well_inv", {{"gamma", 1e-3}});
  const std::vector<TestFn> battery{W, norm_well(1.0), frobenius_power(2.0), inverse_power(2.0),
                                    determinant()};
  for (std::size_t i = 0; i < sols.size(); ++i) {
    const RelaxProblem prob = criterion7_problem(i);
    const RelaxSolution& s = sols[i];
    const Certificate c12 = check_thm12(s.field, prob.p, prob.q, prob.support.positive_det);
    const Certificate c3 = check_thm3(s.field, s.u_h, *prob.support.rho_cap, battery, 3.0);
    const Check* supp = find_check(c3, "support");
    const Check* mom = find_check(c3, "first_moment");
    const Check* jen = find_check(c3, "jensen");
    const std::string tag = "seed" + std::to_string(i);
    r.note(tag + "_moment_residual", mom ? mom->residual : INFINITY);
    r.note(tag + "_jensen_gap", jen ? jen->residual : INFINITY);
    r.require(c12.verdict == Status::kPass, tag + " thm12");
    r.require(supp && supp->status == Status::kPass, tag + " support");
    r.require(mom && mom->status == Status::kPass, tag + " first moment");
    r.require(jen && jen->status == Status::kPass, tag + " jensen (conclusive in 1D)");
  }
  return r.done();
}

Outcome determinism() {
  const fs::path dir = fs::path(INVYM_DATA_DIR) / "scenarios";
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(dir)) configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());
  Report r;
  int checked = 0;
  for (const fs::path& cfg : configs) {
    const std::string name = cfg.stem().string();
    const std::string command = name.substr(0, name.find('_'));
    const Scenario sc = load_scenario(cfg, command);
    std::vector<std::string> dumps;
    for (int threads : {1, 1, 4}) {
      set_thread_count(threads);
      dumps.push_back(execute(prepare(sc), sc).result.dump(2));
    }
    set_thread_count(1);
    r.require(dumps[0] == dumps[1] && dumps[0] == dumps[2], name);
    ++checked;
  }
  r.note("scenarios", checked);
  r.require(checked > 0, "no scenarios found");
  return r.done();
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;  // <= 0: no stated runtime bound
  Outcome (*run)();
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "hat relation identity", 1.0, hat_identity},
      {2, "truncation", 1.0, truncation},
      {3, "homogenization identity", 0.0, homogenization},
      {4, "generation convergence", 5.0, generation},
      {5, "1D oracle vs lamination", 10.0, oracle_vs_lamination},
      {6, "Jensen/Dirac sanity", 0.0, jensen_dirac},
      {7, "relaxation vs oracle", 30.0, relaxation},
      {8, "support and positivity", 2.0, support_and_det},
      {9, "certificate coherence", 0.0, certificate_coherence},
      {10, "determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const Error& e) {
      out = {false, e.kind() + ": " + e.what()};
    } catch (const std::exception& e) {
      out = {false, e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      out.pass = false;
      out.detail += " [failed: runtime budget]";
    }
    failures += out.pass ? 0 : 1;
    std::printf("criterion %2d %s  %s  (%.2fs)  %s\n", c.id, out.pass ? "PASS" : "FAIL", c.title,
                secs, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
