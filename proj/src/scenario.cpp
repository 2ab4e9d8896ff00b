#include "invym/scenario.hpp"

#include <algorithm>
#include <fstream>

#include "invym/certify.hpp"
#include "invym/error.hpp"
#include "invym/io.hpp"

namespace invym {
namespace {

const json kEmpty = json::object();

const json& section(const json& params, std::string_view key) {
  if (!params.contains(key)) return kEmpty;
  const json& s = params.at(std::string(key));
  if (!s.is_object()) throw InvalidArgument("'" + std::string(key) + "' must be an object");
  return s;
}

std::string get_string(const json& obj, std::string_view key) {
  if (!obj.contains(key)) throw InvalidArgument("missing required key '" + std::string(key) + "'");
  const json& v = obj.at(std::string(key));
  if (!v.is_string()) throw InvalidArgument("key '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

Mat get_matrix(const json& obj, std::string_view key) {
  if (!obj.contains(key)) throw InvalidArgument("missing required key '" + std::string(key) + "'");
  return mat_from_json(obj.at(std::string(key)));
}

int positive_int(const json& obj, std::string_view key, int fallback) {
  const int v = get_int(obj, key, fallback);
  if (v < 1) throw InvalidArgument("key '" + std::string(key) + "' must be >= 1");
  return v;
}

std::vector<double> number_list(const json& obj, std::string_view key) {
  if (!obj.contains(key)) throw InvalidArgument("missing required key '" + std::string(key) + "'");
  const json& arr = obj.at(std::string(key));
  if (!arr.is_array() || arr.empty()) {
    throw InvalidArgument("key '" + std::string(key) + "' must be a nonempty array");
  }
  std::vector<double> out;
  for (const json& v : arr) {
    if (!v.is_number()) throw InvalidArgument("key '" + std::string(key) + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<int> k_ladder(const json& obj) {
  std::vector<int> out;
  for (double k : number_list(obj, "k_ladder")) {
    if (k < 1 || k != static_cast<int>(k)) {
      throw InvalidArgument("k_ladder entries must be positive integers");
    }
    out.push_back(static_cast<int>(k));
  }
  return out;
}

NamedFn energy_of(const json& params) {
  const std::string name = get_string(params, "energy");
  const json& prm = section(params, "energy_params");
  return {name, named_test_function(name, prm)};
}

std::vector<NamedFn> battery_of(const json& obj, std::string_view key) {
  if (!obj.contains(key)) throw InvalidArgument("missing required key '" + std::string(key) + "'");
  const json& arr = obj.at(std::string(key));
  if (!arr.is_array() || arr.empty()) {
    throw InvalidArgument("key '" + std::string(key) + "' must be a nonempty array");
  }
  std::vector<NamedFn> out;
  for (const json& entry : arr) {
    require_known_keys(entry, {"name", "params"}, key);
    const std::string name = get_string(entry, "name");
    out.push_back({name, named_test_function(name, section(entry, "params"))});
  }
  return out;
}

std::vector<Mat> matrix_list(const json& obj, std::string_view key) {
  if (!obj.contains(key)) throw InvalidArgument("missing required key '" + std::string(key) + "'");
  const json& arr = obj.at(std::string(key));
  if (!arr.is_array() || arr.empty()) {
    throw InvalidArgument("key '" + std::string(key) + "' must be a nonempty array");
  }
  std::vector<Mat> out;
  for (const json& m : arr) out.push_back(mat_from_json(m));
  return out;
}

SequenceSpec laminate_spec(const json& obj, int k) {
  SequenceSpec spec{matrix_list(obj, "atoms"), number_list(obj, "weights"), k, std::nullopt};
  if (obj.contains("boundary")) {
    const json& b = section(obj, "boundary");
    require_known_keys(b, {"F", "ell", "epsilon"}, "boundary");
    spec.boundary = LaminateBoundary{get_matrix(b, "F"), positive_int(b, "ell", 8),
                                     get_number(b, "epsilon", 0.5)};
  }
  return spec;
}

EnvelopeJob prepare_envelope(const json& p) {
  require_known_keys(p, {"energy", "energy_params", "F", "rho_tilde", "method", "grid", "depth",
                         "mesh_cells", "iters"},
                     "envelope");
  EnvelopeJob job{energy_of(p),
                  get_string(p, "method"),
                  get_matrix(p, "F"),
                  get_number(p, "rho_tilde", 2.0),
                  positive_int(p, "grid", 10000),
                  get_int(p, "depth", 2),
                  positive_int(p, "mesh_cells", 64),
                  positive_int(p, "iters", 200)};
  if (job.method != "oracle1d" && job.method != "laminate" && job.method != "fe") {
    throw InvalidArgument("method must be one of oracle1d, laminate, fe");
  }
  if (job.method == "oracle1d" && job.F.dim() != 1) {
    throw InvalidArgument("oracle1d needs a scalar F");
  }
  return job;
}

RelaxJob prepare_relax(const json& p, std::uint64_t seed) {
  require_known_keys(p, {"energy", "energy_params", "F", "mesh", "p", "q", "rho_cap",
                         "positive_det", "atom_budget", "max_iters"},
                     "relax");
  const NamedFn energy = energy_of(p);
  const json& m = section(p, "mesh");
  require_known_keys(m, {"dim", "cells"}, "mesh");
  Mesh mesh(get_int(m, "dim", 1), get_int(m, "cells", 8));
  const Mat F = get_matrix(p, "F");
  if (F.dim() != mesh.dim()) throw InvalidArgument("F must match the mesh dimension");
  SupportConstraints support;
  if (p.contains("rho_cap")) support.rho_cap = get_number(p, "rho_cap");
  support.positive_det = get_bool(p, "positive_det", false);
  RelaxProblem prob{energy.fn,
                    mesh,
                    F,
                    get_number(p, "p", 2.0),
                    get_number(p, "q", 2.0),
                    support,
                    get_int(p, "atom_budget", 16),
                    positive_int(p, "max_iters", 30),
                    seed};
  return {energy.name, std::move(prob)};
}

GenerateJob prepare_generate(const json& p) {
  require_known_keys(p, {"atoms", "weights", "k_ladder", "boundary", "v_battery", "g_battery"},
                     "generate");
  GenerateJob job{laminate_spec(p, 1), k_ladder(p), battery_of(p, "v_battery"), {}};
  if (p.contains("g_battery")) {
    const json& g = p.at("g_battery");
    if (!g.is_array() || g.empty()) throw InvalidArgument("g_battery must be a nonempty array");
    for (const json& name : g) {
      if (!name.is_string()) throw InvalidArgument("g_battery entries must be names");
      job.g_battery.push_back(named_weight(name.get<std::string>()));
    }
  } else {
    job.g_battery.push_back(named_weight("1"));
  }
  job.spec.k = *std::max_element(job.k_ladder.begin(), job.k_ladder.end());
  return job;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

CertifyJob prepare_certify(const json& p, const std::filesystem::path& base_dir) {
  require_known_keys(p, {"checks", "field", "u_h", "p", "q", "positive_det", "rho", "rho_tilde",
                         "battery", "sequence", "epsilon", "cells"},
                     "certify");
  CertifyJob job;
  if (!p.contains("checks") || !p.at("checks").is_array() || p.at("checks").empty()) {
    throw InvalidArgument("'checks' must be a nonempty array");
  }
  for (const json& c : p.at("checks")) {
    const std::string name = c.is_string() ? c.get<std::string>() : "";
    if (name != "thm12" && name != "thm3" && name != "support" && name != "det") {
      throw InvalidArgument("checks must be drawn from thm12, thm3, support, det");
    }
    job.checks.push_back(name);
  }
  auto wants = [&](std::string_view c) {
    return std::find(job.checks.begin(), job.checks.end(), c) != job.checks.end();
  };
  job.p = get_number(p, "p", 2.0);
  job.q = get_number(p, "q", 2.0);
  job.positive_det = get_bool(p, "positive_det", false);
  job.rho = get_number(p, "rho", 2.0);
  job.rho_tilde = get_number(p, "rho_tilde", job.rho + 1.0);
  job.cells = positive_int(p, "cells", 1);

  if (p.contains("field")) {
    const json& f = p.at("field");
    job.field = field_from_json(f.is_string() ? load_json_file(base_dir / f.get<std::string>()) : f);
  } else if (wants("thm12") || wants("thm3")) {
    throw InvalidArgument("thm12 and thm3 need a 'field'");
  }
  if (p.contains("u_h")) {
    job.u_h = deformation_from_json(p.at("u_h"));
  } else if (wants("thm3")) {
    throw InvalidArgument("thm3 needs 'u_h'");
  }
  if (wants("thm3")) job.battery = battery_of(p, "battery");

  if (p.contains("sequence")) {
    const json& s = section(p, "sequence");
    const std::string family = get_string(s, "family");
    if (family == "laminate") {
      require_known_keys(s, {"family", "atoms", "weights", "k_ladder", "boundary"}, "sequence");
      for (int k : k_ladder(s)) job.sequence.push_back(build_laminate_sequence(laminate_spec(s, k)));
    } else if (family == "inverse_slope") {
      require_known_keys(s, {"family", "k_ladder"}, "sequence");
      for (int k : k_ladder(s)) job.sequence.push_back(inverse_slope_field(k));
    } else {
      throw InvalidArgument("sequence family must be laminate or inverse_slope");
    }
  } else if (wants("support") || wants("det")) {
    throw InvalidArgument("support and det need a 'sequence'");
  }
  if (wants("support")) job.epsilon = number_list(p, "epsilon");
  return job;
}

std::vector<TestFn> fns(const std::vector<NamedFn>& named) {
  std::vector<TestFn> out;
  for (const NamedFn& n : named) out.push_back(n.fn);
  return out;
}

json names(const std::vector<NamedFn>& named) {
  json out = json::array();
  for (const NamedFn& n : named) out.push_back(n.name);
  return out;
}

RunOutput run_envelope(const EnvelopeJob& job) {
  EnvelopeEstimate est =
      job.method == "oracle1d" ? qinv_oracle_1d(job.energy.fn, job.F(0, 0), job.rho_tilde, job.grid)
      : job.method == "laminate"
          ? qinv_laminate_upper(job.energy.fn, job.F, job.rho_tilde, job.depth)
          : qinv_fe_upper(job.energy.fn, job.F, job.mesh_cells, job.rho_tilde, job.iters);
  RunOutput out;
  out.result = estimate_to_json(est);
  out.result["energy"] = job.energy.name;
  if (est.witness_measure) out.files.emplace_back("witness.csv", measure_csv(*est.witness_measure));
  if (est.witness_field) {
    out.files.emplace_back("witness.csv", gradient_field_csv(*est.witness_field));
  }
  return out;
}

RunOutput run_relax(const RelaxJob& job) {
  const RelaxSolution sol = relax_solve(job.problem);
  RunOutput out;
  out.result = relax_to_json(sol, job.problem.p, job.problem.q);
  out.result["energy_name"] = job.energy_name;
  out.files.emplace_back("u_h.csv", gradient_field_csv(sol.u_h));
  out.files.emplace_back("field.csv", field_csv(sol.field));
  return out;
}

RunOutput run_generate(const GenerateJob& job) {
  const GenerationReport report =
      verify_generation(job.spec, fns(job.v_battery), job.g_battery, job.k_ladder);
  RunOutput out;
  out.result = generation_to_json(report);
  out.result["k_ladder"] = job.k_ladder;
  out.files.emplace_back("laminate.csv", gradient_field_csv(build_laminate_sequence(job.spec)));
  return out;
}

RunOutput run_certify(const CertifyJob& job) {
  json certs = json::array();
  bool any_fail = false;
  bool any_inconclusive = false;
  for (const std::string& c : job.checks) {
    Certificate cert;
    if (c == "thm12") {
      cert = check_thm12(*job.field, job.p, job.q, job.positive_det);
    } else if (c == "thm3") {
      cert = check_thm3(*job.field, *job.u_h, job.rho, fns(job.battery), job.rho_tilde);
      cert.data["battery"] = names(job.battery);
    } else if (c == "support") {
      cert = check_support_from_sequence(job.sequence, job.epsilon, job.q);
    } else {
      cert = check_det_limit(job.sequence, job.p, job.cells);
    }
    any_fail = any_fail || cert.verdict == Status::kFail;
    any_inconclusive = any_inconclusive || cert.verdict == Status::kInconclusive;
    certs.push_back(certificate_to_json(cert));
  }
  const Status verdict = any_fail           ? Status::kFail
                         : any_inconclusive ? Status::kInconclusive
                                            : Status::kPass;
  RunOutput out;
  out.result = {{"certificates", certs}, {"verdict", to_string(verdict)}};
  return out;
}

}  // namespace

Scenario parse_scenario(const json& config, std::string_view command,
                        const std::filesystem::path& base_dir) {
  try {
    require_known_keys(config, {"command", "seed", "output_dir", "params"}, "config");
    if (!config.is_object()) throw InvalidArgument("config must be a JSON object");
    Scenario s;
    s.command = std::string(command);
    if (config.contains("command") && get_string(config, "command") != command) {
      throw InvalidArgument("config is for command '" + get_string(config, "command") + "'");
    }
    if (config.contains("seed")) {
      const json& seed = config.at("seed");
      if (!seed.is_number_integer() || seed.get<std::int64_t>() < 0) throw InvalidArgument("seed must be a nonnegative integer");
      s.seed = seed.get<std::uint64_t>();
    }
    if (config.contains("output_dir")) s.output_dir = get_string(config, "output_dir");
    s.params = section(config, "params");
    s.base_dir = base_dir;
    return s;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& config_path, std::string_view command) {
  return parse_scenario(load_json_file(config_path), command, config_path.parent_path());
}

Job prepare(const Scenario& s) {
  try {
    if (s.command == "envelope") return prepare_envelope(s.params);
    if (s.command == "relax") return prepare_relax(s.params, s.seed);
    if (s.command == "generate") return prepare_generate(s.params);
    if (s.command == "certify") return prepare_certify(s.params, s.base_dir);
    throw ConfigError("unknown command '" + s.command + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.kind() + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
}

WeightFn named_weight(std::string_view name) {
  if (name == "1") return {"1", [](const Point&) { return 1.0; }};
  if (name == "x") return {"x", [](const Point& x) { return x[0]; }};
  if (name == "y") return {"y", [](const Point& x) { return x[1]; }};
  if (name == "xy") return {"xy", [](const Point& x) { return x[0] * x[1]; }};
  throw InvalidArgument("unknown weight '" + std::string(name) + "' (use 1, x, y, xy)");
}

GradientField inverse_slope_field(int k) {
  if (k < 1) throw InvalidArgument("inverse_slope_field needs k >= 1");
  const double a = 1.0 / k;
  return GradientField(1, {GradientField::interval_piece(0.0, 0.5, Mat::scalar(a), Vec{0.0}),
                           GradientField::interval_piece(0.5, 1.0, Mat::scalar(1.0),
                                                         Vec{0.5 * a - 0.5})});
}

RunOutput execute(const Job& job, const Scenario& scenario) {
  RunOutput out = std::visit(
      [](const auto& j) {
        using T = std::decay_t<decltype(j)>;
        if constexpr (std::is_same_v<T, EnvelopeJob>) return run_envelope(j);
        if constexpr (std::is_same_v<T, RelaxJob>) return run_relax(j);
        if constexpr (std::is_same_v<T, GenerateJob>) return run_generate(j);
        if constexpr (std::is_same_v<T, CertifyJob>) return run_certify(j);
      },
      job);
  out.result = {{"schema", kResultSchema},
                {"command", scenario.command},
                {"seed", scenario.seed},
                {"result", std::move(out.result)}};
  return out;
}

}  // namespace invym
