#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "invym/envelope.hpp"
#include "invym/field.hpp"
#include "invym/json_util.hpp"
#include "invym/laminate.hpp"
#include "invym/relax.hpp"
#include "invym/testfn.hpp"

namespace invym {

inline constexpr int kResultSchema = 1;

// Top-level config: {"command"?, "seed"?, "output_dir"?, "params"}. A
// "command" present in the file must match the subcommand.
struct Scenario {
  std::string command;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  json params = json::object();
  std::filesystem::path base_dir;  // directory of the config file
};

// Reads and validates the top-level layout. Throws ConfigError on unreadable
// files, malformed JSON or unknown keys.
Scenario load_scenario(const std::filesystem::path& config_path, std::string_view command);
Scenario parse_scenario(const json& config, std::string_view command,
                        const std::filesystem::path& base_dir);

struct NamedFn {
  std::string name;
  TestFn fn;
};

struct EnvelopeJob {
  NamedFn energy;
  std::string method;  // oracle1d, laminate or fe
  Mat F;
  double rho_tilde = 2.0;
  int grid = 10000;
  int depth = 2;
  int mesh_cells = 64;
  int iters = 200;
};

struct RelaxJob {
  std::string energy_name;
  RelaxProblem problem;
};

struct GenerateJob {
  SequenceSpec spec;
  std::vector<int> k_ladder;
  std::vector<NamedFn> v_battery;
  std::vector<WeightFn> g_battery;
};

struct CertifyJob {
  std::vector<std::string> checks;  // thm12, thm3, support, det
  std::optional<YoungMeasureField> field;
  std::optional<GradientField> u_h;
  double p = 2.0;
  double q = 2.0;
  bool positive_det = false;
  double rho = 2.0;
  double rho_tilde = 3.0;
  std::vector<NamedFn> battery;
  std::vector<GradientField> sequence;
  std::vector<double> epsilon;
  int cells = 1;
};

using Job = std::variant<EnvelopeJob, RelaxJob, GenerateJob, CertifyJob>;

// Builds a typed job from the scenario params. Every config problem,
// including unknown energies, is reported as ConfigError.
Job prepare(const Scenario& scenario);

// Weight functions on the unit square: "1", "x", "y", "xy".
WeightFn named_weight(std::string_view name);

// 1D field with slope 1/k on [0, 1/2) and slope 1 on [1/2, 1].
GradientField inverse_slope_field(int k);

struct RunOutput {
  json result;  // carries "schema", "command" and "seed"
  std::vector<std::pair<std::string, std::string>> files;  // CSV name, contents
};

// Runs the job. Module errors propagate with their own kind.
RunOutput execute(const Job& job, const Scenario& scenario);

}  // namespace invym
