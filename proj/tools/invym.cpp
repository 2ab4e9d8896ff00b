// Scenario runner: invym <envelope|relax|generate|certify> --config FILE
//   [--seed N] [--threads N] [--out DIR]
// Logging level from INVYM_LOG (error, info, debug).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <spdlog/version.h>

#include "invym/error.hpp"
#include "invym/parallel.hpp"
#include "invym/scenario.hpp"

namespace fs = std::filesystem;
using invym::json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<std::string> out;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("invym");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("INVYM_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") spdlog::warn("INVYM_LOG='{}' not recognised, using info", level);
  }
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

json manifest(const std::string& command, const Options& opt, std::uint64_t seed,
              const json& timings, const json& files, const std::string& status) {
  return {{"schema", invym::kResultSchema},
          {"tool", {{"name", "invym"}, {"version", INVYM_VERSION}}},
          {"libraries",
           {{"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"spdlog", std::to_string(SPDLOG_VER_MAJOR) + "." + std::to_string(SPDLOG_VER_MINOR) +
                           "." + std::to_string(SPDLOG_VER_PATCH)},
            {"CLI11", CLI11_VERSION}}},
          {"compiler", __VERSION__},
          {"command", command},
          {"config", opt.config},
          {"seed", seed},
          {"threads", opt.threads},
          {"timings_seconds", timings},
          {"files", files},
          {"status", status}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run(const std::string& command, const Options& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  invym::Scenario scenario;
  std::optional<invym::Job> job;
  try {
    scenario = invym::load_scenario(opt.config, command);
    if (opt.seed) scenario.seed = *opt.seed;
    if (opt.out) scenario.output_dir = *opt.out;
    job = invym::prepare(scenario);
  } catch (const invym::ConfigError& e) {
    spdlog::error("ConfigError: {}", e.what());
    return 2;
  }
  const double parse_s = seconds_since(t0);
  spdlog::info("{}: seed {}, {} thread(s), output {}", command, scenario.seed, opt.threads,
               scenario.output_dir);

  const auto t1 = std::chrono::steady_clock::now();
  invym::RunOutput output;
  std::string status = "ok";
  int code = 0;
  try {
    output = invym::execute(*job, scenario);
  } catch (const invym::Error& e) {
    spdlog::error("{}: {}", e.kind(), e.what());
    status = e.kind();
    code = 1;
    output.result = {{"schema", invym::kResultSchema},
                     {"command", scenario.command},
                     {"seed", scenario.seed},
                     {"error", {{"kind", e.kind()}, {"message", e.what()}}}};
  }
  const double run_s = seconds_since(t1);

  const auto t2 = std::chrono::steady_clock::now();
  const fs::path dir(scenario.output_dir);
  fs::create_directories(dir);
  json files = json::array({"result.json"});
  write_file(dir / "result.json", output.result.dump(2) + "\n");
  for (const auto& [name, contents] : output.files) {
    write_file(dir / name, contents);
    files.push_back(name);
  }
  const json timings{{"parse", parse_s}, {"run", run_s}, {"write", seconds_since(t2)}};
  write_file(dir / "manifest.json",
             manifest(command, opt, scenario.seed, timings, files, status).dump(2) + "\n");
  spdlog::info("wrote {} file(s) to {} in {:.3f} s", files.size() + 1, dir.string(),
               seconds_since(t0));
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Invertibility-constrained Young measure toolkit"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  std::string out;
  for (const char* name : {"envelope", "relax", "generate", "certify"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run a ") + name + " scenario");
    sub->add_option("--config", opt.config, "scenario JSON file")->required();
    sub->add_option("--seed", seed, "seed overriding the config");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1, 256));
    sub->add_option("--out", out, "output directory overriding the config");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed") > 0) opt.seed = seed;
  if (sub->count("--out") > 0) opt.out = out;
  invym::set_thread_count(opt.threads);
  try {
    return run(sub->get_name(), opt);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
