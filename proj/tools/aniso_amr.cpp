#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "aniso/error.hpp"
#include "aniso/experiments.hpp"
#include "json.hpp"

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, solver_failure = 3 };

struct Flags {
  std::string config;
  std::string out;
  int threads = 0;
  bool deterministic = false;
};

aniso::ExperimentConfig load(const Flags& f, aniso::ExperimentKind kind) {
  std::ifstream in(f.config);
  if (!in) throw aniso::ConfigError("cannot read config '" + f.config + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw aniso::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw aniso::ConfigError("config: expected an object");
  if (!f.out.empty()) j["output"] = f.out;
  if (f.threads > 0) j["threads"] = f.threads;
  if (f.deterministic) j["deterministic"] = true;
  return aniso::ExperimentConfig::from_json_text(j.dump(), kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic diffusion FEM with adaptive refinement: experiment harness"};
  app.set_version_flag("--version", std::string(aniso::kVersion));
  app.require_subcommand(1);

  Flags flags;
  const std::pair<const char*, aniso::ExperimentKind> commands[] = {
      {"verify", aniso::ExperimentKind::verify},
      {"efficiency", aniso::ExperimentKind::efficiency},
      {"iterations", aniso::ExperimentKind::iterations},
      {"scaling", aniso::ExperimentKind::scaling},
      {"run", aniso::ExperimentKind::single_run},
  };
  const char* help[] = {
      "layer-norm convergence sweep on uniform meshes",
      "refinement traces per strategy",
      "CG iteration and condition study",
      "element-count recursion, cost model and dof-trace fits",
      "single adaptive solve with a VTK dump of the final iterate",
  };
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* s = app.add_subcommand(commands[i].first, help[i]);
    s->add_option("--config", flags.config, "experiment JSON config")->required();
    s->add_option("--out", flags.out, "output directory (overrides the config)");
    s->add_option("--threads", flags.threads, "worker threads (overrides the config)")
        ->check(CLI::PositiveNumber);
    s->add_flag("--deterministic", flags.deterministic, "omit wall-time columns");
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  aniso::ExperimentKind kind = aniso::ExperimentKind::single_run;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) kind = commands[i].second;
  }
  try {
    const auto cfg = load(flags, kind);
    for (const auto& path : aniso::run_experiment(cfg)) std::cout << path.string() << "\n";
    return ok;
  } catch (const aniso::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const aniso::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return solver_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure;
  }
}
