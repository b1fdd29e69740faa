#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anosov/experiments.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string fixture;
  double epsilon = 0.0;
  bool epsilon_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
};

void add_common(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "Scenario file (JSON)");
  cmd->add_option("--out", flags.out, "Output directory (overrides output_dir)");
  cmd->add_option("--fixture", flags.fixture, "Fixture name (overrides fixture.name)");
  cmd->add_option_function<double>(
      "--epsilon", [&flags](double e) { flags.epsilon = e, flags.epsilon_set = true; }, "Perturbation size");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&flags](std::uint64_t s) { flags.seed = s, flags.seed_set = true; }, "Random seed");
  cmd->add_option("--threads", flags.threads, "Worker threads (default 1, 0 = hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
}

int run(const std::string& verb, const Flags& flags) {
  anosov::Scenario scenario = flags.config.empty() ? anosov::Scenario{} : anosov::load_scenario(flags.config);
  if (!flags.out.empty()) scenario.output_dir = flags.out;
  if (!flags.fixture.empty()) {
    scenario.fixture = anosov::FixtureConfig{};
    scenario.fixture.name = flags.fixture;
  }
  if (flags.epsilon_set) scenario.fixture.epsilon = flags.epsilon;
  if (flags.seed_set) scenario.seed = flags.seed;
  anosov::set_thread_count(flags.threads);

  std::vector<std::string> stages;
  if (verb == "all") {
    stages = scenario.stages;
    if (scenario.dichotomy && std::find(stages.begin(), stages.end(), "dichotomy") == stages.end()) {
      stages.push_back("dichotomy");
    }
  } else {
    stages = {verb};
  }
  const anosov::RunReport report = anosov::run_scenario(scenario, stages);
  for (const auto& [key, value] : report.summary) std::cout << key << ": " << value << '\n';
  for (const auto& f : report.findings) std::cout << "finding: " << f << '\n';
  if (!report.error.empty()) std::cerr << "error: " << report.error << '\n';
  std::cout << "output: " << scenario.output_dir << '\n';
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on toral Anosov maps"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> verbs{
      {"analyze", "Linear model, periodic counts and preimage covering radii"},
      {"certify", "Cone-field hyperbolicity certificate"},
      {"conjugacy", "Conjugacy series, specialness defect and deep-translation decay"},
      {"orbits", "Periodic orbits and their stable Lyapunov exponents"},
      {"branches", "Unstable directions along inverse-limit branches"},
      {"metric", "Livschitz coboundary, affine leaf metric and isometry checks"},
      {"dichotomy", "Sweep a fixture family over epsilon and compare verdicts"},
      {"all", "Every stage listed in the config"}};
  for (const auto& [name, help] : verbs) add_common(app.add_subcommand(name, help), flags);
  CLI11_PARSE(app, argc, argv);

  try {
    return run(app.get_subcommands().front()->get_name(), flags);
  } catch (const anosov::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
