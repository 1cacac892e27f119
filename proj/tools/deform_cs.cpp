#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "deform_cs/cli_runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Deformations of structure constants: flows, maps and residual checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dcs::kToolVersion));

  std::string scenario;
  std::string out_dir = ".";
  std::optional<double> step;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "Run a scenario and write CSV tables plus report.json");
  run->add_option("scenario", scenario, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--step", step, "Override the integration step");
  run->add_flag("--quiet", quiet, "Print nothing on success");

  std::string to_validate;
  CLI::App* validate = app.add_subcommand("validate", "Parse and validate a scenario without running it");
  validate->add_option("scenario", to_validate, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dcs::kExitInvalid;
  }

  if (*validate) {
    try {
      dcs::load_scenario(to_validate);
    } catch (const dcs::InvalidInput& e) {
      std::cerr << "deform-cs: " << e.what() << '\n';
      return dcs::kExitInvalid;
    }
    std::cout << "ok\n";
    return dcs::kExitOk;
  }

  const dcs::RunOutcome outcome = dcs::run(scenario, out_dir, step);
  if (outcome.exit_code == dcs::kExitInvalid) {
    std::cerr << "deform-cs: " << outcome.message << '\n';
  } else if (outcome.exit_code == dcs::kExitSingular) {
    std::cerr << "deform-cs: " << outcome.message << '\n';
  } else if (!quiet) {
    std::cout << outcome.message << ": " << (std::filesystem::path(out_dir) / "report.json").string() << '\n';
  }
  return outcome.exit_code;
}
