// Command-line front end: design, simulate, gain, tuning, fitting and noise workflows.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "impa/cli_io.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
};

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("-c,--config", common.config_path, "Project configuration JSON");
  cmd->add_option("--set", common.overrides, "Override a config value, e.g. taper.f_cutoff=4e9");
  cmd->add_option("-o,--output-dir", common.output_dir, "Directory for output files");
}

impa::cli::ProjectConfig build_config(const CommonOptions& common) {
  auto config = common.config_path.empty() ? impa::cli::ProjectConfig{}
                                           : impa::cli::ProjectConfig::load(common.config_path);
  for (const auto& assignment : common.overrides) config.set(assignment);
  if (!common.output_dir.empty())
    config.set("output_dir=" + impa::cli::json(common.output_dir).dump());
  return config;
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << impa::cli::error_json(kind, message).dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace impa::cli;

  CLI::App app{"Impedance-matched parametric amplifier design and analysis toolkit"};
  app.require_subcommand(1);
  CommonOptions common;

  auto* design = app.add_subcommand("design-taper", "Synthesize the Klopfenstein taper profile");
  auto* sparams = app.add_subcommand("simulate-sparams", "Cascade the taper and export S-parameters");
  auto* gain = app.add_subcommand("gain", "Lumped and embedded parametric gain sweeps");
  auto* tune = app.add_subcommand("tune-curve", "Resonance frequency versus flux bias");
  auto* noise = app.add_subcommand("noise", "Noise temperature and photon power report");
  auto* fit = app.add_subcommand("fit", "Fit measured or synthetic data");
  for (auto* cmd : {design, sparams, gain, tune, noise}) add_common(cmd, common);

  std::string fit_kind;
  std::string data_path;
  add_common(fit, common);
  fit->add_option("kind", fit_kind, "tuning|resonance|stark|attenuation|compression")
      ->required()
      ->check(CLI::IsMember({"tuning", "resonance", "stark", "attenuation", "compression"}));
  fit->add_option("data", data_path, "CSV data file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("UsageError", e.what(), 2);
  }

  try {
    const auto config = build_config(common);
    json report;
    if (*design) report = cmd_design_taper(config);
    else if (*sparams) report = cmd_simulate_sparams(config);
    else if (*gain) report = cmd_gain(config);
    else if (*tune) report = cmd_tune_curve(config);
    else if (*noise) report = cmd_noise(config);
    else report = cmd_fit(config, fit_kind, data_path);
    std::cout << dump(report);
    return 0;
  } catch (const impa::Error& e) {
    std::string message = e.what();
    const std::string prefix = std::string(impa::kind_name(e.kind())) + ": ";
    if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
    return fail(std::string(impa::kind_name(e.kind())), message, exit_code(e.kind()));
  } catch (const std::exception& e) {
    return fail("InternalError", e.what(), 2);
  }
}
