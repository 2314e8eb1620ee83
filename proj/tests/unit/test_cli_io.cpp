#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "impa/cli_io.hpp"

using Catch::Approx;
using namespace impa;
using namespace impa::cli;
namespace fs = std::filesystem;

namespace {

bool has_kind(const std::function<void()>& fn, ErrorKind kind) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("impa_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + IMPA_CLI_PATH + "\" " + args + " > \"" +
                          out.string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, io::read_file(out), io::read_file(err)};
}

}  // namespace

TEST_CASE("Defaults describe the reference device", "[cli][config]") {
  const ProjectConfig config;
  const auto spec = config.taper_spec();
  CHECK(spec.z_source == 50.0);
  CHECK(spec.z_load == 18.0);
  CHECK(spec.eps_eff == Approx(6.45));
  const auto r = config.resonator();
  CHECK(r.pump_frequency == Approx(2.0 * paramp::resonant_frequency(r)));
  CHECK(config.grid().size() == 2001);
}

TEST_CASE("Unknown keys and wrong types are rejected", "[cli][config]") {
  CHECK(has_kind([] { ProjectConfig::parse(R"({"taper": {"zsource": 50}})"); }, ErrorKind::ConfigError));
  CHECK(has_kind([] { ProjectConfig::parse(R"({"extra": 1})"); }, ErrorKind::ConfigError));
  CHECK(has_kind([] { ProjectConfig::parse(R"({"taper": {"z_load": "18"}})"); }, ErrorKind::ConfigError));
  CHECK(has_kind([] { ProjectConfig::parse(R"({"taper": 3})"); }, ErrorKind::ConfigError));
  CHECK(has_kind([] { ProjectConfig::parse("{not json"); }, ErrorKind::ConfigError));
  CHECK(has_kind([] { ProjectConfig::parse(R"({"grid": {"points": 2.5}})").grid(); },
                 ErrorKind::ConfigError));
}

TEST_CASE("Dotted overrides patch the document", "[cli][config]") {
  auto config = ProjectConfig::parse(R"({"taper": {"z_load": 20}})");
  CHECK(config.taper_spec().z_load == 20.0);
  config.set("taper.f_cutoff=4e9");
  CHECK(config.taper_spec().f_cutoff == 4e9);
  config.set("environment.kind=constant");
  CHECK(config.text("environment", "kind") == "constant");
  config.set("taper.eps_eff=7.0");
  CHECK(config.taper_spec().eps_eff == 7.0);
  CHECK(has_kind([&] { config.set("taper.nope=1"); }, ErrorKind::ConfigError));
  CHECK(has_kind([&] { config.set("taper.z_load"); }, ErrorKind::ConfigError));
  CHECK(has_kind([&] { config.set("taper.z_load=abc"); }, ErrorKind::ConfigError));
}

TEST_CASE("FitResult JSON layout", "[cli][json]") {
  calibrate::FitResult fit;
  fit.params.push_back({"attenuation", "dB", 70.0, 0.01});
  fit.params.push_back({"chi", "rad/s", 1.0, std::nullopt});
  fit.residual_norm = 0.5;
  fit.converged = true;
  fit.iterations = 3;
  const auto j = fit_result_json(fit);
  CHECK(j["params"]["attenuation"]["value"] == 70.0);
  CHECK(j["params"]["attenuation"]["unit"] == "dB");
  CHECK(j["params"]["chi"]["stderr"].is_null());
  CHECK(j["converged"] == true);
  CHECK(j["iterations"] == 3);
  CHECK(number_json(1.0 / 3.0).get<double>() == std::stod("0.333333333333"));
}

TEST_CASE("design-taper writes profile and summary", "[cli][command]") {
  const auto dir = scratch("design");
  auto config = ProjectConfig{};
  config.set("output_dir=\"" + dir.string() + "\"");
  const auto summary = cmd_design_taper(config);
  CHECK(summary["ripple_parameter"].get<double>() == Approx(1.059).margin(1e-3));
  const auto csv = io::read_csv(dir / "taper_profile.csv");
  CHECK(csv.header == std::vector<std::string>{"z_m", "impedance_ohm", "width_m"});
  CHECK(csv.rows.size() == 401);
  CHECK(fs::exists(dir / "taper_summary.json"));

  auto half = config;
  half.set("taper.f_cutoff=4e9");
  const auto s4 = cmd_design_taper(half);
  CHECK(s4["length_m"].get<double>() ==
        Approx(summary["length_m"].get<double>() / 2.0).epsilon(1e-11));
}

TEST_CASE("simulate-sparams writes Touchstone and dB CSV", "[cli][command]") {
  const auto dir = scratch("sparams");
  auto config = ProjectConfig{};
  config.set("output_dir=\"" + dir.string() + "\"");
  config.set("grid.f_start_hz=2e9");
  config.set("grid.points=201");
  const auto report = cmd_simulate_sparams(config);
  CHECK(report["max_s11_db_above_cutoff"].get<double>() <= -9.5);
  const auto data = network::read_touchstone(dir / "taper.s2p");
  CHECK(data.s.size() == 201);
  CHECK(data.z_ref1 == 50.0);
  const auto csv = io::read_csv(dir / "sparams_db.csv");
  CHECK(csv.header == std::vector<std::string>{"freq_hz", "s11_db", "s21_db"});
  config.set("network.port_refs=sideways");
  CHECK(has_kind([&] { cmd_simulate_sparams(config); }, ErrorKind::ConfigError));
}

TEST_CASE("gain reports both models", "[cli][command]") {
  const auto dir = scratch("gain");
  auto config = ProjectConfig{};
  config.set("output_dir=\"" + dir.string() + "\"");
  config.set("gain.points=201");
  const auto report = cmd_gain(config);
  CHECK(report["rwa"]["peak_gain_db"].get<double>() == Approx(20.0).margin(1e-6));
  CHECK(report["embedded"]["peak_gain_db"].get<double>() == Approx(20.0).margin(1e-6));
  CHECK(report["embedded"]["bandwidth_hz"]["15"].is_number());
  CHECK(report.contains("embedded_constant_impedance"));
  const auto csv = io::read_csv(dir / "gain_embedded.csv");
  CHECK(csv.header == std::vector<std::string>{"freq_hz", "gain_db", "idler_gain_db"});
  CHECK(csv.rows.size() == 201);

  config.set("gain.target_peak_db=null");
  config.set("resonator.pump_amplitude=0");
  config.set("environment.kind=constant");
  const auto unpumped = cmd_gain(config);
  CHECK(unpumped["rwa"]["peak_gain_db"].get<double>() == Approx(0.0).margin(1e-9));
  CHECK(unpumped["embedded"]["peak_gain_db"].get<double>() == Approx(0.0).margin(1e-9));
  CHECK(unpumped["rwa"]["bandwidth_hz"]["15"].is_null());
}

TEST_CASE("tune-curve and noise commands", "[cli][command]") {
  const auto dir = scratch("misc");
  auto config = ProjectConfig{};
  config.set("output_dir=\"" + dir.string() + "\"");
  const auto tune = cmd_tune_curve(config);
  CHECK(tune["max_freq_hz"].get<double>() == Approx(9.58e9).epsilon(1e-3));
  CHECK(io::read_csv(dir / "tuning_curve.csv").rows.size() == 91);
  config.set("noise.snr_improvement_db=9.0");
  config.set("noise.t_first_stage_k=0.3");
  const auto n = cmd_noise(config);
  CHECK(n["quantum_limit_k"].get<double>() == Approx(0.159).margin(1e-3));
  CHECK(n["noise_temperature_k"][0].get<double>() < n["noise_temperature_k"][1].get<double>());
}

TEST_CASE("fit commands read CSV data", "[cli][command]") {
  const auto dir = scratch("fit");
  auto config = ProjectConfig{};
  config.set("output_dir=\"" + dir.string() + "\"");

  std::string sweep = "bias,freq_hz\n";
  for (int i = 0; i <= 40; ++i) {
    const double bias = -0.55 + 0.025 * i;
    const double f = 3.14159265358979 * (0.8 * bias + 0.05);
    sweep += io::format_number(bias) + "," +
             io::format_number(1.0 / (2 * 3.14159265358979 * std::sqrt(4e-12 * 69e-12 / std::abs(std::cos(f))))) + "\n";
  }
  io::write_file_atomic(dir / "sweep.csv", sweep);
  const auto tuning = cmd_fit(config, "tuning", dir / "sweep.csv");
  CHECK(tuning["params"]["josephson_inductance"]["value"].get<double>() == Approx(69e-12).epsilon(1e-6));
  CHECK(fs::exists(dir / "fit_tuning.json"));

  io::write_file_atomic(dir / "pairs.csv", "p_source_dbm,p_device_dbm\n-10,-80\n-20,-90\n");
  CHECK(cmd_fit(config, "attenuation", dir / "pairs.csv")["params"]["attenuation"]["value"] == 70.0);

  io::write_file_atomic(dir / "comp.csv", "p_in_dbm,gain_db\n-130,20\n-120,20\n-110,19\n-100,17\n");
  CHECK(cmd_fit(config, "compression", dir / "comp.csv")["params"]["p1db"]["value"] == -110.0);

  std::string stark = "power_dbm,delta_ac_hz,gamma_phi_hz\n";
  const double kappa = 2 * 3.14159265358979 * 309e3;
  const double chi = 2 * 3.14159265358979 * 0.2e6;
  for (double n : {1.0, 2.0, 4.0})
    stark += io::format_number(10 * std::log10(n)) + "," + io::format_number(2 * chi * n / (2 * 3.14159265358979)) +
             "," + io::format_number(8 * chi * chi * n / kappa) + "\n";
  io::write_file_atomic(dir / "stark.csv", stark);
  const auto s = cmd_fit(config, "stark", dir / "stark.csv");
  CHECK(s["rows"][1]["n_bar"].get<double>() == Approx(2.0).epsilon(1e-9));

  std::string trace = "freq_hz,re_s11,im_s11\n";
  for (int i = 0; i <= 200; ++i) {
    const double f = 6.633e9 - 3e6 + 30e3 * i;
    const auto v = calibrate::reflection_model(f * 1e-9, 6.633, 250e-6, 59e-6);
    trace += io::format_number(f) + "," + io::format_number(v.real()) + "," + io::format_number(v.imag()) + "\n";
  }
  io::write_file_atomic(dir / "trace.csv", trace);
  const auto res = cmd_fit(config, "resonance", dir / "trace.csv");
  CHECK(res["params"]["kappa_total"]["value"].get<double>() == Approx(309e3).epsilon(1e-6));

  CHECK(has_kind([&] { cmd_fit(config, "tuning", dir / "missing.csv"); }, ErrorKind::IoError));
  CHECK(has_kind([&] { cmd_fit(config, "bogus", dir / "pairs.csv"); }, ErrorKind::ConfigError));
}

TEST_CASE("Executable exit codes and error JSON", "[cli][process]") {
  const auto dir = scratch("process");
  const auto ok = run_cli("design-taper -o \"" + (dir / "out").string() + "\"", dir);
  CHECK(ok.exit_code == 0);
  CHECK(json::parse(ok.out)["ripple_parameter"].get<double>() == Approx(1.059).margin(1e-3));

  const auto infeasible = run_cli("design-taper --set taper.gamma_max=0.9 -o \"" + dir.string() + "\"", dir);
  CHECK(infeasible.exit_code == 2);
  CHECK(json::parse(infeasible.err)["error"]["kind"] == "DesignInfeasible");

  const auto unknown = run_cli("design-taper --set taper.colour=1", dir);
  CHECK(unknown.exit_code == 2);
  CHECK(json::parse(unknown.err)["error"]["kind"] == "ConfigError");

  const auto missing = run_cli("design-taper -c \"" + (dir / "nope.json").string() + "\"", dir);
  CHECK(missing.exit_code == 3);
  CHECK(json::parse(missing.err)["error"]["kind"] == "IoError");

  io::write_file_atomic(dir / "blocker", "file");
  const auto unwritable = run_cli("tune-curve -o \"" + (dir / "blocker" / "sub").string() + "\"", dir);
  CHECK(unwritable.exit_code == 3);

  const auto empty = run_cli("fit attenuation \"" + (dir / "one.csv").string() + "\"", dir);
  CHECK(empty.exit_code == 3);
  io::write_file_atomic(dir / "one.csv", "p_source_dbm,p_device_dbm\n0,-70\n");
  const auto degenerate = run_cli("fit attenuation \"" + (dir / "one.csv").string() + "\" -o \"" + dir.string() + "\"", dir);
  CHECK(degenerate.exit_code == 2);
  CHECK(json::parse(degenerate.err)["error"]["kind"] == "DegenerateData");
}

TEST_CASE("Repeated runs are byte identical", "[cli][process]") {
  const auto dir = scratch("determinism");
  for (const char* run : {"a", "b"}) {
    const std::string out = "-o \"" + (dir / run).string() + "\" --set gain.points=201";
    for (const char* cmd : {"design-taper", "simulate-sparams", "gain", "tune-curve", "noise"})
      REQUIRE(run_cli(std::string(cmd) + " " + out, dir).exit_code == 0);
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto other = dir / "b" / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(io::read_file(entry.path()) == io::read_file(other));
    ++compared;
  }
  CHECK(compared >= 9);
}
