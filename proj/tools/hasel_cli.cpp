// hasel_cli: characterization sweeps, grasp presets, detection batches and
// offline replay for the simulated HASEL hand.
//
// Exit codes: 0 ok, 2 config/schema/data error, 3 model inconsistency,
// 4 calibration failure, 5 batch finished with misclassifications.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hasel/commands.hpp"
#include "hasel/errors.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitModel = 3;
constexpr int kExitCalibration = 4;
constexpr int kExitMisclassified = 5;

hasel::ExperimentConfig load(const std::string& path) {
  return path.empty() ? hasel::ExperimentConfig::defaults() : hasel::load_config(path);
}

fs::path out_dir(const std::string& flag) {
  if (const char* env = std::getenv("HASEL_OUT_DIR"); env && *env) return env;
  return flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tendon-driven HASEL hand simulator and grasp-sensing workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out = "out";
  app.add_option("--config", config_path, "experiment config JSON (default: built-in defaults)");
  app.add_option("--out", out, "output directory (HASEL_OUT_DIR overrides)");

  auto* characterize = app.add_subcommand("characterize", "voltage-angle and voltage-force sweeps");

  auto* grasp = app.add_subcommand("grasp", "run one grasp preset");
  std::string preset;
  std::optional<std::uint64_t> seed;
  grasp->add_option("--preset", preset, "preset name")->required();
  grasp->add_option("--seed", seed, "episode seed (default: preset seed_base)");

  auto* batch = app.add_subcommand("detect-batch", "calibrate and score the grasp detector");
  hasel::DetectBatchOptions batch_opts;
  batch->add_option("--n-free", batch_opts.n_free, "free-motion episodes");
  batch->add_option("--n-grasp", batch_opts.n_grasp, "cube-grasp episodes");
  batch->add_option("--seed", batch_opts.seed_base, "seed of the first batch episode");
  batch->add_option("--noise-i-scale", batch_opts.noise_i_scale, "multiplier on the current monitor noise");

  auto* replay = app.add_subcommand("replay", "offline detection on a recorded trace");
  std::string trace_path;
  std::optional<std::string> detector_path;
  replay->add_option("--trace", trace_path, "trace CSV (companion .json next to it)")->required();
  replay->add_option("--detector", detector_path, "detector.json from detect-batch");

  auto* dump = app.add_subcommand("dump-config", "print the effective config as JSON");

  // Shared flags are accepted after the verb as well.
  for (auto* sub : {characterize, grasp, batch, replay, dump}) {
    sub->add_option("--config", config_path, "experiment config JSON");
    sub->add_option("--out", out, "output directory");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const hasel::ExperimentConfig cfg = load(config_path);
    const fs::path dir = out_dir(out);

    if (*characterize) {
      auto res = hasel::cmd_characterize(cfg, dir);
      for (const auto& f : res.fingers)
        std::cout << f.finger << ": tip force " << hasel::format_number(f.tip_force) << " N, MCP "
                  << hasel::format_number(f.mcp_saturation_deg) << " deg, onset "
                  << hasel::format_number(f.onset_voltage) << " kV\n";
    } else if (*grasp) {
      auto res = hasel::cmd_grasp(cfg, preset, seed, dir);
      std::cout << preset << ": " << res.report.verdict;
      if (res.report.detection) std::cout << ", grasped=" << (res.report.detection->grasped ? "true" : "false");
      if (res.report.f_crush) std::cout << ", crushed=" << (res.report.crushed ? "true" : "false");
      std::cout << '\n';
    } else if (*batch) {
      auto res = hasel::cmd_detect_batch(cfg, batch_opts, dir);
      std::cout << "threshold " << hasel::format_number(res.calibration.threshold) << " uA, " << res.correct() << "/"
                << res.total() << " correct\n";
      if (!res.misclassified.empty()) return kExitMisclassified;
    } else if (*replay) {
      std::optional<fs::path> det;
      if (detector_path) det = *detector_path;
      std::cout << hasel::cmd_replay(cfg, trace_path, det, dir).json;
    } else if (*dump) {
      std::cout << cfg.to_json_text();
    }
  } catch (const hasel::CalibrationError& e) {
    std::cerr << "calibration failed: " << e.what() << '\n';
    return kExitCalibration;
  } catch (const hasel::ModelConsistencyError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kExitModel;
  } catch (const hasel::BaselineExhaustedError& e) {
    std::cerr << "controller error: " << e.what() << '\n';
    return kExitModel;
  } catch (const hasel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hasel::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hasel::InsufficientDataError& e) {
    std::cerr << "insufficient data: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hasel::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
