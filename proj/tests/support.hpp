#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "hasel/config.hpp"

namespace test {

inline const hasel::ExperimentConfig& config() {
  static const hasel::ExperimentConfig cfg = hasel::ExperimentConfig::defaults();
  return cfg;
}

inline const hasel::HandModel& hand() {
  static const hasel::HandModel h = config().hand();
  return h;
}

inline hasel::AmplifierModel quiet(hasel::AmplifierModel amp) {
  amp.monitor_noise_i = 0.0;
  amp.monitor_noise_v = 0.0;
  return amp;
}

// Fresh per-process scratch directory.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hasel_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// RMS of (stored i - c dv/dt - v dc/dt) over the interior samples, relative to
// the peak stored current. Central differences on the sampled c and v.
inline double eq1_relative_rms(const hasel::SignalTrace& tr) {
  const auto c = tr.c_of(tr.meta.monitored_stack);
  const auto v = tr.voltages();
  const auto i = tr.currents();
  const double dt = tr.meta.dt_sample;
  double ss = 0.0;
  double peak = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 1; k + 1 < i.size(); ++k) {
    double dv = (v[k + 1] - v[k - 1]) / (2 * dt);
    double dc = (c[k + 1] - c[k - 1]) / (2 * dt);
    double r = i[k] - (c[k] * dv + v[k] * dc);
    ss += r * r;
    ++n;
  }
  for (double x : i) peak = std::max(peak, std::abs(x));
  return n == 0 || peak == 0.0 ? 0.0 : std::sqrt(ss / static_cast<double>(n)) / peak;
}

}  // namespace test
