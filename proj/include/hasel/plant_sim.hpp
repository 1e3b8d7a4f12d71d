#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hasel/actuator_model.hpp"
#include "hasel/hand_kinematics.hpp"
#include "hasel/signal_trace.hpp"
#include "hasel/transmission.hpp"
#include "hasel/voltage_profile.hpp"

namespace hasel {

inline constexpr double kMaxAmplifierVoltage = 6.0;  // kV

struct AmplifierModel {
  double v_ceiling = 5.5;          // kV
  double slew_max = 50.0;          // kV/s
  double monitor_noise_v = 0.005;  // kV std dev
  double monitor_noise_i = 0.02;   // uA std dev
  std::uint64_t seed = 0;

  void validate() const;
  // Slew-limited, ceiling-clamped output after dt seconds.
  double apply(double v_now, double v_cmd, double dt) const;
};

struct SimConfig {
  double dt_internal = 1e-4;
  double dt_sample = 1e-3;
  double tau_mech = 0.08;
  double duration = 2.0;

  void validate() const;
  int decimation() const;
  std::size_t sample_count() const;  // duration / dt_sample + 1
};

// One actuator stack pulling one flexor tendon of one finger.
struct ChainModel {
  std::string id;  // "<finger>_<tendon label>", e.g. "index_pipdip"
  int finger = 0;
  int tendon = 0;
  std::vector<int> joints;
  StackConfig stack;
  TendonPath path;
};

struct HandModel {
  std::vector<FingerLayout> fingers;
  std::vector<ChainModel> chains;

  void validate() const;
  int finger_index(const std::string& name) const;  // -1 when absent
  int chain_index(const std::string& id) const;     // -1 when absent
  TraceLayout trace_layout() const;
};

struct PlantState {
  double t = 0.0;
  double v_cmd = 0.0;
  double v_applied = 0.0;  // amplifier output, kV
  std::vector<ActuatorStackState> stacks;
  std::vector<FingerState> fingers;
};

// Quasi-static hand plant integrated at dt_internal. Each step:
//   1. amplifier slews toward v_cmd, clamped to its ceiling
//   2. per chain, target contraction from the force balance (stiction holds x)
//   3. first-order relaxation x += (x_eq - x) dt / tau_mech; a finger closing
//      on an object moves at its free-motion pace scaled by the fraction of
//      driving force the contact leaves, and never passes the contact balance
//   4. capacitance from x, current from the step's differences
class Plant {
 public:
  Plant(HandModel hand, std::optional<ObjectModel> object, std::vector<bool> engaged, AmplifierModel amp,
        SimConfig sim);

  void step(double v_cmd);

  const PlantState& state() const { return state_; }
  const HandModel& hand() const { return hand_; }
  double max_equilibrium_residual() const { return max_residual_; }

  // Actuator-side load of a chain at contraction x, without friction.
  double chain_load(int chain, double x, bool with_object = true) const;
  // Voltage below which the chain cannot leave x = 0 (deadband edge).
  double onset_voltage(int chain) const;

 private:
  struct ChainCache {
    double r_sum = 0.0;
    double theta_max = 0.0;
    bool touches = false;  // the object has a contact angle on one of its joints
  };

  double chain_angle(int chain, double x) const;
  void update_fingers();

  HandModel hand_;
  std::optional<ObjectModel> object_;
  std::vector<bool> engaged_;
  AmplifierModel amp_;
  SimConfig sim_;
  std::vector<ChainCache> cache_;
  PlantState state_;
  double max_residual_ = 0.0;
};

struct Scenario {
  std::string name;
  std::vector<std::string> fingers;
  std::optional<std::string> object;
  VoltageProfile profile = VoltageProfile::hold(0.0);
  std::string monitored_stack = "index_mcp";
};

// Sampled view of a Plant: one TraceSample per dt_sample with monitor noise.
// The command is linearly interpolated across each sample period.
class Simulation {
 public:
  Simulation(const HandModel& hand, const std::map<std::string, ObjectModel>& objects, const Scenario& scenario,
             const AmplifierModel& amp, const SimConfig& sim, std::uint64_t seed);

  const TraceSample& current() const { return trace_.rows.back(); }
  std::size_t index() const { return trace_.rows.size() - 1; }
  bool done() const { return trace_.rows.size() >= total_; }
  double next_time() const;
  const Plant& plant() const { return plant_; }

  void advance(double v_cmd_next);
  SignalTrace finish() &&;

 private:
  void record();

  Plant plant_;
  SimConfig sim_;
  AmplifierModel amp_;
  int monitored_ = -1;
  std::size_t total_ = 0;
  std::mt19937_64 rng_;
  double last_current_ = 0.0;
  SignalTrace trace_;
};

// Engaged-chain mask; throws ConfigError on unknown finger/object names.
std::vector<bool> engaged_chains(const HandModel& hand, const std::map<std::string, ObjectModel>& objects,
                                 const Scenario& scenario);

// Open-loop run following the scenario's voltage profile.
SignalTrace run_scenario(const HandModel& hand, const std::map<std::string, ObjectModel>& objects,
                         const Scenario& scenario, const AmplifierModel& amp, const SimConfig& sim,
                         std::uint64_t seed);

}  // namespace hasel
