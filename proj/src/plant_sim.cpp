#include "hasel/plant_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hasel/errors.hpp"
#include "hasel/hash.hpp"

namespace hasel {

void AmplifierModel::validate() const {
  if (!(v_ceiling >= 0.0 && v_ceiling <= kMaxAmplifierVoltage))
    throw ConfigError("amplifier v_ceiling must be in [0, 6.0] kV");
  if (!(slew_max > 0.0)) throw ConfigError("amplifier slew_max must be > 0");
  if (monitor_noise_v < 0.0 || monitor_noise_i < 0.0) throw ConfigError("monitor noise std devs must be >= 0");
}

double AmplifierModel::apply(double v_now, double v_cmd, double dt) const {
  double target = std::clamp(v_cmd, 0.0, v_ceiling);
  double max_step = slew_max * dt;
  return std::clamp(v_now + std::clamp(target - v_now, -max_step, max_step), 0.0, v_ceiling);
}

void SimConfig::validate() const {
  if (!(dt_internal > 0.0)) throw ConfigError("sim dt_internal must be > 0");
  if (!(dt_sample > 0.0)) throw ConfigError("sim dt_sample must be > 0");
  if (dt_internal > dt_sample) throw ConfigError("sim dt_internal must be <= dt_sample");
  double ratio = dt_sample / dt_internal;
  if (std::abs(ratio - std::round(ratio)) > 1e-6) throw ConfigError("sim dt_internal must divide dt_sample");
  if (!(tau_mech > 0.0)) throw ConfigError("sim tau_mech must be > 0");
  if (!(duration >= 0.0)) throw ConfigError("sim duration must be >= 0");
  double n = duration / dt_sample;
  if (std::abs(n - std::round(n)) > 1e-6) throw ConfigError("sim dt_sample must divide duration");
}

int SimConfig::decimation() const { return static_cast<int>(std::llround(dt_sample / dt_internal)); }

std::size_t SimConfig::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration / dt_sample)) + 1;
}

void HandModel::validate() const {
  for (const auto& f : fingers) f.validate();
  for (std::size_t f = 0; f < fingers.size(); ++f) {
    auto groups = tendon_joints(fingers[f]);
    for (std::size_t t = 0; t < groups.size(); ++t) {
      auto it = std::find_if(chains.begin(), chains.end(), [&](const ChainModel& c) {
        return c.finger == static_cast<int>(f) && c.tendon == static_cast<int>(t);
      });
      if (it == chains.end())
        throw ConfigError("finger '" + fingers[f].name + "' tendon '" + tendon_label(fingers[f], t) +
                          "' has no actuator chain");
      if (it->joints != groups[t]) throw ConfigError("chain '" + it->id + "' joints do not match finger layout");
    }
  }
  for (const auto& c : chains) {
    c.stack.validate();
    c.path.validate();
    if (c.stack.v_max < kMaxAmplifierVoltage)
      throw ConfigError("chain '" + c.id + "': stack v_max below the amplifier limit of 6.0 kV");
  }
}

int HandModel::finger_index(const std::string& name) const {
  for (std::size_t k = 0; k < fingers.size(); ++k)
    if (fingers[k].name == name) return static_cast<int>(k);
  return -1;
}

int HandModel::chain_index(const std::string& id) const {
  for (std::size_t k = 0; k < chains.size(); ++k)
    if (chains[k].id == id) return static_cast<int>(k);
  return -1;
}

TraceLayout HandModel::trace_layout() const {
  TraceLayout layout;
  for (const auto& f : fingers) {
    layout.fingers.push_back(f.name);
    for (const auto& j : f.joints) layout.joints.push_back(f.name + "_" + j.name);
  }
  for (const auto& c : chains) layout.stacks.push_back(c.id);
  return layout;
}

Plant::Plant(HandModel hand, std::optional<ObjectModel> object, std::vector<bool> engaged, AmplifierModel amp,
             SimConfig sim)
    : hand_(std::move(hand)),
      object_(std::move(object)),
      engaged_(std::move(engaged)),
      amp_(amp),
      sim_(sim) {
  if (engaged_.size() != hand_.chains.size()) throw ConfigError("engaged mask size does not match chain count");
  for (const auto& c : hand_.chains) {
    ChainCache cc;
    cc.theta_max = std::numeric_limits<double>::infinity();
    for (int j : c.joints) {
      const auto& js = hand_.fingers[c.finger].joints[j];
      cc.r_sum += js.r_eff;
      cc.theta_max = std::min(cc.theta_max, js.theta_max);
    }
    if (object_)
      for (int j : c.joints)
        cc.touches = cc.touches || std::isfinite(object_->contact_angle(hand_.fingers[c.finger].name, j));
    cache_.push_back(cc);
  }
  for (const auto& c : hand_.chains) {
    ActuatorStackState s;
    s.c = capacitance_of(c.stack, 0.0);
    state_.stacks.push_back(s);
  }
  for (const auto& f : hand_.fingers) state_.fingers.push_back(FingerState::rest(f));
  update_fingers();
}

double Plant::chain_angle(int chain, double x) const {
  double e = excursion_of(hand_.chains[chain].path, x);
  return std::min(e / cache_[chain].r_sum, cache_[chain].theta_max);
}

double Plant::chain_load(int chain, double x, bool with_object) const {
  const ChainModel& c = hand_.chains[chain];
  double e = excursion_of(c.path, x);
  double theta = std::min(e / cache_[chain].r_sum, cache_[chain].theta_max);
  double torque = 0.0;
  if (object_ && with_object) {
    const FingerLayout& layout = hand_.fingers[c.finger];
    for (int j : c.joints) torque += contact_torque(*object_, layout, j, theta).torque;
  }
  double tension = extensor_tension(c.path, e) + torque / cache_[chain].r_sum;
  return reflected_load(c.path, tension);
}

double Plant::onset_voltage(int chain) const {
  const ChainModel& c = hand_.chains[chain];
  double needed = chain_load(chain, 0.0) + c.path.f_breakaway;
  double available = active_force(c.stack, c.stack.v_ref, 0.0);
  return c.stack.v_ref * std::pow(needed / available, 1.0 / c.stack.force_exponent);
}

void Plant::step(double v_cmd) {
  const double dt = sim_.dt_internal;
  const double v_old = state_.v_applied;
  const double v_new = amp_.apply(v_old, v_cmd, dt);

  for (std::size_t k = 0; k < hand_.chains.size(); ++k) {
    const int chain = static_cast<int>(k);
    const ChainModel& c = hand_.chains[k];
    ActuatorStackState& s = state_.stacks[k];
    const double v_prev = s.v;
    const double v_k = engaged_[k] ? v_new : 0.0;

    double x_new = s.x;
    double net = active_force(c.stack, v_k, s.x) - chain_load(chain, s.x);
    if (motion_permitted(c.path, net)) {
      // Kinetic friction opposes the direction the net force drives the stack.
      const double friction = net > 0.0 ? c.path.f_breakaway : -c.path.f_breakaway;
      auto solve = [&](bool with_object) {
        EquilibriumResult eq = equilibrium_contraction(
            c.stack, v_k, [&](double x) { return chain_load(chain, x, with_object) + friction; });
        if (eq.interior) max_residual_ = std::max(max_residual_, std::abs(eq.residual));
        return eq.x;
      };
      const double x_eq = solve(true);
      if (net > 0.0 && cache_[k].touches) {
        // Overdamped closing: the free-motion pace scaled by the share of the
        // driving force left once the object pushes back.
        const double drive_free = active_force(c.stack, v_k, s.x) - chain_load(chain, s.x, false) - friction;
        const double share = std::clamp((net - friction) / drive_free, 0.0, 1.0);
        x_new = std::min(s.x + (solve(false) - s.x) * share * dt / sim_.tau_mech, x_eq);
      } else {
        x_new = s.x + (x_eq - s.x) * dt / sim_.tau_mech;
      }
      x_new = std::clamp(x_new, 0.0, c.stack.x_free);
    }
    double c_new = capacitance_of(c.stack, x_new);
    s.i = displacement_current(0.5 * (s.c + c_new), (v_k - v_prev) / dt, 0.5 * (v_k + v_prev), (c_new - s.c) / dt);
    s.x = x_new;
    s.c = c_new;
    s.v = v_k;
  }
  state_.v_applied = v_new;
  state_.v_cmd = v_cmd;
  state_.t += dt;
  for (auto& s : state_.stacks) s.t = state_.t;
  update_fingers();
}

void Plant::update_fingers() {
  for (std::size_t k = 0; k < hand_.chains.size(); ++k) {
    const ChainModel& c = hand_.chains[k];
    const FingerLayout& layout = hand_.fingers[c.finger];
    FingerState& fs = state_.fingers[c.finger];
    double theta = chain_angle(static_cast<int>(k), state_.stacks[k].x);
    for (int j : c.joints) {
      fs.theta[j] = theta;
      ContactLoad load = object_ ? contact_torque(*object_, layout, j, theta) : ContactLoad{};
      fs.contact[j] = load.in_contact;
      fs.f_contact[j] = load.force;
    }
  }
}

std::vector<bool> engaged_chains(const HandModel& hand, const std::map<std::string, ObjectModel>& objects,
                                 const Scenario& scenario) {
  std::vector<bool> engaged(hand.chains.size(), false);
  for (const auto& name : scenario.fingers) {
    int f = hand.finger_index(name);
    if (f < 0) throw ConfigError("scenario '" + scenario.name + "': unknown finger '" + name + "'");
    for (std::size_t k = 0; k < hand.chains.size(); ++k)
      if (hand.chains[k].finger == f) engaged[k] = true;
  }
  if (scenario.object && !objects.count(*scenario.object))
    throw ConfigError("scenario '" + scenario.name + "': unknown object '" + *scenario.object + "'");
  if (hand.chain_index(scenario.monitored_stack) < 0)
    throw ConfigError("scenario '" + scenario.name + "': unknown monitored stack '" + scenario.monitored_stack + "'");
  return engaged;
}

namespace {

std::optional<ObjectModel> lookup_object(const std::map<std::string, ObjectModel>& objects, const Scenario& sc) {
  if (!sc.object) return std::nullopt;
  return objects.at(*sc.object);
}

}  // namespace

Simulation::Simulation(const HandModel& hand, const std::map<std::string, ObjectModel>& objects,
                       const Scenario& scenario, const AmplifierModel& amp, const SimConfig& sim, std::uint64_t seed)
    : plant_(hand, lookup_object(objects, scenario), engaged_chains(hand, objects, scenario), amp, sim),
      sim_(sim),
      amp_(amp),
      monitored_(hand.chain_index(scenario.monitored_stack)),
      total_(sim.sample_count()),
      rng_(seed) {
  sim.validate();
  amp.validate();
  scenario.profile.validate(amp.v_ceiling);
  trace_.layout = hand.trace_layout();
  trace_.meta.scenario = scenario.name;
  trace_.meta.seed = seed;
  trace_.meta.profile_hash = hex64(scenario.profile.fingerprint());
  trace_.meta.monitored_stack = scenario.monitored_stack;
  trace_.meta.dt_sample = sim.dt_sample;
  trace_.rows.reserve(total_);
  record();
}

double Simulation::next_time() const { return static_cast<double>(trace_.rows.size()) * sim_.dt_sample; }

void Simulation::advance(double v_cmd_next) {
  if (done()) throw DomainError("simulation already reached its duration");
  const int n = sim_.decimation();
  const double v_start = plant_.state().v_cmd;
  for (int j = 1; j <= n; ++j) plant_.step(v_start + (v_cmd_next - v_start) * j / n);
  record();
}

void Simulation::record() {
  const PlantState& st = plant_.state();
  TraceSample s;
  s.t = static_cast<double>(trace_.rows.size()) * sim_.dt_sample;
  s.v_cmd = st.v_cmd;
  s.v_meas = st.v_applied;
  s.i_meas = st.stacks[monitored_].i;
  if (amp_.monitor_noise_v > 0.0) s.v_meas += std::normal_distribution<double>(0.0, amp_.monitor_noise_v)(rng_);
  if (amp_.monitor_noise_i > 0.0) s.i_meas += std::normal_distribution<double>(0.0, amp_.monitor_noise_i)(rng_);
  for (const auto& f : st.fingers) {
    s.theta.insert(s.theta.end(), f.theta.begin(), f.theta.end());
    s.f_contact.insert(s.f_contact.end(), f.f_contact.begin(), f.f_contact.end());
  }
  for (const auto& a : st.stacks) {
    s.x.push_back(a.x);
    s.c.push_back(a.c);
  }
  trace_.rows.push_back(std::move(s));
}

SignalTrace Simulation::finish() && {
  trace_.meta.max_equilibrium_residual = plant_.max_equilibrium_residual();
  return std::move(trace_);
}

SignalTrace run_scenario(const HandModel& hand, const std::map<std::string, ObjectModel>& objects,
                         const Scenario& scenario, const AmplifierModel& amp, const SimConfig& sim,
                         std::uint64_t seed) {
  Simulation run(hand, objects, scenario, amp, sim, seed);
  while (!run.done()) run.advance(scenario.profile(run.next_time()));
  return std::move(run).finish();
}

}  // namespace hasel
