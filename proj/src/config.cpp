#include "hasel/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hasel/errors.hpp"
#include "hasel/hash.hpp"

namespace hasel {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- defaults

TendonSpec tendon(const std::string& stack, double eta, double k_ext, double f_ext0) {
  TendonSpec t;
  t.stack = stack;
  t.path.eta_fwd = eta;
  t.path.k_ext = k_ext;
  t.path.f_ext0 = f_ext0;
  return t;
}

FingerLayout long_finger(const std::string& name, double l_prox, double l_mid, double l_dist) {
  // MCP flexes 90 deg on 17 mm of tendon; PIP+DIP together on 12 mm.
  const double half_pi = std::numbers::pi / 2.0;
  const double r_mcp = 10.8225;
  const double r_pd = 3.8197;
  FingerLayout f;
  f.name = name;
  f.joints = {{"mcp", r_mcp, half_pi, l_prox}, {"pip", r_pd, half_pi, l_mid}, {"dip", r_pd, half_pi, l_dist}};
  f.coupled_pair = std::pair{1, 2};
  return f;
}

FingerLayout thumb(double l_prox, double l_dist) {
  const double half_pi = std::numbers::pi / 2.0;
  FingerLayout f;
  f.name = "thumb";
  f.joints = {{"mcp", 7.6394, half_pi, l_prox}, {"ip", 7.6394, half_pi, l_dist}};
  return f;
}

ObjectModel object(const std::string& name, ObjectKind kind, double k_obj, double mass_g,
                   std::map<std::string, std::vector<double>> theta_contact, double f_crush = 0.0) {
  ObjectModel o;
  o.name = name;
  o.kind = kind;
  o.k_obj = k_obj;
  o.mass_g = mass_g;
  o.theta_contact = std::move(theta_contact);
  o.f_crush = f_crush;
  return o;
}

ScenarioPreset make_preset(const std::string& name, std::vector<std::string> fingers, std::optional<std::string> obj,
                           VoltageProfile profile, ControllerKind controller = ControllerKind::none) {
  ScenarioPreset p;
  p.name = name;
  p.fingers = std::move(fingers);
  p.object = std::move(obj);
  p.profile = profile;
  p.controller = controller;
  return p;
}

// ---------------------------------------------------------------- errors

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ", ") + x;
  return out;
}

template <class F>
void at_pointer(const std::string& ptr, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    if (!e.pointer().empty()) throw;
    throw ConfigError(e.what(), ptr);
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), ptr);
  }
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line of the deepest object key along a JSON pointer, found by scanning for
// each key in turn. Good enough for hand-written configs.
std::size_t line_of_pointer(const std::string& text, const std::string& pointer) {
  std::size_t pos = 0;
  std::size_t found = 0;
  std::string token;
  std::istringstream in(pointer);
  std::getline(in, token, '/');  // leading empty token
  while (std::getline(in, token, '/')) {
    if (!token.empty() && std::all_of(token.begin(), token.end(), ::isdigit)) continue;
    auto p = text.find('"' + token + '"', pos);
    if (p == std::string::npos) break;
    pos = found = p;
  }
  return line_of_offset(text, found);
}

// ---------------------------------------------------------------- reading

class Reader {
 public:
  Reader(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) throw ConfigError("expected an object", ptr_.empty() ? "/" : ptr_);
  }

  std::string at(const std::string& key) const { return ptr_ + "/" + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError("expected a number", at(key));
      out = v->get<double>();
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_number()) throw ConfigError("expected a number or null", at(key));
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError("expected an integer", at(key));
      out = v->get<int>();
    }
  }

  void unsigned_integer(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError("expected a non-negative integer", at(key));
      out = v->get<std::uint64_t>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError("expected a string", at(key));
      out = v->get<std::string>();
    }
  }

  void optional_string(const std::string& key, std::optional<std::string>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_string()) throw ConfigError("expected a string or null", at(key));
      out = v->get<std::string>();
    }
  }

  void strings(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError("expected an array of strings", at(key));
      out.clear();
      for (std::size_t k = 0; k < v->size(); ++k) {
        if (!(*v)[k].is_string()) throw ConfigError("expected a string", at(key) + "/" + std::to_string(k));
        out.push_back((*v)[k].get<std::string>());
      }
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) numbers_of(*v, at(key), out);
  }

  static void numbers_of(const json& v, const std::string& ptr, std::vector<double>& out) {
    if (!v.is_array()) throw ConfigError("expected an array of numbers", ptr);
    out.clear();
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number()) throw ConfigError("expected a number", ptr + "/" + std::to_string(k));
      out.push_back(v[k].get<double>());
    }
  }

  // Rejects keys that were never asked for.
  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key)) throw ConfigError("unknown key '" + key + "'", at(key));
  }

 private:
  const json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

StackConfig read_stack(const json& j, const std::string& ptr) {
  StackConfig s;
  Reader r(j, ptr);
  r.integer("n_units", s.n_units);
  if (const json* k = r.find("force_knots")) {
    if (!k->is_array()) throw ConfigError("expected an array of [contraction, force] pairs", r.at("force_knots"));
    s.force_knots.clear();
    for (std::size_t i = 0; i < k->size(); ++i) {
      std::vector<double> pair;
      std::string p = r.at("force_knots") + "/" + std::to_string(i);
      Reader::numbers_of((*k)[i], p, pair);
      if (pair.size() != 2) throw ConfigError("expected a [contraction, force] pair", p);
      s.force_knots.push_back({pair[0], pair[1]});
    }
  }
  r.number("v_ref", s.v_ref);
  r.number("x_free", s.x_free);
  r.number("c0", s.c0);
  r.number("c_slope", s.c_slope);
  r.number("v_max", s.v_max);
  r.number("force_exponent", s.force_exponent);
  r.finish();
  return s;
}

TendonSpec read_tendon(const json& j, const std::string& ptr) {
  TendonSpec t;
  Reader r(j, ptr);
  r.string("stack", t.stack);
  r.number("pulley_ratio", t.path.pulley_ratio);
  r.number("eta_fwd", t.path.eta_fwd);
  r.number("f_breakaway", t.path.f_breakaway);
  r.number("slack", t.path.slack);
  r.number("k_ext", t.path.k_ext);
  r.number("f_ext0", t.path.f_ext0);
  r.finish();
  return t;
}

FingerLayout read_finger(const json& j, const std::string& ptr) {
  FingerLayout f;
  Reader r(j, ptr);
  r.string("name", f.name);
  if (const json* js = r.find("joints")) {
    if (!js->is_array()) throw ConfigError("expected an array of joints", r.at("joints"));
    for (std::size_t k = 0; k < js->size(); ++k) {
      JointSpec js_k;
      Reader jr((*js)[k], r.at("joints") + "/" + std::to_string(k));
      jr.string("name", js_k.name);
      jr.number("r_eff", js_k.r_eff);
      jr.number("theta_max", js_k.theta_max);
      jr.number("phalanx_len", js_k.phalanx_len);
      jr.finish();
      f.joints.push_back(js_k);
    }
  }
  if (const json* cp = r.find("coupled_pair"); cp && !cp->is_null()) {
    if (!cp->is_array() || cp->size() != 2 || !(*cp)[0].is_number_integer() || !(*cp)[1].is_number_integer())
      throw ConfigError("expected [proximal, distal] joint indices or null", r.at("coupled_pair"));
    f.coupled_pair = std::pair{(*cp)[0].get<int>(), (*cp)[1].get<int>()};
  }
  r.finish();
  return f;
}

ObjectModel read_object(const std::string& name, const json& j, const std::string& ptr) {
  ObjectModel o;
  o.name = name;
  Reader r(j, ptr);
  std::string kind = to_string(o.kind);
  r.string("kind", kind);
  at_pointer(r.at("kind"), [&] { o.kind = object_kind_from_string(kind); });
  r.number("k_obj", o.k_obj);
  r.number("f_crush", o.f_crush);
  r.number("mass_g", o.mass_g);
  if (const json* tc = r.find("theta_contact")) {
    if (!tc->is_object()) throw ConfigError("expected an object of per-finger angle arrays", r.at("theta_contact"));
    for (const auto& [finger, angles] : tc->items()) {
      std::vector<double> xs;
      Reader::numbers_of(angles, r.at("theta_contact") + "/" + finger, xs);
      o.theta_contact[finger] = xs;
    }
  }
  r.finish();
  return o;
}

VoltageProfile read_profile(const json& j, const std::string& ptr) {
  Reader r(j, ptr);
  std::string kind = "ramp_hold";
  double ramp_time = 1.0;
  double target = 0.0;
  r.string("kind", kind);
  r.number("ramp_time", ramp_time);
  r.number("target", target);
  r.finish();
  std::optional<VoltageProfile> p;
  ProfileKind k{};
  at_pointer(ptr + "/kind", [&] { k = profile_kind_from_string(kind); });
  at_pointer(ptr, [&] {
    switch (k) {
      case ProfileKind::ramp: p = VoltageProfile::ramp(ramp_time, target); break;
      case ProfileKind::hold: p = VoltageProfile::hold(target); break;
      case ProfileKind::ramp_hold: p = VoltageProfile::ramp_hold(ramp_time, target); break;
    }
  });
  return *p;
}

ScenarioPreset read_preset(const std::string& name, const json& j, const std::string& ptr) {
  ScenarioPreset p;
  p.name = name;
  Reader r(j, ptr);
  r.strings("fingers", p.fingers);
  r.optional_string("object", p.object);
  if (const json* pj = r.find("profile")) p.profile = read_profile(*pj, r.at("profile"));
  std::string controller = to_string(p.controller);
  r.string("controller", controller);
  at_pointer(r.at("controller"), [&] { p.controller = controller_kind_from_string(controller); });
  r.integer("repetitions", p.repetitions);
  r.unsigned_integer("seed_base", p.seed_base);
  r.optional_number("v_ceiling", p.v_ceiling);
  r.optional_number("duration", p.duration);
  r.finish();
  return p;
}

template <class T, class F>
std::map<std::string, T> read_map(const json& j, const std::string& ptr, F&& read_entry) {
  if (!j.is_object()) throw ConfigError("expected an object", ptr);
  std::map<std::string, T> out;
  for (const auto& [key, value] : j.items()) out.emplace(key, read_entry(key, value, ptr + "/" + key));
  return out;
}

ExperimentConfig from_json(const json& root) {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  Reader r(root, "");

  if (const json* s = r.find("stacks"))
    cfg.stacks = read_map<StackConfig>(*s, "/stacks",
                                       [](const std::string&, const json& v, const std::string& p) { return read_stack(v, p); });
  if (const json* t = r.find("tendons"))
    cfg.tendons = read_map<TendonSpec>(*t, "/tendons",
                                       [](const std::string&, const json& v, const std::string& p) { return read_tendon(v, p); });
  if (const json* f = r.find("fingers")) {
    if (!f->is_array()) throw ConfigError("expected an array of fingers", "/fingers");
    cfg.fingers.clear();
    for (std::size_t k = 0; k < f->size(); ++k) cfg.fingers.push_back(read_finger((*f)[k], "/fingers/" + std::to_string(k)));
  }
  if (const json* o = r.find("objects"))
    cfg.objects = read_map<ObjectModel>(*o, "/objects", read_object);
  if (const json* a = r.find("amplifier")) {
    Reader ar(*a, "/amplifier");
    ar.number("v_ceiling", cfg.amplifier.v_ceiling);
    ar.number("slew_max", cfg.amplifier.slew_max);
    ar.number("monitor_noise_v", cfg.amplifier.monitor_noise_v);
    ar.number("monitor_noise_i", cfg.amplifier.monitor_noise_i);
    ar.finish();
  }
  if (const json* s = r.find("sim")) {
    Reader sr(*s, "/sim");
    sr.number("dt_internal", cfg.sim.dt_internal);
    sr.number("dt_sample", cfg.sim.dt_sample);
    sr.number("tau_mech", cfg.sim.tau_mech);
    sr.number("duration", cfg.sim.duration);
    sr.finish();
  }
  if (const json* d = r.find("detection")) {
    Reader dr(*d, "/detection");
    dr.string("monitored_stack", cfg.detection.monitored_stack);
    dr.number("i_threshold", cfg.detection.i_threshold);
    dr.number("window_start", cfg.detection.window_start);
    dr.number("window_end", cfg.detection.window_end);
    dr.integer("smoothing", cfg.detection.smoothing);
    dr.integer("debounce", cfg.detection.debounce);
    dr.finish();
  }
  if (const json* c = r.find("controller")) {
    Reader cr(*c, "/controller");
    cr.integer("baseline_runs", cfg.controller.baseline_runs);
    cr.number("deviation_scale", cfg.controller.deviation_scale);
    cr.optional_number("deviation_threshold", cfg.controller.deviation_threshold);
    cr.integer("smoothing", cfg.controller.smoothing);
    cr.unsigned_integer("baseline_seed_offset", cfg.controller.baseline_seed_offset);
    cr.finish();
  }
  if (const json* c = r.find("characterize")) {
    Reader cr(*c, "/characterize");
    cr.number("v_max", cfg.characterize.v_max);
    cr.number("ramp_time", cfg.characterize.ramp_time);
    cr.number("hold_time", cfg.characterize.hold_time);
    cr.number("v_step", cfg.characterize.v_step);
    cr.strings("fingers", cfg.characterize.fingers);
    cr.finish();
  }
  if (const json* b = r.find("detect_batch")) {
    Reader br(*b, "/detect_batch");
    br.string("free_preset", cfg.detect_batch.free_preset);
    br.string("grasp_preset", cfg.detect_batch.grasp_preset);
    br.integer("calibration_runs", cfg.detect_batch.calibration_runs);
    br.unsigned_integer("calibration_seed_offset", cfg.detect_batch.calibration_seed_offset);
    br.finish();
  }
  if (const json* p = r.find("presets"))
    cfg.presets = read_map<ScenarioPreset>(*p, "/presets", read_preset);
  r.finish();
  return cfg;
}

// ---------------------------------------------------------------- writing

ordered_json opt(const std::optional<double>& x) { return x ? ordered_json(*x) : ordered_json(nullptr); }

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  ordered_json stacks = ordered_json::object();
  for (const auto& [name, s] : cfg.stacks) {
    ordered_json knots = ordered_json::array();
    for (const auto& k : s.force_knots) knots.push_back({k.contraction, k.force});
    stacks[name] = {{"n_units", s.n_units}, {"force_knots", knots}, {"v_ref", s.v_ref},
                    {"x_free", s.x_free},   {"c0", s.c0},          {"c_slope", s.c_slope},
                    {"v_max", s.v_max},     {"force_exponent", s.force_exponent}};
  }
  j["stacks"] = stacks;

  ordered_json tendons = ordered_json::object();
  for (const auto& [id, t] : cfg.tendons)
    tendons[id] = {{"stack", t.stack},          {"pulley_ratio", t.path.pulley_ratio}, {"eta_fwd", t.path.eta_fwd},
                   {"f_breakaway", t.path.f_breakaway}, {"slack", t.path.slack},      {"k_ext", t.path.k_ext},
                   {"f_ext0", t.path.f_ext0}};
  j["tendons"] = tendons;

  ordered_json fingers = ordered_json::array();
  for (const auto& f : cfg.fingers) {
    ordered_json joints = ordered_json::array();
    for (const auto& js : f.joints)
      joints.push_back(
          {{"name", js.name}, {"r_eff", js.r_eff}, {"theta_max", js.theta_max}, {"phalanx_len", js.phalanx_len}});
    ordered_json fj = {{"name", f.name}, {"joints", joints}};
    fj["coupled_pair"] = f.coupled_pair ? ordered_json{f.coupled_pair->first, f.coupled_pair->second}
                                        : ordered_json(nullptr);
    fingers.push_back(fj);
  }
  j["fingers"] = fingers;

  ordered_json objects = ordered_json::object();
  for (const auto& [name, o] : cfg.objects) {
    ordered_json tc = ordered_json::object();
    for (const auto& [finger, angles] : o.theta_contact) tc[finger] = angles;
    objects[name] = {{"kind", to_string(o.kind)}, {"k_obj", o.k_obj},       {"f_crush", o.f_crush},
                     {"mass_g", o.mass_g},        {"theta_contact", tc}};
  }
  j["objects"] = objects;

  j["amplifier"] = {{"v_ceiling", cfg.amplifier.v_ceiling},
                    {"slew_max", cfg.amplifier.slew_max},
                    {"monitor_noise_v", cfg.amplifier.monitor_noise_v},
                    {"monitor_noise_i", cfg.amplifier.monitor_noise_i}};
  j["sim"] = {{"dt_internal", cfg.sim.dt_internal},
              {"dt_sample", cfg.sim.dt_sample},
              {"tau_mech", cfg.sim.tau_mech},
              {"duration", cfg.sim.duration}};
  j["detection"] = {{"monitored_stack", cfg.detection.monitored_stack},
                    {"i_threshold", cfg.detection.i_threshold},
                    {"window_start", cfg.detection.window_start},
                    {"window_end", cfg.detection.window_end},
                    {"smoothing", cfg.detection.smoothing},
                    {"debounce", cfg.detection.debounce}};
  j["controller"] = {{"baseline_runs", cfg.controller.baseline_runs},
                     {"deviation_scale", cfg.controller.deviation_scale},
                     {"deviation_threshold", opt(cfg.controller.deviation_threshold)},
                     {"smoothing", cfg.controller.smoothing},
                     {"baseline_seed_offset", cfg.controller.baseline_seed_offset}};
  j["characterize"] = {{"v_max", cfg.characterize.v_max},
                       {"ramp_time", cfg.characterize.ramp_time},
                       {"hold_time", cfg.characterize.hold_time},
                       {"v_step", cfg.characterize.v_step},
                       {"fingers", cfg.characterize.fingers}};
  j["detect_batch"] = {{"free_preset", cfg.detect_batch.free_preset},
                       {"grasp_preset", cfg.detect_batch.grasp_preset},
                       {"calibration_runs", cfg.detect_batch.calibration_runs},
                       {"calibration_seed_offset", cfg.detect_batch.calibration_seed_offset}};

  ordered_json presets = ordered_json::object();
  for (const auto& [name, p] : cfg.presets) {
    ordered_json pj;
    pj["fingers"] = p.fingers;
    pj["object"] = p.object ? ordered_json(*p.object) : ordered_json(nullptr);
    pj["profile"] = {{"kind", to_string(p.profile.kind())},
                     {"ramp_time", p.profile.ramp_time()},
                     {"target", p.profile.target()}};
    pj["controller"] = to_string(p.controller);
    pj["repetitions"] = p.repetitions;
    pj["seed_base"] = p.seed_base;
    pj["v_ceiling"] = opt(p.v_ceiling);
    pj["duration"] = opt(p.duration);
    presets[name] = pj;
  }
  j["presets"] = presets;
  return j;
}

}  // namespace

// ---------------------------------------------------------------- ExperimentConfig

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.stacks = {{"single", StackConfig::with_units(1)},
              {"double", StackConfig::with_units(2)},
              {"triple", StackConfig::with_units(3)}};

  c.fingers = {thumb(32, 27), long_finger("index", 45, 28, 22), long_finger("middle", 48, 30, 23),
               long_finger("ring", 45, 28, 22), long_finger("pinky", 35, 22, 20)};
  for (const char* f : {"index", "middle", "ring", "pinky"}) {
    c.tendons[std::string(f) + "_mcp"] = tendon("triple", 0.358, 0.30, 1.60);
    c.tendons[std::string(f) + "_pipdip"] = tendon("double", 0.358, 0.30, 1.40);
  }
  c.tendons["thumb_mcp"] = tendon("triple", 0.173, 0.25, 1.02);
  c.tendons["thumb_ip"] = tendon("double", 0.358, 0.30, 1.40);

  auto add = [&](ObjectModel o) { c.objects.emplace(o.name, std::move(o)); };
  add(object("cube", ObjectKind::rigid, 1e4, 49,
             {{"thumb", {0.2, 0.25}}, {"index", {0.2, 0.25, 0.25}}}));
  add(object("mushroom", ObjectKind::compliant, 30, 18,
             {{"thumb", {0.25, 0.3}}, {"index", {0.25, 0.3, 0.3}}}));
  add(object("stuffed_toy", ObjectKind::compliant, 10, 107,
             {{"thumb", {0.2, 0.3}}, {"index", {0.2, 0.3, 0.3}}, {"middle", {0.2, 0.3, 0.3}}}));
  add(object("pet_bottle", ObjectKind::compliant, 60, 26,
             {{"thumb", {0.3, 0.35}},
              {"index", {0.3, 0.35, 0.35}},
              {"middle", {0.3, 0.35, 0.35}},
              {"ring", {0.3, 0.35, 0.35}},
              {"pinky", {0.3, 0.35, 0.35}}}));
  add(object("paper_balloon", ObjectKind::fragile, 4, 3,
             {{"thumb", {0.3, 0.3}}, {"index", {0.15, 0.3, 0.3}}}, 0.2));

  const auto grasp = VoltageProfile::ramp_hold(1.0, 5.5);
  auto put = [&](ScenarioPreset p) { c.presets.emplace(p.name, std::move(p)); };
  put(make_preset("pinch_cube", {"thumb", "index"}, "cube", grasp));
  put(make_preset("pinch_mushroom", {"thumb", "index"}, "mushroom", grasp));
  put(make_preset("tripod_toy", {"thumb", "index", "middle"}, "stuffed_toy", grasp));
  put(make_preset("power_grasp_bottle", {"thumb", "index", "middle", "ring", "pinky"}, "pet_bottle", grasp));
  put(make_preset("pinch_free", {"thumb", "index"}, std::nullopt, grasp));

  auto detect_free = make_preset("detect_free", {"index"}, std::nullopt, grasp, ControllerKind::detect);
  detect_free.duration = 1.0;
  detect_free.repetitions = 25;
  detect_free.seed_base = 1000;
  put(detect_free);
  auto detect_cube = make_preset("detect_cube", {"index"}, "cube", grasp, ControllerKind::detect);
  detect_cube.duration = 1.0;
  detect_cube.repetitions = 25;
  detect_cube.seed_base = 2000;
  put(detect_cube);

  const auto balloon = VoltageProfile::ramp_hold(1.0, 6.0);
  auto aware = make_preset("balloon_contact_aware", {"thumb", "index"}, "paper_balloon", balloon,
                      ControllerKind::contact_aware);
  aware.v_ceiling = 6.0;
  put(aware);
  auto open = make_preset("balloon_open_loop", {"thumb", "index"}, "paper_balloon", balloon);
  open.v_ceiling = 6.0;
  put(open);
  return c;
}

void ExperimentConfig::validate() const {
  for (const auto& [name, s] : stacks) at_pointer("/stacks/" + name, [&] { s.validate(); });

  std::set<std::string> finger_names;
  for (std::size_t k = 0; k < fingers.size(); ++k) {
    const std::string ptr = "/fingers/" + std::to_string(k);
    at_pointer(ptr, [&] { fingers[k].validate(); });
    if (!finger_names.insert(fingers[k].name).second)
      throw ConfigError("duplicate finger '" + fingers[k].name + "'", ptr + "/name");
  }

  std::set<std::string> chain_ids;
  for (const auto& f : fingers)
    for (std::size_t t = 0; t < tendon_joints(f).size(); ++t)
      chain_ids.insert(f.name + "_" + tendon_label(f, static_cast<int>(t)));
  for (const auto& id : chain_ids)
    if (!tendons.contains(id)) throw ConfigError("tendon '" + id + "' is missing", "/tendons");
  for (const auto& [id, t] : tendons) {
    const std::string ptr = "/tendons/" + id;
    if (!chain_ids.contains(id)) throw ConfigError("tendon '" + id + "' does not match any finger joint", ptr);
    if (!stacks.contains(t.stack)) throw ConfigError("unknown stack '" + t.stack + "'", ptr + "/stack");
    at_pointer(ptr, [&] { t.path.validate(); });
  }
  at_pointer("", [&] { hand().validate(); });

  for (const auto& [name, o] : objects) {
    const std::string ptr = "/objects/" + name;
    at_pointer(ptr, [&] { o.validate(); });
    for (const auto& [finger, angles] : o.theta_contact) {
      auto it = std::find_if(fingers.begin(), fingers.end(), [&](const FingerLayout& f) { return f.name == finger; });
      if (it == fingers.end()) throw ConfigError("unknown finger '" + finger + "'", ptr + "/theta_contact/" + finger);
      if (angles.size() > it->joints.size())
        throw ConfigError("more contact angles than joints", ptr + "/theta_contact/" + finger);
    }
  }

  at_pointer("/amplifier", [&] { amplifier.validate(); });
  at_pointer("/sim", [&] { sim.validate(); });
  at_pointer("/detection", [&] { detection.validate(); });
  if (!chain_ids.contains(detection.monitored_stack))
    throw ConfigError("unknown stack '" + detection.monitored_stack + "'", "/detection/monitored_stack");

  if (controller.baseline_runs < 2) throw ConfigError("must be >= 2", "/controller/baseline_runs");
  if (!(controller.deviation_scale > 0.0)) throw ConfigError("must be > 0", "/controller/deviation_scale");
  if (controller.deviation_threshold && !(*controller.deviation_threshold > 0.0))
    throw ConfigError("must be > 0 or null", "/controller/deviation_threshold");
  if (controller.smoothing < 1) throw ConfigError("must be >= 1", "/controller/smoothing");

  const auto& ch = characterize;
  if (!(ch.v_max >= 0.0 && ch.v_max <= kMaxAmplifierVoltage))
    throw ConfigError("must be in [0, 6.0] kV", "/characterize/v_max");
  if (!(ch.ramp_time > 0.0)) throw ConfigError("must be > 0", "/characterize/ramp_time");
  if (!(ch.hold_time >= 0.0)) throw ConfigError("must be >= 0", "/characterize/hold_time");
  if (!(ch.v_step > 0.0 && (ch.v_step <= ch.v_max || ch.v_max == 0.0)))
    throw ConfigError("must be in (0, v_max]", "/characterize/v_step");
  for (std::size_t k = 0; k < ch.fingers.size(); ++k)
    if (!finger_names.contains(ch.fingers[k]))
      throw ConfigError("unknown finger '" + ch.fingers[k] + "'", "/characterize/fingers/" + std::to_string(k));

  if (detect_batch.calibration_runs < 1) throw ConfigError("must be >= 1", "/detect_batch/calibration_runs");
  for (const auto& [key, name] : {std::pair{"free_preset", detect_batch.free_preset},
                                  std::pair{"grasp_preset", detect_batch.grasp_preset}})
    if (!presets.contains(name))
      throw ConfigError("unknown preset '" + name + "'", std::string("/detect_batch/") + key);

  for (const auto& [name, p] : presets) {
    const std::string ptr = "/presets/" + name;
    if (p.fingers.empty()) throw ConfigError("needs at least one finger", ptr + "/fingers");
    for (std::size_t k = 0; k < p.fingers.size(); ++k)
      if (!finger_names.contains(p.fingers[k]))
        throw ConfigError("unknown finger '" + p.fingers[k] + "'", ptr + "/fingers/" + std::to_string(k));
    if (p.object && !objects.contains(*p.object))
      throw ConfigError("unknown object '" + *p.object + "'", ptr + "/object");
    if (p.repetitions < 1) throw ConfigError("must be >= 1", ptr + "/repetitions");
    at_pointer(ptr + "/v_ceiling", [&] { amplifier_for(p).validate(); });
    at_pointer(ptr + "/duration", [&] { sim_for(p).validate(); });
    at_pointer(ptr + "/profile", [&] { p.profile.validate(amplifier_for(p).v_ceiling); });
    if (p.controller == ControllerKind::detect) at_pointer(ptr + "/profile", [&] { detection.validate_against(p.profile); });
    if (p.controller != ControllerKind::none &&
        std::find(p.fingers.begin(), p.fingers.end(), detection.monitored_stack.substr(0, detection.monitored_stack.find('_'))) ==
            p.fingers.end())
      throw ConfigError("monitored stack '" + detection.monitored_stack + "' is not on an engaged finger",
                        ptr + "/fingers");
  }
}

std::string ExperimentConfig::to_json_text() const { return to_json(*this).dump(2) + "\n"; }

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(to_json(*this).dump())); }

HandModel ExperimentConfig::hand() const {
  HandModel h;
  h.fingers = fingers;
  for (std::size_t f = 0; f < fingers.size(); ++f) {
    auto groups = tendon_joints(fingers[f]);
    for (std::size_t t = 0; t < groups.size(); ++t) {
      ChainModel c;
      c.id = fingers[f].name + "_" + tendon_label(fingers[f], static_cast<int>(t));
      c.finger = static_cast<int>(f);
      c.tendon = static_cast<int>(t);
      c.joints = groups[t];
      auto it = tendons.find(c.id);
      if (it == tendons.end()) throw ConfigError("tendon '" + c.id + "' is missing", "/tendons");
      auto st = stacks.find(it->second.stack);
      if (st == stacks.end()) throw ConfigError("unknown stack '" + it->second.stack + "'", "/tendons/" + c.id + "/stack");
      c.stack = st->second;
      c.path = it->second.path;
      h.chains.push_back(std::move(c));
    }
  }
  return h;
}

const ScenarioPreset& ExperimentConfig::preset(const std::string& name) const {
  auto it = presets.find(name);
  if (it == presets.end()) {
    std::vector<std::string> names;
    for (const auto& [n, p] : presets) names.push_back(n);
    throw ConfigError("unknown preset '" + name + "' (available: " + join(names) + ")");
  }
  return it->second;
}

Scenario ExperimentConfig::scenario_of(const ScenarioPreset& p) const {
  return Scenario{p.name, p.fingers, p.object, p.profile, detection.monitored_stack};
}

AmplifierModel ExperimentConfig::amplifier_for(const ScenarioPreset& p) const {
  AmplifierModel a = amplifier;
  if (p.v_ceiling) a.v_ceiling = *p.v_ceiling;
  return a;
}

SimConfig ExperimentConfig::sim_for(const ScenarioPreset& p) const {
  SimConfig s = sim;
  if (p.duration) s.duration = *p.duration;
  return s;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": invalid JSON: " + e.what());
  }
  try {
    ExperimentConfig cfg = from_json(root);
    cfg.validate();
    return cfg;
  } catch (const ConfigError& e) {
    std::string ptr = e.pointer().empty() ? "/" : e.pointer();
    throw ConfigError(source + ":" + std::to_string(line_of_pointer(text, e.pointer())) + ": " + ptr + ": " + e.what(),
                      e.pointer());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace hasel
