#include "hasel/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hasel/errors.hpp"
#include "hasel/hash.hpp"

namespace hasel {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.close();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

ordered_json opt_json(const std::optional<double>& x) { return x ? ordered_json(*x) : ordered_json(nullptr); }

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string trace_csv(const SignalTrace& tr) {
  std::ostringstream os;
  write_trace_csv(tr, os);
  return os.str();
}

// Runs fn(0..n-1) on up to hardware_concurrency threads; results in index order.
template <class T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(n);
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < n; start += workers) {
    std::vector<std::future<T>> batch;
    for (std::size_t k = start; k < std::min(n, start + workers); ++k)
      batch.push_back(std::async(std::launch::async, fn, k));
    for (std::size_t k = 0; k < batch.size(); ++k) out[start + k] = batch[k].get();
  }
  return out;
}

std::vector<double> sweep_voltages(double v_max, double v_step) {
  std::vector<double> vs;
  const auto n = static_cast<long long>(std::floor(v_max / v_step + 1e-9));
  for (long long k = 0; k <= n; ++k) vs.push_back(static_cast<double>(k) * v_step);
  if (vs.back() < v_max - 1e-12) vs.push_back(v_max);
  return vs;
}

double tip_force(const HandModel& hand, int finger, double v) {
  const FingerLayout& layout = hand.fingers[finger];
  int chain = hand.chain_index(layout.name + "_" + tendon_label(layout, 0));
  const ChainModel& c = hand.chains[chain];
  double tension = blocked_tension(c.path, active_force(c.stack, v, 0.0));
  return fingertip_force(layout, tension, extensor_tension(c.path, 0.0), FingerState::rest(layout));
}

bool monitored_engaged(const Scenario& sc) {
  const std::string finger = sc.monitored_stack.substr(0, sc.monitored_stack.find('_'));
  return std::find(sc.fingers.begin(), sc.fingers.end(), finger) != sc.fingers.end();
}

std::optional<DetectionConfig> detection_for(const ExperimentConfig& cfg, const ScenarioPreset& p,
                                             const SimConfig& sim, const Scenario& sc) {
  if (p.controller == ControllerKind::detect) return cfg.detection;
  if (!monitored_engaged(sc) || sim.duration < cfg.detection.window_end) return std::nullopt;
  try {
    cfg.detection.validate_against(p.profile);
  } catch (const ConfigError&) {
    return std::nullopt;
  }
  return cfg.detection;
}

std::string seed_tag(const std::string& name, std::uint64_t seed) { return name + "_s" + std::to_string(seed); }

ordered_json detection_json(const DetectionConfig& d) {
  return {{"monitored_stack", d.monitored_stack}, {"i_threshold", d.i_threshold}, {"window_start", d.window_start},
          {"window_end", d.window_end},           {"smoothing", d.smoothing},     {"debounce", d.debounce}};
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + p.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

CharacterizeResult cmd_characterize(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto& ch = cfg.characterize;
  const HandModel hand = cfg.hand();
  const std::string config_hash = cfg.hash();

  AmplifierModel amp = cfg.amplifier;
  amp.v_ceiling = ch.v_max;
  amp.monitor_noise_v = 0.0;
  amp.monitor_noise_i = 0.0;
  SimConfig sim = cfg.sim;
  sim.duration = ch.ramp_time + ch.hold_time;
  sim.validate();
  const VoltageProfile profile = VoltageProfile::ramp_hold(ch.ramp_time, ch.v_max);

  CharacterizeResult res;
  for (const auto& name : ch.fingers) {
    const int f = hand.finger_index(name);
    const FingerLayout& layout = hand.fingers[f];
    const std::string mcp_chain = name + "_" + tendon_label(layout, 0);
    Scenario sc{"characterize_" + name, {name}, std::nullopt, profile, mcp_chain};
    SignalTrace tr = run_scenario(hand, cfg.objects, sc, amp, sim, 0);

    Plant probe(hand, std::nullopt, engaged_chains(hand, cfg.objects, sc), amp, sim);
    double onset = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < hand.chains.size(); ++k)
      if (hand.chains[k].finger == f) onset = std::min(onset, probe.onset_voltage(static_cast<int>(k)));

    std::vector<int> cols;
    for (const auto& j : layout.joints) cols.push_back(tr.joint_index(name + "_" + j.name));

    std::ostringstream csv;
    csv << "t (s),v (kV)";
    for (const auto& j : layout.joints) csv << ",theta_" << name << "_" << j.name << " (deg)";
    csv << '\n';
    FingerCharacterization fc;
    fc.finger = name;
    fc.onset_voltage = onset;
    for (const auto& row : tr.rows) {
      csv << format_number(row.t) << ',' << format_number(row.v_meas);
      double peak = 0.0;
      for (int c : cols) {
        double deg = row.theta[c] * kRadToDeg;
        csv << ',' << format_number(deg);
        peak = std::max(peak, deg);
      }
      csv << '\n';
      if (row.v_meas < onset) fc.deadband_max_deg = std::max(fc.deadband_max_deg, peak);
    }
    fc.mcp_saturation_deg = tr.rows.back().theta[cols.front()] * kRadToDeg;
    fc.tip_force = tip_force(hand, f, ch.v_max);

    fs::path p = out_dir / ("angle_" + name + ".csv");
    write_file_atomic(p, csv.str());
    res.files.push_back(p);
    res.fingers.push_back(fc);
  }

  std::ostringstream force;
  force << "v (kV)";
  for (const auto& name : ch.fingers) force << ",f_tip_" << name << " (N)";
  force << '\n';
  for (double v : sweep_voltages(ch.v_max, ch.v_step)) {
    force << format_number(v);
    for (const auto& name : ch.fingers) force << ',' << format_number(tip_force(hand, hand.finger_index(name), v));
    force << '\n';
  }
  fs::path fp = out_dir / "force.csv";
  write_file_atomic(fp, force.str());
  res.files.push_back(fp);

  ordered_json j;
  j["config_hash"] = config_hash;
  j["v_max"] = ch.v_max;
  j["ramp_time"] = ch.ramp_time;
  j["hold_time"] = ch.hold_time;
  ordered_json fingers = ordered_json::object();
  for (const auto& fc : res.fingers)
    fingers[fc.finger] = {{"tip_force", fc.tip_force},
                          {"mcp_saturation_deg", fc.mcp_saturation_deg},
                          {"onset_voltage", fc.onset_voltage},
                          {"deadband_max_deg", fc.deadband_max_deg}};
  j["fingers"] = fingers;
  fs::path jp = out_dir / "characterize.json";
  write_file_atomic(jp, dump(j));
  res.files.push_back(jp);
  return res;
}

GraspResult cmd_grasp(const ExperimentConfig& cfg, const std::string& preset_name, std::optional<std::uint64_t> seed,
                      const fs::path& out_dir) {
  cfg.validate();
  const ScenarioPreset& p = cfg.preset(preset_name);
  const HandModel hand = cfg.hand();
  const std::string config_hash = cfg.hash();
  const std::uint64_t s = seed.value_or(p.seed_base);

  EpisodeSpec spec;
  spec.scenario = cfg.scenario_of(p);
  spec.amp = cfg.amplifier_for(p);
  spec.sim = cfg.sim_for(p);
  spec.controller = p.controller;
  spec.detection = detection_for(cfg, p, spec.sim, spec.scenario);
  spec.deviation_threshold = cfg.controller.deviation_threshold;
  spec.deviation_scale = cfg.controller.deviation_scale;

  GraspResult res;
  if (p.controller == ControllerKind::contact_aware) {
    std::vector<std::uint64_t> seeds;
    for (int k = 0; k < cfg.controller.baseline_runs; ++k)
      seeds.push_back(cfg.controller.baseline_seed_offset + static_cast<std::uint64_t>(k));
    BaselineProfile b =
        make_baseline(hand, cfg.objects, spec.scenario, spec.amp, spec.sim, seeds, cfg.controller.smoothing);
    std::ostringstream csv;
    write_baseline_csv(b, csv);
    fs::path bc = out_dir / (p.name + "_baseline.csv");
    fs::path bj = out_dir / (p.name + "_baseline.json");
    write_file_atomic(bc, csv.str());
    ordered_json meta = ordered_json::parse(baseline_meta_json(b));
    meta["config_hash"] = config_hash;
    write_file_atomic(bj, dump(meta));
    res.files.insert(res.files.end(), {bc, bj});
    spec.baseline = std::move(b);
  }

  res.report = run_grasp_episode(hand, cfg.objects, spec, s);
  res.report.trace.meta.config_hash = config_hash;

  const std::string tag = seed_tag(p.name, s);
  fs::path tc = out_dir / (tag + "_trace.csv");
  fs::path tj = out_dir / (tag + "_trace.json");
  fs::path rj = out_dir / (tag + "_report.json");
  write_file_atomic(tc, trace_csv(res.report.trace));
  write_file_atomic(tj, trace_meta_json(res.report.trace.meta));
  write_file_atomic(rj, episode_report_json(res.report, config_hash));
  res.files.insert(res.files.end(), {tc, tj, rj});
  return res;
}

DetectBatchResult cmd_detect_batch(const ExperimentConfig& base, const DetectBatchOptions& opts,
                                   const fs::path& out_dir) {
  if (!(opts.noise_i_scale >= 0.0)) throw ConfigError("noise scale must be >= 0");
  ExperimentConfig cfg = base;
  cfg.amplifier.monitor_noise_i *= opts.noise_i_scale;
  cfg.validate();

  const auto& db = cfg.detect_batch;
  const ScenarioPreset& pf = cfg.preset(db.free_preset);
  const ScenarioPreset& pg = cfg.preset(db.grasp_preset);
  if (pf.object) throw ConfigError("free preset '" + pf.name + "' must not hold an object", "/detect_batch/free_preset");
  if (!pg.object) throw ConfigError("grasp preset '" + pg.name + "' needs an object", "/detect_batch/grasp_preset");
  if (!(pf.profile == pg.profile))
    throw ConfigError("free and grasp presets use different voltage profiles", "/detect_batch");

  const int n_free = opts.n_free.value_or(pf.repetitions);
  const int n_grasp = opts.n_grasp.value_or(pg.repetitions);
  if (n_free < 1 || n_grasp < 1) throw ConfigError("batch needs at least one episode of each class");

  const HandModel hand = cfg.hand();
  const std::string config_hash = cfg.hash();
  const Scenario sf = cfg.scenario_of(pf);
  const Scenario sg = cfg.scenario_of(pg);
  const AmplifierModel af = cfg.amplifier_for(pf);
  const AmplifierModel ag = cfg.amplifier_for(pg);
  const SimConfig simf = cfg.sim_for(pf);
  const SimConfig simg = cfg.sim_for(pg);
  DetectionConfig det = cfg.detection;
  det.validate_against(pf.profile);

  struct Job {
    bool grasp;
    std::uint64_t seed;
  };
  auto run = [&](const Job& job) {
    SignalTrace tr = job.grasp ? run_scenario(hand, cfg.objects, sg, ag, simg, job.seed)
                               : run_scenario(hand, cfg.objects, sf, af, simf, job.seed);
    tr.meta.config_hash = config_hash;
    return tr;
  };

  // Held-out calibration set: seeds disjoint from the batch.
  std::vector<Job> cal_jobs;
  const auto runs = static_cast<std::uint64_t>(db.calibration_runs);
  for (std::uint64_t k = 0; k < runs; ++k) cal_jobs.push_back({false, db.calibration_seed_offset + k});
  for (std::uint64_t k = 0; k < runs; ++k) cal_jobs.push_back({true, db.calibration_seed_offset + runs + k});
  auto cal_traces = parallel_map<SignalTrace>(cal_jobs.size(), [&](std::size_t k) { return run(cal_jobs[k]); });
  std::span<const SignalTrace> cal_free(cal_traces.data(), runs);
  std::span<const SignalTrace> cal_grasp(cal_traces.data() + runs, runs);

  ordered_json summary;
  summary["config_hash"] = config_hash;
  summary["profile_hash"] = hex64(pf.profile.fingerprint());
  summary["free_preset"] = pf.name;
  summary["grasp_preset"] = pg.name;
  summary["monitor_noise_i"] = cfg.amplifier.monitor_noise_i;
  summary["calibration_seeds"] = {{"free", {db.calibration_seed_offset, db.calibration_seed_offset + runs - 1}},
                                  {"grasp", {db.calibration_seed_offset + runs, db.calibration_seed_offset + 2 * runs - 1}}};
  const fs::path summary_path = out_dir / "detect_summary.json";

  DetectBatchResult res;
  try {
    res.calibration = calibrate_threshold(cal_free, cal_grasp, det);
  } catch (const CalibrationError& e) {
    summary["status"] = "calibration_failed";
    summary["min_free"] = e.min_free();
    summary["max_grasp"] = e.max_grasp();
    write_file_atomic(summary_path, dump(summary));
    throw;
  }
  det.i_threshold = res.calibration.threshold;

  const std::uint64_t free_base = opts.seed_base.value_or(pf.seed_base);
  const std::uint64_t grasp_base =
      opts.seed_base ? *opts.seed_base + static_cast<std::uint64_t>(n_free) : pg.seed_base;
  std::vector<Job> jobs;
  for (int k = 0; k < n_free; ++k) jobs.push_back({false, free_base + static_cast<std::uint64_t>(k)});
  for (int k = 0; k < n_grasp; ++k) jobs.push_back({true, grasp_base + static_cast<std::uint64_t>(k)});
  struct Scored {
    DetectionResult verdict;
    double residual = 0.0;
  };
  auto scored = parallel_map<Scored>(jobs.size(), [&](std::size_t k) {
    SignalTrace tr = run(jobs[k]);
    return Scored{detect_grasp(tr, det), tr.meta.max_equilibrium_residual};
  });
  for (const auto& tr : cal_traces)
    res.max_equilibrium_residual = std::max(res.max_equilibrium_residual, tr.meta.max_equilibrium_residual);
  for (const auto& sc : scored) res.max_equilibrium_residual = std::max(res.max_equilibrium_residual, sc.residual);

  ordered_json episodes = ordered_json::array();
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const bool truth = jobs[k].grasp;
    const bool said = scored[k].verdict.grasped;
    if (truth && said) ++res.true_positive;
    if (truth && !said) ++res.false_negative;
    if (!truth && !said) ++res.true_negative;
    if (!truth && said) ++res.false_positive;
    if (truth != said) res.misclassified.push_back({truth ? "grasp" : "free", jobs[k].seed});
    episodes.push_back({{"label", truth ? "grasp" : "free"},
                        {"seed", jobs[k].seed},
                        {"grasped", said},
                        {"decision_time", opt_json(scored[k].verdict.decision_time)}});
  }

  summary["status"] = res.misclassified.empty() ? "ok" : "misclassified";
  summary["threshold"] = res.calibration.threshold;
  summary["min_free"] = res.calibration.min_free;
  summary["max_grasp"] = res.calibration.max_grasp;
  summary["n_free"] = n_free;
  summary["n_grasp"] = n_grasp;
  summary["confusion"] = {{"true_positive", res.true_positive},
                          {"false_negative", res.false_negative},
                          {"true_negative", res.true_negative},
                          {"false_positive", res.false_positive}};
  summary["correct"] = res.correct();
  summary["total"] = res.total();
  summary["max_equilibrium_residual"] = res.max_equilibrium_residual;
  summary["episodes"] = episodes;
  write_file_atomic(summary_path, dump(summary));

  ordered_json detector;
  detector["config_hash"] = config_hash;
  detector["profile_hash"] = hex64(pf.profile.fingerprint());
  detector["detection"] = detection_json(det);
  const fs::path detector_path = out_dir / "detector.json";
  write_file_atomic(detector_path, dump(detector));
  res.files = {summary_path, detector_path};
  return res;
}

ReplayResult cmd_replay(const ExperimentConfig& cfg, const fs::path& trace_path,
                        const std::optional<fs::path>& detector_path, const fs::path& out_dir) {
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) throw ConfigError("cannot read trace '" + trace_path.string() + "'");
  SignalTrace tr = read_trace_csv(in);
  fs::path meta_path = trace_path;
  meta_path.replace_extension(".json");
  TraceMeta meta = parse_trace_meta_json(read_text(meta_path));

  DetectionConfig det = cfg.detection;
  std::string config_hash = cfg.hash();
  if (detector_path) {
    auto j = nlohmann::json::parse(read_text(*detector_path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("detection") || !j.contains("profile_hash") ||
        !j.contains("config_hash"))
      throw ConfigError("'" + detector_path->string() + "' is not a detector file");
    const auto& d = j["detection"];
    try {
      det.monitored_stack = d.at("monitored_stack").get<std::string>();
      det.i_threshold = d.at("i_threshold").get<double>();
      det.window_start = d.at("window_start").get<double>();
      det.window_end = d.at("window_end").get<double>();
      det.smoothing = d.at("smoothing").get<int>();
      det.debounce = d.at("debounce").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("'" + detector_path->string() + "': " + e.what());
    }
    if (j["profile_hash"].get<std::string>() != meta.profile_hash)
      throw ConfigError("trace profile hash " + meta.profile_hash + " does not match detector profile hash " +
                        j["profile_hash"].get<std::string>());
    config_hash = j["config_hash"].get<std::string>();
  }
  if (config_hash != meta.config_hash)
    throw ConfigError("trace config hash " + meta.config_hash + " does not match detector config hash " + config_hash);
  if (det.monitored_stack != meta.monitored_stack)
    throw ConfigError("trace monitors '" + meta.monitored_stack + "' but the detector expects '" +
                      det.monitored_stack + "'");
  det.validate();

  ReplayResult res;
  res.verdict = detect_grasp(tr, det);
  ordered_json j;
  j["trace"] = trace_path.filename().string();
  j["scenario"] = meta.scenario;
  j["seed"] = meta.seed;
  j["config_hash"] = meta.config_hash;
  j["profile_hash"] = meta.profile_hash;
  j["i_threshold"] = det.i_threshold;
  j["grasped"] = res.verdict.grasped;
  j["decision_time"] = opt_json(res.verdict.decision_time);
  res.json = dump(j);
  res.file = out_dir / (trace_path.stem().string() + "_verdict.json");
  write_file_atomic(res.file, res.json);
  return res;
}

}  // namespace hasel
