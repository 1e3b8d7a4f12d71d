#include "hasel/signal_trace.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hasel/errors.hpp"

namespace hasel {

namespace {

const char* const kTime = "t (s)";
const char* const kVCmd = "v_cmd (kV)";
const char* const kVMeas = "v_meas (kV)";
const char* const kIMeas = "i_meas (uA)";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool strip(const std::string& col, const std::string& prefix, const std::string& unit, std::string& name) {
  std::string suffix = " (" + unit + ")";
  if (col.size() <= prefix.size() + suffix.size()) return false;
  if (col.compare(0, prefix.size(), prefix) != 0) return false;
  if (col.compare(col.size() - suffix.size(), suffix.size(), suffix) != 0) return false;
  name = col.substr(prefix.size(), col.size() - prefix.size() - suffix.size());
  return true;
}

double parse_field(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw SchemaError("line " + std::to_string(line) + ": column '" + column + "': not a number: '" + s + "'");
  return v;
}

template <typename Member>
std::vector<double> series(const SignalTrace& tr, int index, Member member) {
  std::vector<double> out;
  out.reserve(tr.rows.size());
  for (const auto& r : tr.rows) out.push_back((r.*member)[index]);
  return out;
}

int find_name(const std::vector<std::string>& names, const std::string& name, const char* what) {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return static_cast<int>(k);
  throw DomainError(std::string("unknown ") + what + " '" + name + "'");
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<double> SignalTrace::times() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.t);
  return out;
}

std::vector<double> SignalTrace::currents() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.i_meas);
  return out;
}

std::vector<double> SignalTrace::voltages() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.v_meas);
  return out;
}

int SignalTrace::joint_index(const std::string& joint) const { return find_name(layout.joints, joint, "joint"); }
int SignalTrace::stack_index(const std::string& stack) const { return find_name(layout.stacks, stack, "stack"); }

std::vector<double> SignalTrace::theta_of(const std::string& joint) const {
  return series(*this, joint_index(joint), &TraceSample::theta);
}
std::vector<double> SignalTrace::f_contact_of(const std::string& joint) const {
  return series(*this, joint_index(joint), &TraceSample::f_contact);
}
std::vector<double> SignalTrace::x_of(const std::string& stack) const {
  return series(*this, stack_index(stack), &TraceSample::x);
}
std::vector<double> SignalTrace::c_of(const std::string& stack) const {
  return series(*this, stack_index(stack), &TraceSample::c);
}

std::vector<std::string> trace_columns(const TraceLayout& layout) {
  std::vector<std::string> cols{kTime, kVCmd, kVMeas, kIMeas};
  for (const auto& j : layout.joints) cols.push_back("theta_" + j + " (rad)");
  for (const auto& f : layout.fingers) cols.push_back("abduction_" + f + " (rad)");
  for (const auto& j : layout.joints) cols.push_back("f_contact_" + j + " (N)");
  for (const auto& s : layout.stacks) cols.push_back("x_" + s + " (mm)");
  for (const auto& s : layout.stacks) cols.push_back("c_" + s + " (nF)");
  return cols;
}

void write_trace_csv(const SignalTrace& trace, std::ostream& out) {
  const auto cols = trace_columns(trace.layout);
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  std::string line;
  for (const auto& r : trace.rows) {
    line.clear();
    line += format_number(r.t);
    for (double v : {r.v_cmd, r.v_meas, r.i_meas}) line += ',' + format_number(v);
    for (double v : r.theta) line += ',' + format_number(v);
    for (std::size_t f = 0; f < trace.layout.fingers.size(); ++f) line += ",0";
    for (double v : r.f_contact) line += ',' + format_number(v);
    for (double v : r.x) line += ',' + format_number(v);
    for (double v : r.c) line += ',' + format_number(v);
    out << line << '\n';
  }
}

SignalTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty trace file: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);

  const char* fixed[] = {kTime, kVCmd, kVMeas, kIMeas};
  for (std::size_t k = 0; k < 4; ++k) {
    if (k >= header.size()) throw SchemaError(std::string("missing column '") + fixed[k] + "'");
    if (header[k] != fixed[k])
      throw SchemaError("column " + std::to_string(k + 1) + ": expected '" + fixed[k] + "', found '" + header[k] + "'");
  }

  // Groups must appear in schema order: theta, abduction, f_contact, x, c.
  SignalTrace tr;
  std::vector<std::string> f_joints, c_stacks;
  int group = 0;
  for (std::size_t k = 4; k < header.size(); ++k) {
    const std::string& col = header[k];
    std::string name;
    int g = -1;
    if (strip(col, "theta_", "rad", name)) g = 0;
    else if (strip(col, "abduction_", "rad", name)) g = 1;
    else if (strip(col, "f_contact_", "N", name)) g = 2;
    else if (strip(col, "x_", "mm", name)) g = 3;
    else if (strip(col, "c_", "nF", name)) g = 4;
    if (g < 0) throw SchemaError("unexpected column '" + col + "' at position " + std::to_string(k + 1));
    if (g < group) throw SchemaError("column '" + col + "' out of schema order");
    group = g;
    switch (g) {
      case 0: tr.layout.joints.push_back(name); break;
      case 1: tr.layout.fingers.push_back(name); break;
      case 2: f_joints.push_back(name); break;
      case 3: tr.layout.stacks.push_back(name); break;
      case 4: c_stacks.push_back(name); break;
    }
  }
  if (f_joints != tr.layout.joints) throw SchemaError("f_contact_* columns do not match theta_* columns");
  if (c_stacks != tr.layout.stacks) throw SchemaError("c_* columns do not match x_* columns");

  const std::size_t nj = tr.layout.joints.size();
  const std::size_t nf = tr.layout.fingers.size();
  const std::size_t ns = tr.layout.stacks.size();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw SchemaError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(fields.size()));
    TraceSample s;
    std::size_t k = 0;
    auto next = [&] {
      double v = parse_field(fields[k], line_no, header[k]);
      ++k;
      return v;
    };
    s.t = next();
    s.v_cmd = next();
    s.v_meas = next();
    s.i_meas = next();
    for (std::size_t j = 0; j < nj; ++j) s.theta.push_back(next());
    for (std::size_t f = 0; f < nf; ++f) {
      if (next() != 0.0) throw SchemaError("line " + std::to_string(line_no) + ": column '" + header[k - 1] +
                                           "': abduction is fixed at 0");
    }
    for (std::size_t j = 0; j < nj; ++j) s.f_contact.push_back(next());
    for (std::size_t j = 0; j < ns; ++j) s.x.push_back(next());
    for (std::size_t j = 0; j < ns; ++j) s.c.push_back(next());
    if (!tr.rows.empty() && !(s.t > tr.rows.back().t))
      throw SchemaError("line " + std::to_string(line_no) + ": column 't (s)' is not strictly increasing");
    tr.rows.push_back(std::move(s));
  }
  if (tr.rows.size() >= 2) {
    double dt = tr.rows[1].t - tr.rows[0].t;
    for (std::size_t k = 2; k < tr.rows.size(); ++k) {
      if (std::abs((tr.rows[k].t - tr.rows[k - 1].t) - dt) > 1e-9)
        throw SchemaError("column 't (s)': non-uniform sample spacing at row " + std::to_string(k + 1));
    }
    tr.meta.dt_sample = dt;
  }
  return tr;
}

std::string trace_meta_json(const TraceMeta& meta) {
  nlohmann::ordered_json j;
  j["scenario"] = meta.scenario;
  j["seed"] = meta.seed;
  j["config_hash"] = meta.config_hash;
  j["profile_hash"] = meta.profile_hash;
  j["monitored_stack"] = meta.monitored_stack;
  j["dt_sample"] = meta.dt_sample;
  j["max_equilibrium_residual"] = meta.max_equilibrium_residual;
  return j.dump(2) + "\n";
}

TraceMeta parse_trace_meta_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    TraceMeta m;
    m.scenario = j.at("scenario").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.profile_hash = j.at("profile_hash").get<std::string>();
    m.monitored_stack = j.at("monitored_stack").get<std::string>();
    m.dt_sample = j.at("dt_sample").get<double>();
    m.max_equilibrium_residual = j.value("max_equilibrium_residual", 0.0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("trace metadata: ") + e.what());
  }
}

}  // namespace hasel
