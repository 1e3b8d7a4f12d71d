#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hasel {

// Shortest round-trip decimal form; identical bytes for identical doubles.
std::string format_number(double v);

struct TraceSample {
  double t = 0.0;       // s
  double v_cmd = 0.0;   // kV
  double v_meas = 0.0;  // kV, monitor channel
  double i_meas = 0.0;  // uA, monitor channel of the monitored stack
  std::vector<double> theta;      // rad, per joint
  std::vector<double> f_contact;  // N, per joint
  std::vector<double> x;          // mm, per stack
  std::vector<double> c;          // nF, per stack
};

// Names behind the per-joint and per-stack vectors, e.g. joint "index_mcp".
struct TraceLayout {
  std::vector<std::string> joints;
  std::vector<std::string> fingers;  // one abduction column each
  std::vector<std::string> stacks;

  bool operator==(const TraceLayout&) const = default;
};

struct TraceMeta {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string profile_hash;
  std::string monitored_stack;
  double dt_sample = 1e-3;
  double max_equilibrium_residual = 0.0;  // N, over interior solves
};

struct SignalTrace {
  TraceLayout layout;
  TraceMeta meta;
  std::vector<TraceSample> rows;

  std::vector<double> times() const;
  std::vector<double> currents() const;
  std::vector<double> voltages() const;  // v_meas
  // Series of one per-joint or per-stack quantity, by name.
  std::vector<double> theta_of(const std::string& joint) const;
  std::vector<double> f_contact_of(const std::string& joint) const;
  std::vector<double> x_of(const std::string& stack) const;
  std::vector<double> c_of(const std::string& stack) const;

  int joint_index(const std::string& joint) const;
  int stack_index(const std::string& stack) const;
};

std::vector<std::string> trace_columns(const TraceLayout& layout);

void write_trace_csv(const SignalTrace& trace, std::ostream& out);

// Parses a trace CSV, validating the header against the column schema.
// Throws SchemaError naming the offending column or row.
SignalTrace read_trace_csv(std::istream& in);

std::string trace_meta_json(const TraceMeta& meta);
TraceMeta parse_trace_meta_json(const std::string& text);

}  // namespace hasel
