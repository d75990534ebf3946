#pragma once

// Batch driver: surface specs in, JSON reports out.
//
//   conflat <command> --spec <file> [--points N --seed S | --grid k1,k2,...]
//           [--criterion weyl|cotton|pc] [--tol T] [--mode analytic|fd]
//           [--at x1,x2,...] [--timing] --out <file>
//
// Exit codes: 0 analysis completed (whatever the verdict), 2 input error,
// 3 numerical failure.

#include "conflat/flatness.hpp"
#include "conflat/jets.hpp"
#include "conflat/report.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace conflat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

enum class Command { curvature, flatness, qc, beltrami, validate };

std::string to_string(Command c);
Command parse_command(std::string_view name);

struct RunConfig {
  Command command = Command::flatness;
  report::Json spec_json;  // the surface spec as loaded, echoed into reports
  SurfaceSpec surface;
  Sampler sampler = RandomSampler{100, 0};
  std::optional<Vector> at;  // single evaluation point (overrides sampler)
  std::optional<Criterion> criterion;
  std::optional<double> tol;
  CottonMode mode = CottonMode::analytic;
  std::string out_path;
  bool timing = false;
};

/// Parses a surface spec document:
///   {"kind": "cylinder"|"paraboloid"|"ellipsoid"|"graph-expr", "n": 4,
///    "params": {"a": [...]}, "expr": "...", "domain": {"box": [[lo, hi], ...]},
///    "id": "...", "map": {...}}
/// Throws SpecError (schema, JSON syntax) or ParseError (expression).
SurfaceSpec parse_spec(const report::Json& doc);
SurfaceSpec parse_spec_text(std::string_view text);
SurfaceSpec load_spec(const std::string& path);

struct RunResult {
  int exit_code = kExitOk;
  report::Json report;
  std::string summary;
};

/// Runs one command. Writes the report to config.out_path when set.
RunResult run(const RunConfig& config);

/// Full command line entry point.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace conflat::cli
