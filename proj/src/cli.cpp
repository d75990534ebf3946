#include "conflat/cli.hpp"

#include "conflat/curvature.hpp"
#include "conflat/errors.hpp"
#include "conflat/qc.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace conflat::cli {

using report::Json;

std::string to_string(Command c) {
  switch (c) {
    case Command::curvature: return "curvature";
    case Command::flatness: return "flatness";
    case Command::qc: return "qc";
    case Command::beltrami: return "beltrami";
    case Command::validate: return "validate";
  }
  return "unknown";
}

Command parse_command(std::string_view name) {
  for (Command c : {Command::curvature, Command::flatness, Command::qc, Command::beltrami, Command::validate})
    if (name == to_string(c)) return c;
  throw SpecError("unknown command '" + std::string(name) + "'");
}

// ------------------------------------------------------------- spec input

namespace {

template <typename T>
T field(const Json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SpecError(where + "." + key + " is missing or has the wrong type");
  }
}

std::vector<double> number_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw SpecError(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) {
    if (!e.is_number()) throw SpecError(where + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

SurfaceKind parse_kind(const std::string& s) {
  for (SurfaceKind k : {SurfaceKind::cylinder, SurfaceKind::paraboloid, SurfaceKind::ellipsoid, SurfaceKind::graph_expr})
    if (s == to_string(k)) return k;
  throw SpecError("spec.kind '" + s + "' is not one of cylinder, paraboloid, ellipsoid, graph-expr");
}

Box parse_box(const Json& domain) {
  if (!domain.is_object() || !domain.contains("box")) throw SpecError("spec.domain must be an object with a box");
  const Json& box = domain["box"];
  if (!box.is_array()) throw SpecError("spec.domain.box must be an array of [lo, hi] pairs");
  Box out;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const auto pair = number_list(box[i], "spec.domain.box[" + std::to_string(i) + "]");
    if (pair.size() != 2) throw SpecError("spec.domain.box[" + std::to_string(i) + "] must be [lo, hi]");
    out.bounds.emplace_back(pair[0], pair[1]);
  }
  return out;
}

std::vector<double> parse_csv_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw SpecError(what + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw SpecError(what + " is empty");
  return out;
}

qc::Map parse_map(const Json& doc, const SurfaceSpec& surface) {
  if (!doc.is_object() || !doc.contains("map")) throw SpecError("this command needs a spec.map object");
  const Json& m = doc["map"];
  const auto kind = field<std::string>(m, "kind", "spec.map");
  const int n = surface.n;
  if (kind == "identity") return qc::identity_map(n);
  if (kind == "similarity") {
    const double scale = m.value("scale", 1.0);
    const auto seed = m.value("rotation_seed", std::uint64_t{0});
    Vector shift = Vector::Zero(n);
    if (m.contains("shift")) {
      const auto s = number_list(m["shift"], "spec.map.shift");
      if (static_cast<int>(s.size()) != n) throw SpecError("spec.map.shift must have n entries");
      shift = Eigen::Map<const Vector>(s.data(), n);
    }
    if (!(scale > 0.0)) throw SpecError("spec.map.scale must be positive");
    return qc::similarity_map(n, scale, seed, shift);
  }
  if (kind == "diagonal") {
    const auto d = number_list(m.at("d"), "spec.map.d");
    if (static_cast<int>(d.size()) != n) throw SpecError("spec.map.d must have n entries");
    return qc::diagonal_map(Eigen::Map<const Vector>(d.data(), n));
  }
  if (kind == "graph") return qc::graph_embedding(surface);
  if (kind == "cylinder-unroll") return qc::cylinder_unroll(n);
  if (kind == "expr") {
    if (!m.contains("components") || !m["components"].is_array())
      throw SpecError("spec.map.components must be an array of expressions");
    std::vector<expr::Expr> comps;
    for (const auto& c : m["components"]) {
      if (!c.is_string()) throw SpecError("spec.map.components entries must be strings");
      comps.push_back(expr::parse(c.get<std::string>(), n));
    }
    return qc::expression_map(comps, n);
  }
  throw SpecError("spec.map.kind '" + kind + "' is not one of identity, similarity, diagonal, graph, cylinder-unroll, expr");
}

}  // namespace

SurfaceSpec parse_spec(const Json& doc) {
  if (!doc.is_object()) throw SpecError("spec must be a JSON object");
  const SurfaceKind kind = parse_kind(field<std::string>(doc, "kind", "spec"));

  std::vector<double> a;
  if (doc.contains("params")) {
    const Json& params = doc["params"];
    if (!params.is_object()) throw SpecError("spec.params must be an object");
    if (params.contains("a")) a = number_list(params["a"], "spec.params.a");
  }
  if (kind == SurfaceKind::ellipsoid) {
    if (a.empty()) throw SpecError("ellipsoid spec needs params.a");
    for (double ai : a) {
      if (!(ai > 0.0)) throw SpecError("ellipsoid coefficients must be positive");
      if (ai == 1.0) throw SpecError("ellipsoid coefficients must satisfy 0 < a_i != 1");
    }
  }

  std::optional<Box> box;
  if (doc.contains("domain")) box = parse_box(doc["domain"]);

  int n = 0;
  if (doc.contains("n")) {
    if (!doc["n"].is_number_integer()) throw SpecError("spec.n must be an integer");
    n = doc["n"].get<int>();
  } else if (!a.empty()) {
    n = static_cast<int>(a.size());
  } else if (box) {
    n = box->dim();
  } else {
    throw SpecError("spec.n is missing");
  }
  if (n < 1) throw SpecError("spec.n must be >= 1");

  SurfaceSpec spec;
  switch (kind) {
    case SurfaceKind::cylinder: spec = make_cylinder(n, box.value_or(Box{})); break;
    case SurfaceKind::paraboloid: spec = make_paraboloid(n, box.value_or(Box{})); break;
    case SurfaceKind::ellipsoid:
      if (static_cast<int>(a.size()) != n) throw SpecError("spec.params.a must have n entries");
      spec = make_ellipsoid(a, box.value_or(Box{}));
      break;
    case SurfaceKind::graph_expr: {
      if (!box) throw SpecError("graph-expr spec needs a domain box");
      const auto text = field<std::string>(doc, "expr", "spec");
      spec = make_graph_expr(expr::parse(text, n), n, *box);
      break;
    }
    case SurfaceKind::graph_fn: break;
  }
  if (doc.contains("id")) spec.id = field<std::string>(doc, "id", "spec");
  validate_spec(spec);
  return spec;
}

SurfaceSpec parse_spec_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  return parse_spec(doc);
}

SurfaceSpec load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open spec file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str());
}

// -------------------------------------------------------------------- run

namespace {

Json config_echo(const RunConfig& c) {
  Json j;
  j["command"] = to_string(c.command);
  j["spec"] = c.spec_json;
  if (c.at) {
    j["at"] = report::to_json(*c.at);
  } else if (const auto* rs = std::get_if<RandomSampler>(&c.sampler)) {
    j["sampling"] = {{"points", rs->count}, {"seed", rs->seed}};
  } else {
    j["sampling"] = {{"grid", std::get<GridSampler>(c.sampler).per_axis}};
  }
  j["criterion"] = c.criterion ? Json(to_string(*c.criterion)) : Json(nullptr);
  j["tol"] = c.tol ? Json(*c.tol) : Json(nullptr);
  j["mode"] = c.mode == CottonMode::analytic ? "analytic" : "fd";
  return j;
}

std::vector<Vector> run_points(const RunConfig& c, int* skipped) {
  if (c.at) {
    if (c.at->size() != c.surface.n) throw SpecError("--at needs exactly n coordinates");
    if (!in_surface_domain(c.surface, *c.at)) throw SpecError("--at point lies outside the surface domain");
    if (skipped) *skipped = 0;
    return {*c.at};
  }
  return sample_points(c.surface, c.sampler, 0.0, skipped);
}

Json skipped_json(int domain, int singular) { return {{"domain", domain}, {"singular", singular}}; }

void run_curvature(const RunConfig& c, RunResult& res, Json& rep) {
  const int n = c.surface.n;
  PackOptions opts;
  opts.cotton_mode = c.mode;
  opts.with_cotton = n == 3 || c.criterion == Criterion::cotton;
  const CurvatureEngine engine(c.surface, opts);
  const double tol = c.tol.value_or(default_tolerance(c.surface, c.mode));

  int rejected = 0;
  const auto pts = run_points(c, &rejected);
  int singular = 0;
  std::vector<PointRecord> records;
  Json points = Json::array();
  for (const Vector& x : pts) {
    CurvaturePack pack;
    try {
      pack = engine.at(x);
    } catch (const NumericalError&) {
      ++singular;
      continue;
    } catch (const Error&) {
      if (c.at) throw;
      ++rejected;
      continue;
    }
    PointRecord rec;
    rec.x = x;
    if (n >= 3) {
      const bool use_pc = c.criterion == Criterion::principal_curvature && n >= 4;
      rec.verdict = use_pc ? pc_criterion(pack.kappa, n, tol) : classify_point(pack, n, tol);
    } else {
      rec.verdict = {true, 0.0, 1.0, tol};
    }
    rec.witness["max_abs_riemann"] = pack.riemann.max_abs();
    if (pack.weyl) rec.witness["max_abs_weyl"] = pack.weyl->max_abs();
    if (pack.cotton) rec.witness["max_abs_cotton"] = pack.cotton->cotton.max_abs();
    Json pj = report::point_json(rec);
    pj["tensors"] = report::pack_json(pack);
    const InvariantResiduals inv = check_invariants(pack);
    pj["invariants"] = {{"riemann_antisymmetry", inv.riemann_antisymmetry},
                        {"riemann_pair_symmetry", inv.riemann_pair_symmetry},
                        {"bianchi", inv.bianchi},
                        {"weyl_trace", inv.weyl_trace},
                        {"cotton_antisymmetry", inv.cotton_antisymmetry},
                        {"cotton_trace", inv.cotton_trace},
                        {"metric_inverse", inv.metric_inverse}};
    points.push_back(std::move(pj));
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw NumericalError("no point could be evaluated");
  rep["points"] = std::move(points);
  rep["aggregate"] = n >= 3 ? to_string(aggregate_verdict(records)) : "n/a";
  rep["skipped"] = skipped_json(rejected, singular);
  res.summary = "curvature: " + c.surface.id + " points=" + std::to_string(records.size()) +
                " aggregate=" + rep["aggregate"].get<std::string>();
}

void run_flatness(const RunConfig& c, RunResult& res, Json& rep) {
  ScanOptions opts;
  opts.sampler = c.sampler;
  opts.criterion = c.criterion;
  opts.tol = c.tol;
  opts.mode = c.mode;
  if (c.at) throw SpecError("flatness scans take --points/--seed or --grid, not --at");
  const FlatnessReport fr = grid_scan(c.surface, opts);
  rep["criterion"] = to_string(fr.criterion);
  rep["tolerance"] = fr.tol;
  Json points = Json::array();
  for (const auto& p : fr.points) points.push_back(report::point_json(p));
  rep["points"] = std::move(points);
  rep["aggregate"] = to_string(fr.aggregate);
  rep["skipped"] = skipped_json(fr.skipped_domain, fr.skipped_singular);
  std::ostringstream s;
  s << "flatness: " << fr.surface_id << " n=" << fr.n << " criterion=" << to_string(fr.criterion)
    << " tol=" << fr.tol << " points=" << fr.points.size()
    << " skipped=" << (fr.skipped_domain + fr.skipped_singular) << " aggregate=" << to_string(fr.aggregate);
  res.summary = s.str();
}

void run_qc(const RunConfig& c, RunResult& res, Json& rep) {
  const qc::Map map = parse_map(c.spec_json, c.surface);
  const bool fd = c.mode == CottonMode::fd;
  const double tol = c.tol.value_or(fd ? 1e-6 : 1e-8);
  int rejected = 0;
  const auto pts = run_points(c, &rejected);
  const qc::QCReport qr = qc::qc_check_map(map, pts, fd);
  Json points = Json::array();
  bool all = true;
  for (const auto& p : qr.points) {
    const bool ok = p.defect <= tol;
    all = all && ok;
    points.push_back({{"x", report::to_json(p.x)},
                      {"verdict", ok ? "conformal" : "not-conformal"},
                      {"witness_norms", {{"defect", p.defect}, {"factor", p.factor}}}});
  }
  if (qr.points.empty()) throw NumericalError("no point had a nondegenerate Jacobian");
  rep["map"] = map.name;
  rep["tolerance"] = tol;
  rep["points"] = std::move(points);
  rep["max_defect"] = qr.max_defect;
  rep["aggregate"] = all ? "conformal" : "not-conformal";
  rep["skipped"] = skipped_json(rejected, qr.skipped);
  std::ostringstream s;
  s << "qc: map=" << map.name << " points=" << qr.points.size() << " max_defect=" << qr.max_defect
    << " aggregate=" << rep["aggregate"].get<std::string>();
  res.summary = s.str();
}

void run_beltrami(const RunConfig& c, RunResult& res, Json& rep) {
  const qc::Map h = parse_map(c.spec_json, c.surface);
  if (h.in_dim != h.out_dim) throw SpecError("Beltrami candidate map must be R^n -> R^n");
  const qc::Map sigma = qc::graph_embedding(c.surface);
  const qc::MetricField G = qc::induced_metric(sigma);
  const bool fd = c.mode == CottonMode::fd;
  const double tol = c.tol.value_or(fd ? 1e-6 : 1e-8);
  constexpr double kComposeTol = 1e-6;

  int rejected = 0;
  const auto pts = run_points(c, &rejected);
  const qc::QCReport residuals = qc::beltrami_residual(h, G, pts, fd);
  const qc::QCReport composed = qc::compose_check(sigma, h, pts);

  if (2 * composed.skipped > static_cast<int>(pts.size()))
    throw NumericalError("Newton inversion failed at more than half of the points");

  Json points = Json::array();
  bool all = true;
  std::size_t ci = 0;
  for (const auto& p : residuals.points) {
    Json w = {{"residual", p.defect}};
    if (ci < composed.points.size() && composed.points[ci].x == p.x) {
      w["composed_defect"] = composed.points[ci].defect;
      w["composed_factor"] = composed.points[ci].factor;
      w["newton_iterations"] = composed.points[ci].newton_iterations;
      ++ci;
    }
    const bool ok = p.defect <= tol;
    all = all && ok;
    points.push_back({{"x", report::to_json(p.x)}, {"verdict", ok ? "solution" : "not-solution"}, {"witness_norms", w}});
  }
  rep["map"] = h.name;
  rep["tolerance"] = tol;
  rep["points"] = std::move(points);
  rep["max_residual"] = residuals.max_defect;
  rep["max_composed_defect"] = composed.max_defect;
  rep["composed_conformal"] = composed.max_defect <= kComposeTol;
  rep["aggregate"] = all ? "solution" : "not-solution";
  rep["skipped"] = skipped_json(rejected, composed.skipped);
  std::ostringstream s;
  s << "beltrami: map=" << h.name << " points=" << residuals.points.size() << " max_residual=" << residuals.max_defect
    << " max_composed_defect=" << composed.max_defect << " aggregate=" << rep["aggregate"].get<std::string>();
  res.summary = s.str();
}

void run_validate(const RunConfig& c, RunResult& res, Json& rep) {
  const double tol = c.tol.value_or(1e-5);
  const SurfaceSpec& s = c.surface;
  const JetField reference = make_jet_field(s, 3);
  std::optional<JetField> symbolic;
  if (s.kind != SurfaceKind::graph_expr && c.spec_json.contains("expr")) {
    const auto e = expr::parse(c.spec_json["expr"].get<std::string>(), s.n);
    symbolic = make_jet_field(make_graph_expr(e, s.n, s.domain), 3);
  }
  const ScalarField height = [s](const Vector& x) {
    if (!in_surface_domain(s, x)) throw OutOfDomainError("stencil point outside surface domain");
    return surface_height(s, x);
  };

  int rejected = 0;
  const auto pts = run_points(c, &rejected);
  int failed = 0;
  bool all = true;
  Json points = Json::array();
  for (const Vector& x : pts) {
    Json checks;
    bool ok = true;
    try {
      const SurfaceJet ref = reference(x);
      const JetDiscrepancy fd = validate_jet(ref, fd_jet(height, x, 3), tol);
      checks["fd"] = report::jet_discrepancy_json(fd);
      ok = ok && fd.pass;
      if (symbolic) {
        const JetDiscrepancy sy = validate_jet(ref, (*symbolic)(x), tol);
        checks["expr"] = report::jet_discrepancy_json(sy);
        ok = ok && sy.pass;
      }
    } catch (const Error&) {
      ++failed;
      continue;
    }
    all = all && ok;
    points.push_back({{"x", report::to_json(x)}, {"verdict", ok ? "pass" : "fail"}, {"witness_norms", checks}});
  }
  if (points.empty()) throw NumericalError("no point could be evaluated");
  rep["reference"] = s.kind == SurfaceKind::graph_expr ? "expr" : "builtin";
  rep["tolerance"] = tol;
  rep["points"] = std::move(points);
  rep["aggregate"] = all ? "consistent" : "inconsistent";
  rep["skipped"] = skipped_json(rejected, failed);
  res.summary = "validate: " + s.id + " aggregate=" + rep["aggregate"].get<std::string>();
}

}  // namespace

RunResult run(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunResult res;
  Json rep;
  rep["tool_version"] = report::kToolVersion;
  rep["config_echo"] = config_echo(config);
  rep["surface_id"] = config.surface.id;
  rep["n"] = config.surface.n;
  switch (config.command) {
    case Command::curvature: run_curvature(config, res, rep); break;
    case Command::flatness: run_flatness(config, res, rep); break;
    case Command::qc: run_qc(config, res, rep); break;
    case Command::beltrami: run_beltrami(config, res, rep); break;
    case Command::validate: run_validate(config, res, rep); break;
  }
  const double elapsed =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  rep["elapsed_ms"] = config.timing ? elapsed : 0.0;
  res.report = std::move(rep);

  if (!config.out_path.empty()) {
    std::ofstream out(config.out_path, std::ios::binary);
    if (!out) throw SpecError("cannot write report to '" + config.out_path + "'");
    report::dump(res.report, out);
  }
  return res;
}

// -------------------------------------------------------------------- main

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conformal flatness and quasiconformality checks for graph hypersurfaces", "conflat"};
  std::string command, spec_path, grid, at, criterion, mode = "analytic", out_path;
  int points = 100;
  std::uint64_t seed = 0;
  std::optional<double> tol;
  bool timing = false;

  app.add_option("command", command, "curvature | flatness | qc | beltrami | validate")
      ->required()
      ->check(CLI::IsMember({"curvature", "flatness", "qc", "beltrami", "validate"}));
  app.add_option("--spec", spec_path, "surface spec JSON file")->required();
  auto* pts_opt = app.add_option("--points", points, "number of random sample points")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  auto* grid_opt = app.add_option("--grid", grid, "grid points per axis, comma separated");
  grid_opt->excludes(pts_opt)->excludes(seed_opt);
  auto* at_opt = app.add_option("--at", at, "single evaluation point, comma separated");
  at_opt->excludes(grid_opt)->excludes(pts_opt);
  app.add_option("--criterion", criterion, "weyl | cotton | pc")->check(CLI::IsMember({"weyl", "cotton", "pc"}));
  app.add_option("--tol", tol, "tolerance override")->check(CLI::PositiveNumber);
  app.add_option("--mode", mode, "analytic | fd")->check(CLI::IsMember({"analytic", "fd"}));
  app.add_option("--out", out_path, "report output path")->required();
  app.add_flag("--timing", timing, "record wall time in elapsed_ms (reports are then not reproducible)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    RunConfig cfg;
    cfg.command = parse_command(command);
    {
      std::ifstream in(spec_path, std::ios::binary);
      if (!in) throw SpecError("cannot open spec file '" + spec_path + "'");
      std::ostringstream buf;
      buf << in.rdbuf();
      try {
        cfg.spec_json = Json::parse(buf.str());
      } catch (const nlohmann::json::parse_error& e) {
        throw SpecError("malformed JSON in '" + spec_path + "' at byte " + std::to_string(e.byte));
      }
    }
    cfg.surface = parse_spec(cfg.spec_json);
    if (!grid.empty()) {
      GridSampler g;
      for (double v : parse_csv_numbers(grid, "--grid")) {
        if (v != static_cast<int>(v) || v < 1) throw SpecError("--grid counts must be positive integers");
        g.per_axis.push_back(static_cast<int>(v));
      }
      cfg.sampler = g;
    } else {
      cfg.sampler = RandomSampler{points, seed};
    }
    if (!at.empty()) {
      const auto v = parse_csv_numbers(at, "--at");
      cfg.at = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (criterion == "weyl") cfg.criterion = Criterion::weyl;
    if (criterion == "cotton") cfg.criterion = Criterion::cotton;
    if (criterion == "pc") cfg.criterion = Criterion::principal_curvature;
    cfg.tol = tol;
    cfg.mode = mode == "fd" ? CottonMode::fd : CottonMode::analytic;
    cfg.out_path = out_path;
    cfg.timing = timing;

    const RunResult res = run(cfg);
    out << res.summary << '\n';
    return res.exit_code;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace conflat::cli
