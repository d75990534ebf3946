#include "conflat/cli.hpp"
#include "conflat/curvature.hpp"
#include "conflat/errors.hpp"
#include "conflat/expr.hpp"
#include "conflat/flatness.hpp"
#include "conflat/qc.hpp"
#include "conflat/report.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace conflat;

namespace {

// Structured results cross the boundary as JSON text; the package decodes them.
std::string jet_json(const SurfaceJet& j) {
  report::Json o;
  o["x"] = report::to_json(j.x);
  o["r"] = j.r;
  o["grad"] = report::to_json(j.grad);
  o["hess"] = report::to_json(j.hess);
  if (j.third) o["third"] = report::to_json(*j.third);
  o["b"] = j.b;
  return report::dump(o);
}

std::string scan_json(const FlatnessReport& r) {
  report::Json o;
  o["surface_id"] = r.surface_id;
  o["n"] = r.n;
  o["criterion"] = to_string(r.criterion);
  o["tol"] = r.tol;
  o["aggregate"] = to_string(r.aggregate);
  o["skipped"] = {{"domain", r.skipped_domain}, {"singular", r.skipped_singular}};
  o["points"] = report::Json::array();
  for (const auto& p : r.points) o["points"].push_back(report::point_json(p));
  return report::dump(o);
}

std::optional<Criterion> criterion_of(const std::optional<std::string>& name) {
  if (!name) return std::nullopt;
  if (*name == "weyl") return Criterion::weyl;
  if (*name == "cotton") return Criterion::cotton;
  if (*name == "pc") return Criterion::principal_curvature;
  throw std::invalid_argument("unknown criterion '" + *name + "'");
}

CottonMode mode_of(const std::string& name) {
  if (name == "analytic") return CottonMode::analytic;
  if (name == "fd") return CottonMode::fd;
  throw std::invalid_argument("unknown mode '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_conflat, m) {
  m.doc() = "Conformal flatness of graph hypersurfaces";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<OutOfDomainError>(m, "OutOfDomainError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<SpecError>(m, "SpecError", base.ptr());

  py::class_<expr::Expr>(m, "Expr")
      .def("__str__", [](const expr::Expr& e) { return expr::to_string(e); })
      .def("__repr__", [](const expr::Expr& e) { return "Expr('" + expr::to_string(e) + "')"; })
      .def("evaluate", [](const expr::Expr& e, const std::vector<double>& p) { return expr::evaluate(e, p); })
      .def("differentiate", [](const expr::Expr& e, int var) { return expr::differentiate(e, var); })
      .def("simplify", [](const expr::Expr& e) { return expr::simplify(e); })
      .def("node_count", [](const expr::Expr& e) { return expr::node_count(e); })
      .def("__eq__", [](const expr::Expr& a, const expr::Expr& b) { return expr::structurally_equal(a, b); });
  m.def("parse", &expr::parse, py::arg("text"), py::arg("dim"));

  py::class_<SurfaceSpec>(m, "Surface")
      .def_readonly("n", &SurfaceSpec::n)
      .def_readonly("id", &SurfaceSpec::id)
      .def_property_readonly("kind", [](const SurfaceSpec& s) { return to_string(s.kind); })
      .def("height", [](const SurfaceSpec& s, const Vector& x) { return surface_height(s, x); });
  m.def("load_spec_text", &cli::parse_spec_text, py::arg("text"));
  m.def("load_spec", &cli::load_spec, py::arg("path"));

  m.def("_jet", [](const SurfaceSpec& s, const Vector& x, int order, const std::string& provider) {
    SurfaceJet j;
    if (provider == "builtin") j = builtin_jet(s, x, order);
    else if (provider == "fd") j = fd_jet([&](const Vector& y) { return surface_height(s, y); }, x, order);
    else if (provider == "auto") j = surface_jet(s, x, order);
    else throw std::invalid_argument("unknown provider '" + provider + "'");
    return jet_json(j);
  });

  m.def("_curvature", [](const SurfaceSpec& s, const Vector& x, const std::string& mode) {
    PackOptions o;
    o.cotton_mode = mode_of(mode);
    const CurvaturePack p = curvature_pack(s, x, o);
    report::Json j = report::pack_json(p);
    const InvariantResiduals r = check_invariants(p);
    j["invariants"] = {{"riemann_antisymmetry", r.riemann_antisymmetry},
                       {"riemann_pair_symmetry", r.riemann_pair_symmetry},
                       {"bianchi", r.bianchi},
                       {"weyl_trace", r.weyl_trace},
                       {"cotton_antisymmetry", r.cotton_antisymmetry},
                       {"cotton_trace", r.cotton_trace},
                       {"metric_inverse", r.metric_inverse},
                       {"worst", r.worst()}};
    return report::dump(j);
  });

  m.def("_grid_scan",
        [](const SurfaceSpec& s, std::optional<int> points, std::uint64_t seed, std::optional<std::vector<int>> grid,
           std::optional<std::string> criterion, std::optional<double> tol, const std::string& mode) {
          ScanOptions o;
          if (grid) o.sampler = GridSampler{*grid};
          else o.sampler = RandomSampler{points.value_or(100), seed};
          o.criterion = criterion_of(criterion);
          o.tol = tol;
          o.mode = mode_of(mode);
          return scan_json(grid_scan(s, o));
        });

  m.def("sample_points", [](const SurfaceSpec& s, int count, std::uint64_t seed) {
    return sample_points(s, RandomSampler{count, seed});
  }, py::arg("surface"), py::arg("count"), py::arg("seed") = 0);

  m.def("conformal_defect", [](const Matrix& J) {
    const qc::Conformality c = qc::conformal_defect(J);
    return py::make_tuple(c.defect, c.factor);
  }, py::arg("jacobian"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<std::string> full{"conflat"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : full) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));

  m.attr("__version__") = report::kToolVersion;
}
