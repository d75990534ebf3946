#include "conflat/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace conflat::report {

namespace {

void indent(std::ostream& os, int depth) {
  for (int i = 0; i < depth; ++i) os << "  ";
}

void write_number(std::ostream& os, double v) {
  if (!std::isfinite(v)) {
    os << "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

bool is_scalar_array(const Json& j) {
  for (const auto& e : j)
    if (e.is_structured()) return false;
  return true;
}

void write(const Json& j, std::ostream& os, int depth) {
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        indent(os, depth + 1);
        os << Json(it.key()).dump() << ": ";
        write(it.value(), os, depth + 1);
      }
      os << '\n';
      indent(os, depth);
      os << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // Rows of plain numbers stay on one line.
      if (is_scalar_array(j)) {
        os << '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) os << ", ";
          write(j[i], os, depth + 1);
        }
        os << ']';
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        indent(os, depth + 1);
        write(j[i], os, depth + 1);
      }
      os << '\n';
      indent(os, depth);
      os << ']';
      return;
    }
    case Json::value_t::number_float: write_number(os, j.get<double>()); return;
    default: os << j.dump(); return;
  }
}

}  // namespace

void dump(const Json& j, std::ostream& os) {
  write(j, os, 0);
  os << '\n';
}

std::string dump(const Json& j) {
  std::ostringstream os;
  dump(j, os);
  return os.str();
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Json to_json(const Tensor3& t) {
  const int n = t.dim();
  Json out = Json::array();
  for (int i = 0; i < n; ++i) {
    Json a = Json::array();
    for (int j = 0; j < n; ++j) {
      Json row = Json::array();
      for (int k = 0; k < n; ++k) row.push_back(t(i, j, k));
      a.push_back(std::move(row));
    }
    out.push_back(std::move(a));
  }
  return out;
}

Json to_json(const Tensor4& t) {
  const int n = t.dim();
  Json out = Json::array();
  for (int i = 0; i < n; ++i) {
    Json a = Json::array();
    for (int j = 0; j < n; ++j) {
      Json b = Json::array();
      for (int k = 0; k < n; ++k) {
        Json row = Json::array();
        for (int l = 0; l < n; ++l) row.push_back(t(i, j, k, l));
        b.push_back(std::move(row));
      }
      a.push_back(std::move(b));
    }
    out.push_back(std::move(a));
  }
  return out;
}

Json pack_json(const CurvaturePack& p) {
  Json j;
  j["g"] = to_json(p.metric.g);
  j["ginv"] = to_json(p.metric.ginv);
  j["b"] = p.metric.b;
  j["christoffel"] = to_json(p.christoffel);
  j["second_fundamental"] = to_json(p.h);
  j["shape_operator"] = to_json(p.shape);
  j["principal_curvatures"] = to_json(p.kappa);
  j["riemann"] = to_json(p.riemann);
  j["ricci"] = to_json(p.ricci);
  j["scalar"] = p.scalar;
  if (p.n >= 3) j["schouten"] = to_json(p.schouten);
  if (p.weyl) j["weyl"] = to_json(*p.weyl);
  if (p.cotton) {
    j["cotton"] = to_json(p.cotton->cotton);
    j["schouten_derivative"] = to_json(p.cotton->dschouten);
  }
  return j;
}

Json point_json(const PointRecord& rec) {
  Json j;
  j["x"] = to_json(rec.x);
  j["verdict"] = rec.verdict.pass ? "pass" : "fail";
  Json w;
  w["measure"] = rec.verdict.measure;
  w["scale"] = rec.verdict.scale;
  for (const auto& [k, v] : rec.witness) w[k] = v;
  j["witness_norms"] = std::move(w);
  return j;
}

Json jet_discrepancy_json(const JetDiscrepancy& d) {
  Json out = Json::array();
  for (const auto& o : d.orders) {
    Json j;
    j["order"] = o.order;
    j["max_abs"] = o.max_abs;
    j["max_rel"] = o.max_rel;
    j["worst"] = o.worst;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace conflat::report
