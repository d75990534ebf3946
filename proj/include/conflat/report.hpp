#pragma once

// JSON rendering of analysis results. Every floating-point number is
// written with 17 significant digits so it reads back bit-exactly.

#include "conflat/curvature.hpp"
#include "conflat/flatness.hpp"
#include "conflat/jets.hpp"
#include "conflat/qc.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace conflat::report {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "conflat 0.1.0";

/// Deterministic JSON text: insertion-ordered keys, two-space indent,
/// doubles as %.17g, non-finite doubles as null.
std::string dump(const Json& j);
void dump(const Json& j, std::ostream& os);

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
Json to_json(const Tensor3& t);
Json to_json(const Tensor4& t);

Json pack_json(const CurvaturePack& pack);
Json point_json(const PointRecord& rec);
Json jet_discrepancy_json(const JetDiscrepancy& d);

}  // namespace conflat::report
