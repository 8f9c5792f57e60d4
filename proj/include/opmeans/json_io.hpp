#pragma once

// JSON serialization for matrices, vectors, witnesses, and reports, plus
// the argument grammar of the command line.
//
// Matrix format: {"dim": n, "re": [[...]], "im": [[...]]}, row-major;
// "im" is omitted when the matrix is real.  Vectors use the same scheme
// with flat arrays.  All numbers round-trip exactly (shortest decimal
// that recovers the double).

#include <string>

#include <json.hpp>

#include "opmeans/harness.hpp"
#include "opmeans/hermitian.hpp"

namespace opmeans {

// Version tag stamped into every top-level CLI output object.
inline constexpr const char* kOutputVersion = "1";

nlohmann::json matrix_to_json(const HermitianMatrix& m);
HermitianMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const CVector& v);
CVector vector_from_json(const nlohmann::json& j);

nlohmann::json witness_to_json(const Witness& w);
Witness witness_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const ConditionReport& r);
nlohmann::json chain_to_json(const ChainReport& r);

// Command-line matrix arguments, tried in this order:
//   "I" / "<c>I"        scaled identity of dimension dim_hint
//   "diag(a,b,...)"     real diagonal matrix
//   bare number         1x1 matrix
//   text starting "{"   inline matrix JSON
//   anything else       path to a file holding matrix JSON
// Parsed JSON must be Hermitian within 1e-9 * max(1, norm).
HermitianMatrix parse_matrix_arg(const std::string& text, int dim_hint);

}  // namespace opmeans
