#include "opmeans/json_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace opmeans {

namespace {

using nlohmann::json;

bool all_real(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j).imag() != 0.0) return false;
    }
  }
  return true;
}

json real_part_rows(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j).real());
    rows.push_back(std::move(row));
  }
  return rows;
}

json imag_part_rows(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j).imag());
    rows.push_back(std::move(row));
  }
  return rows;
}

// n x n array of numbers -> real matrix entries.
Eigen::MatrixXd parse_rows(const json& rows, int dim, const char* field) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != dim) {
    throw std::invalid_argument(std::string("matrix JSON: '") + field +
                                "' must be an array of " +
                                std::to_string(dim) + " rows");
  }
  Eigen::MatrixXd out(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || static_cast<int>(row.size()) != dim) {
      throw std::invalid_argument(std::string("matrix JSON: row ") +
                                  std::to_string(i) + " of '" + field +
                                  "' must hold " + std::to_string(dim) +
                                  " numbers");
    }
    for (int j = 0; j < dim; ++j) {
      if (!row[j].is_number()) {
        throw std::invalid_argument(std::string("matrix JSON: '") + field +
                                    "' entries must be numbers");
      }
      out(i, j) = row[j].get<double>();
    }
  }
  return out;
}

}  // namespace

nlohmann::json matrix_to_json(const HermitianMatrix& m) {
  json j;
  j["dim"] = m.dim();
  j["re"] = real_part_rows(m.matrix());
  if (!all_real(m.matrix())) j["im"] = imag_part_rows(m.matrix());
  return j;
}

HermitianMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw std::invalid_argument("matrix JSON must be an object");
  }
  if (!j.contains("dim") || !j["dim"].is_number_integer()) {
    throw std::invalid_argument("matrix JSON needs an integer 'dim'");
  }
  const int dim = j["dim"].get<int>();
  if (dim < 1) throw std::invalid_argument("matrix JSON: dim must be >= 1");
  if (!j.contains("re")) {
    throw std::invalid_argument("matrix JSON needs 're'");
  }
  const Eigen::MatrixXd re = parse_rows(j["re"], dim, "re");
  CMatrix m = re.cast<cplx>();
  if (j.contains("im")) {
    const Eigen::MatrixXd im = parse_rows(j["im"], dim, "im");
    m += cplx(0.0, 1.0) * im.cast<cplx>();
  }
  const double dev = (m - m.adjoint().eval()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (dev > 1e-9 * scale) {
    std::ostringstream os;
    os << "matrix JSON is not Hermitian: max |M - M*| = " << dev;
    throw std::invalid_argument(os.str());
  }
  return HermitianMatrix(m);
}

nlohmann::json vector_to_json(const CVector& v) {
  json j;
  j["dim"] = static_cast<int>(v.size());
  json re = json::array();
  bool has_imag = false;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    re.push_back(v(i).real());
    has_imag = has_imag || v(i).imag() != 0.0;
  }
  j["re"] = std::move(re);
  if (has_imag) {
    json im = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) im.push_back(v(i).imag());
    j["im"] = std::move(im);
  }
  return j;
}

CVector vector_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j["dim"].is_number_integer()) {
    throw std::invalid_argument("vector JSON needs an integer 'dim'");
  }
  const int dim = j["dim"].get<int>();
  if (dim < 1) throw std::invalid_argument("vector JSON: dim must be >= 1");
  const auto parse_flat = [&](const json& arr, const char* field) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != dim) {
      throw std::invalid_argument(std::string("vector JSON: '") + field +
                                  "' must hold " + std::to_string(dim) +
                                  " numbers");
    }
    RVector out(dim);
    for (int i = 0; i < dim; ++i) {
      if (!arr[i].is_number()) {
        throw std::invalid_argument(std::string("vector JSON: '") + field +
                                    "' entries must be numbers");
      }
      out(i) = arr[i].get<double>();
    }
    return out;
  };
  if (!j.contains("re")) throw std::invalid_argument("vector JSON needs 're'");
  const RVector re = parse_flat(j["re"], "re");
  CVector v = re.cast<cplx>();
  if (j.contains("im")) {
    const RVector im = parse_flat(j["im"], "im");
    v += cplx(0.0, 1.0) * im.cast<cplx>();
  }
  return v;
}

nlohmann::json witness_to_json(const Witness& w) {
  json j;
  json matrices = json::object();
  for (const auto& [name, m] : w.matrices) matrices[name] = matrix_to_json(m);
  json vectors = json::object();
  for (const auto& [name, v] : w.vectors) vectors[name] = vector_to_json(v);
  json scalars = json::object();
  for (const auto& [name, s] : w.scalars) scalars[name] = s;
  if (!matrices.empty()) j["matrices"] = std::move(matrices);
  if (!vectors.empty()) j["vectors"] = std::move(vectors);
  if (!scalars.empty()) j["scalars"] = std::move(scalars);
  return j;
}

Witness witness_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw std::invalid_argument("witness JSON must be an object");
  }
  Witness w;
  if (j.contains("matrices")) {
    for (const auto& [name, mj] : j["matrices"].items()) {
      w.matrices.emplace(name, matrix_from_json(mj));
    }
  }
  if (j.contains("vectors")) {
    for (const auto& [name, vj] : j["vectors"].items()) {
      w.vectors.emplace(name, vector_from_json(vj));
    }
  }
  if (j.contains("scalars")) {
    for (const auto& [name, sj] : j["scalars"].items()) {
      if (!sj.is_number()) {
        throw std::invalid_argument("witness JSON: scalars must be numbers");
      }
      w.scalars.emplace(name, sj.get<double>());
    }
  }
  return w;
}

nlohmann::json report_to_json(const ConditionReport& r) {
  json j;
  j["condition"] = to_string(r.condition);
  j["function"] = r.function;
  j["outcome"] = to_string(r.outcome);
  j["pass"] = r.pass;
  j["trials"] = r.trials;
  j["worst_margin"] = r.worst_margin;
  if (r.witness) j["witness"] = witness_to_json(*r.witness);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

nlohmann::json chain_to_json(const ChainReport& r) {
  json j;
  j["ok"] = r.ok;
  json steps = json::array();
  for (const ChainStep& s : r.steps) {
    json sj;
    sj["order_margin"] = s.order_margin;
    sj["sandwich_margin"] = s.sandwich_margin;
    sj["resid_x"] = s.resid_x;
    sj["resid_y"] = s.resid_y;
    sj["f_monotone_margin"] = s.f_monotone_margin;
    sj["dist_to_limit"] = s.dist_to_limit;
    sj["expected_dist"] = s.expected_dist;
    steps.push_back(std::move(sj));
  }
  j["steps"] = std::move(steps);
  return j;
}

namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Full-consumption double parse; nullopt when the text is not a number.
std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  return v;
}

}  // namespace

HermitianMatrix parse_matrix_arg(const std::string& text, int dim_hint) {
  const std::string t = trimmed(text);
  if (t.empty()) throw std::invalid_argument("empty matrix argument");
  if (dim_hint < 1) throw std::invalid_argument("--dim must be >= 1");

  if (t == "I") return HermitianMatrix::identity(dim_hint);
  if (t.size() > 1 && t.back() == 'I') {
    if (const auto c = parse_number(t.substr(0, t.size() - 1))) {
      return HermitianMatrix::identity(dim_hint).scaled(*c);
    }
  }
  if (t.rfind("diag(", 0) == 0 && t.back() == ')') {
    const std::string inner = t.substr(5, t.size() - 6);
    std::vector<double> entries;
    std::stringstream ss(inner);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
      const auto v = parse_number(trimmed(piece));
      if (!v) {
        throw std::invalid_argument("diag(...) entries must be numbers: '" +
                                    piece + "'");
      }
      entries.push_back(*v);
    }
    if (entries.empty()) {
      throw std::invalid_argument("diag(...) needs at least one entry");
    }
    return HermitianMatrix::diagonal(entries);
  }
  if (const auto v = parse_number(t)) {
    return HermitianMatrix::diagonal({*v});
  }
  if (t.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(t);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument(std::string("matrix JSON parse error: ") +
                                  e.what());
    }
    return matrix_from_json(j);
  }
  std::ifstream in(t);
  if (!in) {
    throw std::invalid_argument("cannot read matrix file '" + t + "'");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("matrix file '" + t +
                                "': " + std::string(e.what()));
  }
  return matrix_from_json(j);
}

}  // namespace opmeans
