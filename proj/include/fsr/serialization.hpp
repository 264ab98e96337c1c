#ifndef FSR_SERIALIZATION_HPP
#define FSR_SERIALIZATION_HPP

// JSON form of PerturbationSetup and CSV forms of the two dataset kinds.
// Files use 1-based permutation arrays; memory uses 0-based ones.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fsr/core_types.hpp"

namespace fsr {

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline nlohmann::json to_one_based(const Permutation& p) {
  nlohmann::json a = nlohmann::json::array();
  for (std::size_t v : p) a.push_back(v + 1);
  return a;
}

inline Permutation from_one_based(const nlohmann::json& a, const std::string& field) {
  if (!a.is_array()) throw ParseError(field, "expected an array");
  Permutation p;
  p.reserve(a.size());
  for (const auto& v : a) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
      throw ParseError(field, "entries must be positive integers (1-based)");
    }
    p.push_back(v.get<std::size_t>() - 1);
  }
  return p;
}

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(name, "missing field");
  return *it;
}

inline std::uint64_t require_unsigned(const nlohmann::json& j, const char* name) {
  const auto& v = require_field(j, name);
  if (!v.is_number_unsigned()) throw ParseError(name, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw DomainError("cannot format double");
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, const std::string& field) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(field, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace detail

inline nlohmann::json setup_to_json(const PerturbationSetup& s) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = to_string(s.method);
  j["m"] = s.m;
  j["n"] = s.n;
  j["seed"] = s.seed;
  j["rng"] = s.rng;
  j["tie_perm"] = detail::to_one_based(s.tie_perm);
  if (s.method == Method::SignFlip) {
    j["sign_matrix"] = s.sign_matrix;
  } else {
    nlohmann::json perms = nlohmann::json::array();
    for (const auto& p : s.permutations) perms.push_back(detail::to_one_based(p));
    j["permutations"] = std::move(perms);
  }
  return j;
}

inline std::string serialize_setup(const PerturbationSetup& s) { return setup_to_json(s).dump(1) + "\n"; }

/// Parses a setup. Structural problems raise ParseError naming the field;
/// the result is not validated (use validate_setup).
inline PerturbationSetup setup_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("<root>", "expected a JSON object");
  PerturbationSetup s;
  const auto& method = detail::require_field(j, "method");
  if (method == "sign_flip") {
    s.method = Method::SignFlip;
  } else if (method == "permute") {
    s.method = Method::Permute;
  } else {
    throw ParseError("method", "expected \"sign_flip\" or \"permute\"");
  }
  s.m = detail::require_unsigned(j, "m");
  s.n = detail::require_unsigned(j, "n");
  s.seed = detail::require_unsigned(j, "seed");
  if (auto it = j.find("rng"); it != j.end()) {
    if (!it->is_string()) throw ParseError("rng", "expected a string");
    s.rng = it->get<std::string>();
  }
  s.tie_perm = detail::from_one_based(detail::require_field(j, "tie_perm"), "tie_perm");

  if (s.method == Method::SignFlip) {
    const auto& rows = detail::require_field(j, "sign_matrix");
    if (!rows.is_array()) throw ParseError("sign_matrix", "expected an array of rows");
    for (const auto& row : rows) {
      if (!row.is_array()) throw ParseError("sign_matrix", "expected an array of rows");
      std::vector<int> r;
      r.reserve(row.size());
      for (const auto& v : row) {
        if (!v.is_number_integer()) throw ParseError("sign_matrix", "entries must be integers");
        r.push_back(v.get<int>());
      }
      s.sign_matrix.push_back(std::move(r));
    }
  } else {
    const auto& perms = detail::require_field(j, "permutations");
    if (!perms.is_array()) throw ParseError("permutations", "expected an array");
    for (const auto& p : perms) s.permutations.push_back(detail::from_one_based(p, "permutations"));
  }
  return s;
}

inline PerturbationSetup deserialize_setup(std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("<json>", e.what());
  }
  return setup_from_json(j);
}

inline PerturbationSetup load_setup(const std::string& path) {
  return deserialize_setup(detail::read_file(path));
}

inline void save_setup(const PerturbationSetup& s, const std::string& path) {
  detail::write_file(path, serialize_setup(s));
}

// ---------------------------------------------------------------------------
// CSV

inline std::string regression_to_csv(const RegressionDataset& ds) {
  std::string out;
  for (std::size_t k = 0; k < ds.n_theta(); ++k) out += "x" + std::to_string(k + 1) + ",";
  out += "y\n";
  for (std::size_t t = 0; t < ds.n(); ++t) {
    for (std::size_t k = 0; k < ds.n_theta(); ++k) {
      out += detail::format_double(ds.regressors()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)));
      out += ',';
    }
    out += detail::format_double(ds.outputs()(static_cast<Eigen::Index>(t)));
    out += '\n';
  }
  return out;
}

inline std::string io_to_csv(const IoDataset& ds) {
  std::string out = "u,y\n";
  for (std::size_t t = 0; t < ds.n(); ++t) {
    out += detail::format_double(ds.inputs()(static_cast<Eigen::Index>(t)));
    out += ',';
    out += detail::format_double(ds.outputs()(static_cast<Eigen::Index>(t)));
    out += '\n';
  }
  return out;
}

using AnyDataset = std::variant<RegressionDataset, IoDataset>;

/// Parses either CSV layout, chosen by the header (`u,y` or `x1,...,xk,y`).
inline AnyDataset dataset_from_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  for (auto line : detail::split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw ParseError("header", "empty CSV");
  const auto header = detail::split(lines.front(), ',');
  const std::size_t cols = header.size();
  const std::size_t n = lines.size() - 1;
  if (cols < 2 || header.back() != "y") throw ParseError("header", "last column must be 'y'");

  const bool io = cols == 2 && header[0] == "u";
  if (!io) {
    for (std::size_t k = 0; k + 1 < cols; ++k) {
      if (header[k] != "x" + std::to_string(k + 1)) {
        throw ParseError("header", "expected 'u,y' or 'x1,...,xk,y'");
      }
    }
  }

  Eigen::MatrixXd values(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) {
    const auto cells = detail::split(lines[t + 1], ',');
    if (cells.size() != cols) {
      throw ParseError("row " + std::to_string(t + 1), "expected " + std::to_string(cols) + " columns");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) =
          detail::parse_double(cells[c], std::string(header[c]) + " at row " + std::to_string(t + 1));
    }
  }
  const auto last = static_cast<Eigen::Index>(cols - 1);
  if (io) return IoDataset(values.row(0).transpose(), values.row(1).transpose());
  return RegressionDataset(values.topRows(last), values.row(last).transpose());
}

inline AnyDataset load_dataset(const std::string& path) { return dataset_from_csv(detail::read_file(path)); }

inline void save_dataset(const RegressionDataset& ds, const std::string& path) {
  detail::write_file(path, regression_to_csv(ds));
}

inline void save_dataset(const IoDataset& ds, const std::string& path) { detail::write_file(path, io_to_csv(ds)); }

}  // namespace fsr

#endif  // FSR_SERIALIZATION_HPP
