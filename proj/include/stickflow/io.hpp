// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace stickflow {

using json = nlohmann::json;

/// Configuration error carrying the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message), field_path_(path) {}
  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

namespace cfg {

inline void require_keys(const json& j, const std::vector<std::string>& allowed,
                         const std::vector<std::string>& required, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
  }
  for (const auto& key : required) {
    if (!j.contains(key))
      throw ConfigError(path.empty() ? key : path + "." + key, "missing required key");
  }
}

inline double get_double(const json& j, const std::string& key, const std::string& path) {
  if (!j.at(key).is_number()) throw ConfigError(path + "." + key, "expected a number");
  return j.at(key).get<double>();
}

inline std::int64_t get_int(const json& j, const std::string& key, const std::string& path) {
  if (!j.at(key).is_number_integer()) throw ConfigError(path + "." + key, "expected an integer");
  return j.at(key).get<std::int64_t>();
}

inline std::string get_string(const json& j, const std::string& key, const std::string& path) {
  if (!j.at(key).is_string()) throw ConfigError(path + "." + key, "expected a string");
  return j.at(key).get<std::string>();
}

inline Eigen::VectorXd get_vector(const json& j, const std::string& key, const std::string& path) {
  const json& arr = j.at(key);
  if (!arr.is_array() || arr.empty()) throw ConfigError(path + "." + key, "expected a nonempty array");
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw ConfigError(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

/// Row-major array of arrays.
inline Eigen::MatrixXd get_matrix(const json& j, const std::string& key, const std::string& path) {
  const json& rows = j.at(key);
  if (!rows.is_array() || rows.empty()) throw ConfigError(path + "." + key, "expected an array of rows");
  const std::size_t k = rows.size();
  Eigen::MatrixXd m(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    const json& row = rows[i];
    const std::string row_path = path + "." + key + "[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != k)
      throw ConfigError(row_path, "expected a row of length " + std::to_string(k));
    for (std::size_t c = 0; c < k; ++c) {
      if (!row[c].is_number())
        throw ConfigError(row_path + "[" + std::to_string(c) + "]", "expected a number");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

}  // namespace cfg

inline json to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

/// FNV-1a over the canonical (sorted-key) dump; identifies a config in
/// artifact metadata.
inline std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

/// CSV writer with LF endings and a metadata comment line before the header.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, const std::string& metadata,
            const std::vector<std::string>& header)
      : out_(file, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + file.string());
    out_ << "# " << metadata << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

inline void write_text_file(const std::filesystem::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << content;
}

}  // namespace stickflow
