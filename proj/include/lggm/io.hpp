#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lggm/errors.hpp"
#include "lggm/fit_report.hpp"
#include "lggm/panel.hpp"
#include "lggm/stack.hpp"
#include "lggm/version.hpp"

namespace lggm::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

/// FNV-1a 64-bit hash, hex-encoded; stable across platforms.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string config_hash(const json& config) { return fnv1a_hex(config.dump()); }

/// Reject unknown keys so config typos fail loudly.
inline void require_keys(const json& obj, const std::vector<std::string>& required,
                         const std::vector<std::string>& optional,
                         const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + ": expected a JSON object");
  for (const auto& k : required)
    if (!obj.contains(k))
      throw ValidationError(where + ": missing required key '" + k + "'");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const auto& k : required) known = known || k == key;
    for (const auto& k : optional) known = known || k == key;
    if (!known) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_json_file(const fs::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

/// Headerless CSV, %.17g so doubles round-trip exactly.
inline void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

inline Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t width = 0;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    const char* ptr = line.c_str();
    char* end = nullptr;
    for (;;) {
      const double v = std::strtod(ptr, &end);
      if (end == ptr)
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": malformed number");
      row.push_back(v);
      if (*end == ',') {
        ptr = end + 1;
      } else if (*end == '\0' || *end == '\r') {
        break;
      } else {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": unexpected character '" + *end + "'");
      }
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path.string() + ": empty matrix file");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;
};

inline void stamp(json& j, const Provenance& prov) {
  j["tool_version"] = kVersion;
  j["seed"] = prov.seed;
  j["config_hash"] = prov.config_hash;
}

// ---- dataset ----

inline void write_dataset(const fs::path& dir, const PanelDataset& data,
                          const Provenance& prov) {
  fs::create_directories(dir);
  write_matrix_csv(dir / "data.csv", data.values);
  json manifest = {
      {"schema_version", kSchemaVersion},
      {"kind", "panel-dataset"},
      {"n", data.n},
      {"k_categories", data.k_categories},
      {"p", data.p},
      {"layout", "categories-contiguous"},
      {"centered", data.centered},
  };
  stamp(manifest, prov);
  write_json_file(dir / "manifest.json", manifest);
}

/// Accepts the dataset directory or the data.csv path itself.
inline PanelDataset read_dataset(const fs::path& path) {
  fs::path dir = path;
  fs::path csv = path;
  if (fs::is_directory(path)) {
    csv = path / "data.csv";
  } else {
    dir = path.parent_path();
  }
  if (!fs::exists(csv)) throw IoError("dataset file not found: " + csv.string());
  const json manifest = read_json_file(dir / "manifest.json");
  require_keys(manifest,
               {"schema_version", "kind", "n", "k_categories", "p", "layout", "centered"},
               {"tool_version", "seed", "config_hash"}, "dataset manifest");
  if (manifest["kind"] != "panel-dataset")
    throw ValidationError("manifest kind is not panel-dataset");
  if (manifest["schema_version"] != kSchemaVersion)
    throw ValidationError("unsupported dataset schema version");
  if (manifest["layout"] != "categories-contiguous")
    throw ValidationError("unsupported dataset layout");
  const int k = manifest["k_categories"];
  const int p = manifest["p"];
  Eigen::MatrixXd values = read_matrix_csv(csv);
  if (values.rows() != manifest["n"].get<int>())
    throw ValidationError("dataset row count disagrees with manifest");
  if (!manifest["centered"].get<bool>())
    throw ValidationError("dataset manifest declares uncentered data; "
                          "center it before fitting");
  return PanelDataset::from_centered(std::move(values), k, p);
}

// ---- stacks / estimates ----

inline void write_edge_list(const fs::path& path, const PrecisionStack& stack) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "layer\ti\tj\tweight\n";
  char buf[40];
  for (int k = 0; k <= stack.k_categories; ++k) {
    const auto& w = stack.omega(k);
    for (int j = 1; j < stack.p; ++j) {
      for (int i = 0; i < j; ++i) {
        if (w(i, j) == 0.0) continue;
        std::snprintf(buf, sizeof(buf), "%.17g", w(i, j));
        // 1-based node ids for graph tooling
        out << k << '\t' << (i + 1) << '\t' << (j + 1) << '\t' << buf << '\n';
      }
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

struct EstimateMeta {
  std::string kind = "estimate";  // or "truth-stack"
  std::string method;
  std::optional<PenaltyPair> penalties;
  std::optional<const FitReport*> fit;  // iterations/trace/convergence fields
};

inline void write_stack(const fs::path& dir, const PrecisionStack& stack,
                        const EstimateMeta& meta, const Provenance& prov) {
  fs::create_directories(dir);
  for (int k = 0; k <= stack.k_categories; ++k)
    write_matrix_csv(dir / ("omega_" + std::to_string(k) + ".csv"), stack.omega(k));
  write_edge_list(dir / "edges.tsv", stack);
  json manifest = {
      {"schema_version", kSchemaVersion},
      {"kind", meta.kind},
      {"p", stack.p},
      {"k_categories", stack.k_categories},
  };
  if (stack.alphas) {
    std::vector<double> a(stack.alphas->begin(), stack.alphas->end());
    manifest["alphas"] = a;
  }
  if (!meta.method.empty()) manifest["method"] = meta.method;
  if (meta.penalties) {
    manifest["lambda1"] = meta.penalties->lambda1;
    manifest["lambda2"] = meta.penalties->lambda2;
  }
  if (meta.fit && *meta.fit) {
    const FitReport& fit = **meta.fit;
    manifest["iterations"] = fit.iterations;
    manifest["converged"] = fit.converged;
    manifest["objective_trace"] = fit.objective_trace;
    manifest["wall_time_seconds"] = fit.wall_time_seconds;
    manifest["edge_count"] = fit.edge_count;
    manifest["warnings"] = fit.warnings;
  }
  stamp(manifest, prov);
  write_json_file(dir / "manifest.json", manifest);
}

inline PrecisionStack read_stack(const fs::path& dir) {
  const json manifest = read_json_file(dir / "manifest.json");
  if (!manifest.contains("k_categories") || !manifest.contains("p"))
    throw ValidationError(dir.string() + "/manifest.json: not a stack manifest");
  const int K = manifest["k_categories"];
  std::vector<Eigen::MatrixXd> layers;
  layers.reserve(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k)
    layers.push_back(read_matrix_csv(dir / ("omega_" + std::to_string(k) + ".csv")));
  std::optional<Eigen::VectorXd> alphas;
  if (manifest.contains("alphas")) {
    const auto a = manifest["alphas"].get<std::vector<double>>();
    alphas = Eigen::Map<const Eigen::VectorXd>(a.data(),
                                               static_cast<Eigen::Index>(a.size()));
  }
  return PrecisionStack::from_layers(std::move(layers), std::move(alphas));
}

}  // namespace lggm::io
