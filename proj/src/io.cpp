#include "resbm/io.hpp"

#include "resbm/error.hpp"
#include "resbm/graph.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace resbm {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw IoError(where + ": missing field '" + key + "'");
  return j.at(key);
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return field(j, key, where).get<T>();
  } catch (const json::exception& e) {
    throw IoError(where + ": field '" + key + "' has the wrong type");
  }
}

json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double to_double(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw IoError(where + ": expected a number");
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix json_matrix(const json& j, const std::string& where) {
  if (!j.is_array()) throw IoError(where + ": expected a matrix");
  const int rows = static_cast<int>(j.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      throw IoError(where + ": ragged matrix");
    for (int c = 0; c < cols; ++c) m(i, c) = to_double(j[i][c], where);
  }
  return m;
}

std::string format_name(MatrixFormat f) { return f == MatrixFormat::csv ? "csv" : "edgelist"; }

MatrixFormat parse_format(const std::string& s) {
  if (s == "csv") return MatrixFormat::csv;
  if (s == "edgelist") return MatrixFormat::edgelist;
  throw ValidationError("unknown matrix format tag '" + s + "'");
}

}  // namespace

std::string format_double(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

SampleManifest read_manifest(const fs::path& path) {
  const json j = parse_json(path);
  const std::string where = path.string();
  SampleManifest m;
  m.version = get<int>(j, "version", where);
  if (m.version != SampleManifest::kVersion)
    throw IoError(where + ": unsupported manifest version " + std::to_string(m.version));
  m.n = get<int>(j, "n", where);
  m.members = get<int>(j, "M", where);
  if (j.contains("k_hint") && !j["k_hint"].is_null()) m.k_hint = get<int>(j, "k_hint", where);
  if (j.contains("node_labels")) m.node_labels = get<std::vector<std::string>>(j, "node_labels", where);
  for (const json& e : field(j, "members", where)) {
    MemberEntry entry;
    entry.id = e.contains("id") ? get<std::string>(e, "id", where) : std::string();
    entry.file = get<std::string>(e, "file", where);
    entry.format = parse_format(e.contains("format") ? get<std::string>(e, "format", where) : "csv");
    m.entries.push_back(std::move(entry));
  }
  if (j.contains("threshold")) {
    const json& t = j["threshold"];
    const auto source = get<std::string>(t, "source", where);
    if (source == "binary") m.source = ThresholdSource::binary;
    else if (source == "correlation") m.source = ThresholdSource::correlation;
    else throw ValidationError(where + ": unknown threshold source '" + source + "'");
    if (m.source == ThresholdSource::correlation) m.tau = get<double>(t, "tau", where);
    if (t.contains("absolute")) m.absolute = get<bool>(t, "absolute", where);
  }
  if (m.n < 1) throw ValidationError(where + ": n must be positive");
  if (static_cast<int>(m.entries.size()) != m.members)
    throw ValidationError(where + ": M does not match the number of member entries");
  return m;
}

void write_manifest(const SampleManifest& m, const fs::path& path) {
  json j;
  j["version"] = m.version;
  j["n"] = m.n;
  j["M"] = m.members;
  j["k_hint"] = m.k_hint ? json(*m.k_hint) : json(nullptr);
  j["node_labels"] = m.node_labels;
  j["members"] = json::array();
  for (const auto& e : m.entries)
    j["members"].push_back({{"id", e.id}, {"file", e.file}, {"format", format_name(e.format)}});
  json t;
  t["source"] = m.source == ThresholdSource::binary ? "binary" : "correlation";
  if (m.source == ThresholdSource::correlation) {
    t["tau"] = m.tau;
    t["absolute"] = m.absolute;
  }
  j["threshold"] = t;
  write_text(path, j.dump(2) + "\n");
}

Matrix read_csv_matrix(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      while (end && (*end == ' ' || *end == '\t')) ++end;
      if (end == cell.c_str() || (end && *end != '\0'))
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != n)
      throw ValidationError(path.string() + ": matrix is not square");
    for (int j = 0; j < n; ++j) m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }
  return m;
}

Matrix read_edgelist(const fs::path& path, int n) {
  std::istringstream in(read_text(path));
  Matrix m = Matrix::Zero(n, n);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long i = -1, j = -1;
    std::string rest;
    if (!(ls >> i >> j) || (ls >> rest))
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 'i j'");
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": node index out of range");
    if (i == j) throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": self-loop");
    m(i, j) = m(j, i) = 1.0;
  }
  return m;
}

NetworkSample read_sample(const fs::path& manifest_path) {
  const SampleManifest m = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::vector<Matrix> adj;
  std::vector<std::string> ids;
  for (const auto& e : m.entries) {
    const fs::path file = fs::path(e.file).is_absolute() ? fs::path(e.file) : base / e.file;
    if (!fs::exists(file)) throw IoError("member file not found: " + file.string());
    Matrix a;
    if (e.format == MatrixFormat::edgelist) {
      if (m.source == ThresholdSource::correlation)
        throw ValidationError("edge lists cannot carry correlations");
      a = read_edgelist(file, m.n);
    } else {
      a = read_csv_matrix(file);
    }
    if (a.rows() != m.n)
      throw ValidationError(file.string() + ": expected n = " + std::to_string(m.n) + ", found " +
                            std::to_string(a.rows()));
    if (m.source == ThresholdSource::correlation) {
      if ((a - a.transpose()).cwiseAbs().maxCoeff() > kCorrelationSymmetryTol)
        throw ValidationError(file.string() + ": correlation matrix is not symmetric");
      a = threshold_correlation(0.5 * (a + a.transpose()), m.tau, m.absolute);
    }
    adj.push_back(std::move(a));
    ids.push_back(e.id);
  }
  return NetworkSample(std::move(adj), m.node_labels, std::move(ids));
}

fs::path write_sample(const NetworkSample& sample, const fs::path& dir, std::optional<int> k_hint,
                      const std::string& prefix) {
  SampleManifest m;
  m.n = sample.n();
  m.members = sample.size();
  m.k_hint = k_hint;
  m.node_labels = sample.node_labels();
  for (int idx = 0; idx < sample.size(); ++idx) {
    const std::string file = prefix + std::to_string(idx) + ".csv";
    std::string text;
    const Matrix& a = sample[idx];
    for (int i = 0; i < a.rows(); ++i) {
      for (int j = 0; j < a.cols(); ++j) {
        if (j) text += ',';
        text += a(i, j) != 0.0 ? '1' : '0';
      }
      text += '\n';
    }
    write_text(dir / file, text);
    const std::string id = sample.member_ids().empty() ? prefix + std::to_string(idx)
                                                       : sample.member_ids()[static_cast<size_t>(idx)];
    m.entries.push_back({id, file, MatrixFormat::csv});
  }
  const fs::path path = dir / "manifest.json";
  write_manifest(m, path);
  return path;
}

void write_fit(const ResbmFit& fit, const fs::path& path) {
  json j;
  j["format"] = "resbm-fit";
  j["version"] = 1;
  j["n"] = fit.n();
  j["k"] = fit.k();
  j["z_bar"] = fit.z_bar.labels();
  j["t"] = matrix_json(fit.t.matrix());
  j["z_members"] = json::array();
  for (const auto& z : fit.z_members) j["z_members"].push_back(z.labels());
  j["soft_z_bar"] = matrix_json(fit.soft_z_bar.matrix());
  j["soft_members"] = json::array();
  for (const auto& s : fit.soft_members) j["soft_members"].push_back(matrix_json(s.matrix()));
  if (fit.blocks) {
    json b;
    b["pi"] = json::array();
    for (const auto& p : fit.blocks->pi) b["pi"].push_back(matrix_json(p));
    b["alpha"] = json::array();
    for (int q = 0; q < fit.blocks->alpha.size(); ++q) b["alpha"].push_back(number(fit.blocks->alpha(q)));
    j["blocks"] = b;
  } else {
    j["blocks"] = nullptr;
  }
  j["objective_trace"] = json::array();
  for (double x : fit.objective_trace) j["objective_trace"].push_back(number(x));
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["warnings"] = fit.warnings;
  write_text(path, j.dump(1) + "\n");
}

ResbmFit read_fit(const fs::path& path) {
  const json j = parse_json(path);
  const std::string where = path.string();
  if (get<std::string>(j, "format", where) != "resbm-fit")
    throw IoError(where + ": not a fit file");
  const int version = get<int>(j, "version", where);
  if (version != 1) throw IoError(where + ": unsupported fit version " + std::to_string(version));
  const int k = get<int>(j, "k", where);
  const int n = get<int>(j, "n", where);
  ResbmFit fit;
  try {
    fit.z_bar = HardAssignment(get<std::vector<int>>(j, "z_bar", where), k);
    fit.t = TransitionMatrix(json_matrix(field(j, "t", where), where));
    for (const json& z : field(j, "z_members", where))
      fit.z_members.emplace_back(z.get<std::vector<int>>(), k);
    fit.soft_z_bar = SoftAssignment(json_matrix(field(j, "soft_z_bar", where), where));
    for (const json& s : field(j, "soft_members", where))
      fit.soft_members.emplace_back(json_matrix(s, where));
    const json& b = field(j, "blocks", where);
    if (!b.is_null()) {
      BlockParams blocks;
      for (const json& p : field(b, "pi", where)) blocks.pi.push_back(json_matrix(p, where));
      const json& alpha = field(b, "alpha", where);
      blocks.alpha = Vector(static_cast<int>(alpha.size()));
      for (int q = 0; q < blocks.alpha.size(); ++q) blocks.alpha(q) = to_double(alpha[q], where);
      fit.blocks = std::move(blocks);
    }
    for (const json& x : field(j, "objective_trace", where))
      fit.objective_trace.push_back(to_double(x, where));
    fit.converged = get<bool>(j, "converged", where);
    fit.iterations = get<int>(j, "iterations", where);
    fit.warnings = get<std::vector<std::string>>(j, "warnings", where);
  } catch (const json::exception& e) {
    throw IoError(where + ": malformed fit: " + e.what());
  }
  if (fit.n() != n) throw IoError(where + ": n does not match z_bar");
  fit.validate();
  return fit;
}

}  // namespace resbm
