#pragma once

#include "resbm/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace resbm {

enum class MatrixFormat { csv, edgelist };
enum class ThresholdSource { binary, correlation };

struct MemberEntry {
  std::string id;
  /// Relative paths resolve against the manifest's directory.
  std::string file;
  MatrixFormat format = MatrixFormat::csv;
};

struct SampleManifest {
  static constexpr int kVersion = 1;

  int version = kVersion;
  int n = 0;
  int members = 0;
  std::optional<int> k_hint;
  std::vector<std::string> node_labels;
  std::vector<MemberEntry> entries;
  ThresholdSource source = ThresholdSource::binary;
  double tau = 0.0;
  bool absolute = false;
};

inline constexpr double kCorrelationSymmetryTol = 1e-8;

SampleManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const SampleManifest& manifest, const std::filesystem::path& path);

/// Dense comma-separated matrix; blank lines are skipped.
Matrix read_csv_matrix(const std::filesystem::path& path);
/// One "i j" pair (0-based) per line; '#' starts a comment.
Matrix read_edgelist(const std::filesystem::path& path, int n);

/// Loads every member named by the manifest, thresholding correlation matrices when the
/// manifest says so.
NetworkSample read_sample(const std::filesystem::path& manifest_path);

/// Writes one CSV per member (`<prefix><m>.csv`) and `manifest.json` into `dir`; returns the
/// manifest path.
std::filesystem::path write_sample(const NetworkSample& sample, const std::filesystem::path& dir,
                                   std::optional<int> k_hint = std::nullopt,
                                   const std::string& prefix = "member_");

void write_fit(const ResbmFit& fit, const std::filesystem::path& path);
ResbmFit read_fit(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace resbm
