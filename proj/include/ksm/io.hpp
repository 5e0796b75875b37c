#pragma once

#include "ksm/adjoint.hpp"
#include "ksm/homoclinic.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ksm {

inline constexpr int kArtifactVersion = 1;

/// Text artifact: a version line, `key value` fields, a matrix stored as hex-float
/// rows (exact round trip) and a trailing FNV-1a checksum of everything before it.
struct ArtifactFile {
  std::string kind;
  std::map<std::string, std::string> fields;
  Eigen::MatrixXd rows;
};

std::string encode_artifact(const ArtifactFile& a);
/// Throws VersionMismatch, ChecksumMismatch, ParseError.
ArtifactFile decode_artifact(const std::string& text);

/// Writes `content` next to `path` and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

std::string hex_double(double v);
double parse_double(const std::string& s);

/// Rows (t, 2N state values, 2N derivative values) plus the shooting metadata.
void write_orbit_cache(const OrbitTrajectory& orbit, const std::filesystem::path& path,
                       const std::map<std::string, std::string>& extra = {});
OrbitTrajectory read_orbit_cache(const std::filesystem::path& path,
                                 std::map<std::string, std::string>* extra = nullptr);

void write_adjoint_cache(const AdjointTrajectory& adj, const std::filesystem::path& path,
                         const std::map<std::string, std::string>& extra = {});
AdjointTrajectory read_adjoint_cache(const std::filesystem::path& path,
                                     std::map<std::string, std::string>* extra = nullptr);

struct CsvMeta {
  std::string name;
  std::uint64_t config_hash = 0;
  std::string code_version;
  std::uint64_t seed = 0;
  /// Optional free text appended to the comment line (e.g. "proxy").
  std::string note;
};

/// "# ksm <name> config_hash=... code_version=... seed=... units=dimensionless", a
/// header row, then rows in %.16e.
std::string format_csv(const CsvMeta& meta, const std::vector<std::string>& columns,
                       const std::vector<std::vector<double>>& rows);

void write_csv(const std::filesystem::path& path, const CsvMeta& meta, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

}  // namespace ksm
