#include "ksm/io.hpp"

#include "ksm/config.hpp"
#include "ksm/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ksm {

std::string hex_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_double(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ParseError(0, "not a number: '" + s + "'");
  return v;
}

std::string encode_artifact(const ArtifactFile& a) {
  std::string out = "ksm-artifact " + std::to_string(kArtifactVersion) + " " + a.kind + "\n";
  for (const auto& [k, v] : a.fields) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos)
      throw std::invalid_argument("artifact field '" + k + "' is not single-line");
    out += k + " " + v + "\n";
  }
  out += "rows " + std::to_string(a.rows.rows()) + " " + std::to_string(a.rows.cols()) + "\n";
  for (Eigen::Index i = 0; i < a.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.rows.cols(); ++j) {
      if (j > 0) out += ' ';
      out += hex_double(a.rows(i, j));
    }
    out += '\n';
  }
  out += "checksum " + hex64(fnv1a64(out)) + "\n";
  return out;
}

ArtifactFile decode_artifact(const std::string& text) {
  const auto first_nl = text.find('\n');
  std::istringstream head(text.substr(0, first_nl));
  std::string magic, kind;
  int version = -1;
  head >> magic >> version >> kind;
  if (magic != "ksm-artifact") throw ParseError(1, "not a ksm artifact file");
  if (version != kArtifactVersion)
    throw VersionMismatch("artifact format version " + std::to_string(version) + ", expected " +
                          std::to_string(kArtifactVersion));

  // the checksum line must be last and cover every byte before it
  const auto pos = text.rfind("checksum ");
  if (pos == std::string::npos || (pos > 0 && text[pos - 1] != '\n'))
    throw ChecksumMismatch("artifact has no checksum line (truncated?)");
  std::string stored = text.substr(pos + 9);
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
  if (stored != hex64(fnv1a64(std::string_view(text).substr(0, pos))))
    throw ChecksumMismatch("artifact checksum does not match its content");

  ArtifactFile a;
  a.kind = kind;
  std::istringstream in(text.substr(first_nl + 1, pos - first_nl - 1));
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string value = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key != "rows") {
      a.fields[key] = value;
      continue;
    }
    std::istringstream dims(value);
    long r = -1, c = -1;
    dims >> r >> c;
    if (r < 0 || c < 0) throw ParseError(line_no, "bad row header");
    a.rows.resize(r, c);
    for (long i = 0; i < r; ++i) {
      if (!std::getline(in, line)) throw ParseError(line_no, "missing rows");
      ++line_no;
      std::istringstream row(line);
      std::string tok;
      for (long j = 0; j < c; ++j) {
        if (!(row >> tok)) throw ParseError(line_no, "short row");
        a.rows(i, j) = parse_double(tok);
      }
    }
  }
  return a;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string join_hex(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + hex_double(v[i]);
  return s;
}

Eigen::VectorXd split_hex(const std::string& s) {
  std::istringstream in(s);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) vals.push_back(parse_double(tok));
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

const std::string& field(const ArtifactFile& a, const std::string& key) {
  const auto it = a.fields.find(key);
  if (it == a.fields.end()) throw ParseError(0, "artifact lacks field '" + key + "'");
  return it->second;
}

Eigen::MatrixXd path_rows(const SampledPath& p) {
  Eigen::MatrixXd rows(p.size(), 1 + 2 * p.dim());
  rows.col(0) = p.times;
  rows.middleCols(1, p.dim()) = p.states.transpose();
  rows.rightCols(p.dim()) = p.derivs.transpose();
  return rows;
}

SampledPath rows_path(const Eigen::MatrixXd& rows) {
  if (rows.cols() < 3 || rows.cols() % 2 == 0) throw ParseError(0, "artifact rows have the wrong width");
  const Eigen::Index d = (rows.cols() - 1) / 2;
  SampledPath p;
  p.times = rows.col(0);
  p.states = rows.middleCols(1, d).transpose();
  p.derivs = rows.rightCols(d).transpose();
  return p;
}

void take_extra(const ArtifactFile& a, std::map<std::string, std::string>* extra) {
  if (!extra) return;
  for (const auto& [k, v] : a.fields)
    if (k.starts_with("x.")) (*extra)[k.substr(2)] = v;
}

ArtifactFile load(const std::filesystem::path& path, const std::string& kind) {
  ArtifactFile a = decode_artifact(read_file(path));
  if (a.kind != kind) throw ParseError(0, path.string() + " holds a " + a.kind + ", not a " + kind);
  return a;
}

}  // namespace

void write_orbit_cache(const OrbitTrajectory& o, const std::filesystem::path& path,
                       const std::map<std::string, std::string>& extra) {
  ArtifactFile a;
  a.kind = "orbit";
  a.fields["steady"] = join_hex(o.steady);
  a.fields["return_distance"] = hex_double(o.return_distance);
  a.fields["initial_return_distance"] = hex_double(o.initial_return_distance);
  a.fields["t_center"] = hex_double(o.t_center);
  a.fields["time_offset_applied"] = o.time_offset_applied ? "1" : "0";
  a.fields["converged"] = o.converged ? "1" : "0";
  a.fields["evaluations"] = std::to_string(o.evaluations);
  a.fields["log_delta"] = hex_double(o.params.log_delta);
  a.fields["angles"] = join_hex(Eigen::Map<const Eigen::VectorXd>(o.params.angles.data(),
                                                                  static_cast<Eigen::Index>(o.params.angles.size())));
  a.fields["log_eta"] = o.params.log_eta ? hex_double(*o.params.log_eta) : "none";
  a.fields["sign"] = std::to_string(o.params.sign);
  for (const auto& [k, v] : extra) a.fields["x." + k] = v;
  a.rows = path_rows(o.path);
  atomic_write(path, encode_artifact(a));
}

OrbitTrajectory read_orbit_cache(const std::filesystem::path& path, std::map<std::string, std::string>* extra) {
  const ArtifactFile a = load(path, "orbit");
  OrbitTrajectory o;
  o.path = rows_path(a.rows);
  o.steady = split_hex(field(a, "steady"));
  if (o.steady.size() != o.path.dim()) throw ParseError(0, "steady state dimension mismatch");
  o.return_distance = parse_double(field(a, "return_distance"));
  o.initial_return_distance = parse_double(field(a, "initial_return_distance"));
  o.t_center = parse_double(field(a, "t_center"));
  o.time_offset_applied = field(a, "time_offset_applied") == "1";
  o.converged = field(a, "converged") == "1";
  o.evaluations = std::stoi(field(a, "evaluations"));
  o.params.log_delta = parse_double(field(a, "log_delta"));
  const Eigen::VectorXd angles = split_hex(field(a, "angles"));
  o.params.angles.assign(angles.data(), angles.data() + angles.size());
  if (field(a, "log_eta") != "none") o.params.log_eta = parse_double(field(a, "log_eta"));
  o.params.sign = std::stoi(field(a, "sign"));
  take_extra(a, extra);
  return o;
}

void write_adjoint_cache(const AdjointTrajectory& adj, const std::filesystem::path& path,
                         const std::map<std::string, std::string>& extra) {
  ArtifactFile a;
  a.kind = "adjoint";
  a.fields["pairing"] = hex_double(adj.pairing);
  a.fields["pairing_drift"] = hex_double(adj.pairing_drift);
  a.fields["start_defect"] = hex_double(adj.start_defect);
  a.fields["endpoint_ratio"] = hex_double(adj.endpoint_ratio);
  a.fields["substeps"] = std::to_string(adj.substeps);
  for (const auto& [k, v] : extra) a.fields["x." + k] = v;
  a.rows = path_rows(adj.path);
  atomic_write(path, encode_artifact(a));
}

AdjointTrajectory read_adjoint_cache(const std::filesystem::path& path, std::map<std::string, std::string>* extra) {
  const ArtifactFile a = load(path, "adjoint");
  AdjointTrajectory adj;
  adj.path = rows_path(a.rows);
  adj.pairing = parse_double(field(a, "pairing"));
  adj.pairing_drift = parse_double(field(a, "pairing_drift"));
  adj.start_defect = parse_double(field(a, "start_defect"));
  adj.endpoint_ratio = parse_double(field(a, "endpoint_ratio"));
  adj.substeps = std::stoi(field(a, "substeps"));
  take_extra(a, extra);
  return adj;
}

std::string format_csv(const CsvMeta& meta, const std::vector<std::string>& columns,
                       const std::vector<std::vector<double>>& rows) {
  std::string out = "# ksm " + meta.name + " config_hash=" + hex64(meta.config_hash) +
                    " code_version=" + meta.code_version + " seed=" + std::to_string(meta.seed) +
                    " units=dimensionless";
  if (!meta.note.empty()) out += " " + meta.note;
  out += "\n";
  for (std::size_t j = 0; j < columns.size(); ++j) out += (j ? "," : "") + columns[j];
  out += "\n";
  char buf[40];
  for (const auto& row : rows) {
    if (row.size() != columns.size()) throw std::invalid_argument("CSV row width does not match header");
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.16e", row[j]);
      if (j) out += ',';
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const CsvMeta& meta, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  atomic_write(path, format_csv(meta, columns, rows));
}

}  // namespace ksm
