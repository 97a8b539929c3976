#include "io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddpca::io {

namespace {

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  out = std::strtod(begin, &end);
  if (end == begin || errno == ERANGE) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    size_t first = cell.find_first_not_of(" \t\r");
    size_t last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::vector<std::vector<std::string>> read_csv_cells(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw std::invalid_argument("empty CSV file: " + path);
  return rows;
}

bool row_is_numeric(const std::vector<std::string>& cells) {
  double ignored;
  for (const auto& cell : cells) {
    if (!parse_double(cell, ignored)) return false;
  }
  return true;
}

long parse_date(const std::string& cell) {
  // YYYYMMDD integer or YYYY-MM-DD
  std::string digits;
  for (const char c : cell) {
    if (c >= '0' && c <= '9') digits.push_back(c);
    else if (c != '-') return -1;
  }
  if (digits.size() != 8) return -1;
  return std::stol(digits);
}

}  // namespace

std::string join_path(const std::string& dir, const std::string& file) {
  if (dir.empty() || dir == ".") return file;
  return dir.back() == '/' ? dir + file : dir + "/" + file;
}

std::string fmt_double(double value) {
  char buffer[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buffer, sizeof(buffer), "%.*g", precision, value);
    double back = 0;
    std::sscanf(buffer, "%lf", &back);
    if (back == value) return buffer;
  }
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void atomic_write(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("rename failed for " + path + ": " + std::strerror(errno));
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "fnv1a64:%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

std::string file_digest(const std::string& path) { return fnv1a64_hex(read_file(path)); }

CsvMatrix read_csv_matrix(const std::string& path) {
  const auto rows = read_csv_cells(path);
  CsvMatrix out;
  size_t first_row = 0;
  if (!row_is_numeric(rows[0])) {
    out.header = rows[0];
    first_row = 1;
    if (rows.size() == 1) throw std::invalid_argument("CSV has a header but no data: " + path);
  }
  const size_t cols = rows[first_row].size();
  out.values.resize(static_cast<Index>(rows.size() - first_row), static_cast<Index>(cols));
  for (size_t r = first_row; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw std::invalid_argument("CSV is not rectangular at line " + std::to_string(r + 1) + ": " + path);
    }
    for (size_t c = 0; c < cols; ++c) {
      double value;
      if (!parse_double(rows[r][c], value)) {
        throw std::invalid_argument("non-numeric cell '" + rows[r][c] + "' at line " +
                                    std::to_string(r + 1) + ": " + path);
      }
      out.values(static_cast<Index>(r - first_row), static_cast<Index>(c)) = value;
    }
  }
  return out;
}

void write_csv_matrix(const std::string& path, const Matrix<double>& values,
                      const std::vector<std::string>& header) {
  std::ostringstream out;
  if (!header.empty()) {
    for (size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << "\n";
  }
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      if (c) out << ",";
      out << fmt_double(values(r, c));
    }
    out << "\n";
  }
  atomic_write(path, out.str());
}

void write_csv_table(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
  atomic_write(path, out.str());
}

Matrix<double> require_symmetric_input(const Matrix<double>& m, std::vector<std::string>& warnings) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("matrix input must be square, got " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
  }
  const double asym = max_asymmetry(m);
  if (asym > 1e-8) {
    std::ostringstream os;
    os << "matrix input is asymmetric beyond tolerance (max |m - m'| = " << asym << ")";
    throw std::invalid_argument(os.str());
  }
  if (asym > 0) {
    std::ostringstream os;
    os << "symmetrized input with max asymmetry " << asym;
    warnings.push_back(os.str());
  }
  return symmetrize(m);
}

ReturnSeries<double> read_return_series(const std::string& path) {
  const auto rows = read_csv_cells(path);
  size_t first_row = parse_date(rows[0][0]) < 0 ? 1 : 0;
  if (first_row == 1 && rows.size() == 1) {
    throw std::invalid_argument("returns file has a header but no data: " + path);
  }
  const size_t cols = rows[first_row].size();
  if (cols < 3) throw std::invalid_argument("returns file needs a date column and p >= 2 assets");
  ReturnSeries<double> series;
  series.returns.resize(static_cast<Index>(rows.size() - first_row), static_cast<Index>(cols - 1));
  for (size_t r = first_row; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw std::invalid_argument("returns file is not rectangular at line " + std::to_string(r + 1));
    }
    const long date = parse_date(rows[r][0]);
    if (date < 0) {
      throw std::invalid_argument("bad date '" + rows[r][0] + "' at line " + std::to_string(r + 1));
    }
    series.dates.push_back(date);
    for (size_t c = 1; c < cols; ++c) {
      double value;
      if (!parse_double(rows[r][c], value)) {
        throw std::invalid_argument("non-numeric return at line " + std::to_string(r + 1));
      }
      series.returns(static_cast<Index>(r - first_row), static_cast<Index>(c - 1)) = value;
    }
  }
  series.validate();
  return series;
}

LabeledDataset<double> read_labeled_dataset(const std::string& path) {
  const auto rows = read_csv_cells(path);
  const size_t first_row = row_is_numeric(rows[0]) ? 0 : 1;
  if (first_row == 1 && rows.size() == 1) {
    throw std::invalid_argument("labeled file has a header but no data: " + path);
  }
  const size_t cols = rows[first_row].size();
  if (cols < 2) throw std::invalid_argument("labeled file needs a label column and features");
  LabeledDataset<double> data;
  data.features.resize(static_cast<Index>(rows.size() - first_row), static_cast<Index>(cols - 1));
  for (size_t r = first_row; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw std::invalid_argument("labeled file is not rectangular at line " + std::to_string(r + 1));
    }
    double label;
    if (!parse_double(rows[r][0], label) || (label != 1.0 && label != 2.0)) {
      throw std::invalid_argument("label must be 1 or 2 at line " + std::to_string(r + 1));
    }
    data.labels.push_back(static_cast<int>(label));
    for (size_t c = 1; c < cols; ++c) {
      double value;
      if (!parse_double(rows[r][c], value)) {
        throw std::invalid_argument("non-numeric feature at line " + std::to_string(r + 1));
      }
      data.features(static_cast<Index>(r - first_row), static_cast<Index>(c - 1)) = value;
    }
  }
  data.validate();
  return data;
}

Vector<double> read_csv_vector(const std::string& path) {
  const CsvMatrix m = read_csv_matrix(path);
  if (m.values.cols() == 1) return m.values.col(0);
  if (m.values.rows() == 1) return m.values.row(0).transpose();
  throw std::invalid_argument("expected a single row or column of numbers: " + path);
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  nlohmann::json j;
  j["subcommand"] = manifest.subcommand;
  j["parameters"] = manifest.parameters;
  j["master_seed"] = manifest.master_seed;
  j["artifact_version"] = manifest.artifact_version;
  j["wall_time_seconds"] = manifest.wall_time_seconds;
  j["outputs"] = manifest.output_digests;
  j["warnings"] = manifest.warnings;
  atomic_write(path, j.dump(2) + "\n");
}

Manifest read_manifest(const std::string& path) {
  const nlohmann::json j = nlohmann::json::parse(read_file(path));
  Manifest manifest;
  manifest.subcommand = j.at("subcommand").get<std::string>();
  manifest.parameters = j.at("parameters");
  manifest.master_seed = j.at("master_seed").get<std::uint64_t>();
  manifest.artifact_version = j.at("artifact_version").get<std::string>();
  manifest.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  manifest.output_digests = j.at("outputs").get<std::map<std::string, std::string>>();
  manifest.warnings = j.at("warnings").get<std::vector<std::string>>();
  return manifest;
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::map<std::string, std::string> config;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + " is not 'key = value'");
    }
    auto trim = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t\r");
      const size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + " has an empty key");
    }
    config[key] = value;
  }
  return config;
}

}  // namespace ddpca::io
