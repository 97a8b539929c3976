#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddpca/lda.hpp"
#include "ddpca/portfolio.hpp"
#include "ddpca/types.hpp"

namespace ddpca::io {

/// Shortest decimal form that round-trips to the same double.
std::string fmt_double(double value);

std::string join_path(const std::string& dir, const std::string& file);

/// Writes contents to a temporary file and renames it into place, so a
/// partially written file is never observable at the target path.
void atomic_write(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

/// FNV-1a 64-bit digest, hex encoded.
std::string fnv1a64_hex(const std::string& bytes);
std::string file_digest(const std::string& path);

struct CsvMatrix {
  Matrix<double> values;
  std::vector<std::string> header;  // empty when the file had none
};

/// Rectangular CSV of numbers; a single leading header row is auto-detected
/// (first row with any non-numeric cell).
CsvMatrix read_csv_matrix(const std::string& path);

void write_csv_matrix(const std::string& path, const Matrix<double>& values,
                      const std::vector<std::string>& header = {});

/// Generic table writer: rows of preformatted cells.
void write_csv_table(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

/// Gate for square matrix inputs: symmetrizes when the asymmetry is below
/// 1e-8 (recording a warning if it was nonzero), rejects otherwise.
Matrix<double> require_symmetric_input(const Matrix<double>& m, std::vector<std::string>& warnings);

/// Returns file: leading date column (YYYYMMDD or YYYY-MM-DD), then one
/// column per asset.
ReturnSeries<double> read_return_series(const std::string& path);

/// Labeled file: leading label column in {1, 2}, then one column per feature.
LabeledDataset<double> read_labeled_dataset(const std::string& path);

Vector<double> read_csv_vector(const std::string& path);

/// Runtime record emitted alongside every output set; re-running a
/// subcommand from its manifest reproduces the outputs byte for byte.
struct Manifest {
  std::string subcommand;
  nlohmann::json parameters;
  std::uint64_t master_seed = 0;
  std::string artifact_version;
  double wall_time_seconds = 0;
  std::map<std::string, std::string> output_digests;
  std::vector<std::string> warnings;
};

void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

/// key = value lines; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> read_config(const std::string& path);

}  // namespace ddpca::io
