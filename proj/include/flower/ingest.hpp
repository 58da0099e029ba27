#pragma once

#include <string>
#include <vector>

#include "flower/dataset.hpp"

namespace flower {

/// A CSV file read as text: one header row, then data rows of equal width.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position of `name`; throws DataError when absent.
  int column(const std::string& name) const;
};

/// RFC 4180 style parsing (quoted fields, doubled quotes, CRLF). Throws
/// IoError when the file cannot be read and DataError on ragged rows.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

enum class RescaleMode { minmax, none };
RescaleMode rescale_mode_from_string(const std::string& s);

struct IngestOptions {
  std::vector<std::string> responses;
  std::vector<std::string> covariates;
  double lower = 0.0;  // A
  double upper = 10.0;  // B
  RescaleMode rescale = RescaleMode::minmax;
};

/// Builds a Dataset from selected columns.
///
/// Responses are parsed as numbers and, under `minmax`, mapped affinely so the
/// column minimum lands on A and the maximum on B. Covariates whose values are
/// all positive integers are read as 1-based codes (levels = largest code);
/// any other covariate column is coded by sorted distinct value and the labels
/// are kept in `level_labels`. Throws DataError listing the offending rows for
/// missing or non-numeric responses, constant response columns and empty
/// covariate cells.
Dataset ingest(const CsvTable& table, const IngestOptions& options);
Dataset ingest_csv(const std::string& path, const IngestOptions& options);

/// Writes responses in original units (17 significant digits) and covariates
/// as their level labels, so that ingesting the file with the same options
/// reproduces the dataset exactly.
std::string dataset_to_csv(const Dataset& data, double lower, double upper);
void write_dataset_csv(const std::string& path, const Dataset& data, double lower, double upper);

}  // namespace flower
