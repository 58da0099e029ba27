#include "flower/ingest.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "flower/error.hpp"

namespace flower {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string s = trim(text);
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_positive_int(const std::string& text, long& out) {
  const std::string s = trim(text);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 9) return false;
  out = std::strtol(s.c_str(), nullptr, 10);
  return out >= 1;
}

/// "rows 3, 7, 12" with at most ten listed.
std::string row_list(const std::vector<int>& rows) {
  std::ostringstream os;
  os << (rows.size() == 1 ? "row " : "rows ");
  for (std::size_t j = 0; j < rows.size() && j < 10; ++j) os << (j ? ", " : "") << rows[j];
  if (rows.size() > 10) os << " and " << rows.size() - 10 << " more";
  return os.str();
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("column '" + name + "' not found in the CSV header");
  return static_cast<int>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(record);
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else {
      field += ch;
      field_started = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted field in CSV input");
  if (field_started || !field.empty() || !record.empty()) end_record();
  if (records.empty()) throw DataError("CSV input has no header row");

  CsvTable t;
  t.header = records[0];
  for (auto& h : t.header) h = trim(h);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size())
      throw DataError("CSV row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                      " fields, expected " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

RescaleMode rescale_mode_from_string(const std::string& s) {
  if (s == "minmax") return RescaleMode::minmax;
  if (s == "none") return RescaleMode::none;
  throw ConfigError("rescale must be 'minmax' or 'none', got '" + s + "'");
}

Dataset ingest(const CsvTable& table, const IngestOptions& opt) {
  if (opt.responses.empty()) throw DataError("at least one response column is required");
  if (!(opt.lower < opt.upper)) throw DataError("support must satisfy A < B");
  const int n = static_cast<int>(table.rows.size());
  const int d = static_cast<int>(opt.responses.size());
  const int p = static_cast<int>(opt.covariates.size());
  if (n == 0) throw DataError("CSV input has no data rows");

  Dataset data;
  data.x.resize(d, n);
  data.response_names = opt.responses;
  data.covariate_names = opt.covariates;
  for (int l = 0; l < d; ++l) {
    const int col = table.column(opt.responses[l]);
    std::vector<int> bad;
    for (int i = 0; i < n; ++i)
      if (!parse_double(table.rows[i][col], data.x(l, i))) bad.push_back(i + 1);
    if (!bad.empty())
      throw DataError("response '" + opt.responses[l] + "' is missing or not a finite number in " + row_list(bad));
    const double lo = data.x.row(l).minCoeff(), hi = data.x.row(l).maxCoeff();
    Rescale rs;
    if (opt.rescale == RescaleMode::minmax) {
      if (!(hi > lo)) throw DataError("response '" + opt.responses[l] + "' is constant; min-max rescaling is undefined");
      rs = Rescale{lo, hi, false};
      for (int i = 0; i < n; ++i) data.x(l, i) = rs.to_model(data.x(l, i), opt.lower, opt.upper);
    } else {
      std::vector<int> outside;
      for (int i = 0; i < n; ++i)
        if (data.x(l, i) < opt.lower || data.x(l, i) > opt.upper) outside.push_back(i + 1);
      if (!outside.empty())
        throw DataError("response '" + opt.responses[l] + "' lies outside the support in " + row_list(outside));
    }
    data.rescale.push_back(rs);
  }

  data.c.resize(p, n);
  for (int h = 0; h < p; ++h) {
    const int col = table.column(opt.covariates[h]);
    std::vector<int> empty;
    bool all_codes = true;
    long max_code = 0;
    for (int i = 0; i < n; ++i) {
      const std::string v = trim(table.rows[i][col]);
      if (v.empty()) empty.push_back(i + 1);
      long code = 0;
      if (parse_positive_int(v, code))
        max_code = std::max(max_code, code);
      else
        all_codes = false;
    }
    if (!empty.empty()) throw DataError("covariate '" + opt.covariates[h] + "' is missing in " + row_list(empty));
    std::vector<std::string> labels;
    if (all_codes) {
      for (long k = 1; k <= max_code; ++k) labels.push_back(std::to_string(k));
      for (int i = 0; i < n; ++i) data.c(h, i) = static_cast<int>(std::strtol(trim(table.rows[i][col]).c_str(), nullptr, 10)) - 1;
    } else {
      std::set<std::string> distinct;
      for (int i = 0; i < n; ++i) distinct.insert(trim(table.rows[i][col]));
      labels.assign(distinct.begin(), distinct.end());
      std::map<std::string, int> code;
      for (std::size_t k = 0; k < labels.size(); ++k) code[labels[k]] = static_cast<int>(k);
      for (int i = 0; i < n; ++i) data.c(h, i) = code[trim(table.rows[i][col])];
    }
    data.levels.push_back(static_cast<int>(labels.size()));
    data.level_labels.push_back(std::move(labels));
  }
  data.validate(opt.lower, opt.upper);
  return data;
}

Dataset ingest_csv(const std::string& path, const IngestOptions& options) { return ingest(read_csv(path), options); }

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

}  // namespace

std::string dataset_to_csv(const Dataset& in, double lower, double upper) {
  Dataset data = in;
  data.fill_defaults();
  std::ostringstream os;
  bool first = true;
  for (const auto& name : data.response_names) os << (first ? "" : ",") << csv_field(name), first = false;
  for (const auto& name : data.covariate_names) os << (first ? "" : ",") << csv_field(name), first = false;
  os << '\n';
  char buf[64];
  for (int i = 0; i < data.n(); ++i) {
    first = true;
    for (int l = 0; l < data.d(); ++l) {
      std::snprintf(buf, sizeof buf, "%.17g", data.rescale[l].to_original(data.x(l, i), lower, upper));
      os << (first ? "" : ",") << buf;
      first = false;
    }
    for (int h = 0; h < data.p(); ++h) {
      os << (first ? "" : ",") << csv_field(data.level_labels[h][data.c(h, i)]);
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

void write_dataset_csv(const std::string& path, const Dataset& data, double lower, double upper) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << dataset_to_csv(data, lower, upper);
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace flower
