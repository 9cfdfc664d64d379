#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace streamgp {

// Row-at-a-time CSV reader.  The first line must be a header; every later
// line must hold the same number of numeric cells.  Errors carry the file
// name, row, and column of the offending cell.
class CsvReader {
 public:
  explicit CsvReader(const std::string& path);

  const std::vector<std::string>& header() const { return header_; }
  int columns() const { return static_cast<int>(header_.size()); }

  // Fills `row` with the next record; false at end of file.
  bool next(std::vector<double>& row);

  long data_rows_read() const { return rows_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  long rows_ = 0;
  long line_ = 0;
};

// Deterministic CSV writer: doubles are rendered with %.17g so equal runs
// produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void flush();

 private:
  std::ofstream out_;
  size_t columns_;
};

std::string format_double(double v);  // %.17g

}  // namespace streamgp
