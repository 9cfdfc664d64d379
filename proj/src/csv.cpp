#include "streamgp/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace streamgp {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trimmed(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

CsvReader::CsvReader(const std::string& path) : path_(path), in_(path) {
  if (!in_) throw std::runtime_error("cannot open csv file: " + path);
  std::string line;
  if (!std::getline(in_, line)) {
    throw std::runtime_error(path + ": empty file, expected a header row");
  }
  ++line_;
  for (const std::string& cell : split_line(line)) {
    header_.push_back(trimmed(cell));
  }
  if (header_.empty()) {
    throw std::runtime_error(path + ": header row has no columns");
  }
}

bool CsvReader::next(std::vector<double>& row) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (trimmed(line).empty()) continue;  // tolerate trailing blank lines
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header_.size()) {
      throw std::runtime_error(
          path_ + ": row " + std::to_string(line_) + " has " +
          std::to_string(cells.size()) + " cells, header has " +
          std::to_string(header_.size()));
    }
    row.resize(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) {
      const std::string cell = trimmed(cells[i]);
      // strtod instead of stod: gradual underflow (subnormal weights are
      // real outputs) must parse; only overflow is rejected.
      bool ok = !cell.empty();
      double v = 0.0;
      size_t used = 0;
      if (ok) {
        errno = 0;
        char* end = nullptr;
        v = std::strtod(cell.c_str(), &end);
        used = static_cast<size_t>(end - cell.c_str());
        if (errno == ERANGE && std::abs(v) == HUGE_VAL) ok = false;
      }
      if (!ok || used != cell.size()) {
        throw std::runtime_error(path_ + ": row " + std::to_string(line_) +
                                 ", column " + std::to_string(i + 1) + " (" +
                                 header_[i] + "): not a number: '" + cell +
                                 "'");
      }
      row[i] = v;
    }
    ++rows_;
    return true;
  }
  return false;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot create csv file: " + path);
  for (size_t i = 0; i < header.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) {
    throw std::invalid_argument("CsvWriter: row width mismatch");
  }
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << format_double(values[i]);
  }
  out_ << '\n';
}

void CsvWriter::flush() { out_.flush(); }

}  // namespace streamgp
