#include "onebit/csv.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace onebit {

std::string format_db(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<Column> columns)
    : path_(path), columns_(std::move(columns)), out_(path) {
  if (columns_.empty()) throw std::invalid_argument("csv: at least one column is required");
  if (!out_) throw std::runtime_error("csv: cannot open " + path.string());
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out_ << ',';
    const auto& c = columns_[i];
    if (c.kind == Kind::Complex) out_ << c.name << "_re," << c.name << "_im";
    else out_ << c.name;
  }
  out_ << '\n';
}

void CsvWriter::cell(Kind kind, const std::string& s) {
  if (col_ >= columns_.size()) throw std::logic_error("csv: too many cells in row of " + path_.string());
  if (columns_[col_].kind != kind)
    throw std::logic_error("csv: wrong value type for column '" + columns_[col_].name + "'");
  if (col_) out_ << ',';
  out_ << s;
  ++col_;
}

CsvWriter& CsvWriter::text(const std::string& v) {
  if (v.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    cell(Kind::Text, q + "\"");
  } else {
    cell(Kind::Text, v);
  }
  return *this;
}

CsvWriter& CsvWriter::integer(long long v) {
  cell(Kind::Int, std::to_string(v));
  return *this;
}

CsvWriter& CsvWriter::real(double v) {
  cell(Kind::Real, format_real(v));
  return *this;
}

CsvWriter& CsvWriter::db(double v) {
  cell(Kind::Db, format_db(v));
  return *this;
}

CsvWriter& CsvWriter::complex(std::complex<double> v) {
  cell(Kind::Complex, format_real(v.real()) + "," + format_real(v.imag()));
  return *this;
}

void CsvWriter::end_row() {
  if (col_ != columns_.size())
    throw std::logic_error("csv: row has " + std::to_string(col_) + " of " + std::to_string(columns_.size()) +
                           " cells in " + path_.string());
  out_ << '\n';
  col_ = 0;
  ++rows_;
  if (!out_) throw std::runtime_error("csv: write failed for " + path_.string());
}

}  // namespace onebit
