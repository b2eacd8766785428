#pragma once

#include <complex>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace onebit {

/// Column-typed CSV writer. The header is written on construction; every row must match it.
/// dB columns print with 2 decimals, complex columns expand to <name>_re,<name>_im.
class CsvWriter {
 public:
  enum class Kind { Text, Int, Real, Db, Complex };
  struct Column {
    std::string name;
    Kind kind = Kind::Real;
  };

  CsvWriter(const std::filesystem::path& path, std::vector<Column> columns);

  CsvWriter& text(const std::string& v);
  CsvWriter& integer(long long v);
  CsvWriter& real(double v);
  CsvWriter& db(double v);
  CsvWriter& complex(std::complex<double> v);
  /// Ends the row; throws if fewer cells than columns were written.
  void end_row();

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void cell(Kind kind, const std::string& s);

  std::filesystem::path path_;
  std::vector<Column> columns_;
  std::ofstream out_;
  std::size_t col_ = 0;
  std::size_t rows_ = 0;
};

std::string format_db(double v);
std::string format_real(double v);

}  // namespace onebit
