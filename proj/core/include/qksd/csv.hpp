#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace qksd {

// Streams a table to disk as comma-separated text. Numeric cells are written
// with enough digits (%.17g) to round-trip IEEE doubles exactly; text cells
// are quoted only when they contain a delimiter, quote, or newline.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns);
  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  // Cell appenders; a row is flushed by end_row(), which checks the arity.
  CsvWriter& cell(double value);
  CsvWriter& cell(std::int64_t value);
  CsvWriter& cell(int value) { return cell(static_cast<std::int64_t>(value)); }
  CsvWriter& cell(std::size_t value) { return cell(static_cast<std::int64_t>(value)); }
  CsvWriter& cell(bool value);
  CsvWriter& cell(const std::string& value);
  CsvWriter& cell(const char* value) { return cell(std::string(value)); }
  // Complex values land in two adjacent columns (real, imaginary).
  CsvWriter& cell(std::complex<double> value);

  void end_row();
  // Flushes and closes the file; further writes are errors. Called by the
  // destructor if not invoked explicitly.
  void close();

  const std::filesystem::path& path() const { return path_; }
  std::size_t rows_written() const { return rows_; }

  // %.17g rendering shared with everything that needs round-trippable text.
  static std::string format_double(double value);

 private:
  void raw_cell(const std::string& text);

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t n_columns_;
  std::size_t cells_in_row_ = 0;
  std::size_t rows_ = 0;
  bool closed_ = false;
};

// SHA-256 of a file's bytes, as lowercase hex.
std::string sha256_file(const std::filesystem::path& path);

// Writes `<data_path>.meta.json` describing a finished table: the JSON text of
// the run configuration, the content hash of the data file, row count, and the
// command that produced it. `config_json` must already be serialised JSON.
void write_meta_sidecar(const std::filesystem::path& data_path,
                        const std::string& command,
                        const std::string& config_json,
                        std::size_t rows,
                        std::uint64_t seed);

}  // namespace qksd
