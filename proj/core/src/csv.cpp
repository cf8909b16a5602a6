#include "qksd/csv.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace qksd {

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns)
    : path_(path), n_columns_(columns.size()) {
  if (columns.empty()) throw std::invalid_argument("CsvWriter: need at least one column");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path.string());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    cell(columns[i]);
  }
  end_row();
  rows_ = 0;  // the header is not a data row
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
    // Destructors must not throw; an explicit close() reports failures.
  }
}

std::string CsvWriter::format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

CsvWriter& CsvWriter::cell(double value) {
  raw_cell(format_double(value));
  return *this;
}

CsvWriter& CsvWriter::cell(std::int64_t value) {
  raw_cell(std::to_string(value));
  return *this;
}

CsvWriter& CsvWriter::cell(bool value) {
  raw_cell(value ? "1" : "0");
  return *this;
}

CsvWriter& CsvWriter::cell(std::complex<double> value) {
  cell(value.real());
  cell(value.imag());
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& value) {
  bool needs_quote = false;
  for (char c : value) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quote = true;
      break;
    }
  }
  if (!needs_quote) {
    raw_cell(value);
    return *this;
  }
  std::string quoted;
  quoted.reserve(value.size() + 2);
  quoted.push_back('"');
  for (char c : value) {
    if (c == '"') quoted.push_back('"');
    quoted.push_back(c);
  }
  quoted.push_back('"');
  raw_cell(quoted);
  return *this;
}

void CsvWriter::raw_cell(const std::string& text) {
  if (closed_) throw std::logic_error("CsvWriter: write after close");
  if (cells_in_row_ >= n_columns_) {
    throw std::logic_error("CsvWriter: row has more cells than columns in " + path_.string());
  }
  if (cells_in_row_ > 0) out_.put(',');
  out_ << text;
  ++cells_in_row_;
}

void CsvWriter::end_row() {
  if (closed_) throw std::logic_error("CsvWriter: write after close");
  if (cells_in_row_ != n_columns_) {
    throw std::logic_error("CsvWriter: row has " + std::to_string(cells_in_row_) + " cells, expected " +
                           std::to_string(n_columns_) + " in " + path_.string());
  }
  out_.put('\n');
  cells_in_row_ = 0;
  ++rows_;
}

void CsvWriter::close() {
  if (closed_) return;
  if (cells_in_row_ != 0) throw std::logic_error("CsvWriter: close inside an unfinished row");
  out_.flush();
  if (!out_) throw std::runtime_error("CsvWriter: write failure on " + path_.string());
  out_.close();
  closed_ = true;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256_file: cannot open " + path.string());

  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("sha256_file: EVP_MD_CTX_new failed");
  if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256_file: digest init failed");
  }

  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got)) != 1) {
      EVP_MD_CTX_free(ctx);
      throw std::runtime_error("sha256_file: digest update failed");
    }
  }

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  if (EVP_DigestFinal_ex(ctx, digest, &digest_len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256_file: digest final failed");
  }
  EVP_MD_CTX_free(ctx);

  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * digest_len);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

void write_meta_sidecar(const std::filesystem::path& data_path,
                        const std::string& command,
                        const std::string& config_json,
                        std::size_t rows,
                        std::uint64_t seed) {
  nlohmann::json meta;
  meta["data_file"] = data_path.filename().string();
  meta["sha256"] = sha256_file(data_path);
  meta["rows"] = rows;
  meta["command"] = command;
  meta["seed"] = seed;
  meta["config"] = nlohmann::json::parse(config_json);

  std::filesystem::path meta_path = data_path;
  meta_path += ".meta.json";
  std::ofstream out(meta_path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_meta_sidecar: cannot open " + meta_path.string());
  out << meta.dump(2) << '\n';
  if (!out) throw std::runtime_error("write_meta_sidecar: write failure on " + meta_path.string());
}

}  // namespace qksd
