#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace sparsenorm {

// Locale-independent number formatting (shortest round-trip form).
std::string format_double(double v);

// Comma-separated output with a mandatory header row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& operator<<(const std::string& field);
  CsvWriter& operator<<(const char* field) { return *this << std::string(field); }
  CsvWriter& operator<<(double v) { return *this << format_double(v); }
  CsvWriter& operator<<(long long v) { return *this << std::to_string(v); }
  CsvWriter& operator<<(unsigned long long v) { return *this << std::to_string(v); }
  CsvWriter& operator<<(int v) { return *this << std::to_string(v); }
  CsvWriter& operator<<(std::size_t v) { return *this << std::to_string(v); }
  void end_row();
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

// Splits one delimited line; no quoting support.
std::vector<std::string> split_fields(const std::string& line, char delimiter);

}  // namespace sparsenorm
