#include "sparsenorm/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace sparsenorm {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), path_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& h : header) *this << h;
  end_row();
}

CsvWriter& CsvWriter::operator<<(const std::string& field) {
  if (in_row_ > 0) out_ << ',';
  out_ << field;
  ++in_row_;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw std::logic_error(path_ + ": row has " + std::to_string(in_row_) + " fields, header has " +
                           std::to_string(columns_));
  out_ << '\n';
  in_row_ = 0;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw std::runtime_error("failed writing " + path_);
}

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    auto pos = line.find(delimiter, start);
    if (pos == std::string::npos) {
      std::string last = line.substr(start);
      if (!last.empty() && last.back() == '\r') last.pop_back();
      fields.push_back(std::move(last));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace sparsenorm
