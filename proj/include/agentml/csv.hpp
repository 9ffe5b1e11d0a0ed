#pragma once

#include <string>
#include <vector>

namespace agentml {

struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 reader: quoted fields, escaped quotes, LF or CRLF line ends.
// First record is the header. Ragged rows and duplicate headers are errors.
CsvDocument read_csv_file(const std::string& path);
CsvDocument parse_csv(const std::string& text, const std::string& origin);

// Writes LF line endings, quoting only fields that need it.
std::string render_csv(const CsvDocument& doc);
void write_csv_file(const std::string& path, const CsvDocument& doc);

}  // namespace agentml
