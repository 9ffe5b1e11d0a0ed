#include "agentml/csv.hpp"

#include <set>
#include <stdexcept>

#include "agentml/util.hpp"

namespace agentml {

namespace {

std::vector<std::vector<std::string>> parse_records(const std::string& text,
                                                    const std::string& origin) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  size_t i = 0;
  auto end_field = [&]() {
    current.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&]() {
    end_field();
    records.push_back(std::move(current));
    current.clear();
  };
  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
    } else if (c == '"' && !field_started && field.empty()) {
      in_quotes = true;
      field_started = true;
      ++i;
    } else if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      i += 2;
    } else if (c == '\n') {
      end_record();
      ++i;
    } else {
      field.push_back(c);
      field_started = true;
      ++i;
    }
  }
  if (in_quotes) {
    throw std::runtime_error(origin + ": unterminated quoted field");
  }
  if (field_started || !field.empty() || !current.empty()) {
    end_record();
  }
  return records;
}

}  // namespace

CsvDocument parse_csv(const std::string& text, const std::string& origin) {
  auto records = parse_records(text, origin);
  if (records.empty()) {
    throw std::runtime_error(origin + ": empty CSV (no header row)");
  }
  CsvDocument doc;
  doc.header = records[0];
  std::set<std::string> seen;
  for (const auto& h : doc.header) {
    if (!seen.insert(h).second) {
      throw std::runtime_error(origin + ": duplicate header \"" + h + "\"");
    }
  }
  size_t ncols = doc.header.size();
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != ncols) {
      throw std::runtime_error(origin + ": line " + std::to_string(r + 1) +
                               ": expected " + std::to_string(ncols) +
                               " fields, got " +
                               std::to_string(records[r].size()));
    }
    doc.rows.push_back(std::move(records[r]));
  }
  return doc;
}

CsvDocument read_csv_file(const std::string& path) {
  return parse_csv(read_file(path), path);
}

namespace {

void append_field(std::string& out, const std::string& f) {
  bool needs_quote = f.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quote) {
    out += f;
    return;
  }
  out.push_back('"');
  for (char c : f) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

void append_row(std::string& out, const std::vector<std::string>& row) {
  for (size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    append_field(out, row[i]);
  }
  out.push_back('\n');
}

}  // namespace

std::string render_csv(const CsvDocument& doc) {
  std::string out;
  append_row(out, doc.header);
  for (const auto& row : doc.rows) append_row(out, row);
  return out;
}

void write_csv_file(const std::string& path, const CsvDocument& doc) {
  write_file(path, render_csv(doc));
}

}  // namespace agentml
