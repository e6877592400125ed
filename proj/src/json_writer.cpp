#include "searchsig/json_writer.hpp"

#include <cstdio>

#include "searchsig/text.hpp"

namespace searchsig {

std::string JsonWriter::quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

void JsonWriter::prefix(std::string_view key) {
  if (!first_.empty()) {
    if (!first_.back()) out_ += ",";
    first_.back() = false;
    out_ += "\n" + std::string(2 * first_.size(), ' ');
  }
  if (!key.empty()) out_ += quote(key) + ": ";
}

JsonWriter& JsonWriter::begin_object(std::string_view key) {
  prefix(key);
  out_ += "{";
  first_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  const bool empty = first_.back();
  first_.pop_back();
  if (!empty) out_ += "\n" + std::string(2 * first_.size(), ' ');
  out_ += "}";
  return *this;
}

JsonWriter& JsonWriter::begin_array(std::string_view key) {
  prefix(key);
  out_ += "[";
  first_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  const bool empty = first_.back();
  first_.pop_back();
  if (!empty) out_ += "\n" + std::string(2 * first_.size(), ' ');
  out_ += "]";
  return *this;
}

JsonWriter& JsonWriter::field(std::string_view key, std::string_view value) {
  prefix(key);
  out_ += quote(value);
  return *this;
}

JsonWriter& JsonWriter::field(std::string_view key, double value) {
  prefix(key);
  const std::string text = format_real(value);
  // JSON has no nan/inf literals
  out_ += (text == "nan" || text == "inf" || text == "-inf") ? "null" : text;
  return *this;
}

JsonWriter& JsonWriter::field(std::string_view key, std::int64_t value) {
  prefix(key);
  out_ += std::to_string(value);
  return *this;
}

JsonWriter& JsonWriter::field(std::string_view key, std::uint64_t value) {
  prefix(key);
  out_ += std::to_string(value);
  return *this;
}

JsonWriter& JsonWriter::field(std::string_view key, bool value) {
  prefix(key);
  out_ += value ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::null_field(std::string_view key) {
  prefix(key);
  out_ += "null";
  return *this;
}

JsonWriter& JsonWriter::field(std::string_view key, std::span<const double> values) {
  prefix(key);
  out_ += "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ += ", ";
    const std::string text = format_real(values[i]);
    out_ += (text == "nan" || text == "inf" || text == "-inf") ? "null" : text;
  }
  out_ += "]";
  return *this;
}

JsonWriter& JsonWriter::field(std::string_view key, std::span<const std::string> values) {
  prefix(key);
  out_ += "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ += ", ";
    out_ += quote(values[i]);
  }
  out_ += "]";
  return *this;
}

}  // namespace searchsig
