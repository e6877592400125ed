#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace searchsig {

/// Minimal streaming JSON emitter with caller-controlled key order and
/// 6-significant-digit reals, for byte-stable output. Two-space indent,
/// arrays of scalars kept on one line.
class JsonWriter {
 public:
  JsonWriter& begin_object(std::string_view key = {});
  JsonWriter& end_object();
  JsonWriter& begin_array(std::string_view key = {});
  JsonWriter& end_array();

  JsonWriter& field(std::string_view key, std::string_view value);
  JsonWriter& field(std::string_view key, const char* value) { return field(key, std::string_view(value)); }
  JsonWriter& field(std::string_view key, double value);
  JsonWriter& field(std::string_view key, std::int64_t value);
  JsonWriter& field(std::string_view key, std::uint64_t value);
  JsonWriter& field(std::string_view key, int value) { return field(key, static_cast<std::int64_t>(value)); }
  JsonWriter& field(std::string_view key, bool value);
  JsonWriter& null_field(std::string_view key);
  JsonWriter& field(std::string_view key, std::span<const double> values);
  JsonWriter& field(std::string_view key, std::span<const std::string> values);

  template <typename T>
  JsonWriter& optional_field(std::string_view key, const std::optional<T>& value) {
    return value ? field(key, *value) : null_field(key);
  }

  /// Closes nothing; callers balance begin/end. Ends with a newline.
  std::string str() const { return out_ + "\n"; }

 private:
  void prefix(std::string_view key);
  static std::string quote(std::string_view text);

  std::string out_;
  std::vector<bool> first_;  // per open container
};

}  // namespace searchsig
