#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chromabehave::csv {

/// Reads one logical CSV record (RFC 4180 quoting, embedded newlines allowed
/// inside quotes). Returns nullopt at end of input. Sets `ok=false` when a
/// quoted field is left unterminated.
std::optional<std::vector<std::string>> read_record(std::istream& in, bool& ok);

/// Quotes a field when it contains a comma, quote or line break.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Header lookup: column name (case-insensitive) to index, -1 when absent.
class Header {
 public:
  Header() = default;
  explicit Header(const std::vector<std::string>& names);
  int index(std::string_view name) const;
  bool has(std::string_view name) const { return index(name) >= 0; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

}  // namespace chromabehave::csv
