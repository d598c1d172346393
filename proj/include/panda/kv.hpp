#pragma once

// Line-oriented `key = value` text used for configs, instances and reports.
// Blank lines and lines starting with '#' are ignored; keys keep insertion
// order so emitted documents are byte-stable.

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "panda/stacked.hpp"

namespace panda::kv {

// Shortest form is not used: every double is printed with 17 significant
// digits, which round-trips IEEE-754 binary64 exactly.
std::string format_double(double value);
std::string format_vector(const Vector& v);
// Row-major.
std::string format_matrix(const Matrix& m);

double parse_double(const std::string& text);
long long parse_int(const std::string& text);
bool parse_bool(const std::string& text);
Vector parse_vector(const std::string& text);

class Document {
 public:
  void set(const std::string& key, std::string value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) {
    set(key, static_cast<long long>(value));
  }
  void set(const std::string& key, bool value);
  void set(const std::string& key, const char* value) {
    set(key, std::string(value));
  }
  void comment(const std::string& text);

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  // Throws kParse when the key is missing.
  const std::string& at(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

  std::string to_text() const;
  static Document parse(const std::string& text);

 private:
  // Comments are stored with an empty key.
  std::vector<std::pair<std::string, std::string>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace panda::kv
