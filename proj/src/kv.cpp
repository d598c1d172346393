#include "panda/kv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "panda/error.hpp"

namespace panda::kv {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string format_vector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (r || c) out += ' ';
      out += format_double(m(r, c));
    }
  }
  return out;
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    fail(ErrorCode::kParse, "not a number: '" + text + "'");
  }
  return v;
}

long long parse_int(const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    fail(ErrorCode::kParse, "not an integer: '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  fail(ErrorCode::kParse, "not a boolean: '" + text + "'");
}

Vector parse_vector(const std::string& text) {
  std::istringstream in(text);
  std::vector<double> values;
  std::string token;
  while (in >> token) values.push_back(parse_double(token));
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void Document::set(const std::string& key, std::string value) {
  require(!key.empty() && key.find('=') == std::string::npos &&
              key.find('\n') == std::string::npos,
          "kv: invalid key '" + key + "'");
  require(value.find('\n') == std::string::npos, "kv: value contains newline");
  if (auto it = index_.find(key); it != index_.end()) {
    entries_[it->second].second = std::move(value);
    return;
  }
  index_.emplace(key, entries_.size());
  entries_.emplace_back(key, std::move(value));
}

void Document::set(const std::string& key, double value) {
  set(key, format_double(value));
}

void Document::set(const std::string& key, long long value) {
  set(key, std::to_string(value));
}

void Document::set(const std::string& key, bool value) {
  set(key, std::string(value ? "true" : "false"));
}

void Document::comment(const std::string& text) {
  entries_.emplace_back(std::string(), text);
}

bool Document::has(const std::string& key) const {
  return get(key).has_value();
}

std::optional<std::string> Document::get(const std::string& key) const {
  if (auto it = index_.find(key); it != index_.end()) {
    return entries_[it->second].second;
  }
  return std::nullopt;
}

const std::string& Document::at(const std::string& key) const {
  if (auto it = index_.find(key); it != index_.end()) {
    return entries_[it->second].second;
  }
  fail(ErrorCode::kParse, "missing key '" + key + "'");
}

std::string Document::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    if (k.empty()) {
      out += "# " + v + "\n";
    } else {
      out += k + " = " + v + "\n";
    }
  }
  return out;
}

Document Document::parse(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kParse,
           "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      fail(ErrorCode::kParse, "line " + std::to_string(lineno) + ": empty key");
    }
    doc.set(key, trim(t.substr(eq + 1)));
  }
  return doc;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kConfig, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kConfig, "cannot write '" + path + "'");
  out << contents;
  if (!out) fail(ErrorCode::kConfig, "write failed for '" + path + "'");
}

}  // namespace panda::kv
