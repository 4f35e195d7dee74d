#include "kv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace vcore {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void KvText::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : pairs_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  pairs_.emplace_back(key, value);
}

void KvText::set(const std::string& key, double value) { set(key, format_double(value)); }

void KvText::set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }

bool KvText::has(const std::string& key) const {
  for (const auto& [k, v] : pairs_) {
    if (k == key) return true;
  }
  return false;
}

const std::string& KvText::get(const std::string& key) const {
  for (const auto& [k, v] : pairs_) {
    if (k == key) return v;
  }
  throw ValidationError("missing key '" + key + "'");
}

std::string KvText::get_or(const std::string& key, const std::string& fallback) const {
  for (const auto& [k, v] : pairs_) {
    if (k == key) return v;
  }
  return fallback;
}

double KvText::get_double(const std::string& key) const {
  const std::string& s = get(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("key '" + key + "': not a number: '" + s + "'");
  }
}

std::uint64_t KvText::get_u64(const std::string& key) const {
  const std::string& s = get(key);
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ValidationError("key '" + key + "': not an unsigned integer: '" + s + "'");
  }
  return v;
}

std::string KvText::to_text() const {
  std::string out;
  for (const auto& [k, v] : pairs_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

KvText KvText::parse(const std::string& text) {
  KvText kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("line " + std::to_string(lineno) + ": expected key=value, got '" +
                            line + "'");
    }
    kv.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return kv;
}

KvText KvText::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void KvText::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << to_text();
  if (!out) throw IoError("short write to '" + path + "'");
}

}  // namespace vcore
