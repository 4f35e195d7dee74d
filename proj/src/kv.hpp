#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace vcore {

// Ordered key=value text, one pair per line. Used for config files, dataset
// manifests and per-run metrics. Blank lines and lines starting with '#' are
// ignored on parse; emission order is preserved so files diff cleanly.
class KvText {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::uint64_t value);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws if missing
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  std::string to_text() const;
  static KvText parse(const std::string& text);
  static KvText load(const std::string& path);
  void save(const std::string& path) const;

  const std::vector<std::pair<std::string, std::string>>& pairs() const { return pairs_; }

 private:
  std::vector<std::pair<std::string, std::string>> pairs_;
};

/// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

}  // namespace vcore
