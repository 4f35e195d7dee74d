#pragma once

#include <map>
#include <string>

#include "dense_array.hpp"

namespace vcore {

/// Named collection of trainable arrays with paired gradient accumulators.
/// Iteration is always in name order, which keeps optimizers, checkpoints and
/// gradient checks deterministic.
class ParameterStore {
 public:
  struct Entry {
    DenseArray value;
    DenseArray grad;
    bool trainable = true;
  };

  DenseArray& add(const std::string& name, DenseArray value, bool trainable = true);

  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  DenseArray& value(const std::string& name);
  const DenseArray& value(const std::string& name) const;
  DenseArray& grad(const std::string& name);
  bool trainable(const std::string& name) const;

  void zero_grads();
  std::size_t count() const { return entries_.size(); }
  std::size_t element_count() const;

  std::map<std::string, Entry>& entries() { return entries_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  const Entry& find(const std::string& name) const;
  std::map<std::string, Entry> entries_;
};

}  // namespace vcore
