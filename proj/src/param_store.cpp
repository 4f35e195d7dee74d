#include "param_store.hpp"

#include "error.hpp"

namespace vcore {

DenseArray& ParameterStore::add(const std::string& name, DenseArray value, bool trainable) {
  if (entries_.count(name)) {
    throw ValidationError("ParameterStore: duplicate parameter name '" + name + "'");
  }
  Entry e;
  e.grad = DenseArray(value.shape());
  e.value = std::move(value);
  e.trainable = trainable;
  return entries_.emplace(name, std::move(e)).first->second.value;
}

const ParameterStore::Entry& ParameterStore::find(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ValidationError("ParameterStore: unknown parameter '" + name + "'");
  }
  return it->second;
}

DenseArray& ParameterStore::value(const std::string& name) {
  return const_cast<Entry&>(find(name)).value;
}

const DenseArray& ParameterStore::value(const std::string& name) const {
  return find(name).value;
}

DenseArray& ParameterStore::grad(const std::string& name) {
  return const_cast<Entry&>(find(name)).grad;
}

bool ParameterStore::trainable(const std::string& name) const { return find(name).trainable; }

void ParameterStore::zero_grads() {
  for (auto& [name, e] : entries_) e.grad.fill(0.0);
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

}  // namespace vcore
