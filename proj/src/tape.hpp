#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dense_array.hpp"
#include "param_store.hpp"

namespace vcore {

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

// Reverse-mode differentiation over dense-array operations. Every op records
// one node holding the forward value plus a pullback closure; backward() walks
// the record in strict reverse execution order exactly once and accumulates
// parameter gradients into the attached ParameterStore.
//
// A tape is single-writer: one active tape per training step. Forward-only
// callers simply never invoke backward().
class Tape {
 public:
  explicit Tape(ParameterStore* store = nullptr) : store_(store) {}

  /// Non-differentiable input (frame features, query embeddings, ...).
  Var constant(DenseArray v);
  /// Leaf for a named parameter; one node per name, cached.
  Var param(const std::string& name);

  Var matmul(Var a, Var b);
  /// Forward via ops::matmul_sorted (order-canonical accumulation); the
  /// backward pass is the ordinary matmul pullback.
  Var matmul_sorted(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var scale(Var a, double s);
  /// matrix + row-broadcast vector bias
  Var add_bias(Var a, Var bias);
  Var slice_rows(Var a, std::size_t begin, std::size_t count);
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_cols(Var a, std::size_t begin, std::size_t count);
  Var concat_cols(const std::vector<Var>& parts);
  Var mean_rows(Var a);
  /// out[i, :] = table[indices[i], :]
  Var gather_rows(Var table, std::vector<std::size_t> indices);
  /// Mask is an additive {0, -inf} constant; it is not differentiated.
  Var masked_softmax(Var logits, const DenseArray& mask);
  Var layer_norm(Var x, Var gain, Var bias, double eps);
  Var gelu(Var a);
  Var reshape(Var a, std::vector<std::size_t> shape);
  Var sum(Var a);
  /// Softmax cross entropy of a length-C row of logits against a class index.
  Var cross_entropy(Var logits, std::size_t label);

  const DenseArray& val(Var v) const;
  const DenseArray& grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Accumulates d(loss)/d(param) into the ParameterStore for every parameter
  /// leaf. Additive: calling it twice doubles the stored gradients exactly.
  void backward(Var loss);

  /// Drops all nodes (capacity kept); the parameter store is untouched.
  void reset();

  ParameterStore* store() { return store_; }

 private:
  struct Node {
    DenseArray value;
    DenseArray grad;
    std::function<void(Tape&)> back;  // empty for leaves
    std::string param_name;           // non-empty for parameter leaves
  };

  Var push(DenseArray value, std::function<void(Tape&)> back = {}, std::string pname = {});
  Node& node(Var v);
  const Node& node(Var v) const;
  DenseArray& grad_ref(std::size_t id) { return nodes_[id].grad; }
  const DenseArray& val_ref(std::size_t id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::size_t> param_ids_;
  ParameterStore* store_;
};

}  // namespace vcore
