#include "tape.hpp"

#include <cmath>
#include <utility>

#include "error.hpp"
#include "ops.hpp"

namespace vcore {

Var Tape::push(DenseArray value, std::function<void(Tape&)> back, std::string pname) {
  nodes_.push_back(Node{std::move(value), DenseArray(), std::move(back), std::move(pname)});
  return Var{nodes_.size() - 1};
}

Tape::Node& Tape::node(Var v) {
  if (v.id >= nodes_.size()) throw ValidationError("Tape: variable is not on this tape");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw ValidationError("Tape: variable is not on this tape");
  return nodes_[v.id];
}

const DenseArray& Tape::val(Var v) const { return node(v).value; }

const DenseArray& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) throw ValidationError("Tape: gradient not computed; run backward first");
  return n.grad;
}

Var Tape::constant(DenseArray v) { return push(std::move(v)); }

Var Tape::param(const std::string& name) {
  auto it = param_ids_.find(name);
  if (it != param_ids_.end()) return Var{it->second};
  if (!store_) throw ValidationError("Tape: no parameter store attached");
  Var v = push(store_->value(name), {}, name);
  param_ids_.emplace(name, v.id);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  DenseArray out = ops::matmul(val(a), val(b));
  Var o = push(std::move(out));
  const std::size_t aid = a.id, bid = b.id, oid = o.id;
  nodes_[oid].back = [aid, bid, oid](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    ops::matmul_nt_acc(t.grad_ref(aid), g, t.val_ref(bid));
    ops::matmul_tn_acc(t.grad_ref(bid), t.val_ref(aid), g);
  };
  return o;
}

Var Tape::matmul_sorted(Var a, Var b) {
  DenseArray out = ops::matmul_sorted(val(a), val(b));
  Var o = push(std::move(out));
  const std::size_t aid = a.id, bid = b.id, oid = o.id;
  nodes_[oid].back = [aid, bid, oid](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    ops::matmul_nt_acc(t.grad_ref(aid), g, t.val_ref(bid));
    ops::matmul_tn_acc(t.grad_ref(bid), t.val_ref(aid), g);
  };
  return o;
}

Var Tape::transpose(Var a) {
  DenseArray out = ops::transpose(val(a));
  Var o = push(std::move(out));
  const std::size_t aid = a.id, oid = o.id;
  nodes_[oid].back = [aid, oid](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& ga = t.grad_ref(aid);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga.at(j, i) += g.at(i, j);
  };
  return o;
}

Var Tape::add(Var a, Var b) {
  DenseArray out = ops::add(val(a), val(b));
  Var o = push(std::move(out));
  const std::size_t aid = a.id, bid = b.id, oid = o.id;
  nodes_[oid].back = [aid, bid, oid](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& ga = t.grad_ref(aid);
    DenseArray& gb = t.grad_ref(bid);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  };
  return o;
}

Var Tape::scale(Var a, double s) {
  DenseArray out = ops::scale(val(a), s);
  Var o = push(std::move(out));
  const std::size_t aid = a.id, oid = o.id;
  nodes_[oid].back = [aid, oid, s](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& ga = t.grad_ref(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  };
  return o;
}

Var Tape::add_bias(Var a, Var bias) {
  DenseArray out = ops::add_row_broadcast(val(a), val(bias));
  Var o = push(std::move(out));
  const std::size_t aid = a.id, bid = bias.id, oid = o.id;
  nodes_[oid].back = [aid, bid, oid](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& ga = t.grad_ref(aid);
    DenseArray& gb = t.grad_ref(bid);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) {
        ga.at(i, j) += g.at(i, j);
        gb[j] += g.at(i, j);
      }
  };
  return o;
}

Var Tape::slice_rows(Var a, std::size_t begin, std::size_t count) {
  const DenseArray& src = val(a);
  if (!src.is_matrix() || begin + count > src.rows()) {
    throw ValidationError("slice_rows: range [" + std::to_string(begin) + ", " +
                          std::to_string(begin + count) + ") out of " + src.shape_string());
  }
  DenseArray out = DenseArray::matrix(count, src.cols());
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) out.at(i, j) = src.at(begin + i, j);
  Var o = push(std::move(out));
  const std::size_t aid = a.id, oid = o.id;
  nodes_[oid].back = [aid, oid, begin, count](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& ga = t.grad_ref(aid);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga.at(begin + i, j) += g.at(i, j);
  };
  return o;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ValidationError("concat_rows: no parts");
  const std::size_t cols = val(parts[0]).cols();
  std::size_t rows = 0;
  for (Var p : parts) {
    if (val(p).cols() != cols) {
      throw ValidationError("concat_rows: column mismatch " + val(p).shape_string());
    }
    rows += val(p).rows();
  }
  DenseArray out = DenseArray::matrix(rows, cols);
  std::size_t r = 0;
  std::vector<std::size_t> ids, offsets;
  for (Var p : parts) {
    const DenseArray& src = val(p);
    ids.push_back(p.id);
    offsets.push_back(r);
    for (std::size_t i = 0; i < src.rows(); ++i)
      for (std::size_t j = 0; j < cols; ++j) out.at(r + i, j) = src.at(i, j);
    r += src.rows();
  }
  Var o = push(std::move(out));
  const std::size_t oid = o.id;
  nodes_[oid].back = [ids, offsets, oid](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      DenseArray& gp = t.grad_ref(ids[k]);
      for (std::size_t i = 0; i < gp.rows(); ++i)
        for (std::size_t j = 0; j < gp.cols(); ++j) gp.at(i, j) += g.at(offsets[k] + i, j);
    }
  };
  return o;
}

Var Tape::slice_cols(Var a, std::size_t begin, std::size_t count) {
  const DenseArray& src = val(a);
  if (!src.is_matrix() || begin + count > src.cols()) {
    throw ValidationError("slice_cols: range [" + std::to_string(begin) + ", " +
                          std::to_string(begin + count) + ") out of " + src.shape_string());
  }
  DenseArray out = DenseArray::matrix(src.rows(), count);
  for (std::size_t i = 0; i < src.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out.at(i, j) = src.at(i, begin + j);
  Var o = push(std::move(out));
  const std::size_t aid = a.id, oid = o.id;
  nodes_[oid].back = [aid, oid, begin, count](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& ga = t.grad_ref(aid);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < count; ++j) ga.at(i, begin + j) += g.at(i, j);
  };
  return o;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ValidationError("concat_cols: no parts");
  const std::size_t rows = val(parts[0]).rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (val(p).rows() != rows) {
      throw ValidationError("concat_cols: row mismatch " + val(p).shape_string());
    }
    cols += val(p).cols();
  }
  DenseArray out = DenseArray::matrix(rows, cols);
  std::size_t c = 0;
  std::vector<std::size_t> ids, offsets;
  for (Var p : parts) {
    const DenseArray& src = val(p);
    ids.push_back(p.id);
    offsets.push_back(c);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < src.cols(); ++j) out.at(i, c + j) = src.at(i, j);
    c += src.cols();
  }
  Var o = push(std::move(out));
  const std::size_t oid = o.id;
  nodes_[oid].back = [ids, offsets, oid](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      DenseArray& gp = t.grad_ref(ids[k]);
      for (std::size_t i = 0; i < gp.rows(); ++i)
        for (std::size_t j = 0; j < gp.cols(); ++j) gp.at(i, j) += g.at(i, offsets[k] + j);
    }
  };
  return o;
}

Var Tape::mean_rows(Var a) {
  DenseArray out = ops::mean_rows(val(a));
  Var o = push(std::move(out));
  const std::size_t aid = a.id, oid = o.id;
  const double inv = 1.0 / static_cast<double>(val(a).rows());
  nodes_[oid].back = [aid, oid, inv](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& ga = t.grad_ref(aid);
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga.at(i, j) += inv * g.at(0, j);
  };
  return o;
}

Var Tape::gather_rows(Var table, std::vector<std::size_t> indices) {
  const DenseArray& src = val(table);
  if (!src.is_matrix()) throw ValidationError("gather_rows: table must be a matrix");
  DenseArray out = DenseArray::matrix(indices.size(), src.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= src.rows()) {
      throw ValidationError("gather_rows: index " + std::to_string(indices[i]) + " out of " +
                            src.shape_string());
    }
    for (std::size_t j = 0; j < src.cols(); ++j) out.at(i, j) = src.at(indices[i], j);
  }
  Var o = push(std::move(out));
  const std::size_t tid = table.id, oid = o.id;
  nodes_[oid].back = [tid, oid, idx = std::move(indices)](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& gt = t.grad_ref(tid);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) gt.at(idx[i], j) += g.at(i, j);
  };
  return o;
}

Var Tape::masked_softmax(Var logits, const DenseArray& mask) {
  DenseArray out = ops::masked_softmax(val(logits), mask);
  Var o = push(std::move(out));
  const std::size_t lid = logits.id, oid = o.id;
  // d/dz softmax: p * (g - <g, p>) per row; masked entries have p == 0, so
  // their logits receive an exact zero gradient without consulting the mask.
  nodes_[oid].back = [lid, oid](Tape& t) {
    const DenseArray& p = t.val_ref(oid);
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& gl = t.grad_ref(lid);
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < p.cols(); ++j) dot += g.at(i, j) * p.at(i, j);
      for (std::size_t j = 0; j < p.cols(); ++j) {
        gl.at(i, j) += p.at(i, j) * (g.at(i, j) - dot);
      }
    }
  };
  return o;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  DenseArray out = ops::layer_norm_rows(val(x), val(gain), val(bias), eps);
  Var o = push(std::move(out));
  const std::size_t xid = x.id, gid = gain.id, bid = bias.id, oid = o.id;
  nodes_[oid].back = [xid, gid, bid, oid, eps](Tape& t) {
    const DenseArray& xv = t.val_ref(xid);
    const DenseArray& gv = t.val_ref(gid);
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& gx = t.grad_ref(xid);
    DenseArray& gg = t.grad_ref(gid);
    DenseArray& gb = t.grad_ref(bid);
    const std::size_t d = xv.cols();
    const double dn = static_cast<double>(d);
    std::vector<double> y(d), dy(d);
    for (std::size_t i = 0; i < xv.rows(); ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < d; ++j) mean += xv.at(i, j);
      mean /= dn;
      double var = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double dlt = xv.at(i, j) - mean;
        var += dlt * dlt;
      }
      var /= dn;
      const double inv = 1.0 / std::sqrt(var + eps);
      double dy_mean = 0.0, dyy_mean = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        y[j] = (xv.at(i, j) - mean) * inv;
        dy[j] = g.at(i, j) * gv[j];
        gg[j] += g.at(i, j) * y[j];
        gb[j] += g.at(i, j);
        dy_mean += dy[j];
        dyy_mean += dy[j] * y[j];
      }
      dy_mean /= dn;
      dyy_mean /= dn;
      for (std::size_t j = 0; j < d; ++j) {
        gx.at(i, j) += inv * (dy[j] - dy_mean - y[j] * dyy_mean);
      }
    }
  };
  return o;
}

Var Tape::gelu(Var a) {
  DenseArray out = ops::gelu(val(a));
  Var o = push(std::move(out));
  const std::size_t aid = a.id, oid = o.id;
  nodes_[oid].back = [aid, oid](Tape& t) {
    const DenseArray& xv = t.val_ref(aid);
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& ga = t.grad_ref(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * ops::gelu_derivative(xv[i]);
  };
  return o;
}

Var Tape::reshape(Var a, std::vector<std::size_t> shape) {
  const DenseArray& src = val(a);
  DenseArray out(std::move(shape), std::vector<double>(src.data(), src.data() + src.size()));
  Var o = push(std::move(out));
  const std::size_t aid = a.id, oid = o.id;
  nodes_[oid].back = [aid, oid](Tape& t) {
    const DenseArray& g = t.grad_ref(oid);
    DenseArray& ga = t.grad_ref(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  };
  return o;
}

Var Tape::sum(Var a) {
  Var o = push(DenseArray::scalar(ops::sum(val(a))));
  const std::size_t aid = a.id, oid = o.id;
  nodes_[oid].back = [aid, oid](Tape& t) {
    const double g = t.grad_ref(oid)[0];
    DenseArray& ga = t.grad_ref(aid);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  };
  return o;
}

Var Tape::cross_entropy(Var logits, std::size_t label) {
  const DenseArray& z = val(logits);
  const std::size_t n = z.size();
  if (label >= n) throw ValidationError("cross_entropy: label out of range");
  double mx = z[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, z[i]);
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) denom += std::exp(z[i] - mx);
  const double lse = mx + std::log(denom);
  Var o = push(DenseArray::scalar(lse - z[label]));
  const std::size_t lid = logits.id, oid = o.id;
  nodes_[oid].back = [lid, oid, label, lse](Tape& t) {
    const DenseArray& z = t.val_ref(lid);
    const double g = t.grad_ref(oid)[0];
    DenseArray& gl = t.grad_ref(lid);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double p = std::exp(z[i] - lse);
      gl[i] += g * (p - (i == label ? 1.0 : 0.0));
    }
  };
  return o;
}

void Tape::backward(Var loss) {
  if (loss.id >= nodes_.size()) throw ValidationError("backward: loss is not on this tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw ValidationError("backward: loss must be scalar, got shape " +
                          nodes_[loss.id].value.shape_string());
  }
  for (std::size_t i = 0; i <= loss.id; ++i) {
    nodes_[i].grad = DenseArray(nodes_[i].value.shape());
  }
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
  if (store_) {
    for (std::size_t i = 0; i <= loss.id; ++i) {
      if (nodes_[i].param_name.empty()) continue;
      DenseArray& pg = store_->grad(nodes_[i].param_name);
      const DenseArray& ng = nodes_[i].grad;
      for (std::size_t j = 0; j < pg.size(); ++j) pg[j] += ng[j];
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  param_ids_.clear();
}

}  // namespace vcore
