#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tcrom/matrix.hpp"

namespace tcrom {

// ---------------------------------------------------------------------------
// Static-graph reverse-mode automatic differentiation.
//
// A Tape is built once per training problem: leaves are inputs (data bound
// each evaluation), parameters (updated by the optimizer in place) and
// constants; interior nodes are a fixed set of primitives.  forward() reuses
// preallocated buffers, so repeated epochs allocate nothing.  backward(root)
// seeds d(root)/d(root) = 1 and walks the node list in reverse, accumulating
// gradients only into subgraphs that can reach a parameter.
//
// Distinct tapes share no mutable state and may be evaluated concurrently.
// ---------------------------------------------------------------------------

enum class Op {
  input,
  param,
  constant,
  matmul,    // op(A) * op(B), transpose flags per argument (not both)
  add,       // A + B elementwise
  add_bias,  // A (m x n) + b (m x 1) broadcast across columns
  sub,       // A - B
  scale,     // c * A
  relu,      // max(A, 0) elementwise
  slice,     // contiguous block of A
  skew,      // strict-lower-triangle params -> skew-symmetric d x d
  cholf,     // lower-triangle params (|diag|) -> lower-triangular d x d
  sumsq,     // sum of squared entries -> 1 x 1
  l1,        // sum of absolute entries -> 1 x 1
  sum        // sum of entries -> 1 x 1
};

class Tape {
 public:
  struct Node {
    Op op;
    int a = -1, b = -1;
    bool ta = false, tb = false;
    double c = 0.0;      // scale factor
    int i0 = 0, j0 = 0;  // slice origin
    int dim = 0;         // assembled matrix dimension
    Matrix val, grad;
    bool needs_grad = false;
    std::string name;
  };

  // --- graph construction ---------------------------------------------------

  int input(const std::string& name, int rows, int cols) {
    if (by_name_.count(name)) throw ValidationError("tape: duplicate name '" + name + "'");
    Node n{Op::input};
    n.val = Matrix(rows, cols);
    n.name = name;
    by_name_[name] = (int)nodes_.size();
    return push(std::move(n));
  }

  int param(const std::string& name, Matrix init) {
    if (by_name_.count(name)) throw ValidationError("tape: duplicate name '" + name + "'");
    Node n{Op::param};
    n.val = std::move(init);
    n.needs_grad = true;
    n.name = name;
    by_name_[name] = (int)nodes_.size();
    params_.push_back((int)nodes_.size());
    return push(std::move(n));
  }

  int constant(Matrix v) {
    Node n{Op::constant};
    n.val = std::move(v);
    return push(std::move(n));
  }

  int matmul(int a, int b, bool ta = false, bool tb = false) {
    const Matrix& av = at(a).val;
    const Matrix& bv = at(b).val;
    if (ta && tb) throw err("matmul", "A^T*B^T unsupported");
    const int m = ta ? av.cols() : av.rows();
    const int k = ta ? av.rows() : av.cols();
    const int kb = tb ? bv.cols() : bv.rows();
    const int nn = tb ? bv.rows() : bv.cols();
    if (k != kb)
      throw err("matmul", "inner dimensions incompatible: " + shape_str(av) +
                              (ta ? "^T" : "") + " * " + shape_str(bv) + (tb ? "^T" : ""));
    Node n{Op::matmul, a, b, ta, tb};
    n.val = Matrix(m, nn);
    return push(std::move(n));
  }

  int add(int a, int b) { return binary(Op::add, "add", a, b); }
  int sub(int a, int b) { return binary(Op::sub, "sub", a, b); }

  int add_bias(int a, int b) {
    const Matrix& av = at(a).val;
    const Matrix& bv = at(b).val;
    if (bv.cols() != 1 || bv.rows() != av.rows())
      throw err("add_bias", "bias must be " + std::to_string(av.rows()) + "x1, got " +
                                shape_str(bv));
    Node n{Op::add_bias, a, b};
    n.val = Matrix(av.rows(), av.cols());
    return push(std::move(n));
  }

  int scale(int a, double c) {
    Node n{Op::scale, a};
    n.c = c;
    n.val = Matrix(at(a).val.rows(), at(a).val.cols());
    return push(std::move(n));
  }

  int relu(int a) {
    Node n{Op::relu, a};
    n.val = Matrix(at(a).val.rows(), at(a).val.cols());
    return push(std::move(n));
  }

  int slice(int a, int i0, int j0, int rows, int cols) {
    const Matrix& av = at(a).val;
    if (i0 < 0 || j0 < 0 || rows < 1 || cols < 1 || i0 + rows > av.rows() ||
        j0 + cols > av.cols())
      throw err("slice", "block (" + std::to_string(i0) + "," + std::to_string(j0) +
                             ")+" + std::to_string(rows) + "x" + std::to_string(cols) +
                             " out of bounds for " + shape_str(av));
    Node n{Op::slice, a};
    n.i0 = i0;
    n.j0 = j0;
    n.val = Matrix(rows, cols);
    return push(std::move(n));
  }

  /// Skew-symmetric d x d matrix from d(d-1)/2 parameters filling the strict
  /// lower triangle row by row; the upper triangle is the negated transpose.
  int assemble_skew(int a, int d) {
    const Matrix& av = at(a).val;
    if (av.cols() != 1 || av.rows() != d * (d - 1) / 2)
      throw err("assemble_skew", "expected " + std::to_string(d * (d - 1) / 2) +
                                     "x1 parameters for d=" + std::to_string(d) +
                                     ", got " + shape_str(av));
    Node n{Op::skew, a};
    n.dim = d;
    n.val = Matrix(d, d);
    return push(std::move(n));
  }

  /// Lower-triangular d x d factor from d(d+1)/2 parameters filling the lower
  /// triangle row by row; the diagonal takes absolute values so G*G^T is
  /// positive semidefinite by construction.
  int assemble_cholf(int a, int d) {
    const Matrix& av = at(a).val;
    if (av.cols() != 1 || av.rows() != d * (d + 1) / 2)
      throw err("assemble_cholf", "expected " + std::to_string(d * (d + 1) / 2) +
                                      "x1 parameters for d=" + std::to_string(d) +
                                      ", got " + shape_str(av));
    Node n{Op::cholf, a};
    n.dim = d;
    n.val = Matrix(d, d);
    return push(std::move(n));
  }

  int sumsq(int a) { return reduction(Op::sumsq, a); }
  int l1(int a) { return reduction(Op::l1, a); }
  int sum(int a) { return reduction(Op::sum, a); }

  // --- access ----------------------------------------------------------------

  int by_name(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ValidationError("tape: unknown name '" + name + "'");
    return it->second;
  }

  void set_input(const std::string& name, const Matrix& v) { set_input(by_name(name), v); }

  void set_input(int id, const Matrix& v) {
    Node& n = at(id);
    if (n.op != Op::input) throw ValidationError("tape: node is not an input");
    if (!n.val.same_shape(v))
      throw ValidationError("tape: input '" + n.name + "' expects " + shape_str(n.val) +
                            ", got " + shape_str(v));
    n.val = v;
  }

  const Matrix& value(int id) const { return at(id).val; }
  Matrix& param_value(int id) {
    Node& n = at(id);
    if (n.op != Op::param) throw ValidationError("tape: node is not a parameter");
    return n.val;
  }
  double scalar(int id) const {
    const Matrix& v = at(id).val;
    if (v.rows() != 1 || v.cols() != 1)
      throw ValidationError("tape: node value is " + shape_str(v) + ", expected scalar");
    return v(0, 0);
  }
  const Matrix& grad(int id) const { return at(id).grad; }
  const std::vector<int>& params() const { return params_; }
  const std::string& name(int id) const { return at(id).name; }
  int size() const { return (int)nodes_.size(); }

  // --- evaluation --------------------------------------------------------------

  /// Bind named inputs, then evaluate every node; returns the last node value.
  const Matrix& forward(const std::map<std::string, Matrix>& inputs) {
    for (const auto& [name, v] : inputs) set_input(name, v);
    forward();
    return nodes_.back().val;
  }

  void forward() {
    for (Node& n : nodes_) eval(n);
  }

  /// Reverse pass from a scalar root; parameter gradients are then available
  /// through grad(id) for each id in params().
  void backward(int root) {
    Node& r = at(root);
    if (r.val.rows() != 1 || r.val.cols() != 1)
      throw ValidationError("backward: root node " + std::to_string(root) + " is " +
                            shape_str(r.val) + ", expected 1x1 scalar");
    for (int i = 0; i <= root; ++i) {
      Node& n = nodes_[i];
      if (!n.needs_grad) continue;
      if (n.grad.empty()) n.grad = Matrix(n.val.rows(), n.val.cols());
      else n.grad.zero();
    }
    if (!r.needs_grad) return;  // no parameter reachable from root
    r.grad(0, 0) = 1.0;
    for (int i = root; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.op == Op::input || n.op == Op::param || n.op == Op::constant)
        continue;
      propagate(n);
    }
  }

 private:
  int push(Node n) {
    if (n.a >= 0) n.needs_grad = n.needs_grad || at(n.a).needs_grad;
    if (n.b >= 0) n.needs_grad = n.needs_grad || at(n.b).needs_grad;
    nodes_.push_back(std::move(n));
    return (int)nodes_.size() - 1;
  }

  Node& at(int id) {
    if (id < 0 || id >= (int)nodes_.size())
      throw ValidationError("tape: node id " + std::to_string(id) + " out of range");
    return nodes_[id];
  }
  const Node& at(int id) const { return const_cast<Tape*>(this)->at(id); }

  ValidationError err(const char* op, const std::string& msg) const {
    return ValidationError(std::string(op) + " (node " + std::to_string(nodes_.size()) +
                           "): " + msg);
  }

  int binary(Op op, const char* tag, int a, int b) {
    const Matrix& av = at(a).val;
    const Matrix& bv = at(b).val;
    if (!av.same_shape(bv))
      throw err(tag, "shape mismatch " + shape_str(av) + " vs " + shape_str(bv));
    Node n{op, a, b};
    n.val = Matrix(av.rows(), av.cols());
    return push(std::move(n));
  }

  int reduction(Op op, int a) {
    Node n{op, a};
    n.val = Matrix(1, 1);
    return push(std::move(n));
  }

  void eval(Node& n) {
    switch (n.op) {
      case Op::input:
      case Op::param:
      case Op::constant:
        return;
      case Op::matmul:
        matmul_into(n.val, nodes_[n.a].val, nodes_[n.b].val, n.ta, n.tb);
        return;
      case Op::add: {
        const Matrix &a = nodes_[n.a].val, &b = nodes_[n.b].val;
        for (std::size_t i = 0; i < n.val.size(); ++i)
          n.val.data()[i] = a.data()[i] + b.data()[i];
        return;
      }
      case Op::sub: {
        const Matrix &a = nodes_[n.a].val, &b = nodes_[n.b].val;
        for (std::size_t i = 0; i < n.val.size(); ++i)
          n.val.data()[i] = a.data()[i] - b.data()[i];
        return;
      }
      case Op::add_bias: {
        const Matrix &a = nodes_[n.a].val, &b = nodes_[n.b].val;
        const int rows = n.val.rows(), cols = n.val.cols();
        for (int i = 0; i < rows; ++i) {
          const double bi = b(i, 0);
          const double* arow = a.row_ptr(i);
          double* orow = n.val.row_ptr(i);
          for (int j = 0; j < cols; ++j) orow[j] = arow[j] + bi;
        }
        return;
      }
      case Op::scale: {
        const Matrix& a = nodes_[n.a].val;
        for (std::size_t i = 0; i < n.val.size(); ++i) n.val.data()[i] = n.c * a.data()[i];
        return;
      }
      case Op::relu: {
        const Matrix& a = nodes_[n.a].val;
        for (std::size_t i = 0; i < n.val.size(); ++i)
          n.val.data()[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
        return;
      }
      case Op::slice: {
        const Matrix& a = nodes_[n.a].val;
        for (int i = 0; i < n.val.rows(); ++i)
          std::memcpy(n.val.row_ptr(i), a.row_ptr(n.i0 + i) + n.j0,
                      sizeof(double) * n.val.cols());
        return;
      }
      case Op::skew: {
        const Matrix& p = nodes_[n.a].val;
        const int d = n.dim;
        n.val.zero();
        int k = 0;
        for (int i = 1; i < d; ++i)
          for (int j = 0; j < i; ++j, ++k) {
            n.val(i, j) = p(k, 0);
            n.val(j, i) = -p(k, 0);
          }
        return;
      }
      case Op::cholf: {
        const Matrix& p = nodes_[n.a].val;
        const int d = n.dim;
        n.val.zero();
        int k = 0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j <= i; ++j, ++k)
            n.val(i, j) = (i == j) ? std::fabs(p(k, 0)) : p(k, 0);
        return;
      }
      case Op::sumsq: {
        const Matrix& a = nodes_[n.a].val;
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
        n.val(0, 0) = s;
        return;
      }
      case Op::l1: {
        const Matrix& a = nodes_[n.a].val;
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a.data()[i]);
        n.val(0, 0) = s;
        return;
      }
      case Op::sum: {
        const Matrix& a = nodes_[n.a].val;
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i];
        n.val(0, 0) = s;
        return;
      }
    }
  }

  void propagate(Node& n) {
    Node& pa = nodes_[n.a];
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::matmul: {
        Node& pb = nodes_[n.b];
        if (!n.ta && !n.tb) {
          if (pa.needs_grad) matmul_into(pa.grad, g, pb.val, false, true, true);
          if (pb.needs_grad) matmul_into(pb.grad, pa.val, g, true, false, true);
        } else if (!n.ta && n.tb) {  // C = A * B^T
          if (pa.needs_grad) matmul_into(pa.grad, g, pb.val, false, false, true);
          if (pb.needs_grad) matmul_into(pb.grad, g, pa.val, true, false, true);
        } else {  // C = A^T * B
          if (pa.needs_grad) matmul_into(pa.grad, pb.val, g, false, true, true);
          if (pb.needs_grad) matmul_into(pb.grad, pa.val, g, false, false, true);
        }
        return;
      }
      case Op::add: {
        Node& pb = nodes_[n.b];
        if (pa.needs_grad)
          for (std::size_t i = 0; i < g.size(); ++i) pa.grad.data()[i] += g.data()[i];
        if (pb.needs_grad)
          for (std::size_t i = 0; i < g.size(); ++i) pb.grad.data()[i] += g.data()[i];
        return;
      }
      case Op::sub: {
        Node& pb = nodes_[n.b];
        if (pa.needs_grad)
          for (std::size_t i = 0; i < g.size(); ++i) pa.grad.data()[i] += g.data()[i];
        if (pb.needs_grad)
          for (std::size_t i = 0; i < g.size(); ++i) pb.grad.data()[i] -= g.data()[i];
        return;
      }
      case Op::add_bias: {
        Node& pb = nodes_[n.b];
        if (pa.needs_grad)
          for (std::size_t i = 0; i < g.size(); ++i) pa.grad.data()[i] += g.data()[i];
        if (pb.needs_grad) {
          for (int i = 0; i < g.rows(); ++i) {
            const double* grow = g.row_ptr(i);
            double s = 0.0;
            for (int j = 0; j < g.cols(); ++j) s += grow[j];
            pb.grad(i, 0) += s;
          }
        }
        return;
      }
      case Op::scale: {
        if (pa.needs_grad)
          for (std::size_t i = 0; i < g.size(); ++i) pa.grad.data()[i] += n.c * g.data()[i];
        return;
      }
      case Op::relu: {
        if (pa.needs_grad)
          for (std::size_t i = 0; i < g.size(); ++i)
            if (pa.val.data()[i] > 0.0) pa.grad.data()[i] += g.data()[i];
        return;
      }
      case Op::slice: {
        if (pa.needs_grad)
          for (int i = 0; i < g.rows(); ++i) {
            double* prow = pa.grad.row_ptr(n.i0 + i) + n.j0;
            const double* grow = g.row_ptr(i);
            for (int j = 0; j < g.cols(); ++j) prow[j] += grow[j];
          }
        return;
      }
      case Op::skew: {
        if (!pa.needs_grad) return;
        const int d = n.dim;
        int k = 0;
        for (int i = 1; i < d; ++i)
          for (int j = 0; j < i; ++j, ++k) pa.grad(k, 0) += g(i, j) - g(j, i);
        return;
      }
      case Op::cholf: {
        if (!pa.needs_grad) return;
        const int d = n.dim;
        int k = 0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j <= i; ++j, ++k) {
            if (i == j) {
              const double p = pa.val(k, 0);
              const double sg = p > 0.0 ? 1.0 : (p < 0.0 ? -1.0 : 0.0);
              pa.grad(k, 0) += sg * g(i, j);
            } else {
              pa.grad(k, 0) += g(i, j);
            }
          }
        return;
      }
      case Op::sumsq: {
        if (!pa.needs_grad) return;
        const double gv = 2.0 * g(0, 0);
        for (std::size_t i = 0; i < pa.val.size(); ++i)
          pa.grad.data()[i] += gv * pa.val.data()[i];
        return;
      }
      case Op::l1: {
        if (!pa.needs_grad) return;
        const double gv = g(0, 0);
        for (std::size_t i = 0; i < pa.val.size(); ++i) {
          const double v = pa.val.data()[i];
          if (v > 0.0) pa.grad.data()[i] += gv;
          else if (v < 0.0) pa.grad.data()[i] -= gv;
        }
        return;
      }
      case Op::sum: {
        if (!pa.needs_grad) return;
        const double gv = g(0, 0);
        for (std::size_t i = 0; i < pa.val.size(); ++i) pa.grad.data()[i] += gv;
        return;
      }
      default:
        return;
    }
  }

  std::vector<Node> nodes_;
  std::vector<int> params_;
  std::map<std::string, int> by_name_;
};

}  // namespace tcrom
