#ifndef STGIB_TAPE_H_
#define STGIB_TAPE_H_

#include <deque>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stgib/types.h"

namespace stgib {

// A named learnable array. `shape` is the logical shape written to
// checkpoints; `value` stores it as (prod(shape[0..n-2])) x shape[n-1].
struct Param {
  std::string name;
  std::vector<int> shape;
  Matrix value;
  Matrix grad;
};

// Ordered collection of parameters. Insertion order is the checkpoint order
// and the order in which optimizers visit parameters.
class ParamSet {
 public:
  Param& Add(std::string name, std::vector<int> shape, Matrix value);

  Param& at(std::string_view name);
  const Param& at(std::string_view name) const;
  bool contains(std::string_view name) const { return index_.find(std::string(name)) != index_.end(); }

  std::deque<Param>& params() { return params_; }
  const std::deque<Param>& params() const { return params_; }
  size_t size() const { return params_.size(); }
  size_t num_scalars() const;

  void ZeroGrad();
  double GradNorm() const;

 private:
  std::deque<Param> params_;
  std::map<std::string, size_t, std::less<>> index_;
};

class Tape;

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  bool valid() const { return id_ >= 0; }
  int id() const { return id_; }

 private:
  friend class Tape;
  explicit Var(int id) : id_(id) {}
  int id_ = -1;
};

// Reverse-mode tape. Each recorded node owns its forward value and a
// closure that pushes its output gradient to its inputs. Nodes whose inputs
// do not require gradients store no closure.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, Var self)>;

  Var Constant(Matrix value);
  // Differentiable leaf; its gradient is readable after Backward().
  Var Input(Matrix value);
  // Leaf bound to a parameter; Backward() adds its gradient into p.grad.
  Var Bind(Param& p);
  Var Record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var Record(Matrix value, std::span<const Var> inputs, BackwardFn backward);

  const Matrix& value(Var v) const {
    const Node& n = nodes_[v.id()];
    return n.param != nullptr ? n.param->value : n.value;
  }
  double scalar(Var v) const;
  // Gradient of the last Backward() output w.r.t. v (zeros if unreached).
  Matrix grad(Var v) const;
  // Gradient buffer used inside backward closures; may be empty.
  const Matrix& grad_ref(Var v) const { return nodes_[v.id()].grad; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  size_t size() const { return nodes_.size(); }

  void Backward(Var output);

  template <typename Derived>
  void AccumulateGrad(Var v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[v.id()];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
      return;
    }
    n.grad += g;
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
    Param* param = nullptr;
  };
  std::deque<Node> nodes_;
};

// Differentiable primitives. Shapes follow Eigen conventions; tensors of
// rank 3 are carried as (A*B) x C matrices.
namespace ad {

Var MatMul(Tape& t, Var a, Var b);
// a * b^T
Var MatMulTransB(Tape& t, Var a, Var b);
// Adds the 1 x C row `bias` to every row of `a`.
Var AddRow(Tape& t, Var a, Var bias);
Var Add(Tape& t, Var a, Var b);
Var Sub(Tape& t, Var a, Var b);
Var Scale(Tape& t, Var a, double s);
// a * s + shift
Var Affine(Tape& t, Var a, double s, double shift);
Var AddConstant(Tape& t, Var a, const Matrix& c);
Var Elu(Tape& t, Var a);
Var Sigmoid(Tape& t, Var a);
Var Reshape(Tape& t, Var a, int rows, int cols);
// (A, B, C) stored as (A*B) x C  ->  (B, A, C) stored as (B*A) x C.
Var SwapAxes01(Tape& t, Var a, int dim_a, int dim_b);
Var GatherRows(Tape& t, Var a, std::vector<int> rows);
Var ConcatCols(Tape& t, std::span<const Var> parts);
Var Sum(Tape& t, Var a);
Var Mean(Tape& t, Var a);

}  // namespace ad
}  // namespace stgib

#endif  // STGIB_TAPE_H_
