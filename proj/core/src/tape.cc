#include "stgib/tape.h"

#include <cmath>
#include <numeric>

#include "stgib/errors.h"

namespace stgib {

Param& ParamSet::Add(std::string name, std::vector<int> shape, Matrix value) {
  if (contains(name)) throw ValueError("duplicate parameter '" + name + "'");
  const long count = std::accumulate(shape.begin(), shape.end(), 1L, std::multiplies<long>());
  if (count != value.size()) throw ShapeError("parameter '" + name + "': shape does not match storage");
  index_.emplace(name, params_.size());
  Param& p = params_.emplace_back();
  p.name = std::move(name);
  p.shape = std::move(shape);
  p.grad = Matrix::Zero(value.rows(), value.cols());
  p.value = std::move(value);
  return p;
}

Param& ParamSet::at(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValueError("unknown parameter '" + std::string(name) + "'");
  return params_[it->second];
}

const Param& ParamSet::at(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValueError("unknown parameter '" + std::string(name) + "'");
  return params_[it->second];
}

size_t ParamSet::num_scalars() const {
  size_t n = 0;
  for (const Param& p : params_) n += static_cast<size_t>(p.value.size());
  return n;
}

void ParamSet::ZeroGrad() {
  for (Param& p : params_) p.grad.setZero();
}

double ParamSet::GradNorm() const {
  double sq = 0.0;
  for (const Param& p : params_) sq += p.grad.squaredNorm();
  return std::sqrt(sq);
}

Var Tape::Constant(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return Var(static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Input(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = true;
  return Var(static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Bind(Param& p) {
  Node& n = nodes_.emplace_back();
  n.requires_grad = true;
  n.param = &p;
  return Var(static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return Record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::Record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (Var in : inputs) needs = needs || nodes_[in.id()].requires_grad;
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  return Var(static_cast<int>(nodes_.size()) - 1);
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.size() != 1) throw ShapeError("Tape::scalar: value is not 1x1");
  return m(0, 0);
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.size() == 0) return Matrix::Zero(value(v).rows(), value(v).cols());
  return n.grad;
}

void Tape::Backward(Var output) {
  if (value(output).size() != 1) throw ShapeError("Backward: output must be a scalar");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[output.id()].requires_grad) return;
  nodes_[output.id()].grad = Matrix::Ones(1, 1);
  for (int id = output.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, Var(id));
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

namespace ad {
namespace {

void RequireSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": operand shapes differ");
  }
}

}  // namespace

Var MatMul(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.cols() != bv.rows()) throw ShapeError("MatMul: inner dimensions differ");
  Matrix out = av * bv;
  return t.Record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
    const Matrix& g = tp.grad_ref(self);
    if (tp.requires_grad(a)) tp.AccumulateGrad(a, g * tp.value(b).transpose());
    if (tp.requires_grad(b)) tp.AccumulateGrad(b, tp.value(a).transpose() * g);
  });
}

Var MatMulTransB(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.cols() != bv.cols()) throw ShapeError("MatMulTransB: inner dimensions differ");
  Matrix out = av * bv.transpose();
  return t.Record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
    const Matrix& g = tp.grad_ref(self);
    if (tp.requires_grad(a)) tp.AccumulateGrad(a, g * tp.value(b));
    if (tp.requires_grad(b)) tp.AccumulateGrad(b, g.transpose() * tp.value(a));
  });
}

Var AddRow(Tape& t, Var a, Var bias) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(bias);
  if (bv.rows() != 1 || bv.cols() != av.cols()) throw ShapeError("AddRow: bias must be 1 x cols");
  Matrix out = av.rowwise() + bv.row(0);
  return t.Record(std::move(out), {a, bias}, [a, bias](Tape& tp, Var self) {
    const Matrix& g = tp.grad_ref(self);
    tp.AccumulateGrad(a, g);
    if (tp.requires_grad(bias)) tp.AccumulateGrad(bias, g.colwise().sum());
  });
}

Var Add(Tape& t, Var a, Var b) {
  RequireSameShape(t.value(a), t.value(b), "Add");
  Matrix out = t.value(a) + t.value(b);
  return t.Record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
    const Matrix& g = tp.grad_ref(self);
    tp.AccumulateGrad(a, g);
    tp.AccumulateGrad(b, g);
  });
}

Var Sub(Tape& t, Var a, Var b) {
  RequireSameShape(t.value(a), t.value(b), "Sub");
  Matrix out = t.value(a) - t.value(b);
  return t.Record(std::move(out), {a, b}, [a, b](Tape& tp, Var self) {
    const Matrix& g = tp.grad_ref(self);
    tp.AccumulateGrad(a, g);
    tp.AccumulateGrad(b, -g);
  });
}

Var Scale(Tape& t, Var a, double s) { return Affine(t, a, s, 0.0); }

Var Affine(Tape& t, Var a, double s, double shift) {
  Matrix out = (t.value(a) * s).array() + shift;
  return t.Record(std::move(out), {a}, [a, s](Tape& tp, Var self) { tp.AccumulateGrad(a, tp.grad_ref(self) * s); });
}

Var AddConstant(Tape& t, Var a, const Matrix& c) {
  RequireSameShape(t.value(a), c, "AddConstant");
  Matrix out = t.value(a) + c;
  return t.Record(std::move(out), {a}, [a](Tape& tp, Var self) { tp.AccumulateGrad(a, tp.grad_ref(self)); });
}

Var Elu(Tape& t, Var a) {
  Matrix out = t.value(a).unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
  return t.Record(std::move(out), {a}, [a](Tape& tp, Var self) {
    const Matrix& x = tp.value(a);
    const Matrix& y = tp.value(self);
    Matrix d = tp.grad_ref(self);
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (x.data()[i] <= 0.0) d.data()[i] *= y.data()[i] + 1.0;
    }
    tp.AccumulateGrad(a, d);
  });
}

Var Sigmoid(Tape& t, Var a) {
  Matrix out = t.value(a).unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return t.Record(std::move(out), {a}, [a](Tape& tp, Var self) {
    const Matrix& y = tp.value(self);
    tp.AccumulateGrad(a, tp.grad_ref(self).cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  });
}

Var Reshape(Tape& t, Var a, int rows, int cols) {
  const Matrix& av = t.value(a);
  if (static_cast<Eigen::Index>(rows) * cols != av.size()) throw ShapeError("Reshape: element count differs");
  Matrix out = Eigen::Map<const Matrix>(av.data(), rows, cols);
  const int r0 = static_cast<int>(av.rows());
  const int c0 = static_cast<int>(av.cols());
  return t.Record(std::move(out), {a}, [a, r0, c0](Tape& tp, Var self) {
    const Matrix& g = tp.grad_ref(self);
    tp.AccumulateGrad(a, Eigen::Map<const Matrix>(g.data(), r0, c0));
  });
}

Var SwapAxes01(Tape& t, Var a, int dim_a, int dim_b) {
  const Matrix& av = t.value(a);
  if (av.rows() != static_cast<Eigen::Index>(dim_a) * dim_b) throw ShapeError("SwapAxes01: row count mismatch");
  Matrix out(av.rows(), av.cols());
  for (int i = 0; i < dim_a; ++i) {
    for (int j = 0; j < dim_b; ++j) out.row(j * dim_a + i) = av.row(i * dim_b + j);
  }
  return t.Record(std::move(out), {a}, [a, dim_a, dim_b](Tape& tp, Var self) {
    const Matrix& g = tp.grad_ref(self);
    Matrix back(g.rows(), g.cols());
    for (int i = 0; i < dim_a; ++i) {
      for (int j = 0; j < dim_b; ++j) back.row(i * dim_b + j) = g.row(j * dim_a + i);
    }
    tp.AccumulateGrad(a, back);
  });
}

Var GatherRows(Tape& t, Var a, std::vector<int> rows) {
  const Matrix& av = t.value(a);
  Matrix out(static_cast<Eigen::Index>(rows.size()), av.cols());
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= av.rows()) throw IndexError("GatherRows: row index out of range");
    out.row(static_cast<Eigen::Index>(r)) = av.row(rows[r]);
  }
  return t.Record(std::move(out), {a}, [a, rows = std::move(rows)](Tape& tp, Var self) {
    const Matrix& g = tp.grad_ref(self);
    Matrix back = Matrix::Zero(tp.value(a).rows(), tp.value(a).cols());
    for (size_t r = 0; r < rows.size(); ++r) back.row(rows[r]) += g.row(static_cast<Eigen::Index>(r));
    tp.AccumulateGrad(a, back);
  });
}

Var ConcatCols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("ConcatCols: no operands");
  const Eigen::Index rows = t.value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (t.value(p).rows() != rows) throw ShapeError("ConcatCols: row counts differ");
    cols += t.value(p).cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    const Matrix& pv = t.value(p);
    out.middleCols(c, pv.cols()) = pv;
    c += pv.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.Record(std::move(out), parts, [inputs](Tape& tp, Var self) {
    const Matrix& g = tp.grad_ref(self);
    Eigen::Index col = 0;
    for (Var p : inputs) {
      const Eigen::Index w = tp.value(p).cols();
      if (tp.requires_grad(p)) tp.AccumulateGrad(p, g.middleCols(col, w));
      col += w;
    }
  });
}

Var Sum(Tape& t, Var a) {
  Matrix out(1, 1);
  out(0, 0) = t.value(a).sum();
  return t.Record(std::move(out), {a}, [a](Tape& tp, Var self) {
    const double g = tp.grad_ref(self)(0, 0);
    tp.AccumulateGrad(a, Matrix::Constant(tp.value(a).rows(), tp.value(a).cols(), g));
  });
}

Var Mean(Tape& t, Var a) {
  const double n = static_cast<double>(t.value(a).size());
  if (n == 0) throw ShapeError("Mean: empty operand");
  return Scale(t, Sum(t, a), 1.0 / n);
}

}  // namespace ad
}  // namespace stgib
