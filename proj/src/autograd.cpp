#include "inornet/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace inornet {

Var Tape::constant(Mat value) {
  nodes_.push_back({std::move(value), Mat(), nullptr, false});
  return {this, nodes_.size() - 1};
}

Var Tape::variable(Mat value) {
  nodes_.push_back({std::move(value), Mat(), nullptr, true});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Mat value, std::vector<std::size_t> inputs, Backward backward) {
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [&](std::size_t i) { return nodes_[i].requires_grad; });
  nodes_.push_back({std::move(value), Mat(), needs ? std::move(backward) : nullptr, needs});
  return {this, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Mat& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root, double seed, std::span<const Var> stop) {
  const Mat& v = nodes_[root.id].value;
  backward(root, Mat::Constant(v.rows(), v.cols(), seed), stop);
}

void Tape::backward(Var root, const Mat& seed, std::span<const Var> stop) {
  if (root.tape != this) throw std::invalid_argument("backward: variable from another tape");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  std::vector<char> blocked(nodes_.size(), 0);
  for (const Var& s : stop) blocked[s.id] = 1;
  accumulate(root.id, seed);
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.size() == 0 || blocked[id]) continue;
    n.backward(*this, id);
  }
}

Mat Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul: shape mismatch");
  Tape& t = *a.tape;
  const auto ia = a.id, ib = b.id;
  return t.record(a.value() * b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Mat& g = tp.grad_ref(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  const auto ia = a.id, ib = b.id;
  return a.tape->record(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.grad_ref(self));
    tp.accumulate(ib, tp.grad_ref(self));
  });
}

Var sub(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  const auto ia = a.id, ib = b.id;
  return a.tape->record(a.value() - b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.grad_ref(self));
    if (tp.requires_grad(ib)) tp.accumulate(ib, -tp.grad_ref(self));
  });
}

Var mul(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
  const auto ia = a.id, ib = b.id;
  return a.tape->record(a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Mat& g = tp.grad_ref(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
  });
}

Var scale(Var a, double c) {
  const auto ia = a.id;
  return a.tape->record(a.value() * c, {ia}, [ia, c](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.grad_ref(self) * c);
  });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row: shape mismatch");
  const auto ia = a.id, ir = row.id;
  Mat out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape->record(std::move(out), {ia, ir}, [ia, ir](Tape& tp, std::size_t self) {
    const Mat& g = tp.grad_ref(self);
    tp.accumulate(ia, g);
    if (tp.requires_grad(ir)) tp.accumulate(ir, g.colwise().sum());
  });
}

Var linear(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

Var relu(Var a) {
  const auto ia = a.id;
  return a.tape->record(a.value().cwiseMax(0.0), {ia}, [ia](Tape& tp, std::size_t self) {
    const Mat& x = tp.value(ia);
    tp.accumulate(ia, (x.array() > 0.0).select(tp.grad_ref(self), 0.0));
  });
}

Var sigmoid(Var a) {
  const auto ia = a.id;
  Mat out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape->record(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    const Mat& y = tp.value(self);
    tp.accumulate(ia, (tp.grad_ref(self).array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Var gather_rows(Var a, std::vector<std::uint32_t> rows) {
  const Mat& av = a.value();
  Mat out(static_cast<Index>(rows.size()), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < av.rows(), "gather_rows: index out of range");
    out.row(static_cast<Index>(i)) = av.row(rows[i]);
  }
  const auto ia = a.id;
  const Index src_rows = av.rows();
  return a.tape->record(std::move(out), {ia}, [ia, src_rows, rows = std::move(rows)](Tape& tp, std::size_t self) {
    const Mat& g = tp.grad_ref(self);
    Mat ga = Mat::Zero(src_rows, g.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) ga.row(rows[i]) += g.row(static_cast<Index>(i));
    tp.accumulate(ia, ga);
  });
}

Var group_max(Var a, Index group) {
  const Mat& av = a.value();
  require(group >= 1 && av.rows() % group == 0, "group_max: rows not divisible by group");
  const Index groups = av.rows() / group, cols = av.cols();
  Mat out(groups, cols);
  std::vector<Index> arg(static_cast<std::size_t>(groups * cols));
  for (Index gidx = 0; gidx < groups; ++gidx) {
    for (Index c = 0; c < cols; ++c) {
      Index best = gidx * group;
      double bv = av(best, c);
      for (Index r = best + 1; r < (gidx + 1) * group; ++r) {
        if (av(r, c) > bv) {
          bv = av(r, c);
          best = r;
        }
      }
      out(gidx, c) = bv;
      arg[static_cast<std::size_t>(gidx * cols + c)] = best;
    }
  }
  const auto ia = a.id;
  const Index src_rows = av.rows();
  return a.tape->record(std::move(out), {ia}, [ia, src_rows, cols, arg = std::move(arg)](Tape& tp, std::size_t self) {
    const Mat& g = tp.grad_ref(self);
    Mat ga = Mat::Zero(src_rows, cols);
    for (Index gidx = 0; gidx < g.rows(); ++gidx) {
      for (Index c = 0; c < cols; ++c) ga(arg[static_cast<std::size_t>(gidx * cols + c)], c) += g(gidx, c);
    }
    tp.accumulate(ia, ga);
  });
}

Var group_mean(Var a, Index group) {
  const Mat& av = a.value();
  require(group >= 1 && av.rows() % group == 0, "group_mean: rows not divisible by group");
  const Index groups = av.rows() / group;
  Mat out(groups, av.cols());
  for (Index gidx = 0; gidx < groups; ++gidx) {
    out.row(gidx) = av.middleRows(gidx * group, group).colwise().sum() / static_cast<double>(group);
  }
  const auto ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, group](Tape& tp, std::size_t self) {
    const Mat& g = tp.grad_ref(self);
    Mat ga(g.rows() * group, g.cols());
    for (Index gidx = 0; gidx < g.rows(); ++gidx) {
      for (Index r = 0; r < group; ++r) ga.row(gidx * group + r) = g.row(gidx) / static_cast<double>(group);
    }
    tp.accumulate(ia, ga);
  });
}

Var col_max(Var a) { return group_max(a, a.rows()); }

Var reshape(Var a, Index rows, Index cols) {
  const Mat& av = a.value();
  require(rows * cols == av.size(), "reshape: size mismatch");
  Mat out = Eigen::Map<const Mat>(av.data(), rows, cols);
  const auto ia = a.id;
  const Index r0 = av.rows(), c0 = av.cols();
  return a.tape->record(std::move(out), {ia}, [ia, r0, c0](Tape& tp, std::size_t self) {
    const Mat& g = tp.grad_ref(self);
    tp.accumulate(ia, Eigen::Map<const Mat>(g.data(), r0, c0));
  });
}

Var concat_cols(Var a, Var b) {
  require(a.rows() == b.rows(), "concat_cols: row mismatch");
  Mat out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const auto ia = a.id, ib = b.id;
  const Index ca = a.cols(), cb = b.cols();
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib, ca, cb](Tape& tp, std::size_t self) {
    const Mat& g = tp.grad_ref(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g.leftCols(ca));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.rightCols(cb));
  });
}

Var unfold3(Var a) {
  const Mat& av = a.value();
  const Index n = av.rows(), c = av.cols();
  Mat out = Mat::Zero(n, 3 * c);
  for (Index l = 0; l < n; ++l) {
    if (l > 0) out.row(l).segment(0, c) = av.row(l - 1);
    out.row(l).segment(c, c) = av.row(l);
    if (l + 1 < n) out.row(l).segment(2 * c, c) = av.row(l + 1);
  }
  const auto ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, n, c](Tape& tp, std::size_t self) {
    const Mat& g = tp.grad_ref(self);
    Mat ga = Mat::Zero(n, c);
    for (Index l = 0; l < n; ++l) {
      if (l > 0) ga.row(l - 1) += g.row(l).segment(0, c);
      ga.row(l) += g.row(l).segment(c, c);
      if (l + 1 < n) ga.row(l + 1) += g.row(l).segment(2 * c, c);
    }
    tp.accumulate(ia, ga);
  });
}

Var sum(Var a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  const auto ia = a.id;
  const Index r = a.rows(), c = a.cols();
  return a.tape->record(std::move(out), {ia}, [ia, r, c](Tape& tp, std::size_t self) {
    tp.accumulate(ia, Mat::Constant(r, c, tp.grad_ref(self)(0, 0)));
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var normalize_rows(Var a, bool centered_norm) {
  const Mat& x = a.value();
  const Index d = x.cols();
  Mat centered = x;
  RowVec norms(x.rows());
  for (Index r = 0; r < x.rows(); ++r) {
    centered.row(r).array() -= x.row(r).mean();
    norms(r) = centered_norm ? centered.row(r).norm() : x.row(r).norm();
    if (!(norms(r) > 0.0)) throw std::domain_error("normalize: zero-norm input");
  }
  Mat out = centered;
  for (Index r = 0; r < x.rows(); ++r) out.row(r) /= norms(r);
  const auto ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, centered_norm, d, centered = std::move(centered),
                                                norms](Tape& tp, std::size_t self) {
    const Mat& g = tp.grad_ref(self);
    const Mat& xv = tp.value(ia);
    Mat ga(g.rows(), d);
    for (Index r = 0; r < g.rows(); ++r) {
      const double n = norms(r);
      const double gc = g.row(r).dot(centered.row(r));
      const auto ref = centered_norm ? centered.row(r) : xv.row(r);
      ga.row(r) = (g.row(r).array() - g.row(r).mean()).matrix() / n - ref * (gc / (n * n * n));
    }
    tp.accumulate(ia, ga);
  });
}

RowVec softmax(const RowVec& logits) {
  const double mx = logits.maxCoeff();
  RowVec e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

Var softmax_cross_entropy(Var logits, int label) {
  require(logits.rows() == 1, "softmax_cross_entropy: expects a single row");
  if (label < 0 || label >= logits.cols()) throw std::out_of_range("softmax_cross_entropy: label out of range");
  const RowVec z = logits.value().row(0);
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  Mat out(1, 1);
  out(0, 0) = lse - z(label);
  const auto ia = logits.id;
  return logits.tape->record(std::move(out), {ia}, [ia, label](Tape& tp, std::size_t self) {
    Mat p = softmax(tp.value(ia).row(0));
    p(0, label) -= 1.0;
    tp.accumulate(ia, p * tp.grad_ref(self)(0, 0));
  });
}

Var consistency_logsumexp(Var u, Var v, Index true_row, double tau) {
  require(u.cols() == v.cols(), "consistency: embedding width mismatch");
  require(true_row >= 0 && true_row < v.rows(), "consistency: true prototype row out of range");
  const Mat s = tau * u.value() * v.value().transpose();  // L x K
  const Index L = s.rows(), K = s.cols();
  Mat weights = Mat::Zero(L, K);  // d loss / d s
  double total = 0.0;
  for (Index l = 0; l < L; ++l) {
    // log(1 + sum exp(a_i)) with a_i = s_li - s_lk, stabilised by max(0, a).
    double mx = 0.0;
    for (Index i = 0; i < K; ++i) {
      if (i != true_row) mx = std::max(mx, s(l, i) - s(l, true_row));
    }
    double denom = std::exp(-mx);
    for (Index i = 0; i < K; ++i) {
      if (i != true_row) denom += std::exp(s(l, i) - s(l, true_row) - mx);
    }
    total += mx + std::log(denom);
    double neg = 0.0;
    for (Index i = 0; i < K; ++i) {
      if (i == true_row) continue;
      weights(l, i) = std::exp(s(l, i) - s(l, true_row) - mx) / denom;
      neg += weights(l, i);
    }
    weights(l, true_row) = -neg;
  }
  Mat out(1, 1);
  out(0, 0) = total;
  const auto iu = u.id, iv = v.id;
  return u.tape->record(std::move(out), {iu, iv}, [iu, iv, tau, weights = std::move(weights)](Tape& tp, std::size_t self) {
    const Mat w = weights * (tau * tp.grad_ref(self)(0, 0));
    if (tp.requires_grad(iu)) tp.accumulate(iu, w * tp.value(iv));
    if (tp.requires_grad(iv)) tp.accumulate(iv, w.transpose() * tp.value(iu));
  });
}

}  // namespace inornet
