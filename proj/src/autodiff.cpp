#include "moco/autodiff.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "moco/fft.hpp"
#include "moco/ssim.hpp"

namespace moco::ad {

TValue TValue::vec(const Eigen::VectorXd& v) {
  TValue t;
  t.ch.emplace_back(v.size(), 1);
  t.ch[0].col(0) = v.array();
  return t;
}

TValue TValue::planes(std::vector<RealArray> planes) {
  TValue t;
  t.ch = std::move(planes);
  return t;
}

TValue TValue::zeros_like(const TValue& other) {
  TValue t;
  t.ch.reserve(other.ch.size());
  for (const auto& p : other.ch) t.ch.push_back(RealArray::Zero(p.rows(), p.cols()));
  return t;
}

std::size_t TValue::size() const {
  std::size_t n = 0;
  for (const auto& p : ch) n += static_cast<std::size_t>(p.size());
  return n;
}

Eigen::VectorXd TValue::to_vec() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
  Eigen::Index at = 0;
  for (const auto& p : ch)
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      for (Eigen::Index c = 0; c < p.cols(); ++c) v[at++] = p(r, c);
  return v;
}

void TValue::set_flat(const Eigen::VectorXd& v) {
  Eigen::Index at = 0;
  for (auto& p : ch)
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) = v[at++];
}

// ---- forward kernels -------------------------------------------------------

Eigen::VectorXd dense_fwd(const Eigen::VectorXd& w, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& x) {
  const Eigen::Index out = b.size();
  const Eigen::Index in = x.size();
  if (w.size() != out * in) throw DimensionError("dense: weight size mismatch");
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      W(w.data(), out, in);
  return W * x + b;
}

std::vector<RealArray> conv3x3_fwd(const Eigen::VectorXd& w, const Eigen::VectorXd& b,
                                   const std::vector<RealArray>& in, int out_ch) {
  const int in_ch = static_cast<int>(in.size());
  if (w.size() != static_cast<Eigen::Index>(out_ch) * in_ch * 9 ||
      b.size() != out_ch)
    throw DimensionError("conv3x3: weight size mismatch");
  const Eigen::Index H = in[0].rows(), W = in[0].cols();
  std::vector<RealArray> out(static_cast<std::size_t>(out_ch));
  for (int oc = 0; oc < out_ch; ++oc) {
    RealArray acc = RealArray::Constant(H, W, b[oc]);
    for (int ic = 0; ic < in_ch; ++ic) {
      const RealArray& x = in[static_cast<std::size_t>(ic)];
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const double coef = w[((oc * in_ch + ic) * 3 + (dy + 1)) * 3 + (dx + 1)];
          if (coef == 0.0) continue;
          const Eigen::Index r0 = std::max<Eigen::Index>(0, -dy);
          const Eigen::Index c0 = std::max<Eigen::Index>(0, -dx);
          const Eigen::Index nr = H - std::abs(dy);
          const Eigen::Index nc = W - std::abs(dx);
          acc.block(r0, c0, nr, nc) += coef * x.block(r0 + dy, c0 + dx, nr, nc);
        }
    }
    out[static_cast<std::size_t>(oc)] = std::move(acc);
  }
  return out;
}

double act_fwd(Act kind, double x) {
  switch (kind) {
    case Act::Relu: return x > 0.0 ? x : 0.0;
    case Act::Tanh: return std::tanh(x);
    case Act::Gelu: return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
  }
  return x;
}

double act_grad(Act kind, double x) {
  switch (kind) {
    case Act::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Act::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Act::Gelu: {
      const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
      const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
      return cdf + x * pdf;
    }
  }
  return 1.0;
}

RealArray act_fwd(Act kind, const RealArray& x) {
  switch (kind) {
    case Act::Relu: return x.max(0.0);
    case Act::Tanh: return x.tanh();
    case Act::Gelu: return x.unaryExpr([](double v) { return act_fwd(Act::Gelu, v); });
  }
  return x;
}

namespace {

RealArray act_grad_arr(Act kind, const RealArray& x) {
  switch (kind) {
    case Act::Relu: return (x > 0.0).cast<double>();
    case Act::Tanh: {
      const RealArray t = x.tanh();
      return 1.0 - t * t;
    }
    case Act::Gelu: return x.unaryExpr([](double v) { return act_grad(Act::Gelu, v); });
  }
  return RealArray::Ones(x.rows(), x.cols());
}

void check_pairs(const std::vector<RealArray>& in, const char* what) {
  if (in.size() % 2 != 0) throw DimensionError(std::string(what) + ": channel count must be even");
}

}  // namespace

std::vector<RealArray> fft2c_pairs_fwd(const std::vector<RealArray>& in) {
  check_pairs(in, "fft2c_pairs");
  std::vector<RealArray> out(in.size());
  for (std::size_t k = 0; k + 1 < in.size(); k += 2) {
    CxArray z(in[k].rows(), in[k].cols());
    z.real() = in[k];
    z.imag() = in[k + 1];
    const CxArray f = fft2_centered(z);
    out[k] = f.real();
    out[k + 1] = f.imag();
  }
  return out;
}

std::vector<RealArray> ifft2c_pairs_fwd(const std::vector<RealArray>& in) {
  check_pairs(in, "ifft2c_pairs");
  std::vector<RealArray> out(in.size());
  for (std::size_t k = 0; k + 1 < in.size(); k += 2) {
    CxArray z(in[k].rows(), in[k].cols());
    z.real() = in[k];
    z.imag() = in[k + 1];
    const CxArray f = ifft2_centered(z);
    out[k] = f.real();
    out[k + 1] = f.imag();
  }
  return out;
}

RealArray rss_pairs_fwd(const std::vector<RealArray>& in) {
  check_pairs(in, "rss_pairs");
  RealArray acc = RealArray::Zero(in[0].rows(), in[0].cols());
  for (const auto& p : in) acc += p * p;
  return acc.sqrt();
}

// ---- tape ------------------------------------------------------------------

int Tape::push(TValue val, bool requires_grad, std::function<void(Tape&, int)> back) {
  Node n;
  n.val = std::move(val);
  n.requires_grad = requires_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::accumulate(int node, const TValue& g) {
  Node& n = nodes_[static_cast<std::size_t>(node)];
  if (!n.requires_grad) return;
  if (g.channels() != n.val.channels() || g.rows() != n.val.rows() ||
      g.cols() != n.val.cols())
    throw DimensionError("tape: gradient shape mismatch");
  if (n.grad.ch.empty()) n.grad = TValue::zeros_like(n.val);
  for (std::size_t k = 0; k < g.ch.size(); ++k) n.grad.ch[k] += g.ch[k];
}

int Tape::input(TValue v, bool requires_grad) {
  return push(std::move(v), requires_grad, nullptr);
}

int Tape::dense(int x, int w, int b, int out_dim) {
  const Eigen::VectorXd xv = value(x).to_vec();
  const Eigen::VectorXd wv = value(w).to_vec();
  const Eigen::VectorXd bv = value(b).to_vec();
  if (bv.size() != out_dim) throw DimensionError("dense: bias size mismatch");
  TValue out = TValue::vec(dense_fwd(wv, bv, xv));
  const bool rg = requires_grad(x) || requires_grad(w) || requires_grad(b);
  return push(std::move(out), rg, [x, w, b](Tape& t, int self) {
    const Eigen::VectorXd g = t.grad(self).to_vec();
    const Eigen::VectorXd xv = t.value(x).to_vec();
    const Eigen::VectorXd wv = t.value(w).to_vec();
    const Eigen::Index out_n = g.size(), in_n = xv.size();
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        W(wv.data(), out_n, in_n);
    if (t.requires_grad(x)) {
      // The input may be plane-shaped (dense flattens it); reshape the
      // gradient back accordingly.
      TValue dx = TValue::zeros_like(t.value(x));
      dx.set_flat(W.transpose() * g);
      t.accumulate(x, dx);
    }
    if (t.requires_grad(w)) {
      Eigen::VectorXd dw(out_n * in_n);
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
          Dw(dw.data(), out_n, in_n);
      Dw = g * xv.transpose();
      t.accumulate(w, TValue::vec(dw));
    }
    if (t.requires_grad(b)) t.accumulate(b, TValue::vec(g));
  });
}

int Tape::conv3x3(int x, int w, int b, int out_ch) {
  TValue out = TValue::planes(
      conv3x3_fwd(value(w).to_vec(), value(b).to_vec(), value(x).ch, out_ch));
  const bool rg = requires_grad(x) || requires_grad(w) || requires_grad(b);
  return push(std::move(out), rg, [x, w, b, out_ch](Tape& t, int self) {
    const std::vector<RealArray>& gout = t.grad(self).ch;
    const std::vector<RealArray>& xin = t.value(x).ch;
    const Eigen::VectorXd wv = t.value(w).to_vec();
    const int in_ch = static_cast<int>(xin.size());
    const Eigen::Index H = xin[0].rows(), W = xin[0].cols();

    if (t.requires_grad(x)) {
      TValue dx = TValue::zeros_like(t.value(x));
      for (int oc = 0; oc < out_ch; ++oc)
        for (int ic = 0; ic < in_ch; ++ic)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx_ = -1; dx_ <= 1; ++dx_) {
              const double coef = wv[((oc * in_ch + ic) * 3 + (dy + 1)) * 3 + (dx_ + 1)];
              if (coef == 0.0) continue;
              const Eigen::Index r0 = std::max<Eigen::Index>(0, -dy);
              const Eigen::Index c0 = std::max<Eigen::Index>(0, -dx_);
              const Eigen::Index nr = H - std::abs(dy);
              const Eigen::Index nc = W - std::abs(dx_);
              dx.ch[static_cast<std::size_t>(ic)].block(r0 + dy, c0 + dx_, nr, nc) +=
                  coef * gout[static_cast<std::size_t>(oc)].block(r0, c0, nr, nc);
            }
      t.accumulate(x, dx);
    }
    if (t.requires_grad(w)) {
      Eigen::VectorXd dw = Eigen::VectorXd::Zero(wv.size());
      for (int oc = 0; oc < out_ch; ++oc)
        for (int ic = 0; ic < in_ch; ++ic)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx_ = -1; dx_ <= 1; ++dx_) {
              const Eigen::Index r0 = std::max<Eigen::Index>(0, -dy);
              const Eigen::Index c0 = std::max<Eigen::Index>(0, -dx_);
              const Eigen::Index nr = H - std::abs(dy);
              const Eigen::Index nc = W - std::abs(dx_);
              dw[((oc * in_ch + ic) * 3 + (dy + 1)) * 3 + (dx_ + 1)] =
                  (gout[static_cast<std::size_t>(oc)].block(r0, c0, nr, nc) *
                   xin[static_cast<std::size_t>(ic)].block(r0 + dy, c0 + dx_, nr, nc))
                      .sum();
            }
      t.accumulate(w, TValue::vec(dw));
    }
    if (t.requires_grad(b)) {
      Eigen::VectorXd db(out_ch);
      for (int oc = 0; oc < out_ch; ++oc) db[oc] = gout[static_cast<std::size_t>(oc)].sum();
      t.accumulate(b, TValue::vec(db));
    }
  });
}

int Tape::activation(int x, Act kind) {
  TValue out;
  out.ch.reserve(value(x).ch.size());
  for (const auto& p : value(x).ch) out.ch.push_back(act_fwd(kind, p));
  return push(std::move(out), requires_grad(x), [x, kind](Tape& t, int self) {
    if (!t.requires_grad(x)) return;
    TValue dx;
    dx.ch.reserve(t.value(x).ch.size());
    for (std::size_t k = 0; k < t.value(x).ch.size(); ++k)
      dx.ch.push_back(act_grad_arr(kind, t.value(x).ch[k]) * t.grad(self).ch[k]);
    t.accumulate(x, dx);
  });
}

int Tape::add(int x, int y) {
  const TValue& a = value(x);
  const TValue& b = value(y);
  if (a.channels() != b.channels() || a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("add: shape mismatch");
  TValue out;
  out.ch.reserve(a.ch.size());
  for (std::size_t k = 0; k < a.ch.size(); ++k) out.ch.push_back(a.ch[k] + b.ch[k]);
  return push(std::move(out), requires_grad(x) || requires_grad(y),
              [x, y](Tape& t, int self) {
                t.accumulate(x, t.grad(self));
                t.accumulate(y, t.grad(self));
              });
}

int Tape::scale(int x, double s) {
  TValue out;
  out.ch.reserve(value(x).ch.size());
  for (const auto& p : value(x).ch) out.ch.push_back(s * p);
  return push(std::move(out), requires_grad(x), [x, s](Tape& t, int self) {
    if (!t.requires_grad(x)) return;
    TValue dx;
    dx.ch.reserve(t.grad(self).ch.size());
    for (const auto& p : t.grad(self).ch) dx.ch.push_back(s * p);
    t.accumulate(x, dx);
  });
}

int Tape::slice(int x, Eigen::Index offset, Eigen::Index len) {
  if (!value(x).is_vector()) throw DimensionError("slice: vector node expected");
  const RealArray& v = value(x).ch[0];
  if (offset < 0 || offset + len > v.rows()) throw DimensionError("slice: out of range");
  TValue out;
  out.ch.emplace_back(v.block(offset, 0, len, 1));
  return push(std::move(out), requires_grad(x), [x, offset, len](Tape& t, int self) {
    if (!t.requires_grad(x)) return;
    TValue dx = TValue::zeros_like(t.value(x));
    dx.ch[0].block(offset, 0, len, 1) = t.grad(self).ch[0];
    t.accumulate(x, dx);
  });
}

int Tape::fft2c_pairs(int x) {
  TValue out = TValue::planes(fft2c_pairs_fwd(value(x).ch));
  return push(std::move(out), requires_grad(x), [x](Tape& t, int self) {
    if (!t.requires_grad(x)) return;
    // Orthogonal real-linear map: transpose == inverse.
    t.accumulate(x, TValue::planes(ifft2c_pairs_fwd(t.grad(self).ch)));
  });
}

int Tape::ifft2c_pairs(int x) {
  TValue out = TValue::planes(ifft2c_pairs_fwd(value(x).ch));
  return push(std::move(out), requires_grad(x), [x](Tape& t, int self) {
    if (!t.requires_grad(x)) return;
    t.accumulate(x, TValue::planes(fft2c_pairs_fwd(t.grad(self).ch)));
  });
}

int Tape::rss_pairs(int x) {
  TValue out;
  out.ch.push_back(rss_pairs_fwd(value(x).ch));
  return push(std::move(out), requires_grad(x), [x](Tape& t, int self) {
    if (!t.requires_grad(x)) return;
    const RealArray& r = t.value(self).ch[0];
    const RealArray& g = t.grad(self).ch[0];
    const RealArray safe = (r > 0.0).select(r, 1.0);
    TValue dx;
    dx.ch.reserve(t.value(x).ch.size());
    for (const auto& p : t.value(x).ch)
      dx.ch.push_back((r > 0.0).select(p / safe * g, RealArray::Zero(r.rows(), r.cols())));
    t.accumulate(x, dx);
  });
}

int Tape::neg_ssim(int x, const RealArray& target, double dynamic_range) {
  if (value(x).channels() != 1) throw DimensionError("neg_ssim: single-channel input expected");
  auto grad_a = std::make_shared<RealArray>();
  const double s = ssim_with_grad(value(x).ch[0], target, dynamic_range, *grad_a);
  TValue out;
  out.ch.emplace_back(1, 1);
  out.ch[0](0, 0) = -s;
  return push(std::move(out), requires_grad(x), [x, grad_a](Tape& t, int self) {
    if (!t.requires_grad(x)) return;
    TValue dx;
    dx.ch.push_back(-t.grad(self).ch[0](0, 0) * (*grad_a));
    t.accumulate(x, dx);
  });
}

void Tape::backward(int node) {
  Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.val.size() != 1) throw DimensionError("backward: scalar node expected");
  for (auto& nd : nodes_) nd.grad.ch.clear();
  n.grad = TValue::zeros_like(n.val);
  n.grad.ch[0](0, 0) = 1.0;
  for (int i = node; i >= 0; --i) {
    Node& cur = nodes_[static_cast<std::size_t>(i)];
    if (cur.back && cur.requires_grad && !cur.grad.ch.empty()) cur.back(*this, i);
  }
}

}  // namespace moco::ad
