#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "moco/types.hpp"

namespace moco::ad {

enum class Act { Relu, Gelu, Tanh };

// Channel-stacked real value: C planes of H x W. Flat vectors are stored as a
// single n x 1 plane.
struct TValue {
  std::vector<RealArray> ch;

  static TValue vec(const Eigen::VectorXd& v);
  static TValue planes(std::vector<RealArray> planes);
  static TValue zeros_like(const TValue& other);

  int channels() const { return static_cast<int>(ch.size()); }
  Eigen::Index rows() const { return ch.empty() ? 0 : ch[0].rows(); }
  Eigen::Index cols() const { return ch.empty() ? 0 : ch[0].cols(); }
  std::size_t size() const;
  bool is_vector() const { return ch.size() == 1 && cols() == 1; }
  Eigen::VectorXd to_vec() const;  // flatten, channel-major then row-major

  void set_flat(const Eigen::VectorXd& v);  // same layout as to_vec
};

// Shared forward kernels (used by the tape and by the plain inference path).
Eigen::VectorXd dense_fwd(const Eigen::VectorXd& w, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& x);
std::vector<RealArray> conv3x3_fwd(const Eigen::VectorXd& w, const Eigen::VectorXd& b,
                                   const std::vector<RealArray>& in, int out_ch);
double act_fwd(Act kind, double x);
double act_grad(Act kind, double x);
RealArray act_fwd(Act kind, const RealArray& x);
std::vector<RealArray> fft2c_pairs_fwd(const std::vector<RealArray>& in);
std::vector<RealArray> ifft2c_pairs_fwd(const std::vector<RealArray>& in);
RealArray rss_pairs_fwd(const std::vector<RealArray>& in);

// Eager reverse-mode tape over TValues. Nodes are created already evaluated;
// backward(node) runs the reverse sweep and accumulates gradients on every
// node reachable from a requires-grad input.
class Tape {
 public:
  int input(TValue v, bool requires_grad);

  // y = W x + b. w holds out*in entries row-major, b holds out entries.
  int dense(int x, int w, int b, int out_dim);
  // 3x3 same-size zero-padded convolution over channels; w holds
  // out_ch * in_ch * 9 entries ([oc][ic][dy][dx] row-major), b holds out_ch.
  int conv3x3(int x, int w, int b, int out_ch);
  int activation(int x, Act kind);
  int add(int x, int y);
  int scale(int x, double s);
  int slice(int x, Eigen::Index offset, Eigen::Index len);  // vector slice
  // Channels are (real, imag) pairs; applies the centered orthonormal FFT
  // per pair. As a real-linear map this is orthogonal, so backward is the
  // inverse transform.
  int fft2c_pairs(int x);
  int ifft2c_pairs(int x);
  // 2K channels of (real, imag) pairs -> 1 channel root-sum-of-squares.
  int rss_pairs(int x);
  // Scalar node: -ssim(x, target) with the analytic SSIM gradient.
  int neg_ssim(int x, const RealArray& target, double dynamic_range);

  const TValue& value(int node) const { return nodes_[static_cast<std::size_t>(node)].val; }
  const TValue& grad(int node) const { return nodes_[static_cast<std::size_t>(node)].grad; }
  bool requires_grad(int node) const {
    return nodes_[static_cast<std::size_t>(node)].requires_grad;
  }

  // Seeds d(scalar node) = 1 and runs the reverse sweep.
  void backward(int node);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    TValue val;
    TValue grad;
    bool requires_grad = false;
    std::function<void(Tape&, int)> back;  // pulls from grad of `self`
  };

  int push(TValue val, bool requires_grad, std::function<void(Tape&, int)> back);
  TValue& grad_mut(int node) { return nodes_[static_cast<std::size_t>(node)].grad; }
  void accumulate(int node, const TValue& g);

  std::vector<Node> nodes_;
};

}  // namespace moco::ad
