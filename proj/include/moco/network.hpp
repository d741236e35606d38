#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "moco/autodiff.hpp"
#include "moco/grappa.hpp"
#include "moco/motion.hpp"
#include "moco/recon.hpp"
#include "moco/rng.hpp"
#include "moco/shot_pattern.hpp"

namespace moco {

// Reconstruction subnetwork g: residual correction of per-coil k-space,
// expressed on 2C real channels (real/imag per coil). Two frequency-space
// convolutions, an inverse FFT transition, two image-space convolutions, and
// an FFT transition back, with a skip connection from the input k-space:
//   out = in + FFT( conv(act(conv( IFFT( act(conv(act(conv(in)))) ))))) )
// A zero parameter vector therefore makes g the identity in k-space.
struct GLayout {
  int coils = 4;
  int features = 8;  // must be even (channels pair into complex planes)
  ad::Act act = ad::Act::Gelu;
  // Block order: frequency-space convolutions first, then an inverse FFT
  // transition into two image-space convolutions and back. Two of each
  // either way, with the skip connection in k-space.
  bool image_first = false;

  struct ConvSpec {
    int in_ch, out_ch;
  };
  std::vector<ConvSpec> convs() const;
  Eigen::Index param_count() const;
  // Offset of conv layer l's weights and biases in the flat vector.
  std::pair<Eigen::Index, Eigen::Index> layer_span(int l) const;
};

// Hypernetwork h: MLP on the 3S normalized motion scalars, `layers` hidden
// dense layers of `hidden` units, then a dense projection to |theta_g|. The
// projection layer is initialized near zero so the initial g is the identity.
struct HLayout {
  int num_shots = 6;
  int hidden = 64;
  int layers = 3;
  Eigen::Index out_dim = 0;  // |theta_g|
  ad::Act act = ad::Act::Gelu;

  std::vector<std::pair<int, int>> dense_dims() const;  // (in, out) per dense
  Eigen::Index param_count() const;
  std::pair<Eigen::Index, Eigen::Index> layer_span(int l) const;  // (w off, b off)
};

struct ModelConfig {
  GLayout g;
  HLayout h;
  double max_trans_mm = 10.0;
  double max_rot_deg = 10.0;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Fan-in scaled uniform init; the final layer is additionally scaled by
// `last_scale`. The hypernetwork default keeps |theta_g| small enough that
// the residual g stays within 1e-6 of the identity for any motion input
// (the g bias terms enter the output first-order, so this scale must sit
// well below the identity tolerance).
Eigen::VectorXd init_g_weights(RngStream& rng, const GLayout& layout,
                               double last_scale = 1e-3);
Eigen::VectorXd init_h_weights(RngStream& rng, const HLayout& layout,
                               double last_scale = 1e-8);

// Motion scalars normalized to [-1, 1] by the sampling ranges.
Eigen::VectorXd normalize_motion(const MotionParams& m, double max_trans_mm,
                                 double max_rot_deg);

// Plain (tape-free) forward paths.
Eigen::VectorXd h_forward(const HLayout& layout, const Eigen::VectorXd& theta_h,
                          const Eigen::VectorXd& m_norm);
std::vector<RealArray> g_forward_channels(const GLayout& layout,
                                          const Eigen::VectorXd& theta_g,
                                          const std::vector<RealArray>& in_channels);

// Channel packing: k-space per coil -> (re, im) channel stack and back.
std::vector<RealArray> pack_kspace_channels(const KSpaceData& y);
KSpaceData unpack_kspace_channels(const std::vector<RealArray>& ch);

// Tape builders (weights arrive as graph nodes so gradients can flow into the
// hypernetwork). Return the output node.
int build_g_tape(ad::Tape& tape, const GLayout& layout, int theta_g_node, int input_node);
int build_h_tape(ad::Tape& tape, const HLayout& layout, int theta_h_node, int m_node);

// Full reconstruction network f(y, m) = g(arc(y); h(m)) evaluated without a
// tape. The ARC interpolation of y is the network input; per the k-space
// normalization convention, channels are scaled by 1 / max rss(arc(y)) on the
// way in and back on the way out.
struct HyperModel {
  ModelConfig config;
  Eigen::VectorXd theta_h;

  // Precomputed per-measurement input (ARC recon + normalization).
  struct Prepared {
    std::vector<RealArray> channels;  // normalized input channels
    double norm = 1.0;                // max rss(arc(y))
  };
  Prepared prepare(const KSpaceData& y, const ShotPattern& pattern) const;

  KSpaceData predict_kspace(const Prepared& prep, const MotionParams& m) const;
  RealArray f_forward(const KSpaceData& y, const ShotPattern& pattern,
                      const MotionParams& m) const;
};

// Conv ablation: g with directly trained weights, motion ignored.
struct ConvModel {
  ModelConfig config;
  Eigen::VectorXd theta_g;

  KSpaceData predict_kspace(const HyperModel::Prepared& prep) const;
  RealArray forward(const KSpaceData& y, const ShotPattern& pattern) const;
};

// Weight files: theta as a rank-1 real MTNS tensor plus layout.json.
void save_hyper_model(const std::string& dir, const HyperModel& model);
HyperModel load_hyper_model(const std::string& dir);
void save_conv_model(const std::string& dir, const ConvModel& model);
ConvModel load_conv_model(const std::string& dir);

}  // namespace moco
