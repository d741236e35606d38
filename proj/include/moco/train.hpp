#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moco/network.hpp"
#include "moco/sim.hpp"

namespace moco {

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch = 6;
  int iters = 2000;
  std::uint64_t seed = 1;
  std::string loss = "neg-ssim";
};

enum class TrainMode { Hypernet, ConvAblation };

struct TrainResult {
  Eigen::VectorXd weights;          // theta_h (hypernet) or theta_g (conv)
  std::vector<double> loss_curve;   // mean batch loss per iteration
};

// Minimizes E[-ssim(recon, x_ref)] with Adam. In hypernet mode only theta_h
// is trained and gradients flow through h into g; in conv-ablation mode
// theta_g is trained directly and the motion parameters are ignored. Aborts
// with NumericalError if the loss goes non-finite.
TrainResult train(const std::vector<const SimRecord*>& corpus, const ModelConfig& config,
                  const TrainConfig& tc, TrainMode mode);

void write_loss_csv(const std::string& path, const std::vector<double>& curve);

}  // namespace moco
