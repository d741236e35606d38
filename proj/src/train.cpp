#include "moco/train.hpp"

#include <cmath>
#include <fstream>

namespace moco {

namespace {

struct TrainSample {
  std::vector<RealArray> channels;  // normalized ARC k-space channels
  RealArray target;                 // |x_ref| / max|x_ref|
  double out_scale = 1.0;           // maps network output to target units
  Eigen::VectorXd m_norm;
};

TrainSample prepare_sample(const SimRecord& rec, const ModelConfig& cfg) {
  TrainSample s;
  HyperModel hm;
  hm.config = cfg;
  const HyperModel::Prepared prep = hm.prepare(rec.y, rec.pattern);
  s.channels = prep.channels;
  const RealArray ref = rec.x_ref.abs();
  const double ref_max = ref.maxCoeff();
  s.target = ref / ref_max;
  // Network output is in normalized k-space units; rss of the inverse FFT
  // scales linearly, so one factor maps it onto the normalized target.
  s.out_scale = prep.norm / ref_max;
  s.m_norm = normalize_motion(rec.m_true, cfg.max_trans_mm, cfg.max_rot_deg);
  return s;
}

}  // namespace

TrainResult train(const std::vector<const SimRecord*>& corpus, const ModelConfig& config,
                  const TrainConfig& tc, TrainMode mode) {
  if (corpus.empty()) throw ParameterError("train: empty corpus");
  if (tc.lr <= 0.0) throw ParameterError("train: step size must be > 0");
  if (tc.batch < 1) throw ParameterError("train: batch must be >= 1");
  if (tc.loss != "neg-ssim") throw ParameterError("train: unknown loss id " + tc.loss);

  std::vector<TrainSample> samples;
  samples.reserve(corpus.size());
  for (const SimRecord* rec : corpus) samples.push_back(prepare_sample(*rec, config));

  RngStream init_rng(tc.seed, stream::kWeightInit);
  RngStream batch_rng(tc.seed, stream::kBatch);

  const bool hyper = mode == TrainMode::Hypernet;
  Eigen::VectorXd theta = hyper ? init_h_weights(init_rng, config.h)
                                : init_g_weights(init_rng, config.g);

  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());

  TrainResult result;
  result.loss_curve.reserve(static_cast<std::size_t>(tc.iters));

  for (int it = 0; it < tc.iters; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
    double loss_sum = 0.0;
    for (int bi = 0; bi < tc.batch; ++bi) {
      const TrainSample& s =
          samples[static_cast<std::size_t>(batch_rng.uniform_index(samples.size()))];

      ad::Tape tape;
      const int theta_node = tape.input(ad::TValue::vec(theta), true);
      const int input_node = tape.input(ad::TValue::planes(s.channels), false);
      int g_weights_node;
      if (hyper) {
        const int m_node = tape.input(ad::TValue::vec(s.m_norm), false);
        g_weights_node = build_h_tape(tape, config.h, theta_node, m_node);
      } else {
        g_weights_node = theta_node;
      }
      const int out_ksp = build_g_tape(tape, config.g, g_weights_node, input_node);
      const int img = tape.rss_pairs(tape.ifft2c_pairs(out_ksp));
      const int scaled = tape.scale(img, s.out_scale);
      const int loss = tape.neg_ssim(scaled, s.target, 1.0);

      tape.backward(loss);
      grad += tape.grad(theta_node).to_vec();
      loss_sum += tape.value(loss).ch[0](0, 0);
    }
    grad /= static_cast<double>(tc.batch);
    const double mean_loss = loss_sum / static_cast<double>(tc.batch);
    if (!std::isfinite(mean_loss))
      throw NumericalError("train: non-finite loss at iteration " + std::to_string(it));
    result.loss_curve.push_back(mean_loss);

    // Adam with bias correction.
    const double t = static_cast<double>(it + 1);
    m1 = tc.beta1 * m1 + (1.0 - tc.beta1) * grad;
    m2 = tc.beta2 * m2.array().matrix() + (1.0 - tc.beta2) * grad.array().square().matrix();
    const double bc1 = 1.0 - std::pow(tc.beta1, t);
    const double bc2 = 1.0 - std::pow(tc.beta2, t);
    theta.array() -=
        tc.lr * (m1.array() / bc1) / ((m2.array() / bc2).sqrt() + tc.eps);
  }

  result.weights = std::move(theta);
  return result;
}

void write_loss_csv(const std::string& path, const std::vector<double>& curve) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << "iteration,loss\n";
  f.precision(12);
  for (std::size_t i = 0; i < curve.size(); ++i) f << i << "," << curve[i] << "\n";
}

}  // namespace moco
