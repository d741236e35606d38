// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier fixtures (trained models, optimizer stress runs) are
// shared across criteria where the setup is identical.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "moco/fft.hpp"
#include "moco/metrics.hpp"
#include "moco/model_based.hpp"
#include "moco/moco_opt.hpp"
#include "moco/nudft.hpp"
#include "moco/ssim.hpp"
#include "moco/train.hpp"

using namespace moco;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

constexpr double kSpacing = 260.0 / 64.0;

int g_checks_failed = 0;

void expect(bool ok, const char* what) {
  if (!ok) {
    ++g_checks_failed;
    std::printf("    FAILED check: %s\n", what);
  }
}

CxArray random_plane(RngStream& rng, int H, int W) {
  CxArray a(H, W);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) a(r, c) = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  return a;
}

MotionParams random_motion_all_shots(RngStream& rng, int S) {
  MotionParams m = MotionParams::zero(S, kSpacing);
  for (auto& pose : m.shots) {
    pose.dh_mm = rng.uniform(-8.0, 8.0);
    pose.dv_mm = rng.uniform(-8.0, 8.0);
    pose.theta_deg = rng.uniform(-8.0, 8.0);
  }
  return m;
}

SimRecord stress_record(std::uint64_t seed, int s_star, double noise_frac,
                        const ShotPattern& pattern) {
  RngStream prng(seed, stream::kPhantom), crng(seed, stream::kCoils),
      nrng(seed, stream::kNoise), mrng(seed, stream::kMotion);
  const CxArray x = make_phantom(prng, 64, 64, PhantomKind::RandomEllipses);
  const CoilProfiles coils = synth_coil_profiles(crng, 64, 64, 4);
  MotionParams m = MotionParams::zero(6, kSpacing);
  ShotMotion pose;
  pose.dh_mm = mrng.uniform(-10.0, 10.0);
  pose.dv_mm = mrng.uniform(-10.0, 10.0);
  pose.theta_deg = mrng.uniform(-10.0, 10.0);
  for (int s = s_star; s <= 6; ++s) m.shots[static_cast<std::size_t>(s - 1)] = pose;
  return simulate_corrupted(x, coils, pattern, m, nrng, noise_frac);
}

double ssim_vs_ref(const RealArray& img, const CxArray& x_ref) {
  const RealArray ref = x_ref.abs();
  const double peak = ref.maxCoeff();
  return ssim(img / peak, ref / peak, 1.0);
}

// Shared trained models (built by the training criteria, reused later).
HyperModel g_toy_model;  // noisy toy run of the training-sanity criterion
bool g_toy_model_ready = false;
HyperModel g_order_model;  // noiseless ordering run
ConvModel g_order_conv;

// ---------------------------------------------------------------------------

bool criterion_adjoint() {
  RngStream rng(2026, 1);
  const ShotPattern pattern = make_shot_pattern(64, 6, 3, 8);
  RngStream crng(2026, stream::kCoils);
  const CoilProfiles coils = synth_coil_profiles(crng, 64, 64, 4);
  const auto t0 = clk::now();
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const CxArray x = random_plane(rng, 64, 64);
    KSpaceData y = KSpaceData::zeros(4, 64, 64);
    for (int i = 0; i < 4; ++i)
      for (int r : pattern.acquired_rows())
        for (int c = 0; c < 64; ++c)
          y.coils[static_cast<std::size_t>(i)](r, c) = {rng.uniform(-1.0, 1.0),
                                                        rng.uniform(-1.0, 1.0)};
    const MotionParams m = random_motion_all_shots(rng, 6);
    const KSpaceData ax = forward(x, coils, pattern, m);
    const CxArray aty = adjoint(y, coils, pattern, m);
    std::complex<double> lhs = 0.0;
    for (int i = 0; i < 4; ++i)
      lhs += (ax.coils[static_cast<std::size_t>(i)].conjugate() *
              y.coils[static_cast<std::size_t>(i)])
                 .sum();
    const std::complex<double> rhs = cdot(x, aty);
    const double denom = std::sqrt(spectral_energy(ax)) * std::sqrt(spectral_energy(y));
    worst = std::max(worst, std::abs(lhs - rhs) / denom);
  }
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();
  std::printf("    worst relative error %.3e over 100 draws, %.1f s\n", worst, secs);
  return worst < 1e-10 && secs < 30.0;
}

bool criterion_degeneracy() {
  RngStream rng(2027, 2);
  const ShotPattern pattern = make_shot_pattern(64, 6, 3, 8);
  RngStream crng(2027, stream::kCoils);
  const CoilProfiles coils = synth_coil_profiles(crng, 64, 64, 4);
  const MotionParams zero = MotionParams::zero(6, kSpacing);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const CxArray x = random_plane(rng, 64, 64);
    const KSpaceData ym = forward(x, coils, pattern, zero);
    for (int i = 0; i < 4; ++i) {
      const CxArray full = fft2_centered(coils.maps[static_cast<std::size_t>(i)] * x);
      for (int r = 0; r < 64; ++r) {
        const bool acq = pattern.shot_of_row[static_cast<std::size_t>(r)] != 0;
        for (int c = 0; c < 64; ++c) {
          const auto v = ym.coils[static_cast<std::size_t>(i)](r, c);
          const auto want = acq ? full(r, c) : std::complex<double>(0.0, 0.0);
          worst = std::max(worst, std::abs(v - want));
        }
      }
    }
  }
  std::printf("    max abs deviation %.3e over 20 inputs\n", worst);
  return worst < 1e-12;
}

bool criterion_nufft() {
  RngStream rng(2028, 3);
  const int N = 64;
  const CxArray x = random_plane(rng, N, N);
  const CxArray ksp = fft2_centered(x);
  Eigen::ArrayX2d pts(N * N, 2);
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) {
      pts(r * N + c, 0) = c - N / 2;
      pts(r * N + c, 1) = r - N / 2;
    }
  const Eigen::VectorXcd vals = nudft(pts, x);
  double worst = 0.0;
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c)
      worst = std::max(worst, std::abs(vals[r * N + c] - ksp(r, c)));
  std::printf("    on-grid vs FFT max abs %.3e (no gridded accelerator built;\n"
              "    the direct NDFT is both oracle and production path)\n",
              worst);
  return worst < 1e-10;
}

bool criterion_noise() {
  const ShotPattern pattern = make_shot_pattern(64, 6, 3, 8);
  double mean_frac = 0.0;
  int n = 0;
  for (std::uint64_t seed = 300; seed < 350; ++seed) {
    RngStream prng(seed, stream::kPhantom), crng(seed, stream::kCoils),
        mrng(seed, stream::kMotion);
    const CxArray x = make_phantom(prng, 64, 64, PhantomKind::RandomEllipses);
    const CoilProfiles coils = synth_coil_profiles(crng, 64, 64, 4);
    const MotionParams m = sample_motion(mrng, 6, kSpacing);
    RngStream n0(seed, stream::kNoise), n1(seed, stream::kNoise);
    const SimRecord clean = simulate_corrupted(x, coils, pattern, m, n0, 0.0);
    const SimRecord noisy = simulate_corrupted(x, coils, pattern, m, n1, 0.05);
    for (int i = 0; i < 4; ++i) {
      const double sig = clean.y.coils[static_cast<std::size_t>(i)].abs2().sum();
      const double err = (noisy.y.coils[static_cast<std::size_t>(i)] -
                          clean.y.coils[static_cast<std::size_t>(i)])
                             .abs2()
                             .sum();
      mean_frac += err / sig;
      ++n;
    }
  }
  mean_frac /= n;
  std::printf("    measured noise energy fraction %.4f (target 0.05)\n", mean_frac);
  return mean_frac >= 0.045 && mean_frac <= 0.055;
}

bool criterion_mbgt() {
  const ShotPattern pattern = make_shot_pattern(64, 6, 3, 8);
  const auto t0 = clk::now();
  bool ok = true;
  double worst = 1.0;
  for (std::uint64_t seed = 400; seed < 420; ++seed) {
    RngStream prng(seed, stream::kPhantom), crng(seed, stream::kCoils),
        nrng(seed, stream::kNoise), mrng(seed, stream::kMotion);
    const CxArray x = make_phantom(prng, 64, 64, PhantomKind::RandomEllipses);
    const CoilProfiles coils = synth_coil_profiles(crng, 64, 64, 4);
    const MotionParams m = sample_motion(mrng, 6, kSpacing);
    const SimRecord rec = simulate_corrupted(x, coils, pattern, m, nrng, 0.0);
    const double lambda =
        1e-4 *
        adjoint(rec.y, coils, pattern, MotionParams::zero(6, kSpacing)).abs().maxCoeff();
    const ModelBasedResult res = model_based_gt(rec.y, coils, pattern, m, lambda, 60, 1e-8);
    const double s = ssim_vs_ref(res.img, rec.x_ref);
    worst = std::min(worst, s);
    if (s < 0.95) ok = false;
  }
  // Translation-only cases: exact recovery up to solver tolerance.
  double worst_trans = 1.0;
  for (std::uint64_t seed = 440; seed < 444; ++seed) {
    RngStream prng(seed, stream::kPhantom), crng(seed, stream::kCoils),
        nrng(seed, stream::kNoise), mrng(seed, stream::kMotion);
    const CxArray x = make_phantom(prng, 64, 64, PhantomKind::RandomEllipses);
    const CoilProfiles coils = synth_coil_profiles(crng, 64, 64, 4);
    MotionParams m = MotionParams::zero(6, kSpacing);
    const int s_star = 2 + static_cast<int>(mrng.uniform_index(5));
    ShotMotion pose;
    pose.dh_mm = mrng.uniform(-10.0, 10.0);
    pose.dv_mm = mrng.uniform(-10.0, 10.0);
    for (int s = s_star; s <= 6; ++s) m.shots[static_cast<std::size_t>(s - 1)] = pose;
    const SimRecord rec = simulate_corrupted(x, coils, pattern, m, nrng, 0.0);
    const ModelBasedResult res = model_based_gt(rec.y, coils, pattern, m, 1e-8, 100, 1e-12);
    worst_trans = std::min(worst_trans, ssim_vs_ref(res.img, rec.x_ref));
  }
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();
  std::printf("    worst SSIM %.4f over 20 records; translation-only worst %.6f; %.0f s\n",
              worst, worst_trans, secs);
  return ok && worst_trans >= 0.999 && secs < 300.0;
}

bool criterion_motion_estimation() {
  const ShotPattern pattern = make_shot_pattern(64, 6, 3, 8);
  const auto t0 = clk::now();
  int good = 0;
  for (int k = 0; k < 20; ++k) {
    const std::uint64_t seed = 500 + static_cast<std::uint64_t>(k);
    const int s_star = 4 + (k % 3);
    const SimRecord rec = stress_record(seed, s_star, 0.0, pattern);
    OptimizerConfig cfg;
    cfg.seed = seed;
    const auto recon = make_model_based_reconstructor(rec.y, rec.coils, pattern, kSpacing);
    const CorrectionOutcome out =
        estimate_motion(rec.y, rec.coils, pattern, kSpacing, recon, cfg);
    bool rec_ok = true;
    for (int s = 1; s <= 4; ++s) {  // low-energy shots 5-6 exempt
      const ShotMotion& t = rec.m_true.shots[static_cast<std::size_t>(s - 1)];
      const ShotMotion& e = out.best_trial.m_hat.shots[static_cast<std::size_t>(s - 1)];
      if (std::abs(t.dh_mm - e.dh_mm) > 0.5 || std::abs(t.dv_mm - e.dv_mm) > 0.5 ||
          std::abs(t.theta_deg - e.theta_deg) > 0.5)
        rec_ok = false;
    }
    good += rec_ok;
  }
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();
  std::printf("    shots 1-4 recovered within 0.5 mm / 0.5 deg on %d/20 seeds, %.0f s\n",
              good, secs);
  return good >= 16;
}

bool criterion_rejection() {
  // Threshold behavior is bit-exact on the stored fraction.
  auto rejected = [](double frac) { return frac > 0.05; };
  bool ok = rejected(0.051) && !rejected(0.049) && !rejected(0.05);
  std::printf("    threshold: 0.051 -> %d, 0.049 -> %d, 0.050 -> %d\n", rejected(0.051),
              rejected(0.049), rejected(0.05));

  if (!g_toy_model_ready) {
    std::printf("    toy model missing (training criterion must run first)\n");
    return false;
  }
  const ShotPattern pattern = make_shot_pattern(64, 6, 3, 8);
  const auto t0 = clk::now();
  int reject3 = 0, reject6 = 0;
  for (int grp = 0; grp < 2; ++grp) {
    const int s_star = grp == 0 ? 3 : 6;
    for (int k = 0; k < 20; ++k) {
      const std::uint64_t seed =
          600 + static_cast<std::uint64_t>(grp) * 50 + static_cast<std::uint64_t>(k);
      const SimRecord rec = stress_record(seed, s_star, 0.05, pattern);
      OptimizerConfig cfg;
      cfg.seed = seed;
      cfg.iters = 120;
      cfg.conv_window = 15;
      const auto recon = make_hypernet_reconstructor(rec.y, rec.coils, pattern, g_toy_model);
      const CorrectionOutcome out =
          estimate_motion(rec.y, rec.coils, pattern, kSpacing, recon, cfg);
      if (out.rejected) (s_star == 3 ? reject3 : reject6)++;
    }
  }
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();
  std::printf("    rejections over 40 noisy records: s*=3 -> %d/20, s*=6 -> %d/20, %.0f s\n",
              reject3, reject6, secs);
  return ok && reject3 > reject6;
}

bool criterion_gradients() {
  using namespace moco::ad;
  RngStream rng(777, 7);
  bool ok = true;

  auto fd_check = [&](const std::function<double(const Eigen::VectorXd&)>& f,
                      const Eigen::VectorXd& x0, const Eigen::VectorXd& analytic,
                      const char* what, int probes = 20) {
    const double scale = std::max(analytic.cwiseAbs().maxCoeff(), 1e-9);
    double worst = 0.0;
    for (int p = 0; p < probes; ++p) {
      const Eigen::Index i =
          static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(x0.size())));
      Eigen::VectorXd hi = x0, lo = x0;
      hi[i] += 1e-6;
      lo[i] -= 1e-6;
      const double fd = (f(hi) - f(lo)) / 2e-6;
      worst = std::max(worst, std::abs(fd - analytic[i]) / std::max(std::abs(fd), scale));
    }
    std::printf("    %-28s worst rel err %.3e\n", what, worst);
    if (worst >= 1e-4) ok = false;
  };

  const int H = 12;
  std::vector<RealArray> planes;
  for (int k = 0; k < 4; ++k) {
    RealArray p(H, H);
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < H; ++c) p(r, c) = rng.uniform(0.4, 1.6);
    planes.push_back(std::move(p));
  }
  RealArray target(H, H);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < H; ++c) target(r, c) = rng.uniform(0.0, 1.0);
  const TValue in = TValue::planes(planes);
  const Eigen::VectorXd x0 = in.to_vec();
  Eigen::VectorXd w0(2 * 4 * 9);
  for (Eigen::Index i = 0; i < w0.size(); ++i) w0[i] = rng.uniform(-0.4, 0.4);
  Eigen::VectorXd b0(2);
  for (Eigen::Index i = 0; i < b0.size(); ++i) b0[i] = rng.uniform(-0.2, 0.2);

  auto graph = [&](const Eigen::VectorXd& xf, const Eigen::VectorXd& wf,
                   const Eigen::VectorXd& bf, Tape& t, int& x_node, int& w_node,
                   int& b_node) {
    TValue v = in;
    v.set_flat(xf);
    x_node = t.input(v, true);
    w_node = t.input(TValue::vec(wf), true);
    b_node = t.input(TValue::vec(bf), true);
    int z = t.fft2c_pairs(x_node);
    z = t.conv3x3(z, w_node, b_node, 2);
    z = t.activation(z, Act::Gelu);
    z = t.ifft2c_pairs(z);
    z = t.rss_pairs(z);
    z = t.scale(z, 0.7);
    return t.neg_ssim(z, target, 1.0);
  };
  Tape t;
  int xn, wn, bn;
  const int loss = graph(x0, w0, b0, t, xn, wn, bn);
  t.backward(loss);
  auto eval = [&](const Eigen::VectorXd& xf, const Eigen::VectorXd& wf,
                  const Eigen::VectorXd& bf) {
    Tape tt;
    int a, b, c;
    return tt.value(graph(xf, wf, bf, tt, a, b, c)).ch[0](0, 0);
  };
  fd_check([&](const Eigen::VectorXd& v) { return eval(v, w0, b0); }, x0,
           t.grad(xn).to_vec(), "fft/conv/gelu/rss/ssim d/dx");
  fd_check([&](const Eigen::VectorXd& v) { return eval(x0, v, b0); }, w0,
           t.grad(wn).to_vec(), "conv weights d/dw");
  fd_check([&](const Eigen::VectorXd& v) { return eval(x0, w0, v); }, b0,
           t.grad(bn).to_vec(), "conv bias d/db");

  // End-to-end f gradient with respect to theta_h.
  GLayout g;
  g.coils = 2;
  g.features = 4;
  HLayout h;
  h.num_shots = 6;
  h.hidden = 8;
  h.layers = 2;
  h.out_dim = g.param_count();
  RngStream wrng(778, stream::kWeightInit);
  const Eigen::VectorXd theta0 = init_h_weights(wrng, h, 0.05);
  Eigen::VectorXd m_norm(18);
  for (Eigen::Index i = 0; i < 18; ++i) m_norm[i] = rng.uniform(-1.0, 1.0);
  std::vector<RealArray> chan;
  for (int k = 0; k < 4; ++k) {
    RealArray p(H, H);
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < H; ++c) p(r, c) = rng.uniform(-0.7, 0.7);
    chan.push_back(std::move(p));
  }
  auto f_loss = [&](const Eigen::VectorXd& theta, Tape& tt, int& th_node) {
    th_node = tt.input(TValue::vec(theta), true);
    const int mn = tt.input(TValue::vec(m_norm), false);
    const int tg = build_h_tape(tt, h, th_node, mn);
    const int xn2 = tt.input(TValue::planes(chan), false);
    const int ksp = build_g_tape(tt, g, tg, xn2);
    const int img = tt.rss_pairs(tt.ifft2c_pairs(ksp));
    return tt.neg_ssim(img, target, 1.0);
  };
  Tape tf;
  int th_node;
  const int fl = f_loss(theta0, tf, th_node);
  tf.backward(fl);
  fd_check(
      [&](const Eigen::VectorXd& v) {
        Tape tt;
        int dummy;
        return tt.value(f_loss(v, tt, dummy)).ch[0](0, 0);
      },
      theta0, tf.grad(th_node).to_vec(), "end-to-end f d/dtheta_h");

  // dc_grad_m stencil consistency: forward vs central within O(step).
  const ShotPattern pattern = make_shot_pattern(32, 6, 3, 8);
  RngStream prng(779, stream::kPhantom), crng(779, stream::kCoils), mrng(779, stream::kMotion);
  const CxArray x = make_phantom(prng, 32, 32, PhantomKind::RandomEllipses, 6);
  const CoilProfiles coils = synth_coil_profiles(crng, 32, 32, 3);
  const MotionParams m_data = sample_motion(mrng, 6, 260.0 / 32.0);
  const KSpaceData y = forward(x, coils, pattern, m_data);
  const MotionParams m_eval = sample_motion(mrng, 6, 260.0 / 32.0);
  const Eigen::VectorXd gc1 = dc_grad_m(y, x, coils, pattern, m_eval, 0.01, 0.01);
  const Eigen::VectorXd gf1 = dc_grad_m_forward(y, x, coils, pattern, m_eval, 0.01, 0.01);
  const Eigen::VectorXd gc2 = dc_grad_m(y, x, coils, pattern, m_eval, 0.0025, 0.0025);
  const Eigen::VectorXd gf2 = dc_grad_m_forward(y, x, coils, pattern, m_eval, 0.0025, 0.0025);
  const double d1 = (gf1 - gc1).norm() / gc1.norm();
  const double d2 = (gf2 - gc2).norm() / gc2.norm();
  std::printf("    dc_grad stencil gap: %.3e at step 0.01, %.3e at step 0.0025\n", d1, d2);
  if (!(d1 < 0.05 && d2 < 0.35 * d1)) ok = false;

  return ok;
}

bool criterion_training() {
  CorpusConfig cc;
  cc.n_train = 20;
  cc.n_val = 0;
  cc.n_test = 0;
  cc.seed = 11;
  const Corpus corpus = generate_corpus(cc, 1);
  ModelConfig mc;
  mc.g.coils = cc.C;
  mc.h.num_shots = cc.S;
  mc.h.out_dim = mc.g.param_count();
  TrainConfig tc;
  tc.iters = 500;
  tc.seed = 5;
  const auto t0 = clk::now();
  const TrainResult res = train(corpus_split(corpus, "train"), mc, tc, TrainMode::Hypernet);
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();

  double first10 = 0.0, last10 = 0.0, lo = 1e9, hi = -1e9;
  for (std::size_t i = 0; i < 10; ++i) {
    first10 += res.loss_curve[i] / 10.0;
    last10 += res.loss_curve[res.loss_curve.size() - 10 + i] / 10.0;
  }
  for (double v : res.loss_curve) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double reduction = (first10 - last10) / std::abs(first10);
  std::printf("    first-10 mean %.4f, last-10 mean %.4f, reduction %.1f%%, "
              "loss range [%.3f, %.3f], %.0f s\n",
              first10, last10, 100.0 * reduction, lo, hi, secs);

  g_toy_model.config = mc;
  g_toy_model.theta_h = res.weights;
  g_toy_model_ready = true;
  return reduction >= 0.30 && lo >= -1.0 && hi <= 1.0 && secs < 600.0;
}

bool criterion_ordering() {
  CorpusConfig cc;
  cc.n_train = 200;
  cc.n_val = 0;
  cc.n_test = 12;
  cc.seed = 31;
  cc.noise_frac = 0.0;
  const Corpus corpus = generate_corpus(cc, 1);
  ModelConfig mc;
  mc.g.coils = cc.C;
  mc.h.num_shots = cc.S;
  mc.h.out_dim = mc.g.param_count();
  TrainConfig tc;
  tc.iters = 2000;
  tc.seed = 5;
  const auto t0 = clk::now();
  const TrainResult hyper = train(corpus_split(corpus, "train"), mc, tc, TrainMode::Hypernet);
  const TrainResult convw =
      train(corpus_split(corpus, "train"), mc, tc, TrainMode::ConvAblation);
  g_order_model.config = mc;
  g_order_model.theta_h = hyper.weights;
  g_order_conv.config = mc;
  g_order_conv.theta_g = convw.weights;

  const auto test = corpus_split(corpus, "test");
  double s_mb = 0, s_hngt = 0, s_hn = 0, s_hnr = 0, s_conv = 0, s_arc = 0, s_perm = 0;
  int n_acc = 0, n_rej = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const SimRecord& rec = *test[i];
    const double spacing = rec.m_true.pixel_spacing_mm;
    const RealArray ref = rec.x_ref.abs();
    const double peak = ref.maxCoeff();
    auto S = [&](const RealArray& img) { return ssim(img / peak, ref / peak, 1.0); };

    const double lambda =
        1e-4 * adjoint(rec.y, rec.coils, rec.pattern, MotionParams::zero(6, spacing))
                   .abs()
                   .maxCoeff();
    s_mb += S(model_based_gt(rec.y, rec.coils, rec.pattern, rec.m_true, lambda, 60).img);
    s_hngt += S(hn_gt_eval(rec.y, rec.pattern, rec.m_true, g_order_model));
    const SimRecord& other = *test[(i + 5) % test.size()];
    s_perm += S(hn_gt_eval(rec.y, rec.pattern, other.m_true, g_order_model));
    s_conv += S(g_order_conv.forward(rec.y, rec.pattern));
    s_arc += S(rss_recon(arc_interp(rec.y, rec.pattern)));

    OptimizerConfig cfg;
    cfg.seed = 900 + static_cast<std::uint64_t>(i);
    cfg.iters = 120;
    cfg.conv_window = 15;
    const auto recon =
        make_hypernet_reconstructor(rec.y, rec.coils, rec.pattern, g_order_model);
    const CorrectionOutcome out =
        estimate_motion(rec.y, rec.coils, rec.pattern, spacing, recon, cfg);
    const double s = S(out.x_hat);
    s_hn += s;
    if (out.rejected) {
      ++n_rej;
    } else {
      s_hnr += s;
      ++n_acc;
    }
  }
  const double n = static_cast<double>(test.size());
  s_mb /= n;
  s_hngt /= n;
  s_hn /= n;
  s_conv /= n;
  s_arc /= n;
  s_perm /= n;
  const double hnr = n_acc > 0 ? s_hnr / n_acc : s_hn / n;
  const double aware = (s_mb + s_hngt + s_hn) / 3.0;
  const double naive = (s_conv + s_arc) / 2.0;
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();
  std::printf(
      "    mean SSIM: Model-Based-GT %.4f | HN-GT %.4f | HN %.4f | HN-R %.4f (%d rej)\n"
      "               Conv %.4f | ARC %.4f   [HN-GT with permuted m: %.4f]\n"
      "    motion-aware mean %.4f vs motion-naive mean %.4f, %.0f s\n",
      s_mb, s_hngt, s_hn, hnr, n_rej, s_conv, s_arc, s_perm, aware, naive, secs);
  expect(s_hngt > s_perm, "hypernetwork conditioning: true m beats permuted m");
  return aware > naive && hnr >= s_hn - 1e-12 && s_hngt > s_perm;
}

bool criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "moco_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string bin = MOCO_CLI_PATH;
  auto run = [&](const std::string& args) {
    const std::string cmd = bin + " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  };
  const std::string sim_args =
      " --height 32 --width 32 --coils 2 --acs 8 --margin 6 --train 3 --val 0 --test 2 --seed 9";
  bool ok = true;
  ok &= run("simulate --out " + (root / "c1").string() + sim_args + " --threads 1") == 0;
  ok &= run("simulate --out " + (root / "c2").string() + sim_args + " --threads 4") == 0;
  for (const char* rel : {"manifest.json", "rec_00004/y.mtns", "rec_00004/motion.json"})
    if (slurp(root / "c1" / rel) != slurp(root / "c2" / rel)) {
      std::printf("    simulate mismatch on %s\n", rel);
      ok = false;
    }

  const std::string train_args = " --corpus " + (root / "c1").string() +
                                 " --iters 10 --seed 3 --features 4 --hidden 8 --layers 2";
  ok &= run("train --out " + (root / "m1").string() + train_args) == 0;
  ok &= run("train --out " + (root / "m2").string() + train_args) == 0;
  if (slurp(root / "m1" / "weights.mtns") != slurp(root / "m2" / "weights.mtns")) {
    std::printf("    train rerun mismatch\n");
    ok = false;
  }

  const std::string cor_args = " --corpus " + (root / "c1").string() +
                               " --backend model-based --trials 2 --iters 6 --seed 2";
  ok &= run("correct --out " + (root / "r1").string() + cor_args + " --threads 1") == 0;
  ok &= run("correct --out " + (root / "r2").string() + cor_args + " --threads 4") == 0;
  for (const char* rel : {"rec_00000/xhat.mtns", "rec_00001/outcome.json"})
    if (slurp(root / "r1" / rel) != slurp(root / "r2" / rel)) {
      std::printf("    correct mismatch on %s\n", rel);
      ok = false;
    }
  std::printf("    simulate/train/correct reruns byte-identical across thread counts\n");
  fs::remove_all(root);
  return ok;
}

struct Criterion {
  const char* name;
  std::function<bool()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  const std::vector<Criterion> criteria = {
      {"adjoint correctness (forward/adjoint dot test < 1e-10)", criterion_adjoint},
      {"zero-motion degeneracy (A(0) equals the static operator)", criterion_degeneracy},
      {"NUFFT oracle (on-grid points match the FFT)", criterion_nufft},
      {"noise calibration (5% per-coil spectral energy)", criterion_noise},
      {"model-based-GT recovery (SSIM >= 0.95; translations exact)", criterion_mbgt},
      {"gradient suite (autodiff and dc_grad_m stencils)", criterion_gradients},
      {"training sanity (toy run cuts loss >= 30%)", criterion_training},
      {"motion estimation (shots 1-4 within 0.5 mm / 0.5 deg)", criterion_motion_estimation},
      {"rejection rule (exact threshold; s*=3 rejected more than s*=6)", criterion_rejection},
      {"method ordering (motion-aware above motion-naive; HN-R >= HN)", criterion_ordering},
      {"determinism (byte-identical reruns, any thread count)", criterion_determinism},
  };

  int failed = 0;
  const auto t0 = clk::now();
  for (const auto& c : criteria) {
    if (!filter.empty() && std::string(c.name).find(filter) == std::string::npos) continue;
    std::printf("RUN  %s\n", c.name);
    std::fflush(stdout);
    bool ok = false;
    try {
      g_checks_failed = 0;
      ok = c.run() && g_checks_failed == 0;
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
      ok = false;
    }
    std::printf("%s %s\n", ok ? "PASS" : "FAIL", c.name);
    std::fflush(stdout);
    failed += !ok;
  }
  const double secs = std::chrono::duration<double>(clk::now() - t0).count();
  std::printf("%d criteria failed, total %.0f s\n", failed, secs);
  return failed == 0 ? 0 : 1;
}
