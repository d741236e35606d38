#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>
#include <numbers>

#include "moco/fft.hpp"
#include "moco/forward_model.hpp"
#include "moco/phantom.hpp"
#include "moco/sim.hpp"

using namespace moco;

namespace {

constexpr double kSpacing = 260.0 / 64.0;

CxArray random_plane(RngStream& rng, int H, int W) {
  CxArray a(H, W);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) a(r, c) = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  return a;
}

KSpaceData random_masked_kspace(RngStream& rng, const ShotPattern& p, int C, int W) {
  KSpaceData y = KSpaceData::zeros(C, p.H, W);
  for (int i = 0; i < C; ++i)
    for (int r : p.acquired_rows())
      for (int c = 0; c < W; ++c)
        y.coils[static_cast<std::size_t>(i)](r, c) = {rng.uniform(-1.0, 1.0),
                                                      rng.uniform(-1.0, 1.0)};
  return y;
}

MotionParams random_motion(RngStream& rng, int S) {
  MotionParams m = MotionParams::zero(S, kSpacing);
  for (auto& pose : m.shots) {
    pose.dh_mm = rng.uniform(-8.0, 8.0);
    pose.dv_mm = rng.uniform(-8.0, 8.0);
    pose.theta_deg = rng.uniform(-8.0, 8.0);
  }
  return m;
}

std::complex<double> kspace_dot(const KSpaceData& a, const KSpaceData& b) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < a.coils.size(); ++i)
    acc += (a.coils[i].conjugate() * b.coils[i]).sum();
  return acc;
}

// Brute-force oracle: spectrum of x translated by (dh, dv) mm via the Fourier
// shift theorem, evaluated as a direct double-loop DFT.
CxArray shifted_spectrum_oracle(const CxArray& x, double dh_mm, double dv_mm) {
  const int H = static_cast<int>(x.rows()), W = static_cast<int>(x.cols());
  const double dx = dh_mm / kSpacing, dy = dv_mm / kSpacing;
  CxArray out(H, W);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      const double ky = r - H / 2, kx = c - W / 2;
      std::complex<double> acc = 0.0;
      for (int u = 0; u < H; ++u)
        for (int v = 0; v < W; ++v)
          acc += x(u, v) * std::polar(1.0, -two_pi * (ky * (u - H / 2) / H +
                                                      kx * (v - W / 2) / W));
      out(r, c) = acc / std::sqrt(static_cast<double>(H * W)) *
                  std::polar(1.0, -two_pi * (kx * dx / W + ky * dy / H));
    }
  return out;
}

}  // namespace

TEST_CASE("make_shot_pattern: DC row goes to shot 2, rows partition") {
  const ShotPattern p = make_shot_pattern(64, 6, 3, 8);
  CHECK(p.shot_of_row[32] == 2);
  int n = 0;
  for (int s = 1; s <= 6; ++s) {
    const auto rows = p.rows_of_shot(s);
    CHECK(!rows.empty());
    n += static_cast<int>(rows.size());
  }
  CHECK(n == p.num_acquired());  // shots partition the acquired rows
}

TEST_CASE("make_shot_pattern: configuration and parameter errors") {
  CHECK_THROWS_AS((void)make_shot_pattern(8, 9, 8, 0), ConfigError);
  CHECK_THROWS_AS((void)make_shot_pattern(64, 1, 3, 8), ParameterError);
  CHECK_THROWS_AS((void)make_shot_pattern(64, 6, 0, 8), ParameterError);
}

TEST_CASE("make_shot_pattern: shot energy ordering on Shepp-Logan") {
  const ShotPattern p = make_shot_pattern(64, 6, 3, 8);
  const CxArray x = shepp_logan(64, 64).cast<std::complex<double>>();
  const CxArray ksp = fft2_centered(x);
  std::vector<double> e(7, 0.0);
  for (int r = 0; r < 64; ++r)
    if (p.shot_of_row[static_cast<std::size_t>(r)] != 0)
      e[static_cast<std::size_t>(p.shot_of_row[static_cast<std::size_t>(r)])] +=
          ksp.row(r).abs2().sum();
  CHECK(e[5] + e[6] < 0.05 * e[2]);  // periphery shots carry almost no energy
  CHECK(e[2] > e[1]);
  CHECK(e[2] > e[3]);
  CHECK(e[2] > e[4]);
}

TEST_CASE("make_shot_pattern: json round trip") {
  const ShotPattern p = make_shot_pattern(48, 4, 2, 6);
  const ShotPattern q = ShotPattern::from_json(p.to_json());
  CHECK(q.H == p.H);
  CHECK(q.shot_of_row == p.shot_of_row);
}

TEST_CASE("apply_rigid_motion: zero pose is a bit-exact identity") {
  RngStream rng(3, 1);
  const CxArray x = random_plane(rng, 32, 32);
  const CxArray y = apply_rigid_motion(x, ShotMotion{}, kSpacing);
  CHECK((x == y).all());
}

TEST_CASE("apply_rigid_motion: integer-pixel shift moves an impulse") {
  CxArray x = CxArray::Zero(16, 16);
  x(8, 8) = 1.0;
  ShotMotion pose;
  pose.dh_mm = 2.0 * kSpacing;  // exactly two pixels right
  const CxArray y = apply_rigid_motion(x, pose, kSpacing);
  CHECK(std::abs(y(8, 10) - 1.0) < 1e-12);
  CxArray rest = y;
  rest(8, 10) = 0.0;
  CHECK(rest.abs().maxCoeff() < 1e-12);
}

TEST_CASE("apply_rigid_motion: 90 degree rotation matches exact array rotation") {
  RngStream rng(11, 2);
  // Asymmetric binary phantom.
  CxArray x = CxArray::Zero(12, 12);
  for (int r = 2; r < 10; ++r)
    for (int c = 2; c < 10; ++c)
      if (rng.uniform() < 0.4) x(r, c) = 1.0;
  ShotMotion pose;
  pose.theta_deg = 90.0;
  const CxArray y = apply_rigid_motion(x, pose, kSpacing);
  // +90 deg in (col, row) coordinates: out(r, c) samples in(N-1-c, r).
  CxArray expect = CxArray::Zero(12, 12);
  for (int r = 0; r < 12; ++r)
    for (int c = 0; c < 12; ++c) expect(r, c) = x(11 - c, r);
  CHECK((y - expect).abs().maxCoeff() < 1e-12);
}

TEST_CASE("forward: zero motion reduces to the static operator") {
  RngStream rng(21, 3);
  const ShotPattern p = make_shot_pattern(32, 6, 3, 6);
  const CxArray x = random_plane(rng, 32, 32);
  RngStream coil_rng(21, 4);
  const CoilProfiles coils = synth_coil_profiles(coil_rng, 32, 32, 3);
  const KSpaceData ym = forward(x, coils, p, MotionParams::zero(6, kSpacing));
  // Static operator: mask each coil FFT directly.
  for (int i = 0; i < 3; ++i) {
    const CxArray full = fft2_centered(coils.maps[static_cast<std::size_t>(i)] * x);
    for (int r = 0; r < 32; ++r) {
      const bool acq = p.shot_of_row[static_cast<std::size_t>(r)] != 0;
      for (int c = 0; c < 32; ++c) {
        const auto v = ym.coils[static_cast<std::size_t>(i)](r, c);
        if (acq) {
          CHECK(std::abs(v - full(r, c)) < 1e-12);
        } else {
          CHECK(v == std::complex<double>(0.0, 0.0));
        }
      }
    }
  }
}

TEST_CASE("forward: zero image gives zero measurements, shape checks throw") {
  const ShotPattern p = make_shot_pattern(32, 6, 3, 6);
  RngStream rng(5, 5);
  const CoilProfiles coils = synth_coil_profiles(rng, 32, 32, 2);
  const KSpaceData y = forward(CxArray::Zero(32, 32), coils, p, MotionParams::zero(6, kSpacing));
  CHECK(spectral_energy(y) == 0.0);
  CHECK_THROWS_AS((void)forward(CxArray::Zero(16, 16), coils, p, MotionParams::zero(6, kSpacing)),
                  DimensionError);
  CHECK_THROWS_AS((void)forward(CxArray::Zero(32, 32), coils, p, MotionParams::zero(4, kSpacing)),
                  DimensionError);
}

TEST_CASE("forward: pure translation matches the shift-theorem NDFT oracle") {
  RngStream rng(33, 6);
  const int N = 12;
  const CxArray x = random_plane(rng, N, N);
  // Single flat coil, single shot owning every row.
  CoilProfiles coils;
  coils.maps.push_back(CxArray::Constant(N, N, 1.0));
  ShotPattern p;
  p.H = N;
  p.S = 2;
  p.R = 1;
  p.acs = N;
  p.shot_of_row.assign(N, 2);
  MotionParams m = MotionParams::zero(2, kSpacing);
  m.shots[0].dh_mm = m.shots[1].dh_mm = 3.7;
  m.shots[0].dv_mm = m.shots[1].dv_mm = -1.9;
  const KSpaceData y = forward(x, coils, p, m);
  const CxArray oracle = shifted_spectrum_oracle(x, 3.7, -1.9);
  CHECK((y.coils[0] - oracle).abs().maxCoeff() / oracle.abs().maxCoeff() < 1e-10);
}

TEST_CASE("forward: linearity in the image") {
  RngStream rng(44, 7);
  const ShotPattern p = make_shot_pattern(32, 6, 3, 6);
  const CoilProfiles coils = synth_coil_profiles(rng, 32, 32, 3);
  const CxArray x1 = random_plane(rng, 32, 32);
  const CxArray x2 = random_plane(rng, 32, 32);
  const MotionParams m = random_motion(rng, 6);
  const std::complex<double> a(0.8, 0.1), b(-0.4, 0.7);
  const KSpaceData lhs = forward(a * x1 + b * x2, coils, p, m);
  const KSpaceData y1 = forward(x1, coils, p, m);
  const KSpaceData y2 = forward(x2, coils, p, m);
  double max_err = 0.0, max_ref = 0.0;
  for (std::size_t i = 0; i < lhs.coils.size(); ++i) {
    max_err = std::max(max_err,
                       (lhs.coils[i] - (a * y1.coils[i] + b * y2.coils[i])).abs().maxCoeff());
    max_ref = std::max(max_ref, lhs.coils[i].abs().maxCoeff());
  }
  CHECK(max_err / max_ref < 1e-10);
}

TEST_CASE("forward: shot locality is exact") {
  RngStream rng(55, 8);
  const ShotPattern p = make_shot_pattern(32, 6, 3, 6);
  const CoilProfiles coils = synth_coil_profiles(rng, 32, 32, 2);
  const CxArray x = random_plane(rng, 32, 32);
  MotionParams m = random_motion(rng, 6);
  const KSpaceData y0 = forward(x, coils, p, m);
  m.shots[3].dh_mm += 2.0;  // perturb shot 4 only
  m.shots[3].theta_deg += 1.0;
  const KSpaceData y1 = forward(x, coils, p, m);
  for (int r = 0; r < 32; ++r) {
    const int s = p.shot_of_row[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < y0.coils.size(); ++i) {
      const double diff = (y0.coils[i].row(r) - y1.coils[i].row(r)).abs().maxCoeff();
      if (s == 4) continue;
      CHECK(diff == 0.0);  // rows of other shots are bit-identical
    }
  }
}

TEST_CASE("adjoint: dot-product test at 32x32") {
  RngStream rng(66, 9);
  const ShotPattern p = make_shot_pattern(32, 6, 3, 6);
  const CoilProfiles coils = synth_coil_profiles(rng, 32, 32, 4);
  for (int trial = 0; trial < 10; ++trial) {
    const CxArray x = random_plane(rng, 32, 32);
    const KSpaceData y = random_masked_kspace(rng, p, 4, 32);
    const MotionParams m = random_motion(rng, 6);
    const KSpaceData ax = forward(x, coils, p, m);
    const CxArray aty = adjoint(y, coils, p, m);
    const std::complex<double> lhs = kspace_dot(ax, y);
    const std::complex<double> rhs = cdot(x, aty);
    const double denom = std::sqrt(spectral_energy(ax)) * std::sqrt(spectral_energy(y));
    CHECK(std::abs(lhs - rhs) / denom < 1e-10);
  }
}

TEST_CASE("adjoint: zero data, unitary special case") {
  RngStream rng(77, 10);
  const ShotPattern p = make_shot_pattern(32, 6, 3, 6);
  const CoilProfiles coils = synth_coil_profiles(rng, 32, 32, 2);
  const KSpaceData zero = KSpaceData::zeros(2, 32, 32);
  CHECK(adjoint(zero, coils, p, MotionParams::zero(6, kSpacing)).abs().maxCoeff() == 0.0);

  // Full sampling, flat single coil, zero motion: adjoint equals ifft2.
  CoilProfiles flat;
  flat.maps.push_back(CxArray::Constant(32, 32, 1.0));
  ShotPattern full;
  full.H = 32;
  full.S = 2;
  full.R = 1;
  full.acs = 32;
  full.shot_of_row.assign(32, 1);
  full.shot_of_row[16] = 2;
  KSpaceData y = KSpaceData::zeros(1, 32, 32);
  y.coils[0] = random_plane(rng, 32, 32);
  const CxArray a = adjoint(y, flat, full, MotionParams::zero(2, kSpacing));
  CHECK((a - ifft2_centered(y.coils[0])).abs().maxCoeff() < 1e-12);
}

TEST_CASE("dc_loss: exact data gives zero, zero image gives ||y||^2") {
  RngStream rng(88, 11);
  const ShotPattern p = make_shot_pattern(32, 6, 3, 6);
  const CoilProfiles coils = synth_coil_profiles(rng, 32, 32, 3);
  const CxArray x = make_phantom(rng, 32, 32, PhantomKind::RandomEllipses, 6);
  const MotionParams m = random_motion(rng, 6);
  const KSpaceData y = forward(x, coils, p, m);
  const double e = spectral_energy(y);
  CHECK(dc_loss(y, x, coils, p, m) / e < 1e-18);
  CHECK(dc_loss(y, CxArray::Zero(32, 32), coils, p, m) == doctest::Approx(e).epsilon(1e-12));
}

TEST_CASE("dc_loss: noise floor identity at 5% over 50 seeds") {
  const ShotPattern p = make_shot_pattern(32, 6, 3, 6);
  double mean_ratio = 0.0;
  const int n_seeds = 50;
  for (int seed = 0; seed < n_seeds; ++seed) {
    RngStream rng(static_cast<std::uint64_t>(seed) + 1, stream::kPhantom);
    RngStream coil_rng(static_cast<std::uint64_t>(seed) + 1, stream::kCoils);
    RngStream motion_rng(static_cast<std::uint64_t>(seed) + 1, stream::kMotion);
    RngStream noise_rng(static_cast<std::uint64_t>(seed) + 1, stream::kNoise);
    const CxArray x = make_phantom(rng, 32, 32, PhantomKind::RandomEllipses, 6);
    const CoilProfiles coils = synth_coil_profiles(coil_rng, 32, 32, 3);
    const MotionParams m = sample_motion(motion_rng, 6, kSpacing);
    const SimRecord rec = simulate_corrupted(x, coils, p, m, noise_rng, 0.05);
    mean_ratio += dc_loss(rec.y, x, coils, p, m) / spectral_energy(rec.y);
  }
  mean_ratio /= n_seeds;
  // loss / ||y||^2 = 0.05 / 1.05 when the model residual is pure noise.
  CHECK(mean_ratio == doctest::Approx(0.05 / 1.05).epsilon(0.2));
}

TEST_CASE("dc_grad_m: stationary at the true parameters") {
  RngStream rng(99, 12);
  const ShotPattern p = make_shot_pattern(32, 6, 3, 6);
  const CoilProfiles coils = synth_coil_profiles(rng, 32, 32, 3);
  const CxArray x = make_phantom(rng, 32, 32, PhantomKind::RandomEllipses, 6);
  const MotionParams m = random_motion(rng, 6);
  const KSpaceData y = forward(x, coils, p, m);
  const Eigen::VectorXd g_true = dc_grad_m(y, x, coils, p, m);
  MotionParams m_off = m;
  m_off.shots[1].dh_mm += 1.0;
  const Eigen::VectorXd g_off = dc_grad_m(y, x, coils, p, m_off);
  // The loss is a nonnegative quadratic-like bowl touching zero at truth.
  CHECK(g_true.norm() < 1e-3 * g_off.norm());
}

TEST_CASE("dc_grad_m: forward and central stencils agree to O(step)") {
  RngStream rng(111, 13);
  const ShotPattern p = make_shot_pattern(32, 6, 3, 6);
  const CoilProfiles coils = synth_coil_profiles(rng, 32, 32, 3);
  const CxArray x = make_phantom(rng, 32, 32, PhantomKind::RandomEllipses, 6);
  MotionParams m_data = random_motion(rng, 6);
  const KSpaceData y = forward(x, coils, p, m_data);
  const MotionParams m_eval = random_motion(rng, 6);
  const Eigen::VectorXd g_c1 = dc_grad_m(y, x, coils, p, m_eval, 0.01, 0.01);
  const Eigen::VectorXd g_f1 = dc_grad_m_forward(y, x, coils, p, m_eval, 0.01, 0.01);
  const Eigen::VectorXd g_c2 = dc_grad_m(y, x, coils, p, m_eval, 0.0025, 0.0025);
  const Eigen::VectorXd g_f2 = dc_grad_m_forward(y, x, coils, p, m_eval, 0.0025, 0.0025);
  const double d1 = (g_f1 - g_c1).norm() / g_c1.norm();
  const double d2 = (g_f2 - g_c2).norm() / g_c2.norm();
  CHECK(d1 < 0.05);        // forward differs from central by O(step)
  CHECK(d2 < 0.3 * d1);    // and shrinks linearly with the step
  // Central stencil self-consistency: O(step^2).
  CHECK((g_c2 - g_c1).norm() / g_c1.norm() < 1e-3);
}

TEST_CASE("dc_grad_m: low-energy shots move the loss less") {
  RngStream rng(222, 14);
  const ShotPattern p = make_shot_pattern(64, 6, 3, 8);
  const CoilProfiles coils = synth_coil_profiles(rng, 64, 64, 4);
  const CxArray x = make_phantom(rng, 64, 64, PhantomKind::SheppLogan);
  const MotionParams m0 = MotionParams::zero(6, kSpacing);
  const KSpaceData y = forward(x, coils, p, m0);

  auto perturbed_loss = [&](int shot) {
    MotionParams m = m0;
    m.shots[static_cast<std::size_t>(shot - 1)].dh_mm = 3.0;
    m.shots[static_cast<std::size_t>(shot - 1)].theta_deg = 3.0;
    return dc_loss(y, x, coils, p, m);
  };
  CHECK(perturbed_loss(5) < perturbed_loss(2));
  CHECK(perturbed_loss(6) < perturbed_loss(2));
}

TEST_CASE("dc_loss: invariant to a consistent global phase rotation") {
  RngStream rng(333, 15);
  const ShotPattern p = make_shot_pattern(32, 6, 3, 6);
  CoilProfiles coils = synth_coil_profiles(rng, 32, 32, 3);
  const CxArray x = make_phantom(rng, 32, 32, PhantomKind::RandomEllipses, 6);
  const MotionParams m = random_motion(rng, 6);
  const KSpaceData y = forward(x, coils, p, m);
  const double base = dc_loss(y, x, coils, p, m);

  const std::complex<double> phase = std::polar(1.0, 0.7);
  CoilProfiles coils_rot = coils;
  for (auto& map : coils_rot.maps) map *= phase;
  const double rotated = dc_loss(y, x / phase, coils_rot, p, m);
  CHECK(rotated == doctest::Approx(base).epsilon(1e-10));
}
