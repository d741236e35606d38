#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "moco/cg.hpp"
#include "moco/network.hpp"
#include "moco/sim.hpp"

namespace moco {

// Step-size schedule for the motion search.
struct LrSchedule {
  enum class Kind { CyclicExp, Constant };
  Kind kind = Kind::CyclicExp;
  double hi = 1.0;
  double lo = 0.1;
  int period = 50;

  double operator()(int iteration) const;
  static LrSchedule constant(double step);
  static LrSchedule cyclic_exp(double hi, double lo, int period);
  // "cyclic-exp:hi,lo,period" or "constant:step".
  static LrSchedule parse(const std::string& spec);
  std::string to_string() const;
};

struct TrialResult {
  MotionParams m_hat;
  double final_dc_loss = 0.0;        // raw ||y - A(m) x||^2
  std::vector<double> loss_trace;    // raw dc per iteration, entry 0 = init
  std::uint64_t trial_seed = 0;
  int iterations_used = 0;
  CxArray x_final;                   // the solve backing final_dc_loss
};

struct CorrectionOutcome {
  TrialResult best_trial;
  std::vector<TrialResult> trials;
  RealArray x_hat;
  bool rejected = false;
  double dc_fraction = 0.0;  // final_dc_loss / total spectral energy of y
  bool degenerate = false;   // zero measurements
};

// Reconstruction backend for the optimizer: maps (y, m) to a complex image.
// `warm` carries the previous solution within a trial (used by the
// model-based backend to warm-start CG); `final_quality` requests the full
// iteration budget for the last solve of a trial.
using Reconstructor = std::function<CxArray(const MotionParams& m, const CxArray* warm,
                                            bool final_quality)>;

struct ModelBasedBackendConfig {
  double lambda = -1.0;  // < 0: 1e-3 * max |A^H y| at m = 0
  int search_iters = 4;  // CG iterations per motion-search step (warm-started)
  int full_iters = 30;   // CG iterations for initial and final solves
  double tol = 1e-6;
};

Reconstructor make_model_based_reconstructor(const KSpaceData& y, const CoilProfiles& coils,
                                             const ShotPattern& pattern,
                                             double pixel_spacing_mm,
                                             const ModelBasedBackendConfig& cfg = {});

// Hypernetwork backend: x = f(y, m; theta_h), coil-combined to a complex
// image for the data-consistency evaluation. The ARC input is prepared once.
Reconstructor make_hypernet_reconstructor(const KSpaceData& y, const CoilProfiles& coils,
                                          const ShotPattern& pattern,
                                          const HyperModel& model);

// One reconstruction plus its data-consistency loss at fixed m.
std::pair<CxArray, double> reconstructor_dc(const KSpaceData& y, const CoilProfiles& coils,
                                            const ShotPattern& pattern,
                                            const MotionParams& m,
                                            const Reconstructor& recon);

struct OptimizerConfig {
  int trials = 4;
  int iters = 200;
  LrSchedule schedule = LrSchedule::cyclic_exp(2.0, 0.2, 50);
  double reject_threshold = 0.05;
  // Random restarts draw within +-init_frac of the sampling ranges.
  double init_frac = 0.5;
  double max_trans_mm = 10.0;
  double max_rot_deg = 10.0;
  bool backtracking = true;
  int max_halvings = 5;
  // Stop a trial when the best dc improved by less than conv_tol (relative)
  // over the last conv_window iterations, or once the normalized dc reaches
  // dc_floor (the solution cannot meaningfully improve below it).
  double conv_tol = 1e-3;
  int conv_window = 25;
  double dc_floor = 1e-6;
  // Refresh the backend reconstruction every k-th iteration (1 = every
  // iteration). Between refreshes the m-step works against the held image,
  // which stays monotone under backtracking.
  int x_refresh_every = 1;
  // Step = schedule(it) * normalized gradient direction (per-unit step in
  // mm/deg). raw_gradient_steps = true instead uses schedule(it) * gradient,
  // matching plain gradient descent on the normalized dc.
  bool raw_gradient_steps = false;
  // Shot 1 is the reference frame (the simulator never moves it); pinning it
  // removes the global rigid gauge freedom from the search.
  bool pin_first_shot = true;
  std::uint64_t seed = 0;
};

// Test-time motion estimation: `trials` gradient-descent runs on the
// normalized data-consistency loss (trial 0 from m = 0, the rest from random
// restarts), best trial by final dc, rejected when the final dc exceeds
// reject_threshold of the measurement spectral energy.
CorrectionOutcome estimate_motion(const KSpaceData& y, const CoilProfiles& coils,
                                  const ShotPattern& pattern, double pixel_spacing_mm,
                                  const Reconstructor& recon, const OptimizerConfig& cfg);

// Hypernetwork evaluated at the true motion parameters (no optimization).
RealArray hn_gt_eval(const KSpaceData& y, const ShotPattern& pattern,
                     const MotionParams& m_true, const HyperModel& model);

struct AlternatingResult {
  CxArray x;
  MotionParams m;
  std::vector<double> dc_trace;  // normalized dc after each outer iteration
};

// Classical alternating baseline: CG image step at fixed m (lambda = 0,
// warm-started) alternating with backtracking gradient steps on m at fixed x.
// The outer dc trace is non-increasing by construction.
AlternatingResult alternating_joint(const KSpaceData& y, const CoilProfiles& coils,
                                    const ShotPattern& pattern, double pixel_spacing_mm,
                                    int iters_outer, int cg_iters, int m_steps = 15,
                                    double m_step_size = 2.0);

nlohmann::json outcome_to_json(const CorrectionOutcome& outcome);
void write_trial_trace_csv(const std::string& path, const TrialResult& trial);

}  // namespace moco
