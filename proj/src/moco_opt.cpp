#include "moco/moco_opt.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

namespace moco {

double LrSchedule::operator()(int iteration) const {
  if (kind == Kind::Constant || hi == lo || period <= 1) return hi;
  const int k = iteration % period;
  const double frac = static_cast<double>(k) / static_cast<double>(period - 1);
  return hi * std::pow(lo / hi, frac);
}

LrSchedule LrSchedule::constant(double step) {
  if (step <= 0.0) throw ParameterError("lr_schedule: step must be > 0");
  return LrSchedule{Kind::Constant, step, step, 1};
}

LrSchedule LrSchedule::cyclic_exp(double hi, double lo, int period) {
  if (lo <= 0.0 || hi < lo) throw ParameterError("lr_schedule: need hi >= lo > 0");
  if (period < 1) throw ParameterError("lr_schedule: period must be >= 1");
  return LrSchedule{Kind::CyclicExp, hi, lo, period};
}

LrSchedule LrSchedule::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  try {
    if (kind == "constant") {
      if (colon == std::string::npos) throw ParameterError("lr_schedule: missing step");
      return constant(std::stod(spec.substr(colon + 1)));
    }
    if (kind == "cyclic-exp") {
      if (colon == std::string::npos) throw ParameterError("lr_schedule: missing params");
      const std::string rest = spec.substr(colon + 1);
      const auto c1 = rest.find(',');
      const auto c2 = rest.find(',', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos)
        throw ParameterError("lr_schedule: expected cyclic-exp:hi,lo,period");
      return cyclic_exp(std::stod(rest.substr(0, c1)),
                        std::stod(rest.substr(c1 + 1, c2 - c1 - 1)),
                        std::stoi(rest.substr(c2 + 1)));
    }
  } catch (const std::invalid_argument&) {
    throw ParameterError("lr_schedule: bad number in " + spec);
  }
  throw ParameterError("lr_schedule: unknown kind " + kind);
}

std::string LrSchedule::to_string() const {
  char buf[96];
  if (kind == Kind::Constant) {
    std::snprintf(buf, sizeof(buf), "constant:%g", hi);
  } else {
    std::snprintf(buf, sizeof(buf), "cyclic-exp:%g,%g,%d", hi, lo, period);
  }
  return buf;
}

Reconstructor make_model_based_reconstructor(const KSpaceData& y, const CoilProfiles& coils,
                                             const ShotPattern& pattern,
                                             double pixel_spacing_mm,
                                             const ModelBasedBackendConfig& cfg) {
  const double lambda =
      cfg.lambda >= 0.0
          ? cfg.lambda
          : default_cg_lambda(y, coils, pattern, MotionParams::zero(pattern.S, pixel_spacing_mm));
  return [&y, &coils, &pattern, cfg, lambda](const MotionParams& m, const CxArray* warm,
                                             bool final_quality) {
    const int iters = (warm == nullptr || final_quality) ? cfg.full_iters : cfg.search_iters;
    return cg_lsq(y, coils, pattern, m, lambda, iters, cfg.tol, warm).x;
  };
}

Reconstructor make_hypernet_reconstructor(const KSpaceData& y, const CoilProfiles& coils,
                                          const ShotPattern& pattern,
                                          const HyperModel& model) {
  auto prep = std::make_shared<HyperModel::Prepared>(model.prepare(y, pattern));
  auto model_copy = std::make_shared<HyperModel>(model);
  return [prep, model_copy, &coils](const MotionParams& m, const CxArray*, bool) {
    const KSpaceData full = model_copy->predict_kspace(*prep, m);
    return coil_combine_recon(full, coils);
  };
}

std::pair<CxArray, double> reconstructor_dc(const KSpaceData& y, const CoilProfiles& coils,
                                            const ShotPattern& pattern,
                                            const MotionParams& m,
                                            const Reconstructor& recon) {
  if (spectral_energy(y) == 0.0)
    return {CxArray::Zero(y.rows(), y.cols()), 0.0};
  CxArray x = recon(m, nullptr, true);
  return {x, dc_loss(y, x, coils, pattern, m)};
}

namespace {

MotionParams random_restart(RngStream& rng, int S, double pixel_spacing_mm,
                            const OptimizerConfig& cfg) {
  MotionParams m = MotionParams::zero(S, pixel_spacing_mm);
  for (int s = 1; s < S; ++s) {  // shot 1 is the reference position
    ShotMotion& pose = m.shots[static_cast<std::size_t>(s)];
    pose.dh_mm = rng.uniform(-1.0, 1.0) * cfg.init_frac * cfg.max_trans_mm;
    pose.dv_mm = rng.uniform(-1.0, 1.0) * cfg.init_frac * cfg.max_trans_mm;
    pose.theta_deg = rng.uniform(-1.0, 1.0) * cfg.init_frac * cfg.max_rot_deg;
  }
  return m;
}

TrialResult run_trial(const KSpaceData& y, const CoilProfiles& coils,
                      const ShotPattern& pattern, const Reconstructor& recon,
                      const OptimizerConfig& cfg, const MotionParams& m0,
                      std::uint64_t trial_seed, double y_energy) {
  TrialResult trial;
  trial.trial_seed = trial_seed;

  MotionParams m = m0;
  CxArray x = recon(m, nullptr, false);
  double dc = dc_loss(y, x, coils, pattern, m);
  trial.loss_trace.push_back(dc);

  double best_dc = dc;
  MotionParams best_m = m;
  int stalls = 0;

  for (int it = 0; it < cfg.iters; ++it) {
    Eigen::VectorXd g = dc_grad_m(y, x, coils, pattern, m) / y_energy;
    if (cfg.pin_first_shot) g.head(3).setZero();
    const double gnorm = g.norm();
    if (!std::isfinite(gnorm)) throw NumericalError("estimate_motion: non-finite gradient");
    if (gnorm == 0.0) break;
    if (!cfg.raw_gradient_steps) g /= gnorm;

    double step = cfg.schedule(it);
    bool accepted = false;
    const bool refresh = cfg.x_refresh_every <= 1 || (it % cfg.x_refresh_every) == 0;
    const int tries = cfg.backtracking ? cfg.max_halvings + 1 : 1;
    for (int h = 0; h < tries; ++h) {
      const MotionParams m_try =
          MotionParams::from_vector(m.to_vector() - step * g, m.pixel_spacing_mm);
      CxArray x_try;
      const CxArray& x_eval = refresh ? (x_try = recon(m_try, &x, false)) : x;
      const double dc_try = dc_loss(y, x_eval, coils, pattern, m_try);
      if (dc_try <= dc || !cfg.backtracking) {
        m = m_try;
        if (refresh) x = std::move(x_try);
        dc = dc_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    trial.loss_trace.push_back(dc);
    trial.iterations_used = it + 1;
    if (dc < best_dc) {
      best_dc = dc;
      best_m = m;
    }
    if (!accepted) {
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }
    if (dc <= cfg.dc_floor * y_energy) break;
    if (it + 1 >= cfg.conv_window) {
      const double past =
          trial.loss_trace[static_cast<std::size_t>(it + 1 - cfg.conv_window)];
      if (past - dc <= cfg.conv_tol * std::max(past, 1e-30)) break;
    }
  }

  // Final full-quality solve at the best parameters.
  trial.x_final = recon(best_m, &x, true);
  const double dc_final = dc_loss(y, trial.x_final, coils, pattern, best_m);
  trial.loss_trace.push_back(dc_final);
  trial.m_hat = best_m;
  trial.final_dc_loss = dc_final;
  return trial;
}

}  // namespace

CorrectionOutcome estimate_motion(const KSpaceData& y, const CoilProfiles& coils,
                                  const ShotPattern& pattern, double pixel_spacing_mm,
                                  const Reconstructor& recon, const OptimizerConfig& cfg) {
  if (cfg.trials < 1) throw ParameterError("estimate_motion: trials must be >= 1");
  if (cfg.reject_threshold <= 0.0)
    throw ParameterError("estimate_motion: reject threshold must be > 0");

  CorrectionOutcome outcome;
  const double y_energy = spectral_energy(y);
  if (y_energy == 0.0) {
    outcome.degenerate = true;
    outcome.x_hat = RealArray::Zero(y.rows(), y.cols());
    outcome.best_trial.m_hat = MotionParams::zero(pattern.S, pixel_spacing_mm);
    outcome.best_trial.loss_trace = {0.0};
    outcome.dc_fraction = 0.0;
    outcome.rejected = false;
    return outcome;
  }

  int n_failed = 0;
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t trial_seed = derive_stream(cfg.seed, stream::kTrial + static_cast<std::uint64_t>(t));
    RngStream rng(trial_seed, stream::kTrial);
    const MotionParams m0 = t == 0 ? MotionParams::zero(pattern.S, pixel_spacing_mm)
                                   : random_restart(rng, pattern.S, pixel_spacing_mm, cfg);
    try {
      outcome.trials.push_back(
          run_trial(y, coils, pattern, recon, cfg, m0, trial_seed, y_energy));
    } catch (const NumericalError&) {
      ++n_failed;
    }
  }
  if (outcome.trials.empty())
    throw NumericalError("estimate_motion: all trials failed (" + std::to_string(n_failed) +
                         ")");

  std::size_t best = 0;
  for (std::size_t t = 1; t < outcome.trials.size(); ++t)
    if (outcome.trials[t].final_dc_loss < outcome.trials[best].final_dc_loss) best = t;
  outcome.best_trial = outcome.trials[best];
  outcome.x_hat = outcome.best_trial.x_final.abs();
  outcome.dc_fraction = outcome.best_trial.final_dc_loss / y_energy;
  outcome.rejected = outcome.dc_fraction > cfg.reject_threshold;
  return outcome;
}

RealArray hn_gt_eval(const KSpaceData& y, const ShotPattern& pattern,
                     const MotionParams& m_true, const HyperModel& model) {
  return model.f_forward(y, pattern, m_true);
}

AlternatingResult alternating_joint(const KSpaceData& y, const CoilProfiles& coils,
                                    const ShotPattern& pattern, double pixel_spacing_mm,
                                    int iters_outer, int cg_iters, int m_steps,
                                    double m_step_size) {
  if (iters_outer < 1) throw ParameterError("alternating_joint: iters_outer must be >= 1");
  const double y_energy = spectral_energy(y);
  if (y_energy == 0.0) throw ParameterError("alternating_joint: zero measurements");

  AlternatingResult res;
  res.m = MotionParams::zero(pattern.S, pixel_spacing_mm);
  res.x = CxArray::Zero(y.rows(), y.cols());

  for (int outer = 0; outer < iters_outer; ++outer) {
    // Image step: unregularized CG from the previous image never increases dc.
    res.x = cg_lsq(y, coils, pattern, res.m, 0.0, cg_iters, 1e-8, &res.x).x;
    double dc = dc_loss(y, res.x, coils, pattern, res.m);
    if (!std::isfinite(dc))
      throw NumericalError("alternating_joint: diverged at outer iteration " +
                           std::to_string(outer));

    // Motion step: backtracking gradient descent at fixed x.
    for (int k = 0; k < m_steps; ++k) {
      Eigen::VectorXd g = dc_grad_m(y, res.x, coils, pattern, res.m) / y_energy;
      const double gnorm = g.norm();
      if (gnorm == 0.0) break;
      g /= gnorm;
      double step = m_step_size;
      for (int h = 0; h < 6; ++h) {
        const MotionParams m_try =
            MotionParams::from_vector(res.m.to_vector() - step * g, pixel_spacing_mm);
        const double dc_try = dc_loss(y, res.x, coils, pattern, m_try);
        if (dc_try <= dc) {
          res.m = m_try;
          dc = dc_try;
          break;
        }
        step *= 0.5;
      }
    }
    res.dc_trace.push_back(dc / y_energy);
  }
  return res;
}

nlohmann::json outcome_to_json(const CorrectionOutcome& outcome) {
  nlohmann::json m_hat = nlohmann::json::array();
  for (const auto& pose : outcome.best_trial.m_hat.shots)
    m_hat.push_back({pose.dh_mm, pose.dv_mm, pose.theta_deg});
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : outcome.trials)
    trials.push_back({{"seed", t.trial_seed},
                      {"final_dc", t.final_dc_loss},
                      {"iters", t.iterations_used}});
  return {{"m_hat", m_hat},
          {"dc_fraction", outcome.dc_fraction},
          {"rejected", outcome.rejected},
          {"degenerate", outcome.degenerate},
          {"trials", trials}};
}

void write_trial_trace_csv(const std::string& path, const TrialResult& trial) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << "iteration,dc\n";
  f.precision(12);
  for (std::size_t i = 0; i < trial.loss_trace.size(); ++i)
    f << i << "," << trial.loss_trace[i] << "\n";
}

}  // namespace moco
