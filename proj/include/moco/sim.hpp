#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moco/forward_model.hpp"
#include "moco/phantom.hpp"
#include "moco/rng.hpp"

namespace moco {

// C smooth complex Gaussian profiles centered at angularly equispaced
// positions around the field of view, normalized so the root-sum-of-squares
// is exactly 1 everywhere.
CoilProfiles synth_coil_profiles(RngStream& rng, int H, int W, int C);

// One motion event: an affected shot s* drawn uniformly from {2..S}; shots
// before s* keep the zero pose, shots from s* on share one sampled pose with
// translations ~ U(-max_trans, max_trans) mm and rotation
// ~ U(-max_rot, max_rot) degrees. per_shot = true instead samples an
// independent pose for every shot >= s* (config extension, off by default).
MotionParams sample_motion(RngStream& rng, int S, double pixel_spacing_mm,
                           double max_trans_mm = 10.0, double max_rot_deg = 10.0,
                           bool per_shot = false);

struct SimRecord {
  CxArray x_ref;        // position owning the central k-space line
  KSpaceData y;         // corrupted (and optionally noisy) measurements
  MotionParams m_true;
  CoilProfiles coils;
  ShotPattern pattern;
  double noise_frac = 0.0;
  std::vector<double> noise_sigmas;  // per coil
  int s_star = 0;                    // 0 = motion-free
  std::uint64_t seed = 0;
};

// Builds corrupted k-space per the two-position mixing construction: every
// shot's rows come from the full spectrum of the image moved by that shot's
// pose, all positions produced by the same resampling path; then complex
// Gaussian noise with per-coil sigma calibrated so the expected noise energy
// is noise_frac times that coil's acquired spectral energy.
SimRecord simulate_corrupted(const CxArray& x_src, const CoilProfiles& coils,
                             const ShotPattern& pattern, const MotionParams& m,
                             RngStream& noise_rng, double noise_frac = 0.05);

// Rows of shots < s_star from y1, shots >= s_star from y2.
KSpaceData mix_two_acquisitions(const KSpaceData& y1, const KSpaceData& y2,
                                const ShotPattern& pattern, int s_star);

// ---- corpus on disk ------------------------------------------------------
// A corpus is a directory with manifest.json plus one subdirectory per record
// holding y.mtns, xref.mtns, coils.mtns and motion.json.

struct CorpusConfig {
  int H = 64, W = 64, C = 4, S = 6, R = 3, acs = 8;
  double pixel_spacing_mm = 260.0 / 64.0;
  double noise_frac = 0.05;
  int n_train = 553, n_val = 197, n_test = 100;
  std::uint64_t seed = 1;
  std::string phantom = "random-ellipses";
  bool per_shot_motion = false;
  int margin = 12;  // phantom support margin in pixels
};

struct Corpus {
  CorpusConfig config;
  ShotPattern pattern;
  std::vector<SimRecord> records;
  std::vector<int> train_ids, val_ids, test_ids;
};

// Deterministically generates record `idx` of a corpus (same output whether
// records are built serially or in parallel).
SimRecord make_corpus_record(const CorpusConfig& cfg, const ShotPattern& pattern, int idx);

Corpus generate_corpus(const CorpusConfig& cfg, int threads = 1);

void save_corpus(const std::string& dir, const Corpus& corpus);
Corpus load_corpus(const std::string& dir);
std::vector<const SimRecord*> corpus_split(const Corpus& corpus, const std::string& split);

}  // namespace moco
