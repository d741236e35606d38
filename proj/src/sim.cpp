#include "moco/sim.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>

#include "moco/fft.hpp"
#include "moco/parallel.hpp"
#include "moco/tensor.hpp"

namespace moco {

namespace fs = std::filesystem;

CoilProfiles synth_coil_profiles(RngStream& rng, int H, int W, int C) {
  if (C < 1) throw ParameterError("synth_coil_profiles: C must be >= 1");
  const double cy = 0.5 * static_cast<double>(H - 1);
  const double cx = 0.5 * static_cast<double>(W - 1);
  const double fov = static_cast<double>(std::min(H, W));
  const double ring = 0.55 * fov;   // coil centers sit outside the object
  const double width = 0.40 * fov;  // Gaussian footprint
  const double angle0 = rng.uniform(0.0, 2.0 * std::numbers::pi);

  CoilProfiles coils;
  coils.maps.reserve(static_cast<std::size_t>(C));
  for (int i = 0; i < C; ++i) {
    const double ang = angle0 + 2.0 * std::numbers::pi * static_cast<double>(i) /
                                    static_cast<double>(C) +
                       rng.uniform(-0.05, 0.05);
    const double gy = cy + ring * std::sin(ang);
    const double gx = cx + ring * std::cos(ang);
    const double phase0 = rng.uniform(-std::numbers::pi, std::numbers::pi);
    // Mild linear phase tilt keeps the profiles complex but smooth.
    const double ty = rng.uniform(-1.0, 1.0) * std::numbers::pi / fov;
    const double tx = rng.uniform(-1.0, 1.0) * std::numbers::pi / fov;
    CxArray map(H, W);
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) {
        const double dy = static_cast<double>(r) - gy;
        const double dx = static_cast<double>(c) - gx;
        const double mag = std::exp(-(dy * dy + dx * dx) / (2.0 * width * width));
        const double ph = phase0 + ty * (static_cast<double>(r) - cy) +
                          tx * (static_cast<double>(c) - cx);
        map(r, c) = std::polar(mag, ph);
      }
    coils.maps.push_back(std::move(map));
  }

  RealArray rss = RealArray::Zero(H, W);
  for (const auto& m : coils.maps) rss += m.abs2();
  rss = rss.sqrt();
  for (auto& m : coils.maps) m /= rss.cast<std::complex<double>>();
  return coils;
}

MotionParams sample_motion(RngStream& rng, int S, double pixel_spacing_mm,
                           double max_trans_mm, double max_rot_deg, bool per_shot) {
  if (S < 2) throw ParameterError("sample_motion: S must be >= 2");
  MotionParams m = MotionParams::zero(S, pixel_spacing_mm);
  const int s_star = 2 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(S - 1)));
  ShotMotion pose;
  pose.dh_mm = rng.uniform(-max_trans_mm, max_trans_mm);
  pose.dv_mm = rng.uniform(-max_trans_mm, max_trans_mm);
  pose.theta_deg = rng.uniform(-max_rot_deg, max_rot_deg);
  for (int s = s_star; s <= S; ++s) {
    m.shots[static_cast<std::size_t>(s - 1)] = pose;
    if (per_shot && s < S) {
      pose.dh_mm = rng.uniform(-max_trans_mm, max_trans_mm);
      pose.dv_mm = rng.uniform(-max_trans_mm, max_trans_mm);
      pose.theta_deg = rng.uniform(-max_rot_deg, max_rot_deg);
    }
  }
  return m;
}

SimRecord simulate_corrupted(const CxArray& x_src, const CoilProfiles& coils,
                             const ShotPattern& pattern, const MotionParams& m,
                             RngStream& noise_rng, double noise_frac) {
  if (noise_frac < 0.0) throw ParameterError("simulate_corrupted: noise_frac must be >= 0");
  if (m.num_shots() != pattern.S)
    throw DimensionError("simulate_corrupted: motion params length != num shots");

  SimRecord rec;
  rec.pattern = pattern;
  rec.coils = coils;
  rec.m_true = m;
  rec.noise_frac = noise_frac;
  rec.s_star = m.first_moved_shot();
  rec.y = KSpaceData::zeros(coils.count(), x_src.rows(), x_src.cols());

  // One position per distinct pose; every position goes through the same
  // resampling path (a zero pose short-circuits to a bit-exact copy).
  std::vector<ShotMotion> poses;
  std::vector<CxArray> positions;
  std::vector<std::size_t> pose_of_shot(static_cast<std::size_t>(pattern.S));
  for (int s = 1; s <= pattern.S; ++s) {
    const ShotMotion& pose = m.shots[static_cast<std::size_t>(s - 1)];
    std::size_t idx = poses.size();
    for (std::size_t k = 0; k < poses.size(); ++k)
      if (poses[k] == pose) {
        idx = k;
        break;
      }
    if (idx == poses.size()) {
      poses.push_back(pose);
      positions.push_back(apply_rigid_motion(x_src, pose, m.pixel_spacing_mm));
    }
    pose_of_shot[static_cast<std::size_t>(s - 1)] = idx;
  }

  for (int s = 1; s <= pattern.S; ++s) {
    const CxArray& pos = positions[pose_of_shot[static_cast<std::size_t>(s - 1)]];
    const std::vector<int> rows = pattern.rows_of_shot(s);
    for (int i = 0; i < coils.count(); ++i) {
      const CxArray ksp = fft2_centered(coils.maps[static_cast<std::size_t>(i)] * pos);
      for (int r : rows) rec.y.coils[static_cast<std::size_t>(i)].row(r) = ksp.row(r);
    }
  }

  // The reference is the position of the shot owning the DC row.
  const int dc_shot = pattern.shot_of_row[static_cast<std::size_t>(pattern.dc_row())];
  rec.x_ref = positions[pose_of_shot[static_cast<std::size_t>(dc_shot - 1)]];

  // Noise sigma per coil: expected energy over acquired entries equals
  // noise_frac times that coil's acquired signal energy.
  rec.noise_sigmas.assign(static_cast<std::size_t>(coils.count()), 0.0);
  if (noise_frac > 0.0) {
    const std::vector<int> rows = pattern.acquired_rows();
    const auto n_acq = static_cast<double>(rows.size() * static_cast<std::size_t>(x_src.cols()));
    for (int i = 0; i < coils.count(); ++i) {
      double e = 0.0;
      for (int r : rows) e += rec.y.coils[static_cast<std::size_t>(i)].row(r).abs2().sum();
      const double sigma = std::sqrt(noise_frac * e / (2.0 * n_acq));
      rec.noise_sigmas[static_cast<std::size_t>(i)] = sigma;
      for (int r : rows)
        for (Eigen::Index c = 0; c < x_src.cols(); ++c) {
          double re = 0.0, im = 0.0;
          gaussian_pair(noise_rng, sigma, re, im);
          rec.y.coils[static_cast<std::size_t>(i)](r, c) += std::complex<double>(re, im);
        }
    }
  }
  return rec;
}

KSpaceData mix_two_acquisitions(const KSpaceData& y1, const KSpaceData& y2,
                                const ShotPattern& pattern, int s_star) {
  if (y1.count() != y2.count() || y1.rows() != y2.rows() || y1.cols() != y2.cols())
    throw DimensionError("mix_two_acquisitions: geometry mismatch");
  if (y1.rows() != pattern.H) throw DimensionError("mix_two_acquisitions: pattern mismatch");
  if (s_star < 2 || s_star > pattern.S)
    throw ParameterError("mix_two_acquisitions: s_star must be in [2, S]");
  KSpaceData out = KSpaceData::zeros(y1.count(), y1.rows(), y1.cols());
  for (int r = 0; r < pattern.H; ++r) {
    const int s = pattern.shot_of_row[static_cast<std::size_t>(r)];
    if (s == 0) continue;
    const KSpaceData& src = s < s_star ? y1 : y2;
    for (int i = 0; i < out.count(); ++i)
      out.coils[static_cast<std::size_t>(i)].row(r) = src.coils[static_cast<std::size_t>(i)].row(r);
  }
  return out;
}

SimRecord make_corpus_record(const CorpusConfig& cfg, const ShotPattern& pattern, int idx) {
  const std::uint64_t rec_stream = stream::kRecordBase + static_cast<std::uint64_t>(idx);
  RngStream phantom_rng(cfg.seed, derive_stream(rec_stream, stream::kPhantom));
  RngStream coil_rng(cfg.seed, derive_stream(rec_stream, stream::kCoils));
  RngStream motion_rng(cfg.seed, derive_stream(rec_stream, stream::kMotion));
  RngStream noise_rng(cfg.seed, derive_stream(rec_stream, stream::kNoise));

  const CxArray x = make_phantom(phantom_rng, cfg.H, cfg.W,
                                 phantom_kind_from_string(cfg.phantom), cfg.margin);
  const CoilProfiles coils = synth_coil_profiles(coil_rng, cfg.H, cfg.W, cfg.C);
  const MotionParams m = sample_motion(motion_rng, cfg.S, cfg.pixel_spacing_mm, 10.0, 10.0,
                                       cfg.per_shot_motion);
  SimRecord rec = simulate_corrupted(x, coils, pattern, m, noise_rng, cfg.noise_frac);
  rec.seed = derive_stream(cfg.seed, rec_stream);
  return rec;
}

Corpus generate_corpus(const CorpusConfig& cfg, int threads) {
  Corpus corpus;
  corpus.config = cfg;
  corpus.pattern = make_shot_pattern(cfg.H, cfg.S, cfg.R, cfg.acs);
  const int n = cfg.n_train + cfg.n_val + cfg.n_test;
  corpus.records.resize(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](int i) {
    corpus.records[static_cast<std::size_t>(i)] =
        make_corpus_record(cfg, corpus.pattern, i);
  });
  for (int i = 0; i < cfg.n_train; ++i) corpus.train_ids.push_back(i);
  for (int i = 0; i < cfg.n_val; ++i) corpus.val_ids.push_back(cfg.n_train + i);
  for (int i = 0; i < cfg.n_test; ++i) corpus.test_ids.push_back(cfg.n_train + cfg.n_val + i);
  return corpus;
}

namespace {

std::string record_dir_name(int idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rec_%05d", idx);
  return buf;
}

nlohmann::json motion_to_json(const MotionParams& m, int s_star) {
  nlohmann::json triples = nlohmann::json::array();
  for (const auto& p : m.shots) triples.push_back({p.dh_mm, p.dv_mm, p.theta_deg});
  return {{"s_star", s_star},
          {"pixel_spacing_mm", m.pixel_spacing_mm},
          {"triples", triples}};
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace

void save_corpus(const std::string& dir, const Corpus& corpus) {
  fs::create_directories(dir);
  nlohmann::json records = nlohmann::json::array();
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const SimRecord& rec = corpus.records[i];
    const std::string rdir = record_dir_name(static_cast<int>(i));
    const fs::path rpath = fs::path(dir) / rdir;
    fs::create_directories(rpath);
    write_tensor((rpath / "y.mtns").string(), to_tensor(rec.y.coils));
    write_tensor((rpath / "xref.mtns").string(), to_tensor(rec.x_ref));
    write_tensor((rpath / "coils.mtns").string(), to_tensor(rec.coils.maps));
    write_json((rpath / "motion.json").string(), motion_to_json(rec.m_true, rec.s_star));
    records.push_back({{"id", i},
                       {"dir", rdir},
                       {"seed", rec.seed},
                       {"s_star", rec.s_star},
                       {"noise_sigmas", rec.noise_sigmas}});
  }
  const CorpusConfig& c = corpus.config;
  nlohmann::json manifest = {
      {"format", "moco-corpus-v1"},
      {"geometry",
       {{"H", c.H},
        {"W", c.W},
        {"C", c.C},
        {"S", c.S},
        {"R", c.R},
        {"acs", c.acs},
        {"pixel_spacing_mm", c.pixel_spacing_mm}}},
      {"noise_frac", c.noise_frac},
      {"seed", c.seed},
      {"phantom", c.phantom},
      {"per_shot_motion", c.per_shot_motion},
      {"margin", c.margin},
      {"pattern", corpus.pattern.to_json()},
      {"splits",
       {{"train", corpus.train_ids}, {"val", corpus.val_ids}, {"test", corpus.test_ids}}},
      {"records", records}};
  write_json((fs::path(dir) / "manifest.json").string(), manifest);
}

Corpus load_corpus(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::exists(root / "manifest.json"))
    throw IoError("not a corpus directory (missing manifest.json): " + dir);
  const nlohmann::json manifest = read_json((root / "manifest.json").string());

  Corpus corpus;
  try {
    const auto& g = manifest.at("geometry");
    corpus.config.H = g.at("H").get<int>();
    corpus.config.W = g.at("W").get<int>();
    corpus.config.C = g.at("C").get<int>();
    corpus.config.S = g.at("S").get<int>();
    corpus.config.R = g.at("R").get<int>();
    corpus.config.acs = g.at("acs").get<int>();
    corpus.config.pixel_spacing_mm = g.at("pixel_spacing_mm").get<double>();
    corpus.config.noise_frac = manifest.at("noise_frac").get<double>();
    corpus.config.seed = manifest.at("seed").get<std::uint64_t>();
    corpus.config.phantom = manifest.value("phantom", std::string("random-ellipses"));
    corpus.config.per_shot_motion = manifest.value("per_shot_motion", false);
    corpus.config.margin = manifest.value("margin", 12);
    corpus.pattern = ShotPattern::from_json(manifest.at("pattern"));
    corpus.train_ids = manifest.at("splits").at("train").get<std::vector<int>>();
    corpus.val_ids = manifest.at("splits").at("val").get<std::vector<int>>();
    corpus.test_ids = manifest.at("splits").at("test").get<std::vector<int>>();

    for (const auto& rj : manifest.at("records")) {
      SimRecord rec;
      rec.pattern = corpus.pattern;
      rec.seed = rj.at("seed").get<std::uint64_t>();
      rec.s_star = rj.at("s_star").get<int>();
      rec.noise_sigmas = rj.at("noise_sigmas").get<std::vector<double>>();
      rec.noise_frac = corpus.config.noise_frac;
      const fs::path rpath = root / rj.at("dir").get<std::string>();
      rec.y.coils = planes_from_tensor(read_tensor((rpath / "y.mtns").string()));
      rec.x_ref = plane_from_tensor(read_tensor((rpath / "xref.mtns").string()));
      rec.coils.maps = planes_from_tensor(read_tensor((rpath / "coils.mtns").string()));
      const nlohmann::json mj = read_json((rpath / "motion.json").string());
      MotionParams m;
      m.pixel_spacing_mm = mj.at("pixel_spacing_mm").get<double>();
      for (const auto& t : mj.at("triples")) {
        ShotMotion pose;
        pose.dh_mm = t.at(0).get<double>();
        pose.dv_mm = t.at(1).get<double>();
        pose.theta_deg = t.at(2).get<double>();
        m.shots.push_back(pose);
      }
      rec.m_true = m;
      corpus.records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(dir + "/manifest.json: " + e.what());
  }
  return corpus;
}

std::vector<const SimRecord*> corpus_split(const Corpus& corpus, const std::string& split) {
  const std::vector<int>* ids = nullptr;
  if (split == "train") ids = &corpus.train_ids;
  else if (split == "val") ids = &corpus.val_ids;
  else if (split == "test") ids = &corpus.test_ids;
  else if (split == "all") {
    std::vector<const SimRecord*> out;
    for (const auto& r : corpus.records) out.push_back(&r);
    return out;
  } else {
    throw ParameterError("unknown split: " + split);
  }
  std::vector<const SimRecord*> out;
  for (int i : *ids) out.push_back(&corpus.records[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace moco
