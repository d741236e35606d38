// moco: simulate multi-shot rigid-motion-corrupted MRI, train the
// motion-conditioned reconstruction, estimate motion at test time, and
// evaluate the method family.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>

#include "moco/image_io.hpp"
#include "moco/metrics.hpp"
#include "moco/model_based.hpp"
#include "moco/moco_opt.hpp"
#include "moco/parallel.hpp"
#include "moco/tensor.hpp"
#include "moco/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace moco;

namespace {

// FNV-1a over the canonical config dump; recorded in run.json so any artifact
// can be traced back to its exact configuration.
std::uint64_t config_hash(const json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_run_json(const std::string& dir, const std::string& command, const json& config) {
  json run = {{"tool", "moco"},
              {"version", MOCO_VERSION},
              {"build", MOCO_GIT_DESC},
              {"command", command},
              {"config", config},
              {"config_hash", config_hash(config)}};
  std::ofstream f(fs::path(dir) / "run.json");
  if (!f) throw IoError("cannot write run.json in " + dir);
  f << run.dump(2) << "\n";
}

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void require_corpus(const std::string& dir) {
  if (!fs::exists(fs::path(dir) / "manifest.json"))
    throw ConfigError("not a corpus directory (missing manifest.json): " + dir);
}

RealArray read_image(const std::string& path) {
  const auto [shape, data] = read_tensor_real(path);
  if (shape.size() != 2) throw FormatError(path + ": rank 2 image expected");
  RealArray img(shape[0], shape[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) img(r, c) = data[k++];
  return img;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string out;
  std::string config_path;
  CorpusConfig cfg;
  int threads = 1;
};

int cmd_simulate(const SimulateArgs& a) {
  CorpusConfig cfg = a.cfg;
  if (!a.config_path.empty()) {
    const json j = load_json_file(a.config_path);
    cfg.H = j.value("H", cfg.H);
    cfg.W = j.value("W", cfg.W);
    cfg.C = j.value("C", cfg.C);
    cfg.S = j.value("S", cfg.S);
    cfg.R = j.value("R", cfg.R);
    cfg.acs = j.value("acs", cfg.acs);
    cfg.pixel_spacing_mm = j.value("pixel_spacing_mm", cfg.pixel_spacing_mm);
    cfg.noise_frac = j.value("noise_frac", cfg.noise_frac);
    cfg.n_train = j.value("n_train", cfg.n_train);
    cfg.n_val = j.value("n_val", cfg.n_val);
    cfg.n_test = j.value("n_test", cfg.n_test);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.phantom = j.value("phantom", cfg.phantom);
    cfg.per_shot_motion = j.value("per_shot_motion", cfg.per_shot_motion);
    cfg.margin = j.value("margin", cfg.margin);
  }
  const json resolved = {{"H", cfg.H},
                         {"W", cfg.W},
                         {"C", cfg.C},
                         {"S", cfg.S},
                         {"R", cfg.R},
                         {"acs", cfg.acs},
                         {"pixel_spacing_mm", cfg.pixel_spacing_mm},
                         {"noise_frac", cfg.noise_frac},
                         {"n_train", cfg.n_train},
                         {"n_val", cfg.n_val},
                         {"n_test", cfg.n_test},
                         {"seed", cfg.seed},
                         {"phantom", cfg.phantom},
                         {"per_shot_motion", cfg.per_shot_motion},
                         {"margin", cfg.margin},
                         {"threads", a.threads}};
  const Corpus corpus = generate_corpus(cfg, a.threads);
  save_corpus(a.out, corpus);
  write_run_json(a.out, "simulate", resolved);
  std::cout << "simulate: wrote " << corpus.records.size() << " records to " << a.out << "\n";
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string corpus, out, mode = "hypernet", split = "train";
  TrainConfig tc;
  int features = 8, hidden = 64, layers = 3;
};

int cmd_train(const TrainArgs& a) {
  require_corpus(a.corpus);
  if (a.mode != "hypernet" && a.mode != "conv")
    throw ConfigError("train: mode must be hypernet or conv");
  const Corpus corpus = load_corpus(a.corpus);
  const auto records = corpus_split(corpus, a.split);
  if (records.empty()) throw ConfigError("train: empty split " + a.split);

  ModelConfig mc;
  mc.g.coils = corpus.config.C;
  mc.g.features = a.features;
  mc.h.num_shots = corpus.config.S;
  mc.h.hidden = a.hidden;
  mc.h.layers = a.layers;
  mc.h.out_dim = mc.g.param_count();

  const json resolved = {{"corpus", a.corpus},  {"mode", a.mode},
                         {"split", a.split},    {"iters", a.tc.iters},
                         {"batch", a.tc.batch}, {"lr", a.tc.lr},
                         {"seed", a.tc.seed},   {"features", a.features},
                         {"hidden", a.hidden},  {"layers", a.layers},
                         {"loss", a.tc.loss}};

  const TrainMode mode = a.mode == "hypernet" ? TrainMode::Hypernet : TrainMode::ConvAblation;
  const TrainResult result = train(records, mc, a.tc, mode);

  fs::create_directories(a.out);
  if (mode == TrainMode::Hypernet) {
    HyperModel model;
    model.config = mc;
    model.theta_h = result.weights;
    save_hyper_model(a.out, model);
  } else {
    ConvModel model;
    model.config = mc;
    model.theta_g = result.weights;
    save_conv_model(a.out, model);
  }
  write_loss_csv((fs::path(a.out) / "loss.csv").string(), result.loss_curve);
  write_run_json(a.out, "train", resolved);
  std::cout << "train: " << a.mode << " model written to " << a.out << " (final loss "
            << result.loss_curve.back() << ")\n";
  return 0;
}

// ---- correct ---------------------------------------------------------------

struct CorrectArgs {
  std::string corpus, out, backend = "hypernet", model, split = "test";
  std::string schedule = "cyclic-exp:2.0,0.2,50";
  OptimizerConfig oc;
  double lambda = -1.0;
  int threads = 1;
};

int cmd_correct(const CorrectArgs& a) {
  require_corpus(a.corpus);
  const bool needs_model =
      a.backend == "hypernet" || a.backend == "hypernet-gt" || a.backend == "conv";
  if (needs_model && a.model.empty())
    throw ConfigError("correct: backend " + a.backend + " requires --model");
  const Corpus corpus = load_corpus(a.corpus);
  const auto records = corpus_split(corpus, a.split);
  if (records.empty()) throw ConfigError("correct: empty split " + a.split);

  OptimizerConfig oc = a.oc;
  oc.schedule = LrSchedule::parse(a.schedule);

  HyperModel hyper;
  ConvModel conv;
  if (a.backend == "hypernet" || a.backend == "hypernet-gt") hyper = load_hyper_model(a.model);
  if (a.backend == "conv") conv = load_conv_model(a.model);

  const json resolved = {{"corpus", a.corpus},
                         {"backend", a.backend},
                         {"model", a.model},
                         {"split", a.split},
                         {"trials", oc.trials},
                         {"iters", oc.iters},
                         {"schedule", oc.schedule.to_string()},
                         {"reject_threshold", oc.reject_threshold},
                         {"seed", oc.seed},
                         {"lambda", a.lambda},
                         {"threads", a.threads}};

  fs::create_directories(a.out);
  const int n = static_cast<int>(records.size());
  std::vector<std::string> labels(static_cast<std::size_t>(n));

  parallel_for(n, a.threads, [&](int i) {
    const SimRecord& rec = *records[static_cast<std::size_t>(i)];
    const double spacing = rec.m_true.pixel_spacing_mm;
    char name[32];
    std::snprintf(name, sizeof(name), "rec_%05d", i);
    const fs::path rdir = fs::path(a.out) / name;
    fs::create_directories(rdir);
    labels[static_cast<std::size_t>(i)] = name;

    RealArray x_hat;
    json outcome;
    if (a.backend == "model-based-gt") {
      const double lambda =
          a.lambda >= 0.0 ? a.lambda
                          : default_cg_lambda(rec.y, rec.coils, rec.pattern,
                                              MotionParams::zero(rec.pattern.S, spacing));
      const ModelBasedResult res =
          model_based_gt(rec.y, rec.coils, rec.pattern, rec.m_true, lambda, 40);
      x_hat = res.img;
      outcome = {{"final_rel_residual", res.final_rel_residual},
                 {"points_dropped", res.points_dropped}};
    } else if (a.backend == "arc") {
      x_hat = rss_recon(arc_interp(rec.y, rec.pattern));
      outcome = json::object();
    } else if (a.backend == "conv") {
      x_hat = conv.forward(rec.y, rec.pattern);
      outcome = json::object();
    } else if (a.backend == "hypernet-gt") {
      x_hat = hn_gt_eval(rec.y, rec.pattern, rec.m_true, hyper);
      outcome = json::object();
    } else if (a.backend == "hypernet" || a.backend == "model-based") {
      OptimizerConfig rec_cfg = oc;
      rec_cfg.seed = derive_stream(oc.seed, static_cast<std::uint64_t>(i));
      Reconstructor recon;
      if (a.backend == "hypernet") {
        recon = make_hypernet_reconstructor(rec.y, rec.coils, rec.pattern, hyper);
      } else {
        ModelBasedBackendConfig bc;
        bc.lambda = a.lambda;
        recon = make_model_based_reconstructor(rec.y, rec.coils, rec.pattern, spacing, bc);
      }
      const CorrectionOutcome out =
          estimate_motion(rec.y, rec.coils, rec.pattern, spacing, recon, rec_cfg);
      x_hat = out.x_hat;
      outcome = outcome_to_json(out);
      for (std::size_t t = 0; t < out.trials.size(); ++t) {
        char trace[40];
        std::snprintf(trace, sizeof(trace), "trace_trial%zu.csv", t);
        write_trial_trace_csv((rdir / trace).string(), out.trials[t]);
      }
    } else {
      throw ConfigError("correct: unknown backend " + a.backend);
    }
    write_tensor_real(
        (rdir / "xhat.mtns").string(),
        {static_cast<std::size_t>(x_hat.rows()), static_cast<std::size_t>(x_hat.cols())},
        std::vector<double>(x_hat.data(), x_hat.data() + x_hat.size()));
    std::ofstream f(rdir / "outcome.json");
    f << outcome.dump(2) << "\n";
  });

  json index = {{"backend", a.backend}, {"split", a.split}, {"records", labels}};
  std::ofstream f(fs::path(a.out) / "index.json");
  f << index.dump(2) << "\n";
  write_run_json(a.out, "correct", resolved);
  std::cout << "correct: " << a.backend << " outputs for " << n << " records in " << a.out
            << "\n";
  return 0;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string corpus, split = "test", out_csv = "metrics.csv", out_json = "summary.json";
  std::vector<std::string> runs;
  std::vector<std::string> baselines;
  int threads = 1;
};

int cmd_evaluate(const EvaluateArgs& a) {
  require_corpus(a.corpus);
  if (a.runs.empty()) throw ConfigError("evaluate: at least one --run required");
  const Corpus corpus = load_corpus(a.corpus);
  const auto records = corpus_split(corpus, a.split);

  // Correct runs store outputs by split position.
  std::map<const SimRecord*, int> position;
  for (std::size_t i = 0; i < records.size(); ++i) position[records[i]] = static_cast<int>(i);

  std::vector<std::pair<std::string, Method>> methods;
  for (const std::string& run : a.runs) {
    if (!fs::exists(fs::path(run) / "run.json"))
      throw ConfigError("evaluate: not a run directory: " + run);
    const json run_meta = load_json_file((fs::path(run) / "run.json").string());
    const std::string backend = run_meta.at("config").value("backend", "unknown");
    const std::string label = backend == "hypernet"        ? "HN"
                              : backend == "hypernet-gt"   ? "HN-GT"
                              : backend == "model-based"   ? "MB"
                              : backend == "model-based-gt" ? "Model-Based-GT"
                              : backend == "conv"          ? "Conv"
                              : backend == "arc"           ? "ARC"
                                                           : backend;
    methods.push_back({label, [run, &position](const SimRecord& rec) -> MethodOutput {
                         char name[32];
                         std::snprintf(name, sizeof(name), "rec_%05d", position.at(&rec));
                         const fs::path rdir = fs::path(run) / name;
                         MethodOutput out{read_image((rdir / "xhat.mtns").string()), false};
                         std::ifstream f(rdir / "outcome.json");
                         if (f) out.rejected = json::parse(f).value("rejected", false);
                         return out;
                       }});
  }

  const json resolved = {{"corpus", a.corpus},       {"split", a.split},
                         {"runs", a.runs},           {"baselines", a.baselines},
                         {"out_csv", a.out_csv},     {"out_json", a.out_json},
                         {"threads", a.threads}};

  const EvalTable table = evaluate_methods(records, methods, a.baselines, a.threads);
  write_metrics_csv(a.out_csv, table);
  write_metrics_json(a.out_json, table);
  const fs::path run_dir = fs::path(a.out_csv).parent_path();
  write_run_json(run_dir.empty() ? "." : run_dir.string(), "evaluate", resolved);

  for (const auto& s : table.summary)
    std::cout << "evaluate: " << s.method << " mean ssim " << s.mean_ssim << " over " << s.n
              << " records (" << s.n_rejected << " rejected, " << s.n_failed << " failed)\n";
  return 0;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::string corpus, summary, out;
  std::vector<std::string> runs;
  std::string split = "test";
  int n_images = 3;
};

int cmd_report(const ReportArgs& a) {
  require_corpus(a.corpus);
  const Corpus corpus = load_corpus(a.corpus);
  const auto records = corpus_split(corpus, a.split);
  fs::create_directories(a.out);

  std::ofstream md(fs::path(a.out) / "report.md");
  md << "# moco report\n\n";
  if (!a.summary.empty()) {
    const json summary = load_json_file(a.summary);
    md << "| method | n | rejected | mean SSIM | mean MSE | mean PSNR |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const auto& s : summary)
      md << "| " << s.at("method").get<std::string>() << " | " << s.at("n") << " | "
         << s.at("n_rejected") << " | " << s.at("mean_ssim") << " | " << s.at("mean_mse")
         << " | " << s.at("mean_psnr") << " |\n";
    md << "\n";
  }

  const int n_img = std::min<int>(a.n_images, static_cast<int>(records.size()));
  for (int i = 0; i < n_img; ++i) {
    const SimRecord& rec = *records[static_cast<std::size_t>(i)];
    const RealArray ref = rec.x_ref.abs();
    const double peak = ref.maxCoeff();
    char name[64];
    std::snprintf(name, sizeof(name), "rec_%05d_reference", i);
    write_pgm((fs::path(a.out) / (std::string(name) + ".pgm")).string(), ref, peak);
    write_png((fs::path(a.out) / (std::string(name) + ".png")).string(), ref, peak);
    std::snprintf(name, sizeof(name), "rec_%05d_corrupted", i);
    const RealArray corrupted = rss_recon(arc_interp(rec.y, rec.pattern));
    write_pgm((fs::path(a.out) / (std::string(name) + ".pgm")).string(), corrupted, peak);
    write_png((fs::path(a.out) / (std::string(name) + ".png")).string(), corrupted, peak);
    md << "- rec_" << i << ": reference, corrupted";

    for (const std::string& run : a.runs) {
      char rname[32];
      std::snprintf(rname, sizeof(rname), "rec_%05d", i);
      const fs::path xhat_path = fs::path(run) / rname / "xhat.mtns";
      if (!fs::exists(xhat_path)) continue;
      const RealArray img = read_image(xhat_path.string());
      const std::string run_tag = fs::path(run).filename().string();
      std::snprintf(name, sizeof(name), "rec_%05d_%s", i, run_tag.c_str());
      write_pgm((fs::path(a.out) / (std::string(name) + ".pgm")).string(), img, peak);
      write_png((fs::path(a.out) / (std::string(name) + ".png")).string(), img, peak);
      const RealArray err = (img - ref).abs();
      std::snprintf(name, sizeof(name), "rec_%05d_%s_err", i, run_tag.c_str());
      write_pgm((fs::path(a.out) / (std::string(name) + ".pgm")).string(), err, peak);
      write_png((fs::path(a.out) / (std::string(name) + ".png")).string(), err, peak);
      md << ", " << run_tag;
    }
    md << "\n";
  }
  const json resolved = {{"corpus", a.corpus},
                         {"summary", a.summary},
                         {"runs", a.runs},
                         {"split", a.split},
                         {"n_images", a.n_images}};
  write_run_json(a.out, "report", resolved);
  std::cout << "report: written to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-shot MRI rigid motion simulation and correction"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "generate a simulated corpus");
  sim->add_option("--out", sim_args.out, "output corpus directory")->required();
  sim->add_option("--config", sim_args.config_path, "JSON config file");
  sim->add_option("--seed", sim_args.cfg.seed, "corpus seed");
  sim->add_option("--height", sim_args.cfg.H, "image rows");
  sim->add_option("--width", sim_args.cfg.W, "image cols");
  sim->add_option("--coils", sim_args.cfg.C, "coil count");
  sim->add_option("--shots", sim_args.cfg.S, "shot count");
  sim->add_option("--accel", sim_args.cfg.R, "acceleration factor");
  sim->add_option("--acs", sim_args.cfg.acs, "calibration rows");
  sim->add_option("--noise-frac", sim_args.cfg.noise_frac, "noise energy fraction");
  sim->add_option("--train", sim_args.cfg.n_train, "training records");
  sim->add_option("--val", sim_args.cfg.n_val, "validation records");
  sim->add_option("--test", sim_args.cfg.n_test, "test records");
  sim->add_option("--phantom", sim_args.cfg.phantom, "shepp-logan | random-ellipses");
  sim->add_option("--margin", sim_args.cfg.margin, "phantom support margin (pixels)");
  sim->add_option("--threads", sim_args.threads, "worker threads");

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "train the reconstruction network");
  tr->add_option("--corpus", train_args.corpus, "corpus directory")->required();
  tr->add_option("--out", train_args.out, "model output directory")->required();
  tr->add_option("--mode", train_args.mode, "hypernet | conv");
  tr->add_option("--split", train_args.split, "corpus split");
  tr->add_option("--iters", train_args.tc.iters, "training iterations");
  tr->add_option("--batch", train_args.tc.batch, "batch size");
  tr->add_option("--lr", train_args.tc.lr, "learning rate");
  tr->add_option("--seed", train_args.tc.seed, "training seed");
  tr->add_option("--features", train_args.features, "subnetwork feature channels");
  tr->add_option("--hidden", train_args.hidden, "hypernetwork hidden units");
  tr->add_option("--layers", train_args.layers, "hypernetwork hidden layers");

  CorrectArgs cor_args;
  auto* cor =
      app.add_subcommand("correct", "reconstruct records (with or without motion search)");
  cor->add_option("--corpus", cor_args.corpus, "corpus directory")->required();
  cor->add_option("--out", cor_args.out, "output directory")->required();
  cor->add_option("--backend", cor_args.backend,
                  "hypernet | model-based | hypernet-gt | model-based-gt | conv | arc");
  cor->add_option("--model", cor_args.model, "trained model directory");
  cor->add_option("--split", cor_args.split, "corpus split");
  cor->add_option("--trials", cor_args.oc.trials, "gradient descent trials");
  cor->add_option("--iters", cor_args.oc.iters, "iterations per trial");
  cor->add_option("--schedule", cor_args.schedule, "cyclic-exp:hi,lo,period | constant:step");
  cor->add_option("--reject-threshold", cor_args.oc.reject_threshold, "dc rejection threshold");
  cor->add_option("--seed", cor_args.oc.seed, "trial seed");
  cor->add_option("--lambda", cor_args.lambda, "model-based Tikhonov weight (<0 = auto)");
  cor->add_option("--threads", cor_args.threads, "worker threads");

  EvaluateArgs eval_args;
  auto* ev = app.add_subcommand("evaluate", "score correction runs against the reference");
  ev->add_option("--corpus", eval_args.corpus, "corpus directory")->required();
  ev->add_option("--run", eval_args.runs, "correct-run directory (repeatable)")->required();
  ev->add_option("--split", eval_args.split, "corpus split");
  ev->add_option("--out-csv", eval_args.out_csv, "per-record metrics CSV");
  ev->add_option("--out-json", eval_args.out_json, "summary JSON");
  ev->add_option("--baseline", eval_args.baselines, "method name for SSIM deltas");
  ev->add_option("--threads", eval_args.threads, "worker threads");

  ReportArgs rep_args;
  auto* rep = app.add_subcommand("report", "render a summary with image dumps");
  rep->add_option("--corpus", rep_args.corpus, "corpus directory")->required();
  rep->add_option("--out", rep_args.out, "report directory")->required();
  rep->add_option("--summary", rep_args.summary, "summary JSON from evaluate");
  rep->add_option("--run", rep_args.runs, "correct-run directory (repeatable)");
  rep->add_option("--split", rep_args.split, "corpus split");
  rep->add_option("--images", rep_args.n_images, "records to render");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (tr->parsed()) return cmd_train(train_args);
    if (cor->parsed()) return cmd_correct(cor_args);
    if (ev->parsed()) return cmd_evaluate(eval_args);
    if (rep->parsed()) return cmd_report(rep_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
