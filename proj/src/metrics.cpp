#include "moco/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "moco/parallel.hpp"
#include "moco/ssim.hpp"

namespace moco {

double mse(const RealArray& a, const RealArray& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("mse: shape mismatch");
  return (a - b).square().mean();
}

double psnr(const RealArray& a, const RealArray& b, double peak) {
  if (peak <= 0.0) throw ParameterError("psnr: peak must be > 0");
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

EvalTable evaluate_methods(const std::vector<const SimRecord*>& records,
                           const std::vector<std::pair<std::string, Method>>& methods,
                           const std::vector<std::string>& baselines, int threads) {
  const int n_rec = static_cast<int>(records.size());
  const int n_met = static_cast<int>(methods.size());
  EvalTable table;
  table.rows.resize(static_cast<std::size_t>(n_rec * n_met));

  parallel_for(n_rec, threads, [&](int ri) {
    const SimRecord& rec = *records[static_cast<std::size_t>(ri)];
    const RealArray ref = rec.x_ref.abs();
    const double peak = ref.maxCoeff();
    const RealArray ref_n = ref / peak;
    for (int mi = 0; mi < n_met; ++mi) {
      RecordMetrics& row = table.rows[static_cast<std::size_t>(ri * n_met + mi)];
      row.record_id = ri;
      row.method = methods[static_cast<std::size_t>(mi)].first;
      try {
        const MethodOutput out = methods[static_cast<std::size_t>(mi)].second(rec);
        const RealArray img_n = out.img / peak;
        row.ssim = ssim(img_n, ref_n, 1.0);
        row.mse = mse(img_n, ref_n);
        row.psnr = psnr(img_n, ref_n, 1.0);
        row.rejected = out.rejected;
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
      }
    }
  });

  // Per-record SSIM lookup for the improvement deltas.
  auto ssim_of = [&](const std::string& method, int ri) -> std::optional<double> {
    for (const auto& row : table.rows)
      if (row.method == method && row.record_id == ri && !row.failed) return row.ssim;
    return std::nullopt;
  };

  auto summarize = [&](const std::string& name, const std::string& source,
                       bool accepted_only) {
    MethodSummary s;
    s.method = name;
    for (const auto& row : table.rows) {
      if (row.method != source) continue;
      if (row.failed) {
        s.n_failed++;
        continue;
      }
      if (row.rejected) s.n_rejected++;
      if (accepted_only && row.rejected) continue;
      s.n++;
      s.mean_ssim += row.ssim;
      s.mean_mse += row.mse;
      s.mean_psnr += row.psnr;
      for (const auto& base : baselines) {
        if (base == source) continue;
        if (auto bs = ssim_of(base, row.record_id))
          s.ssim_delta_vs[base] += row.ssim - *bs;
      }
    }
    if (s.n > 0) {
      s.mean_ssim /= s.n;
      s.mean_mse /= s.n;
      s.mean_psnr /= s.n;
      for (auto& [k, v] : s.ssim_delta_vs) v /= s.n;
    }
    table.summary.push_back(std::move(s));
  };

  for (const auto& [name, fn] : methods) {
    (void)fn;
    summarize(name, name, false);
    bool any_rejection = false;
    for (const auto& row : table.rows)
      if (row.method == name && row.rejected) any_rejection = true;
    if (any_rejection) summarize(name + "-R", name, true);
  }
  return table;
}

void write_metrics_csv(const std::string& path, const EvalTable& table) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << "record_id,method,ssim,mse,psnr,rejected\n";
  f.precision(12);
  for (const auto& row : table.rows) {
    if (row.failed) {
      f << row.record_id << "," << row.method << ",,,," << "failed\n";
      continue;
    }
    f << row.record_id << "," << row.method << "," << row.ssim << "," << row.mse << ","
      << row.psnr << "," << (row.rejected ? "true" : "false") << "\n";
  }
}

void write_metrics_json(const std::string& path, const EvalTable& table) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : table.summary) {
    nlohmann::json deltas = nlohmann::json::object();
    for (const auto& [k, v] : s.ssim_delta_vs) deltas[k] = v;
    j.push_back({{"method", s.method},
                 {"n", s.n},
                 {"n_rejected", s.n_rejected},
                 {"n_failed", s.n_failed},
                 {"mean_ssim", s.mean_ssim},
                 {"mean_mse", s.mean_mse},
                 {"mean_psnr", std::isfinite(s.mean_psnr) ? s.mean_psnr : 1e9},
                 {"ssim_delta_vs", deltas}});
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << j.dump(2) << "\n";
}

}  // namespace moco
