#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moco/sim.hpp"
#include "moco/types.hpp"

namespace moco {

double mse(const RealArray& a, const RealArray& b);

// 10 log10(peak^2 / mse); identical images report +infinity.
double psnr(const RealArray& a, const RealArray& b, double peak);

// A method maps a record to a magnitude image; methods with a rejection rule
// set `rejected` and still report the image.
struct MethodOutput {
  RealArray img;
  bool rejected = false;
};
using Method = std::function<MethodOutput(const SimRecord&)>;

struct RecordMetrics {
  int record_id = 0;
  std::string method;
  double ssim = 0.0, mse = 0.0, psnr = 0.0;
  bool rejected = false;
  bool failed = false;
  std::string error;
};

struct MethodSummary {
  std::string method;
  int n = 0, n_rejected = 0, n_failed = 0;
  double mean_ssim = 0.0, mean_mse = 0.0, mean_psnr = 0.0;
  // Mean per-record SSIM improvement over each named baseline method.
  std::map<std::string, double> ssim_delta_vs;
};

struct EvalTable {
  std::vector<RecordMetrics> rows;
  std::vector<MethodSummary> summary;
};

// Per-record and aggregate SSIM/MSE/PSNR per method. Magnitude images are
// normalized by the reference max; PSNR peak is the reference max. A method
// whose outputs carry rejection flags additionally yields a "<name>-R"
// summary restricted to the accepted records (with the rejection count).
// Method failures are recorded per record, not fatal.
EvalTable evaluate_methods(const std::vector<const SimRecord*>& records,
                           const std::vector<std::pair<std::string, Method>>& methods,
                           const std::vector<std::string>& baselines = {},
                           int threads = 1);

void write_metrics_csv(const std::string& path, const EvalTable& table);
void write_metrics_json(const std::string& path, const EvalTable& table);

}  // namespace moco
