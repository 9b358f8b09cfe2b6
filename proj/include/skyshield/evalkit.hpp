#pragma once

#include <filesystem>
#include <string>

#include "skyshield/hough.hpp"
#include "skyshield/lunet.hpp"
#include "skyshield/metrics.hpp"
#include "skyshield/pipeline.hpp"

namespace skyshield {

/// oracle and empty are test hooks bounding the score range: oracle feeds
/// the ground truth back as the prediction, empty predicts nothing.
enum class EvalMethod { lunet, hough, oracle, empty };

std::string to_string(EvalMethod method);

struct EvalItem {
  EventRecording recording;
  Mask gt_mask;
  std::uint64_t t_ref_us = 0;
};

struct EvalConfig {
  PreprocessParams prep;
  double binarize_threshold = 0.5;
  int warmup_runs = 3;
};

struct SampleScore {
  double iou = 0;
  double dice = 0;
  double infer_ms = 0;
};

struct EvalReport {
  std::string method;
  std::vector<SampleScore> samples;
  double mean_iou = 0;
  double mean_dice = 0;
  double mean_infer_ms = 0;
  std::string machine;
  std::string config_snapshot;  // JSON text
};

/// Scores one method over the dataset; latency covers the inference call
/// only (warm-up runs excluded).
EvalReport run_eval(EvalMethod method, const std::vector<EvalItem>& items,
                    const EvalConfig& config, const LUnetModel<float>* model = nullptr,
                    const HoughParams* hough = nullptr);

/// Writes report.json and the table-style report.txt under out_dir.
void write_report(const std::vector<EvalReport>& reports,
                  const std::filesystem::path& out_dir);

std::vector<EvalItem> load_eval_items(const std::vector<ManifestEntry>& entries);

struct LatencyStats {
  double mean_ms = 0;
  double p50_ms = 0;
  double p95_ms = 0;
};

struct StageBreakdown {
  double stc_filter_ms = 0;
  double surface_ms = 0;
  double inference_ms = 0;
  double binarize_ms = 0;
};

struct LatencyReport {
  std::string method;
  int width = 0, height = 0;
  int repeats = 0;
  LatencyStats stats;        // inference call only
  StageBreakdown stages;     // per-stage means over the repeats
  std::string machine;
};

/// Wall-clock statistics on a synthetic scene of the given size;
/// >= 3 warm-up iterations are dropped, repeats is clamped up to 10.
LatencyReport bench_latency(EvalMethod method, int width, int height, int repeats,
                            const EvalConfig& config,
                            const LUnetModel<float>* model = nullptr,
                            const HoughParams* hough = nullptr);

std::string machine_descriptor();

}  // namespace skyshield
