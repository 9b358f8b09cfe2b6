#include "skyshield/evalkit.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "skyshield/event_io.hpp"
#include "skyshield/image_io.hpp"

namespace skyshield {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

nlohmann::json config_json(const EvalConfig& c) {
  nlohmann::json j;
  j["stc_enabled"] = c.prep.stc_enabled;
  j["stc_radius_px"] = c.prep.stc.radius_px;
  j["stc_window_us"] = c.prep.stc.window_us;
  j["stc_min_support"] = c.prep.stc.min_support;
  j["stc_causality"] = c.prep.causality == StcCausality::causal ? "causal" : "bidirectional";
  j["tau_us"] = c.prep.tau_us;
  j["window_us"] = c.prep.window_us;
  j["polarity"] = c.prep.polarity == PolarityMode::separate ? "separate" : "merged";
  j["binarize_threshold"] = c.binarize_threshold;
  j["warmup_runs"] = c.warmup_runs;
  j["latency_scope"] = "inference call only";
  return j;
}

Planes<float> model_input(const TimeSurfacePair& split, const TimeSurface& merged,
                          int in_channels) {
  Planes<float> planes;
  if (in_channels == 2) {
    planes.push_back(split.pos.values.cast<float>());
    planes.push_back(split.neg.values.cast<float>());
  } else {
    planes.push_back(merged.values.cast<float>());
  }
  return planes;
}

}  // namespace

std::string to_string(EvalMethod method) {
  switch (method) {
    case EvalMethod::lunet: return "lunet";
    case EvalMethod::hough: return "hough";
    case EvalMethod::oracle: return "oracle";
    case EvalMethod::empty: return "empty";
  }
  return "unknown";
}

std::vector<EvalItem> load_eval_items(const std::vector<ManifestEntry>& entries) {
  std::vector<EvalItem> items;
  items.reserve(entries.size());
  for (const ManifestEntry& e : entries) {
    items.push_back(EvalItem{read_recording(e.recording), read_mask_pgm(e.mask), e.t_ref_us});
  }
  return items;
}

EvalReport run_eval(EvalMethod method, const std::vector<EvalItem>& items,
                    const EvalConfig& config, const LUnetModel<float>* model,
                    const HoughParams* hough) {
  if (items.empty()) raise(ErrorCode::EmptyDataset, "run_eval needs at least one sample");
  if (method == EvalMethod::lunet && model == nullptr) {
    raise(ErrorCode::MissingModel, "lunet evaluation needs a trained model");
  }
  if (method == EvalMethod::hough && hough == nullptr) {
    raise(ErrorCode::MissingModel, "hough evaluation needs tuned parameters");
  }

  EvalReport report;
  report.method = to_string(method);
  report.machine = machine_descriptor();
  nlohmann::json snapshot = config_json(config);
  if (method == EvalMethod::hough) {
    snapshot["hough"] = {{"rho_step", hough->rho_step},
                         {"theta_step", hough->theta_step},
                         {"accumulator_threshold", hough->accumulator_threshold},
                         {"binarize_threshold", hough->binarize_threshold},
                         {"line_raster_thickness", hough->line_raster_thickness}};
  }
  if (method == EvalMethod::lunet) {
    snapshot["lunet"] = {{"in_channels", model->config.in_channels},
                         {"base_channels", model->config.base_channels},
                         {"depth", model->config.depth},
                         {"parameters", count_parameters(model->config)}};
  }
  report.config_snapshot = snapshot.dump();

  bool warmed_up = false;
  for (const EvalItem& item : items) {
    Mask pred;
    double infer_ms = 0;

    switch (method) {
      case EvalMethod::lunet: {
        const TimeSurfacePair split =
            preprocessed_surface_split(item.recording, item.t_ref_us, config.prep);
        const TimeSurface merged =
            model->config.in_channels == 1
                ? preprocessed_surface(item.recording, item.t_ref_us, config.prep)
                : TimeSurface{};
        const Planes<float> input = model_input(split, merged, model->config.in_channels);
        if (!warmed_up) {
          for (int i = 0; i < config.warmup_runs; ++i) forward(*model, input);
          warmed_up = true;
        }
        const auto start = Clock::now();
        const ImageF heat = forward(*model, input);
        infer_ms = ms_since(start);
        pred = binarize(heat, config.binarize_threshold);
        break;
      }
      case EvalMethod::hough: {
        const TimeSurface surface =
            preprocessed_surface(item.recording, item.t_ref_us, config.prep);
        if (!warmed_up) {
          for (int i = 0; i < config.warmup_runs; ++i) hough_detect(surface, *hough);
          warmed_up = true;
        }
        const auto start = Clock::now();
        pred = hough_detect(surface, *hough);
        infer_ms = ms_since(start);
        break;
      }
      case EvalMethod::oracle:
        pred = item.gt_mask;
        break;
      case EvalMethod::empty:
        pred = Mask::Zero(item.gt_mask.rows(), item.gt_mask.cols());
        break;
    }

    SampleScore score;
    score.iou = iou(pred, item.gt_mask);
    score.dice = dice(pred, item.gt_mask);
    score.infer_ms = infer_ms;
    report.samples.push_back(score);
  }

  for (const SampleScore& s : report.samples) {
    report.mean_iou += s.iou;
    report.mean_dice += s.dice;
    report.mean_infer_ms += s.infer_ms;
  }
  const double n = double(report.samples.size());
  report.mean_iou /= n;
  report.mean_dice /= n;
  report.mean_infer_ms /= n;
  return report;
}

void write_report(const std::vector<EvalReport>& reports,
                  const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  nlohmann::json j = nlohmann::json::array();
  for (const EvalReport& r : reports) {
    nlohmann::json jr;
    jr["method"] = r.method;
    jr["machine"] = r.machine;
    jr["config"] = nlohmann::json::parse(r.config_snapshot);
    jr["aggregates"] = {{"mean_iou", r.mean_iou},
                        {"mean_dice", r.mean_dice},
                        {"mean_inference_ms", r.mean_infer_ms}};
    auto samples = nlohmann::json::array();
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      samples.push_back({{"index", i},
                         {"iou", r.samples[i].iou},
                         {"dice", r.samples[i].dice},
                         {"infer_ms", r.samples[i].infer_ms}});
    }
    jr["samples"] = samples;
    j.push_back(jr);
  }
  {
    std::ofstream out(out_dir / "report.json", std::ios::trunc);
    if (!out) raise(ErrorCode::IoFailure, "cannot open report.json");
    out << j.dump(2) << "\n";
  }

  std::ofstream txt(out_dir / "report.txt", std::ios::trunc);
  if (!txt) raise(ErrorCode::IoFailure, "cannot open report.txt");
  char buf[128];
  txt << "Method    Mean IoU   Mean Dice  Mean Inference Time\n";
  for (const EvalReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%-9s %-10.4f %-10.4f %.2f ms\n", r.method.c_str(),
                  r.mean_iou, r.mean_dice, r.mean_infer_ms);
    txt << buf;
  }
}

std::string machine_descriptor() {
  std::string desc;
  utsname uts{};
  if (uname(&uts) == 0) {
    desc += uts.sysname;
    desc += " ";
    desc += uts.release;
    desc += " ";
    desc += uts.machine;
  }
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto pos = line.find(':');
      if (pos != std::string::npos) {
        desc += ", " + line.substr(pos + 2);
      }
      break;
    }
  }
  desc += ", " + std::to_string(std::thread::hardware_concurrency()) + " hw threads";
  return desc;
}

LatencyReport bench_latency(EvalMethod method, int width, int height, int repeats,
                            const EvalConfig& config, const LUnetModel<float>* model,
                            const HoughParams* hough) {
  repeats = std::max(repeats, 10);
  const int warmups = std::max(config.warmup_runs, 3);

  LatencyReport report;
  report.method = to_string(method);
  report.width = width;
  report.height = height;
  report.repeats = repeats;
  report.machine = machine_descriptor();

  // representative input: one mixed scene at the requested geometry
  const LabeledSample sample = generate_sample(mixed_scene(width, height, 17));
  const std::uint64_t t_ref = sample.t_ref_us;

  std::vector<double> infer_times;
  infer_times.reserve(std::size_t(repeats));
  double stc_total = 0, surface_total = 0, binarize_total = 0;

  HoughParams default_hough;
  if (method == EvalMethod::hough && hough != nullptr) default_hough = *hough;
  ImageF heat;

  for (int i = -warmups; i < repeats; ++i) {
    auto start = Clock::now();
    const EventRecording pre = preprocess_events(sample.recording, t_ref, config.prep);
    const double stc_ms = ms_since(start);

    start = Clock::now();
    const TimeSurfacePair split = build_time_surface_split(pre, t_ref, config.prep.tau_us);
    const TimeSurface merged = build_time_surface(pre, t_ref, config.prep.tau_us);
    const double surface_ms = ms_since(start);

    double infer_ms = 0;
    Mask pred;
    switch (method) {
      case EvalMethod::lunet: {
        if (model == nullptr) raise(ErrorCode::MissingModel, "bench needs a model");
        const Planes<float> input = model_input(split, merged, model->config.in_channels);
        start = Clock::now();
        heat = forward(*model, input);
        infer_ms = ms_since(start);
        start = Clock::now();
        pred = binarize(heat, config.binarize_threshold);
        break;
      }
      case EvalMethod::hough: {
        start = Clock::now();
        pred = hough_detect(merged, default_hough);
        infer_ms = ms_since(start);
        start = Clock::now();
        break;
      }
      case EvalMethod::oracle:
      case EvalMethod::empty: {
        start = Clock::now();
        pred = method == EvalMethod::oracle
                   ? sample.gt_mask
                   : Mask::Zero(sample.gt_mask.rows(), sample.gt_mask.cols());
        infer_ms = ms_since(start);
        start = Clock::now();
        break;
      }
    }
    const double binarize_ms = ms_since(start);

    if (i >= 0) {
      infer_times.push_back(infer_ms);
      stc_total += stc_ms;
      surface_total += surface_ms;
      binarize_total += binarize_ms;
    }
  }

  std::vector<double> sorted = infer_times;
  std::sort(sorted.begin(), sorted.end());
  const auto quantile = [&sorted](double q) {
    const double pos = q * double(sorted.size() - 1);
    const std::size_t lo = std::size_t(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - double(lo)) * (sorted[hi] - sorted[lo]);
  };
  for (double t : infer_times) report.stats.mean_ms += t;
  report.stats.mean_ms /= double(infer_times.size());
  report.stats.p50_ms = quantile(0.5);
  report.stats.p95_ms = quantile(0.95);

  report.stages.stc_filter_ms = stc_total / double(repeats);
  report.stages.surface_ms = surface_total / double(repeats);
  report.stages.inference_ms = report.stats.mean_ms;
  report.stages.binarize_ms = binarize_total / double(repeats);
  return report;
}

}  // namespace skyshield
