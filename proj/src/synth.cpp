#include "skyshield/synth.hpp"
#include <optional>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "skyshield/event_io.hpp"
#include "skyshield/image_io.hpp"

namespace skyshield {

namespace {

double point_segment_distance(const Eigen::Vector2d& q, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  const Eigen::Vector2d e = b - a;
  const double len2 = e.squaredNorm();
  if (len2 == 0) return (q - a).norm();
  const double s = std::clamp((q - a).dot(e) / len2, 0.0, 1.0);
  return (q - (a + s * e)).norm();
}

// d(t) = dist(q - vel*t, [a,b]) is convex in t: a moving point against a
// convex set. The covered span {t : d(t) <= hw} is therefore one interval.
struct CoverInterval {
  double t_in = 0, t_out = 0;
  bool covered_at_start = false, covered_at_end = false;
};

std::optional<CoverInterval> coverage_interval(const Eigen::Vector2d& q,
                                               const Eigen::Vector2d& a,
                                               const Eigen::Vector2d& b,
                                               const Eigen::Vector2d& vel, double hw,
                                               double t1) {
  const auto dist_at = [&](double t) {
    return point_segment_distance(q - vel * t, a, b);
  };

  double lo = 0, hi = t1;
  for (int i = 0; i < 60; ++i) {
    const double m1 = lo + (hi - lo) / 3;
    const double m2 = hi - (hi - lo) / 3;
    if (dist_at(m1) <= dist_at(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const double t_min = (lo + hi) / 2;
  if (dist_at(t_min) > hw) return std::nullopt;

  CoverInterval ci;
  ci.covered_at_start = dist_at(0) <= hw;
  ci.covered_at_end = dist_at(t1) <= hw;

  if (ci.covered_at_start) {
    ci.t_in = 0;
  } else {
    double l = 0, h = t_min;  // d(l) > hw >= d(h)
    for (int i = 0; i < 50; ++i) {
      const double m = (l + h) / 2;
      (dist_at(m) > hw ? l : h) = m;
    }
    ci.t_in = h;
  }
  if (ci.covered_at_end) {
    ci.t_out = t1;
  } else {
    double l = t_min, h = t1;  // d(l) <= hw < d(h)
    for (int i = 0; i < 50; ++i) {
      const double m = (l + h) / 2;
      (dist_at(m) <= hw ? l : h) = m;
    }
    ci.t_out = l;
  }
  return ci;
}

struct Emitter {
  const SceneSpec& spec;
  std::mt19937_64& rng;
  std::vector<Event>& events;
  std::vector<EventOrigin>& origins;

  void sweep_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double thickness,
                     EventOrigin origin) {
    const double hw = thickness / 2;
    const double dur_s = double(spec.duration_us) * 1e-6;
    const Eigen::Vector2d a1 = a + spec.velocity * dur_s;
    const Eigen::Vector2d b1 = b + spec.velocity * dur_s;

    const double margin = hw + 1.0;
    const int x0 = std::max(0, int(std::floor(std::min({a.x(), b.x(), a1.x(), b1.x()}) - margin)));
    const int x1 = std::min(spec.width - 1,
                            int(std::ceil(std::max({a.x(), b.x(), a1.x(), b1.x()}) + margin)));
    const int y0 = std::max(0, int(std::floor(std::min({a.y(), b.y(), a1.y(), b1.y()}) - margin)));
    const int y1 = std::min(spec.height - 1,
                            int(std::ceil(std::max({a.y(), b.y(), a1.y(), b1.y()}) + margin)));

    std::uniform_real_distribution<double> jitter(0.0, spec.contrast_threshold_jitter_us);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d q{double(x), double(y)};
        const auto ci = coverage_interval(q, a, b, spec.velocity, hw, dur_s);
        if (!ci) continue;
        if (!ci->covered_at_start) {
          emit(x, y, ci->t_in, +1, jitter, origin);
        }
        if (!ci->covered_at_end) {
          emit(x, y, ci->t_out, -1, jitter, origin);
        }
      }
    }
  }

  void emit(int x, int y, double t_sec, int polarity,
            std::uniform_real_distribution<double>& jitter, EventOrigin origin) {
    const double j = spec.contrast_threshold_jitter_us > 0 ? jitter(rng) : 0.0;
    const double t_us = t_sec * 1e6 + j;
    if (t_us > double(spec.duration_us)) return;
    events.push_back(Event{std::uint64_t(std::llround(std::max(0.0, t_us))),
                           std::uint16_t(x), std::uint16_t(y),
                           std::int8_t(polarity)});
    origins.push_back(origin);
  }
};

Mask rasterize_line_mask(const SceneSpec& spec, double t_ref_sec) {
  Mask mask = Mask::Zero(spec.height, spec.width);
  const double reach = spec.line_thickness_px / 2 + 0.5;
  const Eigen::Vector2d shift = spec.velocity * t_ref_sec;
  for (const auto& [a0, b0] : spec.line_segments) {
    const Eigen::Vector2d a = a0 + shift;
    const Eigen::Vector2d b = b0 + shift;
    const int x0 = std::max(0, int(std::floor(std::min(a.x(), b.x()) - reach)));
    const int x1 = std::min(spec.width - 1, int(std::ceil(std::max(a.x(), b.x()) + reach)));
    const int y0 = std::max(0, int(std::floor(std::min(a.y(), b.y()) - reach)));
    const int y1 = std::min(spec.height - 1, int(std::ceil(std::max(a.y(), b.y()) + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (point_segment_distance({double(x), double(y)}, a, b) <= reach) {
          mask(y, x) = 1;
        }
      }
    }
  }
  return mask;
}

nlohmann::json spec_to_json(const SceneSpec& s) {
  nlohmann::json j;
  j["width"] = s.width;
  j["height"] = s.height;
  auto segs = nlohmann::json::array();
  for (const auto& [a, b] : s.line_segments) {
    segs.push_back({a.x(), a.y(), b.x(), b.y()});
  }
  j["line_segments"] = segs;
  j["line_thickness_px"] = s.line_thickness_px;
  j["velocity"] = {s.velocity.x(), s.velocity.y()};
  j["duration_us"] = s.duration_us;
  auto clutter = nlohmann::json::array();
  for (const auto& c : s.clutter_edges) {
    nlohmann::json jc;
    auto verts = nlohmann::json::array();
    for (const auto& v : c.vertices) verts.push_back({v.x(), v.y()});
    jc["vertices"] = verts;
    jc["thickness_px"] = c.thickness_px;
    clutter.push_back(jc);
  }
  j["clutter_edges"] = clutter;
  j["noise_rate"] = s.noise_rate;
  j["contrast_threshold_jitter_us"] = s.contrast_threshold_jitter_us;
  j["seed"] = s.seed;
  return j;
}

SceneSpec spec_from_json(const nlohmann::json& j) {
  SceneSpec s;
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  for (const auto& seg : j.at("line_segments")) {
    s.line_segments.push_back({Eigen::Vector2d(seg[0].get<double>(), seg[1].get<double>()),
                               Eigen::Vector2d(seg[2].get<double>(), seg[3].get<double>())});
  }
  s.line_thickness_px = j.at("line_thickness_px").get<double>();
  s.velocity = Eigen::Vector2d(j.at("velocity")[0].get<double>(), j.at("velocity")[1].get<double>());
  s.duration_us = j.at("duration_us").get<std::uint64_t>();
  for (const auto& jc : j.at("clutter_edges")) {
    ClutterEdge c;
    for (const auto& v : jc.at("vertices")) {
      c.vertices.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    c.thickness_px = jc.at("thickness_px").get<double>();
    s.clutter_edges.push_back(std::move(c));
  }
  s.noise_rate = j.at("noise_rate").get<double>();
  s.contrast_threshold_jitter_us = j.at("contrast_threshold_jitter_us").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

void SceneSpec::validate() const {
  if (width < 1 || height < 1) raise(ErrorCode::DegenerateSpec, "empty sensor");
  if (!(line_thickness_px > 0)) raise(ErrorCode::DegenerateSpec, "line_thickness_px must be > 0");
  if (noise_rate < 0) raise(ErrorCode::DegenerateSpec, "noise_rate must be >= 0");
  if (duration_us == 0) raise(ErrorCode::DegenerateSpec, "duration_us must be > 0");
  if (contrast_threshold_jitter_us < 0) {
    raise(ErrorCode::DegenerateSpec, "jitter must be >= 0");
  }
  for (const auto& [a, b] : line_segments) {
    if ((a - b).squaredNorm() == 0) raise(ErrorCode::DegenerateSpec, "zero-length line segment");
  }
  if (!line_segments.empty() && velocity.squaredNorm() == 0) {
    raise(ErrorCode::DegenerateSpec, "static line emits no events");
  }
  for (const auto& c : clutter_edges) {
    if (c.vertices.size() < 2) raise(ErrorCode::DegenerateSpec, "clutter polyline needs >= 2 vertices");
    if (!(c.thickness_px > 0)) raise(ErrorCode::DegenerateSpec, "clutter thickness must be > 0");
  }
}

LabeledSample generate_sample(const SceneSpec& spec) {
  spec.validate();

  LabeledSample sample;
  sample.recording.width = std::uint16_t(spec.width);
  sample.recording.height = std::uint16_t(spec.height);
  sample.t_ref_us = spec.duration_us;

  std::mt19937_64 rng(spec.seed);
  Emitter emitter{spec, rng, sample.recording.events, sample.origins};

  for (const auto& [a, b] : spec.line_segments) {
    emitter.sweep_segment(a, b, spec.line_thickness_px, EventOrigin::line);
  }
  for (const auto& c : spec.clutter_edges) {
    for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i) {
      emitter.sweep_segment(c.vertices[i], c.vertices[i + 1], c.thickness_px,
                            EventOrigin::clutter);
    }
  }

  if (spec.noise_rate > 0) {
    const double mean =
        spec.noise_rate * spec.width * spec.height * double(spec.duration_us) * 1e-6;
    std::poisson_distribution<long> count_dist(mean);
    const long n = count_dist(rng);
    std::uniform_int_distribution<int> xs(0, spec.width - 1), ys(0, spec.height - 1);
    std::uniform_int_distribution<std::uint64_t> ts(0, spec.duration_us);
    std::bernoulli_distribution coin(0.5);
    for (long i = 0; i < n; ++i) {
      sample.recording.events.push_back(Event{ts(rng), std::uint16_t(xs(rng)),
                                              std::uint16_t(ys(rng)),
                                              coin(rng) ? std::int8_t(1) : std::int8_t(-1)});
      sample.origins.push_back(EventOrigin::noise);
    }
  }

  // time-sort events and origins together (stable: bursts keep file order)
  std::vector<std::size_t> idx(sample.recording.events.size());
  std::iota(idx.begin(), idx.end(), std::size_t(0));
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return sample.recording.events[i].t < sample.recording.events[j].t;
  });
  std::vector<Event> sorted_events(idx.size());
  std::vector<EventOrigin> sorted_origins(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    sorted_events[i] = sample.recording.events[idx[i]];
    sorted_origins[i] = sample.origins[idx[i]];
  }
  sample.recording.events = std::move(sorted_events);
  sample.origins = std::move(sorted_origins);

  sample.gt_mask = rasterize_line_mask(spec, double(spec.duration_us) * 1e-6);
  return sample;
}

std::filesystem::path generate_dataset(const std::vector<SceneSpec>& specs,
                                       const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const std::filesystem::path manifest_path = out_dir / "manifest.jsonl";
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest) raise(ErrorCode::IoFailure, "cannot open " + manifest_path.string());

  char name[32];
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LabeledSample sample = generate_sample(specs[i]);
    std::snprintf(name, sizeof(name), "sample_%04zu", i);
    const std::string rec_name = std::string(name) + ".skys";
    const std::string mask_name = std::string(name) + ".pgm";
    write_recording(sample.recording, out_dir / rec_name);
    write_mask_pgm(sample.gt_mask, out_dir / mask_name);

    nlohmann::json line;
    line["recording"] = rec_name;
    line["mask"] = mask_name;
    line["t_ref_us"] = sample.t_ref_us;
    line["spec"] = spec_to_json(specs[i]);
    manifest << line.dump() << "\n";
  }
  manifest.flush();
  if (!manifest) raise(ErrorCode::IoFailure, "write failed for " + manifest_path.string());
  return manifest_path;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) raise(ErrorCode::IoFailure, "cannot open " + manifest_path.string());
  const std::filesystem::path dir = manifest_path.parent_path();

  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorCode::MalformedRecord, std::string("bad manifest line: ") + e.what());
    }
    ManifestEntry entry;
    entry.recording = dir / j.at("recording").get<std::string>();
    entry.mask = dir / j.at("mask").get<std::string>();
    entry.t_ref_us = j.at("t_ref_us").get<std::uint64_t>();
    entry.spec = spec_from_json(j.at("spec"));
    entries.push_back(std::move(entry));
  }
  return entries;
}

SceneSpec clean_line_scene(int width, int height, std::uint64_t seed) {
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.line_thickness_px = 1.0;
  spec.velocity = Eigen::Vector2d(0.0, 400.0);
  spec.duration_us = 250000;
  spec.contrast_threshold_jitter_us = 150.0;
  spec.seed = seed;
  // horizontal full-width line entering from the top quarter
  const double y0 = height * 0.25;
  spec.line_segments.push_back(
      {Eigen::Vector2d(-2.0, y0), Eigen::Vector2d(width + 1.0, y0)});
  return spec;
}

SceneSpec mixed_scene(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.duration_us = 250000;
  spec.contrast_threshold_jitter_us = 150.0;
  spec.seed = seed;
  spec.line_thickness_px = 1.0 + unit(rng);

  // the line's pose at t_ref; starting pose is swept backwards from it
  const double angle = unit(rng) * M_PI;
  const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
  const Eigen::Vector2d normal(-dir.y(), dir.x());
  const Eigen::Vector2d anchor(width * (0.3 + 0.4 * unit(rng)),
                               height * (0.3 + 0.4 * unit(rng)));
  const bool full_span = unit(rng) < 0.7;
  const double half_len = full_span ? double(width + height) : 25.0 + 30.0 * unit(rng);

  const double speed = 250.0 + 200.0 * unit(rng);
  const double tilt = (unit(rng) - 0.5) * (M_PI / 3);  // up to +/-30 deg off-normal
  const Eigen::Vector2d vdir = std::cos(tilt) * normal + std::sin(tilt) * dir;
  spec.velocity = speed * ((unit(rng) < 0.5) ? vdir : (-vdir).eval());

  const double dur_s = double(spec.duration_us) * 1e-6;
  const Eigen::Vector2d start_shift = -spec.velocity * dur_s;
  spec.line_segments.push_back(
      {anchor - half_len * dir + start_shift, anchor + half_len * dir + start_shift});

  const int n_clutter = 2 + int(unit(rng) * 3);  // 2..4
  for (int c = 0; c < n_clutter; ++c) {
    ClutterEdge edge;
    edge.thickness_px = 2.0 + unit(rng);
    Eigen::Vector2d v(width * unit(rng), height * unit(rng));
    edge.vertices.push_back(v);
    const int n_seg = 3 + int(unit(rng) * 3);  // 3..5 segments
    double walk = unit(rng) * 2 * M_PI;
    for (int s = 0; s < n_seg; ++s) {
      walk += (unit(rng) - 0.5) * (M_PI * 0.9);
      const double step = 12.0 + 18.0 * unit(rng);
      v += step * Eigen::Vector2d(std::cos(walk), std::sin(walk));
      edge.vertices.push_back(v);
    }
    spec.clutter_edges.push_back(std::move(edge));
  }

  spec.noise_rate = 2.0 + 2.0 * unit(rng);
  return spec;
}

std::vector<SceneSpec> mixed_scene_batch(int count, int width, int height,
                                         std::uint64_t base_seed) {
  std::vector<SceneSpec> specs;
  specs.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    specs.push_back(mixed_scene(width, height, base_seed + std::uint64_t(i) * 1000003ull));
  }
  return specs;
}

}  // namespace skyshield
