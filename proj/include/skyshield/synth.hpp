#pragma once

#include <filesystem>

#include "skyshield/event.hpp"
#include "skyshield/types.hpp"

namespace skyshield {

/// Polyline obstacle; its segments emit events with the same dual-polarity
/// model as the target line, only the ground-truth mask tells them apart.
struct ClutterEdge {
  std::vector<Eigen::Vector2d> vertices;
  double thickness_px = 2.0;
};

struct SceneSpec {
  int width = 128;
  int height = 128;
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> line_segments;
  double line_thickness_px = 1.0;
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();  // px/s, whole scene
  std::uint64_t duration_us = 250000;
  std::vector<ClutterEdge> clutter_edges;
  double noise_rate = 0.0;  // events / pixel / second
  double contrast_threshold_jitter_us = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class EventOrigin : std::uint8_t { line, clutter, noise };

struct LabeledSample {
  EventRecording recording;
  Mask gt_mask;  // line at t_ref, thin
  std::uint64_t t_ref_us = 0;
  std::vector<EventOrigin> origins;  // parallel to recording.events
};

/// Deterministic sample synthesis: a moving edge entering a pixel emits a
/// positive event, leaving it emits a negative one, so a thin line produces
/// the paired leading/trailing bands; uniform noise has coin-flip polarity.
LabeledSample generate_sample(const SceneSpec& spec);

struct ManifestEntry {
  std::filesystem::path recording;
  std::filesystem::path mask;
  std::uint64_t t_ref_us = 0;
  SceneSpec spec;
};

/// Writes one recording + mask pair per spec plus manifest.jsonl; byte
/// identical for identical specs. Returns the manifest path.
std::filesystem::path generate_dataset(const std::vector<SceneSpec>& specs,
                                       const std::filesystem::path& out_dir);

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& manifest_path);

// Scene recipes shared by the CLI and the evaluation harness.

/// Single clean line sweeping the frame, no clutter or noise.
SceneSpec clean_line_scene(int width, int height, std::uint64_t seed);

/// Randomized line + jagged clutter polylines + uniform noise.
SceneSpec mixed_scene(int width, int height, std::uint64_t seed);

/// count independent mixed scenes, seeds derived from base_seed.
std::vector<SceneSpec> mixed_scene_batch(int count, int width, int height,
                                         std::uint64_t base_seed);

}  // namespace skyshield
