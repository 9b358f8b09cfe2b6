#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "skyshield/event.hpp"
#include "skyshield/types.hpp"

// Asserts that expr throws skyshield::Error with the given code.
#define CHECK_RAISES_CODE(expr, expected)                      \
  do {                                                         \
    try {                                                      \
      (void)(expr);                                            \
      FAIL("expected Error with code " #expected);             \
    } catch (const skyshield::Error& e_) {                     \
      CHECK(e_.code() == (expected));                          \
    }                                                          \
  } while (0)

namespace testutil {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("skyshield_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline skyshield::EventRecording random_recording(std::mt19937_64& rng, int width, int height,
                                                  int max_events,
                                                  std::uint64_t max_t = 1000000) {
  std::uniform_int_distribution<int> n_dist(0, max_events);
  std::uniform_int_distribution<int> xd(0, width - 1), yd(0, height - 1);
  std::uniform_int_distribution<std::uint64_t> td(0, max_t);
  std::bernoulli_distribution coin(0.5);

  skyshield::EventRecording rec;
  rec.width = std::uint16_t(width);
  rec.height = std::uint16_t(height);
  const int n = n_dist(rng);
  std::vector<std::uint64_t> times(n);
  for (auto& t : times) t = td(rng);
  std::sort(times.begin(), times.end());
  for (int i = 0; i < n; ++i) {
    rec.events.push_back(skyshield::Event{times[std::size_t(i)], std::uint16_t(xd(rng)),
                                          std::uint16_t(yd(rng)),
                                          coin(rng) ? std::int8_t(1) : std::int8_t(-1)});
  }
  return rec;
}

inline skyshield::Mask random_mask(std::mt19937_64& rng, int height, int width,
                                   double fill = 0.3) {
  std::bernoulli_distribution bit(fill);
  skyshield::Mask m(height, width);
  for (Eigen::Index y = 0; y < m.rows(); ++y) {
    for (Eigen::Index x = 0; x < m.cols(); ++x) m(y, x) = bit(rng) ? 1 : 0;
  }
  return m;
}

template <typename Scalar>
skyshield::Image<Scalar> random_heatmap(std::mt19937_64& rng, int height, int width) {
  std::uniform_real_distribution<double> unit(0.02, 0.98);
  skyshield::Image<Scalar> p(height, width);
  for (Eigen::Index y = 0; y < p.rows(); ++y) {
    for (Eigen::Index x = 0; x < p.cols(); ++x) p(y, x) = Scalar(unit(rng));
  }
  return p;
}

}  // namespace testutil
