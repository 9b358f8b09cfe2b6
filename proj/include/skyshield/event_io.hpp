#pragma once

#include <filesystem>

#include "skyshield/event.hpp"

namespace skyshield {

enum class EventFormat { binary, csv };

// Binary layout (little-endian):
//   header: magic "SKYS", version u16 = 1, width u16, height u16,
//           event_count u64
//   record: t u64, x u16, y u16, polarity u8 (1 = +1, 0 = -1), pad u8 = 0
inline constexpr char kEventMagic[4] = {'S', 'K', 'Y', 'S'};
inline constexpr std::uint16_t kEventFormatVersion = 1;
inline constexpr std::size_t kEventHeaderBytes = 18;
inline constexpr std::size_t kEventRecordBytes = 14;

// CSV layout: header line "t_us,x,y,polarity", polarity in {1,0};
// geometry is not stored and must be supplied by the caller.

/// Reads a binary recording; validates bounds and time monotonicity.
EventRecording read_recording(const std::filesystem::path& path);

/// Reads a CSV recording with out-of-band geometry.
EventRecording read_recording_csv(const std::filesystem::path& path,
                                  std::uint16_t width, std::uint16_t height);

/// Writes a recording; rejects recordings that violate their invariants.
void write_recording(const EventRecording& rec,
                     const std::filesystem::path& path,
                     EventFormat format = EventFormat::binary);

}  // namespace skyshield
