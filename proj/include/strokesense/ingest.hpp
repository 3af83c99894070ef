// SPDX-License-Identifier: Apache-2.0
/**
 * @file   ingest.hpp
 * @brief  Pen-device frame stream: codec, resynchronizing scanner, sessions.
 *
 * Wire format of one framed unit (19 bytes, little-endian):
 *
 *   byte  0      sync 0xA5
 *   byte  1      flags: bit0 = button pressed, bits 1-7 zero
 *   bytes 2-5    t_ms, u32
 *   bytes 6-17   raw ax, ay, az, gx, gy, gz, six i16
 *   byte  18     checksum = XOR of bytes 0-17
 *
 * The scanner locates the sync byte; the 18 bytes after it are the frame body.
 */
#ifndef STROKESENSE_INGEST_HPP
#define STROKESENSE_INGEST_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "strokesense/core_types.hpp"

namespace strokesense::ingest {

inline constexpr std::uint8_t kSync = 0xA5;
inline constexpr std::size_t kFrameBodySize = 18;
inline constexpr std::size_t kFrameSize = 1 + kFrameBodySize;

struct Frame {
  bool button = false;
  std::uint32_t t_ms = 0;
  std::array<std::int16_t, kChannels> raw{};

  bool operator==(const Frame&) const = default;
};

using FrameBytes = std::array<std::uint8_t, kFrameSize>;

struct CalibrationScale {
  double accel_lsb_per_g = 16384.0;
  double gyro_lsb_per_dps = 131.0;

  /// Throws std::invalid_argument unless both constants are positive.
  void validate() const;
};

/// Full-scale setting used when streaming synthetic data (+/-16 g, +/-2000 deg/s).
inline constexpr CalibrationScale kWideRangeCalibration{2048.0, 16.4};

FrameBytes encode_frame(const Frame& f);

/**
 * Decodes one framed unit (sync byte included).
 * Throws DataError "truncated" (fewer than 19 bytes), "desync" (byte 0 is not
 * the sync byte) or "corrupt frame" (bad checksum or reserved flag bits set).
 */
Frame parse_frame(std::span<const std::uint8_t> bytes);

/// Counters kept by FrameScanner.
struct ScanStats {
  std::size_t frames = 0;
  std::size_t skipped_bytes = 0;
  std::size_t rejected_candidates = 0;
};

/**
 * Incremental decoder for a byte stream of framed units.
 *
 * After any decode failure the scanner drops one byte and searches for the
 * next sync byte. A candidate found while resynchronizing is only accepted
 * when the byte right after it is another sync byte (or the stream has
 * ended), and frames whose timestamp goes backwards are discarded.
 */
class FrameScanner {
 public:
  /// Appends bytes and returns every frame that became decodable.
  std::vector<Frame> feed(std::span<const std::uint8_t> bytes);
  /// Flushes what is left once the stream has ended.
  std::vector<Frame> finish();

  const ScanStats& stats() const { return stats_; }

 private:
  std::vector<Frame> drain(bool at_end);

  std::vector<std::uint8_t> buffer_;
  std::size_t pos_ = 0;
  bool in_sync_ = true;
  bool have_last_ = false;
  std::uint32_t last_t_ms_ = 0;
  ScanStats stats_;
};

/// Convenience wrapper: scans a complete buffer.
std::vector<Frame> scan_frames(std::span<const std::uint8_t> bytes,
                               ScanStats* stats = nullptr);

/// raw / sensitivity per channel; timestamps rebased to the first frame.
std::vector<SensorSample> frames_to_samples(std::span<const Frame> frames,
                                            const CalibrationScale& cal);

/// One sequence per maximal run of pressed frames with at least `min_len`
/// frames; timestamps rebased to 0 per sequence.
std::vector<SensorSequence> segment_sessions(std::span<const Frame> frames,
                                             const CalibrationScale& cal,
                                             std::size_t min_len = 10);

/// Quantizes a sequence into pressed frames starting at `t0_ms`; values beyond
/// the i16 range saturate.
std::vector<Frame> sequence_to_frames(const SensorSequence& seq,
                                      const CalibrationScale& cal,
                                      std::uint32_t t0_ms);

}  // namespace strokesense::ingest

#endif  // STROKESENSE_INGEST_HPP
