// SPDX-License-Identifier: Apache-2.0
#include "strokesense/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace strokesense::ingest {

namespace {

std::uint8_t xor_bytes(std::span<const std::uint8_t> bytes) {
  std::uint8_t x = 0;
  for (auto b : bytes) x ^= b;
  return x;
}

std::int16_t saturate_i16(double v) {
  const double r = std::round(v);
  if (r > std::numeric_limits<std::int16_t>::max()) return std::numeric_limits<std::int16_t>::max();
  if (r < std::numeric_limits<std::int16_t>::min()) return std::numeric_limits<std::int16_t>::min();
  return static_cast<std::int16_t>(r);
}

}  // namespace

void CalibrationScale::validate() const {
  if (!(accel_lsb_per_g > 0.0) || !(gyro_lsb_per_dps > 0.0)) {
    throw std::invalid_argument("calibration constants must be positive");
  }
}

FrameBytes encode_frame(const Frame& f) {
  FrameBytes out{};
  out[0] = kSync;
  out[1] = f.button ? 0x01 : 0x00;
  for (int i = 0; i < 4; ++i) out[2 + i] = static_cast<std::uint8_t>(f.t_ms >> (8 * i));
  for (int c = 0; c < kChannels; ++c) {
    const auto u = static_cast<std::uint16_t>(f.raw[c]);
    out[6 + 2 * c] = static_cast<std::uint8_t>(u & 0xff);
    out[7 + 2 * c] = static_cast<std::uint8_t>(u >> 8);
  }
  out[kFrameSize - 1] = xor_bytes(std::span(out).first(kFrameSize - 1));
  return out;
}

Frame parse_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameSize) throw DataError("truncated");
  if (bytes[0] != kSync) throw DataError("desync");
  if (xor_bytes(bytes.first(kFrameSize - 1)) != bytes[kFrameSize - 1] ||
      (bytes[1] & 0xfe) != 0) {
    throw DataError("corrupt frame");
  }
  Frame f;
  f.button = (bytes[1] & 0x01) != 0;
  f.t_ms = 0;
  for (int i = 0; i < 4; ++i) f.t_ms |= static_cast<std::uint32_t>(bytes[2 + i]) << (8 * i);
  for (int c = 0; c < kChannels; ++c) {
    const auto u = static_cast<std::uint16_t>(bytes[6 + 2 * c] | (bytes[7 + 2 * c] << 8));
    f.raw[c] = static_cast<std::int16_t>(u);
  }
  return f;
}

std::vector<Frame> FrameScanner::feed(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  return drain(false);
}

std::vector<Frame> FrameScanner::finish() {
  auto out = drain(true);
  stats_.skipped_bytes += buffer_.size() - pos_;
  buffer_.clear();
  pos_ = 0;
  return out;
}

std::vector<Frame> FrameScanner::drain(bool at_end) {
  std::vector<Frame> out;
  auto reject = [&] {
    ++pos_;
    ++stats_.skipped_bytes;
    in_sync_ = false;
  };
  while (pos_ < buffer_.size()) {
    if (buffer_[pos_] != kSync) {
      reject();
      continue;
    }
    const std::size_t avail = buffer_.size() - pos_;
    if (avail < kFrameSize) break;
    // A resync candidate must be confirmed by the next frame's sync byte.
    if (!in_sync_ && avail == kFrameSize && !at_end) break;
    Frame f;
    try {
      f = parse_frame(std::span(buffer_).subspan(pos_, kFrameSize));
    } catch (const DataError&) {
      ++stats_.rejected_candidates;
      reject();
      continue;
    }
    if (!in_sync_ && avail > kFrameSize && buffer_[pos_ + kFrameSize] != kSync) {
      ++stats_.rejected_candidates;
      reject();
      continue;
    }
    if (have_last_ && f.t_ms < last_t_ms_) {
      ++stats_.rejected_candidates;
      reject();
      continue;
    }
    pos_ += kFrameSize;
    in_sync_ = true;
    have_last_ = true;
    last_t_ms_ = f.t_ms;
    ++stats_.frames;
    out.push_back(f);
  }
  if (pos_ > 0) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  return out;
}

std::vector<Frame> scan_frames(std::span<const std::uint8_t> bytes, ScanStats* stats) {
  FrameScanner scanner;
  auto frames = scanner.feed(bytes);
  auto tail = scanner.finish();
  frames.insert(frames.end(), tail.begin(), tail.end());
  if (stats) *stats = scanner.stats();
  return frames;
}

std::vector<SensorSample> frames_to_samples(std::span<const Frame> frames,
                                            const CalibrationScale& cal) {
  cal.validate();
  std::vector<SensorSample> out;
  out.reserve(frames.size());
  if (frames.empty()) return out;
  const std::int64_t t0 = frames.front().t_ms;
  for (const auto& f : frames) {
    SensorSample s;
    s.t_ms = static_cast<std::int64_t>(f.t_ms) - t0;
    for (int c = 0; c < kChannels; ++c) {
      s.channel(c) = f.raw[c] / (c < 3 ? cal.accel_lsb_per_g : cal.gyro_lsb_per_dps);
    }
    out.push_back(s);
  }
  return out;
}

std::vector<SensorSequence> segment_sessions(std::span<const Frame> frames,
                                             const CalibrationScale& cal,
                                             std::size_t min_len) {
  std::vector<SensorSequence> sessions;
  std::size_t i = 0;
  while (i < frames.size()) {
    if (!frames[i].button) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < frames.size() && frames[j].button) ++j;
    if (j - i >= min_len) {
      sessions.push_back({frames_to_samples(frames.subspan(i, j - i), cal)});
    }
    i = j;
  }
  return sessions;
}

std::vector<Frame> sequence_to_frames(const SensorSequence& seq,
                                      const CalibrationScale& cal,
                                      std::uint32_t t0_ms) {
  cal.validate();
  std::vector<Frame> frames;
  frames.reserve(seq.length());
  for (const auto& s : seq.samples) {
    Frame f;
    f.button = true;
    f.t_ms = t0_ms + static_cast<std::uint32_t>(s.t_ms);
    for (int c = 0; c < kChannels; ++c) {
      f.raw[c] = saturate_i16(s.channel(c) * (c < 3 ? cal.accel_lsb_per_g : cal.gyro_lsb_per_dps));
    }
    frames.push_back(f);
  }
  return frames;
}

}  // namespace strokesense::ingest
