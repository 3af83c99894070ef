// SPDX-License-Identifier: Apache-2.0
/**
 * @file   synth.hpp
 * @brief  Synthetic pen-motion data: glyph templates -> 2-D trajectories ->
 *         six-channel IMU sequences at 100 Hz.
 *
 * Device orientation is fixed: gravity is constant in the device frame and
 * the pen only rotates about z, so the gyroscope z channel is the heading
 * rate of the planar trajectory.
 */
#ifndef STROKESENSE_SYNTH_HPP
#define STROKESENSE_SYNTH_HPP

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "strokesense/core_types.hpp"

namespace strokesense::synth {

using Point = Eigen::Vector2d;

inline constexpr double kStandardGravity = 9.80665;  // m/s^2 per g
inline constexpr double kBridgeMs = 50.0;
/// Below this speed (m/s) the heading is considered undefined and held.
inline constexpr double kMinHeadingSpeed = 1e-4;

struct WriterStyle {
  std::string writer_id = "w1";
  double speed_scale = 1.0;   // > 1 writes faster (shorter sequences)
  double size_scale = 0.02;   // glyph box edge in meters
  double slant_rad = 0.0;     // shear of the glyph box
  double tremor_sigma = 0.004;  // additive noise, in each channel's unit
  double jitter_sigma = 0.03;   // per-sample control-point jitter, box units
  double shape_sigma = 0.06;    // per-writer persistent control-point offset, box units
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Style with every random component switched off.
WriterStyle clean_style(double size_scale = 0.02);

struct GlyphTemplate {
  CharacterLabel glyph;
  /// Each stroke is a cubic Bezier chain: 3n + 1 control points.
  std::vector<std::vector<Point>> strokes;
  double duration_ms = 600.0;

  void validate() const;
};

/**
 * Template file format, one block per glyph:
 *
 *   # comment
 *   glyph <char> <alphabet> <duration_ms>
 *   stroke x0 y0 x1 y1 ... x3n y3n
 *
 * Glyph order within an alphabet defines char_index.
 */
std::vector<GlyphTemplate> parse_templates(std::istream& in);
std::vector<GlyphTemplate> load_templates(const std::filesystem::path& path);
/// Templates bundled with the build (data/glyphs.txt).
std::vector<GlyphTemplate> default_templates();

/// Planar pen-tip path sampled every 10 ms, in meters.
struct Path {
  std::vector<Point> points;
};

/**
 * Jitters the control points, enforces a continuous tangent at every join
 * inside a stroke, applies slant and size, and samples the strokes at
 * constant speed along their arc length. Strokes are joined by 50 ms
 * smooth-step bridges. T = round(duration / 10 ms / speed_scale).
 * Throws std::invalid_argument for degenerate templates.
 */
Path glyph_trajectory(const GlyphTemplate& tmpl, const WriterStyle& style, std::uint64_t seed);

/**
 * Accelerometer: planar second differences (m/s^2 -> g) in x, y plus
 * gravity; z carries gravity only. Gyroscope z: rate of the velocity heading
 * (deg/s); x, y: noise. Every channel receives tremor noise and saturates at
 * the sensor limits.
 */
SensorSequence trajectory_to_imu(const Path& path, const WriterStyle& style, std::uint64_t seed,
                                 const Eigen::Vector3d& gravity_g = Eigen::Vector3d(0, 0, 1));

/// `n` writers whose speed and slant are all distinct.
std::vector<WriterStyle> default_writers(int n, std::uint64_t seed);

/**
 * samples_per_class_per_writer items for every (writer, glyph); class_list
 * follows `glyphs`. Item seeds derive from (seed, writer, glyph, repeat).
 * Throws DataError for glyphs without a template.
 */
Dataset generate_dataset(const std::vector<GlyphTemplate>& templates, Alphabet alphabet,
                         const std::vector<std::string>& glyphs,
                         const std::vector<WriterStyle>& writers, int samples_per_class_per_writer,
                         std::uint64_t seed);

/// The first `count` glyphs of `alphabet` in template order.
std::vector<std::string> first_glyphs(const std::vector<GlyphTemplate>& templates, Alphabet alphabet,
                                      int count);

}  // namespace strokesense::synth

#endif  // STROKESENSE_SYNTH_HPP
