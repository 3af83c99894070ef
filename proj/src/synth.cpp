// SPDX-License-Identifier: Apache-2.0
#include "strokesense/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "strokesense/rng.hpp"

namespace strokesense::synth {

namespace {

constexpr double kStepMs = static_cast<double>(kNominalStepMs);
constexpr double kStepS = kStepMs / 1000.0;
constexpr int kArcSamplesPerSegment = 128;

Point bezier(const Point& p0, const Point& p1, const Point& p2, const Point& p3, double u) {
  const double v = 1.0 - u;
  return v * v * v * p0 + 3.0 * v * v * u * p1 + 3.0 * v * u * u * p2 + u * u * u * p3;
}

// Arc-length table of one cubic chain.
class StrokeCurve {
 public:
  explicit StrokeCurve(std::vector<Point> cps) : cps_(std::move(cps)) {
    const int segments = static_cast<int>(cps_.size() - 1) / 3;
    params_.push_back(0.0);
    lengths_.push_back(0.0);
    Point prev = cps_.front();
    for (int s = 0; s < segments; ++s) {
      for (int k = 1; k <= kArcSamplesPerSegment; ++k) {
        const double u = static_cast<double>(k) / kArcSamplesPerSegment;
        const Point p = eval(s + u);
        lengths_.push_back(lengths_.back() + (p - prev).norm());
        params_.push_back(s + u);
        prev = p;
      }
    }
  }

  double length() const { return lengths_.back(); }
  Point start() const { return cps_.front(); }
  Point end() const { return cps_.back(); }

  /// Point at arc length s in [0, length()].
  Point at_arc(double s) const {
    if (s <= 0.0) return cps_.front();
    if (s >= length()) return cps_.back();
    const auto it = std::upper_bound(lengths_.begin(), lengths_.end(), s);
    const auto hi = static_cast<std::size_t>(it - lengths_.begin());
    const std::size_t lo = hi - 1;
    const double span = lengths_[hi] - lengths_[lo];
    const double w = span > 0.0 ? (s - lengths_[lo]) / span : 0.0;
    return eval(params_[lo] + w * (params_[hi] - params_[lo]));
  }

 private:
  // Chain parameter: integer part selects the segment.
  Point eval(double t) const {
    const int segments = static_cast<int>(cps_.size() - 1) / 3;
    int s = std::min(static_cast<int>(std::floor(t)), segments - 1);
    const double u = t - s;
    const auto i = static_cast<std::size_t>(3 * s);
    return bezier(cps_[i], cps_[i + 1], cps_[i + 2], cps_[i + 3], u);
  }

  std::vector<Point> cps_;
  std::vector<double> params_;
  std::vector<double> lengths_;
};

double smoothstep(double u) { return u * u * (3.0 - 2.0 * u); }

double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

}  // namespace

void WriterStyle::validate() const {
  if (!(speed_scale > 0.0) || !(size_scale > 0.0)) {
    throw std::invalid_argument("writer speed and size scales must be positive");
  }
  if (!(tremor_sigma >= 0.0) || !(jitter_sigma >= 0.0) || !(shape_sigma >= 0.0)) {
    throw std::invalid_argument("writer noise levels must be non-negative");
  }
  if (!std::isfinite(slant_rad) || std::abs(slant_rad) >= std::numbers::pi / 2) {
    throw std::invalid_argument("slant must be within (-pi/2, pi/2)");
  }
  if (writer_id.empty()) throw std::invalid_argument("writer id must not be empty");
}

WriterStyle clean_style(double size_scale) {
  WriterStyle s;
  s.size_scale = size_scale;
  s.tremor_sigma = 0.0;
  s.jitter_sigma = 0.0;
  s.shape_sigma = 0.0;
  return s;
}

void GlyphTemplate::validate() const {
  if (glyph.glyph.empty()) throw std::invalid_argument("template glyph is empty");
  if (strokes.empty()) throw std::invalid_argument("template " + glyph.glyph + " has no strokes");
  if (!(duration_ms > 0.0)) throw std::invalid_argument("template duration must be positive");
  for (const auto& s : strokes) {
    if (s.size() < 4 || (s.size() - 1) % 3 != 0) {
      throw std::invalid_argument("template " + glyph.glyph + ": stroke needs 3n+1 control points");
    }
    for (const auto& p : s) {
      if (!(p.x() >= 0.0 && p.x() <= 1.0 && p.y() >= 0.0 && p.y() <= 1.0)) {
        throw std::invalid_argument("template " + glyph.glyph + ": control point outside unit box");
      }
    }
  }
}

std::vector<GlyphTemplate> parse_templates(std::istream& in) {
  std::vector<GlyphTemplate> out;
  std::map<Alphabet, int> next_index;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto where = " (template line " + std::to_string(line_no) + ")";
    std::istringstream ls(line);
    std::string keyword;
    if (!(ls >> keyword) || keyword.front() == '#') continue;
    if (keyword == "glyph") {
      std::string glyph, alphabet;
      double duration = 0.0;
      if (!(ls >> glyph >> alphabet >> duration)) throw DataError("malformed glyph header" + where);
      GlyphTemplate t;
      t.glyph.alphabet = parse_alphabet(alphabet);
      t.glyph.char_index = next_index[t.glyph.alphabet]++;
      t.glyph.glyph = glyph;
      t.duration_ms = duration;
      out.push_back(std::move(t));
    } else if (keyword == "stroke") {
      if (out.empty()) throw DataError("stroke before any glyph" + where);
      std::vector<double> values;
      double v = 0.0;
      while (ls >> v) values.push_back(v);
      if (!ls.eof() || values.size() % 2 != 0) throw DataError("malformed stroke" + where);
      std::vector<Point> pts;
      for (std::size_t i = 0; i < values.size(); i += 2) pts.emplace_back(values[i], values[i + 1]);
      out.back().strokes.push_back(std::move(pts));
    } else {
      throw DataError("unknown keyword '" + keyword + "'" + where);
    }
  }
  for (const auto& t : out) {
    try {
      t.validate();
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what());
    }
  }
  return out;
}

std::vector<GlyphTemplate> load_templates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open template file " + path.string());
  return parse_templates(in);
}

std::vector<GlyphTemplate> default_templates() {
  return load_templates(STROKESENSE_DEFAULT_TEMPLATES);
}

Path glyph_trajectory(const GlyphTemplate& tmpl, const WriterStyle& style, std::uint64_t seed) {
  tmpl.validate();
  style.validate();

  // Coincident template points share their offsets so closures and stroke
  // hand-offs survive jitter.
  Rng shape_rng(mix_seed(style.rng_seed, hash_string(to_string(tmpl.glyph.alphabet) + tmpl.glyph.glyph)));
  Rng jitter_rng(seed);
  std::map<std::pair<double, double>, Point> offsets;
  std::vector<std::vector<Point>> strokes = tmpl.strokes;
  for (auto& stroke : strokes) {
    for (auto& p : stroke) {
      const auto key = std::make_pair(p.x(), p.y());
      auto it = offsets.find(key);
      if (it == offsets.end()) {
        Point off(0, 0);
        if (style.shape_sigma > 0.0) off += style.shape_sigma * Point(shape_rng.normal(), shape_rng.normal());
        if (style.jitter_sigma > 0.0) off += style.jitter_sigma * Point(jitter_rng.normal(), jitter_rng.normal());
        it = offsets.emplace(key, off).first;
      }
      p += it->second;
    }
  }

  const double shear = std::tan(style.slant_rad);
  std::vector<StrokeCurve> curves;
  double total_length = 0.0;
  for (auto& stroke : strokes) {
    // Continuous tangent at interior joins: align each outgoing handle with
    // the incoming one, keeping its length.
    for (std::size_t j = 3; j + 1 < stroke.size(); j += 3) {
      const Point in = stroke[j] - stroke[j - 1];
      const double out_len = (stroke[j + 1] - stroke[j]).norm();
      if (in.norm() > 0.0 && out_len > 0.0) stroke[j + 1] = stroke[j] + in.normalized() * out_len;
    }
    for (auto& p : stroke) {
      p = style.size_scale * Point(p.x() + shear * (p.y() - 0.5), p.y());
    }
    curves.emplace_back(stroke);
    if (!(curves.back().length() > 1e-9 * style.size_scale)) {
      throw std::invalid_argument("degenerate template " + tmpl.glyph.glyph + ": zero-length stroke");
    }
    total_length += curves.back().length();
  }

  const long steps = std::lround(tmpl.duration_ms / kStepMs / style.speed_scale);
  if (steps < 3) throw std::invalid_argument("glyph " + tmpl.glyph.glyph + " too short to sample");
  const double timeline = static_cast<double>(steps - 1) * kStepMs;
  const double bridges = static_cast<double>(curves.size() - 1) * kBridgeMs;
  const double writing = timeline - bridges;
  if (writing < kStepMs * static_cast<double>(curves.size())) {
    throw std::invalid_argument("glyph " + tmpl.glyph.glyph + " too fast for its stroke count");
  }

  // Piecewise timeline: stroke, bridge, stroke, ...
  struct Piece {
    double t0, t1;
    int stroke;  // -1 for a bridge
    Point a, b;  // bridge endpoints
  };
  std::vector<Piece> pieces;
  double t = 0.0;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const double dur = writing * curves[i].length() / total_length;
    pieces.push_back({t, t + dur, static_cast<int>(i), {}, {}});
    t += dur;
    if (i + 1 < curves.size()) {
      pieces.push_back({t, t + kBridgeMs, -1, curves[i].end(), curves[i + 1].start()});
      t += kBridgeMs;
    }
  }

  Path path;
  path.points.reserve(static_cast<std::size_t>(steps));
  std::size_t piece = 0;
  for (long k = 0; k < steps; ++k) {
    const double tk = static_cast<double>(k) * kStepMs;
    while (piece + 1 < pieces.size() && tk > pieces[piece].t1) ++piece;
    const Piece& pc = pieces[piece];
    const double u = std::clamp((tk - pc.t0) / (pc.t1 - pc.t0), 0.0, 1.0);
    if (pc.stroke >= 0) {
      const auto& c = curves[static_cast<std::size_t>(pc.stroke)];
      path.points.push_back(k == steps - 1 ? c.end() : c.at_arc(u * c.length()));
    } else {
      const double w = smoothstep(u);
      path.points.push_back((1.0 - w) * pc.a + w * pc.b);
    }
  }
  return path;
}

SensorSequence trajectory_to_imu(const Path& path, const WriterStyle& style, std::uint64_t seed,
                                 const Eigen::Vector3d& gravity_g) {
  style.validate();
  const std::size_t n = path.points.size();
  if (n < 3) throw std::invalid_argument("path too short");
  const auto& p = path.points;

  std::vector<Point> accel(n), vel(n);
  for (std::size_t t = 1; t + 1 < n; ++t) {
    accel[t] = (p[t + 1] - 2.0 * p[t] + p[t - 1]) / (kStepS * kStepS);
    vel[t] = (p[t + 1] - p[t - 1]) / (2.0 * kStepS);
  }
  accel[0] = accel[1];
  accel[n - 1] = accel[n - 2];
  vel[0] = (p[1] - p[0]) / kStepS;
  vel[n - 1] = (p[n - 1] - p[n - 2]) / kStepS;

  // Heading is held wherever the pen is (nearly) at rest.
  std::vector<double> heading(n, 0.0);
  std::size_t first_moving = n;
  for (std::size_t t = 0; t < n; ++t) {
    if (vel[t].norm() > kMinHeadingSpeed) {
      first_moving = t;
      break;
    }
  }
  if (first_moving < n) {
    double prev = std::atan2(vel[first_moving].y(), vel[first_moving].x());
    for (std::size_t t = 0; t < n; ++t) {
      if (t > first_moving && vel[t].norm() > kMinHeadingSpeed) {
        prev += wrap_angle(std::atan2(vel[t].y(), vel[t].x()) - prev);
      }
      heading[t] = prev;
    }
  }
  std::vector<double> rate(n);
  for (std::size_t t = 1; t + 1 < n; ++t) rate[t] = (heading[t + 1] - heading[t - 1]) / (2.0 * kStepS);
  rate[0] = (heading[1] - heading[0]) / kStepS;
  rate[n - 1] = (heading[n - 1] - heading[n - 2]) / kStepS;

  Rng rng(mix_seed(seed, 0x7e4d0f));
  SensorSequence seq;
  seq.samples.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto& s = seq.samples[t];
    s.t_ms = static_cast<std::int64_t>(t) * kNominalStepMs;
    s.ax = accel[t].x() / kStandardGravity + gravity_g.x();
    s.ay = accel[t].y() / kStandardGravity + gravity_g.y();
    s.az = gravity_g.z();
    s.gx = 0.0;
    s.gy = 0.0;
    s.gz = rate[t] * 180.0 / std::numbers::pi;
    for (int c = 0; c < kChannels; ++c) {
      double& x = s.channel(c);
      if (style.tremor_sigma > 0.0) x += style.tremor_sigma * rng.normal();
      const double limit = c < 3 ? kAccelLimitG : kGyroLimitDps;
      x = std::clamp(x, -limit, limit);
    }
  }
  return seq;
}

std::vector<WriterStyle> default_writers(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("need at least one writer");
  std::vector<WriterStyle> writers;
  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    WriterStyle w;
    w.writer_id = "w" + std::to_string(i + 1);
    const double frac = n > 1 ? static_cast<double>(i) / (n - 1) : 0.5;
    w.speed_scale = 0.8 + 0.45 * frac + rng.uniform(-0.02, 0.02);
    double golden = 0.5 + 0.6180339887498949 * i;
    golden -= std::floor(golden);
    w.slant_rad = -0.3 + 0.6 * golden;
    w.size_scale = 0.018 + 0.006 * rng.uniform();
    w.rng_seed = rng.next_u64();
    writers.push_back(w);
  }
  return writers;
}

std::vector<std::string> first_glyphs(const std::vector<GlyphTemplate>& templates, Alphabet alphabet,
                                      int count) {
  std::vector<std::string> out;
  for (const auto& t : templates) {
    if (t.glyph.alphabet == alphabet && static_cast<int>(out.size()) < count) out.push_back(t.glyph.glyph);
  }
  if (static_cast<int>(out.size()) < count) {
    throw DataError("only " + std::to_string(out.size()) + " " + to_string(alphabet) +
                    " templates available");
  }
  return out;
}

Dataset generate_dataset(const std::vector<GlyphTemplate>& templates, Alphabet alphabet,
                         const std::vector<std::string>& glyphs,
                         const std::vector<WriterStyle>& writers, int samples_per_class_per_writer,
                         std::uint64_t seed) {
  if (samples_per_class_per_writer < 0) throw std::invalid_argument("sample count must be >= 0");
  std::vector<const GlyphTemplate*> chosen;
  Dataset ds;
  for (const auto& g : glyphs) {
    auto it = std::find_if(templates.begin(), templates.end(), [&](const GlyphTemplate& t) {
      return t.glyph.alphabet == alphabet && t.glyph.glyph == g;
    });
    if (it == templates.end()) throw DataError("missing template for glyph " + g);
    chosen.push_back(&*it);
    ds.class_list.push_back(it->glyph);
  }
  ds.metadata["generator"] = "synth";
  ds.metadata["seed"] = std::to_string(seed);

  char rep_buf[32];
  for (const auto& w : writers) {
    for (const auto* tmpl : chosen) {
      const std::uint64_t cell = mix_seed(mix_seed(seed, hash_string(w.writer_id)),
                                          hash_string(to_string(alphabet) + tmpl->glyph.glyph));
      for (int r = 0; r < samples_per_class_per_writer; ++r) {
        const std::uint64_t item_seed = mix_seed(cell, static_cast<std::uint64_t>(r));
        LabeledSequence item;
        std::snprintf(rep_buf, sizeof rep_buf, "%02d_%03d", tmpl->glyph.char_index, r);
        item.id = w.writer_id + "_" + to_string(alphabet) + rep_buf;
        item.writer_id = w.writer_id;
        item.label = tmpl->glyph;
        item.origin = Origin::Synthetic;
        item.sequence = trajectory_to_imu(glyph_trajectory(*tmpl, w, item_seed), w,
                                          mix_seed(item_seed, 1));
        ds.items.push_back(std::move(item));
      }
    }
  }
  return ds;
}

}  // namespace strokesense::synth
