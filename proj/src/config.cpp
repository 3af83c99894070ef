// SPDX-License-Identifier: Apache-2.0
#include "strokesense/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>
#include <vector>

namespace strokesense::config {

namespace {

using Scalar = std::variant<bool, double, std::string>;

struct Value {
  std::vector<Scalar> items;
  bool is_array = false;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

Scalar parse_scalar(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  if (s == "true") return true;
  if (s == "false") return false;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("cannot parse value '" + s + "'");
  }
  return v;
}

Value parse_value(const std::string& s) {
  Value v;
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ConfigError("unterminated array");
    v.is_array = true;
    const std::string body = trim(std::string_view(s).substr(1, s.size() - 2));
    if (body.empty()) return v;
    std::stringstream ss(body);
    std::string part;
    while (std::getline(ss, part, ',')) {
      const std::string t = trim(part);
      if (t.empty()) throw ConfigError("empty array element");
      v.items.push_back(parse_scalar(t));
    }
    return v;
  }
  v.items.push_back(parse_scalar(s));
  return v;
}

const Scalar& single(const Value& v) {
  if (v.is_array || v.items.size() != 1) throw ConfigError("expected a single value");
  return v.items[0];
}

double as_number(const Scalar& s) {
  if (const auto* d = std::get_if<double>(&s)) return *d;
  throw ConfigError("expected a number");
}

double number(const Value& v) { return as_number(single(v)); }

long long integer(const Value& v) {
  const double d = number(v);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError("expected an integer");
  return static_cast<long long>(d);
}

int small_int(const Value& v) {
  const long long i = integer(v);
  if (i < -1000000000LL || i > 1000000000LL) throw ConfigError("integer out of range");
  return static_cast<int>(i);
}

bool boolean(const Value& v) {
  if (const auto* b = std::get_if<bool>(&single(v))) return *b;
  throw ConfigError("expected true or false");
}

std::string string(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&single(v))) return *s;
  throw ConfigError("expected a quoted string");
}

std::vector<int> int_list(const Value& v) {
  if (!v.is_array) throw ConfigError("expected an array");
  std::vector<int> out;
  for (const auto& s : v.items) {
    Value one;
    one.items.push_back(s);
    out.push_back(small_int(one));
  }
  return out;
}

std::vector<std::string> string_list(const Value& v) {
  if (!v.is_array) throw ConfigError("expected an array");
  std::vector<std::string> out;
  for (const auto& s : v.items) {
    const auto* str = std::get_if<std::string>(&s);
    if (!str) throw ConfigError("expected an array of strings");
    out.push_back(*str);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const Value&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, const Value& v) {
         const long long s = integer(v);
         if (s < 0) throw ConfigError("seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"augment.enabled", [](RunConfig& c, const Value& v) { c.train.augment = boolean(v); }},
      {"augment.windows", [](RunConfig& c, const Value& v) { c.train.augment_config.window_sizes = int_list(v); }},
      {"augment.strides", [](RunConfig& c, const Value& v) { c.train.augment_config.strides = int_list(v); }},
      {"augment.noise_sigma", [](RunConfig& c, const Value& v) { c.train.augment_config.noise_sigma = number(v); }},
      {"augment.noise_copies", [](RunConfig& c, const Value& v) { c.train.augment_config.noise_copies = small_int(v); }},
      {"augment.in_place", [](RunConfig& c, const Value& v) { c.train.augment_config.in_place = boolean(v); }},
      {"split.protocol", [](RunConfig& c, const Value& v) {
         try {
           c.split.protocol = preprocess::parse_protocol(string(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"split.test_fraction", [](RunConfig& c, const Value& v) { c.split.test_fraction = number(v); }},
      {"split.train_writers", [](RunConfig& c, const Value& v) { c.split.train_writers = string_list(v); }},
      {"split.test_writers", [](RunConfig& c, const Value& v) { c.split.test_writers = string_list(v); }},
      {"model.lstm1_units", [](RunConfig& c, const Value& v) { c.train.model.lstm1_units = small_int(v); }},
      {"model.lstm2_units", [](RunConfig& c, const Value& v) { c.train.model.lstm2_units = small_int(v); }},
      {"model.dense_units", [](RunConfig& c, const Value& v) { c.train.model.dense_units = small_int(v); }},
      {"model.extra_dense", [](RunConfig& c, const Value& v) { c.train.model.extra_dense = boolean(v); }},
      {"model.hard_sigmoid_everywhere",
       [](RunConfig& c, const Value& v) { c.train.model.hard_sigmoid_everywhere = boolean(v); }},
      {"train.learning_rate", [](RunConfig& c, const Value& v) { c.train.optimizer.learning_rate = number(v); }},
      {"train.rho", [](RunConfig& c, const Value& v) { c.train.optimizer.rho = number(v); }},
      {"train.epsilon", [](RunConfig& c, const Value& v) { c.train.optimizer.epsilon = number(v); }},
      {"train.batch_size", [](RunConfig& c, const Value& v) { c.train.batch_size = small_int(v); }},
      {"train.max_epochs", [](RunConfig& c, const Value& v) { c.train.max_epochs = small_int(v); }},
      {"train.patience", [](RunConfig& c, const Value& v) { c.train.patience = small_int(v); }},
      {"train.clip_norm", [](RunConfig& c, const Value& v) { c.train.clip_norm = number(v); }},
      {"train.val_fraction", [](RunConfig& c, const Value& v) { c.train.val_fraction = number(v); }},
      {"train.max_restarts", [](RunConfig& c, const Value& v) { c.train.max_restarts = small_int(v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("malformed section header");
        section = trim(std::string_view(line).substr(1, line.size() - 2));
        if (section.empty()) throw ConfigError("empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key = value");
      const std::string key = trim(std::string_view(line).substr(0, eq));
      if (key.empty()) throw ConfigError("missing key");
      const std::string full = section.empty() ? key : section + "." + key;
      const auto it = setters().find(full);
      if (it == setters().end()) throw ConfigError("unknown key '" + full + "'");
      it->second(base, parse_value(trim(std::string_view(line).substr(eq + 1))));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (config line " + std::to_string(line_no) + ")");
    }
  }
  try {
    base.train.validate();
    // Writer sets may still come from command-line flags; they are checked
    // when the split runs.
    if (!(base.split.test_fraction > 0.0 && base.split.test_fraction < 1.0)) {
      throw std::invalid_argument("test fraction must be in (0, 1)");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace strokesense::config
