// SPDX-License-Identifier: Apache-2.0
#include "strokesense/cli.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <sstream>

#include "strokesense/config.hpp"
#include "strokesense/dataset_io.hpp"
#include "strokesense/decode.hpp"
#include "strokesense/ingest.hpp"
#include "strokesense/nn/checkpoint.hpp"
#include "strokesense/nn/grad_check.hpp"
#include "strokesense/report.hpp"
#include "strokesense/rng.hpp"
#include "strokesense/synth.hpp"
#include "strokesense/train_eval.hpp"

namespace strokesense::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void log(const std::string& msg) { std::cerr << "strokesense: " << msg << '\n'; }

struct Common {
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  bool json = false;
  std::string config;
  std::string data;

  config::RunConfig load() const {
    config::RunConfig rc;
    if (!config.empty()) rc = config::load_config(config);
    if (seed_opt && seed_opt->count() > 0) rc.seed = seed;
    if (!rc.seed) rc.seed = 0;
    return rc;
  }

  fs::path data_dir() const {
    if (!data.empty()) return data;
    if (const char* env = std::getenv("STROKESENSE_DATA_DIR"); env && *env) return env;
    throw UsageError("--data is required (or set STROKESENSE_DATA_DIR)");
  }
};

void add_common(CLI::App* sub, Common& c, bool with_data) {
  c.seed_opt = sub->add_option("--seed", c.seed, "Random seed (default 0)");
  sub->add_flag("--json", c.json, "Print a machine-readable summary on stdout");
  sub->add_option("--config", c.config, "Run configuration file")->check(CLI::ExistingFile);
  if (with_data) sub->add_option("--data", c.data, "Dataset directory or manifest (default $STROKESENSE_DATA_DIR)");
}

void emit(const Common& c, const json& summary) {
  if (c.json) std::cout << summary.dump(2) << '\n';
}

std::vector<std::uint8_t> read_all(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> read_socket(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw UsageError("--connect expects host:port");
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0) {
    throw DataError("cannot resolve " + address);
  }
  std::unique_ptr<addrinfo, decltype(&freeaddrinfo)> guard(res, freeaddrinfo);
  int fd = -1;
  for (addrinfo* a = res; a; a = a->ai_next) {
    fd = socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    close(fd);
    fd = -1;
  }
  if (fd < 0) throw DataError("cannot connect to " + address);
  std::vector<std::uint8_t> out;
  std::uint8_t buf[4096];
  for (;;) {
    const ssize_t n = recv(fd, buf, sizeof buf, 0);
    if (n <= 0) break;
    out.insert(out.end(), buf, buf + n);
  }
  close(fd);
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<synth::GlyphTemplate> templates_from(const std::string& path) {
  return path.empty() ? synth::default_templates() : synth::load_templates(path);
}

json report_json(const train_eval::EvalReport& r) {
  json j;
  j["protocol"] = preprocess::to_string(r.protocol.protocol);
  j["accuracy"] = r.accuracy;
  j["n_test"] = r.n_test;
  json per = json::object();
  for (std::size_t k = 0; k < r.class_list.size(); ++k) per[r.class_list[k].glyph] = r.per_class_accuracy[k];
  j["per_class_accuracy"] = per;
  json conf = json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < r.confusion.cols(); ++k) row.push_back(r.confusion(i, k));
    conf.push_back(row);
  }
  j["confusion"] = conf;
  if (!r.train_history.empty()) j["epochs"] = r.train_history.size();
  return j;
}

json sweep_json(const std::vector<train_eval::SweepPoint>& pts) {
  json arr = json::array();
  std::vector<double> xs, ys;
  for (const auto& p : pts) {
    arr.push_back({{"x", p.x},
                   {"mean_accuracy", p.mean_accuracy},
                   {"std_accuracy", p.std_accuracy},
                   {"n_repeats", p.n_repeats},
                   {"accuracies", p.accuracies}});
    xs.push_back(p.x);
    ys.push_back(p.mean_accuracy);
  }
  return {{"points", arr}, {"spearman", train_eval::spearman(xs, ys)}};
}

void write_history(const std::vector<train_eval::EpochStats>& h, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,loss,train_accuracy,val_accuracy\n";
  for (std::size_t i = 0; i < h.size(); ++i) {
    out << i + 1 << ',' << io::format_number(h[i].loss) << ',' << io::format_number(h[i].train_accuracy)
        << ',' << io::format_number(h[i].val_accuracy) << '\n';
  }
}

void reject_same_dir(const fs::path& in, const fs::path& out) {
  std::error_code ec;
  const fs::path in_dir = fs::is_directory(in) ? in : in.parent_path();
  if (fs::exists(out) && fs::equivalent(in_dir, out, ec)) {
    throw UsageError("--out must differ from the input dataset directory");
  }
}

// ----------------------------------------------------------------------------

struct SynthOpts {
  Common c;
  int classes = 8;
  std::string alphabet = "latin";
  int writers = 6;
  int per_class = 20;
  std::string out;
  std::string templates;
  std::string stream;
  double accel_lsb = ingest::kWideRangeCalibration.accel_lsb_per_g;
  double gyro_lsb = ingest::kWideRangeCalibration.gyro_lsb_per_dps;
};

int cmd_synth(const SynthOpts& o) {
  const auto rc = o.c.load();
  const std::uint64_t seed = *rc.seed;
  const Alphabet alphabet = parse_alphabet(o.alphabet);
  const auto tm = templates_from(o.templates);
  const auto glyphs = synth::first_glyphs(tm, alphabet, o.classes);
  const auto writers = synth::default_writers(o.writers, mix_seed(seed, 1));
  const Dataset ds = synth::generate_dataset(tm, alphabet, glyphs, writers, o.per_class, mix_seed(seed, 2));
  const fs::path manifest = io::write_dataset(ds, o.out);
  log("wrote " + std::to_string(ds.items.size()) + " sequences to " + manifest.string());

  json j{{"command", "synth"}, {"manifest", manifest.string()}, {"items", ds.items.size()},
         {"classes", glyphs}, {"seed", seed}};
  if (!o.stream.empty()) {
    ingest::CalibrationScale cal{o.accel_lsb, o.gyro_lsb};
    cal.validate();
    constexpr int kIdleFrames = 20;
    std::ofstream out(o.stream, std::ios::binary);
    std::ofstream labels(o.stream + ".labels", std::ios::binary);
    if (!out || !labels) throw DataError("cannot write " + o.stream);
    std::uint32_t t = 0;
    auto put = [&](const ingest::Frame& f) {
      const auto bytes = ingest::encode_frame(f);
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    };
    for (const auto& item : ds.items) {
      ingest::Frame idle;
      idle.raw[2] = static_cast<std::int16_t>(std::lround(cal.accel_lsb_per_g));
      for (int k = 0; k < kIdleFrames; ++k, t += kNominalStepMs) {
        idle.t_ms = t;
        put(idle);
      }
      for (const auto& f : ingest::sequence_to_frames(item.sequence, cal, t)) put(f);
      t += static_cast<std::uint32_t>(item.sequence.samples.size()) * kNominalStepMs;
      labels << item.label.glyph << '\n';
    }
    if (!out || !labels) throw DataError("write failed: " + o.stream);
    j["stream"] = o.stream;
    log("wrote frame stream " + o.stream + " and " + o.stream + ".labels");
  }
  emit(o.c, j);
  return kExitOk;
}

struct IngestOpts {
  Common c;
  std::string input;
  std::string connect;
  std::string out;
  std::string labels;
  std::string alphabet = "latin";
  std::string writer = "w1";
  std::string templates;
  std::size_t min_len = 10;
  double accel_lsb = 16384.0;
  double gyro_lsb = 131.0;
};

int cmd_ingest(const IngestOpts& o) {
  if (o.input.empty() == o.connect.empty()) throw UsageError("give exactly one of --input and --connect");
  std::vector<std::uint8_t> bytes;
  if (!o.connect.empty()) {
    bytes = read_socket(o.connect);
  } else if (o.input == "-") {
    bytes = read_all(std::cin);
  } else {
    std::ifstream in(o.input, std::ios::binary);
    if (!in) throw DataError("cannot open " + o.input);
    bytes = read_all(in);
  }
  ingest::CalibrationScale cal{o.accel_lsb, o.gyro_lsb};
  cal.validate();
  ingest::ScanStats stats;
  const auto frames = ingest::scan_frames(bytes, &stats);
  const auto sessions = ingest::segment_sessions(frames, cal, o.min_len);
  const auto glyphs = read_lines(o.labels);
  if (glyphs.size() != sessions.size()) {
    throw DataError("stream has " + std::to_string(sessions.size()) + " sessions but " +
                    std::to_string(glyphs.size()) + " labels");
  }

  // Label indices follow the template order so ingested and synthetic
  // datasets agree on class identity.
  const Alphabet alphabet = parse_alphabet(o.alphabet);
  std::vector<std::string> known;
  for (const auto& t : templates_from(o.templates)) {
    if (t.glyph.alphabet == alphabet) known.push_back(t.glyph.glyph);
  }
  std::map<std::string, int> index;
  for (const auto& g : glyphs) {
    if (index.count(g)) continue;
    const auto it = std::find(known.begin(), known.end(), g);
    index[g] = it != known.end() ? static_cast<int>(it - known.begin()) : -1;
  }
  int next = static_cast<int>(known.size());
  for (const auto& g : glyphs) {
    if (index[g] < 0) index[g] = next++;
  }
  Dataset ds;
  std::map<int, CharacterLabel> classes;
  char id_buf[32];
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    LabeledSequence item;
    std::snprintf(id_buf, sizeof id_buf, "_s%04zu", i);
    item.id = o.writer + id_buf;
    item.writer_id = o.writer;
    item.label = {alphabet, index[glyphs[i]], glyphs[i]};
    item.origin = Origin::Recorded;
    item.sequence = sessions[i];
    classes[item.label.char_index] = item.label;
    ds.items.push_back(std::move(item));
  }
  for (const auto& [k, label] : classes) ds.class_list.push_back(label);
  const fs::path manifest = io::write_dataset(ds, o.out);
  log("decoded " + std::to_string(stats.frames) + " frames into " + std::to_string(sessions.size()) +
      " sessions (" + std::to_string(stats.skipped_bytes) + " bytes skipped)");
  emit(o.c, {{"command", "ingest"},
             {"manifest", manifest.string()},
             {"frames", stats.frames},
             {"sessions", sessions.size()},
             {"skipped_bytes", stats.skipped_bytes},
             {"rejected_candidates", stats.rejected_candidates}});
  return kExitOk;
}

struct AugmentOpts {
  Common c;
  std::string out;
  std::vector<int> windows;
  std::vector<int> strides;
  std::optional<double> noise_sigma;
  std::optional<int> noise_copies;
  bool in_place = false;
};

int cmd_augment(const AugmentOpts& o) {
  auto rc = o.c.load();
  const fs::path in = o.c.data_dir();
  reject_same_dir(in, o.out);
  preprocess::AugmentConfig ac = rc.train.augment_config;
  if (!o.windows.empty()) ac.window_sizes = o.windows;
  if (!o.strides.empty()) ac.strides = o.strides;
  if (o.noise_sigma) ac.noise_sigma = *o.noise_sigma;
  if (o.noise_copies) ac.noise_copies = *o.noise_copies;
  ac.in_place = ac.in_place || o.in_place;
  ac.rng_seed = *rc.seed;
  const Dataset ds = io::read_dataset(in);
  const Dataset out = preprocess::augment(ds, ac);
  const fs::path manifest = io::write_dataset(out, o.out);
  log("augmented " + std::to_string(ds.items.size()) + " -> " + std::to_string(out.items.size()) + " sequences");
  emit(o.c, {{"command", "augment"}, {"manifest", manifest.string()}, {"items_in", ds.items.size()},
             {"items_out", out.items.size()}});
  return kExitOk;
}

struct TrainFlags {
  std::optional<int> epochs;
  std::optional<int> patience;
  bool no_augment = false;
  bool hard_sigmoid_everywhere = false;
  bool extra_dense = false;
};

struct TrainOpts {
  Common c;
  std::string out;
  std::string history;
  TrainFlags t;
};

train_eval::TrainHyper hyper_from(const config::RunConfig& rc, const TrainFlags& f) {
  train_eval::TrainHyper h = rc.train;
  if (f.epochs) h.max_epochs = *f.epochs;
  if (f.patience) h.patience = *f.patience;
  if (f.no_augment) h.augment = false;
  if (f.hard_sigmoid_everywhere) h.model.hard_sigmoid_everywhere = true;
  if (f.extra_dense) h.model.extra_dense = true;
  h.validate();
  return h;
}

int cmd_train(const TrainOpts& o) {
  const auto rc = o.c.load();
  const auto hyper = hyper_from(rc, o.t);
  const Dataset ds = io::read_dataset(o.c.data_dir());
  const auto tr = train_eval::fit(ds, hyper, *rc.seed);
  nn::save_checkpoint(o.out, tr.params);
  if (!o.history.empty()) write_history(tr.history, o.history);
  const auto& best = tr.history[static_cast<std::size_t>(tr.best_epoch - 1)];
  log("trained " + std::to_string(tr.history.size()) + " epochs; best epoch " + std::to_string(tr.best_epoch) +
      " (val accuracy " + io::format_number(best.val_accuracy) + ")");
  emit(o.c, {{"command", "train"},
             {"checkpoint", o.out},
             {"epochs", tr.history.size()},
             {"best_epoch", tr.best_epoch},
             {"best_val_accuracy", best.val_accuracy},
             {"final_loss", tr.history.back().loss},
             {"restarts", tr.restarts}});
  return kExitOk;
}

struct EvalOpts {
  Common c;
  std::string model;
  std::string confusion;
};

int cmd_eval(const EvalOpts& o) {
  o.c.load();
  const Dataset ds = io::read_dataset(o.c.data_dir());
  const auto ckpt = nn::load_checkpoint(o.model);
  const auto r = train_eval::evaluate(ckpt.params, ds);
  if (!o.confusion.empty()) report::export_confusion(r, o.confusion);
  log("accuracy " + io::format_number(r.accuracy) + " on " + std::to_string(r.n_test) + " sequences");
  json j = report_json(r);
  j.erase("protocol");
  j["command"] = "eval";
  emit(o.c, j);
  return kExitOk;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

struct ProtocolOpts {
  Common c;
  std::string protocol;
  std::string train_writers;
  std::string test_writers;
  std::optional<double> test_fraction;
  std::string confusion;
  TrainFlags t;
  int train_per_class = 0;
};

int cmd_protocol(const ProtocolOpts& o) {
  const auto rc = o.c.load();
  const auto hyper = hyper_from(rc, o.t);
  preprocess::SplitSpec spec = rc.split;
  if (!o.protocol.empty()) spec.protocol = preprocess::parse_protocol(o.protocol);
  if (!o.train_writers.empty()) spec.train_writers = split_list(o.train_writers);
  if (!o.test_writers.empty()) spec.test_writers = split_list(o.test_writers);
  if (o.test_fraction) spec.test_fraction = *o.test_fraction;
  spec.rng_seed = mix_seed(*rc.seed, 1);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Dataset ds = io::read_dataset(o.c.data_dir());
  const auto r = train_eval::run_protocol(ds, spec, hyper, mix_seed(*rc.seed, 2), o.train_per_class);
  if (!o.confusion.empty()) report::export_confusion(r, o.confusion);
  log(preprocess::to_string(spec.protocol) + " accuracy " + io::format_number(r.accuracy) + " on " +
      std::to_string(r.n_test) + " sequences");
  json j = report_json(r);
  j["command"] = "protocol";
  emit(o.c, j);
  return kExitOk;
}

struct SweepOpts {
  Common c;
  std::string out;
  std::vector<int> xs;
  int samples_per_class = 40;
  int repeats = 5;
  std::optional<double> test_fraction;
  TrainFlags t;
};

int cmd_sweep(const SweepOpts& o, bool classes) {
  const auto rc = o.c.load();
  const auto hyper = hyper_from(rc, o.t);
  const double tf = o.test_fraction.value_or(rc.split.test_fraction);
  const Dataset ds = io::read_dataset(o.c.data_dir());
  std::vector<int> xs = o.xs;
  std::vector<train_eval::SweepPoint> pts;
  if (classes) {
    if (xs.empty()) {
      for (int k = 2; k <= static_cast<int>(ds.class_list.size()); k += 2) xs.push_back(k);
    }
    pts = train_eval::sweep_classes(ds, o.samples_per_class, xs, o.repeats, hyper, tf, *rc.seed);
  } else {
    if (xs.empty()) throw UsageError("--sizes is required");
    pts = train_eval::sweep_train_size(ds, xs, o.repeats, hyper, tf, *rc.seed);
  }
  if (!o.out.empty()) report::export_sweep(pts, o.out);
  for (const auto& p : pts) {
    log("x=" + std::to_string(p.x) + " mean accuracy " + io::format_number(p.mean_accuracy) + " (sd " +
        io::format_number(p.std_accuracy) + ")");
  }
  json j = sweep_json(pts);
  j["command"] = classes ? "sweep-classes" : "sweep-size";
  emit(o.c, j);
  return kExitOk;
}

struct DecodeOpts {
  Common c;
  std::string dict;
  std::string input = "-";
  std::string truth;
  int max_edit = 2;
};

std::vector<std::vector<std::string>> read_words(std::istream& in) {
  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> words;
    std::string w;
    while (ls >> w) words.push_back(w);
    lines.push_back(std::move(words));
  }
  return lines;
}

int cmd_decode(const DecodeOpts& o) {
  o.c.load();
  const auto dict = decode::load_dictionary(o.dict, o.max_edit);
  std::vector<std::vector<std::string>> lines;
  if (o.input == "-") {
    lines = read_words(std::cin);
  } else {
    std::ifstream in(o.input, std::ios::binary);
    if (!in) throw DataError("cannot open " + o.input);
    lines = read_words(in);
  }
  std::vector<std::string> raw, corrected;
  json out_lines = json::array();
  for (const auto& words : lines) {
    std::string joined;
    for (const auto& w : words) {
      const auto c = decode::correct_word(w, dict);
      raw.push_back(w);
      corrected.push_back(c.word);
      joined += (joined.empty() ? "" : " ") + c.word;
    }
    if (!o.c.json) std::cout << joined << '\n';
    out_lines.push_back(joined);
  }
  json j{{"command", "decode"}, {"lines", out_lines}, {"words", raw.size()}};
  if (!o.truth.empty()) {
    std::ifstream in(o.truth, std::ios::binary);
    if (!in) throw DataError("cannot open " + o.truth);
    std::vector<std::string> truth;
    for (const auto& words : read_words(in)) truth.insert(truth.end(), words.begin(), words.end());
    if (truth.size() != raw.size()) throw DataError("truth file has a different word count");
    const double before = decode::word_accuracy(raw, truth);
    const double after = decode::word_accuracy(corrected, truth);
    log("word accuracy " + io::format_number(before) + " -> " + io::format_number(after));
    j["word_accuracy_raw"] = before;
    j["word_accuracy_corrected"] = after;
  }
  emit(o.c, j);
  return kExitOk;
}

struct GradOpts {
  Common c;
  TrainFlags t;
  int classes = 4;
  int length = 12;
  double h = 1e-6;
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GradOpts& o) {
  const auto rc = o.c.load();
  if (o.length < 1) throw UsageError("--length must be >= 1");
  nn::ModelConfig cfg = rc.train.model;
  if (o.t.hard_sigmoid_everywhere) cfg.hard_sigmoid_everywhere = true;
  if (o.t.extra_dense) cfg.extra_dense = true;
  cfg.num_classes = o.classes;
  cfg.input_dim = kChannels;
  const auto params = nn::init_params(cfg, mix_seed(*rc.seed, 1));
  Rng rng(mix_seed(*rc.seed, 2));
  Matrix x(kChannels, o.length);
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    for (Eigen::Index c = 0; c < x.rows(); ++c) x(c, t) = rng.uniform(-1.0, 1.0);
  }
  const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(o.classes)));
  const auto r = nn::grad_check(params, nn::make_train_sample(x, label, o.classes), o.h);
  const bool passed = r.max_rel_error < o.tolerance;
  log("max relative error " + io::format_number(r.max_rel_error) + " over " + std::to_string(r.checked) +
      " coordinates (" + std::to_string(r.skipped) + " skipped near kinks); worst " + r.worst_tensor + "[" +
      std::to_string(r.worst_index) + "]");
  emit(o.c, {{"command", "gradcheck"},
             {"max_rel_error", r.max_rel_error},
             {"checked", r.checked},
             {"skipped", r.skipped},
             {"worst_tensor", r.worst_tensor},
             {"worst_index", r.worst_index},
             {"passed", passed}});
  if (!passed) {
    log("gradient check failed");
    return kExitTraining;
  }
  return kExitOk;
}

void add_model_flags(CLI::App* sub, TrainFlags& f) {
  sub->add_flag("--hard-sigmoid-everywhere", f.hard_sigmoid_everywhere,
                "Use the hard sigmoid for the LSTM candidate and cell output too");
  sub->add_flag("--extra-dense", f.extra_dense, "Add a second hidden dense layer");
}

void add_train_flags(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--epochs", f.epochs, "Maximum epochs");
  sub->add_option("--patience", f.patience, "Early-stopping patience in epochs");
  sub->add_flag("--no-augment", f.no_augment, "Train without augmented copies");
  add_model_flags(sub, f);
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Handwritten character recognition from pen IMU data"};
  app.name("strokesense");
  app.require_subcommand(1);
  std::function<int()> action;

  SynthOpts synth_o;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_common(synth, synth_o.c, false);
  synth->add_option("--classes", synth_o.classes, "Number of glyph classes")->check(CLI::PositiveNumber);
  synth->add_option("--alphabet", synth_o.alphabet, "latin or georgian");
  synth->add_option("--writers", synth_o.writers, "Number of writers")->check(CLI::PositiveNumber);
  synth->add_option("--per-class", synth_o.per_class, "Samples per class per writer")->check(CLI::PositiveNumber);
  synth->add_option("--out", synth_o.out, "Output dataset directory")->required();
  synth->add_option("--templates", synth_o.templates, "Glyph template file")->check(CLI::ExistingFile);
  synth->add_option("--emit-stream", synth_o.stream, "Also write the items as a binary frame stream");
  synth->add_option("--accel-lsb", synth_o.accel_lsb, "Stream accelerometer sensitivity (LSB/g)");
  synth->add_option("--gyro-lsb", synth_o.gyro_lsb, "Stream gyroscope sensitivity (LSB/dps)");
  synth->callback([&] { action = [&] { return cmd_synth(synth_o); }; });

  IngestOpts ingest_o;
  auto* ingest = app.add_subcommand("ingest", "Decode a frame stream into a dataset");
  add_common(ingest, ingest_o.c, false);
  ingest->add_option("--input", ingest_o.input, "Stream file, or - for stdin");
  ingest->add_option("--connect", ingest_o.connect, "Read the stream from host:port");
  ingest->add_option("--out", ingest_o.out, "Output dataset directory")->required();
  ingest->add_option("--labels", ingest_o.labels, "One glyph per session, in order")->required();
  ingest->add_option("--alphabet", ingest_o.alphabet, "latin or georgian");
  ingest->add_option("--writer", ingest_o.writer, "Writer id for every session");
  ingest->add_option("--templates", ingest_o.templates, "Template file defining label order");
  ingest->add_option("--min-len", ingest_o.min_len, "Shortest session kept, in frames");
  ingest->add_option("--accel-lsb", ingest_o.accel_lsb, "Accelerometer sensitivity (LSB/g)");
  ingest->add_option("--gyro-lsb", ingest_o.gyro_lsb, "Gyroscope sensitivity (LSB/dps)");
  ingest->callback([&] { action = [&] { return cmd_ingest(ingest_o); }; });

  AugmentOpts aug_o;
  auto* aug = app.add_subcommand("augment", "Write an augmented copy of a dataset");
  add_common(aug, aug_o.c, true);
  aug->add_option("--out", aug_o.out, "Output dataset directory")->required();
  aug->add_option("--windows", aug_o.windows, "Window sizes")->delimiter(',');
  aug->add_option("--strides", aug_o.strides, "Strides")->delimiter(',');
  aug->add_option("--noise-sigma", aug_o.noise_sigma, "Noise sigma in scaled units");
  aug->add_option("--noise-copies", aug_o.noise_copies, "Noisy copies per item");
  aug->add_flag("--in-place", aug_o.in_place, "Replace items by their averaged version");
  aug->callback([&] { action = [&] { return cmd_augment(aug_o); }; });

  TrainOpts train_o;
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  add_common(train, train_o.c, true);
  train->add_option("--out", train_o.out, "Checkpoint path")->required();
  train->add_option("--history", train_o.history, "Per-epoch history CSV");
  add_train_flags(train, train_o.t);
  train->callback([&] { action = [&] { return cmd_train(train_o); }; });

  EvalOpts eval_o;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  add_common(eval, eval_o.c, true);
  eval->add_option("--model", eval_o.model, "Checkpoint path")->required()->check(CLI::ExistingFile);
  eval->add_option("--confusion", eval_o.confusion, "Confusion matrix CSV");
  eval->callback([&] { action = [&] { return cmd_eval(eval_o); }; });

  ProtocolOpts proto_o;
  auto* proto = app.add_subcommand("protocol", "Split, train and evaluate under one protocol");
  add_common(proto, proto_o.c, true);
  proto->add_option("--protocol", proto_o.protocol, "pooled, writer-disjoint or mixed");
  proto->add_option("--train-writers", proto_o.train_writers, "Comma-separated writer ids");
  proto->add_option("--test-writers", proto_o.test_writers, "Comma-separated writer ids");
  proto->add_option("--test-fraction", proto_o.test_fraction, "Held-out share");
  proto->add_option("--train-per-class", proto_o.train_per_class, "Limit train items per class (0 = all)");
  proto->add_option("--confusion", proto_o.confusion, "Confusion matrix CSV");
  add_train_flags(proto, proto_o.t);
  proto->callback([&] { action = [&] { return cmd_protocol(proto_o); }; });

  SweepOpts sc_o;
  auto* sc = app.add_subcommand("sweep-classes", "Accuracy versus number of classes");
  add_common(sc, sc_o.c, true);
  sc->add_option("--counts", sc_o.xs, "Class counts (default 2,4,..,C)")->delimiter(',');
  sc->add_option("--samples-per-class", sc_o.samples_per_class, "Train items per class");
  sc->add_option("--repeats", sc_o.repeats, "Repeats per point");
  sc->add_option("--test-fraction", sc_o.test_fraction, "Held-out share");
  sc->add_option("--out", sc_o.out, "Sweep CSV");
  add_train_flags(sc, sc_o.t);
  sc->callback([&] { action = [&] { return cmd_sweep(sc_o, true); }; });

  SweepOpts ss_o;
  auto* ss = app.add_subcommand("sweep-size", "Accuracy versus train items per class");
  add_common(ss, ss_o.c, true);
  ss->add_option("--sizes", ss_o.xs, "Train items per class")->delimiter(',');
  ss->add_option("--repeats", ss_o.repeats, "Repeats per point");
  ss->add_option("--test-fraction", ss_o.test_fraction, "Held-out share");
  ss->add_option("--out", ss_o.out, "Sweep CSV");
  add_train_flags(ss, ss_o.t);
  ss->callback([&] { action = [&] { return cmd_sweep(ss_o, false); }; });

  DecodeOpts dec_o;
  auto* dec = app.add_subcommand("decode", "Dictionary correction of recognized words");
  add_common(dec, dec_o.c, false);
  dec->add_option("--dict", dec_o.dict, "Dictionary file, one word per line")->required();
  dec->add_option("--input", dec_o.input, "Recognized words, whitespace separated (- for stdin)");
  dec->add_option("--truth", dec_o.truth, "Reference words for word accuracy");
  dec->add_option("--max-edit", dec_o.max_edit, "Largest accepted edit distance");
  dec->callback([&] { action = [&] { return cmd_decode(dec_o); }; });

  GradOpts grad_o;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of the model gradient");
  add_common(grad, grad_o.c, false);
  grad->add_option("--classes", grad_o.classes, "Output classes");
  grad->add_option("--length", grad_o.length, "Sequence length");
  grad->add_option("--step", grad_o.h, "Finite-difference step");
  grad->add_option("--tolerance", grad_o.tolerance, "Largest accepted relative error");
  add_model_flags(grad, grad_o.t);
  grad->callback([&] { action = [&] { return cmd_gradcheck(grad_o); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    log(e.what());
    std::cerr << app.help();
    return kExitUsage;
  } catch (const config::ConfigError& e) {
    log(e.what());
    return kExitUsage;
  } catch (const train_eval::TrainingFailed& e) {
    log(e.what());
    return kExitTraining;
  } catch (const DataError& e) {
    log(std::string("data error: ") + e.what());
    return kExitData;
  } catch (const std::invalid_argument& e) {
    log(std::string("invalid argument: ") + e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return kExitData;
  }
}

}  // namespace strokesense::cli
