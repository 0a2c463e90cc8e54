#include "satpipe/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "satpipe/analysis.hpp"
#include "satpipe/dbn.hpp"
#include "satpipe/errors.hpp"
#include "satpipe/features.hpp"
#include "satpipe/model_io.hpp"
#include "satpipe/normalize.hpp"
#include "satpipe/patchio.hpp"
#include "satpipe/random.hpp"
#include "satpipe/sdae.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace satpipe::cli {

namespace {

struct Common {
  std::string config_path;
  std::optional<std::string> seed;
  std::string out_dir;
};

// Flag values for every subcommand; defaults mirror the library's.
struct Options {
  // dataset gen
  int classes = 4;
  int per_class = 100;
  int width = kPatchSide;
  int height = kPatchSide;
  // shared io
  std::string data, features, out, in, model, test;
  std::optional<int> class_count;
  unsigned workers = 0;
  // dataset split
  double train_fraction = 0.8;
  std::string train_out, test_out;
  // extract
  bool extended = false;
  // train
  std::string layers;
  TrainConfig train;
  double corruption = 0.25;
  double sdae_lr = 0.01;
  int sdae_epochs = 30;
  double sdae_momentum = 0.5;
  std::string input = "features";
  // eval, layersep
  std::string normalization = "separate";
  std::string reduction = "sample-mean";
  // id
  int k = 10;
  int rounds = 10;
  long sample_size = 1000;
  // hypersphere
  int max_dim = 20;
  // report
  std::vector<std::string> runs;
};

DatasetFormat format_for(const fs::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv" ? DatasetFormat::kCsv : DatasetFormat::kSatbin;
}

std::vector<int> parse_layers(const std::string& text) {
  std::vector<int> out;
  if (text.empty() || text == "none") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int w = std::stoi(item, &used);
      if (used != item.size() || w < 1) throw std::invalid_argument(item);
      out.push_back(w);
    } catch (const std::exception&) {
      throw ConfigError("--layers expects comma-separated positive widths, got '" + text + "'");
    }
  }
  return out;
}

std::string join(const std::vector<std::string>& v, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + v[i];
  return s;
}

std::string now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void require_finite(const Eigen::MatrixXd& m, const std::string& what) {
  if (!m.allFinite()) throw NumericError(what + " contains NaN or infinite values");
}

// Walks the selected subcommand chain.
std::vector<CLI::App*> chain(CLI::App& app) {
  std::vector<CLI::App*> out{&app};
  for (CLI::App* cur = &app;;) {
    auto subs = cur->get_subcommands();
    if (subs.empty()) break;
    cur = subs.front();
    out.push_back(cur);
  }
  return out;
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args);

 private:
  void setup(CLI::App& app);
  void add_common(CLI::App* sub);
  void apply_config(const std::vector<CLI::App*>& selected);
  json resolved_config(const std::vector<CLI::App*>& selected) const;

  void dataset_gen();
  void dataset_convert();
  void dataset_split();
  void extract();
  void train(const std::string& variant);
  void eval();
  void rank();
  void separability_cmd();
  void layersep();
  void id();
  void hypersphere();
  void report();

  fs::path out_path(const std::string& name) const { return out_dir_ / name; }
  Dataset load_input_dataset(const std::string& path);
  void add_input(const fs::path& p) { manifest_.inputs.push_back({p.string(), sha256_file(p)}); }
  void add_output(const fs::path& p) { manifest_.outputs.push_back({p.string(), sha256_file(p)}); }

  struct Labeled {
    Eigen::MatrixXd x;
    std::vector<int> labels;
    int class_count = 0;
    std::vector<std::string> names;
  };
  // Raw pixels or unnormalized 22 features from --data / --features.
  Labeled load_matrix(InputKind kind);

  std::ostream& out_;
  std::ostream& err_;
  Common common_;
  Options opt_;
  ConfigMap config_;
  ResolvedSeed seed_;
  fs::path out_dir_;
  RunManifest manifest_;
};

void Runner::add_common(CLI::App* sub) {
  sub->add_option("--config", common_.config_path, "key = value config file; flags override it");
  sub->add_option("--seed", common_.seed, "base seed (falls back to the config file, then SATPIPE_SEED)");
  sub->add_option("--out-dir", common_.out_dir, "output directory (default ./runs/<timestamp>)");
}

void Runner::setup(CLI::App& app) {
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto* dataset = app.add_subcommand("dataset", "generate, convert or split patch datasets");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "generate the seeded synthetic texture dataset");
  gen->add_option("--classes", opt_.classes, "number of classes")->check(CLI::Range(2, 255));
  gen->add_option("--per-class", opt_.per_class, "patches per class")->check(CLI::PositiveNumber);
  gen->add_option("--width", opt_.width)->check(CLI::PositiveNumber);
  gen->add_option("--height", opt_.height)->check(CLI::PositiveNumber);
  gen->add_option("--out", opt_.out, "output file; .csv selects CSV (default <out-dir>/dataset.satbin)");

  auto* convert = dataset->add_subcommand("convert", "convert between SATBIN and CSV");
  convert->add_option("--in", opt_.in)->required();
  convert->add_option("--out", opt_.out)->required();
  convert->add_option("--classes", opt_.class_count, "class count of a CSV input (default max label + 1)");

  auto* split = dataset->add_subcommand("split", "seeded shuffle into train and test files");
  split->add_option("--data", opt_.data)->required();
  split->add_option("--train-fraction", opt_.train_fraction)->check(CLI::Range(0.0, 1.0));
  split->add_option("--train-out", opt_.train_out, "default <out-dir>/train.satbin");
  split->add_option("--test-out", opt_.test_out, "default <out-dir>/test.satbin");
  split->add_option("--classes", opt_.class_count);

  auto* ex = app.add_subcommand("extract", "compute the 22 features per patch");
  ex->add_option("--data", opt_.data)->required();
  ex->add_option("--out", opt_.out, "default <out-dir>/features.csv");
  ex->add_option("--workers", opt_.workers, "extraction threads (0 = all cores)");
  ex->add_flag("--extended", opt_.extended, "append the extra co-occurrence and channel statistics");
  ex->add_option("--classes", opt_.class_count);

  auto* tr = app.add_subcommand("train", "train a classifier");
  tr->require_subcommand(1);
  for (const char* variant : {"deepsat", "dbn-raw", "sdae"}) {
    auto* t = tr->add_subcommand(variant, std::string(variant) == "deepsat"   ? "features + DBN"
                                          : std::string(variant) == "dbn-raw" ? "raw pixels + DBN"
                                                                              : "stacked denoising autoencoder");
    const std::string v = variant;
    opt_.layers = "";
    t->add_option("--data", opt_.data, "training dataset");
    t->add_option("--features", opt_.features, "training feature CSV instead of --data");
    t->add_option("--test", opt_.test, "optional test dataset evaluated after training");
    t->add_option("--classes", opt_.class_count);
    t->add_option("--layers", opt_.layers, "hidden widths, e.g. 50,50 (default depends on the variant)");
    t->add_option("--batch-size", opt_.train.batch_size)->check(CLI::PositiveNumber);
    t->add_option("--finetune-epochs", opt_.train.max_finetune_epochs);
    t->add_option("--finetune-lr", opt_.train.finetune_learning_rate);
    t->add_option("--finetune-momentum", opt_.train.finetune_momentum);
    t->add_option("--l2", opt_.train.l2_coefficient);
    t->add_option("--patience", opt_.train.early_stopping_patience);
    t->add_option("--validation-fraction", opt_.train.validation_fraction);
    t->add_option("--head-init-std", opt_.train.head_init_std);
    t->add_option("--workers", opt_.workers);
    if (v == "sdae") {
      t->add_option("--input", opt_.input, "features or raw")->check(CLI::IsMember({"features", "raw"}));
      t->add_option("--corruption", opt_.corruption);
      t->add_option("--sdae-lr", opt_.sdae_lr);
      t->add_option("--sdae-momentum", opt_.sdae_momentum);
      t->add_option("--sdae-epochs", opt_.sdae_epochs);
    } else {
      t->add_option("--rbm-epochs", opt_.train.rbm_epochs);
      t->add_option("--rbm-lr", opt_.train.rbm_learning_rate);
      t->add_option("--cd-k", opt_.train.cd_steps)->check(CLI::PositiveNumber);
      t->add_option("--initial-momentum", opt_.train.initial_momentum);
      t->add_option("--final-momentum", opt_.train.final_momentum);
      t->add_option("--momentum-switch-epoch", opt_.train.momentum_switch_epoch);
      t->add_option("--rbm-init-std", opt_.train.rbm_init_std);
    }
    add_common(t);
  }

  auto* ev = app.add_subcommand("eval", "evaluate a saved model");
  ev->add_option("--model", opt_.model)->required();
  ev->add_option("--data", opt_.data);
  ev->add_option("--features", opt_.features);
  ev->add_option("--classes", opt_.class_count);
  ev->add_option("--normalization", opt_.normalization, "separate: fit min/max on this set; train-stats: use the model's")
      ->check(CLI::IsMember({"separate", "train-stats"}));
  ev->add_option("--workers", opt_.workers);

  auto* rk = app.add_subcommand("rank", "rank features by distribution separability");
  rk->add_option("--data", opt_.data);
  rk->add_option("--features", opt_.features);
  rk->add_option("--classes", opt_.class_count);
  rk->add_option("--workers", opt_.workers);

  auto* sep = app.add_subcommand("separability", "mean separability of raw pixels vs extracted features");
  sep->add_option("--data", opt_.data)->required();
  sep->add_option("--classes", opt_.class_count);
  sep->add_option("--workers", opt_.workers);

  auto* ls = app.add_subcommand("layersep", "separability of hidden-layer activations");
  ls->add_option("--model", opt_.model)->required();
  ls->add_option("--data", opt_.data);
  ls->add_option("--features", opt_.features);
  ls->add_option("--classes", opt_.class_count);
  ls->add_option("--normalization", opt_.normalization)->check(CLI::IsMember({"separate", "train-stats"}));
  ls->add_option("--reduction", opt_.reduction, "sample-mean or unit-average")
      ->check(CLI::IsMember({"sample-mean", "unit-average"}));
  ls->add_option("--workers", opt_.workers);

  auto* idc = app.add_subcommand("id", "intrinsic dimension of raw pixels and/or features");
  idc->add_option("--data", opt_.data);
  idc->add_option("--features", opt_.features);
  idc->add_option("--classes", opt_.class_count);
  idc->add_option("--input", opt_.input, "features, raw or both")->check(CLI::IsMember({"features", "raw", "both"}));
  idc->add_option("--k", opt_.k)->check(CLI::Range(2, 1000));
  idc->add_option("--rounds", opt_.rounds)->check(CLI::PositiveNumber);
  idc->add_option("--sample-size", opt_.sample_size)->check(CLI::PositiveNumber);
  idc->add_option("--workers", opt_.workers);

  auto* hs = app.add_subcommand("hypersphere", "unit-ball to cube volume ratio per dimension");
  hs->add_option("--max-dim", opt_.max_dim)->check(CLI::Range(1, 100000));

  auto* rp = app.add_subcommand("report", "collect run directories into one JSON + CSV bundle");
  rp->add_option("--runs", opt_.runs, "run directories")->required()->expected(1, -1);

  for (auto* sub : {gen, convert, split, ex, ev, rk, sep, ls, idc, hs, rp}) add_common(sub);
}

void Runner::apply_config(const std::vector<CLI::App*>& selected) {
  CLI::App* leaf = selected.back();
  std::set<std::string> known{"seed", "config", "out-dir"};
  for (CLI::Option* o : leaf->get_options()) {
    const std::string name = o->get_single_name();
    if (o->get_lnames().empty()) continue;
    known.insert(name);
    if (name == "seed" || name == "config") continue;
    auto it = config_.find(name);
    if (it == config_.end() || o->count() > 0) continue;
    try {
      o->add_result(it->second);
      o->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError("config key '" + name + "': " + e.what());
    }
  }
  for (const auto& [key, value] : config_)
    if (!known.count(key)) err_ << "warning: config key '" << key << "' is not used by this subcommand\n";
}

json Runner::resolved_config(const std::vector<CLI::App*>& selected) const {
  json j = json::object();
  for (CLI::Option* o : selected.back()->get_options()) {
    if (o->get_lnames().empty()) continue;
    const std::string name = o->get_single_name();
    if (name == "seed" || name == "config" || name == "help") continue;
    if (o->count() > 0)
      j[name] = join(o->results());
    else
      j[name] = o->get_default_str();
  }
  j["out-dir"] = out_dir_.string();
  return j;
}

Dataset Runner::load_input_dataset(const std::string& path) {
  LoadOptions lo;
  lo.class_count = opt_.class_count;
  Dataset d = load_dataset(path, format_for(path), lo);
  add_input(path);
  return d;
}

Runner::Labeled Runner::load_matrix(InputKind kind) {
  if (opt_.data.empty() == opt_.features.empty()) throw ConfigError("give exactly one of --data or --features");
  Labeled l;
  if (!opt_.features.empty()) {
    if (kind == InputKind::kRawPixels) throw ConfigError("raw-pixel input needs --data, not --features");
    auto [x, labels] = read_feature_csv(opt_.features, &l.names);
    add_input(opt_.features);
    if (x.cols() != static_cast<Eigen::Index>(kFeatureCount))
      throw ShapeError("feature CSV has " + std::to_string(x.cols()) + " columns, expected " +
                       std::to_string(kFeatureCount));
    l.x = std::move(x);
    l.labels = std::move(labels);
    int max_label = 0;
    for (int v : l.labels) max_label = std::max(max_label, v);
    l.class_count = opt_.class_count.value_or(max_label + 1);
  } else {
    const Dataset d = load_input_dataset(opt_.data);
    l.labels = d.labels;
    l.class_count = d.scheme.class_count();
    if (kind == InputKind::kRawPixels) {
      l.x = pixel_matrix(d);
    } else {
      l.x = extract_batch(d, {}, opt_.workers);
      l.names = feature_names();
    }
  }
  require_finite(l.x, "input matrix");
  return l;
}

void Runner::dataset_gen() {
  SyntheticSpec spec = default_synthetic_spec(opt_.classes, opt_.per_class);
  spec.width = opt_.width;
  spec.height = opt_.height;
  const Dataset d = generate_synthetic(spec, seed_.value);
  const fs::path out = opt_.out.empty() ? out_path("dataset.satbin") : fs::path(opt_.out);
  save_dataset(d, out, format_for(out));
  add_output(out);
  manifest_.seeds["synthetic"] = derive_seed(seed_.value, streams::kSynthetic);
  out_ << "wrote " << d.size() << " patches (" << d.scheme.name() << ") to " << out.string() << "\n";
}

void Runner::dataset_convert() {
  const Dataset d = load_input_dataset(opt_.in);
  save_dataset(d, opt_.out, format_for(opt_.out));
  add_output(opt_.out);
  out_ << "converted " << d.size() << " patches to " << opt_.out << "\n";
}

void Runner::dataset_split() {
  const Dataset d = load_input_dataset(opt_.data);
  auto [train, test] = shuffle_split(d, opt_.train_fraction, seed_.value);
  const fs::path tr = opt_.train_out.empty() ? out_path("train.satbin") : fs::path(opt_.train_out);
  const fs::path te = opt_.test_out.empty() ? out_path("test.satbin") : fs::path(opt_.test_out);
  save_dataset(train, tr, format_for(tr));
  save_dataset(test, te, format_for(te));
  add_output(tr);
  add_output(te);
  manifest_.seeds["split"] = derive_seed(seed_.value, streams::kSplit);
  out_ << "train " << train.size() << ", test " << test.size() << "\n";
}

void Runner::extract() {
  const Dataset d = load_input_dataset(opt_.data);
  const fs::path out = opt_.out.empty() ? out_path("features.csv") : fs::path(opt_.out);
  if (opt_.extended) {
    const auto names = extended_feature_names();
    write_feature_csv(out, extract_extended_batch(d, {}, opt_.workers), d.labels, names);
  } else {
    const auto names = feature_names();
    write_feature_csv(out, extract_batch(d, {}, opt_.workers), d.labels, names);
  }
  add_output(out);
  out_ << "extracted " << d.size() << " patches to " << out.string() << "\n";
}

json evaluation_json(const ClassifierModel& m, const Evaluation& e) {
  std::vector<std::vector<int>> confusion;
  for (Eigen::Index r = 0; r < e.confusion.rows(); ++r) {
    confusion.emplace_back();
    for (Eigen::Index c = 0; c < e.confusion.cols(); ++c) confusion.back().push_back(e.confusion(r, c));
  }
  return {{"model_kind", to_string(m.kind)},
          {"input_kind", to_string(m.input_kind)},
          {"layers", m.config.layer_sizes},
          {"class_count", m.class_count},
          {"accuracy", e.accuracy},
          {"samples", e.confusion.sum()},
          {"confusion", confusion}};
}

void Runner::train(const std::string& variant) {
  const bool sdae = variant == "sdae";
  const InputKind kind =
      variant == "dbn-raw" || (sdae && opt_.input == "raw") ? InputKind::kRawPixels : InputKind::kFeatures22;
  std::string layers = opt_.layers;
  if (layers.empty()) layers = variant == "deepsat" ? "50,50" : variant == "dbn-raw" ? "100,100,100" : "100,100,100,100,100";
  TrainConfig tc = opt_.train;
  tc.layer_sizes = parse_layers(layers);
  tc.seed = seed_.value;
  tc.validate();

  Labeled l = load_matrix(kind);
  std::optional<NormalizationStats> stats;
  if (kind == InputKind::kFeatures22) {
    stats = fit_normalization(l.x);
    l.x = apply_normalization(*stats, l.x);
  }

  std::pair<ClassifierModel, TrainReport> result;
  if (sdae) {
    SdaeConfig sc;
    sc.layer_sizes = tc.layer_sizes;
    sc.corruption_fraction = opt_.corruption;
    sc.learning_rate = opt_.sdae_lr;
    sc.momentum = opt_.sdae_momentum;
    sc.epochs = opt_.sdae_epochs;
    sc.finetune = tc;
    sc.seed = seed_.value;
    result = train_sdae(l.x, l.labels, l.class_count, kind, sc);
  } else {
    result = train_dbn(l.x, l.labels, l.class_count, kind, tc);
  }
  auto& [model, report] = result;
  model.normalization = stats;

  const fs::path model_path = out_path("model.json");
  save_model(model, model_path);
  add_output(model_path);
  const fs::path report_path = out_path("train_report.csv");
  write_train_report_csv(report_path, report);
  add_output(report_path);
  if (stats) {
    const fs::path norm_path = out_path("normalization.csv");
    write_normalization_csv(norm_path, *stats, feature_names());
    add_output(norm_path);
  }
  if (!report.pretrain_reconstruction_error.empty()) {
    const fs::path p = out_path("pretrain_error.csv");
    std::ofstream f(p);
    f << "layer,epoch,reconstruction_error\n";
    for (std::size_t layer = 0; layer < report.pretrain_reconstruction_error.size(); ++layer)
      for (std::size_t e = 0; e < report.pretrain_reconstruction_error[layer].size(); ++e)
        f << layer + 1 << "," << e + 1 << "," << report.pretrain_reconstruction_error[layer][e] << "\n";
    f.close();
    add_output(p);
  }
  manifest_.seeds["validation"] = derive_seed(seed_.value, streams::kValidation);
  manifest_.seeds["finetune"] = derive_seed(seed_.value, streams::kFinetune);

  out_ << "trained " << variant << " (" << join([&] {
    std::vector<std::string> s;
    for (int w : model.layer_widths()) s.push_back(std::to_string(w));
    return s;
  }(), 'x') << "), best epoch " << report.best_epoch << " of " << report.epochs.size() << "\n";

  if (!opt_.test.empty()) {
    const Dataset test = load_input_dataset(opt_.test);
    Eigen::MatrixXd tx = kind == InputKind::kRawPixels ? pixel_matrix(test) : extract_batch(test, {}, opt_.workers);
    // Test features get their own extrema, as the training set did.
    if (kind == InputKind::kFeatures22) tx = fit_apply_normalization(tx);
    const Evaluation e = evaluate(model, tx, test.labels);
    const fs::path p = out_path("eval.json");
    write_json(p, evaluation_json(model, e));
    add_output(p);
    out_ << "test accuracy " << e.accuracy << "\n";
  }
}

void Runner::eval() {
  const ClassifierModel model = load_model(opt_.model);
  add_input(opt_.model);
  Labeled l = load_matrix(model.input_kind);
  if (model.input_kind == InputKind::kFeatures22) {
    if (opt_.normalization == "train-stats") {
      if (!model.normalization) throw FormatError("model carries no normalization statistics");
      l.x = apply_normalization(*model.normalization, l.x);
    } else {
      l.x = fit_apply_normalization(l.x);
    }
  }
  const Evaluation e = evaluate(model, l.x, l.labels);
  const fs::path p = out_path("eval.json");
  write_json(p, evaluation_json(model, e));
  add_output(p);
  const fs::path cp = out_path("confusion.csv");
  {
    std::ofstream f(cp);
    f << "true\\predicted";
    for (Eigen::Index c = 0; c < e.confusion.cols(); ++c) f << "," << c;
    f << "\n";
    for (Eigen::Index r = 0; r < e.confusion.rows(); ++r) {
      f << r;
      for (Eigen::Index c = 0; c < e.confusion.cols(); ++c) f << "," << e.confusion(r, c);
      f << "\n";
    }
  }
  add_output(cp);
  out_ << "accuracy " << e.accuracy << "\n";
}

void Runner::rank() {
  Labeled l = load_matrix(InputKind::kFeatures22);
  if (l.names.empty()) l.names = feature_names();
  const auto ranking = rank_features(l.x, l.labels, l.names);
  const fs::path csv = out_path("ranking.csv");
  const fs::path js = out_path("ranking.json");
  write_ranking_csv(csv, ranking);
  write_json(js, ranking_to_json(ranking));
  add_output(csv);
  add_output(js);
  for (std::size_t i = 0; i < std::min<std::size_t>(5, ranking.entries.size()); ++i)
    out_ << i + 1 << ". " << ranking.entries[i].name << " D_s=" << ranking.entries[i].d_s << "\n";
}

void Runner::separability_cmd() {
  const Dataset d = load_input_dataset(opt_.data);
  const Eigen::MatrixXd raw = pixel_matrix(d);
  const Eigen::MatrixXd feats = fit_apply_normalization(extract_batch(d, {}, opt_.workers));
  json rows = json::array();
  std::ostringstream csv;
  csv << "input,columns,delta_mean,delta_sigma,d_s\n";
  for (const auto& [name, m] : {std::pair<std::string, const Eigen::MatrixXd*>{"raw", &raw}, {"features", &feats}}) {
    const auto rep = separability(*m, d.labels);
    rows.push_back({{"input", name},
                    {"columns", m->cols()},
                    {"delta_mean", rep.mean_delta_mean()},
                    {"delta_sigma", rep.mean_delta_sigma()},
                    {"d_s", rep.mean_d_s()}});
    csv << name << "," << m->cols() << "," << rep.mean_delta_mean() << "," << rep.mean_delta_sigma() << ","
        << rep.mean_d_s() << "\n";
    out_ << name << ": delta_mean " << rep.mean_delta_mean() << ", delta_sigma " << rep.mean_delta_sigma()
         << ", D_s " << rep.mean_d_s() << "\n";
  }
  const fs::path js = out_path("separability.json");
  write_json(js, rows);
  add_output(js);
  const fs::path cp = out_path("separability.csv");
  std::ofstream(cp) << csv.str();
  add_output(cp);
}

void Runner::layersep() {
  const ClassifierModel model = load_model(opt_.model);
  add_input(opt_.model);
  Labeled l = load_matrix(model.input_kind);
  if (model.input_kind == InputKind::kFeatures22)
    l.x = opt_.normalization == "train-stats" && model.normalization
              ? apply_normalization(*model.normalization, l.x)
              : fit_apply_normalization(l.x);
  const auto reduction = opt_.reduction == "unit-average" ? LayerReduction::kUnitAverage : LayerReduction::kSampleMean;
  const auto layers = layer_separability(model, l.x, l.labels, reduction);
  json rows = json::array();
  const fs::path cp = out_path("layersep.csv");
  {
    std::ofstream f(cp);
    f << "layer,width,delta_mean,delta_sigma,d_s\n";
    for (const auto& s : layers) {
      f << s.layer << "," << s.width << "," << s.separability.delta_mean << "," << s.separability.delta_sigma << ","
        << s.separability.d_s << "\n";
      rows.push_back({{"layer", s.layer},
                      {"width", s.width},
                      {"delta_mean", s.separability.delta_mean},
                      {"delta_sigma", s.separability.delta_sigma},
                      {"d_s", s.separability.d_s}});
      out_ << "layer " << s.layer << ": D_s " << s.separability.d_s << "\n";
    }
  }
  const fs::path js = out_path("layersep.json");
  write_json(js, {{"model_kind", to_string(model.kind)},
                  {"input_kind", to_string(model.input_kind)},
                  {"reduction", opt_.reduction},
                  {"layers", rows}});
  add_output(cp);
  add_output(js);
}

void Runner::id() {
  IdOptions io;
  io.k = opt_.k;
  io.rounds = opt_.rounds;
  io.sample_size = opt_.sample_size;
  io.seed = seed_.value;
  json rows = json::array();
  auto estimate = [&](const std::string& name, const Eigen::MatrixXd& m) {
    const IdEstimate e = intrinsic_dimension(m, io);
    if (e.duplicates_dropped > 0)
      err_ << "warning: " << name << ": dropped " << e.duplicates_dropped << " duplicate points\n";
    rows.push_back({{"input", name},
                    {"columns", m.cols()},
                    {"dimension", e.dimension},
                    {"k", e.k},
                    {"sample_size", e.sample_size},
                    {"per_round", e.per_round},
                    {"duplicates_dropped", e.duplicates_dropped}});
    out_ << name << ": intrinsic dimension " << e.dimension << "\n";
  };
  if (!opt_.features.empty()) {
    if (opt_.input != "features") throw ConfigError("--features only supports --input features");
    Labeled l = load_matrix(InputKind::kFeatures22);
    estimate("features", fit_apply_normalization(l.x));
  } else {
    if (opt_.data.empty()) throw ConfigError("give --data or --features");
    const Dataset d = load_input_dataset(opt_.data);
    if (opt_.input != "raw") estimate("features", fit_apply_normalization(extract_batch(d, {}, opt_.workers)));
    if (opt_.input != "features") estimate("raw", pixel_matrix(d));
  }
  manifest_.seeds["intrinsic_dimension"] = derive_seed(seed_.value, streams::kIntrinsicDim);
  const fs::path js = out_path("id.json");
  write_json(js, rows);
  add_output(js);
}

void Runner::hypersphere() {
  const fs::path cp = out_path("hypersphere.csv");
  json rows = json::array();
  {
    std::ofstream f(cp);
    f << "dimension,relative_volume\n";
    f.precision(17);
    for (int n = 1; n <= opt_.max_dim; ++n) {
      const double v = hypersphere_relative_volume(n);
      f << n << "," << v << "\n";
      rows.push_back({{"dimension", n}, {"relative_volume", v}});
    }
  }
  const fs::path js = out_path("hypersphere.json");
  write_json(js, rows);
  add_output(cp);
  add_output(js);
  out_ << "relative volume at n=" << opt_.max_dim << ": " << hypersphere_relative_volume(opt_.max_dim) << "\n";
}

void Runner::report() {
  json accuracy = json::array(), rankings = json::array(), seps = json::array(), layerseps = json::array(),
       ids = json::array(), spheres = json::array();
  for (const auto& run : opt_.runs) {
    const fs::path dir(run);
    if (!fs::exists(dir / "manifest.json")) throw IoError(run + " has no manifest.json");
    const json manifest = read_json(dir / "manifest.json");
    add_input(dir / "manifest.json");
    const std::string sub = manifest.value("subcommand", "");
    auto take = [&](const char* file, auto&& fn) {
      if (fs::exists(dir / file)) {
        add_input(dir / file);
        fn(read_json(dir / file));
      }
    };
    take("eval.json", [&](json j) {
      j["run"] = run;
      j["subcommand"] = sub;
      j.erase("confusion");
      accuracy.push_back(j);
    });
    take("ranking.json", [&](json j) { rankings.push_back({{"run", run}, {"ranking", j}}); });
    take("separability.json", [&](json j) { seps.push_back({{"run", run}, {"rows", j}}); });
    take("layersep.json", [&](json j) {
      j["run"] = run;
      layerseps.push_back(j);
    });
    take("id.json", [&](json j) { ids.push_back({{"run", run}, {"rows", j}}); });
    take("hypersphere.json", [&](json j) { spheres.push_back({{"run", run}, {"rows", j}}); });
  }
  const json bundle = {{"accuracy", accuracy},           {"rankings", rankings},
                       {"separability", seps},           {"layer_separability", layerseps},
                       {"intrinsic_dimension", ids},     {"hypersphere", spheres}};
  const fs::path js = out_path("report.json");
  write_json(js, bundle);
  add_output(js);

  const fs::path acc = out_path("accuracy.csv");
  {
    std::ofstream f(acc);
    f << "run,subcommand,model_kind,input_kind,layers,accuracy\n";
    for (const auto& a : accuracy) {
      std::vector<std::string> widths;
      for (const auto& w : a.value("layers", json::array())) widths.push_back(std::to_string(w.get<int>()));
      f << a["run"].get<std::string>() << "," << a["subcommand"].get<std::string>() << ","
        << a.value("model_kind", "") << "," << a.value("input_kind", "") << "," << join(widths, 'x') << ","
        << a.value("accuracy", 0.0) << "\n";
    }
  }
  add_output(acc);

  const fs::path series = out_path("layersep_series.csv");
  {
    std::ofstream f(series);
    f << "run,model_kind,input_kind,layer,d_s\n";
    for (const auto& s : layerseps)
      for (const auto& row : s["layers"])
        f << s["run"].get<std::string>() << "," << s.value("model_kind", "") << "," << s.value("input_kind", "")
          << "," << row["layer"].get<int>() << "," << row["d_s"].get<double>() << "\n";
  }
  add_output(series);
  out_ << "collected " << opt_.runs.size() << " runs into " << js.string() << "\n";
}

int Runner::run(const std::vector<std::string>& args) {
  const auto t0 = std::chrono::steady_clock::now();
  CLI::App app{"satpipe: satellite patch features, DBN/SDAE classifiers and separability analysis", "satpipe"};
  setup(app);

  std::vector<CLI::App*> selected;
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(rev);
    selected = chain(app);
    if (!common_.config_path.empty()) config_ = read_config_file(common_.config_path);
    apply_config(selected);
    seed_ = resolve_seed(common_.seed, config_, std::getenv("SATPIPE_SEED"));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out_, err_) == 0 ? kOk : kUsage;
  } catch (const ConfigError& e) {
    err_ << "error: " << e.what() << "\n";
    return kUsage;
  }

  std::string name;
  for (std::size_t i = 1; i < selected.size(); ++i) name += (i > 1 ? " " : "") + selected[i]->get_name();
  const std::string leaf = selected.back()->get_name();
  const std::string top = selected.size() > 1 ? selected[1]->get_name() : "";

  out_dir_ = common_.out_dir.empty() ? default_out_dir() : fs::path(common_.out_dir);
  manifest_.subcommand = name;
  manifest_.argv = args;
  manifest_.started_at = now_iso();

  int code = kOk;
  try {
    fs::create_directories(out_dir_);
    manifest_.config = resolved_config(selected);
    if (!common_.config_path.empty()) add_input(common_.config_path);
    manifest_.seeds["base"] = seed_.value;
    manifest_.seeds["source"] = to_string(seed_.source);
    manifest_.seeds["rng"] = std::string(kRngAlgorithm);

    if (top == "dataset") {
      if (leaf == "gen") dataset_gen();
      else if (leaf == "convert") dataset_convert();
      else dataset_split();
    } else if (top == "train") {
      train(leaf);
    } else if (top == "extract") extract();
    else if (top == "eval") eval();
    else if (top == "rank") rank();
    else if (top == "separability") separability_cmd();
    else if (top == "layersep") layersep();
    else if (top == "id") id();
    else if (top == "hypersphere") hypersphere();
    else if (top == "report") report();
  } catch (const ConfigError& e) {
    err_ << "error: " << e.what() << "\n";
    manifest_.status = "usage_error";
    manifest_.error = e.what();
    code = kUsage;
  } catch (const NumericError& e) {
    err_ << "numeric error: " << e.what() << "\n";
    manifest_.status = "numeric_error";
    manifest_.error = e.what();
    code = kNumericError;
  } catch (const std::exception& e) {
    err_ << "error: " << e.what() << "\n";
    manifest_.status = "data_error";
    manifest_.error = e.what();
    code = kDataError;
  }

  manifest_.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    write_manifest(out_dir_ / "manifest.json", manifest_);
  } catch (const std::exception& e) {
    err_ << "error: " << e.what() << "\n";
    if (code == kOk) code = kDataError;
  }
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return Runner(out, err).run(args);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace satpipe::cli
