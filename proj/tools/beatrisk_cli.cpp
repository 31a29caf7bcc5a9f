// beatrisk: command-line front end for the beat-level AF risk pipeline.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "beatrisk/cam.hpp"
#include "beatrisk/error.hpp"
#include "beatrisk/evaluation.hpp"
#include "beatrisk/fusion.hpp"
#include "beatrisk/io_formats.hpp"
#include "beatrisk/net1d.hpp"
#include "beatrisk/preprocess.hpp"
#include "beatrisk/segmentation.hpp"
#include "beatrisk/synthetic.hpp"
#include "beatrisk/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace beatrisk;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out_dir;
};

Globals g;

fs::path out_path(const std::string& p) {
  fs::path path(p);
  if (!g.out_dir.empty() && path.is_relative()) path = fs::path(g.out_dir) / path;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

void write_json(const std::string& p, const ordered_json& j) { write_file(out_path(p), j.dump(2) + "\n"); }

template <class T>
ordered_json opt(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json to_json(const EvaluationReport& r) {
  ordered_json j;
  j["threshold"] = r.threshold;
  j["n_positive"] = r.n_positive;
  j["n_negative"] = r.n_negative;
  j["accuracy"] = r.accuracy;
  j["recall"] = opt(r.recall);
  j["precision"] = opt(r.precision);
  j["f1"] = r.f1;
  j["auc"] = opt(r.auc);
  j["confusion"] = {{"tn", r.confusion.tn}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tp", r.confusion.tp}};
  auto& roc = j["roc_points"] = ordered_json::array();
  for (const auto& p : r.roc_points) roc.push_back({p.fpr, p.tpr});
  auto& cal = j["calibration_bins"] = ordered_json::array();
  for (const auto& b : r.calibration_bins) {
    cal.push_back({{"lower", b.lower},
                   {"upper", b.upper},
                   {"mean_score", opt(b.mean_score)},
                   {"positive_rate", opt(b.positive_rate)},
                   {"count", b.count}});
  }
  return j;
}

ordered_json to_json(const Net1dConfig& c) {
  return {{"in_channels", c.in_channels}, {"base_filters", c.base_filters}, {"ratio", c.ratio},
          {"filter_list", c.filter_list}, {"block_list", c.block_list},     {"kernel_size", c.kernel_size},
          {"stride", c.stride},           {"groups_width", c.groups_width}, {"n_classes", c.n_classes},
          {"dropout_rate", c.dropout_rate}, {"se_reduction", c.se_reduction}};
}

ordered_json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs}, {"batch_size", c.batch_size}, {"seed", c.seed},
          {"optimizer", to_string(c.optimizer)}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(std::string(what) + ": '" + item + "' is not an integer");
    }
  }
  if (out.empty()) throw Error(std::string(what) + ": empty list");
  return out;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

RiskSeries to_risk_series(const ProbabilitySeries& p) {
  RiskSeries r;
  r.record_id = p.record_id;
  for (const auto& row : p.rows) {
    r.probabilities.push_back(row.probability);
    r.ordinals.push_back(row.beat_index);
    r.rpeaks.push_back(row.rpeak_sample);
  }
  return r;
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t jobs = std::max<std::size_t>(1, std::min(g.jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string in, out, payload = "binary";
  FilterSpec spec;
};

void run_preprocess(const PreprocessArgs& a) {
  const auto rec = load_record_bundle(a.in);
  const auto out = preprocess_record(rec, a.spec);
  save_record_bundle(out_path(a.out), out, a.payload == "inline" ? PayloadMode::inline_text : PayloadMode::binary);
}

struct SegmentArgs {
  std::string in, out, keep = "N", report;
  SegmentParams params;
};

void run_segment(const SegmentArgs& a) {
  const auto rec = load_record_bundle(a.in);
  auto seg = segment_beats(rec, a.params);
  std::vector<BeatType> keep;
  std::stringstream ss(a.keep);
  std::string code;
  while (std::getline(ss, code, ',')) keep.push_back(parse_beat_code(code));
  const std::size_t cut = seg.beats.size();
  auto kept = select_types(std::move(seg.beats), keep);
  const std::size_t n_kept = kept.size();
  save_beat_archive(out_path(a.out), assign_labels(rec, std::move(kept), a.params.length));
  if (!a.report.empty()) {
    write_json(a.report, {{"record_id", rec.record_id},
                          {"n_rpeaks", rec.rpeaks.size()},
                          {"segmented", cut},
                          {"boundary_skipped", seg.boundary_skipped},
                          {"kept", n_kept},
                          {"keep_types", a.keep}});
  }
}

struct ModelArgs {
  std::string filters = "16,32,32,40,40,64,64";
  std::string blocks = "2,2,2,2,2,2,2";
  int base_filters = 32;
  int kernel = 8;
  int groups_width = 4;
  double dropout = 0.5;
  int se_reduction = 2;

  Net1dConfig config() const {
    Net1dConfig c;
    c.filter_list = parse_int_list(filters, "--filters");
    c.block_list = parse_int_list(blocks, "--blocks");
    c.base_filters = base_filters;
    c.kernel_size = kernel;
    c.groups_width = groups_width;
    c.dropout_rate = dropout;
    c.se_reduction = se_reduction;
    validate(c);
    return c;
  }
};

struct TrainArgs {
  std::string data, out = "model.n1dw", report, optimizer = "adam";
  std::size_t folds = 1;
  std::size_t fold = 0;
  TrainConfig train;
  ModelArgs model;
  bool no_filter = false;
};

std::vector<BeatArchive> load_training_data(const TrainArgs& a) {
  std::vector<BeatArchive> out;
  auto beats = list_files(a.data, ".beats");
  if (!beats.empty()) {
    for (const auto& p : beats) out.push_back(load_beat_archive(p));
    return out;
  }
  const auto bundles = list_files(a.data, ".ecgb");
  if (bundles.empty()) throw Error("no .beats or .ecgb files in " + a.data);
  out.resize(bundles.size());
  const std::optional<FilterSpec> filter = a.no_filter ? std::nullopt : std::optional<FilterSpec>(FilterSpec{});
  parallel_for(bundles.size(), [&](std::size_t i) { out[i] = prepare_archive(load_record_bundle(bundles[i]), {}, filter); });
  return out;
}

ordered_json fold_json(const FoldResult& f) {
  return {{"fold", f.split.fold_index},       {"train_ids", f.split.train_ids}, {"test_ids", f.split.test_ids},
          {"degenerate", f.degenerate},       {"epoch_loss", f.epoch_loss},     {"metrics", to_json(f.report)}};
}

void run_train(TrainArgs a) {
  a.train.seed = g.seed;
  a.train.optimizer = parse_optimizer(a.optimizer);
  validate(a.train);
  const Net1dConfig model = a.model.config();
  const auto data = load_training_data(a);

  ordered_json report;
  report["model"] = to_json(model);
  report["train"] = to_json(a.train);
  report["class_reweighting"] = "none";

  if (a.folds >= 2 && a.fold == 0) {
    CrossValidationOptions cv;
    cv.k = a.folds;
    cv.jobs = g.jobs;
    const auto res = cross_validate(data, model, a.train, cv);
    auto& folds = report["folds"] = ordered_json::array();
    for (const auto& f : res.folds) folds.push_back(fold_json(f));
    report["average"] = {{"accuracy", res.average.accuracy},
                         {"recall", opt(res.average.recall)},
                         {"precision", opt(res.average.precision)},
                         {"f1", res.average.f1},
                         {"auc", opt(res.average.auc)}};
  }

  std::vector<BeatArchive> train_set;
  if (a.fold > 0) {
    if (a.folds < 2 || a.fold > a.folds) throw Error("--fold must lie in 1..--folds");
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (const auto& p : data) {
      ids.push_back(p.record_id);
      labels.push_back(p.labels.empty() ? 0 : p.labels.front());
    }
    const auto split = make_folds(ids, labels, a.folds, a.train.seed)[a.fold - 1];
    const std::set<std::string> test(split.test_ids.begin(), split.test_ids.end());
    for (const auto& p : data) {
      if (!test.count(p.record_id)) train_set.push_back(p);
    }
    report["holdout"] = {{"fold", split.fold_index}, {"train_ids", split.train_ids}, {"test_ids", split.test_ids}};
  } else {
    train_set = data;
  }
  const auto res = train(train_set, model, a.train, [](int epoch, double loss) {
    std::fprintf(stderr, "epoch %d loss %.6f\n", epoch, loss);
  });
  save_weights(out_path(a.out), res.weights);
  report["final"] = {{"n_positive", res.n_positive}, {"n_negative", res.n_negative}, {"epoch_loss", res.epoch_loss},
                     {"parameters", count_parameters(res.weights).total()}};
  if (!a.report.empty()) write_json(a.report, report);
}

struct InferArgs {
  std::string model, out;
  std::vector<std::string> beats;
};

void run_infer(const InferArgs& a) {
  const auto weights = load_weights(a.model);
  const Net1d net(weights);
  const auto checksum = weights_checksum(weights);
  const bool many = a.beats.size() > 1;
  parallel_for(a.beats.size(), [&](std::size_t i) {
    const auto archive = load_beat_archive(a.beats[i]);
    const auto scores = score_archive(net, archive);
    ProbabilitySeries s;
    s.record_id = archive.record_id;
    s.model_checksum = checksum;
    if (!archive.labels.empty()) s.patient_label = archive.labels.front();
    for (std::size_t k = 0; k < scores.size(); ++k) {
      s.rows.push_back({archive.beats[k].ordinal, archive.beats[k].rpeak_index, scores[k]});
    }
    const std::string out = many ? (fs::path(a.out) / (archive.record_id + ".probs")).string() : a.out;
    save_probability_series(out_path(out), s);
  });
}

struct CamArgs {
  std::string model, beats, out = "cam.svg", layer;
  std::size_t index = 0;
  int target = 1;
};

void run_cam(const CamArgs& a) {
  const Net1d net(load_weights(a.model));
  const auto archive = load_beat_archive(a.beats);
  if (a.index >= archive.beats.size()) {
    throw Error("beat index " + std::to_string(a.index) + " out of range (archive has " +
                std::to_string(archive.beats.size()) + " beats)");
  }
  const auto& beat = archive.beats[a.index].samples;
  const auto cam = compute_cam(net, beat, a.target, a.layer);
  const auto svg = out_path(a.out);
  auto csv = svg;
  csv.replace_extension(".csv");
  render_cam(svg, csv, beat, cam);
}

struct FuseArgs {
  std::string probs, out = "decision.json", aggregate = "max_group";
  std::size_t group_size = 150;
  double threshold = 0.5;
};

void run_fuse(const FuseArgs& a) {
  const auto series = to_risk_series(load_probability_series(a.probs));
  const auto d = bid_patient(series, a.group_size, a.threshold, parse_aggregation(a.aggregate));
  ordered_json j;
  j["record_id"] = series.record_id;
  j["group_size"] = a.group_size;
  j["threshold"] = a.threshold;
  j["aggregation"] = a.aggregate;
  j["decision"] = d.decision;
  j["score"] = d.score;
  auto& groups = j["groups"] = ordered_json::array();
  for (const auto& gr : d.groups) {
    groups.push_back({{"m", gr.m},
                      {"alpha", gr.alpha},
                      {"beta", gr.beta},
                      {"n_members", gr.n_members},
                      {"p_avg", gr.p_avg},
                      {"decision", opt(gr.decision)}});
  }
  write_json(a.out, j);
}

struct TrendArgs {
  std::string probs, bundle, svg, out = "trend.csv";
  std::size_t group_size = kTrendGroupSize;
  double threshold = 0.5;
};

void run_trend(const TrendArgs& a) {
  const auto series = to_risk_series(load_probability_series(a.probs));
  const auto record = load_record_bundle(a.bundle);
  if (record.record_id != series.record_id) {
    throw Error("record id mismatch: probs " + series.record_id + " vs bundle " + record.record_id);
  }
  const auto records = tri(series, tgd(series, a.group_size), record.af_episodes, a.threshold);
  write_trend_csv(out_path(a.out), records);
  if (!a.svg.empty()) render_trend_svg(out_path(a.svg), records, record, a.threshold);
}

struct EvaluateArgs {
  std::vector<std::string> probs, labels;
  std::string out = "metrics.json", quintiles;
  double threshold = 0.5;
};

void run_evaluate(const EvaluateArgs& a) {
  if (!a.labels.empty() && a.labels.size() != a.probs.size()) {
    throw Error("--labels needs one .beats file per --probs file");
  }
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<std::vector<float>> beats;
  for (std::size_t i = 0; i < a.probs.size(); ++i) {
    const auto p = load_probability_series(a.probs[i]);
    if (a.labels.empty()) {
      if (!p.patient_label) throw Error(a.probs[i] + ": no patient_label header; pass --labels");
      for (const auto& row : p.rows) {
        scores.push_back(row.probability);
        labels.push_back(*p.patient_label);
      }
      continue;
    }
    const auto archive = load_beat_archive(a.labels[i]);
    if (archive.beats.size() != p.rows.size()) {
      throw Error(a.probs[i] + ": " + std::to_string(p.rows.size()) + " rows but " + a.labels[i] + " has " +
                  std::to_string(archive.beats.size()) + " beats");
    }
    for (std::size_t k = 0; k < p.rows.size(); ++k) {
      scores.push_back(p.rows[k].probability);
      labels.push_back(archive.labels[k]);
      beats.push_back(archive.beats[k].samples);
    }
  }
  if (scores.empty()) throw Error("evaluate: no beats");
  write_json(a.out, to_json(classification_metrics(scores, labels, a.threshold)));
  if (!a.quintiles.empty()) {
    if (beats.empty()) throw Error("--quintiles needs --labels .beats files for the waveforms");
    const auto q = risk_quintile_waveforms(beats, scores);
    std::string csv = "t,q1,q2,q3,q4,q5\n";
    char buf[64];
    for (std::size_t t = 0; t < q.mean[0].size(); ++t) {
      csv += std::to_string(t);
      for (const auto& m : q.mean) {
        std::snprintf(buf, sizeof buf, ",%.9g", m[t]);
        csv += buf;
      }
      csv += "\n";
    }
    write_file(out_path(a.quintiles), csv);
  }
}

struct SubgroupArgs {
  std::vector<std::string> probs, bundles;
  std::string out = "subgroup.json";
  double window = 10.0;
  double threshold = 0.5;
};

void run_subgroup(const SubgroupArgs& a) {
  std::map<std::string, EcgRecordBundle> records;
  for (const auto& b : a.bundles) {
    auto r = load_record_bundle(b);
    records[r.record_id] = std::move(r);
  }
  std::vector<SubgroupAssignment> assign;
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& path : a.probs) {
    const auto p = load_probability_series(path);
    const auto it = records.find(p.record_id);
    if (it == records.end()) throw Error("no bundle for record " + p.record_id);
    for (const auto& row : p.rows) {
      assign.push_back(subgroup_classify(row.rpeak_sample, it->second, a.window));
      scores.push_back(row.probability);
      labels.push_back(it->second.patient_label);
    }
  }
  const auto res = subgroup_evaluate(assign, scores, labels, a.threshold);
  ordered_json j;
  j["window_seconds"] = a.window;
  auto& cats = j["categories"] = ordered_json::array();
  for (const auto& r : res) {
    cats.push_back({{"category", to_string(r.category)},
                    {"in_category_af_beats", r.in_category},
                    {"non_af_beats", r.non_af},
                    {"metrics", r.report ? to_json(*r.report) : ordered_json(nullptr)}});
  }
  write_json(a.out, j);
}

struct SweepArgs {
  std::string probs_dir, out = "sweep.csv", n = "1,2,5,10,20,50,100,150", aggregate = "max_group";
  double threshold = 0.5;
};

void run_sweep(const SweepArgs& a) {
  std::vector<RiskSeries> series;
  std::vector<int> labels;
  for (const auto& path : list_files(a.probs_dir, ".probs")) {
    const auto p = load_probability_series(path);
    if (!p.patient_label) throw Error(path.string() + ": no patient_label header");
    if (p.rows.empty()) continue;
    series.push_back(to_risk_series(p));
    labels.push_back(*p.patient_label);
  }
  std::vector<std::size_t> ns;
  for (int v : parse_int_list(a.n, "--n")) {
    if (v < 1) throw Error("--n values must be >= 1");
    ns.push_back(static_cast<std::size_t>(v));
  }
  const auto res = bid_sweep(series, labels, ns, a.threshold, parse_aggregation(a.aggregate));
  std::string csv = "n,auc,accuracy,f1\n";
  char buf[128];
  for (const auto& r : res.rows) {
    char auc[32] = "";
    if (r.auc) std::snprintf(auc, sizeof auc, "%.17g", *r.auc);
    std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g\n", r.n, auc, r.accuracy, r.f1);
    csv += buf;
  }
  write_file(out_path(a.out), csv);
  std::printf("auc_nondecreasing=%d\n", res.auc_nondecreasing ? 1 : 0);
}

struct BenchArgs {
  std::string model, out;
  std::size_t runs = 100;
};

void run_bench(const BenchArgs& a) {
  const ModelWeights w = a.model.empty() ? Net1d::build(Net1dConfig{}, g.seed).to_weights() : load_weights(a.model);
  const auto r = benchmark(w, a.runs);
  ordered_json j = {{"parameters", r.parameters},
                    {"trainable_parameters", r.trainable_parameters},
                    {"single_beat_median_s", r.single_beat_median_s},
                    {"batch32_median_s", r.batch32_median_s},
                    {"runs", r.runs},
                    {"environment", r.environment}};
  if (a.out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(a.out, j);
  }
}

struct SynthArgs {
  std::string out = "synthetic";
  std::size_t patients = 20;
  std::size_t beats = 200;
  std::string payload = "binary";
};

void run_synth(const SynthArgs& a) {
  const auto bundles = generate_synthetic(a.patients, a.beats, g.seed);
  const auto dir = out_path(a.out);
  fs::create_directories(dir);
  for (const auto& b : bundles) {
    save_record_bundle(dir / (b.record_id + ".ecgb"), b,
                       a.payload == "inline" ? PayloadMode::inline_text : PayloadMode::binary);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beat-level atrial fibrillation risk pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value configuration file; flags take precedence");
  app.allow_config_extras(false);
  app.set_version_flag("--version",
                       std::string("beatrisk ") + BEATRISK_VERSION + " (weights format " +
                           std::to_string(kWeightsFormatVersion) + ")");
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Record-level worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Root directory for relative output paths");

  std::function<void()> action;

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Bandpass-filter a record bundle");
  c_pre->add_option("--in", pre.in)->required();
  c_pre->add_option("--out", pre.out)->required();
  c_pre->add_option("--low", pre.spec.low_hz)->capture_default_str();
  c_pre->add_option("--high", pre.spec.high_hz)->capture_default_str();
  c_pre->add_option("--order", pre.spec.order)->capture_default_str();
  c_pre->add_option("--payload", pre.payload)->check(CLI::IsMember({"inline", "binary"}))->capture_default_str();
  c_pre->callback([&] { action = [&] { run_preprocess(pre); }; });

  SegmentArgs seg;
  auto* c_seg = app.add_subcommand("segment", "Cut labelled beats around R-peaks");
  c_seg->add_option("--in", seg.in)->required();
  c_seg->add_option("--out", seg.out)->required();
  c_seg->add_option("--length", seg.params.length)->capture_default_str();
  c_seg->add_option("--skip-head", seg.params.skip_head)->capture_default_str();
  c_seg->add_option("--skip-tail", seg.params.skip_tail)->capture_default_str();
  c_seg->add_option("--keep", seg.keep, "Comma-separated beat codes to keep")->capture_default_str();
  c_seg->add_option("--report", seg.report, "JSON skip report");
  c_seg->callback([&] { action = [&] { run_segment(seg); }; });

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train Net1D on a directory of .beats (or .ecgb) files");
  c_tr->add_option("--data", tr.data)->required();
  c_tr->add_option("--out", tr.out)->capture_default_str();
  c_tr->add_option("--report", tr.report);
  c_tr->add_option("--folds", tr.folds, "Patient-level folds; >= 2 runs cross-validation")->capture_default_str();
  c_tr->add_option("--fold", tr.fold, "Train on all folds but this one (1-based) instead of cross-validating");
  c_tr->add_option("--epochs", tr.train.epochs)->capture_default_str();
  c_tr->add_option("--lr", tr.train.learning_rate)->capture_default_str();
  c_tr->add_option("--batch", tr.train.batch_size)->capture_default_str();
  c_tr->add_option("--optimizer", tr.optimizer)->check(CLI::IsMember({"adam", "sgd"}))->capture_default_str();
  c_tr->add_option("--filters", tr.model.filters)->capture_default_str();
  c_tr->add_option("--blocks", tr.model.blocks)->capture_default_str();
  c_tr->add_option("--base-filters", tr.model.base_filters)->capture_default_str();
  c_tr->add_option("--kernel", tr.model.kernel)->capture_default_str();
  c_tr->add_option("--groups-width", tr.model.groups_width)->capture_default_str();
  c_tr->add_option("--dropout", tr.model.dropout)->capture_default_str();
  c_tr->add_option("--se-reduction", tr.model.se_reduction)->capture_default_str();
  c_tr->add_flag("--no-filter", tr.no_filter, "Skip bandpass filtering when reading .ecgb files");
  c_tr->callback([&] { action = [&] { run_train(tr); }; });

  InferArgs inf;
  auto* c_inf = app.add_subcommand("infer", "Score beats; writes one .probs per archive");
  c_inf->add_option("--model", inf.model)->required();
  c_inf->add_option("--beats", inf.beats)->required();
  c_inf->add_option("--out", inf.out, "Output file, or directory when several archives are given")->required();
  c_inf->callback([&] { action = [&] { run_infer(inf); }; });

  CamArgs cam;
  auto* c_cam = app.add_subcommand("cam", "Saliency map of one beat");
  c_cam->add_option("--model", cam.model)->required();
  c_cam->add_option("--beats", cam.beats)->required();
  c_cam->add_option("--index", cam.index)->capture_default_str();
  c_cam->add_option("--class", cam.target)->check(CLI::Range(0, 1))->capture_default_str();
  c_cam->add_option("--layer", cam.layer, "Layer name; default is the last convolution");
  c_cam->add_option("--out", cam.out, "SVG path; the CSV sidecar takes the same stem")->capture_default_str();
  c_cam->callback([&] { action = [&] { run_cam(cam); }; });

  FuseArgs fu;
  auto* c_fu = app.add_subcommand("fuse", "Group-mean decision for one probability series");
  c_fu->add_option("--probs", fu.probs)->required();
  c_fu->add_option("--group-size", fu.group_size)->capture_default_str();
  c_fu->add_option("--threshold", fu.threshold)->capture_default_str();
  c_fu->add_option("--aggregate", fu.aggregate)->capture_default_str();
  c_fu->add_option("--out", fu.out)->capture_default_str();
  c_fu->callback([&] { action = [&] { run_fuse(fu); }; });

  TrendArgs te;
  auto* c_te = app.add_subcommand("trend", "Per-group risk trend with AF overlap");
  c_te->add_option("--probs", te.probs)->required();
  c_te->add_option("--bundle", te.bundle)->required();
  c_te->add_option("--group-size", te.group_size)->capture_default_str();
  c_te->add_option("--threshold", te.threshold)->capture_default_str();
  c_te->add_option("--svg", te.svg);
  c_te->add_option("--out", te.out)->capture_default_str();
  c_te->callback([&] { action = [&] { run_trend(te); }; });

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Beat-level metrics");
  c_ev->add_option("--probs", ev.probs)->required();
  c_ev->add_option("--labels", ev.labels, ".beats archives matching --probs; default uses the patient label header");
  c_ev->add_option("--threshold", ev.threshold)->capture_default_str();
  c_ev->add_option("--quintiles", ev.quintiles, "CSV of the five risk-quintile mean waveforms");
  c_ev->add_option("--out", ev.out)->capture_default_str();
  c_ev->callback([&] { action = [&] { run_evaluate(ev); }; });

  SubgroupArgs sg;
  auto* c_sg = app.add_subcommand("subgroup", "Metrics per beat subgroup");
  c_sg->add_option("--probs", sg.probs)->required();
  c_sg->add_option("--bundle", sg.bundles)->required();
  c_sg->add_option("--window", sg.window, "Seconds")->capture_default_str();
  c_sg->add_option("--threshold", sg.threshold)->capture_default_str();
  c_sg->add_option("--out", sg.out)->capture_default_str();
  c_sg->callback([&] { action = [&] { run_subgroup(sg); }; });

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "Patient-level metrics across group sizes");
  c_sw->add_option("--probs-dir", sw.probs_dir)->required();
  c_sw->add_option("--n", sw.n)->capture_default_str();
  c_sw->add_option("--threshold", sw.threshold)->capture_default_str();
  c_sw->add_option("--aggregate", sw.aggregate)->capture_default_str();
  c_sw->add_option("--out", sw.out)->capture_default_str();
  c_sw->callback([&] { action = [&] { run_sweep(sw); }; });

  BenchArgs be;
  auto* c_be = app.add_subcommand("bench", "Parameter count and inference latency");
  c_be->add_option("--model", be.model, "Weights; default builds the standard configuration from --seed");
  c_be->add_option("--runs", be.runs)->capture_default_str();
  c_be->add_option("--out", be.out);
  c_be->callback([&] { action = [&] { run_bench(be); }; });

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Generate a synthetic corpus of record bundles");
  c_sy->add_option("--patients", sy.patients)->capture_default_str();
  c_sy->add_option("--beats", sy.beats, "Sinus beats per patient")->capture_default_str();
  c_sy->add_option("--payload", sy.payload)->check(CLI::IsMember({"inline", "binary"}))->capture_default_str();
  c_sy->add_option("--out", sy.out, "Output directory")->capture_default_str();
  c_sy->callback([&] { action = [&] { run_synth(sy); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (action) action();
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::fprintf(stderr, "error: %s\n", msg.c_str());
    return 1;
  }
  return 0;
}
