#include "beatrisk/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "beatrisk/error.hpp"
#include "beatrisk/rng.hpp"

namespace beatrisk {

Optimizer parse_optimizer(std::string_view name) {
  if (name == "adam") return Optimizer::adam;
  if (name == "sgd") return Optimizer::sgd;
  throw Error("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

std::string to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) throw Error("train config: learning_rate must be > 0");
  if (c.epochs < 1) throw Error("train config: epochs must be >= 1");
  if (c.batch_size < 1) throw Error("train config: batch_size must be >= 1");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    throw Error("train config: adam betas must lie in [0, 1)");
  }
  if (!(c.eps > 0.0)) throw Error("train config: eps must be > 0");
}

namespace {

struct Example {
  const std::vector<float>* samples;
  int label;
};

class Stepper {
 public:
  Stepper(const TrainConfig& c, const std::vector<ParamTensor>& params) : c_(c) {
    if (c.optimizer == Optimizer::adam) {
      for (const auto& p : params) {
        m_.emplace_back(p.values.size(), 0.0);
        v_.emplace_back(p.values.size(), 0.0);
      }
    }
  }

  void step(std::vector<ParamTensor>& params, const std::vector<std::vector<double>>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(c_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(c_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i].trainable) continue;
      auto& w = params[i].values;
      const auto& g = grads[i];
      if (c_.optimizer == Optimizer::sgd) {
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= c_.learning_rate * g[j];
        continue;
      }
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = c_.beta1 * m[j] + (1.0 - c_.beta1) * g[j];
        v[j] = c_.beta2 * v[j] + (1.0 - c_.beta2) * g[j] * g[j];
        w[j] -= c_.learning_rate * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + c_.eps);
      }
    }
  }

 private:
  TrainConfig c_;
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace

TrainResult train(std::span<const BeatArchive> archives, const Net1dConfig& model, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  validate(config);
  validate(model);
  std::vector<Example> data;
  std::size_t length = 0;
  for (const auto& a : archives) {
    validate(a);
    for (std::size_t i = 0; i < a.beats.size(); ++i) {
      if (length == 0) length = a.beats[i].samples.size();
      if (a.beats[i].samples.size() != length) throw Error("train: beats differ in length across archives");
      data.push_back({&a.beats[i].samples, a.labels[i]});
    }
  }
  TrainResult result;
  for (const auto& e : data) (e.label == 1 ? result.n_positive : result.n_negative)++;
  if (result.n_positive == 0 || result.n_negative == 0) {
    throw Error("train: data must contain beats of both classes (positive " + std::to_string(result.n_positive) +
                ", negative " + std::to_string(result.n_negative) + ")");
  }

  Net1d net = Net1d::build(model, config.seed);
  Stepper stepper(config, net.parameters());
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::size_t b = end - start;
      // A trailing batch of one has no batch statistics; drop it.
      if (b == 1 && start > 0) break;
      Signal3 x(b, 1, length);
      std::vector<int> labels(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto& e = data[order[start + i]];
        std::copy(e.samples->begin(), e.samples->end(), x.row(i, 0));
        labels[i] = e.label;
      }
      ForwardTrace trace;
      net.forward(x, Mode::train, &trace, rng.next());
      Gradients g = net.backward(trace, labels);
      if (!std::isfinite(g.loss)) {
        throw Error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                    std::to_string(batch_index + 1));
      }
      loss_sum += g.loss * static_cast<double>(b);
      seen += b;
      stepper.step(net.mutable_parameters(), g.params);
    }
    const double mean = loss_sum / static_cast<double>(seen);
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  result.weights = net.to_weights();
  return result;
}

std::vector<double> score_beats(const Net1d& net, std::span<const std::vector<float>> beats, std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(beats.size());
  if (batch_size == 0) batch_size = 1;
  for (std::size_t start = 0; start < beats.size(); start += batch_size) {
    const std::size_t end = std::min(beats.size(), start + batch_size);
    const Matrix p = net.predict(make_batch(beats.subspan(start, end - start)));
    for (std::size_t i = 0; i < p.rows; ++i) out.push_back(p(i, 1));
  }
  return out;
}

std::vector<double> score_archive(const Net1d& net, const BeatArchive& archive) {
  std::vector<std::vector<float>> beats;
  beats.reserve(archive.beats.size());
  for (const auto& b : archive.beats) beats.push_back(b.samples);
  return score_beats(net, beats);
}

BeatArchive prepare_archive(const EcgRecordBundle& record, const SegmentParams& segment,
                            const std::optional<FilterSpec>& filter) {
  const EcgRecordBundle filtered = filter ? preprocess_record(record, *filter) : record;
  auto seg = segment_beats(filtered, segment);
  return assign_labels(filtered, select_sinus(std::move(seg.beats)), segment.length);
}

std::vector<FoldSplit> make_folds(std::span<const std::string> ids, std::span<const int> labels, std::size_t k,
                                  std::uint64_t seed) {
  if (ids.size() != labels.size()) throw Error("folds: one label per patient required");
  if (k < 2) throw Error("folds: k must be >= 2");
  if (ids.size() < k) {
    throw Error("folds: " + std::to_string(ids.size()) + " patients cannot fill " + std::to_string(k) + " folds");
  }
  std::set<std::string> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) throw Error("folds: duplicate patient id");

  std::vector<std::vector<std::size_t>> fold_members(k);
  Rng rng(seed);
  std::size_t next = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    rng.shuffle(members.begin(), members.end());
    for (std::size_t i : members) {
      fold_members[next].push_back(i);
      next = (next + 1) % k;
    }
  }
  std::vector<FoldSplit> out(k);
  for (std::size_t f = 0; f < k; ++f) {
    out[f].fold_index = f + 1;
    std::vector<bool> in_test(ids.size(), false);
    for (std::size_t i : fold_members[f]) in_test[i] = true;
    for (std::size_t i = 0; i < ids.size(); ++i) (in_test[i] ? out[f].test_ids : out[f].train_ids).push_back(ids[i]);
  }
  return out;
}

AverageRow average_folds(std::span<const FoldResult> folds) {
  AverageRow avg;
  if (folds.empty()) return avg;
  double auc = 0.0, rec = 0.0, prec = 0.0;
  std::size_t n_auc = 0, n_rec = 0, n_prec = 0;
  for (const auto& f : folds) {
    avg.accuracy += f.report.accuracy;
    avg.f1 += f.report.f1;
    if (f.report.auc) {
      auc += *f.report.auc;
      ++n_auc;
    }
    if (f.report.recall) {
      rec += *f.report.recall;
      ++n_rec;
    }
    if (f.report.precision) {
      prec += *f.report.precision;
      ++n_prec;
    }
  }
  const auto n = static_cast<double>(folds.size());
  avg.accuracy /= n;
  avg.f1 /= n;
  if (n_auc) avg.auc = auc / static_cast<double>(n_auc);
  if (n_rec) avg.recall = rec / static_cast<double>(n_rec);
  if (n_prec) avg.precision = prec / static_cast<double>(n_prec);
  return avg;
}

CrossValidationResult cross_validate(std::span<const BeatArchive> patients, const Net1dConfig& model,
                                     const TrainConfig& config, const CrossValidationOptions& options) {
  validate(config);
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& p : patients) {
    ids.push_back(p.record_id);
    labels.push_back(p.labels.empty() ? 0 : p.labels.front());
  }
  const auto splits = make_folds(ids, labels, options.k, config.seed);
  CrossValidationResult result;
  result.folds.resize(splits.size());

  auto run_fold = [&](std::size_t f) {
    const auto& split = splits[f];
    const std::set<std::string> test(split.test_ids.begin(), split.test_ids.end());
    std::vector<BeatArchive> train_set;
    std::vector<const BeatArchive*> test_set;
    for (const auto& p : patients) {
      if (test.count(p.record_id)) {
        test_set.push_back(&p);
      } else {
        train_set.push_back(p);
      }
    }
    TrainConfig c = config;
    c.seed = config.seed + split.fold_index;
    auto trained = train(train_set, model, c);
    const Net1d net(trained.weights);
    std::vector<double> scores;
    std::vector<int> y;
    for (const auto* p : test_set) {
      const auto s = score_archive(net, *p);
      scores.insert(scores.end(), s.begin(), s.end());
      y.insert(y.end(), p->labels.begin(), p->labels.end());
    }
    FoldResult& r = result.folds[f];
    r.split = split;
    r.epoch_loss = std::move(trained.epoch_loss);
    r.report = classification_metrics(scores, y, options.threshold);
    r.degenerate = !r.report.auc.has_value();
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, splits.size()));
  if (jobs == 1) {
    for (std::size_t f = 0; f < splits.size(); ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t f = next++; f < splits.size(); f = next++) {
          try {
            run_fold(f);
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
  result.average = average_folds(result.folds);
  return result;
}

}  // namespace beatrisk
