#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beatrisk/evaluation.hpp"
#include "beatrisk/model_weights.hpp"
#include "beatrisk/net1d.hpp"
#include "beatrisk/preprocess.hpp"
#include "beatrisk/record.hpp"
#include "beatrisk/segmentation.hpp"

namespace beatrisk {

enum class Optimizer { adam, sgd };

Optimizer parse_optimizer(std::string_view name);
std::string to_string(Optimizer o);

struct TrainConfig {
  double learning_rate = 1e-5;
  int epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void validate(const TrainConfig& config);

struct TrainResult {
  ModelWeights weights;
  std::vector<double> epoch_loss;  // mean training loss per epoch
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Mini-batch training from a fresh model built with config.seed.
TrainResult train(std::span<const BeatArchive> archives, const Net1dConfig& model,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Eval-mode class-1 probabilities, in order.
std::vector<double> score_beats(const Net1d& net, std::span<const std::vector<float>> beats,
                                std::size_t batch_size = 64);
std::vector<double> score_archive(const Net1d& net, const BeatArchive& archive);

/// Filter (optional), segment, keep sinus beats and label them.
BeatArchive prepare_archive(const EcgRecordBundle& record, const SegmentParams& segment = {},
                            const std::optional<FilterSpec>& filter = FilterSpec{});

struct FoldSplit {
  std::size_t fold_index = 0;  // 1-based
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// Patient-level folds, stratified by patient label: each class is shuffled
/// and dealt round-robin over the folds.
std::vector<FoldSplit> make_folds(std::span<const std::string> patient_ids, std::span<const int> patient_labels,
                                  std::size_t k, std::uint64_t seed);

struct FoldResult {
  FoldSplit split;
  std::vector<double> epoch_loss;
  EvaluationReport report;
  bool degenerate = false;  // single-class test set
};

struct AverageRow {
  double accuracy = 0.0;
  std::optional<double> recall;
  std::optional<double> precision;
  double f1 = 0.0;
  std::optional<double> auc;  // over non-degenerate folds
};

struct CrossValidationResult {
  std::vector<FoldResult> folds;
  AverageRow average;
};

struct CrossValidationOptions {
  std::size_t k = 5;
  double threshold = 0.5;
  std::size_t jobs = 1;
};

/// One archive per patient. Folds may run on `jobs` threads; each fold is
/// deterministic on its own so results do not depend on the job count.
CrossValidationResult cross_validate(std::span<const BeatArchive> patients, const Net1dConfig& model,
                                     const TrainConfig& config, const CrossValidationOptions& options = {});

AverageRow average_folds(std::span<const FoldResult> folds);

}  // namespace beatrisk
