#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kanfire/cheby_kan.hpp"
#include "kanfire/matrix.hpp"
#include "kanfire/raster.hpp"

namespace kanfire {

inline constexpr int kUnburnedClass = 0;
inline constexpr int kBurnedClass = 1;

struct PixelIndex {
    std::size_t row = 0;
    std::size_t col = 0;
    auto operator<=>(const PixelIndex&) const = default;
};

struct LabeledSampleSet {
    Matrix features;  // N x B_in
    std::vector<int> labels;
    std::vector<PixelIndex> pixels;
    std::vector<std::string> band_names;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t count(int label) const;
    LabeledSampleSet subset(std::span<const std::size_t> rows) const;

    // Sizes agree, labels are 0/1, both classes present, no pixel repeated.
    void validate() const;
};

// Draws up to n_per_class pixels per class, uniformly without replacement.
// Pixels with a nodata/non-finite feature band or nodata label are skipped.
// When a class has fewer valid pixels than requested, all are taken and a
// warning is logged. Samples are returned in row-major pixel order.
LabeledSampleSet stratified_sample(const RasterGrid& feature_grid, const RasterGrid& label_grid,
                                   std::size_t n_per_class, std::uint64_t seed);

// Per-class split: train gets round(train_fraction * n_c) samples of class c,
// the remainder goes to test. Both halves keep the input's sample order.
std::pair<LabeledSampleSet, LabeledSampleSet> split_train_test(const LabeledSampleSet& samples,
                                                               double train_fraction, std::uint64_t seed);

struct TrainConfig {
    ModelConfig model;
    AdamHyperparams adam;
    std::size_t batch_size = 256;
    int max_epochs = 100;
    int patience = 10;                  // epochs without validation improvement
    double validation_fraction = 0.1;   // carved from the training split
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double validation_accuracy = 0.0;
};

struct TrainingResult {
    ChebyKanModel model;  // best validation loss, float32-quantized
    std::vector<EpochLog> log;
    int best_epoch = 0;   // 0 when no epoch ran
};

// Trains a fresh model. Deterministic for a given config, data and seed.
// Throws TrainingDiverged when a loss turns non-finite.
TrainingResult train(const TrainConfig& config, const LabeledSampleSet& train_set, std::uint64_t seed);

// Rows = true class, columns = predicted class.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, 2>, 2> counts{};

    std::int64_t total() const;
    static ConfusionMatrix from_predictions(std::span<const int> truth, std::span<const int> predicted);
};

double overall_accuracy(const ConfusionMatrix& cm);
double kappa(const ConfusionMatrix& cm);
double f1_score(const ConfusionMatrix& cm, int positive_class = kBurnedClass);

struct MetricsReport {
    double overall_accuracy = 0.0;
    double kappa = 0.0;
    double f1_burned = 0.0;
    ConfusionMatrix confusion_matrix;

    static MetricsReport from(const ConfusionMatrix& cm);
};

MetricsReport evaluate(const ChebyKanModel& model, const LabeledSampleSet& test_set);

}  // namespace kanfire
