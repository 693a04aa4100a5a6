#include "kanfire/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kanfire/error.hpp"
#include "kanfire/log.hpp"
#include "kanfire/rng.hpp"

namespace kanfire {

std::size_t LabeledSampleSet::count(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

LabeledSampleSet LabeledSampleSet::subset(std::span<const std::size_t> rows) const {
    LabeledSampleSet out;
    out.band_names = band_names;
    out.seed = seed;
    out.features = Matrix(rows.size(), features.cols);
    out.labels.reserve(rows.size());
    out.pixels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = features.row(rows[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels.push_back(labels[rows[i]]);
        if (!pixels.empty()) out.pixels.push_back(pixels[rows[i]]);
    }
    return out;
}

void LabeledSampleSet::validate() const {
    if (features.rows != labels.size()) throw InvalidArgument("feature rows and label count differ");
    if (!pixels.empty() && pixels.size() != labels.size()) throw InvalidArgument("pixel index count differs");
    for (int l : labels) {
        if (l != kUnburnedClass && l != kBurnedClass) throw InvalidArgument("labels must be 0 or 1");
    }
    if (count(kUnburnedClass) == 0) throw InvalidArgument("class 0 empty");
    if (count(kBurnedClass) == 0) throw InvalidArgument("class 1 empty");
    auto sorted = pixels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidArgument("a pixel appears twice in the sample set");
    }
}

LabeledSampleSet stratified_sample(const RasterGrid& feature_grid, const RasterGrid& label_grid,
                                   std::size_t n_per_class, std::uint64_t seed) {
    const NamedGrid grids[] = {{"features", feature_grid}, {"labels", label_grid}};
    align_check(grids);
    if (feature_grid.band_count() == 0) throw InvalidArgument("feature grid has no bands");
    if (label_grid.band_count() == 0) throw InvalidArgument("label grid has no bands");

    const auto& label_values = label_grid.band(0).values;
    std::array<std::vector<std::size_t>, 2> candidates;
    for (std::size_t p = 0; p < label_values.size(); ++p) {
        const float l = label_values[p];
        if (label_grid.is_nodata(l)) continue;
        if (l != 0.0f && l != 1.0f) {
            throw InvalidArgument("label grid holds value " + std::to_string(l) + "; expected 0, 1 or nodata");
        }
        bool valid = true;
        for (const auto& band : feature_grid.bands()) {
            const float v = band.values[p];
            if (feature_grid.is_nodata(v) || !std::isfinite(v)) {
                valid = false;
                break;
            }
        }
        if (valid) candidates[l == 1.0f ? 1 : 0].push_back(p);
    }

    Rng rng(seed);
    std::vector<std::size_t> chosen;
    for (int cls = 0; cls < 2; ++cls) {
        auto& pool = candidates[static_cast<std::size_t>(cls)];
        if (pool.empty()) throw InvalidArgument("class " + std::to_string(cls) + " empty");
        std::size_t take = n_per_class;
        if (pool.size() < n_per_class) {
            log::warn("class " + std::to_string(cls) + " has only " + std::to_string(pool.size()) +
                      " valid pixels (requested " + std::to_string(n_per_class) + "); using all");
            take = pool.size();
        }
        // Partial Fisher-Yates: the first `take` entries become a uniform sample.
        for (std::size_t i = 0; i < take; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(chosen.begin(), chosen.end());

    LabeledSampleSet out;
    out.seed = seed;
    out.band_names = feature_grid.band_names();
    out.features = Matrix(chosen.size(), feature_grid.band_count());
    for (std::size_t s = 0; s < chosen.size(); ++s) {
        const std::size_t p = chosen[s];
        for (std::size_t b = 0; b < feature_grid.band_count(); ++b) {
            out.features(s, b) = static_cast<double>(feature_grid.band(b).values[p]);
        }
        out.labels.push_back(label_values[p] == 1.0f ? kBurnedClass : kUnburnedClass);
        out.pixels.push_back({p / feature_grid.width(), p % feature_grid.width()});
    }
    return out;
}

std::pair<LabeledSampleSet, LabeledSampleSet> split_train_test(const LabeledSampleSet& samples,
                                                               double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train_fraction must be in (0, 1)");
    Rng rng(seed);
    std::vector<std::size_t> train_rows, test_rows;
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples.labels[i] == cls) rows.push_back(i);
        }
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
        if (n_train >= rows.size()) {
            throw InvalidArgument("class " + std::to_string(cls) + " would receive 0 test samples");
        }
        if (n_train == 0) throw InvalidArgument("class " + std::to_string(cls) + " would receive 0 train samples");
        rng.shuffle(std::span<std::size_t>(rows));
        train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
        test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    return {samples.subset(train_rows), samples.subset(test_rows)};
}

namespace {

Matrix rows_of(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = m.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

// Mean loss and accuracy in infer mode, evaluated in fixed-size chunks.
std::pair<double, double> infer_loss(const ChebyKanModel& model, const LabeledSampleSet& set) {
    constexpr std::size_t kChunk = 1024;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < set.size(); start += kChunk) {
        const std::size_t end = std::min(set.size(), start + kChunk);
        std::vector<std::size_t> rows(end - start);
        std::iota(rows.begin(), rows.end(), start);
        const Matrix logits = model_infer(model, rows_of(set.features, rows));
        const std::span<const int> labels(set.labels.data() + start, end - start);
        loss_sum += cross_entropy_loss(logits, labels).loss * static_cast<double>(end - start);
        const auto pred = predict_classes(logits);
        for (std::size_t i = 0; i < pred.size(); ++i) correct += (pred[i] == labels[i]);
    }
    const double n = static_cast<double>(set.size());
    return {loss_sum / n, static_cast<double>(correct) / n};
}

// Batch boundaries covering [0, n); a trailing batch of one row is merged
// into its predecessor because train-mode batch norm needs two rows.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) out.emplace_back(start, std::min(n, start + batch_size));
    if (out.size() > 1 && out.back().second - out.back().first < 2) {
        out[out.size() - 2].second = out.back().second;
        out.pop_back();
    }
    return out;
}

}  // namespace

TrainingResult train(const TrainConfig& config, const LabeledSampleSet& train_set, std::uint64_t seed) {
    train_set.validate();
    if (config.batch_size < 2) throw InvalidArgument("batch_size must be at least 2");
    if (!(config.validation_fraction > 0.0 && config.validation_fraction < 1.0)) {
        throw InvalidArgument("validation_fraction must be in (0, 1)");
    }
    auto [fit_set, val_set] = split_train_test(train_set, 1.0 - config.validation_fraction, seed);
    if (fit_set.size() < 2) throw InvalidArgument("training split too small");

    Rng rng(seed);
    auto band_names = train_set.band_names;
    if (band_names.empty()) {
        for (std::size_t b = 0; b < train_set.features.cols; ++b) band_names.push_back("band" + std::to_string(b));
    }
    ChebyKanModel model = ChebyKanModel::initialize(band_names, config.model, seed, rng);

    // Standardization statistics from the fitting portion only.
    const std::size_t in = fit_set.features.cols;
    for (std::size_t c = 0; c < in; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < fit_set.size(); ++r) mean += fit_set.features(r, c);
        mean /= static_cast<double>(fit_set.size());
        double var = 0.0;
        for (std::size_t r = 0; r < fit_set.size(); ++r) {
            const double d = fit_set.features(r, c) - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / static_cast<double>(fit_set.size()));
        model.feature_means[c] = mean;
        model.feature_stds[c] = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
    }
    model.quantize();

    TrainingResult result{model, {}, 0};
    if (config.max_epochs <= 0) return result;

    std::vector<AdamState> adam(model.parameter_groups().size());
    double best_loss = std::numeric_limits<double>::infinity();
    int stale = 0;
    std::vector<std::size_t> order(fit_set.size());
    std::iota(order.begin(), order.end(), 0);
    const auto ranges = batch_ranges(order.size(), config.batch_size);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        for (const auto& [begin, end] : ranges) {
            const std::span<const std::size_t> rows(order.data() + begin, end - begin);
            const Matrix x = rows_of(fit_set.features, rows);
            std::vector<int> y(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) y[i] = fit_set.labels[rows[i]];

            ForwardCache cache;
            const Matrix logits = model_forward(model, x, Mode::train, &rng, &cache);
            const auto loss = cross_entropy_loss(logits, y);
            if (!std::isfinite(loss.loss)) {
                throw TrainingDiverged("training diverged: non-finite loss at epoch " + std::to_string(epoch), epoch);
            }
            loss_sum += loss.loss * static_cast<double>(rows.size());
            const ModelGrads grads = model_backward(model, cache, loss.grad);
            auto params = model.parameter_groups();
            const auto grad_groups = grads.groups();
            for (std::size_t g = 0; g < params.size(); ++g) adam_step(params[g], grad_groups[g], adam[g], config.adam);
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = loss_sum / static_cast<double>(fit_set.size());
        std::tie(entry.validation_loss, entry.validation_accuracy) = infer_loss(model, val_set);
        if (!std::isfinite(entry.validation_loss)) {
            throw TrainingDiverged("training diverged: non-finite validation loss at epoch " + std::to_string(epoch),
                                   epoch);
        }
        result.log.push_back(entry);
        log::debug("epoch " + std::to_string(epoch) + " train_loss " + std::to_string(entry.train_loss) +
                   " val_loss " + std::to_string(entry.validation_loss));

        if (entry.validation_loss < best_loss) {
            best_loss = entry.validation_loss;
            stale = 0;
            result.model = model;
            result.model.quantize();
            result.best_epoch = epoch;
        } else if (++stale >= config.patience) {
            log::info("early stop at epoch " + std::to_string(epoch));
            break;
        }
    }
    return result;
}

std::int64_t ConfusionMatrix::total() const {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

ConfusionMatrix ConfusionMatrix::from_predictions(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw InvalidArgument("truth and prediction lengths differ");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if ((truth[i] != 0 && truth[i] != 1) || (predicted[i] != 0 && predicted[i] != 1)) {
            throw InvalidArgument("class labels must be 0 or 1");
        }
        ++cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    return cm;
}

namespace {

void require_nonempty(const ConfusionMatrix& cm) {
    for (const auto& row : cm.counts) {
        for (auto v : row) {
            if (v < 0) throw InvalidArgument("confusion matrix counts must be non-negative");
        }
    }
    if (cm.total() <= 0) throw InvalidArgument("empty confusion matrix");
}

}  // namespace

double overall_accuracy(const ConfusionMatrix& cm) {
    require_nonempty(cm);
    return static_cast<double>(cm.counts[0][0] + cm.counts[1][1]) / static_cast<double>(cm.total());
}

double kappa(const ConfusionMatrix& cm) {
    require_nonempty(cm);
    // (p_o - p_e) / (1 - p_e) scaled by N^2 so that both terms are exact integers.
    __extension__ typedef __int128 wide;
    const wide n = cm.total();
    const wide trace = cm.counts[0][0] + cm.counts[1][1];
    wide chance = 0;
    for (std::size_t k = 0; k < 2; ++k) {
        const wide row = cm.counts[k][0] + cm.counts[k][1];
        const wide col = cm.counts[0][k] + cm.counts[1][k];
        chance += row * col;
    }
    const wide denom = n * n - chance;
    if (denom == 0) return trace == n ? 1.0 : 0.0;
    return static_cast<double>(n * trace - chance) / static_cast<double>(denom);
}

double f1_score(const ConfusionMatrix& cm, int positive_class) {
    require_nonempty(cm);
    if (positive_class != 0 && positive_class != 1) throw InvalidArgument("positive class must be 0 or 1");
    const auto p = static_cast<std::size_t>(positive_class);
    const auto q = 1 - p;
    const auto tp = cm.counts[p][p];
    const auto fp = cm.counts[q][p];
    const auto fn = cm.counts[p][q];
    // 2PR/(P+R) == 2TP/(2TP+FP+FN); zero when precision + recall is zero.
    if (tp == 0) return 0.0;
    return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
}

MetricsReport MetricsReport::from(const ConfusionMatrix& cm) {
    return {kanfire::overall_accuracy(cm), kanfire::kappa(cm), f1_score(cm, kBurnedClass), cm};
}

MetricsReport evaluate(const ChebyKanModel& model, const LabeledSampleSet& test_set) {
    if (test_set.size() == 0) throw InvalidArgument("evaluate: empty test set");
    std::vector<int> predicted;
    predicted.reserve(test_set.size());
    constexpr std::size_t kChunk = 1024;
    for (std::size_t start = 0; start < test_set.size(); start += kChunk) {
        const std::size_t end = std::min(test_set.size(), start + kChunk);
        std::vector<std::size_t> rows(end - start);
        std::iota(rows.begin(), rows.end(), start);
        const auto pred = predict_classes(model_infer(model, rows_of(test_set.features, rows)));
        predicted.insert(predicted.end(), pred.begin(), pred.end());
    }
    return MetricsReport::from(ConfusionMatrix::from_predictions(test_set.labels, predicted));
}

}  // namespace kanfire
