#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kanfire/matrix.hpp"
#include "kanfire/rng.hpp"

namespace kanfire {

enum class Mode { train, infer };

// [T0(x), ..., TK(x)] via T(k+1) = 2x T(k) - T(k-1). Callers keep |x| <= 1.
std::vector<double> chebyshev_basis(double x, int degree);

// ---------------------------------------------------------------------------
// Chebyshev KAN layer
//
// Each edge (i, j) carries an order-K Chebyshev expansion of the tanh-squashed
// input; node j sums its incoming edges:
//
//     y_j = sum_i sum_k coeffs[i, j, k] * T_k(tanh(x_i))

struct ChebyLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    int degree = 1;
    std::vector<double> coeffs;  // [in_dim][out_dim][degree + 1]

    ChebyLayer() = default;
    ChebyLayer(std::size_t in, std::size_t out, int k);

    std::size_t index(std::size_t i, std::size_t j, int k) const {
        return (i * out_dim + j) * static_cast<std::size_t>(degree + 1) + static_cast<std::size_t>(k);
    }
    double& coeff(std::size_t i, std::size_t j, int k) { return coeffs[index(i, j, k)]; }
    double coeff(std::size_t i, std::size_t j, int k) const { return coeffs[index(i, j, k)]; }
};

// Values needed by layer_backward, captured during layer_forward.
struct LayerCache {
    std::size_t batch = 0;
    std::vector<double> squashed;  // tanh(x)       [batch][in]
    std::vector<double> basis;     // T_k(tanh x)   [batch][in][K+1]
    std::vector<double> dbasis;    // T_k'(tanh x)  [batch][in][K+1]
};

Matrix layer_forward(const ChebyLayer& layer, const Matrix& x, LayerCache* cache = nullptr);

struct LayerGrads {
    Matrix input_grad;
    std::vector<double> coeff_grad;
};

// Throws InvalidArgument when the cache is missing or does not match.
LayerGrads layer_backward(const ChebyLayer& layer, const LayerCache& cache, const Matrix& upstream);

// ---------------------------------------------------------------------------
// Batch normalization

struct BatchNormState {
    std::vector<double> gamma, beta;
    std::vector<double> running_mean, running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;

    BatchNormState() = default;
    explicit BatchNormState(std::size_t features);
    std::size_t size() const noexcept { return gamma.size(); }
};

struct BatchNormCache {
    Mode mode = Mode::infer;
    Matrix normalized;            // x_hat
    std::vector<double> inv_std;  // per feature
};

// Train mode normalizes by batch statistics (biased variance) and updates the
// running statistics with momentum (unbiased variance); infer mode uses the
// running statistics. Train mode requires at least two rows.
Matrix batchnorm_forward(BatchNormState& state, const Matrix& x, Mode mode, BatchNormCache* cache = nullptr);
Matrix batchnorm_infer(const BatchNormState& state, const Matrix& x, BatchNormCache* cache = nullptr);

struct BatchNormGrads {
    Matrix input_grad;
    std::vector<double> gamma_grad, beta_grad;
};
BatchNormGrads batchnorm_backward(const BatchNormState& state, const BatchNormCache& cache, const Matrix& upstream);

// ---------------------------------------------------------------------------
// Inverted dropout. `keep` (optional) receives the 0/1 survivor mask in train mode.

Matrix dropout(const Matrix& x, double rate, Rng& rng, Mode mode, std::vector<std::uint8_t>* keep = nullptr);

// ---------------------------------------------------------------------------
// Model

struct ModelConfig {
    std::vector<std::size_t> hidden_dims{32, 16};
    int degree = 4;
    double dropout_rate = 0.3;
};

struct ChebyKanModel {
    std::vector<std::size_t> layer_dims;  // input, hidden..., 2
    int degree = 4;
    double dropout_rate = 0.3;
    std::vector<ChebyLayer> layers;
    std::vector<BatchNormState> batch_norms;  // one per hidden layer
    std::vector<double> feature_means, feature_stds;
    std::vector<std::string> band_names;
    std::uint64_t seed = 0;

    // Builds a model with coefficients drawn uniformly from +/- 1/(in_dim (K+1)),
    // identity standardization and fresh batch-norm states.
    static ChebyKanModel initialize(std::vector<std::string> band_names, const ModelConfig& config,
                                    std::uint64_t seed, Rng& rng);

    std::size_t input_dim() const { return layer_dims.empty() ? 0 : layer_dims.front(); }

    // Throws InvalidArgument when a structural invariant is broken.
    void validate() const;

    // Rounds every stored real to float32, the precision of the model file.
    void quantize();

    // Parameter groups in a fixed order: layer coefficients, then (gamma, beta)
    // per batch norm. Mirrors ModelGrads::groups().
    std::vector<std::span<double>> parameter_groups();
};

struct ForwardCache {
    Matrix standardized;
    std::vector<LayerCache> layers;
    std::vector<BatchNormCache> norms;
    std::vector<std::vector<std::uint8_t>> keep;
};

// Standardize -> (layer -> batch norm -> dropout) per hidden stage -> output layer.
// Train mode needs an rng for dropout and updates batch-norm running stats.
Matrix model_forward(ChebyKanModel& model, const Matrix& features, Mode mode, Rng* rng = nullptr,
                     ForwardCache* cache = nullptr);
// Infer-mode forward on a const model. Pure: bitwise reproducible per sample.
Matrix model_infer(const ChebyKanModel& model, const Matrix& features, ForwardCache* cache = nullptr);

struct ModelGrads {
    std::vector<std::vector<double>> coeff_grads;
    std::vector<std::vector<double>> gamma_grads, beta_grads;
    Matrix input_grad;  // with respect to raw (unstandardized) features

    std::vector<std::span<const double>> groups() const;
};

ModelGrads model_backward(const ChebyKanModel& model, const ForwardCache& cache, const Matrix& logit_grad);

// Argmax class per row; exact ties resolve to class 0.
std::vector<int> predict_classes(const Matrix& logits);

// ---------------------------------------------------------------------------
// Loss and optimizer

struct LossResult {
    double loss = 0.0;
    Matrix grad;  // d loss / d logits
};

// Mean softmax cross-entropy over the batch; labels in {0, ..., cols-1}.
LossResult cross_entropy_loss(const Matrix& logits, std::span<const int> labels);

struct AdamHyperparams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> m, v;
    long step = 0;
};

// One bias-corrected Adam update. State is sized on first use.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyperparams& hyper);

// ---------------------------------------------------------------------------
// Model file
//
//   "CHEBYKAN" magic, u32 version
//   u32 n_dims, u32 dims[n], u32 degree, f32 dropout_rate, u64 seed
//   u32 n_bands, then per band: u32 length + UTF-8 bytes
//   f32 feature_means[in], f32 feature_stds[in]
//   per batch norm: f32 momentum, f32 epsilon, f32 gamma[d], beta[d], running_mean[d], running_var[d]
//   per layer: f32 coeffs[in][out][K+1]
//   u64 FNV-1a checksum of every preceding byte
//
// All integers and floats little-endian.

inline constexpr char kModelMagic[8] = {'C', 'H', 'E', 'B', 'Y', 'K', 'A', 'N'};
inline constexpr std::uint32_t kModelVersion = 1;

std::string serialize_model(const ChebyKanModel& model);
ChebyKanModel deserialize_model(std::string_view bytes);
void save_model(const ChebyKanModel& model, const std::filesystem::path& path);
ChebyKanModel load_model(const std::filesystem::path& path);

}  // namespace kanfire
