#include "kanfire/cheby_kan.hpp"

#include <algorithm>
#include <cmath>

#include "kanfire/error.hpp"

namespace kanfire {

namespace {

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void quantize_all(std::vector<double>& values) {
    for (auto& v : values) v = to_f32(v);
}

void require_finite(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + " contains a non-finite value");
    }
}

// Standardization with the model's stored statistics.
Matrix standardize(const ChebyKanModel& model, const Matrix& features) {
    if (features.cols != model.input_dim()) {
        throw InvalidArgument("feature width " + std::to_string(features.cols) + " does not match model input " +
                              std::to_string(model.input_dim()));
    }
    Matrix z(features.rows, features.cols);
    for (std::size_t r = 0; r < features.rows; ++r) {
        for (std::size_t c = 0; c < features.cols; ++c) {
            z(r, c) = (features(r, c) - model.feature_means[c]) / model.feature_stds[c];
        }
    }
    return z;
}

}  // namespace

std::vector<double> chebyshev_basis(double x, int degree) {
    if (degree < 0) throw InvalidArgument("degree must be non-negative");
    std::vector<double> t(static_cast<std::size_t>(degree) + 1);
    t[0] = 1.0;
    if (degree >= 1) t[1] = x;
    for (int k = 1; k < degree; ++k) t[k + 1] = 2.0 * x * t[k] - t[k - 1];
    return t;
}

ChebyLayer::ChebyLayer(std::size_t in, std::size_t out, int k)
    : in_dim(in), out_dim(out), degree(k), coeffs(in * out * static_cast<std::size_t>(k + 1), 0.0) {
    if (k < 1) throw InvalidArgument("Chebyshev degree must be at least 1");
    if (in == 0 || out == 0) throw InvalidArgument("layer dimensions must be positive");
}

Matrix layer_forward(const ChebyLayer& layer, const Matrix& x, LayerCache* cache) {
    if (x.cols != layer.in_dim) {
        throw InvalidArgument("layer expects " + std::to_string(layer.in_dim) + " inputs, got " +
                              std::to_string(x.cols));
    }
    const std::size_t n_basis = static_cast<std::size_t>(layer.degree) + 1;
    const std::size_t batch = x.rows;
    Matrix y(batch, layer.out_dim);

    if (cache) {
        cache->batch = batch;
        cache->squashed.assign(batch * layer.in_dim, 0.0);
        cache->basis.assign(batch * layer.in_dim * n_basis, 0.0);
        cache->dbasis.assign(batch * layer.in_dim * n_basis, 0.0);
    }

    std::vector<double> t(n_basis), dt(n_basis);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < layer.in_dim; ++i) {
            const double s = std::tanh(x(b, i));
            // T_k and T_k' = k U_(k-1), with U the second-kind polynomials.
            t[0] = 1.0;
            t[1] = s;
            dt[0] = 0.0;
            dt[1] = 1.0;
            double u_prev = 1.0, u = 2.0 * s;  // U_0, U_1
            for (std::size_t k = 1; k + 1 < n_basis; ++k) {
                t[k + 1] = 2.0 * s * t[k] - t[k - 1];
                dt[k + 1] = static_cast<double>(k + 1) * u;
                const double u_next = 2.0 * s * u - u_prev;
                u_prev = u;
                u = u_next;
            }
            const double* c = layer.coeffs.data() + layer.index(i, 0, 0);
            for (std::size_t j = 0; j < layer.out_dim; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < n_basis; ++k) acc += c[j * n_basis + k] * t[k];
                y(b, j) += acc;
            }
            if (cache) {
                cache->squashed[b * layer.in_dim + i] = s;
                std::copy(t.begin(), t.end(), cache->basis.begin() + (b * layer.in_dim + i) * n_basis);
                std::copy(dt.begin(), dt.end(), cache->dbasis.begin() + (b * layer.in_dim + i) * n_basis);
            }
        }
    }
    return y;
}

LayerGrads layer_backward(const ChebyLayer& layer, const LayerCache& cache, const Matrix& upstream) {
    const std::size_t n_basis = static_cast<std::size_t>(layer.degree) + 1;
    const std::size_t batch = upstream.rows;
    if (cache.batch == 0 || cache.basis.size() != batch * layer.in_dim * n_basis ||
        cache.squashed.size() != batch * layer.in_dim) {
        throw InvalidArgument("layer_backward: missing or mismatched forward cache");
    }
    if (upstream.cols != layer.out_dim) throw InvalidArgument("layer_backward: upstream width mismatch");

    LayerGrads grads{Matrix(batch, layer.in_dim), std::vector<double>(layer.coeffs.size(), 0.0)};
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < layer.in_dim; ++i) {
            const double s = cache.squashed[b * layer.in_dim + i];
            const double* t = cache.basis.data() + (b * layer.in_dim + i) * n_basis;
            const double* dt = cache.dbasis.data() + (b * layer.in_dim + i) * n_basis;
            const double* c = layer.coeffs.data() + layer.index(i, 0, 0);
            double* gc = grads.coeff_grad.data() + layer.index(i, 0, 0);
            double d_s = 0.0;
            for (std::size_t j = 0; j < layer.out_dim; ++j) {
                const double g = upstream(b, j);
                double edge_slope = 0.0;
                for (std::size_t k = 0; k < n_basis; ++k) {
                    gc[j * n_basis + k] += g * t[k];
                    edge_slope += c[j * n_basis + k] * dt[k];
                }
                d_s += g * edge_slope;
            }
            grads.input_grad(b, i) = d_s * (1.0 - s * s);
        }
    }
    return grads;
}

BatchNormState::BatchNormState(std::size_t features)
    : gamma(features, 1.0), beta(features, 0.0), running_mean(features, 0.0), running_var(features, 1.0) {}

Matrix batchnorm_forward(BatchNormState& state, const Matrix& x, Mode mode, BatchNormCache* cache) {
    if (mode == Mode::infer) return batchnorm_infer(state, x, cache);
    if (x.cols != state.size()) throw InvalidArgument("batch norm width mismatch");
    if (x.rows < 2) throw InvalidArgument("batch norm in train mode needs a batch of at least 2");

    const std::size_t n = x.rows;
    const double inv_n = 1.0 / static_cast<double>(n);
    Matrix y(n, x.cols);
    if (cache) {
        cache->mode = Mode::train;
        cache->normalized = Matrix(n, x.cols);
        cache->inv_std.assign(x.cols, 0.0);
    }
    for (std::size_t f = 0; f < x.cols; ++f) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += x(r, f);
        mean *= inv_n;
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = x(r, f) - mean;
            var += d * d;
        }
        var *= inv_n;
        const double inv_std = 1.0 / std::sqrt(var + state.epsilon);
        for (std::size_t r = 0; r < n; ++r) {
            const double xhat = (x(r, f) - mean) * inv_std;
            y(r, f) = state.gamma[f] * xhat + state.beta[f];
            if (cache) cache->normalized(r, f) = xhat;
        }
        if (cache) cache->inv_std[f] = inv_std;
        const double unbiased = var * static_cast<double>(n) / static_cast<double>(n - 1);
        state.running_mean[f] = (1.0 - state.momentum) * state.running_mean[f] + state.momentum * mean;
        state.running_var[f] = (1.0 - state.momentum) * state.running_var[f] + state.momentum * unbiased;
    }
    return y;
}

Matrix batchnorm_infer(const BatchNormState& state, const Matrix& x, BatchNormCache* cache) {
    if (x.cols != state.size()) throw InvalidArgument("batch norm width mismatch");
    Matrix y(x.rows, x.cols);
    if (cache) {
        cache->mode = Mode::infer;
        cache->normalized = Matrix(x.rows, x.cols);
        cache->inv_std.assign(x.cols, 0.0);
    }
    for (std::size_t f = 0; f < x.cols; ++f) {
        const double inv_std = 1.0 / std::sqrt(state.running_var[f] + state.epsilon);
        for (std::size_t r = 0; r < x.rows; ++r) {
            const double xhat = (x(r, f) - state.running_mean[f]) * inv_std;
            y(r, f) = state.gamma[f] * xhat + state.beta[f];
            if (cache) cache->normalized(r, f) = xhat;
        }
        if (cache) cache->inv_std[f] = inv_std;
    }
    return y;
}

BatchNormGrads batchnorm_backward(const BatchNormState& state, const BatchNormCache& cache, const Matrix& upstream) {
    const std::size_t n = upstream.rows;
    const std::size_t d = upstream.cols;
    if (cache.normalized.rows != n || cache.normalized.cols != d || cache.inv_std.size() != d) {
        throw InvalidArgument("batchnorm_backward: missing or mismatched forward cache");
    }
    BatchNormGrads g{Matrix(n, d), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t f = 0; f < d; ++f) {
        double sum_up = 0.0, sum_up_xhat = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            sum_up += upstream(r, f);
            sum_up_xhat += upstream(r, f) * cache.normalized(r, f);
        }
        g.beta_grad[f] = sum_up;
        g.gamma_grad[f] = sum_up_xhat;
        const double scale = state.gamma[f] * cache.inv_std[f];
        if (cache.mode == Mode::infer) {
            for (std::size_t r = 0; r < n; ++r) g.input_grad(r, f) = upstream(r, f) * scale;
        } else {
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t r = 0; r < n; ++r) {
                g.input_grad(r, f) =
                    scale * (upstream(r, f) - inv_n * sum_up - cache.normalized(r, f) * inv_n * sum_up_xhat);
            }
        }
    }
    return g;
}

Matrix dropout(const Matrix& x, double rate, Rng& rng, Mode mode, std::vector<std::uint8_t>* keep) {
    if (!(rate >= 0.0) || rate >= 1.0) throw InvalidArgument("dropout rate must be in [0, 1)");
    if (mode == Mode::infer || rate == 0.0) {
        if (keep) keep->assign(mode == Mode::infer ? 0 : x.data.size(), 1);
        return x;
    }
    Matrix y(x.rows, x.cols);
    if (keep) keep->assign(x.data.size(), 0);
    const double scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const bool kept = rng.uniform() >= rate;
        y.data[i] = kept ? x.data[i] * scale : 0.0;
        if (keep) (*keep)[i] = kept ? 1 : 0;
    }
    return y;
}

ChebyKanModel ChebyKanModel::initialize(std::vector<std::string> band_names, const ModelConfig& config,
                                        std::uint64_t seed, Rng& rng) {
    if (band_names.empty()) throw InvalidArgument("model needs at least one input band");
    ChebyKanModel m;
    m.band_names = std::move(band_names);
    m.degree = config.degree;
    m.dropout_rate = config.dropout_rate;
    m.seed = seed;
    m.layer_dims.push_back(m.band_names.size());
    for (auto h : config.hidden_dims) m.layer_dims.push_back(h);
    m.layer_dims.push_back(2);

    for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
        ChebyLayer layer(m.layer_dims[l], m.layer_dims[l + 1], config.degree);
        const double bound = 1.0 / (static_cast<double>(layer.in_dim) * static_cast<double>(config.degree + 1));
        for (auto& c : layer.coeffs) c = rng.uniform(-bound, bound);
        m.layers.push_back(std::move(layer));
    }
    for (auto h : config.hidden_dims) m.batch_norms.emplace_back(h);
    m.feature_means.assign(m.input_dim(), 0.0);
    m.feature_stds.assign(m.input_dim(), 1.0);
    m.quantize();
    m.validate();
    return m;
}

void ChebyKanModel::validate() const {
    if (layer_dims.size() < 2) throw InvalidArgument("model needs at least input and output dims");
    if (layer_dims.back() != 2) throw InvalidArgument("final layer must emit 2 logits");
    if (degree < 1) throw InvalidArgument("degree must be at least 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidArgument("dropout rate must be in [0, 1)");
    if (layers.size() + 1 != layer_dims.size()) throw InvalidArgument("layer count does not match dims");
    if (batch_norms.size() + 2 != layer_dims.size()) throw InvalidArgument("one batch norm per hidden layer");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.in_dim != layer_dims[l] || layer.out_dim != layer_dims[l + 1] || layer.degree != degree) {
            throw InvalidArgument("layer " + std::to_string(l) + " does not chain with layer_dims");
        }
        if (layer.coeffs.size() != layer.in_dim * layer.out_dim * static_cast<std::size_t>(degree + 1)) {
            throw InvalidArgument("layer " + std::to_string(l) + " coefficient tensor has the wrong size");
        }
        require_finite(layer.coeffs, "coefficients");
    }
    for (std::size_t h = 0; h < batch_norms.size(); ++h) {
        const auto& bn = batch_norms[h];
        const auto d = layer_dims[h + 1];
        if (bn.gamma.size() != d || bn.beta.size() != d || bn.running_mean.size() != d || bn.running_var.size() != d) {
            throw InvalidArgument("batch norm " + std::to_string(h) + " has the wrong width");
        }
        for (double v : bn.running_var) {
            if (!(v >= 0.0)) throw InvalidArgument("running variance must be non-negative");
        }
    }
    if (feature_means.size() != input_dim() || feature_stds.size() != input_dim()) {
        throw InvalidArgument("standardization statistics do not match input width");
    }
    for (double s : feature_stds) {
        if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("feature_stds must be positive");
    }
    if (band_names.size() != input_dim()) throw InvalidArgument("band_names do not match input width");
}

void ChebyKanModel::quantize() {
    dropout_rate = to_f32(dropout_rate);
    for (auto& layer : layers) quantize_all(layer.coeffs);
    for (auto& bn : batch_norms) {
        bn.momentum = to_f32(bn.momentum);
        bn.epsilon = to_f32(bn.epsilon);
        quantize_all(bn.gamma);
        quantize_all(bn.beta);
        quantize_all(bn.running_mean);
        quantize_all(bn.running_var);
    }
    quantize_all(feature_means);
    quantize_all(feature_stds);
}

std::vector<std::span<double>> ChebyKanModel::parameter_groups() {
    std::vector<std::span<double>> groups;
    for (auto& layer : layers) groups.emplace_back(layer.coeffs);
    for (auto& bn : batch_norms) {
        groups.emplace_back(bn.gamma);
        groups.emplace_back(bn.beta);
    }
    return groups;
}

std::vector<std::span<const double>> ModelGrads::groups() const {
    std::vector<std::span<const double>> out;
    for (const auto& g : coeff_grads) out.emplace_back(g);
    for (std::size_t h = 0; h < gamma_grads.size(); ++h) {
        out.emplace_back(gamma_grads[h]);
        out.emplace_back(beta_grads[h]);
    }
    return out;
}

namespace {

// Shared forward pass. `train_norms` is non-null only in train mode and
// receives running-statistics updates.
Matrix forward_impl(const ChebyKanModel& model, std::vector<BatchNormState>* train_norms, const Matrix& features,
                    Rng* rng, ForwardCache* cache) {
    Matrix h = standardize(model, features);
    if (cache) {
        cache->standardized = h;
        cache->layers.assign(model.layers.size(), {});
        cache->norms.assign(model.batch_norms.size(), {});
        cache->keep.assign(model.batch_norms.size(), {});
    }
    const std::size_t hidden = model.batch_norms.size();
    for (std::size_t l = 0; l < hidden; ++l) {
        h = layer_forward(model.layers[l], h, cache ? &cache->layers[l] : nullptr);
        if (train_norms) {
            h = batchnorm_forward((*train_norms)[l], h, Mode::train, cache ? &cache->norms[l] : nullptr);
            if (!rng) throw InvalidArgument("train-mode forward needs a random generator");
            h = dropout(h, model.dropout_rate, *rng, Mode::train, cache ? &cache->keep[l] : nullptr);
        } else {
            h = batchnorm_infer(model.batch_norms[l], h, cache ? &cache->norms[l] : nullptr);
        }
    }
    return layer_forward(model.layers.back(), h, cache ? &cache->layers.back() : nullptr);
}

}  // namespace

Matrix model_forward(ChebyKanModel& model, const Matrix& features, Mode mode, Rng* rng, ForwardCache* cache) {
    if (mode == Mode::infer) return forward_impl(model, nullptr, features, rng, cache);
    return forward_impl(model, &model.batch_norms, features, rng, cache);
}

Matrix model_infer(const ChebyKanModel& model, const Matrix& features, ForwardCache* cache) {
    return forward_impl(model, nullptr, features, nullptr, cache);
}

ModelGrads model_backward(const ChebyKanModel& model, const ForwardCache& cache, const Matrix& logit_grad) {
    if (cache.layers.size() != model.layers.size()) throw InvalidArgument("model_backward: missing forward cache");
    const std::size_t hidden = model.batch_norms.size();
    ModelGrads grads;
    grads.coeff_grads.resize(model.layers.size());
    grads.gamma_grads.resize(hidden);
    grads.beta_grads.resize(hidden);

    auto out = layer_backward(model.layers.back(), cache.layers.back(), logit_grad);
    grads.coeff_grads.back() = std::move(out.coeff_grad);
    Matrix g = std::move(out.input_grad);

    for (std::size_t l = hidden; l-- > 0;) {
        const auto& keep = cache.keep[l];
        if (!keep.empty()) {
            const double scale = 1.0 / (1.0 - model.dropout_rate);
            for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = keep[i] ? g.data[i] * scale : 0.0;
        }
        auto bn = batchnorm_backward(model.batch_norms[l], cache.norms[l], g);
        grads.gamma_grads[l] = std::move(bn.gamma_grad);
        grads.beta_grads[l] = std::move(bn.beta_grad);
        auto lg = layer_backward(model.layers[l], cache.layers[l], bn.input_grad);
        grads.coeff_grads[l] = std::move(lg.coeff_grad);
        g = std::move(lg.input_grad);
    }
    for (std::size_t r = 0; r < g.rows; ++r) {
        for (std::size_t c = 0; c < g.cols; ++c) g(r, c) /= model.feature_stds[c];
    }
    grads.input_grad = std::move(g);
    return grads;
}

std::vector<int> predict_classes(const Matrix& logits) {
    std::vector<int> out(logits.rows, 0);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        int best = 0;
        for (std::size_t c = 1; c < logits.cols; ++c) {
            if (logits(r, c) > logits(r, static_cast<std::size_t>(best))) best = static_cast<int>(c);
        }
        out[r] = best;
    }
    return out;
}

LossResult cross_entropy_loss(const Matrix& logits, std::span<const int> labels) {
    if (logits.rows == 0) throw InvalidArgument("cross_entropy_loss: empty batch");
    if (labels.size() != logits.rows) throw InvalidArgument("cross_entropy_loss: label count mismatch");
    LossResult result{0.0, Matrix(logits.rows, logits.cols)};
    const double inv_n = 1.0 / static_cast<double>(logits.rows);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        const int label = labels[r];
        if (label < 0 || static_cast<std::size_t>(label) >= logits.cols) {
            throw InvalidArgument("cross_entropy_loss: label out of range");
        }
        const auto row = logits.row(r);
        const double m = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double v : row) sum += std::exp(v - m);
        const double lse = m + std::log(sum);
        result.loss += lse - row[static_cast<std::size_t>(label)];
        for (std::size_t c = 0; c < logits.cols; ++c) {
            const double p = std::exp(row[c] - lse);
            result.grad(r, c) = (p - (static_cast<int>(c) == label ? 1.0 : 0.0)) * inv_n;
        }
    }
    result.loss *= inv_n;
    return result;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyperparams& hyper) {
    if (params.size() != grads.size()) throw InvalidArgument("adam_step: parameter/gradient shape mismatch");
    if (state.m.empty() && state.v.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw InvalidArgument("adam_step: optimizer state shape mismatch");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
}

}  // namespace kanfire
