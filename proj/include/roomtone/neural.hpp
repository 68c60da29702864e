#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roomtone/rng.hpp"

namespace roomtone {

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// classify() clamps into this open interval so downstream consumers can rely
// on probabilities being strictly inside (0, 1).
inline constexpr double kProbEpsilon = 1e-12;

struct Layer {
    std::size_t in{0}, out{0};
    std::vector<double> w;  // out x in, row-major
    std::vector<double> b;  // out

    static Layer init(std::size_t in, std::size_t out, Rng& rng) {
        Layer l;
        l.in = in;
        l.out = out;
        l.w.resize(in * out);
        l.b.assign(out, 0.0);
        const double bound = 1.0 / std::sqrt(double(in));
        for (double& x : l.w) x = rng.uniform(-bound, bound);
        return l;
    }

    std::size_t param_count() const { return w.size() + b.size(); }

    // y = W x + b
    void affine(std::span<const double> x, std::vector<double>& y) const {
        y.assign(out, 0.0);
        for (std::size_t r = 0; r < out; ++r) {
            double acc = b[r];
            const double* wr = w.data() + r * in;
            for (std::size_t c = 0; c < in; ++c) acc += wr[c] * x[c];
            y[r] = acc;
        }
    }
};

struct TrainConfig {
    int epochs{30000};
    double learning_rate{0.1};
    std::uint64_t seed{0};
    double loss_tolerance{0.0};  // early stop on |loss delta| < tolerance; 0 disables

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
        if (loss_tolerance < 0) throw std::invalid_argument("loss_tolerance must be >= 0");
    }
};

struct TrainStats {
    double initial_loss{0};
    double final_loss{0};
    int epochs_run{0};
};

// Sparse autoencoder: sigmoid hidden layer, linear reconstruction, KL
// sparsity penalty on the mean hidden activation.
struct AutoencoderModel {
    Layer encoder, decoder;
    double sparsity_target{0.05};
    double sparsity_weight{0.1};

    std::size_t input_size() const { return encoder.in; }
    std::size_t hidden_size() const { return encoder.out; }
};

inline std::vector<double> encode(const AutoencoderModel& m, std::span<const double> x) {
    if (x.size() != m.encoder.in)
        throw std::invalid_argument("encode: expected " + std::to_string(m.encoder.in) +
                                    " inputs, got " + std::to_string(x.size()));
    std::vector<double> z;
    m.encoder.affine(x, z);
    for (double& v : z) v = sigmoid(v);
    return z;
}

inline std::vector<double> decode(const AutoencoderModel& m, std::span<const double> hidden) {
    if (hidden.size() != m.decoder.in)
        throw std::invalid_argument("decode: hidden width mismatch");
    std::vector<double> out;
    m.decoder.affine(hidden, out);
    return out;
}

namespace detail {

inline double kl_bernoulli(double rho, double rho_hat) {
    rho_hat = std::clamp(rho_hat, 1e-12, 1.0 - 1e-12);
    return rho * std::log(rho / rho_hat) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rho_hat));
}

inline void check_training_matrix(const std::vector<std::vector<double>>& X, std::size_t dim,
                                  const char* who) {
    if (X.size() < 2) throw std::invalid_argument(std::string(who) + " needs at least 2 training vectors");
    for (const auto& r : X) {
        if (r.size() != dim) throw std::invalid_argument(std::string(who) + ": inconsistent input widths");
        for (double v : r)
            if (!std::isfinite(v)) throw std::invalid_argument(std::string(who) + ": non-finite input");
    }
}

}  // namespace detail

// Parameter flattening (encoder.w, encoder.b, decoder.w, decoder.b); shared
// by the optimizer and the finite-difference checks in the tests.
inline std::vector<double> flatten_parameters(const AutoencoderModel& m) {
    std::vector<double> p;
    p.reserve(m.encoder.param_count() + m.decoder.param_count());
    p.insert(p.end(), m.encoder.w.begin(), m.encoder.w.end());
    p.insert(p.end(), m.encoder.b.begin(), m.encoder.b.end());
    p.insert(p.end(), m.decoder.w.begin(), m.decoder.w.end());
    p.insert(p.end(), m.decoder.b.begin(), m.decoder.b.end());
    return p;
}

inline void set_parameters(AutoencoderModel& m, std::span<const double> p) {
    if (p.size() != m.encoder.param_count() + m.decoder.param_count())
        throw std::invalid_argument("autoencoder parameter vector has wrong length");
    auto it = p.begin();
    auto take = [&](std::vector<double>& dst) {
        std::copy(it, it + std::ptrdiff_t(dst.size()), dst.begin());
        it += std::ptrdiff_t(dst.size());
    };
    take(m.encoder.w);
    take(m.encoder.b);
    take(m.decoder.w);
    take(m.decoder.b);
}

// Full-batch loss: mean squared reconstruction error (1/2 convention) plus
// the KL sparsity penalty over mean hidden activations.
inline double autoencoder_loss(const AutoencoderModel& m, const std::vector<std::vector<double>>& X) {
    const std::size_t n = X.size();
    const std::size_t h = m.hidden_size();
    std::vector<double> rho_hat(h, 0.0);
    double recon = 0.0;
    for (const auto& x : X) {
        auto a = encode(m, x);
        for (std::size_t j = 0; j < h; ++j) rho_hat[j] += a[j];
        auto xhat = decode(m, a);
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = xhat[j] - x[j];
            recon += 0.5 * d * d;
        }
    }
    recon /= double(n);
    double sparsity = 0.0;
    for (std::size_t j = 0; j < h; ++j) sparsity += detail::kl_bernoulli(m.sparsity_target, rho_hat[j] / double(n));
    return recon + m.sparsity_weight * sparsity;
}

// Analytic full-batch gradient in flatten_parameters() order.
inline std::vector<double> autoencoder_gradient(const AutoencoderModel& m,
                                                const std::vector<std::vector<double>>& X) {
    const std::size_t n = X.size();
    const std::size_t in = m.input_size(), h = m.hidden_size();
    const double inv_n = 1.0 / double(n);

    std::vector<std::vector<double>> hidden(n);
    std::vector<std::vector<double>> recon_err(n);  // xhat - x
    std::vector<double> rho_hat(h, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        hidden[i] = encode(m, X[i]);
        for (std::size_t j = 0; j < h; ++j) rho_hat[j] += hidden[i][j];
        auto xhat = decode(m, hidden[i]);
        recon_err[i].resize(in);
        for (std::size_t j = 0; j < in; ++j) recon_err[i][j] = xhat[j] - X[i][j];
    }
    std::vector<double> kl_grad(h);
    for (std::size_t j = 0; j < h; ++j) {
        const double r = std::clamp(rho_hat[j] * inv_n, 1e-12, 1.0 - 1e-12);
        kl_grad[j] = m.sparsity_weight * (-m.sparsity_target / r + (1.0 - m.sparsity_target) / (1.0 - r));
    }

    std::vector<double> g_enc_w(m.encoder.w.size(), 0.0), g_enc_b(h, 0.0);
    std::vector<double> g_dec_w(m.decoder.w.size(), 0.0), g_dec_b(in, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < in; ++r) {
            const double delta_out = recon_err[i][r] * inv_n;
            g_dec_b[r] += delta_out;
            double* row = g_dec_w.data() + r * h;
            for (std::size_t c = 0; c < h; ++c) row[c] += delta_out * hidden[i][c];
        }
        for (std::size_t j = 0; j < h; ++j) {
            double back = 0.0;
            for (std::size_t r = 0; r < in; ++r)
                back += m.decoder.w[r * h + j] * recon_err[i][r] * inv_n;
            back += kl_grad[j] * inv_n;
            const double a = hidden[i][j];
            const double delta = back * a * (1.0 - a);
            g_enc_b[j] += delta;
            double* row = g_enc_w.data() + j * in;
            for (std::size_t c = 0; c < in; ++c) row[c] += delta * X[i][c];
        }
    }

    std::vector<double> g;
    g.reserve(g_enc_w.size() + g_enc_b.size() + g_dec_w.size() + g_dec_b.size());
    g.insert(g.end(), g_enc_w.begin(), g_enc_w.end());
    g.insert(g.end(), g_enc_b.begin(), g_enc_b.end());
    g.insert(g.end(), g_dec_w.begin(), g_dec_w.end());
    g.insert(g.end(), g_dec_b.begin(), g_dec_b.end());
    return g;
}

namespace detail {

template <typename LossFn, typename GradFn, typename Model>
TrainStats gradient_descent(Model& model, LossFn&& loss_fn, GradFn&& grad_fn,
                            std::vector<double> params, const TrainConfig& cfg,
                            void (*apply)(Model&, std::span<const double>)) {
    TrainStats stats;
    stats.initial_loss = loss_fn(model);
    if (!std::isfinite(stats.initial_loss)) throw std::runtime_error("training diverged");
    double prev = stats.initial_loss;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto g = grad_fn(model);
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * g[i];
        apply(model, params);
        const double loss = loss_fn(model);
        if (!std::isfinite(loss)) throw std::runtime_error("training diverged");
        stats.epochs_run = epoch + 1;
        if (cfg.loss_tolerance > 0 && std::abs(prev - loss) < cfg.loss_tolerance) {
            prev = loss;
            break;
        }
        prev = loss;
    }
    stats.final_loss = prev;
    return stats;
}

}  // namespace detail

// Trains on vectors of a single declared class (the paper trains on the
// occupied class only; enforcing which class it is falls to the caller).
inline AutoencoderModel train_autoencoder(const std::vector<std::vector<double>>& X,
                                          std::size_t hidden, const TrainConfig& cfg,
                                          double sparsity_target = 0.05,
                                          double sparsity_weight = 0.1,
                                          TrainStats* stats_out = nullptr) {
    cfg.validate();
    if (hidden < 1) throw std::invalid_argument("hidden_size must be >= 1");
    if (X.empty()) throw std::invalid_argument("train_autoencoder: empty training set");
    detail::check_training_matrix(X, X[0].size(), "train_autoencoder");

    Rng rng(cfg.seed);
    AutoencoderModel model;
    model.sparsity_target = sparsity_target;
    model.sparsity_weight = sparsity_weight;
    model.encoder = Layer::init(X[0].size(), hidden, rng);
    model.decoder = Layer::init(hidden, X[0].size(), rng);

    auto stats = detail::gradient_descent<>(
        model, [&](const AutoencoderModel& m) { return autoencoder_loss(m, X); },
        [&](const AutoencoderModel& m) { return autoencoder_gradient(m, X); },
        flatten_parameters(model), cfg,
        +[](AutoencoderModel& m, std::span<const double> p) { set_parameters(m, p); });
    if (stats_out) *stats_out = stats;
    return model;
}

// Feed-forward classifier over frozen autoencoder features:
// hidden sigmoid layer, then a single sigmoid output.
struct ClassifierModel {
    AutoencoderModel encoder;  // copied in, never touched by classifier training
    Layer hidden;              // sigmoid
    Layer output;              // 1 logit

    std::size_t input_size() const { return encoder.input_size(); }
};

inline std::vector<double> flatten_parameters(const ClassifierModel& m) {
    std::vector<double> p;
    p.reserve(m.hidden.param_count() + m.output.param_count());
    p.insert(p.end(), m.hidden.w.begin(), m.hidden.w.end());
    p.insert(p.end(), m.hidden.b.begin(), m.hidden.b.end());
    p.insert(p.end(), m.output.w.begin(), m.output.w.end());
    p.insert(p.end(), m.output.b.begin(), m.output.b.end());
    return p;
}

inline void set_parameters(ClassifierModel& m, std::span<const double> p) {
    if (p.size() != m.hidden.param_count() + m.output.param_count())
        throw std::invalid_argument("classifier parameter vector has wrong length");
    auto it = p.begin();
    auto take = [&](std::vector<double>& dst) {
        std::copy(it, it + std::ptrdiff_t(dst.size()), dst.begin());
        it += std::ptrdiff_t(dst.size());
    };
    take(m.hidden.w);
    take(m.hidden.b);
    take(m.output.w);
    take(m.output.b);
}

// Logit of the occupancy probability; kept separate so the loss can use the
// numerically stable log1p form.
inline double classifier_logit(const ClassifierModel& m, std::span<const double> x) {
    auto features = encode(m.encoder, x);
    std::vector<double> z;
    m.hidden.affine(features, z);
    for (double& v : z) v = sigmoid(v);
    std::vector<double> out;
    m.output.affine(z, out);
    return out[0];
}

inline double classify(const ClassifierModel& m, std::span<const double> x) {
    const double p = sigmoid(classifier_logit(m, x));
    return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

// Mean binary cross-entropy, evaluated from logits.
inline double classifier_loss(const ClassifierModel& m, const std::vector<std::vector<double>>& X,
                              const std::vector<int>& y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double z = classifier_logit(m, X[i]);
        loss += std::max(z, 0.0) - z * double(y[i]) + std::log1p(std::exp(-std::abs(z)));
    }
    return loss / double(X.size());
}

// Gradient w.r.t. classifier parameters only; the encoder is frozen.
inline std::vector<double> classifier_gradient(const ClassifierModel& m,
                                               const std::vector<std::vector<double>>& X,
                                               const std::vector<int>& y) {
    const std::size_t h = m.hidden.out;
    const double inv_n = 1.0 / double(X.size());
    std::vector<double> g_hw(m.hidden.w.size(), 0.0), g_hb(h, 0.0);
    std::vector<double> g_ow(m.output.w.size(), 0.0), g_ob(1, 0.0);

    for (std::size_t i = 0; i < X.size(); ++i) {
        auto features = encode(m.encoder, X[i]);
        std::vector<double> z;
        m.hidden.affine(features, z);
        std::vector<double> a(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) a[j] = sigmoid(z[j]);
        std::vector<double> out;
        m.output.affine(a, out);
        const double p = sigmoid(out[0]);

        const double delta_out = (p - double(y[i])) * inv_n;
        g_ob[0] += delta_out;
        for (std::size_t j = 0; j < h; ++j) g_ow[j] += delta_out * a[j];
        for (std::size_t j = 0; j < h; ++j) {
            const double delta = m.output.w[j] * delta_out * a[j] * (1.0 - a[j]);
            g_hb[j] += delta;
            double* row = g_hw.data() + j * m.hidden.in;
            for (std::size_t c = 0; c < m.hidden.in; ++c) row[c] += delta * features[c];
        }
    }

    std::vector<double> g;
    g.reserve(g_hw.size() + g_hb.size() + g_ow.size() + 1);
    g.insert(g.end(), g_hw.begin(), g_hw.end());
    g.insert(g.end(), g_hb.begin(), g_hb.end());
    g.insert(g.end(), g_ow.begin(), g_ow.end());
    g.insert(g.end(), g_ob.begin(), g_ob.end());
    return g;
}

inline ClassifierModel train_classifier(const AutoencoderModel& encoder,
                                        const std::vector<std::vector<double>>& X,
                                        const std::vector<int>& y, const TrainConfig& cfg,
                                        std::size_t hidden_width = 8,
                                        TrainStats* stats_out = nullptr) {
    cfg.validate();
    if (X.size() != y.size()) throw std::invalid_argument("train_classifier: X and y lengths differ");
    detail::check_training_matrix(X, encoder.input_size(), "train_classifier");
    const bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
    const bool has_neg = std::find(y.begin(), y.end(), 0) != y.end();
    if (!has_pos || !has_neg)
        throw std::invalid_argument("train_classifier: single-class label set");
    for (int label : y)
        if (label != 0 && label != 1) throw std::invalid_argument("labels must be 0 or 1");

    Rng rng(cfg.seed);
    ClassifierModel model;
    model.encoder = encoder;
    model.hidden = Layer::init(encoder.hidden_size(), hidden_width, rng);
    model.output = Layer::init(hidden_width, 1, rng);

    auto stats = detail::gradient_descent<>(
        model, [&](const ClassifierModel& m) { return classifier_loss(m, X, y); },
        [&](const ClassifierModel& m) { return classifier_gradient(m, X, y); },
        flatten_parameters(model), cfg,
        +[](ClassifierModel& m, std::span<const double> p) { set_parameters(m, p); });
    if (stats_out) *stats_out = stats;
    return model;
}

struct PretrainComparison {
    double accuracy_single_class{0};
    double accuracy_both_classes{0};
    double delta{0};  // single minus both
    std::size_t train_count{0};
    std::size_t holdout_count{0};
    std::size_t single_class_vectors{0};
    std::size_t both_class_vectors{0};
};

// Trains the full pipeline twice, once with the autoencoder pre-trained on
// occupied-class vectors only and once on both classes, and reports held-out
// accuracy for each.
inline PretrainComparison compare_single_vs_both_class_pretraining(
    const std::vector<std::vector<double>>& X, const std::vector<int>& y, std::size_t hidden,
    const TrainConfig& cfg) {
    if (X.size() != y.size()) throw std::invalid_argument("X and y lengths differ");
    if (X.size() < 4) throw std::invalid_argument("dataset too small to split");

    std::vector<std::size_t> order(X.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(cfg.seed, "pretrain-split"));
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        const std::size_t j = std::size_t(rng.uniform() * double(i + 1));
        std::swap(order[i], order[j]);
    }
    const std::size_t n_train = X.size() / 2;

    std::vector<std::vector<double>> train_x, holdout_x, occupied_only;
    std::vector<int> train_y, holdout_y;
    for (std::size_t idx = 0; idx < order.size(); ++idx) {
        const auto& x = X[order[idx]];
        const int label = y[order[idx]];
        if (idx < n_train) {
            train_x.push_back(x);
            train_y.push_back(label);
            if (label == 1) occupied_only.push_back(x);
        } else {
            holdout_x.push_back(x);
            holdout_y.push_back(label);
        }
    }

    auto accuracy_of = [&](const ClassifierModel& m) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < holdout_x.size(); ++i) {
            const bool occ = classify(m, holdout_x[i]) > 0.5;
            if (occ == (holdout_y[i] == 1)) ++correct;
        }
        return double(correct) / double(holdout_x.size());
    };

    auto ae_single = train_autoencoder(occupied_only, hidden, cfg);
    auto ae_both = train_autoencoder(train_x, hidden, cfg);
    auto clf_single = train_classifier(ae_single, train_x, train_y, cfg);
    auto clf_both = train_classifier(ae_both, train_x, train_y, cfg);

    PretrainComparison cmp;
    cmp.train_count = train_x.size();
    cmp.holdout_count = holdout_x.size();
    cmp.single_class_vectors = occupied_only.size();
    cmp.both_class_vectors = train_x.size();
    cmp.accuracy_single_class = accuracy_of(clf_single);
    cmp.accuracy_both_classes = accuracy_of(clf_both);
    cmp.delta = cmp.accuracy_single_class - cmp.accuracy_both_classes;
    return cmp;
}

}  // namespace roomtone
