#pragma once

#include <sodium.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "voicescreen/audio.hpp"
#include "voicescreen/error.hpp"
#include "voicescreen/rng.hpp"

namespace voicescreen::model {

using Row = std::vector<double>;
using Matrix = std::vector<Row>;

namespace detail {

inline std::size_t check_rows(const Matrix& x, std::size_t labels) {
    if (x.size() != labels) {
        fail(ErrorCode::DimensionMismatch,
             std::to_string(x.size()) + " rows but " + std::to_string(labels) + " labels");
    }
    if (x.empty()) fail(ErrorCode::TooFewRows, "no training rows");
    const std::size_t d = x.front().size();
    for (const auto& r : x) {
        if (r.size() != d) fail(ErrorCode::DimensionMismatch, "rows have differing widths");
    }
    return d;
}

inline void require_dims(std::size_t want, std::size_t got) {
    if (want != got) {
        fail(ErrorCode::DimensionMismatch,
             "model expects " + std::to_string(want) + " inputs, got " + std::to_string(got));
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Standardization

struct Standardizer {
    Row means;
    Row stds;  // zero-variance columns hold 1

    std::size_t dims() const noexcept { return means.size(); }
};

/// Population statistics per column. A column whose spread is below 1e-12 of
/// its magnitude counts as constant: std 1, mean its first value.
inline Standardizer fit_standardizer(const Matrix& rows) {
    if (rows.size() < 2) fail(ErrorCode::TooFewRows, "standardizer needs at least 2 rows");
    const std::size_t d = detail::check_rows(rows, rows.size());
    Standardizer s;
    s.means.assign(d, 0.0);
    s.stds.assign(d, 0.0);
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) s.means[j] += r[j];
    }
    for (auto& m : s.means) m /= n;
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) s.stds[j] += (r[j] - s.means[j]) * (r[j] - s.means[j]);
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(s.stds[j] / n);
        if (sd > 1e-12 * std::max(1.0, std::abs(s.means[j]))) {
            s.stds[j] = sd;
        } else {
            s.stds[j] = 1.0;
            s.means[j] = rows.front()[j];
        }
    }
    return s;
}

inline Row standardize(const Standardizer& s, std::span<const double> x) {
    detail::require_dims(s.dims(), x.size());
    Row out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - s.means[j]) / s.stds[j];
    return out;
}

inline Matrix standardize(const Standardizer& s, const Matrix& rows) {
    Matrix out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(standardize(s, r));
    return out;
}

// ---------------------------------------------------------------------------
// Training configuration

struct TrainConfig {
    double learning_rate = 1e-3;  // MLP only; the SVM follows 1/(lambda t)
    int epochs = 200;
    int batch_size = 32;
    double l2 = 1e-4;
    int hidden_dim = 64;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            fail(ErrorCode::InvalidArgument, "learning rate must be positive");
        }
        if (epochs < 1) fail(ErrorCode::InvalidArgument, "epochs must be at least 1");
        if (batch_size < 1) fail(ErrorCode::InvalidArgument, "batch size must be at least 1");
        if (!(l2 > 0.0) || !std::isfinite(l2)) fail(ErrorCode::InvalidArgument, "l2 must be positive");
        if (hidden_dim < 1) fail(ErrorCode::InvalidArgument, "hidden dimension must be at least 1");
    }
};

inline void require_both_classes(std::span<const int> y) {
    bool pos = false, neg = false;
    for (int v : y) {
        pos = pos || v == 1;
        neg = neg || v != 1;
    }
    if (!pos || !neg) fail(ErrorCode::SingleClassData, "training labels contain a single class");
}

struct Prediction {
    double score = 0.0;
    int label = 0;  // 1 = positive (depressed)
};

// ---------------------------------------------------------------------------
// MLP: one ReLU hidden layer, logistic output.

struct MlpModel {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 64;
    Row w1;  // hidden x input, row-major
    Row b1;  // hidden
    Row w2;  // hidden
    double b2 = 0.0;
    std::uint64_t seed = 0;

    std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + 1; }

    /// Logit of the positive class.
    double logit(std::span<const double> x, Row* hidden = nullptr) const {
        double z = b2;
        for (std::size_t h = 0; h < hidden_dim; ++h) {
            const double a = b1[h] + detail::dot(std::span(w1).subspan(h * input_dim, input_dim), x);
            const double r = a > 0.0 ? a : 0.0;
            if (hidden) (*hidden)[h] = a;
            z += w2[h] * r;
        }
        return z;
    }
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// PyTorch-style initialization: every weight and bias uniform in
/// +-1/sqrt(fan_in), drawn from the seed's "init" stream.
inline MlpModel init_mlp(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
    MlpModel m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.seed = seed;
    Rng rng = make_rng(derive_seed(seed, "init"));
    const double a1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    m.w1.resize(hidden_dim * input_dim);
    for (auto& w : m.w1) w = uniform(rng, -a1, a1);
    m.b1.resize(hidden_dim);
    for (auto& b : m.b1) b = uniform(rng, -a1, a1);
    m.w2.resize(hidden_dim);
    for (auto& w : m.w2) w = uniform(rng, -a2, a2);
    m.b2 = uniform(rng, -a2, a2);
    return m;
}

/// Parameters in the order w1, b1, w2, b2.
inline Row flatten(const MlpModel& m) {
    Row p;
    p.reserve(m.parameter_count());
    p.insert(p.end(), m.w1.begin(), m.w1.end());
    p.insert(p.end(), m.b1.begin(), m.b1.end());
    p.insert(p.end(), m.w2.begin(), m.w2.end());
    p.push_back(m.b2);
    return p;
}

inline void unflatten(MlpModel& m, std::span<const double> p) {
    if (p.size() != m.parameter_count()) fail(ErrorCode::DimensionMismatch, "parameter count mismatch");
    auto it = p.begin();
    std::copy_n(it, m.w1.size(), m.w1.begin());
    it += static_cast<std::ptrdiff_t>(m.w1.size());
    std::copy_n(it, m.b1.size(), m.b1.begin());
    it += static_cast<std::ptrdiff_t>(m.b1.size());
    std::copy_n(it, m.w2.size(), m.w2.begin());
    it += static_cast<std::ptrdiff_t>(m.w2.size());
    m.b2 = *it;
}

/// Mean binary cross-entropy over the selected rows plus (l2/2)||W||^2 on the
/// weight matrices. When `grad` is given it receives the gradient in
/// flatten() order.
inline double mlp_objective(const MlpModel& m, const Matrix& x, std::span<const int> y,
                            std::span<const std::size_t> rows, double l2, Row* grad) {
    const std::size_t d = m.input_dim, hd = m.hidden_dim;
    const std::size_t off_b1 = m.w1.size(), off_w2 = off_b1 + hd, off_b2 = off_w2 + hd;
    if (grad) grad->assign(m.parameter_count(), 0.0);
    Row pre(hd);
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (std::size_t r : rows) {
        const auto& xi = x[r];
        const double z = m.logit(xi, &pre);
        const double t = y[r] == 1 ? 1.0 : 0.0;
        loss += softplus(z) - t * z;
        if (!grad) continue;
        const double dz = (sigmoid(z) - t) * inv;
        auto& g = *grad;
        g[off_b2] += dz;
        for (std::size_t h = 0; h < hd; ++h) {
            if (pre[h] <= 0.0) continue;
            g[off_w2 + h] += dz * pre[h];
            const double da = dz * m.w2[h];
            g[off_b1 + h] += da;
            double* gw = g.data() + h * d;
            for (std::size_t j = 0; j < d; ++j) gw[j] += da * xi[j];
        }
    }
    loss *= inv;
    double sq = 0.0;
    for (double w : m.w1) sq += w * w;
    for (double w : m.w2) sq += w * w;
    loss += 0.5 * l2 * sq;
    if (grad) {
        auto& g = *grad;
        for (std::size_t i = 0; i < m.w1.size(); ++i) g[i] += l2 * m.w1[i];
        for (std::size_t h = 0; h < hd; ++h) g[off_w2 + h] += l2 * m.w2[h];
    }
    return loss;
}

inline double mlp_objective(const MlpModel& m, const Matrix& x, std::span<const int> y, double l2, Row* grad) {
    std::vector<std::size_t> all(x.size());
    std::iota(all.begin(), all.end(), 0);
    return mlp_objective(m, x, y, all, l2, grad);
}

/// Largest |g_a - g_n| / max(|g_a| + |g_n|, 1e-8) over all parameters, with
/// g_n from central differences of step 1e-5.
inline double mlp_gradient_check(const MlpModel& m, const Matrix& batch, std::span<const int> y, double l2) {
    if (batch.size() > 8) fail(ErrorCode::InvalidArgument, "gradient check takes at most 8 rows");
    detail::check_rows(batch, y.size());
    constexpr double step = 1e-5;
    Row analytic;
    mlp_objective(m, batch, y, l2, &analytic);
    MlpModel probe = m;
    Row p = flatten(m);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + step;
        unflatten(probe, p);
        const double up = mlp_objective(probe, batch, y, l2, nullptr);
        p[i] = keep - step;
        unflatten(probe, p);
        const double down = mlp_objective(probe, batch, y, l2, nullptr);
        p[i] = keep;
        const double numeric = (up - down) / (2.0 * step);
        const double err = std::abs(analytic[i] - numeric) / std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-8);
        worst = std::max(worst, err);
    }
    return worst;
}

/// Mean training objective before the first update and after every epoch.
struct TrainLog {
    std::vector<double> loss;
};

/// Adam (beta 0.9/0.999) on shuffled mini-batches; the "shuffle" stream of the
/// seed orders each epoch.
inline MlpModel train_mlp_from(MlpModel m, const Matrix& x, std::span<const int> y, const TrainConfig& cfg,
                               TrainLog* log = nullptr) {
    cfg.validate();
    const std::size_t d = detail::check_rows(x, y.size());
    if (x.size() < 2) fail(ErrorCode::TooFewRows, "training needs at least 2 rows");
    detail::require_dims(m.input_dim, d);
    require_both_classes(y);

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    Row p = flatten(m), mom(p.size(), 0.0), vel(p.size(), 0.0), grad;
    Rng shuffler = make_rng(derive_seed(m.seed, "shuffle"));
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    if (log) log->loss = {mlp_objective(m, x, y, cfg.l2, nullptr)};

    std::uint64_t t = 0;
    double b1t = 1.0, b2t = 1.0;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(std::span(order), shuffler);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const auto rows = std::span<const std::size_t>(order).subspan(start, std::min(batch, order.size() - start));
            mlp_objective(m, x, y, rows, cfg.l2, &grad);
            ++t;
            b1t *= beta1;
            b2t *= beta2;
            for (std::size_t i = 0; i < p.size(); ++i) {
                mom[i] = beta1 * mom[i] + (1.0 - beta1) * grad[i];
                vel[i] = beta2 * vel[i] + (1.0 - beta2) * grad[i] * grad[i];
                const double mhat = mom[i] / (1.0 - b1t);
                const double vhat = vel[i] / (1.0 - b2t);
                p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + eps);
            }
            unflatten(m, p);
        }
        if (log) log->loss.push_back(mlp_objective(m, x, y, cfg.l2, nullptr));
    }
    return m;
}

inline MlpModel train_mlp(const Matrix& x, std::span<const int> y, const TrainConfig& cfg, TrainLog* log = nullptr) {
    cfg.validate();
    const std::size_t d = detail::check_rows(x, y.size());
    return train_mlp_from(init_mlp(d, static_cast<std::size_t>(cfg.hidden_dim), cfg.seed), x, y, cfg, log);
}

inline Prediction predict(const MlpModel& m, std::span<const double> x) {
    detail::require_dims(m.input_dim, x.size());
    const double score = sigmoid(m.logit(x));
    return {score, score >= 0.5 ? 1 : 0};
}

// ---------------------------------------------------------------------------
// Linear SVM: hinge loss + L2, mini-batch Pegasos. The bias is the weight of
// a constant 1 feature and is regularized with the rest.

struct SvmModel {
    Row w;
    double b = 0.0;
    double lambda = 1e-4;
    std::uint64_t seed = 0;

    std::size_t input_dim() const noexcept { return w.size(); }
};

/// y in {-1, +1}.
inline SvmModel train_svm(const Matrix& x, std::span<const int> y, const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t d = detail::check_rows(x, y.size());
    bool pos = false, neg = false;
    for (int v : y) {
        if (v != 1 && v != -1) fail(ErrorCode::InvalidArgument, "SVM labels must be -1 or +1");
        pos = pos || v == 1;
        neg = neg || v == -1;
    }
    if (!pos || !neg) fail(ErrorCode::SingleClassData, "training labels contain a single class");

    SvmModel m;
    m.lambda = cfg.l2;
    m.seed = cfg.seed;
    Row w(d + 1, 0.0), step(d + 1, 0.0);
    Rng shuffler = make_rng(derive_seed(cfg.seed, "shuffle"));
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    const double radius = 1.0 / std::sqrt(m.lambda);
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(std::span(order), shuffler);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            ++t;
            const double eta = 1.0 / (m.lambda * static_cast<double>(t));
            std::fill(step.begin(), step.end(), 0.0);
            for (std::size_t k = start; k < end; ++k) {
                const auto& xi = x[order[k]];
                const double yi = y[order[k]];
                const double margin = yi * (detail::dot(std::span(w).first(d), xi) + w[d]);
                if (margin < 1.0) {
                    for (std::size_t j = 0; j < d; ++j) step[j] += yi * xi[j];
                    step[d] += yi;
                }
            }
            const double shrink = 1.0 - eta * m.lambda;
            const double scale = eta / static_cast<double>(end - start);
            double norm = 0.0;
            for (std::size_t j = 0; j <= d; ++j) {
                w[j] = shrink * w[j] + scale * step[j];
                norm += w[j] * w[j];
            }
            norm = std::sqrt(norm);
            if (norm > radius) {
                const double f = radius / norm;
                for (auto& v : w) v *= f;
            }
        }
    }
    m.b = w[d];
    w.pop_back();
    m.w = std::move(w);
    return m;
}

inline Prediction predict(const SvmModel& m, std::span<const double> x) {
    detail::require_dims(m.input_dim(), x.size());
    const double score = detail::dot(m.w, x) + m.b;
    return {score, score >= 0.0 ? 1 : 0};
}

// ---------------------------------------------------------------------------
// Model kinds behind one interface for the evaluation harness.

enum class ModelKind { Mlp, Svm };

inline std::string to_string(ModelKind k) { return k == ModelKind::Mlp ? "mlp" : "svm"; }

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
    if (s == "mlp") return ModelKind::Mlp;
    if (s == "svm") return ModelKind::Svm;
    return std::nullopt;
}

using AnyModel = std::variant<MlpModel, SvmModel>;

/// Labels in {0, 1}; converted to {-1, +1} for the SVM.
inline AnyModel train(ModelKind kind, const Matrix& x, std::span<const int> labels, const TrainConfig& cfg) {
    if (kind == ModelKind::Mlp) return train_mlp(x, labels, cfg);
    std::vector<int> pm(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) pm[i] = labels[i] == 1 ? 1 : -1;
    return train_svm(x, pm, cfg);
}

inline Prediction predict(const AnyModel& m, std::span<const double> x) {
    return std::visit([&](const auto& model) { return predict(model, x); }, m);
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON header plus base64 float32 parameter blobs.

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline std::string encode_floats(std::span<const double> values) {
    std::vector<unsigned char> bytes;
    bytes.reserve(values.size() * 4);
    for (double v : values) voicescreen::detail::put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    std::string out(sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
    sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
    out.resize(std::strlen(out.c_str()));
    return out;
}

inline Row decode_floats(const std::string& text, std::size_t expected, const std::string& where) {
    std::vector<unsigned char> bytes(text.size());
    std::size_t len = 0;
    if (sodium_base642bin(bytes.data(), bytes.size(), text.data(), text.size(), nullptr, &len, nullptr,
                          sodium_base64_VARIANT_ORIGINAL) != 0) {
        fail(ErrorCode::SchemaViolation, where + ": invalid base64");
    }
    if (len != expected * 4) {
        fail(ErrorCode::DimMismatch, where + ": expected " + std::to_string(expected) + " floats, found " +
                                         std::to_string(len / 4));
    }
    Row out(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        const float f = std::bit_cast<float>(voicescreen::detail::read_u32(bytes.data() + 4 * i));
        if (!std::isfinite(f)) fail(ErrorCode::NonFiniteValue, where + ": non-finite parameter");
        out[i] = f;
    }
    return out;
}

template <typename T>
T field(const nlohmann::json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) fail(ErrorCode::SchemaViolation, std::string("checkpoint: missing $.") + key);
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::SchemaViolation, std::string("checkpoint: $.") + key + " has the wrong type");
    }
}

}  // namespace detail

inline nlohmann::ordered_json checkpoint_json(const AnyModel& model, const TrainConfig& cfg,
                                              const Standardizer* standardizer = nullptr) {
    nlohmann::ordered_json j;
    j["format"] = "voicescreen-model";
    j["version"] = kCheckpointVersion;
    nlohmann::ordered_json hp;
    hp["learning_rate"] = cfg.learning_rate;
    hp["epochs"] = cfg.epochs;
    hp["batch_size"] = cfg.batch_size;
    hp["l2"] = cfg.l2;
    hp["hidden_dim"] = cfg.hidden_dim;
    if (const auto* mlp = std::get_if<MlpModel>(&model)) {
        j["type"] = "mlp";
        j["input_dim"] = mlp->input_dim;
        j["hidden_dim"] = mlp->hidden_dim;
        j["hyperparameters"] = hp;
        j["seed"] = mlp->seed;
        j["parameters"] = detail::encode_floats(flatten(*mlp));
    } else {
        const auto& svm = std::get<SvmModel>(model);
        j["type"] = "svm";
        j["input_dim"] = svm.input_dim();
        hp["lambda"] = svm.lambda;
        j["hyperparameters"] = hp;
        j["seed"] = svm.seed;
        Row p = svm.w;
        p.push_back(svm.b);
        j["parameters"] = detail::encode_floats(p);
    }
    if (standardizer) {
        j["standardizer"] = {{"means", detail::encode_floats(standardizer->means)},
                             {"stds", detail::encode_floats(standardizer->stds)}};
    }
    return j;
}

struct Checkpoint {
    AnyModel model;
    std::optional<Standardizer> standardizer;
};

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "voicescreen-model") {
        fail(ErrorCode::SchemaViolation, "checkpoint: not a voicescreen model file");
    }
    if (detail::field<int>(j, "version") != kCheckpointVersion) {
        fail(ErrorCode::SchemaViolation, "checkpoint: unsupported version");
    }
    const auto type = detail::field<std::string>(j, "type");
    const auto input = detail::field<std::size_t>(j, "input_dim");
    const auto params = detail::field<std::string>(j, "parameters");
    Checkpoint c;
    if (type == "mlp") {
        MlpModel m;
        m.input_dim = input;
        m.hidden_dim = detail::field<std::size_t>(j, "hidden_dim");
        m.seed = detail::field<std::uint64_t>(j, "seed");
        m.w1.resize(m.hidden_dim * input);
        m.b1.resize(m.hidden_dim);
        m.w2.resize(m.hidden_dim);
        unflatten(m, detail::decode_floats(params, m.parameter_count(), "checkpoint.parameters"));
        c.model = std::move(m);
    } else if (type == "svm") {
        SvmModel m;
        m.seed = detail::field<std::uint64_t>(j, "seed");
        m.lambda = detail::field<nlohmann::json>(j, "hyperparameters").value("lambda", 1e-4);
        auto p = detail::decode_floats(params, input + 1, "checkpoint.parameters");
        m.b = p.back();
        p.pop_back();
        m.w = std::move(p);
        c.model = std::move(m);
    } else {
        fail(ErrorCode::SchemaViolation, "checkpoint: unknown model type " + type);
    }
    if (const auto it = j.find("standardizer"); it != j.end()) {
        Standardizer s;
        s.means = detail::decode_floats(detail::field<std::string>(*it, "means"), input, "checkpoint.standardizer");
        s.stds = detail::decode_floats(detail::field<std::string>(*it, "stds"), input, "checkpoint.standardizer");
        c.standardizer = std::move(s);
    }
    return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const AnyModel& model, const TrainConfig& cfg,
                            const Standardizer* standardizer = nullptr) {
    const std::string text = checkpoint_json(model, cfg, standardizer).dump(2) + "\n";
    write_file_atomic(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    try {
        return checkpoint_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
}

}  // namespace voicescreen::model
