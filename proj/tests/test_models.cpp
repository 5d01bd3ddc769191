#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "oracles.hpp"
#include "voicescreen/models.hpp"

using namespace voicescreen;
using namespace voicescreen::model;
using voicescreen::testing::near_relu_kink;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double sd = 1.0) {
    Matrix m(rows, Row(cols));
    for (auto& r : m) {
        for (auto& v : r) v = normal(rng, 0.0, sd);
    }
    return m;
}

// Two Gaussian blobs whose centres sit 2 * margin apart along the diagonal.
void blobs(std::size_t n, double margin, std::uint64_t seed, Matrix& x, std::vector<int>& y) {
    Rng rng = make_rng(seed);
    x.clear();
    y.clear();
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double c = label ? margin + 1.0 : -margin - 1.0;
        x.push_back({c + uniform(rng, -0.7, 0.7), c + uniform(rng, -0.7, 0.7)});
        y.push_back(label);
    }
}

double accuracy(const AnyModel& m, const Matrix& x, const std::vector<int>& y) {
    int ok = 0;
    for (std::size_t i = 0; i < x.size(); ++i) ok += predict(m, x[i]).label == y[i];
    return static_cast<double>(ok) / static_cast<double>(x.size());
}

}  // namespace

TEST(Standardizer, TwoRowArithmetic) {
    const auto s = fit_standardizer({{0.0}, {2.0}});
    EXPECT_EQ(s.means[0], 1.0);
    EXPECT_EQ(s.stds[0], 1.0);
    EXPECT_EQ(standardize(s, Row{0.0})[0], -1.0);
    EXPECT_EQ(standardize(s, Row{2.0})[0], 1.0);
}

TEST(Standardizer, ConstantColumnMapsToZero) {
    const Matrix rows{{0.1, 1.0}, {0.1, 2.0}, {0.1, 4.0}};
    const auto s = fit_standardizer(rows);
    EXPECT_EQ(s.stds[0], 1.0);
    for (const auto& r : standardize(s, rows)) EXPECT_EQ(r[0], 0.0);
}

TEST(Standardizer, RandomMatrixRecomputation) {
    Rng rng = make_rng(1);
    auto m = random_matrix(100, 10, rng, 5.0);
    for (auto& r : m) r[3] += 1000.0;
    const auto z = standardize(fit_standardizer(m), m);
    for (std::size_t j = 0; j < 10; ++j) {
        long double mean = 0, sq = 0;
        for (const auto& r : z) mean += r[j];
        mean /= 100;
        for (const auto& r : z) sq += (r[j] - mean) * (r[j] - mean);
        EXPECT_LT(std::abs(double(mean)), 1e-9);
        EXPECT_NEAR(double(std::sqrt(sq / 100)), 1.0, 1e-6);
    }
}

TEST(Standardizer, Errors) {
    EXPECT_EQ(code_of([] { fit_standardizer({{1.0}}); }), ErrorCode::TooFewRows);
    const auto s = fit_standardizer({{0.0, 1.0}, {1.0, 0.0}});
    EXPECT_EQ(code_of([&] { standardize(s, Row{1.0}); }), ErrorCode::DimensionMismatch);
}

TEST(Mlp, GradientCheckOnRandomDraws) {
    Rng rng = make_rng(99);
    int checked = 0;
    for (int draw = 0; checked < 20; ++draw) {
        const std::size_t d = 2 + uniform_index(rng, 6);
        const std::size_t h = 1 + uniform_index(rng, 8);
        const std::size_t n = 1 + uniform_index(rng, 8);
        const auto m = init_mlp(d, h, 1000 + static_cast<std::uint64_t>(draw));
        const auto x = random_matrix(n, d, rng);
        std::vector<int> y(n);
        for (auto& v : y) v = static_cast<int>(uniform_index(rng, 2));
        // Central differences are meaningless across a ReLU kink.
        if (near_relu_kink(m, x)) continue;
        EXPECT_LT(mlp_gradient_check(m, x, y, 1e-3), 1e-4) << "draw " << draw;
        ++checked;
    }
}

TEST(Mlp, OutputBiasGradientAtZeroOutputWeights) {
    Rng rng = make_rng(4);
    auto m = init_mlp(3, 5, 4);
    std::fill(m.w2.begin(), m.w2.end(), 0.0);
    m.b2 = 0.0;
    const auto x = random_matrix(6, 3, rng);
    const std::vector<int> y{1, 0, 0, 1, 1, 1};
    Row g;
    mlp_objective(m, x, y, 1e-4, &g);
    double expect = 0.0;
    for (int v : y) expect += 0.5 - v;
    EXPECT_EQ(g.back(), expect / 6.0);
}

TEST(Mlp, DuplicatedBatchGivesSameMeanGradient) {
    Rng rng = make_rng(5);
    const auto m = init_mlp(4, 6, 5);
    const auto x = random_matrix(4, 4, rng);
    const std::vector<int> y{1, 0, 1, 0};
    Matrix x2;
    std::vector<int> y2;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (int k = 0; k < 2; ++k) {
            x2.push_back(x[i]);
            y2.push_back(y[i]);
        }
    }
    Row g1, g2;
    mlp_objective(m, x, y, 1e-4, &g1);
    mlp_objective(m, x2, y2, 1e-4, &g2);
    for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g1[i], g2[i], 1e-15);
}

TEST(Mlp, ZeroOutputWeightsScoreExactlyHalf) {
    auto m = init_mlp(2, 3, 1);
    std::fill(m.w2.begin(), m.w2.end(), 0.0);
    m.b2 = 0.0;
    const auto p = predict(m, Row{0.3, -2.0});
    EXPECT_EQ(p.score, 0.5);
    EXPECT_EQ(p.label, 1);
}

TEST(Mlp, LearnsXor) {
    const Matrix x{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const std::vector<int> y{0, 1, 1, 0};
    TrainConfig cfg;
    cfg.hidden_dim = 8;
    cfg.epochs = 2000;
    cfg.learning_rate = 1e-2;
    cfg.seed = 3;
    const auto m = train_mlp(x, y, cfg);
    EXPECT_EQ(accuracy(m, x, y), 1.0);
}

TEST(Mlp, SeparatesBlobsAndLossFalls) {
    Matrix x;
    std::vector<int> y;
    blobs(20, 2.0, 11, x, y);
    TrainConfig cfg;
    cfg.seed = 7;
    TrainLog log;
    const auto m = train_mlp(x, y, cfg, &log);
    EXPECT_EQ(accuracy(m, x, y), 1.0);
    ASSERT_EQ(log.loss.size(), 201u);
    EXPECT_LT(log.loss.back(), log.loss.front());
}

TEST(Mlp, SameSeedBitwiseIdentical) {
    Rng rng = make_rng(12);
    const auto x = random_matrix(40, 5, rng);
    std::vector<int> y(40);
    for (std::size_t i = 0; i < 40; ++i) y[i] = x[i][0] + x[i][1] > 0 ? 1 : 0;
    TrainConfig cfg;
    cfg.seed = 7;
    cfg.epochs = 20;
    EXPECT_EQ(flatten(train_mlp(x, y, cfg)), flatten(train_mlp(x, y, cfg)));
}

TEST(Mlp, ColumnPermutationFollowsFirstLayer) {
    Rng rng = make_rng(13);
    const std::size_t d = 6;
    const auto x = random_matrix(30, d, rng);
    std::vector<int> y(30);
    for (std::size_t i = 0; i < 30; ++i) y[i] = x[i][2] - x[i][4] > 0 ? 1 : 0;
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    Matrix xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) xp[i][j] = x[i][perm[j]];
    }
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.hidden_dim = 8;
    cfg.seed = 21;
    const auto init = init_mlp(d, 8, 21);
    auto permuted = init;
    for (std::size_t h = 0; h < 8; ++h) {
        for (std::size_t j = 0; j < d; ++j) permuted.w1[h * d + j] = init.w1[h * d + perm[j]];
    }
    TrainLog a, b;
    train_mlp_from(init, x, y, cfg, &a);
    train_mlp_from(permuted, xp, y, cfg, &b);
    ASSERT_EQ(a.loss.size(), b.loss.size());
    for (std::size_t e = 0; e < a.loss.size(); ++e) EXPECT_NEAR(a.loss[e], b.loss[e], 1e-9);
}

TEST(Mlp, Errors) {
    TrainConfig cfg;
    EXPECT_EQ(code_of([&] { train_mlp({{1.0}, {2.0}}, std::vector<int>{1, 1}, cfg); }), ErrorCode::SingleClassData);
    EXPECT_EQ(code_of([&] { train_mlp({{1.0}, {2.0}}, std::vector<int>{1}, cfg); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([&] { predict(init_mlp(3, 2, 0), Row{1.0}); }), ErrorCode::DimensionMismatch);
    cfg.epochs = 0;
    EXPECT_EQ(code_of([&] { train_mlp({{1.0}, {2.0}}, std::vector<int>{1, 0}, cfg); }), ErrorCode::InvalidArgument);
}

TEST(Svm, SeparatesBlobs) {
    Matrix x;
    std::vector<int> y01;
    blobs(40, 2.0, 5, x, y01);
    std::vector<int> y;
    for (int v : y01) y.push_back(v ? 1 : -1);
    TrainConfig cfg;
    cfg.seed = 3;
    const auto m = train_svm(x, y, cfg);
    EXPECT_EQ(accuracy(m, x, y01), 1.0);
}

TEST(Svm, LabelFlipMirrorsSolution) {
    Rng rng = make_rng(8);
    const auto x = random_matrix(50, 4, rng);
    std::vector<int> y(50), flipped(50);
    for (std::size_t i = 0; i < 50; ++i) {
        y[i] = x[i][0] - 0.5 * x[i][3] > 0.1 ? 1 : -1;
        flipped[i] = -y[i];
    }
    TrainConfig cfg;
    cfg.seed = 4;
    const auto a = train_svm(x, y, cfg);
    const auto b = train_svm(x, flipped, cfg);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(a.w[j], -b.w[j], 1e-6);
    EXPECT_NEAR(a.b, -b.b, 1e-6);
}

TEST(Svm, StrongRegularizationShrinksWeights) {
    Matrix x;
    std::vector<int> y01;
    blobs(40, 2.0, 6, x, y01);
    std::vector<int> y;
    for (int v : y01) y.push_back(v ? 1 : -1);
    TrainConfig weak, strong;
    strong.l2 = 1e3;
    auto norm = [](const SvmModel& m) { return std::sqrt(std::inner_product(m.w.begin(), m.w.end(), m.w.begin(), 0.0)); };
    EXPECT_LT(norm(train_svm(x, y, strong)), norm(train_svm(x, y, weak)));
}

TEST(Svm, ScoreAndTieRule) {
    SvmModel m;
    m.w = {1.0, 0.0};
    const auto p = predict(m, Row{3.0, 7.0});
    EXPECT_EQ(p.score, 3.0);
    EXPECT_EQ(p.label, 1);
    const auto tie = predict(m, Row{0.0, 5.0});
    EXPECT_EQ(tie.score, 0.0);
    EXPECT_EQ(tie.label, 1);
}

TEST(Svm, Errors) {
    TrainConfig cfg;
    EXPECT_EQ(code_of([&] { train_svm({{1.0}, {2.0}}, std::vector<int>{-1, -1}, cfg); }), ErrorCode::SingleClassData);
    EXPECT_EQ(code_of([&] { train_svm({{1.0}, {2.0}}, std::vector<int>{0, 1}, cfg); }), ErrorCode::InvalidArgument);
}

TEST(Checkpoint, RoundTripKeepsPredictions) {
    Matrix x;
    std::vector<int> y;
    blobs(20, 2.0, 9, x, y);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.seed = 2;
    const auto s = fit_standardizer(x);
    const auto z = standardize(s, x);
    const auto dir = std::filesystem::temp_directory_path();
    for (auto kind : {ModelKind::Mlp, ModelKind::Svm}) {
        const auto m = train(kind, z, y, cfg);
        const auto path = dir / ("voicescreen_ckpt_" + to_string(kind) + ".json");
        save_checkpoint(path, m, cfg, &s);
        const auto c = load_checkpoint(path);
        std::filesystem::remove(path);
        ASSERT_TRUE(c.standardizer.has_value());
        EXPECT_EQ(c.model.index(), m.index());
        for (const auto& row : x) {
            const auto zr = standardize(*c.standardizer, row);
            EXPECT_NEAR(predict(c.model, zr).score, predict(m, standardize(s, row)).score, 1e-4);
            EXPECT_EQ(predict(c.model, zr).label, predict(m, standardize(s, row)).label);
        }
    }
}

TEST(Checkpoint, RejectsDamagedFiles) {
    TrainConfig cfg;
    auto j = checkpoint_json(AnyModel{init_mlp(3, 2, 1)}, cfg);
    auto bad = j;
    bad["parameters"] = "AAAA";
    EXPECT_EQ(code_of([&] { checkpoint_from_json(bad); }), ErrorCode::DimMismatch);
    bad = j;
    bad["type"] = "forest";
    EXPECT_EQ(code_of([&] { checkpoint_from_json(bad); }), ErrorCode::SchemaViolation);
    bad = j;
    bad.erase("input_dim");
    EXPECT_EQ(code_of([&] { checkpoint_from_json(bad); }), ErrorCode::SchemaViolation);
}
