#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "smds/rng.hpp"
#include "smds/stress.hpp"

using namespace smds;

namespace {

Embedding random_points(Eigen::Index n, Eigen::Index dim, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Embedding X(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < dim; ++k) X(i, k) = g(rng);
    return X;
}

// Exact distances from `truth` over all pairs.
ObservationBatch full_batch(const Embedding& truth) {
    ObservationBatch b;
    for (Eigen::Index m = 0; m < truth.rows(); ++m)
        for (Eigen::Index n = m + 1; n < truth.rows(); ++n)
            b.entries.push_back({m, n, (truth.row(m) - truth.row(n)).norm(), 1.0});
    return b;
}

ObservationBatch noisy_batch(Eigen::Index n, Rng& rng) {
    std::uniform_real_distribution<double> d(0.5, 3.0);
    std::uniform_real_distribution<double> w(0.1, 1.0);
    ObservationBatch b;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) b.entries.push_back({i, j, d(rng), w(rng)});
    return b;
}

Embedding centered(Embedding X) {
    X.rowwise() -= X.colwise().mean();
    return X;
}

}  // namespace

TEST_CASE("stress examples") {
    Rng rng(1);
    Embedding truth = random_points(5, 2, rng);
    CHECK(stress(truth, full_batch(truth)) <= 1e-24);

    Embedding X(2, 2);
    X << 0, 0, 2, 0;
    ObservationBatch b;
    b.entries.push_back({0, 1, 1.0, 1.0});
    CHECK(stress(X, b) == doctest::Approx(1.0));

    b.entries[0].weight = 0.0;
    CHECK(stress(X, b) == 0.0);
    CHECK(normalized_stress(X, b) == 0.0);
}

TEST_CASE("stress invariances") {
    Rng rng(2);
    Embedding X = random_points(8, 2, rng);
    ObservationBatch b = noisy_batch(8, rng);
    const double s = stress(X, b);
    Eigen::RowVector2d c(3.25, -1.5);
    Embedding shifted = X.rowwise() + c;
    CHECK(stress(shifted, b) == doctest::Approx(s).epsilon(1e-12));
    const double a = 0.7;
    Eigen::Matrix2d R;
    R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    CHECK(std::abs(stress(X * R, b) - s) <= 1e-10 * (1 + s));
}

TEST_CASE("b_epsilon_matrix examples") {
    Embedding X(2, 2);
    X << 0, 0, 3, 0;
    ObservationBatch b;
    b.entries.push_back({0, 1, 2.0, 1.0});
    auto B = b_epsilon_matrix(X, b, 0.0);
    REQUIRE(B.size() == 1);
    Eigen::MatrixXd expected(2, 2);
    expected << 2.0 / 3, -2.0 / 3, -2.0 / 3, 2.0 / 3;
    CHECK((B[0].dense() - expected).norm() <= 1e-15);

    Embedding same = Embedding::Zero(2, 2);
    auto Bc = b_epsilon_matrix(same, b, 1e-8);
    CHECK(std::isfinite(Bc[0].dense()(0, 1)));
    CHECK(Bc[0].dense()(0, 1) == doctest::Approx(-2.0 * 1e4));

    auto B0 = b_epsilon_matrix(same, b, 0.0);
    CHECK(B0[0].dense().norm() == 0.0);

    ObservationBatch zero;
    zero.entries.push_back({0, 1, 2.0, 0.0});
    auto Bz = b_epsilon_matrix(X, zero, 1e-8);
    for (const auto& c : Bz) CHECK(c.weights().empty());
}

TEST_CASE("b_epsilon_matrix bounded with zero row sums") {
    Rng rng(4);
    Embedding X = random_points(10, 2, rng, 0.01);
    ObservationBatch b = noisy_batch(10, rng);
    const double eps = 1e-4;
    for (const auto& c : b_epsilon_matrix(X, b, eps)) {
        Eigen::MatrixXd D = c.dense();
        for (Eigen::Index r = 0; r < D.rows(); ++r) CHECK(std::abs(D.row(r).sum()) <= 1e-9 * D(r, r));
        for (const auto& e : c.weights()) CHECK(e.weight <= 3.0 / std::sqrt(eps) + 1e-9);
    }
}

TEST_CASE("smacof_iterate fixed point at perfect fit") {
    Rng rng(5);
    Embedding truth = centered(random_points(7, 2, rng));
    Embedding next = smacof_iterate(truth, full_batch(truth));
    CHECK((next - truth).norm() <= 1e-10);
}

TEST_CASE("smacof_iterate is monotone") {
    Rng rng(6);
    for (int rep = 0; rep < 100; ++rep) {
        ObservationBatch b = noisy_batch(10, rng);
        Embedding X = centered(random_points(10, 2, rng));
        const double before = stress(X, b);
        const double after = stress(smacof_iterate(X, b), b);
        CHECK(after <= before + 1e-10 * (1 + before));
    }
}

TEST_CASE("smacof_iterate converges on a known point set") {
    Rng rng(7);
    Embedding truth = random_points(12, 2, rng);
    ObservationBatch b = full_batch(truth);
    Embedding X = centered(random_points(12, 2, rng));
    const double initial = stress(X, b);
    double prev = initial;
    for (int it = 0; it < 300; ++it) {
        X = smacof_iterate(X, b);
        const double s = stress(X, b);
        CHECK(s <= prev + 1e-10 * (1 + prev));
        prev = s;
    }
    CHECK(prev <= initial);
}

TEST_CASE("stochastic_step: mu = 0 is the identity") {
    Rng rng(8);
    for (int rep = 0; rep < 1000; ++rep) {
        Embedding X = random_points(6, 2, rng);
        ObservationBatch b = noisy_batch(6, rng);
        StepConfig cfg;
        cfg.mu = 0.0;
        CHECK((stochastic_step(X, b, cfg) - X).norm() == 0.0);
    }
}

TEST_CASE("stochastic_step: mu = 1 on the full graph equals smacof_iterate") {
    Rng rng(9);
    for (int rep = 0; rep < 1000; ++rep) {
        Embedding X = centered(random_points(6, 2, rng));
        ObservationBatch b = noisy_batch(6, rng);
        StepConfig cfg;
        cfg.mu = 1.0;
        cfg.eps_x = 0.0;
        Embedding a = stochastic_step(X, b, cfg);
        Embedding s = smacof_iterate(X, b);
        CHECK((a - s).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, s.norm()));
    }
}

TEST_CASE("stochastic_step: two-node cluster equals spe_step") {
    Rng rng(10);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 1000; ++rep) {
        Embedding X = random_points(4, 2, rng);
        ObservationBatch b;
        const double delta = 0.1 + 2.0 * u(rng);
        b.entries.push_back({1, 3, delta, 1.0});
        StepConfig cfg;
        cfg.mu = u(rng);
        cfg.eps_x = 0.0;
        Embedding a = stochastic_step(X, b, cfg);
        auto [xi, xj] = spe_step(X.row(1).transpose(), X.row(3).transpose(), delta, cfg.mu / 2.0);
        CHECK((a.row(1).transpose() - xi).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((a.row(3).transpose() - xj).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(a.row(0) == X.row(0));
        CHECK(a.row(2) == X.row(2));
    }
}

TEST_CASE("stochastic_step preserves component centers and leaves idle rows") {
    Rng rng(12);
    Embedding X = random_points(8, 2, rng);
    ObservationBatch b;
    b.entries = {{0, 1, 1.0, 1.0}, {1, 2, 1.5, 0.5}, {4, 5, 2.0, 1.0}};
    StepConfig cfg;
    cfg.mu = 0.4;
    Embedding Y = stochastic_step(X, b, cfg);
    auto mean = [](const Embedding& M, std::vector<Eigen::Index> rows) {
        Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(M.cols());
        for (auto r : rows) s += M.row(r);
        return s;
    };
    CHECK((mean(Y, {0, 1, 2}) - mean(X, {0, 1, 2})).norm() <= 1e-9 * X.norm());
    CHECK((mean(Y, {4, 5}) - mean(X, {4, 5})).norm() <= 1e-9 * X.norm());
    for (Eigen::Index r : {3, 6, 7}) CHECK(Y.row(r) == X.row(r));
}

TEST_CASE("stochastic_step: degenerate cluster is skipped") {
    Rng rng(13);
    Embedding X = random_points(4, 2, rng);
    ObservationBatch b;
    b.entries.push_back({0, 1, 1.0, 0.0});
    StepConfig cfg;
    CHECK((stochastic_step(X, b, cfg) - X).norm() == 0.0);
}

TEST_CASE("spe_step examples") {
    Eigen::Vector2d xi(0, 0), xj(2, 0);
    auto [a, b] = spe_step(xi, xj, 1.0, 0.5);
    CHECK(a(0) == doctest::Approx(0.5));
    CHECK(a(1) == 0.0);
    CHECK(b(0) == doctest::Approx(1.5));

    auto [c, d] = spe_step(xi, xj, 2.0, 0.8);
    CHECK((c - xi).norm() == 0.0);
    CHECK((d - xj).norm() == 0.0);

    auto [e, f] = spe_step(xi, xj, 1.0, 0.0);
    CHECK((e - xi).norm() == 0.0);
    CHECK((f - xj).norm() == 0.0);

    CHECK_THROWS_AS(spe_step(xi, xi, 1.0, 0.5), InvalidInput);
}

TEST_CASE("sgd_step examples") {
    Rng rng(14);
    Embedding X = random_points(5, 2, rng);
    ObservationBatch b = noisy_batch(5, rng);
    CHECK((sgd_step(X, b, 0.0).X - X).norm() == 0.0);

    Embedding truth = random_points(5, 2, rng);
    auto r = sgd_step(truth, full_batch(truth), 0.3);
    CHECK((r.X - truth).norm() <= 1e-12);
    CHECK_FALSE(r.diverged);
}

TEST_CASE("upsilon and closed form") {
    CHECK(upsilon(6, 6) == doctest::Approx(1.0));
    CHECK(upsilon(6, 3) == doctest::Approx(6.0 * 2 / (3.0 * 5)));

    Embedding X(2, 1);
    X << 0, 2;
    Eigen::MatrixXd D(2, 2);
    D << 0, 3, 3, 0;
    Eigen::MatrixXd Ba = closed_form_b_average(X, D, 0.0, 2, 2);
    const double dbar = 3.0 / 2.0;
    Eigen::MatrixXd expected(2, 2);
    expected << dbar, -dbar, -dbar, dbar;
    expected *= 0.5;
    CHECK((Ba - expected).norm() <= 1e-15);

    CHECK_THROWS_AS(closed_form_b_average(Embedding::Zero(6, 2), Eigen::MatrixXd::Ones(6, 6), 1e-8, 6, 4),
                    InvalidInput);
}

TEST_CASE("averaged_step: mu = 0 and p = N") {
    Rng rng(15);
    Embedding truth = random_points(6, 2, rng);
    Embedding X = centered(random_points(6, 2, rng));
    Eigen::MatrixXd D(6, 6);
    for (int m = 0; m < 6; ++m)
        for (int n = 0; n < 6; ++n) D(m, n) = (truth.row(m) - truth.row(n)).norm();
    Eigen::MatrixXd Ba = closed_form_b_average(X, D, 0.0, 6, 6);
    CHECK((averaged_step(X, Ba, 0.0, 1.0) - X).norm() == 0.0);

    // With p = N and unit weights, L^+ B X = B X / N, so the averaged step is
    // the relaxed Guttman transform.
    const double mu = 0.3;
    Embedding step = averaged_step(X, Ba, mu, upsilon(6, 6));
    Embedding relaxed = (1 - mu) * X + mu * smacof_iterate(X, full_batch(truth));
    CHECK((step - relaxed).norm() <= 1e-10);
}

TEST_CASE("averaged_step: mean stress non-increasing") {
    Rng rng(16);
    const Eigen::Index N = 8, p = 4;
    Embedding truth = random_points(N, 2, rng);
    Eigen::MatrixXd D(N, N);
    for (int m = 0; m < N; ++m)
        for (int n = 0; n < N; ++n) D(m, n) = (truth.row(m) - truth.row(n)).norm();
    Embedding X = centered(random_points(N, 2, rng));
    const double ups = upsilon(N, p);
    double prev = mean_stress(X, D, 1e-8);
    for (int t = 0; t < 200; ++t) {
        X = averaged_step(X, closed_form_b_average(X, D, 1e-8, N, p), 0.5, ups);
        const double s = mean_stress(X, D, 1e-8);
        CHECK(s <= prev + 1e-10 * (1 + std::abs(prev)));
        prev = s;
    }
}

TEST_CASE("mean_stress equals plain stress at eps_x = 0") {
    Rng rng(17);
    Embedding truth = random_points(5, 2, rng);
    Embedding X = random_points(5, 2, rng);
    ObservationBatch b = full_batch(truth);
    Eigen::MatrixXd D(5, 5);
    for (int m = 0; m < 5; ++m)
        for (int n = 0; n < 5; ++n) D(m, n) = (truth.row(m) - truth.row(n)).norm();
    CHECK(mean_stress(X, D, 0.0) == doctest::Approx(stress(X, b)).epsilon(1e-12));
}

TEST_CASE("StepConfig validation") {
    StepConfig c;
    c.mu = 1.5;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c.mu = 0.5;
    c.eps_w = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c.eps_w = 1e-3;
    c.eps_x = -1.0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
}
