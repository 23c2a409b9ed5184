#include <random>

#include <gtest/gtest.h>

#include "perdisp/errors.hpp"
#include "perdisp/optimizer.hpp"

using namespace perdisp;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) {
        x(i++) = e;
    }
    return x;
}

/// Uniform point of the simplex (Dirichlet(1, ..., 1)) that lies in `set`.
Eigen::VectorXd random_feasible(const FeasibleSet& set, std::mt19937_64& rng)
{
    std::exponential_distribution<double> e(1.0);
    for (int attempt = 0; attempt < 1'000'000; ++attempt) {
        Eigen::VectorXd x(set.types());
        for (int r = 0; r < set.types(); ++r) {
            x(r) = e(rng);
        }
        x /= x.sum();
        if (set.contains(x)) {
            return x;
        }
    }
    throw std::runtime_error("could not sample a feasible point");
}

std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> random_pairs(const FeasibleSet& set, int count,
                                                                     std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd a = random_feasible(set, rng);
        Eigen::VectorXd b = random_feasible(set, rng);
        pairs.emplace_back(std::move(a), std::move(b));
    }
    return pairs;
}

}  // namespace

TEST(Projection, SatisfiesOptimalityConditions)
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    const Eigen::VectorXd upper = vec({0.5, 0.9, 0.3, 1.0});
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::VectorXd y(4);
        for (int i = 0; i < 4; ++i) {
            y(i) = n(rng);
        }
        const Eigen::VectorXd x = project_capped_simplex(y, upper);
        EXPECT_NEAR(x.sum(), 1.0, 1e-12);
        // KKT: one multiplier tau with x_i = clamp(y_i - tau, 0, u_i)
        double tau = std::numeric_limits<double>::quiet_NaN();
        for (int i = 0; i < 4; ++i) {
            if (x(i) > 1e-12 && x(i) < upper(i) - 1e-12) {
                tau = y(i) - x(i);
            }
        }
        if (std::isnan(tau)) {
            continue;
        }
        for (int i = 0; i < 4; ++i) {
            EXPECT_NEAR(x(i), std::clamp(y(i) - tau, 0.0, upper(i)), 1e-10);
        }
    }
}

TEST(Projection, FixedPointInsideTheSet)
{
    const Eigen::VectorXd x = vec({0.2, 0.5, 0.3});
    const Eigen::VectorXd upper = vec({1.0, 1.0, 1.0});
    EXPECT_LT((project_capped_simplex(x, upper) - x).norm(), 1e-15);
}

TEST(FeasibleSet, Emptiness)
{
    const std::vector<DistributionSpec> s{Exponential{1.0}, Exponential{1.0}};
    EXPECT_TRUE(make_feasible_set(1.99, s).nonempty());
    EXPECT_FALSE(make_feasible_set(1.999, s).nonempty());
    EXPECT_THROW(minimize(make_feasible_set(2.5, s), s), InfeasibleError);
    EXPECT_THROW(make_feasible_set(1.0, s, 0.0), ConfigError);
}

TEST(Minimize, SymmetricInstanceSplitsEvenly)
{
    const std::vector<DistributionSpec> s{Exponential{1.0}, Exponential{1.0}};
    const auto r = minimize(make_feasible_set(1.0, s), s);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x_opt(0), 0.5, 1e-3);
    EXPECT_NEAR(r.x_opt(1), 0.5, 1e-3);
    EXPECT_NEAR(r.value, objective(r.x_opt, 1.0, s), 1e-12);
    EXPECT_LT(r.certificate, 1e-5);
    EXPECT_FALSE(r.trajectory.empty());
}

TEST(Minimize, SingleTypeIsTrivial)
{
    const std::vector<DistributionSpec> s{Erlang{2, 3.0}};
    const auto r = minimize(make_feasible_set(1.0, s), s);
    EXPECT_EQ(r.x_opt.size(), 1);
    EXPECT_DOUBLE_EQ(r.x_opt(0), 1.0);
}

TEST(Minimize, FavoursFasterTypeAndBeatsGrid)
{
    const double lambda = 0.3;
    const std::vector<DistributionSpec> s{Exponential{2.0}, Exponential{1.0}};
    const FeasibleSet set = make_feasible_set(lambda, s);
    const auto r = minimize(set, s);
    EXPECT_GT(r.x_opt(0), r.x_opt(1));
    for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd x = vec({i / 999.0, 1.0 - i / 999.0});
        if (set.contains(x)) {
            EXPECT_LE(r.value, objective(x, lambda, s) + 1e-6) << "grid point " << i;
        }
    }
}

TEST(Minimize, BeatsThreeTypeGrid)
{
    const double lambda = 2.0;
    const std::vector<DistributionSpec> s{Exponential{1.5}, Erlang{2, 2.0}, HyperExponential2{0.5, 0.8, 2.0}};
    const FeasibleSet set = make_feasible_set(lambda, s);
    const auto r = minimize(set, s);
    EXPECT_TRUE(set.contains(r.x_opt));
    const int steps = 44;  // 1035 grid nodes
    int checked = 0;
    for (int i = 0; i <= steps; ++i) {
        for (int j = 0; i + j <= steps; ++j) {
            const Eigen::VectorXd x = vec({double(i) / steps, double(j) / steps, double(steps - i - j) / steps});
            if (set.contains(x)) {
                EXPECT_LE(r.value, objective(x, lambda, s) + 1e-6);
                ++checked;
            }
        }
    }
    EXPECT_GT(checked, 100);
}

TEST(Minimize, SameAnswerFromRandomStarts)
{
    const double lambda = 1.5;
    const std::vector<DistributionSpec> s{Exponential{1.4}, Erlang{2, 2.0}, Exponential{0.9}};
    const FeasibleSet set = make_feasible_set(lambda, s);
    const auto reference = minimize(set, s);
    std::mt19937_64 rng(17);
    for (int i = 0; i < 10; ++i) {
        OptimizerOptions opts;
        opts.start = random_feasible(set, rng);
        const auto r = minimize(set, s, opts);
        EXPECT_LT((r.x_opt - reference.x_opt).lpNorm<Eigen::Infinity>(), 1e-4);
    }
}

TEST(Rationalize, ExactInputsComeBack)
{
    const std::vector<DistributionSpec> two{Exponential{1.0}, Exponential{1.0}};
    EXPECT_EQ(rationalize(vec({0.5, 0.5}), 10, 1.0, two), PVector({1, 1}));
    EXPECT_EQ(rationalize(vec({2.0 / 3.0, 1.0 / 3.0}), 10, 1.0, two), PVector({2, 1}));
    for (int a = 1; a <= 9; ++a) {
        for (int b = 1; a + b <= 10; ++b) {
            if (std::gcd(a, b) != 1) {
                continue;
            }
            const double n = a + b;
            EXPECT_EQ(rationalize(vec({a / n, b / n}), a + b, 0.5, two), PVector({a, b})) << a << "," << b;
        }
    }
    const std::vector<DistributionSpec> three{Exponential{1.0}, Exponential{1.0}, Exponential{1.0}};
    EXPECT_EQ(rationalize(vec({0.5, 0.3, 0.2}), 10, 1.0, three), PVector({5, 3, 2}));
}

TEST(Rationalize, MatchesExhaustiveEnumeration)
{
    // optimum of this instance is near x_1 = 0.61
    const double lambda = 1.0;
    const std::vector<DistributionSpec> s{Exponential{1.4}, Exponential{1.0}};
    const PVector got = rationalize(vec({0.61, 0.39}), 10, lambda, s);
    PVector best({1, 1});
    double best_value = std::numeric_limits<double>::infinity();
    for (int n = 2; n <= 10; ++n) {
        for (int a = 1; a < n; ++a) {
            const double v = objective(vec({double(a) / n, double(n - a) / n}), lambda, s);
            if (v < best_value - 1e-12) {
                best_value = v;
                best = PVector({a, n - a});
            }
        }
    }
    EXPECT_EQ(got, best);
}

TEST(Rationalize, NothingFeasible)
{
    const std::vector<DistributionSpec> s{Exponential{1.9}, Exponential{0.1}};
    // every p has p_2 >= 1, so with max_norm 2 type 2 gets half of lambda = 1
    EXPECT_THROW(rationalize(vec({0.95, 0.05}), 2, 1.0, s), InfeasibleError);
}

TEST(Convexity, ExponentialAndErlangServices)
{
    for (const auto& s : {std::vector<DistributionSpec>{Exponential{1.0}, Exponential{1.0}},
                          std::vector<DistributionSpec>{Exponential{2.0}, Exponential{0.7}, Exponential{1.0}},
                          std::vector<DistributionSpec>{Erlang{2, 2.0}, Erlang{2, 1.0}},
                          std::vector<DistributionSpec>{Erlang{2, 4.0}, Erlang{2, 2.0}, Erlang{2, 3.0}}}) {
        const double lambda = 1.2;
        const FeasibleSet set = make_feasible_set(lambda, s);
        ASSERT_TRUE(set.nonempty());
        EXPECT_LE(convexity_probe(s, lambda, random_pairs(set, 100, 3), 9), 1e-6);
    }
}

TEST(Convexity, IdenticalPairHasNoViolation)
{
    const std::vector<DistributionSpec> s{Exponential{1.0}, Exponential{1.0}};
    const Eigen::VectorXd x = vec({0.3, 0.7});
    EXPECT_EQ(convexity_probe(s, 1.0, {{x, x}}, 5), 0.0);
}
