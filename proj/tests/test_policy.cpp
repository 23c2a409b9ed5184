#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "perdisp/errors.hpp"
#include "perdisp/policy.hpp"

using namespace perdisp;

namespace {

std::vector<std::int64_t> gaps(const PeriodicPolicy& policy, int r, int kappa)
{
    return pattern_profile(policy, QueueId{r, kappa}).gaps;
}

using Gaps = std::vector<std::int64_t>;

}  // namespace

TEST(NStar, Examples)
{
    const std::vector<Rational> half{Rational(1, 2), Rational(1, 2)};
    EXPECT_EQ(n_star(half), 2);
    const std::vector<Rational> fifths{Rational(3, 5), Rational(2, 5)};
    EXPECT_EQ(n_star(fifths), 5);
    const std::vector<Rational> quarters(4, Rational(1, 4));
    EXPECT_EQ(n_star(quarters), 4);
    const std::vector<Rational> mixed{Rational(1, 6), Rational(1, 4), Rational(7, 12)};
    EXPECT_EQ(n_star(mixed), 12);
}

TEST(NStar, RejectsBadFractions)
{
    const std::vector<Rational> short_sum{Rational(1, 2), Rational(1, 3)};
    EXPECT_THROW(n_star(short_sum), ConfigError);
    const std::vector<Rational> negative{Rational(3, 2), Rational(-1, 2)};
    EXPECT_THROW(n_star(negative), ConfigError);
    EXPECT_THROW(n_star(std::vector<Rational>{}), ConfigError);
}

TEST(TypeSequence, Validation)
{
    EXPECT_THROW(TypeSequence({}), ConfigError);
    EXPECT_THROW(TypeSequence({1, 3}), ConfigError);
    EXPECT_THROW(TypeSequence({0, 1}), ConfigError);
    EXPECT_EQ(TypeSequence({1, 1, 2, 1, 2}).counts(), PVector({3, 2}));
    EXPECT_THROW(PVector({1, 0}), ConfigError);
}

TEST(BuildCpk, Table1BasePolicy)
{
    const auto policy = build_cpk(TypeSequence({1, 1, 2, 1, 2}), 1);
    EXPECT_EQ(policy.period(), 5);
    EXPECT_EQ(policy.visits({1, 1}), 3);
    EXPECT_EQ(policy.visits({2, 1}), 2);
}

TEST(BuildCpk, RoundRobinBothTiers)
{
    const auto policy = build_cpk(TypeSequence({1, 2}), 2);
    const std::vector<QueueId> expected{{1, 1}, {2, 1}, {1, 2}, {2, 2}};
    EXPECT_EQ(policy.assignment(), expected);
    EXPECT_EQ(policy.period(), 4);
}

TEST(BuildCpk, Table1FirstGap)
{
    // queue (1,1) gets dispatcher jobs 1 and 12 of the k = 7 system
    const auto policy = build_cpk(TypeSequence({1, 1, 2, 1, 2}), 7);
    const auto profile = pattern_profile(policy, {1, 1});
    EXPECT_EQ(profile.first_visit, 0);
    EXPECT_EQ(profile.gaps.front(), 11);
    const std::vector<QueueId> head{{1, 1}, {1, 2}, {2, 1}, {1, 3}, {2, 2}, {1, 4},
                                    {1, 5}, {2, 3}, {1, 6}, {2, 4}, {1, 7}, {1, 1}};
    EXPECT_TRUE(std::equal(head.begin(), head.end(), policy.assignment().begin()));
}

TEST(BuildCpk, FractionsAndMembership)
{
    for (const auto& word : {std::vector<int>{1, 1, 2, 1, 2}, {2, 1, 3, 1}, {1}, {1, 2, 2, 2}}) {
        const TypeSequence seq(word);
        const PVector p = seq.counts();
        for (int k : {1, 2, 3, 5, 8}) {
            const auto policy = build_cpk(seq, k);
            EXPECT_EQ(policy.period(), static_cast<std::int64_t>(k) * p.norm());
            EXPECT_EQ(policy.period() % policy.fractions().n_star(), 0);
            for (int r = 1; r <= p.types(); ++r) {
                for (int kappa = 1; kappa <= k; ++kappa) {
                    EXPECT_EQ(policy.fractions()({r, kappa}), Rational(p[r], k * p.norm()));
                    EXPECT_EQ(policy.visits({r, kappa}), p[r]);
                }
            }
            for (std::int64_t n = 0; n < policy.period(); ++n) {
                EXPECT_EQ(policy.queue_at(n).type, word[static_cast<std::size_t>(n) % word.size()]);
            }
            EXPECT_TRUE(has_type_shares(policy.fractions(), p));
        }
    }
}

TEST(BuildCpk, RejectsTamperedCpPolicy)
{
    std::vector<QueueId> broken{{1, 2}, {2, 1}, {1, 1}, {2, 2}};
    EXPECT_THROW(PeriodicPolicy(2, 2, broken, PolicyClass::cp, TypeSequence({1, 2})), ConfigError);
    EXPECT_THROW(PeriodicPolicy(2, 2, broken, PolicyClass::cp), ConfigError);
    EXPECT_NO_THROW(PeriodicPolicy(2, 2, broken, PolicyClass::general_q));
    EXPECT_THROW(PeriodicPolicy(2, 2, {{3, 1}}, PolicyClass::general_q), ConfigError);
}

TEST(ScalePolicy, PreservesTypeWord)
{
    const auto base = build_cpk(TypeSequence({1, 2}), 1);
    const auto scaled = scale_policy(base, 3);
    EXPECT_EQ(scaled.replicas(), 3);
    for (std::int64_t n = 0; n < 60; ++n) {
        EXPECT_EQ(scaled.queue_at(n).type, base.queue_at(n).type);
    }
    const std::vector<QueueId> head{{1, 1}, {2, 1}, {1, 2}, {2, 2}, {1, 3}, {2, 3}, {1, 1}};
    for (std::size_t n = 0; n < head.size(); ++n) {
        EXPECT_EQ(scaled.queue_at(static_cast<std::int64_t>(n)), head[n]);
    }
    EXPECT_EQ(scale_policy(base, 1).assignment(), base.assignment());
    EXPECT_THROW(scale_policy(scaled, 2), ConfigError);
}

TEST(ScalePolicy, Table1ProfilesDifferByNorm)
{
    const auto base = build_cpk(TypeSequence({1, 1, 2, 1, 2}), 1);
    const auto g4 = gaps(scale_policy(base, 4), 1, 1);
    const auto g7 = gaps(scale_policy(base, 7), 1, 1);
    ASSERT_EQ(g4.size(), g7.size());
    for (std::size_t j = 0; j < g4.size(); ++j) {
        EXPECT_EQ(g7[j], g4[j] + 5);
    }
}

TEST(Enumerate, Cardinalities)
{
    EXPECT_EQ(enumerate_type_sequences(PVector({3, 2})).size(), 10u);
    EXPECT_EQ(enumerate_type_sequences(PVector({1, 1})).size(), 2u);
    EXPECT_EQ(enumerate_type_sequences(PVector({2})).size(), 1u);
    EXPECT_EQ(cp_cardinality(PVector({3, 2})), 10);
}

TEST(Enumerate, MatchesBruteForceForSmallNorms)
{
    const std::vector<std::vector<int>> ps{{1}, {2, 1}, {2, 2}, {3, 2}, {1, 1, 1}, {2, 1, 1}, {4, 4},
                                           {3, 3, 2}, {2, 2, 2, 2}, {5, 1, 1, 1}, {1, 7}};
    for (const auto& counts : ps) {
        const PVector p(counts);
        const auto seqs = enumerate_type_sequences(p);
        std::set<std::vector<int>> got;
        for (const auto& s : seqs) {
            got.insert(s.word());
        }
        EXPECT_EQ(got.size(), seqs.size()) << "duplicates";
        EXPECT_EQ(got, oracle::words_with_counts(counts));
        EXPECT_EQ(static_cast<double>(seqs.size()), oracle::multinomial(counts));
        EXPECT_EQ(cp_cardinality(p), static_cast<std::int64_t>(oracle::multinomial(counts)));
    }
}

TEST(Enumerate, RefusesBeyondCap)
{
    EXPECT_THROW(enumerate_type_sequences(PVector({7, 6})), ConfigError);
    EXPECT_NO_THROW(enumerate_type_sequences(PVector({7, 6}), 13));
    EXPECT_THROW(enumerate_type_sequences(PVector({2, 2}), 3), ConfigError);
}

TEST(PatternProfile, Table1Gaps)
{
    const TypeSequence seq({1, 1, 2, 1, 2});
    EXPECT_EQ(gaps(build_cpk(seq, 7), 1, 1), (Gaps{11, 12, 12}));
    EXPECT_EQ(gaps(build_cpk(seq, 7), 2, 1), (Gaps{17, 18}));
    EXPECT_EQ(gaps(build_cpk(seq, 4), 1, 1), (Gaps{6, 7, 7}));
    EXPECT_EQ(gaps(build_cpk(seq, 1), 1, 1), (Gaps{1, 2, 2}));
    EXPECT_EQ(gaps(build_cpk(TypeSequence({1}), 1), 1, 1), (Gaps{1}));
}

TEST(PatternProfile, MatchesTwoTierOracleAndSumsToPeriod)
{
    for (const auto& word : {std::vector<int>{1, 1, 2, 1, 2}, {2, 1, 3, 1, 2}, {2, 2, 1}, {1, 2, 3, 3}}) {
        const TypeSequence seq(word);
        const PVector p = seq.counts();
        for (int k : {1, 2, 3, 6, 11}) {
            const auto policy = build_cpk(seq, k);
            for (int r = 1; r <= p.types(); ++r) {
                std::vector<std::int64_t> sorted_first;
                for (int kappa = 1; kappa <= k; ++kappa) {
                    const auto g = gaps(policy, r, kappa);
                    EXPECT_EQ(g, oracle::two_tier_gaps(word, k, r, kappa));
                    EXPECT_EQ(std::accumulate(g.begin(), g.end(), std::int64_t{0}),
                              static_cast<std::int64_t>(k) * p.norm());
                    auto sorted = g;
                    std::sort(sorted.begin(), sorted.end());
                    if (kappa == 1) {
                        sorted_first = sorted;
                    } else {
                        EXPECT_EQ(sorted, sorted_first) << "replica symmetry";
                    }
                }
            }
        }
    }
}

TEST(PatternProfile, UnvisitedQueueIsDomainError)
{
    const auto policy = PeriodicPolicy(1, 2, {{1, 1}}, PolicyClass::general_q);
    EXPECT_THROW(pattern_profile(policy, {1, 2}), DomainError);
}

TEST(Fact1, Examples)
{
    EXPECT_TRUE(verify_fact1(TypeSequence({1, 1, 2, 1, 2}), 1, 20));
    EXPECT_TRUE(verify_fact1(TypeSequence({1, 2}), 1, 20));
    EXPECT_TRUE(verify_fact1(TypeSequence({1, 2}), 2, 20));
    EXPECT_TRUE(verify_fact1(TypeSequence({1, 1, 2, 1, 2}), 2, 20));
}

TEST(Fact1, HoldsForAllSequencesUpToNormEight)
{
    const std::vector<std::vector<int>> ps{{1}, {2}, {1, 1}, {2, 1}, {3, 2}, {2, 2, 1}, {4, 3, 1}, {1, 1, 1, 1}, {5, 3}};
    for (const auto& counts : ps) {
        for (const auto& seq : enumerate_type_sequences(PVector(counts))) {
            for (int r = 1; r <= seq.types(); ++r) {
                ASSERT_EQ(fact1_violations(seq, r, 20), 0);
            }
        }
    }
}

TEST(GapRatio, ConvergesToNormOverShare)
{
    const TypeSequence seq({1, 1, 2, 1, 2});
    const std::vector<int> ks{6, 60, 600, 6000};
    for (int j = 1; j <= 3; ++j) {
        const auto series = gap_ratio_series(seq, 1, j, ks);
        EXPECT_NEAR(series.back(), 5.0 / 3.0, 0.01 * 5.0 / 3.0);
    }
    for (int j = 1; j <= 2; ++j) {
        EXPECT_NEAR(gap_ratio_series(seq, 2, j, ks).back(), 2.5, 0.025);
    }
    for (double v : gap_ratio_series(TypeSequence({1}), 1, 1, ks)) {
        EXPECT_EQ(v, 1.0);
    }
    EXPECT_THROW(gap_ratio_series(seq, 2, 3, ks), ConfigError);
}

TEST(GapRatio, AgreesWithBuiltPolicies)
{
    for (const auto& counts : std::vector<std::vector<int>>{{1, 1}, {2, 1}, {3, 2}, {2, 1, 2}}) {
        for (const auto& seq : enumerate_type_sequences(PVector(counts))) {
            for (int k = 1; k <= 7; ++k) {
                const auto policy = build_cpk(seq, k);
                for (int r = 1; r <= seq.types(); ++r) {
                    const Gaps built = gaps(policy, r, 1);
                    for (int j = 1; j <= static_cast<int>(built.size()); ++j) {
                        const int ks[] = {k};
                        EXPECT_EQ(gap_ratio_series(seq, r, j, ks).front() * k,
                                  static_cast<double>(built[static_cast<std::size_t>(j - 1)]));
                    }
                }
            }
        }
    }
    const int ks[] = {2};
    EXPECT_THROW(gap_ratio_series(TypeSequence({1, 2}), 3, 1, ks), ConfigError);
}

TEST(RandomQPolicy, CountsMatchFractions)
{
    const RoutingFractions uniform(1, 2, {Rational(1, 2), Rational(1, 2)});
    const auto policy = random_q_policy(uniform, 5);
    EXPECT_EQ(policy.period(), 2);
    EXPECT_EQ(policy.visits({1, 1}), 1);
    EXPECT_EQ(policy.visits({1, 2}), 1);

    const RoutingFractions q(2, 2, {Rational(1, 3), Rational(1, 6), Rational(1, 4), Rational(1, 4)});
    std::set<std::vector<QueueId>> words;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = random_q_policy(q, seed);
        EXPECT_EQ(p.period(), 12);
        EXPECT_EQ(p.policy_class(), PolicyClass::general_q);
        for (int r = 1; r <= 2; ++r) {
            for (int kappa = 1; kappa <= 2; ++kappa) {
                EXPECT_EQ(p.fractions()({r, kappa}), q({r, kappa}));
            }
        }
        words.insert(p.assignment());
    }
    EXPECT_GT(words.size(), 1u);
    EXPECT_EQ(random_q_policy(q, 3).assignment(), random_q_policy(q, 3).assignment());
}

TEST(RandomQPolicy, RefusesLongPeriods)
{
    const RoutingFractions q(1, 2, {Rational(1, 1'000'003), Rational(1'000'002, 1'000'003)});
    EXPECT_THROW(random_q_policy(q, 1), ConfigError);
}

TEST(TypeShares, DetectsUnbalancedAggregates)
{
    const RoutingFractions q(2, 1, {Rational(1, 2), Rational(1, 2)});
    EXPECT_TRUE(has_type_shares(q, PVector({1, 1})));
    EXPECT_FALSE(has_type_shares(q, PVector({2, 1})));
    const RoutingFractions unbalanced(1, 2, {Rational(3, 4), Rational(1, 4)});
    EXPECT_TRUE(has_type_shares(unbalanced, PVector({1})));
}
