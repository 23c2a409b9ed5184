#include "perdisp/policy.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/core.h>

#include "perdisp/errors.hpp"
#include "perdisp/random.hpp"

namespace perdisp {

PVector::PVector(std::vector<int> counts) : counts_(std::move(counts))
{
    if (counts_.empty()) {
        throw ConfigError("p must have at least one type");
    }
    for (int c : counts_) {
        if (c < 1) {
            throw ConfigError(fmt::format("p entries must be >= 1, got {}", c));
        }
        norm_ += c;
    }
}

std::int64_t lcm_of(const PVector& p)
{
    std::int64_t l = 1;
    for (int c : p.counts()) {
        l = std::lcm(l, static_cast<std::int64_t>(c));
    }
    return l;
}

TypeSequence::TypeSequence(std::vector<int> word) : word_(std::move(word))
{
    if (word_.empty()) {
        throw ConfigError("type sequence must be non-empty");
    }
    types_ = *std::max_element(word_.begin(), word_.end());
    std::vector<int> seen(static_cast<std::size_t>(std::max(types_, 1)), 0);
    for (int r : word_) {
        if (r < 1) {
            throw ConfigError(fmt::format("type ids are 1-based, got {}", r));
        }
        ++seen[static_cast<std::size_t>(r - 1)];
    }
    for (int r = 1; r <= types_; ++r) {
        if (seen[static_cast<std::size_t>(r - 1)] == 0) {
            throw ConfigError(fmt::format("type {} never occurs in the type sequence", r));
        }
    }
}

PVector TypeSequence::counts() const
{
    std::vector<int> c(static_cast<std::size_t>(types_), 0);
    for (int r : word_) {
        ++c[static_cast<std::size_t>(r - 1)];
    }
    return PVector(std::move(c));
}

std::int64_t n_star(std::span<const Rational> q)
{
    if (q.empty()) {
        throw ConfigError("routing fractions are empty");
    }
    Rational total = 0;
    std::int64_t n = 1;
    for (const Rational& v : q) {
        if (v < Rational(0)) {
            throw ConfigError("routing fractions must be non-negative");
        }
        total += v;
        n = std::lcm(n, v.denominator());
    }
    if (total != Rational(1)) {
        throw ConfigError(fmt::format("routing fractions sum to {}/{}, not 1", total.numerator(), total.denominator()));
    }
    return n;
}

RoutingFractions::RoutingFractions(int types, int replicas, std::vector<Rational> q)
    : types_(types), replicas_(replicas), q_(std::move(q)), n_star_(0)
{
    if (types < 1 || replicas < 1) {
        throw ConfigError(fmt::format("need R >= 1 and k >= 1, got R={} k={}", types, replicas));
    }
    if (q_.size() != static_cast<std::size_t>(types) * static_cast<std::size_t>(replicas)) {
        throw ConfigError(fmt::format("q has {} entries, expected R*k = {}", q_.size(), types * replicas));
    }
    n_star_ = perdisp::n_star(q_);
}

Rational RoutingFractions::type_share(int type) const
{
    Rational s = 0;
    for (int kappa = 1; kappa <= replicas_; ++kappa) {
        s += (*this)(QueueId{type, kappa});
    }
    return s;
}

namespace {

RoutingFractions fractions_from_assignment(int types, int replicas, const std::vector<QueueId>& assignment)
{
    if (assignment.empty()) {
        throw ConfigError("policy period must be non-empty");
    }
    std::vector<std::int64_t> counts(static_cast<std::size_t>(types) * static_cast<std::size_t>(replicas), 0);
    for (const QueueId& id : assignment) {
        if (id.type < 1 || id.type > types || id.replica < 1 || id.replica > replicas) {
            throw ConfigError(
                fmt::format("queue ({},{}) outside the {}x{} system", id.type, id.replica, types, replicas));
        }
        ++counts[static_cast<std::size_t>(id.flat_index(replicas))];
    }
    const auto period = static_cast<std::int64_t>(assignment.size());
    std::vector<Rational> q;
    q.reserve(counts.size());
    for (std::int64_t c : counts) {
        q.emplace_back(c, period);
    }
    return RoutingFractions(types, replicas, std::move(q));
}

void check_cp_structure(int replicas, const std::vector<QueueId>& assignment, const TypeSequence& seq)
{
    const auto len = static_cast<std::size_t>(seq.length());
    std::vector<int> next(static_cast<std::size_t>(seq.types()), 1);
    for (std::size_t n = 0; n < assignment.size(); ++n) {
        const QueueId& id = assignment[n];
        if (id.type != seq.word()[n % len]) {
            throw ConfigError(fmt::format("C_p policy type word deviates from its sequence at job {}", n));
        }
        int& expected = next[static_cast<std::size_t>(id.type - 1)];
        if (id.replica != expected) {
            throw ConfigError(fmt::format("C_p policy breaks round-robin order at job {}", n));
        }
        expected = expected == replicas ? 1 : expected + 1;
    }
}

}  // namespace

PeriodicPolicy::PeriodicPolicy(int types, int replicas, std::vector<QueueId> assignment, PolicyClass policy_class,
                               std::optional<TypeSequence> type_sequence)
    : types_(types),
      replicas_(replicas),
      assignment_(std::move(assignment)),
      fractions_(fractions_from_assignment(types, replicas, assignment_)),
      class_(policy_class),
      type_sequence_(std::move(type_sequence))
{
    if (period() % fractions_.n_star() != 0) {
        throw ConfigError("policy period is not a multiple of n*");
    }
    if (class_ == PolicyClass::cp) {
        if (!type_sequence_) {
            throw ConfigError("C_p policy requires its type sequence");
        }
        if (type_sequence_->types() != types_) {
            throw ConfigError("type sequence and policy disagree on R");
        }
        check_cp_structure(replicas_, assignment_, *type_sequence_);
    }
}

std::int64_t PeriodicPolicy::visits(QueueId id) const
{
    return std::count(assignment_.begin(), assignment_.end(), id);
}

PeriodicPolicy build_cpk(const TypeSequence& seq, int k)
{
    if (k < 1) {
        throw ConfigError(fmt::format("k must be >= 1, got {}", k));
    }
    const std::size_t period = static_cast<std::size_t>(k) * static_cast<std::size_t>(seq.length());
    std::vector<QueueId> assignment;
    assignment.reserve(period);
    std::vector<int> next(static_cast<std::size_t>(seq.types()), 1);
    for (std::size_t n = 0; n < period; ++n) {
        const int r = seq.word()[n % seq.word().size()];
        int& kappa = next[static_cast<std::size_t>(r - 1)];
        assignment.push_back(QueueId{r, kappa});
        kappa = kappa == k ? 1 : kappa + 1;
    }
    return PeriodicPolicy(seq.types(), k, std::move(assignment), PolicyClass::cp, seq);
}

PeriodicPolicy scale_policy(const PeriodicPolicy& base, int k)
{
    if (base.policy_class() != PolicyClass::cp || base.replicas() != 1) {
        throw ConfigError("scale_policy needs a C_p policy with k = 1");
    }
    return build_cpk(*base.type_sequence(), k);
}

std::vector<TypeSequence> enumerate_type_sequences(const PVector& p, int cap)
{
    if (p.norm() > cap) {
        throw ConfigError(fmt::format("|p| = {} exceeds the enumeration cap {}", p.norm(), cap));
    }
    std::vector<int> word;
    word.reserve(static_cast<std::size_t>(p.norm()));
    for (int r = 1; r <= p.types(); ++r) {
        word.insert(word.end(), static_cast<std::size_t>(p[r]), r);
    }
    std::vector<TypeSequence> out;
    do {
        out.emplace_back(word);
    } while (std::next_permutation(word.begin(), word.end()));
    return out;
}

std::int64_t cp_cardinality(const PVector& p)
{
    // prod of binomials C(n_1 + ... + n_r, n_r)
    std::int64_t result = 1;
    std::int64_t n = 0;
    for (int c : p.counts()) {
        std::int64_t binom = 1;
        for (int i = 1; i <= c; ++i) {
            binom = binom * (n + i) / i;
        }
        n += c;
        result *= binom;
    }
    return result;
}

PatternProfile pattern_profile(const PeriodicPolicy& policy, QueueId queue)
{
    std::vector<std::int64_t> positions;
    for (std::int64_t n = 0; n < policy.period(); ++n) {
        if (policy.assignment()[static_cast<std::size_t>(n)] == queue) {
            positions.push_back(n);
        }
    }
    if (positions.empty()) {
        throw DomainError(fmt::format("queue ({},{}) is never visited", queue.type, queue.replica));
    }
    PatternProfile profile{queue, positions.front(), {}};
    profile.gaps.reserve(positions.size());
    for (std::size_t j = 0; j + 1 < positions.size(); ++j) {
        profile.gaps.push_back(positions[j + 1] - positions[j]);
    }
    profile.gaps.push_back(positions.front() + policy.period() - positions.back());
    return profile;
}

namespace {

// Gaps of queue (type, replica) under build_cpk(seq, k), read off the type word.
std::vector<std::int64_t> cp_gaps(const TypeSequence& seq, int type, int replica, std::int64_t k)
{
    std::vector<std::int64_t> slots;
    for (int n = 0; n < seq.length(); ++n) {
        if (seq.word()[static_cast<std::size_t>(n)] == type) {
            slots.push_back(n);
        }
    }
    const auto pr = static_cast<std::int64_t>(slots.size());
    const std::int64_t len = seq.length();
    std::vector<std::int64_t> pos(static_cast<std::size_t>(pr));
    for (std::int64_t s = 0; s < pr; ++s) {
        const std::int64_t c = replica - 1 + k * s;
        pos[static_cast<std::size_t>(s)] = (c / pr) * len + slots[static_cast<std::size_t>(c % pr)];
    }
    std::vector<std::int64_t> gaps(static_cast<std::size_t>(pr));
    for (std::int64_t s = 0; s + 1 < pr; ++s) {
        gaps[static_cast<std::size_t>(s)] = pos[static_cast<std::size_t>(s + 1)] - pos[static_cast<std::size_t>(s)];
    }
    gaps.back() = pos.front() + k * len - pos.back();
    return gaps;
}

}  // namespace

int fact1_violations(const TypeSequence& seq, int type, int m_max)
{
    const PVector p = seq.counts();
    if (type < 1 || type > p.types()) {
        throw ConfigError(fmt::format("type {} outside 1..{}", type, p.types()));
    }
    const int pr = p[type];
    int violations = 0;
    for (int m = 2; m <= m_max; ++m) {
        for (int i = 1; i <= pr; ++i) {
            const auto later = cp_gaps(seq, type, 1, pr * m + i);
            const auto earlier = cp_gaps(seq, type, 1, pr * (m - 1) + i);
            for (std::size_t j = 0; j < later.size(); ++j) {
                if (later[j] != earlier[j] + p.norm()) {
                    ++violations;
                }
            }
        }
    }
    return violations;
}

bool verify_fact1(const TypeSequence& seq, int type, int m_max) { return fact1_violations(seq, type, m_max) == 0; }

std::vector<double> gap_ratio_series(const TypeSequence& seq, int type, int j, std::span<const int> k_list)
{
    if (type < 1 || type > seq.types()) {
        throw ConfigError(fmt::format("type {} outside 1..{}", type, seq.types()));
    }
    std::vector<double> out;
    out.reserve(k_list.size());
    for (int k : k_list) {
        if (k < 1) {
            throw ConfigError(fmt::format("k must be positive, got {}", k));
        }
        const auto gaps = cp_gaps(seq, type, 1, k);
        if (j < 1 || static_cast<std::size_t>(j) > gaps.size()) {
            throw ConfigError(fmt::format("gap index {} outside 1..{}", j, gaps.size()));
        }
        out.push_back(static_cast<double>(gaps[static_cast<std::size_t>(j - 1)]) / k);
    }
    return out;
}

PeriodicPolicy random_q_policy(const RoutingFractions& q, std::uint64_t seed, std::int64_t period_cap)
{
    const std::int64_t period = q.n_star();
    if (period > period_cap) {
        throw ConfigError(fmt::format("n* = {} exceeds the period cap {}", period, period_cap));
    }
    std::vector<QueueId> word;
    word.reserve(static_cast<std::size_t>(period));
    for (int r = 1; r <= q.types(); ++r) {
        for (int kappa = 1; kappa <= q.replicas(); ++kappa) {
            const Rational copies = q(QueueId{r, kappa}) * period;
            word.insert(word.end(), static_cast<std::size_t>(copies.numerator()), QueueId{r, kappa});
        }
    }
    RandomStream stream(seed, 0, kShuffleStream);
    for (std::size_t i = word.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(stream.uniform_below(i));
        std::swap(word[i - 1], word[j]);
    }
    return PeriodicPolicy(q.types(), q.replicas(), std::move(word), PolicyClass::general_q);
}

bool has_type_shares(const RoutingFractions& q, const PVector& p)
{
    if (q.types() != p.types()) {
        return false;
    }
    for (int r = 1; r <= p.types(); ++r) {
        if (q.type_share(r) != Rational(p[r], p.norm())) {
            return false;
        }
    }
    return true;
}

}  // namespace perdisp
