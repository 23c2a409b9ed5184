#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <boost/rational.hpp>

namespace perdisp {

using Rational = boost::rational<std::int64_t>;

/// Queue (r, kappa): type r in 1..R, replica kappa in 1..k. Ids are 1-based
/// everywhere they are user-visible; flat_index() is the 0-based storage slot.
struct QueueId {
    int type = 1;
    int replica = 1;

    auto operator<=>(const QueueId&) const = default;

    [[nodiscard]] int flat_index(int replicas) const { return (type - 1) * replicas + (replica - 1); }
    static QueueId from_flat(int index, int replicas) { return {index / replicas + 1, index % replicas + 1}; }
};

/// Jobs per period per type; all entries >= 1.
class PVector {
public:
    explicit PVector(std::vector<int> counts);

    [[nodiscard]] int types() const { return static_cast<int>(counts_.size()); }
    [[nodiscard]] int operator[](int type) const { return counts_.at(type - 1); }
    [[nodiscard]] int norm() const { return norm_; }
    [[nodiscard]] const std::vector<int>& counts() const { return counts_; }

    bool operator==(const PVector&) const = default;

private:
    std::vector<int> counts_;
    int norm_ = 0;
};

std::int64_t lcm_of(const PVector& p);

/// Word over {1..R} in which every type occurs at least once.
class TypeSequence {
public:
    explicit TypeSequence(std::vector<int> word);

    [[nodiscard]] const std::vector<int>& word() const { return word_; }
    [[nodiscard]] int length() const { return static_cast<int>(word_.size()); }
    [[nodiscard]] int types() const { return types_; }
    /// Occurrence counts, i.e. the p this word realizes.
    [[nodiscard]] PVector counts() const;

    bool operator==(const TypeSequence&) const = default;

private:
    std::vector<int> word_;
    int types_ = 0;
};

/// R x k routing fractions held exactly, plus the minimal common period n*.
class RoutingFractions {
public:
    RoutingFractions(int types, int replicas, std::vector<Rational> q);

    [[nodiscard]] int types() const { return types_; }
    [[nodiscard]] int replicas() const { return replicas_; }
    [[nodiscard]] std::int64_t n_star() const { return n_star_; }
    [[nodiscard]] const Rational& operator()(QueueId id) const { return q_.at(id.flat_index(replicas_)); }
    [[nodiscard]] const std::vector<Rational>& values() const { return q_; }

    /// Sum over replicas of q_{r, kappa}: the fraction of jobs sent to type r.
    [[nodiscard]] Rational type_share(int type) const;

private:
    int types_;
    int replicas_;
    std::vector<Rational> q_;
    std::int64_t n_star_;
};

/// Minimal n with n * q integral for every entry. Throws ConfigError unless
/// all entries are >= 0 and sum to exactly one.
std::int64_t n_star(std::span<const Rational> q);

enum class PolicyClass { general_q, cp };

/// One period of a periodic routing word; job n goes to assignment()[n mod period()].
class PeriodicPolicy {
public:
    PeriodicPolicy(int types, int replicas, std::vector<QueueId> assignment, PolicyClass policy_class,
                   std::optional<TypeSequence> type_sequence = std::nullopt);

    [[nodiscard]] int types() const { return types_; }
    [[nodiscard]] int replicas() const { return replicas_; }
    [[nodiscard]] int queue_count() const { return types_ * replicas_; }
    [[nodiscard]] std::int64_t period() const { return static_cast<std::int64_t>(assignment_.size()); }
    [[nodiscard]] const std::vector<QueueId>& assignment() const { return assignment_; }
    [[nodiscard]] QueueId queue_at(std::int64_t n) const { return assignment_[static_cast<std::size_t>(n % period())]; }
    [[nodiscard]] const RoutingFractions& fractions() const { return fractions_; }
    [[nodiscard]] PolicyClass policy_class() const { return class_; }
    /// Present for C_p policies.
    [[nodiscard]] const std::optional<TypeSequence>& type_sequence() const { return type_sequence_; }
    /// Visits to `id` in one period.
    [[nodiscard]] std::int64_t visits(QueueId id) const;

private:
    int types_;
    int replicas_;
    std::vector<QueueId> assignment_;
    RoutingFractions fractions_;
    PolicyClass class_;
    std::optional<TypeSequence> type_sequence_;
};

/// Round-robin-within-type policy: the type word repeats `seq`, and each
/// type's jobs cycle over replicas 1, 2, ..., k starting at replica 1.
/// The stored period is k * |seq|.
PeriodicPolicy build_cpk(const TypeSequence& seq, int k);

/// The member of C_p^(k) with the same type word as a k = 1 base policy.
PeriodicPolicy scale_policy(const PeriodicPolicy& base, int k);

inline constexpr int kDefaultSequenceCap = 12;
inline constexpr std::int64_t kDefaultPeriodCap = 1'000'000;

/// All distinct arrangements of the multiset {r repeated p_r times}, in
/// lexicographic order. Refuses (ConfigError) when |p| exceeds `cap`.
std::vector<TypeSequence> enumerate_type_sequences(const PVector& p, int cap = kDefaultSequenceCap);

/// |p|! / prod p_r!, computed exactly.
std::int64_t cp_cardinality(const PVector& p);

/// Dispatcher arrivals between consecutive visits to one queue, starting at
/// its first visit in the period and wrapping around.
struct PatternProfile {
    QueueId queue;
    std::int64_t first_visit = 0;  // 0-based position in the period
    std::vector<std::int64_t> gaps;
};

PatternProfile pattern_profile(const PeriodicPolicy& policy, QueueId queue);

/// Number of (m, i, j) with a_{j,r}^(p_r m + i) != a_{j,r}^(p_r (m-1) + i) + |p|
/// over m in 2..m_max, i in 1..p_r, j in 1..p_r, using queue (r, 1).
int fact1_violations(const TypeSequence& seq, int type, int m_max);

bool verify_fact1(const TypeSequence& seq, int type, int m_max);

/// a_{j,r}^(k) / k for each k in k_list (j is 1-based).
std::vector<double> gap_ratio_series(const TypeSequence& seq, int type, int j, std::span<const int> k_list);

/// Seeded Fisher-Yates shuffle of the multiset with n* q_{r,kappa} copies of each queue.
PeriodicPolicy random_q_policy(const RoutingFractions& q, std::uint64_t seed,
                               std::int64_t period_cap = kDefaultPeriodCap);

/// True when sum_kappa q_{r,kappa} = p_r / |p| for every type.
bool has_type_shares(const RoutingFractions& q, const PVector& p);

}  // namespace perdisp
