#include "perdisp/analytic.hpp"

#define EIGEN_FFTW_DEFAULT
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fmt/core.h>

#include "perdisp/errors.hpp"
#include "perdisp/simulator.hpp"

namespace perdisp {

Dm1Result dm1_wait(double interarrival, double mu)
{
    if (!(std::isfinite(interarrival) && interarrival > 0.0 && std::isfinite(mu) && mu > 0.0)) {
        throw ConfigError(fmt::format("D/M/1 needs T > 0 and mu > 0, got T = {}, mu = {}", interarrival, mu));
    }
    const double a = mu * interarrival;
    if (!(a > 1.0)) {
        throw InstabilityError(fmt::format("D/M/1 needs mu T > 1, got mu T = {}", a));
    }
    // g(s) = s - exp(-a (1 - s)) is concave with g(0) < 0 and its maximum at
    // s_max = 1 - ln(a)/a where g > 0, so [0, s_max] brackets the root.
    auto g = [a](double s) { return s - std::exp(-a * (1.0 - s)); };
    double lo = 0.0;
    double hi = 1.0 - std::log(a) / a;
    double s = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double gs = g(s);
        if (gs == 0.0) {
            break;
        }
        (gs < 0.0 ? lo : hi) = s;
        const double slope = 1.0 - a * std::exp(-a * (1.0 - s));
        double next = slope > 0.0 ? s - gs / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - s) <= 1e-17) {
            s = next;
            break;
        }
        s = next;
    }
    const double tail = mu * (1.0 - s);
    return {s, s / tail, s * (2.0 - s) / (tail * tail)};
}

namespace {

std::mutex& fft_plan_mutex()
{
    static std::mutex m;
    return m;
}

/// Cramer-Lundberg exponent: theta > 0 with E exp(theta (S - T)) = 1, or 0 when S <= T a.s.
double adjustment_coefficient(double interarrival, const DistributionSpec& service)
{
    auto kappa = [&](double theta) { return std::log(mgf(service, theta)) - theta * interarrival; };
    double hi = 1.0 / mean(service);
    // grow until kappa turns positive (or the mgf diverges)
    int grow = 0;
    while (std::isfinite(kappa(hi)) && kappa(hi) <= 0.0) {
        hi *= 2.0;
        if (++grow > 200) {
            return 0.0;
        }
    }
    // kappa is convex with kappa(0) = 0 and kappa'(0) = E S - T < 0, so it is
    // negative exactly on (0, theta*)
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double k = kappa(mid);
        (std::isfinite(k) && k <= 0.0 ? lo : hi) = mid;
    }
    return lo;
}

/// Probability mass of `service` spread onto lattice points 0..size-1 by
/// linear interpolation inside each cell; preserves total mass and mean.
/// Cell masses and first moments are differences of upper-tail quantities.
std::vector<double> lattice_service(const DistributionSpec& service, double step, std::size_t size)
{
    std::vector<double> g(size, 0.0);
    double surv_lo = survival(service, 0.0);
    double tail_lo = tail_mean(service, 0.0);
    for (std::size_t i = 0; i + 1 < size; ++i) {
        const double lo = static_cast<double>(i) * step;
        const double hi = lo + step;
        const double surv_hi = survival(service, hi);
        const double tail_hi = tail_mean(service, hi);
        const double mass = std::max(0.0, surv_lo - surv_hi);
        // E[S - lo ; lo < S <= hi], the share that belongs to the right end point
        const double excess = std::clamp((tail_lo - tail_hi) - lo * mass, 0.0, mass * step);
        g[i] += mass - excess / step;
        g[i + 1] += excess / step;
        surv_lo = surv_hi;
        tail_lo = tail_hi;
    }
    const double total = std::accumulate(g.begin(), g.end(), 0.0);
    for (double& v : g) {
        v /= total;
    }
    return g;
}

}  // namespace

Dgi1Result dgi1_wait(double interarrival, const DistributionSpec& service, const GridOptions& options)
{
    validate(service);
    const double T = interarrival;
    if (!(std::isfinite(T) && T > 0.0)) {
        throw ConfigError(fmt::format("inter-arrival time must be > 0, got {}", T));
    }
    if (!(mean(service) < T)) {
        throw InstabilityError(fmt::format("D/GI/1 needs E S < T, got E S = {} and T = {}", mean(service), T));
    }
    if (!std::isfinite(raw_moment(service, 5))) {
        throw ConfigError("service time needs a finite fifth moment");
    }
    const double requested = options.grid_step > 0.0 ? options.grid_step : T / 2048.0;
    const auto shift = static_cast<std::size_t>(std::max(1.0, std::ceil(T / requested - 1e-9)));
    const double h = T / static_cast<double>(shift);

    Dgi1Result result;
    result.grid_step = h;

    const double service_top = upper_quantile(service, 1e-16);
    const double theta = adjustment_coefficient(T, service);
    if (theta == 0.0 || service_top <= T) {
        // S <= T almost surely: nobody ever waits
        result.mass = Eigen::VectorXd::Zero(1);
        result.mass(0) = 1.0;
        return result;
    }
    const double top = std::log(1.0 / options.tail_mass) / theta;
    const auto n = static_cast<std::size_t>(std::ceil(top / h)) + shift + 1;
    const auto m = static_cast<std::size_t>(std::ceil(service_top / h)) + 2;
    if (n + m > (std::size_t{1} << 27)) {
        throw NumericError(fmt::format("lattice too large ({} + {} points); increase grid_step", n, m));
    }
    std::size_t fft_size = 1;
    while (fft_size < n + m) {
        fft_size <<= 1;
    }

    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> g = lattice_service(service, h, m);
    g.resize(fft_size, 0.0);
    std::vector<std::complex<double>> g_hat;
    std::vector<double> w(fft_size, 0.0);
    std::vector<double> conv(fft_size, 0.0);
    std::vector<std::complex<double>> w_hat;
    {
        std::lock_guard lock(fft_plan_mutex());
        fft.fwd(g_hat, g);
        fft.fwd(w_hat, w);
        fft.inv(conv, w_hat, static_cast<Eigen::Index>(fft_size));
    }

    std::vector<double> next(n, 0.0);
    w[0] = 1.0;
    int it = 0;
    double change = 0.0;
    for (;;) {
        if (++it > options.max_iterations) {
            throw NumericError(fmt::format(
                "D/GI/1 lattice iteration did not converge in {} steps (last sup change {:.3g}, T={}, {})",
                options.max_iterations, change, T, kind_name(service)));
        }
        fft.fwd(w_hat, w);
        for (std::size_t i = 0; i < w_hat.size(); ++i) {
            w_hat[i] *= g_hat[i];
        }
        fft.inv(conv, w_hat, static_cast<Eigen::Index>(fft_size));

        // (W + S - T)^+ : shift down by T, fold the negative part into the atom
        double atom = 0.0;
        for (std::size_t i = 0; i <= shift; ++i) {
            atom += conv[i];
        }
        next[0] = std::max(0.0, atom);
        for (std::size_t j = 1; j < n; ++j) {
            next[j] = std::max(0.0, conv[j + shift]);
        }
        double overflow = 0.0;
        for (std::size_t i = n + shift; i < fft_size; ++i) {
            overflow += std::max(0.0, conv[i]);
        }
        next[n - 1] += overflow;
        double total = 0.0;
        for (double v : next) {
            total += v;
        }
        change = 0.0;
        double cum_next = 0.0;
        double cum_prev = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] /= total;
            cum_next += next[j];
            cum_prev += w[j];
            change = std::max(change, std::abs(cum_next - cum_prev));
        }
        std::copy(next.begin(), next.end(), w.begin());
        if (change < options.tolerance) {
            break;
        }
    }

    result.iterations = it;
    result.mass = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n), 0.0, h * static_cast<double>(n - 1));
    result.mean = result.mass.dot(t);
    result.variance = std::max(0.0, result.mass.dot(t.cwiseProduct(t)) - result.mean * result.mean);
    return result;
}

bool has_exact_wait(const DistributionSpec& service) { return !std::holds_alternative<UniformPositive>(service); }

namespace {

WaitMoments erlang_exact(double T, const Erlang& e)
{
    // roots s = rate (z - 1) with z = w_j exp(c (z - 1)), c = rate T / shape > 1,
    // w_j the shape-th roots of unity; each has exactly one solution in |z| < 1/c,
    // where the map is a contraction
    using cd = std::complex<double>;
    const int m = e.shape;
    const double c = e.rate * T / m;
    double inv_sum = 0.0;
    double inv_sq_sum = 0.0;
    for (int j = 0; j < m; ++j) {
        const cd omega = std::polar(1.0, 2.0 * std::numbers::pi * j / m);
        auto F = [&](cd z) { return omega * std::exp(c * (z - 1.0)); };
        cd z = 0.0;
        for (int it = 0; it < 100000; ++it) {
            const cd nz = F(z);
            const double d = std::abs(nz - z);
            z = nz;
            if (d < 1e-6) {
                break;
            }
        }
        for (int it = 0; it < 100; ++it) {
            const cd fz = F(z);
            const cd step = (z - fz) / (1.0 - c * fz);
            z -= step;
            if (std::abs(step) < 1e-16) {
                break;
            }
        }
        if (std::abs(z - F(z)) > 1e-12 || std::abs(z) >= 1.0 / c) {
            throw NumericError(fmt::format("Erlang root {} did not converge (T={}, shape={}, rate={})", j, T, m, e.rate));
        }
        const cd s = e.rate * (z - 1.0);
        inv_sum += (1.0 / -s).real();
        inv_sq_sum += (1.0 / (s * s)).real();
    }
    const double mean = inv_sum - m / e.rate;
    const double variance = inv_sq_sum - m / (e.rate * e.rate);
    return {std::max(0.0, mean), std::max(0.0, variance)};
}

WaitMoments hyperexponential_exact(double T, const HyperExponential2& h)
{
    if (h.rate1 == h.rate2) {
        const auto d = dm1_wait(T, h.rate1);
        return {d.mean, d.variance};
    }
    const double slow = std::min(h.rate1, h.rate2);
    const double fast = std::max(h.rate1, h.rate2);
    auto phi = [&](double s) {
        const double beta = h.weight * h.rate1 / (h.rate1 + s) + (1.0 - h.weight) * h.rate2 / (h.rate2 + s);
        return beta * std::exp(s * T) - 1.0;
    };
    auto bisect = [&](double neg, double pos) {
        for (int i = 0; i < 300; ++i) {
            const double mid = 0.5 * (neg + pos);
            (phi(mid) < 0.0 ? neg : pos) = mid;
        }
        return 0.5 * (neg + pos);
    };
    // root in (-slow, 0): phi < 0 just left of 0, phi -> +inf at -slow
    double near_zero = -1e-6 * slow;
    while (phi(near_zero) >= 0.0) {
        near_zero *= 0.5;
        if (near_zero > -1e-300) {
            throw NumericError("hyperexponential root near zero not bracketed");
        }
    }
    const double s1 = bisect(near_zero, -slow * (1.0 - 1e-15));
    // root in (-fast, -slow): phi runs from -inf at -slow to +inf at -fast
    const double s2 = bisect(-slow * (1.0 + 1e-15), -fast * (1.0 - 1e-15));
    const double mean = 1.0 / -s1 + 1.0 / -s2 - (1.0 / h.rate1 + 1.0 / h.rate2);
    const double variance = 1.0 / (s1 * s1) + 1.0 / (s2 * s2) - 1.0 / (h.rate1 * h.rate1) - 1.0 / (h.rate2 * h.rate2);
    return {std::max(0.0, mean), std::max(0.0, variance)};
}

}  // namespace

WaitMoments dgi1_wait_exact(double interarrival, const DistributionSpec& service)
{
    validate(service);
    if (!(mean(service) < interarrival)) {
        throw InstabilityError(
            fmt::format("D/GI/1 needs E S < T, got E S = {} and T = {}", mean(service), interarrival));
    }
    if (std::holds_alternative<Deterministic>(service)) {
        return {0.0, 0.0};
    }
    if (const auto* e = std::get_if<Exponential>(&service)) {
        const auto d = dm1_wait(interarrival, e->rate);
        return {d.mean, d.variance};
    }
    if (const auto* e = std::get_if<Erlang>(&service)) {
        return erlang_exact(interarrival, *e);
    }
    if (const auto* h = std::get_if<HyperExponential2>(&service)) {
        return hyperexponential_exact(interarrival, *h);
    }
    throw DomainError(fmt::format("no root-based D/GI/1 solution for {} service", kind_name(service)));
}

WaitMoments dgi1_moments(double interarrival, const DistributionSpec& service, const AnalyticOptions& options)
{
    const bool exact = options.method == WaitMethod::exact ||
                       (options.method == WaitMethod::automatic && has_exact_wait(service));
    if (exact) {
        return dgi1_wait_exact(interarrival, service);
    }
    const auto grid = dgi1_wait(interarrival, service, options.grid);
    return {grid.mean, grid.variance};
}

LimitSummary limit_summary(const PVector& p, double lambda, const std::vector<DistributionSpec>& services,
                           const AnalyticOptions& options)
{
    if (services.size() != static_cast<std::size_t>(p.types())) {
        throw ConfigError(fmt::format("p has {} types but {} service specs were given", p.types(), services.size()));
    }
    if (!(std::isfinite(lambda) && lambda > 0.0)) {
        throw ConfigError(fmt::format("lambda must be > 0, got {}", lambda));
    }
    LimitSummary out;
    const int types = p.types();
    Eigen::VectorXd weights(types);
    Eigen::VectorXd means(types);
    Eigen::VectorXd variances(types);
    for (int r = 1; r <= types; ++r) {
        const DistributionSpec& s = services[static_cast<std::size_t>(r - 1)];
        validate(s);
        TypeLimit t;
        t.weight = static_cast<double>(p[r]) / p.norm();
        t.interarrival = static_cast<double>(p.norm()) / (p[r] * lambda);
        if (!(mean(s) < t.interarrival)) {
            throw InstabilityError(fmt::format("type {} is unstable: lambda p_r/|p| = {:.6g} >= mu_r = {:.6g}", r,
                                               lambda * t.weight, 1.0 / mean(s)));
        }
        const WaitMoments w = dgi1_moments(t.interarrival, s, options);
        t.mean = w.mean;
        t.variance = w.variance;
        weights(r - 1) = t.weight;
        means(r - 1) = t.mean;
        variances(r - 1) = t.variance;
        out.per_type.push_back(t);
    }
    out.mixture_mean = mixture_mean(weights, means);
    out.mixture_variance = mixture_variance(weights, means, variances);
    return out;
}

double objective(const Eigen::VectorXd& x, double lambda, const std::vector<DistributionSpec>& services,
                 const AnalyticOptions& options)
{
    if (x.size() != static_cast<Eigen::Index>(services.size())) {
        throw ConfigError(fmt::format("x has {} entries but there are {} types", x.size(), services.size()));
    }
    if ((x.array() < 0.0).any() || std::abs(x.sum() - 1.0) > 1e-9) {
        throw InfeasibleError("routing fractions must lie on the probability simplex");
    }
    double value = 0.0;
    for (Eigen::Index r = 0; r < x.size(); ++r) {
        if (x(r) == 0.0) {
            continue;
        }
        const DistributionSpec& s = services[static_cast<std::size_t>(r)];
        const double T = 1.0 / (lambda * x(r));
        if (!(mean(s) < T)) {
            throw InfeasibleError(fmt::format("type {} overloaded at x = {}", r + 1, x(r)));
        }
        value += x(r) * dgi1_moments(T, s, options).mean;
    }
    return value;
}

}  // namespace perdisp
