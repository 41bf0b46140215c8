#include "cmj/ancestry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "cmj/errors.hpp"

namespace cmj {

namespace {

constexpr std::size_t kMaxChainSteps = 1'000'000;

double boundary_or_throw(const PdeSolution& sol, double t) {
    const double b = sol.boundary_at(t);
    if (!(b > 0.0)) throw DomainError("u_t(0) = 0 at t = " + std::to_string(t) + ": the chain is absorbed");
    return b;
}

void check_chain(std::span<const double> chain) {
    if (chain.empty()) throw ConfigError("chain: empty");
    for (std::size_t i = 1; i < chain.size(); ++i)
        if (!(chain[i] < chain[i - 1])) throw ConfigError("chain: times must be strictly decreasing");
    if (!(chain.back() <= 0.0)) throw ConfigError("chain: last time must be ≤ 0");
    if (chain.size() > 1 && !(chain[chain.size() - 2] > 0.0)) throw ConfigError("chain: only the last time may be ≤ 0");
}

}  // namespace

double kernel_density(const PdeSolution& sol, const InteractionRule& C, double t, double a) {
    if (!(t > 0.0)) throw DomainError("kernel_density: t must be positive");
    const double b = boundary_or_throw(sol, t);
    if (a < 0.0) return 0.0;
    const double tau = sol.rate(a);
    if (tau == 0.0) return 0.0;
    return C(t, sol.slice(t)) * eval_u(sol, t, a) * tau / b;
}

double kernel_mass(const PdeSolution& sol, const InteractionRule& C, double t) {
    if (!(t > 0.0)) throw DomainError("kernel_mass: t must be positive");
    const double b = boundary_or_throw(sol, t);
    const auto u = sol.slice(t);
    return C(t, u) * u.integrate([&](double a) { return sol.rate(a); }) / b;
}

std::vector<double> kernel_bin_masses(const PdeSolution& sol, const InteractionRule& C, double t,
                                      std::span<const double> edges) {
    if (edges.size() < 2) throw ConfigError("kernel_bin_masses: need at least two edges");
    const double b = boundary_or_throw(sol, t);
    const double c = C(t, sol.slice(t));
    const double h = sol.dt();
    std::vector<double> out(edges.size() - 1, 0.0);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        const double lo = edges[k], hi = std::min(edges[k + 1], t + sol.initial_support_end());
        if (!(hi > lo)) continue;
        // the integrand has a kink at a = t; split there
        double acc = 0.0;
        auto piece = [&](double from, double to, bool boundary_side) {
            if (!(to > from)) return;
            const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((to - from) / h - 1e-9)));
            const double w = (to - from) / static_cast<double>(n);
            for (std::size_t j = 0; j <= n; ++j) {
                const double a = from + w * static_cast<double>(j);
                const double u = boundary_side ? sol.boundary_at(t - a) : sol.initial_density(a - t);
                const double f = u * sol.rate(a);
                acc += (j == 0 || j == n) ? 0.5 * w * f : w * f;
            }
        };
        piece(lo, std::min(hi, t), true);
        piece(std::max(lo, t), hi, false);
        out[k] = c * acc / b;
    }
    return out;
}

ChainSample sample_chain(const PdeSolution& sol, double t1, Rng& rng) {
    ChainSample ch;
    ch.times.push_back(t1);
    const double sup = sol.rate_sup();
    double t = t1;
    while (t > 0.0) {
        if (ch.times.size() > kMaxChainSteps) throw ResourceError("sample_chain: more than 10^6 steps");
        if (t > sol.horizon() * (1.0 + 1e-12)) throw DomainError("sample_chain: t beyond the solved range");
        boundary_or_throw(sol, t);
        if (!(sup > 0.0)) throw DomainError("sample_chain: τ vanishes identically");
        // age ~ u_t(a) da, then accept with τ(a)/sup
        const double mb = sol.boundary_integral(t);
        const double mg = sol.initial_mass();
        double a = 0.0;
        for (std::size_t tries = 0;; ++tries) {
            if (tries > 10'000'000) throw ResourceError("sample_chain: rejection sampler stalled");
            const double pick = rng.uniform() * (mb + mg);
            if (pick < mb) a = t - sol.boundary_integral_inverse(rng.uniform() * mb);
            else a = t + sol.initial_cumulative_inverse(rng.uniform() * mg);
            if (!(a > 0.0)) continue;
            if (rng.uniform() * sup <= sol.rate(a)) break;
        }
        t -= a;
        ch.times.push_back(t);
    }
    return ch;
}

double chain_density(const PdeSolution& sol, const InteractionRule& C, std::span<const double> chain) {
    check_chain(chain);
    double p = sol.initial_density(-chain.back());
    for (std::size_t i = 0; i + 1 < chain.size() && p != 0.0; ++i)
        p *= C(chain[i], sol.slice(chain[i])) * sol.rate(chain[i] - chain[i + 1]);
    return p;
}

double chain_density_telescoped(const PdeSolution& sol, const InteractionRule& C, std::span<const double> chain) {
    check_chain(chain);
    if (chain.size() == 1) return sol.initial_density(-chain[0]);
    double p = sol.boundary_at(chain[0]);
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) p *= kernel_density(sol, C, chain[i], chain[i] - chain[i + 1]);
    return p;
}

std::vector<WeightedChain> empirical_chain_measure(const Forest& f, double T) {
    std::vector<WeightedChain> out;
    if (f.n_ancestors() == 0) return out;
    if (f.horizon() < T) throw ConfigError("empirical_chain_measure: forest horizon below T");
    const double w = 1.0 / f.n_ancestors();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto& n = f.node(static_cast<std::int32_t>(i));
        if (n.status != NodeStatus::kept || n.birth_time > T) continue;
        out.push_back({w, birth_chain(f, static_cast<std::int32_t>(i))});
    }
    return out;
}

std::vector<double> kernel_quantile_edges(const PdeSolution& sol, const InteractionRule& C, double t,
                                          std::size_t bins) {
    if (bins < 2) throw ConfigError("kernel_quantile_edges: need at least two bins");
    const double end = t + sol.initial_support_end();
    const auto n = static_cast<std::size_t>(std::ceil(end / sol.dt()));
    std::vector<double> fine(n + 1);
    for (std::size_t j = 0; j <= n; ++j) fine[j] = std::min(end, sol.dt() * static_cast<double>(j));
    const auto m = kernel_bin_masses(sol, C, t, fine);
    std::vector<double> cum(m.size() + 1, 0.0);
    for (std::size_t j = 0; j < m.size(); ++j) cum[j + 1] = cum[j] + m[j];
    const double total = cum.back();
    if (!(total > 0.0)) throw DomainError("kernel_quantile_edges: kernel has no mass");

    std::vector<double> edges{0.0};
    std::size_t j = 0;
    for (std::size_t k = 1; k < bins; ++k) {
        const double target = total * static_cast<double>(k) / static_cast<double>(bins);
        while (j + 1 < cum.size() && cum[j + 1] < target) ++j;
        const double span = cum[j + 1] - cum[j];
        const double frac = span > 0.0 ? (target - cum[j]) / span : 0.0;
        const double e = fine[j] + frac * (fine[j + 1] - fine[j]);
        if (e > edges.back()) edges.push_back(e);
    }
    edges.push_back(end);
    return edges;
}

DelayFit delay_goodness_of_fit(const Forest& f, const PdeSolution& sol, const InteractionRule& C, double lo,
                               double hi, std::size_t bins) {
    if (!(lo > 0.0 && hi >= lo)) throw ConfigError("delay_goodness_of_fit: need 0 < lo ≤ hi");
    DelayFit fit;
    fit.edges = kernel_quantile_edges(sol, C, 0.5 * (lo + hi), bins);
    const std::size_t nb = fit.edges.size() - 1;
    fit.observed.assign(nb, 0.0);
    fit.expected.assign(nb, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto& n = f.node(static_cast<std::int32_t>(i));
        if (n.status != NodeStatus::kept || n.parent < 0 || n.birth_time < lo || n.birth_time > hi) continue;
        const double delay = n.birth_time - f.node(n.parent).birth_time;
        const auto it = std::upper_bound(fit.edges.begin(), fit.edges.end(), delay);
        const auto bin = std::min<std::size_t>(nb - 1, static_cast<std::size_t>(std::max<std::ptrdiff_t>(
                                                             0, it - fit.edges.begin() - 1)));
        fit.observed[bin] += 1.0;
        auto m = kernel_bin_masses(sol, C, n.birth_time, fit.edges);
        double tot = 0.0;
        for (double x : m) tot += x;
        for (std::size_t k = 0; k < nb; ++k) fit.expected[k] += m[k] / tot;
        ++fit.nodes;
    }
    if (fit.nodes == 0) throw DomainError("delay_goodness_of_fit: no kept nodes born in the window");
    fit.test = chi_square_test(fit.observed, fit.expected);
    return fit;
}

void write_chains_csv(std::ostream& os, std::span<const WeightedChain> chains) {
    os << "weight,k,times\n";
    char buf[64];
    for (const auto& c : chains) {
        std::snprintf(buf, sizeof buf, "%.17g,%zu", c.weight, c.times.size());
        os << buf;
        for (double t : c.times) {
            std::snprintf(buf, sizeof buf, ",%.17g", t);
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace cmj
