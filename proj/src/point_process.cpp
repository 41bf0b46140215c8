#include "cmj/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <string>

#include <boost/math/distributions/gamma.hpp>

#include "cmj/errors.hpp"

namespace cmj {

namespace {

double renewal_density(const RenewalProcess& r, double a) {
    if (a < 0.0) return 0.0;
    double sum = 0.0;
    const std::size_t n_max = std::min<std::size_t>(r.max_births, 1'000'000);
    for (std::size_t n = 1; n <= n_max; ++n) {
        const double shape = static_cast<double>(n) * r.shape;
        const double term = boost::math::pdf(boost::math::gamma_distribution<double>(shape, r.scale), a);
        sum += term;
        if ((shape - 1.0) * r.scale > a && term <= 1e-16 * sum) break;
    }
    return sum;
}

void require_finite_nonneg(double x, const char* what) {
    if (!std::isfinite(x) || x < 0.0) throw ConfigError(std::string(what) + " must be finite and nonnegative");
}

}  // namespace

BirthProcessSpec BirthProcessSpec::poisson(RateFunction tau, double sup_bound) {
    if (!tau) throw ConfigError("poisson rate: missing τ");
    require_finite_nonneg(sup_bound, "sup_bound");
    if (sup_bound == 0.0) {
        // a zero bound is only honest for τ ≡ 0
        for (int i = 0; i <= 10000; ++i)
            if (tau(0.01 * i) > 0.0) throw ConfigError("sup_bound = 0 but τ is not identically zero");
    }
    return BirthProcessSpec(PoissonIntensity{std::move(tau)}, sup_bound);
}

BirthProcessSpec BirthProcessSpec::constant_rate(double lambda) {
    require_finite_nonneg(lambda, "rate");
    return poisson([lambda](double a) { return a >= 0.0 ? lambda : 0.0; }, lambda);
}

BirthProcessSpec BirthProcessSpec::window_rate(double lambda, double from, double to) {
    require_finite_nonneg(lambda, "rate");
    require_finite_nonneg(from, "window start");
    if (!(to > from) || !std::isfinite(to)) throw ConfigError("window end must exceed window start");
    return poisson([=](double a) { return (a >= from && a < to) ? lambda : 0.0; }, lambda);
}

BirthProcessSpec BirthProcessSpec::exp_decay_rate(double lambda, double decay) {
    require_finite_nonneg(lambda, "rate");
    require_finite_nonneg(decay, "decay");
    return poisson([=](double a) { return a >= 0.0 ? lambda * std::exp(-decay * a) : 0.0; }, lambda);
}

BirthProcessSpec BirthProcessSpec::tabulated_rate(std::vector<double> ages, std::vector<double> values) {
    PiecewiseLinear f(std::move(ages), std::move(values));
    if (f.front() < 0.0) throw ConfigError("tabulated rate: negative age");
    const double sup = f.sup();
    return poisson([f = std::move(f)](double a) { return f(a); }, sup);
}

BirthProcessSpec BirthProcessSpec::renewal(double shape, double scale, std::size_t max_births) {
    if (!(shape >= 1.0) || !std::isfinite(shape))
        throw ConfigError("renewal shape must be ≥ 1 (shape < 1 has unbounded intensity at age 0)");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("renewal scale must be positive");
    if (max_births == 0) return poisson([](double) { return 0.0; }, 0.0);
    RenewalProcess r{shape, scale, max_births};
    // numeric sup over a range that covers the transient; the stationary
    // level is 1/mean
    const double mean = shape * scale;
    const double range = mean * (static_cast<double>(std::min<std::size_t>(max_births, 50)) + 5.0);
    double sup = 0.0;
    for (int i = 0; i <= 4000; ++i) sup = std::max(sup, renewal_density(r, range * i / 4000.0));
    sup = std::max(sup, 1.0 / mean) * 1.05;
    return BirthProcessSpec(r, sup);
}

BirthProcessSpec BirthProcessSpec::finite_atoms(std::vector<double> ages) {
    for (std::size_t i = 0; i < ages.size(); ++i) {
        if (!std::isfinite(ages[i]) || ages[i] < 0.0) throw ConfigError("finite atoms: ages must be finite and ≥ 0");
        if (i > 0 && !(ages[i] > ages[i - 1])) throw ConfigError("finite atoms: ages must be strictly increasing");
    }
    return BirthProcessSpec(FiniteAtoms{std::move(ages)}, std::numeric_limits<double>::infinity());
}

double BirthProcessSpec::intensity(double a) const {
    return std::visit(
        [a](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, PoissonIntensity>) {
                return k.tau(a);
            } else if constexpr (std::is_same_v<K, RenewalProcess>) {
                return renewal_density(k, a);
            } else {
                throw ConfigError("finite atom process has no intensity density");
            }
        },
        kind_);
}

InitialAgeDensity InitialAgeDensity::exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("initial age rate must be positive");
    return InitialAgeDensity([rate](double a) { return a >= 0.0 ? rate * std::exp(-rate * a) : 0.0; },
                             [rate](Rng& rng) { return rng.exponential(rate); }, std::log(1e8) / rate);
}

InitialAgeDensity InitialAgeDensity::uniform(double width) {
    if (!(width > 0.0) || !std::isfinite(width)) throw ConfigError("initial age width must be positive");
    return InitialAgeDensity([width](double a) { return (a >= 0.0 && a < width) ? 1.0 / width : 0.0; },
                             [width](Rng& rng) { return width * rng.uniform(); }, width);
}

InitialAgeDensity InitialAgeDensity::tabulated(std::vector<double> ages, std::vector<double> values) {
    PiecewiseLinear f(std::move(ages), std::move(values));
    if (f.front() < 0.0) throw ConfigError("tabulated initial density: negative age");
    if (!(f.total() > 0.0)) throw ConfigError("tabulated initial density: zero mass");
    auto p = std::make_shared<const PiecewiseLinear>(f.scaled(1.0 / f.total()));
    const double end = p->back();
    return InitialAgeDensity([p](double a) { return (*p)(a); },
                             [p](Rng& rng) { return p->inverse_cumulative(rng.uniform()); }, end);
}

InitialAgeDensity InitialAgeDensity::custom(Density density, Sampler sampler, double support_end) {
    if (!density || !sampler) throw ConfigError("custom initial density: missing callback");
    if (!(support_end > 0.0) || !std::isfinite(support_end)) throw ConfigError("custom initial density: bad support");
    return InitialAgeDensity(std::move(density), std::move(sampler), support_end);
}

double InitialAgeDensity::sample(Rng& rng) const {
    const double a = sampler_(rng);
    if (!(a >= 0.0) || !std::isfinite(a)) throw ContractViolation("initial age sampler returned " + std::to_string(a));
    return a;
}

void make_strictly_increasing(std::vector<double>& atoms) {
    for (std::size_t k = 1; k < atoms.size(); ++k)
        if (!(atoms[k] > atoms[k - 1])) atoms[k] = std::nextafter(atoms[k - 1], std::numeric_limits<double>::infinity());
}

std::vector<double> sample_atoms(const BirthProcessSpec& spec, double horizon, Rng& rng) {
    if (!std::isfinite(horizon)) throw ConfigError("sample_atoms: nonfinite window");
    std::vector<double> out;
    if (horizon <= 0.0) return out;
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, PoissonIntensity>) {
                const double bound = spec.sup_bound();
                if (bound == 0.0) return;
                double t = 0.0;
                for (;;) {
                    t += rng.exponential(bound);
                    if (t >= horizon) break;
                    const double r = k.tau(t);
                    if (!(r >= 0.0) || r > bound * (1.0 + 1e-12))
                        throw ContractViolation("τ(" + std::to_string(t) + ") = " + std::to_string(r) +
                                                " outside [0, sup_bound]");
                    if (rng.uniform() * bound <= r) {
                        out.push_back(t);
                        if (out.size() > kAtomCap) throw ResourceError("atom cap exceeded for one individual");
                    }
                }
            } else if constexpr (std::is_same_v<K, RenewalProcess>) {
                std::gamma_distribution<double> gap(k.shape, k.scale);
                double t = 0.0;
                for (std::size_t n = 0; n < k.max_births; ++n) {
                    t += gap(rng);
                    if (t >= horizon) break;
                    out.push_back(t);
                    if (out.size() > kAtomCap) throw ResourceError("atom cap exceeded for one individual");
                }
            } else {
                for (double a : k.ages) {
                    if (a >= horizon) break;
                    out.push_back(a);
                }
            }
        },
        spec.kind());
    make_strictly_increasing(out);
    return out;
}

std::vector<double> censor_initial(std::span<const double> atoms, double age, double horizon) {
    std::vector<double> out;
    for (double a : atoms) {
        if (a < age) continue;
        const double s = a - age;
        if (s >= horizon) break;
        out.push_back(s);
    }
    make_strictly_increasing(out);
    return out;
}

InitialPair initial_pair(const InitialAgeDensity& g, const BirthProcessSpec& spec, double horizon, Rng& rng) {
    return initial_pair(g, spec, horizon, rng, rng);
}

InitialPair initial_pair(const InitialAgeDensity& g, const BirthProcessSpec& spec, double horizon, Rng& age_rng,
                         Rng& atom_rng) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("initial_pair: horizon must be positive");
    const double age = g.sample(age_rng);
    auto atoms = sample_atoms(spec, age + horizon, atom_rng);
    return InitialPair{-age, censor_initial(atoms, age, horizon)};
}

}  // namespace cmj
