#include "cmj/nonlinear_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "cmj/engine.hpp"
#include "cmj/errors.hpp"
#include "cmj/parallel.hpp"

namespace cmj {

namespace {

void check_horizon(const PdeSolution& sol, double T) {
    if (!(T > 0.0) || T > sol.horizon() * (1.0 + 1e-12))
        throw ConfigError("non-linear tree: horizon " + std::to_string(T) + " beyond the solved range " +
                          std::to_string(sol.horizon()));
}

template <class Observe>
EngineOutput run_tree(const BirthProcessSpec& spec, const InitialAgeDensity& g, const InteractionRule& C,
                      const PdeSolution& sol, double T, NoiseKey key, bool record, Observe&& observe) {
    EngineOptions eo{1, T, 50'000'000, record};
    return run_cmj(
        spec, g, key, eo, [&](double t, const BirthView&) { return C(t, sol.slice(t)); },
        std::forward<Observe>(observe));
}

// per-block partial sums, reduced in block order so the result does not
// depend on the thread count
struct BlockSums {
    std::vector<std::vector<double>> sum, sumsq;
    std::vector<double> size_sum, size_sumsq;
};

constexpr std::size_t kBlock = 256;

}  // namespace

Forest simulate_nonlinear_tree(const BirthProcessSpec& spec, const InitialAgeDensity& g, const InteractionRule& C,
                               const PdeSolution& sol, double T, NoiseKey key) {
    check_horizon(sol, T);
    return run_tree(spec, g, C, sol, T, key, true, NoObserver{}).forest;
}

std::vector<AgeDensityEstimate> estimate_mean_age_density(const BirthProcessSpec& spec, const InitialAgeDensity& g,
                                                          const InteractionRule& C, const PdeSolution& sol,
                                                          std::size_t M, double h, std::span<const double> times,
                                                          std::uint64_t seed, unsigned threads) {
    if (M < 1) throw ConfigError("estimate_mean_age_density: need M ≥ 1");
    if (!(h > 0.0)) throw ConfigError("estimate_mean_age_density: bin width must be positive");
    if (times.empty()) throw ConfigError("estimate_mean_age_density: no times requested");
    double t_max = 0.0;
    for (double t : times) {
        if (!(t >= 0.0)) throw ConfigError("estimate_mean_age_density: negative time");
        t_max = std::max(t_max, t);
    }
    const double T = std::max(t_max, sol.dt());
    check_horizon(sol, T);

    const std::size_t nt = times.size();
    std::vector<std::size_t> nbins(nt);
    for (std::size_t q = 0; q < nt; ++q)
        nbins[q] = static_cast<std::size_t>(std::ceil((times[q] + g.support_end()) / h)) + 1;

    const std::size_t n_blocks = (M + kBlock - 1) / kBlock;
    std::vector<BlockSums> blocks(n_blocks);
    parallel_for(n_blocks, threads, [&](std::size_t blk) {
        BlockSums& bs = blocks[blk];
        bs.sum.assign(nt, {});
        bs.sumsq.assign(nt, {});
        bs.size_sum.assign(nt, 0.0);
        bs.size_sumsq.assign(nt, 0.0);
        for (std::size_t q = 0; q < nt; ++q) {
            bs.sum[q].assign(nbins[q], 0.0);
            bs.sumsq[q].assign(nbins[q], 0.0);
        }
        std::vector<std::uint32_t> counts;
        std::vector<std::size_t> touched;
        const std::size_t end = std::min(M, (blk + 1) * kBlock);
        for (std::size_t m = blk * kBlock; m < end; ++m) {
            const auto out = run_tree(spec, g, C, sol, T, NoiseKey::replicate(seed, m), false, NoObserver{});
            const auto& births = *out.kept_births;
            for (std::size_t q = 0; q < nt; ++q) {
                const double t = times[q];
                counts.assign(nbins[q], 0);
                touched.clear();
                double n_alive = 0.0;
                for (double s : births) {
                    if (s > t) break;
                    const auto bin = std::min(nbins[q] - 1, static_cast<std::size_t>((t - s) / h));
                    if (counts[bin]++ == 0) touched.push_back(bin);
                    n_alive += 1.0;
                }
                for (auto bin : touched) {
                    const double c = counts[bin];
                    bs.sum[q][bin] += c;
                    bs.sumsq[q][bin] += c * c;
                }
                bs.size_sum[q] += n_alive;
                bs.size_sumsq[q] += n_alive * n_alive;
            }
        }
    });

    std::vector<AgeDensityEstimate> res(nt);
    const double Md = static_cast<double>(M);
    for (std::size_t q = 0; q < nt; ++q) {
        std::vector<double> sum(nbins[q], 0.0), sumsq(nbins[q], 0.0);
        double ss = 0.0, ss2 = 0.0;
        for (const auto& bs : blocks) {
            for (std::size_t k = 0; k < nbins[q]; ++k) {
                sum[k] += bs.sum[q][k];
                sumsq[k] += bs.sumsq[q][k];
            }
            ss += bs.size_sum[q];
            ss2 += bs.size_sumsq[q];
        }
        std::vector<double> dens(nbins[q]), se(nbins[q]);
        for (std::size_t k = 0; k < nbins[q]; ++k) {
            const double mean = sum[k] / Md;
            const double var = M > 1 ? std::max(0.0, (sumsq[k] - Md * mean * mean) / (Md - 1.0)) : 0.0;
            dens[k] = mean / h;
            se[k] = std::sqrt(var / Md) / h;
        }
        AgeDensityEstimate& e = res[q];
        e.time = times[q];
        e.density = GriddedDensity(h, std::move(dens), Interpolation::step);
        e.standard_error = std::move(se);
        e.replicates = M;
        e.mean_size = ss / Md;
        const double var = M > 1 ? std::max(0.0, (ss2 - Md * e.mean_size * e.mean_size) / (Md - 1.0)) : 0.0;
        e.size_se = std::sqrt(var / Md);
    }
    return res;
}

DensityComparison compare_with_solution(const AgeDensityEstimate& est, const PdeSolution& sol) {
    DensityComparison c;
    const auto slice = sol.slice(est.time);
    const auto& v = est.density.values();
    const double h = est.density.step();
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double lo = h * static_cast<double>(k), hi = lo + h;
        const double mid = eval_u(sol, est.time, 0.5 * (lo + hi));
        const double avg = (slice.cumulative(hi) - slice.cumulative(lo)) / h;
        c.l1 += h * std::abs(v[k] - mid);
        c.se_sum += h * est.standard_error[k];
        c.bin_term += h * std::abs(avg - mid);
    }
    return c;
}

void write_density_csv(std::ostream& os, const AgeDensityEstimate& est) {
    os << "age_lo,age_hi,density,se\n";
    char buf[128];
    const auto& v = est.density.values();
    const double h = est.density.step();
    for (std::size_t k = 0; k < v.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.17g,%.17g\n", h * static_cast<double>(k),
                      h * static_cast<double>(k + 1), v[k], est.standard_error[k]);
        os << buf;
    }
}

}  // namespace cmj
