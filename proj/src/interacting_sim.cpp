#include "cmj/interacting_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "cmj/engine.hpp"
#include "cmj/errors.hpp"

namespace cmj {

InteractingResult simulate_interacting(int N, const BirthProcessSpec& spec, const InitialAgeDensity& g,
                                       const InteractionRule& C, double T, NoiseKey key, const SimOptions& opt) {
    EngineOptions eo{N, T, opt.event_cap, opt.record_forest};
    auto out = run_cmj(spec, g, key, eo, [&](double t, const BirthView& births) {
        return C(t, EmpiricalAgeMeasure(t, births, births->size(), N));
    });
    InteractingResult r;
    r.forest = std::move(out.forest);
    r.path = AgePath{N, T, std::move(out.kept_births)};
    r.events = out.events;
    return r;
}

EmpiricalAgeMeasure age_measure_at(const AgePath& path, double t) {
    if (!(t >= 0.0) || t > path.horizon) throw DomainError("age_measure_at: t outside [0, T]");
    const auto& b = *path.kept_births;
    const auto count = static_cast<std::size_t>(std::upper_bound(b.begin(), b.end(), t) - b.begin());
    return EmpiricalAgeMeasure(t, path.kept_births, count, path.n_ancestors);
}

void write_path_csv(std::ostream& os, const AgePath& path, double step, std::span<const double> quantiles) {
    os << "t,mass";
    char buf[64];
    for (double q : quantiles) {
        std::snprintf(buf, sizeof buf, ",age_q%g", q);
        os << buf;
    }
    os << '\n';
    const auto n = static_cast<std::size_t>(std::floor(path.horizon / step + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = std::min(path.horizon, step * static_cast<double>(k));
        const auto mu = age_measure_at(path, t);
        std::snprintf(buf, sizeof buf, "%.10g,%.17g", t, mu.total_mass());
        os << buf;
        const auto births = mu.birth_times();
        for (double q : quantiles) {
            // ages t - σ are decreasing in the sorted birth order
            double age = 0.0;
            if (!births.empty()) {
                const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(births.size())));
                const std::size_t idx = births.size() - std::clamp<std::size_t>(rank, 1, births.size());
                age = t - births[idx];
            }
            std::snprintf(buf, sizeof buf, ",%.17g", age);
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace cmj
