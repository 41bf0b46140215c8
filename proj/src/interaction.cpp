#include "cmj/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cmj/errors.hpp"

namespace cmj {

InteractionRule::InteractionRule(std::string name, Evaluator f, double lipschitz)
    : name_(std::move(name)), f_(std::move(f)), lipschitz_(lipschitz) {
    if (!f_) throw ConfigError("interaction rule: missing evaluator");
    if (!(lipschitz_ >= 0.0)) throw ConfigError("interaction rule: Lipschitz constant must be ≥ 0");
}

InteractionRule InteractionRule::constant(double c) {
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("constant rule: c must lie in [0,1]");
    InteractionRule r("constant", [c](double, const MeasureLike&) { return c; }, 0.0);
    r.constant_ = true;
    return r;
}

InteractionRule InteractionRule::immunity(double K) {
    if (!(K > 0.0) || !std::isfinite(K)) throw ConfigError("immunity rule: K must be positive");
    return InteractionRule(
        "immunity",
        [K](double, const MeasureLike& mu) { return std::clamp(1.0 - mu.total_mass() / K, 0.0, 1.0); }, 1.0 / K);
}

InteractionRule InteractionRule::lockdown(double K, double kappa, double theta) {
    if (!(K > 0.0) || !std::isfinite(K)) throw ConfigError("lockdown rule: K must be positive");
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("lockdown rule: kappa must lie in [0,1]");
    if (!(theta >= 0.0) || !std::isfinite(theta)) throw ConfigError("lockdown rule: theta must be ≥ 0");
    return InteractionRule(
        "lockdown",
        [=](double, const MeasureLike& mu) {
            const double m = mu.total_mass();
            const double base = std::clamp(1.0 - m / K, 0.0, 1.0);
            return base * (m > theta * K ? 1.0 - kappa : 1.0);
        },
        std::numeric_limits<double>::infinity());
}

InteractionRule InteractionRule::with_lipschitz(double L) const {
    if (!(L >= lipschitz_))
        throw ConfigError("rule '" + name_ + "': declared Lipschitz constant " + std::to_string(L) +
                          " is below the rule's own " + std::to_string(lipschitz_));
    InteractionRule r = *this;
    r.lipschitz_ = L;
    return r;
}

double InteractionRule::operator()(double t, const MeasureLike& mu) const {
    const double c = f_(t, mu);
    if (!(c >= 0.0 && c <= 1.0))
        throw ContractViolation("interaction rule '" + name_ + "' returned " + std::to_string(c) + " at t=" +
                                std::to_string(t));
    return c;
}

}  // namespace cmj
