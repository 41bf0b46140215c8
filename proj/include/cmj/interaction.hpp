#pragma once

#include <functional>
#include <string>

#include "cmj/measures.hpp"

namespace cmj {

// C(t, μ) ∈ [0,1] with a declared Lipschitz constant in μ (Prohorov).
// Discontinuous rules declare L = ∞.
class InteractionRule {
public:
    using Evaluator = std::function<double(double, const MeasureLike&)>;

    InteractionRule(std::string name, Evaluator f, double lipschitz);

    static InteractionRule constant(double c);
    // 1 - |μ|/K, clipped
    static InteractionRule immunity(double K);
    // (1 - |μ|/K)(1 - κ·1{|μ| > θK}), clipped
    static InteractionRule lockdown(double K, double kappa, double theta);

    // throws ContractViolation if the evaluator leaves [0,1]
    double operator()(double t, const MeasureLike& mu) const;

    // same evaluator, declared constant replaced (must not undercut the current one)
    InteractionRule with_lipschitz(double L) const;

    double lipschitz() const { return lipschitz_; }
    const std::string& name() const { return name_; }
    bool is_constant() const { return constant_; }

private:
    std::string name_;
    Evaluator f_;
    double lipschitz_;
    bool constant_ = false;
};

}  // namespace cmj
