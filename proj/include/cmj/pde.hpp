#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "cmj/interaction.hpp"
#include "cmj/measures.hpp"
#include "cmj/point_process.hpp"

namespace cmj {

class PdeSolution;

// u_t viewed as a measure on ages, evaluated lazily from the boundary trace.
// Mass and cumulative masses are O(1).
class SolutionSlice final : public MeasureLike {
public:
    SolutionSlice(const PdeSolution& sol, double t) : sol_(&sol), t_(t) {}

    double time() const { return t_; }
    double total_mass() const override;
    double cumulative(double x) const override;
    double integrate(const std::function<double(double)>& phi) const override;
    double support_end() const override;

private:
    const PdeSolution* sol_;
    double t_;
};

// Boundary trace b(t) = u_t(0) on t_j = jΔt, together with the tabulated
// g and τ it was computed from. u_t(a) = b(t - a) for a < t, g(a - t) else.
class PdeSolution {
public:
    double dt() const { return dt_; }
    double horizon() const { return horizon_; }
    std::size_t steps() const { return b_.size() - 1; }
    double time(std::size_t j) const { return dt_ * static_cast<double>(j); }

    const std::vector<double>& boundary() const { return b_; }
    // C(t_j, u_{t_j})
    const std::vector<double>& interaction() const { return c_; }
    // G(t_j) = ∫ g(a) τ(a + t_j) da
    const std::vector<double>& tail_term() const { return tail_; }
    const std::vector<double>& initial_table() const { return g_; }
    const std::vector<double>& rate_table() const { return tau_; }

    double boundary_at(double t) const;
    double interaction_at(double t) const;
    // ∫_0^t b
    double boundary_integral(double t) const;
    // inverse of boundary_integral on [0, horizon]
    double boundary_integral_inverse(double m) const;

    double initial_density(double a) const;
    double initial_cumulative(double a) const;
    double initial_cumulative_inverse(double m) const;
    double initial_mass() const { return gcum_.back(); }
    double initial_support_end() const { return dt_ * static_cast<double>(g_.size() - 1); }

    double rate(double a) const;
    double rate_sup() const { return rate_sup_; }
    double age_end() const { return dt_ * static_cast<double>(tau_.size() - 1); }

    double residual() const { return residual_; }

    SolutionSlice slice(double t) const { return SolutionSlice(*this, t); }
    // u_t on the age grid {0, Δt, ...} up to t + A_max
    GriddedDensity snapshot(double t) const;

    // t, b, mass, C
    void write_csv(std::ostream& os) const;
    void write_binary(std::ostream& os) const;
    static PdeSolution read_binary(std::istream& is);

    // every stored table bit-identical
    bool same_tables(const PdeSolution& other) const;

private:
    friend PdeSolution solve_nonlinear(const BirthProcessSpec&, const InitialAgeDensity&, const InteractionRule&,
                                       double, double);
    friend double fixed_point_residual(const PdeSolution&, const InteractionRule&);

    void build_cumulatives();
    void extend_cumulative(std::size_t j);

    double dt_ = 0.0, horizon_ = 0.0, rate_sup_ = 0.0, residual_ = 0.0;
    std::vector<double> b_, bcum_, c_, tail_;
    std::vector<double> g_, gcum_, tau_;
};

PdeSolution solve_nonlinear(const BirthProcessSpec& spec, const InitialAgeDensity& g, const InteractionRule& C,
                            double horizon, double dt);

double eval_u(const PdeSolution& sol, double t, double a);
double mass(const PdeSolution& sol, double t);

// sup_j |K(b)_j - b_j| with K re-applied from scratch
double fixed_point_residual(const PdeSolution& sol, const InteractionRule& C);

// max_j [mass(t_j) / (mass(0) e^{‖τ‖ t_j})] - 1; ≤ 0 means the bound holds
double gronwall_margin(const PdeSolution& sol);

}  // namespace cmj
