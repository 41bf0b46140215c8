#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace cmj {

// A finite measure on ages [0, ∞).
class MeasureLike {
public:
    virtual ~MeasureLike() = default;
    virtual double total_mass() const = 0;
    // μ([0, x))
    virtual double cumulative(double x) const = 0;
    virtual double integrate(const std::function<double(double)>& phi) const = 0;
    // every atom / the density vanishes beyond this age
    virtual double support_end() const = 0;
};

// (1/N) Σ δ_{t − σ} over birth times σ ≤ t.
class EmpiricalAgeMeasure final : public MeasureLike {
public:
    // Uses the first `count` entries of a sorted vector shared with the
    // simulator that produced it.
    EmpiricalAgeMeasure(double t, std::shared_ptr<const std::vector<double>> births, std::size_t count,
                        int normalizer);
    EmpiricalAgeMeasure(double t, std::vector<double> births, int normalizer);

    double reference_time() const { return t_; }
    std::size_t size() const { return count_; }
    int normalizer() const { return n_; }
    std::span<const double> birth_times() const { return {births_->data(), count_}; }

    double total_mass() const override { return static_cast<double>(count_) / n_; }
    double cumulative(double x) const override;
    double integrate(const std::function<double(double)>& phi) const override;
    double support_end() const override;

private:
    double t_;
    std::shared_ptr<const std::vector<double>> births_;
    std::size_t count_;
    int n_;
};

enum class Interpolation { linear, step };

// Density tabulated on origin + kΔa. `linear` interpolates between nodes and
// integrates by the trapezoid rule; `step` is constant on [x_k, x_k + Δa)
// (histograms).
class GriddedDensity final : public MeasureLike {
public:
    GriddedDensity() = default;
    GriddedDensity(double step, std::vector<double> values, Interpolation mode = Interpolation::linear,
                   double origin = 0.0);

    // masses of [0,Δ), [Δ,2Δ), ... of mu up to `end`, as a step density
    static GriddedDensity histogram(const MeasureLike& mu, double step, double end);

    double operator()(double a) const;
    double step() const { return step_; }
    double origin() const { return origin_; }
    Interpolation mode() const { return mode_; }
    const std::vector<double>& values() const { return values_; }
    double node(std::size_t k) const { return origin_ + step_ * static_cast<double>(k); }

    double total_mass() const override { return cum_.empty() ? 0.0 : cum_.back(); }
    double cumulative(double x) const override;
    double integrate(const std::function<double(double)>& phi) const override;
    double support_end() const override;

private:
    double step_ = 1.0;
    double origin_ = 0.0;
    Interpolation mode_ = Interpolation::linear;
    std::vector<double> values_;
    std::vector<double> cum_;  // mass left of node k
};

double integrate(const MeasureLike& mu, const std::function<double(double)>& phi);

// Certified upper bound on the Prohorov distance: returns d̂ ≥ d_Pr(μ,ν),
// d̂ ≤ d_Pr(μ,ν) + cell. Measures need not have equal mass.
double prohorov_upper(const MeasureLike& mu, const MeasureLike& nu, double cell);

// Same on two cell-mass vectors (cell k = [k·cell, (k+1)·cell)).
double prohorov_upper_cells(std::span<const double> mu, std::span<const double> nu, double cell);

// Largest mass of mu that can be moved onto nu with every unit travelling at
// most `reach` cells.
double max_flow_within_reach(std::span<const double> mu, std::span<const double> nu, std::size_t reach);

// (age, weight) rows; weights sum to the total mass.
void write_measure_csv(std::ostream& os, const EmpiricalAgeMeasure& mu);
void write_measure_csv(std::ostream& os, const GriddedDensity& mu);

}  // namespace cmj
