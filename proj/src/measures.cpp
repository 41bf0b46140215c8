#include "cmj/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "cmj/errors.hpp"

namespace cmj {

EmpiricalAgeMeasure::EmpiricalAgeMeasure(double t, std::shared_ptr<const std::vector<double>> births,
                                         std::size_t count, int normalizer)
    : t_(t), births_(std::move(births)), count_(count), n_(normalizer) {
    if (n_ < 1) throw ConfigError("empirical measure: normalizer must be ≥ 1");
    if (!births_ || count_ > births_->size()) throw ContractViolation("empirical measure: bad birth view");
    if (count_ > 0 && (*births_)[count_ - 1] > t_) throw ContractViolation("empirical measure: atom born after t");
}

EmpiricalAgeMeasure::EmpiricalAgeMeasure(double t, std::vector<double> births, int normalizer)
    : t_(t), count_(births.size()), n_(normalizer) {
    std::sort(births.begin(), births.end());
    births_ = std::make_shared<const std::vector<double>>(std::move(births));
    if (n_ < 1) throw ConfigError("empirical measure: normalizer must be ≥ 1");
    if (count_ > 0 && births_->back() > t_) throw ContractViolation("empirical measure: atom born after t");
}

double EmpiricalAgeMeasure::cumulative(double x) const {
    if (x <= 0.0) return 0.0;
    // ages t - σ < x  <=>  σ > t - x
    auto b = births_->begin();
    auto idx = std::upper_bound(b, b + static_cast<std::ptrdiff_t>(count_), t_ - x) - b;
    return static_cast<double>(count_ - static_cast<std::size_t>(idx)) / n_;
}

double EmpiricalAgeMeasure::integrate(const std::function<double(double)>& phi) const {
    double s = 0.0;
    for (std::size_t i = 0; i < count_; ++i) s += phi(t_ - (*births_)[i]);
    if (!std::isfinite(s)) throw ContractViolation("integrate: nonfinite test function value");
    return s / n_;
}

double EmpiricalAgeMeasure::support_end() const { return count_ == 0 ? 0.0 : t_ - births_->front(); }

GriddedDensity::GriddedDensity(double step, std::vector<double> values, Interpolation mode, double origin)
    : step_(step), origin_(origin), mode_(mode), values_(std::move(values)) {
    if (!(step_ > 0.0) || !std::isfinite(step_)) throw ConfigError("gridded density: step must be positive");
    if (!(origin_ >= 0.0)) throw ConfigError("gridded density: origin must be ≥ 0");
    for (double v : values_)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("gridded density: values must be finite and ≥ 0");
    const std::size_t n = values_.size();
    if (mode_ == Interpolation::linear) {
        cum_.assign(n, 0.0);
        for (std::size_t k = 1; k < n; ++k) cum_[k] = cum_[k - 1] + 0.5 * step_ * (values_[k - 1] + values_[k]);
    } else {
        cum_.assign(n + 1, 0.0);
        for (std::size_t k = 0; k < n; ++k) cum_[k + 1] = cum_[k] + step_ * values_[k];
    }
}

GriddedDensity GriddedDensity::histogram(const MeasureLike& mu, double step, double end) {
    if (!(step > 0.0)) throw ConfigError("histogram: step must be positive");
    const auto n = static_cast<std::size_t>(std::ceil(end / step - 1e-9)) + 1;
    std::vector<double> v(n);
    double left = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double right = (k + 1 == n) ? mu.total_mass() : mu.cumulative(step * static_cast<double>(k + 1));
        v[k] = std::max(0.0, right - left) / step;
        left = right;
    }
    return GriddedDensity(step, std::move(v), Interpolation::step);
}

double GriddedDensity::operator()(double a) const {
    if (values_.empty() || a < origin_) return 0.0;
    const double pos = (a - origin_) / step_;
    const auto k = static_cast<std::size_t>(pos);
    if (mode_ == Interpolation::step) return k < values_.size() ? values_[k] : 0.0;
    if (k + 1 >= values_.size()) return (k + 1 == values_.size() && pos == static_cast<double>(k)) ? values_[k] : 0.0;
    const double w = pos - static_cast<double>(k);
    return values_[k] + w * (values_[k + 1] - values_[k]);
}

double GriddedDensity::cumulative(double x) const {
    if (values_.empty() || x <= origin_) return 0.0;
    if (x >= support_end()) return total_mass();
    const double pos = (x - origin_) / step_;
    const auto k = std::min(static_cast<std::size_t>(pos), values_.size() - 1);
    const double s = x - node(k);
    if (mode_ == Interpolation::step) return cum_[k] + values_[k] * s;
    const double slope = (values_[k + 1] - values_[k]) / step_;
    return cum_[k] + values_[k] * s + 0.5 * slope * s * s;
}

double GriddedDensity::integrate(const std::function<double(double)>& phi) const {
    const std::size_t n = values_.size();
    double s = 0.0;
    if (mode_ == Interpolation::linear) {
        for (std::size_t k = 0; k < n; ++k) {
            const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
            if (values_[k] != 0.0) s += w * values_[k] * phi(node(k));
        }
    } else {
        for (std::size_t k = 0; k < n; ++k)
            if (values_[k] != 0.0) s += values_[k] * phi(node(k) + 0.5 * step_);
    }
    if (!std::isfinite(s)) throw ContractViolation("integrate: nonfinite test function value");
    return s * step_;
}

double GriddedDensity::support_end() const {
    if (values_.empty()) return origin_;
    const auto n = static_cast<double>(values_.size());
    return origin_ + step_ * (mode_ == Interpolation::linear ? n - 1.0 : n);
}

double integrate(const MeasureLike& mu, const std::function<double(double)>& phi) { return mu.integrate(phi); }

double max_flow_within_reach(std::span<const double> mu, std::span<const double> nu, std::size_t reach) {
    // Demand cells left to right, each served by the leftmost supply still
    // available in its window. Windows slide monotonically, so this greedy
    // order is optimal and every supply cell is exhausted at most once.
    const std::size_t n = std::min(mu.size(), nu.size());
    std::vector<double> supply(nu.begin(), nu.begin() + static_cast<std::ptrdiff_t>(n));
    std::size_t p = 0;
    double flow = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double need = mu[i];
        if (need <= 0.0) continue;
        const std::size_t lo = i > reach ? i - reach : 0;
        const std::size_t hi = std::min(n - 1, i + reach);
        p = std::max(p, lo);
        while (p <= hi && supply[p] <= 0.0) ++p;
        for (std::size_t q = p; q <= hi && need > 0.0; ++q) {
            const double take = std::min(need, supply[q]);
            supply[q] -= take;
            need -= take;
            flow += take;
        }
        while (p <= hi && supply[p] <= 0.0) ++p;
    }
    return flow;
}

double prohorov_upper_cells(std::span<const double> mu, std::span<const double> nu, double cell) {
    if (!(cell > 0.0) || !std::isfinite(cell)) throw ConfigError("prohorov_upper: ε_grid must be positive");
    const std::size_t n = std::max(mu.size(), nu.size());
    std::vector<double> a(n, 0.0), b(n, 0.0);
    std::copy(mu.begin(), mu.end(), a.begin());
    std::copy(nu.begin(), nu.end(), b.begin());
    double ta = 0.0, tb = 0.0;
    for (double x : a) ta += x;
    for (double x : b) tb += x;
    const double slack = 1e-12 * std::max(1.0, std::max(ta, tb));

    // radius m·cell certified by a transport within m-1 cells plus leftovers ≤ m·cell
    auto certified = [&](std::size_t m) {
        const double eps = static_cast<double>(m) * cell;
        const double f = max_flow_within_reach(a, b, m - 1);
        return ta - f <= eps + slack && tb - f <= eps + slack;
    };
    std::size_t hi = static_cast<std::size_t>(std::ceil(std::max(ta, tb) / cell)) + 1;
    hi = std::max<std::size_t>(hi, 1);
    std::size_t lo = 1;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (certified(mid)) hi = mid;
        else lo = mid + 1;
    }
    return static_cast<double>(lo) * cell;
}

namespace {

std::vector<double> cell_masses(const MeasureLike& mu, double cell, std::size_t n) {
    std::vector<double> m(n);
    double left = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double right = (k + 1 == n) ? mu.total_mass() : mu.cumulative(cell * static_cast<double>(k + 1));
        m[k] = std::max(0.0, right - left);
        left = right;
    }
    return m;
}

}  // namespace

double prohorov_upper(const MeasureLike& mu, const MeasureLike& nu, double cell) {
    if (!(cell > 0.0) || !std::isfinite(cell)) throw ConfigError("prohorov_upper: ε_grid must be positive");
    const double end = std::max(mu.support_end(), nu.support_end());
    const auto n = static_cast<std::size_t>(std::ceil(end / cell)) + 1;
    return prohorov_upper_cells(cell_masses(mu, cell, n), cell_masses(nu, cell, n), cell);
}

void write_measure_csv(std::ostream& os, const EmpiricalAgeMeasure& mu) {
    os << "age,weight\n";
    const double w = 1.0 / mu.normalizer();
    char buf[64];
    for (double s : mu.birth_times()) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", mu.reference_time() - s, w);
        os << buf;
    }
}

void write_measure_csv(std::ostream& os, const GriddedDensity& mu) {
    os << "age,weight\n";
    const auto& v = mu.values();
    char buf[64];
    for (std::size_t k = 0; k < v.size(); ++k) {
        double w = v[k] * mu.step();
        double age = mu.node(k);
        if (mu.mode() == Interpolation::linear) {
            if (k == 0 || k + 1 == v.size()) w *= 0.5;
        } else {
            age += 0.5 * mu.step();
        }
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", age, w);
        os << buf;
    }
}

}  // namespace cmj
