#include "cmj/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "cmj/errors.hpp"

namespace cmj {

namespace {

constexpr int kMaxPicard = 100;
constexpr double kPicardTol = 1e-13;

double lerp_table(const std::vector<double>& v, double dt, double x) {
    if (x < 0.0) return 0.0;
    const double pos = x / dt;
    const auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= v.size()) return k + 1 == v.size() ? v.back() : 0.0;
    const double w = pos - static_cast<double>(k);
    return v[k] + w * (v[k + 1] - v[k]);
}

// ∫_0^x of the piecewise-linear interpolant of v on the grid
double cum_table(const std::vector<double>& v, const std::vector<double>& cum, double dt, double x) {
    if (x <= 0.0) return 0.0;
    const double pos = x / dt;
    const auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= v.size()) return cum.back();
    const double s = x - dt * static_cast<double>(k);
    const double slope = (v[k + 1] - v[k]) / dt;
    return cum[k] + v[k] * s + 0.5 * slope * s * s;
}

double inverse_cum_table(const std::vector<double>& v, const std::vector<double>& cum, double dt, double m) {
    if (m <= 0.0) return 0.0;
    if (m >= cum.back()) return dt * static_cast<double>(v.size() - 1);
    auto k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), m) - cum.begin()) - 1;
    const double r = m - cum[k];
    const double y0 = v[k];
    const double slope = (v[k + 1] - y0) / dt;
    const double disc = std::max(0.0, y0 * y0 + 2.0 * slope * r);
    const double denom = y0 + std::sqrt(disc);
    const double s = denom > 0.0 ? 2.0 * r / denom : dt;
    return dt * static_cast<double>(k) + std::clamp(s, 0.0, dt);
}

void fill_cum(const std::vector<double>& v, std::vector<double>& cum, double dt) {
    cum.assign(v.size(), 0.0);
    for (std::size_t k = 1; k < v.size(); ++k) cum[k] = cum[k - 1] + 0.5 * dt * (v[k - 1] + v[k]);
}

}  // namespace

// --- slice -------------------------------------------------------------

double SolutionSlice::total_mass() const { return sol_->initial_mass() + sol_->boundary_integral(t_); }

double SolutionSlice::cumulative(double x) const {
    if (x <= 0.0) return 0.0;
    const double bt = sol_->boundary_integral(t_);
    if (x <= t_) return bt - sol_->boundary_integral(t_ - x);
    return bt + sol_->initial_cumulative(x - t_);
}

double SolutionSlice::integrate(const std::function<double(double)>& phi) const {
    // trapezoid on the solver's age grid, split at the a = t junction
    const double h = sol_->dt();
    double s = 0.0;
    auto piece = [&](double from, double to) {
        const auto n = static_cast<std::size_t>(std::ceil((to - from) / h - 1e-9));
        if (n == 0) return;
        const double w = (to - from) / static_cast<double>(n);
        // evaluate strictly inside each branch at the endpoints
        for (std::size_t k = 0; k <= n; ++k) {
            const double a = from + w * static_cast<double>(k);
            double u;
            if (to <= t_) u = sol_->boundary_at(t_ - a);
            else u = sol_->initial_density(a - t_);
            const double f = u * phi(a);
            s += (k == 0 || k == n) ? 0.5 * w * f : w * f;
        }
    };
    piece(0.0, t_);
    piece(t_, t_ + sol_->initial_support_end());
    if (!std::isfinite(s)) throw ContractViolation("integrate: nonfinite test function value");
    return s;
}

double SolutionSlice::support_end() const { return t_ + sol_->initial_support_end(); }

// --- solution accessors ------------------------------------------------

double PdeSolution::boundary_at(double t) const { return lerp_table(b_, dt_, t); }
double PdeSolution::interaction_at(double t) const { return lerp_table(c_, dt_, t); }
double PdeSolution::boundary_integral(double t) const { return cum_table(b_, bcum_, dt_, t); }
double PdeSolution::boundary_integral_inverse(double m) const { return inverse_cum_table(b_, bcum_, dt_, m); }
double PdeSolution::initial_density(double a) const { return lerp_table(g_, dt_, a); }
double PdeSolution::initial_cumulative(double a) const { return cum_table(g_, gcum_, dt_, a); }
double PdeSolution::initial_cumulative_inverse(double m) const { return inverse_cum_table(g_, gcum_, dt_, m); }

double PdeSolution::rate(double a) const {
    if (a < 0.0) return 0.0;
    if (a >= age_end()) return tau_.back();
    return lerp_table(tau_, dt_, a);
}

void PdeSolution::build_cumulatives() {
    fill_cum(b_, bcum_, dt_);
    fill_cum(g_, gcum_, dt_);
    rate_sup_ = tau_.empty() ? 0.0 : *std::max_element(tau_.begin(), tau_.end());
}

void PdeSolution::extend_cumulative(std::size_t j) {
    bcum_[j] = j == 0 ? 0.0 : bcum_[j - 1] + 0.5 * dt_ * (b_[j - 1] + b_[j]);
}

GriddedDensity PdeSolution::snapshot(double t) const {
    const auto n = static_cast<std::size_t>(std::ceil((t + initial_support_end()) / dt_ - 1e-9)) + 1;
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = eval_u(*this, t, dt_ * static_cast<double>(k));
    return GriddedDensity(dt_, std::move(v), Interpolation::linear);
}

void PdeSolution::write_csv(std::ostream& os) const {
    os << "t,b,mass,C\n";
    char buf[128];
    for (std::size_t j = 0; j < b_.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.10g,%.17g,%.17g,%.17g\n", time(j), b_[j],
                      initial_mass() + bcum_[j], c_[j]);
        os << buf;
    }
}

namespace {

constexpr char kMagic[8] = {'C', 'M', 'J', 'P', 'D', 'E', '1', '\0'};

void put_vec(std::ostream& os, const std::vector<double>& v) {
    const std::uint64_t n = v.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

std::vector<double> get_vec(std::istream& is) {
    std::uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!is || n > (1ULL << 32)) throw ConfigError("pde dump: corrupt length");
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw ConfigError("pde dump: truncated");
    return v;
}

}  // namespace

void PdeSolution::write_binary(std::ostream& os) const {
    os.write(kMagic, sizeof kMagic);
    const double head[3] = {dt_, horizon_, residual_};
    os.write(reinterpret_cast<const char*>(head), sizeof head);
    put_vec(os, b_);
    put_vec(os, c_);
    put_vec(os, tail_);
    put_vec(os, g_);
    put_vec(os, tau_);
}

PdeSolution PdeSolution::read_binary(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ConfigError("pde dump: bad magic");
    double head[3];
    is.read(reinterpret_cast<char*>(head), sizeof head);
    PdeSolution s;
    s.dt_ = head[0];
    s.horizon_ = head[1];
    s.residual_ = head[2];
    s.b_ = get_vec(is);
    s.c_ = get_vec(is);
    s.tail_ = get_vec(is);
    s.g_ = get_vec(is);
    s.tau_ = get_vec(is);
    if (s.b_.empty() || s.c_.size() != s.b_.size() || s.tail_.size() != s.b_.size() || s.g_.size() < 2 ||
        s.tau_.size() < s.b_.size())
        throw ConfigError("pde dump: inconsistent tables");
    s.build_cumulatives();
    return s;
}

bool PdeSolution::same_tables(const PdeSolution& o) const {
    return dt_ == o.dt_ && horizon_ == o.horizon_ && residual_ == o.residual_ && b_ == o.b_ && c_ == o.c_ &&
           tail_ == o.tail_ && g_ == o.g_ && tau_ == o.tau_;
}

// --- solver --------------------------------------------------------------

PdeSolution solve_nonlinear(const BirthProcessSpec& spec, const InitialAgeDensity& g, const InteractionRule& C,
                            double horizon, double dt) {
    if (!spec.has_density()) throw ConfigError("solve_nonlinear: the birth process needs an intensity density");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("solve_nonlinear: horizon must be positive");
    const double sup = spec.sup_bound();
    const double dt_max = 1e-2 * std::min(1.0, sup > 0.0 ? 1.0 / sup : 1.0);
    if (!(dt > 0.0) || dt > dt_max * (1.0 + 1e-12))
        throw ConfigError("solve_nonlinear: dt must lie in (0, " + std::to_string(dt_max) + "]");

    PdeSolution s;
    s.dt_ = dt;
    const auto J = static_cast<std::size_t>(std::llround(horizon / dt));
    if (std::abs(static_cast<double>(J) * dt - horizon) > 1e-9 * horizon)
        throw ConfigError("solve_nonlinear: horizon must be a multiple of dt");
    s.horizon_ = horizon;

    const auto n_g = static_cast<std::size_t>(std::ceil(g.support_end() / dt)) + 1;
    const std::size_t n_tau = n_g + J;
    s.g_.resize(n_g);
    s.tau_.resize(n_tau);
    for (std::size_t i = 0; i < n_g; ++i) {
        s.g_[i] = g(dt * static_cast<double>(i));
        if (!(s.g_[i] >= 0.0) || !std::isfinite(s.g_[i])) throw ContractViolation("initial density is negative or nonfinite");
    }
    for (std::size_t i = 0; i < n_tau; ++i) {
        s.tau_[i] = spec.intensity(dt * static_cast<double>(i));
        if (!(s.tau_[i] >= 0.0) || s.tau_[i] > sup * (1.0 + 1e-12))
            throw ContractViolation("τ outside [0, sup_bound] at age " + std::to_string(dt * static_cast<double>(i)));
    }
    fill_cum(s.g_, s.gcum_, dt);
    s.rate_sup_ = *std::max_element(s.tau_.begin(), s.tau_.end());

    s.tail_.assign(J + 1, 0.0);
    for (std::size_t j = 0; j <= J; ++j) {
        double acc = 0.5 * (s.g_[0] * s.tau_[j] + s.g_[n_g - 1] * s.tau_[j + n_g - 1]);
        for (std::size_t i = 1; i + 1 < n_g; ++i) acc += s.g_[i] * s.tau_[i + j];
        s.tail_[j] = acc * dt;
    }

    s.b_.assign(J + 1, 0.0);
    s.bcum_.assign(J + 1, 0.0);
    s.c_.assign(J + 1, 0.0);
    const double tau0 = s.tau_[0];
    for (std::size_t j = 0; j <= J; ++j) {
        const double tj = s.time(j);
        double conv = 0.0;
        if (j > 0) {
            conv = 0.5 * s.b_[0] * s.tau_[j];
            for (std::size_t k = 1; k < j; ++k) conv += s.b_[k] * s.tau_[j - k];
        }
        // b_j enters through the trapezoid endpoint ½Δt τ(0) b_j and,
        // weakly, through the mass of u_{t_j}; resolve both by Picard
        double b = j == 0 ? s.tail_[0] : s.b_[j - 1];
        double c = 0.0;
        int it = 0;
        for (;; ++it) {
            if (it == kMaxPicard)
                throw DivergenceError("Picard iteration did not converge at t=" + std::to_string(tj) +
                                      " (last iterate " + std::to_string(b) + ")");
            s.b_[j] = b;
            s.extend_cumulative(j);
            c = C(tj, s.slice(tj));
            const double next = c * (dt * (conv + 0.5 * tau0 * b) + s.tail_[j]);
            const bool done = std::abs(next - b) <= kPicardTol * std::max(1.0, std::abs(next));
            b = next;
            if (done) break;
        }
        s.b_[j] = b;
        s.c_[j] = c;
        s.extend_cumulative(j);
    }
    s.residual_ = fixed_point_residual(s, C);
    if (s.residual_ > 1e-6)
        throw DivergenceError("fixed-point residual " + std::to_string(s.residual_) + " exceeds 1e-6");
    return s;
}

double fixed_point_residual(const PdeSolution& sol, const InteractionRule& C) {
    // independent pass: rebuild K(b) from the stored tables, including G
    const double dt = sol.dt_;
    const std::size_t n_g = sol.g_.size();
    double worst = 0.0;
    for (std::size_t j = 0; j < sol.b_.size(); ++j) {
        double tail = 0.0;
        for (std::size_t i = 0; i < n_g; ++i) {
            const double w = (i == 0 || i + 1 == n_g) ? 0.5 : 1.0;
            tail += w * sol.g_[i] * sol.tau_[i + j];
        }
        tail *= dt;
        double conv = 0.0;
        for (std::size_t k = 0; k <= j; ++k) {
            const double w = (k == 0 || k == j) ? 0.5 : 1.0;
            conv += w * sol.b_[k] * sol.tau_[j - k];
        }
        const double kb = C(sol.time(j), sol.slice(sol.time(j))) * (dt * conv + tail);
        worst = std::max(worst, std::abs(kb - sol.b_[j]));
    }
    return worst;
}

double eval_u(const PdeSolution& sol, double t, double a) {
    if (t < 0.0 || t > sol.horizon() * (1.0 + 1e-12)) throw DomainError("eval_u: t outside [0, T]");
    if (a < 0.0) return 0.0;
    if (a < t) return sol.boundary_at(t - a);
    return sol.initial_density(a - t);
}

double mass(const PdeSolution& sol, double t) {
    if (t < 0.0 || t > sol.horizon() * (1.0 + 1e-12)) throw DomainError("mass: t outside [0, T]");
    return sol.initial_mass() + sol.boundary_integral(t);
}

double gronwall_margin(const PdeSolution& sol) {
    const double m0 = mass(sol, 0.0);
    double worst = -1.0;
    for (std::size_t j = 0; j <= sol.steps(); ++j) {
        const double t = sol.time(j);
        worst = std::max(worst, mass(sol, t) / (m0 * std::exp(sol.rate_sup() * t)) - 1.0);
    }
    return worst;
}

}  // namespace cmj
