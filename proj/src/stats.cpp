#include "cmj/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "cmj/errors.hpp"

namespace cmj {

MeanSe mean_se(std::span<const double> xs) {
    MeanSe r;
    r.n = xs.size();
    if (xs.empty()) return r;
    double s = 0.0;
    for (double x : xs) s += x;
    r.mean = s / static_cast<double>(r.n);
    if (r.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        r.se = std::sqrt(ss / static_cast<double>(r.n - 1) / static_cast<double>(r.n));
    }
    return r;
}

Interval wilson_interval(std::size_t hits, std::size_t n, double z) {
    if (n == 0) throw ConfigError("wilson_interval: no trials");
    const double nd = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nd;
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * nd)) / (1.0 + z2 / nd);
    const double half = z / (1.0 + z2 / nd) * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd));
    return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

TestResult chi_square_test(std::span<const double> observed, std::span<const double> expected, int fitted) {
    if (observed.size() != expected.size() || observed.size() < 2)
        throw ConfigError("chi_square_test: need matching bins, at least two");
    TestResult r;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        if (!(expected[k] > 0.0)) throw ConfigError("chi_square_test: expected counts must be positive");
        const double d = observed[k] - expected[k];
        r.statistic += d * d / expected[k];
    }
    r.dof = static_cast<int>(observed.size()) - 1 - fitted;
    if (r.dof < 1) throw ConfigError("chi_square_test: no degrees of freedom left");
    r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(r.dof), r.statistic));
    return r;
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ConfigError("ks_two_sample: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    const double lambda = (ne + 0.12 + 0.11 / ne) * d;
    // Q_KS(λ) = 2 Σ (-1)^{k-1} exp(-2 k² λ²)
    double q = 0.0;
    if (lambda < 1e-3) {
        q = 1.0;
    } else {
        double sign = 1.0;
        for (int k = 1; k <= 200; ++k) {
            const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
            q += term;
            if (std::abs(term) < 1e-12) break;
            sign = -sign;
        }
        q = std::clamp(2.0 * q, 0.0, 1.0);
    }
    return {d, q, 0};
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw ConfigError("quantile: empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    if (k + 1 >= xs.size()) return xs.back();
    return xs[k] + (pos - static_cast<double>(k)) * (xs[k + 1] - xs[k]);
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

double ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("ols_slope: need two or more points");
    const double mx = mean_se(x).mean, my = mean_se(y).mean;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    return sxy / sxx;
}

MeanSe covariance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) throw ConfigError("covariance: need matching samples of size ≥ 3");
    const double mx = mean_se(x).mean, my = mean_se(y).mean;
    std::vector<double> prod(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) prod[k] = (x[k] - mx) * (y[k] - my);
    MeanSe r = mean_se(prod);
    r.mean *= static_cast<double>(x.size()) / static_cast<double>(x.size() - 1);
    return r;
}

}  // namespace cmj
