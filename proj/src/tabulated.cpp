#include "cmj/tabulated.hpp"

#include <algorithm>
#include <cmath>

#include "cmj/errors.hpp"

namespace cmj {

PiecewiseLinear::PiecewiseLinear(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size()) throw ConfigError("tabulated function: column lengths differ");
    if (xs_.size() < 2) throw ConfigError("tabulated function: need at least two rows");
    for (std::size_t i = 0; i < xs_.size(); ++i) {
        if (!std::isfinite(xs_[i]) || !std::isfinite(ys_[i]))
            throw ConfigError("tabulated function: nonfinite entry");
        if (ys_[i] < 0.0) throw ConfigError("tabulated function: negative value");
        if (i > 0 && !(xs_[i] > xs_[i - 1])) throw ConfigError("tabulated function: abscissae must increase");
    }
    cum_.assign(xs_.size(), 0.0);
    for (std::size_t i = 1; i < xs_.size(); ++i)
        cum_[i] = cum_[i - 1] + 0.5 * (ys_[i] + ys_[i - 1]) * (xs_[i] - xs_[i - 1]);
}

double PiecewiseLinear::operator()(double x) const {
    if (xs_.empty() || x < xs_.front() || x > xs_.back()) return 0.0;
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.end()) return ys_.back();
    const std::size_t k = static_cast<std::size_t>(it - xs_.begin()) - 1;
    const double w = (x - xs_[k]) / (xs_[k + 1] - xs_[k]);
    return ys_[k] + w * (ys_[k + 1] - ys_[k]);
}

double PiecewiseLinear::cumulative(double x) const {
    if (xs_.empty() || x <= xs_.front()) return 0.0;
    if (x >= xs_.back()) return cum_.back();
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - xs_.begin()) - 1;
    const double s = x - xs_[k];
    const double slope = (ys_[k + 1] - ys_[k]) / (xs_[k + 1] - xs_[k]);
    return cum_[k] + ys_[k] * s + 0.5 * slope * s * s;
}

double PiecewiseLinear::inverse_cumulative(double m) const {
    if (m <= 0.0) return xs_.front();
    if (m >= cum_.back()) return xs_.back();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), m);
    std::size_t k = static_cast<std::size_t>(it - cum_.begin()) - 1;
    // upper_bound already steps over zero-mass segments
    const double r = m - cum_[k];
    const double w = xs_[k + 1] - xs_[k];
    const double y0 = ys_[k];
    const double slope = (ys_[k + 1] - y0) / w;
    // y0 s + slope s²/2 = r, rationalized root
    const double disc = std::max(0.0, y0 * y0 + 2.0 * slope * r);
    const double denom = y0 + std::sqrt(disc);
    double s = denom > 0.0 ? 2.0 * r / denom : w;
    return xs_[k] + std::clamp(s, 0.0, w);
}

double PiecewiseLinear::sup() const {
    return ys_.empty() ? 0.0 : *std::max_element(ys_.begin(), ys_.end());
}

PiecewiseLinear PiecewiseLinear::scaled(double factor) const {
    std::vector<double> ys = ys_;
    for (auto& y : ys) y *= factor;
    return PiecewiseLinear(xs_, std::move(ys));
}

}  // namespace cmj
