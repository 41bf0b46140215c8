#pragma once

#include <vector>

namespace cmj {

// Nonnegative piecewise-linear function on [x_0, x_n], zero outside.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    PiecewiseLinear(std::vector<double> xs, std::vector<double> ys);

    double operator()(double x) const;
    // ∫_{x_0}^{x} f
    double cumulative(double x) const;
    double total() const { return cum_.empty() ? 0.0 : cum_.back(); }
    // smallest x with cumulative(x) = m, for m in [0, total()]
    double inverse_cumulative(double m) const;
    double sup() const;

    double front() const { return xs_.front(); }
    double back() const { return xs_.back(); }
    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }
    bool empty() const { return xs_.empty(); }

    PiecewiseLinear scaled(double factor) const;

private:
    std::vector<double> xs_, ys_, cum_;
};

}  // namespace cmj
