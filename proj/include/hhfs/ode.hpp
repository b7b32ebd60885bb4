#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "hhfs/errors.hpp"

namespace hhfs {

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double t_max = 1e6;
    double event_time_tol = 1e-6;
    double h_init = 1e-6;
    double h_max = 1e3;
};

struct OdeStats {
    double t_end = 0;
    long long steps_accepted = 0;
    long long steps_rejected = 0;
    long long rhs_evals = 0;
    bool event_reached = false;
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct Dp45 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640,
                            e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

} // namespace detail

// One Dormand-Prince 5(4) step workspace; k1 is reused across steps (FSAL).
template <class Rhs>
class Dp45Stepper {
public:
    explicit Dp45Stepper(Rhs& rhs, std::size_t dim) : rhs_(rhs) {
        for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_}) v->assign(dim, 0.0);
    }

    void prime(double t, const std::vector<double>& y) {
        rhs_(t, y, k1_);
        ++evals_;
    }

    // Advances y by h into ynew; returns the scaled error norm.
    double step(double t, const std::vector<double>& y, double h, std::vector<double>& ynew,
                double rtol, double atol) {
        using D = detail::Dp45;
        const std::size_t m = y.size();
        for (std::size_t i = 0; i < m; ++i) ytmp_[i] = y[i] + h * D::a21 * k1_[i];
        rhs_(t + D::c2 * h, ytmp_, k2_);
        for (std::size_t i = 0; i < m; ++i)
            ytmp_[i] = y[i] + h * (D::a31 * k1_[i] + D::a32 * k2_[i]);
        rhs_(t + D::c3 * h, ytmp_, k3_);
        for (std::size_t i = 0; i < m; ++i)
            ytmp_[i] = y[i] + h * (D::a41 * k1_[i] + D::a42 * k2_[i] + D::a43 * k3_[i]);
        rhs_(t + D::c4 * h, ytmp_, k4_);
        for (std::size_t i = 0; i < m; ++i)
            ytmp_[i] = y[i] + h * (D::a51 * k1_[i] + D::a52 * k2_[i] + D::a53 * k3_[i] +
                                   D::a54 * k4_[i]);
        rhs_(t + D::c5 * h, ytmp_, k5_);
        for (std::size_t i = 0; i < m; ++i)
            ytmp_[i] = y[i] + h * (D::a61 * k1_[i] + D::a62 * k2_[i] + D::a63 * k3_[i] +
                                   D::a64 * k4_[i] + D::a65 * k5_[i]);
        rhs_(t + h, ytmp_, k6_);
        for (std::size_t i = 0; i < m; ++i)
            ynew[i] = y[i] + h * (D::b1 * k1_[i] + D::b3 * k3_[i] + D::b4 * k4_[i] +
                                  D::b5 * k5_[i] + D::b6 * k6_[i]);
        rhs_(t + h, ynew, k7_);
        evals_ += 6;

        double err = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double e = h * (D::e1 * k1_[i] + D::e3 * k3_[i] + D::e4 * k4_[i] + D::e5 * k5_[i] +
                            D::e6 * k6_[i] + D::e7 * k7_[i]);
            double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            double r = e / sc;
            err += r * r;
        }
        return std::sqrt(err / static_cast<double>(m));
    }

    void accept() { k1_.swap(k7_); }
    long long evals() const { return evals_; }

private:
    Rhs& rhs_;
    std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_;
    long long evals_ = 0;
};

// Integrates y' = rhs(t, y) from t0 until the first time event(y) drops below
// `threshold` (located by bisection over the bracketing step, to within
// event_time_tol) or until t_max. On return y holds the state at the stop time.
template <class Rhs, class Event>
OdeStats integrate_to_event(Rhs&& rhs, std::vector<double>& y, double t0, Event&& event,
                            double threshold, const OdeOptions& opt = {}) {
    OdeStats stats;
    Dp45Stepper<Rhs> stepper(rhs, y.size());
    double t = t0;
    double h = opt.h_init;
    std::vector<double> ynew(y.size());

    if (event(y) < threshold) {
        stats.t_end = t;
        stats.event_reached = true;
        return stats;
    }
    stepper.prime(t, y);

    while (t < opt.t_max) {
        h = std::min(h, opt.t_max - t);
        double err = stepper.step(t, y, h, ynew, opt.rtol, opt.atol);
        if (err <= 1.0) {
            ++stats.steps_accepted;
            stepper.accept();
            if (event(ynew) < threshold) {
                // bracket [t, t+h]; bisect with plain steps from the left end
                double lo = t, hi = t + h;
                std::vector<double> ylo = y, ymid(y.size());
                while (hi - lo > opt.event_time_tol) {
                    double mid = 0.5 * (lo + hi);
                    stepper.prime(lo, ylo);
                    stepper.step(lo, ylo, mid - lo, ymid, opt.rtol, opt.atol);
                    if (event(ymid) < threshold) {
                        hi = mid;
                        ynew = ymid;
                    } else {
                        lo = mid;
                        ylo = ymid;
                    }
                }
                y = ynew;
                stats.t_end = hi;
                stats.event_reached = true;
                stats.rhs_evals = stepper.evals();
                return stats;
            }
            y.swap(ynew);
            t += h;
            double grow = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            h = std::min(opt.h_max, h * std::min(5.0, std::max(0.2, grow)));
        } else {
            ++stats.steps_rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw numerical_error("ode: step size underflow at t = " + std::to_string(t));
    }
    stats.t_end = t;
    stats.rhs_evals = stepper.evals();
    return stats;
}

} // namespace hhfs
