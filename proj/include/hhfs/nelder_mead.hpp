#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "hhfs/errors.hpp"

namespace hhfs {

struct NelderMeadOptions {
    int max_evals = 2000;
    double ftol_rel = 1e-10;     // stop when the simplex f-spread shrinks to this, relatively
    double xtol_rel = 1e-11;     // or when the simplex collapses in parameter space
    double init_step_frac = 0.05;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0;
    int evaluations = 0;
    int iterations = 0;
    bool converged = false;
};

// Derivative-free simplex search with box constraints handled by clipping
// every proposed vertex into [lo, hi].
inline NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& objective, std::vector<double> x0,
    const std::vector<double>& lo, const std::vector<double>& hi,
    const NelderMeadOptions& opt = {},
    const std::function<void(int, double)>& trace = nullptr) {
    const std::size_t dim = x0.size();
    if (lo.size() != dim || hi.size() != dim)
        throw validation_error("nelder_mead: bound dimensions do not match the start point");

    auto clip = [&](std::vector<double>& x) {
        for (std::size_t d = 0; d < dim; ++d) x[d] = std::min(hi[d], std::max(lo[d], x[d]));
    };

    NelderMeadResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        return objective(x);
    };

    clip(x0);
    std::vector<std::vector<double>> verts(dim + 1, x0);
    std::vector<double> fv(dim + 1);
    for (std::size_t d = 0; d < dim; ++d) {
        double step = opt.init_step_frac * (hi[d] - lo[d]);
        if (x0[d] + step > hi[d]) step = -step;
        verts[d + 1][d] += step;
        clip(verts[d + 1]);
    }
    for (std::size_t v = 0; v <= dim; ++v) fv[v] = eval(verts[v]);

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);

    while (res.evaluations < opt.max_evals) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[dim], second_worst = order[dim - 1];
        ++res.iterations;
        if (trace) trace(res.iterations, fv[best]);

        double fspread = fv[worst] - fv[best];
        if (fspread <= opt.ftol_rel * std::max(std::abs(fv[best]), 1e-12)) {
            res.converged = true;
            break;
        }
        double xspread = 0;
        for (std::size_t d = 0; d < dim; ++d) {
            double range = std::max(hi[d] - lo[d], 1e-30);
            for (std::size_t v = 1; v <= dim; ++v)
                xspread = std::max(xspread,
                                   std::abs(verts[order[v]][d] - verts[best][d]) / range);
        }
        if (xspread <= opt.xtol_rel) {
            res.converged = true;
            break;
        }

        for (std::size_t d = 0; d < dim; ++d) {
            double c = 0;
            for (std::size_t v = 0; v <= dim; ++v)
                if (v != worst) c += verts[v][d];
            centroid[d] = c / static_cast<double>(dim);
        }

        for (std::size_t d = 0; d < dim; ++d) xr[d] = centroid[d] + (centroid[d] - verts[worst][d]);
        clip(xr);
        double fr = eval(xr);
        if (fr < fv[order[0]]) {
            for (std::size_t d = 0; d < dim; ++d)
                xe[d] = centroid[d] + 2.0 * (centroid[d] - verts[worst][d]);
            clip(xe);
            double fe = eval(xe);
            if (fe < fr) {
                verts[worst] = xe;
                fv[worst] = fe;
            } else {
                verts[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second_worst]) {
            verts[worst] = xr;
            fv[worst] = fr;
        } else {
            bool outside = fr < fv[worst];
            const std::vector<double>& towards = outside ? xr : verts[worst];
            for (std::size_t d = 0; d < dim; ++d)
                xc[d] = centroid[d] + 0.5 * (towards[d] - centroid[d]);
            clip(xc);
            double fc = eval(xc);
            if (fc < (outside ? fr : fv[worst])) {
                verts[worst] = xc;
                fv[worst] = fc;
            } else {
                // shrink towards the best vertex
                for (std::size_t v = 0; v <= dim; ++v) {
                    if (v == best) continue;
                    for (std::size_t d = 0; d < dim; ++d)
                        verts[v][d] = verts[best][d] + 0.5 * (verts[v][d] - verts[best][d]);
                    clip(verts[v]);
                    fv[v] = eval(verts[v]);
                    if (res.evaluations >= opt.max_evals) break;
                }
            }
        }
    }

    std::size_t ibest = 0;
    for (std::size_t v = 1; v <= dim; ++v)
        if (fv[v] < fv[ibest]) ibest = v;
    res.x = verts[ibest];
    res.f = fv[ibest];
    return res;
}

} // namespace hhfs
