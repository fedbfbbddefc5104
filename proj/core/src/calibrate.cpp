#include "posthoc/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "posthoc/errors.hpp"
#include "posthoc/metrics.hpp"

namespace posthoc {

std::string to_string(FitStatus s) {
    switch (s) {
        case FitStatus::converged: return "converged";
        case FitStatus::boundary_low: return "boundary_low";
        case FitStatus::boundary_high: return "boundary_high";
        case FitStatus::degenerate: return "degenerate";
    }
    return "?";
}

double tempered_loss(const EvalTable& t, double beta) {
    double acc = 0.0;
    std::vector<double> v(t.c);
    for (std::size_t i = 0; i < t.n; ++i) {
        auto row = t.row(i);
        for (std::size_t k = 0; k < t.c; ++k) v[k] = beta * row[k];
        acc += logsumexp(v) - beta * row[t.labels[i]];
    }
    return acc / static_cast<double>(t.n);
}

void tempered_loss_derivatives(const EvalTable& t, double beta, double& grad, double& hess) {
    double g = 0.0, h = 0.0;
    std::vector<double> s(t.c);
    for (std::size_t i = 0; i < t.n; ++i) {
        auto row = t.row(i);
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < t.c; ++k) m = std::max(m, beta * row[k]);
        double denom = 0.0;
        for (std::size_t k = 0; k < t.c; ++k) {
            s[k] = std::exp(beta * row[k] - m);
            denom += s[k];
        }
        double mean = 0.0;
        for (std::size_t k = 0; k < t.c; ++k) {
            s[k] /= denom;
            mean += s[k] * row[k];
        }
        double var = 0.0;  // centered form keeps the row variance nonnegative
        for (std::size_t k = 0; k < t.c; ++k) {
            const double d = row[k] - mean;
            var += s[k] * d * d;
        }
        g += mean - row[t.labels[i]];
        h += var;
    }
    grad = g / static_cast<double>(t.n);
    hess = h / static_cast<double>(t.n);
}

TemperatureFit fit_temperature(const EvalTable& val, const FitOptions& opts) {
    val.validate();
    if (!(opts.beta_min < opts.beta_max) || !(opts.beta_min > 0))
        throw ValidationError("fit options need 0 < beta_min < beta_max");
    if (!(opts.grad_tol > 0)) throw ValidationError("grad_tol must be positive");

    TemperatureFit fit;
    fit.val_loss_before = tempered_loss(val, 1.0);

    bool all_constant = true;
    for (std::size_t i = 0; i < val.n && all_constant; ++i) {
        auto row = val.row(i);
        auto [mn, mx] = std::minmax_element(row.begin(), row.end());
        all_constant = (*mn == *mx);
    }
    if (all_constant) {
        fit.status = FitStatus::degenerate;
        fit.val_loss_after = fit.val_loss_before;
        return fit;
    }

    double g, h;
    tempered_loss_derivatives(val, opts.beta_min, g, h);
    if (g >= 0) {
        // L' is nondecreasing (convexity): the minimum sits at the left edge.
        fit.beta = opts.beta_min;
        fit.status = FitStatus::boundary_low;
        fit.tau = 1.0 / fit.beta;
        fit.val_loss_after = tempered_loss(val, fit.beta);
        return fit;
    }
    tempered_loss_derivatives(val, opts.beta_max, g, h);
    if (g <= 0) {
        fit.beta = opts.beta_max;
        fit.status = FitStatus::boundary_high;
        fit.tau = 1.0 / fit.beta;
        fit.val_loss_after = tempered_loss(val, fit.beta);
        return fit;
    }

    // Interior minimum bracketed by sign change of L'. Newton with bisection
    // fallback whenever the candidate leaves the bracket.
    double lo = opts.beta_min, hi = opts.beta_max;
    double beta = std::clamp(1.0, lo, hi);
    for (int it = 0; it < opts.max_iters; ++it) {
        tempered_loss_derivatives(val, beta, g, h);
        fit.iterations = it + 1;
        if (std::abs(g) < opts.grad_tol) break;
        if (g > 0)
            hi = beta;
        else
            lo = beta;
        double candidate = h > 0 ? beta - g / h : std::numeric_limits<double>::infinity();
        if (!(candidate > lo && candidate < hi)) candidate = 0.5 * (lo + hi);
        if (std::abs(candidate - beta) < 1e-12) {
            beta = candidate;
            break;
        }
        beta = candidate;
    }
    fit.beta = beta;
    fit.tau = 1.0 / beta;
    fit.status = FitStatus::converged;
    fit.val_loss_after = tempered_loss(val, beta);
    return fit;
}

EvalTable apply_temperature(const EvalTable& t, double tau) {
    if (!(tau > 0) || !std::isfinite(tau)) throw ValidationError("temperature must be positive and finite");
    t.validate();
    EvalTable out = t;
    const double inv = 1.0 / tau;
    for (double& z : out.logits) z *= inv;
    return out;
}

}  // namespace posthoc
