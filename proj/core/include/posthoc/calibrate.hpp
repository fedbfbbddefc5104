#pragma once

#include <string>

#include "posthoc/eval_table.hpp"

namespace posthoc {

enum class FitStatus { converged, boundary_low, boundary_high, degenerate };

std::string to_string(FitStatus s);

struct FitOptions {
    double beta_min = 1e-3;
    double beta_max = 1e3;
    double grad_tol = 1e-10;
    int max_iters = 100;
};

struct TemperatureFit {
    double tau = 1.0;              // fitted temperature, > 0
    double beta = 1.0;             // inverse temperature, tau = 1/beta
    double val_loss_before = 0.0;  // loss at tau = 1
    double val_loss_after = 0.0;   // loss at the fitted tau
    int iterations = 0;
    FitStatus status = FitStatus::converged;
};

/// Mean cross-entropy of the table under inverse temperature beta:
///   L(beta) = mean_i [ logsumexp(beta z_i) - beta z_{i,y_i} ].
double tempered_loss(const EvalTable& t, double beta);

/// dL/dbeta and d2L/dbeta2 at beta. The second derivative is a mean of
/// per-row variances of the logits under the tempered softmax, hence >= 0:
/// L is convex in beta.
void tempered_loss_derivatives(const EvalTable& t, double beta, double& grad, double& hess);

/// Minimizes L(beta) over [beta_min, beta_max] by Newton's method from
/// beta = 1, safeguarded by bisection on the sign-change bracket. Stops when
/// |dL/dbeta| < grad_tol, the step falls below 1e-12, or max_iters is hit.
/// All-constant rows carry no curvature anywhere; that case returns tau = 1
/// flagged degenerate.
TemperatureFit fit_temperature(const EvalTable& val, const FitOptions& opts = {});

/// Scales logits by 1/tau, labels untouched. Never changes the error metric.
EvalTable apply_temperature(const EvalTable& t, double tau);

}  // namespace posthoc
