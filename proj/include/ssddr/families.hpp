#ifndef SSDDR_FAMILIES_HPP
#define SSDDR_FAMILIES_HPP

namespace ssddr {

// ---- special functions -------------------------------------------------
// Implemented in-module so accuracy is under our control and testable
// against quadrature / reference values.
namespace special {

// log Gamma(x) for x > 0, Lanczos approximation (g = 7, 9 coefficients),
// with the recurrence lgamma(x) = lgamma(x+1) - log(x) below 0.5.
double log_gamma(double x);

// digamma(x) = d/dx log Gamma(x), x > 0: recurrence up to x >= 6, then the
// asymptotic series in 1/x^2.
double digamma(double x);

// Regularized lower incomplete gamma P(shape, x) = gamma(shape, x)/Gamma(shape).
// Power series for x < shape + 1, Lentz continued fraction otherwise.
// Result clamped to [0, 1].
double reg_lower_gamma(double shape, double x);

}  // namespace special

// ---- links --------------------------------------------------------------

// Inverse log link: eta -> exp(eta).
double link_exp(double eta);

// Inverse logit, numerically stable for |eta| up to ~1e4.  Output is clamped
// away from exactly 0 and 1 so downstream logs stay finite.
double link_logit_inv(double eta);

// ---- Gamma family (mean/variance parametrization) -----------------------

struct GammaParams {
    double mean;      // mu > 0
    double variance;  // sigma2 > 0

    double shape() const { return mean * mean / variance; }
    double rate() const { return mean / variance; }
};

// Per-observation negative log-likelihood and its gradient with respect to
// the two linear predictors (mean and variance both use the log link).
struct GammaNll {
    double value;
    double d_eta_mean;
    double d_eta_var;
};

GammaNll gamma_nll(double y, double eta_mean, double eta_var);

// NLL value only, from natural-scale parameters.
double gamma_nll_value(double y, const GammaParams& p);

// P(T <= y) for T ~ Gamma(params).  y <= 0 gives 0.
double gamma_cdf(double y, const GammaParams& p);

// P(T >= threshold): the long-duration probability used for decisions.
double ltu_probability(const GammaParams& p, double threshold = 12.0);

// ---- Bernoulli family ----------------------------------------------------

struct BernoulliNll {
    double value;
    double d_eta;
};

// Stable cross-entropy in terms of the logit; y must be 0 or 1.
BernoulliNll bernoulli_nll(double y, double eta);

double bernoulli_nll_value(double y, double p);

}  // namespace ssddr

#endif
