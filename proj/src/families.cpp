#include "ssddr/families.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssddr {
namespace special {

namespace {

// Lanczos coefficients, g = 7, 9 terms.
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,   676.5203681218851,     -1259.1392167224028,
    771.32342877765313,    -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,  9.9843695780195716e-6, 1.5056327351493116e-7};

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("log_gamma: argument must be positive");
    if (x < 0.5) return log_gamma(x + 1.0) - std::log(x);
    const double z = x - 1.0;
    double a = kLanczos[0];
    for (int i = 1; i < 9; ++i) a += kLanczos[i] / (z + i);
    const double t = z + kLanczosG + 0.5;
    return kHalfLog2Pi + (z + 0.5) * std::log(t) - t + std::log(a);
}

double digamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("digamma: argument must be positive");
    // psi(x) = psi(x+1) - 1/x pushes the argument into the asymptotic range;
    // at x >= 10 the first omitted series term is below 1e-15.
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Asymptotic series: log x - 1/(2x) - sum B_2n / (2n x^2n).
    double series = -0.5 * inv;
    series -= inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 -
              inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    return acc + std::log(x) + series;
}

double reg_lower_gamma(double shape, double x) {
    if (!(shape > 0.0)) throw std::invalid_argument("reg_lower_gamma: shape must be positive");
    if (std::isnan(x)) throw std::invalid_argument("reg_lower_gamma: x is NaN");
    if (x <= 0.0) return 0.0;

    const double log_prefix = shape * std::log(x) - x - log_gamma(shape);
    const int max_iter = 2000;
    const double eps = std::numeric_limits<double>::epsilon();

    if (x < shape + 1.0) {
        // Power series: P = x^k e^-x / Gamma(k) * sum_n x^n / (k (k+1)...(k+n)).
        double ap = shape;
        double del = 1.0 / shape;
        double sum = del;
        for (int i = 0; i < max_iter; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * eps) break;
        }
        return std::clamp(sum * std::exp(log_prefix), 0.0, 1.0);
    }

    // Modified Lentz continued fraction for Q, then P = 1 - Q.
    const double tiny = 1e-300;
    double b = x + 1.0 - shape;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= max_iter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - shape);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return std::clamp(1.0 - std::exp(log_prefix) * h, 0.0, 1.0);
}

}  // namespace special

double link_exp(double eta) { return std::exp(eta); }

double link_logit_inv(double eta) {
    double p;
    if (eta >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-eta));
    } else {
        const double e = std::exp(eta);
        p = e / (1.0 + e);
    }
    // Keep strictly inside (0, 1) so log(p) and log(1-p) stay finite.
    const double lo = std::numeric_limits<double>::min();
    const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    return std::clamp(p, lo, hi);
}

GammaNll gamma_nll(double y, double eta_mean, double eta_var) {
    if (!(y > 0.0) || !std::isfinite(y))
        throw std::invalid_argument("gamma_nll: outcome must be positive and finite");
    const double mu = std::exp(eta_mean);
    const double s2 = std::exp(eta_var);
    const double k = mu * mu / s2;   // shape
    const double r = mu / s2;        // rate
    const double log_y = std::log(y);
    const double log_r = eta_mean - eta_var;  // log(mu/sigma2)

    GammaNll out;
    out.value = -(k * log_r - special::log_gamma(k) + (k - 1.0) * log_y - r * y);
    // d/dk of the log-likelihood, shared by both linear predictors.
    const double gk = log_r - special::digamma(k) + log_y;
    out.d_eta_mean = -2.0 * k * gk + r * (y - mu);
    out.d_eta_var = k * gk - r * (y - mu);
    return out;
}

double gamma_nll_value(double y, const GammaParams& p) {
    if (!(y > 0.0) || !std::isfinite(y))
        throw std::invalid_argument("gamma_nll_value: outcome must be positive and finite");
    if (!(p.mean > 0.0) || !(p.variance > 0.0) || !std::isfinite(p.mean) || !std::isfinite(p.variance))
        throw std::invalid_argument("gamma_nll_value: parameters must be positive and finite");
    const double k = p.shape();
    const double r = p.rate();
    return -(k * std::log(r) - special::log_gamma(k) + (k - 1.0) * std::log(y) - r * y);
}

double gamma_cdf(double y, const GammaParams& p) {
    if (std::isnan(y)) throw std::invalid_argument("gamma_cdf: y is NaN");
    if (!(p.mean > 0.0) || !(p.variance > 0.0) || !std::isfinite(p.mean) || !std::isfinite(p.variance))
        throw std::invalid_argument("gamma_cdf: parameters must be positive and finite");
    if (y <= 0.0) return 0.0;
    return special::reg_lower_gamma(p.shape(), p.rate() * y);
}

double ltu_probability(const GammaParams& p, double threshold) {
    if (!(threshold > 0.0) || !std::isfinite(threshold))
        throw std::invalid_argument("ltu_probability: threshold must be positive and finite");
    return 1.0 - gamma_cdf(threshold, p);
}

BernoulliNll bernoulli_nll(double y, double eta) {
    if (y != 0.0 && y != 1.0)
        throw std::invalid_argument("bernoulli_nll: outcome must be 0 or 1");
    if (!std::isfinite(eta)) throw std::invalid_argument("bernoulli_nll: eta must be finite");
    BernoulliNll out;
    // max(eta,0) - y*eta + log(1 + exp(-|eta|)) avoids overflow on both tails.
    out.value = std::max(eta, 0.0) - y * eta + std::log1p(std::exp(-std::abs(eta)));
    const double p = eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta))
                                : std::exp(eta) / (1.0 + std::exp(eta));
    out.d_eta = p - y;
    return out;
}

double bernoulli_nll_value(double y, double p) {
    if (y != 0.0 && y != 1.0)
        throw std::invalid_argument("bernoulli_nll_value: outcome must be 0 or 1");
    if (!(p > 0.0) || !(p < 1.0))
        throw std::invalid_argument("bernoulli_nll_value: p must be in (0, 1)");
    return -(y * std::log(p) + (1.0 - y) * std::log1p(-p));
}

}  // namespace ssddr
