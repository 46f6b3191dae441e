#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "paircomp/math.hpp"
#include "paircomp/rng.hpp"

namespace paircomp {

/// The set A of possible comparison outcomes; symmetric about 0.
struct OutcomeSpace {
    enum class Kind { finite, continuous };

    Kind kind = Kind::finite;
    std::vector<double> values;  // finite: sorted, duplicate-free, symmetric
    double lo = 0.0;             // continuous interval bounds (may be infinite)
    double hi = 0.0;

    static OutcomeSpace finite(std::vector<double> vals) {
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        OutcomeSpace s;
        s.kind = Kind::finite;
        s.values = std::move(vals);
        for (double v : s.values) {
            if (!std::binary_search(s.values.begin(), s.values.end(), -v)) {
                throw std::invalid_argument("outcome space is not symmetric about 0");
            }
        }
        return s;
    }

    static OutcomeSpace continuous(double lo, double hi) {
        if (!(lo < hi) || lo != -hi) {
            throw std::invalid_argument("continuous outcome space must be symmetric");
        }
        OutcomeSpace s;
        s.kind = Kind::continuous;
        s.lo = lo;
        s.hi = hi;
        return s;
    }

    bool contains(double x) const {
        if (kind == Kind::finite) {
            return std::binary_search(values.begin(), values.end(), x);
        }
        return x >= lo && x <= hi;
    }
};

/// Model name plus named parameters; the JSON-facing description of a model.
struct ModelSpec {
    std::string name;
    std::map<std::string, double> params;
};

/// A link-function family f(x; y) over outcome space A: log-density plus its
/// first and second y-derivatives g and g2. Immutable after construction;
/// safe to share across threads.
struct LinkModel {
    std::string name;
    OutcomeSpace space;
    std::map<std::string, double> params;

    std::function<double(double x, double y)> log_density_fn;
    std::function<double(double x, double y)> score_fn;
    std::function<double(double x, double y)> score_slope_fn;

    // Continuous-A models provide a direct sampler; finite A uses inverse CDF.
    std::function<double(double y, Rng&)> sampler_fn;

    // Optional closed-form P(X <= x) for continuous A (validation uses
    // quadrature otherwise).
    std::function<double(double x, double y)> cdf_fn;

    // False when sup_{x in A} |g(x;y)| is infinite (Normal): the theory
    // module then reports C2 as unbounded and works with C5 instead.
    bool score_bounded = true;

    // Continuous A: halfwidth of the integration window around y that
    // captures the density mass to well below the validation tolerances.
    double integration_halfwidth = 0.0;

    double density(double x, double y) const {
        return std::exp(log_density_fn(x, y));
    }
};

/// log f(x; y). Throws if x is not an element of A.
inline double log_density(const LinkModel& model, double x, double y) {
    if (!model.space.contains(x)) {
        throw std::domain_error("outcome " + std::to_string(x) +
                                " not in the outcome space of " + model.name);
    }
    return model.log_density_fn(x, y);
}

/// g(x; y) = d/dy log f(x; y).
inline double score(const LinkModel& model, double x, double y) {
    if (!model.space.contains(x)) {
        throw std::domain_error("outcome not in the outcome space of " + model.name);
    }
    return model.score_fn(x, y);
}

/// g2(x; y) = d/dy g(x; y); strictly negative for all built-in models.
inline double score_slope(const LinkModel& model, double x, double y) {
    if (!model.space.contains(x)) {
        throw std::domain_error("outcome not in the outcome space of " + model.name);
    }
    return model.score_slope_fn(x, y);
}

/// Draws one outcome from f(.; y). Finite A: inverse CDF over the sorted
/// outcome list; continuous A: the model's sampler.
inline double sample_outcome(const LinkModel& model, double y, Rng& rng) {
    if (model.space.kind == OutcomeSpace::Kind::continuous) {
        if (!model.sampler_fn) {
            throw std::logic_error("model " + model.name + " has no sampler");
        }
        return model.sampler_fn(y, rng);
    }
    const auto& vals = model.space.values;
    double total = 0.0;
    std::vector<double> probs(vals.size());
    for (std::size_t k = 0; k < vals.size(); ++k) {
        probs[k] = model.density(vals[k], y);
        total += probs[k];
    }
    const double u = rng.uniform() * total;
    double cdf = 0.0;
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
        cdf += probs[k];
        if (u < cdf) return vals[k];
    }
    return vals.back();
}

namespace detail {

inline double require_param(const ModelSpec& spec, const std::string& key) {
    const auto it = spec.params.find(key);
    if (it == spec.params.end()) {
        throw std::invalid_argument("model " + spec.name + " requires parameter '" + key + "'");
    }
    return it->second;
}

inline void reject_unknown_params(const ModelSpec& spec,
                                  std::initializer_list<const char*> known) {
    for (const auto& [key, value] : spec.params) {
        bool ok = false;
        for (const char* k : known) ok = ok || (key == k);
        if (!ok) {
            throw std::invalid_argument("model " + spec.name + " does not take parameter '" + key + "'");
        }
    }
}

inline LinkModel make_bt() {
    LinkModel m;
    m.name = "bt";
    m.space = OutcomeSpace::finite({-1.0, 1.0});
    // f(1;y) = e^y/(1+e^y)
    m.log_density_fn = [](double x, double y) {
        return x > 0 ? -softplus(-y) : -softplus(y);
    };
    m.score_fn = [](double x, double y) {
        return x > 0 ? logistic(-y) : -logistic(y);
    };
    m.score_slope_fn = [](double, double y) { return -logistic_deriv(y); };
    return m;
}

inline LinkModel make_thurstone_mosteller() {
    LinkModel m;
    m.name = "thurstone_mosteller";
    m.space = OutcomeSpace::finite({-1.0, 1.0});
    // f(1;y) = Phi(y), standard normal CDF; g is the inverse Mills ratio.
    auto mills = [](double t) {
        const double log_pdf = -0.5 * t * t - 0.5 * kLogTwoPi;
        return std::exp(log_pdf - log_normal_cdf(t));
    };
    m.log_density_fn = [](double x, double y) {
        return log_normal_cdf(x > 0 ? y : -y);
    };
    m.score_fn = [mills](double x, double y) {
        return x > 0 ? mills(y) : -mills(-y);
    };
    m.score_slope_fn = [mills](double x, double y) {
        if (x > 0) {
            const double h = mills(y);
            return -h * (y + h);
        }
        const double h = mills(-y);
        return -h * (h - y);
    };
    return m;
}

inline LinkModel make_rao_kupper(double theta) {
    if (!(theta > 1.0)) {
        throw std::invalid_argument("rao_kupper: theta must exceed 1");
    }
    LinkModel m;
    m.name = "rao_kupper";
    m.space = OutcomeSpace::finite({-1.0, 0.0, 1.0});
    m.params = {{"theta", theta}};
    const double lt = std::log(theta);
    const double log_th2m1 = std::log(theta * theta - 1.0);
    m.log_density_fn = [lt, log_th2m1](double x, double y) {
        if (x > 0) return y - lt - softplus(y - lt);
        if (x < 0) return -softplus(y + lt);
        return log_th2m1 + y - lt - softplus(y - lt) - softplus(y + lt);
    };
    m.score_fn = [lt](double x, double y) {
        if (x > 0) return 1.0 - logistic(y - lt);
        if (x < 0) return -logistic(y + lt);
        return 1.0 - logistic(y - lt) - logistic(y + lt);
    };
    m.score_slope_fn = [lt](double x, double y) {
        if (x > 0) return -logistic_deriv(y - lt);
        if (x < 0) return -logistic_deriv(y + lt);
        return -(logistic_deriv(y - lt) + logistic_deriv(y + lt));
    };
    return m;
}

inline LinkModel make_davidson(double theta) {
    if (!(theta > 0.0)) {
        throw std::invalid_argument("davidson: theta must be positive");
    }
    LinkModel m;
    m.name = "davidson";
    m.space = OutcomeSpace::finite({-1.0, 0.0, 1.0});
    m.params = {{"theta", theta}};
    const double lt = std::log(theta);
    // D(y) = e^y + theta e^{y/2} + 1, evaluated as a log-sum-exp.
    auto log_denom = [lt](double y) {
        const double a = y;
        const double b = 0.5 * y + lt;
        const double mx = std::max({a, b, 0.0});
        return mx + std::log(std::exp(a - mx) + std::exp(b - mx) + std::exp(-mx));
    };
    m.log_density_fn = [lt, log_denom](double x, double y) {
        const double ld = log_denom(y);
        if (x > 0) return y - ld;
        if (x < 0) return -ld;
        return lt + 0.5 * y - ld;
    };
    // g differs across x only by the constant in front of D'/D.
    auto ratio = [lt, log_denom](double y) {
        const double ld = log_denom(y);
        return std::exp(y - ld) + 0.5 * std::exp(lt + 0.5 * y - ld);
    };
    m.score_fn = [ratio](double x, double y) {
        const double r = ratio(y);
        if (x > 0) return 1.0 - r;
        if (x < 0) return -r;
        return 0.5 - r;
    };
    m.score_slope_fn = [lt, log_denom](double, double y) {
        const double ld = log_denom(y);
        const double f1 = std::exp(y - ld);
        const double f0 = std::exp(lt + 0.5 * y - ld);
        const double r = f1 + 0.5 * f0;
        return r * r - (f1 + 0.25 * f0);
    };
    return m;
}

inline LinkModel make_normal(double sigma) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("normal: sigma must be positive");
    }
    LinkModel m;
    m.name = "normal";
    m.space = OutcomeSpace::continuous(-std::numeric_limits<double>::infinity(),
                                       std::numeric_limits<double>::infinity());
    m.params = {{"sigma", sigma}};
    const double inv_var = 1.0 / (sigma * sigma);
    const double log_norm = -0.5 * (kLogTwoPi + 2.0 * std::log(sigma));
    m.log_density_fn = [inv_var, log_norm](double x, double y) {
        const double d = x - y;
        return log_norm - 0.5 * d * d * inv_var;
    };
    m.score_fn = [inv_var](double x, double y) { return (x - y) * inv_var; };
    m.score_slope_fn = [inv_var](double, double) { return -inv_var; };
    m.sampler_fn = [sigma](double y, Rng& rng) { return y + sigma * rng.normal(); };
    m.cdf_fn = [sigma](double x, double y) { return normal_cdf((x - y) / sigma); };
    m.score_bounded = false;
    m.integration_halfwidth = 10.0 * sigma;
    return m;
}

// Best-of-3 outcomes under a per-set logistic win probability p = Phi(y):
//   P(X=2) = p^2, P(X=1) = 2 p^2 (1-p), mirrored for losses.
inline LinkModel make_general_bt_bo3() {
    LinkModel m;
    m.name = "general_bt_bo3";
    m.space = OutcomeSpace::finite({-2.0, -1.0, 1.0, 2.0});
    const double log2 = std::log(2.0);
    m.log_density_fn = [log2](double x, double y) {
        if (x > 1.5) return -2.0 * softplus(-y);
        if (x > 0) return log2 - 2.0 * softplus(-y) - softplus(y);
        if (x > -1.5) return log2 - 2.0 * softplus(y) - softplus(-y);
        return -2.0 * softplus(y);
    };
    m.score_fn = [](double x, double y) {
        const double p = logistic(y);
        if (x > 1.5) return 2.0 * (1.0 - p);
        if (x > 0) return 2.0 - 3.0 * p;
        if (x > -1.5) return 1.0 - 3.0 * p;
        return -2.0 * p;
    };
    m.score_slope_fn = [](double x, double y) {
        const double c = (x > 1.5 || x < -1.5) ? 2.0 : 3.0;
        return -c * logistic_deriv(y);
    };
    return m;
}

// Cumulative link model with four outcomes, logistic base and symmetric
// cutpoints {-tau, 0, tau}:
//   P(X=2) = Phi(y - tau), P(X=1) = Phi(y) - Phi(y - tau), mirrored.
inline LinkModel make_clm4(double tau) {
    if (!(tau > 0.0)) {
        throw std::invalid_argument("clm4: tau must be positive");
    }
    LinkModel m;
    m.name = "clm4";
    m.space = OutcomeSpace::finite({-2.0, -1.0, 1.0, 2.0});
    m.params = {{"tau", tau}};
    // Phi(y) - Phi(y - tau) = (1 - e^{-tau}) Phi(y) Phi(tau - y)
    const double log_gap = std::log1p(-std::exp(-tau));
    m.log_density_fn = [tau, log_gap](double x, double y) {
        if (x > 1.5) return -softplus(tau - y);
        if (x > 0) return log_gap - softplus(-y) - softplus(y - tau);
        if (x > -1.5) return log_gap - softplus(y) - softplus(-y - tau);
        return -softplus(tau + y);
    };
    m.score_fn = [tau](double x, double y) {
        if (x > 1.5) return logistic(tau - y);
        if (x > 0) return logistic(-y) - logistic(y - tau);
        if (x > -1.5) return logistic(-y - tau) - logistic(y);
        return -logistic(y + tau);
    };
    m.score_slope_fn = [tau](double x, double y) {
        if (x > 1.5) return -logistic_deriv(y - tau);
        if (x > 0) return -(logistic_deriv(y) + logistic_deriv(y - tau));
        if (x > -1.5) return -(logistic_deriv(y) + logistic_deriv(y + tau));
        return -logistic_deriv(y + tau);
    };
    return m;
}

}  // namespace detail

/// Names of the seven built-in models.
inline const std::vector<std::string>& builtin_model_names() {
    static const std::vector<std::string> names = {
        "bt",       "thurstone_mosteller", "rao_kupper",     "davidson",
        "normal",   "general_bt_bo3",      "clm4"};
    return names;
}

/// Builds a validated built-in model from its spec.
/// Throws std::invalid_argument on unknown names or out-of-range parameters.
inline LinkModel make_model(const ModelSpec& spec) {
    if (spec.name == "bt") {
        detail::reject_unknown_params(spec, {});
        return detail::make_bt();
    }
    if (spec.name == "thurstone_mosteller" || spec.name == "tm") {
        detail::reject_unknown_params(spec, {});
        return detail::make_thurstone_mosteller();
    }
    if (spec.name == "rao_kupper") {
        detail::reject_unknown_params(spec, {"theta"});
        return detail::make_rao_kupper(detail::require_param(spec, "theta"));
    }
    if (spec.name == "davidson") {
        detail::reject_unknown_params(spec, {"theta"});
        return detail::make_davidson(detail::require_param(spec, "theta"));
    }
    if (spec.name == "normal") {
        detail::reject_unknown_params(spec, {"sigma"});
        return detail::make_normal(detail::require_param(spec, "sigma"));
    }
    if (spec.name == "general_bt_bo3") {
        detail::reject_unknown_params(spec, {});
        return detail::make_general_bt_bo3();
    }
    if (spec.name == "clm4") {
        detail::reject_unknown_params(spec, {"tau"});
        return detail::make_clm4(detail::require_param(spec, "tau"));
    }
    throw std::invalid_argument("unknown model name: " + spec.name);
}

inline LinkModel make_model(const std::string& name,
                            const std::map<std::string, double>& params = {}) {
    return make_model(ModelSpec{name, params});
}

}  // namespace paircomp
