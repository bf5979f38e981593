#include "mmldf/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "mmldf/errors.hpp"

namespace mmldf {

void LbfgsConfig::validate() const {
    if (memory < 0) throw ConfigError("LbfgsConfig: memory must be >= 0");
    if (!(wolfe_c1 > 0.0 && wolfe_c1 < 0.5)) {
        throw ConfigError("LbfgsConfig: wolfe_c1 must be in (0, 0.5)");
    }
    if (!(wolfe_c2 > wolfe_c1 && wolfe_c2 < 1.0)) {
        throw ConfigError("LbfgsConfig: wolfe_c2 must be in (c1, 1)");
    }
    if (!(grad_tol > 0.0)) throw ConfigError("LbfgsConfig: grad_tol must be > 0");
    if (max_iters < 1) throw ConfigError("LbfgsConfig: max_iters must be >= 1");
    if (max_line_search_steps < 1) {
        throw ConfigError("LbfgsConfig: max_line_search_steps must be >= 1");
    }
}

namespace {

constexpr double kCurvatureTol = 1e-12;
constexpr double kMaxStep = 1e12;

struct CurvaturePair {
    Eigen::VectorXd s;
    Eigen::VectorXd y;
    double rho;  // 1 / (y^T s)
};

// Two-loop recursion with gamma-scaled identity seed (gamma = 1 when no
// pairs are stored, so memory = 0 degrades to steepest descent).
Eigen::VectorXd two_loop_direction(const std::deque<CurvaturePair>& pairs,
                                   const Eigen::VectorXd& grad) {
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(pairs.size());
    for (size_t i = pairs.size(); i-- > 0;) {
        alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
        q -= alpha[i] * pairs[i].y;
    }
    double gamma = 1.0;
    if (!pairs.empty()) {
        const auto& newest = pairs.back();
        gamma = newest.s.dot(newest.y) / newest.y.squaredNorm();
    }
    Eigen::VectorXd r = gamma * q;
    for (size_t i = 0; i < pairs.size(); ++i) {
        const double beta = pairs[i].rho * pairs[i].y.dot(r);
        r += (alpha[i] - beta) * pairs[i].s;
    }
    return -r;
}

struct TrialPoint {
    double alpha = 0.0;
    double f = std::numeric_limits<double>::infinity();
    double dphi = 0.0;
    Eigen::VectorXd x;
    Eigen::VectorXd g;
};

}  // namespace

std::pair<Eigen::VectorXd, LbfgsReport> lbfgs_minimize(const LbfgsOracle& oracle,
                                                       const Eigen::VectorXd& x0,
                                                       const LbfgsConfig& cfg) {
    cfg.validate();
    LbfgsReport report;
    Eigen::VectorXd x = x0;
    Eigen::VectorXd grad(x.size());

    auto evaluate = [&](const Eigen::VectorXd& point, Eigen::VectorXd& g_out) {
        const double f = oracle(point, g_out);
        ++report.value_evals;
        ++report.gradient_evals;
        if (!std::isfinite(f) || !g_out.allFinite()) {
            throw NumericError("lbfgs: oracle returned non-finite value or gradient");
        }
        return f;
    };

    double f = evaluate(x, grad);
    report.value_trace.push_back(f);

    std::deque<CurvaturePair> pairs;
    const double c1 = cfg.wolfe_c1;
    const double c2 = cfg.wolfe_c2;

    // Strong Wolfe line search (bracket then zoom). Returns true and fills
    // `accepted` on success; on failure `best` holds the lowest trial seen.
    auto line_search = [&](const Eigen::VectorXd& d, double f_at_x, double dphi0,
                           TrialPoint& accepted, TrialPoint& best) -> bool {
        int evals_left = cfg.max_line_search_steps;
        best = TrialPoint{};

        auto probe = [&](double a, TrialPoint& t) {
            t.alpha = a;
            t.x = x + a * d;
            t.g.resize(x.size());
            t.f = evaluate(t.x, t.g);
            t.dphi = t.g.dot(d);
            --evals_left;
            if (t.f < best.f) best = t;
        };

        auto wolfe_ok = [&](const TrialPoint& t) {
            return t.f <= f_at_x + c1 * t.alpha * dphi0 && std::fabs(t.dphi) <= c2 * -dphi0;
        };

        // Zoom phase keeps [lo, hi] with lo the best sufficient-decrease end.
        auto zoom = [&](TrialPoint lo, TrialPoint hi) -> bool {
            while (evals_left > 0) {
                const double w = hi.alpha - lo.alpha;
                if (std::fabs(w) < 1e-16 * std::max(1.0, std::fabs(lo.alpha))) return false;
                // Quadratic interpolation through (lo.f, lo.dphi, hi.f),
                // bisection when it degenerates or leaves the safe interior.
                double a = lo.alpha + 0.5 * w;
                const double denom = 2.0 * (hi.f - lo.f - lo.dphi * w);
                if (denom != 0.0) {
                    const double a_q = lo.alpha - lo.dphi * w * w / denom;
                    const double t = (a_q - lo.alpha) / w;
                    if (std::isfinite(a_q) && t > 0.1 && t < 0.9) a = a_q;
                }
                TrialPoint trial;
                probe(a, trial);
                if (trial.f > f_at_x + c1 * a * dphi0 || trial.f >= lo.f) {
                    hi = trial;
                } else {
                    if (std::fabs(trial.dphi) <= c2 * -dphi0) {
                        accepted = trial;
                        return true;
                    }
                    if (trial.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                    lo = trial;
                }
            }
            return false;
        };

        TrialPoint prev;
        prev.alpha = 0.0;
        prev.f = f_at_x;
        prev.dphi = dphi0;
        double a = 1.0;
        bool first = true;
        while (evals_left > 0 && a < kMaxStep) {
            TrialPoint trial;
            probe(a, trial);
            if (trial.f > f_at_x + c1 * a * dphi0 || (!first && trial.f >= prev.f)) {
                return zoom(prev, trial);
            }
            if (std::fabs(trial.dphi) <= c2 * -dphi0) {
                accepted = trial;
                return true;
            }
            if (trial.dphi >= 0.0) {
                return zoom(trial, prev);
            }
            prev = trial;
            a *= 2.0;
            first = false;
        }
        return false;
    };

    while (report.iterations < cfg.max_iters) {
        if (grad.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
            report.status = LbfgsStatus::gradient_converged;
            break;
        }
        Eigen::VectorXd d = two_loop_direction(pairs, grad);
        double dphi0 = d.dot(grad);
        if (dphi0 >= 0.0) {
            pairs.clear();
            d = -grad;
            dphi0 = d.dot(grad);
        }

        TrialPoint accepted, best;
        if (!line_search(d, f, dphi0, accepted, best)) {
            if (best.f < f) {
                x = best.x;
                f = best.f;
                grad = best.g;
                report.value_trace.push_back(f);
            }
            report.status = LbfgsStatus::line_search_failed;
            break;
        }

        report.steps.push_back({accepted.alpha, f, dphi0, accepted.f, accepted.dphi});
        Eigen::VectorXd s = accepted.x - x;
        Eigen::VectorXd y = accepted.g - grad;
        const double sy = s.dot(y);
        if (cfg.memory > 0 && sy > kCurvatureTol * s.norm() * y.norm()) {
            pairs.push_back({std::move(s), std::move(y), 1.0 / sy});
            if (static_cast<int>(pairs.size()) > cfg.memory) pairs.pop_front();
        }
        x = std::move(accepted.x);
        f = accepted.f;
        grad = std::move(accepted.g);
        report.value_trace.push_back(f);
        ++report.iterations;
    }

    if (report.status == LbfgsStatus::max_iterations &&
        grad.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
        report.status = LbfgsStatus::gradient_converged;
    }
    report.final_grad_norm = grad.lpNorm<Eigen::Infinity>();
    return {std::move(x), std::move(report)};
}

}  // namespace mmldf
