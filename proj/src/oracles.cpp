#include "gridshare/oracles.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace gridshare {

namespace {

class Tracker {
public:
    explicit Tracker(const LossFn& loss) : loss_(loss) {}

    double eval(const Eigen::VectorXd& x) const {
        const double v = loss_(x);
        if (!std::isfinite(v)) throw std::domain_error("oracle: loss is not finite");
        return v;
    }

    bool consider(const Eigen::VectorXd& x) {
        const double v = eval(x);
        if (best_.size() == 0 || v < best_value_) {
            best_ = x;
            best_value_ = v;
            return true;
        }
        return false;
    }

    const Eigen::VectorXd& best() const { return best_; }
    double best_value() const { return best_value_; }

private:
    const LossFn& loss_;
    Eigen::VectorXd best_;
    double best_value_ = 0.0;
};

double axis_value(double lo, double hi, std::size_t k, std::size_t points) {
    if (points < 2) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
}

void full_grid(Tracker& tracker, const Box& box, std::size_t points) {
    const std::size_t dim = box.dim();
    Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
    if (dim == 1) {
        for (std::size_t a = 0; a < points; ++a) {
            x[0] = axis_value(box.lower[0], box.upper[0], a, points);
            tracker.consider(x);
        }
        return;
    }
    for (std::size_t a = 0; a < points; ++a) {
        x[0] = axis_value(box.lower[0], box.upper[0], a, points);
        for (std::size_t b = 0; b < points; ++b) {
            x[1] = axis_value(box.lower[1], box.upper[1], b, points);
            tracker.consider(x);
        }
    }
}

// one-sided differences, pointing back into the box at the upper face
Eigen::VectorXd difference_subgradient(const Tracker& tracker, const Eigen::VectorXd& x, const Box& box) {
    const double fx = tracker.eval(x);
    Eigen::VectorXd g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = 1e-7 * std::max(1.0, box.upper[k] - box.lower[k]);
        Eigen::VectorXd y = x;
        if (x[k] + h <= box.upper[k]) {
            y[k] += h;
            g[k] = (tracker.eval(y) - fx) / h;
        } else {
            y[k] -= h;
            g[k] = (fx - tracker.eval(y)) / h;
        }
    }
    return g;
}

}  // namespace

Eigen::VectorXd per_round_minimizer(const LossFn& loss, const Box& box, double tol, const OracleOptions& options) {
    if (!(tol > 0.0)) throw std::invalid_argument("oracle: tolerance must be positive");
    Tracker tracker(loss);
    tracker.consider(box.center());
    tracker.consider(box.upper);
    tracker.consider(box.lower);
    if (box.dim() <= 2) full_grid(tracker, box, options.grid_points);

    const double width = (box.upper - box.lower).norm();
    Eigen::VectorXd x = tracker.best();
    for (std::size_t k = 1; k <= options.subgradient_iterations; ++k) {
        const Eigen::VectorXd g = difference_subgradient(tracker, x, box);
        const double norm = g.norm();
        if (norm == 0.0) break;
        const double step = 0.5 * width / std::sqrt(static_cast<double>(k));
        x = (x - step * g / norm).cwiseMax(box.lower).cwiseMin(box.upper);
        tracker.consider(x);
    }

    Eigen::VectorXd lo = box.lower;
    Eigen::VectorXd hi = box.upper;
    const std::size_t points = std::max<std::size_t>(options.grid_points, 3);
    for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
        const double before = tracker.best_value();
        double widest = 0.0;
        for (Eigen::Index c = 0; c < lo.size(); ++c) {
            Eigen::VectorXd y = tracker.best();
            for (std::size_t k = 0; k < points; ++k) {
                y[c] = axis_value(lo[c], hi[c], k, points);
                tracker.consider(y);
            }
            const double h = (hi[c] - lo[c]) / static_cast<double>(points - 1);
            const double v = tracker.best()[c];
            lo[c] = std::max(box.lower[c], v - 2.0 * h);
            hi[c] = std::min(box.upper[c], v + 2.0 * h);
            widest = std::max(widest, hi[c] - lo[c]);
        }
        if (before - tracker.best_value() < 1e-3 * tol && widest < tol) break;
    }
    return tracker.best();
}

Eigen::VectorXd best_fixed_action(std::span<const LossFn> losses, const Box& box, double tol,
                                  const OracleOptions& options) {
    if (losses.empty()) throw std::invalid_argument("best_fixed_action: no rounds given");
    const LossFn summed = [losses](const Eigen::VectorXd& x) {
        double total = 0.0;
        for (const auto& f : losses) total += f(x);
        return total;
    };
    return per_round_minimizer(summed, box, tol, options);
}

double path_length(std::span<const Eigen::VectorXd> sequence) {
    double total = 0.0;
    for (std::size_t t = 1; t < sequence.size(); ++t) total += (sequence[t] - sequence[t - 1]).norm();
    return total;
}

void write_comparators_csv(const std::filesystem::path& path, std::span<const ComparatorSequence> per_node) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "t,node,coord_index,value\n";
    char buf[64];
    for (std::size_t node = 0; node < per_node.size(); ++node) {
        const auto& points = per_node[node].points;
        for (std::size_t t = 0; t < points.size(); ++t) {
            for (Eigen::Index c = 0; c < points[t].size(); ++c) {
                auto res = std::to_chars(buf, buf + sizeof(buf), points[t][c]);
                out << (t + 1) << ',' << node << ',' << c << ',' << std::string_view(buf, res.ptr - buf) << '\n';
            }
        }
    }
}

// ---------------------------------------------------------------------------

FrozenLoss::FrozenLoss(std::size_t dim) : slots_(dim) {
    if (dim == 0) throw std::invalid_argument("FrozenLoss: dimension must be positive");
}

void FrozenLoss::add_round(std::span<const double> other_inflow, std::span<const double> demand,
                           std::span<const double> own_discount) {
    const std::size_t dim = slots_.size();
    if (other_inflow.size() != dim || demand.size() != dim || (!own_discount.empty() && own_discount.size() != dim)) {
        throw std::invalid_argument("FrozenLoss: slot count mismatch");
    }
    for (std::size_t j = 0; j < dim; ++j) {
        if (!(demand[j] > 0.0)) throw std::invalid_argument("FrozenLoss: demand must be positive");
        const double a = other_inflow[j] / demand[j];
        const double b = (own_discount.empty() ? 1.0 : own_discount[j]) / demand[j];
        slots_[j].terms.push_back(Term{(1.0 - a) / b, a, b});
    }
    ++rounds_;
    finalized_ = false;
}

void FrozenLoss::finalize() {
    for (Slot& s : slots_) {
        std::sort(s.terms.begin(), s.terms.end(), [](const Term& l, const Term& r) { return l.threshold < r.threshold; });
        s.offset_prefix.assign(s.terms.size() + 1, 0.0);
        s.slope_prefix.assign(s.terms.size() + 1, 0.0);
        for (std::size_t k = 0; k < s.terms.size(); ++k) {
            s.offset_prefix[k + 1] = s.offset_prefix[k] + s.terms[k].offset;
            s.slope_prefix[k + 1] = s.slope_prefix[k] + s.terms[k].slope;
        }
    }
    finalized_ = true;
}

double FrozenLoss::operator()(const Eigen::VectorXd& x) const {
    if (!finalized_) throw std::logic_error("FrozenLoss: call finalize() before evaluating");
    if (static_cast<std::size_t>(x.size()) != slots_.size()) throw std::invalid_argument("FrozenLoss: dimension mismatch");
    double satisfied = 0.0;
    for (std::size_t j = 0; j < slots_.size(); ++j) {
        const Slot& s = slots_[j];
        const double v = x[static_cast<Eigen::Index>(j)];
        // terms with threshold <= v are saturated at 1
        const auto k = static_cast<std::size_t>(
            std::upper_bound(s.terms.begin(), s.terms.end(), v,
                             [](double val, const Term& term) { return val < term.threshold; }) -
            s.terms.begin());
        const std::size_t n = s.terms.size();
        satisfied += static_cast<double>(k) + (s.offset_prefix[n] - s.offset_prefix[k]) +
                     v * (s.slope_prefix[n] - s.slope_prefix[k]);
    }
    return static_cast<double>(rounds_) - satisfied / static_cast<double>(slots_.size());
}

// ---------------------------------------------------------------------------

HyperSchedule bansap_schedule(const ProblemConstants& c, std::size_t horizon, double freeze_fraction) {
    if (!(freeze_fraction > 0.0 && freeze_fraction <= 1.0)) {
        throw std::invalid_argument("bansap: freeze fraction must lie in (0,1]");
    }
    const auto freeze_at = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(freeze_fraction * static_cast<double>(horizon))));
    const ScheduleValues frozen = HyperSchedule::closed_form(c, 0.0).at(freeze_at);
    return HyperSchedule::constant(frozen, c.inner_radius);
}

AgentState bansap_round(const AgentState& state, const HyperSchedule& constants, const Feedback& observed,
                        const Box& box, double generation, Rng& rng) {
    return drs_round(state, constants, observed, box, generation, DrsOptions{}, rng);
}

}  // namespace gridshare
