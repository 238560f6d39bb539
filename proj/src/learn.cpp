#include "taskseq/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "taskseq/corpus.hpp"

namespace taskseq {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Safety net against a stalled solve; the pairwise step always makes progress.
constexpr long kMaxPairUpdates = 20'000'000;

}  // namespace

std::string TrainConfig::to_json() const {
    nlohmann::json j;
    j["C"] = C;
    j["epsilon"] = epsilon;
    j["max_iterations"] = max_iterations;
    j["qp_tolerance"] = qp_tolerance;
    j["seed"] = seed;
    return j.dump();
}

// --- QP -------------------------------------------------------------------

DualQp::DualQp(double C, double tolerance) : C_(C), tol_(tolerance) {
    if (!(C > 0)) throw std::invalid_argument("C must be positive");
    if (!(tolerance > 0)) throw std::invalid_argument("qp tolerance must be positive");
}

void DualQp::add(CuttingPlaneConstraint constraint) {
    if (!constraints_.empty() && constraint.delta_psi.size() != constraints_.front().delta_psi.size())
        throw std::invalid_argument("constraint dimension mismatch");
    const std::size_t n = constraints_.size();
    std::vector<double> row(n + 1);
    for (std::size_t j = 0; j < n; ++j) {
        row[j] = dot(constraint.delta_psi, constraints_[j].delta_psi);
        gram_[j].push_back(row[j]);
    }
    row[n] = dot(constraint.delta_psi, constraint.delta_psi);
    gram_.push_back(std::move(row));
    constraints_.push_back(std::move(constraint));
    alpha_.push_back(0.0);
}

const QpSolution& DualQp::solve() {
    const std::size_t n = constraints_.size();
    if (n == 0) throw std::invalid_argument("solve_qp needs a non-empty working set");

    // Index n is the slack variable alpha_0 = C - sum(alpha): zero loss, zero direction.
    std::vector<double> a(alpha_);
    double used = 0.0;
    for (double v : a) used += v;
    a.push_back(std::max(0.0, C_ - used));

    auto gram = [&](std::size_t i, std::size_t j) { return (i == n || j == n) ? 0.0 : gram_[i][j]; };
    auto lossv = [&](std::size_t i) { return i == n ? 0.0 : constraints_[i].mean_loss; };

    // gradient of the dual objective sum a_j L_j - 0.5 a'Ga
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += gram(i, j) * a[j];
        g[i] = lossv(i) - s;
    }

    long updates = 0;
    for (; updates < kMaxPairUpdates; ++updates) {
        std::size_t up = 0, down = n + 1;
        for (std::size_t i = 0; i <= n; ++i) {
            if (g[i] > g[up]) up = i;
            if (a[i] > 0.0 && (down == n + 1 || g[i] < g[down])) down = i;
        }
        if (down == n + 1 || g[up] - g[down] <= tol_) break;

        const double eta = gram(up, up) + gram(down, down) - 2.0 * gram(up, down);
        double step = eta > 0.0 ? (g[up] - g[down]) / eta : a[down];
        step = std::min(step, a[down]);
        if (step <= 0.0) break;
        a[up] += step;
        a[down] -= step;
        if (a[down] < 1e-300) a[down] = 0.0;
        for (std::size_t i = 0; i <= n; ++i) g[i] -= step * (gram(i, up) - gram(i, down));
    }

    QpSolution sol;
    sol.sweeps = static_cast<int>(std::min<long>(updates, std::numeric_limits<int>::max()));
    sol.alpha.assign(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n));
    alpha_ = sol.alpha;
    const std::size_t dim = constraints_.front().delta_psi.size();
    sol.w.assign(dim, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        if (sol.alpha[j] != 0.0)
            for (std::size_t d = 0; d < dim; ++d) sol.w[d] += sol.alpha[j] * constraints_[j].delta_psi[d];
    double xi = 0.0;
    for (const auto& c : constraints_) xi = std::max(xi, c.mean_loss - dot(sol.w, c.delta_psi));
    sol.xi = xi;
    sol.objective = 0.5 * dot(sol.w, sol.w) + C_ * xi;
    solution_ = std::move(sol);
    return solution_;
}

QpSolution solve_qp(const std::vector<CuttingPlaneConstraint>& working_set, double C, double qp_tolerance) {
    DualQp qp(C, qp_tolerance);
    for (const auto& c : working_set) qp.add(c);
    return qp.solve();
}

// --- training -------------------------------------------------------------

std::vector<TrainingStep> replay_steps(const std::vector<SequenceExample>& corpus) {
    std::vector<TrainingStep> out;
    for (const auto& ex : corpus) {
        WorldState state = ex.initial_state;
        History history;
        for (std::size_t t = 0; t < ex.steps.size(); ++t) {
            const Action& a = ex.steps[t];
            out.push_back({state, ex.task, history, a, feasible_actions(state)});
            const auto pre = check_preconditions(state, a);
            if (!pre)
                throw CorpusIntegrityError(ex.scenario_id, t,
                                           a.to_string() + " not executable (" + std::string(reason_name(pre.reason)) + ")");
            state = apply_primitive(state, a);
            history = history.advanced(a);
        }
    }
    return out;
}

std::string IterationLog::to_line() const {
    std::ostringstream out;
    out.precision(10);
    out << "iteration=" << iteration << " objective=" << objective << " xi=" << xi << " violation=" << violation
        << " mean_loss=" << mean_loss << " working_set=" << working_set;
    return out.str();
}

Separation most_violated(const WeightVector& w, double xi, const std::vector<TrainingStep>& steps) {
    Separation sep;
    sep.constraint.delta_psi.assign(layout::kDimension, 0.0);
    if (steps.empty()) return sep;
    const double scale = 1.0 / static_cast<double>(steps.size());
    double total_loss = 0.0;
    for (const auto& s : steps) {
        const ScoredAction v = loss_augmented_argmax(w, s.state, s.task, s.history, s.truth, s.candidates);
        const double l = loss(s.truth, v.action);
        if (l == 0.0) continue;
        total_loss += l;
        accumulate(sep.constraint.delta_psi, scale, s.state, s.task, s.truth, s.history);
        accumulate(sep.constraint.delta_psi, -scale, s.state, s.task, v.action, s.history);
    }
    sep.constraint.mean_loss = total_loss * scale;
    sep.violation = sep.constraint.mean_loss - dot(w, sep.constraint.delta_psi) - xi;
    return sep;
}

Separation most_violated_multiclass(const WeightVector& w, double xi, const std::vector<TrainingStep>& steps) {
    Separation sep;
    sep.constraint.delta_psi.assign(layout::kDimension, 0.0);
    if (steps.empty()) return sep;
    const double scale = 1.0 / static_cast<double>(steps.size());
    double total_loss = 0.0;
    for (const auto& s : steps) {
        const Action truth{s.truth.primitive, kNullObject, kNullObject};
        Action best = truth;
        double best_value = -std::numeric_limits<double>::infinity();
        for (int pi = 0; pi < kPrimitiveCount; ++pi) {
            const Action cand{static_cast<Primitive>(pi), kNullObject, kNullObject};
            const double value = score(w, s.state, s.task, cand, s.history) + (pi == static_cast<int>(truth.primitive) ? 0.0 : 1.0);
            if (value > best_value) {
                best_value = value;
                best = cand;
            }
        }
        if (best.primitive == truth.primitive) continue;
        total_loss += 1.0;
        accumulate(sep.constraint.delta_psi, scale, s.state, s.task, truth, s.history);
        accumulate(sep.constraint.delta_psi, -scale, s.state, s.task, best, s.history);
    }
    sep.constraint.mean_loss = total_loss * scale;
    sep.violation = sep.constraint.mean_loss - dot(w, sep.constraint.delta_psi) - xi;
    return sep;
}

TrainResult train_with_oracle(const std::vector<TrainingStep>& steps, const TrainConfig& config,
                              const SeparationOracle& oracle, const std::function<void(const IterationLog&)>& on_iteration) {
    if (steps.empty()) throw std::invalid_argument("training corpus is empty");
    if (config.max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");

    TrainResult result;
    result.w.assign(layout::kDimension, 0.0);
    DualQp qp(config.C, config.qp_tolerance);
    double xi = 0.0;
    double objective = 0.0;

    for (int it = 1; it <= config.max_iterations; ++it) {
        Separation sep = oracle(result.w, xi, steps);
        IterationLog entry;
        entry.iteration = it;
        entry.violation = sep.violation;
        entry.mean_loss = sep.constraint.mean_loss;
        result.report.iterations = it;
        result.report.final_violation = sep.violation;

        if (sep.violation <= config.epsilon) {
            result.report.converged = true;
            entry.objective = objective;
            entry.xi = xi;
            entry.working_set = qp.size();
            result.report.log.push_back(entry);
            if (on_iteration) on_iteration(entry);
            break;
        }

        qp.add(std::move(sep.constraint));
        const QpSolution& sol = qp.solve();
        double sum = 0.0;
        for (double a : sol.alpha) {
            if (a < 0.0) result.report.dual_feasible_throughout = false;
            sum += a;
        }
        if (sum > config.C * (1.0 + 1e-12)) result.report.dual_feasible_throughout = false;

        result.w = sol.w;
        xi = sol.xi;
        objective = sol.objective;
        entry.objective = objective;
        entry.xi = xi;
        entry.working_set = qp.size();
        result.report.log.push_back(entry);
        if (on_iteration) on_iteration(entry);
    }

    result.report.final_objective = objective;
    result.report.dual_values = qp.size() > 0 ? qp.solution().alpha : std::vector<double>{};
    return result;
}

TrainResult train(const std::vector<SequenceExample>& corpus, const TrainConfig& config,
                  const std::function<void(const IterationLog&)>& on_iteration) {
    return train_with_oracle(replay_steps(corpus), config, most_violated, on_iteration);
}

TrainResult train_multiclass(const std::vector<SequenceExample>& corpus, const TrainConfig& config,
                             const std::function<void(const IterationLog&)>& on_iteration) {
    return train_with_oracle(replay_steps(corpus), config, most_violated_multiclass, on_iteration);
}

}  // namespace taskseq
