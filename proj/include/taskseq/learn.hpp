#pragma once

// 1-slack structural SVM: cutting-plane outer loop over an exactly solved dual QP.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "taskseq/model.hpp"

namespace taskseq {

struct SequenceExample;

struct TrainConfig {
    double C = 1000.0;
    double epsilon = 0.01;
    int max_iterations = 500;
    double qp_tolerance = 1e-8;
    std::uint64_t seed = 0;

    std::string to_json() const;
};

struct CuttingPlaneConstraint {
    std::vector<double> delta_psi;
    double mean_loss = 0.0;
};

struct QpSolution {
    std::vector<double> w;
    double xi = 0.0;
    std::vector<double> alpha;
    double objective = 0.0;  // primal: 0.5 |w|^2 + C xi
    int sweeps = 0;
};

/// min 0.5|w|^2 + C xi  s.t.  w.dpsi_j >= loss_j - xi, xi >= 0.
/// Dual: alpha >= 0, sum alpha <= C, w = sum alpha_j dpsi_j.
QpSolution solve_qp(const std::vector<CuttingPlaneConstraint>& working_set, double C, double qp_tolerance);

/// Incremental form used by training: keeps the Gram matrix and warm-starts alpha.
class DualQp {
public:
    DualQp(double C, double tolerance);

    void add(CuttingPlaneConstraint constraint);
    const QpSolution& solve();

    std::size_t size() const { return constraints_.size(); }
    const QpSolution& solution() const { return solution_; }

private:
    double C_;
    double tol_;
    std::vector<CuttingPlaneConstraint> constraints_;
    std::vector<std::vector<double>> gram_;
    std::vector<double> alpha_;
    QpSolution solution_;
};

/// One training step: state before the action, ground-truth history, truth.
struct TrainingStep {
    WorldState state;
    TaskSpec task;
    History history;
    Action truth;
    std::vector<Action> candidates;  // actions executable in `state`
};

/// Replays every sequence; throws CorpusIntegrityError on a precondition failure.
std::vector<TrainingStep> replay_steps(const std::vector<SequenceExample>& corpus);

struct IterationLog {
    int iteration = 0;
    double objective = 0.0;
    double xi = 0.0;
    double violation = 0.0;
    double mean_loss = 0.0;
    std::size_t working_set = 0;

    std::string to_line() const;  // key=value text
};

struct TrainReport {
    int iterations = 0;
    bool converged = false;
    double final_objective = 0.0;
    double final_violation = 0.0;
    std::vector<double> dual_values;
    std::vector<IterationLog> log;
    bool dual_feasible_throughout = true;
};

struct TrainResult {
    WeightVector w;
    TrainReport report;
};

/// Per-step separation oracle: returns the violating candidate's features
/// accumulated into the constraint and its loss.
struct Separation {
    CuttingPlaneConstraint constraint;
    double violation = 0.0;
};

/// Most violated 1-slack constraint for the full structured model.
Separation most_violated(const WeightVector& w, double xi, const std::vector<TrainingStep>& steps);

/// Same for the multiclass baseline (argument-free candidates, 0/1 primitive loss).
Separation most_violated_multiclass(const WeightVector& w, double xi, const std::vector<TrainingStep>& steps);

using SeparationOracle = std::function<Separation(const WeightVector&, double, const std::vector<TrainingStep>&)>;

TrainResult train_with_oracle(const std::vector<TrainingStep>& steps, const TrainConfig& config,
                              const SeparationOracle& oracle,
                              const std::function<void(const IterationLog&)>& on_iteration = {});

TrainResult train(const std::vector<SequenceExample>& corpus, const TrainConfig& config,
                  const std::function<void(const IterationLog&)>& on_iteration = {});

TrainResult train_multiclass(const std::vector<SequenceExample>& corpus, const TrainConfig& config,
                             const std::function<void(const IterationLog&)>& on_iteration = {});

}  // namespace taskseq
