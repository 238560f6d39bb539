#pragma once

// Experiment harness: cross-validation, per-step and sequence metrics,
// baselines, attribute noise, oracle feedback and recipe chaining.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "taskseq/corpus.hpp"
#include "taskseq/learn.hpp"
#include "taskseq/model.hpp"

namespace taskseq {

enum class FeedbackMode { None, OracleTopK, Interactive };
enum class FeedbackScope { FirstStep, AllSteps };

struct FeedbackPolicy {
    FeedbackMode mode = FeedbackMode::None;
    std::size_t k = 1;
    FeedbackScope scope = FeedbackScope::FirstStep;

    bool in_scope(int step) const { return scope == FeedbackScope::AllSteps || step == 0; }
};

struct PrimitiveMetrics {
    double prim_accuracy = 0.0;  // percent
    double arg_accuracy = 0.0;   // percent, primitive and both arguments right
    std::size_t support = 0;
};

using ConfusionMatrix = std::array<std::array<std::size_t, kPrimitiveCount>, kPrimitiveCount>;  // [truth][predicted]

/// Throws std::invalid_argument on a length mismatch.
ConfusionMatrix confusion_matrix(const std::vector<Primitive>& predictions, const std::vector<Primitive>& truths);

struct StepPrediction {
    std::string scenario_id;
    int fold = 0;
    std::size_t step = 0;
    Action truth;
    Action predicted;
    std::vector<ScoredAction> top;
};

struct SequencePrediction {
    std::string scenario_id;
    int fold = 0;
    std::vector<Action> truth;
    std::vector<Action> predicted;
    std::string error;  // set when the rollout aborted

    bool prim_only_correct() const;
    bool full_correct() const;
};

struct MetricsReport {
    std::array<PrimitiveMetrics, kPrimitiveCount> per_primitive{};
    double macro_prim = 0.0;  // over the seven non-DONE primitives
    double macro_arg = 0.0;
    double sequence_prim_only = 0.0;
    double sequence_full = 0.0;
    double teacher_forced_step_accuracy = 0.0;  // full action, all steps
    double closed_loop_step_accuracy = 0.0;
    ConfusionMatrix confusion{};
    std::vector<StepPrediction> steps;
    std::vector<SequencePrediction> sequences;

    nlohmann::json to_json() const;
    /// One JSON line per step prediction, then one per sequence.
    std::string prediction_dump() const;
};

/// Aggregates raw predictions; every number in a report comes from here.
MetricsReport summarize(std::vector<StepPrediction> steps, std::vector<SequencePrediction> sequences);

/// Parses prediction_dump() output back into raw records.
MetricsReport load_prediction_dump(const std::string& text);

struct CvConfig {
    TrainConfig train;
    int folds = 6;
    std::uint64_t seed = 0;
    int max_steps = 25;
    std::size_t dump_top_k = 3;
};

/// Seeded split of n sequences into `folds` groups of near-equal size.
std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed);

struct FoldModels {
    std::vector<int> assignment;
    std::vector<WeightVector> weights;
    std::vector<TrainReport> reports;
};

FoldModels train_folds(const std::vector<SequenceExample>& corpus, const CvConfig& config, bool multiclass = false);

/// Model-side options for evaluate_folds.
struct EvalOptions {
    double noise = 0.0;
    std::uint64_t noise_seed = 0;
    FeedbackPolicy feedback;
    bool per_step = true;
};

MetricsReport evaluate_folds(const std::vector<SequenceExample>& corpus, const FoldModels& models,
                             const CvConfig& config, const EvalOptions& options = {});

MetricsReport cross_validate(const std::vector<SequenceExample>& corpus, const CvConfig& config);

/// Argument-free baseline; sequence metrics are not defined for it and stay 0.
MetricsReport multiclass_baseline(const std::vector<SequenceExample>& corpus, const CvConfig& config);

/// Uniform draw over enumerate_actions.
class ChanceBaseline {
public:
    explicit ChanceBaseline(std::uint64_t seed);
    Action operator()(const WorldState& state);

private:
    std::uint64_t state_;
};

/// Chance draws along the ground-truth trajectory; a sequence counts only if every draw matches.
MetricsReport chance_report(const std::vector<SequenceExample>& corpus, std::uint64_t seed);

/// Perception overlay: the true state with binary flags taken from a perturbed copy of `initial`.
std::function<WorldState(const WorldState&)> noise_overlay(const WorldState& initial, double p, std::uint64_t seed);

struct NoisePoint {
    double p = 0.0;
    double mean_sequence_full = 0.0;
    std::vector<double> per_seed;
};

std::vector<NoisePoint> noise_sweep(const std::vector<SequenceExample>& corpus, const FoldModels& models,
                                    const CvConfig& config, const std::vector<double>& probabilities, int seeds = 5);

/// Closed-loop accuracy under a feedback policy; throws SessionError for INTERACTIVE.
MetricsReport feedback_eval(const std::vector<SequenceExample>& corpus, const FoldModels& models,
                            const CvConfig& config, const FeedbackPolicy& policy);

struct ChainResult {
    bool success = false;
    std::vector<std::vector<Action>> trace;  // one list per task
    std::vector<bool> goals;
    WorldState final_state;
};

/// Rolls out each task in turn on the state left by the previous one. With
/// ORACLE_TOPK the truth is the expert plan recomputed from the current state.
/// An aborted rollout propagates as RolloutAborted with the flattened trace.
ChainResult chain_tasks(const std::vector<TaskSpec>& recipe, const WorldState& initial, const WeightVector& w,
                        const FeedbackPolicy& policy = {}, int max_steps = 25);

struct RecipeOutcome {
    std::string name;
    std::string environment_id;
    bool success = false;
    std::size_t primitives = 0;
    std::string error;
};

std::vector<RecipeOutcome> run_recipes(const std::vector<RecipeScenario>& recipes, const WeightVector& w,
                                       const FeedbackPolicy& policy = {});

nlohmann::json to_json(const std::vector<NoisePoint>& sweep);
nlohmann::json to_json(const std::vector<RecipeOutcome>& outcomes);

}  // namespace taskseq
