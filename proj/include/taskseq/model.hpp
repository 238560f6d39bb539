#pragma once

// Linear score over the joint feature map, exact inference by enumeration,
// structured loss, and closed-loop rollout.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "taskseq/features.hpp"
#include "taskseq/world.hpp"

namespace taskseq {

using WeightVector = std::vector<double>;

struct ScoredAction {
    Action action;
    double score = 0.0;
};

double score(const WeightVector& w, const WorldState& state, const TaskSpec& task, const Action& action,
             const History& history);

/// Per-block contributions w_b . phi_b, in layout::kBlocks order; they sum to score().
std::array<double, layout::kBlocks.size()> block_scores(const WeightVector& w, const WorldState& state,
                                                        const TaskSpec& task, const Action& action,
                                                        const History& history);

/// Primitive enum order, then a1 id, then a2 id; DONE last.
std::vector<Action> enumerate_actions(const WorldState& state);

/// Precomputes the per-object and per-primitive pieces of the score for one
/// (state, task, history) so each candidate costs O(1). Exact: the score of any
/// action equals score() up to floating-point summation order.
class ScoreTable {
public:
    ScoreTable(const WeightVector& w, const WorldState& state, const TaskSpec& task, const History& history);

    double operator()(const Action& action) const;

    const std::vector<Action>& actions() const { return actions_; }

private:
    std::size_t slot(ObjectId id) const;

    const WeightVector& w_;
    std::vector<ObjectId> ids_;
    std::vector<Action> actions_;
    std::array<double, kPrimitiveCount> prim_{};
    std::vector<double> unary1_, unary2_;  // per object slot
    std::vector<std::array<double, kPrimitiveCount>> pair1_, pair2_;  // (object, primitive)
    std::vector<std::uint8_t> collide_;  // slot x slot
    double w_collision_ = 0.0;
};

ScoredAction predict(const WeightVector& w, const WorldState& state, const TaskSpec& task, const History& history);

std::vector<ScoredAction> top_k(const WeightVector& w, const WorldState& state, const TaskSpec& task,
                                const History& history, std::size_t k);

/// 1(p != p') + 1(a1 != a1') + 1(a2 != a2').
double loss(const Action& truth, const Action& candidate);

ScoredAction loss_augmented_argmax(const WeightVector& w, const WorldState& state, const TaskSpec& task,
                                   const History& history, const Action& truth);

/// Same maximization restricted to `candidates` (first wins on ties).
ScoredAction loss_augmented_argmax(const WeightVector& w, const WorldState& state, const TaskSpec& task,
                                   const History& history, const Action& truth, const std::vector<Action>& candidates);

/// Enumerated actions whose preconditions hold in `state`, in enumeration order.
std::vector<Action> feasible_actions(const WorldState& state);

/// Argument-free prediction over the eight primitives (multiclass baseline).
ScoredAction predict_primitive_only(const WeightVector& w, const WorldState& state, const TaskSpec& task,
                                    const History& history);

/// Highest-ranked actions whose preconditions hold in `world`, scored on `perceived`.
std::vector<ScoredAction> executable_top_k(const WeightVector& w, const WorldState& world, const WorldState& perceived,
                                           const TaskSpec& task, const History& history, std::size_t k);

class RolloutAborted : public Error {
public:
    RolloutAborted(const std::string& what, std::vector<Action> partial)
        : Error(what), partial_(std::move(partial)) {}
    const std::vector<Action>& partial() const { return partial_; }

private:
    std::vector<Action> partial_;
};

struct RolloutOptions {
    int max_steps = 25;
    /// Number of executable proposals shown to `choose`.
    std::size_t k = 1;
    /// Picks an index into the proposals; nullopt keeps the top one.
    std::function<std::optional<std::size_t>(int step, const std::vector<ScoredAction>& proposals)> choose;
    /// Maps the true state to what the model observes (attribute noise). Identity when empty.
    std::function<WorldState(const WorldState&)> perceive;
};

struct RolloutResult {
    std::vector<Action> actions;
    WorldState final_state;
    bool reached_done = false;
};

RolloutResult rollout(const WeightVector& w, const WorldState& initial, const TaskSpec& task,
                      const RolloutOptions& options = {});

// --- model file ---------------------------------------------------------------

struct ModelFile {
    WeightVector weights;
    std::string config_json;  // training config, opaque to the loader
};

void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

}  // namespace taskseq
