#pragma once

// Scenario generation, scripted expert demonstrations, attribute noise and the
// line-delimited corpus format.

#include <cstdint>
#include <string>
#include <vector>

#include "taskseq/world.hpp"

namespace taskseq {

struct SequenceExample {
    std::string scenario_id;
    std::string environment_id;
    TaskSpec task;
    WorldState initial_state;
    std::vector<Action> steps;

    bool operator==(const SequenceExample&) const = default;
};

struct GeneratorConfig {
    int n_environments = 13;
    int min_objects = 15;
    int max_objects = 25;
    std::vector<Task> tasks{Task::Stir, Task::PickAndPlace, Task::Pour, Task::PourTo, Task::ThrowAway};
    std::uint64_t seed = 7;
    int min_distractors = 2;
    int max_distractors = 6;
    int n_sequences = 127;
    /// Share of sequences that start with the robot still holding the container
    /// from a preceding pour (the situation a chained recipe produces).
    double held_start_fraction = 0.2;
};

/// Furniture plus the environment's object set in its canonical arrangement.
WorldState generate_environment(const GeneratorConfig& config, int index);

/// Same object set and furniture as generate_environment(config, index), with
/// the small objects re-arranged by `variant` (variant 0 is the canonical one).
WorldState arrange_environment(const GeneratorConfig& config, int index, std::uint64_t variant);

/// Scripted policy for one task; throws ExpertError when it cannot solve the scenario.
std::vector<Action> expert_plan(const WorldState& state, const TaskSpec& task);

/// Plans, replays and checks the goal; throws ExpertError on failure.
SequenceExample expert_demonstrate(const WorldState& state, const TaskSpec& task, std::string scenario_id,
                                   std::string environment_id);

std::vector<SequenceExample> generate_corpus(const GeneratorConfig& config);

/// Recipe scenarios: task lists chained on one initial state.
struct RecipeScenario {
    std::string name;
    std::string environment_id;
    WorldState initial_state;
    std::vector<TaskSpec> tasks;
};

/// The four recipes on `environments` held-out environments each.
std::vector<RecipeScenario> generate_recipes(const GeneratorConfig& config, int environments = 3);

/// Flips every binary attribute flag independently with probability p.
WorldState perturb_state(const WorldState& state, double p, std::uint64_t seed);
std::vector<SequenceExample> perturb_attributes(const std::vector<SequenceExample>& corpus, double p,
                                                std::uint64_t seed);

/// Replays and checks the goal; throws CorpusIntegrityError naming the failing step.
void validate_example(const SequenceExample& example);

// --- corpus file ------------------------------------------------------------

inline constexpr int kCorpusFormatVersion = 1;

std::string example_to_line(const SequenceExample& example);
SequenceExample example_from_line(const std::string& line, std::size_t line_number = 1);

void save_corpus(const std::vector<SequenceExample>& corpus, const std::string& path);
std::vector<SequenceExample> load_corpus(const std::string& path);

/// FNV-1a over the serialized corpus, hex encoded.
std::string corpus_hash(const std::vector<SequenceExample>& corpus);

}  // namespace taskseq
