#pragma once

// Random (state, task, history) samples taken along generated demonstrations.

#include <random>

#include "taskseq/corpus.hpp"
#include "taskseq/model.hpp"

namespace draws {

using namespace taskseq;

struct Draw {
    WorldState state;
    TaskSpec task;
    Action action;  // uniform over enumerate_actions(state)
    Action truth;   // the demonstrated step at this state
    History history;
};

inline const std::vector<SequenceExample>& small_corpus() {
    static const auto corpus = [] {
        GeneratorConfig g;
        g.n_sequences = 20;
        return generate_corpus(g);
    }();
    return corpus;
}

inline std::vector<Draw> sample(int n, std::uint64_t seed) {
    const auto& corpus = small_corpus();
    std::mt19937_64 rng(seed);
    std::vector<Draw> out;
    while (static_cast<int>(out.size()) < n) {
        const auto& ex = corpus[rng() % corpus.size()];
        const std::size_t t = rng() % ex.steps.size();
        WorldState s = ex.initial_state;
        History h;
        for (std::size_t i = 0; i < t; ++i) {
            s = apply_primitive(s, ex.steps[i]);
            h = h.advanced(ex.steps[i]);
        }
        const auto actions = enumerate_actions(s);
        out.push_back({s, ex.task, actions[rng() % actions.size()], ex.steps[t], h});
    }
    return out;
}

}  // namespace draws
