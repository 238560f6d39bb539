#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "taskseq/corpus.hpp"
#include "taskseq/eval.hpp"

using namespace taskseq;

namespace {

struct Small {
    std::vector<SequenceExample> corpus;
    CvConfig config;
    FoldModels models;
};

// 36 sequences, 3 folds; enough to exercise every code path in a few seconds
const Small& small() {
    static const Small s = [] {
        Small out;
        GeneratorConfig g;
        g.n_sequences = 36;
        out.corpus = generate_corpus(g);
        out.config.folds = 3;
        out.config.seed = 1;
        out.models = train_folds(out.corpus, out.config);
        return out;
    }();
    return s;
}

Action act(Primitive p, int a1 = -1, int a2 = -1) {
    return {p, a1 < 0 ? kNullObject : static_cast<ObjectId>(a1), a2 < 0 ? kNullObject : static_cast<ObjectId>(a2)};
}

std::set<std::string> correct_ids(const MetricsReport& r) {
    std::set<std::string> out;
    for (const auto& s : r.sequences)
        if (s.full_correct()) out.insert(s.scenario_id);
    return out;
}

bool subset(const std::set<std::string>& a, const std::set<std::string>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST(Confusion, PerfectAndConstantPredictors) {
    std::vector<Primitive> truths;
    for (int i = 0; i < 40; ++i) truths.push_back(static_cast<Primitive>(i % kPrimitiveCount));
    const auto diag = confusion_matrix(truths, truths);
    for (int i = 0; i < kPrimitiveCount; ++i)
        for (int j = 0; j < kPrimitiveCount; ++j) EXPECT_EQ(diag[i][j], i == j ? 5u : 0u);

    const std::vector<Primitive> constant(truths.size(), Primitive::Grasp);
    const auto col = confusion_matrix(constant, truths);
    for (int i = 0; i < kPrimitiveCount; ++i)
        for (int j = 0; j < kPrimitiveCount; ++j)
            EXPECT_EQ(col[i][j], j == static_cast<int>(Primitive::Grasp) ? 5u : 0u);

    EXPECT_THROW(confusion_matrix(constant, {}), std::invalid_argument);
}

TEST(Summarize, HandCountedMetrics) {
    std::vector<StepPrediction> steps{
        {"a", 0, 0, act(Primitive::Grasp, 1), act(Primitive::Grasp, 1), {}},
        {"a", 0, 1, act(Primitive::Grasp, 2), act(Primitive::Grasp, 3), {}},
        {"a", 0, 2, act(Primitive::Release, 2), act(Primitive::Grasp, 2), {}},
        {"a", 0, 3, act(Primitive::Done), act(Primitive::Release, 1), {}},
    };
    const std::vector<Action> t{act(Primitive::Grasp, 1), act(Primitive::Release, 1), act(Primitive::Done)};
    std::vector<SequencePrediction> seqs{
        {"x", 0, t, t, ""},
        {"y", 0, t, {act(Primitive::Grasp, 2), act(Primitive::Release, 2), act(Primitive::Done)}, ""},
        {"z", 0, t, t, "aborted"},
    };
    const auto r = summarize(steps, seqs);
    const auto& grasp = r.per_primitive[static_cast<std::size_t>(Primitive::Grasp)];
    EXPECT_EQ(grasp.support, 2u);
    EXPECT_DOUBLE_EQ(grasp.prim_accuracy, 100.0);
    EXPECT_DOUBLE_EQ(grasp.arg_accuracy, 50.0);
    EXPECT_DOUBLE_EQ(r.per_primitive[static_cast<std::size_t>(Primitive::Release)].prim_accuracy, 0.0);
    // DONE and zero-support primitives stay out of the macro average
    EXPECT_DOUBLE_EQ(r.macro_prim, 50.0);
    EXPECT_DOUBLE_EQ(r.macro_arg, 25.0);
    EXPECT_DOUBLE_EQ(r.teacher_forced_step_accuracy, 25.0);
    EXPECT_NEAR(r.sequence_full, 100.0 / 3, 1e-9);
    EXPECT_NEAR(r.sequence_prim_only, 200.0 / 3, 1e-9);
    EXPECT_NEAR(r.closed_loop_step_accuracy, 100.0 * 7 / 9, 1e-9);
    EXPECT_EQ(r.to_json()["n_steps"], 4);
}

TEST(Folds, PartitionEverySequenceOnce) {
    for (std::size_t n : {6u, 37u, 127u}) {
        const auto a = fold_assignment(n, 6, 3);
        ASSERT_EQ(a.size(), n);
        std::map<int, std::size_t> sizes;
        for (int f : a) {
            ASSERT_GE(f, 0);
            ASSERT_LT(f, 6);
            ++sizes[f];
        }
        EXPECT_EQ(sizes.size(), 6u);
        for (const auto& [f, c] : sizes) EXPECT_LE(c - n / 6, 1u);
        EXPECT_EQ(fold_assignment(n, 6, 3), a);
    }
    EXPECT_NE(fold_assignment(127, 6, 3), fold_assignment(127, 6, 4));
    EXPECT_THROW(fold_assignment(10, 1, 0), std::invalid_argument);
    EXPECT_THROW(fold_assignment(3, 6, 0), std::invalid_argument);
}

TEST(Folds, TrainedModelsNeverSeeTheirTestFold) {
    const auto& s = small();
    ASSERT_EQ(s.models.weights.size(), 3u);
    // refit fold 0 by hand on the other folds and compare
    std::vector<SequenceExample> train_set;
    for (std::size_t i = 0; i < s.corpus.size(); ++i)
        if (s.models.assignment[i] != 0) train_set.push_back(s.corpus[i]);
    EXPECT_EQ(train(train_set, s.config.train).w, s.models.weights[0]);
    for (const auto& r : s.models.reports) EXPECT_TRUE(r.converged);
}

TEST(Chance, UniformOverEnumeratedActions) {
    const WorldState state = generate_environment(GeneratorConfig{}, 0);
    const auto actions = enumerate_actions(state);
    ChanceBaseline draw(5);
    std::map<std::string, int> counts;
    const int per_cell = 50;
    const int n = per_cell * static_cast<int>(actions.size());
    for (int i = 0; i < n; ++i) ++counts[draw(state).to_string()];
    ASSERT_EQ(counts.size(), actions.size());
    double chi2 = 0;
    for (const auto& [name, c] : counts) chi2 += (c - per_cell) * (c - per_cell) / static_cast<double>(per_cell);
    // df = |A| - 1; mean df, sd sqrt(2 df): six sigma is a generous ceiling
    const double df = static_cast<double>(actions.size() - 1);
    EXPECT_LT(chi2, df + 6 * std::sqrt(2 * df));
}

TEST(Chance, MatchesExpectedPrimitiveRate) {
    const auto& corpus = small().corpus;
    // expected hit rate per step is the share of enumerated actions carrying the true primitive
    std::array<double, kPrimitiveCount> expected{}, support{};
    for (const auto& ex : corpus) {
        WorldState s = ex.initial_state;
        for (const auto& a : ex.steps) {
            const auto all = enumerate_actions(s);
            const auto same = std::count_if(all.begin(), all.end(), [&](const Action& b) { return b.primitive == a.primitive; });
            expected[static_cast<std::size_t>(a.primitive)] += static_cast<double>(same) / static_cast<double>(all.size());
            support[static_cast<std::size_t>(a.primitive)] += 1;
            s = apply_primitive(s, a);
        }
    }
    double want = 0, got = 0;
    int counted = 0;
    std::vector<double> runs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) runs.push_back(chance_report(corpus, seed).macro_prim);
    for (double r : runs) got += r / static_cast<double>(runs.size());
    for (int p = 0; p < kPrimitiveCount; ++p) {
        if (static_cast<Primitive>(p) == Primitive::Done || support[static_cast<std::size_t>(p)] == 0) continue;
        want += 100.0 * expected[static_cast<std::size_t>(p)] / support[static_cast<std::size_t>(p)];
        ++counted;
    }
    want /= counted;
    EXPECT_NEAR(got, want, 2.0);
    EXPECT_EQ(chance_report(corpus, 3).sequence_full, 0.0);
    EXPECT_EQ(chance_report(corpus, 3).to_json(), chance_report(corpus, 3).to_json());
}

TEST(Evaluate, DeterministicAndSelfConsistent) {
    const auto& s = small();
    const auto a = evaluate_folds(s.corpus, s.models, s.config);
    const auto b = evaluate_folds(s.corpus, s.models, s.config);
    EXPECT_EQ(a.to_json(), b.to_json());
    EXPECT_EQ(a.prediction_dump(), b.prediction_dump());
    EXPECT_LE(a.sequence_full, a.sequence_prim_only);

    // a sequence rolled out exactly passes through the demonstrated states, so
    // every teacher-forced step of it must be right too
    std::set<std::string> wrong_step;
    for (const auto& st : a.steps)
        if (!(st.predicted == st.truth)) wrong_step.insert(st.scenario_id);
    for (const auto& id : correct_ids(a)) EXPECT_EQ(wrong_step.count(id), 0u) << id;
}

TEST(Evaluate, DumpRecomputesTheReport) {
    const auto& s = small();
    const auto r = evaluate_folds(s.corpus, s.models, s.config);
    const auto back = load_prediction_dump(r.prediction_dump());
    EXPECT_EQ(back.to_json(), r.to_json());
    EXPECT_THROW(load_prediction_dump("{\"kind\":\"step\"\n"), ParseError);
    EXPECT_THROW(load_prediction_dump("{\"kind\":\"what\"}\n"), ParseError);
}

TEST(Evaluate, MismatchedFoldsRejected) {
    const auto& s = small();
    auto shorter = s.corpus;
    shorter.pop_back();
    EXPECT_THROW(evaluate_folds(shorter, s.models, s.config), std::invalid_argument);
}

TEST(Noise, ZeroEqualsBaselineAndSweepShape) {
    const auto& s = small();
    const auto base = evaluate_folds(s.corpus, s.models, s.config);
    EvalOptions zero;
    zero.noise_seed = 77;
    EXPECT_EQ(evaluate_folds(s.corpus, s.models, s.config, zero).to_json(), base.to_json());

    const auto sweep = noise_sweep(s.corpus, s.models, s.config, {0.0, 0.3}, 2);
    ASSERT_EQ(sweep.size(), 2u);
    EXPECT_EQ(sweep[0].per_seed, (std::vector<double>{base.sequence_full, base.sequence_full}));
    EXPECT_DOUBLE_EQ(sweep[0].mean_sequence_full, base.sequence_full);
    EXPECT_EQ(sweep[1].per_seed.size(), 2u);
    EXPECT_THROW(noise_sweep(s.corpus, s.models, s.config, {1.5}), std::invalid_argument);
    EXPECT_THROW(noise_sweep(s.corpus, s.models, s.config, {0.1}, 0), std::invalid_argument);
}

TEST(Noise, OverlayKeepsGeometryAndTakesFlagsFromNoisyCopy) {
    const WorldState initial = small().corpus.front().initial_state;
    EXPECT_FALSE(noise_overlay(initial, 0.0, 1));
    const auto seen = noise_overlay(initial, 1.0, 1);
    const WorldState moved = apply_primitive(initial, small().corpus.front().steps.front());
    const WorldState p = seen(moved);
    for (std::size_t i = 0; i < moved.objects.size(); ++i) {
        EXPECT_EQ(p.objects[i].center, moved.objects[i].center);
        EXPECT_EQ(p.objects[i].attributes.height, moved.objects[i].attributes.height);
        for (std::size_t f = 0; f < AttributeVector::kFlags; ++f)
            EXPECT_NE(p.objects[i].attributes.flag(f), initial.objects[i].attributes.flag(f));
    }
}

TEST(Feedback, KOneEqualsNoFeedback) {
    const auto& s = small();
    const auto none = feedback_eval(s.corpus, s.models, s.config, {});
    const auto k1 = feedback_eval(s.corpus, s.models, s.config, {FeedbackMode::OracleTopK, 1, FeedbackScope::AllSteps});
    ASSERT_EQ(none.sequences.size(), k1.sequences.size());
    for (std::size_t i = 0; i < none.sequences.size(); ++i) EXPECT_EQ(none.sequences[i].predicted, k1.sequences[i].predicted);
}

TEST(Feedback, CorrectSetsAreNested) {
    const auto& s = small();
    const auto none = correct_ids(feedback_eval(s.corpus, s.models, s.config, {}));
    const auto f2 = correct_ids(feedback_eval(s.corpus, s.models, s.config, {FeedbackMode::OracleTopK, 2, FeedbackScope::FirstStep}));
    const auto f3 = correct_ids(feedback_eval(s.corpus, s.models, s.config, {FeedbackMode::OracleTopK, 3, FeedbackScope::FirstStep}));
    const auto a3 = correct_ids(feedback_eval(s.corpus, s.models, s.config, {FeedbackMode::OracleTopK, 3, FeedbackScope::AllSteps}));
    EXPECT_TRUE(subset(none, f2));
    EXPECT_TRUE(subset(f2, f3));
    EXPECT_TRUE(subset(f3, a3));
}

TEST(Feedback, InteractiveModeNeedsASession) {
    const auto& s = small();
    const FeedbackPolicy live{FeedbackMode::Interactive, 3, FeedbackScope::AllSteps};
    EXPECT_THROW(feedback_eval(s.corpus, s.models, s.config, live), SessionError);
    EXPECT_THROW(chain_tasks({}, s.corpus.front().initial_state, s.models.weights[0], live), SessionError);
}

TEST(Chain, EmptyRecipeTriviallySucceeds) {
    const auto& s = small();
    const auto r = chain_tasks({}, s.corpus.front().initial_state, s.models.weights[0]);
    EXPECT_TRUE(r.success);
    EXPECT_TRUE(r.trace.empty());
    EXPECT_EQ(r.final_state, s.corpus.front().initial_state);
}

TEST(Chain, UnlimitedOracleFollowsTheExpert) {
    // with every executable action on offer the oracle can always steer
    const auto recipes = generate_recipes(GeneratorConfig{});
    const auto outcomes =
        run_recipes(recipes, small().models.weights[0], {FeedbackMode::OracleTopK, 10000, FeedbackScope::AllSteps});
    for (const auto& o : outcomes) EXPECT_TRUE(o.success) << o.name << ": " << o.error;
    EXPECT_EQ(to_json(outcomes).size(), recipes.size());
}

TEST(Multiclass, BaselineHasNoSequenceMetrics) {
    const auto& s = small();
    const auto r = multiclass_baseline(s.corpus, s.config);
    EXPECT_TRUE(r.sequences.empty());
    EXPECT_EQ(r.sequence_full, 0.0);
    for (const auto& st : r.steps) {
        EXPECT_EQ(st.predicted.a1, kNullObject);
        EXPECT_EQ(st.predicted.a2, kNullObject);
    }
    EXPECT_GT(r.macro_prim, 0.0);
}
