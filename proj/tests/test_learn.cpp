#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "draws.hpp"
#include "oracles.hpp"
#include "taskseq/corpus.hpp"
#include "taskseq/learn.hpp"

using namespace taskseq;

namespace {

CuttingPlaneConstraint c(std::vector<double> dpsi, double loss) { return {std::move(dpsi), loss}; }

std::vector<CuttingPlaneConstraint> random_problem(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(1, 5), dim(2, 6);
    std::uniform_real_distribution<double> entry(-2.0, 2.0), loss(0.0, 3.0);
    const int n = count(rng), d = dim(rng);
    std::vector<CuttingPlaneConstraint> cs;
    for (int i = 0; i < n; ++i) {
        std::vector<double> v(static_cast<std::size_t>(d));
        for (auto& x : v) x = entry(rng);
        cs.push_back(c(v, loss(rng)));
    }
    return cs;
}

const std::vector<SequenceExample>& tiny_corpus() {
    static const auto corpus = [] {
        GeneratorConfig g;
        g.n_sequences = 12;
        return generate_corpus(g);
    }();
    return corpus;
}

}  // namespace

TEST(Qp, SingleConstraintAnalytic) {
    // w1 >= 1 - xi: hinge is cheaper than the margin once C < 1
    const auto big = solve_qp({c({1.0, 0.0}, 1.0)}, 10.0, 1e-12);
    EXPECT_NEAR(big.w[0], 1.0, 1e-9);
    EXPECT_NEAR(big.w[1], 0.0, 1e-9);
    EXPECT_NEAR(big.xi, 0.0, 1e-9);
    EXPECT_NEAR(big.objective, 0.5, 1e-9);

    const auto small = solve_qp({c({1.0, 0.0}, 1.0)}, 0.25, 1e-12);
    EXPECT_NEAR(small.w[0], 0.25, 1e-9);
    EXPECT_NEAR(small.xi, 0.75, 1e-9);
    EXPECT_NEAR(small.objective, 0.5 * 0.0625 + 0.25 * 0.75, 1e-9);
}

TEST(Qp, TwoOrthogonalConstraintsAnalytic) {
    const std::vector<CuttingPlaneConstraint> cs{c({1.0, 0.0}, 1.0), c({0.0, 2.0}, 1.0)};
    const auto hard = solve_qp(cs, 100.0, 1e-12);
    EXPECT_NEAR(hard.w[0], 1.0, 1e-9);
    EXPECT_NEAR(hard.w[1], 0.5, 1e-9);
    EXPECT_NEAR(hard.alpha[0], 1.0, 1e-9);
    EXPECT_NEAR(hard.alpha[1], 0.25, 1e-9);

    // shared slack: w = (u, u/2), 1.25 u = C
    const auto soft = solve_qp(cs, 0.5, 1e-12);
    EXPECT_NEAR(soft.w[0], 0.4, 1e-9);
    EXPECT_NEAR(soft.w[1], 0.2, 1e-9);
    EXPECT_NEAR(soft.xi, 0.6, 1e-9);
}

TEST(Qp, MatchesReferenceSolverOnRandomProblems) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const auto cs = random_problem(rng);
        const double C = std::uniform_real_distribution<double>(0.1, 50.0)(rng);
        const auto got = solve_qp(cs, C, 1e-10);
        const auto ref = oracle::reference_qp(cs, C);
        const double p_got = oracle::primal(cs, C, got.w), p_ref = oracle::primal(cs, C, ref);
        EXPECT_LE(p_got - p_ref, 1e-6 * std::max(1.0, std::abs(p_ref))) << "trial " << trial;
        EXPECT_NEAR(got.objective, p_got, 1e-6 * std::max(1.0, std::abs(p_got)));

        double sum = 0;
        for (double a : got.alpha) {
            EXPECT_GE(a, 0.0);
            sum += a;
        }
        EXPECT_LE(sum, C * (1 + 1e-12));
        // w is the alpha combination of the constraints
        for (std::size_t k = 0; k < got.w.size(); ++k) {
            double wk = 0;
            for (std::size_t j = 0; j < cs.size(); ++j) wk += got.alpha[j] * cs[j].delta_psi[k];
            EXPECT_NEAR(got.w[k], wk, 1e-9);
        }
    }
}

TEST(Qp, IncrementalMatchesFromScratch) {
    std::mt19937_64 rng(5);
    std::vector<CuttingPlaneConstraint> cs;
    for (int i = 0; i < 5; ++i) {
        auto more = random_problem(rng);
        more.front().delta_psi.resize(4, 0.5);
        cs.push_back(more.front());
    }
    DualQp qp(3.0, 1e-12);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        qp.add(cs[i]);
        const auto inc = qp.solve();
        const auto scratch = solve_qp({cs.begin(), cs.begin() + static_cast<long>(i) + 1}, 3.0, 1e-12);
        EXPECT_NEAR(inc.objective, scratch.objective, 1e-8);
    }
}

TEST(Qp, RejectsBadInput) {
    EXPECT_THROW(solve_qp({}, 1.0, 1e-8), std::invalid_argument);
    EXPECT_THROW(solve_qp({c({1.0}, 1.0)}, 0.0, 1e-8), std::invalid_argument);
    EXPECT_THROW(solve_qp({c({1.0}, 1.0)}, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(solve_qp({c({1.0}, 1.0), c({1.0, 2.0}, 1.0)}, 1.0, 1e-8), std::invalid_argument);
}

TEST(ReplaySteps, OnePerDemonstratedActionWithTruthFeasible) {
    const auto& corpus = tiny_corpus();
    const auto steps = replay_steps(corpus);
    std::size_t total = 0;
    for (const auto& e : corpus) total += e.steps.size();
    ASSERT_EQ(steps.size(), total);
    for (const auto& s : steps) {
        EXPECT_NE(std::find(s.candidates.begin(), s.candidates.end(), s.truth), s.candidates.end());
        for (const auto& a : s.candidates) EXPECT_TRUE(check_preconditions(s.state, a));
    }
}

TEST(ReplaySteps, CorruptStepRaisesIntegrityError) {
    auto corpus = tiny_corpus();
    auto& ex = corpus[3];
    ASSERT_GE(ex.steps.size(), 2u);
    ex.steps[1] = {Primitive::Release, ex.steps[1].a1, kNullObject};
    ex.steps[1].a1 = ex.initial_state.objects.front().id;  // nothing is held by then
    try {
        replay_steps(corpus);
        FAIL() << "expected CorpusIntegrityError";
    } catch (const CorpusIntegrityError& e) {
        EXPECT_EQ(e.scenario(), ex.scenario_id);
        EXPECT_EQ(e.step(), 1u);
    }
}

TEST(Separation, AtZeroWeightsPicksMaxLossCandidates) {
    const auto steps = replay_steps(tiny_corpus());
    const WeightVector w(layout::kDimension, 0.0);
    const auto sep = most_violated(w, 0.0, steps);

    // recomputed from scratch: first candidate with the largest loss at each step
    double total = 0;
    std::vector<double> dpsi(layout::kDimension, 0.0);
    const double scale = 1.0 / static_cast<double>(steps.size());
    for (const auto& s : steps) {
        const Action* best = nullptr;
        for (const auto& a : s.candidates)
            if (!best || loss(s.truth, a) > loss(s.truth, *best)) best = &a;
        const double l = loss(s.truth, *best);
        if (l == 0) continue;
        total += l;
        const auto ft = assemble(s.state, s.task, s.truth, s.history);
        const auto fb = assemble(s.state, s.task, *best, s.history);
        for (std::size_t i = 0; i < dpsi.size(); ++i) dpsi[i] += scale * (ft[i] - fb[i]);
    }
    EXPECT_NEAR(sep.constraint.mean_loss, total * scale, 1e-12);
    EXPECT_NEAR(sep.violation, total * scale, 1e-12);
    for (std::size_t i = 0; i < dpsi.size(); ++i) ASSERT_NEAR(sep.constraint.delta_psi[i], dpsi[i], 1e-12) << i;
}

TEST(Separation, ViolationIsLossMinusMarginMinusSlack) {
    const auto steps = replay_steps(tiny_corpus());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    WeightVector w(layout::kDimension);
    for (auto& v : w) v = u(rng);
    for (double xi : {0.0, 0.4}) {
        const auto sep = most_violated(w, xi, steps);
        const double margin = oracle::dot(w, sep.constraint.delta_psi);
        EXPECT_NEAR(sep.violation, sep.constraint.mean_loss - margin - xi, 1e-9);
        // the truth itself is a candidate, so the hinge term is never negative
        EXPECT_GE(sep.constraint.mean_loss - margin, -1e-9);
    }
}

TEST(Train, ConvergesWithFeasibleDual) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<IterationLog> seen;
    const auto r = train(tiny_corpus(), TrainConfig{}, [&](const IterationLog& l) { seen.push_back(l); });
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE(r.report.final_violation, 0.01);
    EXPECT_LE(r.report.iterations, 500);
    EXPECT_TRUE(r.report.dual_feasible_throughout);
    ASSERT_EQ(seen.size(), r.report.log.size());
    // the working-set objective can only grow as constraints are added
    for (std::size_t i = 1; i < seen.size(); ++i) EXPECT_GE(seen[i].objective, seen[i - 1].objective - 1e-6);

    // an independent separation pass agrees the result is epsilon-optimal
    const auto steps = replay_steps(tiny_corpus());
    const double xi = seen.back().xi;
    EXPECT_LE(most_violated(r.w, xi, steps).violation, 0.01 + 1e-9);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::minutes(2));
}

TEST(Train, CustomOracleSingleConstraint) {
    std::vector<TrainingStep> steps(1);
    auto oracle = [](const WeightVector& w, double xi, const std::vector<TrainingStep>&) {
        Separation s;
        s.constraint.delta_psi.assign(layout::kDimension, 0.0);
        s.constraint.delta_psi[0] = 1.0;
        s.constraint.mean_loss = 1.0;
        s.violation = 1.0 - w[0] - xi;
        return s;
    };
    const auto r = train_with_oracle(steps, TrainConfig{}, oracle);
    EXPECT_TRUE(r.report.converged);
    EXPECT_EQ(r.report.iterations, 2);
    EXPECT_NEAR(r.w[0], 1.0, 1e-9);
    ASSERT_EQ(r.report.log.size(), 2u);
    EXPECT_EQ(r.report.log[0].working_set, 1u);
}

TEST(Train, RejectsBadConfig) {
    EXPECT_THROW(train({}, TrainConfig{}), std::invalid_argument);
    TrainConfig zero;
    zero.max_iterations = 0;
    EXPECT_THROW(train(tiny_corpus(), zero), std::invalid_argument);
    TrainConfig negative;
    negative.C = -1;
    EXPECT_THROW(train(tiny_corpus(), negative), std::invalid_argument);
}

TEST(Train, IterationCapReportsNotConverged) {
    TrainConfig one;
    one.max_iterations = 1;
    const auto r = train(tiny_corpus(), one);
    EXPECT_FALSE(r.report.converged);
    EXPECT_EQ(r.report.iterations, 1);
}

TEST(Multiclass, ConvergesAndIgnoresArguments) {
    const auto r = train_multiclass(tiny_corpus(), TrainConfig{});
    EXPECT_TRUE(r.report.converged);
    const auto steps = replay_steps(tiny_corpus());
    EXPECT_LE(most_violated_multiclass(r.w, r.report.log.back().xi, steps).violation, 0.01 + 1e-9);
    // argument-free candidates never light up the argument blocks
    for (std::size_t i = layout::kAe1; i < layout::kPt; ++i) EXPECT_EQ(r.w[i], 0.0) << i;
    for (std::size_t i = layout::kAet1; i < layout::kPae1; ++i) EXPECT_EQ(r.w[i], 0.0) << i;
}

TEST(TrainConfig, JsonCarriesHyperparameters) {
    TrainConfig c;
    c.C = 12.5;
    const auto text = c.to_json();
    EXPECT_NE(text.find("12.5"), std::string::npos);
    EXPECT_NE(text.find("epsilon"), std::string::npos);
}

TEST(Separation, HugeMarginMeansNoViolation) {
    // one constraint per step, each with the truth's own features scaled up
    const auto steps = replay_steps(tiny_corpus());
    const auto first = std::vector<TrainingStep>(steps.begin(), steps.begin() + 1);
    const auto phi = assemble(first[0].state, first[0].task, first[0].truth, first[0].history);
    WeightVector w(phi.begin(), phi.end());
    for (auto& v : w) v *= 1e6;
    EXPECT_LE(most_violated(w, 0.0, first).violation, 0.0);
}

TEST(Multiclass, SingleClassCorpusPredictsThatClass) {
    auto steps = replay_steps(tiny_corpus());
    std::erase_if(steps, [](const TrainingStep& s) { return s.truth.primitive != Primitive::Grasp; });
    ASSERT_FALSE(steps.empty());
    const auto r = train_with_oracle(steps, TrainConfig{}, most_violated_multiclass);
    EXPECT_TRUE(r.report.converged);
    for (const auto& s : replay_steps(tiny_corpus()))
        EXPECT_EQ(predict_primitive_only(r.w, s.state, s.task, s.history).action.primitive, Primitive::Grasp);
}

TEST(Train, ReproducesMostTrainingSteps) {
    const auto r = train(tiny_corpus(), TrainConfig{});
    const auto steps = replay_steps(tiny_corpus());
    std::size_t right = 0;
    for (const auto& s : steps)
        right += executable_top_k(r.w, s.state, s.state, s.task, s.history, 1).front().action == s.truth;
    EXPECT_GE(static_cast<double>(right), 0.9 * static_cast<double>(steps.size()));
}
