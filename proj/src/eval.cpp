#include "taskseq/eval.hpp"

#include <algorithm>
#include <future>
#include <memory>
#include <map>
#include <numeric>
#include <sstream>

#include "rng.hpp"
#include "taskseq/serialize.hpp"

namespace taskseq {

namespace {

using detail::mix;

double percent(std::size_t hit, std::size_t total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(hit) / static_cast<double>(total);
}

bool same_primitives(const std::vector<Action>& a, const std::vector<Action>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].primitive != b[i].primitive) return false;
    return true;
}

// Runs f(fold) for every fold concurrently; results come back in fold order.
template <typename F>
auto per_fold(int folds, F f) {
    using R = decltype(f(0));
    std::vector<std::future<R>> jobs;
    for (int k = 0; k < folds; ++k) jobs.push_back(std::async(std::launch::async, f, k));
    std::vector<R> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

nlohmann::json scored_to_json(const ScoredAction& s) { return {{"action", to_json(s.action)}, {"score", s.score}}; }

nlohmann::json actions_to_json(const std::vector<Action>& actions) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& a : actions) out.push_back(to_json(a));
    return out;
}

std::vector<Action> actions_from_json(const nlohmann::json& j) {
    std::vector<Action> out;
    for (const auto& a : j) out.push_back(action_from_json(a));
    return out;
}

struct EvalPart {
    std::vector<StepPrediction> steps;
    std::vector<SequencePrediction> sequences;
};

}  // namespace

ConfusionMatrix confusion_matrix(const std::vector<Primitive>& predictions, const std::vector<Primitive>& truths) {
    if (predictions.size() != truths.size())
        throw std::invalid_argument("confusion_matrix needs aligned lists (" + std::to_string(predictions.size()) +
                                    " predictions, " + std::to_string(truths.size()) + " truths)");
    ConfusionMatrix m{};
    for (std::size_t i = 0; i < truths.size(); ++i)
        ++m[static_cast<std::size_t>(truths[i])][static_cast<std::size_t>(predictions[i])];
    return m;
}

bool SequencePrediction::prim_only_correct() const { return error.empty() && same_primitives(truth, predicted); }
bool SequencePrediction::full_correct() const { return error.empty() && truth == predicted; }

MetricsReport summarize(std::vector<StepPrediction> steps, std::vector<SequencePrediction> sequences) {
    MetricsReport r;
    std::array<std::size_t, kPrimitiveCount> prim_hit{}, arg_hit{}, support{};
    std::vector<Primitive> predicted, truths;
    std::size_t exact = 0;
    for (const auto& s : steps) {
        const auto p = static_cast<std::size_t>(s.truth.primitive);
        ++support[p];
        if (s.predicted.primitive == s.truth.primitive) ++prim_hit[p];
        if (s.predicted == s.truth) ++arg_hit[p];
        if (s.predicted == s.truth) ++exact;
        predicted.push_back(s.predicted.primitive);
        truths.push_back(s.truth.primitive);
    }
    r.confusion = confusion_matrix(predicted, truths);
    r.teacher_forced_step_accuracy = percent(exact, steps.size());

    int counted = 0;
    for (int pi = 0; pi < kPrimitiveCount; ++pi) {
        auto& m = r.per_primitive[static_cast<std::size_t>(pi)];
        m.support = support[static_cast<std::size_t>(pi)];
        m.prim_accuracy = percent(prim_hit[static_cast<std::size_t>(pi)], m.support);
        m.arg_accuracy = percent(arg_hit[static_cast<std::size_t>(pi)], m.support);
        if (static_cast<Primitive>(pi) == Primitive::Done || m.support == 0) continue;
        r.macro_prim += m.prim_accuracy;
        r.macro_arg += m.arg_accuracy;
        ++counted;
    }
    if (counted > 0) {
        r.macro_prim /= counted;
        r.macro_arg /= counted;
    }

    std::size_t prim_ok = 0, full_ok = 0, positions = 0, position_hits = 0;
    for (const auto& s : sequences) {
        if (s.prim_only_correct()) ++prim_ok;
        if (s.full_correct()) ++full_ok;
        positions += s.truth.size();
        for (std::size_t i = 0; i < std::min(s.truth.size(), s.predicted.size()); ++i)
            if (s.truth[i] == s.predicted[i]) ++position_hits;
    }
    r.sequence_prim_only = percent(prim_ok, sequences.size());
    r.sequence_full = percent(full_ok, sequences.size());
    r.closed_loop_step_accuracy = percent(position_hits, positions);
    r.steps = std::move(steps);
    r.sequences = std::move(sequences);
    return r;
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json per = nlohmann::json::object();
    for (int pi = 0; pi < kPrimitiveCount; ++pi) {
        const auto& m = per_primitive[static_cast<std::size_t>(pi)];
        per[std::string(primitive_name(static_cast<Primitive>(pi)))] = {
            {"prim_accuracy", m.prim_accuracy}, {"arg_accuracy", m.arg_accuracy}, {"support", m.support}};
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : confusion) rows.push_back(row);
    nlohmann::json labels = nlohmann::json::array();
    for (int pi = 0; pi < kPrimitiveCount; ++pi) labels.push_back(std::string(primitive_name(static_cast<Primitive>(pi))));
    return {{"per_primitive", per},
            {"macro_average", {{"prim", macro_prim}, {"arg", macro_arg}}},
            {"sequence_accuracy", {{"prim_only", sequence_prim_only}, {"full", sequence_full}}},
            {"teacher_forced_step_accuracy", teacher_forced_step_accuracy},
            {"closed_loop_step_accuracy", closed_loop_step_accuracy},
            {"confusion", {{"labels", labels}, {"counts", rows}}},
            {"n_steps", steps.size()},
            {"n_sequences", sequences.size()}};
}

std::string MetricsReport::prediction_dump() const {
    std::ostringstream out;
    for (const auto& s : steps) {
        nlohmann::json top = nlohmann::json::array();
        for (const auto& t : s.top) top.push_back(scored_to_json(t));
        nlohmann::json j{{"kind", "step"},           {"scenario_id", s.scenario_id},      {"fold", s.fold},
                         {"step", s.step},           {"truth", taskseq::to_json(s.truth)}, {"predicted", taskseq::to_json(s.predicted)},
                         {"top_k", std::move(top)}};
        out << j.dump() << '\n';
    }
    for (const auto& s : sequences) {
        nlohmann::json j{{"kind", "sequence"},
                         {"scenario_id", s.scenario_id},
                         {"fold", s.fold},
                         {"truth", actions_to_json(s.truth)},
                         {"predicted", actions_to_json(s.predicted)},
                         {"error", s.error}};
        out << j.dump() << '\n';
    }
    return out.str();
}

MetricsReport load_prediction_dump(const std::string& text) {
    std::vector<StepPrediction> steps;
    std::vector<SequencePrediction> sequences;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(n, e.what());
        }
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "step") {
            StepPrediction s;
            s.scenario_id = j.at("scenario_id").get<std::string>();
            s.fold = j.at("fold").get<int>();
            s.step = j.at("step").get<std::size_t>();
            s.truth = action_from_json(j.at("truth"));
            s.predicted = action_from_json(j.at("predicted"));
            for (const auto& t : j.at("top_k")) s.top.push_back({action_from_json(t.at("action")), t.at("score").get<double>()});
            steps.push_back(std::move(s));
        } else if (kind == "sequence") {
            SequencePrediction s;
            s.scenario_id = j.at("scenario_id").get<std::string>();
            s.fold = j.at("fold").get<int>();
            s.truth = actions_from_json(j.at("truth"));
            s.predicted = actions_from_json(j.at("predicted"));
            s.error = j.at("error").get<std::string>();
            sequences.push_back(std::move(s));
        } else {
            throw ParseError(n, "unknown record kind '" + kind + "'");
        }
    }
    return summarize(std::move(steps), std::move(sequences));
}

// --- cross-validation ------------------------------------------------------------

std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("need at least two folds");
    if (n < static_cast<std::size_t>(folds)) throw std::invalid_argument("corpus smaller than the number of folds");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    detail::Rng rng(mix(seed, 0xF01D));
    rng.shuffle(order);
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) out[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    return out;
}

FoldModels train_folds(const std::vector<SequenceExample>& corpus, const CvConfig& config, bool multiclass) {
    FoldModels m;
    m.assignment = fold_assignment(corpus.size(), config.folds, config.seed);
    auto results = per_fold(config.folds, [&](int k) {
        std::vector<SequenceExample> train_set;
        for (std::size_t i = 0; i < corpus.size(); ++i)
            if (m.assignment[i] != k) train_set.push_back(corpus[i]);
        return multiclass ? train_multiclass(train_set, config.train) : train(train_set, config.train);
    });
    for (auto& r : results) {
        m.weights.push_back(std::move(r.w));
        m.reports.push_back(std::move(r.report));
    }
    return m;
}

std::function<WorldState(const WorldState&)> noise_overlay(const WorldState& initial, double p, std::uint64_t seed) {
    if (p == 0.0) return {};
    const WorldState noisy = perturb_state(initial, p, seed);
    std::map<ObjectId, AttributeVector> seen;
    for (const auto& o : noisy.objects) seen.emplace(o.id, o.attributes);
    return [seen = std::move(seen)](const WorldState& truth) {
        WorldState out = truth;
        for (auto& o : out.objects) {
            auto it = seen.find(o.id);
            if (it == seen.end()) continue;
            for (std::size_t i = 0; i < AttributeVector::kFlags; ++i) o.attributes.set_flag(i, it->second.flag(i));
        }
        return out;
    };
}

MetricsReport evaluate_folds(const std::vector<SequenceExample>& corpus, const FoldModels& models,
                             const CvConfig& config, const EvalOptions& options) {
    if (options.feedback.mode == FeedbackMode::Interactive)
        throw SessionError("interactive feedback needs a connected session");
    if (models.assignment.size() != corpus.size()) throw std::invalid_argument("fold assignment does not match corpus");

    auto parts = per_fold(config.folds, [&](int k) {
        EvalPart part;
        const WeightVector& w = models.weights.at(static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            if (models.assignment[i] != k) continue;
            const auto& ex = corpus[i];
            const auto perceive = noise_overlay(ex.initial_state, options.noise, mix(options.noise_seed, i));

            if (options.per_step) {
                WorldState state = ex.initial_state;
                History history;
                for (std::size_t t = 0; t < ex.steps.size(); ++t) {
                    const WorldState seen = perceive ? perceive(state) : state;
                    auto top = executable_top_k(w, state, seen, ex.task, history, std::max<std::size_t>(config.dump_top_k, 1));
                    StepPrediction sp{ex.scenario_id, k, t, ex.steps[t], top.front().action, std::move(top)};
                    part.steps.push_back(std::move(sp));
                    state = apply_primitive(state, ex.steps[t]);
                    history = history.advanced(ex.steps[t]);
                }
            }

            RolloutOptions ro;
            ro.max_steps = config.max_steps;
            ro.perceive = perceive;
            const auto& policy = options.feedback;
            if (policy.mode == FeedbackMode::OracleTopK) {
                ro.k = policy.k;
                ro.choose = [&](int step, const std::vector<ScoredAction>& proposals) -> std::optional<std::size_t> {
                    if (!policy.in_scope(step) || static_cast<std::size_t>(step) >= ex.steps.size()) return std::nullopt;
                    for (std::size_t r = 0; r < proposals.size(); ++r)
                        if (proposals[r].action == ex.steps[static_cast<std::size_t>(step)]) return r;
                    return std::nullopt;
                };
            }
            SequencePrediction sp{ex.scenario_id, k, ex.steps, {}, {}};
            try {
                sp.predicted = rollout(w, ex.initial_state, ex.task, ro).actions;
            } catch (const RolloutAborted& e) {
                sp.predicted = e.partial();
                sp.error = e.what();
            }
            part.sequences.push_back(std::move(sp));
        }
        return part;
    });

    std::vector<StepPrediction> steps;
    std::vector<SequencePrediction> sequences;
    for (auto& p : parts) {
        for (auto& s : p.steps) steps.push_back(std::move(s));
        for (auto& s : p.sequences) sequences.push_back(std::move(s));
    }
    return summarize(std::move(steps), std::move(sequences));
}

MetricsReport cross_validate(const std::vector<SequenceExample>& corpus, const CvConfig& config) {
    return evaluate_folds(corpus, train_folds(corpus, config), config);
}

MetricsReport multiclass_baseline(const std::vector<SequenceExample>& corpus, const CvConfig& config) {
    const FoldModels models = train_folds(corpus, config, true);
    std::vector<StepPrediction> steps;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& ex = corpus[i];
        const int k = models.assignment[i];
        const WeightVector& w = models.weights[static_cast<std::size_t>(k)];
        WorldState state = ex.initial_state;
        History history;
        for (std::size_t t = 0; t < ex.steps.size(); ++t) {
            const ScoredAction best = predict_primitive_only(w, state, ex.task, history);
            steps.push_back({ex.scenario_id, k, t, ex.steps[t], best.action, {best}});
            state = apply_primitive(state, ex.steps[t]);
            history = history.advanced(ex.steps[t]);
        }
    }
    return summarize(std::move(steps), {});
}

ChanceBaseline::ChanceBaseline(std::uint64_t seed) : state_(mix(seed, 0xC4A)) {}

Action ChanceBaseline::operator()(const WorldState& state) {
    const auto actions = enumerate_actions(state);
    state_ = detail::splitmix(state_);
    return actions[state_ % actions.size()];
}

MetricsReport chance_report(const std::vector<SequenceExample>& corpus, std::uint64_t seed) {
    ChanceBaseline draw(seed);
    std::vector<StepPrediction> steps;
    std::vector<SequencePrediction> sequences;
    for (const auto& ex : corpus) {
        WorldState state = ex.initial_state;
        History history;
        SequencePrediction seq{ex.scenario_id, 0, ex.steps, {}, {}};
        for (std::size_t t = 0; t < ex.steps.size(); ++t) {
            const Action a = draw(state);
            steps.push_back({ex.scenario_id, 0, t, ex.steps[t], a, {{a, 0.0}}});
            seq.predicted.push_back(a);
            state = apply_primitive(state, ex.steps[t]);
            history = history.advanced(ex.steps[t]);
        }
        sequences.push_back(std::move(seq));
    }
    return summarize(std::move(steps), std::move(sequences));
}

// --- noise and feedback ------------------------------------------------------------

std::vector<NoisePoint> noise_sweep(const std::vector<SequenceExample>& corpus, const FoldModels& models,
                                    const CvConfig& config, const std::vector<double>& probabilities, int seeds) {
    if (seeds < 1) throw std::invalid_argument("noise sweep needs at least one seed");
    std::vector<NoisePoint> out;
    for (double p : probabilities) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("flip probability must be in [0,1]");
        NoisePoint point{p, 0.0, {}};
        for (int s = 0; s < seeds; ++s) {
            EvalOptions opt;
            opt.noise = p;
            opt.noise_seed = mix(config.seed, 0x4015E, static_cast<std::uint64_t>(s));
            opt.per_step = false;
            point.per_seed.push_back(evaluate_folds(corpus, models, config, opt).sequence_full);
        }
        point.mean_sequence_full = std::accumulate(point.per_seed.begin(), point.per_seed.end(), 0.0) / seeds;
        out.push_back(std::move(point));
    }
    return out;
}

MetricsReport feedback_eval(const std::vector<SequenceExample>& corpus, const FoldModels& models,
                            const CvConfig& config, const FeedbackPolicy& policy) {
    EvalOptions opt;
    opt.feedback = policy;
    opt.per_step = false;
    return evaluate_folds(corpus, models, config, opt);
}

// --- recipes -----------------------------------------------------------------------

ChainResult chain_tasks(const std::vector<TaskSpec>& recipe, const WorldState& initial, const WeightVector& w,
                        const FeedbackPolicy& policy, int max_steps) {
    if (policy.mode == FeedbackMode::Interactive) throw SessionError("interactive feedback needs a connected session");
    ChainResult result;
    result.final_state = initial;
    result.success = true;
    for (const auto& task : recipe) {
        RolloutOptions ro;
        ro.max_steps = max_steps;
        if (policy.mode == FeedbackMode::OracleTopK) {
            ro.k = policy.k;
            // the rollout does not expose its state, so the oracle replays the trace so far
            auto trace = std::make_shared<std::vector<Action>>();
            const WorldState start = result.final_state;
            ro.choose = [&policy, trace, start, task](int step, const std::vector<ScoredAction>& proposals) -> std::optional<std::size_t> {
                std::optional<std::size_t> pick;
                if (policy.in_scope(step)) {
                    WorldState s = start;
                    for (const auto& a : *trace) s = apply_primitive(s, a);
                    try {
                        const Action want = expert_plan(s, task).front();
                        for (std::size_t r = 0; r < proposals.size(); ++r)
                            if (proposals[r].action == want) pick = r;
                    } catch (const ExpertError&) {
                    }
                }
                trace->push_back(proposals[pick.value_or(0)].action);
                return pick;
            };
        }
        RolloutResult r;
        try {
            r = rollout(w, result.final_state, task, ro);
        } catch (const RolloutAborted& e) {
            std::vector<Action> flat;
            for (const auto& t : result.trace) flat.insert(flat.end(), t.begin(), t.end());
            flat.insert(flat.end(), e.partial().begin(), e.partial().end());
            throw RolloutAborted(e.what(), std::move(flat));
        }
        const bool ok = r.reached_done && task_goal_satisfied(r.final_state, task);
        result.trace.push_back(std::move(r.actions));
        result.goals.push_back(ok);
        result.final_state = std::move(r.final_state);
        if (!ok) {
            result.success = false;
            break;
        }
    }
    return result;
}

std::vector<RecipeOutcome> run_recipes(const std::vector<RecipeScenario>& recipes, const WeightVector& w,
                                       const FeedbackPolicy& policy) {
    std::vector<RecipeOutcome> out;
    for (const auto& r : recipes) {
        RecipeOutcome o{r.name, r.environment_id, false, 0, {}};
        try {
            const ChainResult c = chain_tasks(r.tasks, r.initial_state, w, policy);
            o.success = c.success;
            for (const auto& t : c.trace) o.primitives += t.size();
            if (!c.success) o.error = "goal " + std::to_string(c.goals.size()) + " not reached";
        } catch (const RolloutAborted& e) {
            o.primitives = e.partial().size();
            o.error = e.what();
        }
        out.push_back(std::move(o));
    }
    return out;
}

nlohmann::json to_json(const std::vector<NoisePoint>& sweep) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : sweep) out.push_back({{"p", p.p}, {"sequence_full", p.mean_sequence_full}, {"per_seed", p.per_seed}});
    return out;
}

nlohmann::json to_json(const std::vector<RecipeOutcome>& outcomes) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& o : outcomes)
        out.push_back({{"recipe", o.name},
                       {"environment_id", o.environment_id},
                       {"success", o.success},
                       {"primitives", o.primitives},
                       {"error", o.error}});
    return out;
}

}  // namespace taskseq
