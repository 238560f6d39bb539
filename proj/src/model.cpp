#include "taskseq/model.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace taskseq {

namespace {

constexpr int kModelFormatVersion = 1;

void check_dimension(const WeightVector& w) {
    if (w.size() != layout::kDimension)
        throw std::invalid_argument("weight vector has dimension " + std::to_string(w.size()) + ", expected " +
                                    std::to_string(layout::kDimension));
}

template <std::size_t N>
double dot_block(const WeightVector& w, std::size_t start, const std::array<double, N>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        if (v[i] != 0.0) s += w[start + i] * v[i];
    return s;
}

// Sorted candidate indices: score descending, enumeration order on ties.
std::vector<std::size_t> ranking(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

double score(const WeightVector& w, const WorldState& state, const TaskSpec& task, const Action& action,
             const History& history) {
    check_dimension(w);
    const FeatureVector phi = assemble(state, task, action, history);
    double s = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i)
        if (phi[i] != 0.0) s += w[i] * phi[i];
    return s;
}

std::array<double, layout::kBlocks.size()> block_scores(const WeightVector& w, const WorldState& state,
                                                        const TaskSpec& task, const Action& action,
                                                        const History& history) {
    check_dimension(w);
    const FeatureVector phi = assemble(state, task, action, history);
    std::array<double, layout::kBlocks.size()> out{};
    for (std::size_t b = 0; b < layout::kBlocks.size(); ++b) {
        const auto& block = layout::kBlocks[b];
        for (std::size_t i = block.start; i < block.start + block.length; ++i) out[b] += w[i] * phi[i];
    }
    return out;
}

std::vector<Action> enumerate_actions(const WorldState& state) {
    std::vector<Action> out;
    const std::size_t n = state.objects.size();
    out.reserve(4 * n + 3 * n * (n > 0 ? n - 1 : 0) + 1);
    for (int pi = 0; pi < kPrimitiveCount; ++pi) {
        const auto p = static_cast<Primitive>(pi);
        switch (arity(p)) {
            case 0:
                out.push_back({p, kNullObject, kNullObject});
                break;
            case 1:
                for (const auto& o : state.objects) out.push_back({p, o.id, kNullObject});
                break;
            default:
                for (const auto& a : state.objects)
                    for (const auto& b : state.objects)
                        if (a.id != b.id) out.push_back({p, a.id, b.id});
        }
    }
    return out;
}

ScoreTable::ScoreTable(const WeightVector& w, const WorldState& state, const TaskSpec& task, const History& history)
    : w_(w), actions_(enumerate_actions(state)) {
    using namespace layout;
    check_dimension(w);
    for (int pi = 0; pi < kPrimitiveCount; ++pi) {
        const auto p = static_cast<Primitive>(pi);
        double s = w[kPt + pt_index(p, task.task)];
        if (history.prev2) s += w[kPpt1 + ppt_index(history.prev2->primitive, p, task.task)];
        if (history.prev1) s += w[kPpt2 + ppt_index(history.prev1->primitive, p, task.task)];
        prim_[pi] = s;
    }
    const std::size_t n = state.objects.size();
    ids_.reserve(n);
    for (const auto& o : state.objects) ids_.push_back(o.id);
    unary1_.assign(n, 0.0);
    unary2_.assign(n, 0.0);
    pair1_.assign(n, {});
    pair2_.assign(n, {});
    collide_.assign(n * n, 0);
    w_collision_ = w[kAe1 + 2];

    for (std::size_t i = 0; i < n; ++i) {
        const ObjectId id = ids_[i];
        const AeFeatures ae = phi_ae(state, id, kNullObject);
        const AetFeatures aet1 = phi_aet(state, id, kNullObject, task);
        const AetFeatures aet2 = phi_aet(state, kNullObject, id, task);
        unary1_[i] = w[kAe1] * ae.copy1[0] + w[kAe1 + 1] * ae.copy1[1] + dot_block(w, kAet1, aet1.copy1);
        unary2_[i] = w[kAe2] * ae.copy1[0] + w[kAe2 + 1] * ae.copy1[1] + dot_block(w, kAet2, aet2.copy2);

        const bool held = state.holding(id);
        const auto as_a1 = paae_bits(id, kNullObject, history);
        const auto as_a2 = paae_bits(kNullObject, id, history);
        for (int pi = 0; pi < kPrimitiveCount; ++pi) {
            const std::size_t row = kPaae + static_cast<std::size_t>(pi) * 8;
            double s1 = held ? w[kPae1 + pi] : 0.0;
            double s2 = held ? w[kPae2 + pi] : 0.0;
            for (std::size_t b = 0; b < 8; ++b) {
                s1 += as_a1[b] * w[row + b];
                s2 += as_a2[b] * w[row + b];
            }
            pair1_[i][pi] = s1;
            pair2_[i][pi] = s2;
        }
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) collide_[i * n + j] = boxes_interpenetrate(state.objects[i], state.objects[j]) ? 1 : 0;
    }
}

std::size_t ScoreTable::slot(ObjectId id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) throw LookupError("unknown object " + object_label(id));
    return static_cast<std::size_t>(it - ids_.begin());
}

double ScoreTable::operator()(const Action& action) const {
    const std::size_t p = static_cast<std::size_t>(action.primitive);
    double s = prim_[p];
    std::size_t i = 0;
    if (!is_null(action.a1)) {
        i = slot(action.a1);
        s += unary1_[i] + pair1_[i][p];
    }
    if (!is_null(action.a2)) {
        const std::size_t j = slot(action.a2);
        s += unary2_[j] + pair2_[j][p];
        if (!is_null(action.a1) && collide_[i * ids_.size() + j]) s += w_collision_;
    }
    return s;
}

ScoredAction predict(const WeightVector& w, const WorldState& state, const TaskSpec& task, const History& history) {
    const ScoreTable table(w, state, task, history);
    ScoredAction best{table.actions().front(), table(table.actions().front())};
    for (const Action& a : table.actions()) {
        const double s = table(a);
        if (s > best.score) best = {a, s};
    }
    return best;
}

std::vector<ScoredAction> top_k(const WeightVector& w, const WorldState& state, const TaskSpec& task,
                                const History& history, std::size_t k) {
    if (k == 0) throw std::invalid_argument("top_k needs k >= 1");
    const ScoreTable table(w, state, task, history);
    const auto& actions = table.actions();
    std::vector<double> scores(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) scores[i] = table(actions[i]);
    const auto order = ranking(scores);
    std::vector<ScoredAction> out;
    for (std::size_t r = 0; r < std::min(k, order.size()); ++r) out.push_back({actions[order[r]], scores[order[r]]});
    return out;
}

double loss(const Action& truth, const Action& candidate) {
    return (truth.primitive != candidate.primitive ? 1.0 : 0.0) + (truth.a1 != candidate.a1 ? 1.0 : 0.0) +
           (truth.a2 != candidate.a2 ? 1.0 : 0.0);
}

ScoredAction loss_augmented_argmax(const WeightVector& w, const WorldState& state, const TaskSpec& task,
                                   const History& history, const Action& truth) {
    const ScoreTable table(w, state, task, history);
    const auto& actions = table.actions();
    ScoredAction best{actions.front(), table(actions.front()) + loss(truth, actions.front())};
    for (const Action& a : actions) {
        const double s = table(a) + loss(truth, a);
        if (s > best.score) best = {a, s};
    }
    return best;
}

ScoredAction loss_augmented_argmax(const WeightVector& w, const WorldState& state, const TaskSpec& task,
                                   const History& history, const Action& truth, const std::vector<Action>& candidates) {
    if (candidates.empty()) throw std::invalid_argument("empty candidate set");
    const ScoreTable table(w, state, task, history);
    ScoredAction best{candidates.front(), table(candidates.front()) + loss(truth, candidates.front())};
    for (const Action& a : candidates) {
        const double s = table(a) + loss(truth, a);
        if (s > best.score) best = {a, s};
    }
    return best;
}

std::vector<Action> feasible_actions(const WorldState& state) {
    std::vector<Action> out;
    for (const Action& a : enumerate_actions(state))
        if (check_preconditions(state, a)) out.push_back(a);
    return out;
}

ScoredAction predict_primitive_only(const WeightVector& w, const WorldState& state, const TaskSpec& task,
                                    const History& history) {
    ScoredAction best{};
    bool first = true;
    for (int pi = 0; pi < kPrimitiveCount; ++pi) {
        const Action a{static_cast<Primitive>(pi), kNullObject, kNullObject};
        const double s = score(w, state, task, a, history);
        if (first || s > best.score) best = {a, s};
        first = false;
    }
    return best;
}

std::vector<ScoredAction> executable_top_k(const WeightVector& w, const WorldState& world, const WorldState& perceived,
                                           const TaskSpec& task, const History& history, std::size_t k) {
    if (k == 0) throw std::invalid_argument("executable_top_k needs k >= 1");
    const ScoreTable table(w, perceived, task, history);
    const auto& actions = table.actions();
    std::vector<double> scores(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) scores[i] = table(actions[i]);
    std::vector<ScoredAction> out;
    for (std::size_t idx : ranking(scores)) {
        if (!check_preconditions(world, actions[idx])) continue;
        out.push_back({actions[idx], scores[idx]});
        if (out.size() == k) break;
    }
    return out;
}

RolloutResult rollout(const WeightVector& w, const WorldState& initial, const TaskSpec& task,
                      const RolloutOptions& options) {
    if (options.max_steps < 1) throw std::invalid_argument("rollout needs max_steps >= 1");
    RolloutResult result;
    WorldState state = initial;
    History history;
    const std::size_t k = std::max<std::size_t>(options.k, 1);
    for (int step = 0; step < options.max_steps; ++step) {
        const WorldState perceived = options.perceive ? options.perceive(state) : state;
        const auto proposals = executable_top_k(w, state, perceived, task, history, k);
        if (proposals.empty()) throw RolloutAborted("no executable action at step " + std::to_string(step), result.actions);
        std::size_t pick = 0;
        if (options.choose) {
            if (auto c = options.choose(step, proposals)) {
                if (*c >= proposals.size()) throw std::out_of_range("feedback chose a proposal out of range");
                pick = *c;
            }
        }
        const Action action = proposals[pick].action;
        result.actions.push_back(action);
        if (action.primitive == Primitive::Done) {
            result.reached_done = true;
            break;
        }
        state = apply_primitive(state, action);
        history = history.advanced(action);
    }
    result.final_state = std::move(state);
    return result;
}

void save_model(const std::string& path, const ModelFile& model) {
    check_dimension(model.weights);
    nlohmann::json doc;
    doc["format_version"] = kModelFormatVersion;
    std::ostringstream hash;
    hash << std::hex << layout::manifest_hash();
    doc["layout_hash"] = hash.str();
    doc["dimension"] = layout::kDimension;
    doc["config"] = model.config_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(model.config_json);
    doc["weights"] = model.weights;
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file " + path);
    out << doc.dump() << '\n';
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read model file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(1, std::string("model file: ") + e.what());
    }
    if (doc.value("format_version", -1) != kModelFormatVersion)
        throw VersionError("unsupported model format_version in " + path);
    std::ostringstream hash;
    hash << std::hex << layout::manifest_hash();
    if (doc.value("layout_hash", std::string{}) != hash.str())
        throw VersionError("model " + path + " was trained with a different feature layout");
    ModelFile model;
    model.weights = doc.at("weights").get<WeightVector>();
    check_dimension(model.weights);
    model.config_json = doc.at("config").dump();
    return model;
}

}  // namespace taskseq
