#include "taskseq/session.hpp"

#include <stdexcept>

#include "taskseq/serialize.hpp"

namespace taskseq {

std::string_view status_name(SessionStatus s) {
    switch (s) {
        case SessionStatus::AwaitingChoice: return "AWAITING_CHOICE";
        case SessionStatus::Running: return "RUNNING";
        case SessionStatus::Done: return "DONE";
        case SessionStatus::Aborted: return "ABORTED";
    }
    return "?";
}

Session::Session(std::string id, const WeightVector& w, const SequenceExample& scenario, int max_steps)
    : id_(std::move(id)), w_(w), scenario_(scenario), max_steps_(max_steps), state_(scenario.initial_state) {
    if (max_steps < 1) throw std::invalid_argument("session needs max_steps >= 1");
    std::lock_guard lock(mutex_);
    settle_locked();
}

void Session::settle_locked() {
    if (status_ != SessionStatus::AwaitingChoice) return;
    if (trace_.size() >= static_cast<std::size_t>(max_steps_)) {
        status_ = SessionStatus::Aborted;
        error_ = "step budget of " + std::to_string(max_steps_) + " spent without DONE";
    } else if (executable_top_k(w_, state_, state_, scenario_.task, history_, 1).empty()) {
        status_ = SessionStatus::Aborted;
        error_ = "no executable action at step " + std::to_string(trace_.size());
    }
}

nlohmann::json Session::snapshot_locked() const {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& a : trace_) trace.push_back(to_json(a));
    return {{"session_id", id_},
            {"scenario_id", scenario_.scenario_id},
            {"environment_id", scenario_.environment_id},
            {"task", to_json(scenario_.task)},
            {"status", status_name(status_)},
            {"step", trace_.size()},
            {"version", version_},
            {"trace", trace},
            {"goal_satisfied", task_goal_satisfied(state_, scenario_.task)},
            {"error", error_},
            {"state", to_json(state_)}};
}

nlohmann::json Session::snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_locked();
}

std::uint64_t Session::version() const {
    std::lock_guard lock(mutex_);
    return version_;
}

std::vector<Proposal> Session::proposals(std::size_t k) const {
    if (k == 0) throw std::invalid_argument("k must be at least 1");
    std::lock_guard lock(mutex_);
    std::vector<Proposal> out;
    if (status_ != SessionStatus::AwaitingChoice) return out;
    for (const auto& s : executable_top_k(w_, state_, state_, scenario_.task, history_, k))
        out.push_back({s, block_scores(w_, state_, scenario_.task, s.action, history_)});
    return out;
}

nlohmann::json Session::choose(std::size_t index, std::optional<std::size_t> expected_step) {
    std::unique_lock lock(mutex_);
    if (status_ != SessionStatus::AwaitingChoice)
        throw SessionError("session " + id_ + " is " + std::string(status_name(status_)));
    if (expected_step && *expected_step != trace_.size())
        throw StaleChoice("choice for step " + std::to_string(*expected_step) + " but the session is at step " +
                          std::to_string(trace_.size()));
    const auto ranked = executable_top_k(w_, state_, state_, scenario_.task, history_, index + 1);
    if (index >= ranked.size())
        throw std::out_of_range("proposal " + std::to_string(index) + " does not exist (" +
                                std::to_string(ranked.size()) + " executable)");

    status_ = SessionStatus::Running;
    const Action action = ranked[index].action;
    trace_.push_back(action);
    if (action.primitive == Primitive::Done) {
        status_ = SessionStatus::Done;
    } else {
        state_ = apply_primitive(state_, action);
        history_ = history_.advanced(action);
        status_ = SessionStatus::AwaitingChoice;
        settle_locked();
    }
    ++version_;
    auto snap = snapshot_locked();
    lock.unlock();
    changed_.notify_all();
    return snap;
}

nlohmann::json Session::reset() {
    std::unique_lock lock(mutex_);
    state_ = scenario_.initial_state;
    history_ = {};
    trace_.clear();
    error_.clear();
    status_ = SessionStatus::AwaitingChoice;
    settle_locked();
    ++version_;
    auto snap = snapshot_locked();
    lock.unlock();
    changed_.notify_all();
    return snap;
}

nlohmann::json Session::wait(std::uint64_t since, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    changed_.wait_for(lock, timeout, [&] { return version_ > since; });
    return snapshot_locked();
}

nlohmann::json to_json(const Proposal& p, std::size_t index) {
    nlohmann::json blocks = nlohmann::json::array();
    for (std::size_t b = 0; b < layout::kBlocks.size(); ++b)
        blocks.push_back({{"block", std::string(layout::kBlocks[b].name)}, {"score", p.blocks[b]}});
    return {{"index", index}, {"action", to_json(p.scored.action)}, {"score", p.scored.score}, {"block_scores", blocks}};
}

// --- manager -------------------------------------------------------------------

SessionManager::SessionManager(WeightVector w, std::vector<SequenceExample> scenarios, int max_steps)
    : w_(std::move(w)), scenarios_(std::move(scenarios)), max_steps_(max_steps) {
    if (w_.size() != layout::kDimension) throw std::invalid_argument("model has the wrong dimension");
}

nlohmann::json SessionManager::scenarios() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : scenarios_)
        out.push_back({{"scenario_id", s.scenario_id},
                       {"environment_id", s.environment_id},
                       {"task", to_json(s.task)},
                       {"steps", s.steps.size()}});
    return out;
}

std::string SessionManager::create(const std::string& scenario_id) {
    const SequenceExample* found = nullptr;
    for (const auto& s : scenarios_)
        if (s.scenario_id == scenario_id) found = &s;
    if (!found) throw LookupError("unknown scenario " + scenario_id);
    std::lock_guard lock(mutex_);
    const std::string id = "s" + std::to_string(next_id_++);
    sessions_.emplace(id, std::make_shared<Session>(id, w_, *found, max_steps_));
    return id;
}

std::shared_ptr<Session> SessionManager::get(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw SessionNotFound("unknown session " + session_id);
    return it->second;
}

}  // namespace taskseq
