#pragma once

// Interactive rollout sessions: a human (or a script) picks among the model's
// executable proposals one step at a time. Transport-free; server.hpp maps it to HTTP.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "taskseq/corpus.hpp"
#include "taskseq/model.hpp"

namespace taskseq {

enum class SessionStatus { AwaitingChoice, Running, Done, Aborted };

std::string_view status_name(SessionStatus s);

/// Choice submitted against an out-of-date step counter.
class StaleChoice : public SessionError {
public:
    using SessionError::SessionError;
};

class SessionNotFound : public LookupError {
public:
    using LookupError::LookupError;
};

struct Proposal {
    ScoredAction scored;
    std::array<double, layout::kBlocks.size()> blocks{};
};

class Session {
public:
    Session(std::string id, const WeightVector& w, const SequenceExample& scenario, int max_steps = 25);

    nlohmann::json snapshot() const;
    std::vector<Proposal> proposals(std::size_t k) const;

    /// Applies proposal `index` from the current ranking. When `expected_step` is
    /// given and differs from the current step the choice is stale and rejected.
    nlohmann::json choose(std::size_t index, std::optional<std::size_t> expected_step = std::nullopt);
    nlohmann::json reset();

    /// Blocks until the version exceeds `since` or the timeout passes; returns the snapshot either way.
    nlohmann::json wait(std::uint64_t since, std::chrono::milliseconds timeout) const;

    std::uint64_t version() const;

private:
    nlohmann::json snapshot_locked() const;
    void settle_locked();  // aborts when nothing is executable or the step budget is spent

    const std::string id_;
    const WeightVector& w_;
    const SequenceExample& scenario_;
    const int max_steps_;

    mutable std::mutex mutex_;
    mutable std::condition_variable changed_;
    WorldState state_;
    History history_;
    std::vector<Action> trace_;
    SessionStatus status_ = SessionStatus::AwaitingChoice;
    std::string error_;
    std::uint64_t version_ = 0;
};

nlohmann::json to_json(const Proposal& p, std::size_t index);

/// Owns the model, the scenario list and every live session. The model and
/// corpus are read-only after construction.
class SessionManager {
public:
    SessionManager(WeightVector w, std::vector<SequenceExample> scenarios, int max_steps = 25);

    nlohmann::json scenarios() const;
    /// Throws LookupError for an unknown scenario id.
    std::string create(const std::string& scenario_id);
    std::shared_ptr<Session> get(const std::string& session_id) const;

    const WeightVector& weights() const { return w_; }

private:
    const WeightVector w_;
    const std::vector<SequenceExample> scenarios_;
    const int max_steps_;

    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 1;
};

}  // namespace taskseq
