#include "taskseq/server.hpp"

#include <httplib.h>

#include <algorithm>

namespace taskseq {

namespace {

constexpr std::size_t kMaxProposals = 50;
constexpr long kMaxWaitMs = 30'000;

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

std::size_t query_number(const httplib::Request& req, const char* key, std::size_t fallback) {
    if (!req.has_param(key)) return fallback;
    const std::string v = req.get_param_value(key);
    std::size_t used = 0;
    unsigned long long n = 0;
    try {
        n = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw std::invalid_argument(std::string("query parameter ") + key + " is not a number");
    return static_cast<std::size_t>(n);
}

// Runs a handler and maps library exceptions to status codes.
template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const LookupError& e) {
            reply(res, 404, {{"error", e.what()}});
        } catch (const SessionError& e) {
            reply(res, 409, {{"error", e.what()}});
        } catch (const nlohmann::json::exception& e) {
            reply(res, 400, {{"error", std::string("bad request body: ") + e.what()}});
        } catch (const std::invalid_argument& e) {
            reply(res, 400, {{"error", e.what()}});
        } catch (const std::out_of_range& e) {
            reply(res, 400, {{"error", e.what()}});
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", e.what()}});
        }
    };
}

}  // namespace

SessionServer::SessionServer(SessionManager& sessions) : sessions_(sessions), http_(std::make_unique<httplib::Server>()) {
    auto& s = *http_;

    s.Get("/scenarios", guarded([this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, sessions_.scenarios());
    }));

    s.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        const std::string id = sessions_.create(body.at("scenario").get<std::string>());
        reply(res, 201, sessions_.get(id)->snapshot());
    }));

    s.Get(R"(/sessions/([^/]+)/state)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, sessions_.get(req.matches[1])->snapshot());
    }));

    s.Get(R"(/sessions/([^/]+)/proposals)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto session = sessions_.get(req.matches[1]);
        const std::size_t k = query_number(req, "k", 3);
        if (k == 0 || k > kMaxProposals) throw std::invalid_argument("k must be in 1.." + std::to_string(kMaxProposals));
        const auto snap = session->snapshot();
        nlohmann::json list = nlohmann::json::array();
        const auto props = session->proposals(k);
        for (std::size_t i = 0; i < props.size(); ++i) list.push_back(to_json(props[i], i));
        reply(res, 200, {{"step", snap["step"]}, {"status", snap["status"]}, {"proposals", list}});
    }));

    s.Post(R"(/sessions/([^/]+)/choose)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto session = sessions_.get(req.matches[1]);
        const auto body = nlohmann::json::parse(req.body);
        const auto index = body.at("index").get<std::size_t>();
        std::optional<std::size_t> step;
        if (body.contains("step") && !body["step"].is_null()) step = body["step"].get<std::size_t>();
        reply(res, 200, session->choose(index, step));
    }));

    s.Post(R"(/sessions/([^/]+)/reset)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, sessions_.get(req.matches[1])->reset());
    }));

    s.Get(R"(/sessions/([^/]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto session = sessions_.get(req.matches[1]);
        const auto since = query_number(req, "since", 0);
        const auto wait = std::min<long>(static_cast<long>(query_number(req, "timeout_ms", 25'000)), kMaxWaitMs);
        reply(res, 200, session->wait(since, std::chrono::milliseconds(wait)));
    }));
}

SessionServer::~SessionServer() = default;

int SessionServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = http_->bind_to_any_port(host);
        if (p < 0) throw Error("cannot bind " + host);
        return p;
    }
    if (!http_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void SessionServer::listen() {
    http_->listen_after_bind();
}

void SessionServer::stop() {
    http_->stop();
}

}  // namespace taskseq
