#include <atomic>

#include <httplib.h>

#include "coblock/service.hpp"

namespace coblock {

namespace {

int status_for(const std::string& code) {
    if (code == "unknown_session" || code == "unknown_task" || code == "not_found") return 404;
    if (code == "forbidden") return 403;
    if (code == "duplicate" || code == "session_ended" || code == "not_your_seat") return 409;
    return 400;
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message) {
    res.status = status_for(code);
    res.set_content(dump_canonical({{"error", {{"code", code}, {"message", message}}}}), "application/json");
}

void send_json(httplib::Response& res, const Json& j, int status = 200) {
    res.status = status;
    res.set_content(dump_canonical(j), "application/json");
}

std::optional<std::string> param(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
}

SeatConfig decode_seat(const Json& j) {
    SeatConfig sc;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "human") {
        sc.kind = SeatConfig::Kind::human;
        sc.participant_code = j.at("participant_code").get<std::string>();
    } else if (kind == "agent") {
        sc.kind = SeatConfig::Kind::agent;
        sc.agent = j.at("agent");
    } else {
        throw Error("invalid_seat", "seat kind must be human or agent");
    }
    return sc;
}

// Wraps a handler so Error and JSON failures become error bodies.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const Json::exception& e) {
            send_error(res, "bad_request", e.what());
        } catch (const std::invalid_argument& e) {
            send_error(res, "bad_request", e.what());
        } catch (const std::out_of_range& e) {
            send_error(res, "bad_request", e.what());
        }
    };
}

} // namespace

struct HttpService::Impl {
    SessionManager& manager;
    httplib::Server server;
    std::atomic<bool> stopping{false};

    explicit Impl(SessionManager& m) : manager(m) {}

    void routes(const std::filesystem::path& static_dir) {
        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const Json body = parse_json(req.body);
            const Json& seats = body.at("seats");
            if (!seats.is_array() || seats.size() != 2) throw Error("invalid_seat", "exactly two seats are required");
            SessionOverrides ov;
            if (body.contains("config")) {
                const Json& c = body["config"];
                if (c.contains("max_rounds")) ov.max_rounds = c["max_rounds"].get<int>();
                if (c.contains("actions_per_turn")) ov.actions_per_turn = c["actions_per_turn"].get<int>();
                if (c.contains("rng_seed")) ov.rng_seed = c["rng_seed"].get<std::uint64_t>();
            }
            const std::string id = manager.create_session(body.at("task_id").get<std::string>(),
                                                          {decode_seat(seats[0]), decode_seat(seats[1])}, ov);
            send_json(res, manager.session_info(id), 201);
        }));

        server.Get(R"(/sessions/([A-Za-z0-9_-]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, manager.session_info(req.matches[1]));
                   }));

        server.Post(R"(/sessions/([A-Za-z0-9_-]+)/actions)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const Json body = parse_json(req.body);
                        std::vector<Action> actions;
                        if (body.contains("actions")) {
                            for (const Json& a : body["actions"]) actions.push_back(decode_action(a));
                        } else {
                            actions.push_back(decode_action(body.at("action")));
                        }
                        const int round = manager.submit_action(req.matches[1], body.at("seat").get<int>(),
                                                                body.value("participant_code", ""), std::move(actions));
                        send_json(res, {{"accepted", true}, {"round", round}});
                    }));

        server.Get(R"(/sessions/([A-Za-z0-9_-]+)/stream)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string id = req.matches[1];
                       const int seat = std::stoi(param(req, "seat").value_or("0"));
                       const std::string code = param(req, "participant_code").value_or("");
                       const std::uint64_t last = std::stoull(param(req, "last_seq").value_or("0"));
                       const bool follow = param(req, "follow").value_or("1") != "0";
                       auto first = manager.messages_since(id, seat, code, last); // access check
                       if (!follow) {
                           std::string body;
                           for (const auto& m : first) body += dump_canonical(encode(m)) + "\n";
                           res.set_content(body, "application/x-ndjson");
                           return;
                       }
                       auto cursor = std::make_shared<std::uint64_t>(last);
                       res.set_chunked_content_provider(
                           "application/x-ndjson",
                           [this, id, seat, code, cursor](std::size_t, httplib::DataSink& sink) {
                               if (stopping) return false;
                               std::vector<WireMessage> msgs;
                               try {
                                   msgs = manager.messages_since(id, seat, code, *cursor);
                               } catch (const Error&) {
                                   return false;
                               }
                               for (const auto& m : msgs) {
                                   const std::string line = dump_canonical(encode(m)) + "\n";
                                   if (!sink.write(line.data(), line.size())) return false;
                                   *cursor = m.seq;
                                   if (m.type == "episode_end") {
                                       sink.done();
                                       return true;
                                   }
                               }
                               if (msgs.empty()) {
                                   if (manager.finished(id)) {
                                       sink.done();
                                       return true;
                                   }
                                   manager.wait_for_messages(id, seat, *cursor, std::chrono::milliseconds(250));
                               }
                               return sink.is_writable();
                           });
                   }));

        server.Get("/tasks", guarded([this](const httplib::Request&, httplib::Response& res) {
            Json out = Json::array();
            for (const auto& id : manager.task_ids()) {
                const auto t = manager.task(id);
                if (!t) continue;
                out.push_back({{"task_id", id},
                               {"family", to_string(t->family)},
                               {"target_blocks", t->target.size()}});
            }
            send_json(res, out);
        }));

        server.Get("/episodes", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, manager.store().list(param(req, "family"), param(req, "outcome")));
        }));

        server.Get(R"(/episodes/([A-Za-z0-9_-]+)/log)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto text = manager.store().log_text(req.matches[1]);
                       if (!text) throw Error("not_found", "no episode " + std::string(req.matches[1]));
                       res.set_content(*text, "application/x-ndjson");
                   }));

        if (!static_dir.empty()) server.set_mount_point("/", static_dir.string());
    }
};

HttpService::HttpService(SessionManager& manager, std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>(manager)) {
    impl_->routes(static_dir);
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpService::listen() { impl_->server.listen_after_bind(); }

void HttpService::stop() {
    impl_->stopping = true;
    impl_->server.stop();
}

} // namespace coblock
