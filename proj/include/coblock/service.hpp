#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "coblock/agents.hpp"
#include "coblock/episode.hpp"
#include "coblock/metrics.hpp"

namespace coblock {

/// One frame of a seat's stream. `seq` is dense per (session, seat) and starts at 1.
struct WireMessage {
    std::string type; ///< state_snapshot, state_delta, action_result, chat, episode_end, error
    std::string session_id;
    std::uint64_t seq = 0;
    Json payload;
};

Json encode(const WireMessage& m);

struct SeatConfig {
    enum class Kind { human, agent } kind = Kind::human;
    std::string participant_code; ///< human seats
    Json agent;                   ///< agent seats: agent config for make_agent
};

/// Episode logs under <data_dir>/episodes: <id>.jsonl plus <id>.meta.json.
class LogStore {
public:
    explicit LogStore(std::filesystem::path data_dir);

    void save(const std::string& id, const EpisodeRecord& record, const WorldState& state);
    /// Filters are exact matches on the family and status names.
    std::vector<Json> list(const std::optional<std::string>& family, const std::optional<std::string>& outcome) const;
    std::optional<std::string> log_text(const std::string& id) const;

private:
    std::filesystem::path dir_;
};

struct ServiceOptions {
    std::filesystem::path data_dir = "data";
    std::filesystem::path tasks_dir; ///< *.json task files, id = file stem
    std::chrono::milliseconds human_timeout{120000};
    std::filesystem::path agent_base; ///< resolves relative paths in agent configs
};

struct SessionOverrides {
    std::optional<int> max_rounds;
    std::optional<int> actions_per_turn;
    std::optional<std::uint64_t> rng_seed;
};

/// Hosts live episodes. Each session has one worker thread that collects both
/// seats' actions for a round and then applies them; agent seats are
/// answered by their agent, human seats by submit_action or, after the
/// timeout, an automatic Wait.
class SessionManager {
public:
    explicit SessionManager(ServiceOptions options);
    ~SessionManager();
    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    void add_task(const std::string& id, Task task);
    std::vector<std::string> task_ids() const;
    std::optional<Task> task(const std::string& id) const;

    /// Throws Error("unknown_task") or Error("invalid_seat").
    std::string create_session(const std::string& task_id, const std::array<SeatConfig, 2>& seats,
                               const SessionOverrides& overrides = {});

    /// Buffers the seat's actions for the current round. Returns the round
    /// they were filed under. Throws Error with code unknown_session,
    /// invalid_seat, forbidden, not_your_seat, duplicate or session_ended.
    int submit_action(const std::string& id, int seat, const std::string& participant_code,
                      std::vector<Action> actions);

    /// Messages with seq > last_seq. Human seats must present their code.
    std::vector<WireMessage> messages_since(const std::string& id, int seat, const std::string& participant_code,
                                            std::uint64_t last_seq) const;
    /// Blocks until a message beyond last_seq exists or the timeout passes.
    bool wait_for_messages(const std::string& id, int seat, std::uint64_t last_seq,
                           std::chrono::milliseconds timeout) const;

    /// Public session facts (no goals or inventories).
    Json session_info(const std::string& id) const;
    bool finished(const std::string& id) const;
    /// Blocks until the episode ends or the timeout passes.
    bool wait_finished(const std::string& id, std::chrono::milliseconds timeout) const;

    /// Stops the worker without finishing the round in progress, as a crash would.
    void abandon(const std::string& id);

    LogStore& store() { return store_; }

private:
    struct Session;
    std::shared_ptr<Session> find(const std::string& id) const;
    void run(Session* s, std::stop_token stop);
    static void publish(Session& s, const WorldState& before, const std::array<bool, 2>& automatic);

    ServiceOptions options_;
    LogStore store_;
    mutable std::mutex mutex_;
    std::map<std::string, Task> tasks_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 1;
};

/// HTTP front end: POST /sessions, GET /sessions/{id},
/// POST /sessions/{id}/actions, GET /sessions/{id}/stream (chunked NDJSON),
/// GET /tasks, GET /episodes, GET /episodes/{id}/log.
class HttpService {
public:
    HttpService(SessionManager& manager, std::filesystem::path static_dir = {});
    ~HttpService();

    /// Binds (port 0 picks a free port) and returns the port, or -1.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace coblock
