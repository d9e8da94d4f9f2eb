#include "coblock/service.hpp"

#include <algorithm>
#include <ctime>
#include <random>

namespace coblock {

namespace {

std::string now_iso() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool safe_id(const std::string& id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
}

Json encode_dialogue(const std::vector<DialogueLine>& lines) {
    Json out = Json::array();
    for (const auto& l : lines) out.push_back({{"agent", l.agent}, {"text", l.text}});
    return out;
}

} // namespace

Json encode(const WireMessage& m) {
    return {{"format_version", kFormatVersion},
            {"type", m.type},
            {"session_id", m.session_id},
            {"seq", m.seq},
            {"payload", m.payload}};
}

// ---- log store ----

LogStore::LogStore(std::filesystem::path data_dir) : dir_(std::move(data_dir) / "episodes") {}

void LogStore::save(const std::string& id, const EpisodeRecord& record, const WorldState& state) {
    write_file_atomic(dir_ / (id + ".jsonl"), encode_log(record));
    Json meta{{"episode_id", id},
              {"task_id", record.task_id},
              {"family", to_string(record.config.task.family)},
              {"outcome", to_string(state.status)},
              {"rounds", state.round - 1},
              {"events", record.events.size()},
              {"updated_at", now_iso()}};
    write_file_atomic(dir_ / (id + ".meta.json"), dump_canonical(meta) + "\n");
}

std::vector<Json> LogStore::list(const std::optional<std::string>& family,
                                 const std::optional<std::string>& outcome) const {
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > 10 && name.substr(name.size() - 10) == ".meta.json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Json> out;
    for (const auto& f : files) {
        Json meta;
        try {
            meta = parse_json(read_file(f));
        } catch (const Error&) {
            continue;
        }
        if (family && meta.value("family", "") != *family) continue;
        if (outcome && meta.value("outcome", "") != *outcome) continue;
        out.push_back(std::move(meta));
    }
    return out;
}

std::optional<std::string> LogStore::log_text(const std::string& id) const {
    if (!safe_id(id)) return std::nullopt;
    const auto path = dir_ / (id + ".jsonl");
    if (!std::filesystem::exists(path)) return std::nullopt;
    return read_file(path);
}

// ---- sessions ----

struct SessionManager::Session {
    std::string id;
    std::string task_id;
    EpisodeConfig config;
    std::array<SeatConfig, 2> seats;
    std::array<std::unique_ptr<Agent>, 2> agents;

    mutable std::mutex m;
    mutable std::condition_variable_any cv;
    WorldState state;
    std::array<std::optional<std::vector<Action>>, 2> pending;
    std::array<std::vector<WireMessage>, 2> outbox;
    bool ended = false;
    std::string created_at;
    std::string updated_at;
    std::jthread worker;

    void push(int seat, std::string type, Json payload) {
        auto& box = outbox[seat - 1];
        box.push_back({std::move(type), id, box.size() + 1, std::move(payload)});
    }
    bool human(int seat) const { return seats[seat - 1].kind == SeatConfig::Kind::human; }
};

SessionManager::SessionManager(ServiceOptions options) : options_(std::move(options)), store_(options_.data_dir) {
    if (options_.tasks_dir.empty()) return;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(options_.tasks_dir, ec)) {
        if (entry.path().extension() != ".json") continue;
        tasks_[entry.path().stem().string()] = read_task_file(entry.path());
    }
    if (ec) throw Error("io", "cannot read task directory " + options_.tasks_dir.string());
}

SessionManager::~SessionManager() {
    std::map<std::string, std::shared_ptr<Session>> sessions;
    {
        std::lock_guard lk(mutex_);
        sessions.swap(sessions_);
    }
    for (auto& [id, s] : sessions) {
        s->worker.request_stop();
        if (s->worker.joinable()) s->worker.join();
    }
}

void SessionManager::add_task(const std::string& id, Task task) {
    std::lock_guard lk(mutex_);
    tasks_[id] = std::move(task);
}

std::vector<std::string> SessionManager::task_ids() const {
    std::lock_guard lk(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, t] : tasks_) out.push_back(id);
    return out;
}

std::optional<Task> SessionManager::task(const std::string& id) const {
    std::lock_guard lk(mutex_);
    auto it = tasks_.find(id);
    if (it == tasks_.end()) return std::nullopt;
    return it->second;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
    std::lock_guard lk(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error("unknown_session", "no session " + id);
    return it->second;
}

std::string SessionManager::create_session(const std::string& task_id, const std::array<SeatConfig, 2>& seats,
                                           const SessionOverrides& overrides) {
    auto t = task(task_id);
    if (!t) throw Error("unknown_task", "no task " + task_id);

    auto s = std::make_shared<Session>();
    s->task_id = task_id;
    s->seats = seats;
    if (seats[0].kind == SeatConfig::Kind::human && seats[1].kind == SeatConfig::Kind::human &&
        seats[0].participant_code == seats[1].participant_code) {
        throw Error("invalid_seat", "the two seats need different participant codes");
    }
    for (int seat = 1; seat <= 2; ++seat) {
        const SeatConfig& sc = seats[seat - 1];
        if (sc.kind == SeatConfig::Kind::human) {
            if (sc.participant_code.empty()) throw Error("invalid_seat", "human seat needs a participant code");
            continue;
        }
        try {
            s->agents[seat - 1] = make_agent(sc.agent, options_.agent_base, &*t);
        } catch (const Error& e) {
            throw Error("invalid_seat", "seat " + std::to_string(seat) + ": " + e.what());
        }
    }

    s->config.task = *t;
    if (overrides.max_rounds) s->config.max_rounds = *overrides.max_rounds;
    if (overrides.actions_per_turn) s->config.actions_per_turn = *overrides.actions_per_turn;
    if (overrides.rng_seed) s->config.rng_seed = *overrides.rng_seed;
    try {
        check_config(s->config);
    } catch (const Error& e) {
        throw Error("invalid_seat", e.what());
    }
    s->state = initial_state(*t);
    s->created_at = s->updated_at = now_iso();

    {
        std::lock_guard lk(mutex_);
        std::random_device rd;
        char buf[40];
        std::snprintf(buf, sizeof buf, "s%06llu-%08x", static_cast<unsigned long long>(next_id_++), rd());
        s->id = buf;
        sessions_[s->id] = s;
    }
    for (int seat = 1; seat <= 2; ++seat) {
        s->push(seat, "state_snapshot",
                {{"seat", seat},
                 {"task_id", task_id},
                 {"round", s->state.round},
                 {"status", to_string(s->state.status)},
                 {"max_rounds", s->config.max_rounds},
                 {"built", encode(s->state.built)},
                 {"goal", encode(t->goal(seat))},
                 {"inventory", encode(s->state.inventory(seat))},
                 {"dialogue", encode_dialogue(s->state.dialogue)},
                 {"partner", s->human(3 - seat) ? "human" : "agent"}});
    }
    store_.save(s->id, {task_id, s->config, {}}, s->state);
    Session* raw = s.get();
    s->worker = std::jthread([this, raw](std::stop_token st) { run(raw, st); });
    return s->id;
}

namespace {

Json event_json(const Event& e) {
    Json j{{"round", e.round}, {"agent", e.agent}, {"action", encode(e.action)}, {"applied", e.applied()}};
    if (e.rejection) j["reason"] = std::string(to_string(*e.rejection));
    return j;
}

} // namespace

void SessionManager::publish(Session& s, const WorldState& before, const std::array<bool, 2>& automatic) {
    const auto& st = s.state;
    Json added = Json::array();
    Json removed = Json::array();
    for (const auto& [pos, color] : st.built.map()) {
        if (before.built.at(pos) != color) added.push_back(encode(Block{color, pos}));
    }
    for (const auto& kv : before.built.map()) {
        if (!st.built.contains(kv.first)) removed.push_back(encode(kv.first));
    }
    const std::span<const Event> fresh(st.events.begin() + static_cast<std::ptrdiff_t>(before.events.size()),
                                       st.events.end());
    for (int seat = 1; seat <= 2; ++seat) {
        Json own = Json::array();
        Json visible = Json::array();
        for (const Event& e : fresh) {
            if (e.agent == seat) own.push_back(event_json(e));
            // a partner's rejected attempts stay private
            if (e.agent == seat || e.applied()) visible.push_back(event_json(e));
        }
        s.push(seat, "action_result",
               {{"round", before.round}, {"outcomes", own}, {"automatic_wait", automatic[seat - 1]}});
        s.push(seat, "state_delta",
               {{"round", before.round},
                {"next_round", st.round},
                {"status", to_string(st.status)},
                {"added", added},
                {"removed", removed},
                {"events", visible},
                {"inventory", encode(st.inventory(seat))}});
        for (std::size_t i = before.dialogue.size(); i < st.dialogue.size(); ++i) {
            s.push(seat, "chat", {{"round", before.round}, {"agent", st.dialogue[i].agent}, {"text", st.dialogue[i].text}});
        }
    }
}

void SessionManager::run(Session* s, std::stop_token stop) {
    std::unique_lock lk(s->m);
    auto deadline = std::chrono::steady_clock::now() + options_.human_timeout;
    while (s->state.status == EpisodeStatus::running) {
        for (int seat = 1; seat <= 2; ++seat) {
            if (s->human(seat) || s->pending[seat - 1]) continue;
            const AgentView view = make_view(s->state, s->config.task, seat, s->config);
            lk.unlock();
            std::vector<Action> acts;
            try {
                acts = s->agents[seat - 1]->act(view);
            } catch (const std::exception&) {
                acts = {Wait{}};
            }
            lk.lock();
            s->pending[seat - 1] = std::move(acts);
        }
        const bool ready = s->cv.wait_until(lk, stop, deadline, [&] { return s->pending[0] && s->pending[1]; });
        if (stop.stop_requested()) return;
        std::array<bool, 2> automatic{};
        if (!ready) {
            for (int i = 0; i < 2; ++i) {
                if (!s->pending[i]) {
                    s->pending[i] = std::vector<Action>{Wait{}};
                    automatic[i] = true;
                }
            }
        }
        const WorldState before = s->state;
        s->state = step_round(before, *s->pending[0], *s->pending[1], s->config);
        s->pending = {};
        s->updated_at = now_iso();
        publish(*s, before, automatic);
        try {
            store_.save(s->id, {s->task_id, s->config, s->state.events}, s->state);
        } catch (const Error&) {
            // the next round retries the write
        }
        deadline = std::chrono::steady_clock::now() + options_.human_timeout;
        s->cv.notify_all();
    }
    Json score = encode(score_episode(s->state.events, s->config));
    for (int seat = 1; seat <= 2; ++seat) {
        s->push(seat, "episode_end", {{"status", to_string(s->state.status)}, {"rounds", s->state.round - 1}, {"score", score}});
    }
    s->ended = true;
    s->cv.notify_all();
}

int SessionManager::submit_action(const std::string& id, int seat, const std::string& participant_code,
                                  std::vector<Action> actions) {
    auto s = find(id);
    if (seat != 1 && seat != 2) throw Error("invalid_seat", "seat must be 1 or 2");
    std::lock_guard lk(s->m);
    if (!s->human(seat)) throw Error("not_your_seat", "seat " + std::to_string(seat) + " is played by an agent");
    if (s->seats[seat - 1].participant_code != participant_code) throw Error("forbidden", "wrong participant code");
    if (s->ended) throw Error("session_ended", "the episode is over");
    if (s->pending[seat - 1]) throw Error("duplicate", "seat already acted this round");
    s->pending[seat - 1] = std::move(actions);
    s->cv.notify_all();
    return s->state.round;
}

std::vector<WireMessage> SessionManager::messages_since(const std::string& id, int seat,
                                                        const std::string& participant_code,
                                                        std::uint64_t last_seq) const {
    auto s = find(id);
    if (seat != 1 && seat != 2) throw Error("invalid_seat", "seat must be 1 or 2");
    std::lock_guard lk(s->m);
    if (!s->human(seat) || s->seats[seat - 1].participant_code != participant_code) {
        throw Error("forbidden", "stream access denied");
    }
    const auto& box = s->outbox[seat - 1];
    if (last_seq >= box.size()) return {};
    return {box.begin() + static_cast<std::ptrdiff_t>(last_seq), box.end()};
}

bool SessionManager::wait_for_messages(const std::string& id, int seat, std::uint64_t last_seq,
                                       std::chrono::milliseconds timeout) const {
    auto s = find(id);
    if (seat != 1 && seat != 2) throw Error("invalid_seat", "seat must be 1 or 2");
    std::unique_lock lk(s->m);
    return s->cv.wait_for(lk, timeout, [&] { return s->outbox[seat - 1].size() > last_seq; });
}

Json SessionManager::session_info(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lk(s->m);
    Json seats = Json::array();
    for (int seat = 1; seat <= 2; ++seat) seats.push_back({{"seat", seat}, {"kind", s->human(seat) ? "human" : "agent"}});
    return {{"session_id", s->id},
            {"task_id", s->task_id},
            {"family", to_string(s->config.task.family)},
            {"round", s->state.round},
            {"status", to_string(s->state.status)},
            {"max_rounds", s->config.max_rounds},
            {"seats", seats},
            {"created_at", s->created_at},
            {"updated_at", s->updated_at}};
}

bool SessionManager::finished(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lk(s->m);
    return s->ended;
}

bool SessionManager::wait_finished(const std::string& id, std::chrono::milliseconds timeout) const {
    auto s = find(id);
    std::unique_lock lk(s->m);
    return s->cv.wait_for(lk, timeout, [&] { return s->ended; });
}

void SessionManager::abandon(const std::string& id) {
    auto s = find(id);
    s->worker.request_stop();
    if (s->worker.joinable()) s->worker.join();
    std::lock_guard lk(s->m);
    s->ended = true;
    s->cv.notify_all();
}

} // namespace coblock
