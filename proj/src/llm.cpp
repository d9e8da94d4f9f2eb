#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "coblock/agents.hpp"

namespace coblock {

std::string_view to_string(LmErrorKind k) noexcept {
    switch (k) {
    case LmErrorKind::timeout: return "timeout";
    case LmErrorKind::http_status: return "http_status";
    case LmErrorKind::malformed_body: return "malformed_body";
    case LmErrorKind::prompt_too_large: return "prompt_too_large";
    case LmErrorKind::no_fixture: return "no_fixture";
    }
    return "unknown";
}

std::string request_digest(const LmRequest& request) {
    Json messages = Json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"text", m.text}});
    Json j{{"messages", messages}, {"temperature", request.temperature}, {"max_tokens", request.max_tokens}};
    return sha256_hex(dump_canonical(j));
}

void MockBackend::add_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream text;
        text << in.rdbuf();
        add(entry.path().stem().string(), text.str());
    }
    if (ec) throw Error("config", "cannot read fixture directory " + dir.string());
}

MockBackend MockBackend::from_directory(const std::filesystem::path& dir) {
    MockBackend m;
    m.add_directory(dir);
    return m;
}

LmResponse MockBackend::complete(const LmRequest& request) {
    ++calls_;
    if (request.messages.empty()) throw LmError(LmErrorKind::malformed_body, "empty request");
    if (auto it = fixtures_.find(request_digest(request)); it != fixtures_.end()) return {it->second, 0, 0};
    if (fallback_) return {fallback_(request), 0, 0};
    throw LmError(LmErrorKind::no_fixture, "no fixture for request " + request_digest(request));
}

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    const char* key = std::getenv(options_.api_key_env.c_str());
    if (!key || !*key) throw Error("config", "environment variable " + options_.api_key_env + " is not set");
    api_key_ = key;
    if (options_.base_url.find("://") == std::string::npos) {
        throw Error("config", "backend base_url must include a scheme: " + options_.base_url);
    }
    if (options_.model.empty()) throw Error("config", "backend model is not set");
}

LmResponse HttpBackend::complete(const LmRequest& request) {
    std::size_t chars = 0;
    for (const auto& m : request.messages) chars += m.text.size();
    if (static_cast<long long>(chars / 4) > options_.max_prompt_tokens) {
        throw LmError(LmErrorKind::prompt_too_large,
                      "prompt of ~" + std::to_string(chars / 4) + " tokens exceeds " +
                          std::to_string(options_.max_prompt_tokens));
    }

    const std::string& url = options_.base_url;
    std::size_t host_start = url.find("://") + 3;
    std::size_t path_start = url.find('/', host_start);
    std::string origin = url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    Json messages = Json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.text}});
    Json body{{"model", options_.model},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};

    httplib::Client client(origin);
    client.set_connection_timeout(options_.timeout_seconds, 0);
    client.set_read_timeout(options_.timeout_seconds, 0);
    client.set_write_timeout(options_.timeout_seconds, 0);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    auto res = client.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
        // Unreachable hosts and stalled reads both surface as timeouts.
        throw LmError(LmErrorKind::timeout, "request failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw LmError(LmErrorKind::http_status, "HTTP " + std::to_string(res->status));
    }
    try {
        Json j = Json::parse(res->body);
        LmResponse out;
        out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage")) {
            out.prompt_tokens = j["usage"].value("prompt_tokens", 0);
            out.completion_tokens = j["usage"].value("completion_tokens", 0);
        }
        return out;
    } catch (const Json::exception& e) {
        throw LmError(LmErrorKind::malformed_body, e.what());
    }
}

LlmAgent::LlmAgent(std::shared_ptr<LmBackend> backend, LlmOptions options, std::optional<Structure> target)
    : backend_(std::move(backend)), options_(std::move(options)), target_(std::move(target)) {
    if (!backend_) throw Error("config", "LLM agent needs a backend");
}

std::vector<Action> LlmAgent::act(const AgentView& view) {
    const Structure* truth = options_.ground_truth_checker && target_ ? &*target_ : nullptr;
    const ReflectionReport report = reflect(view, truth);
    const PromptBundle bundle = build_prompt(view, options_.prompt, options_.prompt.reflection ? &report : nullptr);

    LmRequest req;
    req.temperature = options_.temperature;
    req.max_tokens = options_.max_tokens;
    req.messages.push_back({"user", bundle.render()});

    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        std::string joined;
        for (const auto& m : req.messages) joined += (joined.empty() ? "" : "\n\n") + m.text;
        prompts_.push_back(std::move(joined));

        LmResponse resp;
        try {
            resp = backend_->complete(req);
        } catch (const LmError& e) {
            note(view, "backend " + e.code() + ": " + e.what());
            return {Wait{}};
        }
        const AgentReply reply = parse_reply(resp.text, options_.prompt.xml);

        std::string problem;
        if (reply.commands.empty()) {
            if (reply.diagnostics.empty()) return {Wait{}};
            const auto& d = reply.diagnostics.front();
            problem = "the line `" + d.text + "` could not be read (" + d.code + ")";
        } else {
            Structure built = view.built;
            Inventory inv = view.inventory;
            std::vector<Action> out;
            const std::size_t limit = std::min<std::size_t>(reply.commands.size(), view.actions_per_turn);
            for (std::size_t i = 0; i < limit; ++i) {
                const Action& cmd = reply.commands[i];
                if (auto reason = check_action(built, inv, cmd, view.rules)) {
                    if (out.empty()) {
                        problem = "your command " + serialize_command(cmd, options_.prompt.xml) + " was rejected: " +
                                  std::string(to_string(*reason));
                    }
                    break;
                }
                if (const auto* p = std::get_if<Place>(&cmd)) {
                    inv.take(p->color);
                    built.insert({p->color, p->pos});
                } else if (const auto* b = std::get_if<Break>(&cmd)) {
                    built.erase(b->pos);
                }
                out.push_back(cmd);
            }
            if (!out.empty()) return out;
        }
        note(view, problem);
        req.messages.push_back({"assistant", resp.text});
        req.messages.push_back({"user", "# " + problem + ". Reply again with one valid command."});
    }
    note(view, "no valid command after " + std::to_string(options_.max_retries + 1) + " attempts; waiting");
    return {Wait{}};
}

std::string scripted_reply(const LmRequest& request, const XmlOptions& xml) {
    const std::string& text = request.messages.front().text;
    std::size_t at = text.rfind("<Input>");
    std::string_view input = at == std::string::npos ? std::string_view(text) : std::string_view(text).substr(at);
    ParsedInput in = parse_input(input, xml);

    AgentView v;
    if (auto you = input.find("# You are Agent "); you != std::string_view::npos) {
        v.agent_id = input[you + 16] == '2' ? 2 : 1;
    }
    if (in.motive) {
        for (const Block& b : in.motive->blocks) v.goal.sub.insert(b);
    }
    if (in.world) {
        for (const Block& b : *in.world) v.built.insert(b);
    }
    if (auto it = in.inventories.find(0); it != in.inventories.end()) v.inventory = it->second;
    if (in.dialogue) {
        for (const auto& e : *in.dialogue) v.dialogue.push_back({e.sender == seat_label(2) ? 2 : 1, e.message});
    }
    ScriptedOptions opts;
    opts.patience = 1 << 30; // no action history in the prompt, so never end the task
    return serialize_command(scripted_policy(v, opts), xml);
}

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw Error("config", std::string("agent config field '") + key + "' has the wrong type");
    }
}

} // namespace

std::shared_ptr<LmBackend> make_backend(const Json& b, const std::filesystem::path& base, const XmlOptions& xml) {
    const std::string backend_kind = get_or<std::string>(b, "kind", "");
    if (backend_kind == "mock") {
        const std::string fallback = get_or<std::string>(b, "fallback", "wait");
        MockBackend m;
        if (fallback == "scripted") {
            m = MockBackend([xml](const LmRequest& r) { return scripted_reply(r, xml); });
        } else if (fallback == "wait") {
            m = MockBackend([](const LmRequest&) { return std::string("wait()"); });
        } else if (fallback != "none") {
            throw Error("config", "unknown mock fallback '" + fallback + "'");
        }
        if (b.contains("fixtures")) {
            std::filesystem::path dir = get_or<std::string>(b, "fixtures", "");
            if (dir.is_relative()) dir = base / dir;
            m.add_directory(dir);
        }
        return std::make_shared<MockBackend>(std::move(m));
    } else if (backend_kind == "http") {
        HttpBackendOptions h;
        h.base_url = get_or<std::string>(b, "base_url", "");
        h.model = get_or<std::string>(b, "model", "");
        h.api_key_env = get_or<std::string>(b, "api_key_env", h.api_key_env);
        h.timeout_seconds = get_or(b, "timeout_seconds", h.timeout_seconds);
        h.max_prompt_tokens = get_or(b, "max_prompt_tokens", h.max_prompt_tokens);
        return std::make_shared<HttpBackend>(h);
    }
    throw Error("config", "unknown backend kind '" + backend_kind + "'");
}

std::unique_ptr<Agent> make_agent(const Json& config, const std::filesystem::path& base, const Task* task) {
    if (!config.is_object()) throw Error("config", "agent config must be a JSON object");
    const std::string kind = get_or<std::string>(config, "kind", "");
    if (kind == "scripted") {
        ScriptedOptions o;
        o.altruism = get_or(config, "altruism", o.altruism);
        o.patience = get_or(config, "patience", o.patience);
        if (o.patience < 1) throw Error("config", "patience must be at least 1");
        return std::make_unique<ScriptedAgent>(o);
    }
    if (kind != "llm") throw Error("config", "unknown agent kind '" + kind + "'");

    LlmOptions o;
    o.prompt.partner_modeling = get_or(config, "partner_modeling", true);
    o.prompt.reflection = get_or(config, "reflection", true);
    o.prompt.xml.ground_offset = get_or(config, "ground_offset", false);
    o.max_retries = get_or(config, "max_retries", o.max_retries);
    o.temperature = get_or(config, "temperature", o.temperature);
    o.max_tokens = get_or(config, "max_tokens", o.max_tokens);
    o.ground_truth_checker = get_or(config, "ground_truth_checker", false);
    if (o.max_retries < 0) throw Error("config", "max_retries must be non-negative");
    if (config.contains("feedback_template_file")) {
        std::filesystem::path p = get_or<std::string>(config, "feedback_template_file", "");
        if (p.is_relative()) p = base / p;
        std::ifstream in(p, std::ios::binary);
        if (!in) throw Error("config", "cannot read feedback template " + p.string());
        std::ostringstream text;
        text << in.rdbuf();
        std::string t = text.str();
        while (!t.empty() && (t.back() == '\n' || t.back() == '\r')) t.pop_back();
        o.prompt.feedback_template = t;
    }

    if (!config.contains("backend") || !config["backend"].is_object()) {
        throw Error("config", "llm agent needs a backend object");
    }
    auto backend = make_backend(config["backend"], base, o.prompt.xml);
    std::optional<Structure> target;
    if (task) target = task->target;
    return std::make_unique<LlmAgent>(backend, o, target);
}

} // namespace coblock
