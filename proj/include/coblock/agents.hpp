#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coblock/codec.hpp"
#include "coblock/engine.hpp"
#include "coblock/protocol.hpp"

namespace coblock {

/// What one agent may see. Never holds the partner's goal or inventory.
/// Event digests are blanked because they hash the full state.
struct AgentView {
    int agent_id = 1;
    Goal goal;
    Inventory inventory;
    Structure built;
    std::vector<DialogueLine> dialogue;
    std::vector<Event> own_events;
    std::vector<Event> partner_events; ///< applied partner actions only
    int round = 1;
    int actions_per_turn = 1;
    ActionRules rules;

    friend bool operator==(const AgentView&, const AgentView&) = default;
};

AgentView make_view(const WorldState& state, const Task& task, int agent, const EpisodeConfig& config);

class Agent {
public:
    virtual ~Agent() = default;
    virtual std::vector<Action> act(const AgentView& view) = 0;

    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

protected:
    void note(const AgentView& view, const std::string& text) {
        diagnostics_.push_back("round " + std::to_string(view.round) + ": " + text);
    }

private:
    std::vector<std::string> diagnostics_;
};

// ---- scripted baseline ----

/// "REQUEST place <color> (x,y,z)"
std::string request_text(const Block& b);
std::optional<Block> parse_request(std::string_view text);
/// Blocks the given speaker asked for, in request order, without duplicates.
std::vector<Block> requests_from(const std::vector<DialogueLine>& dialogue, int speaker);

struct ScriptedOptions {
    bool altruism = true; ///< honour partner requests
    int patience = 5;     ///< quiet rounds before EndTask
};

/// Deterministic policy, a pure function of the view:
/// 1. place the first own-goal block (position order) that is supported and in stock;
/// 2. otherwise send one REQUEST per goal block whose colour is missing;
/// 3. otherwise place a block the partner requested, if spare stock allows;
/// 4. otherwise Wait, or EndTask once the own goal is done, no partner request
///    is open and nothing has happened for `patience` rounds.
Action scripted_policy(const AgentView& view, const ScriptedOptions& options = {});

class ScriptedAgent : public Agent {
public:
    explicit ScriptedAgent(ScriptedOptions options = {}) : options_(options) {}
    std::vector<Action> act(const AgentView& view) override { return {scripted_policy(view, options_)}; }

private:
    ScriptedOptions options_;
};

// ---- reflection ----

enum class TeamRole { lead, follow };
enum class Persuasion { passive, proactive };

std::string_view to_string(TeamRole r) noexcept;
std::string_view to_string(Persuasion p) noexcept;

struct Strategy {
    TeamRole team_role = TeamRole::follow;
    double altruism = 0.5; ///< 0 = own goal first, 1 = helping first
    Persuasion persuasion = Persuasion::passive;
    friend bool operator==(const Strategy&, const Strategy&) = default;
};

struct ReflectionReport {
    Mismatches mismatches;
    Strategy strategy;
    Structure reference; ///< what the built blocks were compared against
};

/// Blocks the agent knows should exist: its own goal plus blocks the partner
/// declared through REQUEST messages.
Structure known_structure(const AgentView& view);

/// External checker. Mismatches are the built blocks at known positions whose
/// colour is wrong, and known blocks still missing. With `ground_truth`, the
/// full target is used instead (machine-machine diagnostics only).
ReflectionReport reflect(const AgentView& view, const Structure* ground_truth = nullptr);

// ---- prompts ----

inline constexpr std::string_view kDefaultFeedbackTemplate =
    "# Feedback: the block at {pos} is {built} but should be {expected}. Break it before continuing.";

struct PromptConfig {
    bool partner_modeling = true; ///< Step 2
    bool reflection = true;       ///< Step 3
    XmlOptions xml;
    std::string feedback_template = std::string(kDefaultFeedbackTemplate);
};

/// Section headings that only appear when Step 2 / Step 3 are enabled.
inline constexpr std::string_view kPartnerSection = "# Partner Modelling";
inline constexpr std::string_view kSelfSection = "# Self Modelling";
inline constexpr std::string_view kReflectionSection = "# Reflection";

std::string render_feedback(const std::string& tmpl, const Block& built, Color expected, const XmlOptions& xml);

PromptBundle build_prompt(const AgentView& view, const PromptConfig& config, const ReflectionReport* reflection);

// ---- language-model backends ----

struct LmMessage {
    std::string role;
    std::string text;
};

struct LmRequest {
    std::vector<LmMessage> messages;
    double temperature = 0.0;
    int max_tokens = 512;
};

struct LmResponse {
    std::string text;
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

enum class LmErrorKind { timeout, http_status, malformed_body, prompt_too_large, no_fixture };
std::string_view to_string(LmErrorKind k) noexcept;

class LmError : public Error {
public:
    LmError(LmErrorKind kind, const std::string& what) : Error(std::string(to_string(kind)), what), kind_(kind) {}
    LmErrorKind kind() const noexcept { return kind_; }

private:
    LmErrorKind kind_;
};

class LmBackend {
public:
    virtual ~LmBackend() = default;
    /// Throws LmError.
    virtual LmResponse complete(const LmRequest& request) = 0;
};

/// SHA-256 of the request's canonical JSON; names mock fixture files.
std::string request_digest(const LmRequest& request);

/// Replays fixture text keyed by request digest, falling back to a callable.
class MockBackend : public LmBackend {
public:
    using Responder = std::function<std::string(const LmRequest&)>;

    MockBackend() = default;
    explicit MockBackend(Responder fallback) : fallback_(std::move(fallback)) {}
    /// Loads every <digest>.txt file in `dir`.
    static MockBackend from_directory(const std::filesystem::path& dir);

    void add(const std::string& digest, std::string text) { fixtures_[digest] = std::move(text); }
    void add_directory(const std::filesystem::path& dir);
    LmResponse complete(const LmRequest& request) override;
    std::size_t calls() const noexcept { return calls_; }

private:
    std::map<std::string, std::string> fixtures_;
    Responder fallback_;
    std::size_t calls_ = 0;
};

struct HttpBackendOptions {
    std::string base_url; ///< e.g. https://api.openai.com
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    int timeout_seconds = 60;
    int max_prompt_tokens = 16000; ///< estimated as characters / 4
};

/// OpenAI-compatible chat-completions client.
class HttpBackend : public LmBackend {
public:
    /// Throws Error("config") when the key variable is unset or the URL is bad.
    explicit HttpBackend(HttpBackendOptions options);
    LmResponse complete(const LmRequest& request) override;

private:
    HttpBackendOptions options_;
    std::string api_key_;
};

// ---- LLM agent ----

struct LlmOptions {
    PromptConfig prompt;
    int max_retries = 2; ///< re-prompts after the first attempt
    double temperature = 0.0;
    int max_tokens = 512;
    bool ground_truth_checker = false;
};

class LlmAgent : public Agent {
public:
    LlmAgent(std::shared_ptr<LmBackend> backend, LlmOptions options, std::optional<Structure> target = {});
    std::vector<Action> act(const AgentView& view) override;

    /// Every prompt sent, retries included.
    const std::vector<std::string>& prompts() const { return prompts_; }

private:
    std::shared_ptr<LmBackend> backend_;
    LlmOptions options_;
    std::optional<Structure> target_;
    std::vector<std::string> prompts_;
};

/// Reconstructs the seat's view from the last <Input> block of a prompt and
/// answers with the scripted policy. Lets mock-backed runs make progress.
std::string scripted_reply(const LmRequest& request, const XmlOptions& xml = {});

/// {"kind":"mock","fallback":"wait"|"scripted"|"none","fixtures":dir} or
/// {"kind":"http","base_url":...,"model":...}. Throws Error("config").
std::shared_ptr<LmBackend> make_backend(const Json& config, const std::filesystem::path& base = {},
                                        const XmlOptions& xml = {});

/// Builds an agent from its JSON config, e.g. {"kind":"scripted"} or
/// {"kind":"llm","partner_modeling":true,"reflection":false,"backend":{...}}.
/// Relative fixture paths resolve against `base`. Throws Error("config").
std::unique_ptr<Agent> make_agent(const Json& config, const std::filesystem::path& base = {},
                                  const Task* task = nullptr);

} // namespace coblock
