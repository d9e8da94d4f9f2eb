#include "coblock/episode.hpp"

#include <fstream>
#include <sstream>

namespace coblock {

namespace {

std::vector<Action> decide(Agent& agent, const AgentView& view) {
    try {
        return agent.act(view);
    } catch (const std::exception&) {
        return {Wait{}};
    }
}

} // namespace

WorldState run_episode(const EpisodeConfig& config, Agent& agent1, Agent& agent2, const RoundCallback& on_round) {
    check_config(config);
    WorldState state = initial_state(config.task);
    while (state.status == EpisodeStatus::running) {
        const auto a1 = decide(agent1, make_view(state, config.task, 1, config));
        const auto a2 = decide(agent2, make_view(state, config.task, 2, config));
        state = step_round(state, a1, a2, config);
        if (on_round) on_round(state);
    }
    return state;
}

std::string encode_log(const EpisodeRecord& record) {
    Json header{{"header",
                 {{"format_version", kFormatVersion}, {"task_id", record.task_id}, {"config", encode(record.config)}}}};
    std::string out = dump_canonical(header) + "\n";
    for (const Event& e : record.events) out += canonical_json(e) + "\n";
    return out;
}

EpisodeRecord decode_log(std::string_view text) {
    EpisodeRecord rec;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            throw Error("corrupt_log", "line " + std::to_string(line_no + 1) + " is truncated");
        }
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            Json j = parse_json(line);
            if (!have_header) {
                const Json& h = j.at("header");
                if (h.at("format_version").get<int>() != kFormatVersion) {
                    throw Error("corrupt_log", "unsupported format_version");
                }
                rec.task_id = h.at("task_id").get<std::string>();
                rec.config = decode_config(h.at("config"));
                have_header = true;
            } else {
                rec.events.push_back(decode_event(j));
            }
        } catch (const Error& e) {
            throw Error("corrupt_log", "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Json::exception& e) {
            throw Error("corrupt_log", "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw Error("corrupt_log", "log has no header line");
    return rec;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

EpisodeRecord read_log_file(const std::filesystem::path& path) { return decode_log(read_file(path)); }

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("io", "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error("io", "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("io", "cannot rename into " + path.string() + ": " + ec.message());
}

Task read_task_file(const std::filesystem::path& path) { return decode_task(parse_json(read_file(path))); }

} // namespace coblock
