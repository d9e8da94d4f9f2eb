#include "coblock/grounding.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "coblock/engine.hpp"

namespace coblock {

namespace {

int shown_y(int y, const XmlOptions& opts) { return opts.ground_offset ? y + 1 : y; }

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

const char* kNumberWords[] = {"zero",    "one",     "two",       "three",    "four",    "five",    "six",
                              "seven",   "eight",   "nine",      "ten",      "eleven",  "twelve",  "thirteen",
                              "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen", "twenty"};

std::set<std::string> words(const std::string& text) {
    std::set<std::string> out;
    static const std::regex word(R"([a-z0-9]+)");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), word); it != std::sregex_iterator(); ++it) {
        out.insert(it->str());
    }
    return out;
}

GroundingCase grade_description(const Structure& target, const std::string& reply) {
    const auto seen = words(lower(reply));
    const ColorCounts counts = block_multiset(target);
    int checks = 0;
    int hits = 0;
    std::string missing;
    for (std::size_t c = 0; c < kColorCount; ++c) {
        const int n = counts[c];
        if (n == 0) continue;
        const std::string name(to_string(static_cast<Color>(c)));
        checks += 2;
        if (seen.count(name)) {
            ++hits;
        } else {
            missing += " colour:" + name;
        }
        const bool number = seen.count(std::to_string(n)) ||
                            (n < static_cast<int>(std::size(kNumberWords)) && seen.count(kNumberWords[n]));
        if (number) {
            ++hits;
        } else {
            missing += " count:" + std::to_string(n);
        }
    }
    GroundingCase out;
    out.score = checks == 0 ? 0.0 : static_cast<double>(hits) / checks;
    out.success = checks > 0 && hits == checks;
    out.detail = out.success ? "heuristic: all colours and counts mentioned" : "heuristic: missing" + missing;
    return out;
}

GroundingCase grade_plan(const Structure& target, const std::string& reply, const XmlOptions& opts) {
    GroundingCase out;
    const CommandParse parsed = parse_commands(reply, opts);
    if (parsed.commands.empty()) {
        out.detail = "no parseable commands";
        return out;
    }
    EpisodeConfig config;
    WorldState state;
    state.inventory(1) = Inventory(block_multiset(target));
    for (const Action& a : parsed.commands) state = apply_action(state, 1, a, config);
    const auto rejected = std::count_if(state.events.begin(), state.events.end(),
                                        [](const Event& e) { return !e.applied(); });
    out.success = state.built == target;
    out.score = out.success ? 1.0 : 0.0;
    const Mismatches diff = diff_structures(state.built, target);
    out.detail = std::to_string(parsed.commands.size()) + " commands, " + std::to_string(rejected) + " rejected, " +
                 std::to_string(diff.missing.size()) + " missing, " + std::to_string(diff.misplaced.size()) +
                 " misplaced";
    return out;
}

std::string plan_text(const std::vector<Block>& blocks, const XmlOptions& opts) {
    std::string out;
    for (const Block& b : build_order(blocks)) out += serialize_command(Place{b.color, b.pos}, opts) + "\n";
    return out;
}

} // namespace

std::string describe_structure_text(const Structure& s, const XmlOptions& opts) {
    std::map<int, std::vector<Block>> layers;
    for (const Block& b : s.blocks()) layers[b.pos.y].push_back(b);
    std::string out = "A structure of " + std::to_string(s.size()) + " blocks.";
    for (const auto& [y, blocks] : layers) {
        out += " Layer " + std::to_string(shown_y(y, opts)) + ":";
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const Block& b = blocks[i];
            out += std::string(i ? ";" : "") + " a " + std::string(to_string(b.color)) + " block at (" +
                   std::to_string(b.pos.x) + ", " + std::to_string(shown_y(b.pos.y, opts)) + ", " +
                   std::to_string(b.pos.z) + ")";
        }
        out += ".";
    }
    return out;
}

std::vector<Block> parse_structure_text(std::string_view text, const XmlOptions& opts) {
    static const std::regex clause(R"(\ba\s+([A-Za-z]+)\s+block\s+at\s+\(\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*\))",
                                   std::regex::icase);
    std::vector<Block> out;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), clause); it != std::sregex_iterator(); ++it) {
        const auto color = parse_color(lower((*it)[1].str()));
        if (!color) continue;
        int y = std::stoi((*it)[3].str());
        if (opts.ground_offset) --y;
        out.push_back({*color, {std::stoi((*it)[2].str()), y, std::stoi((*it)[4].str())}});
    }
    return out;
}

std::string grounding_prompt(int part, const Structure& target, const XmlOptions& opts) {
    const std::string ground = opts.ground_offset ? "y=1" : "y=0";
    switch (part) {
    case 1:
        return "# Task: describe the structure in the <Motives> section. Say what it looks like, which colours it "
               "uses and how many blocks of each colour.\n\n<Input>\n" +
               serialize_motive(Goal{target, std::nullopt}, opts) + "\n</Input>";
    case 2:
        return "# Task: write the commands that build the structure in the <Motives> section, one per line, as "
               "place_block(block_type=COLOR, pos=(x, y, z)). The ground is " + ground +
               "; every block must rest on the ground or touch a placed block.\n\n<Input>\n" +
               serialize_motive(Goal{target, std::nullopt}, opts) + "\n</Input>";
    case 3:
        return "# Task: write the commands that build the structure described in the <Motives> section, one per "
               "line, as place_block(block_type=COLOR, pos=(x, y, z)). The ground is " + ground +
               "; every block must rest on the ground or touch a placed block.\n\n<Input>\n<Motives>\n"
               "<TextualMotive text=\"" + describe_structure_text(target, opts) + "\"/>\n</Motives>\n</Input>";
    default:
        throw Error("config", "grounding part must be 1, 2 or 3");
    }
}

GroundingCase grade_grounding(int part, const Structure& target, const std::string& reply, const XmlOptions& opts) {
    GroundingCase out;
    if (part == 1) {
        out = grade_description(target, reply);
    } else if (part == 2 || part == 3) {
        out = grade_plan(target, reply, opts);
    } else {
        throw Error("config", "grounding part must be 1, 2 or 3");
    }
    out.reply = reply;
    return out;
}

double GroundingReport::success_rate() const {
    if (cases.empty()) return 0.0;
    const auto ok = std::count_if(cases.begin(), cases.end(), [](const GroundingCase& c) { return c.success; });
    return static_cast<double>(ok) / static_cast<double>(cases.size());
}

GroundingReport run_grounding(int part, const std::vector<std::pair<std::string, Structure>>& targets,
                              const GroundingSolver& solver, const XmlOptions& opts) {
    GroundingReport report;
    report.part = part;
    for (const auto& [id, target] : targets) {
        const std::string prompt = grounding_prompt(part, target, opts);
        GroundingCase c;
        try {
            c = grade_grounding(part, target, solver(prompt), opts);
        } catch (const std::exception& e) {
            c.detail = std::string("solver failed: ") + e.what();
        }
        c.task_id = id;
        report.cases.push_back(std::move(c));
    }
    return report;
}

std::vector<Block> build_order(const std::vector<Block>& blocks) {
    std::vector<Block> rest = blocks;
    std::sort(rest.begin(), rest.end(), [](const Block& a, const Block& b) {
        return std::tie(a.pos.y, a.pos.x, a.pos.z) < std::tie(b.pos.y, b.pos.x, b.pos.z);
    });
    std::vector<Block> out;
    Structure built;
    while (!rest.empty()) {
        auto it = std::find_if(rest.begin(), rest.end(), [&](const Block& b) {
            try {
                return !built.contains(b.pos) && is_supported(b, built);
            } catch (const Error&) {
                return false;
            }
        });
        if (it == rest.end()) {
            // nothing placeable is left; keep the remainder in layer order
            out.insert(out.end(), rest.begin(), rest.end());
            break;
        }
        built.insert(*it);
        out.push_back(*it);
        rest.erase(it);
    }
    return out;
}

std::string oracle_grounding_reply(int part, const std::string& prompt, const XmlOptions& opts) {
    const ParsedInput in = parse_input(prompt, opts);
    if (!in.motive) throw Error("parse", "prompt has no motive");
    switch (part) {
    case 1: {
        Structure s;
        for (const Block& b : in.motive->blocks) s.insert(b);
        std::string out = describe_structure_text(s, opts) + " It uses";
        const ColorCounts counts = block_multiset(s);
        for (std::size_t c = 0; c < kColorCount; ++c) {
            const int n = counts[c];
            if (n) out += " " + std::to_string(n) + " " + std::string(to_string(static_cast<Color>(c))) + ",";
        }
        out.back() = '.';
        return out;
    }
    case 2:
        return plan_text(in.motive->blocks, opts);
    case 3: {
        std::string text;
        for (const auto& t : in.motive->texts) text += t + "\n";
        return plan_text(parse_structure_text(text, opts), opts);
    }
    default:
        throw Error("config", "grounding part must be 1, 2 or 3");
    }
}

Json encode(const GroundingReport& r) {
    Json cases = Json::array();
    for (const auto& c : r.cases) {
        cases.push_back({{"task_id", c.task_id}, {"success", c.success}, {"score", c.score}, {"detail", c.detail}});
    }
    return {{"part", r.part}, {"success_rate", r.success_rate()}, {"cases", cases}};
}

} // namespace coblock
