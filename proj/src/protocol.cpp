#include "coblock/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace coblock {

namespace {

constexpr std::string_view kLeftCurly = "\xE2\x80\x9C";  // “
constexpr std::string_view kRightCurly = "\xE2\x80\x9D"; // ”

bool starts_with_at(std::string_view s, std::size_t i, std::string_view prefix) {
    return s.substr(i, prefix.size()) == prefix;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

void skip_space(std::string_view s, std::size_t& i) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

std::size_t opener_length(std::string_view s, std::size_t i) {
    if (starts_with_at(s, i, "``")) return 2;
    if (starts_with_at(s, i, kLeftCurly)) return kLeftCurly.size();
    if (i < s.size() && s[i] == '"') return 1;
    return 0;
}

std::size_t closer_length(std::string_view s, std::size_t i) {
    if (starts_with_at(s, i, "''")) return 2;
    if (starts_with_at(s, i, kRightCurly)) return kRightCurly.size();
    if (i < s.size() && s[i] == '"') return 1;
    return 0;
}

void append_utf8(std::string& out, unsigned cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

std::string escape(std::string_view text) {
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '"': out += "\\\""; break;
        case '\'': out += "\\'"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (starts_with_at(text, i, kRightCurly)) {
                out += "\\u201d";
                i += kRightCurly.size() - 1;
            } else {
                out += c;
            }
        }
    }
    return out;
}

/// Reads a quoted value starting at an opener. Any closer ends it, so the
/// mixed quote pairs found in hand-written prompts are accepted.
std::optional<std::string> read_quoted(std::string_view s, std::size_t& i) {
    i += opener_length(s, i);
    std::string out;
    while (i < s.size()) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            char e = s[i + 1];
            i += 2;
            switch (e) {
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            case 't': out += '\t'; break;
            case 'u': {
                unsigned cp = 0;
                if (i + 4 <= s.size() && std::from_chars(s.data() + i, s.data() + i + 4, cp, 16).ptr == s.data() + i + 4) {
                    append_utf8(out, cp);
                    i += 4;
                } else {
                    out += "\\u";
                }
                break;
            }
            default: out += e;
            }
            continue;
        }
        if (std::size_t n = closer_length(s, i)) {
            i += n;
            return out;
        }
        out += s[i++];
    }
    return std::nullopt;
}

struct Value {
    std::string text;
    bool ok = true;
};

/// Quoted, parenthesised or bare value. Bare values stop at a comma,
/// whitespace, `terminator` or "/>".
Value read_value(std::string_view s, std::size_t& i, char terminator) {
    skip_space(s, i);
    if (opener_length(s, i)) {
        auto q = read_quoted(s, i);
        return q ? Value{*q, true} : Value{{}, false};
    }
    if (i < s.size() && s[i] == '(') {
        std::size_t close = s.find(')', i);
        if (close == std::string_view::npos) {
            Value v{std::string(s.substr(i)), false};
            i = s.size();
            return v;
        }
        Value v{std::string(s.substr(i, close - i + 1)), true};
        i = close + 1;
        return v;
    }
    std::size_t start = i;
    while (i < s.size() && s[i] != ',' && s[i] != terminator && !std::isspace(static_cast<unsigned char>(s[i])) &&
           !starts_with_at(s, i, "/>")) {
        ++i;
    }
    return {std::string(s.substr(start, i - start)), true};
}

bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string read_ident(std::string_view s, std::size_t& i) {
    std::size_t start = i;
    while (i < s.size() && is_ident(s[i])) ++i;
    return std::string(s.substr(start, i - start));
}

struct Attrs {
    std::map<std::string, Value> values;
    bool terminated = false;

    const Value* get(const std::string& key) const {
        auto it = values.find(key);
        return it == values.end() ? nullptr : &it->second;
    }
};

/// key=value pairs separated by commas or spaces until `terminator` (or
/// "/>" when reading a tag). A missing '=' is tolerated.
Attrs read_attrs(std::string_view s, std::size_t& i, char terminator, std::string first_key = {}) {
    Attrs a;
    while (i < s.size()) {
        std::string key = std::move(first_key);
        first_key.clear();
        if (key.empty()) {
            while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == ',')) ++i;
            if (i >= s.size()) break;
            if (s[i] == terminator) {
                ++i;
                a.terminated = true;
                break;
            }
            if (terminator == '>' && starts_with_at(s, i, "/>")) {
                i += 2;
                a.terminated = true;
                break;
            }
            key = read_ident(s, i);
            if (key.empty()) {
                ++i;
                continue;
            }
        }
        skip_space(s, i);
        if (i < s.size() && s[i] == '=') ++i;
        skip_space(s, i);
        if (i < s.size() && (s[i] == ',' || s[i] == terminator)) {
            a.values[key] = {{}, true};
            continue;
        }
        a.values[key] = read_value(s, i, terminator);
    }
    return a;
}

std::optional<int> to_int(std::string_view s) {
    s = trim(s);
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<Position> parse_position(std::string_view text, const XmlOptions& opts) {
    text = trim(text);
    if (text.size() < 2 || text.front() != '(' || text.back() != ')') return std::nullopt;
    text = text.substr(1, text.size() - 2);
    std::array<int, 3> v{};
    for (int k = 0; k < 3; ++k) {
        std::size_t comma = text.find(',');
        if ((k < 2) == (comma == std::string_view::npos)) return std::nullopt;
        auto n = to_int(text.substr(0, comma));
        if (!n) return std::nullopt;
        v[k] = *n;
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    }
    return Position{v[0], v[1] - (opts.ground_offset ? 1 : 0), v[2]};
}

std::string format_position(Position p, const XmlOptions& opts) {
    return "(" + std::to_string(p.x) + ", " + std::to_string(p.y + (opts.ground_offset ? 1 : 0)) + ", " +
           std::to_string(p.z) + ")";
}

std::optional<Color> parse_color_loose(std::string_view s) { return parse_color(lower(trim(s))); }

std::string block_line(const Block& b, const XmlOptions& opts) {
    return "    <block block_type=\"" + std::string(to_string(b.color)) + "\", pos=\"" + format_position(b.pos, opts) +
           "\">";
}

} // namespace

std::string seat_label(int agent) { return "Agent " + std::to_string(agent); }

std::vector<DialogueEntry> dialogue_entries(const std::vector<DialogueLine>& lines) {
    std::vector<DialogueEntry> out;
    out.reserve(lines.size());
    for (const auto& l : lines) out.push_back({seat_label(l.agent), l.text});
    return out;
}

std::string serialize_world(const Structure& built, const XmlOptions& opts) {
    std::string out = "<World>\n";
    for (const auto& [p, c] : built.map()) out += block_line({c, p}, opts) + "\n";
    return out + "</World>";
}

std::string serialize_inventory(const Inventory& inv, const XmlOptions&, std::optional<int> agent) {
    std::string out = agent ? "<Inventory agent=\"" + std::to_string(*agent) + "\">\n" : "<Inventory>\n";
    for (Color c : kAllColors) {
        if (inv.count(c) == 0) continue;
        out += "    <block block_type=\"" + std::string(to_string(c)) + "\", count=" + std::to_string(inv.count(c)) +
               ">\n";
    }
    return out + "</Inventory>";
}

std::string serialize_dialogue(const std::vector<DialogueEntry>& entries) {
    std::string out = "<Dialogue>\n";
    for (const auto& e : entries) {
        out += "    <sender=\"" + escape(e.sender) + "\", message=\"" + escape(e.message) + "\">\n";
    }
    return out + "</Dialogue>";
}

std::string serialize_motive(const Goal& goal, const XmlOptions& opts) {
    std::string out = "<Motives>\n<VisualMotive>\n";
    if (goal.description) out += "<Description>" + *goal.description + "</Description>\n";
    for (const auto& [p, c] : goal.sub.map()) out += block_line({c, p}, opts) + "\n";
    return out + "</VisualMotive>\n</Motives>";
}

std::string serialize_state(const WorldState& state, const XmlOptions& opts) {
    return serialize_world(state.built, opts) + "\n" + serialize_inventory(state.inventories[0], opts, 1) + "\n" +
           serialize_inventory(state.inventories[1], opts, 2) + "\n" +
           serialize_dialogue(dialogue_entries(state.dialogue));
}

ParsedInput parse_input(std::string_view s, const XmlOptions& opts) {
    ParsedInput in;
    enum class Section { none, world, inventory, dialogue, visual } section = Section::none;
    int inventory_key = 0;

    std::vector<std::size_t> newlines;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] == '\n') newlines.push_back(k);
    }
    auto line_of = [&](std::size_t pos) {
        return static_cast<int>(std::lower_bound(newlines.begin(), newlines.end(), pos) - newlines.begin()) + 1;
    };
    auto diag = [&](std::size_t pos, std::string code, std::string_view text) {
        in.diagnostics.push_back({line_of(pos), std::move(code), std::string(text)});
    };
    auto toggle = [&](Section which, bool closing) {
        section = (closing || section == which) ? Section::none : which;
    };

    bool line_start = true;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (c == '\n') {
            line_start = true;
            ++i;
            continue;
        }
        if (line_start && (c == ' ' || c == '\t' || c == '\r')) {
            ++i;
            continue;
        }
        if (line_start && c == '#') {
            while (i < s.size() && s[i] != '\n') ++i;
            continue;
        }
        line_start = false;
        if (c != '<') {
            ++i;
            continue;
        }

        const std::size_t tag_start = i;
        std::size_t j = i + 1;
        const bool closing = j < s.size() && s[j] == '/';
        if (closing) ++j;
        std::string name = read_ident(s, j);
        std::size_t k = j;
        skip_space(s, k);
        std::string first_key;
        if (!closing && k < s.size() && s[k] == '=') {
            first_key = std::move(name);
            name.clear();
            j = k;
        }
        Attrs attrs = read_attrs(s, j, '>', first_key);
        i = j;

        if (name == "World") {
            toggle(Section::world, closing);
            if (!in.world) in.world.emplace();
        } else if (name == "Inventory") {
            toggle(Section::inventory, closing);
            if (section == Section::inventory) {
                inventory_key = 0;
                if (const Value* v = attrs.get("agent")) inventory_key = to_int(v->text).value_or(0);
                in.inventories[inventory_key];
            }
        } else if (name == "Dialogue") {
            toggle(Section::dialogue, closing);
            if (!in.dialogue) in.dialogue.emplace();
        } else if (name == "Motives" || name == "Motive") {
            if (!in.motive) in.motive.emplace();
        } else if (name == "VisualMotive") {
            toggle(Section::visual, closing);
            if (!in.motive) in.motive.emplace();
        } else if (name == "TextualMotive" && !closing) {
            if (!in.motive) in.motive.emplace();
            if (const Value* v = attrs.get("text")) in.motive->texts.push_back(std::string(trim(v->text)));
        } else if (name == "Description" && !closing) {
            std::size_t end = s.find("</Description>", i);
            std::size_t stop = end == std::string_view::npos ? s.size() : end;
            if (!in.motive) in.motive.emplace();
            in.motive->description = std::string(trim(s.substr(i, stop - i)));
            i = end == std::string_view::npos ? s.size() : end + std::string_view("</Description>").size();
        } else if (name == "block" && !closing) {
            const Value* type = attrs.get("block_type");
            auto color = type ? parse_color_loose(type->text) : std::nullopt;
            if (!type) {
                diag(tag_start, "malformed", "block without block_type");
                continue;
            }
            if (!color) {
                diag(tag_start, "unknown_color", type->text);
                continue;
            }
            if (section == Section::inventory) {
                const Value* count = attrs.get("count");
                auto n = count ? to_int(count->text) : std::nullopt;
                if (!n || *n < 0) {
                    diag(tag_start, "malformed", "bad inventory count");
                    continue;
                }
                in.inventories[inventory_key].add(*color, *n);
            } else if (section == Section::world || section == Section::visual) {
                const Value* pos = attrs.get("pos");
                auto p = pos ? parse_position(pos->text, opts) : std::nullopt;
                if (!p) {
                    diag(tag_start, "bad_position", pos ? pos->text : "");
                    continue;
                }
                (section == Section::world ? *in.world : in.motive->blocks).push_back({*color, *p});
            }
        } else if ((name.empty() || name == "chat") && !closing && attrs.get("sender")) {
            if (section != Section::dialogue) continue;
            const Value* msg = attrs.get("message");
            in.dialogue->push_back({attrs.get("sender")->text, msg ? msg->text : std::string()});
        }
    }
    return in;
}

WorldState parse_state(std::string_view text, const XmlOptions& opts) {
    ParsedInput in = parse_input(text, opts);
    if (!in.world || !in.dialogue || !in.inventories.count(1) || !in.inventories.count(2)) {
        throw Error("parse", "state text lacks a World, Inventory or Dialogue section");
    }
    if (!in.diagnostics.empty()) {
        throw Error("parse", "line " + std::to_string(in.diagnostics.front().line) + ": " + in.diagnostics.front().code);
    }
    WorldState st;
    try {
        st.built = Structure(*in.world);
    } catch (const Error& e) {
        throw Error("parse", e.what());
    }
    st.inventories = {in.inventories[1], in.inventories[2]};
    for (const auto& e : *in.dialogue) {
        std::optional<int> agent;
        if (e.sender == seat_label(1)) agent = 1;
        if (e.sender == seat_label(2)) agent = 2;
        if (!agent) throw Error("parse", "unknown sender " + e.sender);
        st.dialogue.push_back({*agent, e.message});
    }
    return st;
}

std::string serialize_command(const Action& action, const XmlOptions& opts) {
    struct V {
        const XmlOptions& opts;
        std::string operator()(const Place& p) const {
            return "place_block(block_type=" + std::string(to_string(p.color)) + ", pos=" + format_position(p.pos, opts) +
                   ")";
        }
        std::string operator()(const Break& b) const { return "break_block(pos=" + format_position(b.pos, opts) + ")"; }
        std::string operator()(const SendMessage& m) const { return "send_message(message=\"" + escape(m.text) + "\")"; }
        std::string operator()(const Wait&) const { return "wait()"; }
        std::string operator()(const EndTask&) const { return "end_task()"; }
    };
    return std::visit(V{opts}, action);
}

CommandParse parse_commands(std::string_view text, const XmlOptions& opts) {
    static constexpr std::array<std::string_view, 5> kNames = {"place_block", "break_block", "send_message", "wait",
                                                               "end_task"};
    CommandParse out;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        while (!line.empty() && (line.front() == '`' || line.front() == '-' || line.front() == '*' || line.front() == ' ')) {
            line.remove_prefix(1);
        }

        std::size_t i = 0;
        std::string name = read_ident(line, i);
        if (std::find(kNames.begin(), kNames.end(), name) == kNames.end()) continue;
        skip_space(line, i);
        if (i >= line.size() || line[i] != '(') continue;
        ++i;
        auto fail = [&](std::string code, std::string detail) {
            out.diagnostics.push_back({line_no, std::move(code), detail.empty() ? std::string(line) : detail});
        };

        if (name == "wait") {
            out.commands.emplace_back(Wait{});
            continue;
        }
        if (name == "end_task") {
            out.commands.emplace_back(EndTask{});
            continue;
        }
        Attrs attrs = read_attrs(line, i, ')');
        if (name == "send_message") {
            const Value* msg = attrs.get("message");
            if (!msg || !msg->ok) {
                fail("malformed", "");
                continue;
            }
            out.commands.emplace_back(SendMessage{msg->text});
            continue;
        }
        const Value* pos = attrs.get("pos");
        if (!pos) {
            fail("malformed", "");
            continue;
        }
        auto p = parse_position(pos->text, opts);
        if (!p) {
            fail("bad_position", pos->text);
            continue;
        }
        if (name == "break_block") {
            out.commands.emplace_back(Break{*p});
            continue;
        }
        const Value* type = attrs.get("block_type");
        if (!type) {
            fail("malformed", "");
            continue;
        }
        auto color = parse_color_loose(type->text);
        if (!color) {
            fail("unknown_color", type->text);
            continue;
        }
        out.commands.emplace_back(Place{*color, *p});
    }
    return out;
}

InventoryBelief parse_inventory_belief(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '[') text.remove_prefix(1);
    if (!text.empty() && text.back() == ']') text.remove_suffix(1);
    InventoryBelief out;
    while (!text.empty()) {
        std::size_t comma = text.find(',');
        std::string_view item = trim(text.substr(0, comma));
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        std::size_t colon = item.find(':');
        if (colon == std::string_view::npos) continue;
        auto color = parse_color_loose(item.substr(0, colon));
        if (!color) continue;
        out[*color] = to_int(item.substr(colon + 1));
    }
    return out;
}

std::string format_inventory_belief(const InventoryBelief& belief) {
    std::string out = "[";
    for (const auto& [c, n] : belief) {
        if (out.size() > 1) out += ", ";
        out += std::string(to_string(c)) + ": " + (n ? std::to_string(*n) : "unknown");
    }
    return out + "]";
}

AgentReply parse_reply(std::string_view text, const XmlOptions& opts) {
    AgentReply r;
    r.raw_text = std::string(text);
    enum class Part { none, partner, self } part = Part::none;

    auto known = [](std::string_view v) -> std::optional<std::string> {
        std::string l = lower(trim(v));
        while (!l.empty() && l.back() == '.') l.pop_back();
        if (l.empty() || l == "unknown") return std::nullopt;
        return std::string(trim(v));
    };

    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = trim(text.substr(start, end - start));
        start = end + 1;
        if (line.empty() || line.front() != '#') continue;
        line = trim(line.substr(line.find_first_not_of('#')));
        const std::string l = lower(line);
        if (l.rfind("partner modelling", 0) == 0 || l.rfind("partner modeling", 0) == 0) {
            part = Part::partner;
            continue;
        }
        if (l.rfind("self modelling", 0) == 0 || l.rfind("self modeling", 0) == 0) {
            part = Part::self;
            continue;
        }
        std::size_t colon = line.find(':');
        if (colon == std::string_view::npos || part == Part::none) continue;
        const std::string label = lower(trim(line.substr(0, colon)));
        const std::string_view value = trim(line.substr(colon + 1));
        auto belief = [&]() -> std::optional<InventoryBelief> {
            if (!known(value)) return std::nullopt;
            return parse_inventory_belief(value);
        };

        if (part == Part::partner) {
            PartnerModel& m = r.partner;
            if (label == "long-term goal") m.long_term_goal = known(value);
            else if (label == "short-term goal") m.short_term_goal = known(value);
            else if (label == "partner inventory" || label == "inventory") m.inventory_beliefs = belief();
            else if (label == "immediate plan") m.immediate_plan = known(value);
            else if (label == "explanation") m.explanation = known(value);
            else if (label == "plan executed") {
                auto v = known(value);
                std::string lv = v ? lower(*v) : "";
                if (lv == "yes" || lv == "true") m.plan_executed = true;
                else if (lv == "no" || lv == "false") m.plan_executed = false;
                else m.plan_executed.reset();
            }
        } else {
            SelfModel& m = r.self;
            if (label == "long-term goal") m.long_term_goal = known(value);
            else if (label == "short-term goal") m.short_term_goal = known(value);
            else if (label == "my inventory" || label == "inventory") m.remaining_inventory = belief();
            else if (label == "explanation") m.explanation = known(value);
        }
    }
    CommandParse cp = parse_commands(text, opts);
    r.commands = std::move(cp.commands);
    r.diagnostics = std::move(cp.diagnostics);
    return r;
}

std::string PromptBundle::render() const {
    std::string out = task_description;
    for (const auto& ex : cot_examples) out += "\n\n" + ex;
    out += "\n\n<Input>\n" + motive_xml + "\n" + world_xml + "\n" + inventory_xml + "\n" + dialogue_xml + "\n";
    for (const auto& f : feedback) out += f + "\n";
    return out + "</Input>";
}

} // namespace coblock
