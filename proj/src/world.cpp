#include "coblock/world.hpp"

#include <cctype>
#include <algorithm>
#include <numeric>
#include <queue>
#include <set>

namespace coblock {

namespace {

constexpr std::array<std::string_view, kColorCount> kColorNames = {
    "red", "yellow", "green", "blue", "purple", "black"};

} // namespace

std::string_view to_string(Color c) noexcept {
    return kColorNames[static_cast<std::size_t>(c)];
}

std::optional<Color> parse_color(std::string_view token) noexcept {
    for (std::size_t i = 0; i < kColorCount; ++i) {
        const std::string_view name = kColorNames[i];
        if (name.size() == token.size() &&
            std::equal(name.begin(), name.end(), token.begin(), [](char a, char b) {
                return a == std::tolower(static_cast<unsigned char>(b));
            })) {
            return static_cast<Color>(i);
        }
    }
    return std::nullopt;
}

Color color_from_string(std::string_view token) {
    if (auto c = parse_color(token)) return *c;
    throw Error("unknown_color", "unknown color '" + std::string(token) + "'");
}

std::string to_string(Position p) {
    return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ", " + std::to_string(p.z) + ")";
}

std::string to_string(const Block& b) {
    return std::string(to_string(b.color)) + "@" + to_string(b.pos);
}

Structure::Structure(std::span<const Block> blocks) {
    for (const auto& b : blocks) {
        if (!insert(b)) throw Error("occupied", "two blocks at " + to_string(b.pos));
    }
}

bool Structure::insert(Block b) {
    return blocks_.emplace(b.pos, b.color).second;
}

bool Structure::erase(Position p) {
    return blocks_.erase(p) != 0;
}

std::optional<Color> Structure::at(Position p) const {
    auto it = blocks_.find(p);
    if (it == blocks_.end()) return std::nullopt;
    return it->second;
}

std::vector<Block> Structure::blocks() const {
    std::vector<Block> out;
    out.reserve(blocks_.size());
    for (const auto& [pos, color] : blocks_) out.push_back({color, pos});
    return out;
}

Inventory::Inventory(const ColorCounts& counts) : counts_(counts) {
    for (int n : counts_) {
        if (n < 0) throw Error("negative_count", "inventory counts must be non-negative");
    }
}

Inventory::Inventory(std::initializer_list<std::pair<Color, int>> counts) : Inventory() {
    for (const auto& [c, n] : counts) set(c, n);
}

void Inventory::set(Color c, int n) {
    if (n < 0) throw Error("negative_count", "inventory counts must be non-negative");
    counts_[static_cast<std::size_t>(c)] = n;
}

bool Inventory::take(Color c) {
    auto& n = counts_[static_cast<std::size_t>(c)];
    if (n == 0) return false;
    --n;
    return true;
}

int Inventory::total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), 0);
}

bool is_supported(const Block& block, const Structure& structure, const WorldBounds& bounds) {
    if (!bounds.contains(block.pos)) {
        throw Error("out_of_bounds", "position " + to_string(block.pos) + " is outside the world");
    }
    if (block.pos.y == 0) return true;
    return std::any_of(kFaceOffsets.begin(), kFaceOffsets.end(), [&](Position d) {
        return structure.contains(block.pos + d);
    });
}

std::vector<std::vector<Block>> connected_components(const Structure& structure) {
    std::vector<std::vector<Block>> out;
    std::set<Position> seen;
    for (const auto& [start, color] : structure.map()) {
        if (seen.count(start)) continue;
        std::vector<Block> comp;
        std::queue<Position> frontier;
        frontier.push(start);
        seen.insert(start);
        while (!frontier.empty()) {
            Position p = frontier.front();
            frontier.pop();
            comp.push_back({*structure.at(p), p});
            for (Position d : kFaceOffsets) {
                Position q = p + d;
                if (structure.contains(q) && seen.insert(q).second) frontier.push(q);
            }
        }
        std::sort(comp.begin(), comp.end(), [](const Block& a, const Block& b) { return a.pos < b.pos; });
        out.push_back(std::move(comp));
    }
    return out;
}

ValidationReport validate_structure(const Structure& structure, const WorldBounds& bounds) {
    ValidationReport report;
    for (const auto& [pos, color] : structure.map()) {
        if (!bounds.contains(pos)) report.out_of_bounds.push_back({color, pos});
    }
    for (auto& comp : connected_components(structure)) {
        bool grounded = std::any_of(comp.begin(), comp.end(), [](const Block& b) { return b.pos.y == 0; });
        if (!grounded) {
            report.unsupported.insert(report.unsupported.end(), comp.begin(), comp.end());
        }
    }
    std::sort(report.unsupported.begin(), report.unsupported.end(),
              [](const Block& a, const Block& b) { return a.pos < b.pos; });
    return report;
}

ValidationReport validate_blocks(std::span<const Block> blocks, const WorldBounds& bounds) {
    Structure s;
    std::set<Position> collided;
    for (const auto& b : blocks) {
        if (!s.insert(b)) collided.insert(b.pos);
    }
    ValidationReport report = validate_structure(s, bounds);
    report.collisions.assign(collided.begin(), collided.end());
    return report;
}

Mismatches diff_structures(const Structure& built, const Structure& target) {
    Mismatches m;
    for (const auto& [pos, color] : built.map()) {
        auto want = target.at(pos);
        if (!want || *want != color) m.misplaced.push_back({color, pos});
    }
    for (const auto& [pos, color] : target.map()) {
        auto have = built.at(pos);
        if (!have || *have != color) m.missing.push_back({color, pos});
    }
    return m;
}

ColorCounts block_multiset(const Structure& structure) {
    ColorCounts counts{};
    for (const auto& [pos, color] : structure.map()) ++counts[static_cast<std::size_t>(color)];
    return counts;
}

} // namespace coblock
