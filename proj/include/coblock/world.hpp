#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coblock {

/// Base class for all errors raised by the library. `code()` is a stable
/// machine-readable token (e.g. "out_of_bounds", "budget_exhausted").
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

enum class Color : std::uint8_t { red, yellow, green, blue, purple, black };

inline constexpr std::size_t kColorCount = 6;
inline constexpr std::array<Color, kColorCount> kAllColors = {
    Color::red, Color::yellow, Color::green, Color::blue, Color::purple, Color::black};

std::string_view to_string(Color c) noexcept;
std::optional<Color> parse_color(std::string_view token) noexcept;
/// Throws Error("unknown_color") on anything outside the six-member set.
Color color_from_string(std::string_view token);

struct Position {
    int x = 0;
    int y = 0;
    int z = 0;

    friend auto operator<=>(const Position&, const Position&) = default;
    friend bool operator==(const Position&, const Position&) = default;
};

inline constexpr std::array<Position, 6> kFaceOffsets = {{
    {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

inline Position operator+(Position a, Position b) noexcept {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}

std::string to_string(Position p);

struct WorldBounds {
    int extent = 16; ///< x and z range over [0, extent)
    int height = 16; ///< y ranges over [0, height)

    bool contains(Position p) const noexcept {
        return p.x >= 0 && p.z >= 0 && p.y >= 0 && p.x < extent && p.z < extent && p.y < height;
    }
    friend bool operator==(const WorldBounds&, const WorldBounds&) = default;
};

struct Block {
    Color color = Color::red;
    Position pos;

    friend bool operator==(const Block&, const Block&) = default;
};

std::string to_string(const Block& b);

/// A set of blocks keyed by position. At most one block per position.
class Structure {
public:
    using Map = std::map<Position, Color>;

    Structure() = default;
    /// Throws Error("occupied") when two blocks share a position.
    explicit Structure(std::span<const Block> blocks);
    Structure(std::initializer_list<Block> blocks)
        : Structure(std::span<const Block>(blocks.begin(), blocks.size())) {}

    /// Returns false (and leaves the structure untouched) if pos is taken.
    bool insert(Block b);
    bool erase(Position p);

    std::optional<Color> at(Position p) const;
    bool contains(Position p) const { return blocks_.count(p) != 0; }
    std::size_t size() const noexcept { return blocks_.size(); }
    bool empty() const noexcept { return blocks_.empty(); }

    const Map& map() const noexcept { return blocks_; }
    std::vector<Block> blocks() const;

    friend bool operator==(const Structure&, const Structure&) = default;

private:
    Map blocks_;
};

using ColorCounts = std::array<int, kColorCount>;

class Inventory {
public:
    Inventory() { counts_.fill(0); }
    explicit Inventory(const ColorCounts& counts);
    Inventory(std::initializer_list<std::pair<Color, int>> counts);

    int count(Color c) const noexcept { return counts_[static_cast<std::size_t>(c)]; }
    /// Throws Error("negative_count") if the result would drop below zero.
    void set(Color c, int n);
    void add(Color c, int n = 1) { set(c, count(c) + n); }
    /// Removes one unit; returns false when none is left.
    bool take(Color c);

    int total() const noexcept;
    const ColorCounts& counts() const noexcept { return counts_; }

    friend bool operator==(const Inventory&, const Inventory&) = default;

private:
    ColorCounts counts_;
};

struct Goal {
    Structure sub;
    std::optional<std::string> description;

    friend bool operator==(const Goal&, const Goal&) = default;
};

/// True iff the block rests on y=0 or has a face-adjacent neighbour in `structure`.
/// Throws Error("out_of_bounds") when block.pos lies outside `bounds`.
bool is_supported(const Block& block, const Structure& structure, const WorldBounds& bounds = {});

struct ValidationReport {
    std::vector<Block> unsupported;      ///< blocks whose component never touches y=0
    std::vector<Position> collisions;    ///< positions claimed by more than one block
    std::vector<Block> out_of_bounds;

    bool empty() const noexcept {
        return unsupported.empty() && collisions.empty() && out_of_bounds.empty();
    }
};

/// Gravity check: every face-connected component must contain a block at y=0.
ValidationReport validate_structure(const Structure& structure, const WorldBounds& bounds = {});
/// Same check for a raw block list, which can additionally contain collisions.
ValidationReport validate_blocks(std::span<const Block> blocks, const WorldBounds& bounds = {});

/// Face-connected components, each sorted by position.
std::vector<std::vector<Block>> connected_components(const Structure& structure);

struct Mismatches {
    std::vector<Block> misplaced; ///< built blocks absent from target or with the wrong colour
    std::vector<Block> missing;   ///< target blocks absent from built

    bool is_partial() const noexcept { return misplaced.empty(); }
    bool exact() const noexcept { return misplaced.empty() && missing.empty(); }
};

Mismatches diff_structures(const Structure& built, const Structure& target);

ColorCounts block_multiset(const Structure& structure);

} // namespace coblock
