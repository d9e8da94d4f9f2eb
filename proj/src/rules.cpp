#include <algorithm>
#include <array>
#include <climits>
#include <map>
#include <queue>
#include <set>

#include "coblock/task_forge.hpp"

namespace coblock {

namespace {

constexpr std::array<std::string_view, 5> kKindNames = {"symbol", "bridge", "arch", "tower", "rectangle"};
constexpr std::array<std::string_view, 10> kPredicateNames = {
    "block_count",  "height",        "extent_x",     "extent_z",        "ground_cells",
    "pillar_count", "pillar_height", "pillar_width", "pillar_distance", "solid"};
constexpr std::array<std::string_view, 3> kFamilyNames = {"independent", "skill_dependent", "goal_dependent"};

Predicate pred(PredicateType t, std::optional<int> lo, std::optional<int> hi) { return {t, lo, hi}; }

bool in_range(int v, const Predicate& p) {
    return (!p.min || v >= *p.min) && (!p.max || v <= *p.max);
}

} // namespace

std::string_view to_string(TaskFamily f) noexcept { return kFamilyNames[static_cast<std::size_t>(f)]; }

TaskFamily family_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kFamilyNames.size(); ++i) {
        if (kFamilyNames[i] == s) return static_cast<TaskFamily>(i);
    }
    throw Error("unknown_family", "unknown task family '" + std::string(s) + "'");
}

std::string_view to_string(StructureKind k) noexcept { return kKindNames[static_cast<std::size_t>(k)]; }

StructureKind kind_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == s) return static_cast<StructureKind>(i);
    }
    throw Error("unknown_rule", "unknown structure kind '" + std::string(s) + "'");
}

std::string_view to_string(PredicateType t) noexcept { return kPredicateNames[static_cast<std::size_t>(t)]; }

StructureRule builtin_rule(StructureKind kind) {
    using P = PredicateType;
    StructureRule r;
    r.kind = kind;
    switch (kind) {
    case StructureKind::arch:
        r.predicates = {pred(P::pillar_count, 2, 2),      pred(P::pillar_height, 4, std::nullopt),
                        pred(P::pillar_width, std::nullopt, 1), pred(P::pillar_distance, 4, std::nullopt),
                        pred(P::extent_z, std::nullopt, 1), pred(P::extent_x, std::nullopt, 7),
                        pred(P::height, std::nullopt, 6),   pred(P::block_count, 11, 16)};
        r.palette_size = 2;
        r.coloring = Coloring::parts;
        break;
    case StructureKind::bridge:
        r.predicates = {pred(P::pillar_count, 2, 2),      pred(P::pillar_height, 2, std::nullopt),
                        pred(P::pillar_width, std::nullopt, 2), pred(P::pillar_distance, 4, std::nullopt),
                        pred(P::extent_x, 5, 8),            pred(P::extent_z, 2, 2),
                        pred(P::height, 3, 4),              pred(P::block_count, 10, 20)};
        r.palette_size = 2;
        r.coloring = Coloring::parts;
        break;
    case StructureKind::tower:
        r.predicates = {pred(P::pillar_count, 1, 1),      pred(P::pillar_height, 4, std::nullopt),
                        pred(P::pillar_width, std::nullopt, 2), pred(P::ground_cells, 2, std::nullopt),
                        pred(P::extent_x, std::nullopt, 2), pred(P::extent_z, std::nullopt, 2),
                        pred(P::height, 4, 7),              pred(P::block_count, 6, 14)};
        r.palette_size = 3;
        r.coloring = Coloring::layers;
        break;
    case StructureKind::rectangle:
        r.predicates = {pred(P::extent_z, std::nullopt, 1), pred(P::extent_x, 3, 5),
                        pred(P::height, 2, 3),              pred(P::ground_cells, 3, std::nullopt),
                        pred(P::solid, std::nullopt, std::nullopt), pred(P::block_count, 6, 15)};
        r.palette_size = 2;
        r.coloring = Coloring::layers;
        break;
    case StructureKind::symbol:
        r.predicates = {pred(P::extent_z, std::nullopt, 1), pred(P::extent_x, 3, 5),
                        pred(P::height, 3, 5),              pred(P::ground_cells, 1, 2),
                        pred(P::block_count, 6, 12)};
        r.palette_size = 3;
        r.coloring = Coloring::layers;
        break;
    }
    return r;
}

Json encode(const StructureRule& rule) {
    Json preds = Json::array();
    for (const auto& p : rule.predicates) {
        Json j{{"type", to_string(p.type)}};
        if (p.min) j["min"] = *p.min;
        if (p.max) j["max"] = *p.max;
        preds.push_back(std::move(j));
    }
    return Json{{"format_version", kFormatVersion},
                {"kind", to_string(rule.kind)},
                {"predicates", std::move(preds)},
                {"palette_size", rule.palette_size},
                {"coloring", rule.coloring == Coloring::layers ? "layers" : "parts"}};
}

StructureRule decode_rule(const Json& j) {
    try {
        StructureRule r;
        if (j.contains("format_version") && j.at("format_version").get<int>() != kFormatVersion) {
            throw Error("parse", "unsupported rule format_version");
        }
        r.kind = kind_from_string(j.at("kind").get<std::string>());
        for (const auto& pj : j.at("predicates")) {
            Predicate p;
            auto name = pj.at("type").get<std::string>();
            auto it = std::find(kPredicateNames.begin(), kPredicateNames.end(), name);
            if (it == kPredicateNames.end()) throw Error("parse", "unknown predicate '" + name + "'");
            p.type = static_cast<PredicateType>(it - kPredicateNames.begin());
            if (pj.contains("min")) p.min = pj.at("min").get<int>();
            if (pj.contains("max")) p.max = pj.at("max").get<int>();
            if (p.min && p.max && *p.min > *p.max) throw Error("parse", "predicate '" + name + "' has min > max");
            r.predicates.push_back(p);
        }
        r.palette_size = j.value("palette_size", 2);
        if (r.palette_size < 1 || r.palette_size > static_cast<int>(kColorCount)) {
            throw Error("parse", "palette_size must lie in [1, 6]");
        }
        auto coloring = j.value("coloring", std::string("layers"));
        if (coloring == "layers") {
            r.coloring = Coloring::layers;
        } else if (coloring == "parts") {
            r.coloring = Coloring::parts;
        } else {
            throw Error("parse", "unknown coloring '" + coloring + "'");
        }
        return r;
    } catch (const Json::exception& e) {
        throw Error("parse", std::string("malformed rule: ") + e.what());
    }
}

ShapeStats measure(const Structure& s) {
    ShapeStats st;
    st.block_count = static_cast<int>(s.size());
    if (s.empty()) return st;

    int minx = INT_MAX, maxx = INT_MIN, miny = INT_MAX, maxy = INT_MIN, minz = INT_MAX, maxz = INT_MIN;
    std::set<std::pair<int, int>> ground;
    for (const auto& [p, c] : s.map()) {
        minx = std::min(minx, p.x), maxx = std::max(maxx, p.x);
        miny = std::min(miny, p.y), maxy = std::max(maxy, p.y);
        minz = std::min(minz, p.z), maxz = std::max(maxz, p.z);
        if (p.y == 0) ground.insert({p.x, p.z});
    }
    st.extent_x = maxx - minx + 1;
    st.extent_z = maxz - minz + 1;
    st.height = maxy + 1;
    st.bounding_volume = st.extent_x * st.extent_z * (maxy - miny + 1);
    st.ground_cells = static_cast<int>(ground.size());

    std::set<std::pair<int, int>> seen;
    for (const auto& start : ground) {
        if (seen.count(start)) continue;
        ShapeStats::Pillar pillar;
        std::queue<std::pair<int, int>> q;
        q.push(start);
        seen.insert(start);
        while (!q.empty()) {
            auto [x, z] = q.front();
            q.pop();
            pillar.cells.push_back({x, z});
            for (auto [dx, dz] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                std::pair<int, int> n{x + dx, z + dz};
                if (ground.count(n) && seen.insert(n).second) q.push(n);
            }
        }
        int cx0 = INT_MAX, cx1 = INT_MIN, cz0 = INT_MAX, cz1 = INT_MIN;
        for (auto [x, z] : pillar.cells) {
            cx0 = std::min(cx0, x), cx1 = std::max(cx1, x);
            cz0 = std::min(cz0, z), cz1 = std::max(cz1, z);
            int h = 0;
            while (s.contains({x, h, z})) ++h;
            pillar.height = std::max(pillar.height, h);
        }
        pillar.width = std::max(cx1 - cx0 + 1, cz1 - cz0 + 1);
        std::sort(pillar.cells.begin(), pillar.cells.end());
        st.pillars.push_back(std::move(pillar));
    }

    if (st.pillars.size() >= 2) {
        int best = INT_MAX;
        for (std::size_t i = 0; i < st.pillars.size(); ++i) {
            for (std::size_t j = i + 1; j < st.pillars.size(); ++j) {
                for (auto [ax, az] : st.pillars[i].cells) {
                    for (auto [bx, bz] : st.pillars[j].cells) {
                        best = std::min(best, std::abs(ax - bx) + std::abs(az - bz));
                    }
                }
            }
        }
        st.min_pillar_distance = best;
    }
    return st;
}

bool satisfies(const Predicate& p, const ShapeStats& st) {
    switch (p.type) {
    case PredicateType::block_count: return in_range(st.block_count, p);
    case PredicateType::height: return in_range(st.height, p);
    case PredicateType::extent_x: return in_range(st.extent_x, p);
    case PredicateType::extent_z: return in_range(st.extent_z, p);
    case PredicateType::ground_cells: return in_range(st.ground_cells, p);
    case PredicateType::pillar_count: return in_range(static_cast<int>(st.pillars.size()), p);
    case PredicateType::pillar_height:
        return std::all_of(st.pillars.begin(), st.pillars.end(),
                           [&](const ShapeStats::Pillar& pl) { return in_range(pl.height, p); });
    case PredicateType::pillar_width:
        return std::all_of(st.pillars.begin(), st.pillars.end(),
                           [&](const ShapeStats::Pillar& pl) { return in_range(pl.width, p); });
    case PredicateType::pillar_distance:
        return st.pillars.size() < 2 || in_range(st.min_pillar_distance, p);
    case PredicateType::solid: return st.block_count > 0 && st.bounding_volume == st.block_count;
    }
    return false;
}

std::vector<std::string> rule_violations(const StructureRule& rule, const Structure& s) {
    std::vector<std::string> out;
    const ShapeStats st = measure(s);
    for (const auto& p : rule.predicates) {
        if (!satisfies(p, st)) out.emplace_back(to_string(p.type));
    }
    if (s.empty()) {
        out.emplace_back("non_empty");
    } else {
        if (!validate_structure(s).empty()) out.emplace_back("grounded");
        if (connected_components(s).size() != 1) out.emplace_back("connected");
    }
    return out;
}

} // namespace coblock
