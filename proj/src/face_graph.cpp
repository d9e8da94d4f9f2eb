#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "coblock/task_forge.hpp"

namespace coblock {

namespace {

constexpr int kDown = 3; // kFaceOffsets[3] == {0, -1, 0}

using Point = std::array<int, 3>;
/// A unit segment: its lower endpoint plus the axis it runs along.
using Segment = std::tuple<int, int, int, int>;

std::array<Segment, 4> face_segments(const Face& f) {
    const int axis = f.direction / 2;
    const bool positive = f.direction % 2 == 0;
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    Point base{f.block.x, f.block.y, f.block.z};
    if (positive) base[axis] += 1;

    std::array<Segment, 4> out;
    for (int i = 0; i < 2; ++i) {
        Point a = base;
        a[u] += i;
        out[i] = {a[0], a[1], a[2], v};
        Point b = base;
        b[v] += i;
        out[2 + i] = {b[0], b[1], b[2], u};
    }
    return out;
}

} // namespace

FaceGraph face_graph(const Structure& s) {
    if (s.empty()) throw Error("empty_structure", "face graph of an empty structure");
    FaceGraph g;
    for (const auto& [pos, color] : s.map()) {
        for (int d = 0; d < 6; ++d) {
            if (s.contains(pos + kFaceOffsets[d])) continue;
            if (d == kDown && pos.y == 0) continue;
            g.nodes.push_back({pos, d});
        }
    }
    std::map<Segment, std::vector<int>> by_segment;
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
        for (const auto& seg : face_segments(g.nodes[i])) by_segment[seg].push_back(i);
    }
    std::set<std::pair<int, int>> edges;
    for (const auto& [seg, faces] : by_segment) {
        for (std::size_t a = 0; a < faces.size(); ++a) {
            for (std::size_t b = a + 1; b < faces.size(); ++b) {
                edges.insert({std::min(faces[a], faces[b]), std::max(faces[a], faces[b])});
            }
        }
    }
    g.edges.assign(edges.begin(), edges.end());
    return g;
}

bool is_connected(const Graph& g) {
    if (g.node_count <= 1) return true;
    std::vector<int> parent(g.node_count);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    int components = g.node_count;
    for (auto [u, v] : g.edges) {
        int a = find(u), b = find(v);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    return components == 1;
}

BigInt count_spanning_trees(const Graph& g) {
    if (g.node_count <= 0) return 0;
    if (g.node_count == 1) return 1;
    if (!is_connected(g)) return 0;

    // Reduced Laplacian: drop the last vertex's row and column.
    const int m = g.node_count - 1;
    std::vector<std::vector<BigInt>> a(m, std::vector<BigInt>(m, 0));
    for (auto [u, v] : g.edges) {
        if (u == v) continue;
        if (u < m) a[u][u] += 1;
        if (v < m) a[v][v] += 1;
        if (u < m && v < m) {
            a[u][v] -= 1;
            a[v][u] -= 1;
        }
    }

    // Bareiss fraction-free elimination; every division is exact.
    BigInt prev = 1;
    int sign = 1;
    for (int k = 0; k < m; ++k) {
        if (a[k][k] == 0) {
            int swap_row = -1;
            for (int i = k + 1; i < m; ++i) {
                if (a[i][k] != 0) {
                    swap_row = i;
                    break;
                }
            }
            if (swap_row < 0) return 0;
            std::swap(a[k], a[swap_row]);
            sign = -sign;
        }
        for (int i = k + 1; i < m; ++i) {
            for (int j = k + 1; j < m; ++j) {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    BigInt det = a[m - 1][m - 1];
    return sign < 0 ? BigInt(-det) : det;
}

BigInt complexity(const Structure& s) {
    FaceGraph fg = face_graph(s);
    return count_spanning_trees(Graph{static_cast<int>(fg.nodes.size()), fg.edges});
}

} // namespace coblock
