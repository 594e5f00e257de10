#include "lvoc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace lvoc {

namespace {

double distance(const Point2& p, const Point2& q) {
    return std::hypot(p[0] - q[0], p[1] - q[1]);
}

}  // namespace

Triangulation build_structured(int n) {
    if (n <= 0) {
        throw std::invalid_argument("build_structured: subdivision count must be positive");
    }
    Triangulation mesh;
    mesh.subdivisions = n;
    const int stride = n + 1;
    auto id = [stride](int i, int j) { return i + j * stride; };

    mesh.vertices.reserve(static_cast<std::size_t>(stride) * stride);
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            mesh.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        }
    }

    mesh.triangles.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = id(i, j), v10 = id(i + 1, j), v11 = id(i + 1, j + 1), v01 = id(i, j + 1);
            mesh.triangles.push_back({v00, v10, v11});
            mesh.triangles.push_back({v00, v11, v01});
        }
    }

    for (int i = 0; i < n; ++i) mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0)});
    for (int j = 0; j < n; ++j) mesh.boundary_edges.push_back({id(n, j), id(n, j + 1)});
    for (int i = n; i > 0; --i) mesh.boundary_edges.push_back({id(i, n), id(i - 1, n)});
    for (int j = n; j > 0; --j) mesh.boundary_edges.push_back({id(0, j), id(0, j - 1)});

    rebuild_topology(mesh);
    mesh.h = std::sqrt(2.0) / n;
    return mesh;
}

void rebuild_topology(Triangulation& mesh) {
    std::map<std::pair<int, int>, int> edge_index;
    for (const auto& tri : mesh.triangles) {
        for (int j = 0; j < 3; ++j) {
            const int a = tri[j], b = tri[(j + 1) % 3];
            edge_index.emplace(std::minmax(a, b), 0);
        }
    }
    mesh.edges.clear();
    mesh.edges.reserve(edge_index.size());
    int next = 0;
    for (auto& [key, idx] : edge_index) {
        idx = next++;
        mesh.edges.push_back({key.first, key.second});
    }

    mesh.triangle_edges.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int j = 0; j < 3; ++j) {
            mesh.triangle_edges[t][j] = edge_index.at(std::minmax(tri[j], tri[(j + 1) % 3]));
        }
    }

    mesh.boundary_edge_ids.clear();
    for (const auto& e : mesh.boundary_edges) {
        mesh.boundary_edge_ids.push_back(edge_index.at(std::minmax(e[0], e[1])));
    }

    double h = 0.0;
    for (const auto& tri : mesh.triangles) {
        for (int j = 0; j < 3; ++j) {
            h = std::max(h, distance(mesh.vertices[tri[j]], mesh.vertices[tri[(j + 1) % 3]]));
        }
    }
    mesh.h = h;
}

double signed_area(const Triangulation& mesh, int triangle) {
    const auto& tri = mesh.triangles[triangle];
    const Point2& p = mesh.vertices[tri[0]];
    const Point2& q = mesh.vertices[tri[1]];
    const Point2& r = mesh.vertices[tri[2]];
    return 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]));
}

double shape_regularity(const Triangulation& mesh) {
    double worst = 0.0;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double la = distance(mesh.vertices[tri[0]], mesh.vertices[tri[1]]);
        const double lb = distance(mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
        const double lc = distance(mesh.vertices[tri[2]], mesh.vertices[tri[0]]);
        const double diameter = std::max({la, lb, lc});
        const double inradius = 2.0 * std::abs(signed_area(mesh, t)) / (la + lb + lc);
        worst = std::max(worst, diameter / (2.0 * inradius));
    }
    return worst;
}

std::vector<int> boundary_trace_map(const Triangulation& mesh, int degree) {
    if (degree != 1 && degree != 2) {
        throw std::invalid_argument("boundary_trace_map: degree must be 1 or 2");
    }
    std::vector<int> map;
    map.reserve(mesh.boundary_edges.size() * degree);
    for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
        map.push_back(mesh.boundary_edges[e][0]);
        if (degree == 2) map.push_back(mesh.vertex_count() + mesh.boundary_edge_ids[e]);
    }
    return map;
}

void write_mesh_text(const Triangulation& mesh, std::ostream& out) {
    out.precision(17);
    out << "vertices " << mesh.vertices.size() << '\n';
    for (const auto& v : mesh.vertices) out << v[0] << ' ' << v[1] << '\n';
    out << "triangles " << mesh.triangles.size() << '\n';
    for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    out << "boundary " << mesh.boundary_edges.size() << '\n';
    for (const auto& e : mesh.boundary_edges) out << e[0] << ' ' << e[1] << '\n';
}

}  // namespace lvoc
