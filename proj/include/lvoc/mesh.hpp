#pragma once

#include <array>
#include <iosfwd>
#include <vector>

namespace lvoc {

using Point2 = std::array<double, 2>;

/// Triangulation of the unit square.
///
/// Triangles are counter-clockwise. Edges are stored once with the smaller
/// vertex index first and sorted lexicographically, so the edge numbering
/// depends only on the set of triangles and not on their order. Local edge
/// `j` of a triangle joins its local vertices `j` and `(j + 1) % 3`.
struct Triangulation {
    std::vector<Point2> vertices;
    std::vector<std::array<int, 3>> triangles;
    /// Boundary segments, counter-clockwise, starting at (0,0).
    std::vector<std::array<int, 2>> boundary_edges;
    std::vector<std::array<int, 2>> edges;
    std::vector<std::array<int, 3>> triangle_edges;
    /// Global edge index of each boundary segment, parallel to `boundary_edges`.
    std::vector<int> boundary_edge_ids;
    double h = 0.0;
    int subdivisions = 0;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
    int edge_count() const { return static_cast<int>(edges.size()); }
};

/// Uniform n x n grid of [0,1]^2, every cell split along its
/// lower-left to upper-right diagonal. Throws std::invalid_argument for n = 0.
Triangulation build_structured(int n);

/// Rebuilds the edge tables from `vertices`, `triangles` and `boundary_edges`.
/// Used after triangles are reordered or a mesh is read from elsewhere.
void rebuild_topology(Triangulation& mesh);

double signed_area(const Triangulation& mesh, int triangle);

/// max over triangles of diameter / inscribed-circle diameter.
double shape_regularity(const Triangulation& mesh);

/// For every boundary degree of freedom, the index of the matching volume
/// degree of freedom of the Lagrange space of the given degree. The order
/// follows the boundary counter-clockwise: for degree 2 each boundary vertex
/// is followed by the midpoint of the segment leaving it.
std::vector<int> boundary_trace_map(const Triangulation& mesh, int degree);

/// Plain-text dump: a "vertices" block (x y), a "triangles" block (i j k) and a
/// "boundary" block (i j), each preceded by its record count.
void write_mesh_text(const Triangulation& mesh, std::ostream& out);

}  // namespace lvoc
