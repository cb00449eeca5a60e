#pragma once

// V-represented convex polytopes in R^3 with derived facets and edges.

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tubelab/vec3.hpp"

namespace tubelab {

struct Facet {
    std::array<int, 3> v{};  // counter-clockwise seen from outside
    Vec3 normal;             // unit outward normal
    double offset = 0.0;     // normal . v[0]
    double area = 0.0;
};

struct Edge {
    int a = 0;
    int b = 0;
    int f0 = -1;
    int f1 = -1;
    double length = 0.0;
    /// pi minus the interior dihedral angle; pi on the rim of a flat body,
    /// 2 pi for a segment.
    double exterior_angle = 0.0;
};

/// Convex hull of a point set. Immutable after construction.
///
/// Full-dimensional hulls come from an incremental (quickhull-style) build
/// driven by exact orientation tests; points coplanar with a facet count as
/// not visible, so coplanar input yields triangulated planar faces. Lower
/// dimensional inputs produce a flat polygon (two-sided facets), a segment or a
/// single point, flagged through dimension().
class ConvexPolytope3 {
public:
    ConvexPolytope3() = default;

    /// Throws DomainError on empty or non-finite input. Points closer than
    /// dedup_tol to an earlier point are dropped.
    static ConvexPolytope3 hull(std::span<const Point3> points, double dedup_tol = 1e-12);

    const std::vector<Point3>& vertices() const { return vertices_; }
    const std::vector<Facet>& facets() const { return facets_; }
    const std::vector<Edge>& edges() const { return edges_; }
    /// Index of each vertex in the input passed to hull().
    const std::vector<int>& source_index() const { return source_; }

    bool empty() const { return vertices_.empty(); }
    int dimension() const { return dim_; }
    bool degenerate() const { return dim_ < 3; }

    double volume() const;
    /// H2 of the boundary; a flat body counts both sides (2 x polygon area).
    double surface_area() const;
    /// Vertex average.
    const Point3& centroid() const { return centroid_; }
    /// Axis-aligned bounds {min, max}.
    std::array<Point3, 2> bounds() const;

    /// Index of a vertex maximizing dot(d, v). `hint` (a vertex index, or -1)
    /// seeds a hill climb on the vertex adjacency graph.
    int support(const Vec3& d, int hint = -1) const;
    std::span<const int> neighbors(int v) const;

    ConvexPolytope3 mirrored_x2() const;
    ConvexPolytope3 translated(const Vec3& t) const;

    /// Plain-text OFF mesh: header, vertex lines, triangle lines.
    std::string to_off() const;
    void write_off(std::ostream& out) const;
    /// Reads an OFF mesh and rebuilds the hull of its vertices.
    static ConvexPolytope3 read_off(std::istream& in);

private:
    void finish();
    static constexpr int kCells = 16;
    static int cell_of(const Vec3& d);
    static Vec3 cell_direction(int cell);

    std::vector<Point3> vertices_;
    std::vector<int> source_;
    std::vector<Facet> facets_;
    std::vector<Edge> edges_;
    std::vector<int> adj_offset_;
    std::vector<int> adj_;
    std::vector<int> start_table_;  // support vertex per cube-map cell
    Point3 centroid_;
    int dim_ = -1;
    double flat_area_ = 0.0;
};

}  // namespace tubelab
