#include "tubelab/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "tubelab/errors.hpp"
#include "tubelab/predicates.hpp"

namespace tubelab {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct HullFace {
    std::array<int, 3> v{};
    std::array<int, 3> nb{-1, -1, -1};
    bool alive = true;
    std::vector<int> outside;
    Vec3 n;
    double off = 0.0;
};

class QuickHull {
public:
    explicit QuickHull(const std::vector<Point3>& pts) : P_(pts) {}

    void build(std::array<int, 4> tet, const std::vector<int>& rest) {
        const auto [a, b, c, d] = tet;
        add_face(a, b, c);
        add_face(a, d, b);
        add_face(b, d, c);
        add_face(c, d, a);
        link_initial();
        for (int p : rest) {
            for (int f = 0; f < 4; ++f) {
                if (visible(faces_[f], p)) {
                    faces_[f].outside.push_back(p);
                    break;
                }
            }
        }
        std::vector<int> stack;
        for (int f = 0; f < 4; ++f) {
            if (!faces_[f].outside.empty()) stack.push_back(f);
        }
        status_.assign(faces_.size(), 0);
        stamp_.assign(faces_.size(), 0);
        int iteration = 0;
        while (!stack.empty()) {
            const int fi = stack.back();
            stack.pop_back();
            if (!faces_[fi].alive || faces_[fi].outside.empty()) continue;
            ++iteration;
            expand(fi, iteration, stack);
        }
    }

    const std::vector<HullFace>& faces() const { return faces_; }

private:
    bool visible(const HullFace& f, int p) const {
        return orient3d(P_[f.v[0]], P_[f.v[1]], P_[f.v[2]], P_[p]) > 0;
    }

    int add_face(int a, int b, int c) {
        HullFace f;
        f.v = {a, b, c};
        const Vec3 n = cross(P_[b] - P_[a], P_[c] - P_[a]);
        const double len = norm(n);
        f.n = len > 0.0 ? n * (1.0 / len) : Vec3{};
        f.off = dot(f.n, P_[a]);
        faces_.push_back(std::move(f));
        status_.push_back(0);
        stamp_.push_back(0);
        return static_cast<int>(faces_.size()) - 1;
    }

    void link_initial() {
        for (int f = 0; f < 4; ++f) {
            for (int e = 0; e < 3; ++e) {
                const int u = faces_[f].v[e];
                const int w = faces_[f].v[(e + 1) % 3];
                for (int g = 0; g < 4; ++g) {
                    if (g == f) continue;
                    for (int k = 0; k < 3; ++k) {
                        if (faces_[g].v[k] == w && faces_[g].v[(k + 1) % 3] == u) faces_[f].nb[e] = g;
                    }
                }
            }
        }
    }

    bool is_visible(int f, int p, int iteration) {
        if (stamp_[f] != iteration) {
            stamp_[f] = iteration;
            status_[f] = visible(faces_[f], p) ? 1 : 2;
        }
        return status_[f] == 1;
    }

    void expand(int fi, int iteration, std::vector<int>& stack) {
        // furthest outside point by floating-point plane distance
        const HullFace& f0 = faces_[fi];
        int p = f0.outside.front();
        double best = -1.0;
        for (int q : f0.outside) {
            const double h = dot(f0.n, P_[q]) - f0.off;
            if (h > best) {
                best = h;
                p = q;
            }
        }

        std::vector<int> vis{fi};
        stamp_[fi] = iteration;
        status_[fi] = 1;
        for (std::size_t i = 0; i < vis.size(); ++i) {
            for (int e = 0; e < 3; ++e) {
                const int h = faces_[vis[i]].nb[e];
                if (stamp_[h] == iteration) continue;
                if (is_visible(h, p, iteration)) vis.push_back(h);
            }
        }

        struct HorizonEdge { int u, w, outer, back; };
        std::vector<HorizonEdge> horizon;
        for (int g : vis) {
            for (int e = 0; e < 3; ++e) {
                const int h = faces_[g].nb[e];
                if (status_[h] == 1) continue;
                const int u = faces_[g].v[e];
                const int w = faces_[g].v[(e + 1) % 3];
                int back = -1;
                for (int k = 0; k < 3; ++k) {
                    if (faces_[h].nb[k] == g && faces_[h].v[k] == w) back = k;
                }
                if (back < 0) throw ConstructionError("hull adjacency is inconsistent");
                horizon.push_back({u, w, h, back});
            }
        }
        // order the horizon into a loop
        std::unordered_map<int, int> by_start;
        for (int i = 0; i < static_cast<int>(horizon.size()); ++i) {
            if (!by_start.emplace(horizon[i].u, i).second) {
                throw ConstructionError("hull horizon is not a simple loop");
            }
        }
        std::vector<int> loop{0};
        while (loop.size() < horizon.size()) {
            const auto it = by_start.find(horizon[loop.back()].w);
            if (it == by_start.end() || it->second == 0) {
                throw ConstructionError("hull horizon is not a simple loop");
            }
            loop.push_back(it->second);
        }

        std::vector<int> orphans;
        for (int g : vis) {
            for (int q : faces_[g].outside) {
                if (q != p) orphans.push_back(q);
            }
            faces_[g].outside.clear();
            faces_[g].outside.shrink_to_fit();
            faces_[g].alive = false;
        }

        const int m = static_cast<int>(loop.size());
        std::vector<int> created(m);
        for (int k = 0; k < m; ++k) {
            const auto& he = horizon[loop[k]];
            created[k] = add_face(he.u, he.w, p);
        }
        for (int k = 0; k < m; ++k) {
            const auto& he = horizon[loop[k]];
            HullFace& nf = faces_[created[k]];
            nf.nb[0] = he.outer;
            nf.nb[1] = created[(k + 1) % m];
            nf.nb[2] = created[(k + m - 1) % m];
            faces_[he.outer].nb[he.back] = created[k];
        }
        for (int q : orphans) {
            for (int nf : created) {
                if (visible(faces_[nf], q)) {
                    faces_[nf].outside.push_back(q);
                    break;
                }
            }
        }
        for (int nf : created) {
            if (!faces_[nf].outside.empty()) stack.push_back(nf);
        }
    }

    const std::vector<Point3>& P_;
    std::vector<HullFace> faces_;
    std::vector<int> status_;
    std::vector<int> stamp_;
};

std::vector<int> dedup(std::span<const Point3> pts, double tol) {
    std::vector<int> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& p = pts[a];
        const auto& q = pts[b];
        if (p.x1 != q.x1) return p.x1 < q.x1;
        if (p.x2 != q.x2) return p.x2 < q.x2;
        if (p.x3 != q.x3) return p.x3 < q.x3;
        return a < b;  // the earliest copy survives
    });
    std::vector<int> kept_sorted;
    std::vector<char> keep(pts.size(), 0);
    for (int i : order) {
        bool dup = false;
        for (auto it = kept_sorted.rbegin(); it != kept_sorted.rend(); ++it) {
            if (pts[*it].x1 < pts[i].x1 - tol) break;
            const auto d = pts[*it] - pts[i];
            if (std::abs(d.x1) <= tol && std::abs(d.x2) <= tol && std::abs(d.x3) <= tol) {
                dup = true;
                break;
            }
        }
        if (!dup) {
            kept_sorted.push_back(i);
            keep[i] = 1;
        }
    }
    std::vector<int> kept;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
        if (keep[i]) kept.push_back(i);
    }
    return kept;
}

Facet make_facet(const std::vector<Point3>& V, int a, int b, int c) {
    Facet f;
    f.v = {a, b, c};
    const Vec3 n = cross(V[b] - V[a], V[c] - V[a]);
    const double len = norm(n);
    f.area = 0.5 * len;
    f.normal = len > 0.0 ? n * (1.0 / len) : Vec3{};
    f.offset = dot(f.normal, V[a]);
    return f;
}

// Drops coordinate k of the plane normal's dominant axis.
std::pair<double, double> project(const Point3& p, int k) {
    switch (k) {
        case 0: return {p.x2, p.x3};
        case 1: return {p.x3, p.x1};
        default: return {p.x1, p.x2};
    }
}

}  // namespace

ConvexPolytope3 ConvexPolytope3::hull(std::span<const Point3> points, double dedup_tol) {
    if (points.empty()) throw DomainError("convex hull of an empty point set");
    for (const auto& p : points) {
        if (!is_finite(p)) throw DomainError("non-finite point in hull input");
    }
    const std::vector<int> kept = dedup(points, dedup_tol);
    std::vector<Point3> P;
    P.reserve(kept.size());
    for (int i : kept) P.push_back(points[i]);
    const int n = static_cast<int>(P.size());

    ConvexPolytope3 body;
    if (n == 1) {
        body.vertices_ = P;
        body.source_ = kept;
        body.dim_ = 0;
        body.finish();
        return body;
    }

    int i0 = 0;
    for (int i = 1; i < n; ++i) {
        const auto& a = P[i];
        const auto& b = P[i0];
        if (a.x1 < b.x1 || (a.x1 == b.x1 && (a.x2 < b.x2 || (a.x2 == b.x2 && a.x3 < b.x3)))) i0 = i;
    }
    int i1 = -1;
    double far = -1.0;
    for (int i = 0; i < n; ++i) {
        const double d = norm2(P[i] - P[i0]);
        if (d > far) {
            far = d;
            i1 = i;
        }
    }
    int i2 = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
        const double c = norm2(cross(P[i1] - P[i0], P[i] - P[i0]));
        if (c > best) {
            best = c;
            i2 = i;
        }
    }
    if (best <= 0.0 || collinear(P[i0], P[i1], P[i2])) {
        i2 = -1;
        for (int i = 0; i < n; ++i) {
            if (!collinear(P[i0], P[i1], P[i])) {
                i2 = i;
                break;
            }
        }
    }
    if (i2 < 0) {
        // segment: extreme points along the line
        const Vec3 dir = P[i1] - P[i0];
        int lo = 0, hi = 0;
        for (int i = 1; i < n; ++i) {
            if (dot(dir, P[i]) < dot(dir, P[lo])) lo = i;
            if (dot(dir, P[i]) > dot(dir, P[hi])) hi = i;
        }
        if (kept[lo] > kept[hi]) std::swap(lo, hi);
        body.vertices_ = {P[lo], P[hi]};
        body.source_ = {kept[lo], kept[hi]};
        body.dim_ = 1;
        body.finish();
        return body;
    }
    int i3 = -1;
    best = 0.0;
    const Vec3 nrm = cross(P[i1] - P[i0], P[i2] - P[i0]);
    for (int i = 0; i < n; ++i) {
        const double h = std::abs(dot(nrm, P[i] - P[i0]));
        if (h > best) {
            best = h;
            i3 = i;
        }
    }
    if (i3 >= 0 && orient3d(P[i0], P[i1], P[i2], P[i3]) == 0) i3 = -1;
    if (i3 < 0) {
        for (int i = 0; i < n; ++i) {
            if (orient3d(P[i0], P[i1], P[i2], P[i]) != 0) {
                i3 = i;
                break;
            }
        }
    }

    if (i3 < 0) {
        // planar: monotone chain in the projection dropping the dominant normal axis
        int k = 0;
        if (std::abs(nrm.x2) > std::abs(nrm[k])) k = 1;
        if (std::abs(nrm.x3) > std::abs(nrm[k])) k = 2;
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return project(P[a], k) < project(P[b], k); });
        auto turn = [&](int a, int b, int c) {
            const auto [ax, ay] = project(P[a], k);
            const auto [bx, by] = project(P[b], k);
            const auto [cx, cy] = project(P[c], k);
            return orient2d(ax, ay, bx, by, cx, cy);
        };
        std::vector<int> ring;
        for (int pass = 0; pass < 2; ++pass) {
            const std::size_t base = ring.size();
            for (int i : idx) {
                while (ring.size() >= base + 2 && turn(ring[ring.size() - 2], ring.back(), i) <= 0) {
                    ring.pop_back();
                }
                ring.push_back(i);
            }
            ring.pop_back();
            std::reverse(idx.begin(), idx.end());
        }
        for (int i : ring) {
            body.vertices_.push_back(P[i]);
            body.source_.push_back(kept[i]);
        }
        body.dim_ = 2;
        body.finish();
        return body;
    }

    std::array<int, 4> tet{i0, i1, i2, i3};
    if (orient3d(P[i0], P[i1], P[i2], P[i3]) > 0) std::swap(tet[1], tet[2]);
    std::vector<int> rest;
    for (int i = 0; i < n; ++i) {
        if (i != i0 && i != i1 && i != i2 && i != i3) rest.push_back(i);
    }
    QuickHull qh(P);
    qh.build(tet, rest);

    std::vector<int> used(n, -1);
    for (const auto& f : qh.faces()) {
        if (!f.alive) continue;
        for (int v : f.v) used[v] = 0;
    }
    for (int i = 0; i < n; ++i) {
        if (used[i] < 0) continue;
        used[i] = static_cast<int>(body.vertices_.size());
        body.vertices_.push_back(P[i]);
        body.source_.push_back(kept[i]);
    }
    for (const auto& f : qh.faces()) {
        if (!f.alive) continue;
        body.facets_.push_back(make_facet(body.vertices_, used[f.v[0]], used[f.v[1]], used[f.v[2]]));
    }
    body.dim_ = 3;
    body.finish();
    return body;
}

void ConvexPolytope3::finish() {
    const int n = static_cast<int>(vertices_.size());
    centroid_ = {};
    for (const auto& v : vertices_) centroid_ += v;
    if (n > 0) centroid_ *= 1.0 / n;
    std::vector<std::vector<int>> adj(n);
    auto link = [&](int a, int b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    };

    if (dim_ == 3) {
        std::map<std::pair<int, int>, int> edge_of;
        for (int f = 0; f < static_cast<int>(facets_.size()); ++f) {
            for (int e = 0; e < 3; ++e) {
                int a = facets_[f].v[e];
                int b = facets_[f].v[(e + 1) % 3];
                if (a > b) std::swap(a, b);
                auto [it, inserted] = edge_of.emplace(std::pair{a, b}, static_cast<int>(edges_.size()));
                if (inserted) {
                    Edge edge;
                    edge.a = a;
                    edge.b = b;
                    edge.f0 = f;
                    edge.length = distance(vertices_[a], vertices_[b]);
                    edges_.push_back(edge);
                } else {
                    edges_[it->second].f1 = f;
                }
            }
        }
        for (auto& e : edges_) {
            if (e.f1 < 0) throw ConstructionError("hull boundary is not closed");
            const double c = std::clamp(dot(facets_[e.f0].normal, facets_[e.f1].normal), -1.0, 1.0);
            e.exterior_angle = std::acos(c);
            // Diagonals of triangulated planar faces are not polytope edges;
            // leaving them out keeps fan hubs from dominating hill climbs.
            // Only exactly coplanar pairs qualify: dropping a true edge would
            // break the local-max-is-global property of the climb.
            const auto& g = facets_[e.f1].v;
            const int opp = g[0] != e.a && g[0] != e.b ? g[0] : (g[1] != e.a && g[1] != e.b ? g[1] : g[2]);
            const auto& h = facets_[e.f0].v;
            if (orient3d(vertices_[h[0]], vertices_[h[1]], vertices_[h[2]], vertices_[opp]) != 0) link(e.a, e.b);
        }
    } else if (dim_ == 2) {
        Vec3 newell;
        for (int i = 0; i < n; ++i) {
            const auto& a = vertices_[i];
            const auto& b = vertices_[(i + 1) % n];
            newell += cross(a, b);
        }
        flat_area_ = 0.5 * norm(newell);
        for (int i = 1; i + 1 < n; ++i) {
            facets_.push_back(make_facet(vertices_, 0, i, i + 1));
            facets_.push_back(make_facet(vertices_, 0, i + 1, i));
        }
        for (int i = 0; i < n; ++i) {
            Edge e;
            e.a = i;
            e.b = (i + 1) % n;
            e.length = distance(vertices_[e.a], vertices_[e.b]);
            e.exterior_angle = kPi;
            edges_.push_back(e);
            link(e.a, e.b);
        }
    } else if (dim_ == 1) {
        Edge e;
        e.a = 0;
        e.b = 1;
        e.length = distance(vertices_[0], vertices_[1]);
        e.exterior_angle = 2.0 * kPi;
        edges_.push_back(e);
        link(0, 1);
    }

    adj_offset_.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        std::sort(adj[i].begin(), adj[i].end());
        adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
        adj_offset_[i + 1] = adj_offset_[i] + static_cast<int>(adj[i].size());
    }
    adj_.clear();
    for (const auto& a : adj) adj_.insert(adj_.end(), a.begin(), a.end());

    start_table_.clear();
    if (n > 64) {
        start_table_.resize(6 * kCells * kCells);
        for (int cell = 0; cell < 6 * kCells * kCells; ++cell) {
            const Vec3 d = cell_direction(cell);
            int best = 0;
            double bv = dot(d, vertices_[0]);
            for (int i = 1; i < n; ++i) {
                const double v = dot(d, vertices_[i]);
                if (v > bv) {
                    bv = v;
                    best = i;
                }
            }
            start_table_[cell] = best;
        }
    }
}

// Cube-map cells: face f in 0..5 (axis f/2, sign by parity), then a
// kCells x kCells grid over the two remaining coordinates in [-1, 1].
int ConvexPolytope3::cell_of(const Vec3& d) {
    int axis = 0;
    if (std::abs(d.x2) > std::abs(d[axis])) axis = 1;
    if (std::abs(d.x3) > std::abs(d[axis])) axis = 2;
    const double m = std::abs(d[axis]);
    if (!(m > 0.0)) return 0;
    const double u = d[(axis + 1) % 3] / m;
    const double v = d[(axis + 2) % 3] / m;
    auto bin = [](double s) { return std::clamp(static_cast<int>((s + 1.0) * 0.5 * kCells), 0, kCells - 1); };
    const int face = 2 * axis + (d[axis] < 0.0 ? 1 : 0);
    return (face * kCells + bin(u)) * kCells + bin(v);
}

Vec3 ConvexPolytope3::cell_direction(int cell) {
    const int face = cell / (kCells * kCells);
    const int iu = (cell / kCells) % kCells;
    const int iv = cell % kCells;
    const int axis = face / 2;
    Vec3 d;
    d[axis] = face % 2 == 0 ? 1.0 : -1.0;
    d[(axis + 1) % 3] = (iu + 0.5) / kCells * 2.0 - 1.0;
    d[(axis + 2) % 3] = (iv + 0.5) / kCells * 2.0 - 1.0;
    return d;
}

double ConvexPolytope3::volume() const {
    if (dim_ < 3) return 0.0;
    const Point3 o = vertices_.front();
    double v = 0.0;
    for (const auto& f : facets_) {
        v += dot(vertices_[f.v[0]] - o, cross(vertices_[f.v[1]] - o, vertices_[f.v[2]] - o));
    }
    return v / 6.0;
}

double ConvexPolytope3::surface_area() const {
    if (dim_ == 2) return 2.0 * flat_area_;
    double s = 0.0;
    for (const auto& f : facets_) s += f.area;
    return s;
}

std::array<Point3, 2> ConvexPolytope3::bounds() const {
    if (vertices_.empty()) throw DomainError("bounds of an empty polytope");
    Point3 lo = vertices_.front(), hi = vertices_.front();
    for (const auto& v : vertices_) {
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], v[k]);
            hi[k] = std::max(hi[k], v[k]);
        }
    }
    return {lo, hi};
}

std::span<const int> ConvexPolytope3::neighbors(int v) const {
    return {adj_.data() + adj_offset_[v], adj_.data() + adj_offset_[v + 1]};
}

int ConvexPolytope3::support(const Vec3& d, int hint) const {
    const int n = static_cast<int>(vertices_.size());
    if (n == 0) throw DomainError("support of an empty polytope");
    if (n <= 64) {
        int best = 0;
        double bv = dot(d, vertices_[0]);
        for (int i = 1; i < n; ++i) {
            const double v = dot(d, vertices_[i]);
            if (v > bv) {
                bv = v;
                best = i;
            }
        }
        return best;
    }
    int cur = start_table_[cell_of(d)];
    double cv = dot(d, vertices_[cur]);
    if (hint >= 0 && hint < n) {
        const double hv = dot(d, vertices_[hint]);
        if (hv > cv) {
            cv = hv;
            cur = hint;
        }
    }
    for (;;) {
        int next = cur;
        for (int nb : neighbors(cur)) {
            const double v = dot(d, vertices_[nb]);
            if (v > cv) {
                cv = v;
                next = nb;
            }
        }
        if (next == cur) return cur;
        cur = next;
    }
}

ConvexPolytope3 ConvexPolytope3::mirrored_x2() const {
    ConvexPolytope3 m = *this;
    for (auto& v : m.vertices_) v = mirror_x2(v);
    m.centroid_ = mirror_x2(centroid_);
    for (auto& f : m.facets_) {
        std::swap(f.v[1], f.v[2]);
        f.normal = mirror_x2(f.normal);
    }
    return m;
}

ConvexPolytope3 ConvexPolytope3::translated(const Vec3& t) const {
    ConvexPolytope3 m = *this;
    for (auto& v : m.vertices_) v += t;
    m.centroid_ += t;
    for (auto& f : m.facets_) f.offset = dot(f.normal, m.vertices_[f.v[0]]);
    return m;
}

void ConvexPolytope3::write_off(std::ostream& out) const {
    out << "OFF\n" << vertices_.size() << ' ' << facets_.size() << " 0\n";
    out << std::setprecision(17);
    for (const auto& v : vertices_) out << v.x1 << ' ' << v.x2 << ' ' << v.x3 << '\n';
    for (const auto& f : facets_) out << "3 " << f.v[0] << ' ' << f.v[1] << ' ' << f.v[2] << '\n';
}

std::string ConvexPolytope3::to_off() const {
    std::ostringstream s;
    write_off(s);
    return s.str();
}

ConvexPolytope3 ConvexPolytope3::read_off(std::istream& in) {
    auto next_token = [&](std::string& tok) {
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return true;
        }
        return false;
    };
    std::string tok;
    if (!next_token(tok) || tok != "OFF") throw DomainError("OFF stream lacks the OFF header");
    std::size_t nv = 0, nf = 0, ne = 0;
    if (!(next_token(tok))) throw DomainError("truncated OFF header");
    nv = std::stoul(tok);
    if (!(in >> nf >> ne)) throw DomainError("truncated OFF header");
    std::vector<Point3> pts(nv);
    for (auto& p : pts) {
        if (!(in >> p.x1 >> p.x2 >> p.x3)) throw DomainError("truncated OFF vertex list");
    }
    return hull(pts);
}

}  // namespace tubelab
