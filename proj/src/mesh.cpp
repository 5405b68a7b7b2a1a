#include "qvi/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "qvi/csv.hpp"
#include "qvi/errors.hpp"

namespace qvi {

double TriMesh::total_area() const {
    // Kahan summation; the 1e-12 relative partition-of-unity check on large
    // meshes sits right at naive-summation roundoff.
    double s = 0.0, c = 0.0;
    for (double a : area) {
        const double y = a - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

void TriMesh::finalize() {
    const int nt = n_triangles();
    area.assign(nt, 0.0);
    centroid.assign(nt, Vec2{});
    diameter.assign(nt, 0.0);
    h_max = 0.0;

    for (int t = 0; t < nt; ++t) {
        auto& tv = triangles[t];
        double a2 = signed_area(vertices[tv[0]], vertices[tv[1]], vertices[tv[2]]);
        if (a2 < 0.0) { // enforce CCW
            std::swap(tv[1], tv[2]);
            a2 = -a2;
        }
        if (!(a2 > 0.0)) throw MeshError("degenerate triangle " + std::to_string(t));
        area[t] = a2;
        const Triangle tc = triangle_coords(t);
        centroid[t] = (tc[0] + tc[1] + tc[2]) / 3.0;
        double d = 0.0;
        for (int i = 0; i < 3; ++i) d = std::max(d, (tc[i] - tc[(i + 1) % 3]).norm());
        diameter[t] = d;
        h_max = std::max(h_max, d);
    }

    // Deterministic edge table: lexicographic by sorted vertex pair.
    std::map<std::pair<int, int>, int> edge_index;
    edges.clear();
    tri_edges.assign(nt, {-1, -1, -1});
    for (int t = 0; t < nt; ++t) {
        const auto& tv = triangles[t];
        for (int i = 0; i < 3; ++i) {
            int u = tv[(i + 1) % 3], v = tv[(i + 2) % 3]; // edge opposite vertex i
            auto key = std::minmax(u, v);
            edge_index.emplace(key, -1);
        }
    }
    int idx = 0;
    for (auto& kv : edge_index) {
        kv.second = idx++;
        Edge e;
        e.a = kv.first.first;
        e.b = kv.first.second;
        e.midpoint = (vertices[e.a] + vertices[e.b]) * 0.5;
        edges.push_back(e);
    }
    for (int t = 0; t < nt; ++t) {
        const auto& tv = triangles[t];
        for (int i = 0; i < 3; ++i) {
            int u = tv[(i + 1) % 3], v = tv[(i + 2) % 3];
            auto key = std::minmax(u, v);
            int e = edge_index.at(key);
            tri_edges[t][i] = e;
            if (edges[e].tri[0] == -1)
                edges[e].tri[0] = t;
            else if (edges[e].tri[1] == -1)
                edges[e].tri[1] = t;
            else
                throw MeshError("non-manifold edge (" + std::to_string(edges[e].a) + "," +
                                std::to_string(edges[e].b) + ")");
        }
    }

    vertex_on_boundary.assign(vertices.size(), false);
    n_interior_edges = 0;
    for (auto& e : edges) {
        e.boundary = (e.tri[1] == -1);
        if (e.boundary) {
            vertex_on_boundary[e.a] = true;
            vertex_on_boundary[e.b] = true;
            e.dof = -1;
        } else {
            e.dof = n_interior_edges++;
        }
    }
}

TriMesh generate_square_mesh(Vec2 lo, Vec2 hi, int n, SquarePattern pattern) {
    if (n < 1) throw ConfigError("square mesh: n must be >= 1");
    if (!(hi.x > lo.x) || !(hi.y > lo.y)) throw ConfigError("square mesh: hi must exceed lo componentwise");

    TriMesh m;
    const double dx = (hi.x - lo.x) / n, dy = (hi.y - lo.y) / n;
    auto vid = [&](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) m.vertices.push_back({lo.x + i * dx, lo.y + j * dy});

    if (pattern == SquarePattern::Diagonal) {
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                m.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
                m.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
            }
    } else {
        const int base = (n + 1) * (n + 1);
        auto cid = [&](int i, int j) { return base + j * n + i; };
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                m.vertices.push_back({lo.x + (i + 0.5) * dx, lo.y + (j + 0.5) * dy});
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const int c = cid(i, j);
                m.triangles.push_back({vid(i, j), vid(i + 1, j), c});
                m.triangles.push_back({vid(i + 1, j), vid(i + 1, j + 1), c});
                m.triangles.push_back({vid(i + 1, j + 1), vid(i, j + 1), c});
                m.triangles.push_back({vid(i, j + 1), vid(i, j), c});
            }
    }
    m.finalize();
    return m;
}

TriMesh generate_disc_mesh(double radius, double target_h) {
    if (!(radius > 0.0)) throw ConfigError("disc mesh: radius must be positive");
    if (!(target_h > 0.0) || !(target_h < radius)) throw ConfigError("disc mesh: need 0 < target_h < radius");

    // Ring spacing chosen so the longest edge stays below 1.5 * target_h.
    const int K = static_cast<int>(std::ceil(radius / (0.80 * target_h)));
    const double dr = radius / K;
    if (6 * K < 8) throw ConfigError("disc mesh: target_h too coarse to resolve the circle");

    TriMesh m;
    m.vertices.push_back({0.0, 0.0});
    std::vector<int> ring_start(K + 1, 0), ring_count(K + 1, 0);
    ring_count[0] = 1;
    for (int k = 1; k <= K; ++k) {
        ring_start[k] = static_cast<int>(m.vertices.size());
        ring_count[k] = 6 * k;
        const double r = k * dr;
        for (int i = 0; i < 6 * k; ++i) {
            const double th = 2.0 * M_PI * i / (6 * k);
            m.vertices.push_back({r * std::cos(th), r * std::sin(th)});
        }
    }
    // Innermost hexagon fan.
    for (int i = 0; i < 6; ++i) m.triangles.push_back({0, ring_start[1] + i, ring_start[1] + (i + 1) % 6});
    // Sew ring k-1 to ring k walking both rings by angle.
    for (int k = 2; k <= K; ++k) {
        const int si = ring_start[k - 1], ni = ring_count[k - 1];
        const int so = ring_start[k], no = ring_count[k];
        int i = 0, o = 0; // next inner/outer vertex to connect
        auto ang = [](int j, int cnt) { return static_cast<double>(j) / cnt; };
        while (i < ni || o < no) {
            const int vi = si + (i % ni), vo = so + (o % no);
            // Advance whichever ring has the smaller next angle.
            const bool advance_outer = (i == ni) || (o < no && ang(o + 1, no) <= ang(i + 1, ni));
            if (advance_outer) {
                m.triangles.push_back({vo, so + ((o + 1) % no), vi});
                ++o;
            } else {
                m.triangles.push_back({vo, si + ((i + 1) % ni), vi});
                ++i;
            }
        }
    }
    m.finalize();
    if (m.h_max > 1.5 * target_h)
        throw MeshError("disc mesh generator exceeded 1.5*target_h; got h_max = " + std::to_string(m.h_max));
    return m;
}

std::uint64_t TriMesh::content_hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    std::uint64_t nv = vertices.size(), nt = triangles.size();
    mix(&nv, 8);
    mix(&nt, 8);
    for (const auto& v : vertices) {
        mix(&v.x, 8);
        mix(&v.y, 8);
    }
    for (const auto& t : triangles) mix(t.data(), 3 * sizeof(int));
    return h;
}

void write_mesh_text(const TriMesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << mesh.n_vertices() << " " << mesh.n_triangles() << "\n";
    for (const auto& v : mesh.vertices) os << format_g17(v.x) << " " << format_g17(v.y) << "\n";
    for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
    if (!os) throw IoError("write failed: " + path);
}

TriMesh read_mesh_text(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open mesh file " + path);
    int nv = 0, nt = 0;
    if (!(is >> nv >> nt) || nv < 3 || nt < 1) throw IoError("bad mesh header in " + path);
    TriMesh m;
    m.vertices.resize(nv);
    for (auto& v : m.vertices)
        if (!(is >> v.x >> v.y)) throw IoError("bad vertex line in " + path);
    m.triangles.resize(nt);
    for (auto& t : m.triangles) {
        if (!(is >> t[0] >> t[1] >> t[2])) throw IoError("bad triangle line in " + path);
        for (int k : t)
            if (k < 0 || k >= nv) throw IoError("triangle index out of range in " + path);
    }
    m.finalize();
    return m;
}

} // namespace qvi
