//! Evaluation domains, polyline paths, closed cycles, triangulated surfaces
//! and the quadrature rules that integrate form components over them.
#pragma once

#include <cstdio>

#include "field.hpp"

namespace ddx {

struct P3 {
    double x = 0, y = 0, t = 0;
};
inline P3 operator+(P3 a, P3 b) { return {a.x + b.x, a.y + b.y, a.t + b.t}; }
inline P3 operator-(P3 a, P3 b) { return {a.x - b.x, a.y - b.y, a.t - b.t}; }
inline P3 operator*(double s, P3 a) { return {s * a.x, s * a.y, s * a.t}; }
inline double dot(P3 a, P3 b) { return a.x * b.x + a.y * b.y + a.t * b.t; }
inline P3 cross(P3 a, P3 b) {
    return {a.y * b.t - a.t * b.y, a.t * b.x - a.x * b.t, a.x * b.y - a.y * b.x};
}
inline double norm(P3 a) { return std::sqrt(dot(a, a)); }

/// Sampling axis: `count` equally spaced points on [lo, hi]. A collapsed axis
/// (count == 1) pins the coordinate to lo.
struct Axis {
    int count = 1;
    double lo = 0, hi = 0;

    Axis() = default;
    Axis(int n, double a, double b) : count(n), lo(a), hi(b) {
        if (n < 1) throw ContractViolation("Axis: count must be >= 1");
        if (n == 1) {
            if (a != b) throw ContractViolation("Axis: collapsed axis needs lo == hi");
        } else {
            if (!(b > a)) throw ContractViolation("Axis: need hi > lo");
            if (n < 8) throw ContractViolation("Axis: non-collapsed axis needs >= 8 points");
        }
    }
    static Axis collapsed(double v) { return Axis(1, v, v); }

    bool is_collapsed() const { return count == 1; }
    double spacing() const { return count > 1 ? (hi - lo) / (count - 1) : 0.0; }
    double coord(int i) const {
        if (i < 0 || i >= count) throw ContractViolation("Axis: index out of range");
        return count > 1 ? lo + i * (hi - lo) / (count - 1) : lo;
    }
};

struct Box {
    Axis x, y, t;
    std::size_t points() const { return std::size_t(x.count) * y.count * t.count; }
};

struct Domain {
    Box box;
    Tolerances tol;
    /// Step for finite-difference probes of closure residuals: the finest
    /// non-collapsed grid spacing, or a fixed fallback if all axes collapse.
    double fd_step() const {
        double h = 0.25;
        bool any = false;
        for (const Axis* a : {&box.x, &box.y, &box.t})
            if (!a->is_collapsed()) {
                h = any ? std::min(h, a->spacing()) : a->spacing();
                any = true;
            }
        return h;
    }
};

// ---- paths, cycles, surfaces ----------------------------------------------

struct Path3 {
    std::vector<P3> pts;
    Path3() = default;
    explicit Path3(std::vector<P3> p) : pts(std::move(p)) {
        if (pts.size() < 2) throw ContractViolation("Path3: need at least two points");
    }
    P3 start() const { return pts.front(); }
    P3 end() const { return pts.back(); }
};

/// Axis-ordered path base -> target: move t first, then y, then x.
inline Path3 canonical_path(P3 base, P3 target) {
    std::vector<P3> p;
    p.push_back(base);
    P3 a{base.x, base.y, target.t};
    P3 b{base.x, target.y, target.t};
    if (a.t != base.t) p.push_back(a);
    if (b.y != a.y) p.push_back(b);
    if (target.x != b.x || p.size() == 1) p.push_back(target);
    return Path3(p);
}

namespace detail {

inline double seg_seg_distance(P3 p1, P3 q1, P3 p2, P3 q2) {
    P3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
    double a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r);
    double c = dot(d1, r), b = dot(d1, d2);
    double den = a * e - b * b;
    double s = 0, u = 0;
    if (den > 1e-14 * a * e) s = std::clamp((b * f - c * e) / den, 0.0, 1.0);
    u = e > 0 ? std::clamp((b * s + f) / e, 0.0, 1.0) : 0.0;
    if (a > 0) s = std::clamp((b * u - c) / a, 0.0, 1.0);
    P3 w = (p1 + s * d1) - (p2 + u * d2);
    return norm(w);
}

}  // namespace detail

/// Closed polyline (closing edge back-to-front is implicit). Rejects
/// degenerate edges and self-intersections.
struct Cycle1 {
    std::vector<P3> pts;

    Cycle1() = default;
    explicit Cycle1(std::vector<P3> p) : pts(std::move(p)) {
        if (pts.size() < 3) throw ContractViolation("Cycle1: need at least three vertices");
        std::size_t n = pts.size();
        for (std::size_t i = 0; i < n; ++i)
            if (norm(pts[(i + 1) % n] - pts[i]) < 1e-12) throw ContractViolation("Cycle1: degenerate edge");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent
                double d = detail::seg_seg_distance(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]);
                if (d < 1e-9) throw ContractViolation("Cycle1: self-intersecting polyline");
            }
    }

    Path3 as_path() const {
        std::vector<P3> p = pts;
        p.push_back(pts.front());
        return Path3(p);
    }
};

inline Cycle1 rect_cycle(P3 p00, P3 p10, P3 p11, P3 p01) { return Cycle1({p00, p10, p11, p01}); }

/// Oriented triangle mesh. Construction validates indices, consistent
/// orientation of interior edges and that the boundary is one closed loop.
struct Surface2 {
    std::vector<P3> verts;
    std::vector<std::array<int, 3>> tris;

    Surface2() = default;
    Surface2(std::vector<P3> v, std::vector<std::array<int, 3>> f) : verts(std::move(v)), tris(std::move(f)) {
        if (tris.empty()) throw ContractViolation("Surface2: empty triangulation");
        std::map<std::pair<int, int>, int> dir;  // directed edge -> count
        for (const auto& tr : tris) {
            for (int k = 0; k < 3; ++k) {
                int a = tr[k], b = tr[(k + 1) % 3];
                if (a < 0 || b < 0 || a >= int(verts.size()) || b >= int(verts.size()) || a == b)
                    throw ContractViolation("Surface2: bad triangle index");
                if (++dir[{a, b}] > 1) throw ContractViolation("Surface2: inconsistent orientation (repeated directed edge)");
            }
        }
        // boundary = directed edges with no opposite partner
        std::map<int, int> next;
        int nb = 0;
        for (const auto& [e, cnt] : dir) {
            (void)cnt;
            if (!dir.count({e.second, e.first})) {
                if (next.count(e.first)) throw ContractViolation("Surface2: boundary is not a simple loop");
                next[e.first] = e.second;
                ++nb;
            }
        }
        if (nb == 0) throw ContractViolation("Surface2: closed surface has no boundary to compare against");
        int start = next.begin()->first, cur = start, steps = 0;
        do {
            auto it = next.find(cur);
            if (it == next.end()) throw ContractViolation("Surface2: boundary is not closed");
            cur = it->second;
            if (++steps > nb) break;
        } while (cur != start);
        if (steps != nb) throw ContractViolation("Surface2: boundary has multiple loops");
    }

    /// Oriented boundary as a cycle (vertices in edge order).
    Cycle1 boundary() const {
        std::map<std::pair<int, int>, bool> dir;
        for (const auto& tr : tris)
            for (int k = 0; k < 3; ++k) dir[{tr[k], tr[(k + 1) % 3]}] = true;
        std::map<int, int> next;
        for (const auto& [e, _] : dir)
            if (!dir.count({e.second, e.first})) next[e.first] = e.second;
        std::vector<P3> loop;
        int start = next.begin()->first, cur = start;
        do {
            loop.push_back(verts[std::size_t(cur)]);
            cur = next.at(cur);
        } while (cur != start);
        // drop collinear repeats so the cycle validator sees clean corners
        std::vector<P3> trimmed;
        std::size_t n = loop.size();
        for (std::size_t i = 0; i < n; ++i) {
            P3 prev = loop[(i + n - 1) % n], here = loop[i], nxt = loop[(i + 1) % n];
            P3 u = here - prev, v = nxt - here;
            if (norm(cross(u, v)) > 1e-12 * std::max(1.0, norm(u) * norm(v))) trimmed.push_back(here);
        }
        return Cycle1(trimmed.size() >= 3 ? trimmed : loop);
    }
};

namespace detail {

struct VertexPool {
    std::vector<P3> verts;
    std::map<std::array<long long, 3>, int> index;
    int add(P3 p) {
        std::array<long long, 3> key{llround(p.x * 1e9), llround(p.y * 1e9), llround(p.t * 1e9)};
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        verts.push_back(p);
        index.emplace(key, int(verts.size()) - 1);
        return int(verts.size()) - 1;
    }
};

inline void add_subdivided_triangle(VertexPool& pool, std::vector<std::array<int, 3>>& tris, P3 A, P3 B, P3 C, int n) {
    auto at = [&](int i, int j) {  // barycentric (i/n toward B, j/n toward C)
        double u = double(i) / n, v = double(j) / n;
        return pool.add(P3{A.x + u * (B.x - A.x) + v * (C.x - A.x), A.y + u * (B.y - A.y) + v * (C.y - A.y),
                           A.t + u * (B.t - A.t) + v * (C.t - A.t)});
    };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n - j; ++i) {
            tris.push_back({at(i, j), at(i + 1, j), at(i, j + 1)});
            if (i + 1 < n - j) tris.push_back({at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)});
        }
}

}  // namespace detail

/// Bilinear patch over four corners, triangulated n0 x n1.
inline Surface2 rect_surface(P3 p00, P3 p10, P3 p11, P3 p01, int n0, int n1) {
    if (n0 < 1 || n1 < 1) throw ContractViolation("rect_surface: subdivisions must be >= 1");
    detail::VertexPool pool;
    std::vector<std::array<int, 3>> tris;
    auto at = [&](int i, int j) {
        double u = double(i) / n0, v = double(j) / n1;
        P3 a = (1 - u) * p00 + u * p10;
        P3 b = (1 - u) * p01 + u * p11;
        return pool.add((1 - v) * a + v * b);
    };
    for (int i = 0; i < n0; ++i)
        for (int j = 0; j < n1; ++j) {
            tris.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            tris.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    return Surface2(pool.verts, tris);
}

/// Pyramid sides over the same four corners with a chosen apex; shares its
/// boundary with rect_surface over matching corners.
inline Surface2 tent_surface(P3 p00, P3 p10, P3 p11, P3 p01, P3 apex, int n) {
    if (n < 1) throw ContractViolation("tent_surface: subdivisions must be >= 1");
    detail::VertexPool pool;
    std::vector<std::array<int, 3>> tris;
    detail::add_subdivided_triangle(pool, tris, p00, p10, apex, n);
    detail::add_subdivided_triangle(pool, tris, p10, p11, apex, n);
    detail::add_subdivided_triangle(pool, tris, p11, p01, apex, n);
    detail::add_subdivided_triangle(pool, tris, p01, p00, apex, n);
    return Surface2(pool.verts, tris);
}

// ---- differential form components -----------------------------------------

/// Components of a 1-form  X dx + Y dy + T dt.
struct OneForm {
    ScalarField X, Y, T;
};

/// Components of a 2-form  W dx∧dy + ZX dy∧dt + ZY dt∧dx.
struct TwoForm {
    ScalarField W, ZX, ZY;
};

/// Line integral of a 1-form along a polyline; each segment is split into
/// Gauss panels no longer than max_panel.
inline cx line_integral(const OneForm& w, const Path3& path, double max_panel = 0.25) {
    std::vector<cx> contrib;
    for (std::size_t s = 0; s + 1 < path.pts.size(); ++s) {
        P3 a = path.pts[s], b = path.pts[s + 1];
        P3 d = b - a;
        double len = norm(d);
        if (len == 0) continue;
        int np = std::max(1, int(std::ceil(len / max_panel)));
        auto f = [&](double u) {
            P3 p = a + u * d;
            cx v = 0.0;
            if (d.x != 0) v += w.X(p.x, p.y, p.t) * d.x;
            if (d.y != 0) v += w.Y(p.x, p.y, p.t) * d.y;
            if (d.t != 0) v += w.T(p.x, p.y, p.t) * d.t;
            return v;
        };
        for (int k = 0; k < np; ++k) contrib.push_back(gauss_panel(f, double(k) / np, double(k + 1) / np));
    }
    return pairwise_sum(contrib, cx(0));
}

inline cx cycle_integral(const OneForm& w, const Cycle1& c, double max_panel = 0.25) {
    return line_integral(w, c.as_path(), max_panel);
}

namespace detail {

struct TriRule {
    std::vector<std::array<double, 3>> bary;
    std::vector<double> w;
};

/// Dunavant degree-6 rule (12 points, weights sum to 1).
inline const TriRule& dunavant6() {
    static const TriRule r = [] {
        TriRule q;
        auto push3 = [&](double a, double b, double wt) {
            q.bary.push_back({a, b, b});
            q.bary.push_back({b, a, b});
            q.bary.push_back({b, b, a});
            for (int i = 0; i < 3; ++i) q.w.push_back(wt);
        };
        auto push6 = [&](double a, double b, double c, double wt) {
            q.bary.push_back({a, b, c});
            q.bary.push_back({a, c, b});
            q.bary.push_back({b, a, c});
            q.bary.push_back({b, c, a});
            q.bary.push_back({c, a, b});
            q.bary.push_back({c, b, a});
            for (int i = 0; i < 6; ++i) q.w.push_back(wt);
        };
        push3(0.873821971016996, 0.063089014491502, 0.050844906370207);
        push3(0.501426509658179, 0.249286745170910, 0.116786275726379);
        push6(0.636502499121399, 0.310352451033785, 0.053145049844816, 0.082851075618374);
        return q;
    }();
    return r;
}

}  // namespace detail

/// Surface integral of a 2-form over an oriented triangle mesh.
inline cx surface_integral(const TwoForm& w, const Surface2& S) {
    const auto& rule = detail::dunavant6();
    std::vector<cx> contrib;
    contrib.reserve(S.tris.size());
    for (const auto& tr : S.tris) {
        P3 A = S.verts[std::size_t(tr[0])], B = S.verts[std::size_t(tr[1])], C = S.verts[std::size_t(tr[2])];
        P3 e1 = B - A, e2 = C - A;
        double jxy = e1.x * e2.y - e1.y * e2.x;
        double jyt = e1.y * e2.t - e1.t * e2.y;
        double jtx = e1.t * e2.x - e1.x * e2.t;
        std::vector<cx> vals(rule.bary.size());
        for (std::size_t q = 0; q < rule.bary.size(); ++q) {
            const auto& l = rule.bary[q];
            P3 p = l[0] * A + l[1] * B + l[2] * C;
            cx v = 0.0;
            if (jxy != 0) v += w.W(p.x, p.y, p.t) * jxy;
            if (jyt != 0) v += w.ZX(p.x, p.y, p.t) * jyt;
            if (jtx != 0) v += w.ZY(p.x, p.y, p.t) * jtx;
            vals[q] = rule.w[q] * v;
        }
        contrib.push_back(0.5 * pairwise_sum(vals));
    }
    return pairwise_sum(contrib, cx(0));
}

}  // namespace ddx
