//! Closed symbolic family: trivariate polynomials and poly*exp(poly) atoms.
//! Closed under +, *, ∂x, ∂y, ∂t and conjugation, so derivative evaluation is
//! exact to rounding. Used for seed waves, probe bumps and test oracles.
#pragma once

#include <map>

#include "common.hpp"

namespace ddx {

/// Sparse polynomial in (x, y, t) with complex coefficients.
class Poly3 {
  public:
    using Key = std::array<int, 3>;
    std::map<Key, cx> c;

    Poly3() = default;
    static Poly3 constant(cx v) {
        Poly3 p;
        if (v != cx(0)) p.c[{0, 0, 0}] = v;
        return p;
    }
    static Poly3 term(cx v, int i, int j, int k) {
        Poly3 p;
        if (v != cx(0)) p.c[{i, j, k}] = v;
        return p;
    }

    bool is_zero() const { return c.empty(); }

    Poly3& operator+=(const Poly3& o) {
        for (const auto& [k, v] : o.c) {
            auto it = c.find(k);
            if (it == c.end())
                c.emplace(k, v);
            else if ((it->second += v) == cx(0))
                c.erase(it);
        }
        return *this;
    }
    friend Poly3 operator+(Poly3 a, const Poly3& b) { return a += b; }
    friend Poly3 operator-(const Poly3& a, const Poly3& b) { return a + (b * cx(-1)); }

    friend Poly3 operator*(const Poly3& p, cx s) {
        Poly3 r;
        if (s == cx(0)) return r;
        for (const auto& [k, v] : p.c) r.c[k] = v * s;
        return r;
    }
    friend Poly3 operator*(cx s, const Poly3& p) { return p * s; }

    friend Poly3 operator*(const Poly3& a, const Poly3& b) {
        Poly3 r;
        for (const auto& [ka, va] : a.c)
            for (const auto& [kb, vb] : b.c) {
                Key k{ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2]};
                auto it = r.c.find(k);
                if (it == r.c.end())
                    r.c.emplace(k, va * vb);
                else if ((it->second += va * vb) == cx(0))
                    r.c.erase(it);
            }
        return r;
    }

    /// ∂/∂axis, axis ∈ {0:x, 1:y, 2:t}.
    Poly3 deriv(int axis) const {
        Poly3 r;
        for (const auto& [k, v] : c) {
            if (k[axis] == 0) continue;
            Key kk = k;
            kk[axis] -= 1;
            r.c[kk] = v * double(k[axis]);
        }
        return r;
    }

    Poly3 conjugate() const {
        Poly3 r;
        for (const auto& [k, v] : c) r.c[k] = std::conj(v);
        return r;
    }

    cx eval(double x, double y, double t) const {
        int mx = 0, my = 0, mt = 0;
        for (const auto& [k, v] : c) {
            mx = std::max(mx, k[0]);
            my = std::max(my, k[1]);
            mt = std::max(mt, k[2]);
        }
        std::vector<double> px(mx + 1, 1.0), py(my + 1, 1.0), pt(mt + 1, 1.0);
        for (int i = 1; i <= mx; ++i) px[i] = px[i - 1] * x;
        for (int i = 1; i <= my; ++i) py[i] = py[i - 1] * y;
        for (int i = 1; i <= mt; ++i) pt[i] = pt[i - 1] * t;
        std::vector<cx> terms;
        terms.reserve(c.size());
        for (const auto& [k, v] : c) terms.push_back(v * (px[k[0]] * py[k[1]] * pt[k[2]]));
        return pairwise_sum(terms);
    }
};

/// pre(x,y,t) * exp(expo(x,y,t)).
struct Atom {
    Poly3 pre, expo;

    Atom deriv(int axis) const { return {pre.deriv(axis) + pre * expo.deriv(axis), expo}; }
    Atom conjugate() const { return {pre.conjugate(), expo.conjugate()}; }
    cx eval(double x, double y, double t) const {
        if (pre.is_zero()) return 0.0;
        return pre.eval(x, y, t) * std::exp(expo.eval(x, y, t));
    }
};

/// Finite sum of atoms.
class AnalyticScalar {
  public:
    std::vector<Atom> atoms;

    AnalyticScalar() = default;
    explicit AnalyticScalar(Atom a) { atoms.push_back(std::move(a)); }

    static AnalyticScalar zero() { return {}; }
    static AnalyticScalar constant(cx v) { return AnalyticScalar(Atom{Poly3::constant(v), {}}); }
    /// pre * exp(expo)
    static AnalyticScalar exp_poly(Poly3 pre, Poly3 expo) { return AnalyticScalar(Atom{std::move(pre), std::move(expo)}); }
    /// c * exp(ax*x + ay*y + at*t)
    static AnalyticScalar exp_linear(cx coeff, cx ax, cx ay, cx at) {
        Poly3 e = Poly3::term(ax, 1, 0, 0) + Poly3::term(ay, 0, 1, 0) + Poly3::term(at, 0, 0, 1);
        return exp_poly(Poly3::constant(coeff), e);
    }

    /// Merge atoms sharing an exponent polynomial; drop zero atoms.
    AnalyticScalar& compress() {
        std::vector<Atom> out;
        for (auto& a : atoms) {
            if (a.pre.is_zero()) continue;
            bool merged = false;
            for (auto& b : out)
                if (b.expo.c == a.expo.c) {
                    b.pre += a.pre;
                    merged = true;
                    break;
                }
            if (!merged) out.push_back(std::move(a));
        }
        std::erase_if(out, [](const Atom& a) { return a.pre.is_zero(); });
        atoms = std::move(out);
        return *this;
    }

    AnalyticScalar& operator+=(const AnalyticScalar& o) {
        atoms.insert(atoms.end(), o.atoms.begin(), o.atoms.end());
        return compress();
    }
    friend AnalyticScalar operator+(AnalyticScalar a, const AnalyticScalar& b) { return a += b; }
    friend AnalyticScalar operator*(const AnalyticScalar& a, cx s) {
        AnalyticScalar r;
        for (const auto& at : a.atoms) r.atoms.push_back({at.pre * s, at.expo});
        return r.compress();
    }
    friend AnalyticScalar operator-(const AnalyticScalar& a, const AnalyticScalar& b) { return a + b * cx(-1); }
    friend AnalyticScalar operator*(const AnalyticScalar& a, const AnalyticScalar& b) {
        AnalyticScalar r;
        for (const auto& p : a.atoms)
            for (const auto& q : b.atoms) r.atoms.push_back({p.pre * q.pre, p.expo + q.expo});
        return r.compress();
    }

    AnalyticScalar deriv(int axis) const {
        AnalyticScalar r;
        for (const auto& a : atoms) r.atoms.push_back(a.deriv(axis));
        return r.compress();
    }
    AnalyticScalar conjugate() const {
        AnalyticScalar r;
        for (const auto& a : atoms) r.atoms.push_back(a.conjugate());
        return r;
    }

    cx eval(double x, double y, double t) const {
        if (atoms.empty()) return 0.0;
        std::vector<cx> terms(atoms.size());
        for (std::size_t i = 0; i < atoms.size(); ++i) terms[i] = atoms[i].eval(x, y, t);
        return pairwise_sum(terms);
    }
};

}  // namespace ddx
