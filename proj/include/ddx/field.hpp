//! Scalar/vector/matrix fields over (x, y, t) with derivative-aware
//! evaluation. A field is a shared immutable node; evaluation takes the
//! requested mixed derivative order, and every combinator routes derivatives
//! through exact rules (Leibniz, quotient recursion, fundamental theorem of
//! calculus) so differentiation never degrades to finite differences unless a
//! node is an opaque lambda.
#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>

#include "analytic.hpp"
#include "common.hpp"

namespace ddx {

struct FieldImpl {
    virtual cx eval(double x, double y, double t, int kx, int ky, int kt) const = 0;
    virtual ~FieldImpl() = default;
};

using Support = std::optional<std::pair<double, double>>;  // x-interval hint

class ScalarField {
    std::shared_ptr<const FieldImpl> p_;
    Support sup_;

  public:
    ScalarField() = default;
    explicit ScalarField(std::shared_ptr<const FieldImpl> p, Support s = {}) : p_(std::move(p)), sup_(std::move(s)) {}

    bool valid() const { return bool(p_); }
    const Support& support() const { return sup_; }
    ScalarField with_support(double lo, double hi) const { return ScalarField(p_, std::make_pair(lo, hi)); }

    cx operator()(double x, double y, double t, int kx = 0, int ky = 0, int kt = 0) const {
        if (!p_) throw ContractViolation("evaluating an empty field");
        if (kx < 0 || ky < 0 || kt < 0) throw ContractViolation("negative derivative order");
        if (sup_ && (x < sup_->first || x > sup_->second)) return 0.0;
        return p_->eval(x, y, t, kx, ky, kt);
    }

    ScalarField deriv(int kx, int ky, int kt) const;
    ScalarField dx(int k = 1) const { return deriv(k, 0, 0); }
    ScalarField dy(int k = 1) const { return deriv(0, k, 0); }
    ScalarField dt(int k = 1) const { return deriv(0, 0, k); }

    static ScalarField analytic(AnalyticScalar a);
    static ScalarField constant(cx v) { return analytic(AnalyticScalar::constant(v)); }
    static ScalarField lambda(std::function<cx(double, double, double)> f, double h = 0.05);
    /// Prefix integral of f along `axis` (0:x, 1:y, 2:t) from the anchor.
    static ScalarField cumulative(int axis, ScalarField f, double anchor, double cell = 0.25);
    static ScalarField cumulative_x(ScalarField f, double x0, double cell = 0.25) {
        return cumulative(0, std::move(f), x0, cell);
    }
    /// f with the `axis` coordinate pinned to a constant value.
    static ScalarField pinned(int axis, double value, ScalarField f);

    friend ScalarField operator+(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator-(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator*(const ScalarField& a, const ScalarField& b);
    friend ScalarField operator*(cx s, const ScalarField& a);
    friend ScalarField operator*(const ScalarField& a, cx s) { return s * a; }
    friend ScalarField conj(const ScalarField& a);
    friend ScalarField quotient(const ScalarField& num, const ScalarField& den);
};

ScalarField lin_comb(const std::vector<cx>& coef, const std::vector<ScalarField>& fields);

namespace detail {

struct AnalyticImpl final : FieldImpl {
    AnalyticScalar base;
    mutable std::map<std::array<int, 3>, AnalyticScalar> table;
    mutable std::mutex mx;

    explicit AnalyticImpl(AnalyticScalar a) : base(std::move(a)) {}

    const AnalyticScalar& get(int kx, int ky, int kt) const {
        std::array<int, 3> key{kx, ky, kt};
        auto it = table.find(key);
        if (it != table.end()) return it->second;
        AnalyticScalar d;
        if (kx > 0)
            d = get(kx - 1, ky, kt).deriv(0);
        else if (ky > 0)
            d = get(kx, ky - 1, kt).deriv(1);
        else if (kt > 0)
            d = get(kx, ky, kt - 1).deriv(2);
        else
            d = base;
        return table.emplace(key, std::move(d)).first->second;
    }

    cx eval(double x, double y, double t, int kx, int ky, int kt) const override {
        std::lock_guard<std::mutex> g(mx);
        return get(kx, ky, kt).eval(x, y, t);
    }
};

struct LambdaImpl final : FieldImpl {
    std::function<cx(double, double, double)> f;
    double h;
    LambdaImpl(std::function<cx(double, double, double)> fn, double step) : f(std::move(fn)), h(step) {}

    cx eval(double x, double y, double t, int kx, int ky, int kt) const override {
        if (kt > 0)
            return fd_derivative([&](double tt) { return eval(x, y, tt, kx, ky, 0); }, t, kt, h);
        if (ky > 0)
            return fd_derivative([&](double yy) { return eval(x, yy, t, kx, 0, 0); }, y, ky, h);
        if (kx > 0)
            return fd_derivative([&](double xx) { return f(xx, y, t); }, x, kx, h);
        return f(x, y, t);
    }
};

struct SumImpl final : FieldImpl {
    std::vector<cx> coef;
    std::vector<ScalarField> term;

    cx eval(double x, double y, double t, int kx, int ky, int kt) const override {
        std::vector<cx> vals(term.size());
        for (std::size_t i = 0; i < term.size(); ++i) vals[i] = coef[i] * term[i](x, y, t, kx, ky, kt);
        return pairwise_sum(vals);
    }
};

struct ProductImpl final : FieldImpl {
    ScalarField a, b;
    ProductImpl(ScalarField x, ScalarField y) : a(std::move(x)), b(std::move(y)) {}

    cx eval(double x, double y, double t, int kx, int ky, int kt) const override {
        std::vector<cx> terms;
        terms.reserve(std::size_t(kx + 1) * (ky + 1) * (kt + 1));
        for (int i = 0; i <= kx; ++i)
            for (int j = 0; j <= ky; ++j)
                for (int l = 0; l <= kt; ++l) {
                    double c = binom(kx, i) * binom(ky, j) * binom(kt, l);
                    cx da = a(x, y, t, i, j, l);
                    if (da == cx(0)) { terms.push_back(0.0); continue; }
                    terms.push_back(c * da * b(x, y, t, kx - i, ky - j, kt - l));
                }
        return pairwise_sum(terms);
    }
};

struct ConjImpl final : FieldImpl {
    ScalarField a;
    explicit ConjImpl(ScalarField x) : a(std::move(x)) {}
    cx eval(double x, double y, double t, int kx, int ky, int kt) const override {
        return std::conj(a(x, y, t, kx, ky, kt));
    }
};

struct DerivShiftImpl final : FieldImpl {
    ScalarField a;
    int sx, sy, st;
    DerivShiftImpl(ScalarField f, int kx, int ky, int kt) : a(std::move(f)), sx(kx), sy(ky), st(kt) {}
    cx eval(double x, double y, double t, int kx, int ky, int kt) const override {
        return a(x, y, t, kx + sx, ky + sy, kt + st);
    }
};

// R = A / B via  d^a R = (d^a A - sum_{0<b<=a} C(a,b) d^b B d^{a-b} R) / B,
// memoized per evaluation point.
struct QuotientImpl final : FieldImpl {
    ScalarField num, den;
    QuotientImpl(ScalarField a, ScalarField b) : num(std::move(a)), den(std::move(b)) {}

    cx eval(double x, double y, double t, int kx, int ky, int kt) const override {
        std::map<std::array<int, 3>, cx> memo;
        cx b0 = den(x, y, t);
        if (b0 == cx(0)) throw DomainError("quotient field: denominator vanishes at evaluation point");
        std::function<cx(int, int, int)> rec = [&](int ax, int ay, int at) -> cx {
            std::array<int, 3> key{ax, ay, at};
            auto it = memo.find(key);
            if (it != memo.end()) return it->second;
            std::vector<cx> terms;
            terms.push_back(num(x, y, t, ax, ay, at));
            for (int i = 0; i <= ax; ++i)
                for (int j = 0; j <= ay; ++j)
                    for (int l = 0; l <= at; ++l) {
                        if (i + j + l == 0) continue;
                        double c = binom(ax, i) * binom(ay, j) * binom(at, l);
                        terms.push_back(-c * den(x, y, t, i, j, l) * rec(ax - i, ay - j, at - l));
                    }
            cx v = pairwise_sum(terms) / b0;
            memo.emplace(key, v);
            return v;
        };
        return rec(kx, ky, kt);
    }
};

struct PinImpl final : FieldImpl {
    ScalarField f;
    int axis;
    double value;
    PinImpl(ScalarField g, int ax, double v) : f(std::move(g)), axis(ax), value(v) {}

    cx eval(double x, double y, double t, int kx, int ky, int kt) const override {
        double c[3] = {x, y, t};
        int k[3] = {kx, ky, kt};
        if (k[axis] > 0) return 0.0;  // the pinned coordinate is constant
        c[axis] = value;
        return f(c[0], c[1], c[2], k[0], k[1], k[2]);
    }
};

// F = prefix integral of f along one axis with memoized per-cell tables keyed
// by the transverse coordinates. Derivatives along the axis reduce to the
// integrand; transverse derivatives commute into the integrand (children).
struct CumulativeImpl final : FieldImpl {
    ScalarField f;
    int axis;
    double x0, cell;
    mutable std::map<std::pair<double, double>, std::vector<cx>> prefix;
    mutable std::map<std::pair<int, int>, std::shared_ptr<const CumulativeImpl>> kids;
    mutable std::map<std::array<double, 3>, cx> memo;
    mutable std::mutex mx;

    CumulativeImpl(ScalarField g, int ax, double anchor, double w) : f(std::move(g)), axis(ax), x0(anchor), cell(w) {
        if (!(w > 0)) throw ContractViolation("cumulative: cell width must be positive");
        if (ax < 0 || ax > 2) throw ContractViolation("cumulative: bad axis");
    }

    cx eval(double x, double y, double t, int kx, int ky, int kt) const override {
        double c[3] = {x, y, t};
        int k[3] = {kx, ky, kt};
        int u = (axis + 1) % 3, v = (axis + 2) % 3;  // transverse axes
        if (k[axis] >= 1) {
            k[axis] -= 1;
            return f(c[0], c[1], c[2], k[0], k[1], k[2]);
        }
        if (k[u] > 0 || k[v] > 0) {
            std::shared_ptr<const CumulativeImpl> kid;
            {
                std::lock_guard<std::mutex> g(mx);
                auto& slot = kids[{k[u], k[v]}];
                if (!slot) {
                    int kk[3] = {0, 0, 0};
                    kk[u] = k[u];
                    kk[v] = k[v];
                    slot = std::make_shared<CumulativeImpl>(
                        ScalarField(std::make_shared<DerivShiftImpl>(f, kk[0], kk[1], kk[2]),
                                    axis == 0 ? Support{} : f.support()),
                        axis, x0, cell);
                }
                kid = slot;
            }
            return kid->eval(x, y, t, 0, 0, 0);
        }
        double s_to = c[axis];
        // The same head query recurs across the derivative paths of every
        // enclosing expression (Leibniz terms share factors), so memoize it;
        // nested antiderivatives would otherwise redo their tail panels each
        // time and the cost compounds with the nesting depth.
        std::array<double, 3> key{c[0], c[1], c[2]};
        {
            std::lock_guard<std::mutex> g(mx);
            auto it = memo.find(key);
            if (it != memo.end()) return it->second;
        }
        auto integrand = [&](double s) {
            double p[3] = {c[0], c[1], c[2]};
            p[axis] = s;
            return f(p[0], p[1], p[2]);
        };
        cx base = 0.0;
        if (s_to <= x0) {
            double lo = s_to;
            while (lo < x0) {
                double hi = std::min(lo + cell, x0);
                base -= gauss_panel(integrand, lo, hi);
                lo = hi;
            }
        } else {
            int nfull = int(std::floor((s_to - x0) / cell + 1e-12));
            double scut = x0 + nfull * cell;
            if (nfull > 0) {
                std::lock_guard<std::mutex> g(mx);
                auto& row = prefix[{c[u], c[v]}];
                while (int(row.size()) < nfull) {
                    int i = int(row.size());
                    cx seg = gauss_panel(integrand, x0 + i * cell, x0 + (i + 1) * cell);
                    row.push_back(row.empty() ? seg : row.back() + seg);
                }
                base = row[std::size_t(nfull - 1)];
            }
            if (s_to > scut) base += gauss_panel(integrand, scut, s_to);
        }
        {
            std::lock_guard<std::mutex> g(mx);
            if (memo.size() >= 1 << 20) memo.clear();
            memo.emplace(key, base);
        }
        return base;
    }
};

}  // namespace detail

inline ScalarField ScalarField::analytic(AnalyticScalar a) {
    return ScalarField(std::make_shared<detail::AnalyticImpl>(std::move(a)));
}

inline ScalarField ScalarField::lambda(std::function<cx(double, double, double)> f, double h) {
    return ScalarField(std::make_shared<detail::LambdaImpl>(std::move(f), h));
}

inline ScalarField ScalarField::cumulative(int axis, ScalarField f, double anchor, double cell) {
    Support s = axis == 0 ? Support{} : f.support();
    return ScalarField(std::make_shared<detail::CumulativeImpl>(std::move(f), axis, anchor, cell), s);
}

inline ScalarField ScalarField::pinned(int axis, double value, ScalarField f) {
    Support s = axis == 0 ? Support{} : f.support();
    return ScalarField(std::make_shared<detail::PinImpl>(std::move(f), axis, value), s);
}

inline ScalarField ScalarField::deriv(int kx, int ky, int kt) const {
    if (kx == 0 && ky == 0 && kt == 0) return *this;
    return ScalarField(std::make_shared<detail::DerivShiftImpl>(*this, kx, ky, kt), sup_);
}

inline ScalarField lin_comb(const std::vector<cx>& coef, const std::vector<ScalarField>& fields) {
    if (coef.size() != fields.size()) throw ContractViolation("lin_comb: size mismatch");
    if (fields.empty()) return ScalarField::constant(0.0);
    auto impl = std::make_shared<detail::SumImpl>();
    impl->coef = coef;
    impl->term = fields;
    bool all = true;
    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto& s = fields[i].support();
        if (!s) { all = false; break; }
        if (i == 0) { lo = s->first; hi = s->second; }
        lo = std::min(lo, s->first);
        hi = std::max(hi, s->second);
    }
    Support sup;
    if (all) sup = std::make_pair(lo, hi);
    return ScalarField(std::move(impl), sup);
}

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) { return lin_comb({1.0, 1.0}, {a, b}); }
inline ScalarField operator-(const ScalarField& a, const ScalarField& b) { return lin_comb({1.0, -1.0}, {a, b}); }
inline ScalarField operator*(cx s, const ScalarField& a) { return lin_comb({s}, {a}); }

inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    Support sup;
    if (a.support() && b.support())
        sup = std::make_pair(std::max(a.support()->first, b.support()->first),
                             std::min(a.support()->second, b.support()->second));
    else if (a.support())
        sup = a.support();
    else if (b.support())
        sup = b.support();
    return ScalarField(std::make_shared<detail::ProductImpl>(a, b), sup);
}

inline ScalarField conj(const ScalarField& a) {
    return ScalarField(std::make_shared<detail::ConjImpl>(a), a.support());
}

inline ScalarField quotient(const ScalarField& num, const ScalarField& den) {
    return ScalarField(std::make_shared<detail::QuotientImpl>(num, den), num.support());
}

// -------------------------------------------------------------------------
// Vector and matrix fields.
// -------------------------------------------------------------------------

class VecField {
    int n_ = 0;
    std::vector<ScalarField> c_;

  public:
    VecField() = default;
    explicit VecField(std::vector<ScalarField> comps) : n_(int(comps.size())), c_(std::move(comps)) {}
    static VecField zero(int n) {
        std::vector<ScalarField> c(std::size_t(n), ScalarField::constant(0.0));
        return VecField(std::move(c));
    }

    int dim() const { return n_; }
    const ScalarField& operator[](int i) const { return c_.at(std::size_t(i)); }
    ScalarField& operator[](int i) { return c_.at(std::size_t(i)); }

    Eigen::VectorXcd eval(double x, double y, double t, int kx = 0, int ky = 0, int kt = 0) const {
        Eigen::VectorXcd v(n_);
        for (int i = 0; i < n_; ++i) v(i) = c_[std::size_t(i)](x, y, t, kx, ky, kt);
        return v;
    }

    VecField deriv(int kx, int ky, int kt) const {
        std::vector<ScalarField> c;
        c.reserve(c_.size());
        for (const auto& f : c_) c.push_back(f.deriv(kx, ky, kt));
        return VecField(std::move(c));
    }

    friend VecField operator+(const VecField& a, const VecField& b) {
        if (a.n_ != b.n_) throw ContractViolation("vector field dim mismatch");
        std::vector<ScalarField> c;
        for (int i = 0; i < a.n_; ++i) c.push_back(a[i] + b[i]);
        return VecField(std::move(c));
    }
    friend VecField operator*(const ScalarField& s, const VecField& v) {
        std::vector<ScalarField> c;
        for (int i = 0; i < v.n_; ++i) c.push_back(s * v[i]);
        return VecField(std::move(c));
    }
    friend VecField operator*(cx s, const VecField& v) {
        std::vector<ScalarField> c;
        for (int i = 0; i < v.n_; ++i) c.push_back(s * v[i]);
        return VecField(std::move(c));
    }
};

/// sum_i conj(a_i) b_i  (the pointwise pairing density a^dagger b).
inline ScalarField conj_dot(const VecField& a, const VecField& b) {
    if (a.dim() != b.dim()) throw ContractViolation("conj_dot: dim mismatch");
    std::vector<ScalarField> prods;
    std::vector<cx> ones;
    for (int i = 0; i < a.dim(); ++i) {
        prods.push_back(conj(a[i]) * b[i]);
        ones.push_back(1.0);
    }
    return lin_comb(ones, prods);
}

class MatField {
    int r_ = 0, c_ = 0;
    std::vector<ScalarField> e_;  // row-major

  public:
    MatField() = default;
    MatField(int rows, int cols) : r_(rows), c_(cols), e_(std::size_t(rows * cols), ScalarField::constant(0.0)) {}

    int rows() const { return r_; }
    int cols() const { return c_; }
    const ScalarField& at(int i, int j) const { return e_.at(std::size_t(i * c_ + j)); }
    ScalarField& at(int i, int j) { return e_.at(std::size_t(i * c_ + j)); }

    static MatField identity(int n) {
        MatField m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = ScalarField::constant(1.0);
        return m;
    }

    Eigen::MatrixXcd eval(double x, double y, double t, int kx = 0, int ky = 0, int kt = 0) const {
        Eigen::MatrixXcd m(r_, c_);
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j) m(i, j) = at(i, j)(x, y, t, kx, ky, kt);
        return m;
    }

    VecField row(int i) const {
        std::vector<ScalarField> c;
        for (int j = 0; j < c_; ++j) c.push_back(at(i, j));
        return VecField(std::move(c));
    }
    VecField col(int j) const {
        std::vector<ScalarField> c;
        for (int i = 0; i < r_; ++i) c.push_back(at(i, j));
        return VecField(std::move(c));
    }
};

namespace detail {

// Entries of B(x,y,t) = A(x,y,t)^{-1} C with C constant, via
//   d^a B = -A^{-1} sum_{0<b<=a} C(a,b) (d^b A)(d^{a-b} B).
// One core per matrix; entry fields share it. Memoized per point+order.
struct MatInvCore {
    MatField A;
    Eigen::MatrixXcd C;
    double cond_ceiling;
    std::vector<std::string> labels;  // for singularity diagnostics
    mutable std::map<std::array<double, 3>, std::map<std::array<int, 3>, Eigen::MatrixXcd>> memo;
    mutable std::mutex mx;

    Eigen::MatrixXcd get(double x, double y, double t, int kx, int ky, int kt) const {
        std::lock_guard<std::mutex> g(mx);
        auto& pt = memo[{x, y, t}];
        Eigen::MatrixXcd A0 = A.eval(x, y, t);
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A0);
        double cond = A0.cwiseAbs().rowwise().sum().maxCoeff() *
                      lu.inverse().cwiseAbs().rowwise().sum().maxCoeff();
        if (!std::isfinite(cond) || cond > cond_ceiling)
            throw SingularKernel("kernel matrix numerically singular during inversion", labels);
        std::function<const Eigen::MatrixXcd&(int, int, int)> rec = [&](int ax, int ay, int at) -> const Eigen::MatrixXcd& {
            std::array<int, 3> key{ax, ay, at};
            auto it = pt.find(key);
            if (it != pt.end()) return it->second;
            Eigen::MatrixXcd rhs;
            if (ax + ay + at == 0) {
                rhs = C;
            } else {
                rhs = Eigen::MatrixXcd::Zero(A.rows(), C.cols());
                for (int i = 0; i <= ax; ++i)
                    for (int j = 0; j <= ay; ++j)
                        for (int l = 0; l <= at; ++l) {
                            if (i + j + l == 0) continue;
                            double cb = binom(ax, i) * binom(ay, j) * binom(at, l);
                            rhs -= cb * A.eval(x, y, t, i, j, l) * rec(ax - i, ay - j, at - l);
                        }
            }
            Eigen::MatrixXcd v = lu.solve(rhs);
            return pt.emplace(key, std::move(v)).first->second;
        };
        return rec(kx, ky, kt);
    }
};

struct MatInvEntryImpl final : FieldImpl {
    std::shared_ptr<MatInvCore> core;
    int i, j;
    MatInvEntryImpl(std::shared_ptr<MatInvCore> c, int r, int s) : core(std::move(c)), i(r), j(s) {}
    cx eval(double x, double y, double t, int kx, int ky, int kt) const override {
        return core->get(x, y, t, kx, ky, kt)(i, j);
    }
};

}  // namespace detail

/// B = A^{-1} C (C constant). Throws SingularKernel past the condition ceiling.
inline MatField mat_inverse_times(const MatField& A, const Eigen::MatrixXcd& C, double cond_ceiling = 1e12,
                                  std::vector<std::string> labels = {}) {
    if (A.rows() != A.cols() || A.rows() != C.rows()) throw ContractViolation("mat_inverse_times: shape mismatch");
    auto core = std::make_shared<detail::MatInvCore>();
    core->A = A;
    core->C = C;
    core->cond_ceiling = cond_ceiling;
    core->labels = std::move(labels);
    MatField B(A.rows(), int(C.cols()));
    for (int i = 0; i < B.rows(); ++i)
        for (int j = 0; j < B.cols(); ++j)
            B.at(i, j) = ScalarField(std::make_shared<detail::MatInvEntryImpl>(core, i, j));
    return B;
}

}  // namespace ddx
