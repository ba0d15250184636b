#include <catch2/catch_amalgamated.hpp>

#include "ddx/geometry.hpp"
#include "ddx/operator.hpp"

using namespace ddx;

namespace {

// brute-force mixed derivative of a field's value closure, independent of the
// field's own derivative machinery
cx fd_oracle(const ScalarField& f, double x, double y, double t, int kx, int ky, int kt, double h = 0.05) {
    auto v = [&](double xx, double yy, double tt) { return f(xx, yy, tt); };
    if (kt > 0)
        return fd_derivative([&](double tt) { return fd_oracle(f, x, y, tt, kx, ky, 0, h); }, t, kt, h);
    if (ky > 0)
        return fd_derivative([&](double yy) { return fd_oracle(f, x, yy, t, kx, 0, 0, h); }, y, ky, h);
    if (kx > 0) return fd_derivative([&](double xx) { return v(xx, y, t); }, x, kx, h);
    return v(x, y, t);
}

ScalarField expf3(cx c, cx ax, cx ay, cx at) {
    return ScalarField::analytic(AnalyticScalar::exp_linear(c, ax, ay, at));
}

}  // namespace

TEST_CASE("fornberg weights reproduce derivatives of smooth functions") {
    auto f = [](double x) { return std::exp(0.6 * x) * std::sin(x); };
    auto df3 = [](double x) {
        // (e^{ax} sin x)''' with a = 0.6
        double a = 0.6;
        cx z(a, 1.0);
        return (std::pow(z, 3) * std::exp(z * x)).imag();
    };
    cx d = fd_derivative([&](double x) { return cx(f(x)); }, 0.4, 3, 0.05);
    REQUIRE(std::abs(d.real() - df3(0.4)) < 1e-10);
}

TEST_CASE("pairwise sum agrees with sequential sum") {
    Rng rng(7);
    std::vector<double> v(1000);
    for (auto& e : v) e = rng.uniform(-1, 1);
    double seq = 0;
    for (double e : v) seq += e;
    REQUIRE(std::abs(pairwise_sum(v) - seq) < 1e-12);
}

TEST_CASE("analytic atoms differentiate exactly") {
    // (1 + x^2 y) e^{0.3x - 0.2y + 0.1t}
    Poly3 pre = Poly3::constant(1.0) + Poly3::term(1.0, 2, 1, 0);
    Poly3 ex = Poly3::term(0.3, 1, 0, 0) + Poly3::term(-0.2, 0, 1, 0) + Poly3::term(0.1, 0, 0, 1);
    ScalarField f = ScalarField::analytic(AnalyticScalar::exp_poly(pre, ex));
    for (auto [kx, ky, kt] : std::vector<std::array<int, 3>>{{1, 0, 0}, {2, 1, 0}, {3, 1, 1}, {0, 2, 1}}) {
        cx a = f(0.7, -0.4, 0.2, kx, ky, kt);
        cx b = fd_oracle(f, 0.7, -0.4, 0.2, kx, ky, kt);
        INFO(kx << ky << kt);
        REQUIRE(std::abs(a - b) < 1e-7 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("product, conjugate and quotient nodes route derivatives correctly") {
    ScalarField g = expf3(cx(0.5, 0.2), cx(0.4, -0.1), 0.2, -0.3);
    ScalarField h = expf3(1.0, -0.2, cx(0.0, 0.3), 0.1) + ScalarField::constant(2.0);
    ScalarField p = g * h, c = conj(g), q = quotient(g, h);
    for (const ScalarField* f : {&p, &c, &q}) {
        cx a = (*f)(0.3, 0.5, -0.2, 2, 1, 0);
        cx b = fd_oracle(*f, 0.3, 0.5, -0.2, 2, 1, 0);
        REQUIRE(std::abs(a - b) < 1e-6 * std::max(1.0, std::abs(a)));
    }
    REQUIRE(std::abs(p(0.1, 0.2, 0.3) - g(0.1, 0.2, 0.3) * h(0.1, 0.2, 0.3)) < 1e-14);
    REQUIRE(std::abs(q(0.1, 0.2, 0.3) * h(0.1, 0.2, 0.3) - g(0.1, 0.2, 0.3)) < 1e-14);
}

TEST_CASE("cumulative fields match closed-form prefix integrals") {
    ScalarField f = expf3(1.0, 0.8, 0.3, -0.2);
    ScalarField F = ScalarField::cumulative_x(f, -40.0);
    // oracle: int_{-inf}^{x} = f / 0.8, anchor truncation ~ e^{-32}
    cx want = f(1.5, 0.4, 0.1) / 0.8;
    REQUIRE(std::abs(F(1.5, 0.4, 0.1) - want) < 1e-12 * std::abs(want));
    // derivative dispatch: d/dx of F is f, transverse derivatives commute
    REQUIRE(std::abs(F(1.5, 0.4, 0.1, 1, 0, 0) - f(1.5, 0.4, 0.1)) == 0.0);
    cx dy = F(1.5, 0.4, 0.1, 0, 2, 0);
    REQUIRE(std::abs(dy - 0.09 * want) < 1e-11 * std::abs(want));
    // y-axis cumulative with pinning
    ScalarField G = ScalarField::cumulative(1, ScalarField::pinned(0, 0.25, f), -20.0);
    cx wantg = (f(0.25, 0.7, 0.1) - f(0.25, -20.0, 0.1)) / 0.3;
    REQUIRE(std::abs(G(3.0, 0.7, 0.1) - wantg) < 1e-12 * std::abs(wantg));
    REQUIRE(G(3.0, 0.7, 0.1, 1, 0, 0) == cx(0.0));
}

TEST_CASE("support clipping zeroes fields outside the window") {
    ScalarField f = expf3(1.0, 0.1, 0.0, 0.0).with_support(-1.0, 1.0);
    REQUIRE(f(2.0, 0, 0) == cx(0.0));
    REQUIRE(std::abs(f(0.5, 0, 0)) > 0.9);
    ScalarField p = f * expf3(1.0, 0.2, 0.0, 0.0);
    REQUIRE(p(1.5, 0, 0) == cx(0.0));
}

TEST_CASE("diffop composition matches sequential application") {
    ScalarField u = expf3(0.7, 0.3, -0.2, 0.1);
    DiffOp A(2, 2), B(2, 1);
    A.coeff(2) = MatField::identity(2);
    A.coeff(0).at(0, 1) = u;
    A.coeff(0).at(1, 0) = conj(u);
    B.coeff(1).at(0, 0) = u;
    B.coeff(1).at(1, 1) = ScalarField::constant(cx(0, 1));
    B.coeff(0).at(0, 0) = u.dx();
    VecField f(std::vector<ScalarField>{expf3(1.0, cx(0.5, 0.1), 0.2, 0.0), expf3(1.0, -0.3, 0.0, 0.4)});
    VecField lhs = (A * B).apply(f);
    VecField rhs = A.apply(B.apply(f));
    for (int i = 0; i < 2; ++i) {
        cx a = lhs[i](0.4, -0.1, 0.3), b = rhs[i](0.4, -0.1, 0.3);
        REQUIRE(std::abs(a - b) < 1e-12 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("formal adjoint is an involution") {
    ScalarField u = expf3(cx(0.2, 0.4), 0.25, 0.1, -0.2);
    DiffOp A(2, 3);
    A.coeff(3) = MatField::identity(2);
    A.coeff(2).at(0, 1) = u;
    A.coeff(1).at(1, 0) = conj(u) * u;
    A.coeff(0).at(1, 1) = u.dx();
    DiffOp AA = A.adjoint().adjoint();
    for (int i = 0; i <= 3; ++i)
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                cx a = A.coeff(i).at(r, c)(0.3, 0.2, -0.1);
                cx b = AA.coeff(i).at(r, c)(0.3, 0.2, -0.1);
                REQUIRE(std::abs(a - b) < 1e-12 * std::max(1.0, std::abs(a)));
            }
}

TEST_CASE("tail reduction rules reproduce nested quadrature") {
    // All tail fields decay to the left; anchor far enough that boundary
    // terms sit below the comparison tolerance.
    double x0 = -42.0;
    VecField g1(std::vector<ScalarField>{expf3(1.0, 0.9, 0.1, 0.0)});
    VecField h1(std::vector<ScalarField>{expf3(1.0, 0.8, 0.0, 0.2)});
    VecField g2(std::vector<ScalarField>{expf3(0.5, 0.7, -0.1, 0.0)});
    VecField h2(std::vector<ScalarField>{expf3(1.0, 0.6, 0.0, 0.0)});
    VecField f(std::vector<ScalarField>{expf3(1.0, 0.5, 0.2, -0.1)});

    ScalarField u = expf3(0.3, 0.2, 0.0, 0.1);
    DiffOp D(1, 2);
    D.coeff(2).at(0, 0) = ScalarField::constant(1.0);
    D.coeff(1).at(0, 0) = u;
    D.coeff(0).at(0, 0) = ScalarField::constant(cx(0, 0.5));

    ExtOp E1(D, x0);
    E1.tails.push_back({g1, h1});
    ExtOp E2(DiffOp::identity(1), x0);
    E2.tails.push_back({g2, h2});

    for (const auto& [A, B] : std::vector<std::pair<ExtOp, ExtOp>>{{E1, E2}, {E2, E1}, {E2, E2}}) {
        VecField lhs = (A * B).apply(f);
        VecField rhs = A.apply(B.apply(f));
        for (P3 p : {P3{1.2, 0.3, 0.1}, P3{-2.0, -0.4, 0.2}, P3{4.0, 0.0, -0.3}}) {
            cx a = lhs[0](p.x, p.y, p.t), b = rhs[0](p.x, p.y, p.t);
            REQUIRE(std::abs(a - b) < 1e-9 * std::max(1.0, std::abs(b)));
        }
    }
}

TEST_CASE("extended operator parameter derivative matches value differencing") {
    double x0 = -42.0;
    ExtOp E(DiffOp::partial_x(1), x0);
    E.tails.push_back({VecField(std::vector<ScalarField>{expf3(1.0, 0.9, 0.3, 0.0)}),
                       VecField(std::vector<ScalarField>{expf3(1.0, 0.8, -0.2, 0.1)})});
    VecField f(std::vector<ScalarField>{expf3(1.0, 0.5, 0.1, 0.0)});
    ScalarField applied = E.apply(f)[0];
    ScalarField dy_applied = E.param_deriv(1).apply(f)[0] + E.apply(f.deriv(0, 1, 0))[0];
    cx direct = applied(1.0, 0.2, 0.1, 0, 1, 0);
    cx split = dy_applied(1.0, 0.2, 0.1);
    REQUIRE(std::abs(direct - split) < 1e-10 * std::max(1.0, std::abs(direct)));
}

TEST_CASE("line integral of an exact form telescopes") {
    ScalarField F = expf3(1.0, 0.4, -0.3, 0.2) * expf3(1.0, cx(0, 0.2), 0.0, 0.0);
    OneForm w{F.dx(), F.dy(), F.dt()};
    Path3 path({{-1.0, 0.0, 0.0}, {0.5, 1.0, 0.2}, {2.0, -0.5, 0.4}, {1.0, 0.3, -0.1}});
    cx got = line_integral(w, path);
    cx want = F(1.0, 0.3, -0.1) - F(-1.0, 0.0, 0.0);
    REQUIRE(std::abs(got - want) < 1e-12 * std::max(1.0, std::abs(want)));
    Cycle1 cyc({{0, 0, 0}, {1.5, 0.2, 0}, {1.0, 1.0, 0.3}, {-0.5, 0.8, 0.1}});
    REQUIRE(std::abs(cycle_integral(w, cyc)) < 1e-12);
}

TEST_CASE("surface integral agrees with boundary circulation for d of a 1-form") {
    ScalarField A = expf3(0.8, 0.3, 0.2, -0.1);
    ScalarField B = expf3(1.0, -0.2, 0.4, 0.0) * ScalarField::constant(cx(0.5, 0.1));
    ScalarField C = expf3(1.0, 0.1, -0.3, 0.2);
    OneForm alpha{A, B, C};
    TwoForm dalpha{B.dx() - A.dy(), C.dy() - B.dt(), A.dt() - C.dx()};
    Surface2 flat = rect_surface({0, 0, 0}, {1.2, 0.1, 0}, {1.3, 1.1, 0.2}, {0.1, 1.0, 0.2}, 6, 6);
    cx lhs = surface_integral(dalpha, flat);
    cx rhs = cycle_integral(alpha, flat.boundary(), 0.1);
    REQUIRE(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, std::abs(rhs)));
    Surface2 tent = tent_surface({0, 0, 0}, {1.2, 0.1, 0}, {1.3, 1.1, 0.2}, {0.1, 1.0, 0.2}, {0.6, 0.5, 0.8}, 8);
    cx lhs2 = surface_integral(dalpha, tent);
    REQUIRE(std::abs(lhs2 - rhs) < 1e-7 * std::max(1.0, std::abs(rhs)));
}

TEST_CASE("geometry validation rejects malformed inputs") {
    REQUIRE_THROWS_AS(Axis(4, 0.0, 1.0), ContractViolation);
    REQUIRE_THROWS_AS(Cycle1({{0, 0, 0}, {1, 0, 0}}), ContractViolation);
    // bow-tie self intersection
    REQUIRE_THROWS_AS(Cycle1({{0, 0, 0}, {1, 1, 0}, {1, 0, 0}, {0, 1, 0}}), ContractViolation);
    // inconsistent orientation: two triangles sharing an edge in the same direction
    REQUIRE_THROWS_AS(Surface2({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}},
                               {{0, 1, 2}, {0, 1, 3}}),
                      ContractViolation);
    REQUIRE_NOTHROW(Surface2({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}, {{0, 1, 2}, {1, 3, 2}}));
}

TEST_CASE("canonical path orders legs t then y then x") {
    Path3 p = canonical_path({-30, 0, 0}, {2.0, 1.5, 0.7});
    REQUIRE(p.pts.size() == 4);
    REQUIRE(p.pts[1].t == 0.7);
    REQUIRE(p.pts[1].x == -30.0);
    REQUIRE(p.pts[2].y == 1.5);
    REQUIRE(p.pts[3].x == 2.0);
}

TEST_CASE("parallel_for yields identical results for any thread count") {
    auto run = [&](int threads) {
        std::vector<double> out(257);
        parallel_for(out.size(), threads, [&](std::size_t i) {
            out[i] = std::sin(0.1 * double(i)) * std::sqrt(double(i) + 1.0);
        });
        return pairwise_sum(out);
    };
    double a = run(1), b = run(2), c = run(8);
    REQUIRE(a == b);
    REQUIRE(a == c);
}
