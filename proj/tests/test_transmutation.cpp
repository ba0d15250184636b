#include <catch2/catch_amalgamated.hpp>

#include "ddx/instances.hpp"

using namespace ddx;

namespace {

ScalarField expw(cx c, cx ax, cx ay, cx at) {
    return ScalarField::analytic(AnalyticScalar::exp_linear(c, ax, ay, at));
}

cx fd_x(const ScalarField& f, double x, double y, double t, double h = 0.05) {
    return fd_derivative([&](double xx) { return f(xx, y, t); }, x, 1, h);
}
cx fd_y(const ScalarField& f, double x, double y, double t, double h = 0.05) {
    return fd_derivative([&](double yy) { return f(x, yy, t); }, y, 1, h);
}
cx fd_t(const ScalarField& f, double x, double y, double t, double h = 0.05) {
    return fd_derivative([&](double tt) { return f(x, y, tt); }, t, 1, h);
}

cx simpson(const std::function<cx(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    double h = (b - a) / n;
    std::vector<cx> v(std::size_t(n) + 1);
    for (int i = 0; i <= n; ++i) v[std::size_t(i)] = f(a + i * h) * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
    return pairwise_sum(v, cx(0)) * (h / 3.0);
}

}  // namespace

TEST_CASE("lagrange identity holds for a generic matrix operator") {
    ScalarField u = expw(cx(0.4, 0.2), 0.3, -0.1, 0.2);
    DiffOp L(2, 3);
    L.coeff(3) = MatField::identity(2);
    L.coeff(2).at(0, 1) = u;
    L.coeff(2).at(1, 1) = expw(0.5, -0.2, 0.1, 0.0);
    L.coeff(1).at(1, 0) = conj(u);
    L.coeff(0).at(0, 0) = u * u;
    VecField phi(std::vector<ScalarField>{expw(1.0, cx(0.3, 0.2), 0.1, 0.0), expw(0.7, 0.2, -0.2, 0.1)});
    VecField psi(std::vector<ScalarField>{expw(1.0, -0.25, 0.0, 0.3), expw(cx(0, 1), 0.15, 0.2, 0.0)});

    ScalarField defect = lagrange_defect(L, phi, psi);
    ScalarField scale = conj_dot(phi, L.apply(psi));
    for (P3 p : {P3{0.2, 0.1, -0.3}, P3{-0.8, 0.5, 0.2}, P3{1.1, -0.4, 0.0}})
        REQUIRE(std::abs(defect(p.x, p.y, p.t)) < 1e-10 * std::max(1.0, std::abs(scale(p.x, p.y, p.t))));

    // dual route: the same identity with the concomitant differentiated by
    // finite differences of its values rather than exact derivatives
    ScalarField Z = concomitant(L, phi, psi);
    ScalarField lhs = conj_dot(phi, L.apply(psi)) - conj_dot(L.adjoint().apply(phi), psi);
    for (P3 p : {P3{0.2, 0.1, -0.3}, P3{-0.8, 0.5, 0.2}}) {
        cx a = lhs(p.x, p.y, p.t), b = fd_x(Z, p.x, p.y, p.t);
        REQUIRE(std::abs(a - b) < 1e-8 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("divergence identity vanishes for arbitrary smooth pairs") {
    ScalarField u = expw(0.35, 0.4, 0.15, -0.1);
    LaxPair P = kdv_pair(u);
    VecField phi(std::vector<ScalarField>{expw(1.0, cx(0.2, 0.3), -0.1, 0.2)});
    VecField psi(std::vector<ScalarField>{expw(cx(0.6, -0.2), 0.45, 0.2, 0.1)});
    ScalarField dy_def = divergence_defect(P.L, 1, phi, psi);
    ScalarField dt_def = divergence_defect(P.M, 2, phi, psi);
    for (P3 p : {P3{0.3, 0.2, 0.1}, P3{-1.0, -0.3, 0.4}}) {
        REQUIRE(std::abs(dy_def(p.x, p.y, p.t)) < 1e-10);
        REQUIRE(std::abs(dt_def(p.x, p.y, p.t)) < 1e-10);
    }
}

TEST_CASE("seed waves solve the flows and their adjoints") {
    cx lam(0.7, 0.25), nu(0.6, -0.2);
    LaxPair P = kdv_seed_pair();
    VecField psi = kdv_wave(lam), phi = kdv_adjoint_wave(nu);
    for (P3 p : {P3{0.4, 0.2, -0.1}, P3{-0.9, -0.5, 0.3}}) {
        double s = std::abs(psi[0](p.x, p.y, p.t));
        REQUIRE(std::abs(flow_defect(P.L, 1, psi)[0](p.x, p.y, p.t)) < 1e-12 * s);
        REQUIRE(std::abs(flow_defect(P.M, 2, psi)[0](p.x, p.y, p.t)) < 1e-12 * s);
        double sa = std::abs(phi[0](p.x, p.y, p.t));
        REQUIRE(std::abs(adjoint_flow_defect(P.L, 1, phi)[0](p.x, p.y, p.t)) < 1e-12 * sa);
        REQUIRE(std::abs(adjoint_flow_defect(P.M, 2, phi)[0](p.x, p.y, p.t)) < 1e-12 * sa);
    }
}

TEST_CASE("form components are closed exactly on kernel pairs") {
    LaxPair P = kdv_seed_pair();
    OneForm w = one_form(P, kdv_adjoint_wave(0.6), kdv_wave(cx(0.8, 0.2)));
    for (P3 p : {P3{0.5, 0.3, 0.1}, P3{-0.7, -0.2, -0.3}}) {
        double s = std::max(1.0, std::abs(w.X(p.x, p.y, p.t)));
        REQUIRE(std::abs(fd_y(w.X, p.x, p.y, p.t) - fd_x(w.Y, p.x, p.y, p.t)) < 1e-9 * s);
        REQUIRE(std::abs(fd_t(w.X, p.x, p.y, p.t) - fd_x(w.T, p.x, p.y, p.t)) < 1e-9 * s);
        REQUIRE(std::abs(fd_t(w.Y, p.x, p.y, p.t) - fd_y(w.T, p.x, p.y, p.t)) < 1e-9 * s);
    }
}

TEST_CASE("closedness fails when membership or the pair is broken") {
    LaxPair P0 = kdv_seed_pair();
    // wave with a detuned x-rate no longer solves the y-flow
    VecField bad(std::vector<ScalarField>{expw(1.0, 0.85, 0.64, -2.048)});
    OneForm w1 = one_form(P0, kdv_adjoint_wave(0.6), bad);
    REQUIRE(std::abs(fd_y(w1.X, 0.4, 0.2, 0.1) - fd_x(w1.Y, 0.4, 0.2, 0.1)) > 1e-2);

    // potential perturbation desynchronizes the t-component from seed waves
    ScalarField bump = ScalarField::analytic(
        AnalyticScalar::exp_poly(Poly3::constant(0.3), Poly3::term(-1.0, 2, 0, 0)));
    OneForm w2 = one_form(kdv_pair(bump), kdv_adjoint_wave(0.6), kdv_wave(0.8));
    REQUIRE(std::abs(fd_t(w2.X, 0.4, 0.2, 0.1) - fd_x(w2.T, 0.4, 0.2, 0.1)) > 1e-2);
}

TEST_CASE("split concomitants contract the planar lagrange identity") {
    ScalarField u = expw(0.4, 0.2, 0.3, -0.1);
    DiffOp2 L = xy_operator(u);
    // add an off-diagonal mixed term to exercise both splitting branches
    MatField A(1, 1);
    A.at(0, 0) = expw(0.3, 0.1, -0.2, 0.0);
    L.add_coeff(2, 1, A);
    VecField phi(std::vector<ScalarField>{expw(1.0, 0.25, cx(0.1, 0.2), 0.1)});
    VecField psi(std::vector<ScalarField>{expw(cx(0.9, 0.1), 0.3, -0.15, 0.2)});
    ScalarField defect = lagrange_defect2(L, phi, psi);
    for (P3 p : {P3{0.3, 0.4, 0.0}, P3{-0.6, 0.2, 0.5}})
        REQUIRE(std::abs(defect(p.x, p.y, p.t)) < 1e-10);

    // pure mixed-derivative operator: known split pieces
    DiffOp2 Lxy(1);
    MatField a(1, 1);
    a.at(0, 0) = expw(0.7, 0.15, 0.25, 0.0);
    Lxy.set_coeff(1, 1, a);
    auto [zx, zy] = split_concomitant(Lxy, phi, psi);
    ScalarField zx_want = conj(phi[0]) * a.at(0, 0) * psi[0].dy();
    ScalarField zy_want = cx(-1) * conj((conj(a.at(0, 0)) * phi[0]).dx()) * psi[0];
    for (P3 p : {P3{0.3, 0.4, 0.0}, P3{-0.6, 0.2, 0.5}}) {
        REQUIRE(std::abs(zx(p.x, p.y, p.t) - zx_want(p.x, p.y, p.t)) < 1e-12);
        REQUIRE(std::abs(zy(p.x, p.y, p.t) - zy_want(p.x, p.y, p.t)) < 1e-12);
    }
}

TEST_CASE("planar two-form is closed on kernel pairs and detects detuning") {
    DiffOp2 L = xy_operator(ScalarField::constant(0.0));
    VecField psi = xy_wave(0.5, 0.7), phi = xy_adjoint_wave(0.4, 0.6);
    TwoForm w = two_form(L, phi, psi);
    for (P3 p : {P3{0.2, 0.3, 0.1}, P3{-0.5, 0.4, -0.2}}) {
        cx r = fd_t(w.W, p.x, p.y, p.t) + fd_x(w.ZX, p.x, p.y, p.t) + fd_y(w.ZY, p.x, p.y, p.t);
        REQUIRE(std::abs(r) < 1e-9);
    }
    VecField bad(std::vector<ScalarField>{expw(1.0, 0.5, 0.7, 0.5)});  // wrong t-rate
    TwoForm wb = two_form(L, phi, bad);
    cx rb = fd_t(wb.W, 0.2, 0.3, 0.1) + fd_x(wb.ZX, 0.2, 0.3, 0.1) + fd_y(wb.ZY, 0.2, 0.3, 0.1);
    REQUIRE(std::abs(rb) > 1e-2);
}

TEST_CASE("running kernel reproduces the closed-form potential") {
    double x0 = -30.0, kap = 0.7, om0 = 1.3;
    LaxPair P = kdv_seed_pair();
    Eigen::MatrixXcd O0(1, 1);
    O0(0, 0) = om0;
    TransmutationKernel ker = make_kernel(P, {kdv_wave(kap)}, {kdv_adjoint_wave(kap)}, O0, {x0, 0.0, 0.0});
    auto closed = [&](double x, double t) {
        return om0 + (std::exp(2 * kap * x - 8 * kap * kap * kap * t) - std::exp(2 * kap * x0)) / (2 * kap);
    };
    for (P3 p : {P3{0.8, 0.4, 0.2}, P3{-1.5, -0.6, -0.25}, P3{2.0, 0.0, 0.3}}) {
        cx got = ker.Omega.at(0, 0)(p.x, p.y, p.t);
        REQUIRE(std::abs(got - closed(p.x, p.t)) < 1e-11 * std::abs(closed(p.x, p.t)));
    }
    // derivative dispatch reads the form components verbatim
    P3 q{0.8, 0.4, 0.2};
    REQUIRE(ker.Omega.at(0, 0).dx()(q.x, q.y, q.t) == ker.Wf.at(0, 0)(q.x, q.y, q.t));
    REQUIRE(ker.Omega.at(0, 0).dy()(q.x, q.y, q.t) == ker.ZLf.at(0, 0)(q.x, q.y, q.t));
    REQUIRE(ker.Omega.at(0, 0).dt()(q.x, q.y, q.t) == ker.ZMf.at(0, 0)(q.x, q.y, q.t));
}

TEST_CASE("running kernel entries are path independent") {
    double x0 = -30.0;
    LaxPair P = kdv_seed_pair();
    std::vector<VecField> psis{kdv_wave(cx(0.9, 0.0)), kdv_wave(cx(0.55, 0.15))};
    std::vector<VecField> phis{kdv_adjoint_wave(0.8), kdv_adjoint_wave(0.5)};
    Eigen::MatrixXcd O0(2, 2);
    O0 << cx(1.0, 0.1), cx(0.2, 0.0), cx(-0.1, 0.05), cx(0.8, 0.0);
    P3 base{x0, 0.0, 0.0};
    TransmutationKernel ker = make_kernel(P, psis, phis, O0, base);

    P3 tgt{1.2, 0.6, 0.3};
    cx lams[2] = {cx(0.9, 0.0), cx(0.55, 0.15)};
    double nus[2] = {0.8, 0.5};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            OneForm w{ker.Wf.at(a, b), ker.ZLf.at(a, b), ker.ZMf.at(a, b)};
            cx got = ker.Omega.at(a, b)(tgt.x, tgt.y, tgt.t);

            // closed-form potential for pure exponential entries
            cx rate = lams[b] + nus[a];
            cx Wend = w.X(tgt.x, tgt.y, tgt.t), Wbase = w.X(base.x, base.y, base.t);
            cx want = O0(a, b) + (Wend - Wbase) / rate;
            REQUIRE(std::abs(got - want) < 1e-10 * std::max(1.0, std::abs(want)));

            // independent quadrature of the same canonical legs
            cx simp = simpson([&](double tt) { return w.T(base.x, base.y, tt); }, base.t, tgt.t, 64) +
                      simpson([&](double yy) { return w.Y(base.x, yy, tgt.t); }, base.y, tgt.y, 64) +
                      simpson([&](double xx) { return w.X(xx, tgt.y, tgt.t); }, base.x, tgt.x, 4096);
            REQUIRE(std::abs(got - (O0(a, b) + simp)) < 1e-8 * std::max(1.0, std::abs(got)));

            // a homotopic polyline through different interior corners
            Path3 alt({base, {base.x, tgt.y, base.t}, {tgt.x, tgt.y, base.t}, tgt});
            cx viaalt = O0(a, b) + line_integral(w, alt);
            REQUIRE(std::abs(got - viaalt) < 1e-9 * std::max(1.0, std::abs(got)));

            // straight diagonal chord
            Path3 chord({base, tgt});
            cx viachord = O0(a, b) + line_integral(w, chord);
            REQUIRE(std::abs(got - viachord) < 1e-9 * std::max(1.0, std::abs(got)));
        }
}

TEST_CASE("involuted kernel matches its rank-one closed form") {
    double x0 = -30.0, kap = 0.65, om0 = 0.9;
    Eigen::MatrixXcd O0(1, 1);
    O0(0, 0) = om0;
    TransmutationKernel ker =
        make_kernel(kdv_seed_pair(), {kdv_wave(kap)}, {kdv_adjoint_wave(kap)}, O0, {x0, 0.0, 0.0});
    MatField Ot = tilde_kernel(ker);
    for (P3 p : {P3{0.5, 0.2, 0.1}, P3{-1.0, -0.4, 0.2}}) {
        cx om = ker.Omega.at(0, 0)(p.x, p.y, p.t);
        REQUIRE(std::abs(Ot.at(0, 0)(p.x, p.y, p.t) + om0 * om0 / om) < 1e-11);
    }
}
