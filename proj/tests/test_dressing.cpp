#include <catch2/catch_amalgamated.hpp>

#include "ddx/instances.hpp"

using namespace ddx;

namespace {

constexpr double X0 = -40.0;

TransmutationKernel one_point_kernel(double kap, double om0_shift = 0.0) {
    Eigen::MatrixXcd O0(1, 1);
    O0(0, 0) = std::exp(2.0 * kap * om0_shift) / (2.0 * kap);
    return make_kernel(kdv_seed_pair(), {kdv_wave(kap)}, {kdv_adjoint_wave(kap)}, O0, {X0, 0.0, 0.0});
}

TransmutationKernel two_point_kernel() {
    std::vector<VecField> psis{kdv_wave(0.9), kdv_wave(cx(0.55, 0.1))};
    std::vector<VecField> phis{kdv_adjoint_wave(0.8), kdv_adjoint_wave(0.5)};
    Eigen::MatrixXcd O0(2, 2);
    O0 << cx(1.2, 0.0), cx(0.3, 0.1), cx(-0.2, 0.0), cx(0.9, 0.0);
    return make_kernel(kdv_seed_pair(), psis, phis, O0, {X0, 0.0, 0.0});
}

ScalarField expw(cx c, cx ax, cx ay, cx at) {
    return ScalarField::analytic(AnalyticScalar::exp_linear(c, ax, ay, at));
}

cx rel_err(cx got, cx want) { return (got - want) / std::max(1.0, std::abs(want)); }

}  // namespace

TEST_CASE("tilde families follow the kernel quotient maps") {
    double kap = 0.7;
    Dressing d = make_dressing(one_point_kernel(kap));
    for (P3 p : {P3{0.5, 0.2, 0.1}, P3{-1.2, -0.3, 0.0}}) {
        cx om = d.ker.Omega.at(0, 0)(p.x, p.y, p.t);
        cx om0 = d.ker.Omega0(0, 0);
        cx psi = d.ker.psi[0][0](p.x, p.y, p.t);
        cx phi = d.ker.phi[0][0](p.x, p.y, p.t);
        REQUIRE(std::abs(d.psi_t[0][0](p.x, p.y, p.t) - psi * om0 / om) < 1e-11);
        REQUIRE(std::abs(d.phi_t[0][0](p.x, p.y, p.t) - phi * std::conj(om0) / std::conj(om)) < 1e-11);
    }
}

TEST_CASE("dressing operator maps kernel waves to their tilde partners") {
    Dressing d = make_dressing(two_point_kernel());
    for (int m = 0; m < 2; ++m) {
        VecField mapped = d.Op.apply(d.ker.psi[std::size_t(m)]);
        VecField smapped = d.OpStar.apply(d.ker.phi[std::size_t(m)]);
        for (P3 p : {P3{0.6, 0.3, 0.1}, P3{-0.8, -0.2, 0.2}}) {
            cx a = mapped[0](p.x, p.y, p.t), b = d.psi_t[std::size_t(m)][0](p.x, p.y, p.t);
            REQUIRE(std::abs(rel_err(a, b)) < 1e-10);
            cx c = smapped[0](p.x, p.y, p.t), e = d.phi_t[std::size_t(m)][0](p.x, p.y, p.t);
            REQUIRE(std::abs(rel_err(c, e)) < 1e-10);
        }
    }
}

TEST_CASE("volterra dressing reproduces the classical first-order transform") {
    double kap = 0.7;
    cx lam = 0.45;
    Dressing d = make_dressing(one_point_kernel(kap));
    VecField dressed = d.Op.apply(kdv_wave(lam));
    for (P3 p : {P3{0.8, 0.3, 0.1}, P3{-1.5, -0.4, -0.2}, P3{2.2, 0.0, 0.25}}) {
        double xi = kap * p.x - 4.0 * kap * kap * kap * p.t;
        cx psil = kdv_wave(lam)[0](p.x, p.y, p.t);
        cx want = psil * (lam - kap * std::tanh(xi)) / (kap + lam);
        REQUIRE(std::abs(rel_err(dressed[0](p.x, p.y, p.t), want)) < 1e-10);
    }
}

TEST_CASE("dressing operator composes with its inverse to the identity") {
    Dressing d = make_dressing(one_point_kernel(0.65));
    VecField f(std::vector<ScalarField>{expw(1.0, 0.35, 0.2, -0.1) + expw(0.4, 0.5, 0.0, 0.1)});
    ExtOp both = d.OpInv * d.Op;
    ExtOp other = d.Op * d.OpInv;
    VecField composed = both.apply(f);
    VecField sequential = d.OpInv.apply(d.Op.apply(f));
    VecField reversed = other.apply(f);
    for (P3 p : {P3{0.7, 0.25, 0.1}, P3{-1.0, -0.3, 0.2}}) {
        cx val = f[0](p.x, p.y, p.t);
        REQUIRE(std::abs(rel_err(composed[0](p.x, p.y, p.t), val)) < 1e-9);
        REQUIRE(std::abs(rel_err(sequential[0](p.x, p.y, p.t), val)) < 1e-9);
        REQUIRE(std::abs(rel_err(reversed[0](p.x, p.y, p.t), val)) < 1e-9);
    }
    VecField star_seq = d.OpStarInv.apply(d.OpStar.apply(f));
    for (P3 p : {P3{0.7, 0.25, 0.1}})
        REQUIRE(std::abs(rel_err(star_seq[0](p.x, p.y, p.t), f[0](p.x, p.y, p.t))) < 1e-9);
}

TEST_CASE("star of the inverse equals the adjoint-family operator") {
    Dressing d = make_dressing(one_point_kernel(0.7));
    ExtOp starred = d.OpInv.star();
    VecField f(std::vector<ScalarField>{expw(1.0, 0.3, -0.1, 0.2)});
    VecField a = starred.apply(f), b = d.OpStar.apply(f);
    for (P3 p : {P3{0.5, 0.2, 0.0}, P3{-0.9, 0.1, 0.15}})
        REQUIRE(std::abs(rel_err(a[0](p.x, p.y, p.t), b[0](p.x, p.y, p.t))) < 1e-10);
}

TEST_CASE("both dressed-flow routes agree and annihilate dressed waves") {
    Dressing d = make_dressing(one_point_kernel(0.7));
    VecField f(std::vector<ScalarField>{expw(1.0, 0.4, 0.1, -0.2)});
    for (int axis : {1, 2}) {
        ExtOp r1 = dressed_flow_conjugation(d, axis);
        ExtOp r2 = dressed_flow_commutator(d, axis);
        VecField a = r1.apply(f), b = r2.apply(f);
        for (P3 p : {P3{0.6, 0.2, 0.1}, P3{-1.1, -0.25, 0.0}}) {
            cx av = a[0](p.x, p.y, p.t), bv = b[0](p.x, p.y, p.t);
            REQUIRE(std::abs(av - bv) < 1e-8 * std::max(1.0, std::abs(av)));
        }
    }
    // a dressed non-kernel wave solves the dressed flow
    cx lam = 0.4;
    VecField dressed = d.Op.apply(kdv_wave(lam));
    ExtOp Lt = dressed_flow_conjugation(d, 1);
    VecField resid = dressed.deriv(0, 1, 0) + cx(-1) * Lt.apply(dressed);
    for (P3 p : {P3{0.5, 0.15, 0.1}})
        REQUIRE(std::abs(resid[0](p.x, p.y, p.t)) < 1e-8 * std::abs(dressed[0](p.x, p.y, p.t)));
}

TEST_CASE("dressed flows are differential: volterra tails cancel") {
    Dressing d = make_dressing(one_point_kernel(0.7));
    VecField f(std::vector<ScalarField>{expw(1.0, 0.45, 0.0, 0.1)});
    for (int axis : {1, 2}) {
        ExtOp r1 = dressed_flow_conjugation(d, axis);
        VecField tails = apply_tails(r1, f);
        for (P3 p : {P3{0.4, 0.2, 0.1}, P3{-0.8, -0.1, 0.2}})
            REQUIRE(std::abs(tails[0](p.x, p.y, p.t)) < 1e-8 * std::max(1.0, std::abs(f[0](p.x, p.y, p.t))));
    }
}

TEST_CASE("probe extraction recovers a known operator and its parameter derivatives") {
    ScalarField u = expw(cx(0.4, 0.1), 0.2, 0.3, -0.1);
    DiffOp D(2, 3);
    D.coeff(3) = MatField::identity(2);
    D.coeff(2).at(0, 1) = u;
    D.coeff(1).at(1, 0) = conj(u);
    D.coeff(1).at(1, 1) = expw(0.6, -0.15, 0.0, 0.2);
    D.coeff(0).at(0, 0) = u * u;
    DiffOp E = extracted_diffop([&](const VecField& v) { return D.apply(v); }, 2, 3);
    for (P3 p : {P3{0.4, 0.1, -0.2}, P3{-1.1, 0.3, 0.0}})
        for (int i = 0; i <= 3; ++i)
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) {
                    cx want = D.coeff(i).at(r, c)(p.x, p.y, p.t);
                    cx got = E.coeff(i).at(r, c)(p.x, p.y, p.t);
                    REQUIRE(std::abs(got - want) < 1e-9 * std::max(1.0, std::abs(want)));
                }
    // parameter derivatives of extracted coefficients go through value differencing
    cx dgot = E.coeff(2).at(0, 1).dy()(0.4, 0.1, -0.2);
    cx dwant = D.coeff(2).at(0, 1).dy()(0.4, 0.1, -0.2);
    REQUIRE(std::abs(dgot - dwant) < 1e-7);
}

TEST_CASE("extracted dressed flow has the transformed potential and preserved order") {
    double kap = 0.7;
    Dressing d = make_dressing(one_point_kernel(kap));
    ExtOp Lt = dressed_flow_conjugation(d, 1);
    DiffOp E = extracted_diffop(Lt, 3);
    ScalarField ut = updated_potential(ScalarField::constant(0.0), d.ker);
    for (P3 p : {P3{0.3, 0.2, 0.1}, P3{-0.9, 0.0, -0.1}}) {
        REQUIRE(std::abs(E.coeff(3).at(0, 0)(p.x, p.y, p.t)) < 1e-8);
        REQUIRE(std::abs(E.coeff(2).at(0, 0)(p.x, p.y, p.t) - 1.0) < 1e-8);
        REQUIRE(std::abs(E.coeff(1).at(0, 0)(p.x, p.y, p.t)) < 1e-8);
        cx want = ut(p.x, p.y, p.t);
        double xi = kap * p.x - 4 * kap * kap * kap * p.t;
        double sech = 1.0 / std::cosh(xi);
        REQUIRE(std::abs(want - 2 * kap * kap * sech * sech) < 1e-10);
        REQUIRE(std::abs(E.coeff(0).at(0, 0)(p.x, p.y, p.t) - want) < 1e-8);
    }
}

TEST_CASE("involuted kernel derivative follows the sandwich rule") {
    TransmutationKernel ker = two_point_kernel();
    MatField Ot = tilde_kernel(ker);
    MatField Oinv = mat_inverse_times(ker.Omega, Eigen::MatrixXcd::Identity(2, 2), 1e12, kernel_labels(ker));
    MatField rhs = mat_mul(const_mat(ker.Omega0), mat_mul(Oinv, mat_mul(ker.Wf, mat_mul(Oinv, const_mat(ker.Omega0)))));
    P3 p{0.5, 0.2, 0.1};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            cx fd = fd_derivative([&](double xx) { return Ot.at(a, b)(xx, p.y, p.t); }, p.x, 1, 0.05);
            cx want = rhs.at(a, b)(p.x, p.y, p.t);
            REQUIRE(std::abs(fd - want) < 1e-8 * std::max(1.0, std::abs(want)));
        }
    // applying the involution twice restores the kernel
    MatField back = mat_mul(const_mat(-ker.Omega0), mat_inverse_times(Ot, ker.Omega0, 1e12, kernel_labels(ker)));
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            cx got = back.at(a, b)(p.x, p.y, p.t);
            cx want = ker.Omega.at(a, b)(p.x, p.y, p.t);
            REQUIRE(std::abs(got - want) < 1e-10 * std::max(1.0, std::abs(want)));
        }
}

TEST_CASE("decay diagnostic separates admissible from inadmissible kernels") {
    Box box{Axis(9, -8.0, 8.0), Axis(9, -1.0, 1.0), Axis(9, -0.5, 0.5)};
    TransmutationKernel good = one_point_kernel(0.7);
    REQUIRE(decay_ratio(good, box) < 1e-10);
    // a wave pair whose product grows toward the anchor
    Eigen::MatrixXcd O0(1, 1);
    O0(0, 0) = 1.0;
    TransmutationKernel bad =
        make_kernel(kdv_seed_pair(), {kdv_wave(-0.7)}, {kdv_adjoint_wave(0.6)}, O0, {X0, 0.0, 0.0});
    REQUIRE(decay_ratio(bad, box) > 1e-2);
}
