//! Concrete operator families: the KdV heat-flow pair with its zero-seed
//! waves, a two-spatial-dimension instance, soliton oracles (Wronskian and
//! Hirota routes) and the iterated one-point dressing chain.
#pragma once

#include "dressing.hpp"

namespace ddx {

/// L = d² + u,  M = -4 d³ - 6 u d - 3 u_x. The flows f_y = L f, f_t = M f are
/// compatible exactly when u_t + 6 u u_x + u_xxx = 0 (with u_y = 0).
inline LaxPair kdv_pair(const ScalarField& u) {
    DiffOp L(1, 2);
    L.coeff(2).at(0, 0) = ScalarField::constant(1.0);
    L.coeff(0).at(0, 0) = u;
    DiffOp M(1, 3);
    M.coeff(3).at(0, 0) = ScalarField::constant(-4.0);
    M.coeff(1).at(0, 0) = cx(-6.0) * u;
    M.coeff(0).at(0, 0) = cx(-3.0) * u.dx();
    return {L, M};
}

inline LaxPair kdv_seed_pair() { return kdv_pair(ScalarField::constant(0.0)); }

/// Zero-seed wave e^{λx + λ²y - 4λ³t}: solves f_y = f_xx, f_t = -4 f_xxx.
inline VecField kdv_wave(cx lam) {
    return VecField({ScalarField::analytic(AnalyticScalar::exp_linear(1.0, lam, lam * lam, -4.0 * lam * lam * lam))});
}

/// Zero-seed adjoint wave e^{νx - ν²y - 4ν³t}: solves f_y = -f_xx, f_t = 4 f_xxx.
inline VecField kdv_adjoint_wave(cx nu) {
    return VecField({ScalarField::analytic(AnalyticScalar::exp_linear(1.0, nu, -nu * nu, -4.0 * nu * nu * nu))});
}

/// u_t + 6 u u_x + u_xxx as a field.
inline ScalarField kdv_residual(const ScalarField& u) {
    return u.dt() + cx(6.0) * (u * u.dx()) + u.dx(3);
}

// ---- two-spatial-dimension instance -----------------------------------------

/// L2 = d_x d_y + u for the flow f_t = L2 f.
inline DiffOp2 xy_operator(const ScalarField& u) {
    DiffOp2 L(1);
    L.set_coeff(1, 1, MatField::identity(1));
    MatField U(1, 1);
    U.at(0, 0) = u;
    L.set_coeff(0, 0, U);
    return L;
}

/// Zero-seed wave e^{αx + βy + αβt} of the xy flow.
inline VecField xy_wave(cx alpha, cx beta) {
    return VecField({ScalarField::analytic(AnalyticScalar::exp_linear(1.0, alpha, beta, alpha * beta))});
}

/// Zero-seed adjoint wave e^{-ax - by - abt}.
inline VecField xy_adjoint_wave(cx a, cx b) {
    return VecField({ScalarField::analytic(AnalyticScalar::exp_linear(1.0, -a, -b, -a * b))});
}

// ---- soliton oracles ----------------------------------------------------------

namespace detail {

inline AnalyticScalar hyperbolic(double kappa, double delta, double sign_second) {
    // cosh/sinh(kappa x - 4 kappa^3 t + delta), sign_second = +1/-1
    double ed = std::exp(delta);
    return AnalyticScalar::exp_linear(0.5 * ed, kappa, 0.0, -4.0 * kappa * kappa * kappa) +
           AnalyticScalar::exp_linear(sign_second * 0.5 / ed, -kappa, 0.0, 4.0 * kappa * kappa * kappa);
}

}  // namespace detail

/// Wronskian-route N-soliton potential u = 2 (ln W(f_1..f_N))_xx with
/// f_j = cosh/sinh(κ_j x - 4κ_j³ t + δ_j) alternating, κ strictly ascending,
/// δ_j = -κ_j x_j + ½ Σ_{i≠j} ln|(κ_j-κ_i)/(κ_j+κ_i)|.
inline ScalarField soliton_oracle_wronskian(const std::vector<double>& kappa, const std::vector<double>& shift) {
    int N = int(kappa.size());
    if (N < 1 || shift.size() != kappa.size()) throw ContractViolation("soliton oracle: bad parameters");
    for (int j = 1; j < N; ++j)
        if (!(kappa[std::size_t(j)] > kappa[std::size_t(j - 1)]))
            throw ContractViolation("soliton oracle: kappas must be strictly ascending");
    MatField Wm(N, N);
    for (int j = 0; j < N; ++j) {
        double delta = -kappa[std::size_t(j)] * shift[std::size_t(j)];
        for (int i = 0; i < N; ++i)
            if (i != j)
                delta += 0.5 * std::log(std::abs((kappa[std::size_t(j)] - kappa[std::size_t(i)]) /
                                                 (kappa[std::size_t(j)] + kappa[std::size_t(i)])));
        ScalarField fj = ScalarField::analytic(detail::hyperbolic(kappa[std::size_t(j)], delta, (j % 2) ? -1.0 : 1.0));
        for (int i = 0; i < N; ++i) Wm.at(i, j) = fj.dx(i);
    }
    return cx(2.0) * log_deriv2_x(det_field(Wm));
}

/// Hirota-route N-soliton potential u = 2 (ln τ)_xx,
/// τ = Σ_{S⊆{1..N}} Π_{j∈S} e^{2η_j} Π_{i<j∈S} A_ij,
/// η_j = κ_j(x - 4κ_j²t - x_j), A_ij = ((κ_i-κ_j)/(κ_i+κ_j))².
inline ScalarField soliton_oracle_hirota(const std::vector<double>& kappa, const std::vector<double>& shift) {
    int N = int(kappa.size());
    if (N < 1 || N > 20 || shift.size() != kappa.size()) throw ContractViolation("soliton oracle: bad parameters");
    AnalyticScalar tau;
    for (unsigned S = 0; S < (1u << N); ++S) {
        double amp = 1.0;
        cx ax = 0.0, at = 0.0;
        for (int j = 0; j < N; ++j) {
            if (!(S & (1u << j))) continue;
            double k = kappa[std::size_t(j)];
            amp *= std::exp(-2.0 * k * shift[std::size_t(j)]);
            ax += 2.0 * k;
            at += -8.0 * k * k * k;
            for (int i = 0; i < j; ++i)
                if (S & (1u << i)) {
                    double r = (kappa[std::size_t(i)] - kappa[std::size_t(j)]) / (kappa[std::size_t(i)] + kappa[std::size_t(j)]);
                    amp *= r * r;
                }
        }
        tau += AnalyticScalar::exp_linear(amp, ax, 0.0, at);
    }
    return cx(2.0) * log_deriv2_x(ScalarField::analytic(tau));
}

// ---- iterated one-point dressing chain ----------------------------------------

struct ChainStage {
    TransmutationKernel ker;
    Dressing dr;
    ScalarField u;  // potential after this stage
};

struct SolitonChain {
    std::vector<ChainStage> stages;
    ScalarField u;  // final potential
    LaxPair pair;   // final operator pair
};

/// N-fold dressing of the zero seed by one-point kernels with parameters κ_j
/// and seed constants ω_j = e^{2κ_j x_j} / (2κ_j): each stage builds a running
/// kernel from the previous stage's waves, updates the potential by the
/// logarithmic formula and pushes the remaining waves through the stage's
/// dressing operator.
inline SolitonChain kdv_chain(const std::vector<double>& kappa, const std::vector<double>& shift, double x_anchor,
                              double cell = 0.25, double cond_ceiling = 1e12) {
    int N = int(kappa.size());
    if (N < 1 || shift.size() != kappa.size()) throw ContractViolation("kdv_chain: bad parameters");
    SolitonChain ch;
    ScalarField u = ScalarField::constant(0.0);
    LaxPair pair = kdv_pair(u);
    std::vector<VecField> psis, phis;
    for (int j = 0; j < N; ++j) {
        psis.push_back(kdv_wave(kappa[std::size_t(j)]));
        phis.push_back(kdv_adjoint_wave(kappa[std::size_t(j)]));
    }
    P3 base{x_anchor, 0.0, 0.0};
    for (int j = 0; j < N; ++j) {
        double k = kappa[std::size_t(j)];
        Eigen::MatrixXcd O0(1, 1);
        O0(0, 0) = std::exp(2.0 * k * shift[std::size_t(j)]) / (2.0 * k);
        char lab[64];
        std::snprintf(lab, sizeof lab, "kappa=%.6g", k);
        TransmutationKernel ker = make_kernel(pair, {psis[std::size_t(j)]}, {phis[std::size_t(j)]}, O0, base, cell,
                                              {lab}, {lab});
        Dressing dr = make_dressing(ker, cond_ceiling);
        u = updated_potential(u, ker);
        pair = kdv_pair(u);
        for (int m = j + 1; m < N; ++m) {
            psis[std::size_t(m)] = dr.Op.apply(psis[std::size_t(m)]);
            phis[std::size_t(m)] = dr.OpStar.apply(phis[std::size_t(m)]);
        }
        ch.stages.push_back({std::move(ker), std::move(dr), u});
    }
    ch.u = u;
    ch.pair = pair;
    return ch;
}

}  // namespace ddx
