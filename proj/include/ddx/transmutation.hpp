//! Bilinear concomitants, the closed form components they induce on kernel
//! pairs, and the running transmutation kernel Ω obtained by integrating the
//! 1-form from a base point.
#pragma once

#include "geometry.hpp"
#include "operator.hpp"

namespace ddx {

/// Bilinear concomitant Z_L(φ,ψ): the unique-up-to-constant density with
///   ⟨φ, Lψ⟩ - ⟨L*φ, ψ⟩ = d/dx Z_L,
/// Z_L = Σ_{i=1}^{n} Σ_{k=0}^{i-1} (-1)^k [d^k(a_i†φ)]† d^{i-1-k}ψ.
inline ScalarField concomitant(const DiffOp& L, const VecField& phi, const VecField& psi) {
    std::vector<ScalarField> terms;
    std::vector<cx> signs;
    for (int i = 1; i <= L.order(); ++i) {
        VecField ai_phi = mat_apply(mat_adj(L.coeff(i)), phi);
        for (int k = 0; k <= i - 1; ++k) {
            terms.push_back(conj_dot(ai_phi.deriv(k, 0, 0), psi.deriv(i - 1 - k, 0, 0)));
            signs.push_back((k % 2) ? -1.0 : 1.0);
        }
    }
    if (terms.empty()) return ScalarField::constant(0.0);
    return lin_comb(signs, terms);
}

/// Pointwise defect of the Lagrange identity; zero up to rounding for exact
/// derivative backends, and up to the scheme order for lambda-backed fields.
inline ScalarField lagrange_defect(const DiffOp& L, const VecField& phi, const VecField& psi) {
    ScalarField lhs = conj_dot(phi, L.apply(psi)) - conj_dot(L.adjoint().apply(phi), psi);
    return lhs - concomitant(L, phi, psi).dx();
}

/// 1-form components W dx + Z_L dy + Z_M dt attached to (L, M) and a field
/// pair; closed whenever ψ solves (D_y - L)ψ = (D_t - M)ψ = 0 and φ solves
/// the adjoint flows (D_y + L*)φ = (D_t + M*)φ = 0.
inline OneForm one_form(const LaxPair& P, const VecField& phi, const VecField& psi) {
    return {conj_dot(phi, psi), concomitant(P.L, phi, psi), concomitant(P.M, phi, psi)};
}

/// Divergence form of the Lagrange identity for the y-flow D_y - L: the field
///   d_y(φ†ψ) - d_x Z_L - ⟨φ, (D_y - L)ψ⟩ + ⟨(-D_y - L*)φ, ψ⟩
/// vanishes identically for any smooth φ, ψ.
inline ScalarField divergence_defect(const DiffOp& L, int axis, const VecField& phi, const VecField& psi) {
    if (axis != 1 && axis != 2) throw ContractViolation("divergence_defect: axis must be y or t");
    int ky = axis == 1 ? 1 : 0, kt = axis == 2 ? 1 : 0;
    ScalarField W = conj_dot(phi, psi);
    ScalarField flow = conj_dot(phi, psi.deriv(0, ky, kt)) - conj_dot(phi, L.apply(psi));
    ScalarField aflow = cx(-1) * conj_dot(phi.deriv(0, ky, kt), psi) - conj_dot(L.adjoint().apply(phi), psi);
    return W.deriv(0, ky, kt) - concomitant(L, phi, psi).dx() - flow + aflow;
}

/// Flow defects for membership checks: (D_y - L)ψ and (D_t - M)ψ.
inline VecField flow_defect(const DiffOp& L, int axis, const VecField& psi) {
    int ky = axis == 1 ? 1 : 0, kt = axis == 2 ? 1 : 0;
    return psi.deriv(0, ky, kt) + cx(-1) * L.apply(psi);
}
/// Adjoint flow defects: (D_y + L*)φ and (D_t + M*)φ.
inline VecField adjoint_flow_defect(const DiffOp& L, int axis, const VecField& phi) {
    int ky = axis == 1 ? 1 : 0, kt = axis == 2 ? 1 : 0;
    return phi.deriv(0, ky, kt) + L.adjoint().apply(phi);
}

// ---- two-spatial-dimension variant ----------------------------------------

/// Split concomitants (Z^x, Z^y) with ⟨φ,Lψ⟩ - ⟨L*φ,ψ⟩ = d_x Z^x + d_y Z^y,
/// x-first ordering:
///   Z^x = Σ_{ij, i>=1} Σ_{k<i} (-1)^k [d_x^k(a_ij†φ)]† d_x^{i-1-k} d_y^j ψ
///   Z^y = Σ_{ij, j>=1} (-1)^i Σ_{k<j} (-1)^k [d_y^k d_x^i(a_ij†φ)]† d_y^{j-1-k} ψ.
inline std::pair<ScalarField, ScalarField> split_concomitant(const DiffOp2& L, const VecField& phi,
                                                             const VecField& psi) {
    std::vector<ScalarField> tx, ty;
    std::vector<cx> sx, sy;
    for (const auto& [ij, c] : L.coeffs()) {
        int i = ij.first, j = ij.second;
        VecField A = mat_apply(mat_adj(c), phi);
        for (int k = 0; k <= i - 1; ++k) {
            tx.push_back(conj_dot(A.deriv(k, 0, 0), psi.deriv(i - 1 - k, j, 0)));
            sx.push_back((k % 2) ? -1.0 : 1.0);
        }
        double si = (i % 2) ? -1.0 : 1.0;
        for (int k = 0; k <= j - 1; ++k) {
            ty.push_back(conj_dot(A.deriv(i, k, 0), psi.deriv(0, j - 1 - k, 0)));
            sy.push_back(si * ((k % 2) ? -1.0 : 1.0));
        }
    }
    ScalarField zx = tx.empty() ? ScalarField::constant(0.0) : lin_comb(sx, tx);
    ScalarField zy = ty.empty() ? ScalarField::constant(0.0) : lin_comb(sy, ty);
    return {zx, zy};
}

inline ScalarField lagrange_defect2(const DiffOp2& L, const VecField& phi, const VecField& psi) {
    auto [zx, zy] = split_concomitant(L, phi, psi);
    ScalarField lhs = conj_dot(phi, L.apply(psi)) - conj_dot(L.adjoint().apply(phi), psi);
    return lhs - zx.dx() - zy.dy();
}

/// 2-form components W dx∧dy + ZX dy∧dt + ZY dt∧dx for the flow D_t - L;
/// closed (d_t W + d_x ZX + d_y ZY = 0) on kernel pairs.
inline TwoForm two_form(const DiffOp2& L, const VecField& phi, const VecField& psi) {
    auto [zx, zy] = split_concomitant(L, phi, psi);
    return {conj_dot(phi, psi), cx(-1) * zx, cx(-1) * zy};
}

inline VecField flow_defect2(const DiffOp2& L, const VecField& psi) {
    return psi.deriv(0, 0, 1) + cx(-1) * L.apply(psi);
}
inline VecField adjoint_flow_defect2(const DiffOp2& L, const VecField& phi) {
    return phi.deriv(0, 0, 1) + L.adjoint().apply(phi);
}

// ---- running kernel --------------------------------------------------------

namespace detail {

/// Entry of the running kernel: value is ω0 plus the 1-form integrated along
/// the canonical path (t-leg, then y-leg, then x-leg); derivatives are read
/// off the form components through closedness instead of differentiating the
/// quadrature.
struct RunningEntryImpl final : FieldImpl {
    ScalarField W, ZL, ZM;
    ScalarField xleg, yleg, tleg;
    cx w0;
    P3 base;

    cx eval(double x, double y, double t, int kx, int ky, int kt) const override {
        if (kx > 0) return W(x, y, t, kx - 1, ky, kt);
        if (ky > 0) return ZL(x, y, t, 0, ky - 1, kt);
        if (kt > 0) return ZM(x, y, t, 0, 0, kt - 1);
        return w0 + tleg(base.x, base.y, t) + yleg(base.x, y, t) + xleg(x, y, t);
    }
};

}  // namespace detail

/// Transmutation kernel: K×K matrix Ω(x,y,t) with Ω(base) = Ω0 and
/// dΩ_ab = (1-form of φ_a, ψ_b), together with the generating families.
struct TransmutationKernel {
    LaxPair pair;
    std::vector<VecField> psi, phi;
    std::vector<std::string> psi_labels, phi_labels;
    Eigen::MatrixXcd Omega0;
    P3 base;     // (x anchor, y base, t base)
    double cell = 0.25;

    MatField Omega;       // running kernel entries
    MatField Wf, ZLf, ZMf;  // per-entry form components (a = φ-row, b = ψ-col)

    int K() const { return int(psi.size()); }
};

inline TransmutationKernel make_kernel(const LaxPair& pair, std::vector<VecField> psis, std::vector<VecField> phis,
                                       const Eigen::MatrixXcd& Omega0, P3 base, double cell = 0.25,
                                       std::vector<std::string> psi_labels = {},
                                       std::vector<std::string> phi_labels = {}) {
    if (psis.empty() || psis.size() != phis.size()) throw ContractViolation("make_kernel: need matching nonempty families");
    int K = int(psis.size());
    if (Omega0.rows() != K || Omega0.cols() != K) throw ContractViolation("make_kernel: Omega0 shape mismatch");
    TransmutationKernel ker;
    ker.pair = pair;
    ker.psi = std::move(psis);
    ker.phi = std::move(phis);
    ker.Omega0 = Omega0;
    ker.base = base;
    ker.cell = cell;
    ker.psi_labels = psi_labels.empty() ? std::vector<std::string>(std::size_t(K), "psi") : std::move(psi_labels);
    ker.phi_labels = phi_labels.empty() ? std::vector<std::string>(std::size_t(K), "phi") : std::move(phi_labels);
    ker.Omega = MatField(K, K);
    ker.Wf = MatField(K, K);
    ker.ZLf = MatField(K, K);
    ker.ZMf = MatField(K, K);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) {
            OneForm w = one_form(pair, ker.phi[std::size_t(a)], ker.psi[std::size_t(b)]);
            auto e = std::make_shared<detail::RunningEntryImpl>();
            e->W = w.X;
            e->ZL = w.Y;
            e->ZM = w.T;
            e->w0 = Omega0(a, b);
            e->base = base;
            e->xleg = ScalarField::cumulative(0, w.X, base.x, cell);
            e->yleg = ScalarField::cumulative(1, ScalarField::pinned(0, base.x, w.Y), base.y, cell);
            e->tleg = ScalarField::cumulative(
                2, ScalarField::pinned(1, base.y, ScalarField::pinned(0, base.x, w.T)), base.t, cell);
            ker.Omega.at(a, b) = ScalarField(std::move(e));
            ker.Wf.at(a, b) = w.X;
            ker.ZLf.at(a, b) = w.Y;
            ker.ZMf.at(a, b) = w.T;
        }
    return ker;
}

inline std::vector<std::string> kernel_labels(const TransmutationKernel& k) {
    std::vector<std::string> out = k.phi_labels;
    out.insert(out.end(), k.psi_labels.begin(), k.psi_labels.end());
    return out;
}

/// Constant matrix as a field.
inline MatField const_mat(const Eigen::MatrixXcd& C) {
    MatField R(int(C.rows()), int(C.cols()));
    for (int i = 0; i < C.rows(); ++i)
        for (int j = 0; j < C.cols(); ++j) R.at(i, j) = ScalarField::constant(C(i, j));
    return R;
}

/// Involuted kernel  Ω~ = -Ω0 Ω^{-1} Ω0  (with seed constant -Ω0): applying it
/// twice restores Ω, and dΩ~ = Ω0 Ω^{-1} dΩ Ω^{-1} Ω0.
inline MatField tilde_kernel(const TransmutationKernel& k, double cond_ceiling = 1e12) {
    MatField B = mat_inverse_times(k.Omega, k.Omega0, cond_ceiling, kernel_labels(k));
    return mat_mul(const_mat(-k.Omega0), B);
}

}  // namespace ddx
