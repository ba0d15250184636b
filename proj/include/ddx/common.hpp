//! Shared scalar types, tolerances, error taxonomy and small numeric utilities.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ddx {

using cx = std::complex<double>;

/// Pinned tolerance family. `sing` is the condition-number ceiling above which
/// a kernel matrix is treated as singular.
struct Tolerances {
    double alg = 1e-10;    // algebraic-identity residuals
    double zero = 1e-12;   // numerically-zero side conditions
    double decay = 1e-10;  // relative left-edge decay for Volterra tail fields
    double sing = 1e12;    // condition-number ceiling
};

/// Violated precondition or schema invariant (caller bug).
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

/// Data-dependent failure (non-convergence, decay violation, bad input file).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Kernel matrix numerically singular; carries the offending labels.
struct SingularKernel : std::runtime_error {
    std::vector<std::string> labels;
    SingularKernel(const std::string& msg, std::vector<std::string> who)
        : std::runtime_error(msg), labels(std::move(who)) {}
};

inline double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 0; i < k; ++i) r = r * double(n - i) / double(i + 1);
    return r;
}

/// Deterministic pairwise (fixed-tree) reduction; the summation order depends
/// only on the element count, never on thread scheduling.
template <class T>
T pairwise_sum(const std::vector<T>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return v[lo];
    std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

template <class T>
T pairwise_sum(const std::vector<T>& v, T zero) {
    if (v.empty()) return zero;
    return pairwise_sum(v, 0, v.size());
}

inline double pairwise_sum(const std::vector<double>& v) { return v.empty() ? 0.0 : pairwise_sum(v, 0, v.size()); }
inline cx pairwise_sum(const std::vector<cx>& v) { return v.empty() ? cx(0) : pairwise_sum(v, 0, v.size()); }

/// Chunked parallel map over [0, n). Each index writes only its own slots, so
/// results are identical for any thread count.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t nt = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::exception_ptr err;
    std::mutex err_mx;
    for (std::size_t t = 0; t < nt; ++t) {
        std::size_t lo = n * t / nt, hi = n * (t + 1) / nt;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(err_mx);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

/// Seeded generator with platform-independent uniform draws (distribution
/// classes vary across standard libraries; this does not).
struct Rng {
    std::mt19937_64 g;
    explicit Rng(std::uint64_t seed) : g(seed) {}
    double uniform() { return double(g() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    int index(int n) { return int(g() % std::uint64_t(n)); }
    cx complex_in(double a, double b) { return {uniform(a, b), uniform(a, b)}; }
};

// -------------------------------------------------------------------------
// Finite differences: Fornberg weights for the k-th derivative on an
// arbitrary stencil, plus a centered helper with one Richardson step.
// -------------------------------------------------------------------------

/// Weights w_i with f^(k)(x0) ≈ Σ w_i f(x_i), exact for polynomials up to
/// degree |stencil|-1 (Fornberg recursion).
inline std::vector<double> fd_weights(double x0, const std::vector<double>& xs, int k) {
    int n = int(xs.size());
    std::vector<std::vector<double>> c(n, std::vector<double>(k + 1, 0.0));
    double c1 = 1.0;
    double c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, k);
        double c2 = 1.0;
        double c5 = c4;
        c4 = xs[i] - x0;
        for (int j = 0; j < i; ++j) {
            double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int s = mn; s >= 1; --s)
                    c[i][s] = c1 * (s * c[i - 1][s - 1] - c5 * c[i - 1][s]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int s = mn; s >= 1; --s)
                c[j][s] = (c4 * c[j][s] - s * c[j][s - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][k];
    return w;
}

/// Centered FD of order 8 in step h for derivative k (k ≤ 4), one Richardson
/// step on top (h and h/2). This is the artifact-wide fallback convention.
inline cx fd_derivative(const std::function<cx(double)>& f, double x, int k, double h) {
    if (k == 0) return f(x);
    int m = (k <= 2) ? 4 : 5;  // 9- or 11-point centered stencil
    auto eval = [&](double step) {
        std::vector<double> xs(2 * m + 1);
        for (int i = -m; i <= m; ++i) xs[i + m] = x + i * step;
        auto w = fd_weights(x, xs, k);
        std::vector<cx> terms(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) terms[i] = w[i] * f(xs[i]);
        return pairwise_sum(terms);
    };
    cx d1 = eval(h), d2 = eval(h / 2);
    int q = 2 * m + 1 - k;  // centered-stencil order (parity bump below)
    if (q % 2) q += 1;
    double p = std::pow(2.0, q);
    return (p * d2 - d1) / (p - 1.0);
}

// -------------------------------------------------------------------------
// Gauss-Legendre rule on [-1, 1] (8 nodes) used per cell everywhere.
// -------------------------------------------------------------------------

struct GaussRule {
    std::vector<double> x, w;
};

inline const GaussRule& gauss8() {
    static const GaussRule r{
        {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
         0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363},
        {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
         0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763}};
    return r;
}

/// ∫_a^b f, single Gauss-Legendre panel.
template <class F>
auto gauss_panel(const F& f, double a, double b) -> decltype(f(0.0)) {
    const auto& r = gauss8();
    double c = 0.5 * (a + b), s = 0.5 * (b - a);
    std::vector<decltype(f(0.0))> terms(r.x.size());
    for (std::size_t i = 0; i < r.x.size(); ++i) terms[i] = (s * r.w[i]) * f(c + s * r.x[i]);
    return pairwise_sum(terms, 0, terms.size());
}

/// One pass/fail record; suites aggregate these into reports.
struct CheckResult {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

inline CheckResult check_leq(const std::string& name, double residual, double tol, const std::string& note = "") {
    return {name, residual, tol, std::isfinite(residual) && residual <= tol, note};
}

inline CheckResult check_geq(const std::string& name, double value, double floor_, const std::string& note = "") {
    return {name, value, floor_, std::isfinite(value) && value >= floor_, note};
}

}  // namespace ddx
