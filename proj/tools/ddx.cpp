// Command-line front end: verification suites, kernel/dressing runs, soliton
// grids, flux comparisons and format conversion.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

#include <ddx/verify.hpp>

namespace fs = std::filesystem;
using namespace ddx;

namespace {

struct CommonOpts {
    std::string config_path, out_dir, suites_csv;
    std::uint64_t seed = 2026;
    int threads = 1;
    long n = -1;
    std::vector<std::string> tols;
    bool seed_set = false, threads_set = false, n_set = false;
};

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t nxt = s.find(',', pos);
        std::string item = s.substr(pos, nxt == std::string::npos ? std::string::npos : nxt - pos);
        std::size_t b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
        if (nxt == std::string::npos) break;
        pos = nxt + 1;
    }
    return out;
}

double parse_num(const std::string& s, const std::string& what) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw ConfigError(what + ": bad number '" + s + "'");
    return v;
}

VerifyOptions make_vopts(const CommonOpts& co, const Config& cfg) {
    VerifyOptions vo;
    vo.seed = std::uint64_t(cfg.get_double("verify", "seed", double(vo.seed)));
    vo.threads = int(cfg.get_int("verify", "threads", vo.threads));
    vo.soliton_n = cfg.get_int("verify", "n", vo.soliton_n);
    if (co.seed_set) vo.seed = co.seed;
    if (co.threads_set) vo.threads = co.threads;
    if (co.n_set) vo.soliton_n = co.n;
    if (vo.threads < 1) throw ConfigError("threads must be >= 1");
    auto it = cfg.sections.find("tol");
    if (it != cfg.sections.end())
        for (const auto& [k, v] : it->second) vo.tol[k] = parse_num(v, "tol." + k);
    for (const auto& s : co.tols) {
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--tol expects name=value, got '" + s + "'");
        vo.tol[s.substr(0, eq)] = parse_num(s.substr(eq + 1), "--tol " + s.substr(0, eq));
    }
    return vo;
}

void print_checks(const std::string& suite, const std::vector<CheckResult>& checks) {
    std::printf("[suite %s]\n", suite.c_str());
    for (const auto& c : checks) {
        std::printf("%s  %-34s residual=%.3e  tol=%.3e%s%s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.residual,
                    c.tolerance, c.note.empty() ? "" : "  # ", c.note.c_str());
    }
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + p.string());
    out.write(text.data(), std::streamsize(text.size()));
}

GridAxis axis_from(const Config& cfg, const std::string& sec, const std::string& key, GridAxis dflt) {
    std::vector<double> v = cfg.get_list(sec, key);
    if (v.empty()) return dflt;
    if (v.size() != 3) throw ConfigError("config " + sec + "." + key + ": expected lo, hi, count");
    if (v[2] < 1 || v[2] != std::floor(v[2])) throw ConfigError("config " + sec + "." + key + ": bad count");
    GridAxis a{std::uint64_t(v[2]), v[0], v[1]};
    if (a.count == 1 && a.lo != a.hi) throw ConfigError("config " + sec + "." + key + ": collapsed axis needs lo == hi");
    if (a.count > 1 && !(a.hi > a.lo)) throw ConfigError("config " + sec + "." + key + ": need hi > lo");
    return a;
}

// ---- verify --------------------------------------------------------------------

int cmd_verify(const CommonOpts& co) {
    Config cfg = co.config_path.empty() ? Config{} : Config::parse_file(co.config_path);
    VerifyOptions vo = make_vopts(co, cfg);

    std::vector<std::string> names;
    if (!co.suites_csv.empty())
        names = split_csv(co.suites_csv);
    else if (cfg.has("verify", "suites"))
        names = split_csv(cfg.get("verify", "suites", ""));
    else
        names = all_suites();
    std::vector<std::string> known = all_suites();
    for (const auto& n : names)
        if (std::find(known.begin(), known.end(), n) == known.end()) throw ConfigError("unknown suite: " + n);

    std::vector<SuiteResult> results;
    json rep = suites_report(names, vo, &results);

    int total = 0, passed = 0;
    for (const auto& s : results) {
        print_checks(s.name, s.checks);
        for (const auto& c : s.checks) {
            ++total;
            passed += c.pass ? 1 : 0;
        }
    }
    std::printf("verify: %d/%d checks passed\n", passed, total);

    if (!co.out_dir.empty()) {
        fs::create_directories(co.out_dir);
        write_text(fs::path(co.out_dir) / "verify.json", render_json(rep));
        for (const auto& s : results) {
            json one{{"checks", checks_json(s.checks)}, {"name", s.name}, {"passed", s.passed}, {"seed", vo.seed}};
            write_text(fs::path(co.out_dir) / ("verify-" + s.name + ".json"), render_json(one));
        }
    }
    return rep["passed"].get<bool>() ? 0 : 1;
}

// ---- kernel --------------------------------------------------------------------

std::vector<cx> complex_list(const Config& cfg, const std::string& sec, const std::string& re_key) {
    std::vector<double> re = cfg.get_list(sec, re_key), im = cfg.get_list(sec, re_key + "_im");
    if (!im.empty() && im.size() != re.size()) throw ConfigError("config " + sec + "." + re_key + "_im: length mismatch");
    std::vector<cx> out;
    for (std::size_t i = 0; i < re.size(); ++i) out.emplace_back(re[i], im.empty() ? 0.0 : im[i]);
    return out;
}

Eigen::MatrixXcd seed_matrix(const Config& cfg, const std::string& sec, int K) {
    std::vector<double> re = cfg.get_list(sec, "omega0"), im = cfg.get_list(sec, "omega0_im");
    if (int(re.size()) != K * K) throw ConfigError("config " + sec + ".omega0: expected " + std::to_string(K * K) + " entries");
    if (!im.empty() && im.size() != re.size()) throw ConfigError("config " + sec + ".omega0_im: length mismatch");
    Eigen::MatrixXcd M(K, K);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) {
            std::size_t i = std::size_t(a * K + b);
            M(a, b) = cx(re[i], im.empty() ? 0.0 : im[i]);
        }
    return M;
}

double condition_of(const Eigen::MatrixXcd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    double smin = svd.singularValues().minCoeff();
    return smin > 0 ? svd.singularValues().maxCoeff() / smin : std::numeric_limits<double>::infinity();
}

std::string fmt_label(const char* stem, cx v) {
    char buf[64];
    if (v.imag() == 0)
        std::snprintf(buf, sizeof buf, "%s=%.6g", stem, v.real());
    else
        std::snprintf(buf, sizeof buf, "%s=%.6g%+.6gi", stem, v.real(), v.imag());
    return buf;
}

void write_kernel_grids(const CommonOpts& co, const std::vector<GridData>& grids, const json& meta) {
    if (co.out_dir.empty()) return;
    fs::create_directories(co.out_dir);
    write_csv((fs::path(co.out_dir) / "kernel.csv").string(), grids);
    for (const auto& g : grids) write_ddxg((fs::path(co.out_dir) / ("kernel-" + g.component + ".ddxg")).string(), g);
    write_text(fs::path(co.out_dir) / "kernel.json", render_json(meta));
}

int cmd_kernel(const CommonOpts& co) {
    if (co.config_path.empty()) throw ConfigError("kernel: --config is required");
    Config cfg = Config::parse_file(co.config_path);
    VerifyOptions vo = make_vopts(co, cfg);
    std::string mode = cfg.get("kernel", "mode", "1d");
    double cell = cfg.get_double("kernel", "cell", 0.25);
    std::vector<double> bl = cfg.get_list("kernel", "base");
    if (bl.size() != 3) throw ConfigError("config kernel.base: expected x, y, t");
    P3 base{bl[0], bl[1], bl[2]};

    if (mode == "1d") {
        std::vector<cx> lams = complex_list(cfg, "kernel", "lambda"), nus = complex_list(cfg, "kernel", "nu");
        if (lams.empty() || lams.size() != nus.size())
            throw ConfigError("config kernel: lambda and nu must be nonempty lists of equal length");
        int K = int(lams.size());
        std::vector<VecField> psis, phis;
        std::vector<std::string> pl, fl;
        for (int i = 0; i < K; ++i) {
            psis.push_back(kdv_wave(lams[std::size_t(i)]));
            phis.push_back(kdv_adjoint_wave(nus[std::size_t(i)]));
            pl.push_back(fmt_label("lambda", lams[std::size_t(i)]));
            fl.push_back(fmt_label("nu", nus[std::size_t(i)]));
        }
        Eigen::MatrixXcd Om0 = seed_matrix(cfg, "kernel", K);
        LaxPair seed = kdv_seed_pair();
        TransmutationKernel ker = make_kernel(seed, psis, phis, Om0, base, cell, pl, fl);

        GridAxis gx = axis_from(cfg, "kernel", "grid_x", {9, base.x, base.x + 8});
        GridAxis gy = axis_from(cfg, "kernel", "grid_y", {1, base.y, base.y});
        GridAxis gt = axis_from(cfg, "kernel", "grid_t", {1, base.t, base.t});
        std::vector<GridData> grids;
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b) {
                char comp[32];
                std::snprintf(comp, sizeof comp, "omega-%d-%d", a, b);
                grids.push_back(sample_grid(ker.Omega.at(a, b), gx, gy, gt, vo.threads, comp));
            }

        P3 tgt{gx.hi, gy.hi, gt.hi};
        Eigen::MatrixXcd Omt(K, K);
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b) Omt(a, b) = ker.Omega.at(a, b)(tgt.x, tgt.y, tgt.t);
        double cond = condition_of(Omt);

        json meta{{"anchor", {base.x, base.y, base.t}},
                  {"cell", cell},
                  {"condition", cond},
                  {"labels", kernel_labels(ker)},
                  {"mode", "1d"}};

        int rc = 0;
        if (cfg.get("kernel", "path", "canonical") == "swapped") {
            double delta = 0;
            for (int a = 0; a < K; ++a)
                for (int b = 0; b < K; ++b) {
                    OneForm w = one_form(seed, phis[std::size_t(a)], psis[std::size_t(b)]);
                    Path3 alt({base, {tgt.x, base.y, base.t}, {tgt.x, tgt.y, base.t}, tgt});
                    cx swapped = Om0(a, b) + line_integral(w, alt);
                    delta = std::max(delta, std::abs(swapped - Omt(a, b)) / std::max(1.0, std::abs(Omt(a, b))));
                }
            meta["path_delta"] = delta;
            CheckResult c = check_leq("path-swap-agreement", delta, vo.tol_or("paths", 1e-7));
            print_checks("kernel", {c});
            rc = c.pass ? 0 : 1;
        }
        std::printf("kernel: K=%d condition=%.6g at (%g, %g, %g)\n", K, cond, tgt.x, tgt.y, tgt.t);
        write_kernel_grids(co, grids, meta);
        return rc;
    }

    if (mode == "planar") {
        std::vector<cx> al = complex_list(cfg, "kernel", "alpha"), be = complex_list(cfg, "kernel", "beta");
        std::vector<cx> aa = complex_list(cfg, "kernel", "adj_a"), ab = complex_list(cfg, "kernel", "adj_b");
        if (al.empty() || al.size() != be.size() || aa.size() != al.size() || ab.size() != al.size())
            throw ConfigError("config kernel: alpha, beta, adj_a, adj_b must be nonempty lists of equal length");
        int K = int(al.size());
        Eigen::MatrixXcd Om0 = seed_matrix(cfg, "kernel", K);
        double y1 = cfg.get_double("kernel", "strip_y1", base.y + 1.0);
        if (!(y1 > base.y)) throw ConfigError("config kernel.strip_y1: must exceed the base y");
        GridAxis gx = axis_from(cfg, "kernel", "grid_x", {17, base.x, base.x + 8});
        if (gx.lo != base.x) throw ConfigError("config kernel.grid_x: planar sweep must start at the base x");

        std::vector<ScalarField> W;
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b)
                W.push_back(conj_dot(xy_adjoint_wave(aa[std::size_t(a)], ab[std::size_t(a)]),
                                     xy_wave(al[std::size_t(b)], be[std::size_t(b)])));

        std::vector<GridData> grids(std::size_t(K) * std::size_t(K));
        std::vector<cx> running(std::size_t(K) * std::size_t(K));
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b) {
                std::size_t e = std::size_t(a * K + b);
                char comp[32];
                std::snprintf(comp, sizeof comp, "omega-%d-%d", a, b);
                grids[e] = GridData{comp, {gx, {1, y1, y1}, {1, base.t, base.t}}, {}};
                running[e] = Om0(a, b);
            }
        double prev = base.x;
        for (std::uint64_t i = 0; i < gx.count; ++i) {
            double xi = gx.coord(i);
            for (int a = 0; a < K; ++a)
                for (int b = 0; b < K; ++b) {
                    std::size_t e = std::size_t(a * K + b);
                    if (xi > prev) {
                        const ScalarField& f = W[e];
                        running[e] += detail::integrate_x(
                            [&](double xx) {
                                return detail::integrate_x([&](double yy) { return f(xx, yy, base.t); }, base.y, y1, cell);
                            },
                            prev, xi, cell);
                    }
                    grids[e].values.push_back(running[e]);
                }
            prev = xi;
        }

        Eigen::MatrixXcd Omt(K, K);
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b) Omt(a, b) = grids[std::size_t(a * K + b)].values.back();
        double cond = condition_of(Omt);
        json meta{{"anchor", {base.x, base.y, base.t}}, {"cell", cell},          {"condition", cond},
                  {"mode", "planar"},                   {"plane_t", base.t},     {"strip_y", {base.y, y1}}};
        std::printf("kernel: K=%d planar strip condition=%.6g at x=%g\n", K, cond, gx.hi);
        write_kernel_grids(co, grids, meta);
        return 0;
    }

    throw ConfigError("config kernel.mode: expected '1d' or 'planar'");
}

// ---- dress ---------------------------------------------------------------------

int cmd_dress(const CommonOpts& co) {
    if (co.config_path.empty()) throw ConfigError("dress: --config is required");
    Config cfg = Config::parse_file(co.config_path);
    VerifyOptions vo = make_vopts(co, cfg);
    std::vector<double> kap = cfg.get_list("dress", "kappa");
    if (kap.empty()) throw ConfigError("config dress.kappa: at least one rate required");
    std::vector<double> shf = cfg.get_list("dress", "shift");
    if (shf.empty()) shf.assign(kap.size(), 0.0);
    if (shf.size() != kap.size()) throw ConfigError("config dress.shift: length mismatch");
    for (std::size_t i = 0; i < kap.size(); ++i) {
        if (kap[i] <= 0) throw ConfigError("config dress.kappa: rates must be positive");
        if (i && kap[i] <= kap[i - 1]) throw ConfigError("config dress.kappa: rates must be strictly increasing");
    }
    double cell = cfg.get_double("dress", "cell", 0.25);
    GridAxis gx = axis_from(cfg, "dress", "grid_x", {121, -6, 6});
    GridAxis gy = axis_from(cfg, "dress", "grid_y", {1, 0, 0});
    GridAxis gt = axis_from(cfg, "dress", "grid_t", {1, 0.1, 0.1});
    double anchor = cfg.get_double("dress", "anchor", gx.lo - std::max(20.0, 18.0 / kap.front()));

    int K = int(kap.size());
    std::vector<VecField> psis, phis;
    std::vector<std::string> pl, fl;
    Eigen::MatrixXcd Om0 = Eigen::MatrixXcd::Zero(K, K);
    for (int i = 0; i < K; ++i) {
        double k = kap[std::size_t(i)];
        psis.push_back(kdv_wave(k));
        phis.push_back(kdv_adjoint_wave(k));
        Om0(i, i) = std::exp(2 * k * shf[std::size_t(i)]) / (2 * k);
        pl.push_back(fmt_label("kappa", k));
        fl.push_back(fmt_label("kappa", k));
    }
    double cond_ceiling = cfg.get_double("dress", "cond", 1e12);
    TransmutationKernel ker = make_kernel(kdv_seed_pair(), psis, phis, Om0, {anchor, 0, 0}, cell, pl, fl);
    Dressing d = make_dressing(ker, cond_ceiling);
    ScalarField pot = updated_potential(ScalarField::constant(0.0), ker);

    double lam = cfg.get_double("dress", "probe_lambda", 0.4);
    ScalarField wave = d.Op.apply(kdv_wave(lam))[0];

    Box box{Axis(std::max(8, int(gx.count)), gx.lo, gx.hi), Axis::collapsed(gy.lo), Axis::collapsed(gt.lo)};
    double decay = decay_ratio(ker, box);
    Tolerances tt;
    CheckResult c = check_leq("anchor-decay", decay, vo.tol_or("decay", tt.decay),
                              "left-edge tail mass relative to the box maximum");
    print_checks("dress", {c});

    Eigen::MatrixXcd Omt(K, K);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) Omt(a, b) = ker.Omega.at(a, b)(gx.hi, gy.hi, gt.hi);
    double cond = condition_of(Omt);
    std::printf("dress: K=%d condition=%.6g probe lambda=%g\n", K, cond, lam);

    if (!co.out_dir.empty()) {
        fs::create_directories(co.out_dir);
        GridData gu = sample_grid(pot, gx, gy, gt, vo.threads, "potential");
        GridData gw = sample_grid(wave, gx, gy, gt, vo.threads, "dressed-wave");
        write_csv((fs::path(co.out_dir) / "dress.csv").string(), {gu, gw});
        write_ddxg((fs::path(co.out_dir) / "potential.ddxg").string(), gu);
        write_ddxg((fs::path(co.out_dir) / "dressed-wave.ddxg").string(), gw);
        json meta{{"anchor", anchor},       {"cell", cell},           {"condition", cond},
                  {"decay_ratio", decay},   {"labels", kernel_labels(ker)}, {"probe_lambda", lam}};
        write_text(fs::path(co.out_dir) / "dress.json", render_json(meta));
    }
    return c.pass ? 0 : 1;
}

// ---- soliton -------------------------------------------------------------------

int cmd_soliton(const CommonOpts& co) {
    Config cfg = co.config_path.empty() ? Config{} : Config::parse_file(co.config_path);
    VerifyOptions vo = make_vopts(co, cfg);
    long n = co.n_set ? co.n : cfg.get_int("soliton", "n", 1);
    if (n < 0 || n > 4) throw ConfigError("soliton: n must be between 0 and 4");

    GridAxis gx = axis_from(cfg, "soliton", "grid_x", {201, -10, 10});
    GridAxis gt = axis_from(cfg, "soliton", "grid_t", {3, -0.2, 0.2});
    GridAxis gy{1, 0, 0};

    std::vector<CheckResult> checks;
    json meta;
    GridData gu;
    if (n == 0) {
        gu = GridData{"u", {gx, gy, gt}, std::vector<cx>(gx.count * gt.count, cx(0))};
        checks.push_back(check_leq("zero-field", 0.0, vo.tol_or("soliton", 1e-6), "empty spectral set"));
        meta = json{{"amplitude_delta", 0.0}, {"mass_delta", 0.0}, {"n", 0}, {"oracle_delta", 0.0}, {"residual_max", 0.0}};
    } else {
        std::vector<double> kap = cfg.get_list("soliton", "kappa"), shf = cfg.get_list("soliton", "shift");
        if (kap.empty()) {
            const std::vector<double> ka = {0.5, 0.9, 1.3, 1.6}, sa = {0.2, -0.4, 0.5, -0.3};
            kap.assign(ka.begin(), ka.begin() + n);
            shf.assign(sa.begin(), sa.begin() + n);
        }
        if (long(kap.size()) != n) throw ConfigError("config soliton.kappa: expected " + std::to_string(n) + " rates");
        if (shf.empty()) shf.assign(kap.size(), 0.0);
        if (shf.size() != kap.size()) throw ConfigError("config soliton.shift: length mismatch");
        for (std::size_t i = 0; i < kap.size(); ++i) {
            if (kap[i] <= 0) throw ConfigError("config soliton.kappa: rates must be positive");
            if (i && kap[i] <= kap[i - 1])
                throw ConfigError("config soliton.kappa: rates must be strictly increasing and distinct");
        }

        double anchor = gx.lo - std::max(20.0, 18.0 / kap.front());
        SolitonChain ch = kdv_chain(kap, shf, anchor);
        ScalarField oracle = soliton_oracle_wronskian(kap, shf);
        gu = sample_grid(ch.u, gx, gy, gt, vo.threads, "u");

        double odelta = 0;
        std::vector<double> txs = {gt.lo, gt.hi};
        for (double t : txs)
            for (double x : {-0.8, 0.6, 2.1})
                odelta = std::max(odelta, std::abs(ch.u(x, 0, t) - oracle(x, 0, t)) /
                                              std::max(1.0, std::abs(oracle(x, 0, t))));
        checks.push_back(check_leq("matches-oracle", odelta, vo.tol_or("soliton", 1e-6)));

        double adelta = 0;
        if (n == 1) {
            double t0 = gt.hi, xpk = shf[0] + 4 * kap[0] * kap[0] * t0;
            adelta = std::abs(ch.u(xpk, 0, t0) - 2 * kap[0] * kap[0]) / (2 * kap[0] * kap[0]);
            checks.push_back(check_leq("amplitude", adelta, vo.tol_or("soliton", 1e-6)));
        }

        ScalarField res = kdv_residual(ch.u);
        double rmax = 0;
        for (double t : txs) rmax = std::max(rmax, std::abs(res(0.45, 0, t)));
        checks.push_back(check_leq("evolution-residual", rmax, n == 1 ? vo.tol_or("pde_n1", 1e-7) : vo.tol_or("pde_n3", 1e-5)));

        double msum = 0;
        for (double k : kap) msum += 4 * k;
        cx mass = ddx::detail::integrate_x([&](double x) { return ch.u(x, 0, gt.hi); }, gx.lo - 10, gx.hi + 10, 0.5);
        double mdelta = std::abs(mass - msum) / msum;
        checks.push_back(check_leq("mass", mdelta, vo.tol_or("mass", 1e-5)));

        meta = json{{"amplitude_delta", adelta}, {"mass_delta", mdelta},  {"n", n},
                    {"oracle_delta", odelta},    {"residual_max", rmax},  {"kappa", kap},
                    {"shift", shf},              {"anchor", anchor}};
    }

    print_checks("soliton", checks);
    if (!co.out_dir.empty()) {
        fs::create_directories(co.out_dir);
        write_csv((fs::path(co.out_dir) / "soliton.csv").string(), {gu});
        write_ddxg((fs::path(co.out_dir) / "soliton.ddxg").string(), gu);
        meta["checks"] = checks_json(checks);
        write_text(fs::path(co.out_dir) / "soliton.json", render_json(meta));
    }
    return all_pass(checks) ? 0 : 1;
}

// ---- stokes --------------------------------------------------------------------

int cmd_stokes(const CommonOpts& co) {
    Config cfg = co.config_path.empty() ? Config{} : Config::parse_file(co.config_path);
    VerifyOptions vo = make_vopts(co, cfg);

    cx alpha = cx(cfg.get_double("stokes", "alpha", 0.5), 0);
    cx beta = cx(cfg.get_double("stokes", "beta", 0.7), 0);
    cx aj = cx(cfg.get_double("stokes", "adj_a", 0.4), 0);
    cx bj = cx(cfg.get_double("stokes", "adj_b", 0.6), 0);
    TwoForm w = two_form(xy_operator(ScalarField::constant(0.0)), xy_adjoint_wave(aj, bj), xy_wave(alpha, beta));

    std::vector<double> rc = cfg.get_list("stokes", "rect");
    if (rc.empty()) rc = {-1.2, 1.4, -0.8, 0.9, 0.3};
    if (rc.size() != 5) throw ConfigError("config stokes.rect: expected x0, x1, y0, y1, t");
    std::vector<double> ap = cfg.get_list("stokes", "apex");
    if (ap.empty()) ap = {0.1, 0.05, 0.9};
    if (ap.size() != 3) throw ConfigError("config stokes.apex: expected x, y, t");
    int n0 = int(cfg.get_int("stokes", "rect_n0", 36)), n1 = int(cfg.get_int("stokes", "rect_n1", 14));
    int nt = int(cfg.get_int("stokes", "tent_n", 52));

    P3 c00{rc[0], rc[2], rc[4]}, c10{rc[1], rc[2], rc[4]}, c11{rc[1], rc[3], rc[4]}, c01{rc[0], rc[3], rc[4]};
    cx flat = surface_integral(w, rect_surface(c00, c10, c11, c01, n0, n1));
    cx tent = surface_integral(w, tent_surface(c00, c10, c11, c01, {ap[0], ap[1], ap[2]}, nt));
    double delta = std::abs(flat - tent) / std::max(1.0, std::abs(flat));

    CheckResult c = check_leq("flux-agreement", delta, vo.tol_or("stokes", 1e-7));
    print_checks("stokes", {c});
    std::printf("stokes: flat=%.12g%+.12gi tent=%.12g%+.12gi\n", flat.real(), flat.imag(), tent.real(), tent.imag());

    if (!co.out_dir.empty()) {
        fs::create_directories(co.out_dir);
        json meta{{"delta", delta},
                  {"flat", {flat.real(), flat.imag()}},
                  {"tent", {tent.real(), tent.imag()}},
                  {"checks", checks_json({c})}};
        write_text(fs::path(co.out_dir) / "stokes.json", render_json(meta));
    }
    return c.pass ? 0 : 1;
}

// ---- export --------------------------------------------------------------------

std::string lower_ext(const fs::path& p) {
    std::string e = p.extension().string();
    for (char& c : e) c = char(std::tolower(c));
    return e;
}

int cmd_export(const CommonOpts& co, std::string in, std::string out) {
    if (in.empty() || out.empty()) {
        Config cfg = co.config_path.empty() ? Config{} : Config::parse_file(co.config_path);
        if (in.empty()) in = cfg.get("export", "in", "");
        if (out.empty()) out = cfg.get("export", "out", "");
    }
    if (in.empty() || out.empty()) throw ConfigError("export: need an input and an output path");
    std::string ei = lower_ext(in), eo = lower_ext(out);
    if (ei == ".ddxg" && eo == ".csv") {
        GridData g = read_ddxg(in, fs::path(in).stem().string());
        write_csv(out, g.points() == 0 ? std::vector<GridData>{} : std::vector<GridData>{g});
    } else if (ei == ".csv" && eo == ".ddxg") {
        std::vector<GridData> v = read_csv(in);
        if (v.size() > 1) throw ConfigError("export: csv holds several components; split them first");
        write_ddxg(out, v.empty() ? GridData{} : v[0]);
    } else {
        throw ConfigError("export: supported directions are .ddxg -> .csv and .csv -> .ddxg");
    }
    std::printf("export: wrote %s\n", out.c_str());
    return 0;
}

void add_common(CLI::App* sub, CommonOpts& co, bool with_suite) {
    sub->add_option("--config", co.config_path, "config file (key = value sections)");
    sub->add_option("--out", co.out_dir, "directory for reports and grids");
    auto* s = sub->add_option("--seed", co.seed, "random seed for generated cases");
    auto* t = sub->add_option("--threads", co.threads, "worker threads for grid sampling");
    auto* n = sub->add_option("--n", co.n, "number of spectral points / bumps");
    sub->add_option("--tol", co.tols, "tolerance override, name=value (repeatable)");
    if (with_suite) sub->add_option("--suite", co.suites_csv, "comma-separated suite names");
    sub->parse_complete_callback([&co, s, t, n] {
        co.seed_set = s->count() > 0;
        co.threads_set = t->count() > 0;
        co.n_set = n->count() > 0;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transmutation of operator pairs: verification, dressing and grids"};
    app.require_subcommand(1);

    CommonOpts co;
    std::string exp_in, exp_out;
    std::function<int()> run;

    CLI::App* v = app.add_subcommand("verify", "run verification suites");
    add_common(v, co, true);
    v->callback([&] { run = [&] { return cmd_verify(co); }; });

    CLI::App* k = app.add_subcommand("kernel", "build a running kernel over a grid");
    add_common(k, co, false);
    k->callback([&] { run = [&] { return cmd_kernel(co); }; });

    CLI::App* d = app.add_subcommand("dress", "dress the zero seed and export the potential");
    add_common(d, co, false);
    d->callback([&] { run = [&] { return cmd_dress(co); }; });

    CLI::App* s = app.add_subcommand("soliton", "multi-bump potentials with oracle checks");
    add_common(s, co, false);
    s->callback([&] { run = [&] { return cmd_soliton(co); }; });

    CLI::App* st = app.add_subcommand("stokes", "compare flux through boundary-sharing surfaces");
    add_common(st, co, false);
    st->callback([&] { run = [&] { return cmd_stokes(co); }; });

    CLI::App* ex = app.add_subcommand("export", "convert between the binary grid format and csv");
    add_common(ex, co, false);
    ex->add_option("input", exp_in, "source file (.ddxg or .csv)");
    ex->add_option("output", exp_out, "destination file (.csv or .ddxg)");
    ex->callback([&] { run = [&] { return cmd_export(co, exp_in, exp_out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return run();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ContractViolation& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const SingularKernel& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        for (const auto& l : e.labels) std::fprintf(stderr, "  offending entry: %s\n", l.c_str());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return 3;
    }
}
