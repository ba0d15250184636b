// Release gate: every criterion with its stated tolerance and runtime budget,
// one verdict line each.  Exits nonzero if any line fails.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "ddx/io.hpp"
#include "ddx/verify.hpp"

using namespace ddx;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string failing(const std::vector<SuiteResult>& rs) {
    std::string out;
    for (const auto& r : rs)
        for (const auto& c : r.checks)
            if (!c.pass) {
                if (!out.empty()) out += ", ";
                out += c.name;
            }
    return out;
}

struct Gate {
    int failures = 0;

    void verdict(const char* name, bool ok, double secs, double budget, const std::string& note) {
        std::printf("%s  %-28s %7.2fs of %gs%s%s\n", ok ? "PASS" : "FAIL", name, secs, budget,
                    note.empty() ? "" : "  -- ", note.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }

    void criterion(const char* name, double budget, const std::vector<std::string>& suites,
                   const VerifyOptions& opt = {}) {
        auto t0 = Clock::now();
        std::vector<SuiteResult> rs;
        std::string note;
        bool ok = true;
        try {
            for (const auto& s : suites) {
                rs.push_back(run_suite(s, opt));
                if (!rs.back().passed) ok = false;
            }
            if (!ok) note = "failing: " + failing(rs);
        } catch (const std::exception& e) {
            ok = false;
            note = e.what();
        }
        double el = since(t0);
        if (ok && el > budget) {
            ok = false;
            note = "over budget";
        }
        verdict(name, ok, el, budget, note);
    }
};

}  // namespace

int main() {
    Gate g;

    g.criterion("duality-and-divergence", 30, {"lagrange"});
    g.criterion("closed-form-residuals", 30, {"closedness-1d", "closedness-2d"});
    g.criterion("exactness-independence", 60, {"path-independence", "stokes"});
    g.criterion("kernel-involution", 10, {"kernel-consistency"});
    g.criterion("dressing-structure", 120, {"dressing"});
    g.criterion("darboux-potential-map", 30, {"backlund"});
    g.criterion("soliton-ladder", 180, {"soliton"});
    g.criterion("lax-compatibility", 30, {"compatibility"});

    // Reports must not depend on the worker count: run the full set at 1, 2
    // and 8 threads and require byte-identical JSON.
    {
        auto t0 = Clock::now();
        std::string note;
        bool ok = true;
        try {
            std::vector<std::string> reports;
            for (int th : {1, 2, 8}) {
                VerifyOptions opt;
                opt.threads = th;
                reports.push_back(render_json(suites_report(all_suites(), opt)));
            }
            ok = reports[0] == reports[1] && reports[0] == reports[2];
            if (!ok)
                note = "reports differ across thread counts";
            else if (!json::parse(reports[0]).at("passed").get<bool>()) {
                ok = false;
                note = "replayed suites not all green";
            }
        } catch (const std::exception& e) {
            ok = false;
            note = e.what();
        }
        double el = since(t0);
        if (ok && el > 60) {
            ok = false;
            note = "over budget";
        }
        g.verdict("deterministic-reports", ok, el, 60, note);
    }

    std::printf("acceptance: %d of 9 criteria passed\n", 9 - g.failures);
    return g.failures == 0 ? 0 : 1;
}
