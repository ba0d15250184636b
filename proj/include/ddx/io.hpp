//! Persistence: the DDXG binary grid format, the CSV export/import used for
//! plotting, the line-based key=value config reader and JSON report helpers.
#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "field.hpp"

namespace ddx {

/// Bad user input: malformed config, unreadable or inconsistent data files.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

// ---- sampled grids ----------------------------------------------------------

struct GridAxis {
    std::uint64_t count = 1;
    double lo = 0, hi = 0;
    double coord(std::uint64_t i) const {
        return count > 1 ? lo + double(i) * (hi - lo) / double(count - 1) : lo;
    }
};

/// One scalar component sampled over an x/y/t box, x fastest.
struct GridData {
    std::string component;
    std::vector<GridAxis> axes;  // x, y, t; empty vector = empty grid
    std::vector<cx> values;

    std::uint64_t points() const {
        if (axes.empty()) return 0;
        std::uint64_t n = 1;
        for (const auto& a : axes) n *= a.count;
        return n;
    }
};

inline GridData sample_grid(const ScalarField& f, GridAxis ax, GridAxis ay, GridAxis at, int threads,
                            std::string component) {
    GridData g;
    g.component = std::move(component);
    g.axes = {ax, ay, at};
    g.values.assign(g.points(), cx(0));
    std::uint64_t nx = ax.count, ny = ay.count;
    parallel_for(g.values.size(), threads, [&](std::size_t i) {
        std::uint64_t ix = i % nx, iy = (i / nx) % ny, it = i / (nx * ny);
        g.values[i] = f(ax.coord(ix), ay.coord(iy), at.coord(it));
    });
    return g;
}

// ---- DDXG binary format ------------------------------------------------------

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& s, double d) {
    std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) s.push_back(char((v >> (8 * i)) & 0xff));
}

struct ByteReader {
    const std::string& s;
    std::size_t at = 0;
    std::uint32_t u32() {
        if (at + 4 > s.size()) throw ConfigError("ddxg: truncated header");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(s[at++])) << (8 * i);
        return v;
    }
    double f64() {
        if (at + 8 > s.size()) throw ConfigError("ddxg: truncated data");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(s[at++])) << (8 * i);
        return std::bit_cast<double>(v);
    }
};

}  // namespace detail

constexpr std::uint32_t kGridFormatVersion = 1;

/// Layout: "DDXG" | version u32 | axis count u32 | per axis (count, lo, hi)
/// each as f64 | payload (re, im) f64 pairs, x fastest. All little-endian.
inline std::string encode_ddxg(const GridData& g) {
    std::string out = "DDXG";
    detail::put_u32(out, kGridFormatVersion);
    detail::put_u32(out, std::uint32_t(g.axes.size()));
    for (const auto& a : g.axes) {
        detail::put_f64(out, double(a.count));
        detail::put_f64(out, a.lo);
        detail::put_f64(out, a.hi);
    }
    if (g.values.size() != g.points()) throw ContractViolation("encode_ddxg: payload size mismatch");
    for (const cx& v : g.values) {
        detail::put_f64(out, v.real());
        detail::put_f64(out, v.imag());
    }
    return out;
}

inline GridData decode_ddxg(const std::string& bytes, std::string component = "") {
    if (bytes.size() < 12 || bytes.compare(0, 4, "DDXG") != 0) throw ConfigError("ddxg: bad magic");
    detail::ByteReader r{bytes, 4};
    std::uint32_t ver = r.u32();
    if (ver != kGridFormatVersion) throw ConfigError("ddxg: unsupported version");
    std::uint32_t naxes = r.u32();
    if (naxes > 8) throw ConfigError("ddxg: implausible axis count");
    GridData g;
    g.component = std::move(component);
    for (std::uint32_t i = 0; i < naxes; ++i) {
        GridAxis a;
        double c = r.f64();
        if (!(c >= 0) || c != std::floor(c) || c > 1e15) throw ConfigError("ddxg: axis count must be a whole number");
        a.count = std::uint64_t(c);
        a.lo = r.f64();
        a.hi = r.f64();
        if (!std::isfinite(a.lo) || !std::isfinite(a.hi)) throw ConfigError("ddxg: axis bounds must be finite");
        if (a.count == 1 && a.lo != a.hi) throw ConfigError("ddxg: collapsed axis needs lo == hi");
        g.axes.push_back(a);
    }
    std::uint64_t n = g.points();
    if (bytes.size() - r.at != n * 16) throw ConfigError("ddxg: payload size does not match axes");
    g.values.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        double re = r.f64(), im = r.f64();
        g.values.emplace_back(re, im);
    }
    return g;
}

inline void write_ddxg(const std::string& path, const GridData& g) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    std::string bytes = encode_ddxg(g);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw ConfigError("write failed: " + path);
}

inline GridData read_ddxg(const std::string& path, std::string component = "") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_ddxg(ss.str(), std::move(component));
}

// ---- CSV ---------------------------------------------------------------------

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Header `x,y,t,component,re,im`, one row per sample per component, samples
/// in grid order (x fastest). All grids must share their axes.
inline std::string encode_csv(const std::vector<GridData>& grids) {
    std::string out = "x,y,t,component,re,im\n";
    if (grids.empty()) return out;
    const auto& axes = grids.front().axes;
    for (const auto& g : grids) {
        if (g.axes.size() != 3 && !(g.axes.empty() && g.values.empty()))
            throw ContractViolation("encode_csv: grids must have x,y,t axes");
        for (std::size_t k = 0; k < g.axes.size(); ++k)
            if (g.axes[k].count != axes[k].count || g.axes[k].lo != axes[k].lo || g.axes[k].hi != axes[k].hi)
                throw ContractViolation("encode_csv: component grids must share axes");
        if (g.component.find_first_of(",\n\"") != std::string::npos)
            throw ContractViolation("encode_csv: component labels must be comma-free");
    }
    if (grids.front().axes.empty()) return out;
    std::uint64_t nx = axes[0].count, ny = axes[1].count, nt = axes[2].count;
    for (std::uint64_t it = 0; it < nt; ++it)
        for (std::uint64_t iy = 0; iy < ny; ++iy)
            for (std::uint64_t ix = 0; ix < nx; ++ix) {
                std::uint64_t idx = (it * ny + iy) * nx + ix;
                for (const auto& g : grids) {
                    out += detail::fmt17(axes[0].coord(ix));
                    out += ',';
                    out += detail::fmt17(axes[1].coord(iy));
                    out += ',';
                    out += detail::fmt17(axes[2].coord(it));
                    out += ',';
                    out += g.component;
                    out += ',';
                    out += detail::fmt17(g.values[idx].real());
                    out += ',';
                    out += detail::fmt17(g.values[idx].imag());
                    out += '\n';
                }
            }
    return out;
}

inline std::vector<GridData> decode_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,y,t,component,re,im") throw ConfigError("csv: unexpected header");

    struct Row {
        double x, y, t;
        std::string comp;
        cx v;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<std::string, 6> f;
        std::size_t pos = 0;
        for (int k = 0; k < 6; ++k) {
            std::size_t nxt = k < 5 ? line.find(',', pos) : line.size();
            if (k < 5 && nxt == std::string::npos) throw ConfigError("csv: short row");
            f[std::size_t(k)] = line.substr(pos, nxt - pos);
            pos = nxt + 1;
        }
        auto num = [&](const std::string& s) {
            char* end = nullptr;
            double v = std::strtod(s.c_str(), &end);
            if (end == s.c_str() || *end != '\0') throw ConfigError("csv: bad number '" + s + "'");
            return v;
        };
        rows.push_back({num(f[0]), num(f[1]), num(f[2]), f[3], cx(num(f[4]), num(f[5]))});
    }
    if (rows.empty()) return {};

    std::vector<std::string> comps;
    for (const auto& r : rows)
        if (std::find(comps.begin(), comps.end(), r.comp) == comps.end()) comps.push_back(r.comp);
    if (rows.size() % comps.size() != 0) throw ConfigError("csv: ragged component blocks");
    std::uint64_t samples = rows.size() / comps.size();

    // reconstruct axes from the first component's coordinates (x fastest)
    std::vector<double> xs, ys, ts;
    for (std::size_t i = 0; i < rows.size(); i += comps.size()) {
        const Row& r = rows[i];
        if (std::find(xs.begin(), xs.end(), r.x) == xs.end()) xs.push_back(r.x);
        if (std::find(ys.begin(), ys.end(), r.y) == ys.end()) ys.push_back(r.y);
        if (std::find(ts.begin(), ts.end(), r.t) == ts.end()) ts.push_back(r.t);
    }
    if (xs.size() * ys.size() * ts.size() != samples) throw ConfigError("csv: coordinates do not form a full grid");
    auto mkaxis = [](const std::vector<double>& c) {
        return GridAxis{c.size(), c.front(), c.back()};
    };
    GridAxis ax = mkaxis(xs), ay = mkaxis(ys), at = mkaxis(ts);

    std::vector<GridData> out;
    for (const auto& c : comps) out.push_back({c, {ax, ay, at}, std::vector<cx>(samples)});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        std::uint64_t s = i / comps.size();
        std::size_t which = i % comps.size();
        if (out[which].component != r.comp) throw ConfigError("csv: interleaving must repeat per sample");
        std::uint64_t ix = s % ax.count, iy = (s / ax.count) % ay.count, it = s / (ax.count * ay.count);
        if (r.x != ax.coord(ix) || r.y != ay.coord(iy) || r.t != at.coord(it))
            throw ConfigError("csv: row coordinates disagree with the reconstructed grid");
        out[which].values[s] = r.v;
    }
    return out;
}

inline void write_csv(const std::string& path, const std::vector<GridData>& grids) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    std::string text = encode_csv(grids);
    out.write(text.data(), std::streamsize(text.size()));
    if (!out) throw ConfigError("write failed: " + path);
}

inline std::vector<GridData> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_csv(ss.str());
}

// ---- config ------------------------------------------------------------------

/// Line-based `key = value` sections:  [section] headers, '#'/';' comments,
/// later keys override earlier ones. Keys before any header land in "".
struct Config {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static Config parse(const std::string& text) {
        Config c;
        std::istringstream in(text);
        std::string line, sec;
        int ln = 0;
        while (std::getline(in, line)) {
            ++ln;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::string s = trim(line);
            if (s.empty() || s[0] == '#' || s[0] == ';') continue;
            if (s.front() == '[') {
                if (s.back() != ']' || s.size() < 3) throw ConfigError("config line " + std::to_string(ln) + ": bad section header");
                sec = trim(s.substr(1, s.size() - 2));
                c.sections[sec];
                continue;
            }
            std::size_t eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(ln) + ": expected key = value");
            std::string key = trim(s.substr(0, eq)), val = trim(s.substr(eq + 1));
            if (key.empty()) throw ConfigError("config line " + std::to_string(ln) + ": empty key");
            c.sections[sec][key] = val;
        }
        return c;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string& sec, const std::string& key) const {
        auto it = sections.find(sec);
        return it != sections.end() && it->second.count(key) > 0;
    }
    std::string get(const std::string& sec, const std::string& key, const std::string& dflt) const {
        auto it = sections.find(sec);
        if (it == sections.end()) return dflt;
        auto jt = it->second.find(key);
        return jt == it->second.end() ? dflt : jt->second;
    }
    double get_double(const std::string& sec, const std::string& key, double dflt) const {
        if (!has(sec, key)) return dflt;
        std::string v = get(sec, key, "");
        char* end = nullptr;
        double d = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0') throw ConfigError("config " + sec + "." + key + ": bad number '" + v + "'");
        return d;
    }
    long get_int(const std::string& sec, const std::string& key, long dflt) const {
        double d = get_double(sec, key, double(dflt));
        if (d != std::floor(d)) throw ConfigError("config " + sec + "." + key + ": expected an integer");
        return long(d);
    }
    std::vector<double> get_list(const std::string& sec, const std::string& key) const {
        std::vector<double> out;
        if (!has(sec, key)) return out;
        std::string v = get(sec, key, "");
        std::size_t pos = 0;
        while (pos <= v.size()) {
            std::size_t nxt = v.find(',', pos);
            std::string item = trim(v.substr(pos, nxt == std::string::npos ? std::string::npos : nxt - pos));
            if (!item.empty()) {
                char* end = nullptr;
                double d = std::strtod(item.c_str(), &end);
                if (end == item.c_str() || *end != '\0')
                    throw ConfigError("config " + sec + "." + key + ": bad list entry '" + item + "'");
                out.push_back(d);
            }
            if (nxt == std::string::npos) break;
            pos = nxt + 1;
        }
        return out;
    }

  private:
    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t");
        std::size_t e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
};

// ---- reports -----------------------------------------------------------------

using json = nlohmann::json;

inline json check_json(const CheckResult& c) {
    return json{{"name", c.name}, {"note", c.note}, {"pass", c.pass}, {"residual", c.residual}, {"tolerance", c.tolerance}};
}

inline json checks_json(const std::vector<CheckResult>& cs) {
    json arr = json::array();
    for (const auto& c : cs) arr.push_back(check_json(c));
    return arr;
}

inline bool all_pass(const std::vector<CheckResult>& cs) {
    for (const auto& c : cs)
        if (!c.pass) return false;
    return true;
}

/// Reports carry no timestamps or environment data: identical inputs must
/// serialize to identical bytes.
inline std::string render_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace ddx
