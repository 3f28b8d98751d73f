#pragma once

// Field snapshots: an 8-byte little-endian header length, a JSON header
// (grid, time, field list, row-major layout), then the fields as
// little-endian float64 in header order. Diagnostics go to CSV.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oblimit/errors.hpp"
#include "oblimit/grid.hpp"
#include "oblimit/solver.hpp"

namespace oblimit::io {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

/// %.<digits>g formatting; the default 17 round-trips every double.
inline std::string fmt(double v, int digits = 17) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_snapshot(const std::string& path, const FieldState& s) {
    const Grid& g = s.grid;
    std::vector<std::pair<std::string, const Field2D*>> fields{{"u", &s.u}, {"w", &s.w}, {"theta", &s.theta}, {"p", &s.p}};
    if (s.has_full_state()) fields.push_back({"q", &s.q});
    nlohmann::ordered_json h;
    h["nx"] = g.nx;
    h["ny"] = g.ny;
    h["lx"] = g.lx;
    h["t"] = s.t;
    h["order"] = "row-major";
    h["dtype"] = "<f8";
    h["fields"] = nlohmann::ordered_json::array();
    for (const auto& [name, f] : fields)
        h["fields"].push_back({{"name", name}, {"rows", f->ny()}, {"cols", f->nx()}});
    const std::string header = h.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const std::uint64_t len = header.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(header.data(), std::streamsize(header.size()));
    for (const auto& [name, f] : fields) out.write(reinterpret_cast<const char*>(f->data()), std::streamsize(f->size() * sizeof(double)));
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline FieldState read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || len > (1u << 20)) throw IoError("'" + path + "': bad snapshot header length");
    std::string header(len, '\0');
    in.read(header.data(), std::streamsize(len));
    const auto h = nlohmann::json::parse(header);
    FieldState s(Grid{h.at("nx").get<int>(), h.at("ny").get<int>(), h.at("lx").get<double>()});
    s.t = h.at("t").get<double>();
    for (const auto& f : h.at("fields")) {
        const std::string name = f.at("name");
        Field2D* target = nullptr;
        if (name == "u") target = &s.u;
        else if (name == "w") target = &s.w;
        else if (name == "theta") target = &s.theta;
        else if (name == "p") target = &s.p;
        else if (name == "q") {
            s.ensure_full_state();
            target = &s.q;
        } else {
            throw IoError("'" + path + "': unknown field '" + name + "'");
        }
        if (f.at("rows").get<int>() != target->ny() || f.at("cols").get<int>() != target->nx())
            throw IoError("'" + path + "': field '" + name + "' has unexpected shape");
        in.read(reinterpret_cast<char*>(target->data()), std::streamsize(target->size() * sizeof(double)));
    }
    if (!in) throw IoError("'" + path + "': truncated snapshot");
    return s;
}

inline std::string diagnostics_csv(const std::vector<Diagnostics>& rows, int digits = 17) {
    auto f = [digits](double v) { return fmt(v, digits); };
    std::string out = "t,div_norm,kinetic_energy,theta_min,theta_max\n";
    for (const auto& d : rows)
        out += f(d.t) + "," + f(d.div_norm) + "," + f(d.kinetic_energy) + "," + f(d.theta_min) + "," + f(d.theta_max) + "\n";
    return out;
}

}  // namespace oblimit::io
