#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zspring/fitting.hpp"
#include "zspring/trajectory.hpp"

namespace zspring {

enum class TrajectoryFormat { binary, text };

class io_error : public std::runtime_error {
public:
    enum class Kind { unreadable, malformed_header, truncated_payload, non_finite_value };

    io_error(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] Kind kind() const { return kind_; }

private:
    Kind kind_;
};

namespace detail {

[[nodiscard]] inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[nodiscard]] inline std::string_view kind_name(TrajKind kind)
{
    switch (kind) {
    case TrajKind::target: return "target";
    case TrajKind::truth: return "truth";
    case TrajKind::output: return "output";
    }
    return "output";
}

[[nodiscard]] inline TrajKind parse_kind(std::string_view name, const std::string& path)
{
    if (name == "target") return TrajKind::target;
    if (name == "truth") return TrajKind::truth;
    if (name == "output") return TrajKind::output;
    throw io_error(io_error::Kind::malformed_header, path + ": unknown trajectory kind '" + std::string(name) + "'");
}

inline void write_doubles_le(std::ostream& out, const double* values, std::size_t count)
{
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values), static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &values[i], sizeof(bits));
            char swapped[8];
            for (int b = 0; b < 8; ++b)
                swapped[b] = static_cast<char>(bits >> (8 * b));
            out.write(swapped, 8);
        }
    }
}

inline bool read_doubles_le(std::istream& in, double* values, std::size_t count)
{
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(values), static_cast<std::streamsize>(count * sizeof(double)));
        return static_cast<std::size_t>(in.gcount()) == count * sizeof(double);
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            char raw[8];
            in.read(raw, 8);
            if (in.gcount() != 8)
                return false;
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b)
                bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[b])) << (8 * b);
            std::memcpy(&values[i], &bits, sizeof(bits));
        }
        return true;
    }
}

} // namespace detail

// Trajectory file layout: a short text header, then the payload.
//
//   zspring-trajectory <binary|text>
//   kind <target|truth|output>
//   frames <N>
//   particles <V>
//   dt <seconds, 17 significant digits>
//   data
//   <N*V*3 doubles: little-endian raw (binary) or whitespace-separated text>
//
// Text payloads are written one frame per line at 17 significant digits, so
// both formats round-trip doubles exactly.

inline void write_trajectory(const std::string& path, const TrajectorySet& set,
                             TrajectoryFormat format = TrajectoryFormat::binary)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error(io_error::Kind::unreadable, path + ": cannot open for writing");

    out << "zspring-trajectory " << (format == TrajectoryFormat::binary ? "binary" : "text") << '\n'
        << "kind " << detail::kind_name(set.kind) << '\n'
        << "frames " << set.frames << '\n'
        << "particles " << set.particles << '\n'
        << "dt " << detail::format_double(set.dt) << '\n'
        << "data\n";

    if (format == TrajectoryFormat::binary) {
        static_assert(sizeof(Vec3) == 3 * sizeof(double));
        if (!set.data.empty())
            detail::write_doubles_le(out, &set.data.front().x, set.data.size() * 3);
    } else {
        for (std::size_t f = 0; f < set.frames; ++f) {
            for (std::size_t p = 0; p < set.particles; ++p) {
                const Vec3& v = set.at(f, p);
                if (p != 0)
                    out << ' ';
                out << detail::format_double(v.x) << ' ' << detail::format_double(v.y) << ' '
                    << detail::format_double(v.z);
            }
            out << '\n';
        }
    }
    if (!out)
        throw io_error(io_error::Kind::unreadable, path + ": write failed");
}

[[nodiscard]] inline TrajectorySet read_trajectory(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error(io_error::Kind::unreadable, path + ": cannot open");

    const auto header_line = [&](std::string_view expected_key) {
        std::string line;
        if (!std::getline(in, line))
            throw io_error(io_error::Kind::malformed_header, path + ": missing '" + std::string(expected_key) + "' line");
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        const std::size_t space = line.find(' ');
        if (line.substr(0, space) != expected_key)
            throw io_error(io_error::Kind::malformed_header,
                           path + ": expected '" + std::string(expected_key) + "', got '" + line + "'");
        return space == std::string::npos ? std::string() : line.substr(space + 1);
    };

    const std::string magic = header_line("zspring-trajectory");
    TrajectoryFormat format;
    if (magic == "binary")
        format = TrajectoryFormat::binary;
    else if (magic == "text")
        format = TrajectoryFormat::text;
    else
        throw io_error(io_error::Kind::malformed_header, path + ": unknown format tag '" + magic + "'");

    TrajectorySet set;
    set.kind = detail::parse_kind(header_line("kind"), path);

    const auto parse_size = [&](const std::string& text, const char* what) {
        std::size_t value = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw io_error(io_error::Kind::malformed_header, path + ": bad " + what + " '" + text + "'");
        return value;
    };
    set.frames = parse_size(header_line("frames"), "frame count");
    set.particles = parse_size(header_line("particles"), "particle count");

    const std::string dt_text = header_line("dt");
    try {
        set.dt = std::stod(dt_text);
    } catch (const std::exception&) {
        throw io_error(io_error::Kind::malformed_header, path + ": bad dt '" + dt_text + "'");
    }
    if (!(set.dt > 0.0) || !std::isfinite(set.dt))
        throw io_error(io_error::Kind::malformed_header, path + ": dt must be positive and finite");

    {
        std::string line;
        if (!std::getline(in, line))
            throw io_error(io_error::Kind::malformed_header, path + ": missing 'data' line");
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line != "data")
            throw io_error(io_error::Kind::malformed_header, path + ": expected 'data', got '" + line + "'");
    }

    const std::size_t value_count = set.frames * set.particles * 3;
    set.data.resize(set.frames * set.particles);
    if (value_count == 0)
        return set;

    if (format == TrajectoryFormat::binary) {
        if (!detail::read_doubles_le(in, &set.data.front().x, value_count))
            throw io_error(io_error::Kind::truncated_payload,
                           path + ": binary payload shorter than frames*particles*3 doubles");
    } else {
        // token + strtod, since stream extraction does not accept nan/inf
        double* values = &set.data.front().x;
        std::string token;
        for (std::size_t i = 0; i < value_count; ++i) {
            if (!(in >> token))
                throw io_error(io_error::Kind::truncated_payload,
                               path + ": text payload ended after " + std::to_string(i) + " of "
                                   + std::to_string(value_count) + " values");
            char* end = nullptr;
            values[i] = std::strtod(token.c_str(), &end);
            if (end != token.c_str() + token.size())
                throw io_error(io_error::Kind::truncated_payload,
                               path + ": unparsable payload token '" + token + "'");
        }
    }

    // header and payload must agree both ways
    if (format == TrajectoryFormat::binary) {
        if (in.peek() != std::char_traits<char>::eof())
            throw io_error(io_error::Kind::malformed_header,
                           path + ": payload longer than the declared frames*particles*3 doubles");
    } else {
        std::string extra;
        if (in >> extra)
            throw io_error(io_error::Kind::malformed_header,
                           path + ": trailing payload beyond the declared value count");
    }

    for (const Vec3& v : set.data) {
        if (!is_finite(v))
            throw io_error(io_error::Kind::non_finite_value, path + ": payload contains a non-finite value");
    }
    return set;
}

// ---------------------------------------------------------------------------
// Fit report: one JSON record per particle.

struct FitRecord {
    int id = 0;
    double ks = 0.0;
    double kd = 0.0;
    DampingKind regime = DampingKind::critical;
    double discriminant = 0.0; // kd^2 - 4 ks
    double final_loss = 0.0;
    std::vector<int> dropped_frames;
    bool converged = false;
};

namespace detail {

[[nodiscard]] inline std::string_view regime_name(DampingKind kind)
{
    switch (kind) {
    case DampingKind::overdamped: return "overdamped";
    case DampingKind::underdamped: return "underdamped";
    case DampingKind::critical: return "critical";
    }
    return "critical";
}

[[nodiscard]] inline DampingKind parse_regime(std::string_view name, const std::string& path)
{
    if (name == "overdamped") return DampingKind::overdamped;
    if (name == "underdamped") return DampingKind::underdamped;
    if (name == "critical") return DampingKind::critical;
    throw io_error(io_error::Kind::malformed_header, path + ": unknown regime '" + std::string(name) + "'");
}

} // namespace detail

[[nodiscard]] inline FitRecord make_fit_record(int id, const FitResult& result)
{
    FitRecord rec;
    rec.id = id;
    rec.ks = result.params.ks;
    rec.kd = result.params.kd;
    rec.regime = result.regime.kind;
    rec.discriminant = result.params.discriminant();
    rec.final_loss = result.final_loss;
    rec.dropped_frames = result.dropped_frames;
    rec.converged = result.converged;
    return rec;
}

inline void write_fit_report(const std::string& path, std::span<const FitRecord> records)
{
    nlohmann::json root;
    root["format"] = "zspring-fit-report";
    // the target-curve convention the fits were computed under
    root["kinematics"] = "cubic, one-sided differences at both track ends";
    nlohmann::json list = nlohmann::json::array();
    for (const FitRecord& rec : records) {
        nlohmann::json item;
        item["id"] = rec.id;
        item["ks"] = rec.ks;
        item["kd"] = rec.kd;
        item["regime"] = detail::regime_name(rec.regime);
        item["discriminant"] = rec.discriminant;
        item["final_loss"] = rec.final_loss;
        item["dropped_frames"] = rec.dropped_frames;
        item["converged"] = rec.converged;
        list.push_back(std::move(item));
    }
    root["particles"] = std::move(list);

    std::ofstream out(path);
    if (!out)
        throw io_error(io_error::Kind::unreadable, path + ": cannot open for writing");
    out << root.dump(2) << '\n';
    if (!out)
        throw io_error(io_error::Kind::unreadable, path + ": write failed");
}

[[nodiscard]] inline std::vector<FitRecord> read_fit_report(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw io_error(io_error::Kind::unreadable, path + ": cannot open");
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(io_error::Kind::malformed_header, path + ": not valid JSON: " + e.what());
    }
    if (root.value("format", "") != "zspring-fit-report" || !root.contains("particles"))
        throw io_error(io_error::Kind::malformed_header, path + ": not a fit report file");

    std::vector<FitRecord> records;
    try {
        for (const nlohmann::json& item : root["particles"]) {
            FitRecord rec;
            rec.id = item.at("id").get<int>();
            rec.ks = item.at("ks").get<double>();
            rec.kd = item.at("kd").get<double>();
            rec.regime = detail::parse_regime(item.at("regime").get<std::string>(), path);
            rec.discriminant = item.at("discriminant").get<double>();
            rec.final_loss = item.at("final_loss").get<double>();
            rec.dropped_frames = item.at("dropped_frames").get<std::vector<int>>();
            rec.converged = item.at("converged").get<bool>();
            records.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw io_error(io_error::Kind::malformed_header, path + ": bad fit record: " + e.what());
    }
    std::vector<int> ids;
    ids.reserve(records.size());
    for (const FitRecord& rec : records)
        ids.push_back(rec.id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw io_error(io_error::Kind::malformed_header, path + ": duplicate particle ids");
    return records;
}

// ---------------------------------------------------------------------------
// Run configuration: flat key=value text, one pair per line, '#' comments.

struct SynthConfig {
    double ks = 200.0;
    double kd = 4.0;
    double ks_max = 0.0; // > ks: log-space spread of per-particle stiffness
    double kd_max = 0.0;
    double spike_fraction = 0.0;
    double spike_magnitude = 0.0;
    int substeps = 100;
};

struct RunConfig {
    FitConfig fit;
    SynthConfig synth;
};

[[nodiscard]] inline RunConfig parse_run_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw io_error(io_error::Kind::unreadable, path + ": cannot open");

    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t comment = line.find('#');
        if (comment != std::string::npos)
            line.erase(comment);
        const auto trim = [](std::string s) {
            const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
            while (!s.empty() && is_space(s.front()))
                s.erase(s.begin());
            while (!s.empty() && is_space(s.back()))
                s.pop_back();
            return s;
        };
        line = trim(line);
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw io_error(io_error::Kind::malformed_header,
                           path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        const auto as_double = [&] {
            try {
                return std::stod(value);
            } catch (const std::exception&) {
                throw io_error(io_error::Kind::malformed_header,
                               path + ":" + std::to_string(line_no) + ": bad number '" + value + "'");
            }
        };
        const auto as_int = [&] { return static_cast<int>(as_double()); };
        const auto as_bool = [&] {
            if (value == "true" || value == "1" || value == "yes") return true;
            if (value == "false" || value == "0" || value == "no") return false;
            throw io_error(io_error::Kind::malformed_header,
                           path + ":" + std::to_string(line_no) + ": bad flag '" + value + "'");
        };

        if (key == "ga_population") cfg.fit.ga_population = as_int();
        else if (key == "ga_iterations") cfg.fit.ga_iterations = as_int();
        else if (key == "gd_iterations") cfg.fit.gd_iterations = as_int();
        else if (key == "gd_step") cfg.fit.gd_step = as_double();
        else if (key == "log_space") cfg.fit.log_space = as_bool();
        else if (key == "ks_min") cfg.fit.bounds.ks_min = as_double();
        else if (key == "ks_max") cfg.fit.bounds.ks_max = as_double();
        else if (key == "kd_min") cfg.fit.bounds.kd_min = as_double();
        else if (key == "kd_max") cfg.fit.bounds.kd_max = as_double();
        else if (key == "drop_fraction") cfg.fit.drop_fraction = as_double();
        else if (key == "regularization_weight") cfg.fit.regularization_weight = as_double();
        else if (key == "synth_ks") cfg.synth.ks = as_double();
        else if (key == "synth_kd") cfg.synth.kd = as_double();
        else if (key == "synth_ks_max") cfg.synth.ks_max = as_double();
        else if (key == "synth_kd_max") cfg.synth.kd_max = as_double();
        else if (key == "spike_fraction") cfg.synth.spike_fraction = as_double();
        else if (key == "spike_magnitude") cfg.synth.spike_magnitude = as_double();
        else if (key == "substeps") cfg.synth.substeps = as_int();
        else
            throw io_error(io_error::Kind::malformed_header,
                           path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }

    if (cfg.fit.drop_fraction < 0.0 || cfg.fit.drop_fraction >= 1.0)
        throw io_error(io_error::Kind::malformed_header, path + ": drop_fraction must be in [0, 1)");
    if (cfg.fit.bounds.ks_min <= 0.0 || cfg.fit.bounds.ks_max < cfg.fit.bounds.ks_min)
        throw io_error(io_error::Kind::malformed_header, path + ": bad stiffness bounds");
    if (cfg.fit.bounds.kd_min < 0.0 || cfg.fit.bounds.kd_max < cfg.fit.bounds.kd_min)
        throw io_error(io_error::Kind::malformed_header, path + ": bad damping bounds");
    return cfg;
}

} // namespace zspring
