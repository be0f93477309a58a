#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "prox/harness.hpp"

namespace prox {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 43> kColumns{
    "t",         "truth_x",   "truth_y",   "truth_z",    "truth_vx",   "truth_vy",   "truth_vz",  "truth_qw",
    "truth_qx",  "truth_qy",  "truth_qz",  "truth_wx",   "truth_wy",   "truth_wz",   "est_x",     "est_y",
    "est_z",     "est_vx",    "est_vy",    "est_vz",     "est_qw",     "est_qx",     "est_qy",    "est_qz",
    "sigma_x",   "sigma_y",   "sigma_z",   "mode",       "ref_x",      "ref_y",      "ref_z",     "force_x",
    "force_y",   "force_z",   "torque_x",  "torque_y",   "torque_z",   "range_flag", "range_d2",  "feature_flag",
    "feature_d2", "d",        "nees"};
constexpr std::size_t kColumnCount = kColumns.size();

void put(std::string& out, double v) {
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), res.ptr);
}

void put(std::string& out, const Vec3& v) {
    for (int i = 0; i < 3; ++i) {
        put(out, v(i));
        out += ',';
    }
}

void put(std::string& out, const Quaternion& q) {
    put(out, q.w);
    out += ',';
    put(out, q.v);
}

double take(std::string_view field) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw ConfigError("run csv: bad number '" + std::string(field) + "'");
    return v;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec3_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
json quat_json(const Quaternion& q) { return json::array({q.w, q.v.x(), q.v.y(), q.v.z()}); }
Quaternion quat_from(const json& j) {
    return {j.at(0).get<double>(), Vec3(j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>())};
}

json statistic_json(const Statistic& s) { return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; }

json stats_json(const MeasurementStats& s) {
    return {{"ranges", s.ranges},
            {"ranges_rejected", s.ranges_rejected},
            {"outliers_injected", s.outliers_injected},
            {"outliers_rejected", s.outliers_rejected},
            {"clean_rejected", s.clean_rejected},
            {"ranges_underweighted", s.ranges_underweighted},
            {"feature_frames", s.feature_frames},
            {"features_accepted", s.features_accepted},
            {"reacquisitions", s.reacquisitions}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void write_run_csv(std::ostream& os, const RunLog& log) {
    std::string line;
    for (std::size_t i = 0; i < kColumnCount; ++i) {
        if (i) line += ',';
        line += kColumns[i];
    }
    os << line << '\n';
    for (const LogRow& r : log.rows) {
        line.clear();
        put(line, r.t);
        line += ',';
        put(line, r.truth_position);
        put(line, r.truth_velocity);
        put(line, r.truth_q);
        put(line, r.truth_omega);
        put(line, r.est_position);
        put(line, r.est_velocity);
        put(line, r.est_q);
        put(line, r.sigma_pos);
        line += to_string(r.mode);
        line += ',';
        put(line, r.reference);
        put(line, r.force);
        put(line, r.torque);
        line += std::to_string(static_cast<int>(r.range_flag));
        line += ',';
        put(line, r.range_d2);
        line += ',';
        line += std::to_string(static_cast<int>(r.feature_flag));
        line += ',';
        put(line, r.feature_d2);
        line += ',';
        put(line, r.d);
        line += ',';
        put(line, r.nees);
        os << line << '\n';
    }
}

std::vector<LogRow> read_run_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("run csv: missing header");
    std::vector<LogRow> rows;
    std::vector<std::string_view> f;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        f.clear();
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            f.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (f.size() != kColumnCount) throw ConfigError("run csv: wrong column count");
        std::size_t i = 0;
        auto num = [&] { return take(f[i++]); };
        auto v3 = [&] {
            const double x = num(), y = num(), z = num();
            return Vec3(x, y, z);
        };
        auto quat = [&] {
            const double w = num();
            return Quaternion{w, v3()};
        };
        LogRow r;
        r.t = num();
        r.truth_position = v3();
        r.truth_velocity = v3();
        r.truth_q = quat();
        r.truth_omega = v3();
        r.est_position = v3();
        r.est_velocity = v3();
        r.est_q = quat();
        r.sigma_pos = v3();
        try {
            r.mode = mode_from_string(f[i++]);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("run csv: ") + e.what());
        }
        r.reference = v3();
        r.force = v3();
        r.torque = v3();
        r.range_flag = static_cast<UpdateFlag>(static_cast<int>(num()));
        r.range_d2 = num();
        r.feature_flag = static_cast<UpdateFlag>(static_cast<int>(num()));
        r.feature_d2 = num();
        r.d = num();
        r.nees = num();
        rows.push_back(r);
    }
    return rows;
}

json run_meta_to_json(const RunLog& log) {
    json events = json::array();
    for (const SwitchEvent& e : log.events)
        events.push_back({{"t", e.t},
                          {"from", to_string(e.from)},
                          {"to", to_string(e.to)},
                          {"r", e.r},
                          {"trigger", e.trigger},
                          {"trigger_value", e.trigger_value},
                          {"radius", e.radius},
                          {"radius_value", e.radius_value}});
    return {{"seed", log.seed},
            {"policy", to_string(log.policy)},
            {"status", to_string(log.status)},
            {"message", log.message},
            {"dock_point", vec3_json(log.dock_point)},
            {"dock_attitude", quat_json(log.dock_attitude)},
            {"r_1", log.r_1},
            {"r_2", log.r_2},
            {"rows", log.rows.size()},
            {"events", events},
            {"measurements", stats_json(log.stats)},
            {"metrics", metrics_to_json(compute_metrics(log))}};
}

RunLog run_log_from_parts(const json& meta, std::vector<LogRow> rows) {
    RunLog log;
    try {
        log.seed = meta.at("seed").get<std::uint64_t>();
        log.policy = policy_from_string(meta.at("policy").get<std::string>());
        log.status = status_from_string(meta.at("status").get<std::string>());
        log.message = meta.at("message").get<std::string>();
        log.dock_point = vec3_from(meta.at("dock_point"));
        log.dock_attitude = quat_from(meta.at("dock_attitude"));
        log.r_1 = meta.at("r_1").get<double>();
        log.r_2 = meta.at("r_2").get<double>();
        for (const json& e : meta.at("events")) {
            SwitchEvent ev;
            ev.t = e.at("t").get<double>();
            ev.from = mode_from_string(e.at("from").get<std::string>());
            ev.to = mode_from_string(e.at("to").get<std::string>());
            ev.r = e.at("r").get<double>();
            ev.trigger = e.at("trigger").get<std::string>();
            ev.trigger_value = e.at("trigger_value").get<double>();
            ev.radius = e.at("radius").get<std::string>();
            ev.radius_value = e.at("radius_value").get<double>();
            log.events.push_back(ev);
        }
        const json& s = meta.at("measurements");
        log.stats.ranges = s.at("ranges").get<long>();
        log.stats.ranges_rejected = s.at("ranges_rejected").get<long>();
        log.stats.outliers_injected = s.at("outliers_injected").get<long>();
        log.stats.outliers_rejected = s.at("outliers_rejected").get<long>();
        log.stats.clean_rejected = s.at("clean_rejected").get<long>();
        log.stats.ranges_underweighted = s.at("ranges_underweighted").get<long>();
        log.stats.feature_frames = s.at("feature_frames").get<long>();
        log.stats.features_accepted = s.at("features_accepted").get<long>();
        log.stats.reacquisitions = s.at("reacquisitions").get<long>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run metadata: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("run metadata: ") + e.what());
    }
    log.rows = std::move(rows);
    return log;
}

json metrics_to_json(const Metrics& m) {
    return {{"position_error_cm", optional_json(m.position_error_cm)},
            {"attitude_error_rad", optional_json(m.attitude_error_rad)},
            {"docking_time_s", optional_json(m.docking_time)},
            {"total_impulse_Ns", m.total_impulse}};
}

json summary_to_json(const MetricsSummary& s) {
    json runs = json::array();
    for (const RunSummary& r : s.per_run)
        runs.push_back({{"index", r.index},
                        {"seed", r.seed},
                        {"status", to_string(r.status)},
                        {"metrics", metrics_to_json(r.metrics)},
                        {"r_1", r.r_1},
                        {"r_2", r.r_2},
                        {"measurements", stats_json(r.stats)}});
    return {{"policy", to_string(s.policy)},
            {"runs", s.runs},
            {"docked", s.docked},
            {"success_rate", s.success_rate},
            {"means_over", "docked runs only"},
            {"position_error_cm", statistic_json(s.position_error_cm)},
            {"attitude_error_rad", statistic_json(s.attitude_error_rad)},
            {"docking_time_s", statistic_json(s.docking_time)},
            {"total_impulse_Ns", statistic_json(s.total_impulse)},
            {"per_run", runs}};
}

json comparison_to_json(const ComparisonReport& c) {
    return {{"time_reduction_pct", c.time_reduction_pct},
            {"impulse_reduction_pct", c.impulse_reduction_pct},
            {"fixed", summary_to_json(c.baseline)},
            {"adaptive", summary_to_json(c.candidate)}};
}

json placement_to_json(const PlacementReport& r) {
    json layouts = json::array();
    for (const LayoutReport& l : r.layouts) {
        json probes = json::array();
        for (const ProbeResult& p : l.probes)
            probes.push_back({{"point", vec3_json(p.point)},
                              {"max_sigma_pos", p.max_sigma_pos},
                              {"pi2_min", p.pi2_min},
                              {"pi2_max", p.pi2_max}});
        layouts.push_back({{"name", l.name},
                           {"best_sigma_pos", l.best_sigma_pos},
                           {"worst_sigma_pos", l.worst_sigma_pos},
                           {"best_pi2", l.best_pi2},
                           {"worst_pi2", l.worst_pi2},
                           {"probes", probes}});
    }
    return {{"layouts", layouts}};
}

PlacementInput load_placement_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open layouts file: " + path.string());
    PlacementInput out;
    try {
        const json j = json::parse(in);
        for (const json& l : j.at("layouts")) {
            AnchorLayout layout;
            layout.name = l.at("name").get<std::string>();
            for (const json& a : l.at("anchors")) layout.anchors.push_back(vec3_from(a));
            out.layouts.push_back(std::move(layout));
        }
        for (const json& p : j.at("probe_points")) out.probe_points.push_back(vec3_from(p));
        PlacementOptions& o = out.options;
        if (j.contains("duration")) o.duration = j["duration"].get<double>();
        if (j.contains("representative_d")) o.representative_d = j["representative_d"].get<std::vector<double>>();
        if (j.contains("representative_fractions"))
            o.representative_fractions = j["representative_fractions"].get<std::vector<double>>();
        if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ConfigError("layouts " + path.string() + ": " + e.what());
    }
    if (out.layouts.empty() || out.probe_points.empty())
        throw ConfigError("layouts file needs at least one layout and one probe point");
    return out;
}

}  // namespace prox
