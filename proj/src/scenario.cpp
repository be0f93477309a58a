#include "prox/scenario.hpp"

#include <array>
#include <fstream>

namespace prox {

using nlohmann::json;

namespace {

Vec3 vec3_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + ": expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Mat3 mat3_from(const json& j, const char* what) {
    if (j.is_array() && j.size() == 3 && j[0].is_number()) return vec3_from(j, what).asDiagonal();
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + ": expected 3x3 matrix or diagonal");
    Mat3 m;
    for (int r = 0; r < 3; ++r) m.row(r) = vec3_from(j[r], what).transpose();
    return m;
}

json mat3_to(const Mat3& m) { return json::array({vec3_to(m.row(0)), vec3_to(m.row(1)), vec3_to(m.row(2))}); }

Vec3 deg(const Vec3& v) { return v * (M_PI / 180.0); }

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_vec3(const json& j, const char* key, Vec3& out) {
    if (j.contains(key)) out = vec3_from(j.at(key), key);
}

void read_mat3(const json& j, const char* key, Mat3& out) {
    if (j.contains(key)) out = mat3_from(j.at(key), key);
}

constexpr std::array<std::string_view, 3> kPolicyNames{"adaptive", "fixed", "hold"};

}  // namespace

std::string_view to_string(GuidancePolicy p) { return kPolicyNames[static_cast<std::size_t>(p)]; }

GuidancePolicy policy_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kPolicyNames.size(); ++i)
        if (kPolicyNames[i] == s) return static_cast<GuidancePolicy>(i);
    throw ConfigError("unknown guidance policy: " + std::string(s));
}

void ScenarioConfig::validate() const {
    try {
        body.validate();
        uwb.validate();
        gyro.validate();
        camera.validate();
        guidance.switching.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (!(timing.dt > 0.0 && timing.dt <= 0.1)) throw ConfigError("timing.dt must lie in (0, 0.1]");
    if (timing.control_divider < 1 || timing.uwb_divider < 1 || timing.camera_divider < 1 ||
        timing.guidance_divider < 1)
        throw ConfigError("timing dividers must be >= 1");
    if (!(timing.max_duration > 0.0)) throw ConfigError("timing.max_duration must be positive");
    if (uwb.anchors.size() < 3) throw ConfigError("uwb: initialisation needs at least three anchors");
    if (!(guidance.fixed.r_1 < guidance.fixed.r_2)) throw ConfigError("guidance.fixed: r1 must be below r2");
    if (!(guidance.params.cruise_speed > 0.0 && guidance.params.align_speed > 0.0 &&
          guidance.params.terminal_speed > 0.0))
        throw ConfigError("guidance speeds must be positive");
    if (!(truth_accel_noise_density >= 0.0) || !(filter.accel_noise_density >= 0.0))
        throw ConfigError("noise densities must be non-negative");
    if (!(control.r_force > 0.0 && control.q_position >= 0.0 && control.q_velocity >= 0.0 &&
          control.q_integral >= 0.0 && control.force_limit > 0.0 && control.integral_band > 0.0))
        throw ConfigError("control weights invalid");
    if (!(control.attitude.kp > 0.0 && control.attitude.kd > 0.0 && control.attitude.torque_limit > 0.0))
        throw ConfigError("attitude gains must be positive");
}

ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    cfg.body.mass = 1.0;
    cfg.body.inertia = Vec3(1.6e-3, 1.8e-3, 2.0e-3).asDiagonal();
    cfg.body.mothership_inertia = Vec3(40.0, 45.0, 50.0).asDiagonal();
    cfg.body.tag_lever_arm = Vec3(0.05, 0.05, 0.0);
    cfg.target.position = Vec3(1.0, 2.0, 1.0);
    cfg.target.q = euler_xyz_to_quat(deg(cfg.target_euler_deg));
    cfg.target.face_normal = Vec3::UnitZ();
    cfg.uwb.anchors = {Vec3(1, -0.2, 0.5), Vec3(1, 0.2, -0.5), Vec3(-1, 0.2, -0.5), Vec3(-1, -0.2, 0.5)};
    cfg.uwb.sigma = 0.02;
    cfg.uwb.outlier_probability = 0.05;
    cfg.uwb.outlier_bias_min = 0.2;
    cfg.uwb.outlier_bias_max = 1.0;
    // camera on the bottom face looking down the body -z axis
    cfg.camera.mount = Vec3(1.0, -1.0, -1.0).asDiagonal();
    cfg.camera.lever_arm = Vec3(0.0, 0.0, -0.05);
    cfg.camera.markers = default_marker_pattern();
    cfg.guidance.params.initial_attitude = euler_xyz_to_quat(deg(cfg.chaser.attitude_euler_deg));
    return cfg;
}

ScenarioConfig scenario_from_json(const json& j) {
    ScenarioConfig cfg = default_scenario();
    try {
        if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
        const std::string schema = j.value("schema", std::string{});
        if (schema != kScenarioSchema)
            throw ConfigError("scenario: unsupported schema '" + schema + "', expected " + kScenarioSchema);
        read(j, "name", cfg.name);

        if (j.contains("timing")) {
            const json& t = j["timing"];
            read(t, "dt", cfg.timing.dt);
            read(t, "control_divider", cfg.timing.control_divider);
            read(t, "uwb_divider", cfg.timing.uwb_divider);
            read(t, "camera_divider", cfg.timing.camera_divider);
            read(t, "guidance_divider", cfg.timing.guidance_divider);
            read(t, "max_duration", cfg.timing.max_duration);
        }
        if (j.contains("body")) {
            const json& b = j["body"];
            read(b, "mass", cfg.body.mass);
            read_mat3(b, "inertia", cfg.body.inertia);
            read_mat3(b, "mothership_inertia", cfg.body.mothership_inertia);
            read_vec3(b, "uwb_lever_arm", cfg.body.tag_lever_arm);
        }
        if (j.contains("chaser")) {
            const json& c = j["chaser"];
            read_vec3(c, "position", cfg.chaser.position);
            read_vec3(c, "velocity", cfg.chaser.velocity);
            read_vec3(c, "attitude_euler_deg", cfg.chaser.attitude_euler_deg);
            read_vec3(c, "omega_b", cfg.chaser.omega_b);
            read(c, "position_sigma", cfg.chaser.position_sigma);
        }
        if (j.contains("target")) {
            const json& t = j["target"];
            read_vec3(t, "position", cfg.target.position);
            read_vec3(t, "attitude_euler_deg", cfg.target_euler_deg);
            read_vec3(t, "face_normal", cfg.target.face_normal);
        }
        if (j.contains("uwb")) {
            const json& u = j["uwb"];
            if (u.contains("anchors")) {
                cfg.uwb.anchors.clear();
                for (const json& a : u["anchors"]) cfg.uwb.anchors.push_back(vec3_from(a, "uwb.anchors"));
            }
            read(u, "sigma", cfg.uwb.sigma);
            read(u, "outlier_probability", cfg.uwb.outlier_probability);
            read(u, "outlier_bias_min", cfg.uwb.outlier_bias_min);
            read(u, "outlier_bias_max", cfg.uwb.outlier_bias_max);
        }
        if (j.contains("gyro")) {
            read(j["gyro"], "noise_density", cfg.gyro.noise_density);
            read(j["gyro"], "sample_rate", cfg.gyro.sample_rate);
        }
        if (j.contains("camera")) {
            const json& c = j["camera"];
            read(c, "enabled", cfg.vision_enabled);
            if (c.contains("mount"))
                read_mat3(c, "mount", cfg.camera.mount);
            else if (c.contains("mount_euler_deg"))
                cfg.camera.mount = euler_xyz_to_dcm(deg(vec3_from(c["mount_euler_deg"], "camera.mount_euler_deg")))
                                       .transpose();
            read_vec3(c, "lever_arm", cfg.camera.lever_arm);
            if (c.contains("half_angle_deg")) cfg.camera.half_angle = deg2rad(c["half_angle_deg"].get<double>());
            read(c, "max_range", cfg.camera.max_range);
            read(c, "sigma", cfg.camera.sigma);
            if (c.contains("markers")) {
                const json& m = c["markers"];
                if (!m.is_array() || m.size() != 6) throw ConfigError("camera.markers: exactly 6 markers required");
                for (std::size_t k = 0; k < 6; ++k) cfg.camera.markers[k] = vec3_from(m[k], "camera.markers");
            }
        }
        if (j.contains("filter")) {
            const json& f = j["filter"];
            read(f, "accel_noise_density", cfg.filter.accel_noise_density);
            read(f, "init_position_sigma", cfg.filter.init_position_sigma);
            read(f, "init_velocity_sigma", cfg.filter.init_velocity_sigma);
            if (f.contains("init_attitude_sigma_deg"))
                cfg.filter.init_attitude_sigma = deg2rad(f["init_attitude_sigma_deg"].get<double>());
            read(f, "gate_probability", cfg.filter.gate_probability);
            read(f, "underweight_probability", cfg.filter.underweight_probability);
            read(f, "underweight_beta", cfg.filter.underweight_beta);
            read(f, "d_smoothing", cfg.filter.d_smoothing);
            read(f, "gn_iterations", cfg.filter.gn_iterations);
            read(f, "reacquire_rejections", cfg.filter.reacquire_rejections);
        }
        if (j.contains("truth")) {
            read(j["truth"], "accel_noise_density", cfg.truth_accel_noise_density);
            read(j["truth"], "sensor_noise", cfg.sensor_noise);
        }
        if (j.contains("control")) {
            const json& c = j["control"];
            read(c, "q_position", cfg.control.q_position);
            read(c, "q_velocity", cfg.control.q_velocity);
            read(c, "r_force", cfg.control.r_force);
            read(c, "q_integral", cfg.control.q_integral);
            read(c, "force_limit", cfg.control.force_limit);
            read(c, "integral_band", cfg.control.integral_band);
            read(c, "attitude_kp", cfg.control.attitude.kp);
            read(c, "attitude_kd", cfg.control.attitude.kd);
            read(c, "torque_limit", cfg.control.attitude.torque_limit);
        }
        if (j.contains("guidance")) {
            const json& g = j["guidance"];
            if (g.contains("policy")) cfg.guidance.policy = policy_from_string(g["policy"].get<std::string>());
            SwitchingState& s = cfg.guidance.switching;
            read(g, "r_t", s.r_t);
            read(g, "r_d", s.r_d);
            read(g, "r1_init", s.r_1);
            read(g, "r2_init", s.r_2);
            read(g, "a11_threshold", s.a11_threshold);
            read(g, "pi2_threshold", s.pi2_threshold);
            read(g, "fixed_r2", cfg.guidance.fixed.r_2);
            read(g, "fixed_r1", cfg.guidance.fixed.r_1);
            GuidanceParams& p = cfg.guidance.params;
            read(g, "cruise_speed", p.cruise_speed);
            read(g, "align_speed", p.align_speed);
            read(g, "terminal_speed", p.terminal_speed);
            read(g, "align_tolerance", p.align_tolerance);
            read(g, "dock_position_tolerance", p.dock_position_tolerance);
            read(g, "dock_attitude_tolerance", p.dock_attitude_tolerance);
            read(g, "dock_speed_tolerance", p.dock_speed_tolerance);
            read(g, "skip_align_vision_time", p.skip_align_vision_time);
            read(g, "ready_sigma", cfg.guidance.ready_sigma);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    cfg.target.q = euler_xyz_to_quat(deg(cfg.target_euler_deg));
    cfg.guidance.params.initial_attitude = euler_xyz_to_quat(deg(cfg.chaser.attitude_euler_deg));
    cfg.validate();
    return cfg;
}

json scenario_to_json(const ScenarioConfig& cfg) {
    json anchors = json::array();
    for (const Vec3& a : cfg.uwb.anchors) anchors.push_back(vec3_to(a));
    json markers = json::array();
    for (const Vec3& m : cfg.camera.markers) markers.push_back(vec3_to(m));
    const auto& s = cfg.guidance.switching;
    const auto& p = cfg.guidance.params;
    return {
        {"schema", kScenarioSchema},
        {"name", cfg.name},
        {"timing",
         {{"dt", cfg.timing.dt},
          {"control_divider", cfg.timing.control_divider},
          {"uwb_divider", cfg.timing.uwb_divider},
          {"camera_divider", cfg.timing.camera_divider},
          {"guidance_divider", cfg.timing.guidance_divider},
          {"max_duration", cfg.timing.max_duration}}},
        {"body",
         {{"mass", cfg.body.mass},
          {"inertia", mat3_to(cfg.body.inertia)},
          {"mothership_inertia", mat3_to(cfg.body.mothership_inertia)},
          {"uwb_lever_arm", vec3_to(cfg.body.tag_lever_arm)}}},
        {"chaser",
         {{"position", vec3_to(cfg.chaser.position)},
          {"velocity", vec3_to(cfg.chaser.velocity)},
          {"attitude_euler_deg", vec3_to(cfg.chaser.attitude_euler_deg)},
          {"omega_b", vec3_to(cfg.chaser.omega_b)},
          {"position_sigma", cfg.chaser.position_sigma}}},
        {"target",
         {{"position", vec3_to(cfg.target.position)},
          {"attitude_euler_deg", vec3_to(cfg.target_euler_deg)},
          {"face_normal", vec3_to(cfg.target.face_normal)}}},
        {"uwb",
         {{"anchors", anchors},
          {"sigma", cfg.uwb.sigma},
          {"outlier_probability", cfg.uwb.outlier_probability},
          {"outlier_bias_min", cfg.uwb.outlier_bias_min},
          {"outlier_bias_max", cfg.uwb.outlier_bias_max}}},
        {"gyro", {{"noise_density", cfg.gyro.noise_density}, {"sample_rate", cfg.gyro.sample_rate}}},
        {"camera",
         {{"enabled", cfg.vision_enabled},
          {"mount", mat3_to(cfg.camera.mount)},
          {"lever_arm", vec3_to(cfg.camera.lever_arm)},
          {"half_angle_deg", cfg.camera.half_angle * 180.0 / M_PI},
          {"max_range", cfg.camera.max_range},
          {"sigma", cfg.camera.sigma},
          {"markers", markers}}},
        {"filter",
         {{"accel_noise_density", cfg.filter.accel_noise_density},
          {"init_position_sigma", cfg.filter.init_position_sigma},
          {"init_velocity_sigma", cfg.filter.init_velocity_sigma},
          {"init_attitude_sigma_deg", cfg.filter.init_attitude_sigma * 180.0 / M_PI},
          {"gate_probability", cfg.filter.gate_probability},
          {"underweight_probability", cfg.filter.underweight_probability},
          {"underweight_beta", cfg.filter.underweight_beta},
          {"d_smoothing", cfg.filter.d_smoothing},
          {"gn_iterations", cfg.filter.gn_iterations},
          {"reacquire_rejections", cfg.filter.reacquire_rejections}}},
        {"truth", {{"accel_noise_density", cfg.truth_accel_noise_density}, {"sensor_noise", cfg.sensor_noise}}},
        {"control",
         {{"q_position", cfg.control.q_position},
          {"q_velocity", cfg.control.q_velocity},
          {"r_force", cfg.control.r_force},
          {"q_integral", cfg.control.q_integral},
          {"force_limit", cfg.control.force_limit},
          {"integral_band", cfg.control.integral_band},
          {"attitude_kp", cfg.control.attitude.kp},
          {"attitude_kd", cfg.control.attitude.kd},
          {"torque_limit", cfg.control.attitude.torque_limit}}},
        {"guidance",
         {{"policy", to_string(cfg.guidance.policy)},
          {"r_t", s.r_t},
          {"r_d", s.r_d},
          {"r1_init", s.r_1},
          {"r2_init", s.r_2},
          {"a11_threshold", s.a11_threshold},
          {"pi2_threshold", s.pi2_threshold},
          {"fixed_r2", cfg.guidance.fixed.r_2},
          {"fixed_r1", cfg.guidance.fixed.r_1},
          {"cruise_speed", p.cruise_speed},
          {"align_speed", p.align_speed},
          {"terminal_speed", p.terminal_speed},
          {"align_tolerance", p.align_tolerance},
          {"dock_position_tolerance", p.dock_position_tolerance},
          {"dock_attitude_tolerance", p.dock_attitude_tolerance},
          {"dock_speed_tolerance", p.dock_speed_tolerance},
          {"skip_align_vision_time", p.skip_align_vision_time},
          {"ready_sigma", cfg.guidance.ready_sigma}}},
    };
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("scenario " + path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

}  // namespace prox
