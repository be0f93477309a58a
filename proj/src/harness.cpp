#include "prox/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

namespace prox {

namespace {

constexpr std::array<std::string_view, 3> kStatusNames{"Docked", "Timeout", "Diverged"};

// Independent random streams per run.
enum Stream : std::uint64_t { kInit = 1, kDisturbance = 2, kGyro = 3, kUwb = 4, kCamera = 5 };

struct SimSensors {
    UwbAnchorSet uwb;
    GyroSpec gyro;
    CameraSpec camera;
    double disturbance_sigma{0.0};
};

SimSensors simulated_sensors(const ScenarioConfig& cfg) {
    SimSensors s{cfg.uwb, cfg.gyro, cfg.camera, 0.0};
    if (cfg.sensor_noise) {
        s.disturbance_sigma = std::sqrt(cfg.truth_accel_noise_density / cfg.timing.dt);
    } else {
        s.uwb.sigma = 0.0;
        s.uwb.outlier_probability = 0.0;
        s.gyro.noise_density = 0.0;
        s.camera.sigma = 0.0;
    }
    return s;
}

double nees(const TandemEstimator& est, const TrueState& truth, const RigidBodyParams& body) {
    const auto [p, v] = sensor_point_state(truth, body);
    Vec6 x;
    x << p, v;
    const Vec6 e = x - est.translational().x;
    return e.dot(est.translational().P.ldlt().solve(e));
}

bool report_finite(const EstimateReport& r) {
    return r.position.allFinite() && r.velocity.allFinite() && r.q.v.allFinite() && std::isfinite(r.q.w) &&
           r.sigma_pos.allFinite();
}

GuidanceDecisionInputs decision_inputs(const EstimateReport& est, const ScenarioConfig& cfg,
                                       const SwitchingState& s, double vision_streak, bool arrived) {
    const TargetPose& target = cfg.target;
    const Quaternion dock_q = docking_attitude(target);
    GuidanceDecisionInputs in;
    in.r = (est.position - target.position).norm();
    in.d = est.d;
    in.q_e_vec_norm = error_quat(est.q, dock_q).v.norm();
    in.max_sigma_pos = est.max_sigma_pos();
    in.sigma_uwb = cfg.uwb.sigma;
    in.vision_streak = vision_streak;
    in.alignment_error = (est.position - alignment_point(target, s.r_1)).norm();
    in.dock_error = (est.position - alignment_point(target, s.r_d)).norm();
    in.speed = est.velocity.norm();
    in.attitude_error = rotation_angle(error_quat(est.q, dock_q));
    in.reference_arrived = arrived;
    return in;
}

class Runner {
public:
    Runner(const ScenarioConfig& cfg, const LqrDesign& design, std::uint64_t seed)
        : cfg_(cfg),
          design_(design),
          sim_(simulated_sensors(cfg)),
          est_(cfg.filter, cfg.body, cfg.uwb, cfg.gyro, cfg.camera, cfg.target),
          rng_init_(derive_seed(seed, kInit)),
          rng_dist_(derive_seed(seed, kDisturbance)),
          rng_gyro_(derive_seed(seed, kGyro)),
          rng_uwb_(derive_seed(seed, kUwb)),
          rng_cam_(derive_seed(seed, kCamera)),
          switching_(cfg.guidance.switching) {
        if (cfg.guidance.policy == GuidancePolicy::Fixed) {
            switching_.r_2 = cfg.guidance.fixed.r_2;
            switching_.r_1 = cfg.guidance.fixed.r_1;
        }
        log_.seed = seed;
        log_.policy = cfg.guidance.policy;
        log_.dock_point = alignment_point(cfg.target, cfg.guidance.switching.r_d);
        log_.dock_attitude = docking_attitude(cfg.target);
    }

    RunLog run() {
        try {
            initialize();
            loop();
        } catch (const PropagationError& e) {
            diverge(e.what());
        } catch (const NumericalError& e) {
            diverge(e.what());
        } catch (const DomainError& e) {
            diverge(e.what());
        }
        log_.r_2 = switching_.r_2;
        log_.r_1 = switching_.r_1;
        return std::move(log_);
    }

private:
    void initialize() {
        const ChaserConfig& c = cfg_.chaser;
        truth_.rho = c.position;
        truth_.rho_dot = c.velocity;
        truth_.q = euler_xyz_to_quat(c.attitude_euler_deg * (M_PI / 180.0));
        truth_.omega_b = c.omega_b;
        Quaternion q0 = truth_.q;
        if (cfg_.sensor_noise) {
            truth_.rho += rng_init_.normal3(c.position_sigma);
            q0 = quat_multiply(small_angle_to_quat(rng_init_.normal3(cfg_.filter.init_attitude_sigma)), truth_.q);
        }
        std::vector<RangeMeasurement> ranges;
        for (std::size_t a = 0; a < sim_.uwb.anchors.size(); ++a)
            ranges.push_back(measure_range(truth_, sim_.uwb, a, cfg_.body, rng_uwb_, 0.0));
        const Vec3 guess = c.position + rotate(q0, cfg_.body.tag_lever_arm);
        est_.initialize(ranges, guess, q0);
        hold_point_ = est_.report().position;
    }

    void diverge(const std::string& what) {
        log_.status = RunStatus::Diverged;
        log_.message = what;
    }

    void guidance_tick(const EstimateReport& est, double t) {
        if (!started_) {
            if (cfg_.guidance.policy == GuidancePolicy::Hold || est.max_sigma_pos() >= cfg_.guidance.ready_sigma)
                return;
            started_ = true;
            carrot_ = CarrotReference(est.position);
        }
        const GuidanceDecisionInputs in = decision_inputs(est, cfg_, switching_, vision_streak_, carrot_.arrived());
        const SwitchingResult res =
            cfg_.guidance.policy == GuidancePolicy::Fixed
                ? fixed_switching_step(mode_, in, cfg_.guidance.fixed, switching_, cfg_.guidance.params, t)
                : switching_step(mode_, in, switching_, cfg_.guidance.params, t);
        switching_ = res.state;
        mode_ = res.mode;
        if (res.event) log_.events.push_back(*res.event);
    }

    ControlInput control_tick(const EstimateReport& est) {
        const double ctrl_dt = cfg_.timing.dt * cfg_.timing.control_divider;
        ControlInput u;
        if (cfg_.guidance.policy == GuidancePolicy::Hold) {
            // station keeping on the initial estimate
            reference_ = hold_point_;
            auto [force, integ] = translational_control(est, {hold_point_, Vec3::Zero()}, design_, integral_);
            integral_ = integ;
            u.force = force;
            u.torque = attitude_control(est.q, cfg_.guidance.params.initial_attitude, est.omega_b,
                                        cfg_.control.attitude);
            return u;
        }
        if (!started_) {
            reference_ = hold_point_;
            u.torque = attitude_control(est.q, cfg_.guidance.params.initial_attitude, est.omega_b,
                                        cfg_.control.attitude);
            return u;
        }
        const ModeSetpoint sp = mode_setpoint(mode_, est, cfg_.target, switching_, cfg_.guidance.params);
        const TranslationalSetpoint ts = carrot_.advance(sp.position, sp.speed, ctrl_dt);
        reference_ = ts.position;
        auto [force, integ] = translational_control(est, ts, design_, integral_);
        integral_ = integ;
        u.force = force;
        u.torque = attitude_control(est.q, sp.attitude, est.omega_b, cfg_.control.attitude);
        return u;
    }

    void log_row(double t, const EstimateReport& est, const ControlInput& u) {
        LogRow row;
        row.t = t;
        row.truth_position = truth_.rho;
        row.truth_velocity = truth_.rho_dot;
        row.truth_q = truth_.q;
        row.truth_omega = truth_.omega_b;
        row.est_position = est.position;
        row.est_velocity = est.velocity;
        row.est_q = est.q;
        row.sigma_pos = est.sigma_pos;
        row.mode = mode_;
        row.reference = reference_;
        row.force = u.force;
        row.torque = u.torque;
        row.range_flag = range_flag_;
        row.range_d2 = range_d2_;
        row.feature_flag = feature_flag_;
        row.feature_d2 = feature_d2_;
        row.d = est.d;
        row.nees = nees(est_, truth_, cfg_.body);
        log_.rows.push_back(row);
        range_flag_ = feature_flag_ = UpdateFlag::None;
        range_d2_ = feature_d2_ = 0.0;
    }

    void range_tick(double t) {
        const RangeMeasurement z = measure_range(truth_, sim_.uwb, next_anchor_, cfg_.body, rng_uwb_, t);
        next_anchor_ = (next_anchor_ + 1) % sim_.uwb.anchors.size();
        const RangeUpdateResult res = est_.update_range(z);
        MeasurementStats& s = log_.stats;
        ++s.ranges;
        s.reacquisitions = est_.reacquisitions();
        if (z.injected_outlier) ++s.outliers_injected;
        if (res.underweighted) ++s.ranges_underweighted;
        range_d2_ = res.d2;
        if (res.skipped) {
            range_flag_ = UpdateFlag::Skipped;
        } else if (res.accepted) {
            range_flag_ = UpdateFlag::Accepted;
        } else {
            range_flag_ = UpdateFlag::Rejected;
            ++s.ranges_rejected;
            if (z.injected_outlier)
                ++s.outliers_rejected;
            else
                ++s.clean_rejected;
        }
    }

    void camera_tick(double t) {
        const double cam_dt = cfg_.timing.dt * cfg_.timing.camera_divider;
        const std::optional<FeatureMeasurement> z = measure_features(truth_, sim_.camera, cfg_.target, rng_cam_, t);
        if (!z) {
            vision_streak_ = 0.0;
            return;
        }
        ++log_.stats.feature_frames;
        const FeatureUpdateResult res = est_.update_features(*z);
        feature_d2_ = res.d2;
        if (res.accepted) {
            ++log_.stats.features_accepted;
            feature_flag_ = UpdateFlag::Accepted;
            vision_streak_ += cam_dt;
        } else {
            feature_flag_ = UpdateFlag::Rejected;
            vision_streak_ = 0.0;
        }
    }

    void loop() {
        const TimingConfig& tm = cfg_.timing;
        const auto max_steps = static_cast<long>(std::ceil(tm.max_duration / tm.dt - 1e-9));
        ControlInput u;
        for (long k = 0;; ++k) {
            const double t = static_cast<double>(k) * tm.dt;
            EstimateReport est = est_.report();
            if (!truth_.finite() || !report_finite(est)) {
                diverge("non-finite state");
                return;
            }
            if (k % tm.guidance_divider == 0) guidance_tick(est, t);
            if (mode_ == GuidanceMode::Complete) {
                log_row(t, est, ControlInput{});
                log_.status = RunStatus::Docked;
                return;
            }
            if (k >= max_steps) {
                log_row(t, est, u);
                log_.status = RunStatus::Timeout;
                return;
            }
            if (k % tm.control_divider == 0) {
                u = control_tick(est);
                log_row(t, est, u);
            }

            const GyroMeasurement gyro = measure_gyro(truth_, sim_.gyro, rng_gyro_, t);
            const Vec3 disturbance = rng_dist_.normal3(sim_.disturbance_sigma);
            truth_ = propagate_truth(truth_, u, cfg_.body, tm.dt, disturbance);
            est_.predict(gyro, u, tm.dt);

            const long next = k + 1;
            const double t_next = static_cast<double>(next) * tm.dt;
            if (next % tm.uwb_divider == 0) range_tick(t_next);
            if (cfg_.vision_enabled && next % tm.camera_divider == 0) camera_tick(t_next);
        }
    }

    const ScenarioConfig& cfg_;
    const LqrDesign& design_;
    SimSensors sim_;
    TandemEstimator est_;
    RandomStream rng_init_, rng_dist_, rng_gyro_, rng_uwb_, rng_cam_;
    TrueState truth_;
    RunLog log_;

    GuidanceMode mode_{GuidanceMode::LOS};
    SwitchingState switching_;
    CarrotReference carrot_;
    IntegralState integral_;
    bool started_{false};
    double vision_streak_{0.0};
    Vec3 hold_point_{Vec3::Zero()};
    Vec3 reference_{Vec3::Zero()};
    std::size_t next_anchor_{0};

    UpdateFlag range_flag_{UpdateFlag::None};
    double range_d2_{0.0};
    UpdateFlag feature_flag_{UpdateFlag::None};
    double feature_d2_{0.0};
};

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::string_view to_string(RunStatus s) { return kStatusNames[static_cast<std::size_t>(s)]; }

RunStatus status_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kStatusNames.size(); ++i)
        if (kStatusNames[i] == s) return static_cast<RunStatus>(i);
    throw ConfigError("unknown run status: " + std::string(s));
}

bool LogRow::operator==(const LogRow& o) const {
    auto qeq = [](const Quaternion& a, const Quaternion& b) { return a.w == b.w && a.v == b.v; };
    return t == o.t && truth_position == o.truth_position && truth_velocity == o.truth_velocity &&
           qeq(truth_q, o.truth_q) && truth_omega == o.truth_omega && est_position == o.est_position &&
           est_velocity == o.est_velocity && qeq(est_q, o.est_q) && sigma_pos == o.sigma_pos && mode == o.mode &&
           reference == o.reference && force == o.force && torque == o.torque && range_flag == o.range_flag &&
           range_d2 == o.range_d2 && feature_flag == o.feature_flag && feature_d2 == o.feature_d2 && d == o.d &&
           nees == o.nees;
}

bool operator==(const RunLog& a, const RunLog& b) {
    auto ev_eq = [](const SwitchEvent& x, const SwitchEvent& y) {
        return x.t == y.t && x.from == y.from && x.to == y.to && x.r == y.r && x.trigger == y.trigger &&
               x.trigger_value == y.trigger_value && x.radius == y.radius && x.radius_value == y.radius_value;
    };
    return a.seed == b.seed && a.policy == b.policy && a.status == b.status && a.message == b.message &&
           a.dock_point == b.dock_point && a.dock_attitude.w == b.dock_attitude.w &&
           a.dock_attitude.v == b.dock_attitude.v && a.r_1 == b.r_1 && a.r_2 == b.r_2 && a.rows == b.rows &&
           std::equal(a.events.begin(), a.events.end(), b.events.begin(), b.events.end(), ev_eq) &&
           a.stats == b.stats;
}

LqrDesign design_translational_controller(const ScenarioConfig& cfg) {
    const double ctrl_dt = cfg.timing.dt * cfg.timing.control_divider;
    const auto [A, B] = translational_plant(cfg.body.mass, ctrl_dt);
    Eigen::VectorXd qd(6);
    qd << Vec3::Constant(cfg.control.q_position), Vec3::Constant(cfg.control.q_velocity);
    const Eigen::MatrixXd Q = qd.asDiagonal();
    const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(3, 3) * cfg.control.r_force;
    const Eigen::MatrixXd Qi = Eigen::MatrixXd::Identity(3, 3) * cfg.control.q_integral;
    LqrDesign d = lqr_design(A, B, Q, R, Qi, ctrl_dt);
    d.force_limit = cfg.control.force_limit;
    d.integral_band = cfg.control.integral_band;
    return d;
}

PreparedScenario::PreparedScenario(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    design_ = design_translational_controller(cfg_);
}

RunLog PreparedScenario::run(std::uint64_t seed) const { return Runner(cfg_, design_, seed).run(); }

RunLog run_scenario(const ScenarioConfig& cfg, std::uint64_t seed) { return PreparedScenario(cfg).run(seed); }

Metrics compute_metrics(const RunLog& log) {
    Metrics m;
    for (std::size_t i = 1; i < log.rows.size(); ++i) {
        const LogRow& prev = log.rows[i - 1];
        m.total_impulse += prev.force.cwiseAbs().sum() * (log.rows[i].t - prev.t);
    }
    if (log.status != RunStatus::Docked || log.rows.empty()) return m;
    const LogRow& last = log.rows.back();
    m.position_error_cm = 100.0 * (last.truth_position - log.dock_point).norm();
    m.attitude_error_rad = rotation_angle(error_quat(last.truth_q, log.dock_attitude));
    m.docking_time = last.t;
    return m;
}

Statistic summarize(const std::vector<double>& values) {
    Statistic s;
    s.count = values.size();
    if (values.empty()) return s;
    s.mean = mean_of(values);
    if (values.size() > 1) {
        double acc = 0.0;
        for (double v : values) acc += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(acc / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t index) { return derive_seed(base_seed, index); }

MetricsSummary summarize_runs(GuidancePolicy policy, std::vector<RunSummary> runs) {
    std::sort(runs.begin(), runs.end(), [](const RunSummary& a, const RunSummary& b) { return a.index < b.index; });
    MetricsSummary s;
    s.policy = policy;
    s.runs = runs.size();
    std::vector<double> pos, att, time, impulse;
    for (const RunSummary& r : runs) {
        if (r.status != RunStatus::Docked) continue;
        ++s.docked;
        pos.push_back(*r.metrics.position_error_cm);
        att.push_back(*r.metrics.attitude_error_rad);
        time.push_back(*r.metrics.docking_time);
        impulse.push_back(r.metrics.total_impulse);
    }
    s.success_rate = s.runs ? static_cast<double>(s.docked) / static_cast<double>(s.runs) : 0.0;
    s.position_error_cm = summarize(pos);
    s.attitude_error_rad = summarize(att);
    s.docking_time = summarize(time);
    s.total_impulse = summarize(impulse);
    s.per_run = std::move(runs);
    return s;
}

MetricsSummary monte_carlo(const ScenarioConfig& cfg, std::size_t runs, std::uint64_t base_seed,
                           GuidancePolicy policy, unsigned threads) {
    if (runs == 0) throw DomainError("monte_carlo: need at least one run");
    ScenarioConfig c = cfg;
    c.guidance.policy = policy;
    const PreparedScenario prepared(c);

    std::vector<RunSummary> results(runs);
    auto one = [&](std::size_t i) {
        const std::uint64_t seed = run_seed(base_seed, i);
        const RunLog log = prepared.run(seed);
        results[i] = {i, seed, log.status, compute_metrics(log), log.r_1, log.r_2, log.stats};
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, runs));
    if (threads <= 1) {
        for (std::size_t i = 0; i < runs; ++i) one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < runs; i = next++) one(i);
            });
        for (std::thread& th : pool) th.join();
    }
    return summarize_runs(policy, std::move(results));
}

ComparisonReport compare_summaries(MetricsSummary baseline, MetricsSummary candidate) {
    ComparisonReport r;
    auto reduction = [](double base, double cand) { return base != 0.0 ? 100.0 * (base - cand) / base : 0.0; };
    r.time_reduction_pct = reduction(baseline.docking_time.mean, candidate.docking_time.mean);
    r.impulse_reduction_pct = reduction(baseline.total_impulse.mean, candidate.total_impulse.mean);
    r.baseline = std::move(baseline);
    r.candidate = std::move(candidate);
    return r;
}

ComparisonReport compare_fixed_adaptive(const ScenarioConfig& cfg, std::size_t runs, std::uint64_t base_seed,
                                        unsigned threads) {
    MetricsSummary fixed = monte_carlo(cfg, runs, base_seed, GuidancePolicy::Fixed, threads);
    MetricsSummary adaptive = monte_carlo(cfg, runs, base_seed, GuidancePolicy::Adaptive, threads);
    return compare_summaries(std::move(fixed), std::move(adaptive));
}

namespace {

// UWB-only filtering at a static pose; returns the final max sigma_pos.
double steady_state_sigma(const ScenarioConfig& cfg, const std::vector<Vec3>& anchors, const Vec3& point,
                          double duration, std::uint64_t seed) {
    UwbAnchorSet uwb = cfg.uwb;
    uwb.anchors = anchors;
    uwb.validate();
    TandemEstimator est(cfg.filter, cfg.body, uwb, cfg.gyro, cfg.camera, cfg.target);
    RandomStream rng_uwb(derive_seed(seed, kUwb)), rng_gyro(derive_seed(seed, kGyro));
    TrueState truth;
    truth.rho = point;
    std::vector<RangeMeasurement> ranges;
    for (std::size_t a = 0; a < anchors.size(); ++a)
        ranges.push_back(measure_range(truth, uwb, a, cfg.body, rng_uwb, 0.0));
    est.initialize(ranges, point + cfg.body.tag_lever_arm, truth.q);

    const double dt = cfg.timing.dt;
    const auto steps = static_cast<long>(std::ceil(duration / dt - 1e-9));
    std::size_t anchor = 0;
    for (long k = 1; k <= steps; ++k) {
        est.predict(measure_gyro(truth, cfg.gyro, rng_gyro, k * dt), ControlInput{}, dt);
        if (k % cfg.timing.uwb_divider == 0) {
            est.update_range(measure_range(truth, uwb, anchor, cfg.body, rng_uwb, k * dt));
            anchor = (anchor + 1) % anchors.size();
        }
    }
    return est.report().max_sigma_pos();
}

}  // namespace

PlacementReport placement_study(const ScenarioConfig& cfg, const std::vector<AnchorLayout>& layouts,
                                const std::vector<Vec3>& probe_points, const PlacementOptions& opts) {
    if (layouts.empty() || probe_points.empty())
        throw DomainError("placement_study: need at least one layout and one probe point");
    SwitchingState s = cfg.guidance.switching;
    s.r_2 = cfg.guidance.fixed.r_2;
    s.r_1 = std::min(s.r_1, cfg.guidance.fixed.r_1);

    PlacementReport report;
    for (const AnchorLayout& layout : layouts) {
        LayoutReport lr;
        lr.name = layout.name;
        lr.best_sigma_pos = std::numeric_limits<double>::infinity();
        lr.worst_sigma_pos = 0.0;
        lr.best_pi2 = 1.0;
        lr.worst_pi2 = 0.0;
        for (std::size_t i = 0; i < probe_points.size(); ++i) {
            ProbeResult pr;
            pr.point = probe_points[i];
            pr.max_sigma_pos =
                steady_state_sigma(cfg, layout.anchors, probe_points[i], opts.duration, derive_seed(opts.seed, i));
            for (double d : opts.representative_d) {
                for (double f : opts.representative_fractions) {
                    GuidanceDecisionInputs in;
                    in.r = s.r_d + f * (s.r_2 - s.r_d);
                    in.d = d;
                    in.max_sigma_pos = pr.max_sigma_pos;
                    in.sigma_uwb = cfg.uwb.sigma;
                    const double pi2 = stationary_distribution(compute_reorient_matrix(in, s)).pi2;
                    pr.pi2_min = std::min(pr.pi2_min, pi2);
                    pr.pi2_max = std::max(pr.pi2_max, pi2);
                }
            }
            lr.best_sigma_pos = std::min(lr.best_sigma_pos, pr.max_sigma_pos);
            lr.worst_sigma_pos = std::max(lr.worst_sigma_pos, pr.max_sigma_pos);
            lr.best_pi2 = std::min(lr.best_pi2, pr.pi2_min);
            lr.worst_pi2 = std::max(lr.worst_pi2, pr.pi2_max);
            lr.probes.push_back(pr);
        }
        report.layouts.push_back(std::move(lr));
    }
    return report;
}

}  // namespace prox
