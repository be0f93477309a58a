// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "prox/harness.hpp"

using namespace prox;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& what) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void info(const std::string& what) {
    std::printf("  info: %s\n", what.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Runs `seeds.size()` scenarios in parallel, results by index.
std::vector<RunLog> run_all(const ScenarioConfig& cfg, const std::vector<std::uint64_t>& seeds) {
    const PreparedScenario prepared(cfg);
    std::vector<RunLog> logs(seeds.size());
    std::atomic<std::size_t> next{0};
    const unsigned n = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < seeds.size(); i = next++) logs[i] = prepared.run(seeds[i]);
        });
    for (auto& t : pool) t.join();
    return logs;
}

std::vector<std::uint64_t> seeds_for(std::uint64_t base, std::size_t n) {
    std::vector<std::uint64_t> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(run_seed(base, i));
    return s;
}

void campaign_criteria() {
    const ScenarioConfig cfg = default_scenario();
    const ComparisonReport c = compare_fixed_adaptive(cfg, 200, 11);
    const MetricsSummary& fx = c.baseline;
    const MetricsSummary& ad = c.candidate;
    info(fmt("fixed:    success %.3f  time %.2f s  impulse %.4f N s  pos %.3f cm  att %.4f rad", fx.success_rate,
             fx.docking_time.mean, fx.total_impulse.mean, fx.position_error_cm.mean, fx.attitude_error_rad.mean));
    info(fmt("adaptive: success %.3f  time %.2f s  impulse %.4f N s  pos %.3f cm  att %.4f rad", ad.success_rate,
             ad.docking_time.mean, ad.total_impulse.mean, ad.position_error_cm.mean, ad.attitude_error_rad.mean));
    const bool c1 = c.time_reduction_pct >= 3.0 && c.time_reduction_pct <= 25.0 && c.impulse_reduction_pct >= 3.0 &&
                    c.impulse_reduction_pct <= 30.0 && fx.success_rate >= 0.99 && ad.success_rate >= 0.99;
    verdict(1, c1,
            fmt("N=200 paired: time reduction %.2f%% (3..25), impulse reduction %.2f%% (3..30), success %.3f/%.3f",
                c.time_reduction_pct, c.impulse_reduction_pct, fx.success_rate, ad.success_rate));

    const double pos = ad.position_error_cm.mean, att = ad.attitude_error_rad.mean;
    verdict(2, pos >= 0.1 && pos <= 2.0 && att >= 0.004 && att <= 0.05,
            fmt("adaptive terminal error %.3f cm (0.1..2.0), %.4f rad (0.004..0.05)", pos, att));

    double r2_min = 1e9, r2_max = -1e9;
    bool ordered = true;
    for (const RunSummary& r : ad.per_run) {
        r2_min = std::min(r2_min, r.r_2);
        r2_max = std::max(r2_max, r.r_2);
        ordered = ordered && cfg.guidance.switching.r_d < r.r_1 && r.r_1 < r.r_2;
    }
    info(fmt("r_2 selected in [%.3f, %.3f] m", r2_min, r2_max));
    verdict(3, r2_max - r2_min >= 0.2 && r2_max <= 1.0 && ordered,
            fmt("r_2 span %.3f m (>= 0.2), max %.3f m (<= 1.0), r_d < r_1 < r_2 in every run: %s", r2_max - r2_min,
                r2_max, ordered ? "yes" : "no"));
}

void stationary_criterion() {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_fixed = 0.0, worst_sum = 0.0, worst_power = 0.0;
    for (int i = 0; i < 10000; ++i) {
        TransitionMatrix a;
        a.a23 = u(gen);
        a.a22 = 1.0 - a.a23;
        a.a32 = u(gen);
        a.a33 = 1.0 - a.a32;
        const StationaryDistribution pi = stationary_distribution(a);
        const Eigen::RowVector2d p(pi.pi1, pi.pi2);
        const Eigen::Matrix2d m = a.matrix();
        worst_fixed = std::max(worst_fixed, (p * m - p).cwiseAbs().maxCoeff());
        worst_sum = std::max(worst_sum, std::abs(pi.pi1 + pi.pi2 - 1.0));
        // power iteration by repeated squaring, rows renormalised each step
        Eigen::Matrix2d pw = m;
        for (int k = 0; k < 100; ++k) {
            pw = pw * pw;
            for (int r = 0; r < 2; ++r) pw.row(r) /= pw.row(r).sum();
        }
        worst_power = std::max(worst_power, (pw.row(0) - p).cwiseAbs().maxCoeff());
    }
    verdict(4, worst_fixed < 1e-12 && worst_sum < 1e-12 && worst_power < 1e-9,
            fmt("10^4 random chains: max |pi A - pi| %.2e, max |sum - 1| %.2e, max power-iteration gap %.2e",
                worst_fixed, worst_sum, worst_power));
}

double position_rms(const std::vector<RunLog>& logs, double t0) {
    double acc = 0.0;
    long n = 0;
    for (const RunLog& log : logs)
        for (const LogRow& row : log.rows)
            if (row.t >= t0) {
                acc += (row.est_position - row.truth_position).squaredNorm();
                ++n;
            }
    return n ? std::sqrt(acc / n) : 0.0;
}

void gating_criterion(std::vector<RunLog>& clean_logs) {
    ScenarioConfig dirty = default_scenario();
    dirty.uwb.outlier_probability = 0.05;
    dirty.uwb.outlier_bias_min = 1.0;
    dirty.uwb.outlier_bias_max = 1.0;
    ScenarioConfig clean = dirty;
    clean.uwb.outlier_probability = 0.0;
    const auto seeds = seeds_for(501, 50);
    const std::vector<RunLog> dirty_logs = run_all(dirty, seeds);
    clean_logs = run_all(clean, seeds);

    MeasurementStats s;
    for (const RunLog& log : dirty_logs) {
        s.ranges += log.stats.ranges;
        s.outliers_injected += log.stats.outliers_injected;
        s.outliers_rejected += log.stats.outliers_rejected;
        s.clean_rejected += log.stats.clean_rejected;
        s.reacquisitions += log.stats.reacquisitions;
    }
    const double rejected = double(s.outliers_rejected) / double(s.outliers_injected);
    const double false_rej = double(s.clean_rejected) / double(s.ranges - s.outliers_injected);
    // steady state: after the initial convergence
    const double rms_dirty = position_rms(dirty_logs, 30.0), rms_clean = position_rms(clean_logs, 30.0);
    info(fmt("%ld ranges, %ld outliers, %ld re-acquisitions", s.ranges, s.outliers_injected, s.reacquisitions));
    verdict(5, rejected >= 0.95 && false_rej <= 0.001 && rms_dirty <= 1.5 * rms_clean,
            fmt("outliers rejected %.2f%% (>= 95%%), clean rejected %.4f%% (<= 0.1%%), RMS %.2f mm vs %.2f mm "
                "outlier-free (ratio %.3f <= 1.5)",
                100 * rejected, 100 * false_rej, 1e3 * rms_dirty, 1e3 * rms_clean, rms_dirty / rms_clean));
}

void consistency_criterion(const std::vector<RunLog>& docking_logs) {
    ScenarioConfig cfg = default_scenario();
    cfg.guidance.policy = GuidancePolicy::Hold;
    cfg.timing.max_duration = 120.0;
    const std::size_t runs = 50;
    const std::vector<RunLog> logs = run_all(cfg, seeds_for(601, runs));
    double acc = 0.0;
    long n = 0;
    for (const RunLog& log : logs)
        for (const LogRow& row : log.rows)
            if (row.t >= 30.0) {
                acc += row.nees;
                ++n;
            }
    const double mean = acc / n;
    const boost::math::chi_squared chi(6.0 * runs);
    const double lo = boost::math::quantile(chi, 0.025) / runs, hi = boost::math::quantile(chi, 0.975) / runs;
    verdict(6, mean >= lo && mean <= hi,
            fmt("50-run NEES over the UWB station-keeping window [30, 120] s: %.3f in [%.3f, %.3f]", mean, lo, hi));

    double vis = 0.0;
    long nv = 0;
    for (const RunLog& log : docking_logs)
        for (const LogRow& row : log.rows)
            if (row.mode == GuidanceMode::Align || row.mode == GuidanceMode::TerminalDock) {
                vis += row.nees;
                ++nv;
            }
    if (nv) info(fmt("mean NEES during vision-aided terminal phases (docking runs): %.2f", vis / nv));
}

struct RefFrameState {
    Quaternion q;
    Vec3 w_c;
};

// Reference-frame rotational form: d/dt(I_c w_c) = 0 with I_c = D I D^T.
RefFrameState ref_frame_step(const RefFrameState& s, const RigidBodyParams& p, double dt) {
    using V7 = Eigen::Matrix<double, 7, 1>;
    auto f = [&](const V7& x) {
        const Quaternion q = Quaternion(x(0), x.segment<3>(1)).normalized();
        const Vec3 w = x.segment<3>(4);
        const Mat3 d = quat_to_dcm(q);
        const Mat3 i_c = d * p.inertia * d.transpose();
        V7 dx;
        dx(0) = -0.5 * w.dot(x.segment<3>(1));
        dx.segment<3>(1) = 0.5 * (x(0) * w + w.cross(x.segment<3>(1)));
        dx.segment<3>(4) = i_c.ldlt().solve(-w.cross(i_c * w));
        return dx;
    };
    V7 x;
    x << s.q.w, s.q.v, s.w_c;
    const V7 y = rk4_step(f, x, dt);
    return {Quaternion(y(0), y.segment<3>(1)).normalized(), y.segment<3>(4)};
}

void numerical_criterion() {
    // translational transition vs central differences
    const double dt = 0.01;
    Vec6 x;
    x << 0.3, 1.1, -0.4, 0.02, -0.01, 0.03;
    const Vec3 accel(0.02, -0.01, 0.005);
    const Mat6 phi = translational_transition(dt);
    Mat6 fd;
    for (int j = 0; j < 6; ++j) {
        const double h = 1e-6;
        Vec6 xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        fd.col(j) = (propagate_translational_mean(xp, accel, dt) - propagate_translational_mean(xm, accel, dt)) /
                    (2 * h);
    }
    const double jac_t = (fd - phi).cwiseAbs().maxCoeff() / phi.cwiseAbs().maxCoeff();

    // attitude error transition (identity for a reference-frame error)
    const Quaternion q_ref = euler_xyz_to_quat(Vec3(0.3, -0.2, 0.9));
    const Vec3 w(0.4, -0.3, 0.2);
    auto step = [&](const Vec3& dtheta) {
        const Quaternion next = quat_multiply(quat_multiply(small_angle_to_quat(dtheta), q_ref),
                                              small_angle_to_quat(w * dt));
        const Quaternion e = error_quat(next, quat_multiply(q_ref, small_angle_to_quat(w * dt)));
        const double s = e.v.norm();
        return s > 0 ? Vec3((2.0 * std::atan2(s, e.w) / s) * e.v) : Vec3(Vec3::Zero());
    };
    Mat3 fd_a;
    for (int j = 0; j < 3; ++j) {
        Vec3 e = Vec3::Zero();
        e(j) = 1e-6;
        fd_a.col(j) = (step(e) - step(-e)) / 2e-6;
    }
    const double jac_a = (fd_a - Mat3::Identity()).cwiseAbs().maxCoeff();

    // torque-free asymmetric body
    RigidBodyParams p;
    p.inertia = Vec3(1.6e-3, 1.8e-3, 2e-3).asDiagonal();
    p.mothership_inertia = Vec3(40, 45, 50).asDiagonal();
    TrueState s;
    s.omega_b = Vec3(0.4, 0.3, -0.5);
    s.q = euler_xyz_to_quat(Vec3(0.2, -0.1, 0.4));
    const double e0 = rotational_kinetic_energy(s, p), h0 = (p.inertia * s.omega_b).norm();
    RefFrameState r{s.q, quat_to_dcm(s.q) * s.omega_b};
    for (int i = 0; i < 1000; ++i) {
        s = propagate_truth(s, ControlInput{}, p, dt);
        r = ref_frame_step(r, p, dt);
    }
    const double de = std::abs(rotational_kinetic_energy(s, p) - e0) / e0;
    const double dh = std::abs((p.inertia * s.omega_b).norm() - h0) / h0;
    const double forms = std::max((quat_to_dcm(s.q) * s.omega_b - r.w_c).norm(),
                                  (quat_to_dcm(s.q) - quat_to_dcm(r.q)).cwiseAbs().maxCoeff());
    verdict(7, jac_t < 1e-5 && jac_a < 1e-5 && de < 1e-6 && dh < 1e-6 && forms < 1e-6,
            fmt("Jacobian rel. error %.1e / %.1e, energy drift %.1e, momentum drift %.1e, frame-form gap %.1e",
                jac_t, jac_a, de, dh, forms));
}

void algorithm_criterion() {
    const double a11 = compute_A11(0.75, 1.5, 1.0, 0.5);
    SwitchingState s;
    s.r_2 = 0.4;
    s.r_d = 0.1;
    GuidanceDecisionInputs in;
    in.r = 0.2;
    in.d = 1.0;
    in.max_sigma_pos = 0.01;
    in.sigma_uwb = 0.02;
    const TransitionMatrix a = compute_reorient_matrix(in, s);
    const StationaryDistribution pi = stationary_distribution({0.7, 0.3, 0.1, 0.9});
    const double err = std::max({std::abs(a11 - 0.5), std::abs(a.a22 - 0.25), std::abs(a.a23 - 0.75),
                                 std::abs(a.a32 - 1.0 / 3.0), std::abs(a.a33 - 2.0 / 3.0), std::abs(pi.pi1 - 0.25),
                                 std::abs(pi.pi2 - 0.75)});

    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool stochastic = true;
    for (int i = 0; i < 10000; ++i) {
        SwitchingState st;
        st.r_d = 0.02 + 0.1 * u(gen);
        st.r_2 = st.r_d + 0.01 + u(gen);
        GuidanceDecisionInputs g;
        g.r = st.r_2 * u(gen);
        g.d = 4 * u(gen);
        g.max_sigma_pos = 0.1 * u(gen);
        g.sigma_uwb = 0.001 + 0.05 * u(gen);
        const Eigen::Matrix2d m = compute_reorient_matrix(g, st).matrix();
        stochastic = stochastic && m.minCoeff() >= 0.0 && m.maxCoeff() <= 1.0 &&
                     std::abs(m.row(0).sum() - 1.0) < 1e-12 && std::abs(m.row(1).sum() - 1.0) < 1e-12;
    }
    verdict(8, err < 1e-9 && stochastic,
            fmt("worked examples max error %.1e, 10^4 random matrices row-stochastic: %s", err,
                stochastic ? "yes" : "no"));
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void determinism_criterion() {
    const ScenarioConfig cfg = default_scenario();
    const RunLog a = run_scenario(cfg, 77), b = run_scenario(cfg, 77);
    std::ostringstream ca, cb;
    write_run_csv(ca, a);
    write_run_csv(cb, b);
    const bool same_run = a == b && ca.str() == cb.str();

    const MetricsSummary one = monte_carlo(cfg, 16, 99, GuidancePolicy::Adaptive, 1);
    const MetricsSummary many = monte_carlo(cfg, 16, 99, GuidancePolicy::Adaptive, 4);
    const bool same_mc = summary_to_json(one).dump() == summary_to_json(many).dump();

    bool same_cli = true;
#ifdef PROXSIM_EXE
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / fmt("proxsim-acceptance-%d", int(std::random_device{}() % 100000));
    for (const char* sub : {"a", "b"}) {
        const std::string cmd = std::string("\"") + PROXSIM_EXE + "\" run --config \"" + PROXSIM_CONFIG +
                                "\" --seed 77 --out \"" + (root / sub).string() + "\" > /dev/null";
        same_cli = same_cli && std::system(cmd.c_str()) == 0;
    }
    same_cli = same_cli && fs::exists(root / "a" / "run_77.csv") &&
               slurp(root / "a" / "run_77.csv") == slurp(root / "b" / "run_77.csv") &&
               slurp(root / "a" / "run_77.json") == slurp(root / "b" / "run_77.json");
    std::error_code ec;
    fs::remove_all(root, ec);
#endif
    verdict(9, same_run && same_mc && same_cli,
            fmt("repeated run identical: %s; 1 vs 4 threads identical: %s; two CLI invocations identical: %s",
                same_run ? "yes" : "no", same_mc ? "yes" : "no",
                same_cli ? "yes" : "no"));
}

}  // namespace

int main() {
    std::vector<RunLog> docking_logs;
    campaign_criteria();
    stationary_criterion();
    gating_criterion(docking_logs);
    consistency_criterion(docking_logs);
    numerical_criterion();
    algorithm_criterion();
    determinism_criterion();
    std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
