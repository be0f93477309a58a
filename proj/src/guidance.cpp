#include "prox/guidance.hpp"

#include <algorithm>
#include <array>

namespace prox {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

constexpr std::array<std::string_view, 5> kModeNames{"LOS", "Reorient", "Align", "TerminalDock", "Complete"};

SwitchEvent make_event(double t, GuidanceMode from, GuidanceMode to, double r, std::string trigger, double value,
                       std::string radius = {}, double radius_value = 0.0) {
    return {t, from, to, r, std::move(trigger), value, std::move(radius), radius_value};
}

// Align / TerminalDock transitions shared by both policies.
bool terminal_phase(SwitchingResult& out, GuidanceMode mode, const GuidanceDecisionInputs& in,
                    const GuidanceParams& params, double t) {
    if (mode == GuidanceMode::Align) {
        if (in.reference_arrived && in.alignment_error <= params.align_tolerance) {
            out.mode = GuidanceMode::TerminalDock;
            out.event = make_event(t, mode, out.mode, in.r, "aligned", in.alignment_error);
        }
        return true;
    }
    if (mode == GuidanceMode::TerminalDock) {
        if (in.reference_arrived && in.dock_error <= params.dock_position_tolerance &&
            in.speed <= params.dock_speed_tolerance && in.attitude_error <= params.dock_attitude_tolerance) {
            out.mode = GuidanceMode::Complete;
            out.event = make_event(t, mode, out.mode, in.r, "docked", in.dock_error);
        }
        return true;
    }
    return mode == GuidanceMode::Complete;
}

}  // namespace

std::string_view to_string(GuidanceMode m) { return kModeNames[static_cast<std::size_t>(m)]; }

GuidanceMode mode_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kModeNames.size(); ++i)
        if (kModeNames[i] == s) return static_cast<GuidanceMode>(i);
    throw DomainError("unknown guidance mode: " + std::string(s));
}

void SwitchingState::validate() const {
    if (!(r_d > 0.0 && r_d < r_1 && r_1 < r_2 && r_2 <= r_t))
        throw DomainError("switching radii must satisfy 0 < r_d < r_1 < r_2 <= r_t");
    if (!(a11_threshold > 0.0 && a11_threshold < 1.0 && pi2_threshold > 0.0 && pi2_threshold < 1.0))
        throw DomainError("switching thresholds must lie in (0, 1)");
}

Eigen::Matrix2d TransitionMatrix::matrix() const {
    Eigen::Matrix2d m;
    m << a22, a23, a32, a33;
    return m;
}

double compute_A11(double r, double r_t, double d, double q_e_vec_norm) {
    if (!(r_t > 0.0) || d < 0.0) throw DomainError("compute_A11: need r_t > 0 and d >= 0");
    if (q_e_vec_norm < 1e-6) return 1.0;
    return clamp01((r / r_t) * (1.0 / (1.0 + d)) * (1.0 / q_e_vec_norm));
}

TransitionMatrix compute_reorient_matrix(const GuidanceDecisionInputs& in, const SwitchingState& s) {
    if (!(s.r_2 > s.r_d)) throw DomainError("compute_reorient_matrix: r_2 must exceed r_d");
    if (!(in.sigma_uwb > 0.0)) throw DomainError("compute_reorient_matrix: sigma_uwb must be positive");
    TransitionMatrix a;
    a.a22 = clamp01((in.r / s.r_2) * (1.0 / (1.0 + in.d)));
    a.a23 = 1.0 - a.a22;
    a.a32 = clamp01((in.max_sigma_pos / in.sigma_uwb) * ((s.r_2 - in.r) / (s.r_2 - s.r_d)));
    a.a33 = 1.0 - a.a32;
    return a;
}

StationaryDistribution stationary_distribution(const TransitionMatrix& a) {
    const double out_flow = a.a23 + a.a32;
    if (out_flow < 1e-12) return {1.0, 0.0, true};
    const double pi1 = a.a32 / out_flow;
    return {pi1, 1.0 - pi1, false};
}

SwitchingResult switching_step(GuidanceMode mode, const GuidanceDecisionInputs& in, const SwitchingState& s,
                               const GuidanceParams& params, double t) {
    SwitchingResult out{mode, s, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
    if (terminal_phase(out, mode, in, params, t)) return out;

    const double r = in.r;
    if (mode == GuidanceMode::LOS) {
        if (r > s.r_t) return out;
        if (r <= s.r_1) {
            out.mode = GuidanceMode::Reorient;
            out.event = make_event(t, mode, out.mode, r, "r<=r1", r);
        } else if (r > s.r_2) {
            const double a11 = compute_A11(r, s.r_t, in.d, in.q_e_vec_norm);
            out.a11 = a11;
            if (a11 <= s.a11_threshold && !s.r2_selected) {
                out.state.r_2 = r;
                out.state.r2_selected = true;
                out.mode = GuidanceMode::Reorient;
                out.event = make_event(t, mode, out.mode, r, "A11", a11, "r2", r);
            }
        } else {
            // Reached the initial (aggressive) r_2 without a decision.
            out.mode = GuidanceMode::Reorient;
            out.event = make_event(t, mode, out.mode, r, "r<=r2", r);
        }
        return out;
    }

    // Reorient
    if (r <= s.r_1) {
        const bool vision = in.vision_streak >= params.skip_align_vision_time;
        out.mode = vision ? GuidanceMode::TerminalDock : GuidanceMode::Align;
        out.event = make_event(t, mode, out.mode, r, vision ? "vision" : "r<=r1", vision ? in.vision_streak : r);
        return out;
    }
    if (r > s.r_t || r > s.r_2) return out;
    const TransitionMatrix a = compute_reorient_matrix(in, s);
    const StationaryDistribution pi = stationary_distribution(a);
    out.matrix = a;
    out.pi = pi;
    if (pi.pi2 <= s.pi2_threshold && !s.r1_selected) {
        out.state.r_1 = r;
        out.state.r1_selected = true;
        out.mode = GuidanceMode::Align;
        out.event = make_event(t, mode, out.mode, r, "pi2", pi.pi2, "r1", r);
    }
    return out;
}

SwitchingResult fixed_switching_step(GuidanceMode mode, const GuidanceDecisionInputs& in, const FixedRadii& fixed,
                                     const SwitchingState& s, const GuidanceParams& params, double t) {
    if (!(fixed.r_1 < fixed.r_2)) throw DomainError("fixed_switching_step: r1 must be below r2");
    SwitchingResult out{mode, s, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
    out.state.r_2 = fixed.r_2;
    out.state.r_1 = fixed.r_1;
    if (terminal_phase(out, mode, in, params, t)) return out;
    if (mode == GuidanceMode::LOS && in.r <= fixed.r_2) {
        out.mode = GuidanceMode::Reorient;
        out.event = make_event(t, mode, out.mode, in.r, "r<=r2", in.r);
    } else if (mode == GuidanceMode::Reorient && in.r <= fixed.r_1) {
        out.mode = GuidanceMode::Align;
        out.event = make_event(t, mode, out.mode, in.r, "r<=r1", in.r);
    }
    return out;
}

Vec3 alignment_point(const TargetPose& target, double standoff) {
    return target.position + rotate(target.q, target.face_normal.normalized()) * standoff;
}

Quaternion docking_attitude(const TargetPose& target) { return target.q; }

ModeSetpoint mode_setpoint(GuidanceMode mode, const EstimateReport& est, const TargetPose& target,
                           const SwitchingState& s, const GuidanceParams& params) {
    ModeSetpoint sp;
    switch (mode) {
        case GuidanceMode::LOS:
            sp = {target.position, Vec3::Zero(), params.initial_attitude, params.cruise_speed};
            break;
        case GuidanceMode::Reorient:
            sp = {target.position, Vec3::Zero(), docking_attitude(target), params.cruise_speed};
            break;
        case GuidanceMode::Align:
            // the selected alignment radius doubles as the standoff on the face axis
            sp = {alignment_point(target, s.r_1), Vec3::Zero(), docking_attitude(target), params.align_speed};
            break;
        case GuidanceMode::TerminalDock:
            sp = {alignment_point(target, s.r_d), Vec3::Zero(), docking_attitude(target), params.terminal_speed};
            break;
        case GuidanceMode::Complete:
            throw DomainError("mode_setpoint: no setpoint once docking is complete");
    }
    const Vec3 to_goal = sp.position - est.position;
    if (to_goal.norm() > 1e-6) sp.velocity = sp.speed * to_goal.normalized();
    return sp;
}

TranslationalSetpoint CarrotReference::advance(const Vec3& goal, double speed, double dt) {
    const Vec3 to_goal = goal - position_;
    const double dist = to_goal.norm();
    const double step = speed * dt;
    if (dist <= step) {
        position_ = goal;
        arrived_ = true;
        return {position_, Vec3::Zero()};
    }
    arrived_ = false;
    const Vec3 dir = to_goal / dist;
    position_ += step * dir;
    return {position_, speed * dir};
}

}  // namespace prox
