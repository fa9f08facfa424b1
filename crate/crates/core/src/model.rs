//! Domain types, the black-box dynamics contract and the built-in simulators.
//!
//! Safeguards in this crate only ever call [`Dynamics::eval`] pointwise; the
//! concrete models exist so that examples and tests have something to query.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Wraps an angle into `(-π, π]`, the convention used for `alpha`.
pub fn wrap_alpha(a: f64) -> f64 {
    let w = wrap_angle(a);
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Planar robot configuration.
///
/// `v` is the signed longitudinal speed of the second-order model
/// (negative when reversing). The toy unicycle commands speed directly and
/// leaves `v` untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotState {
    pub px: f64,
    pub py: f64,
    pub theta: f64,
    #[serde(default)]
    pub v: f64,
}

impl RobotState {
    pub fn new(px: f64, py: f64, theta: f64, v: f64) -> Self {
        Self { px, py, theta: wrap_angle(theta), v }
    }

    /// A pose without speed state (toy unicycle).
    pub fn pose(px: f64, py: f64, theta: f64) -> Self {
        Self::new(px, py, theta, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.px.is_finite() && self.py.is_finite() && self.theta.is_finite() && self.v.is_finite()
    }
}

impl fmt::Display for RobotState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(px={}, py={}, theta={}, v={})", self.px, self.py, self.theta, self.v)
    }
}

/// Actuation command. Its length is the control dimension of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlVector(pub Vec<f64>);

impl ControlVector {
    pub fn new(components: Vec<f64>) -> Self {
        Self(components)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `self + t * dir`, componentwise.
    pub fn offset(&self, dir: &[f64], t: f64) -> Self {
        Self(self.0.iter().zip(dir).map(|(x, d)| x + t * d).collect())
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| 0.5 * (a + b)).collect())
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

impl Deref for ControlVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ControlVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[f64; N]> for ControlVector {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

/// Axis-aligned control space `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct ControlBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ControlBox {
    pub fn new(bounds: &[[f64; 2]]) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidConfig("control box has no dimensions".into()));
        }
        for (i, [lo, hi]) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!("control box dimension {i} has invalid bounds [{lo}, {hi}]")));
            }
        }
        Ok(Self { lo: bounds.iter().map(|b| b[0]).collect(), hi: bounds.iter().map(|b| b[1]).collect() })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).collect()
    }

    pub fn center(&self) -> ControlVector {
        ControlVector(self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect())
    }

    pub fn diagonal(&self) -> f64 {
        self.widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Closed-box membership; points on a face are inside.
    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim() && u.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| *l <= *x && *x <= *h)
    }

    pub fn clip(&self, u: &[f64]) -> ControlVector {
        ControlVector(u.iter().zip(self.lo.iter().zip(&self.hi)).map(|(x, (l, h))| x.clamp(*l, *h)).collect())
    }

    /// Largest `t ≥ 0` with `u + t·dir` still in the box, for `u` inside it.
    pub fn ray_exit(&self, u: &[f64], dir: &[f64]) -> f64 {
        u.iter()
            .zip(dir)
            .zip(self.lo.iter().zip(&self.hi))
            .filter_map(|((x, d), (l, h))| {
                if *d > 0.0 {
                    Some((h - x) / d)
                } else if *d < 0.0 {
                    Some((l - x) / d)
                } else {
                    None
                }
            })
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    pub fn check(&self, u: &ControlVector) -> Result<()> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.dim() });
        }
        if !self.contains(u) {
            return Err(Error::ControlOutOfBox { control: u.0.clone() });
        }
        Ok(())
    }
}

impl TryFrom<Vec<[f64; 2]>> for ControlBox {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<ControlBox> for Vec<[f64; 2]> {
    fn from(b: ControlBox) -> Self {
        b.lo.iter().zip(&b.hi).map(|(l, h)| [*l, *h]).collect()
    }
}

/// Actuation and state bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemLimits {
    pub v_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub dt: f64,
    /// Defaults to `[a_min, a_max] x [w_min, w_max]` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_box: Option<ControlBox>,
}

impl SystemLimits {
    pub fn new(v_max: f64, a_min: f64, a_max: f64, w_min: f64, w_max: f64, dt: f64) -> Self {
        Self { v_max, a_min, a_max, w_min, w_max, dt, control_box: None }
    }

    pub fn with_control_box(mut self, b: ControlBox) -> Self {
        self.control_box = Some(b);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return bad("v_max must be positive");
        }
        if !(self.a_min <= 0.0 && self.a_max >= 0.0) {
            return bad("acceleration bounds must satisfy a_min <= 0 <= a_max");
        }
        if !(self.w_min <= 0.0 && self.w_max >= 0.0) {
            return bad("angular rate bounds must satisfy w_min <= 0 <= w_max");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        Ok(())
    }

    /// The explicit control box, or the acceleration/turn-rate rectangle.
    pub fn control_box(&self) -> ControlBox {
        self.control_box
            .clone()
            .unwrap_or_else(|| ControlBox { lo: vec![self.a_min, self.w_min], hi: vec![self.a_max, self.w_max] })
    }

    /// `max{-a_min, a_max}`.
    pub fn a_m(&self) -> f64 {
        (-self.a_min).max(self.a_max)
    }

    /// `max{-w_min, w_max}`.
    pub fn w_m(&self) -> f64 {
        (-self.w_min).max(self.w_max)
    }

    /// `min{-a_min, a_max}`: acceleration available in both directions.
    pub fn a_sym(&self) -> f64 {
        (-self.a_min).min(self.a_max)
    }
}

/// Circular obstacle with optional constant velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
}

impl Obstacle {
    pub fn fixed(cx: f64, cy: f64, radius: f64) -> Self {
        Self { cx, cy, radius, vx: 0.0, vy: 0.0 }
    }

    pub fn moving(cx: f64, cy: f64, radius: f64, vx: f64, vy: f64) -> Self {
        Self { cx, cy, radius, vx, vy }
    }

    pub fn is_static(&self) -> bool {
        self.vx == 0.0 && self.vy == 0.0
    }

    /// Constant-velocity propagation.
    pub fn advanced(&self, dt: f64) -> Self {
        if self.is_static() {
            return *self;
        }
        Self { cx: self.cx + self.vx * dt, cy: self.cy + self.vy * dt, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::InvalidConfig(format!("obstacle radius must be positive, got {}", self.radius)));
        }
        Ok(())
    }
}

/// Geometry of the robot relative to one obstacle, in the obstacle frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeKinematics {
    /// Center-to-center distance.
    pub d: f64,
    /// Range rate.
    pub d_dot: f64,
    /// Signed angle from the heading vector to the robot-to-obstacle vector, in `(-π, π]`.
    pub alpha: f64,
    /// Magnitude of the relative velocity.
    pub v_rel: f64,
}

pub fn relative_kinematics(state: &RobotState, obs: &Obstacle) -> Result<RelativeKinematics> {
    let dx = obs.cx - state.px;
    let dy = obs.cy - state.py;
    let d = dx.hypot(dy);
    if d == 0.0 {
        return Err(Error::SingularGeometry);
    }
    let (s, c) = state.theta.sin_cos();
    let rvx = state.v * c - obs.vx;
    let rvy = state.v * s - obs.vy;
    Ok(RelativeKinematics {
        d,
        d_dot: -(rvx * dx + rvy * dy) / d,
        alpha: wrap_alpha(dy.atan2(dx) - state.theta),
        v_rel: rvx.hypot(rvy),
    })
}

/// Black-box discrete-time dynamics `x' = f(x, u)`.
///
/// Implementations must be pure: identical inputs give bitwise-identical
/// outputs, and concurrent calls need no coordination.
pub trait Dynamics: Send + Sync {
    fn control_box(&self) -> &ControlBox;

    fn eval(&self, state: &RobotState, control: &ControlVector, dt: f64) -> Result<RobotState>;

    /// Whether `RobotState::v` is a state of this model.
    fn has_speed_state(&self) -> bool {
        true
    }

    fn control_dim(&self) -> usize {
        self.control_box().dim()
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")))
    }
}

/// One explicit Euler step of the kinematic unicycle with `u = (v_cmd, w_cmd)`.
pub fn toy_step(state: &RobotState, u: &[f64], dt: f64) -> RobotState {
    let (s, c) = state.theta.sin_cos();
    RobotState {
        px: state.px + c * u[0] * dt,
        py: state.py + s * u[0] * dt,
        theta: wrap_angle(state.theta + u[1] * dt),
        v: state.v,
    }
}

/// First-order unicycle commanding speed and turn rate directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyUnicycle {
    control_box: ControlBox,
}

impl ToyUnicycle {
    pub fn new(control_box: ControlBox) -> Result<Self> {
        if control_box.dim() != 2 {
            return Err(Error::InvalidConfig("toy unicycle takes a 2D control (v, w)".into()));
        }
        Ok(Self { control_box })
    }
}

impl Dynamics for ToyUnicycle {
    fn control_box(&self) -> &ControlBox {
        &self.control_box
    }

    fn eval(&self, state: &RobotState, control: &ControlVector, dt: f64) -> Result<RobotState> {
        check_dt(dt)?;
        self.control_box.check(control)?;
        Ok(toy_step(state, control, dt))
    }

    fn has_speed_state(&self) -> bool {
        false
    }
}

/// Unicycle with speed state and `u = (a_cmd, w_cmd)`.
///
/// Zero-order hold over the step: speed and heading update from the
/// command, position advances with the pre-update speed and heading. Speed
/// is clamped to `[-v_max, v_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderRobot {
    limits: SystemLimits,
    control_box: ControlBox,
}

impl SecondOrderRobot {
    pub fn new(limits: SystemLimits) -> Result<Self> {
        limits.validate()?;
        let control_box = limits.control_box();
        if control_box.dim() != 2 {
            return Err(Error::InvalidConfig("second-order robot takes a 2D control (a, w)".into()));
        }
        Ok(Self { limits, control_box })
    }

    pub fn limits(&self) -> &SystemLimits {
        &self.limits
    }
}

impl Dynamics for SecondOrderRobot {
    fn control_box(&self) -> &ControlBox {
        &self.control_box
    }

    fn eval(&self, state: &RobotState, control: &ControlVector, dt: f64) -> Result<RobotState> {
        check_dt(dt)?;
        self.control_box.check(control)?;
        let (s, c) = state.theta.sin_cos();
        let v_max = self.limits.v_max;
        Ok(RobotState {
            px: state.px + state.v * c * dt,
            py: state.py + state.v * s * dt,
            theta: wrap_angle(state.theta + control[1] * dt),
            v: (state.v + control[0] * dt).clamp(-v_max, v_max),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Toy,
    SecondOrder,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Toy => "toy",
            ModelKind::SecondOrder => "second_order",
        })
    }
}

/// The built-in simulators behind one type.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Toy(ToyUnicycle),
    SecondOrder(SecondOrderRobot),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Toy(_) => ModelKind::Toy,
            Model::SecondOrder(_) => ModelKind::SecondOrder,
        }
    }
}

impl Dynamics for Model {
    fn control_box(&self) -> &ControlBox {
        match self {
            Model::Toy(m) => m.control_box(),
            Model::SecondOrder(m) => m.control_box(),
        }
    }

    fn eval(&self, state: &RobotState, control: &ControlVector, dt: f64) -> Result<RobotState> {
        match self {
            Model::Toy(m) => m.eval(state, control, dt),
            Model::SecondOrder(m) => m.eval(state, control, dt),
        }
    }

    fn has_speed_state(&self) -> bool {
        matches!(self, Model::SecondOrder(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn toy() -> ToyUnicycle {
        ToyUnicycle::new(ControlBox::new(&[[-5.0, 5.0], [-5.0, 5.0]]).unwrap()).unwrap()
    }

    fn second_order(v_max: f64) -> SecondOrderRobot {
        SecondOrderRobot::new(SystemLimits::new(v_max, -2.0, 2.0, -1.0, 1.0, 0.1)).unwrap()
    }

    #[test]
    fn toy_straight_line_and_fixed_point() {
        let m = toy();
        let x = RobotState::pose(0.0, 0.0, 0.0);
        let y = m.eval(&x, &[1.0, 0.0].into(), 0.01).unwrap();
        assert_eq!((y.px, y.py, y.theta), (0.01, 0.0, 0.0));
        let z = m.eval(&x, &[0.0, 0.0].into(), 0.01).unwrap();
        assert_eq!(z, x);
    }

    #[test]
    fn toy_step_examples() {
        let y = toy_step(&RobotState::pose(0.0, 0.0, FRAC_PI_2), &[2.0, 0.0], 0.01);
        assert_abs_diff_eq!(y.px, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y.py, 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(y.theta, FRAC_PI_2, epsilon = 1e-15);
        let y = toy_step(&RobotState::pose(0.0, 0.0, 0.0), &[0.0, 3.0], 0.01);
        assert_eq!((y.px, y.py), (0.0, 0.0));
        assert_abs_diff_eq!(y.theta, 0.03, epsilon = 1e-15);
    }

    #[test]
    fn second_order_hand_integration() {
        let m = second_order(2.0);
        let y = m.eval(&RobotState::new(0.0, 0.0, 0.0, 1.0), &[1.0, 0.0].into(), 0.1).unwrap();
        assert_abs_diff_eq!(y.v, 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(y.px, 0.1, epsilon = 1e-15);
        assert_eq!(y.py, 0.0);
    }

    #[test]
    fn out_of_box_is_a_domain_error() {
        let m = second_order(1.0);
        let err = m.eval(&RobotState::pose(0.0, 0.0, 0.0), &[2.5, 0.0].into(), 0.1).unwrap_err();
        assert!(matches!(err, Error::ControlOutOfBox { .. }));
        let err = m.eval(&RobotState::pose(0.0, 0.0, 0.0), &[0.0].into(), 0.1).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        assert!(m.eval(&RobotState::pose(0.0, 0.0, 0.0), &[0.0, 0.0].into(), 0.0).is_err());
    }

    #[test]
    fn relative_kinematics_examples() {
        let r = relative_kinematics(&RobotState::new(0.0, 0.0, 0.0, 1.0), &Obstacle::fixed(2.0, 0.0, 0.1)).unwrap();
        assert_eq!((r.d, r.alpha, r.d_dot), (2.0, 0.0, -1.0));
        let r = relative_kinematics(&RobotState::new(0.0, 0.0, 0.0, 1.0), &Obstacle::fixed(0.0, 2.0, 0.1)).unwrap();
        assert_abs_diff_eq!(r.alpha, FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(r.d_dot, 0.0, epsilon = 1e-15);
        let x = RobotState::new(0.0, 0.0, PI, 1.0);
        let obs = Obstacle::fixed(2.0, 0.0, 0.1);
        let r = relative_kinematics(&x, &obs).unwrap();
        assert_abs_diff_eq!(r.alpha.abs(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(r.d_dot, 1.0, epsilon = 1e-15);
        // finite-difference cross-check of the range rate
        let m = second_order(1.0);
        let dt = 1e-6;
        let y = m.eval(&x, &[0.0, 0.0].into(), dt).unwrap();
        let fd = (relative_kinematics(&y, &obs).unwrap().d - r.d) / dt;
        assert_abs_diff_eq!(fd, r.d_dot, epsilon = 1e-6);
    }

    #[test]
    fn coincident_centers_are_singular() {
        let err = relative_kinematics(&RobotState::pose(1.0, 1.0, 0.0), &Obstacle::fixed(1.0, 1.0, 0.2));
        assert_eq!(err.unwrap_err(), Error::SingularGeometry);
    }

    #[test]
    fn alpha_convention_is_half_open_at_minus_pi() {
        assert_eq!(wrap_alpha(-PI), PI);
        assert_eq!(wrap_alpha(PI), PI);
        assert_eq!(wrap_angle(PI), -PI);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI + 0.5), -PI + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn repeated_evaluation_is_bitwise_identical() {
        let m = second_order(1.0);
        let x = RobotState::new(0.3, -1.2, 0.7, 0.4);
        let u: ControlVector = [-0.37, 0.81].into();
        let first = m.eval(&x, &u, 0.1).unwrap();
        for _ in 0..10_000 {
            let y = m.eval(&x, &u, 0.1).unwrap();
            assert_eq!(y.px.to_bits(), first.px.to_bits());
            assert_eq!(y.py.to_bits(), first.py.to_bits());
            assert_eq!(y.theta.to_bits(), first.theta.to_bits());
            assert_eq!(y.v.to_bits(), first.v.to_bits());
        }
    }

    #[test]
    fn speed_stays_clamped_over_long_random_rollouts() {
        let m = second_order(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = RobotState::new(0.0, 0.0, 0.0, 0.0);
        for _ in 0..10_000 {
            let u: ControlVector = [rng.random_range(-2.0..=2.0), rng.random_range(-1.0..=1.0)].into();
            x = m.eval(&x, &u, 0.1).unwrap();
            assert!(x.v.abs() <= 1.0, "speed {} escaped the clamp", x.v);
            assert!(x.is_finite() && (-PI..PI).contains(&x.theta));
        }
    }

    proptest! {
        #[test]
        fn static_range_rate_matches_heading_projection(
            px in -5.0..5.0f64, py in -5.0..5.0f64, th in -PI..PI, v in -1.0..1.0f64,
            cx in -5.0..5.0f64, cy in -5.0..5.0f64,
        ) {
            let x = RobotState::new(px, py, th, v);
            let obs = Obstacle::fixed(cx, cy, 0.1);
            prop_assume!((cx - px).hypot(cy - py) > 1e-3);
            let r = relative_kinematics(&x, &obs).unwrap();
            prop_assert!(r.d >= 0.0);
            prop_assert!(r.d_dot.abs() <= r.v_rel + 1e-12);
            prop_assert!((r.d_dot - (-v * r.alpha.cos())).abs() < 1e-9);
            prop_assert!(r.alpha > -PI && r.alpha <= PI);
        }

        #[test]
        fn moving_obstacle_range_rate_is_bounded(
            th in -PI..PI, v in -1.0..1.0f64, vx in -1.0..1.0f64, vy in -1.0..1.0f64,
            cx in 0.5..5.0f64, cy in -5.0..5.0f64,
        ) {
            let r = relative_kinematics(&RobotState::new(0.0, 0.0, th, v), &Obstacle::moving(cx, cy, 0.1, vx, vy)).unwrap();
            prop_assert!(r.d_dot.abs() <= r.v_rel + 1e-12);
        }

        #[test]
        fn finite_difference_range_rate(
            px in -3.0..3.0f64, py in -3.0..3.0f64, th in -PI..PI, v in -1.0..1.0f64,
            a in -2.0..2.0f64, w in -1.0..1.0f64,
        ) {
            let obs = Obstacle::fixed(4.0, 0.5, 0.3);
            let x = RobotState::new(px, py, th, v);
            let dt = 1e-4;
            let y = second_order(1.0).eval(&x, &[a, w].into(), dt).unwrap();
            let r0 = relative_kinematics(&x, &obs).unwrap();
            let r1 = relative_kinematics(&y, &obs).unwrap();
            prop_assert!(((r1.d - r0.d) / dt - r0.d_dot).abs() <= 1e-2 * 1.0);
        }
    }
}
