//! Planar rigid-body primitives: poses, twists, wrenches and the maps between them.
//!
//! Twists are ordered `(l, gamma, kappa)`: the length (body-x rate), shear
//! (body-y rate) and curvature (rotation rate). Their matrix form uses the
//! standard skew block `[[0, -kappa, l], [kappa, 0, gamma], [0, 0, 0]]`.
//! Wrenches are ordered `(fx, fy, m)` and pair with twists through the plain
//! dot product.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

/// Below this rotation angle the exponential and log maps switch to Taylor expansions.
pub const STRAIGHT_EPS: f64 = 1e-9;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// A planar pose `(x, y, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { x: 0.0, y: 0.0, theta: 0.0 };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    /// Homogeneous 3x3 matrix form.
    pub fn to_matrix(&self) -> Matrix3<f64> {
        let (s, c) = self.theta.sin_cos();
        Matrix3::new(c, -s, self.x, s, c, self.y, 0.0, 0.0, 1.0)
    }

    /// Recovers a pose from a homogeneous matrix. The rotation block is assumed orthonormal.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self { x: m[(0, 2)], y: m[(1, 2)], theta: m[(1, 0)].atan2(m[(0, 0)]) }
    }

    /// `self ∘ other`, i.e. `other` expressed in the frame of `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        let (s, c) = self.theta.sin_cos();
        Pose {
            x: self.x + c * other.x - s * other.y,
            y: self.y + s * other.x + c * other.y,
            theta: wrap_angle(self.theta + other.theta),
        }
    }

    pub fn inverse(&self) -> Pose {
        let (s, c) = self.theta.sin_cos();
        Pose { x: -(c * self.x + s * self.y), y: s * self.x - c * self.y, theta: wrap_angle(-self.theta) }
    }

    /// Pose of `other` seen from `self`: `self⁻¹ ∘ other`.
    pub fn between(&self, other: &Pose) -> Pose {
        self.inverse().compose(other)
    }

    /// Rotates a planar vector by this pose's heading.
    pub fn rotate(&self, v: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }

    /// Rotates a planar vector by the inverse heading.
    pub fn unrotate(&self, v: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
    }

    /// Adjoint matrix acting on `(l, gamma, kappa)` twists.
    pub fn adjoint(&self) -> Matrix3<f64> {
        let (s, c) = self.theta.sin_cos();
        Matrix3::new(c, -s, self.y, s, c, -self.x, 0.0, 0.0, 1.0)
    }

    /// `Ad_self · xi`.
    pub fn adjoint_apply(&self, xi: &Twist) -> Twist {
        let [l, gamma] = self.rotate([xi.l, xi.gamma]);
        Twist { l: l + xi.kappa * self.y, gamma: gamma - xi.kappa * self.x, kappa: xi.kappa }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.theta]
    }
}

/// Body-frame rate of a pose along the arm, ordered `(l, gamma, kappa)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub l: f64,
    pub gamma: f64,
    pub kappa: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist { l: 0.0, gamma: 0.0, kappa: 0.0 };

    pub fn new(l: f64, gamma: f64, kappa: f64) -> Self {
        Self { l, gamma, kappa }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.l, self.gamma, self.kappa]
    }

    pub fn scaled(&self, s: f64) -> Twist {
        Twist::new(self.l * s, self.gamma * s, self.kappa * s)
    }

    /// Matrix (Lie algebra) form.
    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(0.0, -self.kappa, self.l, self.kappa, 0.0, self.gamma, 0.0, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.l.is_finite() && self.gamma.is_finite() && self.kappa.is_finite()
    }
}

impl Add for Twist {
    type Output = Twist;
    fn add(self, o: Twist) -> Twist {
        Twist::new(self.l + o.l, self.gamma + o.gamma, self.kappa + o.kappa)
    }
}

impl Sub for Twist {
    type Output = Twist;
    fn sub(self, o: Twist) -> Twist {
        Twist::new(self.l - o.l, self.gamma - o.gamma, self.kappa - o.kappa)
    }
}

impl Mul<f64> for Twist {
    type Output = Twist;
    fn mul(self, s: f64) -> Twist {
        self.scaled(s)
    }
}

/// Planar force and moment `(fx, fy, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub m: f64,
}

impl Wrench {
    pub const ZERO: Wrench = Wrench { fx: 0.0, fy: 0.0, m: 0.0 };

    pub fn new(fx: f64, fy: f64, m: f64) -> Self {
        Self { fx, fy, m }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.fx, self.fy, self.m]
    }

    pub fn norm(&self) -> f64 {
        (self.fx * self.fx + self.fy * self.fy + self.m * self.m).sqrt()
    }

    pub fn force_norm(&self) -> f64 {
        self.fx.hypot(self.fy)
    }

    /// Power pairing with a twist.
    pub fn pair(&self, xi: &Twist) -> f64 {
        self.fx * xi.l + self.fy * xi.gamma + self.m * xi.kappa
    }

    pub fn is_finite(&self) -> bool {
        self.fx.is_finite() && self.fy.is_finite() && self.m.is_finite()
    }
}

impl Add for Wrench {
    type Output = Wrench;
    fn add(self, o: Wrench) -> Wrench {
        Wrench::new(self.fx + o.fx, self.fy + o.fy, self.m + o.m)
    }
}

impl Sub for Wrench {
    type Output = Wrench;
    fn sub(self, o: Wrench) -> Wrench {
        Wrench::new(self.fx - o.fx, self.fy - o.fy, self.m - o.m)
    }
}

impl Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        Wrench::new(-self.fx, -self.fy, -self.m)
    }
}

impl Mul<f64> for Wrench {
    type Output = Wrench;
    fn mul(self, s: f64) -> Wrench {
        Wrench::new(self.fx * s, self.fy * s, self.m * s)
    }
}

/// `sin(t)/t` and `(1 - cos(t))/t`, with Taylor fallbacks near zero.
fn arc_coefficients(t: f64) -> (f64, f64) {
    if t.abs() <= STRAIGHT_EPS {
        let t2 = t * t;
        (1.0 - t2 / 6.0, t / 2.0 - t * t2 / 24.0)
    } else {
        (t.sin() / t, (1.0 - t.cos()) / t)
    }
}

/// Group exponential of `scale · xi`.
pub fn exp_twist(xi: &Twist, scale: f64) -> Pose {
    let v = xi.scaled(scale);
    let (a, b) = arc_coefficients(v.kappa);
    Pose { x: a * v.l - b * v.gamma, y: b * v.l + a * v.gamma, theta: wrap_angle(v.kappa) }
}

/// Group logarithm, inverse of [`exp_twist`] with unit scale for `|theta| < pi`.
pub fn log_pose(g: &Pose) -> Twist {
    let t = wrap_angle(g.theta);
    let (a, b) = arc_coefficients(t);
    let det = a * a + b * b;
    Twist { l: (a * g.x + b * g.y) / det, gamma: (-b * g.x + a * g.y) / det, kappa: t }
}

/// Twist of a frame rigidly attached at `offset` from the frame moving with `xi`:
/// `Ad⁻¹_offset · xi`. An actuator at `(0, r, 0)` sees length `l - r·kappa`.
pub fn adjoint_inverse_twist(offset: &Pose, xi: &Twist) -> Twist {
    offset.inverse().adjoint_apply(xi)
}

/// Moves a wrench acting at the frame `relative_pose` (expressed in that frame)
/// to the origin frame: `Ad⁻ᵀ_relative · w`. The force is rotated and the
/// moment picks up the lever-arm term; the force norm is unchanged.
pub fn coadjoint_transport_wrench(relative_pose: &Pose, w: &Wrench) -> Wrench {
    let [fx, fy] = relative_pose.rotate([w.fx, w.fy]);
    Wrench { fx, fy, m: w.m + relative_pose.x * fy - relative_pose.y * fx }
}

/// Poses along a chain: `out[0] = base`, `out[k+1] = out[k] ∘ exp(twists[k] / n)`.
pub fn product_of_exponentials(base: &Pose, twists: &[Twist], n: usize) -> Vec<Pose> {
    let scale = 1.0 / n as f64;
    let mut poses = Vec::with_capacity(twists.len() + 1);
    let mut g = *base;
    poses.push(g);
    for xi in twists {
        g = g.compose(&exp_twist(xi, scale));
        poses.push(g);
    }
    poses
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pose_close(a: &Pose, b: &Pose, tol: f64) -> bool {
        (a.x - b.x).abs() < tol && (a.y - b.y).abs() < tol && wrap_angle(a.theta - b.theta).abs() < tol
    }

    /// Truncated power series of the matrix exponential, independent of the closed form.
    fn expm_series(m: &Matrix3<f64>) -> Matrix3<f64> {
        let mut term = Matrix3::identity();
        let mut acc = Matrix3::identity();
        for k in 1..60 {
            term = term * m / k as f64;
            acc += term;
        }
        acc
    }

    #[test]
    fn compose_identity_and_quarter_turn() {
        let b = Pose::new(1.0, 2.0, 0.5);
        assert_eq!(Pose::IDENTITY.compose(&b), b);
        let q = Pose::new(0.0, 0.0, PI / 2.0).compose(&Pose::new(1.0, 0.0, 0.0));
        assert!(pose_close(&q, &Pose::new(0.0, 1.0, PI / 2.0), 1e-15));
    }

    #[test]
    fn exp_examples() {
        assert!(pose_close(&exp_twist(&Twist::new(1.0, 0.0, 0.0), 1.0), &Pose::new(1.0, 0.0, 0.0), 1e-15));
        let r = exp_twist(&Twist::new(0.0, 0.0, PI), 1.0);
        assert!(pose_close(&r, &Pose::new(0.0, 0.0, PI), 1e-15));
        let arc = exp_twist(&Twist::new(1.0, 0.0, PI / 2.0), 1.0);
        assert!(pose_close(&arc, &Pose::new(2.0 / PI, 2.0 / PI, PI / 2.0), 1e-14));
        let series = Pose::from_matrix(&expm_series(&Twist::new(1.0, 0.0, PI / 2.0).to_matrix()));
        assert!(pose_close(&arc, &series, 1e-13));
    }

    #[test]
    fn exp_straight_limit_is_continuous() {
        let xi0 = Twist::new(0.7, 0.1, 0.0);
        let xi1 = Twist::new(0.7, 0.1, 2e-9);
        let a = exp_twist(&xi0, 1.0);
        let b = exp_twist(&xi1, 1.0);
        assert!(pose_close(&a, &b, 1e-8));
    }

    #[test]
    fn adjoint_inverse_examples() {
        let xi = Twist::new(0.3, -0.2, 1.7);
        assert_eq!(adjoint_inverse_twist(&Pose::IDENTITY, &xi), xi);
        let straight = adjoint_inverse_twist(&Pose::new(0.0, 0.04, 0.0), &Twist::new(1.0, 0.0, 0.0));
        assert_eq!(straight, Twist::new(1.0, 0.0, 0.0));
        let bent = adjoint_inverse_twist(&Pose::new(0.0, 0.02, 0.0), &Twist::new(1.0, 0.0, 1.0));
        assert_abs_diff_eq!(bent.l, 0.98, epsilon = 1e-15);
        assert_abs_diff_eq!(bent.kappa, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn adjoint_inverse_matches_finite_difference_of_offset_frames() {
        // Velocity of the offset frame, obtained by differentiating g(t) = exp(t·xi) ∘ offset.
        let offset = Pose::new(0.0, 0.02, 0.0);
        let xi = Twist::new(1.0, 0.0, 1.0);
        let h = 1e-6;
        let g0 = offset;
        let g1 = exp_twist(&xi, h).compose(&offset);
        let body = log_pose(&g0.between(&g1)).scaled(1.0 / h);
        let expected = adjoint_inverse_twist(&offset, &xi);
        assert_abs_diff_eq!(body.l, expected.l, epsilon = 1e-6);
        assert_abs_diff_eq!(body.gamma, expected.gamma, epsilon = 1e-6);
        assert_abs_diff_eq!(body.kappa, expected.kappa, epsilon = 1e-6);
    }

    #[test]
    fn coadjoint_examples() {
        let w = Wrench::new(1.0, 2.0, 3.0);
        assert_eq!(coadjoint_transport_wrench(&Pose::IDENTITY, &w), w);
        let r = coadjoint_transport_wrench(&Pose::new(0.0, 0.0, PI / 2.0), &Wrench::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(r.force_norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.fy, 1.0, epsilon = 1e-15);
        // Force (0,1) acting at (1,0): moment about the origin = x·fy - y·fx = 1.
        let lever = coadjoint_transport_wrench(&Pose::new(1.0, 0.0, 0.0), &Wrench::new(0.0, 1.0, 0.0));
        assert_abs_diff_eq!(lever.m, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn product_of_exponentials_examples() {
        let poses = product_of_exponentials(&Pose::IDENTITY, &[Twist::new(1.0, 0.0, 0.0); 4], 4);
        assert_eq!(poses.len(), 5);
        assert!(pose_close(&poses[4], &Pose::new(1.0, 0.0, 0.0), 1e-15));

        let l = 0.8;
        let n = 64;
        let poses = product_of_exponentials(&Pose::IDENTITY, &vec![Twist::new(l, 0.0, PI); n], n);
        assert!(pose_close(&poses[n], &Pose::new(0.0, 2.0 * l / PI, PI), 1e-6));

        let base = Pose::new(0.3, -1.0, 2.0);
        let poses = product_of_exponentials(&base, &[Twist::ZERO; 3], 3);
        assert!(poses.iter().all(|p| pose_close(p, &base, 1e-15)));
    }

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (-3.0..3.0f64, -3.0..3.0f64, -PI..PI).prop_map(|(x, y, t)| Pose::new(x, y, t))
    }

    fn arb_twist() -> impl Strategy<Value = Twist> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c)| Twist::new(a, b, c))
    }

    proptest! {
        #[test]
        fn compose_matches_matrix_product(a in arb_pose(), b in arb_pose()) {
            let direct = Pose::from_matrix(&(a.to_matrix() * b.to_matrix()));
            prop_assert!(pose_close(&a.compose(&b), &direct, 1e-12));
        }

        #[test]
        fn rotation_block_is_orthonormal(g in arb_pose()) {
            let m = g.to_matrix();
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            prop_assert!((det - 1.0).abs() < 1e-12);
        }

        #[test]
        fn compose_with_inverse_is_identity(g in arb_pose()) {
            prop_assert!(pose_close(&g.compose(&g.inverse()), &Pose::IDENTITY, 1e-10));
        }

        #[test]
        fn exp_matches_series(xi in arb_twist()) {
            let series = Pose::from_matrix(&expm_series(&xi.to_matrix()));
            prop_assert!(pose_close(&exp_twist(&xi, 1.0), &series, 1e-10));
        }

        #[test]
        fn exp_log_round_trip(l in -3.0..3.0f64, g in -3.0..3.0f64, k in -3.1..3.1f64) {
            let xi = Twist::new(l, g, k);
            let back = log_pose(&exp_twist(&xi, 1.0));
            prop_assert!((back - xi).as_array().iter().all(|d| d.abs() < 1e-9));
        }

        #[test]
        fn adjoint_of_inverse_is_inverse(g in arb_pose()) {
            let prod = g.adjoint() * g.inverse().adjoint();
            prop_assert!((prod - Matrix3::identity()).abs().max() < 1e-12);
        }

        #[test]
        fn adjoint_apply_matches_matrix(g in arb_pose(), xi in arb_twist()) {
            let v = g.adjoint() * nalgebra::Vector3::from(xi.as_array());
            let d = g.adjoint_apply(&xi);
            prop_assert!((v[0] - d.l).abs() < 1e-12 && (v[1] - d.gamma).abs() < 1e-12 && (v[2] - d.kappa).abs() < 1e-12);
        }

        #[test]
        fn coadjoint_preserves_pairing(g in arb_pose(), xi in arb_twist(), w in arb_twist()) {
            let w = Wrench::new(w.l, w.gamma, w.kappa);
            let lhs = coadjoint_transport_wrench(&g, &w).pair(&xi);
            let rhs = w.pair(&adjoint_inverse_twist(&g, &xi));
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn refinement_converges(xi in arb_twist()) {
            // Constant twists integrate exactly, so any subdivision reaches the same tip.
            let a = product_of_exponentials(&Pose::IDENTITY, &[xi; 3], 3);
            let b = product_of_exponentials(&Pose::IDENTITY, &[xi; 9], 9);
            prop_assert!(pose_close(&a[3], &b[9], 1e-9));
        }
    }
}
