//! The arm as a mechanical object: its design, its shape, and the internal
//! reaction and external load wrenches that must balance at every node.
//!
//! Node `i` (0-based) sits at the start of segment `i`; segment `i` carries
//! centerline twist `twists[i]`. Twists are total-arm-scale, so a straight
//! arm of length `L` has twists `(L, 0, 0)` on every segment.
//!
//! Reaction wrenches follow the same sign convention as the loads they
//! balance: `a_i` is the wrench the proximal cross-section exerts on the
//! distal part, expressed in node `i`'s body frame, and equilibrium reads
//! `a_i + q_i = 0`. An actuator at lateral offset `r` (frame `(0, r, 0)`)
//! shortens under positive curvature, and its axial force `f` contributes
//! `-r·f` to the moment.

use crate::actuator::{ActuatorModel, BellowsParams, McKibbenParams};
use crate::error::{Error, Result};
use crate::lie::{adjoint_inverse_twist, coadjoint_transport_wrench, product_of_exponentials, Pose, Twist, Wrench};

pub const DEFAULT_SHEAR_PENALTY: f64 = 1e5;
pub const DEFAULT_SEGMENTS: usize = 5;
pub const DEFAULT_NEUTRAL_LENGTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Actuator {
    /// Lateral offset from the centerline, m.
    pub offset: f64,
    /// Resting length of the whole actuator, m.
    pub neutral_length: f64,
    pub model: ActuatorModel,
}

impl Actuator {
    pub fn new(offset: f64, neutral_length: f64, model: ActuatorModel) -> Self {
        Self { offset, neutral_length, model }
    }

    pub fn frame(&self) -> Pose {
        Pose::new(0.0, self.offset, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmDesign {
    pub name: String,
    pub actuators: Vec<Actuator>,
    pub segments: usize,
    pub base_pose: Pose,
    /// Shear stiffness per actuator, N per unit shear.
    pub shear_penalty: f64,
}

impl ArmDesign {
    pub fn new(name: impl Into<String>, actuators: Vec<Actuator>, segments: usize) -> Result<Self> {
        let d = Self {
            name: name.into(),
            actuators,
            segments,
            base_pose: Pose::IDENTITY,
            shear_penalty: DEFAULT_SHEAR_PENALTY,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.actuators.len() < 2 {
            return Err(Error::InvalidDesign(format!("need at least 2 actuators, got {}", self.actuators.len())));
        }
        if self.segments < 1 {
            return Err(Error::InvalidDesign("segment count must be at least 1".into()));
        }
        for (k, a) in self.actuators.iter().enumerate() {
            if !(a.neutral_length > 0.0 && a.neutral_length.is_finite()) {
                return Err(Error::InvalidDesign(format!("actuator {k}: neutral_length must be positive")));
            }
            if !a.offset.is_finite() {
                return Err(Error::InvalidDesign(format!("actuator {k}: offset must be finite")));
            }
            a.model.validate().map_err(|e| Error::InvalidDesign(format!("actuator {k}: {e}")))?;
        }
        let first = self.actuators[0].offset;
        if self.actuators.iter().all(|a| a.offset == first) {
            return Err(Error::InvalidDesign("actuators need at least two distinct offsets".into()));
        }
        if !(self.shear_penalty > 0.0 && self.shear_penalty.is_finite()) {
            return Err(Error::InvalidDesign("shear_penalty must be positive".into()));
        }
        Ok(())
    }

    pub fn actuator_count(&self) -> usize {
        self.actuators.len()
    }

    pub fn max_pressures(&self) -> Vec<f64> {
        self.actuators.iter().map(|a| a.model.max_pressure).collect()
    }

    pub fn mean_neutral_length(&self) -> f64 {
        self.actuators.iter().map(|a| a.neutral_length).sum::<f64>() / self.actuators.len() as f64
    }

    /// Straight, unstrained-on-average shape used as the default solver guess.
    pub fn neutral_shape(&self) -> ArmShape {
        ArmShape::new(self.base_pose, vec![Twist::new(self.mean_neutral_length(), 0.0, 0.0); self.segments])
    }

    pub fn check_pressures(&self, pressures: &[f64]) -> Result<()> {
        if pressures.len() != self.actuators.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} pressures for {} actuators",
                pressures.len(),
                self.actuators.len()
            )));
        }
        for (k, (&p, a)) in pressures.iter().zip(&self.actuators).enumerate() {
            if !(0.0..=a.model.max_pressure).contains(&p) {
                return Err(Error::PressureOutOfRange { actuator: k, value: p, max: a.model.max_pressure });
            }
        }
        Ok(())
    }

    pub fn check_shape(&self, shape: &ArmShape) -> Result<()> {
        if shape.segments() != self.segments {
            return Err(Error::DimensionMismatch(format!(
                "shape has {} segments, design has {}",
                shape.segments(),
                self.segments
            )));
        }
        Ok(())
    }

    /// Two bellows at ±25 mm and two McKibben muscles at ±50 mm.
    pub fn antagonistic() -> Self {
        let l = DEFAULT_NEUTRAL_LENGTH;
        let bel = || ActuatorModel::bellows(BellowsParams::default());
        let mck = || ActuatorModel::mckibben(McKibbenParams::default());
        Self::new(
            "antagonistic",
            vec![
                Actuator::new(0.025, l, bel()),
                Actuator::new(-0.025, l, bel()),
                Actuator::new(0.05, l, mck()),
                Actuator::new(-0.05, l, mck()),
            ],
            DEFAULT_SEGMENTS,
        )
        .expect("builtin design is valid")
    }

    pub fn bellows_only() -> Self {
        let l = DEFAULT_NEUTRAL_LENGTH;
        let bel = || ActuatorModel::bellows(BellowsParams::default());
        Self::new(
            "bellows_only",
            vec![Actuator::new(0.025, l, bel()), Actuator::new(-0.025, l, bel())],
            DEFAULT_SEGMENTS,
        )
        .expect("builtin design is valid")
    }

    pub fn muscle_only() -> Self {
        let l = DEFAULT_NEUTRAL_LENGTH;
        let mck = || ActuatorModel::mckibben(McKibbenParams::default());
        Self::new("muscle_only", vec![Actuator::new(0.05, l, mck()), Actuator::new(-0.05, l, mck())], DEFAULT_SEGMENTS)
            .expect("builtin design is valid")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "antagonistic" => Some(Self::antagonistic()),
            "bellows_only" | "bellows-only" => Some(Self::bellows_only()),
            "muscle_only" | "muscle-only" | "mckibben_only" => Some(Self::muscle_only()),
            _ => None,
        }
    }
}

/// Centerline twists together with the poses they integrate to. The poses are
/// derived on construction and cannot be edited independently.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmShape {
    base: Pose,
    twists: Vec<Twist>,
    poses: Vec<Pose>,
}

impl ArmShape {
    pub fn new(base: Pose, twists: Vec<Twist>) -> Self {
        let poses = product_of_exponentials(&base, &twists, twists.len().max(1));
        Self { base, twists, poses }
    }

    pub fn base(&self) -> Pose {
        self.base
    }

    pub fn twists(&self) -> &[Twist] {
        &self.twists
    }

    /// `segments() + 1` poses, base first.
    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn tip(&self) -> Pose {
        *self.poses.last().unwrap()
    }

    pub fn segments(&self) -> usize {
        self.twists.len()
    }

    pub fn with_twists(&self, twists: Vec<Twist>) -> Self {
        Self::new(self.base, twists)
    }

    /// Flattens twists into `[l0, g0, k0, l1, ...]`.
    pub fn to_vector(&self) -> Vec<f64> {
        self.twists.iter().flat_map(|t| t.as_array()).collect()
    }

    pub fn from_vector(base: Pose, v: &[f64]) -> Self {
        Self::new(base, v.chunks_exact(3).map(|c| Twist::new(c[0], c[1], c[2])).collect())
    }
}

/// Actuator twists at one segment.
fn actuator_twists<'a>(design: &'a ArmDesign, xi: &'a Twist) -> impl Iterator<Item = (&'a Actuator, Twist)> + 'a {
    design.actuators.iter().map(move |a| (a, adjoint_inverse_twist(&a.frame(), xi)))
}

/// Per-actuator strains on segment `i`.
pub fn actuator_strains(design: &ArmDesign, shape: &ArmShape, i: usize) -> Vec<f64> {
    actuator_twists(design, &shape.twists()[i]).map(|(a, t)| (t.l - a.neutral_length) / a.neutral_length).collect()
}

/// Reaction wrench with the number of actuators whose strain was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reaction {
    pub wrench: Wrench,
    pub clamped: usize,
}

/// Reaction for a single segment twist. Pressures are not validated here.
pub fn reaction_for_twist(design: &ArmDesign, xi: &Twist, pressures: &[f64]) -> Reaction {
    let mut w = Wrench::ZERO;
    let mut clamped = 0;
    for ((a, t), &p) in actuator_twists(design, xi).zip(pressures) {
        let eps = (t.l - a.neutral_length) / a.neutral_length;
        let f = a.model.axial_force(eps, p);
        clamped += f.clamped as usize;
        w.fx += f.force;
        w.fy -= design.shear_penalty * t.gamma;
        w.m += -a.offset * f.force + a.model.bending_moment(t.kappa, p);
    }
    Reaction { wrench: w, clamped }
}

/// Internal reaction wrench at node `i`.
pub fn reaction_wrench(design: &ArmDesign, shape: &ArmShape, pressures: &[f64], i: usize) -> Wrench {
    reaction_for_twist(design, &shape.twists()[i], pressures).wrench
}

/// Tip load given in world axes, re-expressed in the tip body frame.
pub fn tip_wrench_body(shape: &ArmShape, q_tip: &Wrench) -> Wrench {
    let [fx, fy] = shape.tip().unrotate([q_tip.fx, q_tip.fy]);
    Wrench::new(fx, fy, q_tip.m)
}

/// Wrench the tip load induces at each node `0..N`, in node body frames.
/// Depends only on the shape and the load.
pub fn load_wrench_sequence(shape: &ArmShape, q_tip: &Wrench) -> Vec<Wrench> {
    let tip = shape.tip();
    let q_body = tip_wrench_body(shape, q_tip);
    shape.poses()[..shape.segments()].iter().map(|g| coadjoint_transport_wrench(&g.between(&tip), &q_body)).collect()
}

/// Per-node equilibrium residual `a_i + q_i`.
pub fn residual(design: &ArmDesign, shape: &ArmShape, pressures: &[f64], q_tip: &Wrench) -> Vec<Wrench> {
    let loads = load_wrench_sequence(shape, q_tip);
    shape.twists().iter().zip(loads).map(|(xi, q)| reaction_for_twist(design, xi, pressures).wrench + q).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn builtin_designs_validate() {
        for d in [ArmDesign::antagonistic(), ArmDesign::bellows_only(), ArmDesign::muscle_only()] {
            d.validate().unwrap();
        }
    }

    #[test]
    fn design_validation_rejects() {
        let mut d = ArmDesign::bellows_only();
        d.actuators.truncate(1);
        assert!(d.validate().is_err());
        let mut d = ArmDesign::bellows_only();
        d.actuators[1].offset = d.actuators[0].offset;
        assert!(d.validate().is_err());
        let mut d = ArmDesign::bellows_only();
        d.actuators[0].neutral_length = 0.0;
        assert!(d.validate().is_err());
        let mut d = ArmDesign::bellows_only();
        d.segments = 0;
        assert!(d.validate().is_err());
    }

    #[test]
    fn pressure_checks() {
        let d = ArmDesign::antagonistic();
        assert!(d.check_pressures(&[0.0, 5e4, 1e5, 0.0]).is_ok());
        assert!(matches!(d.check_pressures(&[0.0, 6e4, 0.0, 0.0]), Err(Error::PressureOutOfRange { actuator: 1, .. })));
        assert!(matches!(d.check_pressures(&[0.0; 3]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn shape_poses_follow_twists() {
        let s = ArmShape::new(Pose::IDENTITY, vec![Twist::new(0.5, 0.0, 1.0); 4]);
        let t = s.with_twists(vec![Twist::new(0.5, 0.0, 0.0); 4]);
        assert_abs_diff_eq!(t.tip().x, 0.5, epsilon = 1e-15);
        assert_eq!(s.poses().len(), 5);
        assert_eq!(ArmShape::from_vector(s.base(), &s.to_vector()), s);
    }

    #[test]
    fn strain_examples() {
        let d = ArmDesign::antagonistic();
        let straight = ArmShape::new(Pose::IDENTITY, vec![Twist::new(0.5, 0.0, 0.0); 5]);
        assert!(actuator_strains(&d, &straight, 2).iter().all(|e| *e == 0.0));

        let kappa = 0.8;
        let bent = ArmShape::new(Pose::IDENTITY, vec![Twist::new(0.5, 0.0, kappa); 5]);
        let eps = actuator_strains(&d, &bent, 0);
        for (a, e) in d.actuators.iter().zip(&eps) {
            assert_abs_diff_eq!(*e, -a.offset * kappa / a.neutral_length, epsilon = 1e-15);
        }

        let mut centered = ArmDesign::bellows_only();
        centered.actuators[0].offset = 0.0;
        let s = ArmShape::new(Pose::IDENTITY, vec![Twist::new(0.6, 0.0, 2.0); 5]);
        assert_abs_diff_eq!(actuator_strains(&centered, &s, 1)[0], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn reaction_examples() {
        let d = ArmDesign::antagonistic();
        let neutral = d.neutral_shape();
        assert_eq!(reaction_wrench(&d, &neutral, &[0.0; 4], 0), Wrench::ZERO);

        let w = reaction_wrench(&d, &neutral, &[3e4, 3e4, 7e4, 7e4], 1);
        assert_abs_diff_eq!(w.m, 0.0, epsilon = 1e-14);

        // One bellows at r = 0.02 pushing 10 N on a straight shape: moment -r·f, no bending term at zero curvature.
        let mut single = ArmDesign::bellows_only();
        single.actuators[0].offset = 0.02;
        let s = ArmShape::new(Pose::IDENTITY, vec![Twist::new(0.5, 0.0, 0.0); 5]);
        let w = reaction_wrench(&single, &s, &[1e4, 0.0], 0);
        assert_abs_diff_eq!(w.fx, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.m, -0.2, epsilon = 1e-12);

        // With curvature the bending term adds K·(p/p̄)·kappa.
        let kappa = 0.3;
        let s = ArmShape::new(Pose::IDENTITY, vec![Twist::new(0.5, 0.0, kappa); 5]);
        let w = reaction_wrench(&single, &s, &[1e4, 0.0], 0);
        let f = 10.0 - 40.0 * (-0.02 * kappa / 0.5);
        let f2 = -40.0 * (0.025 * kappa / 0.5);
        let expected = -0.02 * f + 0.025 * f2 + (-0.285) * (1e4 / 5e4) * kappa;
        assert_abs_diff_eq!(w.m, expected, epsilon = 1e-12);
    }

    #[test]
    fn load_examples() {
        let s = ArmShape::new(Pose::IDENTITY, vec![Twist::new(0.5, 0.0, 0.7); 5]);
        assert!(load_wrench_sequence(&s, &Wrench::ZERO).iter().all(|w| *w == Wrench::ZERO));

        // Cantilever: straight arm along x, downward tip force F; base moment -F·L.
        let (len, force) = (0.5, 3.0);
        let straight = ArmShape::new(Pose::IDENTITY, vec![Twist::new(len, 0.0, 0.0); 5]);
        let q = load_wrench_sequence(&straight, &Wrench::new(0.0, -force, 0.0));
        assert_abs_diff_eq!(q[0].m, -force * len, epsilon = 1e-14);
        for (i, w) in q.iter().enumerate() {
            let remaining = len * (5 - i) as f64 / 5.0;
            assert_abs_diff_eq!(w.m, -force * remaining, epsilon = 1e-14);
        }

        let pure = load_wrench_sequence(&s, &Wrench::new(0.0, 0.0, 1.3));
        for w in pure {
            assert_abs_diff_eq!(w.fx, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(w.fy, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(w.m, 1.3, epsilon = 1e-15);
        }
    }

    #[test]
    fn residual_examples() {
        let d = ArmDesign::antagonistic();
        let neutral = d.neutral_shape();
        assert!(residual(&d, &neutral, &[0.0; 4], &Wrench::ZERO).iter().all(|w| *w == Wrench::ZERO));
        let load = Wrench::new(1.0, -2.0, 0.3);
        assert_eq!(residual(&d, &neutral, &[0.0; 4], &load), load_wrench_sequence(&neutral, &load));
    }

    proptest! {
        #[test]
        fn load_preserves_force_norm(ks in proptest::collection::vec(-3.0..3.0f64, 5),
                                     fx in -10.0..10.0f64, fy in -10.0..10.0f64, m in -1.0..1.0f64) {
            let s = ArmShape::new(Pose::new(0.1, 0.2, 0.3), ks.iter().map(|&k| Twist::new(0.5, 0.0, k)).collect());
            let tip = Wrench::new(fx, fy, m);
            for w in load_wrench_sequence(&s, &tip) {
                prop_assert!((w.force_norm() - tip.force_norm()).abs() < 1e-12);
            }
        }

        #[test]
        fn strains_are_affine_in_twist(a in proptest::array::uniform3(-2.0..2.0f64),
                                       b in proptest::array::uniform3(-2.0..2.0f64), t in -2.0..2.0f64) {
            let d = ArmDesign::antagonistic();
            let mk = |x: [f64; 3]| ArmShape::new(Pose::IDENTITY, vec![Twist::from_array(x)]);
            let mix = [0, 1, 2].map(|k| (1.0 - t) * a[k] + t * b[k]);
            let ea = actuator_strains(&d, &mk(a), 0);
            let eb = actuator_strains(&d, &mk(b), 0);
            let em = actuator_strains(&d, &mk(mix), 0);
            for k in 0..4 {
                prop_assert!((em[k] - ((1.0 - t) * ea[k] + t * eb[k])).abs() < 1e-12);
            }
        }
    }
}
