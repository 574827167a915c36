//! Task shape generators.
//!
//! Shapes are built from per-segment `(length, curvature)` profiles with zero
//! shear. Lengths and curvatures are total-arm-scale like every twist.

use serde::{Deserialize, Serialize};

use crate::arm::ArmShape;
use crate::error::{Error, Result};
use crate::lie::{Pose, Twist, STRAIGHT_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    ConstantCurvature {
        length: f64,
        curvature: f64,
    },
    /// First `split` segments at `first`, the rest at `second`.
    TwoArc {
        length: f64,
        first: f64,
        second: f64,
        split: Option<usize>,
    },
    /// Curvature varying linearly from `base` to `tip`.
    CurvatureRamp {
        length: f64,
        base: f64,
        tip: f64,
    },
    /// Gentle curvature everywhere except the last segment.
    TipCurl {
        length: f64,
        body: f64,
        tip: f64,
    },
    /// Explicit `[length, shear, curvature]` per segment.
    Twists {
        twists: Vec<[f64; 3]>,
    },
    Named {
        name: String,
    },
}

impl ShapeSpec {
    pub fn build(&self, segments: usize) -> Result<ArmShape> {
        if segments == 0 {
            return Err(Error::InvalidTask("shape needs at least one segment".into()));
        }
        let n = segments;
        let profile: Vec<(f64, f64)> = match self {
            ShapeSpec::ConstantCurvature { length, curvature } => vec![(*length, *curvature); n],
            ShapeSpec::TwoArc { length, first, second, split } => {
                let k = split.unwrap_or(n.div_ceil(2)).min(n);
                (0..n).map(|i| (*length, if i < k { *first } else { *second })).collect()
            }
            ShapeSpec::CurvatureRamp { length, base, tip } => (0..n)
                .map(|i| {
                    let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    (*length, base + t * (tip - base))
                })
                .collect(),
            ShapeSpec::TipCurl { length, body, tip } => {
                (0..n).map(|i| (*length, if i + 1 == n { *tip } else { *body })).collect()
            }
            ShapeSpec::Twists { twists } => {
                if twists.len() != n {
                    return Err(Error::DimensionMismatch(format!("{} twists for {n} segments", twists.len())));
                }
                let shape = ArmShape::new(Pose::IDENTITY, twists.iter().map(|t| Twist::from_array(*t)).collect());
                return check(shape);
            }
            ShapeSpec::Named { name } => {
                return named_shape(name)
                    .ok_or_else(|| Error::InvalidTask(format!("unknown shape name `{name}`")))?
                    .build(n)
            }
        };
        check(ArmShape::new(Pose::IDENTITY, profile.into_iter().map(|(l, k)| Twist::new(l, 0.0, k)).collect()))
    }
}

fn check(shape: ArmShape) -> Result<ArmShape> {
    if shape.twists().iter().any(|t| !t.is_finite() || t.l <= 0.0) {
        return Err(Error::InvalidTask("shape twists must be finite with positive length".into()));
    }
    Ok(shape)
}

/// Built-in task shapes.
///
/// * `reach`: extended and gently curved, reaching high.
/// * `s_curve`: slightly extended S-bend.
/// * `tip_curl`: extended, gently curved body with a tightly curled last segment.
pub fn named_shape(name: &str) -> Option<ShapeSpec> {
    Some(match name {
        "reach" | "shape1" => ShapeSpec::CurvatureRamp { length: 0.56, base: 0.4, tip: 0.9 },
        "s_curve" | "shape2" => ShapeSpec::TwoArc { length: 0.54, first: 0.9, second: -0.9, split: None },
        "tip_curl" | "shape3" => ShapeSpec::TipCurl { length: 0.55, body: 0.3, tip: 4.0 },
        _ => return None,
    })
}

pub const NAMED_SHAPES: [&str; 3] = ["reach", "s_curve", "tip_curl"];

/// End point of an arc of the given length and turning angle.
fn arc_chord(length: f64, angle: f64) -> [f64; 2] {
    if angle.abs() <= STRAIGHT_EPS {
        [length * (1.0 - angle * angle / 6.0), length * angle / 2.0]
    } else {
        [length * angle.sin() / angle, length * (1.0 - angle.cos()) / angle]
    }
}

/// Shape of two circular arcs ending exactly at `tip`.
///
/// The first `split` segments turn through `first_angle`, the rest through
/// the remaining angle; the two arc lengths are solved so the end point
/// matches. Returns `None` when either length would be non-positive.
pub fn two_arc_to_tip(segments: usize, split: usize, first_angle: f64, tip: &Pose) -> Option<ArmShape> {
    if split == 0 || split >= segments {
        return None;
    }
    let second_angle = tip.theta - first_angle;
    let a = arc_chord(1.0, first_angle);
    let rot = Pose::new(0.0, 0.0, first_angle);
    let b = rot.rotate(arc_chord(1.0, second_angle));
    let det = a[0] * b[1] - a[1] * b[0];
    if det.abs() < 1e-12 {
        return None;
    }
    let la = (tip.x * b[1] - tip.y * b[0]) / det;
    let lb = (a[0] * tip.y - a[1] * tip.x) / det;
    if !(la > 0.0 && lb > 0.0) {
        return None;
    }
    let n = segments as f64;
    let (na, nb) = (split as f64, (segments - split) as f64);
    let twists = (0..segments)
        .map(|i| {
            if i < split {
                Twist::new(la * n / na, 0.0, first_angle * n / na)
            } else {
                Twist::new(lb * n / nb, 0.0, second_angle * n / nb)
            }
        })
        .collect();
    let shape = ArmShape::new(Pose::IDENTITY, twists);
    let end = shape.tip();
    ((end.x - tip.x).abs() < 1e-9 && (end.y - tip.y).abs() < 1e-9).then_some(shape)
}

/// Tip-equivalent candidates: every split, with `angles` first-arc angles
/// within `spread` of the split's proportional share of the tip angle.
pub fn tip_candidates(segments: usize, tip: &Pose, angles: usize, spread: f64) -> Vec<ArmShape> {
    let mut out = Vec::new();
    for split in 1..segments {
        for k in 0..angles {
            let t = if angles == 1 { 0.5 } else { k as f64 / (angles - 1) as f64 };
            let first = tip.theta * split as f64 / segments as f64 + spread * (2.0 * t - 1.0);
            if let Some(s) = two_arc_to_tip(segments, split, first, tip) {
                out.push(s);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn generators_have_expected_profiles() {
        let c = ShapeSpec::ConstantCurvature { length: 0.5, curvature: 1.0 }.build(5).unwrap();
        assert!(c.twists().iter().all(|t| *t == Twist::new(0.5, 0.0, 1.0)));
        assert_abs_diff_eq!(c.tip().theta, 1.0, epsilon = 1e-12);
        let s = ShapeSpec::TwoArc { length: 0.5, first: 1.0, second: -1.0, split: Some(2) }.build(4).unwrap();
        assert_abs_diff_eq!(s.tip().theta, 0.0, epsilon = 1e-12);
        let r = ShapeSpec::CurvatureRamp { length: 0.5, base: 0.0, tip: 2.0 }.build(5).unwrap();
        assert_abs_diff_eq!(r.twists()[2].kappa, 1.0);
        let t = ShapeSpec::TipCurl { length: 0.5, body: 0.0, tip: 5.0 }.build(5).unwrap();
        assert_abs_diff_eq!(t.tip().theta, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn named_shapes_build() {
        for n in NAMED_SHAPES {
            assert!(ShapeSpec::Named { name: n.into() }.build(5).is_ok());
        }
        assert!(ShapeSpec::Named { name: "nope".into() }.build(5).is_err());
    }

    #[test]
    fn explicit_twists_need_matching_count() {
        assert!(ShapeSpec::Twists { twists: vec![[0.5, 0.0, 0.0]; 3] }.build(5).is_err());
        assert!(ShapeSpec::Twists { twists: vec![[-0.5, 0.0, 0.0]; 5] }.build(5).is_err());
    }

    #[test]
    fn two_arc_shapes_meet_tip() {
        let tip = ShapeSpec::ConstantCurvature { length: 0.5, curvature: 1.2 }.build(5).unwrap().tip();
        let cands = tip_candidates(5, &tip, 5, 0.4);
        assert!(cands.len() >= 3);
        for c in &cands {
            let e = c.tip();
            assert!((e.x - tip.x).abs() < 1e-9 && (e.y - tip.y).abs() < 1e-9);
            assert_abs_diff_eq!(e.theta, tip.theta, epsilon = 1e-9);
        }
        // The constant-curvature arc itself is in the family.
        let same = two_arc_to_tip(5, 2, 1.2 * 2.0 / 5.0, &tip).unwrap();
        for t in same.twists() {
            assert_abs_diff_eq!(t.l, 0.5, epsilon = 1e-9);
            assert_abs_diff_eq!(t.kappa, 1.2, epsilon = 1e-9);
        }
    }
}
