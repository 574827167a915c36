//! Forward mechanics: find the centerline twists at which every node's
//! reaction wrench balances the load, for given pressures and tip load.
//!
//! The 3N node equations are solved together as one square system by a
//! damped Newton method with a forward-difference Jacobian. A full Newton
//! step is tried first with backtracking; when that fails to reduce the
//! residual the solver falls back to Levenberg-Marquardt steps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::arm::{load_wrench_sequence, reaction_for_twist, ArmDesign, ArmShape};
use crate::error::{Error, Result};
use crate::lie::{Pose, Wrench};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSettings {
    /// Bound on the largest per-node residual norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial Levenberg parameter for fallback steps.
    pub damping: f64,
    pub fd_step: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self { tolerance: 1e-6, max_iterations: 200, damping: 1e-3, fd_step: 1e-7 }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iterations < 1 || !(self.fd_step > 0.0) || !(self.damping >= 0.0) {
            return Err(Error::InvalidDesign(format!("invalid solver settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub shape: ArmShape,
    /// Largest per-node residual norm at `shape`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Actuator evaluations at `shape` whose strain left the model's range.
    pub clamp_warnings: usize,
}

struct System<'a> {
    design: &'a ArmDesign,
    pressures: &'a [f64],
    q_tip: Wrench,
    base: Pose,
}

struct Eval {
    r: DVector<f64>,
    norm: f64,
    max_node: f64,
    bad_node: Option<usize>,
}

impl System<'_> {
    fn eval(&self, x: &DVector<f64>) -> Eval {
        let shape = ArmShape::from_vector(self.base, x.as_slice());
        let loads = load_wrench_sequence(&shape, &self.q_tip);
        let mut r = DVector::zeros(x.len());
        let mut max_node = 0.0f64;
        let mut bad_node = None;
        for (i, (xi, q)) in shape.twists().iter().zip(loads).enumerate() {
            let w = reaction_for_twist(self.design, xi, self.pressures).wrench + q;
            if !w.is_finite() && bad_node.is_none() {
                bad_node = Some(i);
            }
            r[3 * i] = w.fx;
            r[3 * i + 1] = w.fy;
            r[3 * i + 2] = w.m;
            max_node = max_node.max(w.norm());
        }
        let norm = if bad_node.is_some() { f64::INFINITY } else { r.norm() };
        Eval { r, norm, max_node, bad_node }
    }

    fn jacobian(&self, x: &DVector<f64>, r0: &DVector<f64>, h: f64) -> DMatrix<f64> {
        let n = x.len();
        let mut jac = DMatrix::zeros(n, n);
        let mut xp = x.clone();
        for j in 0..n {
            let step = h * x[j].abs().max(1.0);
            xp[j] = x[j] + step;
            let rp = self.eval(&xp).r;
            jac.set_column(j, &((rp - r0) / step));
            xp[j] = x[j];
        }
        jac
    }

    fn clamp_count(&self, shape: &ArmShape) -> usize {
        shape.twists().iter().map(|xi| reaction_for_twist(self.design, xi, self.pressures).clamped).sum()
    }
}

/// Solves `a_i(twists, p) + q_i(twists, q_tip) = 0` for all nodes.
///
/// Non-convergence is reported through `converged = false` with the best
/// iterate; a non-finite residual at an iterate is an error.
pub fn solve_equilibrium(
    design: &ArmDesign,
    pressures: &[f64],
    q_tip: &Wrench,
    initial: Option<&ArmShape>,
    settings: &SolveSettings,
) -> Result<EquilibriumResult> {
    design.check_pressures(pressures)?;
    settings.validate()?;
    let start = match initial {
        Some(s) => {
            design.check_shape(s)?;
            s.clone()
        }
        None => design.neutral_shape(),
    };
    let sys = System { design, pressures, q_tip: *q_tip, base: start.base() };
    let mut x = DVector::from_vec(start.to_vector());
    let mut cur = sys.eval(&x);
    if let Some(node) = cur.bad_node {
        return Err(Error::NonFiniteResidual { node });
    }
    let mut mu = settings.damping;
    let mut iterations = 0;

    while cur.max_node > settings.tolerance && iterations < settings.max_iterations {
        iterations += 1;
        let jac = sys.jacobian(&x, &cur.r, settings.fd_step);
        let mut accepted = None;

        if let Some(dx) = jac.clone().lu().solve(&(-&cur.r)) {
            if dx.iter().all(|v| v.is_finite()) {
                let mut alpha = 1.0;
                for _ in 0..12 {
                    let xt = &x + &dx * alpha;
                    let trial = sys.eval(&xt);
                    if trial.norm < cur.norm {
                        accepted = Some((xt, trial));
                        break;
                    }
                    alpha *= 0.5;
                }
            }
        }

        if accepted.is_none() {
            let jt = jac.transpose();
            let jtj = &jt * &jac;
            let g = &jt * &cur.r;
            for _ in 0..16 {
                let mut a = jtj.clone();
                for k in 0..a.nrows() {
                    a[(k, k)] += mu * jtj[(k, k)].max(1e-12);
                }
                if let Some(dx) = a.cholesky().map(|c| c.solve(&(-&g))) {
                    let xt = &x + &dx;
                    let trial = sys.eval(&xt);
                    if trial.norm < cur.norm {
                        mu = (mu / 3.0).max(1e-12);
                        accepted = Some((xt, trial));
                        break;
                    }
                }
                mu *= 10.0;
            }
        }

        match accepted {
            Some((xt, trial)) => {
                x = xt;
                cur = trial;
            }
            None => break,
        }
    }

    let shape = ArmShape::from_vector(start.base(), x.as_slice());
    let clamp_warnings = sys.clamp_count(&shape);
    Ok(EquilibriumResult {
        shape,
        residual_norm: cur.max_node,
        iterations,
        converged: cur.max_node <= settings.tolerance,
        clamp_warnings,
    })
}

/// Ramps pressures and load from zero in `steps` increments, warm-starting
/// each solve from the previous equilibrium.
pub fn continuation_solve(
    design: &ArmDesign,
    pressures: &[f64],
    q_tip: &Wrench,
    steps: usize,
    settings: &SolveSettings,
) -> Result<EquilibriumResult> {
    if steps == 0 {
        return Err(Error::InvalidDesign("continuation needs at least one step".into()));
    }
    design.check_pressures(pressures)?;
    let mut guess: Option<ArmShape> = None;
    for k in 1..=steps {
        let s = k as f64 / steps as f64;
        let p: Vec<f64> = pressures.iter().map(|v| v * s).collect();
        let res = solve_equilibrium(design, &p, &(*q_tip * s), guess.as_ref(), settings)
            .map_err(|e| Error::ContinuationFailed { step: k, source: Box::new(e) })?;
        if k == steps {
            return Ok(res);
        }
        if !res.converged {
            return Err(Error::ContinuationFailed {
                step: k,
                source: Box::new(Error::NotConverged { residual: res.residual_norm }),
            });
        }
        guess = Some(res.shape);
    }
    unreachable!("loop returns on the last step")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm::residual;
    use crate::lie::Twist;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_input_stays_neutral() {
        let d = ArmDesign::antagonistic();
        let r = solve_equilibrium(&d, &[0.0; 4], &Wrench::ZERO, None, &SolveSettings::default()).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 1);
        assert_eq!(r.shape, d.neutral_shape());
    }

    #[test]
    fn equal_bellows_pressure_extends_straight() {
        let d = ArmDesign::antagonistic();
        let r = solve_equilibrium(&d, &[3e4, 3e4, 0.0, 0.0], &Wrench::ZERO, None, &SolveSettings::default()).unwrap();
        assert!(r.converged);
        for t in r.shape.twists() {
            assert!(t.kappa.abs() < 1e-9);
            assert!(t.l > d.mean_neutral_length());
        }
    }

    #[test]
    fn axial_load_keeps_symmetric_arm_straight() {
        let d = ArmDesign::antagonistic();
        let r =
            solve_equilibrium(&d, &[2e4, 2e4, 5e4, 5e4], &Wrench::new(-6.0, 0.0, 0.0), None, &SolveSettings::default())
                .unwrap();
        assert!(r.converged);
        assert!(r.shape.twists().iter().all(|t| t.kappa.abs() < 1e-6));
    }

    #[test]
    fn bellows_pressure_bends_away_from_its_side() {
        // The +r bellows pushing lengthens the +r side, so curvature turns negative.
        let d = ArmDesign::bellows_only();
        let r = solve_equilibrium(&d, &[2e4, 0.0], &Wrench::ZERO, None, &SolveSettings::default()).unwrap();
        assert!(r.converged);
        assert!(r.shape.twists().iter().all(|t| t.kappa < 0.0));
    }

    #[test]
    fn random_solves_satisfy_residual_oracle() {
        let d = ArmDesign::antagonistic();
        let settings = SolveSettings::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut converged = 0;
        for _ in 0..100 {
            let p: Vec<f64> = d.max_pressures().iter().map(|m| rng.random_range(0.1..0.9) * m).collect();
            let q =
                Wrench::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-1.0..1.0));
            let r = solve_equilibrium(&d, &p, &q, None, &settings).unwrap();
            if r.converged {
                converged += 1;
                let res = residual(&d, &r.shape, &p, &q);
                assert!(res.iter().all(|w| w.norm() <= settings.tolerance));
            }
        }
        assert!(converged >= 95, "only {converged}/100 solves converged");
    }

    #[test]
    fn warm_start_converges_immediately() {
        let d = ArmDesign::antagonistic();
        let p = [1e4, 4e4, 6e4, 2e4];
        let q = Wrench::new(3.0, -5.0, 0.4);
        let first = solve_equilibrium(&d, &p, &q, None, &SolveSettings::default()).unwrap();
        let again = solve_equilibrium(&d, &p, &q, Some(&first.shape), &SolveSettings::default()).unwrap();
        assert!(again.converged && again.iterations <= 2);
    }

    #[test]
    fn deterministic() {
        let d = ArmDesign::bellows_only();
        let p = [3e4, 1e4];
        let q = Wrench::new(2.0, 4.0, -0.3);
        let a = solve_equilibrium(&d, &p, &q, None, &SolveSettings::default()).unwrap();
        let b = solve_equilibrium(&d, &p, &q, None, &SolveSettings::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_pressure_is_rejected() {
        let d = ArmDesign::bellows_only();
        assert!(solve_equilibrium(&d, &[6e4, 0.0], &Wrench::ZERO, None, &SolveSettings::default()).is_err());
    }

    #[test]
    fn nan_residual_names_node() {
        let d = ArmDesign::bellows_only();
        let mut tw = vec![Twist::new(0.5, 0.0, 0.0); 5];
        tw[3].kappa = f64::NAN;
        let s = ArmShape::new(Pose::IDENTITY, tw);
        match solve_equilibrium(&d, &[0.0, 0.0], &Wrench::ZERO, Some(&s), &SolveSettings::default()) {
            Err(Error::NonFiniteResidual { node }) => assert!(node <= 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn continuation_single_step_matches_direct() {
        let d = ArmDesign::antagonistic();
        let p = [2e4, 1e4, 3e4, 6e4];
        let q = Wrench::new(1.0, 2.0, 0.1);
        let s = SolveSettings::default();
        let a = continuation_solve(&d, &p, &q, 1, &s).unwrap();
        let b = solve_equilibrium(&d, &p, &q, None, &s).unwrap();
        assert_eq!(a, b);
        let z = continuation_solve(&d, &[0.0; 4], &Wrench::ZERO, 7, &s).unwrap();
        assert_eq!(z.shape, d.neutral_shape());
    }
}
