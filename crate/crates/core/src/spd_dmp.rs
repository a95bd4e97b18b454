//! Dynamic movement primitives whose state lives on the SPD manifold.
//!
//! A demonstration `{t_l, X_l}` is differentiated with Riemannian
//! logarithms, and every velocity is parallel-transported into the tangent
//! space of the first sample `X₁` (the anchor). In that common tangent space
//! the Mandel vectors behave like an ordinary multi-dimensional DMP:
//!
//! ```text
//! τ σ̇ = α_z (β_z vec(𝔹_{X→X₁}(Log_X(g))) − σ) + 𝓕(x)
//! X(t + δt) = Exp_X(𝔹_{X₁→X}(mat(σ)) δt / τ)
//! ```
//!
//! `σ` is the scaled velocity (`τ` times the time derivative), as in the
//! scalar system. Goal switching replaces the fixed attractor by
//! `τ ġ = α_g Log_g(g_new)`.

use nalgebra::{DMatrix, DVector};

use crate::dmp_core::{fit_weights, BasisSet, CanonicalSystem, DmpGains, DmpParams};
use crate::error::{Error, Result};
use crate::spd_manifold::{
    exp_map, log_map, mandel_len, mandel_mat, mandel_vec, parallel_transport, SpdMatrix,
    TangentVector,
};

/// Allowed deviation of each sampling interval from the mean interval.
pub const UNIFORM_DT_TOL: f64 = 1e-9;

/// Consecutive samples closer than this (relative Frobenius) count as a
/// zero-velocity step.
const DEGENERATE_STEP_TOL: f64 = 1e-14;

/// One demonstration: uniformly time-stamped SPD matrices of a common size.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdDemonstration {
    times: Vec<f64>,
    points: Vec<SpdMatrix>,
}

impl SpdDemonstration {
    pub fn new(times: Vec<f64>, points: Vec<SpdMatrix>) -> Result<Self> {
        if times.len() != points.len() {
            return Err(Error::InvalidDemonstration(format!(
                "{} time stamps for {} samples",
                times.len(),
                points.len()
            )));
        }
        if points.len() < 3 {
            return Err(Error::InvalidDemonstration(format!(
                "need at least 3 samples, got {}",
                points.len()
            )));
        }
        let dim = points[0].dim();
        if let Some(bad) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidDemonstration("non-finite time stamp".into()));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if dt <= 0.0 {
            return Err(Error::InvalidDemonstration(
                "time stamps must be strictly increasing".into(),
            ));
        }
        for (l, w) in times.windows(2).enumerate() {
            let step = w[1] - w[0];
            if step <= 0.0 {
                return Err(Error::InvalidDemonstration(format!(
                    "time stamps not strictly increasing at sample {}",
                    l + 1
                )));
            }
            if (step - dt).abs() > UNIFORM_DT_TOL {
                return Err(Error::InvalidDemonstration(format!(
                    "non-uniform sampling at sample {}: step {step} vs mean {dt}",
                    l + 1
                )));
            }
        }
        Ok(SpdDemonstration { times, points })
    }

    /// Samples at `t_l = l·dt`.
    pub fn from_uniform(dt: f64, points: Vec<SpdMatrix>) -> Result<Self> {
        let times = (0..points.len()).map(|l| l as f64 * dt).collect();
        Self::new(times, points)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[SpdMatrix] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn dt(&self) -> f64 {
        self.duration() / (self.len() - 1) as f64
    }

    pub fn duration(&self) -> f64 {
        self.times[self.len() - 1] - self.times[0]
    }
}

/// Demonstration derivatives expressed in the anchor tangent space.
#[derive(Debug, Clone)]
pub struct PreprocessedDemo {
    /// Time stamps relative to the first sample.
    pub times: Vec<f64>,
    pub points: Vec<SpdMatrix>,
    /// First derivative (unscaled), Mandel form.
    pub sigma: Vec<TangentVector>,
    /// Second derivative (unscaled), Mandel form.
    pub sigma_dot: Vec<TangentVector>,
    pub anchor: SpdMatrix,
    pub goal: SpdMatrix,
    pub dt: f64,
    /// Indices `l` whose step `X_{l−1} → X_l` was numerically zero; their
    /// velocity is set to zero.
    pub degenerate_steps: Vec<usize>,
}

pub fn preprocess(demo: &SpdDemonstration) -> Result<PreprocessedDemo> {
    let points = demo.points();
    let dt = demo.dt();
    let anchor = points[0].clone();
    let n = mandel_len(demo.dim());

    let mut sigma = Vec::with_capacity(points.len());
    sigma.push(DVector::zeros(n));
    let mut degenerate_steps = Vec::new();
    for l in 1..points.len() {
        let (prev, cur) = (&points[l - 1], &points[l]);
        let gap = (cur.as_matrix() - prev.as_matrix()).norm();
        if gap <= DEGENERATE_STEP_TOL * prev.as_matrix().norm() {
            degenerate_steps.push(l);
            sigma.push(DVector::zeros(n));
            continue;
        }
        let velocity = log_map(prev, cur)? * (1.0 / dt);
        let shared = parallel_transport(prev, &anchor, &velocity)?;
        sigma.push(mandel_vec(&shared).into_vector());
    }

    let last = points.len() - 1;
    let mut sigma_dot: Vec<DVector<f64>> = (0..last)
        .map(|l| (&sigma[l + 1] - &sigma[l]) / dt)
        .collect();
    sigma_dot.push(sigma_dot[last - 1].clone());

    let wrap = |v: Vec<DVector<f64>>| -> Vec<TangentVector> {
        v.into_iter()
            .map(|x| TangentVector::new(x).expect("Mandel length"))
            .collect()
    };
    Ok(PreprocessedDemo {
        times: demo.times().iter().map(|t| t - demo.times()[0]).collect(),
        points: points.to_vec(),
        sigma: wrap(sigma),
        sigma_dot: wrap(sigma_dot),
        anchor,
        goal: points[last].clone(),
        dt,
        degenerate_steps,
    })
}

/// `vec(𝔹_{X→X₁}(Log_X(g)))`: the goal direction seen from `x`, expressed in
/// the anchor tangent space.
fn goal_direction(x: &SpdMatrix, goal: &SpdMatrix, anchor: &SpdMatrix) -> Result<DVector<f64>> {
    let towards_goal = log_map(x, goal)?;
    let shared = parallel_transport(x, anchor, &towards_goal)?;
    Ok(mandel_vec(&shared).into_vector())
}

/// Regression data for the forcing term: one phase per sample and one
/// target row (length `n`) per sample.
#[derive(Debug, Clone)]
pub struct ForcingTargets {
    pub phases: Vec<f64>,
    pub values: DMatrix<f64>,
}

impl ForcingTargets {
    pub fn target(&self, l: usize) -> TangentVector {
        TangentVector::new(self.values.row(l).transpose()).expect("Mandel length")
    }
}

/// Targets `τ (τσ̇_l) − α_z (β_z vec(𝔹_{X_l→X₁}(Log_{X_l}(X_g))) − τσ_l)`.
pub fn compute_forcing_targets(
    pre: &PreprocessedDemo,
    gains: &DmpGains,
    canonical: &CanonicalSystem,
) -> Result<ForcingTargets> {
    let tau = canonical.tau;
    let n = pre.sigma[0].len();
    let mut values = DMatrix::zeros(pre.points.len(), n);
    let mut phases = Vec::with_capacity(pre.points.len());
    for (l, x) in pre.points.iter().enumerate() {
        let direction = goal_direction(x, &pre.goal, &pre.anchor)?;
        let z = pre.sigma[l].as_vector() * tau;
        let z_dot = pre.sigma_dot[l].as_vector() * tau;
        let target = z_dot * tau - (direction * gains.beta_z - z) * gains.alpha_z;
        values.row_mut(l).copy_from(&target.transpose());
        phases.push(canonical.phase(pre.times[l]));
    }
    Ok(ForcingTargets { phases, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdDmpParams {
    pub dmp: DmpParams,
    pub alpha_g: f64,
}

impl Default for SpdDmpParams {
    fn default() -> Self {
        let dmp = DmpParams::default();
        SpdDmpParams {
            dmp,
            alpha_g: dmp.gains.alpha_z / 2.0,
        }
    }
}

impl SpdDmpParams {
    pub fn validate(&self) -> Result<()> {
        self.dmp.validate()?;
        if !(self.alpha_g.is_finite() && self.alpha_g > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_g must be positive and finite, got {}",
                self.alpha_g
            )));
        }
        Ok(())
    }
}

/// A learned SPD skill. Immutable after training.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdDmpModel {
    pub gains: DmpGains,
    pub canonical: CanonicalSystem,
    pub basis: BasisSet,
    /// `N × n` forcing weights, one column per Mandel coordinate.
    pub weights: DMatrix<f64>,
    /// Base of the shared tangent space (first demonstration sample).
    pub anchor: SpdMatrix,
    pub goal: SpdMatrix,
    pub start: SpdMatrix,
    pub alpha_g: f64,
    /// Sampling interval of the training demonstration.
    pub dt: f64,
}

impl SpdDmpModel {
    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    pub fn vec_dim(&self) -> usize {
        mandel_len(self.dim())
    }

    pub fn tau(&self) -> f64 {
        self.canonical.tau
    }

    /// Consistency of sizes and finiteness, for models assembled by hand or
    /// loaded from disk.
    pub fn validate(&self) -> Result<()> {
        let m = self.dim();
        for p in [&self.goal, &self.start] {
            if p.dim() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: p.dim(),
                });
            }
        }
        if self.weights.nrows() != self.basis.len() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.len(),
                found: self.weights.nrows(),
            });
        }
        if self.weights.ncols() != self.vec_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.vec_dim(),
                found: self.weights.ncols(),
            });
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("non-finite forcing weight".into()));
        }
        DmpGains::new(self.gains.alpha_z, self.gains.beta_z)?;
        CanonicalSystem::new(self.canonical.alpha_x, self.canonical.tau)?;
        if !(self.alpha_g > 0.0 && self.alpha_g.is_finite()) {
            return Err(Error::InvalidParameter("alpha_g must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        Ok(())
    }

    /// Forcing vector `𝓕(x)`.
    pub fn forcing(&self, x: f64) -> Result<DVector<f64>> {
        self.basis.forcing_vector(&self.weights, x)
    }

    /// Copy with a different movement duration. Experimental: the weights are
    /// not re-normalized for the new time scale.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        let mut out = self.clone();
        out.canonical = CanonicalSystem::new(self.canonical.alpha_x, tau)?;
        Ok(out)
    }
}

pub fn train(demo: &SpdDemonstration, params: &SpdDmpParams) -> Result<SpdDmpModel> {
    params.validate()?;
    let canonical = CanonicalSystem::new(params.dmp.alpha_x, demo.duration())?;
    let basis = BasisSet::new(params.dmp.n_basis, params.dmp.alpha_x)?;
    let pre = preprocess(demo)?;
    let targets = compute_forcing_targets(&pre, &params.dmp.gains, &canonical)?;
    let weights = fit_weights(&basis, &targets.phases, &targets.values)?;
    Ok(SpdDmpModel {
        gains: params.dmp.gains,
        canonical,
        basis,
        weights,
        start: pre.anchor.clone(),
        anchor: pre.anchor,
        goal: pre.goal,
        alpha_g: params.alpha_g,
        dt: pre.dt,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproductionState {
    pub t: f64,
    pub x: SpdMatrix,
    /// Scaled velocity in the anchor tangent space.
    pub sigma: TangentVector,
    pub goal: SpdMatrix,
}

impl ReproductionState {
    pub fn at_rest(start: SpdMatrix, goal: SpdMatrix) -> Self {
        let n = mandel_len(start.dim());
        ReproductionState {
            t: 0.0,
            x: start,
            sigma: TangentVector::zeros(n).expect("Mandel length"),
            goal,
        }
    }
}

/// One explicit Euler step of the SPD system. The goal is held fixed.
pub fn step(model: &SpdDmpModel, state: &ReproductionState, dt: f64) -> Result<ReproductionState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let m = model.dim();
    for d in [state.x.dim(), state.goal.dim(), state.sigma.matrix_dim()] {
        if d != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: d,
            });
        }
    }
    let tau = model.tau();
    let DmpGains { alpha_z, beta_z } = model.gains;

    let phase = model.canonical.phase(state.t);
    let forcing = model.forcing(phase)?;
    let direction = goal_direction(&state.x, &state.goal, &model.anchor)?;
    let sigma = state.sigma.as_vector();
    let sigma_dot = ((direction * beta_z - sigma) * alpha_z + forcing) / tau;

    let velocity = parallel_transport(&model.anchor, &state.x, &mandel_mat(&state.sigma))?;
    let x = exp_map(&state.x, &(velocity * (dt / tau)))?;
    let sigma = TangentVector::new(sigma + sigma_dot * dt)?;

    Ok(ReproductionState {
        t: state.t + dt,
        x,
        sigma,
        goal: state.goal.clone(),
    })
}

/// Moves the goal towards `new_goal` from time `at` on, following
/// `τ ġ = α_g Log_g(g_new)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalSwitch {
    /// Switching instant in seconds.
    pub at: f64,
    pub new_goal: SpdMatrix,
    pub alpha_g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub matrix: SpdMatrix,
}

/// Integrates the model from rest at `start` for `duration` seconds.
///
/// Returns `round(duration / dt) + 1` points starting at `t = 0`. Failures
/// inside the loop are reported as [`Error::Rollout`] with the step index.
pub fn reproduce(
    model: &SpdDmpModel,
    start: &SpdMatrix,
    goal: &SpdMatrix,
    dt: f64,
    duration: f64,
    goal_switch: Option<&GoalSwitch>,
) -> Result<Vec<TrajectoryPoint>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let m = model.dim();
    for d in [start.dim(), goal.dim()] {
        if d != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: d,
            });
        }
    }
    if let Some(sw) = goal_switch {
        if !(0.0..duration).contains(&sw.at) {
            return Err(Error::InvalidParameter(format!(
                "switch time {} outside [0, {duration})",
                sw.at
            )));
        }
        if sw.new_goal.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: sw.new_goal.dim(),
            });
        }
        if !(sw.alpha_g > 0.0 && sw.alpha_g.is_finite()) {
            return Err(Error::InvalidParameter("alpha_g must be positive".into()));
        }
    }

    let steps = (duration / dt).round() as usize;
    let tau = model.tau();
    let mut state = ReproductionState::at_rest(start.clone(), goal.clone());
    let mut out = Vec::with_capacity(steps + 1);
    out.push(TrajectoryPoint {
        t: 0.0,
        matrix: state.x.clone(),
    });
    for k in 0..steps {
        let wrap = |e: Error| Error::Rollout {
            step: k + 1,
            source: Box::new(e),
        };
        let mut next = step(model, &state, dt).map_err(wrap)?;
        next.t = (k + 1) as f64 * dt;
        if let Some(sw) = goal_switch {
            if state.t >= sw.at {
                let pull = log_map(&state.goal, &sw.new_goal).map_err(wrap)?;
                next.goal =
                    exp_map(&state.goal, &(pull * (sw.alpha_g * dt / tau))).map_err(wrap)?;
            }
        }
        out.push(TrajectoryPoint {
            t: next.t,
            matrix: next.x.clone(),
        });
        state = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmp_core::{forcing_targets, ScalarDmp};
    use crate::metrics::log_euclidean_dist;
    use crate::spd_manifold::geodesic;

    fn diag(d: &[f64]) -> SpdMatrix {
        SpdMatrix::from_diagonal(d).unwrap()
    }

    fn smooth(s: f64) -> f64 {
        10.0 * s.powi(3) - 15.0 * s.powi(4) + 6.0 * s.powi(5)
    }

    /// Diagonal demonstration with log-eigenvalues moving along min-jerk
    /// profiles.
    fn diagonal_demo(len: usize, dt: f64) -> SpdDemonstration {
        let points = (0..len)
            .map(|l| {
                let s = smooth(l as f64 / (len - 1) as f64);
                diag(&[2.0 * (1.5 * s).exp(), 0.5 * (-0.8 * s).exp(), 1.0 + 3.0 * s])
            })
            .collect();
        SpdDemonstration::from_uniform(dt, points).unwrap()
    }

    #[test]
    fn demonstration_validation() {
        let p = SpdMatrix::identity(2);
        assert!(SpdDemonstration::from_uniform(0.1, vec![p.clone(), p.clone()]).is_err());
        assert!(
            SpdDemonstration::new(vec![0.0, 0.1, 0.3], vec![p.clone(), p.clone(), p.clone()])
                .is_err()
        );
        assert!(
            SpdDemonstration::new(vec![0.0, 0.1, 0.1], vec![p.clone(), p.clone(), p.clone()])
                .is_err()
        );
        assert!(SpdDemonstration::new(
            vec![0.0, 0.1, 0.2],
            vec![p.clone(), p.clone(), SpdMatrix::identity(3)]
        )
        .is_err());
        let ok = SpdDemonstration::new(vec![1.0, 1.1, 1.2], vec![p.clone(), p.clone(), p]).unwrap();
        assert!((ok.dt() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn constant_demo_has_zero_derivatives_and_weights() {
        let x = SpdMatrix::from_row_slice(2, &[3.0, 0.5, 0.5, 1.0]).unwrap();
        let demo = SpdDemonstration::from_uniform(0.01, vec![x; 50]).unwrap();
        let pre = preprocess(&demo).unwrap();
        assert!(pre
            .sigma
            .iter()
            .chain(&pre.sigma_dot)
            .all(|v| v.as_vector().iter().all(|&e| e == 0.0)));
        assert_eq!(pre.degenerate_steps.len(), 49);
        let cs = CanonicalSystem::new(2.0, demo.duration()).unwrap();
        let targets = compute_forcing_targets(&pre, &DmpGains::default(), &cs).unwrap();
        assert!(targets.values.iter().all(|&v| v == 0.0));
        let model = train(&demo, &SpdDmpParams::default()).unwrap();
        assert!(model.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn geodesic_demo_has_constant_velocity() {
        let a = SpdMatrix::from_row_slice(2, &[2.0, 0.4, 0.4, 1.0]).unwrap();
        let b = SpdMatrix::from_row_slice(2, &[0.7, -0.2, -0.2, 3.0]).unwrap();
        let len = 41;
        let dt = 0.05;
        let points = (0..len)
            .map(|l| geodesic(&a, &b, l as f64 / (len - 1) as f64).unwrap())
            .collect();
        let pre = preprocess(&SpdDemonstration::from_uniform(dt, points).unwrap()).unwrap();
        // closed-form velocity of the geodesic, already in 𝒯_A
        let expected = mandel_vec(&(log_map(&a, &b).unwrap() * (1.0 / ((len - 1) as f64 * dt))));
        for l in 1..len {
            let err = (pre.sigma[l].as_vector() - expected.as_vector()).norm();
            assert!(
                err < 1e-9 * expected.as_vector().norm(),
                "l={l} err={err:e}"
            );
        }
        for l in 1..len {
            assert!(pre.sigma_dot[l].as_vector().norm() < 1e-7, "l={l}");
        }
    }

    #[test]
    fn diagonal_demo_velocity_closed_form() {
        let dt = 0.02;
        let demo = diagonal_demo(30, dt);
        let pre = preprocess(&demo).unwrap();
        let first = demo.points()[0].as_matrix().diagonal();
        for l in 1..demo.len() {
            let (prev, cur) = (
                demo.points()[l - 1].as_matrix(),
                demo.points()[l].as_matrix(),
            );
            let v = pre.sigma[l].as_vector();
            for i in 0..3 {
                let expected = first[i] * (cur[(i, i)].ln() - prev[(i, i)].ln()) / dt;
                assert!(
                    (v[i] - expected).abs() < 1e-10 * expected.abs().max(1.0),
                    "l={l} i={i}"
                );
            }
            assert!(v.rows(3, 3).iter().all(|e| e.abs() < 1e-12));
        }
    }

    #[test]
    fn diagonal_targets_match_scalar_targets() {
        let dt = 0.02;
        let demo = diagonal_demo(60, dt);
        let params = DmpParams::default();
        let cs = CanonicalSystem::new(params.alpha_x, demo.duration()).unwrap();
        let pre = preprocess(&demo).unwrap();
        let targets = compute_forcing_targets(&pre, &params.gains, &cs).unwrap();
        let d1 = demo.points()[0].as_matrix().diagonal();
        for i in 0..3 {
            let y: Vec<f64> = demo
                .points()
                .iter()
                .map(|p| d1[i] * p.as_matrix()[(i, i)].ln())
                .collect();
            let scalar = forcing_targets(&y, dt, y[y.len() - 1], &params.gains, &cs);
            for (l, (x, f)) in scalar.iter().enumerate() {
                assert_eq!(*x, targets.phases[l]);
                let got = targets.values[(l, i)];
                assert!(
                    (got - f).abs() < 1e-8 * f.abs().max(1.0),
                    "i={i} l={l}: {got} vs {f}"
                );
            }
        }
    }

    #[test]
    fn last_sample_target_has_no_goal_term() {
        let demo = diagonal_demo(30, 0.02);
        let pre = preprocess(&demo).unwrap();
        let cs = CanonicalSystem::new(2.0, demo.duration()).unwrap();
        let gains = DmpGains::default();
        let targets = compute_forcing_targets(&pre, &gains, &cs).unwrap();
        let last = demo.len() - 1;
        let tau = cs.tau;
        let expected = pre.sigma_dot[last].as_vector() * tau * tau
            + pre.sigma[last].as_vector() * (gains.alpha_z * tau);
        assert!(
            (targets.target(last).as_vector() - &expected).norm()
                < 1e-12 * expected.norm().max(1.0)
        );
    }

    #[test]
    fn training_is_deterministic() {
        let demo = diagonal_demo(40, 0.02);
        let a = train(&demo, &SpdDmpParams::default()).unwrap();
        let b = train(&demo, &SpdDmpParams::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.weights.shape(), (25, 6));
        assert_eq!(a.start, demo.points()[0]);
        assert_eq!(a.goal, demo.points()[39]);
    }

    fn zero_model(anchor: SpdMatrix, goal: SpdMatrix, tau: f64) -> SpdDmpModel {
        let n = mandel_len(anchor.dim());
        SpdDmpModel {
            gains: DmpGains::default(),
            canonical: CanonicalSystem::new(2.0, tau).unwrap(),
            basis: BasisSet::new(25, 2.0).unwrap(),
            weights: DMatrix::zeros(25, n),
            start: anchor.clone(),
            anchor,
            goal,
            alpha_g: 24.0,
            dt: 0.01,
        }
    }

    #[test]
    fn goal_is_a_fixed_point() {
        let g = SpdMatrix::from_row_slice(2, &[2.0, 0.3, 0.3, 1.0]).unwrap();
        let model = zero_model(SpdMatrix::identity(2), g.clone(), 1.0);
        let mut state = ReproductionState::at_rest(g.clone(), g.clone());
        state.t = 50.0;
        let next = step(&model, &state, 0.01).unwrap();
        assert_eq!(next.x, g);
        assert!(next.sigma.as_vector().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_forcing_converges() {
        let start = SpdMatrix::from_row_slice(2, &[5.0, 1.0, 1.0, 2.0]).unwrap();
        let goal = SpdMatrix::from_row_slice(2, &[1.0, -0.3, -0.3, 0.6]).unwrap();
        let tau = 1.0;
        let model = zero_model(start.clone(), goal.clone(), tau);
        let traj = reproduce(&model, &start, &goal, 0.01, 2.0 * tau, None).unwrap();
        let d0 = log_euclidean_dist(&start, &goal).unwrap();
        let d = log_euclidean_dist(&traj.last().unwrap().matrix, &goal).unwrap();
        assert!(d < 1e-2 * d0, "d={d:e} d0={d0:e}");
    }

    #[test]
    fn diagonal_rollout_matches_scalar_rollouts() {
        let dt = 0.01;
        let demo = diagonal_demo(101, dt);
        let model = train(&demo, &SpdDmpParams::default()).unwrap();
        let traj = reproduce(
            &model,
            &model.start,
            &model.goal,
            dt,
            1.5 * model.tau(),
            None,
        )
        .unwrap();
        let d1 = demo.points()[0].as_matrix().diagonal();
        for i in 0..3 {
            let y: Vec<f64> = demo
                .points()
                .iter()
                .map(|p| d1[i] * p.as_matrix()[(i, i)].ln())
                .collect();
            let scalar = ScalarDmp::learn(&y, dt, &DmpParams::default()).unwrap();
            let rollout = scalar.rollout(dt, 1.5 * model.tau()).unwrap();
            assert_eq!(rollout.len(), traj.len());
            for (s, p) in rollout.iter().zip(&traj) {
                let expected = (s.y / d1[i]).exp();
                let got = p.matrix.as_matrix()[(i, i)];
                assert!(
                    (got - expected).abs() < 1e-8 * expected.max(1.0),
                    "i={i} t={}",
                    s.t
                );
            }
        }
    }

    #[test]
    fn switching_to_the_same_goal_changes_nothing() {
        let demo = diagonal_demo(101, 0.01);
        let model = train(&demo, &SpdDmpParams::default()).unwrap();
        let plain = reproduce(&model, &model.start, &model.goal, 0.01, 2.0, None).unwrap();
        for at in [0.0, 0.5] {
            let sw = GoalSwitch {
                at,
                new_goal: model.goal.clone(),
                alpha_g: model.alpha_g,
            };
            let switched =
                reproduce(&model, &model.start, &model.goal, 0.01, 2.0, Some(&sw)).unwrap();
            assert_eq!(plain, switched);
        }
    }

    #[test]
    fn switching_converges_to_new_goal() {
        let demo = diagonal_demo(101, 0.01);
        let model = train(&demo, &SpdDmpParams::default()).unwrap();
        let new_goal =
            SpdMatrix::from_row_slice(3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.1, 0.0, 0.1, 3.0]).unwrap();
        let tau = model.tau();
        let sw = GoalSwitch {
            at: tau / 2.0,
            new_goal: new_goal.clone(),
            alpha_g: model.alpha_g,
        };
        let traj = reproduce(
            &model,
            &model.start,
            &model.goal,
            0.01,
            3.0 * tau,
            Some(&sw),
        )
        .unwrap();
        let d = log_euclidean_dist(&traj.last().unwrap().matrix, &new_goal).unwrap();
        assert!(d < 1e-2, "d={d:e}");
    }

    #[test]
    fn reproduce_rejects_bad_arguments() {
        let model = zero_model(SpdMatrix::identity(2), SpdMatrix::identity(2), 1.0);
        let i = SpdMatrix::identity(2);
        assert!(reproduce(&model, &i, &i, 0.0, 1.0, None).is_err());
        assert!(reproduce(&model, &i, &i, 0.01, -1.0, None).is_err());
        assert!(reproduce(&model, &SpdMatrix::identity(3), &i, 0.01, 1.0, None).is_err());
        let sw = GoalSwitch {
            at: 2.0,
            new_goal: i.clone(),
            alpha_g: 24.0,
        };
        assert!(reproduce(&model, &i, &i, 0.01, 1.0, Some(&sw)).is_err());
    }

    #[test]
    fn rollout_failure_reports_step() {
        // a huge forcing term blows the state out of the definite cone
        let mut model = zero_model(SpdMatrix::identity(2), SpdMatrix::identity(2), 0.01);
        model.weights.fill(1e12);
        let i = SpdMatrix::identity(2);
        let err = reproduce(&model, &i, &i, 0.01, 1.0, None).unwrap_err();
        assert!(matches!(err, Error::Rollout { .. }), "{err}");
        assert!(err.is_numerical());
    }
}
