//! Scalar dynamic movement primitive: canonical system, Gaussian basis,
//! ridge-regression weight fitting and Euler rollout.
//!
//! The scalar system is
//!
//! ```text
//! τ ż = α_z (β_z (g − y) − z) + f(x)
//! τ ẏ = z
//! τ ẋ = −α_x x
//! ```
//!
//! with `f(x) = Σ wᵢ Ψᵢ(x) / Σ Ψᵢ(x) · x`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ridge coefficient of the weight regression.
pub const RIDGE: f64 = 1e-8;

/// Pivot threshold, relative to the largest pivot, below which the
/// regularized least-squares system is declared rank deficient.
const RANK_TOL: f64 = 1e-14;

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// Exponentially decaying phase `x(t) = exp(−α_x t / τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalSystem {
    pub alpha_x: f64,
    /// Movement duration in seconds.
    pub tau: f64,
}

impl CanonicalSystem {
    pub fn new(alpha_x: f64, tau: f64) -> Result<Self> {
        positive("alpha_x", alpha_x)?;
        positive("tau", tau)?;
        Ok(CanonicalSystem { alpha_x, tau })
    }

    pub fn phase(&self, t: f64) -> f64 {
        (-self.alpha_x * t / self.tau).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmpGains {
    pub alpha_z: f64,
    pub beta_z: f64,
}

impl DmpGains {
    pub fn new(alpha_z: f64, beta_z: f64) -> Result<Self> {
        positive("alpha_z", alpha_z)?;
        positive("beta_z", beta_z)?;
        Ok(DmpGains { alpha_z, beta_z })
    }

    /// Critically damped gains, `α_z = 4 β_z`.
    pub fn critically_damped(alpha_z: f64) -> Result<Self> {
        Self::new(alpha_z, alpha_z / 4.0)
    }
}

impl Default for DmpGains {
    fn default() -> Self {
        DmpGains {
            alpha_z: 48.0,
            beta_z: 12.0,
        }
    }
}

/// Hyper-parameters shared by scalar and matrix-valued primitives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmpParams {
    pub n_basis: usize,
    pub gains: DmpGains,
    pub alpha_x: f64,
}

impl Default for DmpParams {
    fn default() -> Self {
        DmpParams {
            n_basis: 25,
            gains: DmpGains::default(),
            alpha_x: 2.0,
        }
    }
}

impl DmpParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_basis < 2 {
            return Err(Error::InvalidParameter(format!(
                "number of basis functions must be at least 2, got {}",
                self.n_basis
            )));
        }
        DmpGains::new(self.gains.alpha_z, self.gains.beta_z)?;
        positive("alpha_x", self.alpha_x)
    }
}

/// Gaussian kernels `Ψᵢ(x) = exp(−hᵢ (x − cᵢ)²)` spread along the phase.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    centers: Vec<f64>,
    widths: Vec<f64>,
}

impl BasisSet {
    /// Centers `cᵢ = exp(−α_x (i−1)/(N−1))`, widths `hᵢ = 1/(c_{i+1} − cᵢ)²`
    /// and `h_N = h_{N−1}`.
    pub fn new(n: usize, alpha_x: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "number of basis functions must be at least 2, got {n}"
            )));
        }
        positive("alpha_x", alpha_x)?;
        let centers: Vec<f64> = (0..n)
            .map(|i| (-alpha_x * i as f64 / (n - 1) as f64).exp())
            .collect();
        let mut widths: Vec<f64> = centers
            .windows(2)
            .map(|c| 1.0 / (c[1] - c[0]).powi(2))
            .collect();
        widths.push(widths[n - 2]);
        Ok(BasisSet { centers, widths })
    }

    /// Rebuilds a basis from stored parameters.
    pub fn from_parts(centers: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        if centers.len() != widths.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                found: widths.len(),
            });
        }
        if centers.len() < 2 {
            return Err(Error::InvalidParameter(
                "basis needs at least 2 centers".into(),
            ));
        }
        if centers.iter().chain(&widths).any(|v| !v.is_finite()) || widths.iter().any(|&h| h <= 0.0)
        {
            return Err(Error::InvalidParameter(
                "basis widths must be positive and finite".into(),
            ));
        }
        Ok(BasisSet { centers, widths })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Raw kernel values `Ψᵢ(x)`.
    pub fn activations(&self, x: f64) -> Vec<f64> {
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(c, h)| (-h * (x - c).powi(2)).exp())
            .collect()
    }

    /// Regression features `Ψᵢ(x) / Σ Ψ · x`.
    pub fn features(&self, x: f64) -> Result<DVector<f64>> {
        let psi = self.activations(x);
        let total: f64 = psi.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::DegenerateActivation { phase: x });
        }
        Ok(DVector::from_iterator(
            psi.len(),
            psi.into_iter().map(|p| p / total * x),
        ))
    }

    /// Forcing term `f(x)` for one output dimension.
    pub fn forcing_value(&self, weights: &[f64], x: f64) -> Result<f64> {
        if weights.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: weights.len(),
            });
        }
        Ok(self
            .features(x)?
            .iter()
            .zip(weights)
            .map(|(a, w)| a * w)
            .sum())
    }

    /// Forcing vector `𝒲ᵀ φ(x)` for a weight matrix with one column per
    /// output dimension.
    pub fn forcing_vector(&self, weights: &DMatrix<f64>, x: f64) -> Result<DVector<f64>> {
        if weights.nrows() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: weights.nrows(),
            });
        }
        Ok(weights.tr_mul(&self.features(x)?))
    }
}

/// Ridge least-squares fit of the basis weights.
///
/// `targets` holds one row per sample and one column per output dimension;
/// the result holds one row per basis function. Every column is solved
/// independently against the same design matrix, via a QR factorization of
/// the ridge-augmented system `[Φ; √λ I] w = [y; 0]`.
pub fn fit_weights(
    basis: &BasisSet,
    phases: &[f64],
    targets: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if phases.len() != targets.nrows() {
        return Err(Error::DimensionMismatch {
            expected: phases.len(),
            found: targets.nrows(),
        });
    }
    let n = basis.len();
    let mut distinct = phases.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < n {
        return Err(Error::InsufficientSamples {
            required: n,
            found: distinct.len(),
        });
    }

    let rows = phases.len();
    let mut design = DMatrix::zeros(rows + n, n);
    for (l, &x) in phases.iter().enumerate() {
        design.row_mut(l).copy_from(&basis.features(x)?.transpose());
    }
    let ridge = RIDGE.sqrt();
    for i in 0..n {
        design[(rows + i, i)] = ridge;
    }
    let mut rhs = DMatrix::zeros(rows + n, targets.ncols());
    rhs.rows_mut(0, rows).copy_from(targets);

    let qr = design.qr();
    let r = qr.r();
    let pivots = r.diagonal().map(f64::abs);
    let largest = pivots.max();
    let smallest = pivots.min();
    if smallest.is_nan() || smallest <= RANK_TOL * largest {
        return Err(Error::RankDeficiency { pivot: smallest });
    }
    let qtb = qr.q().tr_mul(&rhs);
    r.solve_upper_triangular(&qtb)
        .ok_or(Error::RankDeficiency { pivot: smallest })
}

/// Single-output convenience wrapper around [`fit_weights`].
pub fn fit_weights_scalar(basis: &BasisSet, samples: &[(f64, f64)]) -> Result<Vec<f64>> {
    let phases: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let targets = DMatrix::from_iterator(samples.len(), 1, samples.iter().map(|s| s.1));
    Ok(fit_weights(basis, &phases, &targets)?
        .column(0)
        .iter()
        .copied()
        .collect())
}

/// Velocity and acceleration of a uniformly sampled signal.
///
/// Velocities are backward differences with the first sample at rest;
/// accelerations are forward differences of the velocity, with the last
/// value held.
pub fn finite_derivatives(y: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
    let len = y.len();
    let mut vel = vec![0.0; len];
    for l in 1..len {
        vel[l] = (y[l] - y[l - 1]) / dt;
    }
    let mut acc = vec![0.0; len];
    for l in 0..len.saturating_sub(1) {
        acc[l] = (vel[l + 1] - vel[l]) / dt;
    }
    if len >= 2 {
        acc[len - 1] = acc[len - 2];
    }
    (vel, acc)
}

/// Forcing-term regression targets for a sampled scalar trajectory.
///
/// With the scaled velocity `z = τ ẏ`, the target at sample `l` is
/// `τ ż_l − α_z (β_z (g − y_l) − z_l)`.
pub fn forcing_targets(
    y: &[f64],
    dt: f64,
    goal: f64,
    gains: &DmpGains,
    canonical: &CanonicalSystem,
) -> Vec<(f64, f64)> {
    let tau = canonical.tau;
    let (vel, acc) = finite_derivatives(y, dt);
    y.iter()
        .enumerate()
        .map(|(l, &yl)| {
            let z = tau * vel[l];
            let z_dot = tau * acc[l];
            let target = tau * z_dot - gains.alpha_z * (gains.beta_z * (goal - yl) - z);
            (canonical.phase(l as f64 * dt), target)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarState {
    pub t: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarDmp {
    pub gains: DmpGains,
    pub basis: BasisSet,
    pub canonical: CanonicalSystem,
    pub weights: Vec<f64>,
    pub y0: f64,
    pub goal: f64,
}

impl ScalarDmp {
    /// Learns a primitive from one uniformly sampled trajectory.
    pub fn learn(y: &[f64], dt: f64, params: &DmpParams) -> Result<Self> {
        params.validate()?;
        positive("dt", dt)?;
        if y.len() < 3 {
            return Err(Error::InvalidDemonstration(format!(
                "need at least 3 samples, got {}",
                y.len()
            )));
        }
        let tau = (y.len() - 1) as f64 * dt;
        let canonical = CanonicalSystem::new(params.alpha_x, tau)?;
        let basis = BasisSet::new(params.n_basis, params.alpha_x)?;
        let goal = y[y.len() - 1];
        let samples = forcing_targets(y, dt, goal, &params.gains, &canonical);
        let weights = fit_weights_scalar(&basis, &samples)?;
        Ok(ScalarDmp {
            gains: params.gains,
            basis,
            canonical,
            weights,
            y0: y[0],
            goal,
        })
    }

    /// Explicit Euler integration from rest at `y0` for `duration` seconds.
    pub fn rollout(&self, dt: f64, duration: f64) -> Result<Vec<ScalarState>> {
        positive("dt", dt)?;
        positive("duration", duration)?;
        let steps = (duration / dt).round() as usize;
        let tau = self.canonical.tau;
        let DmpGains { alpha_z, beta_z } = self.gains;

        let mut state = ScalarState {
            t: 0.0,
            y: self.y0,
            z: 0.0,
        };
        let mut out = Vec::with_capacity(steps + 1);
        out.push(state);
        for k in 0..steps {
            let x = self.canonical.phase(state.t);
            let f = self.basis.forcing_value(&self.weights, x)?;
            let z_dot = (alpha_z * (beta_z * (self.goal - state.y) - state.z) + f) / tau;
            state = ScalarState {
                t: (k + 1) as f64 * dt,
                y: state.y + state.z * dt / tau,
                z: state.z + z_dot * dt,
            };
            out.push(state);
        }
        Ok(out)
    }
}
