//! Synthetic rotating-stiffness demonstrations for a planar
//! mass-spring-damper.
//!
//! The stiffness ellipsoid starts horizontally aligned and is rotated through
//! `Rᵀ K₀ R` until it is vertically aligned, while a piecewise-constant
//! external force excites the mass.

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spd_dmp::SpdDemonstration;
use crate::spd_manifold::{expm_sym, spd_sqrt, SpdMatrix, SymMatrix};

/// Timing law of the rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaProfile {
    /// Quintic `10s³ − 15s⁴ + 6s⁵`, zero velocity and acceleration at both ends.
    #[default]
    MinimumJerk,
    Linear,
}

impl ThetaProfile {
    /// Normalized progress for `s ∈ [0, 1]`.
    pub fn progress(self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            ThetaProfile::MinimumJerk => s * s * s * (10.0 - 15.0 * s + 6.0 * s * s),
            ThetaProfile::Linear => s,
        }
    }
}

/// Constant force applied on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcePulse {
    pub start: f64,
    pub end: f64,
    pub force: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsdScenario {
    /// Initial stiffness (N/m).
    pub k0: SpdMatrix,
    /// Final rotation angle in radians.
    pub theta_end: f64,
    pub profile: ThetaProfile,
    /// kg
    pub mass: f64,
    /// N·s/m
    pub damping: SpdMatrix,
    pub forces: Vec<ForcePulse>,
    /// s
    pub duration: f64,
    /// s
    pub dt: f64,
}

impl Default for MsdScenario {
    fn default() -> Self {
        MsdScenario {
            k0: SpdMatrix::from_diagonal(&[500.0, 100.0]).expect("SPD"),
            theta_end: std::f64::consts::FRAC_PI_2,
            profile: ThetaProfile::MinimumJerk,
            mass: 1.0,
            damping: SpdMatrix::from_diagonal(&[50.0, 50.0]).expect("SPD"),
            forces: vec![
                ForcePulse {
                    start: 0.5,
                    end: 1.0,
                    force: [20.0, 0.0],
                },
                ForcePulse {
                    start: 1.5,
                    end: 2.0,
                    force: [0.0, 20.0],
                },
                ForcePulse {
                    start: 2.5,
                    end: 3.0,
                    force: [-15.0, -15.0],
                },
            ],
            duration: 4.0,
            dt: 0.01,
        }
    }
}

impl MsdScenario {
    pub fn validate(&self) -> Result<()> {
        if self.k0.dim() != 2 || self.damping.dim() != 2 {
            return Err(Error::InvalidParameter(
                "stiffness and damping must be 2x2".into(),
            ));
        }
        let ev = self.k0.eigenvalues();
        if (ev[0] - ev[1]).abs() <= 1e-9 * ev[0].abs().max(ev[1].abs()) {
            return Err(Error::InvalidParameter(
                "initial stiffness must be anisotropic (distinct eigenvalues)".into(),
            ));
        }
        for (name, v) in [
            ("mass", self.mass),
            ("duration", self.duration),
            ("dt", self.dt),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !self.theta_end.is_finite() {
            return Err(Error::InvalidParameter("theta_end must be finite".into()));
        }
        if self.samples() < 3 {
            return Err(Error::InvalidParameter(format!(
                "duration {} with dt {} gives fewer than 3 samples",
                self.duration, self.dt
            )));
        }
        Ok(())
    }

    /// Number of samples `round(duration / dt) + 1`.
    pub fn samples(&self) -> usize {
        (self.duration / self.dt).round() as usize + 1
    }

    pub fn time(&self, l: usize) -> f64 {
        l as f64 * self.dt
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.theta_end * self.profile.progress(t / self.duration)
    }

    pub fn external_force(&self, t: f64) -> Vector2<f64> {
        self.forces
            .iter()
            .filter(|p| p.start <= t && t < p.end)
            .fold(Vector2::zeros(), |acc, p| {
                acc + Vector2::new(p.force[0], p.force[1])
            })
    }
}

/// Planar rotation `[[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Stiffness profile `K_l = R(θ(t_l))ᵀ K₀ R(θ(t_l))`.
pub fn gen_stiffness_demo(sc: &MsdScenario) -> Result<SpdDemonstration> {
    sc.validate()?;
    let points = (0..sc.samples())
        .map(|l| sc.k0.congruence(&rotation(sc.theta(sc.time(l)))))
        .collect::<Result<Vec<_>>>()?;
    SpdDemonstration::from_uniform(sc.dt, points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsdSample {
    pub t: f64,
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

fn to_matrix2(m: &SpdMatrix) -> Matrix2<f64> {
    let a = m.as_matrix();
    Matrix2::new(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)])
}

/// Explicit Euler integration of `m ẍ = f(t) − K(t) x − D ẋ` from rest,
/// with `K` held constant over each sampling interval.
pub fn simulate_msd(sc: &MsdScenario, stiffness: &[SpdMatrix]) -> Result<Vec<MsdSample>> {
    simulate_with_substeps(sc, stiffness, 1)
}

pub(crate) fn simulate_with_substeps(
    sc: &MsdScenario,
    stiffness: &[SpdMatrix],
    substeps: usize,
) -> Result<Vec<MsdSample>> {
    sc.validate()?;
    if stiffness.len() != sc.samples() {
        return Err(Error::DimensionMismatch {
            expected: sc.samples(),
            found: stiffness.len(),
        });
    }
    if let Some(bad) = stiffness.iter().find(|k| k.dim() != 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: bad.dim(),
        });
    }
    let damping = to_matrix2(&sc.damping);
    let h = sc.dt / substeps as f64;
    let mut x = Vector2::zeros();
    let mut v = Vector2::zeros();
    let mut out = Vec::with_capacity(stiffness.len());
    for (l, k) in stiffness.iter().enumerate() {
        let t = sc.time(l);
        out.push(MsdSample {
            t,
            position: [x[0], x[1]],
            velocity: [v[0], v[1]],
        });
        if l + 1 == stiffness.len() {
            break;
        }
        let k = to_matrix2(k);
        for s in 0..substeps {
            let f = sc.external_force(t + s as f64 * h);
            let a = (f - k * x - damping * v) / sc.mass;
            x += v * h;
            v += a * h;
        }
    }
    Ok(out)
}

/// Perturbs every sample multiplicatively, `X^{1/2} expm(ε S) X^{1/2}` with
/// `S` a standard-normal symmetric matrix. Deterministic for a given seed.
pub fn perturb_demo(demo: &SpdDemonstration, noise: f64, seed: u64) -> Result<SpdDemonstration> {
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise must be non-negative, got {noise}"
        )));
    }
    if noise == 0.0 {
        return Ok(demo.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = demo.dim();
    let points = demo
        .points()
        .iter()
        .map(|x| {
            let g = DMatrix::from_fn(m, m, |_, _| StandardNormal.sample(&mut rng));
            let s: DMatrix<f64> = (&g + g.transpose()) * (0.5 * noise);
            let root = spd_sqrt(x);
            let kick = expm_sym(&SymMatrix::from_computed(s))?;
            SpdMatrix::from_computed(root.as_matrix() * kick.as_matrix() * root.as_matrix())
        })
        .collect::<Result<Vec<_>>>()?;
    SpdDemonstration::new(demo.times().to_vec(), points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_demo_shape_and_endpoints() {
        let sc = MsdScenario::default();
        let demo = gen_stiffness_demo(&sc).unwrap();
        assert_eq!(demo.len(), 401);
        assert_eq!(demo.points()[0], sc.k0);
        let last = demo.points()[400].as_matrix();
        assert!((last[(0, 0)] - 100.0).abs() < 1e-10);
        assert!((last[(1, 1)] - 500.0).abs() < 1e-10);
        assert!(last[(0, 1)].abs() < 1e-10);
    }

    #[test]
    fn eigenvalues_constant_along_profile() {
        let demo = gen_stiffness_demo(&MsdScenario::default()).unwrap();
        for p in demo.points() {
            let mut ev: Vec<f64> = p.eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            assert!((ev[0] - 100.0).abs() < 1e-12 * 100.0);
            assert!((ev[1] - 500.0).abs() < 1e-12 * 500.0);
        }
    }

    #[test]
    fn zero_rotation_is_constant() {
        let sc = MsdScenario {
            theta_end: 0.0,
            ..MsdScenario::default()
        };
        let demo = gen_stiffness_demo(&sc).unwrap();
        assert!(demo.points().iter().all(|p| *p == sc.k0));
    }

    #[test]
    fn rejects_isotropic_or_bad_step() {
        let iso = MsdScenario {
            k0: SpdMatrix::from_diagonal(&[300.0, 300.0]).unwrap(),
            ..MsdScenario::default()
        };
        assert!(gen_stiffness_demo(&iso).is_err());
        let bad = MsdScenario {
            dt: 0.0,
            ..MsdScenario::default()
        };
        assert!(gen_stiffness_demo(&bad).is_err());
    }

    #[test]
    fn no_force_stays_at_rest() {
        let sc = MsdScenario {
            forces: vec![],
            ..MsdScenario::default()
        };
        let demo = gen_stiffness_demo(&sc).unwrap();
        let sim = simulate_msd(&sc, demo.points()).unwrap();
        assert!(sim
            .iter()
            .all(|s| s.position == [0.0, 0.0] && s.velocity == [0.0, 0.0]));
    }

    #[test]
    fn constant_force_reaches_static_equilibrium() {
        let sc = MsdScenario {
            theta_end: 0.0,
            damping: SpdMatrix::from_diagonal(&[80.0, 80.0]).unwrap(),
            forces: vec![ForcePulse {
                start: 0.0,
                end: 100.0,
                force: [10.0, -4.0],
            }],
            duration: 30.0,
            ..MsdScenario::default()
        };
        let demo = gen_stiffness_demo(&sc).unwrap();
        let sim = simulate_msd(&sc, demo.points()).unwrap();
        let last = sim.last().unwrap();
        assert!((last.position[0] - 10.0 / 500.0).abs() < 1e-9);
        assert!((last.position[1] + 4.0 / 100.0).abs() < 1e-9);
    }

    fn energy(s: &MsdSample, k: &SpdMatrix, mass: f64) -> f64 {
        let x = Vector2::new(s.position[0], s.position[1]);
        let v = Vector2::new(s.velocity[0], s.velocity[1]);
        0.5 * mass * v.norm_squared() + 0.5 * (x.transpose() * to_matrix2(k) * x)[0]
    }

    #[test]
    fn energy_tracks_fine_step_reference() {
        let sc = MsdScenario::default();
        let demo = gen_stiffness_demo(&sc).unwrap();
        let coarse = simulate_msd(&sc, demo.points()).unwrap();
        let fine = simulate_with_substeps(&sc, demo.points(), 200).unwrap();
        let peak = |sim: &[MsdSample]| {
            sim.iter()
                .zip(demo.points())
                .map(|(s, k)| energy(s, k, sc.mass))
                .fold(0.0, f64::max)
        };
        let (pc, pf) = (peak(&coarse), peak(&fine));
        assert!(pf > 0.0);
        assert!((pc - pf).abs() < 0.15 * pf, "coarse {pc} vs fine {pf}");
        // once the forces stop the passive system only dissipates
        let tail: Vec<f64> = coarse
            .iter()
            .zip(demo.points())
            .filter(|(s, _)| s.t >= 3.0)
            .map(|(s, k)| energy(s, k, sc.mass))
            .collect();
        assert!(tail.last().unwrap() < &tail[0]);
    }

    #[test]
    fn perturbation_is_seeded() {
        let demo = gen_stiffness_demo(&MsdScenario::default()).unwrap();
        let a = perturb_demo(&demo, 0.01, 7).unwrap();
        let b = perturb_demo(&demo, 0.01, 7).unwrap();
        let c = perturb_demo(&demo, 0.01, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(perturb_demo(&demo, 0.0, 1).unwrap(), demo);
    }
}
