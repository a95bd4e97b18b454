//! On-disk formats: model JSON and timestamped matrix lists.
//!
//! Matrices are stored as flat row-major arrays of `m·m` numbers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dmp_core::{BasisSet, CanonicalSystem, DmpGains};
use crate::error::{Error, Result};
use crate::spd_dmp::{SpdDemonstration, SpdDmpModel, TrajectoryPoint};
use crate::spd_manifold::{mandel_len, SpdMatrix, MANDEL_CONVENTION};

/// One element of a trajectory or demonstration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub t: f64,
    pub matrix: Vec<f64>,
}

impl MatrixRecord {
    pub fn new(t: f64, matrix: &SpdMatrix) -> Self {
        MatrixRecord {
            t,
            matrix: matrix.to_row_major(),
        }
    }

    pub fn to_spd(&self) -> Result<SpdMatrix> {
        matrix_from_row_major(&self.matrix)
    }
}

pub fn matrix_from_row_major(entries: &[f64]) -> Result<SpdMatrix> {
    let m = (entries.len() as f64).sqrt().round() as usize;
    if m == 0 || m * m != entries.len() {
        return Err(Error::Format(format!(
            "matrix has {} entries, not a perfect square",
            entries.len()
        )));
    }
    SpdMatrix::from_row_slice(m, entries)
}

pub fn trajectory_records(points: &[TrajectoryPoint]) -> Vec<MatrixRecord> {
    points
        .iter()
        .map(|p| MatrixRecord::new(p.t, &p.matrix))
        .collect()
}

pub fn demo_records(demo: &SpdDemonstration) -> Vec<MatrixRecord> {
    demo.times()
        .iter()
        .zip(demo.points())
        .map(|(&t, x)| MatrixRecord::new(t, x))
        .collect()
}

pub fn records_to_points(records: &[MatrixRecord]) -> Result<Vec<TrajectoryPoint>> {
    records
        .iter()
        .map(|r| {
            Ok(TrajectoryPoint {
                t: r.t,
                matrix: r.to_spd()?,
            })
        })
        .collect()
}

pub fn demo_from_records(records: &[MatrixRecord]) -> Result<SpdDemonstration> {
    let points = records
        .iter()
        .map(MatrixRecord::to_spd)
        .collect::<Result<Vec<_>>>()?;
    SpdDemonstration::new(records.iter().map(|r| r.t).collect(), points)
}

/// Serialized [`SpdDmpModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub m: usize,
    pub n: usize,
    pub tau: f64,
    pub dt: f64,
    pub alpha_z: f64,
    pub beta_z: f64,
    pub alpha_x: f64,
    pub alpha_g: f64,
    #[serde(rename = "N")]
    pub n_basis: usize,
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    /// `N` rows of `n` weights.
    pub weights: Vec<Vec<f64>>,
    pub anchor: Vec<f64>,
    pub goal: Vec<f64>,
    pub start: Vec<f64>,
    pub mandel_convention: String,
}

impl From<&SpdDmpModel> for ModelFile {
    fn from(model: &SpdDmpModel) -> Self {
        ModelFile {
            m: model.dim(),
            n: model.vec_dim(),
            tau: model.canonical.tau,
            dt: model.dt,
            alpha_z: model.gains.alpha_z,
            beta_z: model.gains.beta_z,
            alpha_x: model.canonical.alpha_x,
            alpha_g: model.alpha_g,
            n_basis: model.basis.len(),
            centers: model.basis.centers().to_vec(),
            widths: model.basis.widths().to_vec(),
            weights: model
                .weights
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            anchor: model.anchor.to_row_major(),
            goal: model.goal.to_row_major(),
            start: model.start.to_row_major(),
            mandel_convention: MANDEL_CONVENTION.to_string(),
        }
    }
}

impl TryFrom<ModelFile> for SpdDmpModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.mandel_convention != MANDEL_CONVENTION {
            return Err(Error::Format(format!(
                "unsupported Mandel convention {:?}, expected {MANDEL_CONVENTION:?}",
                f.mandel_convention
            )));
        }
        if f.n != mandel_len(f.m) {
            return Err(Error::Format(format!(
                "n = {} does not match m = {}",
                f.n, f.m
            )));
        }
        if f.n_basis != f.centers.len() || f.weights.len() != f.n_basis {
            return Err(Error::Format(format!(
                "N = {} but {} centers and {} weight rows",
                f.n_basis,
                f.centers.len(),
                f.weights.len()
            )));
        }
        if let Some(row) = f.weights.iter().find(|r| r.len() != f.n) {
            return Err(Error::Format(format!(
                "weight row of length {}, expected {}",
                row.len(),
                f.n
            )));
        }
        let matrix = |name: &str, entries: &[f64]| -> Result<SpdMatrix> {
            if entries.len() != f.m * f.m {
                return Err(Error::Format(format!(
                    "{name} has {} entries, expected {}",
                    entries.len(),
                    f.m * f.m
                )));
            }
            SpdMatrix::from_row_slice(f.m, entries)
        };
        let model = SpdDmpModel {
            gains: DmpGains::new(f.alpha_z, f.beta_z)?,
            canonical: CanonicalSystem::new(f.alpha_x, f.tau)?,
            basis: BasisSet::from_parts(f.centers, f.widths)?,
            weights: DMatrix::from_row_iterator(f.n_basis, f.n, f.weights.into_iter().flatten()),
            anchor: matrix("anchor", &f.anchor)?,
            goal: matrix("goal", &f.goal)?,
            start: matrix("start", &f.start)?,
            alpha_g: f.alpha_g,
            dt: f.dt,
        };
        model.validate()?;
        Ok(model)
    }
}

pub fn model_to_json(model: &SpdDmpModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from(model)).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<SpdDmpModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    SpdDmpModel::try_from(file)
}

pub fn records_to_json(records: &[MatrixRecord]) -> String {
    serde_json::to_string_pretty(records).expect("records serialize")
}

pub fn records_from_json(text: &str) -> Result<Vec<MatrixRecord>> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}
