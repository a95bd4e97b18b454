use std::fs;
use std::path::{Path, PathBuf};

use spdmp::dmp_core::{DmpGains, DmpParams};
use spdmp::io::{
    demo_from_records, demo_records, model_from_json, model_to_json, records_from_json,
    records_to_json, records_to_points, trajectory_records, MatrixRecord,
};
use spdmp::metrics::{jbld_dist, log_euclidean_dist};
use spdmp::msd_demo_gen::{gen_stiffness_demo, perturb_demo, rotation, simulate_msd, MsdScenario};
use spdmp::nalgebra::DMatrix;
use spdmp::spd_dmp::{
    reproduce as rollout, train as fit, GoalSwitch, SpdDmpModel, SpdDmpParams, TrajectoryPoint,
};
use spdmp::SpdMatrix;

use crate::{DistArgs, GenDemoArgs, Metric, ReproduceArgs, TrainArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    /// A file that exists but does not hold what was expected.
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: spdmp::Error },
    #[error(transparent)]
    Compute(#[from] spdmp::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Compute(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn positive(flag: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!(
            "{flag} must be a positive number, got {v}"
        )))
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn input<T>(path: &Path, r: spdmp::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Input {
        path: path.to_owned(),
        source,
    })
}

fn load_records(path: &Path) -> CliResult<Vec<MatrixRecord>> {
    let text = read_text(path)?;
    input(path, records_from_json(&text))
}

fn load_trajectory(path: &Path) -> CliResult<Vec<TrajectoryPoint>> {
    let records = load_records(path)?;
    input(path, records_to_points(&records))
}

fn load_model(path: &Path) -> CliResult<SpdDmpModel> {
    let text = read_text(path)?;
    input(path, model_from_json(&text))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let wrap = |source| CliError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn gen_demo(a: &GenDemoArgs) -> CliResult<()> {
    let dt = positive("--dt", a.dt)?;
    let duration = positive("--duration", a.duration)?;
    if !a.theta_end.is_finite() {
        return Err(CliError::Usage(format!(
            "--theta-end must be finite, got {}",
            a.theta_end
        )));
    }
    if !(a.noise.is_finite() && a.noise >= 0.0) {
        return Err(CliError::Usage(format!(
            "--noise must be non-negative, got {}",
            a.noise
        )));
    }
    let sc = MsdScenario {
        dt,
        duration,
        theta_end: a.theta_end.to_radians(),
        ..MsdScenario::default()
    };
    if sc.samples() < 3 {
        return Err(CliError::Usage(format!(
            "--duration {duration} with --dt {dt} gives fewer than 3 samples"
        )));
    }
    let demo = perturb_demo(&gen_stiffness_demo(&sc)?, a.noise, a.seed)?;
    let motion = simulate_msd(&sc, demo.points())?;

    write_text(&a.output, &records_to_json(&demo_records(&demo)))?;
    let rows: Vec<Vec<String>> = motion
        .iter()
        .zip(demo.points())
        .map(|(s, k)| {
            let k = k.as_matrix();
            [
                s.t,
                s.position[0],
                s.position[1],
                k[(0, 0)],
                k[(1, 1)],
                k[(0, 1)],
            ]
            .iter()
            .map(f64::to_string)
            .collect()
        })
        .collect();
    let csv_path = a
        .csv
        .clone()
        .unwrap_or_else(|| a.output.with_extension("csv"));
    write_csv(&csv_path, &["t", "x", "y", "K11", "K22", "K12"], &rows)
}

pub fn train(a: &TrainArgs) -> CliResult<()> {
    positive("--alpha-z", a.alpha_z)?;
    positive("--alpha-x", a.alpha_x)?;
    positive("--alpha-g", a.alpha_g)?;
    if a.basis < 2 {
        return Err(CliError::Usage(format!(
            "--basis must be at least 2, got {}",
            a.basis
        )));
    }
    let records = load_records(&a.input)?;
    let demo = input(&a.input, demo_from_records(&records))?;
    let params = SpdDmpParams {
        dmp: DmpParams {
            n_basis: a.basis,
            gains: DmpGains::critically_damped(a.alpha_z)?,
            alpha_x: a.alpha_x,
        },
        alpha_g: a.alpha_g,
    };
    let model = fit(&demo, &params)?;
    write_text(&a.output, &model_to_json(&model))
}

/// Embeds a planar rotation in the leading two coordinates.
fn embedded_rotation(m: usize, theta: f64) -> CliResult<DMatrix<f64>> {
    if m < 2 {
        return Err(CliError::Usage(
            "rotate: needs matrices of dimension at least 2".into(),
        ));
    }
    let mut r = DMatrix::identity(m, m);
    r.view_mut((0, 0), (2, 2)).copy_from(&rotation(theta));
    Ok(r)
}

fn parse_new_goal(goal_arg: &str, model: &SpdDmpModel) -> CliResult<SpdMatrix> {
    if let Some(deg) = goal_arg.strip_prefix("rotate:") {
        let deg: f64 = deg
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--new-goal: cannot parse angle {deg:?}")))?;
        if !deg.is_finite() {
            return Err(CliError::Usage(format!(
                "--new-goal: angle must be finite, got {deg}"
            )));
        }
        let r = embedded_rotation(model.dim(), deg.to_radians())?;
        return Ok(model.goal.congruence(&r)?);
    }
    let path = Path::new(goal_arg);
    let text = read_text(path)?;
    let goal = match serde_json::from_str::<Vec<f64>>(&text) {
        Ok(entries) => input(path, spdmp::io::matrix_from_row_major(&entries))?,
        Err(_) => {
            let points = input(
                path,
                records_from_json(&text).and_then(|r| records_to_points(&r)),
            )?;
            match points.into_iter().last() {
                Some(p) => p.matrix,
                None => {
                    return Err(CliError::Usage(format!(
                        "--new-goal: {} is empty",
                        path.display()
                    )))
                }
            }
        }
    };
    if goal.dim() != model.dim() {
        return Err(CliError::Usage(format!(
            "--new-goal: dimension {} does not match model dimension {}",
            goal.dim(),
            model.dim()
        )));
    }
    Ok(goal)
}

pub fn reproduce(a: &ReproduceArgs) -> CliResult<()> {
    let model = load_model(&a.input)?;
    let dt = positive("--dt", a.dt.unwrap_or(model.dt))?;
    let duration = positive("--duration", a.duration.unwrap_or(model.tau()))?;
    let alpha_g = positive("--alpha-g", a.alpha_g.unwrap_or(model.alpha_g))?;
    let switch = match (a.switch_at, a.new_goal.as_deref()) {
        (Some(frac), Some(goal_arg)) => {
            if !(0.0..1.0).contains(&frac) {
                return Err(CliError::Usage(format!(
                    "--switch-at must lie in [0, 1), got {frac}"
                )));
            }
            Some(GoalSwitch {
                at: frac * duration,
                new_goal: parse_new_goal(goal_arg, &model)?,
                alpha_g,
            })
        }
        _ => None,
    };
    let demo = match &a.demo {
        Some(p) => Some(load_trajectory(p)?),
        None => None,
    };
    if let Some(d) = &demo {
        if let Some(bad) = d.iter().find(|p| p.matrix.dim() != model.dim()) {
            return Err(CliError::Usage(format!(
                "--demo: dimension {} does not match model dimension {}",
                bad.matrix.dim(),
                model.dim()
            )));
        }
    }

    let traj = rollout(
        &model,
        &model.start,
        &model.goal,
        dt,
        duration,
        switch.as_ref(),
    )?;
    write_text(&a.output, &records_to_json(&trajectory_records(&traj)))?;

    let mut header = vec!["t", "le_demo", "jbld_demo"];
    if switch.is_some() {
        header.extend(["d1", "d2"]);
    }
    let mut rows = Vec::with_capacity(traj.len());
    for (k, p) in traj.iter().enumerate() {
        let reference = demo.as_ref().and_then(|d| d.get(k)).map(|q| &q.matrix);
        let le = reference
            .map(|q| log_euclidean_dist(&p.matrix, q))
            .transpose()?;
        let jbld = reference.map(|q| jbld_dist(&p.matrix, q)).transpose()?;
        let mut row = vec![p.t.to_string(), fmt_opt(le), fmt_opt(jbld)];
        if let Some(sw) = &switch {
            if p.t < sw.at {
                row.extend([fmt_opt(le), String::new()]);
            } else {
                row.extend([
                    String::new(),
                    log_euclidean_dist(&p.matrix, &sw.new_goal)?.to_string(),
                ]);
            }
        }
        rows.push(row);
    }
    let report = a
        .report
        .clone()
        .unwrap_or_else(|| a.output.with_extension("csv"));
    write_csv(&report, &header, &rows)
}

pub fn dist(a: &DistArgs) -> CliResult<()> {
    let xs = load_trajectory(&a.file_a)?;
    let ys = load_trajectory(&a.file_b)?;
    if xs.len() != ys.len() {
        return Err(CliError::Usage(format!(
            "trajectories differ in length: {} has {} samples, {} has {}",
            a.file_a.display(),
            xs.len(),
            a.file_b.display(),
            ys.len()
        )));
    }
    let mut rows = Vec::with_capacity(xs.len());
    for (x, y) in xs.iter().zip(&ys) {
        if x.matrix.dim() != y.matrix.dim() {
            return Err(CliError::Usage(format!(
                "sample at t = {} has dimensions {} and {}",
                x.t,
                x.matrix.dim(),
                y.matrix.dim()
            )));
        }
        let d = match a.metric {
            Metric::LogEuclidean => log_euclidean_dist(&x.matrix, &y.matrix)?,
            Metric::Jbld => jbld_dist(&x.matrix, &y.matrix)?,
        };
        rows.push(vec![x.t.to_string(), d.to_string()]);
    }
    match &a.output {
        Some(path) => write_csv(path, &["t", "distance"], &rows),
        None => {
            println!("t,distance");
            for r in rows {
                println!("{}", r.join(","));
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_failures_exit_with_3() {
        let pd = spdmp::Error::Definiteness {
            min_eigenvalue: -1.0,
            max_eigenvalue: 1.0,
        };
        assert_eq!(CliError::Compute(pd.clone()).exit_code(), 3);
        let nested = spdmp::Error::Rollout {
            step: 4,
            source: Box::new(pd.clone()),
        };
        assert_eq!(CliError::Compute(nested).exit_code(), 3);
        // a non-PD matrix read from a file is bad input, not a breakdown
        let input = CliError::Input {
            path: "x.json".into(),
            source: pd,
        };
        assert_eq!(input.exit_code(), 2);
        assert_eq!(
            CliError::Compute(spdmp::Error::InvalidParameter("x".into())).exit_code(),
            2
        );
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
    }

    #[test]
    fn rotate_goal_matches_demo_convention() {
        let r = embedded_rotation(3, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((r[(0, 1)] + 1.0).abs() < 1e-15 && (r[(1, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(r[(2, 2)], 1.0);
        assert!(embedded_rotation(1, 0.3).is_err());
    }
}
