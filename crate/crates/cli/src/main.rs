//! `spd-dmp`: generate stiffness demonstrations, train SPD movement
//! primitives, reproduce them (optionally with a goal switch) and compare
//! trajectories.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "spd-dmp",
    version,
    about = "Movement primitives on SPD matrix profiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the rotating-stiffness mass-spring-damper demonstration.
    GenDemo(GenDemoArgs),
    /// Fit a model to a demonstration file.
    Train(TrainArgs),
    /// Integrate a trained model and write the trajectory plus a distance report.
    Reproduce(ReproduceArgs),
    /// Per-sample distance between two trajectory files.
    Dist(DistArgs),
}

#[derive(Debug, Args)]
pub struct GenDemoArgs {
    /// Demonstration JSON to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Plot CSV (t,x,y,K11,K22,K12); defaults to the output path with a .csv extension.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub dt: f64,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub duration: f64,
    /// Final rotation of the stiffness ellipsoid in degrees.
    #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
    pub theta_end: f64,
    /// Standard deviation of multiplicative SPD noise added to each sample.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Demonstration JSON.
    #[arg(long)]
    pub input: PathBuf,
    /// Model JSON to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Number of basis functions.
    #[arg(long, default_value_t = 25)]
    pub basis: usize,
    /// Spring gain; the damping gain is set to alpha_z / 4.
    #[arg(long, default_value_t = 48.0, allow_negative_numbers = true)]
    pub alpha_z: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub alpha_x: f64,
    /// Goal filter gain stored in the model.
    #[arg(long, default_value_t = 24.0, allow_negative_numbers = true)]
    pub alpha_g: f64,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Model JSON.
    #[arg(long)]
    pub input: PathBuf,
    /// Trajectory JSON to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Report CSV; defaults to the output path with a .csv extension.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Demonstration JSON used for the distance columns.
    #[arg(long)]
    pub demo: Option<PathBuf>,
    /// Integration step; defaults to the demonstration step stored in the model.
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Defaults to the model's tau.
    #[arg(long, allow_negative_numbers = true)]
    pub duration: Option<f64>,
    /// Overrides the goal filter gain stored in the model.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_g: Option<f64>,
    /// Switching instant as a fraction of the duration, in [0, 1).
    #[arg(long, requires = "new_goal", allow_negative_numbers = true)]
    pub switch_at: Option<f64>,
    /// "rotate:<degrees>", a JSON row-major matrix, or a trajectory file (last sample).
    #[arg(long, requires = "switch_at")]
    pub new_goal: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    LogEuclidean,
    Jbld,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    pub file_a: PathBuf,
    pub file_b: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::LogEuclidean)]
    pub metric: Metric,
    /// CSV (t,distance); stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenDemo(a) => commands::gen_demo(&a),
        Command::Train(a) => commands::train(&a),
        Command::Reproduce(a) => commands::reproduce(&a),
        Command::Dist(a) => commands::dist(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
