//! `tendon-hand` command-line front end.
//!
//! Angles are degrees and lengths millimetres on the command line. Results
//! are printed as JSON (one document, or JSON lines for telemetry).
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error, 3 internal fault.

mod commands;
mod trajectory;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tendon_hand::kinematics::FingerName;
use tendon_hand::{Error, HandConfig};

#[derive(Debug, Parser)]
#[command(name = "tendon-hand", version, about = "Tendon-driven hand simulator")]
pub struct Cli {
    /// Hand parameter file (JSON). Built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for sensor noise and bus fault injection.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fingertip position from joint angles.
    #[command(allow_negative_numbers = true)]
    Fk(FkArgs),
    /// Joint angles from a fingertip position.
    #[command(allow_negative_numbers = true)]
    Ik(IkArgs),
    /// Per-finger workspace volumes and point-cloud export.
    Workspace(WorkspaceArgs),
    /// Closed-loop simulation, telemetry as JSON lines.
    Simulate(SimulateArgs),
    /// Grasp preset library.
    #[command(subcommand)]
    Grasp(GraspCommand),
    /// Fingertip force capability of one finger.
    #[command(allow_negative_numbers = true)]
    Calibrate(CalibrateArgs),
    /// Serve the host byte-stream protocol on stdin/stdout.
    Host(HostArgs),
    /// Print the effective parameter file (defaults, or `--config` after validation).
    Config,
}

#[derive(Debug, Args)]
pub struct FkArgs {
    /// MCP abduction, degrees.
    pub mcp1: f64,
    /// MCP flexion, degrees.
    pub mcp2: f64,
    /// PIP flexion, degrees.
    pub pip: f64,
    /// Finger whose mounting is used for the hand-frame position.
    #[arg(long, default_value = "index", value_parser = parse_finger)]
    pub finger: usize,
    /// DIP angle in degrees; requires an active DIP joint in the config.
    #[arg(long)]
    pub dip: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IkArgs {
    /// Fingertip x in the finger frame, mm.
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[arg(long, default_value = "index", value_parser = parse_finger)]
    pub finger: usize,
}

#[derive(Debug, Args)]
pub struct WorkspaceArgs {
    /// Joint grid samples per axis.
    #[arg(long, default_value_t = 50)]
    pub resolution: usize,
    /// Voxel edge, mm.
    #[arg(long, default_value_t = 1.0)]
    pub voxel: f64,
    /// Write the sampled points as CSV (x,y,z,finger_id).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the sampled points as ASCII PLY.
    #[arg(long)]
    pub ply: Option<PathBuf>,
    /// Grid samples per axis for exported points.
    #[arg(long, default_value_t = 20)]
    pub export_resolution: usize,
    /// Export in the hand frame instead of each finger's own frame.
    #[arg(long)]
    pub hand_frame: bool,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    /// Route messages through the framed bus instead of in-memory hand-over.
    #[arg(long)]
    pub bus: bool,
    /// Per-frame drop probability (implies --bus).
    #[arg(long)]
    pub drop: Option<f64>,
    /// Per-frame corruption probability (implies --bus).
    #[arg(long)]
    pub corrupt: Option<f64>,
    /// Write a hex log of every bus frame to this file.
    #[arg(long)]
    pub frame_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulated time, s.
    #[arg(long, default_value_t = 2.0)]
    pub duration: f64,
    /// Reference trajectory file (JSON waypoints).
    #[arg(long, conflicts_with = "pose")]
    pub trajectory: Option<PathBuf>,
    /// Hold a grasp preset as the reference.
    #[arg(long)]
    pub pose: Option<String>,
    /// Host stops sending references after this time, s.
    #[arg(long)]
    pub disconnect_after: Option<f64>,
    /// Include raw ADC codes in each record.
    #[arg(long)]
    pub raw_codes: bool,
    /// Telemetry destination; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub link: LinkArgs,
}

#[derive(Debug, Subcommand)]
pub enum GraspCommand {
    /// Names and categories of all presets.
    List,
    /// Joint-limit feasibility of one preset, or all of them.
    Validate {
        name: Option<String>,
        #[arg(long, conflicts_with = "name")]
        all: bool,
    },
    /// Drive the simulated hand to a preset and report settling.
    Execute(ExecuteArgs),
}

#[derive(Debug, Args)]
pub struct ExecuteArgs {
    pub name: String,
    #[arg(long, default_value_t = 2.0)]
    pub timeout: f64,
    /// Settling tolerance, degrees.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance: f64,
    #[arg(long)]
    pub disconnect_after: Option<f64>,
    /// Write the run's telemetry as JSON lines.
    #[arg(long)]
    pub telemetry: Option<PathBuf>,
    #[command(flatten)]
    pub link: LinkArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value = "index", value_parser = parse_finger)]
    pub finger: usize,
    /// Joint angles, degrees.
    #[arg(long, num_args = 3, default_values_t = [0.0, 30.0, 30.0])]
    pub posture: Vec<f64>,
    /// Force direction in the finger frame.
    #[arg(long, num_args = 3, default_values_t = [0.0, 0.0, 1.0])]
    pub direction: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct HostArgs {
    /// Write telemetry of every step as JSON lines.
    #[arg(long)]
    pub telemetry: Option<PathBuf>,
    #[command(flatten)]
    pub link: LinkArgs,
}

fn parse_finger(s: &str) -> Result<usize, String> {
    FingerName::ALL
        .iter()
        .position(|f| f.as_str() == s)
        .ok_or_else(|| format!("expected one of thumb, index, middle, ring, little; got `{s}`"))
}

pub fn load_config(cli: &Cli) -> Result<HandConfig, Error> {
    match &cli.config {
        Some(path) => HandConfig::load(path),
        None => Ok(HandConfig::default()),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| commands::run(&cli)) {
        Ok(Ok(commands::Status::Ok)) => ExitCode::SUCCESS,
        Ok(Ok(commands::Status::Failed)) => ExitCode::from(2),
        Ok(Err(Error::Io(e))) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Ok(Err(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
        Err(_) => ExitCode::from(3),
    }
}
