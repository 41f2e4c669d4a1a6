use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::Serialize;
use serde_json::json;
use tendon_hand::bus::{FrameLogEntry, LossModel};
use tendon_hand::calibration::fingertip_force_capability;
use tendon_hand::control::{HandSimulator, SimOptions, TelemetryRecord, TransportKind};
use tendon_hand::grasp::{execute_pose, validate_pose, ExecuteOptions, GraspLibrary};
use tendon_hand::host::HostSession;
use tendon_hand::kinematics::{
    closure_residuals, forward_kinematics, forward_kinematics_with_dip, inverse_kinematics, mounted_position,
    FingerName, HAND_DOF,
};
use tendon_hand::workspace::{hand_workspace_volumes, sample_hand_workspace, sample_workspace, WorkspaceCloud};
use tendon_hand::{Error, HandConfig, Result};

use crate::trajectory::Trajectory;
use crate::*;

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    /// The command worked but its subject failed a check (infeasible pose,
    /// no convergence).
    Failed,
}

pub fn run(cli: &Cli) -> Result<Status> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Fk(a) => fk(&config, a),
        Command::Ik(a) => ik(&config, a),
        Command::Workspace(a) => workspace(&config, a),
        Command::Simulate(a) => simulate(config, cli.seed, a),
        Command::Grasp(GraspCommand::List) => grasp_list(),
        Command::Grasp(GraspCommand::Validate { name, all }) => grasp_validate(&config, name.as_deref(), *all),
        Command::Grasp(GraspCommand::Execute(a)) => grasp_execute(config, cli.seed, a),
        Command::Calibrate(a) => calibrate(&config, a),
        Command::Host(a) => host(config, cli.seed, a),
        Command::Config => {
            print_json(&config)?;
            Ok(Status::Ok)
        }
    }
}

fn print_json<T: Serialize + ?Sized>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn vec3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn deg3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::from(v.map(f64::to_radians))
}

fn fk(config: &HandConfig, a: &FkArgs) -> Result<Status> {
    let finger = config.hand.finger(a.finger);
    let theta = deg3([a.mcp1, a.mcp2, a.pip]);
    let tip = match a.dip {
        Some(d) => forward_kinematics_with_dip(&finger.geometry, &theta, d.to_radians())?,
        None => forward_kinematics(&finger.geometry, &theta)?,
    };
    let hand = mounted_position(&finger.mounting, &tip.position);
    let q = tip.orientation.quaternion();
    print_json(&json!({
        "finger": finger.name,
        "joints_deg": [a.mcp1, a.mcp2, a.pip],
        "dip_deg": a.dip,
        "within_limits": finger.geometry.within_limits(&theta),
        "position_mm": vec3(&tip.position),
        "orientation_wxyz": [q.w, q.i, q.j, q.k],
        "hand_position_mm": vec3(&hand),
    }))?;
    Ok(Status::Ok)
}

fn ik(config: &HandConfig, a: &IkArgs) -> Result<Status> {
    let finger = config.hand.finger(a.finger);
    let target = Vector3::new(a.x, a.y, a.z);
    let sol = inverse_kinematics(&finger.geometry, &target)?;
    let residuals = closure_residuals(&finger.geometry, &sol.theta, &target);
    let reached = forward_kinematics(&finger.geometry, &sol.theta)?.position;
    print_json(&json!({
        "finger": finger.name,
        "target_mm": [a.x, a.y, a.z],
        "joints_deg": vec3(&sol.theta).map(f64::to_degrees),
        "within_limits": finger.geometry.within_limits(&sol.theta),
        "closure_residuals": residuals,
        "position_error_mm": (reached - target).norm(),
    }))?;
    Ok(Status::Ok)
}

fn workspace(config: &HandConfig, a: &WorkspaceArgs) -> Result<Status> {
    let volumes = hand_workspace_volumes(&config.hand, a.resolution, a.voxel)?;
    if a.csv.is_some() || a.ply.is_some() {
        let cloud = if a.hand_frame {
            sample_hand_workspace(&config.hand, a.export_resolution)?
        } else {
            let mut cloud = WorkspaceCloud::default();
            for (f, finger) in config.hand.fingers().iter().enumerate() {
                cloud.extend(sample_workspace(&finger.geometry, a.export_resolution, f)?);
            }
            cloud
        };
        if let Some(path) = &a.csv {
            let mut w = create(path)?;
            cloud.write_csv(&mut w)?;
            w.flush()?;
        }
        if let Some(path) = &a.ply {
            let mut w = create(path)?;
            cloud.write_ply(&mut w)?;
            w.flush()?;
        }
    }
    let fingers: Vec<_> = FingerName::ALL
        .iter()
        .zip(&volumes)
        .map(|(name, v)| {
            json!({
                "finger": name,
                "volume_cm3": v.volume_cm3,
                "samples": v.samples,
                "occupied_voxels": v.occupied_voxels,
            })
        })
        .collect();
    print_json(&json!({
        "resolution": a.resolution,
        "voxel_mm": a.voxel,
        "fingers": fingers,
    }))?;
    Ok(Status::Ok)
}

fn sim_options(link: &LinkArgs, seed: u64, raw_codes: bool) -> Result<SimOptions> {
    let bus = link.bus || link.drop.is_some() || link.corrupt.is_some() || link.frame_log.is_some();
    let transport = if bus {
        let model = LossModel {
            drop_probability: link.drop.unwrap_or(0.0),
            corrupt_probability: link.corrupt.unwrap_or(0.0),
        };
        model.validate()?;
        TransportKind::Bus(model)
    } else {
        TransportKind::Direct
    };
    Ok(SimOptions {
        transport,
        seed,
        frame_log: link.frame_log.is_some(),
        raw_codes,
    })
}

fn write_frame_log<W: Write>(out: &mut Option<W>, entries: Vec<FrameLogEntry>) -> Result<()> {
    if let Some(w) = out {
        for e in entries {
            writeln!(w, "{} {} {}", e.round, e.fate, e.hex)?;
        }
    }
    Ok(())
}

fn write_telemetry<W: Write>(out: &mut W, rec: &TelemetryRecord) -> Result<()> {
    writeln!(out, "{}", rec.to_json_line())?;
    Ok(())
}

fn simulate(config: HandConfig, seed: u64, a: &SimulateArgs) -> Result<Status> {
    if !(a.duration.is_finite() && a.duration >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "duration must be non-negative, got {}",
            a.duration
        )));
    }
    let trajectory = match (&a.trajectory, &a.pose) {
        (Some(path), _) => Trajectory::load(path)?,
        (None, Some(name)) => Trajectory::constant(GraspLibrary::shipped().get(name)?.joints),
        (None, None) => Trajectory::constant([0.0; HAND_DOF]),
    };
    let mut sim = HandSimulator::new(config, sim_options(&a.link, seed, a.raw_codes)?)?;
    let dt = sim.config().control.timing.outer_dt();
    let ticks = (a.duration / dt).round() as u64;
    let disconnect = a.disconnect_after.map(|t| (t / dt).round() as u64);

    let mut out: Box<dyn Write> = match &a.output {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut frame_log = a.link.frame_log.as_deref().map(create).transpose()?;
    for n in 0..ticks {
        let refs = trajectory.at(n as f64 * dt);
        let host = disconnect.is_none_or(|d| n < d).then_some(&refs);
        let rec = sim.tick(host)?;
        write_telemetry(&mut out, &rec)?;
        write_frame_log(&mut frame_log, sim.take_frame_log())?;
    }
    out.flush()?;
    if let Some(w) = &mut frame_log {
        w.flush()?;
    }
    log::info!("bus statistics: {:?}", sim.bus_stats());
    Ok(Status::Ok)
}

fn grasp_list() -> Result<Status> {
    let lib = GraspLibrary::shipped();
    let list: Vec<_> = lib
        .poses()
        .iter()
        .map(|p| json!({ "name": p.name, "category": p.category }))
        .collect();
    print_json(&list)?;
    Ok(Status::Ok)
}

fn grasp_validate(config: &HandConfig, name: Option<&str>, all: bool) -> Result<Status> {
    let lib = GraspLibrary::shipped();
    let poses: Vec<_> = match (name, all) {
        (Some(n), _) => vec![lib.get(n)?],
        (None, true) => lib.poses().iter().collect(),
        (None, false) => return Err(Error::InvalidArgument("name a pose or pass --all".into())),
    };
    let reports = poses
        .into_iter()
        .map(|p| validate_pose(p, &config.hand))
        .collect::<Result<Vec<_>>>()?;
    let feasible = reports.iter().all(|r| r.feasible);
    if name.is_some() {
        print_json(&reports[0])?;
    } else {
        print_json(&reports)?;
    }
    Ok(if feasible { Status::Ok } else { Status::Failed })
}

fn grasp_execute(config: HandConfig, seed: u64, a: &ExecuteArgs) -> Result<Status> {
    let lib = GraspLibrary::shipped();
    let pose = lib.get(&a.name)?;
    let mut sim = HandSimulator::new(config, sim_options(&a.link, seed, false)?)?;
    let options = ExecuteOptions {
        timeout_s: a.timeout,
        tolerance_deg: a.tolerance,
        disconnect_after_s: a.disconnect_after,
    };
    let (report, telemetry) = execute_pose(pose, &mut sim, &options)?;
    if let Some(path) = &a.telemetry {
        let mut w = create(path)?;
        for rec in &telemetry {
            write_telemetry(&mut w, rec)?;
        }
        w.flush()?;
    }
    let mut frame_log = a.link.frame_log.as_deref().map(create).transpose()?;
    write_frame_log(&mut frame_log, sim.take_frame_log())?;
    if let Some(w) = &mut frame_log {
        w.flush()?;
    }
    print_json(&report)?;
    Ok(if report.converged { Status::Ok } else { Status::Failed })
}

fn calibrate(config: &HandConfig, a: &CalibrateArgs) -> Result<Status> {
    let posture = deg3([a.posture[0], a.posture[1], a.posture[2]]);
    let direction = Vector3::new(a.direction[0], a.direction[1], a.direction[2]);
    let report = fingertip_force_capability(config, a.finger, &posture, &direction)?;
    print_json(&report)?;
    Ok(Status::Ok)
}

fn host(config: HandConfig, seed: u64, a: &HostArgs) -> Result<Status> {
    let sim = HandSimulator::new(config, sim_options(&a.link, seed, false)?)?;
    let mut session = HostSession::new(sim);
    let mut telemetry = a.telemetry.as_deref().map(create).transpose()?;
    let mut stdin = io::stdin().lock();
    let mut stdout = io::stdout().lock();
    let mut buf = [0u8; 4096];
    loop {
        let n = match stdin.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        };
        let (reply, records) = session.feed(&buf[..n])?;
        stdout.write_all(&reply)?;
        stdout.flush()?;
        if let Some(w) = &mut telemetry {
            for rec in &records {
                write_telemetry(w, rec)?;
            }
        }
    }
    if let Some(w) = &mut telemetry {
        w.flush()?;
    }
    log::info!("host session: {:?}", session.stats);
    Ok(Status::Ok)
}
