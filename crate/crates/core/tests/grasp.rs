use rayon::prelude::*;
use tendon_hand::control::{HandSimulator, SimOptions};
use tendon_hand::grasp::{execute_pose, validate_pose, ExecuteOptions, GraspCategory, GraspLibrary};
use tendon_hand::{Error, HandConfig};

fn sim() -> HandSimulator {
    HandSimulator::new(HandConfig::default(), SimOptions::default()).unwrap()
}

#[test]
fn library_has_33_named_poses_in_three_categories() {
    let lib = GraspLibrary::shipped();
    assert_eq!(lib.poses().len(), 33);
    let mut names: Vec<_> = lib.names().collect();
    names.sort_unstable();
    names.dedup();
    assert_eq!(names.len(), 33);
    for cat in [
        GraspCategory::Power,
        GraspCategory::Precision,
        GraspCategory::Intermediate,
    ] {
        assert!(lib.poses().iter().any(|p| p.category == cat));
    }
}

#[test]
fn every_pose_respects_the_joint_limits() {
    let hand = HandConfig::default().hand;
    for pose in GraspLibrary::shipped().poses() {
        let r = validate_pose(pose, &hand).unwrap();
        assert!(r.feasible, "{}: {:?}", pose.name, r.violations);
    }
}

#[test]
fn every_pose_settles_within_one_degree_in_two_seconds() {
    let lib = GraspLibrary::shipped();
    let reports: Vec<_> = lib
        .poses()
        .par_iter()
        .map(|p| execute_pose(p, &mut sim(), &ExecuteOptions::default()).unwrap().0)
        .collect();
    for r in reports {
        assert!(r.converged, "{} did not settle: {:?}", r.name, r);
        assert!(r.max_error_deg <= 1.0);
        assert!(r.settling_time_s.unwrap() <= 2.0);
    }
}

#[test]
fn execution_is_deterministic() {
    let lib = GraspLibrary::shipped();
    let pose = lib.get("tripod").unwrap();
    let run = || {
        let (report, tel) = execute_pose(pose, &mut sim(), &ExecuteOptions::default()).unwrap();
        (report, tel.iter().map(|r| r.to_json_line()).collect::<Vec<_>>())
    };
    assert_eq!(run(), run());
}

#[test]
fn host_loss_mid_execution_reports_a_protective_stop() {
    let lib = GraspLibrary::shipped();
    let opts = ExecuteOptions {
        disconnect_after_s: Some(0.1),
        ..ExecuteOptions::default()
    };
    let (report, _) = execute_pose(lib.get("power_sphere").unwrap(), &mut sim(), &opts).unwrap();
    assert!(report.protective_stop);
    assert!(!report.converged);
    assert!(!report.faults.is_empty());
}

#[test]
fn unknown_pose_and_bad_options_are_errors() {
    let lib = GraspLibrary::shipped();
    assert!(matches!(lib.get("nope"), Err(Error::UnknownPose(_))));
    let opts = ExecuteOptions {
        timeout_s: 0.0,
        ..ExecuteOptions::default()
    };
    assert!(execute_pose(lib.get("tripod").unwrap(), &mut sim(), &opts).is_err());
}
