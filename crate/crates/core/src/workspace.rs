//! Fingertip workspace: joint-grid sampling, voxel-occupancy volume and
//! point-cloud export.

use std::collections::HashSet;
use std::io::Write;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, mounted_position, FingerGeometry, HandModel};

/// Fingertip positions (mm) tagged with the finger they belong to.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkspaceCloud {
    pub points: Vec<(usize, Vector3<f64>)>,
}

impl WorkspaceCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn finger_points(&self, finger: usize) -> impl Iterator<Item = &Vector3<f64>> {
        self.points.iter().filter(move |(f, _)| *f == finger).map(|(_, p)| p)
    }

    pub fn extend(&mut self, other: WorkspaceCloud) {
        self.points.extend(other.points);
    }

    /// Writes `x,y,z,finger_id` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y,z,finger_id")?;
        for (f, p) in &self.points {
            writeln!(out, "{:.6},{:.6},{:.6},{}", p.x, p.y, p.z, f)?;
        }
        Ok(())
    }

    /// Writes an ASCII PLY vertex cloud with a `finger` property.
    pub fn write_ply<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "ply")?;
        writeln!(out, "format ascii 1.0")?;
        writeln!(out, "element vertex {}", self.points.len())?;
        writeln!(out, "property float x")?;
        writeln!(out, "property float y")?;
        writeln!(out, "property float z")?;
        writeln!(out, "property uchar finger")?;
        writeln!(out, "end_header")?;
        for (f, p) in &self.points {
            writeln!(out, "{:.6} {:.6} {:.6} {}", p.x, p.y, p.z, f)?;
        }
        Ok(())
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "workspace resolution must be at least 2, got {resolution}"
        )));
    }
    Ok(())
}

/// Maps every node of a `resolution³` grid over the joint-limit box to its
/// fingertip position, in the finger base frame, tagged `finger`.
pub fn sample_workspace(geom: &FingerGeometry, resolution: usize, finger: usize) -> Result<WorkspaceCloud> {
    check_resolution(resolution)?;
    let [l1, l2, l3] = *geom.limits();
    let mut points = Vec::with_capacity(resolution.pow(3));
    for a in grid(l1.min, l1.max, resolution) {
        for b in grid(l2.min, l2.max, resolution) {
            for c in grid(l3.min, l3.max, resolution) {
                let tip = forward_kinematics(geom, &Vector3::new(a, b, c))?;
                points.push((finger, tip.position));
            }
        }
    }
    Ok(WorkspaceCloud { points })
}

/// [`sample_workspace`] for every finger of `hand`, mapped into the hand
/// frame by the finger mountings.
pub fn sample_hand_workspace(hand: &HandModel, resolution: usize) -> Result<WorkspaceCloud> {
    let mut cloud = WorkspaceCloud::default();
    for (f, finger) in hand.fingers().iter().enumerate() {
        let mut local = sample_workspace(&finger.geometry, resolution, f)?;
        for (_, p) in &mut local.points {
            *p = mounted_position(&finger.mounting, p);
        }
        cloud.extend(local);
    }
    Ok(cloud)
}

fn voxel_of(p: &Vector3<f64>, voxel: f64) -> [i64; 3] {
    [p.x, p.y, p.z].map(|c| (c / voxel).floor() as i64)
}

fn check_voxel(voxel_mm: f64) -> Result<()> {
    if !(voxel_mm.is_finite() && voxel_mm > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "voxel size must be positive, got {voxel_mm}"
        )));
    }
    Ok(())
}

/// Occupied-voxel volume of the whole cloud in cm³. Voxels are the cells of
/// a `voxel_mm` lattice anchored at the origin.
pub fn estimate_volume(cloud: &WorkspaceCloud, voxel_mm: f64) -> Result<f64> {
    estimate_volume_of(cloud.points.iter().map(|(_, p)| p), voxel_mm)
}

/// [`estimate_volume`] over any point set.
pub fn estimate_volume_of<'a>(points: impl IntoIterator<Item = &'a Vector3<f64>>, voxel_mm: f64) -> Result<f64> {
    check_voxel(voxel_mm)?;
    let occupied: HashSet<[i64; 3]> = points.into_iter().map(|p| voxel_of(p, voxel_mm)).collect();
    if occupied.is_empty() {
        log::warn!("volume of an empty point cloud is zero");
    }
    Ok(voxel_volume_cm3(occupied.len(), voxel_mm))
}

fn voxel_volume_cm3(count: usize, voxel_mm: f64) -> f64 {
    count as f64 * voxel_mm.powi(3) / 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub resolution: usize,
    pub voxel_mm: f64,
    /// Joint samples actually evaluated after refinement.
    pub samples: u64,
    pub occupied_voxels: usize,
    pub volume_cm3: f64,
}

/// Largest distance any fingertip can have from each joint axis; bounds how
/// far the tip moves per radian of that joint.
fn lever_arms(geom: &FingerGeometry) -> [f64; 3] {
    let total = geom.total_length();
    [total, total - geom.l1(), geom.l3()]
}

/// Voxel volume of one finger's workspace from a `resolution³` joint grid.
///
/// Each grid cell is subdivided until neighbouring samples land less than
/// half a voxel apart, so the estimate measures the swept region rather than
/// the grid's sampling holes. The result depends only on the arguments.
pub fn workspace_volume(geom: &FingerGeometry, resolution: usize, voxel_mm: f64) -> Result<VolumeEstimate> {
    check_resolution(resolution)?;
    check_voxel(voxel_mm)?;
    let limits = *geom.limits();
    let arms = lever_arms(geom);
    let counts: [usize; 3] = std::array::from_fn(|j| {
        let cell = limits[j].span() / (resolution - 1) as f64;
        let refine = (cell * arms[j] / (0.5 * voxel_mm)).ceil().max(1.0) as usize;
        (resolution - 1) * refine + 1
    });
    let [s1, s2, s3] = geom.screw_axes();
    let home = geom.home_pose();
    let t1: Vec<f64> = grid(limits[0].min, limits[0].max, counts[0]).collect();
    let t3: Vec<f64> = grid(limits[2].min, limits[2].max, counts[2]).collect();
    let occupied = grid(limits[1].min, limits[1].max, counts[1])
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&b| {
            let mut set = HashSet::new();
            let outer = s2.exp(b);
            for &c in &t3 {
                let planar = outer * s3.exp(c) * home * Point3::origin();
                for &a in &t1 {
                    let p = s1.exp(a) * planar;
                    set.insert(voxel_of(&p.coords, voxel_mm));
                }
            }
            set
        })
        .reduce(HashSet::new, |a, b| {
            let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
            big.extend(small);
            big
        });
    Ok(VolumeEstimate {
        resolution,
        voxel_mm,
        samples: counts.iter().map(|&n| n as u64).product(),
        occupied_voxels: occupied.len(),
        volume_cm3: voxel_volume_cm3(occupied.len(), voxel_mm),
    })
}

/// Per-finger [`workspace_volume`] of the whole hand.
pub fn hand_workspace_volumes(hand: &HandModel, resolution: usize, voxel_mm: f64) -> Result<Vec<VolumeEstimate>> {
    hand.fingers()
        .iter()
        .map(|f| workspace_volume(&f.geometry, resolution, voxel_mm))
        .collect()
}
