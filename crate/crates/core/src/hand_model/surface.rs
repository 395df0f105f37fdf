use std::f64::consts::PI;

use super::{HandDescription, HandState, Segment};
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};

pub const MIN_DENSITY: usize = 8;

/// A hand surface sample rigidly attached to a bone frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceAnchor {
    pub frame: usize,
    pub local: Vec3,
}

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

fn orthonormal_basis(d: &Vec3) -> (Vec3, Vec3) {
    let helper = if d.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = d.cross(&helper).normalize();
    (u, d.cross(&u))
}

/// Fixed stratified pattern on one capsule: a golden-angle spiral on the
/// cylinder and Fibonacci hemispheres on the caps, split by area.
fn capsule_pattern(seg: &Segment, density: usize) -> Vec<Vec3> {
    let len = seg.end.norm();
    let r = seg.radius;
    let axis = if len > 0.0 { seg.end / len } else { Vec3::y() };
    let (u, v) = orthonormal_basis(&axis);
    let ring = |phi: f64| u * phi.cos() + v * phi.sin();

    let cyl_area = 2.0 * PI * r * len;
    let cap_area = 4.0 * PI * r * r;
    let per_cap = if len > 0.0 {
        ((density as f64 * cap_area / (cyl_area + cap_area) / 2.0).round() as usize).clamp(1, density / 2 - 1)
    } else {
        density / 2
    };
    let n_cyl = density - 2 * per_cap;

    let mut out = Vec::with_capacity(density);
    for i in 0..n_cyl {
        let t = (i as f64 + 0.5) / n_cyl as f64 * len;
        out.push(axis * t + ring(i as f64 * GOLDEN_ANGLE) * r);
    }
    for (center, dir) in [(Vec3::zeros(), -axis), (seg.end, axis)] {
        for i in 0..per_cap {
            let c = 1.0 - (i as f64 + 0.5) / per_cap as f64;
            let rho = (1.0 - c * c).sqrt();
            out.push(center + dir * (c * r) + ring(i as f64 * GOLDEN_ANGLE) * (rho * r));
        }
    }
    out
}

/// Surface anchors for every capsule, `density` per capsule, in segment order.
pub fn surface_anchors(desc: &HandDescription, density: usize) -> Result<Vec<SurfaceAnchor>> {
    if density < MIN_DENSITY {
        return Err(Error::invalid(format!(
            "surface density must be >= {MIN_DENSITY}, got {density}"
        )));
    }
    Ok(desc
        .segments()
        .iter()
        .flat_map(|seg| {
            capsule_pattern(seg, density)
                .into_iter()
                .map(move |local| SurfaceAnchor {
                    frame: seg.frame,
                    local,
                })
        })
        .collect())
}

pub fn place_anchors(anchors: &[SurfaceAnchor], state: &HandState) -> Vec<Vec3> {
    anchors.iter().map(|a| state.point(a.frame, &a.local)).collect()
}

/// World-space capsule surface samples of a posed hand.
pub fn surface_samples(desc: &HandDescription, state: &HandState, density: usize) -> Result<PointCloud> {
    let anchors = surface_anchors(desc, density)?;
    PointCloud::new(place_anchors(&anchors, state))
}
