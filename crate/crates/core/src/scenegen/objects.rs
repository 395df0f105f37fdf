use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{TriMesh, Vec3};

/// Highest accepted tessellation level.
pub const MAX_LEVEL: u32 = 7;

/// Convex primitive centered at the origin, dimensions in millimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ObjectKind {
    Sphere { radius: f64 },
    Box { size: [f64; 3] },
    /// Axis along z.
    Cylinder { radius: f64, height: f64 },
    /// `Σ |x_i / r_i|^exponent = 1`, exponent ≥ 1.
    Superellipsoid { radii: [f64; 3], exponent: f64 },
}

impl ObjectKind {
    fn validate(&self) -> Result<()> {
        let dims: Vec<f64> = match self {
            ObjectKind::Sphere { radius } => vec![*radius],
            ObjectKind::Box { size } => size.to_vec(),
            ObjectKind::Cylinder { radius, height } => vec![*radius, *height],
            ObjectKind::Superellipsoid { radii, exponent } => {
                if !(*exponent >= 1.0 && exponent.is_finite()) {
                    return Err(Error::invalid(format!("superellipsoid exponent must be >= 1, got {exponent}")));
                }
                radii.to_vec()
            }
        };
        if dims.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::invalid(format!("object dimensions must be > 0: {dims:?}")));
        }
        Ok(())
    }
}

/// Watertight, outward-oriented triangulation of `kind`. Vertex count grows
/// with `level`; level 5 gives a 10242-vertex sphere.
pub fn make_object(kind: &ObjectKind, level: u32) -> Result<TriMesh> {
    kind.validate()?;
    if level > MAX_LEVEL {
        return Err(Error::invalid(format!("tessellation level must be <= {MAX_LEVEL}, got {level}")));
    }
    let (vertices, triangles) = match kind {
        ObjectKind::Sphere { radius } => {
            let (v, t) = icosphere(level);
            (v.into_iter().map(|u| u * *radius).collect(), t)
        }
        ObjectKind::Superellipsoid { radii, exponent } => {
            let (v, t) = icosphere(level);
            let r = Vec3::from(*radii);
            let v = v
                .into_iter()
                .map(|u| {
                    let s: f64 = (0..3).map(|i| (u[i] / r[i]).abs().powf(*exponent)).sum();
                    u / s.powf(1.0 / exponent)
                })
                .collect();
            (v, t)
        }
        ObjectKind::Box { size } => lattice_box(Vec3::from(*size), 1 << level),
        ObjectKind::Cylinder { radius, height } => cylinder(*radius, *height, level),
    };
    TriMesh::new(vertices, triangles)
}

fn icosphere(level: u32) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vec3::from(*v).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, verts: &mut Vec<Vec3>| {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalize());
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

/// Box surface as a shared lattice with `n` cells per edge.
fn lattice_box(size: Vec3, n: u32) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let mut index: HashMap<[u32; 3], u32> = HashMap::new();
    let mut verts = Vec::new();
    let mut id = |c: [u32; 3], verts: &mut Vec<Vec3>| {
        *index.entry(c).or_insert_with(|| {
            verts.push(Vec3::from_fn(|i, _| (c[i] as f64 / n as f64 - 0.5) * size[i]));
            (verts.len() - 1) as u32
        })
    };
    let mut tris = Vec::new();
    for axis in 0..3 {
        for high in [false, true] {
            let (mut u, mut v) = ((axis + 1) % 3, (axis + 2) % 3);
            if !high {
                std::mem::swap(&mut u, &mut v);
            }
            let cell = |i: u32, j: u32| {
                let mut c = [0u32; 3];
                c[axis] = if high { n } else { 0 };
                c[u] = i;
                c[v] = j;
                c
            };
            for i in 0..n {
                for j in 0..n {
                    let a = id(cell(i, j), &mut verts);
                    let b = id(cell(i + 1, j), &mut verts);
                    let c = id(cell(i + 1, j + 1), &mut verts);
                    let d = id(cell(i, j + 1), &mut verts);
                    tris.push([a, b, c]);
                    tris.push([a, c, d]);
                }
            }
        }
    }
    (verts, tris)
}

fn cylinder(radius: f64, height: f64, level: u32) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let sides = 8usize << level;
    let rings = (1usize << level).max(1);
    let caps = (1usize << level.saturating_sub(2)).max(1);
    let mut verts = Vec::new();
    let ring = |r: f64, z: f64, verts: &mut Vec<Vec3>| -> u32 {
        let start = verts.len() as u32;
        for i in 0..sides {
            let a = 2.0 * PI * i as f64 / sides as f64;
            verts.push(Vec3::new(r * a.cos(), r * a.sin(), z));
        }
        start
    };
    let mut tris = Vec::new();
    let band = |lo: u32, hi: u32, tris: &mut Vec<[u32; 3]>| {
        for i in 0..sides as u32 {
            let j = (i + 1) % sides as u32;
            tris.push([lo + i, lo + j, hi + j]);
            tris.push([lo + i, hi + j, hi + i]);
        }
    };
    // side wall, bottom to top
    let mut side = Vec::new();
    for k in 0..=rings {
        side.push(ring(radius, -height / 2.0 + height * k as f64 / rings as f64, &mut verts));
    }
    for w in side.windows(2) {
        band(w[0], w[1], &mut tris);
    }
    // caps as concentric rings closed by a fan
    for top in [true, false] {
        let z = if top { height / 2.0 } else { -height / 2.0 };
        let mut outer = if top { *side.last().unwrap() } else { side[0] };
        for m in (1..caps).rev() {
            let inner = ring(radius * m as f64 / caps as f64, z, &mut verts);
            if top {
                band_inward(outer, inner, sides, &mut tris);
            } else {
                band_inward(inner, outer, sides, &mut tris);
            }
            outer = inner;
        }
        verts.push(Vec3::new(0.0, 0.0, z));
        let center = (verts.len() - 1) as u32;
        for i in 0..sides as u32 {
            let j = (i + 1) % sides as u32;
            if top {
                tris.push([center, outer + i, outer + j]);
            } else {
                tris.push([center, outer + j, outer + i]);
            }
        }
    }
    (verts, tris)
}

/// Annulus between ring `a` (outer on top caps) and ring `b`, +z facing.
fn band_inward(a: u32, b: u32, sides: usize, tris: &mut Vec<[u32; 3]>) {
    let n = sides as u32;
    for i in 0..n {
        let j = (i + 1) % n;
        tris.push([a + i, a + j, b + j]);
        tris.push([a + i, b + j, b + i]);
    }
}
