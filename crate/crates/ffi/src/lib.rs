//! C ABI over `dff-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`DffStatus`]; on failure the message is kept per thread and
//! can be copied out with [`dff_last_error`]. Poses are 51 doubles, joints
//! 21 × 3 doubles, region forces 22 doubles. Lengths are millimetres.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use dff_core::dffield;
use dff_core::geometry::{MeshSdf, PointCloud, TriMesh, Vec3};
use dff_core::hand_model::{forward_kinematics, surface_samples, HandDescription, HandPose, NUM_JOINTS, NUM_REGIONS, POSE_DIM};
use dff_core::metrics::penetration_depth_with;
use dff_core::optimizer::{ForceAwareOptimizer, ForceSource, OptimConfig, OptimStatus, DEFAULT_SURFACE_DENSITY};
use dff_core::tactile::{RegionForces, SensorLayout};
use dff_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DffStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    NonFinite = 5,
    /// The optimizer stopped on a non-finite value; the output pose holds
    /// the last finite iterate.
    Aborted = 6,
    Internal = 7,
}

/// Triangle mesh with its signed-distance accelerator.
pub struct DffMesh {
    mesh: TriMesh,
    sdf: MeshSdf,
}

/// Hand description plus tactile sensor layout.
pub struct DffHand {
    desc: HandDescription,
    layout: SensorLayout,
}

pub const DFF_POSE_DIM: usize = 51;
pub const DFF_NUM_JOINTS: usize = 21;
pub const DFF_NUM_REGIONS: usize = 22;
const _: () = assert!(DFF_POSE_DIM == POSE_DIM && DFF_NUM_JOINTS == NUM_JOINTS && DFF_NUM_REGIONS == NUM_REGIONS);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> DffStatus {
    match err {
        Error::Parse { .. } | Error::Json(_) => DffStatus::Parse,
        Error::Io { .. } => DffStatus::Io,
        Error::NonFinite(_) => DffStatus::NonFinite,
        _ => DffStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<DffStatus, (DffStatus, String)>) -> DffStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            DffStatus::Internal
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, (DffStatus, String)>;
}

impl<T> OrStatus<T> for dff_core::Result<T> {
    fn or_status(self) -> Result<T, (DffStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (DffStatus, String) {
    (DffStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], (DffStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn read_path<'a>(p: *const c_char) -> Result<&'a Path, (DffStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| (DffStatus::InvalidArgument, "path is not UTF-8".to_string()))
}

unsafe fn read_pose(theta: *const f64) -> Result<HandPose, (DffStatus, String)> {
    HandPose::from_slice(read_slice(theta, POSE_DIM, "theta")?).or_status()
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), (DffStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dff_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a mesh from `n_vertices` xyz triples and `n_triangles` index
/// triples.
///
/// # Safety
/// Arrays must hold `3 * n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dff_mesh_new(
    vertices: *const f64,
    n_vertices: usize,
    triangles: *const u32,
    n_triangles: usize,
    out: *mut *mut DffMesh,
) -> DffStatus {
    guard(|| {
        let v = read_slice(vertices, 3 * n_vertices, "vertices")?;
        let t = read_slice(triangles, 3 * n_triangles, "triangles")?;
        let verts = v.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
        let tris = t.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let mesh = TriMesh::new(verts, tris).or_status()?;
        let sdf = MeshSdf::new(&mesh).or_status()?;
        write_out(out, Box::into_raw(Box::new(DffMesh { mesh, sdf })), "out")?;
        Ok(DffStatus::Ok)
    })
}

/// Loads a Wavefront OBJ mesh.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dff_mesh_load_obj(path: *const c_char, out: *mut *mut DffMesh) -> DffStatus {
    guard(|| {
        let mesh = TriMesh::load_obj(read_path(path)?).or_status()?;
        let sdf = MeshSdf::new(&mesh).or_status()?;
        write_out(out, Box::into_raw(Box::new(DffMesh { mesh, sdf })), "out")?;
        Ok(DffStatus::Ok)
    })
}

/// # Safety
/// `mesh` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn dff_mesh_vertex_count(mesh: *const DffMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.vertices().len())
}

/// Signed distance of a point to the mesh, negative inside.
///
/// # Safety
/// `mesh` must be a live handle, `point` three doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dff_mesh_signed_distance(mesh: *const DffMesh, point: *const f64, out: *mut f64) -> DffStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        let p = read_slice(point, 3, "point")?;
        write_out(out, m.sdf.signed_distance(&Vec3::new(p[0], p[1], p[2])), "out")?;
        Ok(DffStatus::Ok)
    })
}

/// # Safety
/// `mesh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dff_mesh_free(mesh: *mut DffMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// The bundled hand model and sensor layout.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dff_hand_default(out: *mut *mut DffHand) -> DffStatus {
    guard(|| {
        let h = DffHand {
            desc: HandDescription::default(),
            layout: SensorLayout::default(),
        };
        write_out(out, Box::into_raw(Box::new(h)), "out")?;
        Ok(DffStatus::Ok)
    })
}

/// Loads a hand description JSON and, when `layout_path` is non-null, a
/// sensor layout JSON.
///
/// # Safety
/// Paths must be NUL-terminated strings (layout may be null); `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dff_hand_load(
    desc_path: *const c_char,
    layout_path: *const c_char,
    out: *mut *mut DffHand,
) -> DffStatus {
    guard(|| {
        let desc = HandDescription::load(read_path(desc_path)?).or_status()?;
        let layout = if layout_path.is_null() {
            SensorLayout::default()
        } else {
            SensorLayout::load(read_path(layout_path)?).or_status()?
        };
        layout.check_against(&desc).or_status()?;
        write_out(out, Box::into_raw(Box::new(DffHand { desc, layout })), "out")?;
        Ok(DffStatus::Ok)
    })
}

/// # Safety
/// `hand` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dff_hand_free(hand: *mut DffHand) {
    if !hand.is_null() {
        drop(Box::from_raw(hand));
    }
}

/// Joint positions (21 × 3) for pose `theta`.
///
/// # Safety
/// `theta` must hold 51 doubles and `joints_out` room for 63.
#[no_mangle]
pub unsafe extern "C" fn dff_forward_kinematics(hand: *const DffHand, theta: *const f64, joints_out: *mut f64) -> DffStatus {
    guard(|| {
        let h = hand.as_ref().ok_or_else(|| null("hand"))?;
        let state = forward_kinematics(&h.desc, &read_pose(theta)?).or_status()?;
        if joints_out.is_null() {
            return Err(null("joints_out"));
        }
        let out = slice::from_raw_parts_mut(joints_out, 3 * NUM_JOINTS);
        for (dst, j) in out.chunks_exact_mut(3).zip(&state.joints) {
            dst.copy_from_slice(j.as_slice());
        }
        Ok(DffStatus::Ok)
    })
}

/// Deepest penetration of the hand surface into the mesh, ≥ 0.
///
/// # Safety
/// Handles must be live, `theta` 51 doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dff_penetration_depth(
    hand: *const DffHand,
    mesh: *const DffMesh,
    theta: *const f64,
    out: *mut f64,
) -> DffStatus {
    guard(|| {
        let h = hand.as_ref().ok_or_else(|| null("hand"))?;
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        let state = forward_kinematics(&h.desc, &read_pose(theta)?).or_status()?;
        let surface: PointCloud = surface_samples(&h.desc, &state, DEFAULT_SURFACE_DENSITY).or_status()?;
        write_out(out, penetration_depth_with(&surface, &m.sdf).or_status()?, "out")?;
        Ok(DffStatus::Ok)
    })
}

/// Barrier energy of one pair at distance `l` with stiffness `kappa`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dff_barrier_energy(kappa: f64, l: f64, l_hat: f64, out: *mut f64) -> DffStatus {
    guard(|| {
        write_out(out, dffield::barrier_energy(kappa, l, l_hat).or_status()?, "out")?;
        Ok(DffStatus::Ok)
    })
}

/// Stiffness from a force reading and a pair distance.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dff_kappa(force: f64, l: f64, floor: f64, out: *mut f64) -> DffStatus {
    guard(|| {
        write_out(out, dffield::kappa(force, l, floor).or_status()?, "out")?;
        Ok(DffStatus::Ok)
    })
}

/// Refines `theta_init` against the mesh with default settings except
/// `iterations` and `learning_rate` (0 keeps the default). `forces` holds 22
/// region forces, or is null for the fixed-force mode. Writes the refined
/// pose to `theta_out`; returns `Aborted` if a non-finite value stopped the
/// run early.
///
/// # Safety
/// Handles must be live, `theta_init`/`theta_out` 51 doubles, `forces` null
/// or 22 doubles.
#[no_mangle]
pub unsafe extern "C" fn dff_optimize(
    hand: *const DffHand,
    mesh: *const DffMesh,
    theta_init: *const f64,
    forces: *const f64,
    iterations: usize,
    learning_rate: f64,
    theta_out: *mut f64,
) -> DffStatus {
    guard(|| {
        let h = hand.as_ref().ok_or_else(|| null("hand"))?;
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        let initial = read_pose(theta_init)?;
        let source = if forces.is_null() {
            ForceSource::fixed_default()
        } else {
            let f = read_slice(forces, NUM_REGIONS, "forces")?;
            let mut r = [0.0; NUM_REGIONS];
            r.copy_from_slice(f);
            ForceSource::Tactile(RegionForces(r))
        };
        let mut cfg = OptimConfig::default();
        if iterations > 0 {
            cfg.iterations = iterations;
        }
        if learning_rate != 0.0 {
            cfg.learning_rate = learning_rate;
        }
        let result = ForceAwareOptimizer::new(&h.desc, &m.mesh, source, cfg)
            .or_status()?
            .with_layout(&h.layout)
            .run(&initial)
            .or_status()?;
        if theta_out.is_null() {
            return Err(null("theta_out"));
        }
        slice::from_raw_parts_mut(theta_out, POSE_DIM).copy_from_slice(result.theta_final.as_slice());
        match result.status {
            OptimStatus::Completed => Ok(DffStatus::Ok),
            OptimStatus::AbortedNan => Err((DffStatus::Aborted, result.abort_reason.unwrap_or_default())),
        }
    })
}
