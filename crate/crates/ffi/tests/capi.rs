use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use dff_core::hand_model::{forward_kinematics, surface_samples, HandDescription, HandPose};
use dff_core::metrics::penetration_depth;
use dff_core::optimizer::DEFAULT_SURFACE_DENSITY;
use dff_core::scenegen::{make_object, ObjectKind};
use dff_ffi::*;

fn sphere(radius: f64) -> *mut DffMesh {
    let m = make_object(&ObjectKind::Sphere { radius }, 3).unwrap();
    let v: Vec<f64> = m.vertices().iter().flat_map(|p| [p.x, p.y, p.z]).collect();
    let t: Vec<u32> = m.triangles().iter().flatten().copied().collect();
    let mut out = ptr::null_mut();
    let s = unsafe { dff_mesh_new(v.as_ptr(), m.vertices().len(), t.as_ptr(), m.triangles().len(), &mut out) };
    assert_eq!(s, DffStatus::Ok);
    out
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { dff_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn mesh_handle_queries() {
    let mesh = sphere(10.0);
    assert_eq!(unsafe { dff_mesh_vertex_count(mesh) }, 642);
    let mut d = 0.0;
    assert_eq!(unsafe { dff_mesh_signed_distance(mesh, [0.0, 0.0, 0.0].as_ptr(), &mut d) }, DffStatus::Ok);
    assert!(d < -9.0 && d > -10.0);
    assert_eq!(unsafe { dff_mesh_signed_distance(mesh, [20.0, 0.0, 0.0].as_ptr(), &mut d) }, DffStatus::Ok);
    assert!((d - 10.0).abs() < 0.1);
    unsafe { dff_mesh_free(mesh) };
    unsafe { dff_mesh_free(ptr::null_mut()) };
}

#[test]
fn bad_mesh_reports_invalid_argument() {
    let v = [0.0f64; 9];
    let t = [0u32, 1, 5];
    let mut out = ptr::null_mut();
    let s = unsafe { dff_mesh_new(v.as_ptr(), 3, t.as_ptr(), 1, &mut out) };
    assert_eq!(s, DffStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_arguments() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { dff_mesh_new(ptr::null(), 3, ptr::null(), 1, &mut out) }, DffStatus::NullPointer);
    assert_eq!(unsafe { dff_hand_default(ptr::null_mut()) }, DffStatus::NullPointer);
    let mut e = 0.0;
    assert_eq!(unsafe { dff_forward_kinematics(ptr::null(), ptr::null(), ptr::null_mut()) }, DffStatus::NullPointer);
    assert_eq!(unsafe { dff_barrier_energy(1.0, 1.0, 2.0, ptr::null_mut()) }, DffStatus::NullPointer);
    assert_eq!(unsafe { dff_barrier_energy(1.0, 1.0, 2.0, &mut e) }, DffStatus::Ok);
}

#[test]
fn missing_obj_is_io_error() {
    let path = CString::new("/nonexistent/dir/mesh.obj").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { dff_mesh_load_obj(path.as_ptr(), &mut out) }, DffStatus::Io);
    assert!(last_error().contains("mesh.obj"));
}

#[test]
fn forward_kinematics_matches_core() {
    let mut hand = ptr::null_mut();
    assert_eq!(unsafe { dff_hand_default(&mut hand) }, DffStatus::Ok);
    let mut theta = [0.0; DFF_POSE_DIM];
    theta[0] = 5.0;
    theta[6 + 3 * 4] = 0.4;
    let mut joints = [0.0; 3 * DFF_NUM_JOINTS];
    assert_eq!(unsafe { dff_forward_kinematics(hand, theta.as_ptr(), joints.as_mut_ptr()) }, DffStatus::Ok);
    let reference = forward_kinematics(&HandDescription::default(), &HandPose::from_slice(&theta).unwrap()).unwrap();
    for (j, p) in reference.joints.iter().enumerate() {
        assert_eq!(&joints[3 * j..3 * j + 3], p.as_slice());
    }
    theta[3] = f64::NAN;
    assert_eq!(unsafe { dff_forward_kinematics(hand, theta.as_ptr(), joints.as_mut_ptr()) }, DffStatus::NonFinite);
    unsafe { dff_hand_free(hand) };
}

#[test]
fn energies_match_core() {
    let (mut b, mut k) = (0.0, 0.0);
    assert_eq!(unsafe { dff_barrier_energy(0.5, 1.0, 2.0, &mut b) }, DffStatus::Ok);
    assert_eq!(b, dff_core::dffield::barrier_energy(0.5, 1.0, 2.0).unwrap());
    assert_eq!(unsafe { dff_barrier_energy(0.5, 3.0, 2.0, &mut b) }, DffStatus::Ok);
    assert_eq!(b, 0.0);
    assert_eq!(unsafe { dff_kappa(1.0, 0.01, 0.1, &mut k) }, DffStatus::Ok);
    assert!((k - 10.0).abs() < 1e-12);
}

#[test]
fn optimize_far_pose_keeps_pose_and_reports_penetration() {
    let mut hand = ptr::null_mut();
    unsafe { dff_hand_default(&mut hand) };
    let mesh = sphere(10.0);
    let mut theta = [0.0; DFF_POSE_DIM];
    theta[0] = 500.0;
    let mut out = [f64::NAN; DFF_POSE_DIM];
    let s = unsafe { dff_optimize(hand, mesh, theta.as_ptr(), ptr::null(), 5, 0.0, out.as_mut_ptr()) };
    assert_eq!(s, DffStatus::Ok);
    assert_eq!(out, theta);
    let mut pd = -1.0;
    assert_eq!(unsafe { dff_penetration_depth(hand, mesh, theta.as_ptr(), &mut pd) }, DffStatus::Ok);
    assert_eq!(pd, 0.0);
    // wrist at the centre of a sphere that swallows the palm
    let big = sphere(30.0);
    let zero = [0.0; DFF_POSE_DIM];
    assert_eq!(unsafe { dff_penetration_depth(hand, big, zero.as_ptr(), &mut pd) }, DffStatus::Ok);
    let desc = HandDescription::default();
    let state = forward_kinematics(&desc, &HandPose::zeros()).unwrap();
    let surface = surface_samples(&desc, &state, DEFAULT_SURFACE_DENSITY).unwrap();
    let object = make_object(&ObjectKind::Sphere { radius: 30.0 }, 3).unwrap();
    assert_eq!(pd, penetration_depth(&surface, &object).unwrap());
    assert!(pd > 0.0);
    unsafe {
        dff_mesh_free(mesh);
        dff_mesh_free(big);
        dff_hand_free(hand);
    }
}

fn header() -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dff.h");
    std::fs::read_to_string(path).expect("generated header")
}

#[test]
fn header_declares_api() {
    let h = header();
    for f in [
        "dff_last_error",
        "dff_mesh_new",
        "dff_mesh_load_obj",
        "dff_mesh_signed_distance",
        "dff_mesh_free",
        "dff_hand_default",
        "dff_hand_load",
        "dff_hand_free",
        "dff_forward_kinematics",
        "dff_penetration_depth",
        "dff_barrier_energy",
        "dff_kappa",
        "dff_optimize",
    ] {
        assert!(h.contains(&format!("{f}(")), "header lacks {f}");
    }
    assert!(h.contains("typedef struct DffMesh DffMesh;"));
    assert!(h.contains("DFF_STATUS_ABORTED = 6"));
    assert!(h.contains("#define DFF_POSE_DIM 51"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = std::env::var("CC").or_else(|_| which("cc")) else {
        eprintln!("no C compiler found; header compile check not run");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"dff.h\"\nint f(void) { DffHand *h = 0; double t[DFF_POSE_DIM] = {0}; double j[3 * DFF_NUM_JOINTS];\n\
         return dff_hand_default(&h) == DFF_STATUS_OK && dff_forward_kinematics(h, t, j) == DFF_STATUS_OK; }\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which(name: &str) -> Result<String, ()> {
    let ok = Command::new(name).arg("--version").output().map(|o| o.status.success()).unwrap_or(false);
    if ok {
        Ok(name.to_string())
    } else {
        Err(())
    }
}
