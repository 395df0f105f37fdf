//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Tolerances are pinned below.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{Isometry3, Translation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dff_core::cli::{ablate_scene, median, AblationSample, SceneContext};
use dff_core::dffield::{barrier_derivative, barrier_energy, PairMode};
use dff_core::geometry::{chamfer_distance, iou_bounds, voxel_iou, PointCloud, TriMesh, Vec3};
use dff_core::hand_model::{evaluate_with_derivatives, forward_kinematics, HandDescription, HandPose, POSE_DIM};
use dff_core::metrics::{contact_iou, contact_mask, mpjpe, penetration_depth, MetricsReport, CONTACT_THRESHOLD_MM};
use dff_core::optimizer::{ForceAwareOptimizer, OptimConfig};
use dff_core::scenegen::{make_object, ObjectKind, Scene, SceneSpec};
use dff_core::tactile::SensorLayout;
use dff_core::DefaultsSnapshot;

const GRADIENT_SCENES: usize = 50;
const GRADIENT_REL_TOL: f64 = 1e-3;
const KEYPOINT_REL_TOL: f64 = 1e-4;
const GRADIENT_BUDGET_S: f64 = 60.0;
const FD_STEP: f64 = 1e-5;

const EFFICACY_SCENES: u64 = 20;
const PD_RATIO: f64 = 0.6;
const PD_CIOU_FRACTION: f64 = 0.9;
const MPJPE_FRACTION: f64 = 0.8;
const FIXED_FORCE_FRACTION: f64 = 0.8;

const PAIR_MODE_RATIO: f64 = 3.0;
const RUNTIME_BUDGET_S: f64 = 5.0;

const ORACLE_INSTANCES: usize = 100;
const ORACLE_REL_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------- 1

fn random_object(rng: &mut ChaCha8Rng) -> ObjectKind {
    match rng.random_range(0..4) {
        0 => ObjectKind::Sphere { radius: rng.random_range(25.0..45.0) },
        1 => ObjectKind::Box {
            size: [rng.random_range(40.0..70.0), rng.random_range(40.0..70.0), rng.random_range(40.0..70.0)],
        },
        2 => ObjectKind::Cylinder { radius: rng.random_range(20.0..35.0), height: rng.random_range(50.0..80.0) },
        _ => ObjectKind::Superellipsoid {
            radii: [rng.random_range(25.0..40.0), rng.random_range(25.0..40.0), rng.random_range(25.0..40.0)],
            exponent: rng.random_range(1.0..2.5),
        },
    }
}

fn objective_gradient_error(opt: &ForceAwareOptimizer<'_>, pose: &HandPose, initial: &HandPose) -> (f64, usize) {
    let pairing = opt.establish(pose).unwrap();
    let analytic = opt.objective(pose, initial, &pairing).unwrap().gradient;
    let mut fd = [0.0; POSE_DIM];
    for (i, g) in fd.iter_mut().enumerate() {
        let mut plus = pose.clone();
        plus.as_mut_slice()[i] += FD_STEP;
        let mut minus = pose.clone();
        minus.as_mut_slice()[i] -= FD_STEP;
        let fp = opt.objective(&plus, initial, &pairing).unwrap().value;
        let fm = opt.objective(&minus, initial, &pairing).unwrap().value;
        *g = (fp - fm) / (2.0 * FD_STEP);
    }
    let diff: Vec<f64> = analytic.iter().zip(&fd).map(|(a, b)| a - b).collect();
    (norm(&diff) / norm(&fd).max(1e-12), pairing.pairs.len())
}

fn kinematic_jacobian_error(desc: &HandDescription, pose: &HandPose) -> f64 {
    let all: Vec<usize> = (0..POSE_DIM).collect();
    let (_, d) = evaluate_with_derivatives(desc, pose, &all).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..POSE_DIM {
        let mut plus = pose.clone();
        plus.as_mut_slice()[i] += FD_STEP;
        let mut minus = pose.clone();
        minus.as_mut_slice()[i] -= FD_STEP;
        let sp = forward_kinematics(desc, &plus).unwrap();
        let sm = forward_kinematics(desc, &minus).unwrap();
        let pairs = sp.keypoints.iter().zip(&sm.keypoints).zip(&d.keypoints[i]);
        let joint_pairs = sp.joints.iter().zip(&sm.joints).zip(&d.joints[i]);
        for ((p, m), a) in pairs.chain(joint_pairs) {
            let fd = (p - m) / (2.0 * FD_STEP);
            num += (a - fd).norm_squared();
            den += fd.norm_squared();
        }
    }
    (num / den).sqrt()
}

fn criterion_gradients(desc: &HandDescription, layout: &SensorLayout) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6ad);
    let (mut worst_obj, mut worst_surface, mut worst_kin) = (0.0f64, 0.0f64, 0.0f64);
    let (mut done, mut skipped, mut with_pairs, mut seed) = (0, 0, 0, 0u64);
    while done < GRADIENT_SCENES {
        let spec = SceneSpec { object: random_object(&mut rng), level: 3, seed, ..Default::default() };
        seed += 1;
        let Ok(scene) = Scene::generate("g", &spec, desc, layout) else {
            skipped += 1;
            continue;
        };
        let ctx = SceneContext::from_scene(scene);
        let forces = ctx.force_source(false).unwrap();
        // evaluate at the perturbed pose with the ground truth as anchor so
        // every term has a non-zero gradient
        let (pose, anchor) = (&ctx.scene.init_pose, &ctx.scene.gt_pose);
        let opt = ForceAwareOptimizer::new(desc, &ctx.scene.object, forces.clone(), OptimConfig::default())
            .unwrap()
            .with_layout(layout);
        let (e, n) = objective_gradient_error(&opt, pose, anchor);
        worst_obj = worst_obj.max(e);
        with_pairs += (n > 0) as usize;
        if done % 5 == 0 {
            let mut cfg = OptimConfig::default();
            cfg.dffield.pair_mode = PairMode::AllSurface;
            let opt = ForceAwareOptimizer::new(desc, &ctx.scene.object, forces, cfg).unwrap().with_layout(layout);
            worst_surface = worst_surface.max(objective_gradient_error(&opt, pose, anchor).0);
        }
        worst_kin = worst_kin.max(kinematic_jacobian_error(desc, pose));
        done += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_obj <= GRADIENT_REL_TOL
        && worst_surface <= GRADIENT_REL_TOL
        && worst_kin <= KEYPOINT_REL_TOL
        && secs <= GRADIENT_BUDGET_S;
    outcome(
        pass,
        format!(
            "{done} scenes ({with_pairs} with contact pairs, {skipped} seeds without a grasp skipped); \
             objective rel err max {worst_obj:.2e} keypoints-mode, {worst_surface:.2e} all-surface (tol {GRADIENT_REL_TOL:.0e}); \
             keypoint/joint jacobian rel err max {worst_kin:.2e} (tol {KEYPOINT_REL_TOL:.0e}); {secs:.1} s (budget {GRADIENT_BUDGET_S} s)"
        ),
    )
}

// ---------------------------------------------------------------- 2

fn criterion_barrier() -> Outcome {
    let l_hat = 2.0;
    let kappas = [0.05, 0.5, 1.0, 5.0];
    let mut notes = Vec::new();
    let mut pass = true;

    let at_threshold = kappas.iter().all(|&k| barrier_energy(k, l_hat, l_hat).unwrap() == 0.0);
    pass &= at_threshold;
    notes.push(format!("B(l_hat)=0 {}", if at_threshold { "ok" } else { "no" }));

    let mut monotone = true;
    for &k in &kappas {
        let grid: Vec<f64> = (1..=1000).map(|i| barrier_energy(k, l_hat * i as f64 / 1001.0, l_hat).unwrap()).collect();
        monotone &= grid.windows(2).all(|w| w[1] < w[0]);
    }
    pass &= monotone;
    notes.push(format!("strictly decreasing on 1000-point grid {}", if monotone { "ok" } else { "no" }));

    let ratios: Vec<f64> = kappas
        .iter()
        .map(|&k| barrier_energy(k, l_hat / 1000.0, l_hat).unwrap() / barrier_energy(k, l_hat / 2.0, l_hat).unwrap())
        .collect();
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio_ok = min_ratio > 100.0;
    pass &= ratio_ok;
    notes.push(format!("B(l_hat/1000)/B(l_hat/2) = {min_ratio:.3} (need > 100)"));

    let slope = kappas
        .iter()
        .map(|&k| barrier_derivative(k, l_hat - 1e-6 * l_hat, l_hat).abs())
        .fold(0.0, f64::max);
    pass &= slope < 1e-3;
    notes.push(format!("|B'(l_hat(1-1e-6))| max {slope:.2e} (need < 1e-3)"));

    let mut in_kappa = true;
    for l in [0.1, 0.5, 1.0, 1.5, 1.9] {
        let b: Vec<f64> = (0..50).map(|i| barrier_energy(0.02 * (i + 1) as f64 * 5.0, l, l_hat).unwrap()).collect();
        in_kappa &= b.windows(2).all(|w| w[1] < w[0]);
    }
    pass &= in_kappa;
    notes.push(format!("decreasing in kappa {}", if in_kappa { "ok" } else { "no" }));
    outcome(pass, notes.join("; "))
}

// ---------------------------------------------------------- 3, 4, 5

struct SceneRun {
    init: MetricsReport,
    samples: Vec<AblationSample>,
    fallback_pd: f64,
}

fn run_default_scenes(desc: &HandDescription, layout: &SensorLayout) -> Vec<SceneRun> {
    (0..EFFICACY_SCENES)
        .map(|seed| {
            let spec = SceneSpec { seed, ..Default::default() };
            let scene = Scene::generate(format!("scene_{seed:04}"), &spec, desc, layout).expect("default scene");
            let ctx = SceneContext::from_scene(scene);
            let (init, samples) = ablate_scene(&ctx, &OptimConfig::default()).unwrap();
            // tactile removed: the pipeline falls back to the fixed force
            let mut bare = SceneContext::from_scene(ctx.scene.clone());
            bare.scene.tactile = None;
            let result = bare.optimize_from(&bare.scene.init_pose, &OptimConfig::default(), false).unwrap();
            let evaluator = bare.evaluator().unwrap();
            let fallback_pd = bare.evaluate(&evaluator, &result.theta_final).unwrap().pd_mm;
            SceneRun { init, samples, fallback_pd }
        })
        .collect()
}

fn variant<'a>(run: &'a SceneRun, name: &str) -> &'a AblationSample {
    run.samples.iter().find(|s| s.config == name).unwrap()
}

fn fraction(runs: &[SceneRun], f: impl Fn(&SceneRun) -> bool) -> f64 {
    runs.iter().filter(|r| f(r)).count() as f64 / runs.len() as f64
}

fn criterion_efficacy(runs: &[SceneRun]) -> Outcome {
    let pd = fraction(runs, |r| variant(r, "full").pd_mm <= PD_RATIO * r.init.pd_mm);
    let ciou = fraction(runs, |r| variant(r, "full").ciou > r.init.ciou);
    let mp = fraction(runs, |r| variant(r, "full").mpjpe_mm <= r.init.mpjpe_mm);
    let pass = pd >= PD_CIOU_FRACTION && ciou >= PD_CIOU_FRACTION && mp >= MPJPE_FRACTION;
    let med = |f: &dyn Fn(&SceneRun) -> f64| median(&runs.iter().map(f).collect::<Vec<_>>());
    outcome(
        pass,
        format!(
            "PD <= {PD_RATIO} x init on {:.0}% (need {:.0}%); CIoU up on {:.0}% (need {:.0}%); MPJPE <= init on {:.0}% (need {:.0}%); \
             medians init->final PD {:.2}->{:.2} mm, CIoU {:.3}->{:.3}, MPJPE {:.2}->{:.2} mm",
            pd * 100.0,
            PD_CIOU_FRACTION * 100.0,
            ciou * 100.0,
            PD_CIOU_FRACTION * 100.0,
            mp * 100.0,
            MPJPE_FRACTION * 100.0,
            med(&|r| r.init.pd_mm),
            med(&|r| variant(r, "full").pd_mm),
            med(&|r| r.init.ciou),
            med(&|r| variant(r, "full").ciou),
            med(&|r| r.init.mpjpe_mm),
            med(&|r| variant(r, "full").mpjpe_mm),
        ),
    )
}

fn criterion_ablation(runs: &[SceneRun]) -> Outcome {
    let med = |name: &str, f: fn(&AblationSample) -> f64| median(&runs.iter().map(|r| f(variant(r, name))).collect::<Vec<_>>());
    let pd = |n| med(n, |s| s.pd_mm);
    let ciou = |n| med(n, |s| s.ciou);
    let mp = |n| med(n, |s| s.mpjpe_mm);
    let mi = |n| med(n, |s| s.mpjpe_to_init_mm);
    let checks = [
        ("PD(no_barrier) > PD(full)", pd("no_barrier") > pd("full"), format!("{:.3} vs {:.3}", pd("no_barrier"), pd("full"))),
        ("PD(no_relative) <= PD(full)", pd("no_relative") <= pd("full"), format!("{:.3} vs {:.3}", pd("no_relative"), pd("full"))),
        ("CIoU(no_relative) < CIoU(full)", ciou("no_relative") < ciou("full"), format!("{:.3} vs {:.3}", ciou("no_relative"), ciou("full"))),
        ("MPJPE(no_Lo) > MPJPE(full) to gt", mp("no_Lo") > mp("full"), format!("{:.3} vs {:.3}", mp("no_Lo"), mp("full"))),
        (
            "MPJPE(no_Lo) > MPJPE(full) to initial",
            mi("no_Lo") > mi("full"),
            format!("{:.3} vs {:.3}", mi("no_Lo"), mi("full")),
        ),
    ];
    let detail = checks
        .iter()
        .map(|(name, ok, v)| format!("{name} {} ({v})", if *ok { "ok" } else { "no" }))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(
        checks.iter().all(|c| c.1),
        detail,
    )
}

fn criterion_fixed_force(runs: &[SceneRun]) -> Outcome {
    let f = fraction(runs, |r| r.fallback_pd < r.init.pd_mm);
    let agrees = runs.iter().all(|r| r.fallback_pd == variant(r, "fixed_force").pd_mm);
    outcome(
        f >= FIXED_FORCE_FRACTION && agrees,
        format!(
            "PD reduced without tactile input on {:.0}% of scenes (need {:.0}%); fallback matches fixed_force variant: {agrees}",
            f * 100.0,
            FIXED_FORCE_FRACTION * 100.0
        ),
    )
}

// ------------------------------------------------------------ 6, 7

fn timed_run(ctx: &SceneContext, cfg: &OptimConfig) -> f64 {
    let forces = ctx.force_source(false).unwrap();
    let start = Instant::now();
    let r = ForceAwareOptimizer::new(&ctx.desc, &ctx.scene.object, forces, cfg.clone())
        .unwrap()
        .with_layout(&ctx.layout)
        .run(&ctx.scene.init_pose)
        .unwrap();
    assert_eq!(r.trace.len(), cfg.iterations);
    start.elapsed().as_secs_f64()
}

fn criterion_pair_mode(ctx: &SceneContext) -> Outcome {
    let keypoints = OptimConfig::default();
    let mut surface = OptimConfig::default();
    surface.dffield.pair_mode = PairMode::AllSurface;
    let kp = median(&(0..3).map(|_| timed_run(ctx, &keypoints)).collect::<Vec<_>>());
    let sf = median(&(0..3).map(|_| timed_run(ctx, &surface)).collect::<Vec<_>>());
    outcome(
        sf >= PAIR_MODE_RATIO * kp,
        format!("all-surface {:.1} ms vs keypoints {:.1} ms: ratio {:.1} (need >= {PAIR_MODE_RATIO})", sf * 1e3, kp * 1e3, sf / kp),
    )
}

fn criterion_runtime(ctx: &SceneContext) -> Outcome {
    let secs = timed_run(ctx, &OptimConfig::default());
    outcome(
        secs <= RUNTIME_BUDGET_S,
        format!(
            "{} object vertices, 100 iterations in {:.3} s (budget {RUNTIME_BUDGET_S} s)",
            ctx.scene.object.vertices().len(),
            secs
        ),
    )
}

// ---------------------------------------------------------------- 8

fn brute_triangle_distance(p: &Vec3, t: [Vec3; 3]) -> f64 {
    let [a, b, c] = t;
    let n = (b - a).cross(&(c - a));
    let inside_plane = {
        let q = p - n * (n.dot(&(p - a)) / n.norm_squared());
        let s0 = (b - a).cross(&(q - a)).dot(&n);
        let s1 = (c - b).cross(&(q - b)).dot(&n);
        let s2 = (a - c).cross(&(q - c)).dot(&n);
        (s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0).then(|| (q - p).norm())
    };
    let seg = |u: Vec3, v: Vec3| {
        let d = v - u;
        let t = ((p - u).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        (u + d * t - p).norm()
    };
    inside_plane.unwrap_or_else(|| seg(a, b).min(seg(b, c)).min(seg(c, a)))
}

fn brute_winding(mesh: &TriMesh, p: &Vec3) -> f64 {
    (0..mesh.triangles().len())
        .map(|t| {
            let [a, b, c] = mesh.triangle(t).map(|v| v - p);
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(&b.cross(&c));
            let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
            2.0 * num.atan2(den)
        })
        .sum::<f64>()
        / (4.0 * PI)
}

fn brute_signed_distance(mesh: &TriMesh, p: &Vec3) -> f64 {
    let d = (0..mesh.triangles().len())
        .map(|t| brute_triangle_distance(p, mesh.triangle(t)))
        .fold(f64::INFINITY, f64::min);
    if brute_winding(mesh, p) > 0.5 {
        -d
    } else {
        d
    }
}

fn random_mesh(rng: &mut ChaCha8Rng) -> TriMesh {
    let (kind, level) = match rng.random_range(0..4) {
        0 => (ObjectKind::Sphere { radius: rng.random_range(5.0..20.0) }, rng.random_range(1..=2)),
        1 => (
            ObjectKind::Box {
                size: [rng.random_range(5.0..30.0), rng.random_range(5.0..30.0), rng.random_range(5.0..30.0)],
            },
            rng.random_range(0..=3),
        ),
        2 => (
            ObjectKind::Cylinder { radius: rng.random_range(4.0..15.0), height: rng.random_range(5.0..30.0) },
            rng.random_range(0..=2),
        ),
        _ => (
            ObjectKind::Superellipsoid {
                radii: [rng.random_range(5.0..20.0), rng.random_range(5.0..20.0), rng.random_range(5.0..20.0)],
                exponent: rng.random_range(1.0..3.0),
            },
            rng.random_range(1..=2),
        ),
    };
    let mesh = make_object(&kind, level).unwrap();
    assert!(mesh.triangles().len() <= 1000);
    let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let iso = Isometry3::from_parts(
        Translation3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)),
        UnitQuaternion::from_scaled_axis(axis * rng.random_range(0.0..PI)),
    );
    mesh.transformed(&iso)
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, center: Vec3, spread: f64) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            center
                + Vec3::new(
                    rng.random_range(-spread..spread),
                    rng.random_range(-spread..spread),
                    rng.random_range(-spread..spread),
                )
        })
        .collect()
}

fn brute_nearest(p: &Vec3, set: &[Vec3]) -> f64 {
    set.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)
}

fn brute_grid_inside(mesh: &TriMesh, min: Vec3, max: Vec3, d: usize) -> Vec<bool> {
    let step = (max - min) / d as f64;
    let mut cells = Vec::with_capacity(d * d * d);
    for k in 0..d {
        for j in 0..d {
            for i in 0..d {
                let c = min + Vec3::new((i as f64 + 0.5) * step.x, (j as f64 + 0.5) * step.y, (k as f64 + 0.5) * step.z);
                cells.push(brute_winding(mesh, &c) > 0.5);
            }
        }
    }
    cells
}

fn criterion_metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0dac1e);
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut record = |name: &'static str, e: f64| {
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(e);
    };
    for _ in 0..ORACLE_INSTANCES {
        // MPJPE
        let a = random_points(&mut rng, 21, Vec3::zeros(), 50.0);
        let b = random_points(&mut rng, 21, Vec3::zeros(), 50.0);
        let brute = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).sum::<f64>() / 21.0;
        record("MPJPE", rel_err(mpjpe(&a, &b).unwrap(), brute));

        // CD
        let na = rng.random_range(1..=500);
        let nb = rng.random_range(1..=500);
        let a = random_points(&mut rng, na, Vec3::zeros(), 20.0);
        let b = random_points(&mut rng, nb, Vec3::new(3.0, 0.0, 0.0), 15.0);
        let one = |x: &[Vec3], y: &[Vec3]| x.iter().map(|p| brute_nearest(p, y)).sum::<f64>() / x.len() as f64;
        let brute = 0.5 * (one(&a, &b) + one(&b, &a));
        let cd = chamfer_distance(&PointCloud::new(a).unwrap(), &PointCloud::new(b).unwrap()).unwrap();
        record("CD", rel_err(cd, brute));

        // PD
        let mesh = random_mesh(&mut rng);
        let bounds = mesh.bounds();
        let n = rng.random_range(1..=500);
        let pts = random_points(&mut rng, n, bounds.center(), 0.6 * bounds.extent().max());
        let brute = pts.iter().map(|p| (-brute_signed_distance(&mesh, p)).max(0.0)).fold(0.0, f64::max);
        let pd = penetration_depth(&PointCloud::new(pts.clone()).unwrap(), &mesh).unwrap();
        record("PD", rel_err(pd, brute));

        // CIoU, both hands near the same object
        let n_other = rng.random_range(1..=500);
        let other = random_points(&mut rng, n_other, bounds.center(), 0.6 * bounds.extent().max());
        let brute_mask = |hand: &[Vec3]| -> Vec<bool> {
            mesh.vertices().iter().map(|v| brute_nearest(v, hand) < CONTACT_THRESHOLD_MM).collect()
        };
        let (ma, mb) = (brute_mask(&pts), brute_mask(&other));
        let inter = ma.iter().zip(&mb).filter(|(x, y)| **x && **y).count();
        let union = ma.iter().zip(&mb).filter(|(x, y)| **x || **y).count();
        let brute = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
        let la = contact_mask(&mesh, &PointCloud::new(pts).unwrap(), CONTACT_THRESHOLD_MM).unwrap();
        let lb = contact_mask(&mesh, &PointCloud::new(other).unwrap(), CONTACT_THRESHOLD_MM).unwrap();
        let masks_equal = la.flags == ma && lb.flags == mb;
        record("CIoU", if masks_equal { rel_err(contact_iou(&la, &lb).unwrap(), brute) } else { f64::INFINITY });

        // voxel IoU of two overlapping meshes
        let other_mesh = random_mesh(&mut rng);
        let res = rng.random_range(6..=12);
        let (ub, ob) = (mesh.bounds(), other_mesh.bounds());
        let (mut min, mut max) = (ub.min, ub.max);
        for k in 0..3 {
            min[k] = min[k].min(ob.min[k]);
            max[k] = max[k].max(ob.max[k]);
        }
        let pad = (max - min) * 0.05;
        let (min, max) = (min - pad, max + pad);
        let shared = iou_bounds(&mesh, &other_mesh);
        assert!((shared.min - min).norm() < 1e-12 && (shared.max - max).norm() < 1e-12);
        let ga = brute_grid_inside(&mesh, min, max, res);
        let gb = brute_grid_inside(&other_mesh, min, max, res);
        let inter = ga.iter().zip(&gb).filter(|(x, y)| **x && **y).count();
        let union = ga.iter().zip(&gb).filter(|(x, y)| **x || **y).count();
        let brute = if union == 0 { 0.0 } else { inter as f64 / union as f64 };
        record("IoU", rel_err(voxel_iou(&mesh, &other_mesh, res).unwrap(), brute));
    }
    let pass = worst.values().all(|&e| e <= ORACLE_REL_TOL);
    let detail = worst
        .iter()
        .map(|(k, v)| format!("{k} {v:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("{ORACLE_INSTANCES} instances each; max rel err {detail} (tol {ORACLE_REL_TOL:.0e})"))
}

// ---------------------------------------------------------------- 9

fn dff(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_dff")).args(args).output().expect("run dff");
    assert!(out.status.success(), "dff {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn pipeline(root: &Path, jobs: &str) {
    let scenes = root.join("scenes");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    dff(&["generate", "--count", "2", "--seed", "11", "--level", "4", "--out", &s(&scenes), "--jobs", jobs]);
    for id in ["scene_0000", "scene_0001"] {
        let dir = scenes.join(id);
        let manifest = s(&dir.join("manifest.json"));
        let out = root.join("runs").join(id);
        dff(&["optimize", "--scene", &manifest, "--out", &s(&out), "--no-timing", "--jobs", jobs]);
        dff(&[
            "evaluate",
            "--scene",
            &manifest,
            "--pose",
            &s(&dir.join("init.json")),
            &s(&out.join("final.json")),
            "--out",
            &s(&out.join("metrics.csv")),
        ]);
    }
    dff(&[
        "ablate",
        "--index",
        &s(&scenes.join("index.json")),
        "--iterations",
        "20",
        "--out",
        &s(&root.join("ablation.csv")),
        "--jobs",
        jobs,
    ]);
}

fn collect_files(dir: &Path, base: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            collect_files(&p, base, out);
        } else {
            out.insert(p.strip_prefix(base).unwrap().to_path_buf(), fs::read(&p).unwrap());
        }
    }
}

fn criterion_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let runs: Vec<(&str, PathBuf)> = vec![("1", tmp.path().join("a")), ("1", tmp.path().join("b")), ("8", tmp.path().join("c"))];
    let mut trees = Vec::new();
    for (jobs, dir) in &runs {
        pipeline(dir, jobs);
        let mut files = BTreeMap::new();
        collect_files(dir, dir, &mut files);
        trees.push(files);
    }
    let files = trees[0].len();
    let identical = trees.iter().all(|t| t == &trees[0]);
    let csv_json = trees[0]
        .keys()
        .filter(|k| matches!(k.extension().and_then(|e| e.to_str()), Some("csv" | "json")))
        .count();
    outcome(
        identical && files > 0,
        format!("3 runs of generate->optimize->evaluate->ablate (jobs 1, 1, 8): {files} files ({csv_json} csv/json), byte-identical: {identical}"),
    )
}

// --------------------------------------------------------------- 10

fn criterion_defaults() -> Outcome {
    let d = DefaultsSnapshot::current();
    let expected = [
        ("l_hat", d.barrier_threshold_mm, 2.0),
        ("R", d.query_radius_mm, 5.0),
        ("l_c", d.contact_label_distance_mm, 3.0),
        ("iterations", d.iterations as f64, 100.0),
        ("lr", d.learning_rate, 2e-3),
        ("contact threshold", d.contact_threshold_mm, 3.0),
    ];
    let bad: Vec<String> = expected
        .iter()
        .filter(|(_, got, want)| got != want)
        .map(|(n, got, want)| format!("{n} = {got} (want {want})"))
        .collect();
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("snapshot {}", serde_json::to_string(&d).unwrap())
        } else {
            bad.join("; ")
        },
    )
}

fn main() {
    // `cargo test -- --list` and filters passed by the harness are ignored
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let desc = HandDescription::default();
    let layout = SensorLayout::default();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("criterion {n}: {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    report(1, "gradient correctness", criterion_gradients(&desc, &layout));
    report(2, "barrier properties", criterion_barrier());
    let runs = run_default_scenes(&desc, &layout);
    report(3, "optimization efficacy", criterion_efficacy(&runs));
    report(4, "ablation directionality", criterion_ablation(&runs));
    report(5, "fixed-force mode", criterion_fixed_force(&runs));
    let scene = Scene::generate("scene_0000", &SceneSpec::default(), &desc, &layout).unwrap();
    let ctx = SceneContext::from_scene(scene);
    report(6, "pair-mode cost ordering", criterion_pair_mode(&ctx));
    report(7, "runtime budget", criterion_runtime(&ctx));
    report(8, "metric oracles", criterion_metric_oracles());
    report(9, "determinism", criterion_determinism());
    report(10, "hyperparameter conformance", criterion_defaults());

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
