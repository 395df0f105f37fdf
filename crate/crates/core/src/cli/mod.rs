//! `dff` command-line front-end. Exit codes: 0 success, 2 input error,
//! 3 numerical abort.

mod config;
mod pipeline;

pub use config::RunSettings;
pub use pipeline::{ablate_scene, ablation_variants, median, summarize, AblationRow, AblationSample, SceneContext};

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::dffield::PairMode;
use crate::error::{Error, Result};
use crate::hand_model::{HandDescription, HandPose};
use crate::metrics::MetricsRow;
use crate::optimizer::OptimStatus;
use crate::scenegen::{scene_id, NoiseSpec, ObjectKind, Scene, SceneIndex, SceneSpec, INDEX_FILE};
use crate::tactile::SensorLayout;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_ABORT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "dff", version, about = "Force-aware contact refinement for hand-object grasps")]
pub struct Cli {
    /// Worker threads for scene-level parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic grasp scenes.
    Generate(GenerateArgs),
    /// Refine the initial hand pose of one scene.
    Optimize(OptimizeArgs),
    /// Score pose files against a scene's ground truth.
    Evaluate(EvaluateArgs),
    /// Run the ablation variants over a scene index.
    Ablate(AblateArgs),
    /// Print a JSON summary of a scene.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectArg {
    Sphere,
    Box,
    Cylinder,
    Superellipsoid,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Scene spec JSON; inline flags override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub object: Option<ObjectArg>,
    /// Comma-separated object dimensions in mm: sphere r; box x,y,z;
    /// cylinder r,h; superellipsoid a,b,c,e.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<f64>>,
    #[arg(long)]
    pub level: Option<u32>,
    /// Initial-pose noise: translation mm, rotation rad, joint rad.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub noise: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct OptimFlags {
    /// key = value file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub pair_mode: Option<PairMode>,
    #[arg(long)]
    pub disable_barrier: bool,
    #[arg(long)]
    pub disable_relative: bool,
    #[arg(long)]
    pub disable_lr: bool,
    #[arg(long)]
    pub disable_lo: bool,
    /// Use the constant force near the object instead of tactile readings.
    #[arg(long)]
    pub fixed_force: bool,
}

impl OptimFlags {
    pub fn settings(&self) -> Result<RunSettings> {
        let mut s = RunSettings::default();
        if let Some(p) = &self.config {
            s.apply_file(p)?;
        }
        let o = &mut s.optim;
        if let Some(n) = self.iterations {
            o.iterations = n;
        }
        if let Some(lr) = self.lr {
            o.learning_rate = lr;
        }
        if let Some(m) = self.pair_mode {
            o.dffield.pair_mode = m;
        }
        o.disable_barrier |= self.disable_barrier;
        o.disable_relative |= self.disable_relative;
        o.disable_lr |= self.disable_lr;
        o.disable_lo |= self.disable_lo;
        s.fixed_force |= self.fixed_force;
        s.optim.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Scene manifest.
    #[arg(long)]
    pub scene: PathBuf,
    /// Output directory for result.json and final.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Write wall_ms as 0 so outputs are byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub optim: OptimFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Pose JSON files; each becomes one row labelled by its file stem.
    #[arg(long, required = true, num_args = 1..)]
    pub pose: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one row per scene and variant.
    #[arg(long)]
    pub per_scene: Option<PathBuf>,
    #[command(flatten)]
    pub optim: OptimFlags,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub scene: PathBuf,
}

/// Entry point of the `dff` binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("DFF_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Inspect(a) => cmd_inspect(a),
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::invalid(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    write_text(path, &String::from_utf8_lossy(&bytes))
}

fn object_from_flags(kind: ObjectArg, dims: Option<&[f64]>) -> Result<ObjectKind> {
    let d = dims.unwrap_or(&[]);
    let need = |n: usize| -> Result<()> {
        if d.len() == n {
            Ok(())
        } else {
            Err(Error::invalid(format!("{kind:?} needs {n} dims, got {}", d.len())))
        }
    };
    Ok(match kind {
        ObjectArg::Sphere if d.is_empty() => ObjectKind::Sphere { radius: 40.0 },
        ObjectArg::Sphere => {
            need(1)?;
            ObjectKind::Sphere { radius: d[0] }
        }
        ObjectArg::Box => {
            need(3)?;
            ObjectKind::Box { size: [d[0], d[1], d[2]] }
        }
        ObjectArg::Cylinder => {
            need(2)?;
            ObjectKind::Cylinder { radius: d[0], height: d[1] }
        }
        ObjectArg::Superellipsoid => {
            need(4)?;
            ObjectKind::Superellipsoid { radii: [d[0], d[1], d[2]], exponent: d[3] }
        }
    })
}

fn base_spec(a: &GenerateArgs) -> Result<SceneSpec> {
    let mut spec = match &a.spec {
        Some(p) => read_json(p)?,
        None => SceneSpec::default(),
    };
    match (a.object, &a.dims) {
        (Some(kind), dims) => spec.object = object_from_flags(kind, dims.as_deref())?,
        (None, Some(_)) => return Err(Error::invalid("--dims needs --object")),
        (None, None) => {}
    }
    if let Some(l) = a.level {
        spec.level = l;
    }
    if let Some(n) = &a.noise {
        if n.len() != 3 {
            return Err(Error::invalid("--noise takes translation,rotation,joint"));
        }
        spec.noise = NoiseSpec { translation_mm: n[0], rotation_rad: n[1], joint_rad: n[2] };
    }
    Ok(spec)
}

fn cmd_generate(a: &GenerateArgs) -> Result<u8> {
    let base = base_spec(a)?;
    base.validate()?;
    let desc = HandDescription::default();
    let layout = SensorLayout::default();
    // Everything is generated in memory first so a failure leaves no output.
    let scenes: Vec<Scene> = (0..a.count)
        .into_par_iter()
        .map(|i| {
            let spec = SceneSpec { seed: a.seed.wrapping_add(i as u64), ..base.clone() };
            Scene::generate(scene_id(i), &spec, &desc, &layout)
        })
        .collect::<Result<_>>()?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let mut index = SceneIndex { scenes: Vec::new() };
    for s in &scenes {
        s.save(&a.out.join(&s.id))?;
        index.scenes.push(format!("{}/{}", s.id, crate::scenegen::MANIFEST_FILE));
    }
    index.save(&a.out.join(INDEX_FILE))?;
    info!("wrote {} scenes to {}", scenes.len(), a.out.display());
    Ok(0)
}

fn cmd_optimize(a: &OptimizeArgs) -> Result<u8> {
    let settings = a.optim.settings()?;
    let ctx = SceneContext::load(&a.scene)?;
    let mut result = ctx.optimize(&settings)?;
    if a.no_timing {
        result.wall_ms = 0.0;
    }
    write_text(&a.out.join("result.json"), &result.to_json())?;
    write_text(&a.out.join("final.json"), &result.theta_final.to_json())?;
    match result.status {
        OptimStatus::Completed => Ok(0),
        OptimStatus::AbortedNan => {
            warn!("optimization aborted: {}", result.abort_reason.as_deref().unwrap_or("non-finite value"));
            Ok(EXIT_ABORT)
        }
    }
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<u8> {
    let ctx = SceneContext::load(&a.scene)?;
    let poses: Vec<(String, HandPose)> = a
        .pose
        .iter()
        .map(|p| {
            let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((label, HandPose::load(p)?))
        })
        .collect::<Result<_>>()?;
    let evaluator = ctx.evaluator()?;
    let rows: Vec<MetricsRow> = poses
        .iter()
        .map(|(label, pose)| Ok(MetricsRow::new(&ctx.scene.id, label, &ctx.evaluate(&evaluator, pose)?)))
        .collect::<Result<_>>()?;
    write_csv(&a.out, &rows)?;
    Ok(0)
}

fn cmd_ablate(a: &AblateArgs) -> Result<u8> {
    let settings = a.optim.settings()?;
    let index = SceneIndex::load(&a.index)?;
    if index.scenes.is_empty() {
        return Err(Error::invalid("scene index is empty"));
    }
    let contexts: Vec<SceneContext> = index
        .manifests(&a.index)
        .iter()
        .map(|m| SceneContext::load(m))
        .collect::<Result<_>>()?;
    let mut per_scene: Vec<Vec<AblationSample>> = contexts
        .par_iter()
        .map(|ctx| ablate_scene(ctx, &settings.optim).map(|(_, s)| s))
        .collect::<Result<_>>()?;
    per_scene.sort_by(|x, y| x[0].scene_id.cmp(&y[0].scene_id));
    let samples: Vec<AblationSample> = per_scene.into_iter().flatten().collect();
    if let Some(p) = &a.per_scene {
        write_csv(p, &samples)?;
    }
    write_csv(&a.out, &summarize(&samples))?;
    Ok(0)
}

#[derive(Serialize)]
struct SceneSummary<'a> {
    id: &'a str,
    spec: &'a SceneSpec,
    object_vertices: usize,
    object_triangles: usize,
    object_volume_mm3: f64,
    gt_contact_vertices: usize,
    has_tactile: bool,
    active_regions: Option<usize>,
    init: crate::metrics::MetricsReport,
}

fn cmd_inspect(a: &InspectArgs) -> Result<u8> {
    let ctx = SceneContext::load(&a.scene)?;
    let evaluator = ctx.evaluator()?;
    let init = ctx.evaluate(&evaluator, &ctx.scene.init_pose)?;
    let active_regions = match &ctx.scene.tactile {
        Some(t) => Some(crate::tactile::region_average(t, &ctx.layout)?.active_count()),
        None => None,
    };
    let object = &ctx.scene.object;
    let summary = SceneSummary {
        id: &ctx.scene.id,
        spec: &ctx.scene.spec,
        object_vertices: object.vertices().len(),
        object_triangles: object.triangles().len(),
        object_volume_mm3: object.signed_volume(),
        gt_contact_vertices: ctx.scene.gt_mask.count(),
        has_tactile: ctx.scene.tactile.is_some(),
        active_regions,
        init,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(0)
}
