//! The `dpct` command line: `phantom`, `simulate` and `reconstruct`.
//!
//! Every command writes a `<output>.manifest.json` next to its main output.
//! Exit codes: 0 success, 2 usage, 3 IO, 4 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::diffops::{make_diff, DiffScheme};
use crate::error::Error;
use crate::fbp::{fbp_reconstruct, FilterKind};
use crate::io::{
    manifest_path, read_image, read_sinogram, with_suffix, write_image, write_pgm, write_report_csv,
    write_sinogram, RunManifest,
};
use crate::krylov::{Gbit, GbitConfig, IterationRecord, Termination, UpdateScheme};
use crate::linop::{compose, LinearOperator};
use crate::projector::{build_projector, Image, ProjectionGeometry, Sinogram};
use crate::simlab::{
    add_noise, make_phantom, mix_models, phase_retrieval_rhs, DataModel, ModelErrorSpec, NoiseSpec,
    PhantomSpec, PhantomVariant,
};
use crate::vector::{norm, sub};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Library(e) => match e {
                Error::Io { .. } | Error::Format { .. } => 3,
                Error::Numerical(_) | Error::Singular(_) => 4,
                Error::Shape(_) | Error::InvalidArgument(_) => 2,
            },
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "dpct", version, about = "Algebraic differential phase-contrast CT reconstruction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rasterize a Shepp-Logan phantom.
    Phantom(PhantomArgs),
    /// Generate differential sinogram data from an image.
    Simulate(SimulateArgs),
    /// Reconstruct an image from a differential sinogram.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Modified,
    Classic,
}

impl From<VariantArg> for PhantomVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Modified => PhantomVariant::SheppLoganModified,
            VariantArg::Classic => PhantomVariant::SheppLoganClassic,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PhantomArgs {
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long, value_enum, default_value = "modified")]
    pub variant: VariantArg,
    /// Output prefix; writes `<out>.img`, `<out>.pgm` and the manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Forward,
    Central,
}

impl From<SchemeArg> for DiffScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Forward => DiffScheme::Forward,
            SchemeArg::Central => DiffScheme::Central,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Image in the float format written by `phantom`.
    #[arg(long)]
    pub phantom: PathBuf,
    #[arg(long, default_value_t = 360)]
    pub angles: usize,
    /// Detector count; defaults to the image width.
    #[arg(long)]
    pub detectors: Option<usize>,
    #[arg(long, value_enum, default_value = "forward")]
    pub model: SchemeArg,
    /// Weight of the other difference model mixed into the data, in [0, 0.5).
    #[arg(long, default_value_t = 0.2)]
    pub omega: f64,
    /// Relative noise level ‖b − b_clean‖/‖b_clean‖.
    #[arg(long, default_value_t = 0.10)]
    pub noise: f64,
    /// Constant added to every standard-normal noise draw.
    #[arg(long, default_value_t = 0.0)]
    pub offset: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sinogram path; the manifest goes to `<out>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Gbit,
    Lsqr,
    Fbp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Forward,
    Central,
    PhaseRetrieval,
}

impl From<ModelArg> for DataModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Forward => DataModel::Forward,
            ModelArg::Central => DataModel::Central,
            ModelArg::PhaseRetrieval => DataModel::PhaseRetrieval,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UpdateArg {
    Classic,
    Alternative,
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub sino: PathBuf,
    #[arg(long, value_enum, default_value = "gbit")]
    pub solver: SolverArg,
    #[arg(long, value_enum, default_value = "forward")]
    pub model: ModelArg,
    /// Discrepancy tolerance η ≥ 1 [default: 1.01].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Noise norm ε, or `manifest` to read the value recorded by `simulate`.
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Initial regularization parameter [default: 1].
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Stop once the discrepancy test has held more than this many times [default: 3].
    #[arg(long)]
    pub maxcounter: Option<usize>,
    /// Iteration cap [default: 200].
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<UpdateArg>,
    /// Ground-truth image; enables the rel_error column.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Image size; defaults to the simulate manifest, then to the detector count.
    #[arg(long)]
    pub size: Option<usize>,
    /// Output prefix: `<out>.img`, `<out>.pgm`, `<out>.report.csv` and the manifest.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code; messages go to stderr.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let command_line = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli.command, command_line) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command, command_line: Vec<String>) -> CliResult<()> {
    match command {
        Command::Phantom(a) => cmd_phantom(&a, command_line),
        Command::Simulate(a) => cmd_simulate(&a, command_line),
        Command::Reconstruct(a) => cmd_reconstruct(&a, command_line),
    }
}

fn write_image_outputs(prefix: &Path, img: &Image, manifest: &mut RunManifest) -> CliResult<()> {
    let img_path = with_suffix(prefix, ".img");
    let pgm_path = with_suffix(prefix, ".pgm");
    write_image(&img_path, img, Some(&manifest.run_id))?;
    write_pgm(&pgm_path, img)?;
    manifest.outputs.push(img_path);
    manifest.outputs.push(pgm_path);
    Ok(())
}

pub fn cmd_phantom(args: &PhantomArgs, command_line: Vec<String>) -> CliResult<()> {
    if args.size < 8 {
        return Err(usage(format!("--size must be at least 8, got {}", args.size)));
    }
    let spec = PhantomSpec {
        variant: args.variant.into(),
        size: args.size,
    };
    let config = json!({ "size": args.size, "variant": spec.variant });
    let mut manifest = RunManifest::new("phantom", command_line, config, None);
    let t = Instant::now();
    let img = make_phantom(spec)?;
    manifest.record_phase("rasterize", t.elapsed().as_secs_f64());
    write_image_outputs(&args.out, &img, &mut manifest)?;
    manifest.write(&manifest_path(&args.out))?;
    Ok(())
}

/// Everything `simulate` computes, without touching the file system.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub geometry: ProjectionGeometry,
    pub b_clean: Vec<f64>,
    pub b: Vec<f64>,
    pub epsilon: f64,
    /// `‖D_f⁻¹(b − b_clean)‖`, for forward-model data only.
    pub epsilon_phase_retrieval: Option<f64>,
}

/// The arithmetic behind `simulate`: project, mix models, add noise.
pub fn simulate(
    img: &Image,
    angles: usize,
    detectors: usize,
    scheme: DiffScheme,
    omega: f64,
    noise: NoiseSpec,
) -> crate::error::Result<Simulation> {
    let geometry = ProjectionGeometry::new(
        img.nx(),
        img.ny(),
        1.0,
        detectors,
        1.0,
        ProjectionGeometry::uniform_angles(angles),
    )?;
    let projector = build_projector(geometry.clone());
    let y = projector.project(img)?.into_values();
    let (b_f, b_c) = mix_models(&y, detectors, angles, ModelErrorSpec { omega })?;
    let b_clean = match scheme {
        DiffScheme::Forward => b_f,
        DiffScheme::Central => b_c,
    };
    let noisy = add_noise(&b_clean, noise)?;
    let epsilon_phase_retrieval = match scheme {
        DiffScheme::Forward => Some(norm(&phase_retrieval_rhs(
            &sub(&noisy.b, &b_clean),
            detectors,
            angles,
        )?)),
        DiffScheme::Central => None,
    };
    Ok(Simulation {
        geometry,
        b_clean,
        b: noisy.b,
        epsilon: noisy.noise_norm,
        epsilon_phase_retrieval,
    })
}

pub fn cmd_simulate(args: &SimulateArgs, command_line: Vec<String>) -> CliResult<()> {
    if !(0.0..0.5).contains(&args.omega) {
        return Err(usage(format!("--omega must lie in [0, 0.5), got {}", args.omega)));
    }
    if !(args.noise >= 0.0) || !args.noise.is_finite() {
        return Err(usage(format!("--noise must be ≥ 0, got {}", args.noise)));
    }
    if !args.offset.is_finite() {
        return Err(usage("--offset must be finite"));
    }
    if args.angles == 0 {
        return Err(usage("--angles must be at least 1"));
    }
    let t = Instant::now();
    let img = read_image(&args.phantom)?;
    let read_time = t.elapsed().as_secs_f64();
    let detectors = args.detectors.unwrap_or(img.nx());
    if detectors < 2 {
        return Err(usage("--detectors must be at least 2"));
    }
    let config = json!({
        "phantom_digest": crate::io::run_id("image", &json!(img.values())),
        "nx": img.nx(),
        "ny": img.ny(),
        "angles": args.angles,
        "detectors": detectors,
        "detector_spacing": 1.0,
        "pixel_size": 1.0,
        "model": DiffScheme::from(args.model).name(),
        "omega": args.omega,
        "noise": args.noise,
        "offset": args.offset,
        "seed": args.seed,
    });
    let mut manifest = RunManifest::new("simulate", command_line, config, Some(args.seed));
    manifest.record_phase("read", read_time);
    let t = Instant::now();
    let noise = NoiseSpec {
        level: args.noise,
        offset: args.offset,
        seed: args.seed,
    };
    let sim = simulate(&img, args.angles, detectors, args.model.into(), args.omega, noise)?;
    manifest.record_phase("simulate", t.elapsed().as_secs_f64());
    let sino = Sinogram::new(detectors, args.angles, sim.b)?;
    write_sinogram(&args.out, &sino, 1.0, Some(&manifest.run_id))?;
    manifest.outputs.push(args.out.clone());
    manifest.results.insert("epsilon".into(), json!(sim.epsilon));
    if let Some(e) = sim.epsilon_phase_retrieval {
        manifest.results.insert("epsilon_phase_retrieval".into(), json!(e));
    }
    manifest.write(&manifest_path(&args.out))?;
    Ok(())
}

/// Resolved solver settings of `reconstruct`.
#[derive(Debug, Clone)]
pub struct ReconstructPlan {
    pub solver: SolverArg,
    pub model: DataModel,
    pub config: GbitConfig,
    pub size: (usize, usize),
    pub spacing: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub image: Image,
    pub records: Vec<IterationRecord>,
    pub termination: Option<Termination>,
}

/// The arithmetic behind `reconstruct`, shared with library callers.
pub fn reconstruct(
    sino: &Sinogram,
    plan: &ReconstructPlan,
    truth: Option<&Image>,
) -> crate::error::Result<Reconstruction> {
    let (k, l) = (sino.detectors(), sino.num_angles());
    let (nx, ny) = plan.size;
    let geom = ProjectionGeometry::new(nx, ny, 1.0, k, plan.spacing, ProjectionGeometry::uniform_angles(l))?;
    if let Some(t) = truth {
        if (t.nx(), t.ny()) != (nx, ny) {
            return Err(Error::shape(format!(
                "truth image is {}×{}, reconstruction grid is {nx}×{ny}",
                t.nx(),
                t.ny()
            )));
        }
    }
    let b = sino.values();
    if plan.solver == SolverArg::Fbp {
        let image = match plan.model {
            DataModel::PhaseRetrieval => {
                let y = Sinogram::new(k, l, phase_retrieval_rhs(b, k, l)?)?;
                fbp_reconstruct(&y, &geom, FilterKind::Ramp)?
            }
            _ => fbp_reconstruct(sino, &geom, FilterKind::Dpc)?,
        };
        return Ok(Reconstruction {
            image,
            records: Vec::new(),
            termination: None,
        });
    }

    let projector = build_projector(geom);
    let diff = make_diff(plan.model.scheme(), k, l)?;
    let composed;
    let rhs_storage;
    let (op, rhs): (&dyn LinearOperator, &[f64]) = match plan.model {
        DataModel::PhaseRetrieval => {
            rhs_storage = phase_retrieval_rhs(b, k, l)?;
            (&projector, &rhs_storage)
        }
        _ => {
            composed = compose(&diff, &projector)?;
            (&composed, b)
        }
    };
    let mut config = plan.config.clone();
    if plan.solver == SolverArg::Lsqr {
        config = GbitConfig {
            scheme: UpdateScheme::Fixed,
            lambda0: 0.0,
            epsilon: None,
            ..config
        };
    }
    let mut gbit = Gbit::new(op, config);
    if let Some(t) = truth {
        gbit = gbit.with_ground_truth(t.values());
    }
    let out = gbit.solve(rhs)?;
    let mut records = out.report.records;
    let termination = match plan.solver {
        SolverArg::Lsqr => {
            records.iter_mut().for_each(|r| r.lambda = 0.0);
            None
        }
        _ => Some(out.report.termination),
    };
    if termination == Some(Termination::Breakdown) && records.is_empty() {
        return Err(Error::Numerical(
            "Krylov recursion broke down before producing an iterate (Aᵀb = 0)".into(),
        ));
    }
    Ok(Reconstruction {
        image: Image::new(nx, ny, out.solution)?,
        records,
        termination,
    })
}

fn resolve_epsilon(args: &ReconstructArgs, model: DataModel, sim_manifest: Option<&RunManifest>) -> CliResult<Option<f64>> {
    let Some(raw) = args.epsilon.as_deref() else {
        return Ok(None);
    };
    if raw == "manifest" {
        let m = sim_manifest.ok_or_else(|| {
            usage(format!(
                "--epsilon manifest needs {}",
                manifest_path(&args.sino).display()
            ))
        })?;
        let key = match model {
            DataModel::PhaseRetrieval => "epsilon_phase_retrieval",
            _ => "epsilon",
        };
        let eps = m
            .result_f64(key)
            .ok_or_else(|| usage(format!("the sinogram manifest records no '{key}'")))?;
        return Ok(Some(eps));
    }
    raw.parse::<f64>()
        .ok()
        .filter(|e| *e > 0.0 && e.is_finite())
        .map(Some)
        .ok_or_else(|| usage(format!("--epsilon must be a positive number or 'manifest', got '{raw}'")))
}

/// Resolves defaults, validates flag combinations and collects warnings.
pub fn plan_reconstruction(
    args: &ReconstructArgs,
    sim_manifest: Option<&RunManifest>,
    detectors: usize,
    spacing: f64,
) -> CliResult<ReconstructPlan> {
    let model: DataModel = args.model.into();
    let mut warnings = Vec::new();
    if args.solver == SolverArg::Fbp {
        let given: Vec<&str> = [
            ("--eta", args.eta.is_some()),
            ("--epsilon", args.epsilon.is_some()),
            ("--lambda0", args.lambda0.is_some()),
            ("--maxcounter", args.maxcounter.is_some()),
            ("--max-iter", args.max_iter.is_some()),
            ("--scheme", args.scheme.is_some()),
        ]
        .into_iter()
        .filter_map(|(f, set)| set.then_some(f))
        .collect();
        if !given.is_empty() {
            warnings.push(format!("fbp ignores solver-only flags: {}", given.join(", ")));
        }
    }
    if args.solver == SolverArg::Lsqr {
        let given: Vec<&str> = [
            ("--eta", args.eta.is_some()),
            ("--epsilon", args.epsilon.is_some()),
            ("--lambda0", args.lambda0.is_some()),
            ("--maxcounter", args.maxcounter.is_some()),
            ("--scheme", args.scheme.is_some()),
        ]
        .into_iter()
        .filter_map(|(f, set)| set.then_some(f))
        .collect();
        if !given.is_empty() {
            warnings.push(format!("lsqr ignores regularization flags: {}", given.join(", ")));
        }
    }

    let scheme = match args.scheme.unwrap_or(UpdateArg::Classic) {
        UpdateArg::Classic => UpdateScheme::Classic,
        UpdateArg::Alternative => UpdateScheme::Alternative,
    };
    let epsilon = if args.solver == SolverArg::Gbit {
        resolve_epsilon(args, model, sim_manifest)?
    } else {
        None
    };
    let config = GbitConfig {
        eta: args.eta.unwrap_or(1.01),
        epsilon,
        lambda0: args.lambda0.unwrap_or(1.0),
        max_iter: args.max_iter.unwrap_or(200),
        maxcounter: args.maxcounter.unwrap_or(3),
        scheme,
    };
    if args.solver == SolverArg::Gbit {
        if scheme == UpdateScheme::Classic && epsilon.is_none() {
            return Err(usage(
                "--solver gbit --scheme classic needs --epsilon: the discrepancy principle \
                 stops when ‖b − Ax‖ ≤ η·ε, so the noise norm ε must be known \
                 (pass a number, 'manifest', or use --scheme alternative)",
            ));
        }
        config.validate().map_err(|e| usage(e.to_string()))?;
    } else if config.max_iter == 0 {
        return Err(usage("--max-iter must be at least 1"));
    }

    let size = match (args.size, sim_manifest) {
        (Some(n), _) => (n, n),
        (None, Some(m)) => match (m.config.get("nx").and_then(|v| v.as_u64()), m.config.get("ny").and_then(|v| v.as_u64())) {
            (Some(nx), Some(ny)) => (nx as usize, ny as usize),
            _ => (detectors, detectors),
        },
        (None, None) => (detectors, detectors),
    };
    if size.0 == 0 || size.1 == 0 {
        return Err(usage("--size must be positive"));
    }
    Ok(ReconstructPlan {
        solver: args.solver,
        model,
        config,
        size,
        spacing,
        warnings,
    })
}

pub fn cmd_reconstruct(args: &ReconstructArgs, command_line: Vec<String>) -> CliResult<()> {
    let t = Instant::now();
    let file = read_sinogram(&args.sino)?;
    let sim_path = manifest_path(&args.sino);
    let sim_manifest = if sim_path.exists() {
        Some(RunManifest::read(&sim_path)?)
    } else {
        None
    };
    if args.model == ModelArg::Central && args.solver != SolverArg::Fbp && file.sinogram.detectors() % 2 == 1 {
        eprintln!(
            "warning: central differences with an odd detector count have a nontrivial nullspace"
        );
    }
    let plan = plan_reconstruction(args, sim_manifest.as_ref(), file.sinogram.detectors(), file.spacing)?;
    for w in &plan.warnings {
        eprintln!("warning: {w}");
    }
    let truth = args.truth.as_deref().map(read_image).transpose()?;
    let read_time = t.elapsed().as_secs_f64();

    let config = json!({
        "sino": args.sino,
        "sino_run_id": sim_manifest.as_ref().map(|m| m.run_id.clone()),
        "solver": format!("{:?}", plan.solver).to_lowercase(),
        "model": plan.model.name(),
        "gbit": plan.config,
        "nx": plan.size.0,
        "ny": plan.size.1,
        "truth": args.truth,
    });
    let mut manifest = RunManifest::new("reconstruct", command_line, config, None);
    manifest.record_phase("read", read_time);
    let t = Instant::now();
    let rec = reconstruct(&file.sinogram, &plan, truth.as_ref())?;
    manifest.record_phase("solve", t.elapsed().as_secs_f64());

    write_image_outputs(&args.out, &rec.image, &mut manifest)?;
    if plan.solver != SolverArg::Fbp {
        let csv = with_suffix(&args.out, ".report.csv");
        write_report_csv(&csv, &rec.records)?;
        manifest.outputs.push(csv);
        manifest.results.insert("iterations".into(), json!(rec.records.len()));
    }
    if let Some(term) = rec.termination {
        manifest.results.insert("termination".into(), json!(term.name()));
    }
    if let Some(last) = rec.records.last() {
        if plan.solver == SolverArg::Gbit {
            manifest.results.insert("final_lambda".into(), json!(last.lambda));
        }
        if let Some(e) = last.rel_error {
            manifest.results.insert("final_rel_error".into(), json!(e));
        }
    }
    manifest.write(&manifest_path(&args.out))?;
    Ok(())
}
