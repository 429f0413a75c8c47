//! Phantoms, data generation with operator mixing and scaled noise, error
//! metrics, and scripted experiments.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffops::{invert_forward, make_diff, DiffOperator, DiffScheme};
use crate::error::{Error, Result};
use crate::krylov::{Gbit, GbitConfig, IterationRecord, Termination, UpdateScheme};
use crate::linop::{compose, LinearOperator};
use crate::projector::{build_projector, Image, ProjectionGeometry, Projector};
use crate::vector::{distance, norm, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomVariant {
    /// High-contrast intensities (1, −0.8, −0.2, −0.2, 0.1, …).
    SheppLoganModified,
    /// The original intensities (2, −0.98, −0.02, −0.02, 0.01, …).
    SheppLoganClassic,
}

impl std::str::FromStr for PhantomVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modified" | "shepp_logan_modified" => Ok(PhantomVariant::SheppLoganModified),
            "classic" | "shepp_logan_classic" => Ok(PhantomVariant::SheppLoganClassic),
            other => Err(Error::arg(format!("unknown phantom variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub variant: PhantomVariant,
    pub size: usize,
}

// (a, b, x0, y0, phi in degrees)
const ELLIPSES: [(f64, f64, f64, f64, f64); 10] = [
    (0.69, 0.92, 0.0, 0.0, 0.0),
    (0.6624, 0.874, 0.0, -0.0184, 0.0),
    (0.11, 0.31, 0.22, 0.0, -18.0),
    (0.16, 0.41, -0.22, 0.0, 18.0),
    (0.21, 0.25, 0.0, 0.35, 0.0),
    (0.046, 0.046, 0.0, 0.1, 0.0),
    (0.046, 0.046, 0.0, -0.1, 0.0),
    (0.046, 0.023, -0.08, -0.605, 0.0),
    (0.023, 0.023, 0.0, -0.606, 0.0),
    (0.023, 0.046, 0.06, -0.605, 0.0),
];

const MODIFIED: [f64; 10] = [1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];
const CLASSIC: [f64; 10] = [2.0, -0.98, -0.02, -0.02, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01];

/// Rasterizes the ten Shepp-Logan ellipses by pixel-centre membership on
/// `[−1, 1]²`, with `y = 1` on the top row.
pub fn make_phantom(spec: PhantomSpec) -> Result<Image> {
    let n = spec.size;
    if n < 8 {
        return Err(Error::arg(format!("phantom size must be at least 8, got {n}")));
    }
    let intensities = match spec.variant {
        PhantomVariant::SheppLoganModified => &MODIFIED,
        PhantomVariant::SheppLoganClassic => &CLASSIC,
    };
    let half = (n as f64 - 1.0) / 2.0;
    let mut values = vec![0.0; n * n];
    for col in 0..n {
        let x = (col as f64 - half) / half;
        for row in 0..n {
            let y = (half - row as f64) / half;
            let v = &mut values[col * n + row];
            for (&(a, b, x0, y0, phi), &rho) in ELLIPSES.iter().zip(intensities) {
                let (s, c) = phi.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let u = dx * c + dy * s;
                let w = dy * c - dx * s;
                if (u * u) / (a * a) + (w * w) / (b * b) <= 1.0 {
                    *v += rho;
                }
            }
        }
    }
    Image::new(n, n, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelErrorSpec {
    pub omega: f64,
}

impl ModelErrorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.omega) {
            return Err(Error::arg(format!("omega must lie in [0, 0.5), got {}", self.omega)));
        }
        Ok(())
    }
}

/// Measurements for both difference models, generated from one projection.
#[derive(Debug, Clone, PartialEq)]
pub struct DpcData {
    /// `y = R x`.
    pub projection: Vec<f64>,
    /// `(1−ω) D_f y + ω D_c y`.
    pub b_f: Vec<f64>,
    /// `ω D_f y + (1−ω) D_c y`.
    pub b_c: Vec<f64>,
}

impl DpcData {
    pub fn for_scheme(&self, scheme: DiffScheme) -> &[f64] {
        match scheme {
            DiffScheme::Forward => &self.b_f,
            DiffScheme::Central => &self.b_c,
        }
    }
}

/// Mixes the two difference models to keep the data off the exact model
/// being inverted.
pub fn mix_models(projection: &[f64], k: usize, l: usize, spec: ModelErrorSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let df = make_diff(DiffScheme::Forward, k, l)?.apply(projection)?;
    let dc = make_diff(DiffScheme::Central, k, l)?.apply(projection)?;
    let w = spec.omega;
    let b_f = df.iter().zip(&dc).map(|(f, c)| (1.0 - w) * f + w * c).collect();
    let b_c = df.iter().zip(&dc).map(|(f, c)| w * f + (1.0 - w) * c).collect();
    Ok((b_f, b_c))
}

pub fn generate_dpc_data(img: &Image, projector: &Projector, spec: ModelErrorSpec) -> Result<DpcData> {
    let geom = projector.geometry();
    let projection = projector.project(img)?.into_values();
    let (b_f, b_c) = mix_models(&projection, geom.detectors(), geom.num_angles(), spec)?;
    Ok(DpcData { projection, b_f, b_c })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Relative noise level `‖b − b_clean‖/‖b_clean‖`.
    pub level: f64,
    /// Constant added to every standard-normal draw.
    pub offset: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(level: f64, seed: u64) -> Self {
        NoiseSpec { level, offset: 0.0, seed }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyData {
    pub b: Vec<f64>,
    /// Realized `‖b − b_clean‖`.
    pub noise_norm: f64,
}

/// `b = b_clean + level·(‖b_clean‖/‖e+offset‖)·(e+offset)` with `e ~ N(0, I)`
/// drawn from a ChaCha8 stream seeded by `spec.seed`.
pub fn add_noise(b_clean: &[f64], spec: NoiseSpec) -> Result<NoisyData> {
    if !(spec.level >= 0.0) || !spec.level.is_finite() || !spec.offset.is_finite() {
        return Err(Error::arg(format!(
            "noise level must be finite and ≥ 0 (got {}) with a finite offset (got {})",
            spec.level, spec.offset
        )));
    }
    if spec.level == 0.0 {
        return Ok(NoisyData {
            b: b_clean.to_vec(),
            noise_norm: 0.0,
        });
    }
    let clean_norm = norm(b_clean);
    if clean_norm == 0.0 {
        return Err(Error::arg("cannot scale relative noise against zero data"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let e: Vec<f64> = (0..b_clean.len())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z + spec.offset
        })
        .collect();
    let e_norm = norm(&e);
    if e_norm == 0.0 {
        return Err(Error::Numerical("noise draw has zero norm".into()));
    }
    let scale = spec.level * clean_norm / e_norm;
    let b: Vec<f64> = b_clean.iter().zip(&e).map(|(c, v)| c + scale * v).collect();
    let noise_norm = distance(&b, b_clean);
    Ok(NoisyData { b, noise_norm })
}

/// Per-stream seed from a master seed and a fixed label.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// `D_f⁻¹ b`: turns differential data back into line integrals.
pub fn phase_retrieval_rhs(b: &[f64], k: usize, l: usize) -> Result<Vec<f64>> {
    invert_forward(b, k, l)
}

/// `‖x − x_true‖/‖x_true‖`.
pub fn relative_error(x: &[f64], x_true: &[f64]) -> Result<f64> {
    if x.len() != x_true.len() {
        return Err(Error::shape(format!(
            "estimate of length {} against truth of length {}",
            x.len(),
            x_true.len()
        )));
    }
    let tn = norm(x_true);
    if tn == 0.0 {
        return Err(Error::arg("relative error against a zero ground truth"));
    }
    Ok(distance(x, x_true) / tn)
}

/// Pixels whose centre lies inside the circle inscribed in the grid.
pub fn inscribed_circle_mask(nx: usize, ny: usize) -> Vec<bool> {
    let radius = nx.min(ny) as f64 / 2.0;
    let (cx, cy) = (nx as f64 / 2.0, ny as f64 / 2.0);
    let mut mask = vec![false; nx * ny];
    for col in 0..nx {
        for row in 0..ny {
            let dx = col as f64 + 0.5 - cx;
            let dy = row as f64 + 0.5 - cy;
            mask[col * ny + row] = dx * dx + dy * dy <= radius * radius;
        }
    }
    mask
}

/// Relative error restricted to the pixels where `mask` is set.
pub fn masked_relative_error(x: &[f64], x_true: &[f64], mask: &[bool]) -> Result<f64> {
    if mask.len() != x.len() {
        return Err(Error::shape("mask length differs from the image"));
    }
    let pick = |v: &[f64]| -> Vec<f64> {
        v.iter().zip(mask).filter(|(_, m)| **m).map(|(a, _)| *a).collect()
    };
    relative_error(&pick(x), &pick(x_true))
}

pub fn mean_abs(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64
}

/// The linear model a reconstruction inverts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataModel {
    Forward,
    Central,
    /// Solve `R x = D_f⁻¹ b`.
    PhaseRetrieval,
}

impl DataModel {
    pub fn name(self) -> &'static str {
        match self {
            DataModel::Forward => "forward",
            DataModel::Central => "central",
            DataModel::PhaseRetrieval => "phase-retrieval",
        }
    }

    pub fn scheme(self) -> DiffScheme {
        match self {
            DataModel::Central => DiffScheme::Central,
            _ => DiffScheme::Forward,
        }
    }
}

impl std::str::FromStr for DataModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(DataModel::Forward),
            "central" => Ok(DataModel::Central),
            "phase-retrieval" => Ok(DataModel::PhaseRetrieval),
            other => Err(Error::arg(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    SingleProjection,
    SingleProjectionOffset,
    FullCt,
}

impl ExperimentName {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentName::SingleProjection => "single_projection",
            ExperimentName::SingleProjectionOffset => "single_projection_offset",
            ExperimentName::FullCt => "full_ct",
        }
    }
}

impl std::str::FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_projection" => Ok(ExperimentName::SingleProjection),
            "single_projection_offset" => Ok(ExperimentName::SingleProjectionOffset),
            "full_ct" => Ok(ExperimentName::FullCt),
            other => Err(Error::arg(format!("unknown experiment '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub size: usize,
    /// Ignored by the single-projection experiments, which use `θ = π/2`.
    pub angles: usize,
    pub detectors: usize,
    pub variant: PhantomVariant,
    pub omega: f64,
    pub noise_level: f64,
    pub offset: f64,
    pub seed: u64,
    pub lsqr_iters: usize,
    /// Solver settings; `epsilon` is replaced by each arm's realized noise norm.
    pub gbit: GbitConfig,
}

impl ExperimentParams {
    /// 64² phantom, 64 detectors, 90 angles.
    pub fn desk(name: ExperimentName) -> Self {
        Self::scaled(name, 64, 90)
    }

    /// 256² phantom, 256 detectors, 360 angles.
    pub fn full_scale(name: ExperimentName) -> Self {
        Self::scaled(name, 256, 360)
    }

    /// Single-projection runs iterate at least `k` times so LSQR reaches
    /// `D⁻¹b`, and GBiT keeps going after the discrepancy test first holds.
    fn scaled(name: ExperimentName, n: usize, angles: usize) -> Self {
        let single = name != ExperimentName::FullCt;
        let iters = if single { n.max(200) } else { 200 };
        ExperimentParams {
            size: n,
            angles,
            detectors: n,
            variant: PhantomVariant::SheppLoganModified,
            omega: 0.2,
            noise_level: 0.10,
            offset: if name == ExperimentName::SingleProjectionOffset { 5.0 } else { 0.0 },
            seed: 0,
            lsqr_iters: iters,
            gbit: GbitConfig {
                max_iter: iters,
                maxcounter: if single { iters } else { 3 },
                ..GbitConfig::classic(1.0)
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Lsqr,
    Gbit,
}

/// One reconstruction inside an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmResult {
    /// `<data>/<model>/<solver>`, e.g. `noise/forward/gbit`.
    pub label: String,
    pub model: DataModel,
    pub solver: SolverKind,
    /// Noise norm handed to the discrepancy principle.
    pub epsilon: f64,
    pub solution: Vec<f64>,
    /// LSQR rows carry `phi_lambda = phi0` and `lambda = 0`.
    pub records: Vec<IterationRecord>,
    pub termination: Option<Termination>,
}

impl ArmResult {
    pub fn final_rel_error(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.rel_error)
    }

    pub fn min_rel_error(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.rel_error)
            .min_by(f64::total_cmp)
    }

    pub fn final_lambda(&self) -> Option<f64> {
        match self.solver {
            SolverKind::Gbit => self.records.last().map(|r| r.lambda),
            SolverKind::Lsqr => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentBundle {
    pub name: ExperimentName,
    pub params: ExperimentParams,
    /// Ground truth: the projection `y` for single-projection runs, the
    /// phantom for full CT.
    pub truth: Vec<f64>,
    /// Shape of `truth` and of every solution, `(n_x, n_y)`.
    pub shape: (usize, usize),
    pub arms: Vec<ArmResult>,
}

impl ExperimentBundle {
    pub fn arm(&self, label: &str) -> Option<&ArmResult> {
        self.arms.iter().find(|a| a.label == label)
    }
}

/// Runs unregularized LSQR with a relative-error trace.
pub fn run_lsqr_arm(
    label: String,
    model: DataModel,
    op: &dyn LinearOperator,
    rhs: &[f64],
    truth: &[f64],
    iters: usize,
) -> Result<ArmResult> {
    let mut records = Vec::with_capacity(iters);
    let cfg = GbitConfig {
        scheme: UpdateScheme::Fixed,
        lambda0: 0.0,
        epsilon: None,
        max_iter: iters,
        ..Default::default()
    };
    let out = Gbit::new(op, cfg)
        .with_ground_truth(truth)
        .solve_observed(rhs, |view| {
            let r = view.record;
            records.push(IterationRecord {
                lambda: 0.0,
                ..r.clone()
            })
        })?;
    Ok(ArmResult {
        label,
        model,
        solver: SolverKind::Lsqr,
        epsilon: 0.0,
        solution: out.solution,
        records,
        termination: None,
    })
}

pub fn run_gbit_arm(
    label: String,
    model: DataModel,
    op: &dyn LinearOperator,
    rhs: &[f64],
    truth: &[f64],
    config: &GbitConfig,
    epsilon: f64,
) -> Result<ArmResult> {
    let cfg = GbitConfig {
        epsilon: Some(epsilon),
        ..config.clone()
    };
    let out = Gbit::new(op, cfg).with_ground_truth(truth).solve(rhs)?;
    Ok(ArmResult {
        label,
        model,
        solver: SolverKind::Gbit,
        epsilon,
        solution: out.solution,
        records: out.report.records,
        termination: Some(out.report.termination),
    })
}

fn single_projection(params: &ExperimentParams, offset_only: bool) -> Result<(Vec<f64>, Vec<ArmResult>)> {
    let img = make_phantom(PhantomSpec {
        variant: params.variant,
        size: params.size,
    })?;
    let geom = ProjectionGeometry::new(
        params.size,
        params.size,
        1.0,
        params.detectors,
        1.0,
        vec![PI / 2.0],
    )?;
    let projector = build_projector(geom);
    let k = params.detectors;
    let mut arms = Vec::new();

    let clean = generate_dpc_data(&img, &projector, ModelErrorSpec { omega: 0.0 })?;
    let y = clean.projection.clone();
    for model in [DataModel::Forward, DataModel::Central] {
        let d = make_diff(model.scheme(), k, 1)?;
        let exact = clean.for_scheme(model.scheme());
        let mut datasets: Vec<(&str, Vec<f64>, f64)> = Vec::new();
        if !offset_only {
            let mixed = generate_dpc_data(&img, &projector, ModelErrorSpec { omega: params.omega })?;
            let b = mixed.for_scheme(model.scheme()).to_vec();
            let eps = distance(&b, exact);
            datasets.push(("model_error", b, eps));
        }
        let label = if offset_only { "offset" } else { "noise" };
        let spec = NoiseSpec {
            level: params.noise_level,
            offset: params.offset,
            seed: derive_seed(params.seed, &format!("{label}/{}", model.name())),
        };
        let noisy = add_noise(exact, spec)?;
        datasets.push((label, noisy.b, noisy.noise_norm));

        for (data, b, eps) in datasets {
            let prefix = format!("{data}/{}", model.name());
            arms.push(run_lsqr_arm(format!("{prefix}/lsqr"), model, &d, &b, &y, params.lsqr_iters)?);
            if eps > 0.0 {
                arms.push(run_gbit_arm(format!("{prefix}/gbit"), model, &d, &b, &y, &params.gbit, eps)?);
            }
        }
    }
    Ok((y, arms))
}

fn full_ct(params: &ExperimentParams) -> Result<(Vec<f64>, Vec<ArmResult>)> {
    let img = make_phantom(PhantomSpec {
        variant: params.variant,
        size: params.size,
    })?;
    let geom = ProjectionGeometry::parallel_beam(params.size, params.detectors, params.angles)?;
    let (k, l) = (geom.detectors(), geom.num_angles());
    let projector = build_projector(geom);
    let data = generate_dpc_data(&img, &projector, ModelErrorSpec { omega: params.omega })?;
    let truth = img.values().to_vec();
    let mut arms = Vec::new();

    for model in [DataModel::Forward, DataModel::Central] {
        let mixed = data.for_scheme(model.scheme());
        let noise = NoiseSpec {
            level: params.noise_level,
            offset: params.offset,
            seed: derive_seed(params.seed, &format!("noise/{}", model.name())),
        };
        let noisy = add_noise(mixed, noise)?;
        let d: DiffOperator = make_diff(model.scheme(), k, l)?;
        let op = compose(&d, &projector)?;
        let name = model.name();
        arms.push(run_lsqr_arm(format!("ct/{name}/lsqr"), model, &op, &noisy.b, &truth, params.lsqr_iters)?);
        arms.push(run_gbit_arm(
            format!("ct/{name}/gbit"),
            model,
            &op,
            &noisy.b,
            &truth,
            &params.gbit,
            noisy.noise_norm,
        )?);

        if model == DataModel::Forward {
            let rhs = phase_retrieval_rhs(&noisy.b, k, l)?;
            let eps = norm(&phase_retrieval_rhs(&sub(&noisy.b, mixed), k, l)?);
            let pr = DataModel::PhaseRetrieval;
            arms.push(run_lsqr_arm(
                "ct/phase-retrieval/lsqr".into(),
                pr,
                &projector,
                &rhs,
                &truth,
                params.lsqr_iters,
            )?);
            arms.push(run_gbit_arm(
                "ct/phase-retrieval/gbit".into(),
                pr,
                &projector,
                &rhs,
                &truth,
                &params.gbit,
                eps,
            )?);
        }
    }
    Ok((truth, arms))
}

/// Runs a named experiment. Arms are evaluated in a fixed order, and every
/// random stream is derived from `params.seed` by a fixed label.
pub fn run_experiment(name: ExperimentName, params: &ExperimentParams) -> Result<ExperimentBundle> {
    let (truth, shape, arms) = match name {
        ExperimentName::SingleProjection | ExperimentName::SingleProjectionOffset => {
            let (t, arms) = single_projection(params, name == ExperimentName::SingleProjectionOffset)?;
            (t, (params.detectors, 1), arms)
        }
        ExperimentName::FullCt => {
            let (t, arms) = full_ct(params)?;
            (t, (params.size, params.size), arms)
        }
    };
    Ok(ExperimentBundle {
        name,
        params: params.clone(),
        truth,
        shape,
        arms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modified(size: usize) -> Image {
        make_phantom(PhantomSpec {
            variant: PhantomVariant::SheppLoganModified,
            size,
        })
        .unwrap()
    }

    #[test]
    fn phantom_range_and_corners() {
        let img = modified(64);
        assert!(img.values().iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        for (r, c) in [(0, 0), (0, 63), (63, 0), (63, 63)] {
            assert_eq!(img.get(r, c), 0.0);
        }
        assert!(make_phantom(PhantomSpec { variant: PhantomVariant::SheppLoganClassic, size: 7 }).is_err());
    }

    #[test]
    fn phantom_is_upright() {
        // The ellipse centred at y = 0.35 brightens the upper half only.
        let img = modified(128);
        assert!((img.get(41, 64) - 0.3).abs() < 1e-12);
        assert!((img.get(86, 64) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mixing_limits() {
        let y: Vec<f64> = (0..8).map(|i| (i * i) as f64).collect();
        let (bf, _) = mix_models(&y, 4, 2, ModelErrorSpec { omega: 0.0 }).unwrap();
        assert_eq!(bf, make_diff(DiffScheme::Forward, 4, 2).unwrap().apply(&y).unwrap());
        assert!(mix_models(&y, 4, 2, ModelErrorSpec { omega: 0.5 }).is_err());
        let (bf, bc) = mix_models(&y, 4, 2, ModelErrorSpec { omega: 0.4999999999 }).unwrap();
        for (f, c) in bf.iter().zip(&bc) {
            assert!((f - c).abs() < 1e-8);
        }
    }

    #[test]
    fn noise_is_calibrated_and_seeded() {
        let clean: Vec<f64> = (0..50).map(|i| (i as f64).sin() + 2.0).collect();
        let a = add_noise(&clean, NoiseSpec::new(0.1, 7)).unwrap();
        let b = add_noise(&clean, NoiseSpec::new(0.1, 7)).unwrap();
        assert_eq!(a, b);
        assert!((a.noise_norm / norm(&clean) - 0.1).abs() < 1e-12);
        assert_eq!(add_noise(&clean, NoiseSpec::new(0.0, 1)).unwrap().b, clean);
        assert!(add_noise(&[0.0; 4], NoiseSpec::new(0.1, 1)).is_err());
    }

    #[test]
    fn relative_error_identities() {
        let t = [1.0, -2.0, 3.0];
        assert_eq!(relative_error(&t, &t).unwrap(), 0.0);
        assert_eq!(relative_error(&[0.0; 3], &t).unwrap(), 1.0);
        let scaled: Vec<f64> = t.iter().map(|v| 1.1 * v).collect();
        assert!((relative_error(&scaled, &t).unwrap() - 0.1).abs() < 1e-12);
        assert!(relative_error(&t, &[0.0; 3]).is_err());
    }

    #[test]
    fn seeds_differ_by_label() {
        assert_ne!(derive_seed(1, "noise/forward"), derive_seed(1, "noise/central"));
        assert_eq!(derive_seed(1, "a"), derive_seed(1, "a"));
    }

    #[test]
    fn mask_covers_inscribed_disc() {
        let m = inscribed_circle_mask(8, 8);
        assert!(!m[0]);
        assert!(m[3 * 8 + 4]);
        assert_eq!(m.iter().filter(|v| **v).count(), 52);
    }
}
