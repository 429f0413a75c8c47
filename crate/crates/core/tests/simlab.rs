use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use dpct::diffops::{make_diff, DiffScheme};
use dpct::krylov::lsqr_solve;
use dpct::linop::LinearOperator;
use dpct::projector::{build_projector, ProjectionGeometry};
use dpct::simlab::{
    add_noise, derive_seed, generate_dpc_data, make_phantom, mean_abs, mix_models, phase_retrieval_rhs,
    relative_error, run_experiment, DataModel, ExperimentName, ExperimentParams, ModelErrorSpec, NoiseSpec,
    PhantomSpec, PhantomVariant,
};
use dpct::vector::{distance, norm};
use proptest::prelude::*;

fn phantom(size: usize, variant: PhantomVariant) -> dpct::projector::Image {
    make_phantom(PhantomSpec { variant, size }).unwrap()
}

fn single_projection(n: usize) -> dpct::projector::Projector {
    build_projector(ProjectionGeometry::new(n, n, 2.0 / n as f64, n, 2.0 / n as f64, vec![FRAC_PI_2]).unwrap())
}

#[test]
fn phantom_mass_is_stable_under_refinement() {
    let mass = |n: usize| {
        let img = phantom(n, PhantomVariant::SheppLoganModified);
        img.values().iter().sum::<f64>() * (2.0 / n as f64).powi(2)
    };
    let (coarse, fine) = (mass(128), mass(256));
    assert!((coarse - fine).abs() / fine < 0.01, "{coarse} vs {fine}");
}

#[test]
fn modified_phantom_has_the_expected_gray_levels() {
    let img = phantom(256, PhantomVariant::SheppLoganModified);
    let levels: BTreeSet<i64> = img.values().iter().map(|v| (v * 1000.0).round() as i64).collect();
    for v in img.values() {
        assert!(((v * 1000.0).round() - v * 1000.0).abs() < 1e-9);
    }
    let expected: BTreeSet<i64> = [0, 100, 200, 300, 400, 1000].into_iter().collect();
    assert!(levels.is_subset(&expected), "{levels:?}");
    for l in [0, 200, 300, 1000] {
        assert!(levels.contains(&l), "{levels:?}");
    }
}

#[test]
fn classic_and_modified_differ_only_in_contrast() {
    let m = phantom(128, PhantomVariant::SheppLoganModified);
    let c = phantom(128, PhantomVariant::SheppLoganClassic);
    let support = |img: &dpct::projector::Image| -> Vec<bool> { img.values().iter().map(|v| *v != 0.0).collect() };
    assert_ne!(m.values(), c.values());
    for v in c.values() {
        assert!(*v == 0.0 || (0.99..=1.05).contains(v) || (*v - 2.0).abs() < 1e-12, "{v}");
    }
    let (sm, sc) = (support(&m), support(&c));
    let agree = sm.iter().zip(&sc).filter(|(a, b)| a == b).count();
    assert!(agree as f64 / sm.len() as f64 > 0.95);
}

#[test]
fn omega_controls_the_model_error() {
    let n = 256;
    let img = phantom(n, PhantomVariant::SheppLoganModified);
    let p = single_projection(n);
    let data = generate_dpc_data(&img, &p, ModelErrorSpec { omega: 0.2 }).unwrap();
    let exact = make_diff(DiffScheme::Forward, n, 1).unwrap().apply(&data.projection).unwrap();
    let err = distance(&data.b_f, &exact) / norm(&exact);
    assert!((0.05..=0.2).contains(&err), "{err}");
    let zero = generate_dpc_data(&img, &p, ModelErrorSpec { omega: 0.0 }).unwrap();
    assert_eq!(zero.b_f, exact);
    assert!(mix_models(&data.projection, n, 1, ModelErrorSpec { omega: 0.5 }).is_err());
}

#[test]
fn phase_retrieval_inverts_exact_forward_data() {
    let n = 64;
    let img = phantom(n, PhantomVariant::SheppLoganModified);
    let projector = build_projector(ProjectionGeometry::parallel_beam(n, n, 30).unwrap());
    let data = generate_dpc_data(&img, &projector, ModelErrorSpec { omega: 0.0 }).unwrap();
    let back = phase_retrieval_rhs(&data.b_f, n, 30).unwrap();
    let scale = norm(&data.projection);
    assert!(distance(&back, &data.projection) <= 1e-12 * scale);
}

#[test]
fn offset_noise_drifts_after_phase_retrieval() {
    let k = 128;
    let clean = vec![0.0; k];
    let mut b = clean.clone();
    b[k / 2] = 1.0;
    let with = add_noise(&b, NoiseSpec::new(0.5, 3).with_offset(5.0)).unwrap();
    let without = add_noise(&b, NoiseSpec::new(0.5, 3)).unwrap();
    let drift = |v: &[f64]| {
        let r = phase_retrieval_rhs(&dpct::vector::sub(v, &b), k, 1).unwrap();
        (r[0] - r[k - 1]).abs()
    };
    assert!(drift(&with.b) > 10.0 * drift(&without.b));
}

#[test]
fn noiseless_single_projection_lsqr_recovers_the_projection() {
    let n = 256;
    let img = phantom(n, PhantomVariant::SheppLoganModified);
    let data = generate_dpc_data(&img, &single_projection(n), ModelErrorSpec { omega: 0.0 }).unwrap();
    let d = make_diff(DiffScheme::Forward, n, 1).unwrap();
    let out = lsqr_solve(&d, &data.b_f, n, Some(&data.projection)).unwrap();
    assert!(relative_error(&out.solution, &data.projection).unwrap() < 1e-8);
}

#[test]
fn offset_experiment_favours_regularization() {
    let params = ExperimentParams::desk(ExperimentName::SingleProjectionOffset);
    let bundle = run_experiment(ExperimentName::SingleProjectionOffset, &params).unwrap();
    let g = bundle.arm("offset/forward/gbit").unwrap();
    let l = bundle.arm("offset/forward/lsqr").unwrap();
    assert_eq!(g.model, DataModel::Forward);
    assert!(mean_abs(&g.solution) < mean_abs(&l.solution));
    assert_eq!(bundle.truth.len(), g.solution.len());
}

#[test]
fn experiments_are_reproducible_per_seed() {
    let mut params = ExperimentParams::desk(ExperimentName::SingleProjection);
    params.lsqr_iters = 20;
    let a = run_experiment(ExperimentName::SingleProjection, &params).unwrap();
    let b = run_experiment(ExperimentName::SingleProjection, &params).unwrap();
    params.seed = 1;
    let c = run_experiment(ExperimentName::SingleProjection, &params).unwrap();
    for arm in &a.arms {
        assert_eq!(arm.solution, b.arm(&arm.label).unwrap().solution, "{}", arm.label);
    }
    assert_ne!(a.arm("noise/forward/lsqr").unwrap().solution, c.arm("noise/forward/lsqr").unwrap().solution);
    assert_ne!(derive_seed(0, "noise/forward"), derive_seed(0, "noise/central"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noise_hits_the_requested_level(level in 0.001f64..1.0, offset in -5.0f64..5.0, seed in any::<u64>(), n in 8usize..200) {
        let clean: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 4.5).collect();
        let noisy = add_noise(&clean, NoiseSpec::new(level, seed).with_offset(offset)).unwrap();
        let measured = noisy.noise_norm / norm(&clean);
        prop_assert!((measured - level).abs() <= 1e-12);
    }

    #[test]
    fn mixing_is_affine_in_omega(omega in 0.0f64..0.49, seed in any::<u64>()) {
        let y: Vec<f64> = (0..24).map(|i| ((seed.wrapping_mul(i + 1) >> 40) % 97) as f64).collect();
        let (bf, bc) = mix_models(&y, 8, 3, ModelErrorSpec { omega }).unwrap();
        let df = make_diff(DiffScheme::Forward, 8, 3).unwrap().apply(&y).unwrap();
        let dc = make_diff(DiffScheme::Central, 8, 3).unwrap().apply(&y).unwrap();
        for i in 0..24 {
            prop_assert!((bf[i] + bc[i] - df[i] - dc[i]).abs() < 1e-9 * (1.0 + df[i].abs() + dc[i].abs()));
        }
    }
}
