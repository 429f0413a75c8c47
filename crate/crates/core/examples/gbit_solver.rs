//! GBiT on a small noisy tomography problem: per-iteration trace of φ_k(0),
//! φ_k(λ), λ and the relative error, for both λ update schemes.

use dpct::diffops::{make_diff, DiffScheme};
use dpct::krylov::{Gbit, GbitConfig, UpdateScheme};
use dpct::linop::{compose, LinearOperator};
use dpct::projector::{build_projector, ProjectionGeometry};
use dpct::simlab::{add_noise, make_phantom, NoiseSpec, PhantomSpec, PhantomVariant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, l) = (48, 60);
    let img = make_phantom(PhantomSpec { variant: PhantomVariant::SheppLoganModified, size: n })?;
    let projector = build_projector(ProjectionGeometry::parallel_beam(n, n, l)?);
    let op = compose(make_diff(DiffScheme::Forward, n, l)?, projector)?;
    let clean = op.apply(img.values())?;
    let noisy = add_noise(&clean, NoiseSpec::new(0.05, 1))?;
    println!("ε = {:.4}", noisy.noise_norm);

    for scheme in [UpdateScheme::Classic, UpdateScheme::Alternative] {
        let cfg = GbitConfig {
            scheme,
            epsilon: Some(noisy.noise_norm),
            ..GbitConfig::default()
        };
        println!("\n{scheme:?}");
        println!("{:>4} {:>12} {:>12} {:>12} {:>9}", "k", "phi0", "phi_lambda", "lambda", "rel err");
        let out = Gbit::new(&op, cfg)
            .with_ground_truth(img.values())
            .solve_observed(&noisy.b, |view| {
                let r = view.record;
                println!(
                    "{:>4} {:>12.5} {:>12.5} {:>12.4e} {:>9.4}",
                    r.iter,
                    r.phi0,
                    r.phi_lambda,
                    r.lambda,
                    r.rel_error.unwrap_or(f64::NAN)
                );
            })?;
        println!("stopped: {}", out.report.termination.name());
    }
    Ok(())
}
