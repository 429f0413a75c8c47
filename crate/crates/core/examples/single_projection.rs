//! One projection at θ = π/2: recover the line integrals from differential
//! data under model error, white noise and offset noise.
//!
//!     cargo run --release --example single_projection -- [seed]

use dpct::simlab::{mean_abs, run_experiment, ExperimentName, ExperimentParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0);
    for name in [ExperimentName::SingleProjection, ExperimentName::SingleProjectionOffset] {
        let mut params = ExperimentParams::full_scale(name);
        params.seed = seed;
        let bundle = run_experiment(name, &params)?;
        println!("\n{} (k = {}, offset = {})", name.name(), params.detectors, params.offset);
        println!("{:<26} {:>6} {:>10} {:>10} {:>9}", "arm", "iters", "final err", "min err", "mean |y|");
        for arm in &bundle.arms {
            println!(
                "{:<26} {:>6} {:>10.4} {:>10.4} {:>9.3}",
                arm.label,
                arm.records.len(),
                arm.final_rel_error().unwrap_or(f64::NAN),
                arm.min_rel_error().unwrap_or(f64::NAN),
                mean_abs(&arm.solution)
            );
        }
        println!("truth mean |y| = {:.3}", mean_abs(&bundle.truth));
    }
    Ok(())
}
