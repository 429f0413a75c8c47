//! Desk-scale full tomography: phantom, mixed-model data with 10% noise,
//! LSQR and GBiT under the forward, central and phase-retrieval models.
//!
//!     cargo run --release --example full_ct -- [seed] [--full]

use dpct::simlab::{run_experiment, ExperimentName, ExperimentParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.iter().find_map(|a| a.parse().ok()).unwrap_or(0);
    let name = ExperimentName::FullCt;
    let mut params = if args.iter().any(|a| a == "--full") {
        ExperimentParams::full_scale(name)
    } else {
        ExperimentParams::desk(name)
    };
    params.seed = seed;

    let start = std::time::Instant::now();
    let bundle = run_experiment(name, &params)?;
    println!(
        "{}×{} phantom, {} angles, {} detectors, seed {seed} ({:.1?})",
        params.size,
        params.size,
        params.angles,
        params.detectors,
        start.elapsed()
    );
    println!("{:<28} {:>6} {:>10} {:>10} {:>11}  termination", "arm", "iters", "final err", "min err", "lambda");
    for arm in &bundle.arms {
        println!(
            "{:<28} {:>6} {:>10.4} {:>10.4} {:>11}  {}",
            arm.label,
            arm.records.len(),
            arm.final_rel_error().unwrap_or(f64::NAN),
            arm.min_rel_error().unwrap_or(f64::NAN),
            arm.final_lambda().map_or("-".to_string(), |l| format!("{l:.4e}")),
            arm.termination.map_or("-", |t| t.name()),
        );
    }
    Ok(())
}
