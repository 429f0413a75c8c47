//! Reconstruction after inverting the forward difference model first:
//! solve R x = D_f⁻¹ b instead of D_f R x = b, and compare the regularization
//! each path ends up with.
//!
//!     cargo run --release --example phase_retrieval -- [seed]

use dpct::simlab::{run_experiment, ExperimentName, ExperimentParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0);
    let mut params = ExperimentParams::desk(ExperimentName::FullCt);
    params.seed = seed;
    params.lsqr_iters = 60;
    let bundle = run_experiment(ExperimentName::FullCt, &params)?;
    for label in ["ct/forward/gbit", "ct/phase-retrieval/gbit"] {
        let arm = bundle.arm(label).expect("arm exists");
        println!(
            "{label:<24} ε = {:>9.3}  λ = {:>9.4}  iters = {:>3}  error = {:.4}",
            arm.epsilon,
            arm.final_lambda().unwrap_or(f64::NAN),
            arm.records.len(),
            arm.final_rel_error().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
