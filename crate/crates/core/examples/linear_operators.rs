//! Matrix-free operators: composition, Kronecker blocks, adjoint checks and
//! densification.

use dpct::dense::DenseMatrix;
use dpct::diffops::{make_diff, DiffScheme};
use dpct::linop::{adjoint_mismatch, compose, densify, kron_identity_blocks, Identity, LinearOperator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let block = DenseMatrix::from_rows(&[vec![2.0, -1.0], vec![0.5, 3.0]])?;
    let kron = kron_identity_blocks(block, 3)?;
    println!("I₃ ⊗ B has shape {:?}", kron.shape());

    let d = make_diff(DiffScheme::Forward, 6, 1)?;
    let chain = compose(&d, Identity::new(6))?;
    let x = [1.0, 4.0, 9.0, 16.0, 25.0, 36.0];
    println!("D_f x = {:?}", chain.apply(&x)?);

    let y = [1.0, -1.0, 0.5, 0.0, 2.0, -3.0];
    println!("adjoint mismatch of D_f: {:.2e}", adjoint_mismatch(&d, &x, &y)?);

    let dense = densify(&make_diff(DiffScheme::Central, 4, 1)?);
    println!("central block:");
    for i in 0..dense.nrows() {
        println!("  {:?}", dense.row(i));
    }

    if let Err(e) = compose(Identity::new(3), Identity::new(4)) {
        println!("mismatched composition: {e}");
    }
    Ok(())
}
