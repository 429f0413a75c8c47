//! Forward and central difference models: determinants, the odd-size
//! nullspace of the central block, and direct inversion of the forward model.

use dpct::diffops::{invert_central, invert_forward, make_diff, block_structure, DiffScheme};
use dpct::linop::LinearOperator;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(" m   det D_f    det D_c   nullspace of D_c");
    for m in 2..=7 {
        let f = block_structure(DiffScheme::Forward, m)?;
        let c = block_structure(DiffScheme::Central, m)?;
        println!("{m:>2} {:>9} {:>10.5}   {:?}", f.determinant, c.determinant, c.nullspace_basis);
    }

    let y = [0.0, 1.0, 3.0, 2.0, 0.5, 0.0];
    let b = make_diff(DiffScheme::Forward, 6, 1)?.apply(&y)?;
    println!("y            = {y:?}");
    println!("D_f y        = {b:?}");
    println!("D_f⁻¹ D_f y  = {:?}", invert_forward(&b, 6, 1)?);

    let bc = make_diff(DiffScheme::Central, 6, 1)?.apply(&y)?;
    println!("D_c⁻¹ D_c y  = {:?}", invert_central(&bc, 6, 1)?);
    match invert_central(&[1.0; 5], 5, 1) {
        Ok(_) => println!("unexpected: odd central block inverted"),
        Err(e) => println!("odd k: {e}"),
    }
    Ok(())
}
