//! Parallel-beam projection of a phantom, the transpose, and the adjoint
//! identity ⟨Rx, y⟩ = ⟨x, Rᵀy⟩.
//!
//!     cargo run --release --example projector -- [size] [angles]

use dpct::linop::adjoint_mismatch;
use dpct::projector::{build_projector, ProjectionGeometry};
use dpct::simlab::{make_phantom, PhantomSpec, PhantomVariant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(64);
    let l = args.get(1).copied().unwrap_or(90);

    let img = make_phantom(PhantomSpec { variant: PhantomVariant::SheppLoganModified, size: n })?;
    let geom = ProjectionGeometry::parallel_beam(n, n, l)?;
    let projector = build_projector(geom);

    let t = std::time::Instant::now();
    let sino = projector.project(&img)?;
    println!("projected {n}×{n} onto {l} angles × {n} detectors in {:.1?}", t.elapsed());

    let mass: f64 = img.values().iter().sum();
    for i in [0, l / 4, l / 2] {
        let total: f64 = sino.block(i).iter().sum();
        println!("angle {i:>3}: Σ projection = {total:.3} (image mass {mass:.3})");
    }

    let t = std::time::Instant::now();
    let back = projector.backproject(&sino)?;
    println!("back-projected in {:.1?}; peak {:.2}", t.elapsed(), back.values().iter().cloned().fold(0.0, f64::max));
    println!(
        "adjoint mismatch: {:.2e}",
        adjoint_mismatch(&projector, img.values(), sino.values())?
    );

    let ray = n / 2;
    println!("ray {ray} crosses {} pixels", projector.ray_weights(ray).len());
    Ok(())
}
