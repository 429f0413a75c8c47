use std::f64::consts::PI;

use dpct::linop::{adjoint_mismatch, densify, LinearOperator};
use dpct::projector::{build_projector, Image, ProjectionGeometry, Sinogram};
use dpct::simlab::{inscribed_circle_mask, make_phantom, PhantomSpec, PhantomVariant};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Length of the line `p + a·d` inside `[x0, x1] × [y0, y1]` by slab clipping.
fn clip_length(p: (f64, f64), d: (f64, f64), x: (f64, f64), y: (f64, f64)) -> f64 {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (pi, di, (a, b)) in [(p.0, d.0, x), (p.1, d.1, y)] {
        if di == 0.0 {
            if pi < a || pi > b {
                return 0.0;
            }
        } else {
            let (t0, t1) = ((a - pi) / di, (b - pi) / di);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    (hi - lo).max(0.0)
}

/// Dense `R` from clipping every ray against every pixel square.
fn oracle_matrix(g: &ProjectionGeometry) -> Vec<Vec<f64>> {
    let s = g.pixel_size();
    let (w, h) = (g.nx() as f64 * s / 2.0, g.ny() as f64 * s / 2.0);
    let mut rows = Vec::new();
    for &theta in g.angles() {
        let (sn, cs) = theta.sin_cos();
        for det in 0..g.detectors() {
            let t = g.detector_coordinate(det);
            let mut row = vec![0.0; g.num_pixels()];
            for col in 0..g.nx() {
                for r in 0..g.ny() {
                    let xs = (-w + col as f64 * s, -w + (col + 1) as f64 * s);
                    let ys = (h - (r + 1) as f64 * s, h - r as f64 * s);
                    row[col * g.ny() + r] = clip_length((t * cs, t * sn), (-sn, cs), xs, ys);
                }
            }
            rows.push(row);
        }
    }
    rows
}

#[test]
fn single_pixel_axis_aligned_ray() {
    let g = ProjectionGeometry::new(1, 1, 1.0, 1, 1.0, vec![0.0]).unwrap();
    let p = build_projector(g);
    let s = p.project(&Image::new(1, 1, vec![1.0]).unwrap()).unwrap();
    assert_eq!(s.values(), &[1.0]);
}

#[test]
fn two_by_two_matches_exhaustive_oracle() {
    let g = ProjectionGeometry::new(2, 2, 1.0, 2, 1.0, vec![0.0]).unwrap();
    let p = build_projector(g.clone());
    let s = p.project(&Image::new(2, 2, vec![1.0; 4]).unwrap()).unwrap();
    assert_eq!(s.values(), &[2.0, 2.0]);
    let oracle = oracle_matrix(&g);
    let dense = densify(&p);
    for (i, row) in oracle.iter().enumerate() {
        assert_eq!(dense.row(i), row.as_slice());
    }
}

#[test]
fn random_geometry_matches_clipping_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let angles: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..PI)).collect();
    let g = ProjectionGeometry::new(8, 8, 1.0, 12, 0.93, angles).unwrap();
    let p = build_projector(g.clone());
    let dense = densify(&p);
    for (i, row) in oracle_matrix(&g).iter().enumerate() {
        for (j, (a, b)) in dense.row(i).iter().zip(row).enumerate() {
            assert!((a - b).abs() <= 1e-12, "ray {i}, pixel {j}: {a} vs {b}");
        }
    }
    let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
    let direct = p.project(&Image::new(8, 8, x.clone()).unwrap()).unwrap();
    let via_dense = dense.apply(&x).unwrap();
    for (a, b) in direct.values().iter().zip(&via_dense) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn rectangular_grid_with_non_unit_pixels_matches_oracle() {
    let g = ProjectionGeometry::new(5, 3, 0.7, 7, 0.45, vec![0.0, 0.3, PI / 2.0, 2.0, 3.0]).unwrap();
    let dense = densify(&build_projector(g.clone()));
    for (i, row) in oracle_matrix(&g).iter().enumerate() {
        for (a, b) in dense.row(i).iter().zip(row) {
            assert!((a - b).abs() <= 1e-12, "ray {i}: {a} vs {b}");
        }
    }
}

#[test]
fn backprojection_is_the_adjoint() {
    let g = ProjectionGeometry::parallel_beam(16, 20, 13).unwrap();
    let p = build_projector(g);
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..p.cols()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..p.rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(adjoint_mismatch(&p, &x, &y).unwrap() <= 1e-12);
    }
}

#[test]
fn vertical_rays_see_row_sums() {
    // θ = π/2: rays run along −x, so each detector integrates one image row.
    let n = 6;
    let g = ProjectionGeometry::new(n, n, 1.0, n, 1.0, vec![PI / 2.0]).unwrap();
    let p = build_projector(g);
    let mut values = vec![0.0; n * n];
    for col in 0..n {
        for row in 0..n {
            values[col * n + row] = (row + 1) as f64;
        }
    }
    let s = p.project(&Image::new(n, n, values).unwrap()).unwrap();
    let mut sorted: Vec<f64> = s.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let expected: Vec<f64> = (1..=n).map(|r| (r * n) as f64).collect();
    assert_eq!(sorted, expected);
}

#[test]
fn axis_aligned_rays_through_full_grid() {
    let g = ProjectionGeometry::new(6, 4, 1.0, 6, 1.0, vec![0.0]).unwrap();
    let p = build_projector(g);
    for ray in 0..6 {
        let total: f64 = p.ray_weights(ray).iter().map(|(_, w)| w).sum();
        assert_eq!(total, 4.0);
    }
    let g = ProjectionGeometry::new(6, 4, 1.0, 4, 1.0, vec![PI / 2.0]).unwrap();
    let p = build_projector(g);
    for ray in 0..4 {
        let total: f64 = p.ray_weights(ray).iter().map(|(_, w)| w).sum();
        assert!((total - 6.0).abs() < 1e-12, "{total}");
    }
}

#[test]
fn mass_is_conserved_across_angles() {
    let n = 64;
    let img = make_phantom(PhantomSpec { variant: PhantomVariant::SheppLoganModified, size: n }).unwrap();
    let mask = inscribed_circle_mask(n, n);
    let masked: Vec<f64> = img.values().iter().zip(&mask).map(|(v, m)| if *m { *v } else { 0.0 }).collect();
    let g = ProjectionGeometry::parallel_beam(n, n, 45).unwrap();
    let s = build_projector(g).project(&Image::new(n, n, masked.clone()).unwrap()).unwrap();
    let mass: f64 = masked.iter().sum();
    for i in 0..s.num_angles() {
        let block: f64 = s.block(i).iter().sum();
        assert!((block - mass).abs() <= 0.01 * mass, "angle {i}: {block} vs {mass}");
    }
}

#[test]
fn zero_image_and_missing_rays() {
    let g = ProjectionGeometry::new(4, 4, 1.0, 12, 1.0, ProjectionGeometry::uniform_angles(7)).unwrap();
    let p = build_projector(g.clone());
    let s = p.project(&Image::zeros(4, 4)).unwrap();
    assert!(s.values().iter().all(|v| *v == 0.0));
    // Outermost detectors at |t| = 5.5 miss a 4×4 grid (half-diagonal ≈ 2.83).
    for angle in 0..7 {
        assert!(p.ray_weights(angle * 12).is_empty());
        assert!(p.ray_weights(angle * 12 + 11).is_empty());
    }
}

#[test]
fn shape_mismatch_is_reported() {
    let p = build_projector(ProjectionGeometry::parallel_beam(4, 4, 3).unwrap());
    assert!(p.project(&Image::zeros(4, 5)).is_err());
    assert!(p.backproject(&Sinogram::new(4, 2, vec![0.0; 8]).unwrap()).is_err());
}

#[test]
fn transpose_is_bit_reproducible() {
    let p = build_projector(ProjectionGeometry::parallel_beam(24, 24, 50).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let y: Vec<f64> = (0..p.rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let first = p.apply_transpose(&y).unwrap();
    for threads in [1, 3, 7] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let again = pool.install(|| p.apply_transpose(&y).unwrap());
        assert!(first.iter().zip(&again).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weights_are_nonnegative_and_bounded(
        nx in 1usize..9, ny in 1usize..9, k in 1usize..12,
        h in 0.3f64..1.7, s in 0.5f64..1.5, theta in 0.0f64..PI,
    ) {
        let g = ProjectionGeometry::new(nx, ny, s, k, h, vec![theta]).unwrap();
        let p = build_projector(g);
        let diag = s * ((nx * nx + ny * ny) as f64).sqrt();
        for ray in 0..k {
            let w = p.ray_weights(ray);
            prop_assert!(w.iter().all(|(_, v)| *v > 0.0 && *v <= s * 2f64.sqrt() + 1e-12));
            let total: f64 = w.iter().map(|(_, v)| v).sum();
            prop_assert!(total <= diag + 1e-9);
        }
    }

    #[test]
    fn projection_is_linear(seed in any::<u64>(), a in -2.0f64..2.0) {
        let p = build_projector(ProjectionGeometry::parallel_beam(6, 8, 5).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..36).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z: Vec<f64> = (0..36).map(|_| rng.random_range(-1.0..1.0)).collect();
        let combo: Vec<f64> = x.iter().zip(&z).map(|(u, v)| a * u + v).collect();
        let (px, pz, pc) = (p.apply(&x).unwrap(), p.apply(&z).unwrap(), p.apply(&combo).unwrap());
        for i in 0..pc.len() {
            prop_assert!((pc[i] - (a * px[i] + pz[i])).abs() <= 1e-12 * (1.0 + pc[i].abs()));
        }
    }
}
