//! Parallel-beam discrete Radon transform with exact line-length weights.
//!
//! Coordinates: the pixel grid and the detector array are both centered on
//! the origin. Pixel `(row, col)` covers
//! `x ∈ [−W/2 + col·s, −W/2 + (col+1)·s)` and, with row 0 at the top,
//! `y ∈ (H/2 − (row+1)·s, H/2 − row·s]`, where `s` is the pixel size and
//! `W = n_x·s`, `H = n_y·s`. Images are stored column by column, so pixel
//! `(row, col)` lives at index `col·n_y + row`.
//!
//! Detector `d` of `k` sits at `t = (d + ½ − k/2)·h`. The ray for angle θ and
//! detector coordinate `t` is the line `{p : p·(cos θ, sin θ) = t}`, traversed
//! in direction `(−sin θ, cos θ)`. Row `i·k + d` of the operator belongs to
//! angle `i`, detector `d`, so sinograms are angle-major.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linop::LinearOperator;

/// Angles per partial image in the transpose; fixed so the reduction order
/// does not depend on the thread count.
const ANGLES_PER_CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionGeometry {
    nx: usize,
    ny: usize,
    pixel_size: f64,
    detectors: usize,
    detector_spacing: f64,
    angles: Vec<f64>,
}

impl ProjectionGeometry {
    pub fn new(
        nx: usize,
        ny: usize,
        pixel_size: f64,
        detectors: usize,
        detector_spacing: f64,
        angles: Vec<f64>,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::arg(format!("empty pixel grid {nx}x{ny}")));
        }
        if !(pixel_size > 0.0 && pixel_size.is_finite()) {
            return Err(Error::arg(format!("pixel size must be positive, got {pixel_size}")));
        }
        if detectors == 0 {
            return Err(Error::arg("at least one detector is required"));
        }
        if !(detector_spacing > 0.0 && detector_spacing.is_finite()) {
            return Err(Error::arg(format!(
                "detector spacing must be positive, got {detector_spacing}"
            )));
        }
        if angles.is_empty() {
            return Err(Error::arg("at least one projection angle is required"));
        }
        if let Some(bad) = angles
            .iter()
            .find(|a| !(**a >= 0.0 && **a < std::f64::consts::PI))
        {
            return Err(Error::arg(format!("angle {bad} outside [0, π)")));
        }
        Ok(ProjectionGeometry {
            nx,
            ny,
            pixel_size,
            detectors,
            detector_spacing,
            angles,
        })
    }

    /// `l` uniformly spaced angles `θ_i = iπ/l`, `i = 0..l`.
    pub fn uniform_angles(l: usize) -> Vec<f64> {
        (0..l)
            .map(|i| i as f64 * std::f64::consts::PI / l as f64)
            .collect()
    }

    /// The default simulation setup: square `n×n` grid of unit pixels,
    /// `detectors` cells of unit spacing and `l` uniform angles.
    pub fn parallel_beam(n: usize, detectors: usize, l: usize) -> Result<Self> {
        Self::new(n, n, 1.0, detectors, 1.0, Self::uniform_angles(l))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    /// Detector count `k`.
    pub fn detectors(&self) -> usize {
        self.detectors
    }

    /// Detector spacing `h`.
    pub fn detector_spacing(&self) -> f64 {
        self.detector_spacing
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Angle count `l`.
    pub fn num_angles(&self) -> usize {
        self.angles.len()
    }

    /// Number of measurements `m = k·l`.
    pub fn num_rays(&self) -> usize {
        self.detectors * self.angles.len()
    }

    /// Number of pixels `n = n_x·n_y`.
    pub fn num_pixels(&self) -> usize {
        self.nx * self.ny
    }

    pub fn detector_coordinate(&self, det: usize) -> f64 {
        (det as f64 + 0.5 - self.detectors as f64 / 2.0) * self.detector_spacing
    }
}

/// A rasterized object, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl Image {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::shape(format!(
                "image of {nx}x{ny} pixels needs {} values, got {}",
                nx * ny,
                values.len()
            )));
        }
        Ok(Image { nx, ny, values })
    }

    pub fn zeros(nx: usize, ny: usize) -> Self {
        Image {
            nx,
            ny,
            values: vec![0.0; nx * ny],
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pixel at `row` (0 = top) and `col` (0 = left).
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.ny + row]
    }
}

/// Angle-major measurements: `l` blocks of `k` detector values.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    detectors: usize,
    angles: usize,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(detectors: usize, angles: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != detectors * angles {
            return Err(Error::shape(format!(
                "sinogram with {detectors} detectors and {angles} angles needs {} values, got {}",
                detectors * angles,
                values.len()
            )));
        }
        Ok(Sinogram {
            detectors,
            angles,
            values,
        })
    }

    pub fn detectors(&self) -> usize {
        self.detectors
    }

    pub fn num_angles(&self) -> usize {
        self.angles
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Detector readings for angle `i`.
    pub fn block(&self, i: usize) -> &[f64] {
        &self.values[i * self.detectors..(i + 1) * self.detectors]
    }
}

/// Matrix-free `R`; weights are recomputed by ray traversal on every apply.
#[derive(Debug, Clone)]
pub struct Projector {
    geom: ProjectionGeometry,
    trig: Vec<(f64, f64)>,
}

pub fn build_projector(geom: ProjectionGeometry) -> Projector {
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    let trig = geom
        .angles
        .iter()
        .map(|a| (snap(a.cos()), snap(a.sin())))
        .collect();
    Projector { geom, trig }
}

impl Projector {
    pub fn geometry(&self) -> &ProjectionGeometry {
        &self.geom
    }

    pub fn project(&self, img: &Image) -> Result<Sinogram> {
        if img.nx != self.geom.nx || img.ny != self.geom.ny {
            return Err(Error::shape(format!(
                "image is {}x{}, projector expects {}x{}",
                img.nx, img.ny, self.geom.nx, self.geom.ny
            )));
        }
        let values = self.apply(&img.values)?;
        Sinogram::new(self.geom.detectors, self.geom.num_angles(), values)
    }

    /// Unfiltered back projection `Rᵀb`.
    pub fn backproject(&self, sino: &Sinogram) -> Result<Image> {
        if sino.detectors != self.geom.detectors || sino.angles != self.geom.num_angles() {
            return Err(Error::shape(format!(
                "sinogram is {} detectors x {} angles, projector expects {} x {}",
                sino.detectors,
                sino.angles,
                self.geom.detectors,
                self.geom.num_angles()
            )));
        }
        let values = self.apply_transpose(&sino.values)?;
        Image::new(self.geom.nx, self.geom.ny, values)
    }

    /// Nonzero weights `(pixel index, intersection length)` of one row of `R`.
    pub fn ray_weights(&self, ray: usize) -> Vec<(usize, f64)> {
        let k = self.geom.detectors;
        let mut out = Vec::new();
        self.trace(ray / k, ray % k, |j, w| out.push((j, w)));
        out
    }

    /// Walks the ray through the grid, calling `visit(pixel, length)` for
    /// every pixel it crosses with positive length.
    fn trace(&self, angle: usize, det: usize, mut visit: impl FnMut(usize, f64)) {
        let g = &self.geom;
        let (c, s) = self.trig[angle];
        let t = g.detector_coordinate(det);
        let (px, py) = (t * c, t * s);
        let (dx, dy) = (-s, c);
        let ps = g.pixel_size;
        let half_w = g.nx as f64 * ps / 2.0;
        let half_h = g.ny as f64 * ps / 2.0;

        let mut a_in = f64::NEG_INFINITY;
        let mut a_out = f64::INFINITY;
        if dx != 0.0 {
            let (ta, tb) = ((-half_w - px) / dx, (half_w - px) / dx);
            a_in = a_in.max(ta.min(tb));
            a_out = a_out.min(ta.max(tb));
        } else if !(px >= -half_w && px < half_w) {
            return;
        }
        if dy != 0.0 {
            let (ta, tb) = ((-half_h - py) / dy, (half_h - py) / dy);
            a_in = a_in.max(ta.min(tb));
            a_out = a_out.min(ta.max(tb));
        } else if !(py > -half_h && py <= half_h) {
            return;
        }
        if !(a_out > a_in) {
            return;
        }

        // Grid lines are x_i = −W/2 + i·s (i = 0..=n_x), y_j = H/2 − j·s.
        let x_entry = px + a_in * dx;
        let y_entry = py + a_in * dy;
        let (mut ix, x_step): (i64, i64) = if dx > 0.0 {
            (((x_entry + half_w) / ps).floor() as i64 + 1, 1)
        } else {
            (((x_entry + half_w) / ps).ceil() as i64 - 1, -1)
        };
        let (mut iy, y_step): (i64, i64) = if dy < 0.0 {
            (((half_h - y_entry) / ps).floor() as i64 + 1, 1)
        } else {
            (((half_h - y_entry) / ps).ceil() as i64 - 1, -1)
        };
        let x_alpha = |i: i64| -> f64 {
            if dx == 0.0 || i < 0 || i > g.nx as i64 {
                f64::INFINITY
            } else {
                (-half_w + i as f64 * ps - px) / dx
            }
        };
        let y_alpha = |j: i64| -> f64 {
            if dy == 0.0 || j < 0 || j > g.ny as i64 {
                f64::INFINITY
            } else {
                (half_h - j as f64 * ps - py) / dy
            }
        };

        let mut ax = x_alpha(ix);
        let mut ay = y_alpha(iy);
        let mut a = a_in;
        loop {
            let a_next = ax.min(ay).min(a_out);
            let len = a_next - a;
            if len > 0.0 {
                let mid = 0.5 * (a + a_next);
                let col = ((px + mid * dx + half_w) / ps).floor();
                let row = ((half_h - (py + mid * dy)) / ps).floor();
                let col = (col.max(0.0) as usize).min(g.nx - 1);
                let row = (row.max(0.0) as usize).min(g.ny - 1);
                visit(col * g.ny + row, len);
            }
            if a_next >= a_out {
                break;
            }
            if ax <= a_next {
                ix += x_step;
                ax = x_alpha(ix);
            }
            if ay <= a_next {
                iy += y_step;
                ay = y_alpha(iy);
            }
            a = a.max(a_next);
        }
    }
}

impl LinearOperator for Projector {
    fn rows(&self) -> usize {
        self.geom.num_rays()
    }

    fn cols(&self) -> usize {
        self.geom.num_pixels()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let k = self.geom.detectors;
        y.par_iter_mut().enumerate().for_each(|(ray, out)| {
            let mut acc = 0.0;
            self.trace(ray / k, ray % k, |j, w| acc += w * x[j]);
            *out = acc;
        });
    }

    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        let k = self.geom.detectors;
        let l = self.geom.num_angles();
        let n = self.geom.num_pixels();
        let chunks = l.div_ceil(ANGLES_PER_CHUNK);
        let partials: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut part = vec![0.0; n];
                let end = ((c + 1) * ANGLES_PER_CHUNK).min(l);
                for angle in c * ANGLES_PER_CHUNK..end {
                    for det in 0..k {
                        let b = y[angle * k + det];
                        if b != 0.0 {
                            self.trace(angle, det, |j, w| part[j] += w * b);
                        }
                    }
                }
                part
            })
            .collect();
        x.fill(0.0);
        for part in &partials {
            for (xi, p) in x.iter_mut().zip(part) {
                *xi += p;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn single_pixel_axis_aligned() {
        let geom = ProjectionGeometry::new(1, 1, 1.0, 1, 1.0, vec![0.0]).unwrap();
        let r = build_projector(geom);
        assert_eq!(r.apply(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn two_by_two_vertical_rays() {
        let geom = ProjectionGeometry::new(2, 2, 1.0, 2, 1.0, vec![0.0]).unwrap();
        let r = build_projector(geom);
        assert_eq!(r.apply(&[1.0; 4]).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn axis_aligned_weight_sums() {
        let geom = ProjectionGeometry::new(6, 4, 0.5, 6, 0.5, vec![0.0, FRAC_PI_2]).unwrap();
        let r = build_projector(geom);
        for ray in 0..6 {
            let s: f64 = r.ray_weights(ray).iter().map(|w| w.1).sum();
            assert!((s - 4.0 * 0.5).abs() < 1e-12, "ray {ray}: {s}");
        }
        // θ = π/2 rays run along rows; only the 4 central detectors hit the grid.
        let hits: Vec<f64> = (6..12)
            .map(|ray| r.ray_weights(ray).iter().map(|w| w.1).sum())
            .collect();
        assert_eq!(hits[0], 0.0);
        assert_eq!(hits[5], 0.0);
        for h in &hits[1..5] {
            assert!((h - 6.0 * 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_image_projects_to_zero() {
        let geom = ProjectionGeometry::parallel_beam(8, 11, 7).unwrap();
        let r = build_projector(geom);
        assert!(r.apply(&vec![0.0; 64]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ray_missing_grid_has_no_weights() {
        let geom = ProjectionGeometry::new(4, 4, 1.0, 12, 1.0, vec![0.3]).unwrap();
        let r = build_projector(geom);
        assert!(r.ray_weights(0).is_empty());
        assert!(r.ray_weights(11).is_empty());
    }

    #[test]
    fn geometry_validation() {
        assert!(ProjectionGeometry::new(4, 4, 1.0, 4, 1.0, vec![std::f64::consts::PI]).is_err());
        assert!(ProjectionGeometry::new(4, 4, 1.0, 0, 1.0, vec![0.0]).is_err());
        assert!(ProjectionGeometry::new(4, 4, 1.0, 4, 0.0, vec![0.0]).is_err());
        assert!(ProjectionGeometry::new(4, 4, 1.0, 4, 1.0, vec![]).is_err());
    }

    #[test]
    fn project_shape_errors() {
        let r = build_projector(ProjectionGeometry::parallel_beam(4, 4, 3).unwrap());
        assert!(matches!(r.project(&Image::zeros(3, 4)), Err(Error::Shape(_))));
        let s = Sinogram::new(4, 2, vec![0.0; 8]).unwrap();
        assert!(matches!(r.backproject(&s), Err(Error::Shape(_))));
    }
}
