//! Filtered back-projection baselines for absorption (ramp filter) and
//! differential data (`sign(r)/(2πi)` filter).
//!
//! Back-projection goes through the algebraic projector's adjoint, so FBP and
//! the iterative solvers share one geometry.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projector::{build_projector, Image, ProjectionGeometry, Sinogram};

/// Imaginary residue, relative to the filtered signal's scale, above which
/// the output is rejected.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    /// `|r|`, for line-integral data.
    Ramp,
    /// `|r|/(2πri) = sign(r)/(2πi)`, for detector-direction derivative data.
    Dpc,
}

impl std::str::FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramp" => Ok(FilterKind::Ramp),
            "dpc" => Ok(FilterKind::Dpc),
            other => Err(Error::arg(format!("unknown filter '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub padded_length: usize,
    /// Detector spacing `h`, which fixes the physical frequency axis.
    pub spacing: f64,
}

impl FilterSpec {
    /// Smallest power of two ≥ 2k, unit spacing.
    pub fn new(kind: FilterKind, detectors: usize) -> Self {
        FilterSpec {
            kind,
            padded_length: (2 * detectors.max(1)).next_power_of_two(),
            spacing: 1.0,
        }
    }

    pub fn with_spacing(mut self, h: f64) -> Self {
        self.spacing = h;
        self
    }

    pub fn validate(&self, detectors: usize) -> Result<()> {
        if !self.padded_length.is_power_of_two() || self.padded_length < 2 * detectors {
            return Err(Error::arg(format!(
                "padded length {} must be a power of two ≥ 2k = {}",
                self.padded_length,
                2 * detectors
            )));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::arg(format!("detector spacing must be positive, got {}", self.spacing)));
        }
        Ok(())
    }
}

/// The sampled filter on the DFT grid of length `n`. Bin `j` sits at
/// frequency `j/(n h)` (negative for `j > n/2`).
pub fn filter_response(kind: FilterKind, n: usize, h: f64) -> Vec<Complex<f64>> {
    (0..n)
        .map(|j| {
            let signed = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            let r = signed / (n as f64 * h);
            match kind {
                FilterKind::Ramp => Complex::new(r.abs(), 0.0),
                // DC and Nyquist carry no sign; both are zeroed. Dividing by h
                // undoes the unscaled difference stencils.
                FilterKind::Dpc if j == 0 || 2 * j == n => Complex::new(0.0, 0.0),
                FilterKind::Dpc => Complex::new(0.0, -r.signum() / (2.0 * PI * h)),
            }
        })
        .collect()
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    response: Vec<Complex<f64>>,
}

impl Plans {
    fn new(kind: FilterKind, n: usize, h: f64) -> Self {
        let mut planner = FftPlanner::new();
        Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            response: filter_response(kind, n, h),
        }
    }

    /// Circular filtering of `buf` in place; returns the real part.
    fn run(&self, buf: &mut [Complex<f64>]) -> Result<Vec<f64>> {
        let n = buf.len();
        // ‖out‖₂ ≤ max|response|·‖in‖₂ bounds the scale the residue is judged against.
        let gain = self.response.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        let scale = gain * buf.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        self.forward.process(buf);
        for (c, f) in buf.iter_mut().zip(&self.response) {
            *c *= f;
        }
        self.inverse.process(buf);
        let inv_n = 1.0 / n as f64;
        let residue = buf.iter().fold(0.0_f64, |m, c| m.max(c.im.abs())) * inv_n;
        if residue > IMAG_RESIDUE_LIMIT * scale {
            return Err(Error::Numerical(format!(
                "filtered block has imaginary residue {residue:.3e} against signal scale {scale:.3e}"
            )));
        }
        Ok(buf.iter().map(|c| c.re * inv_n).collect())
    }
}

/// Filters one signal as a periodic sequence, without padding.
pub fn filter_periodic(signal: &[f64], kind: FilterKind, h: f64) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::arg("cannot filter an empty signal"));
    }
    let plans = Plans::new(kind, signal.len(), h);
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    plans.run(&mut buf)
}

/// Filters every angle block after zero padding; returns the untruncated
/// padded blocks, angle-major with `spec.padded_length` entries each.
pub fn filter_sinogram_padded(sino: &Sinogram, spec: &FilterSpec) -> Result<Vec<Vec<f64>>> {
    let k = sino.detectors();
    spec.validate(k)?;
    let n = spec.padded_length;
    let plans = Plans::new(spec.kind, n, spec.spacing);
    (0..sino.num_angles())
        .into_par_iter()
        .map(|i| {
            let mut buf = vec![Complex::new(0.0, 0.0); n];
            for (c, &v) in buf.iter_mut().zip(sino.block(i)) {
                c.re = v;
            }
            plans.run(&mut buf)
        })
        .collect()
}

/// Zero-pads, filters and truncates every angle block back to `k` entries.
pub fn filter_sinogram(sino: &Sinogram, spec: &FilterSpec) -> Result<Sinogram> {
    let k = sino.detectors();
    let blocks = filter_sinogram_padded(sino, spec)?;
    let mut values = Vec::with_capacity(k * sino.num_angles());
    for b in blocks {
        values.extend_from_slice(&b[..k]);
    }
    Sinogram::new(k, sino.num_angles(), values)
}

/// Filters and back-projects with the projector adjoint.
///
/// The adjoint sums intersection lengths, about `s²/h` per pixel and angle, so
/// the result is scaled by `π h / (l s²)`. DPC reconstructions lose the
/// constant of every projection and are only meaningful up to an offset.
pub fn fbp_reconstruct(sino: &Sinogram, geom: &ProjectionGeometry, kind: FilterKind) -> Result<Image> {
    if sino.detectors() != geom.detectors() || sino.num_angles() != geom.num_angles() {
        return Err(Error::shape(format!(
            "sinogram of {}×{} (detectors×angles) for a geometry of {}×{}",
            sino.detectors(),
            sino.num_angles(),
            geom.detectors(),
            geom.num_angles()
        )));
    }
    let spec = FilterSpec::new(kind, geom.detectors()).with_spacing(geom.detector_spacing());
    let filtered = filter_sinogram(sino, &spec)?;
    let projector = build_projector(geom.clone());
    let img = projector.backproject(&filtered)?;
    let s = geom.pixel_size();
    let factor = PI * geom.detector_spacing() / (geom.num_angles() as f64 * s * s);
    let values = img.into_values().into_iter().map(|v| v * factor).collect();
    Image::new(geom.nx(), geom.ny(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sinogram_filters_to_zero() {
        let sino = Sinogram::new(8, 3, vec![0.0; 24]).unwrap();
        for kind in [FilterKind::Ramp, FilterKind::Dpc] {
            let out = filter_sinogram(&sino, &FilterSpec::new(kind, 8)).unwrap();
            assert!(out.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn ramp_of_constant_signal_vanishes() {
        let out = filter_periodic(&[2.5; 32], FilterKind::Ramp, 1.0).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-14), "{out:?}");
    }

    #[test]
    fn padded_output_is_mean_free() {
        let vals: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64 - 3.0).collect();
        let sino = Sinogram::new(10, 4, vals).unwrap();
        for kind in [FilterKind::Ramp, FilterKind::Dpc] {
            for block in filter_sinogram_padded(&sino, &FilterSpec::new(kind, 10)).unwrap() {
                assert_eq!(block.len(), 32);
                let mean = block.iter().sum::<f64>() / block.len() as f64;
                assert!(mean.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn padding_must_cover_twice_the_detectors() {
        let sino = Sinogram::new(10, 1, vec![1.0; 10]).unwrap();
        let spec = FilterSpec {
            kind: FilterKind::Ramp,
            padded_length: 16,
            spacing: 1.0,
        };
        assert!(filter_sinogram(&sino, &spec).is_err());
    }

    #[test]
    fn dpc_response_is_odd_and_imaginary() {
        let r = filter_response(FilterKind::Dpc, 8, 1.0);
        assert_eq!(r[0], Complex::new(0.0, 0.0));
        assert_eq!(r[4], Complex::new(0.0, 0.0));
        for j in 1..4 {
            assert_eq!(r[j], -r[8 - j]);
            assert_eq!(r[j].re, 0.0);
        }
    }
}
