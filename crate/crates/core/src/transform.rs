//! Fourier coefficients, the fast forward/inverse transform, and partial sums.
//!
//! The dual group of a finite product of cyclic groups is the product of the
//! duals, so the transform factors into a sequence of length-m_j DFTs along
//! each coordinate axis: cost O(M_N * sum_j m_j) instead of O(M_N^2).  The
//! forward pass carries the 1/M_N normalization so coefficients equal the
//! Haar integral of f against the conjugate character; the inverse carries
//! none.  Axis order is fixed (j = 0..N-1) so runs are bit-reproducible.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{GroupPoint, Interval, Radix, RadixSequence};
use crate::system::vilenkin;

/// A complex function constant on I_N-cosets, stored as M_N values indexed
/// by point rank.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFunction {
    radix: Radix,
    resolution: usize,
    values: Vec<Complex64>,
}

/// Fourier coefficients of a cylinder function, indexed by n < M_N.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    radix: Radix,
    resolution: usize,
    coefficients: Vec<Complex64>,
}

impl CylinderFunction {
    pub fn from_values(radix: Radix, resolution: usize, values: Vec<Complex64>) -> Result<Self> {
        radix.check_capacity(0, resolution)?;
        let cells = radix.order(resolution) as usize;
        if values.len() != cells {
            return Err(Error::Usage(format!(
                "expected {cells} values at resolution {resolution}, got {}",
                values.len()
            )));
        }
        Ok(Self { radix, resolution, values })
    }

    pub fn constant(radix: Radix, resolution: usize, value: Complex64) -> Result<Self> {
        let cells = radix.order(resolution) as usize;
        Self::from_values(radix, resolution, vec![value; cells])
    }

    pub fn zero(radix: Radix, resolution: usize) -> Result<Self> {
        Self::constant(radix, resolution, Complex64::new(0.0, 0.0))
    }

    /// Evaluate `f` at every point of the truncated group.
    pub fn from_fn(
        radix: Radix,
        resolution: usize,
        mut f: impl FnMut(&GroupPoint) -> Complex64,
    ) -> Result<Self> {
        radix.check_capacity(0, resolution)?;
        let cells = radix.order(resolution);
        let values = (0..cells)
            .map(|t| f(&GroupPoint::unrank(t, resolution, &radix).unwrap()))
            .collect();
        Self::from_values(radix, resolution, values)
    }

    /// Indicator function of a cylinder.
    pub fn indicator(interval: &Interval) -> Result<Self> {
        let radix = Arc::clone(interval.base().radix());
        let resolution = interval.base().resolution();
        Self::from_fn(radix, resolution, |x| {
            if interval.contains(x).unwrap() {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn radix(&self) -> &Radix {
        &self.radix
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn value_at_rank(&self, t: u64) -> Complex64 {
        self.values[t as usize]
    }

    /// Value at a point (uses the first `resolution` coordinates).
    pub fn value_at(&self, x: &GroupPoint) -> Result<Complex64> {
        if x.radix().as_ref() != self.radix.as_ref() {
            return Err(Error::Usage("point radix differs from function radix".into()));
        }
        let t = x.at_resolution(self.resolution)?.rank();
        Ok(self.values[t as usize])
    }

    /// Exact Haar integral at this resolution: (1/M_N) sum of values.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.cells() as f64
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            radix: Arc::clone(&self.radix),
            resolution: self.resolution,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.radix.as_ref() != other.radix.as_ref() || self.resolution != other.resolution {
            return Err(Error::Usage("cylinder functions are not compatible".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            radix: Arc::clone(&self.radix),
            resolution: self.resolution,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            radix: Arc::clone(&self.radix),
            resolution: self.resolution,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| c * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

impl Spectrum {
    pub fn from_coefficients(
        radix: Radix,
        resolution: usize,
        coefficients: Vec<Complex64>,
    ) -> Result<Self> {
        radix.check_capacity(0, resolution)?;
        let cells = radix.order(resolution) as usize;
        if coefficients.len() != cells {
            return Err(Error::Usage(format!(
                "expected {cells} coefficients at resolution {resolution}, got {}",
                coefficients.len()
            )));
        }
        Ok(Self { radix, resolution, coefficients })
    }

    pub fn radix(&self) -> &Radix {
        &self.radix
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficient(&self, k: u64) -> Complex64 {
        self.coefficients[k as usize]
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.radix.as_ref() != other.radix.as_ref() || self.resolution != other.resolution {
            return Err(Error::Usage("spectra are not compatible".into()));
        }
        Ok(self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// f_hat(k) = (1/M_N) sum_x f(x) conj(psi_k(x)), by direct summation.
/// This is the definitional route; `forward` must agree with it.
pub fn fourier_coefficient(f: &CylinderFunction, k: u64) -> Result<Complex64> {
    f.radix().check_capacity(k, f.resolution())?;
    let mut acc = Complex64::new(0.0, 0.0);
    for t in 0..f.cells() as u64 {
        let x = GroupPoint::unrank(t, f.resolution(), f.radix())?;
        acc += f.value_at_rank(t) * vilenkin(k, &x)?.conj();
    }
    Ok(acc / f.cells() as f64)
}

// One DFT pass along `axis`.  Each block of length M_{axis+1} holds M_axis
// independent lines with stride M_axis; lines are transformed with the
// direct O(m_j^2) kernel from the exact root table (m is small and bounded).
fn axis_pass(
    values: &mut [Complex64],
    radix: &RadixSequence,
    axis: usize,
    conjugate: bool,
    parallel: bool,
) {
    let mj = radix.radix(axis) as usize;
    let stride = radix.order(axis) as usize;
    let block = stride * mj;

    let line = |chunk: &mut [Complex64]| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); mj];
        for r in 0..stride {
            for (a, slot) in scratch.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..mj {
                    let w = radix.root(axis, (a * b) as u64);
                    let w = if conjugate { w.conj() } else { w };
                    acc += chunk[r + b * stride] * w;
                }
                *slot = acc;
            }
            for (a, &v) in scratch.iter().enumerate() {
                chunk[r + a * stride] = v;
            }
        }
    };

    #[cfg(feature = "parallel")]
    if parallel {
        values.par_chunks_mut(block).for_each(line);
        return;
    }
    let _ = parallel;
    values.chunks_mut(block).for_each(line);
}

fn transform_impl(f: &CylinderFunction, conjugate: bool, parallel: bool) -> Vec<Complex64> {
    let mut values = f.values().to_vec();
    for axis in 0..f.resolution() {
        axis_pass(&mut values, f.radix(), axis, conjugate, parallel);
    }
    values
}

/// Fast forward transform: forward(f)[k] = fourier_coefficient(f, k).
pub fn forward(f: &CylinderFunction) -> Spectrum {
    forward_with(f, cfg!(feature = "parallel"))
}

/// Sequential forward transform (bench/reference path).
pub fn forward_seq(f: &CylinderFunction) -> Spectrum {
    forward_with(f, false)
}

fn forward_with(f: &CylinderFunction, parallel: bool) -> Spectrum {
    let mut values = transform_impl(f, true, parallel);
    let scale = 1.0 / f.cells() as f64;
    for v in &mut values {
        *v *= scale;
    }
    Spectrum {
        radix: Arc::clone(f.radix()),
        resolution: f.resolution(),
        coefficients: values,
    }
}

/// Inverse transform: inverse(forward(f)) = f.
pub fn inverse(spectrum: &Spectrum) -> CylinderFunction {
    inverse_with(spectrum, cfg!(feature = "parallel"))
}

/// Sequential inverse transform (bench/reference path).
pub fn inverse_seq(spectrum: &Spectrum) -> CylinderFunction {
    inverse_with(spectrum, false)
}

fn inverse_with(spectrum: &Spectrum, parallel: bool) -> CylinderFunction {
    let carrier = CylinderFunction {
        radix: Arc::clone(&spectrum.radix),
        resolution: spectrum.resolution,
        values: spectrum.coefficients.clone(),
    };
    let values = transform_impl(&carrier, false, parallel);
    CylinderFunction {
        radix: Arc::clone(&spectrum.radix),
        resolution: spectrum.resolution,
        values,
    }
}

/// S_n f = sum_{k<n} f_hat(k) psi_k, via spectrum truncation; S_0 f = 0.
pub fn partial_sum(f: &CylinderFunction, n: u64) -> Result<CylinderFunction> {
    partial_sum_of_spectrum(&forward(f), n)
}

/// Partial sum from an already-computed spectrum.
pub fn partial_sum_of_spectrum(spectrum: &Spectrum, n: u64) -> Result<CylinderFunction> {
    let cells = spectrum.coefficients.len() as u64;
    if n > cells {
        return Err(Error::Capacity(format!(
            "partial sum order {n} exceeds M_N = {cells}"
        )));
    }
    let mut truncated = spectrum.coefficients.clone();
    for c in truncated.iter_mut().skip(n as usize) {
        *c = Complex64::new(0.0, 0.0);
    }
    Ok(inverse(&Spectrum {
        radix: Arc::clone(&spectrum.radix),
        resolution: spectrum.resolution,
        coefficients: truncated,
    }))
}

/// Convolution cross-check: S_n f(x) = integral of f(t) D_n(x - t) d mu(t),
/// with the kernel from the direct character sum.  O(M_N^2); used as an
/// independent route against `partial_sum`.
pub fn partial_sum_via_kernel(f: &CylinderFunction, n: u64) -> Result<CylinderFunction> {
    let cells = f.cells() as u64;
    if n > cells {
        return Err(Error::Capacity(format!(
            "partial sum order {n} exceeds M_N = {cells}"
        )));
    }
    if n == 0 {
        return CylinderFunction::zero(Arc::clone(f.radix()), f.resolution());
    }
    let kernel = crate::kernels::dirichlet_direct(n, f.resolution(), f.radix())?;
    let resolution = f.resolution();
    let radix = f.radix();
    let values: Vec<Complex64> = (0..cells)
        .map(|tx| {
            let x = GroupPoint::unrank(tx, resolution, radix).unwrap();
            let mut acc = Complex64::new(0.0, 0.0);
            for tt in 0..cells {
                let t = GroupPoint::unrank(tt, resolution, radix).unwrap();
                let diff = x.sub(&t).unwrap();
                acc += f.value_at_rank(tt) * kernel.value_at_rank(diff.rank());
            }
            acc / cells as f64
        })
        .collect();
    CylinderFunction::from_values(Arc::clone(radix), resolution, values)
}

// JSON wire format: { "radix": [..], "resolution": N, "values": [[re,im],..] }

#[derive(Serialize, Deserialize)]
struct CylinderWire {
    radix: Vec<u32>,
    resolution: usize,
    values: Vec<[f64; 2]>,
}

fn to_wire(radix: &Radix, resolution: usize, values: &[Complex64]) -> CylinderWire {
    CylinderWire {
        radix: radix.radices().to_vec(),
        resolution,
        values: values.iter().map(|c| [c.re, c.im]).collect(),
    }
}

impl CylinderFunction {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&to_wire(&self.radix, self.resolution, &self.values)).unwrap()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: CylinderWire =
            serde_json::from_str(text).map_err(|e| Error::Usage(format!("bad JSON: {e}")))?;
        let radix = RadixSequence::shared(wire.radix)?;
        Self::from_values(
            radix,
            wire.resolution,
            wire.values.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        )
    }

    /// CSV with columns rank,re,im.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,re,im\n");
        for (t, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{t},{},{}\n", v.re, v.im));
        }
        out
    }
}

impl Spectrum {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&to_wire(&self.radix, self.resolution, &self.coefficients)).unwrap()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: CylinderWire =
            serde_json::from_str(text).map_err(|e| Error::Usage(format!("bad JSON: {e}")))?;
        let radix = RadixSequence::shared(wire.radix)?;
        Self::from_coefficients(
            radix,
            wire.resolution,
            wire.values.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        )
    }

    /// CSV with columns rank,re,im (rank doubles as the frequency index).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,re,im\n");
        for (t, v) in self.coefficients.iter().enumerate() {
            out.push_str(&format!("{t},{},{}\n", v.re, v.im));
        }
        out
    }
}
