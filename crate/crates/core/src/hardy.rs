//! Martingales at finite resolution, conditional expectations, the maximal
//! function, H_p norms, p-atoms, atomic assembly, and the sharpness
//! construction for restricted maximal operators.
//!
//! The filtration is generated by the cylinders: the level-n conditional
//! expectation is the I_n-coset average, which coincides with the partial
//! sum S_{M_n}.  The sharpness construction assembles scaled differences of
//! consecutive block kernels into a martingale whose spectrum is known in
//! closed form.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{expand, GroupPoint, Interval, Radix};
use crate::kernels::{dirichlet_block, lp_quasinorm};
use crate::maximal::SubsequenceFamily;
use crate::transform::{forward, CylinderFunction, Spectrum};

/// An adapted sequence of cylinder functions; `levels[n]` has resolution n.
#[derive(Debug, Clone)]
pub struct Martingale {
    radix: Radix,
    levels: Vec<CylinderFunction>,
}

/// A p-atom: supported on an interval, zero mean there, sup-norm at most
/// measure(support)^{-1/p}.
#[derive(Debug, Clone)]
pub struct Atom {
    pub support: Interval,
    pub values: CylinderFunction,
    pub p: f64,
}

/// Coefficient-atom pairs.
#[derive(Debug, Clone, Default)]
pub struct AtomicDecomposition {
    pub coefficients: Vec<f64>,
    pub atoms: Vec<Atom>,
}

/// Parameters of the sharpness construction: the exponent p in (0,1), the
/// selected increasing indices n_k, and the working resolution.
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleSpec {
    pub p: f64,
    pub indices: Vec<u64>,
    pub resolution: usize,
    pub radix: Vec<u32>,
}

/// Coset averages of `f` over I_n-cosets, kept at full resolution.
/// Equals the partial sum S_{M_n} f.
pub fn condexp(f: &CylinderFunction, n: usize) -> Result<CylinderFunction> {
    if n > f.resolution() {
        return Err(Error::Capacity(format!(
            "conditioning level {n} exceeds resolution {}",
            f.resolution()
        )));
    }
    let averages = coset_averages(f, n);
    let block = f.radix().order(n) as usize;
    let mut values = Vec::with_capacity(f.cells());
    for t in 0..f.cells() {
        values.push(averages[t % block]);
    }
    CylinderFunction::from_values(Arc::clone(f.radix()), f.resolution(), values)
}

/// Coset averages of `f` as a resolution-n function.
pub fn restrict(f: &CylinderFunction, n: usize) -> Result<CylinderFunction> {
    if n > f.resolution() {
        return Err(Error::Capacity(format!(
            "restriction level {n} exceeds resolution {}",
            f.resolution()
        )));
    }
    CylinderFunction::from_values(Arc::clone(f.radix()), n, coset_averages(f, n))
}

// Ranks sharing the residue mod M_n form one I_n-coset (low digits are the
// first n coordinates).
fn coset_averages(f: &CylinderFunction, n: usize) -> Vec<Complex64> {
    let block = f.radix().order(n) as usize;
    let reps = f.cells() / block;
    let mut averages = vec![Complex64::new(0.0, 0.0); block];
    for (t, &v) in f.values().iter().enumerate() {
        averages[t % block] += v;
    }
    for a in &mut averages {
        *a /= reps as f64;
    }
    averages
}

/// Pointwise max over 0 <= n <= N of |condexp(f, n)|, as a real-valued
/// cylinder function.
pub fn maximal_function(f: &CylinderFunction) -> CylinderFunction {
    let mut best = vec![0.0f64; f.cells()];
    for n in 0..=f.resolution() {
        let averages = coset_averages(f, n);
        let block = averages.len();
        for (t, b) in best.iter_mut().enumerate() {
            let v = averages[t % block].norm();
            if v > *b {
                *b = v;
            }
        }
    }
    CylinderFunction::from_values(
        Arc::clone(f.radix()),
        f.resolution(),
        best.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    )
    .unwrap()
}

/// ||f||_{H_p} = ||f*||_p.
pub fn hardy_norm(f: &CylinderFunction, p: f64) -> Result<f64> {
    lp_quasinorm(&maximal_function(f), p)
}

/// Diagnostics from atom validation.
#[derive(Debug, Clone, Serialize)]
pub struct AtomCheck {
    pub valid: bool,
    pub mean_abs: f64,
    /// how far the sup-norm exceeds measure(I)^{-1/p} (negative = slack)
    pub sup_excess: f64,
    /// largest |a(x)| outside the support
    pub leakage: f64,
}

/// Check zero mean on the support, the sup bound (with multiplicative
/// tolerance: the extremal atoms meet it with equality up to rounding), and
/// confinement to the support.
pub fn validate_atom(a: &Atom) -> Result<AtomCheck> {
    if a.p <= 0.0 || a.p > 1.0 {
        return Err(Error::Domain(format!("atom exponent must lie in (0, 1], got {}", a.p)));
    }
    let f = &a.values;
    let cells = f.cells() as u64;
    let mut mean = Complex64::new(0.0, 0.0);
    let mut sup = 0.0f64;
    let mut leakage = 0.0f64;
    for t in 0..cells {
        let x = GroupPoint::unrank(t, f.resolution(), f.radix())?;
        let v = f.value_at_rank(t);
        if a.support.contains(&x)? {
            mean += v;
            sup = sup.max(v.norm());
        } else {
            leakage = leakage.max(v.norm());
        }
    }
    let mean_abs = (mean / cells as f64).norm();
    let measure = *a.support.measure().numer() as f64 / *a.support.measure().denom() as f64;
    let bound = measure.powf(-1.0 / a.p);
    let sup_excess = sup - bound * (1.0 + 1e-10);
    Ok(AtomCheck {
        valid: mean_abs < 1e-10 && sup_excess <= 0.0 && leakage < 1e-12,
        mean_abs,
        sup_excess,
        leakage,
    })
}

/// sum_k lambda_k condexp(a_k, n), at full resolution.
pub fn assemble(decomp: &AtomicDecomposition, n: usize) -> Result<CylinderFunction> {
    let Some(first) = decomp.atoms.first() else {
        return Err(Error::Usage("cannot assemble an empty decomposition without a radix".into()));
    };
    if decomp.coefficients.len() != decomp.atoms.len() {
        return Err(Error::Usage("coefficient and atom counts differ".into()));
    }
    let mut acc = CylinderFunction::zero(
        Arc::clone(first.values.radix()),
        first.values.resolution(),
    )?;
    for (lambda, atom) in decomp.coefficients.iter().zip(&decomp.atoms) {
        let level = condexp(&atom.values, n)?;
        acc = acc.add(&level.scale(Complex64::new(*lambda, 0.0)))?;
    }
    Ok(acc)
}

impl Martingale {
    /// The martingale (S_{M_n} f : n <= N) generated by a function.
    pub fn from_function(f: &CylinderFunction) -> Result<Self> {
        let levels = (0..=f.resolution())
            .map(|n| restrict(f, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { radix: Arc::clone(f.radix()), levels })
    }

    pub fn radix(&self) -> &Radix {
        &self.radix
    }

    pub fn levels(&self) -> &[CylinderFunction] {
        &self.levels
    }

    /// The finest level.
    pub fn limit(&self) -> &CylinderFunction {
        self.levels.last().unwrap()
    }

    /// Max over levels of the averaging defect: averaging level n+1 over
    /// each I_n-coset must reproduce level n.
    pub fn adaptedness_defect(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for n in 0..self.levels.len() - 1 {
            let projected = restrict(&self.levels[n + 1], n)?;
            worst = worst.max(projected.max_abs_diff(&self.levels[n])?);
        }
        Ok(worst)
    }
}

impl CounterexampleSpec {
    pub fn new(p: f64, indices: Vec<u64>, resolution: usize, radix: &Radix) -> Result<Self> {
        let spec = Self { p, indices, resolution, radix: radix.radices().to_vec() };
        spec.validate(radix)?;
        Ok(spec)
    }

    pub fn validate(&self, radix: &Radix) -> Result<()> {
        if !(0.0 < self.p && self.p < 1.0) {
            return Err(Error::Domain(format!(
                "sharpness construction requires 0 < p < 1, got {}",
                self.p
            )));
        }
        if self.indices.is_empty() {
            return Err(Error::Domain("no indices selected".into()));
        }
        if self.indices[0] < 3 {
            return Err(Error::Domain(format!(
                "first index must be at least 3, got {}",
                self.indices[0]
            )));
        }
        if !self.indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Domain("indices must be strictly increasing".into()));
        }
        for &nk in &self.indices {
            let d = expand(nk, radix)?;
            if d.high + 1 > self.resolution {
                return Err(Error::Capacity(format!(
                    "index {nk} needs resolution {} but working resolution is {}",
                    d.high + 1,
                    self.resolution
                )));
            }
        }
        Ok(())
    }
}

/// The scaled block-kernel difference atom used by the construction:
/// (M_d^{1/p-1} / m_*) (D_{M_{d+1}} - D_{M_d}), supported on I_d.
pub fn counterexample_atom(d: usize, p: f64, resolution: usize, radix: &Radix) -> Result<Atom> {
    if d + 1 > resolution {
        return Err(Error::Capacity(format!(
            "atom level {d} needs resolution {} but got {resolution}",
            d + 1
        )));
    }
    let hi = dirichlet_block(d + 1, resolution, radix)?;
    let lo = dirichlet_block(d, resolution, radix)?;
    let scale = (radix.order(d) as f64).powf(1.0 / p - 1.0) / radix.m_star() as f64;
    let values = hi.sub(&lo)?.scale(Complex64::new(scale, 0.0));
    let support = Interval::new(GroupPoint::zero(Arc::clone(radix), resolution), d)?;
    Ok(Atom { support, values, p })
}

/// Build the sharpness martingale: levels f_n = sum over {k : |n_k| < n} of
/// lambda_k a_k with lambda_k = m_* (M_{<n_k>}/M_{|n_k|})^{(1/p-1)/2}.
/// Returns the martingale, the spectrum of its finest level, and the
/// coefficient-atom decomposition.
pub fn build_counterexample(
    spec: &CounterexampleSpec,
    radix: &Radix,
) -> Result<(Martingale, Spectrum, AtomicDecomposition)> {
    spec.validate(radix)?;
    let mut decomp = AtomicDecomposition::default();
    let exponent = (1.0 / spec.p - 1.0) / 2.0;
    for &nk in &spec.indices {
        let d = expand(nk, radix)?;
        let lambda = radix.m_star() as f64
            * (radix.order(d.low) as f64 / radix.order(d.high) as f64).powf(exponent);
        decomp.coefficients.push(lambda);
        decomp.atoms.push(counterexample_atom(d.high, spec.p, spec.resolution, radix)?);
    }
    let limit = assemble(&decomp, spec.resolution)?;
    let martingale = Martingale::from_function(&limit)?;
    let spectrum = forward(&limit);
    Ok((martingale, spectrum, decomp))
}

/// Pick K indices from a family, greedily enforcing that the squared growth
/// ratio M_{|n|}^{1-p}/M_{<n>}^{1-p} at least doubles at each step (finite
/// surrogate for the divergence condition; it forces the companion series
/// of inverse ratios to be dominated by a geometric series).
pub fn select_subsequence(
    family: &SubsequenceFamily,
    p: f64,
    count: usize,
    resolution: usize,
    radix: &Radix,
) -> Result<CounterexampleSpec> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Domain(format!(
            "sharpness construction requires 0 < p < 1, got {p}"
        )));
    }
    if count == 0 {
        return Err(Error::Domain("must select at least one index".into()));
    }
    if let Some(bound) = family.rho_bound() {
        return Err(Error::Domain(format!(
            "family has digit spread bounded by {bound}; it cannot drive the restricted \
             maximal operator unbounded"
        )));
    }
    radix.check_capacity(0, resolution)?;
    let cap = radix.order(resolution);
    let mut selected = Vec::with_capacity(count);
    let mut prev_sq = 1.0f64;
    for alpha in family.iter_members(radix) {
        if alpha >= cap {
            break;
        }
        if alpha < 3 {
            continue;
        }
        let d = expand(alpha, radix)?;
        if d.rho() == 0 {
            continue;
        }
        let ratio_sq =
            (radix.order(d.high) as f64 / radix.order(d.low) as f64).powf(1.0 - p);
        if ratio_sq >= 2.0 * prev_sq - 1e-12 {
            selected.push(alpha);
            prev_sq = ratio_sq;
            if selected.len() == count {
                break;
            }
        }
    }
    if selected.len() < count {
        return Err(Error::Domain(format!(
            "family yields only {} of {count} indices with doubling growth ratio below \
             capacity M_{resolution}",
            selected.len()
        )));
    }
    CounterexampleSpec::new(p, selected, resolution, radix)
}
