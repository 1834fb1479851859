//! Dirichlet kernels by three routes, L_p and weak-L_p norms, and the two
//! kernel estimates used by the maximal-operator analysis.
//!
//! Route one sums the first n characters directly.  Route two is the block
//! identity: D_{M_k} equals M_k on I_k and vanishes elsewhere.  Route three
//! is the closed form that writes D_n as psi_n times a sum of block kernels
//! weighted by truncated geometric sums of Rademacher powers.  The three
//! routes are cross-checked exhaustively by the verification suites.

use num_complex::Complex64;
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{expand, GroupPoint, Radix};
use crate::system::vilenkin_expanded;
use crate::transform::CylinderFunction;

/// One row of the kernel-norm table.
#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub n: u64,
    pub low: usize,
    pub high: usize,
    pub rho: usize,
    pub l1_norm: f64,
    pub max_abs: f64,
}

/// D_n = sum_{k<n} psi_k, by direct summation of characters.
pub fn dirichlet_direct(n: u64, resolution: usize, radix: &Radix) -> Result<CylinderFunction> {
    radix.check_capacity(0, resolution)?;
    let cells = radix.order(resolution);
    if n > cells {
        return Err(Error::Capacity(format!(
            "kernel order {n} exceeds M_N = {cells}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("Dirichlet kernel requires n >= 1".into()));
    }
    let expansions: Vec<_> = (1..n).map(|k| expand(k, radix).unwrap()).collect();
    let eval = |t: u64| {
        let x = GroupPoint::unrank(t, resolution, radix).unwrap();
        let mut acc = Complex64::new(1.0, 0.0); // psi_0
        for d in &expansions {
            acc += vilenkin_expanded(d, &x);
        }
        acc
    };
    let values = map_ranks(cells, eval);
    CylinderFunction::from_values(radix.clone(), resolution, values)
}

/// D_{M_k}: value M_k on I_k, zero elsewhere.
pub fn dirichlet_block(k: usize, resolution: usize, radix: &Radix) -> Result<CylinderFunction> {
    if k > resolution {
        return Err(Error::Capacity(format!(
            "block kernel level {k} exceeds resolution {resolution}"
        )));
    }
    let mk = radix.order(k) as f64;
    CylinderFunction::from_fn(radix.clone(), resolution, |x| {
        if x.first_nonzero() >= k {
            Complex64::new(mk, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Pointwise closed-form evaluation of D_n(x) for 1 <= n < M_N:
/// psi_n(x) * sum_j D_{M_j}(x) * sum_{u=m_j-n_j}^{m_j-1} r_j^u(x).
/// Only the terms with j up to the first nonzero coordinate of x survive.
pub fn dirichlet_value(n: u64, x: &GroupPoint) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::Domain("Dirichlet kernel requires n >= 1".into()));
    }
    let radix = x.radix();
    radix.check_capacity(n, x.resolution())?;
    let digits = expand(n, radix)?;
    let fnz = x.first_nonzero();
    let mut inner = Complex64::new(0.0, 0.0);
    for j in 0..=digits.high.min(fnz) {
        let nj = digits.digit(j);
        if nj == 0 {
            continue;
        }
        let mj = radix.order(j) as f64;
        if j < fnz {
            // x_j = 0: the geometric sum collapses to n_j
            inner += Complex64::new(mj * nj as f64, 0.0);
        } else {
            let m = radix.radix(j);
            let run: Complex64 = (m - nj..m)
                .map(|u| radix.root(j, u as u64 * x.coord(j) as u64))
                .sum();
            inner += mj * run;
        }
    }
    Ok(vilenkin_expanded(&digits, x) * inner)
}

/// D_n via the closed form, for 1 <= n <= M_N.
pub fn dirichlet_closed(n: u64, resolution: usize, radix: &Radix) -> Result<CylinderFunction> {
    radix.check_capacity(0, resolution)?;
    let cells = radix.order(resolution);
    if n > cells {
        return Err(Error::Capacity(format!(
            "kernel order {n} exceeds M_N = {cells}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("Dirichlet kernel requires n >= 1".into()));
    }
    if n == cells {
        // D_{M_N} at resolution N is the top block kernel
        return dirichlet_block(resolution, resolution, radix);
    }
    let values = map_ranks(cells, |t| {
        let x = GroupPoint::unrank(t, resolution, radix).unwrap();
        dirichlet_value(n, &x).unwrap()
    });
    CylinderFunction::from_values(radix.clone(), resolution, values)
}

fn map_ranks(cells: u64, eval: impl Fn(u64) -> Complex64 + Sync + Send) -> Vec<Complex64> {
    #[cfg(feature = "parallel")]
    {
        (0..cells).into_par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..cells).map(eval).collect()
    }
}

/// ((1/M_N) sum |f|^p)^{1/p} for p > 0.
pub fn lp_quasinorm(f: &CylinderFunction, p: f64) -> Result<f64> {
    if p <= 0.0 {
        return Err(Error::Domain(format!("L_p quasi-norm requires p > 0, got {p}")));
    }
    let mean: f64 =
        f.values().iter().map(|v| v.norm().powf(p)).sum::<f64>() / f.cells() as f64;
    Ok(mean.powf(1.0 / p))
}

/// sup_{lambda > 0} lambda * mu(|f| > lambda)^{1/p}, evaluated exactly.
///
/// On each interval between consecutive distinct values of |f| the map
/// lambda -> lambda * mu(|f| > lambda)^{1/p} is increasing, so the sup is
/// attained at a value point with the >= tail; scanning the sorted values
/// suffices.
pub fn weak_lp_norm(f: &CylinderFunction, p: f64) -> Result<f64> {
    if p <= 0.0 {
        return Err(Error::Domain(format!("weak L_p norm requires p > 0, got {p}")));
    }
    let mut mags: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let cells = f.cells() as f64;
    let mut best = 0.0f64;
    for (i, &v) in mags.iter().enumerate() {
        if v == 0.0 {
            break;
        }
        best = best.max(v * ((i + 1) as f64 / cells).powf(1.0 / p));
    }
    Ok(best)
}

/// Local kernel mass: integral over I_N of |D_n(x - t)| d mu(t), computed at
/// working resolution N' = max(N, |n| + 1).  `x` is zero-extended to N' if
/// it is shorter.
pub fn local_kernel_integral(n: u64, x: &GroupPoint, big_n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("local kernel integral requires n >= 1".into()));
    }
    let radix = x.radix().clone();
    let digits = expand(n, &radix)?;
    let work = big_n.max(digits.high + 1);
    radix.check_capacity(0, work)?;
    let x = x.at_resolution(work)?;
    let base = radix.order(big_n);
    let count = radix.order(work) / base;
    let total: f64 = (0..count)
        .map(|q| {
            let t = GroupPoint::unrank(q * base, work, &radix).unwrap();
            let diff = x.sub(&t).unwrap();
            dirichlet_value(n, &diff).unwrap().norm()
        })
        .sum();
    Ok(total / radix.order(work) as f64)
}

/// Witness table for the kernel minorant check.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma3Report {
    pub n: u64,
    pub low: usize,
    pub high: usize,
    pub ok: bool,
    /// min over the coset of |D_n(x)|
    pub min_abs: f64,
    /// max over the coset of ||D_n(x)| - |D_{n - M_{|n|}}(x)||
    pub max_identity_dev: f64,
    pub points_checked: u64,
}

/// For n with digit spread >= 1, check on every x in I_{<n>+1}(e_{<n>}) that
/// |D_n(x)| = |D_{n - M_{|n|}}(x)| and that both are at least M_{<n>}.
pub fn lemma3_minorant_check(n: u64, resolution: usize, radix: &Radix) -> Result<Lemma3Report> {
    let digits = expand(n, radix)?;
    if digits.rho() == 0 {
        return Err(Error::Domain(format!(
            "minorant check requires distinct lowest and highest digits, n = {n} has spread 0"
        )));
    }
    if digits.high + 1 > resolution {
        return Err(Error::Domain(format!(
            "minorant check requires |n| + 1 <= resolution, got |n| = {} at resolution {resolution}",
            digits.high
        )));
    }
    radix.check_capacity(0, resolution)?;
    let low = digits.low;
    let reduced = n - radix.order(digits.high);
    let base_rank = radix.order(low); // rank of e_low
    let step = radix.order(low + 1);
    let count = radix.order(resolution) / step;
    let floor = radix.order(low) as f64;

    let mut min_abs = f64::INFINITY;
    let mut max_dev = 0.0f64;
    for q in 0..count {
        let x = GroupPoint::unrank(base_rank + q * step, resolution, radix)?;
        let dn = dirichlet_value(n, &x)?.norm();
        let dm = dirichlet_value(reduced, &x)?.norm();
        min_abs = min_abs.min(dn);
        max_dev = max_dev.max((dn - dm).abs());
    }
    let ok = max_dev < 1e-9 && min_abs >= floor - 1e-9;
    Ok(Lemma3Report {
        n,
        low,
        high: digits.high,
        ok,
        min_abs,
        max_identity_dev: max_dev,
        points_checked: count,
    })
}

/// Norm summary of one kernel, via the closed-form route.
pub fn kernel_report(n: u64, resolution: usize, radix: &Radix) -> Result<KernelReport> {
    let digits = expand(n, radix)?;
    let kernel = dirichlet_closed(n, resolution, radix)?;
    Ok(KernelReport {
        n,
        low: digits.low,
        high: digits.high,
        rho: digits.rho(),
        l1_norm: lp_quasinorm(&kernel, 1.0)?,
        max_abs: kernel.max_abs(),
    })
}

/// Kernel-norm table for all 1 <= n < M_N, built incrementally: the running
/// character sum IS the direct-summation route, one character added per row.
pub fn kernel_table(resolution: usize, radix: &Radix) -> Result<Vec<KernelReport>> {
    radix.check_capacity(0, resolution)?;
    let cells = radix.order(resolution);
    let points: Vec<GroupPoint> = (0..cells)
        .map(|t| GroupPoint::unrank(t, resolution, radix).unwrap())
        .collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); cells as usize];
    let mut rows = Vec::with_capacity(cells as usize - 1);
    for n in 1..cells {
        // add psi_{n-1}
        add_character(&mut acc, &points, n - 1, radix);
        let digits = expand(n, radix)?;
        let l1 = acc.iter().map(|v| v.norm()).sum::<f64>() / cells as f64;
        let max_abs = acc.iter().map(|v| v.norm()).fold(0.0, f64::max);
        rows.push(KernelReport {
            n,
            low: digits.low,
            high: digits.high,
            rho: digits.rho(),
            l1_norm: l1,
            max_abs,
        });
    }
    Ok(rows)
}

/// Add psi_k pointwise to a function (running Dirichlet accumulation:
/// applying this for k = 0..n-1 to the zero function yields D_n).
pub fn accumulate_character(f: &mut CylinderFunction, k: u64) -> Result<()> {
    if k > 0 {
        f.radix().check_capacity(k, f.resolution())?;
    }
    let radix = std::sync::Arc::clone(f.radix());
    let resolution = f.resolution();
    let points: Vec<GroupPoint> = (0..radix.order(resolution))
        .map(|t| GroupPoint::unrank(t, resolution, &radix).unwrap())
        .collect();
    add_character(f.values_mut(), &points, k, &radix);
    Ok(())
}

fn add_character(acc: &mut [Complex64], points: &[GroupPoint], k: u64, radix: &Radix) {
    if k == 0 {
        for v in acc.iter_mut() {
            *v += Complex64::new(1.0, 0.0);
        }
        return;
    }
    let digits = expand(k, radix).unwrap();
    let step = |(v, x): (&mut Complex64, &GroupPoint)| {
        *v += vilenkin_expanded(&digits, x);
    };
    #[cfg(feature = "parallel")]
    {
        acc.par_iter_mut().zip_eq(points.par_iter()).for_each(step);
    }
    #[cfg(not(feature = "parallel"))]
    {
        acc.iter_mut().zip(points.iter()).for_each(step);
    }
}
