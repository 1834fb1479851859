//! Restricted and weighted maximal operators of partial sums, the named
//! subsequence families, and empirical operator-norm probes over random and
//! structured p-atoms.

use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{expand, GroupPoint, Interval, Radix};
use crate::hardy::{hardy_norm, Atom};
use crate::kernels::lp_quasinorm;
use crate::transform::{forward, partial_sum_of_spectrum, CylinderFunction};

/// A strictly increasing family of partial-sum orders.
///
/// `Orders` is M_0, M_1, ...; `OrdersPlusOne` is M_n + 1 (digit spread n,
/// unbounded); `OrdersPlusPrev` is M_n + M_{n-1} (digit spread 1);
/// `OrdersPlusOffset(r)` is M_n + r for a fixed r >= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsequenceFamily {
    Explicit(Vec<u64>),
    Orders,
    OrdersPlusOne,
    OrdersPlusPrev,
    OrdersPlusOffset(u64),
}

impl SubsequenceFamily {
    /// A structural upper bound on the digit spread of every member, when
    /// one is known without consulting the radix.
    pub fn rho_bound(&self) -> Option<usize> {
        match self {
            Self::Orders => Some(0),
            Self::OrdersPlusPrev => Some(1),
            _ => None,
        }
    }

    /// Members in increasing order, stopping at the capacity of the stored
    /// radix sequence.
    pub fn iter_members<'a>(&'a self, radix: &'a Radix) -> Box<dyn Iterator<Item = u64> + 'a> {
        match self {
            Self::Explicit(list) => Box::new(list.iter().copied()),
            Self::Orders => Box::new((0..=radix.len()).map(|k| radix.order(k))),
            Self::OrdersPlusOne => Box::new((1..radix.len()).map(|k| radix.order(k) + 1)),
            Self::OrdersPlusPrev => {
                Box::new((1..radix.len()).map(|k| radix.order(k) + radix.order(k - 1)))
            }
            Self::OrdersPlusOffset(r) => {
                let r = *r;
                Box::new(
                    (1..=radix.len())
                        .map(move |k| radix.order(k) + r)
                        .filter(move |&a| {
                            // keep members whose top digit really is the order term
                            expand(a, radix).map_or(false, |d| radix.order(d.high) > r)
                        }),
                )
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Explicit(list) => format!(
                "list:{}",
                list.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ),
            Self::Orders => "Mn".into(),
            Self::OrdersPlusOne => "Mn+1".into(),
            Self::OrdersPlusPrev => "Mn+Mprev".into(),
            Self::OrdersPlusOffset(r) => format!("offset:{r}"),
        }
    }
}

impl FromStr for SubsequenceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Mn" => Ok(Self::Orders),
            "Mn+1" => Ok(Self::OrdersPlusOne),
            "Mn+Mprev" => Ok(Self::OrdersPlusPrev),
            _ => {
                if let Some(rest) = s.strip_prefix("list:") {
                    let list = rest
                        .split(',')
                        .map(|v| {
                            v.trim().parse::<u64>().map_err(|_| {
                                Error::Usage(format!("bad family member {v:?}"))
                            })
                        })
                        .collect::<Result<Vec<u64>>>()?;
                    if list.is_empty() || !list.windows(2).all(|w| w[0] < w[1]) || list[0] == 0 {
                        return Err(Error::Usage(
                            "explicit family must be strictly increasing and positive".into(),
                        ));
                    }
                    Ok(Self::Explicit(list))
                } else if let Some(rest) = s.strip_prefix("offset:") {
                    let r = rest
                        .parse::<u64>()
                        .map_err(|_| Error::Usage(format!("bad family offset {rest:?}")))?;
                    if r == 0 {
                        return Err(Error::Usage("family offset must be >= 1".into()));
                    }
                    Ok(Self::OrdersPlusOffset(r))
                } else {
                    Err(Error::Usage(format!(
                        "unknown family {s:?}; expected Mn, Mn+1, Mn+Mprev, list:.., or offset:r"
                    )))
                }
            }
        }
    }
}

/// The first `count` members of the family.
pub fn family_members(
    family: &SubsequenceFamily,
    count: usize,
    radix: &Radix,
) -> Result<Vec<u64>> {
    if count == 0 {
        return Err(Error::Domain("family prefix must be nonempty".into()));
    }
    let members: Vec<u64> = family.iter_members(radix).take(count).collect();
    if members.len() < count {
        return Err(Error::Capacity(format!(
            "family {} has only {} members within the stored radix length",
            family.label(),
            members.len()
        )));
    }
    Ok(members)
}

/// Max digit spread over the first `count` members (index 0 = the order M_0
/// itself has no expansion spread and counts as 0).
pub fn family_rho_sup(family: &SubsequenceFamily, count: usize, radix: &Radix) -> Result<usize> {
    let members = family_members(family, count, radix)?;
    let mut sup = 0;
    for &alpha in &members {
        // exact orders M_k have a single digit: spread 0, no expansion needed
        if (0..=radix.len()).any(|k| radix.order(k) == alpha) {
            continue;
        }
        sup = sup.max(expand(alpha, radix)?.rho());
    }
    Ok(sup)
}

/// Pointwise max over the family prefix of |S_{alpha_k} f|, real-valued.
pub fn restricted_maximal(
    f: &CylinderFunction,
    family: &SubsequenceFamily,
    count: usize,
) -> Result<CylinderFunction> {
    let members = family_members(family, count, f.radix())?;
    let cap = f.cells() as u64;
    if let Some(&bad) = members.iter().find(|&&a| a > cap) {
        return Err(Error::Capacity(format!(
            "family member {bad} exceeds M_N = {cap}"
        )));
    }
    let spectrum = forward(f);
    let mut best = vec![0.0f64; f.cells()];
    for &alpha in &members {
        let s = partial_sum_of_spectrum(&spectrum, alpha)?;
        for (b, v) in best.iter_mut().zip(s.values()) {
            let mag = v.norm();
            if mag > *b {
                *b = mag;
            }
        }
    }
    CylinderFunction::from_values(
        Arc::clone(f.radix()),
        f.resolution(),
        best.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    )
}

/// Weight (n+1)^{1/p-1} log(n+1)^{[p]} of the weighted maximal operator;
/// the log factor is present only at p = 1 (integer part of p).
pub fn partial_sum_weight(n: u64, p: f64) -> f64 {
    let base = ((n + 1) as f64).powf(1.0 / p - 1.0);
    if p >= 1.0 {
        base * ((n + 1) as f64).ln()
    } else {
        base
    }
}

/// sup over 1 <= n <= M_N of |S_n f| / weight(n), real-valued.
pub fn weighted_maximal(f: &CylinderFunction, p: f64) -> Result<CylinderFunction> {
    if !(0.0 < p && p <= 1.0) {
        return Err(Error::Domain(format!(
            "weighted maximal operator requires 0 < p <= 1, got {p}"
        )));
    }
    let spectrum = forward(f);
    let cells = f.cells() as u64;
    let mut running = vec![Complex64::new(0.0, 0.0); f.cells()];
    let mut best = vec![0.0f64; f.cells()];
    for n in 1..=cells {
        let k = n - 1;
        let coeff = spectrum.coefficient(k);
        if coeff.norm() > 0.0 {
            if k == 0 {
                for v in running.iter_mut() {
                    *v += coeff;
                }
            } else {
                let digits = expand(k, f.radix())?;
                for (t, v) in running.iter_mut().enumerate() {
                    let x = GroupPoint::unrank(t as u64, f.resolution(), f.radix())?;
                    *v += coeff * crate::system::vilenkin_expanded(&digits, &x);
                }
            }
        }
        let w = partial_sum_weight(n, p);
        for (b, v) in best.iter_mut().zip(&running) {
            let mag = v.norm() / w;
            if mag > *b {
                *b = mag;
            }
        }
    }
    CylinderFunction::from_values(
        Arc::clone(f.radix()),
        f.resolution(),
        best.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    )
}

/// Operator under test in a probe run.
#[derive(Debug, Clone)]
pub enum ProbeOperator {
    Identity,
    Restricted { family: SubsequenceFamily, count: usize },
    Weighted,
}

impl ProbeOperator {
    fn label(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Restricted { family, count } => {
                format!("restricted[{};K={count}]", family.label())
            }
            Self::Weighted => "weighted".into(),
        }
    }

    fn apply(&self, f: &CylinderFunction, p: f64) -> Result<CylinderFunction> {
        match self {
            Self::Identity => Ok(f.clone()),
            Self::Restricted { family, count } => restricted_maximal(f, family, *count),
            Self::Weighted => weighted_maximal(f, p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub resolution: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub structured: bool,
    pub depth: usize,
    pub ratio: f64,
    /// integral of |Ta|^p outside the atom's support
    pub tail_integral: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub operator: String,
    pub p: f64,
    pub trials: usize,
    pub resolution: usize,
    pub max_ratio: f64,
    pub argmax_trial: Option<usize>,
    pub argmax_detail: String,
    pub skipped: usize,
    pub rows: Vec<TrialRow>,
}

/// One generated p-atom: alternating structured kernel-difference atoms
/// (which are near-extremal for the restricted operators) and random-phase
/// atoms, both on a randomly placed support.  The trial RNG is derived from
/// (seed, trial) so results are schedule-independent.
fn generate_atom(
    trial: usize,
    cfg: &ProbeConfig,
    radix: &Radix,
) -> Result<(Atom, bool, usize)> {
    let n = cfg.resolution;
    if n < 2 {
        return Err(Error::Domain("probe needs resolution >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial as u64 + 1);
    let structured = trial % 2 == 0;
    let depth = if structured {
        1 + (trial / 2) % (n - 1)
    } else {
        rng.gen_range(1..n)
    };
    let base_rank = rng.gen_range(0..radix.order(depth));
    let base = GroupPoint::unrank(base_rank, n, radix)?;
    let support = Interval::new(base.clone(), depth)?;
    let sup_bound = (radix.order(depth) as f64).powf(1.0 / cfg.p);

    let values = if structured {
        // translated kernel difference, scaled to the atom sup bound
        let md = radix.order(depth) as f64;
        let md1 = radix.order(depth + 1) as f64;
        let scale = (radix.order(depth) as f64).powf(1.0 / cfg.p - 1.0)
            / radix.m_star() as f64;
        CylinderFunction::from_fn(Arc::clone(radix), n, |x| {
            let diff = x.sub(&base).unwrap();
            let fnz = diff.first_nonzero();
            let v = if fnz >= depth + 1 {
                md1 - md
            } else if fnz == depth {
                -md
            } else {
                0.0
            };
            Complex64::new(scale * v, 0.0)
        })?
    } else {
        // random phases on the support, projected to zero mean, rescaled to
        // meet the sup bound with equality
        let block = radix.order(depth) as usize;
        let reps = radix.order(n) as usize / block;
        let residue = (base_rank % block as u64) as usize;
        let mut raw: Vec<Complex64> = (0..reps)
            .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let mean = raw.iter().sum::<Complex64>() / reps as f64;
        for v in &mut raw {
            *v -= mean;
        }
        let max = raw.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max > 0.0 {
            let scale = sup_bound / max;
            for v in &mut raw {
                *v *= scale;
            }
        }
        let mut values = vec![Complex64::new(0.0, 0.0); radix.order(n) as usize];
        for (q, &v) in raw.iter().enumerate() {
            values[q * block + residue] = v;
        }
        CylinderFunction::from_values(Arc::clone(radix), n, values)?
    };

    Ok((Atom { support, values, p: cfg.p }, structured, depth))
}

/// Estimate the operator norm from H_p to L_p over generated atoms:
/// max over trials of ||Ta||_p / ||a||_{H_p}, with the atom-tail integral
/// recorded per trial.  Ties in the argmax break to the smallest trial.
pub fn probe_operator_norm(
    operator: &ProbeOperator,
    cfg: &ProbeConfig,
    radix: &Radix,
) -> Result<ProbeReport> {
    if cfg.trials == 0 {
        return Err(Error::Domain("probe requires at least one trial".into()));
    }
    if cfg.p <= 0.0 {
        return Err(Error::Domain(format!("probe requires p > 0, got {}", cfg.p)));
    }
    radix.check_capacity(0, cfg.resolution)?;

    let run_trial = |trial: usize| -> Result<Option<TrialRow>> {
        let (atom, structured, depth) = generate_atom(trial, cfg, radix)?;
        let denom = hardy_norm(&atom.values, cfg.p)?;
        if denom < 1e-14 {
            return Ok(None);
        }
        let image = operator.apply(&atom.values, cfg.p)?;
        let ratio = lp_quasinorm(&image, cfg.p)? / denom;
        let mut tail = 0.0f64;
        for t in 0..image.cells() as u64 {
            let x = GroupPoint::unrank(t, cfg.resolution, radix)?;
            if !atom.support.contains(&x)? {
                tail += image.value_at_rank(t).norm().powf(cfg.p);
            }
        }
        tail /= image.cells() as f64;
        Ok(Some(TrialRow { trial, structured, depth, ratio, tail_integral: tail }))
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Option<TrialRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(run_trial)
        .collect::<Result<Vec<_>>>()?;
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Option<TrialRow>> =
        (0..cfg.trials).map(run_trial).collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut skipped = 0;
    let mut max_ratio = 0.0f64;
    let mut argmax: Option<&TrialRow> = None;
    for outcome in &outcomes {
        match outcome {
            None => skipped += 1,
            Some(row) => {
                if row.ratio > max_ratio {
                    max_ratio = row.ratio;
                    argmax = Some(row);
                }
                rows.push(row.clone());
            }
        }
    }
    Ok(ProbeReport {
        operator: operator.label(),
        p: cfg.p,
        trials: cfg.trials,
        resolution: cfg.resolution,
        max_ratio,
        argmax_trial: argmax.map(|r| r.trial),
        argmax_detail: argmax.map_or_else(String::new, |r| {
            format!(
                "trial {} ({}, depth {})",
                r.trial,
                if r.structured { "structured" } else { "random" },
                r.depth
            )
        }),
        skipped,
        rows,
    })
}
