//! Mixed-radix arithmetic and the truncated Vilenkin group.
//!
//! The group is the direct product of cyclic groups Z_{m_0} x Z_{m_1} x ...
//! truncated to its first N coordinates.  The generating sequence m induces
//! the number system M_0 = 1, M_{k+1} = m_k M_k; every positive integer
//! n < M_N has a unique little-endian digit expansion n = sum n_j M_j.
//! Cylinders I_n(x) (points agreeing with x in the first n coordinates)
//! carry Haar measure 1/M_n, kept as exact rationals.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{Error, Result};

/// The generating sequence m together with the cumulative orders M_k.
///
/// `orders[k]` is M_k, so `orders` has one more entry than `m`.  Also
/// carries the per-coordinate roots of unity used by the character
/// evaluations: `root(j, r)` is exp(2 pi i r / m_j), tabulated once so
/// repeated character products do not accumulate floating drift.
#[derive(Debug, Clone)]
pub struct RadixSequence {
    m: Vec<u32>,
    orders: Vec<u64>,
    m_star: u32,
    roots: Vec<Vec<Complex64>>,
}

impl PartialEq for RadixSequence {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
    }
}
impl Eq for RadixSequence {}

/// Shared handle to a radix sequence.
pub type Radix = Arc<RadixSequence>;

impl RadixSequence {
    pub fn new(m: Vec<u32>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::Usage("radix sequence must be nonempty".into()));
        }
        if let Some(bad) = m.iter().find(|&&mk| mk < 2) {
            return Err(Error::Usage(format!("radix entries must be >= 2, got {bad}")));
        }
        let mut orders = Vec::with_capacity(m.len() + 1);
        orders.push(1u64);
        for &mk in &m {
            let next = orders
                .last()
                .unwrap()
                .checked_mul(mk as u64)
                .ok_or_else(|| Error::Capacity("cumulative order overflows u64".into()))?;
            orders.push(next);
        }
        let m_star = *m.iter().max().unwrap();
        let roots = m
            .iter()
            .map(|&mk| {
                (0..mk)
                    .map(|r| Complex64::from_polar(1.0, TAU * r as f64 / mk as f64))
                    .collect()
            })
            .collect();
        Ok(Self { m, orders, m_star, roots })
    }

    /// Cycle `pattern` until the sequence has `len` entries.
    pub fn from_pattern(pattern: &[u32], len: usize) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::Usage("radix pattern must be nonempty".into()));
        }
        Self::new((0..len).map(|k| pattern[k % pattern.len()]).collect())
    }

    /// The Walsh-Paley case m = (2, 2, ..., 2).
    pub fn walsh(len: usize) -> Radix {
        Arc::new(Self::from_pattern(&[2], len).unwrap())
    }

    pub fn shared(m: Vec<u32>) -> Result<Radix> {
        Ok(Arc::new(Self::new(m)?))
    }

    /// Number of stored coordinates (N_max).
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// m_k.
    pub fn radix(&self, k: usize) -> u32 {
        self.m[k]
    }

    pub fn radices(&self) -> &[u32] {
        &self.m
    }

    /// M_k for 0 <= k <= len().
    pub fn order(&self, k: usize) -> u64 {
        self.orders[k]
    }

    /// Largest entry of m.
    pub fn m_star(&self) -> u32 {
        self.m_star
    }

    /// exp(2 pi i r / m_j), with r reduced mod m_j.
    pub fn root(&self, j: usize, r: u64) -> Complex64 {
        self.roots[j][(r % self.m[j] as u64) as usize]
    }

    /// Capacity check: n < M_k.
    pub fn check_capacity(&self, n: u64, k: usize) -> Result<()> {
        if k > self.len() {
            return Err(Error::Capacity(format!(
                "resolution {k} exceeds stored radix length {}",
                self.len()
            )));
        }
        if n >= self.orders[k] {
            return Err(Error::Capacity(format!(
                "index {n} exceeds capacity M_{k} = {}",
                self.orders[k]
            )));
        }
        Ok(())
    }
}

/// Digit expansion of a positive integer in the generalized number system,
/// with the derived functionals: `low` is the index of the lowest nonzero
/// digit, `high` of the highest, and `rho = high - low` the digit spread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitExpansion {
    pub n: u64,
    pub digits: Vec<u32>,
    pub low: usize,
    pub high: usize,
}

impl DigitExpansion {
    pub fn rho(&self) -> usize {
        self.high - self.low
    }

    /// n_j, zero beyond the stored digits.
    pub fn digit(&self, j: usize) -> u32 {
        self.digits.get(j).copied().unwrap_or(0)
    }
}

/// Expand n >= 1 into its mixed-radix digits.
pub fn expand(n: u64, radix: &RadixSequence) -> Result<DigitExpansion> {
    if n == 0 {
        return Err(Error::Domain("digit expansion requires n >= 1".into()));
    }
    radix.check_capacity(n, radix.len())?;
    let mut digits = Vec::new();
    let mut rest = n;
    let mut j = 0;
    while rest > 0 {
        let mj = radix.radix(j) as u64;
        digits.push((rest % mj) as u32);
        rest /= mj;
        j += 1;
    }
    let low = digits.iter().position(|&d| d != 0).unwrap();
    let high = digits.len() - 1;
    debug_assert!(digits[high] != 0);
    Ok(DigitExpansion { n, digits, low, high })
}

/// A point of the truncated group: coordinates x_j with 0 <= x_j < m_j,
/// for j < resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPoint {
    radix: Radix,
    coords: Vec<u32>,
}

impl GroupPoint {
    pub fn from_coords(radix: Radix, coords: Vec<u32>) -> Result<Self> {
        if coords.len() > radix.len() {
            return Err(Error::Capacity(format!(
                "resolution {} exceeds stored radix length {}",
                coords.len(),
                radix.len()
            )));
        }
        for (j, &c) in coords.iter().enumerate() {
            if c >= radix.radix(j) {
                return Err(Error::Usage(format!(
                    "coordinate {c} at position {j} exceeds radix {}",
                    radix.radix(j)
                )));
            }
        }
        Ok(Self { radix, coords })
    }

    pub fn zero(radix: Radix, resolution: usize) -> Self {
        Self { coords: vec![0; resolution], radix }
    }

    /// e_k: the point with a single one in coordinate k.
    pub fn unit(radix: Radix, resolution: usize, k: usize) -> Result<Self> {
        let mut p = Self::zero(radix, resolution);
        if k >= resolution {
            return Err(Error::Usage(format!(
                "unit index {k} out of range for resolution {resolution}"
            )));
        }
        p.coords[k] = 1;
        Ok(p)
    }

    pub fn radix(&self) -> &Radix {
        &self.radix
    }

    pub fn resolution(&self) -> usize {
        self.coords.len()
    }

    pub fn coord(&self, j: usize) -> u32 {
        self.coords[j]
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    /// Little-endian rank: t = sum x_j M_j.  The point with rank t has the
    /// same digits as the integer t.
    pub fn rank(&self) -> u64 {
        self.coords
            .iter()
            .enumerate()
            .map(|(j, &c)| c as u64 * self.radix.order(j))
            .sum()
    }

    pub fn unrank(t: u64, resolution: usize, radix: &Radix) -> Result<Self> {
        radix.check_capacity(t, resolution)?;
        let mut coords = Vec::with_capacity(resolution);
        let mut rest = t;
        for j in 0..resolution {
            let mj = radix.radix(j) as u64;
            coords.push((rest % mj) as u32);
            rest /= mj;
        }
        Ok(Self { radix: Arc::clone(radix), coords })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.radix.as_ref() != other.radix.as_ref() {
            return Err(Error::Usage("group points have different radices".into()));
        }
        if self.resolution() != other.resolution() {
            return Err(Error::Usage(format!(
                "group points have different resolutions ({} vs {})",
                self.resolution(),
                other.resolution()
            )));
        }
        Ok(())
    }

    /// Coordinate-wise sum mod m_j.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .enumerate()
            .map(|(j, (&a, &b))| (a + b) % self.radix.radix(j))
            .collect();
        Ok(Self { radix: Arc::clone(&self.radix), coords })
    }

    /// Coordinate-wise inverse.
    pub fn neg(&self) -> Self {
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(j, &a)| if a == 0 { 0 } else { self.radix.radix(j) - a })
            .collect();
        Self { radix: Arc::clone(&self.radix), coords }
    }

    /// Group difference x - y.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Index of the first nonzero coordinate, or resolution if zero.
    pub fn first_nonzero(&self) -> usize {
        self.coords
            .iter()
            .position(|&c| c != 0)
            .unwrap_or(self.resolution())
    }

    /// Truncate or zero-extend to the given resolution.
    pub fn at_resolution(&self, resolution: usize) -> Result<Self> {
        if resolution > self.radix.len() {
            return Err(Error::Capacity(format!(
                "resolution {resolution} exceeds stored radix length {}",
                self.radix.len()
            )));
        }
        let mut coords = self.coords.clone();
        coords.resize(resolution, 0);
        Ok(Self { radix: Arc::clone(&self.radix), coords })
    }
}

/// A cylinder I_depth(base): all points agreeing with `base` in the first
/// `depth` coordinates.  I_0 is the whole group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    base: GroupPoint,
    depth: usize,
}

impl Interval {
    pub fn new(base: GroupPoint, depth: usize) -> Result<Self> {
        if depth > base.resolution() {
            return Err(Error::Usage(format!(
                "interval depth {depth} exceeds base resolution {}",
                base.resolution()
            )));
        }
        Ok(Self { base, depth })
    }

    pub fn base(&self) -> &GroupPoint {
        &self.base
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn contains(&self, x: &GroupPoint) -> Result<bool> {
        if self.base.radix().as_ref() != x.radix().as_ref() {
            return Err(Error::Usage("interval and point have different radices".into()));
        }
        if self.depth > x.resolution() {
            return Err(Error::Usage(format!(
                "interval depth {} exceeds point resolution {}",
                self.depth,
                x.resolution()
            )));
        }
        Ok((0..self.depth).all(|j| self.base.coord(j) == x.coord(j)))
    }

    /// Exact Haar measure 1/M_depth.
    pub fn measure(&self) -> Ratio<u64> {
        Ratio::new(1, self.base.radix().order(self.depth))
    }
}

/// The points of the annulus I_s \ I_{s+1} (around zero) at resolution `n`:
/// first s coordinates zero, coordinate s nonzero, the rest free.
/// Cardinality M_n/M_s - M_n/M_{s+1}.
pub fn annulus(s: usize, n: usize, radix: &Radix) -> Result<impl Iterator<Item = GroupPoint> + '_> {
    if s >= n {
        return Err(Error::Domain(format!("annulus requires s < n, got s = {s}, n = {n}")));
    }
    radix.check_capacity(0, n)?;
    let ms = radix.order(s);
    let ms1 = radix.order(s + 1);
    let tail = radix.order(n) / ms1;
    let digits = radix.radix(s) as u64;
    let radix = Arc::clone(radix);
    Ok((0..tail).flat_map(move |q| {
        let radix = Arc::clone(&radix);
        (1..digits).map(move |d| {
            GroupPoint::unrank(d * ms + q * ms1, n, &radix).expect("annulus rank in range")
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radix_234() -> Radix {
        RadixSequence::shared(vec![2, 3, 4]).unwrap()
    }

    #[test]
    fn orders_follow_recurrence() {
        let r = radix_234();
        assert_eq!(r.order(0), 1);
        assert_eq!(r.order(1), 2);
        assert_eq!(r.order(2), 6);
        assert_eq!(r.order(3), 24);
        assert_eq!(r.m_star(), 4);
    }

    #[test]
    fn expand_17_in_234() {
        let r = radix_234();
        let d = expand(17, &r).unwrap();
        assert_eq!(d.digits, vec![1, 2, 2]);
        assert_eq!(d.low, 0);
        assert_eq!(d.high, 2);
        assert_eq!(d.rho(), 2);
        // recomposition oracle
        let recomposed: u64 = d
            .digits
            .iter()
            .enumerate()
            .map(|(j, &dj)| dj as u64 * r.order(j))
            .sum();
        assert_eq!(recomposed, 17);
    }

    #[test]
    fn digit_functionals_of_named_indices() {
        let r = Arc::new(RadixSequence::from_pattern(&[2, 3], 8).unwrap());
        for k in 1..8 {
            let mk = r.order(k);
            let d = expand(mk, &r).unwrap();
            assert_eq!((d.low, d.high, d.rho()), (k, k, 0), "M_k");
            let d = expand(mk + r.order(k - 1), &r).unwrap();
            assert_eq!((d.low, d.high, d.rho()), (k - 1, k, 1), "M_k + M_(k-1)");
            let d = expand(mk + 1, &r).unwrap();
            assert_eq!((d.low, d.high, d.rho()), (0, k, k), "M_k + 1");
        }
    }

    #[test]
    fn expand_rejects_zero_and_overflow() {
        let r = radix_234();
        assert!(matches!(expand(0, &r), Err(Error::Domain(_))));
        assert!(matches!(expand(24, &r), Err(Error::Capacity(_))));
    }

    #[test]
    fn expand_recompose_round_trip_and_bracket() {
        let r = radix_234();
        for n in 1..r.order(3) {
            let d = expand(n, &r).unwrap();
            let recomposed: u64 = d
                .digits
                .iter()
                .enumerate()
                .map(|(j, &dj)| dj as u64 * r.order(j))
                .sum();
            assert_eq!(recomposed, n);
            assert!(r.order(d.high) <= n && n < r.order(d.high + 1));
        }
    }

    #[test]
    fn rank_unrank_round_trip() {
        let r = radix_234();
        for t in 0..r.order(3) {
            let p = GroupPoint::unrank(t, 3, &r).unwrap();
            assert_eq!(p.rank(), t);
        }
        let r23 = RadixSequence::shared(vec![2, 3]).unwrap();
        let p = GroupPoint::unrank(5, 2, &r23).unwrap();
        assert_eq!(p.coords(), &[1, 2]);
        assert_eq!(GroupPoint::zero(r23, 2).rank(), 0);
    }

    #[test]
    fn add_neg_modular() {
        let r = RadixSequence::shared(vec![2, 3]).unwrap();
        let x = GroupPoint::from_coords(Arc::clone(&r), vec![1, 2]).unwrap();
        let zero = GroupPoint::zero(Arc::clone(&r), 2);
        assert_eq!(x.add(&zero).unwrap(), x);
        assert_eq!(x.add(&x).unwrap().coords(), &[0, 1]);
        assert_eq!(x.neg().coords(), &[1, 1]);
        assert_eq!(x.add(&x.neg()).unwrap(), zero);
    }

    #[test]
    fn add_rejects_mismatch() {
        let r = RadixSequence::shared(vec![2, 3]).unwrap();
        let s = RadixSequence::shared(vec![3, 2]).unwrap();
        let x = GroupPoint::zero(r, 2);
        let y = GroupPoint::zero(s, 2);
        assert!(matches!(x.add(&y), Err(Error::Usage(_))));
    }

    #[test]
    fn group_axioms_exhaustive() {
        // abelian group axioms, exhaustive for M_N <= 256
        let r = Arc::new(RadixSequence::from_pattern(&[2, 3], 4).unwrap());
        let n = r.order(4); // 36
        let pts: Vec<_> = (0..n).map(|t| GroupPoint::unrank(t, 4, &r).unwrap()).collect();
        let zero = GroupPoint::zero(Arc::clone(&r), 4);
        for a in &pts {
            assert_eq!(a.add(&zero).unwrap(), *a);
            assert_eq!(a.add(&a.neg()).unwrap(), zero);
            for b in &pts {
                assert_eq!(a.add(b).unwrap(), b.add(a).unwrap());
                for c in pts.iter().step_by(7) {
                    assert_eq!(
                        a.add(b).unwrap().add(c).unwrap(),
                        a.add(&b.add(c).unwrap()).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn interval_measure_and_contains() {
        let r = RadixSequence::shared(vec![2, 3]).unwrap();
        let zero = GroupPoint::zero(Arc::clone(&r), 2);
        let whole = Interval::new(zero.clone(), 0).unwrap();
        assert_eq!(whole.measure(), Ratio::new(1, 1));
        for t in 0..6 {
            let p = GroupPoint::unrank(t, 2, &r).unwrap();
            assert!(whole.contains(&p).unwrap());
        }
        let i1 = Interval::new(zero, 1).unwrap();
        assert_eq!(i1.measure(), Ratio::new(1, 2));
        let inside = GroupPoint::from_coords(Arc::clone(&r), vec![0, 2]).unwrap();
        let outside = GroupPoint::from_coords(Arc::clone(&r), vec![1, 0]).unwrap();
        assert!(i1.contains(&inside).unwrap());
        assert!(!i1.contains(&outside).unwrap());
    }

    #[test]
    fn annulus_walsh_and_mixed() {
        let r = Arc::new(RadixSequence::from_pattern(&[2], 2).unwrap());
        let pts: Vec<Vec<u32>> = annulus(0, 2, &r).unwrap().map(|p| p.coords().to_vec()).collect();
        assert_eq!(pts, vec![vec![1, 0], vec![1, 1]]);

        let r = RadixSequence::shared(vec![2, 3]).unwrap();
        let pts: Vec<Vec<u32>> = annulus(1, 2, &r).unwrap().map(|p| p.coords().to_vec()).collect();
        assert_eq!(pts, vec![vec![0, 1], vec![0, 2]]);
    }

    #[test]
    fn annulus_partition_is_disjoint_and_exact() {
        let r = radix_234();
        let n = 3;
        let mut seen = vec![false; r.order(n) as usize];
        let mut total = Ratio::new(0u64, 1);
        for s in 0..n {
            let card = r.order(n) / r.order(s) - r.order(n) / r.order(s + 1);
            let mut count = 0u64;
            for p in annulus(s, n, &r).unwrap() {
                let t = p.rank() as usize;
                assert!(!seen[t], "point covered twice");
                seen[t] = true;
                count += 1;
            }
            assert_eq!(count, card);
            total += Ratio::new(card, r.order(n));
        }
        // remaining uncovered points are exactly I_N
        assert_eq!(seen.iter().filter(|&&b| !b).count() as u64, 1);
        assert_eq!(total, Ratio::new(1, 1) - Ratio::new(1, r.order(n)));
    }

    #[test]
    fn annulus_rejects_bad_depth() {
        let r = radix_234();
        assert!(annulus(3, 3, &r).is_err());
    }
}
