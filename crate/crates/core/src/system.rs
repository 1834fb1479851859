//! Generalized Rademacher functions and Vilenkin characters.
//!
//! r_k(x) = exp(2 pi i x_k / m_k); the characters are the products
//! psi_n(x) = prod_k r_k(x)^{n_k} over the digits of n.  All values are
//! looked up in the per-coordinate root-of-unity tables carried by the
//! radix sequence, so |psi_n| = 1 holds to machine precision and results
//! do not depend on evaluation order.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{expand, DigitExpansion, GroupPoint, RadixSequence};

/// r_k(x) = exp(2 pi i x_k / m_k).
pub fn rademacher(x: &GroupPoint, k: usize) -> Result<Complex64> {
    if k >= x.resolution() {
        return Err(Error::Usage(format!(
            "rademacher index {k} out of range for resolution {}",
            x.resolution()
        )));
    }
    Ok(x.radix().root(k, x.coord(k) as u64))
}

/// psi_n(x); psi_0 is identically 1.
pub fn vilenkin(n: u64, x: &GroupPoint) -> Result<Complex64> {
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    x.radix().check_capacity(n, x.resolution())?;
    let digits = expand(n, x.radix())?;
    Ok(vilenkin_expanded(&digits, x))
}

/// psi_n(x) from a precomputed digit expansion.  The caller guarantees
/// n < M_N for the point's resolution N.
pub fn vilenkin_expanded(digits: &DigitExpansion, x: &GroupPoint) -> Complex64 {
    let radix = x.radix();
    let mut acc = Complex64::new(1.0, 0.0);
    for j in digits.low..=digits.high {
        let nj = digits.digit(j);
        if nj != 0 {
            acc *= radix.root(j, nj as u64 * x.coord(j) as u64);
        }
    }
    acc
}

/// |sum_{u=0}^{s-1} r_k(x)^u| in closed form: sin(pi s x_k/m_k)/sin(pi x_k/m_k),
/// with the limit value s when x_k = 0.
pub fn rademacher_run_modulus(radix: &RadixSequence, k: usize, s: u32, x: &GroupPoint) -> Result<f64> {
    let mk = radix.radix(k);
    if s < 1 || s > mk {
        return Err(Error::Domain(format!(
            "run length s = {s} out of range 1..={mk} for coordinate {k}"
        )));
    }
    if k >= x.resolution() {
        return Err(Error::Usage(format!(
            "coordinate index {k} out of range for resolution {}",
            x.resolution()
        )));
    }
    let xk = x.coord(k);
    if xk == 0 {
        return Ok(s as f64);
    }
    let theta = std::f64::consts::PI * xk as f64 / mk as f64;
    Ok(((s as f64 * theta).sin() / theta.sin()).abs())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::group::{GroupPoint, RadixSequence};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn rademacher_values() {
        let r = RadixSequence::shared(vec![2, 4, 3]).unwrap();
        let zero = GroupPoint::zero(Arc::clone(&r), 3);
        assert_eq!(rademacher(&zero, 0).unwrap(), Complex64::new(1.0, 0.0));
        let x = GroupPoint::from_coords(Arc::clone(&r), vec![1, 1, 0]).unwrap();
        assert!(close(rademacher(&x, 0).unwrap(), Complex64::new(-1.0, 0.0), 1e-12));
        assert!(close(rademacher(&x, 1).unwrap(), Complex64::new(0.0, 1.0), 1e-12));
        assert!(rademacher(&x, 3).is_err());
    }

    #[test]
    fn vilenkin_basics() {
        let r = RadixSequence::shared(vec![2, 3, 4]).unwrap();
        for t in 0..r.order(3) {
            let x = GroupPoint::unrank(t, 3, &r).unwrap();
            assert_eq!(vilenkin(0, &x).unwrap(), Complex64::new(1.0, 0.0));
            // psi_{M_k} = r_k
            for k in 0..3 {
                assert!(close(
                    vilenkin(r.order(k), &x).unwrap(),
                    rademacher(&x, k).unwrap(),
                    1e-12
                ));
            }
        }
        assert!(vilenkin(24, &GroupPoint::zero(Arc::clone(&r), 3)).is_err());
    }

    #[test]
    fn walsh_characters_are_signs() {
        let r = RadixSequence::walsh(5);
        for n in 0..r.order(5) {
            for t in 0..r.order(5) {
                let x = GroupPoint::unrank(t, 5, &r).unwrap();
                let v = vilenkin(n, &x).unwrap();
                let sign: u32 = (0..5).map(|j| ((n >> j) & 1) as u32 * x.coord(j)).sum();
                let expected = if sign % 2 == 0 { 1.0 } else { -1.0 };
                assert!(close(v, Complex64::new(expected, 0.0), 1e-12));
            }
        }
    }

    #[test]
    fn multiplicativity_exhaustive() {
        let r = RadixSequence::shared(vec![2, 3, 4, 2]).unwrap(); // M_N = 48 <= 128
        let pts: Vec<_> = (0..r.order(4)).map(|t| GroupPoint::unrank(t, 4, &r).unwrap()).collect();
        for n in 0..r.order(4) {
            for x in &pts {
                for y in pts.iter().step_by(5) {
                    let lhs = vilenkin(n, &x.add(y).unwrap()).unwrap();
                    let rhs = vilenkin(n, x).unwrap() * vilenkin(n, y).unwrap();
                    assert!(close(lhs, rhs, 1e-10));
                }
            }
        }
    }

    #[test]
    fn orthonormality_small() {
        let r = RadixSequence::shared(vec![2, 3, 2]).unwrap();
        let cap = r.order(3);
        let pts: Vec<_> = (0..cap).map(|t| GroupPoint::unrank(t, 3, &r).unwrap()).collect();
        for n in 0..cap {
            for k in 0..cap {
                let mut acc = Complex64::new(0.0, 0.0);
                for x in &pts {
                    acc += vilenkin(n, x).unwrap() * vilenkin(k, x).unwrap().conj();
                }
                acc /= cap as f64;
                let expected = if n == k { 1.0 } else { 0.0 };
                assert!(close(acc, Complex64::new(expected, 0.0), 1e-10));
            }
        }
    }

    #[test]
    fn run_modulus_matches_direct_summation() {
        let r = RadixSequence::shared(vec![5, 3, 7]).unwrap();
        for k in 0..3 {
            let mk = r.radix(k);
            for xk in 0..mk {
                let mut coords = vec![0; 3];
                coords[k] = xk;
                let x = GroupPoint::from_coords(Arc::clone(&r), coords).unwrap();
                for s in 1..=mk {
                    // direct geometric-sum oracle
                    let direct: Complex64 =
                        (0..s).map(|u| r.root(k, u as u64 * xk as u64)).sum();
                    let closed = rademacher_run_modulus(&r, k, s, &x).unwrap();
                    assert!((direct.norm() - closed).abs() < 1e-12, "k={k} xk={xk} s={s}");
                }
            }
        }
    }

    #[test]
    fn run_modulus_edge_cases() {
        let r = RadixSequence::shared(vec![3, 3]).unwrap();
        let x = GroupPoint::from_coords(Arc::clone(&r), vec![1, 0]).unwrap();
        assert_eq!(rademacher_run_modulus(&r, 0, 1, &x).unwrap(), 1.0);
        assert_eq!(rademacher_run_modulus(&r, 1, 2, &x).unwrap(), 2.0); // x_1 = 0
        let v = rademacher_run_modulus(&r, 0, 2, &x).unwrap();
        assert!((v - 1.0).abs() < 1e-12); // sin(2pi/3)/sin(pi/3) = 1
        assert!(rademacher_run_modulus(&r, 0, 0, &x).is_err());
        assert!(rademacher_run_modulus(&r, 0, 4, &x).is_err());
    }

    #[test]
    fn sine_ratio_at_least_one() {
        for m in 2..=8u32 {
            let r = RadixSequence::shared(vec![m]).unwrap();
            let x = GroupPoint::from_coords(Arc::clone(&r), vec![1]).unwrap();
            for s in 1..m {
                assert!(rademacher_run_modulus(&r, 0, s, &x).unwrap() >= 1.0 - 1e-12);
            }
        }
    }
}
