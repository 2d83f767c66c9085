use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative imaginary part below which an eigenvalue is treated as real.
const REAL_TOL: f64 = 1e-12;

/// Factor applied to poles that sit exactly on the imaginary axis.
pub const STABILITY_DELTA: f64 = 1e-6;

/// One pole, or one conjugate pair represented by its upper member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PoleTerm {
    Real(f64),
    /// Pole with positive imaginary part; its conjugate is implied.
    Pair(Complex64),
}

impl PoleTerm {
    /// Number of poles (and basis columns) this term contributes.
    pub fn width(&self) -> usize {
        match self {
            PoleTerm::Real(_) => 1,
            PoleTerm::Pair(_) => 2,
        }
    }
}

/// Conjugate-closed pole set, rad/s. Pairs come first in ascending imaginary
/// part, then real poles in descending value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleSet {
    terms: Vec<PoleTerm>,
}

impl PoleSet {
    pub fn from_terms(mut terms: Vec<PoleTerm>) -> Result<Self> {
        for t in &mut terms {
            match t {
                PoleTerm::Real(a) if !a.is_finite() => {
                    return Err(Error::invalid(format!("non-finite real pole {a}")))
                }
                PoleTerm::Pair(p) => {
                    if !(p.re.is_finite() && p.im.is_finite()) || p.im == 0.0 {
                        return Err(Error::invalid(format!("invalid pair pole {p}")));
                    }
                    if p.im < 0.0 {
                        *p = p.conj();
                    }
                }
                _ => {}
            }
        }
        terms.sort_by(|a, b| match (a, b) {
            (PoleTerm::Pair(x), PoleTerm::Pair(y)) => {
                x.im.total_cmp(&y.im).then(y.re.total_cmp(&x.re))
            }
            (PoleTerm::Pair(_), PoleTerm::Real(_)) => std::cmp::Ordering::Less,
            (PoleTerm::Real(_), PoleTerm::Pair(_)) => std::cmp::Ordering::Greater,
            (PoleTerm::Real(x), PoleTerm::Real(y)) => y.total_cmp(x),
        });
        Ok(Self { terms })
    }

    /// Groups a flat list of poles into real poles and conjugate pairs.
    /// Conjugate partners must agree to `1e-10` relative.
    pub fn from_poles(poles: &[Complex64]) -> Result<Self> {
        let (reals, pairs) = split_conjugates(poles).map_err(Error::invalid)?;
        let mut terms: Vec<PoleTerm> = reals.into_iter().map(PoleTerm::Real).collect();
        for (u, l) in pairs {
            if (u - l).norm() > 1e-10 * u.norm() {
                return Err(Error::invalid(format!(
                    "pole {u} has no conjugate partner (closest {})",
                    l.conj()
                )));
            }
            terms.push(PoleTerm::Pair((u + l) * 0.5));
        }
        Self::from_terms(terms)
    }

    /// Turns the eigenvalues of a real matrix into a pole set, averaging
    /// conjugate partners so that the result is exactly conjugate-closed.
    pub(crate) fn from_real_spectrum(eigs: &[Complex64]) -> Result<Self> {
        let (reals, pairs) =
            split_conjugates(eigs).map_err(|m| Error::numerical(m, f64::INFINITY))?;
        let mut terms: Vec<PoleTerm> = reals.into_iter().map(PoleTerm::Real).collect();
        terms.extend(pairs.into_iter().map(|(u, l)| PoleTerm::Pair((u + l) * 0.5)));
        Self::from_terms(terms)
    }

    pub fn terms(&self) -> &[PoleTerm] {
        &self.terms
    }

    /// Model order N: poles counted individually.
    pub fn order(&self) -> usize {
        self.terms.iter().map(PoleTerm::width).sum()
    }

    /// All poles, each pair expanded as `[p, conj(p)]`, in basis-column order.
    pub fn poles(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.order());
        for t in &self.terms {
            match *t {
                PoleTerm::Real(a) => out.push(Complex64::new(a, 0.0)),
                PoleTerm::Pair(p) => {
                    out.push(p);
                    out.push(p.conj());
                }
            }
        }
        out
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.re < 0.0)
    }

    /// Real pole-basis matrix: column block per term evaluated at every `s`.
    /// Pairs use `1/(s-p) + 1/(s-p*)` and `i/(s-p) - i/(s-p*)`.
    pub fn basis(&self, s: &[Complex64]) -> Array2<Complex64> {
        let mut phi = Array2::zeros((s.len(), self.order()));
        for (k, &sk) in s.iter().enumerate() {
            let mut col = 0;
            for t in &self.terms {
                match *t {
                    PoleTerm::Real(a) => {
                        phi[[k, col]] = (sk - a).inv();
                        col += 1;
                    }
                    PoleTerm::Pair(p) => {
                        let u = (sk - p).inv();
                        let v = (sk - p.conj()).inv();
                        phi[[k, col]] = u + v;
                        phi[[k, col + 1]] = Complex64::i() * (u - v);
                        col += 2;
                    }
                }
            }
        }
        phi
    }

    /// Real state-space pair `(A, b)` whose transfer `cᵀ(sI - A)⁻¹b` equals
    /// the basis expansion with coefficients `c`.
    pub(crate) fn state_space(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.order();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        let mut i = 0;
        for t in &self.terms {
            match *t {
                PoleTerm::Real(p) => {
                    a[(i, i)] = p;
                    b[i] = 1.0;
                    i += 1;
                }
                PoleTerm::Pair(p) => {
                    a[(i, i)] = p.re;
                    a[(i, i + 1)] = p.im;
                    a[(i + 1, i)] = -p.im;
                    a[(i + 1, i + 1)] = p.re;
                    b[i] = 2.0;
                    i += 2;
                }
            }
        }
        (a, b)
    }
}

/// Splits poles into real values and (upper, conjugated lower) candidates
/// matched by sort order.
fn split_conjugates(
    poles: &[Complex64],
) -> std::result::Result<(Vec<f64>, Vec<(Complex64, Complex64)>), String> {
    let mut reals = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for &p in poles {
        if !(p.re.is_finite() && p.im.is_finite()) {
            return Err(format!("non-finite pole {p}"));
        }
        if p.im.abs() <= REAL_TOL * p.norm() {
            reals.push(p.re);
        } else if p.im > 0.0 {
            upper.push(p);
        } else {
            lower.push(p.conj());
        }
    }
    if upper.len() != lower.len() {
        return Err(format!(
            "pole set is not closed under conjugation ({} upper, {} lower)",
            upper.len(),
            lower.len()
        ));
    }
    let key = |a: &Complex64, b: &Complex64| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re));
    upper.sort_by(key);
    lower.sort_by(key);
    Ok((reals, upper.into_iter().zip(lower).collect()))
}

/// Starting poles: ⌊order/2⌋ lightly damped pairs with imaginary parts
/// evenly spaced over the band, plus one real pole at `-2π f_max` for odd
/// orders. A single pair sits at the band midpoint.
pub fn initial_poles(f_min: f64, f_max: f64, order: usize, imag_ratio: f64) -> Result<PoleSet> {
    if order < 2 {
        return Err(Error::precondition(format!("model order must be at least 2, got {order}")));
    }
    if !(f_min.is_finite() && f_max.is_finite() && f_min < f_max) {
        return Err(Error::precondition(format!(
            "initial poles need f_min < f_max, got [{f_min}, {f_max}]"
        )));
    }
    if !(imag_ratio.is_finite() && imag_ratio > 0.0) {
        return Err(Error::precondition(format!("imag_ratio must be positive, got {imag_ratio}")));
    }
    let n_pairs = order / 2;
    let (w_lo, w_hi) = (2.0 * PI * f_min, 2.0 * PI * f_max);
    let betas: Vec<f64> = if n_pairs == 1 {
        vec![0.5 * (w_lo + w_hi)]
    } else {
        let step = (w_hi - w_lo) / (n_pairs - 1) as f64;
        (0..n_pairs)
            .map(|m| if m + 1 == n_pairs { w_hi } else { w_lo + step * m as f64 })
            .collect()
    };
    let mut terms: Vec<PoleTerm> = betas
        .into_iter()
        .map(|b| PoleTerm::Pair(Complex64::new(-imag_ratio * b, b)))
        .collect();
    if order % 2 == 1 {
        terms.push(PoleTerm::Real(-w_hi));
    }
    PoleSet::from_terms(terms)
}

/// Reflects unstable poles into the left half-plane. Poles on the imaginary
/// axis are pushed left by `δ·|a|` (by `δ` itself for a pole at the origin).
pub fn enforce_stability(poles: &PoleSet) -> PoleSet {
    let fix = |p: Complex64| -> Complex64 {
        if p.re > 0.0 {
            Complex64::new(-p.re, p.im)
        } else if p.re == 0.0 {
            let mag = p.norm();
            let shift = if mag > 0.0 { STABILITY_DELTA * mag } else { STABILITY_DELTA };
            Complex64::new(-shift, p.im)
        } else {
            p
        }
    };
    let terms = poles
        .terms
        .iter()
        .map(|t| match *t {
            PoleTerm::Real(a) => PoleTerm::Real(fix(Complex64::new(a, 0.0)).re),
            PoleTerm::Pair(p) => PoleTerm::Pair(fix(p)),
        })
        .collect();
    PoleSet::from_terms(terms).expect("reflection keeps poles finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn initial_placement() {
        let p = initial_poles(10.0, 20.0, 4, 0.01).unwrap();
        let poles = p.poles();
        assert_eq!(poles.len(), 4);
        assert_relative_eq!(poles[0].re, -0.6283185307179586, max_relative = 1e-14);
        assert_relative_eq!(poles[0].im, 62.83185307179586, max_relative = 1e-14);
        assert_eq!(poles[1], poles[0].conj());
        assert_relative_eq!(poles[2].re, -1.2566370614359172, max_relative = 1e-14);
        assert_relative_eq!(poles[2].im, 125.66370614359172, max_relative = 1e-14);
    }

    #[test]
    fn single_pair_sits_at_midpoint() {
        let p = initial_poles(10.0, 20.0, 2, 0.01).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_relative_eq!(p.poles()[0].im, 2.0 * PI * 15.0, max_relative = 1e-14);
    }

    #[test]
    fn odd_order_adds_real_pole() {
        let p = initial_poles(10.0, 20.0, 5, 0.01).unwrap();
        assert_eq!(p.order(), 5);
        let reals: Vec<_> = p
            .terms()
            .iter()
            .filter_map(|t| match t {
                PoleTerm::Real(a) => Some(*a),
                _ => None,
            })
            .collect();
        assert_eq!(reals, vec![-2.0 * PI * 20.0]);
        assert!(initial_poles(10.0, 20.0, 1, 0.01).is_err());
        assert!(initial_poles(20.0, 10.0, 4, 0.01).is_err());
    }

    #[test]
    fn stability_rules() {
        let set = PoleSet::from_poles(&[c(1.0, 5.0), c(1.0, -5.0)]).unwrap();
        assert_eq!(enforce_stability(&set).poles()[0], c(-1.0, 5.0));
        let set = PoleSet::from_poles(&[c(-1.0, 5.0), c(-1.0, -5.0)]).unwrap();
        assert_eq!(enforce_stability(&set), set);
        let set = PoleSet::from_poles(&[c(0.0, 5.0), c(0.0, -5.0)]).unwrap();
        let fixed = enforce_stability(&set).poles();
        assert_relative_eq!(fixed[0].re, -5e-6, max_relative = 1e-12);
        assert_eq!(fixed[0].im, 5.0);
        assert_eq!(fixed[1], fixed[0].conj());
        let set = PoleSet::from_terms(vec![PoleTerm::Real(3.0), PoleTerm::Real(0.0)]).unwrap();
        assert!(enforce_stability(&set).is_stable());
    }

    #[test]
    fn rejects_unpaired_pole() {
        assert!(PoleSet::from_poles(&[c(-1.0, 5.0)]).is_err());
        assert!(PoleSet::from_poles(&[c(-1.0, 5.0), c(-1.0, -5.1)]).is_err());
    }

    #[test]
    fn state_space_matches_basis() {
        let set = PoleSet::from_terms(vec![
            PoleTerm::Pair(c(-2.0, 30.0)),
            PoleTerm::Real(-7.0),
            PoleTerm::Pair(c(-0.5, 12.0)),
        ])
        .unwrap();
        let coef = [0.3, -1.2, 2.0, 0.7, 0.1];
        let s = c(0.0, 17.0);
        let phi = set.basis(&[s]);
        let direct: Complex64 = (0..5).map(|n| phi[[0, n]] * coef[n]).sum();
        let (a, b) = set.state_space();
        // cᵀ (sI - A)⁻¹ b via complex solve
        let n = 5;
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { s } else { Complex64::new(0.0, 0.0) };
            d - a[(i, j)]
        });
        let rhs = nalgebra::DVector::from_fn(n, |i, _| Complex64::new(b[i], 0.0));
        let x = m.lu().solve(&rhs).unwrap();
        let ss: Complex64 = (0..n).map(|i| x[i] * coef[i]).sum();
        assert_relative_eq!(ss.re, direct.re, max_relative = 1e-12);
        assert_relative_eq!(ss.im, direct.im, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn initial_poles_are_conjugate_closed(order in 2usize..40, f0 in 0.5f64..50.0, span in 1.0f64..500.0) {
            let p = initial_poles(f0, f0 + span, order, 0.01).unwrap();
            prop_assert_eq!(p.order(), order);
            let poles = p.poles();
            for a in &poles {
                prop_assert!(a.re < 0.0);
                prop_assert!(poles.iter().any(|b| *b == a.conj()));
            }
        }

        #[test]
        fn stabilized_sets_stay_closed(re in prop::collection::vec(-5.0f64..5.0, 1..6), im in prop::collection::vec(0.1f64..100.0, 1..6)) {
            let terms: Vec<PoleTerm> = re.iter().zip(&im).map(|(&r, &i)| PoleTerm::Pair(c(r, i))).collect();
            let set = PoleSet::from_terms(terms).unwrap();
            let fixed = enforce_stability(&set);
            prop_assert!(fixed.is_stable());
            prop_assert_eq!(fixed.order(), set.order());
            let poles = fixed.poles();
            for a in &poles {
                prop_assert!(poles.iter().any(|b| *b == a.conj()));
            }
        }
    }
}
