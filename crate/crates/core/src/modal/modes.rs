use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{PoleTerm, RationalModel};
use crate::error::{Error, Result};
use crate::frf::StackingKind;

/// Frequency separation below which two modes may be duplicates, Hz.
pub const DUPLICATE_DF: f64 = 1e-9;
/// MAC above which two close modes are merged.
pub const DUPLICATE_MAC: f64 = 0.999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub f_hz: f64,
    pub zeta: f64,
    /// Unit norm, largest component real and positive.
    pub shape: Vec<Complex64>,
    /// Upper pole of the pair, rad/s.
    pub pole: Complex64,
    /// Model orders the mode was observed at.
    pub source_orders: Vec<usize>,
}

impl Mode {
    /// Builds a mode from its pole; the shape is normalized here.
    pub fn from_pole(pole: Complex64, shape: &[Complex64], source_orders: Vec<usize>) -> Result<Self> {
        let (f_hz, zeta) = poles_to_modal(pole)?;
        Ok(Self {
            f_hz,
            zeta,
            shape: normalize_shape(shape)?,
            pole: if pole.im < 0.0 { pole.conj() } else { pole },
            source_orders,
        })
    }

    /// Pole rebuilt from frequency and damping.
    pub fn pole_from_parameters(f_hz: f64, zeta: f64) -> Complex64 {
        let w = 2.0 * PI * f_hz;
        Complex64::new(-zeta * w, w * (1.0 - zeta * zeta).max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub orders: Vec<usize>,
    /// Real poles skipped because they carry no oscillatory mode.
    pub dropped_real_poles: usize,
    /// Modes outside the analysis band that were discarded.
    pub dropped_out_of_band: usize,
    pub merged_duplicates: usize,
    pub selection: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModalSet {
    modes: Vec<Mode>,
    pub provenance: Provenance,
}

impl ModalSet {
    /// Sorts by frequency and merges near-identical duplicates.
    pub fn new(mut modes: Vec<Mode>, mut provenance: Provenance) -> Self {
        modes.sort_by(|a, b| a.f_hz.total_cmp(&b.f_hz));
        let mut kept: Vec<Mode> = Vec::with_capacity(modes.len());
        for m in modes {
            let dup = kept.iter_mut().rev().take_while(|k| m.f_hz - k.f_hz <= DUPLICATE_DF).find(|k| {
                k.shape.len() == m.shape.len()
                    && mac(&k.shape, &m.shape).is_ok_and(|v| v > DUPLICATE_MAC)
            });
            match dup {
                Some(k) => {
                    k.source_orders.extend(&m.source_orders);
                    k.source_orders.sort_unstable();
                    k.source_orders.dedup();
                    provenance.merged_duplicates += 1;
                }
                None => kept.push(m),
            }
        }
        Self {
            modes: kept,
            provenance,
        }
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Keeps modes with `f_min ≤ f ≤ f_max`.
    pub fn within_band(self, f_min: f64, f_max: f64) -> Self {
        let before = self.modes.len();
        let modes: Vec<Mode> = self
            .modes
            .into_iter()
            .filter(|m| m.f_hz >= f_min && m.f_hz <= f_max)
            .collect();
        let mut provenance = self.provenance;
        provenance.dropped_out_of_band += before - modes.len();
        Self { modes, provenance }
    }
}

/// Natural frequency (Hz) and damping ratio of a pole.
pub fn poles_to_modal(pole: Complex64) -> Result<(f64, f64)> {
    let mag = pole.norm();
    if mag == 0.0 || !mag.is_finite() {
        return Err(Error::precondition(format!("cannot convert pole {pole} to modal parameters")));
    }
    Ok((mag / (2.0 * PI), -pole.re / mag))
}

/// Unit Euclidean norm with the largest-magnitude component rotated onto
/// the positive real axis.
pub fn normalize_shape(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::precondition("cannot normalize a zero shape vector"));
    }
    let (imax, vmax) = v
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bm), (i, c)| if c.norm() > bm { (i, c.norm()) } else { (bi, bm) });
    let rot = v[imax].conj() / (vmax * norm);
    let mut out: Vec<Complex64> = v.iter().map(|c| c * rot).collect();
    out[imax].im = 0.0;
    Ok(out)
}

pub fn mac(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::precondition(format!(
            "MAC of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let aa: f64 = a.iter().map(|c| c.norm_sqr()).sum();
    let bb: f64 = b.iter().map(|c| c.norm_sqr()).sum();
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::precondition("MAC of a zero vector"));
    }
    let ab: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    Ok((ab.norm_sqr() / (aa * bb)).clamp(0.0, 1.0))
}

fn n_outputs(m: &RationalModel) -> usize {
    m.row_to_output.iter().copied().max().map_or(0, |o| o + 1)
}

/// Normalized shape of pole `pole_index` (a column of the residue matrix).
/// Rows mapping to the same output are summed.
pub fn residues_to_shape(m: &RationalModel, pole_index: usize) -> Result<Vec<Complex64>> {
    if m.stacking == StackingKind::UpperTriangular {
        return Err(Error::precondition(
            "shape extraction undefined for triangular stacking",
        ));
    }
    if pole_index >= m.residues.ncols() {
        return Err(Error::precondition(format!(
            "pole index {pole_index} out of range for {} poles",
            m.residues.ncols()
        )));
    }
    let mut shape = vec![Complex64::new(0.0, 0.0); n_outputs(m)];
    for (r, &o) in m.row_to_output.iter().enumerate() {
        shape[o] += m.residues[[r, pole_index]];
    }
    normalize_shape(&shape)
}

/// For triangular stacking the first `N_c` rows hold `H_i1`, whose residues
/// are proportional to the mode shape; they stand in for the row sums.
fn triangular_shape(m: &RationalModel, pole_index: usize) -> Result<Vec<Complex64>> {
    let n = n_outputs(m);
    let column: Vec<Complex64> = (0..n).map(|r| m.residues[[r, pole_index]]).collect();
    normalize_shape(&column)
}

/// One mode per conjugate pair; real poles are skipped and counted.
pub fn model_to_modal(m: &RationalModel) -> ModalSet {
    let mut modes = Vec::new();
    let mut provenance = Provenance {
        orders: vec![m.poles.order()],
        ..Provenance::default()
    };
    let mut col = 0;
    for t in m.poles.terms() {
        match *t {
            PoleTerm::Real(_) => provenance.dropped_real_poles += 1,
            PoleTerm::Pair(p) => {
                let shape = if m.stacking == StackingKind::UpperTriangular {
                    triangular_shape(m, col)
                } else {
                    residues_to_shape(m, col)
                };
                let shape = shape.unwrap_or_else(|_| vec![Complex64::new(0.0, 0.0); n_outputs(m)]);
                let (f_hz, zeta) = poles_to_modal(p).expect("pair poles are nonzero");
                modes.push(Mode {
                    f_hz,
                    zeta,
                    shape,
                    pole: p,
                    source_orders: vec![m.poles.order()],
                });
            }
        }
        col += t.width();
    }
    if m.stacking == StackingKind::UpperTriangular {
        provenance.selection = Some("shapes from first stacked column".into());
    }
    ModalSet::new(modes, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PoleSet;
    use approx::assert_relative_eq;
    use ndarray::{array, Array1, Array2};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn table_mode_one_pole() {
        let a = Mode::pole_from_parameters(5.001, 0.03);
        let (f, z) = poles_to_modal(a).unwrap();
        assert_relative_eq!(f, 5.001, max_relative = 1e-14);
        assert_relative_eq!(z, 0.03, max_relative = 1e-12);
        // the five-digit rounded pole quoted for this mode lands on 5.000 Hz
        let (f, z) = poles_to_modal(c(-0.94274, 31.40145)).unwrap();
        assert!((f - 5.001).abs() / 5.001 < 5e-4, "{f}");
        assert!((z - 0.03).abs() < 1e-4, "{z}");
    }

    #[test]
    fn undamped_and_real_poles() {
        let (f, z) = poles_to_modal(c(0.0, 2.0 * PI)).unwrap();
        assert_relative_eq!(f, 1.0, max_relative = 1e-15);
        assert_eq!(z, 0.0);
        let (f, z) = poles_to_modal(c(-1.0, 0.0)).unwrap();
        assert_relative_eq!(f, 0.159154943, max_relative = 1e-8);
        assert_eq!(z, 1.0);
        assert!(poles_to_modal(c(0.0, 0.0)).is_err());
    }

    #[test]
    fn mac_cases() {
        let a = [c(1.0, 0.0), c(0.0, 0.0)];
        let b = [c(0.0, 0.0), c(1.0, 0.0)];
        assert_eq!(mac(&a, &a).unwrap(), 1.0);
        assert_eq!(mac(&a, &b).unwrap(), 0.0);
        let phi = [c(0.3, -1.0), c(2.0, 0.5), c(-0.7, 0.1)];
        let alpha = Complex64::from_polar(2.0, PI / 3.0);
        let scaled: Vec<_> = phi.iter().map(|v| v * alpha).collect();
        assert!((mac(&phi, &scaled).unwrap() - 1.0).abs() < 1e-12);
        assert!(mac(&a, &[c(0.0, 0.0); 2]).is_err());
        assert!(mac(&a, &[c(1.0, 0.0)]).is_err());
    }

    fn model(residues: Array2<Complex64>, stacking: StackingKind, row_to_output: Vec<usize>) -> RationalModel {
        let rows = residues.nrows();
        RationalModel {
            poles: PoleSet::from_terms(vec![PoleTerm::Pair(c(-1.0, 50.0))]).unwrap(),
            residues,
            d_terms: Array1::zeros(rows),
            e_terms: Array1::zeros(rows),
            row_to_output,
            stacking,
            source_inputs: 1,
        }
    }

    #[test]
    fn shape_from_superposed_residues() {
        let r = array![[c(2.0, 0.0), c(2.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        let m = model(r.clone(), StackingKind::Superposed, vec![0, 1, 2]);
        assert_eq!(residues_to_shape(&m, 0).unwrap(), vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let alpha = Complex64::from_polar(3.0, PI / 4.0);
        let m2 = model(r.mapv(|v| v * alpha), StackingKind::Superposed, vec![0, 1, 2]);
        let s1 = residues_to_shape(&m, 0).unwrap();
        let s2 = residues_to_shape(&m2, 0).unwrap();
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a - b).norm() <= 1e-12);
        }
        assert!(residues_to_shape(&m, 2).is_err());
    }

    #[test]
    fn passthrough_rows_are_summed_per_output() {
        let r = array![
            [c(1.0, 0.0), c(1.0, 0.0)],
            [c(1.0, 0.0), c(1.0, 0.0)],
            [c(0.0, 1.0), c(0.0, -1.0)],
            [c(0.0, 1.0), c(0.0, -1.0)]
        ];
        let m = model(r, StackingKind::Passthrough, vec![0, 0, 1, 1]);
        let s = residues_to_shape(&m, 0).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((s[0] - c(h, 0.0)).norm() < 1e-15);
        assert!((s[1] - c(0.0, h)).norm() < 1e-15);
    }

    #[test]
    fn triangular_shape_is_refused() {
        let r = array![[c(1.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(1.0, 0.0)]];
        let m = model(r, StackingKind::UpperTriangular, vec![0, 1, 1]);
        let err = residues_to_shape(&m, 0).unwrap_err();
        assert_eq!(err.to_string(), "shape extraction undefined for triangular stacking");
        assert_eq!(model_to_modal(&m).len(), 1);
    }

    #[test]
    fn real_poles_are_dropped() {
        let mut m = model(
            array![[c(1.0, 1.0), c(1.0, -1.0), c(4.0, 0.0)]],
            StackingKind::Superposed,
            vec![0],
        );
        m.poles = PoleSet::from_terms(vec![PoleTerm::Pair(c(-1.0, 50.0)), PoleTerm::Real(-30.0)]).unwrap();
        let set = model_to_modal(&m);
        assert_eq!(set.len(), 1);
        assert_eq!(set.provenance.dropped_real_poles, 1);
    }

    #[test]
    fn duplicates_merge() {
        let shape = vec![c(1.0, 0.0), c(0.5, 0.0)];
        let a = Mode::from_pole(c(-1.0, 60.0), &shape, vec![10]).unwrap();
        let mut b = a.clone();
        b.source_orders = vec![12];
        let other = Mode::from_pole(c(-1.0, 90.0), &shape, vec![12]).unwrap();
        let set = ModalSet::new(vec![other, b, a], Provenance::default());
        assert_eq!(set.len(), 2);
        assert_eq!(set.modes()[0].source_orders, vec![10, 12]);
        assert!(set.modes()[0].f_hz < set.modes()[1].f_hz);
    }

    fn cvec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), n)
            .prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
            .prop_filter("nonzero", |v: &Vec<Complex64>| v.iter().any(|x| x.norm() > 1e-3))
    }

    proptest! {
        #[test]
        fn modal_inverse_consistency(f in 0.01f64..5000.0, z in 0.0001f64..0.9999) {
            let a = Mode::pole_from_parameters(f, z);
            let (f2, z2) = poles_to_modal(a).unwrap();
            prop_assert!((f2 - f).abs() <= 1e-12 * f);
            prop_assert!((z2 - z).abs() <= 1e-12 * z);
        }

        #[test]
        fn mac_symmetric_and_scale_invariant(a in cvec(6), b in cvec(6), s in 0.1f64..10.0, ph in -3.0f64..3.0) {
            let ab = mac(&a, &b).unwrap();
            prop_assert!((ab - mac(&b, &a).unwrap()).abs() < 1e-14);
            prop_assert!((0.0..=1.0).contains(&ab));
            let alpha = Complex64::from_polar(s, ph);
            let sa: Vec<_> = a.iter().map(|v| v * alpha).collect();
            prop_assert!((mac(&sa, &b).unwrap() - ab).abs() < 1e-12);
        }

        #[test]
        fn normalization_idempotent(v in cvec(5)) {
            let n1 = normalize_shape(&v).unwrap();
            let norm: f64 = n1.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            let n2 = normalize_shape(&n1).unwrap();
            for (a, b) in n1.iter().zip(&n2) {
                prop_assert!((a - b).norm() < 1e-15);
            }
        }

        #[test]
        fn shape_invariant_under_complex_scaling(v in cvec(4), s in 0.01f64..100.0, ph in -3.1f64..3.1) {
            let alpha = Complex64::from_polar(s, ph);
            let n1 = normalize_shape(&v).unwrap();
            let n2 = normalize_shape(&v.iter().map(|x| x * alpha).collect::<Vec<_>>()).unwrap();
            for (a, b) in n1.iter().zip(&n2) {
                prop_assert!((a - b).norm() <= 1e-12);
            }
        }
    }
}
