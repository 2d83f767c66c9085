#![allow(dead_code)]

use std::f64::consts::PI;

use frvf::frf::{FrfTensor, UnitKind};
use ndarray::{Array2, Array3};
use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Upper poles of lightly damped modes at the given frequencies.
pub fn modal_poles(freqs: &[f64], zeta: f64) -> Vec<Complex64> {
    freqs
        .iter()
        .map(|f| {
            let w = 2.0 * PI * f;
            c(-zeta * w, w * (1.0 - zeta * zeta).sqrt())
        })
        .collect()
}

/// `H_oi(s) = Σ_n φ_on ψ_in / (s − p_n) + conj`, i.e. a modal model with
/// complex shapes `phi` `[n_out × N]` and participations `psi` `[n_in × N]`.
pub fn modal_tensor(poles: &[Complex64], phi: &Array2<Complex64>, psi: &Array2<Complex64>, freq: &[f64]) -> FrfTensor {
    let (n_out, n_in) = (phi.nrows(), psi.nrows());
    let values = Array3::from_shape_fn((n_out, n_in, freq.len()), |(o, i, k)| {
        let s = c(0.0, 2.0 * PI * freq[k]);
        poles
            .iter()
            .enumerate()
            .map(|(n, p)| {
                let r = phi[(o, n)] * psi[(i, n)];
                r / (s - p) + r.conj() / (s - p.conj())
            })
            .sum()
    });
    FrfTensor::new(values, freq.to_vec(), UnitKind::Receptance).unwrap()
}

/// Deterministic, well-spread complex entries.
pub fn pseudo_shapes(rows: usize, cols: usize, salt: f64) -> Array2<Complex64> {
    Array2::from_shape_fn((rows, cols), |(r, n)| {
        let a = ((r + 1) as f64 * 1.7 + (n + 1) as f64 * 0.61 + salt).sin();
        let b = ((r + 2) as f64 * 0.37 * (n + 1) as f64 + salt).cos();
        c(a + 0.2, 0.3 * b)
    })
}

/// Nearest-neighbour matching of `found` onto `truth`; returns the worst
/// relative distance.
pub fn worst_pole_error(truth: &[Complex64], found: &[Complex64]) -> f64 {
    truth
        .iter()
        .map(|t| {
            found
                .iter()
                .map(|p| (p - t).norm() / t.norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}
