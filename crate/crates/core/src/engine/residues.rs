use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use super::fit::FitConfig;
use super::lsq::{back_substitute, normalize_columns, r_factor, rank_tol};
use super::model::RationalModel;
use super::poles::PoleSet;
use super::relocate::{expand_coefficients, Prepared};
use crate::error::{Error, Result};
use crate::frf::StackedFrf;

/// Final linear stage: per-row weighted least squares for residues, `d`
/// and `e` on fixed poles.
pub fn residue_fit(data: &StackedFrf, poles: &PoleSet, cfg: &FitConfig) -> Result<RationalModel> {
    let prep = Prepared::new(data, cfg)?;
    fit_residues(data, poles, cfg, &prep).map(|(m, _)| m)
}

/// Also returns the pivot-ratio condition estimate of every row system.
pub(crate) fn fit_residues(
    data: &StackedFrf,
    poles: &PoleSet,
    cfg: &FitConfig,
    prep: &Prepared,
) -> Result<(RationalModel, Vec<f64>)> {
    let n = poles.order();
    let k = data.n_freq();
    let n_cols = n + usize::from(cfg.include_d) + usize::from(cfg.include_e);
    let phi = poles.basis(&prep.s);

    let mut residues = Array2::zeros((data.n_rows(), n));
    let mut d_terms = ndarray::Array1::zeros(data.n_rows());
    let mut e_terms = ndarray::Array1::zeros(data.n_rows());
    let mut conditions = Vec::with_capacity(data.n_rows());

    for (r, f) in data.rows().rows().into_iter().enumerate() {
        if 2 * k < n_cols {
            return Err(Error::numerical(
                format!(
                    "row {}: residue system is rank-deficient ({} equations for {n_cols} unknowns)",
                    r + 1,
                    2 * k
                ),
                f64::INFINITY,
            ));
        }
        let w = &prep.weights[r];
        let mut a = DMatrix::zeros(2 * k, n_cols);
        let mut fill = |col: usize, values: &mut dyn Iterator<Item = Complex64>| {
            for (i, v) in values.enumerate() {
                a[(i, col)] = v.re;
                a[(k + i, col)] = v.im;
            }
        };
        for j in 0..n {
            fill(j, &mut (0..k).map(|i| phi[[i, j]] * w[i]));
        }
        let mut col = n;
        if cfg.include_d {
            fill(col, &mut (0..k).map(|i| Complex64::new(w[i], 0.0)));
            col += 1;
        }
        if cfg.include_e {
            fill(col, &mut (0..k).map(|i| prep.s[i] * w[i]));
        }
        let scales = normalize_columns(&mut a);
        let mut aug = a.insert_column(n_cols, 0.0);
        for i in 0..k {
            aug[(i, n_cols)] = f[i].re * w[i];
            aug[(k + i, n_cols)] = f[i].im * w[i];
        }
        let rf = r_factor(aug);

        let pivots: Vec<f64> = (0..n_cols).map(|i| rf[(i, i)].abs()).collect();
        let pmax = pivots.iter().copied().fold(0.0, f64::max);
        let pmin = pivots.iter().copied().fold(f64::INFINITY, f64::min);
        let condition = pmax / pmin;
        if !(pmin > pmax * rank_tol(2 * k, n_cols)) {
            return Err(Error::numerical(
                format!("row {}: residue system is rank-deficient", r + 1),
                condition,
            ));
        }
        conditions.push(condition);

        let rhs: Vec<f64> = (0..n_cols).map(|i| rf[(i, n_cols)]).collect();
        let mut x = back_substitute(&rf, &rhs);
        for (xi, s) in x.iter_mut().zip(&scales) {
            *xi *= s;
        }
        for (j, c) in expand_coefficients(poles, &x[..n]).into_iter().enumerate() {
            residues[[r, j]] = c;
        }
        let mut col = n;
        if cfg.include_d {
            d_terms[r] = Complex64::new(x[col], 0.0);
            col += 1;
        }
        if cfg.include_e {
            e_terms[r] = Complex64::new(x[col], 0.0);
        }
    }

    Ok((
        RationalModel {
            poles: poles.clone(),
            residues,
            d_terms,
            e_terms,
            row_to_output: data.row_to_output().to_vec(),
            stacking: data.kind(),
            source_inputs: data.source_inputs(),
        },
        conditions,
    ))
}
