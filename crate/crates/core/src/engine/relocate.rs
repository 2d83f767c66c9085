use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::Serialize;

use super::fit::FitConfig;
use super::lsq::{normalize_columns, r_factor, solve_min_norm};
use super::model::laplace;
use super::poles::{PoleSet, PoleTerm};
use super::weights::row_weights;
use crate::error::{Error, Result};
use crate::frf::StackedFrf;

/// Smallest admissible magnitude of the relaxed sigma constant.
pub const SIGMA_CONST_GUARD: f64 = 1e-8;

/// Sigma function `σ(s) = Σ_n c̃_n/(s - a_n) + d̃` found by one relocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaEstimate {
    /// `c̃_n` per pole, in `PoleSet::poles()` order.
    pub sigma_residues: Vec<Complex64>,
    /// `d̃`, after the guard (fixed at 1 without relaxation).
    pub sigma_const: f64,
    /// Whether `|d̃|` fell below the guard and was clamped.
    pub guarded: bool,
    /// Ratio of extreme singular values of the equilibrated reduced system.
    pub condition: f64,
    pub rank: usize,
    /// Row scale of the relaxation constraint, `‖W∘F‖_F / N_freq`.
    pub relaxation_scale: f64,
}

/// Inputs shared by every iteration of one fit.
pub(crate) struct Prepared {
    pub s: Vec<Complex64>,
    pub weights: Vec<Array1<f64>>,
}

impl Prepared {
    pub fn new(data: &StackedFrf, cfg: &FitConfig) -> Result<Self> {
        let weights = data
            .rows()
            .rows()
            .into_iter()
            .enumerate()
            .map(|(r, row)| {
                row_weights(row, cfg.weighting)
                    .map_err(|e| Error::precondition(format!("row {}: {e}", r + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            s: laplace(data.freq_hz()),
            weights,
        })
    }
}

/// Writes `values` into column `col` of the real-stacked matrix: real parts
/// in the top half, imaginary parts in the bottom half.
fn put_column(a: &mut DMatrix<f64>, col: usize, values: impl Iterator<Item = Complex64>) {
    let k = a.nrows() / 2;
    for (i, v) in values.enumerate() {
        a[(i, col)] = v.re;
        a[(k + i, col)] = v.im;
    }
}

/// Expands real basis coefficients to one complex coefficient per pole.
pub(crate) fn expand_coefficients(poles: &PoleSet, x: &[f64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(poles.order());
    let mut col = 0;
    for t in poles.terms() {
        match t {
            PoleTerm::Real(_) => {
                out.push(Complex64::new(x[col], 0.0));
                col += 1;
            }
            PoleTerm::Pair(_) => {
                let c = Complex64::new(x[col], x[col + 1]);
                out.push(c);
                out.push(c.conj());
                col += 2;
            }
        }
    }
    out
}

/// Sigma-coupled block of the R factor for one row: rows and columns of the
/// triangular factor belonging to the `N + 1` sigma unknowns.
fn sigma_block(
    phi: &Array2<Complex64>,
    s: &[Complex64],
    f: ndarray::ArrayView1<'_, Complex64>,
    w: &Array1<f64>,
    cfg: &FitConfig,
) -> DMatrix<f64> {
    let (k, n) = phi.dim();
    let n_num = n + usize::from(cfg.include_d) + usize::from(cfg.include_e);
    let n_cols = n_num + n + 1;
    let mut a = DMatrix::zeros(2 * k, n_cols);
    for j in 0..n {
        put_column(&mut a, j, (0..k).map(|i| phi[[i, j]] * w[i]));
        put_column(&mut a, n_num + j, (0..k).map(|i| -phi[[i, j]] * f[i] * w[i]));
    }
    let mut col = n;
    if cfg.include_d {
        put_column(&mut a, col, (0..k).map(|i| Complex64::new(w[i], 0.0)));
        col += 1;
    }
    if cfg.include_e {
        put_column(&mut a, col, (0..k).map(|i| s[i] * w[i]));
    }
    put_column(&mut a, n_num + n, (0..k).map(|i| -f[i] * w[i]));

    let scales = normalize_columns(&mut a);
    let r = r_factor(a);
    let top = n_num.min(r.nrows());
    let rows = r.nrows() - top;
    let mut block = r.view((top, n_num), (rows, n + 1)).into_owned();
    for (j, mut c) in block.column_iter_mut().enumerate() {
        c /= scales[n_num + j];
    }
    block
}

/// One relaxed, QR-accelerated vector-fitting step. Returns the zeros of
/// the fitted sigma function as the new pole set (not yet stabilized).
pub fn pole_relocation_step(
    data: &StackedFrf,
    poles: &PoleSet,
    cfg: &FitConfig,
) -> Result<(PoleSet, SigmaEstimate)> {
    let prep = Prepared::new(data, cfg)?;
    relocate(data, poles, cfg, &prep)
}

pub(crate) fn relocate(
    data: &StackedFrf,
    poles: &PoleSet,
    cfg: &FitConfig,
    prep: &Prepared,
) -> Result<(PoleSet, SigmaEstimate)> {
    let n = poles.order();
    let k = data.n_freq();
    let phi = poles.basis(&prep.s);

    let mut blocks = Vec::with_capacity(data.n_rows());
    for (r, f) in data.rows().rows().into_iter().enumerate() {
        blocks.push(sigma_block(&phi, &prep.s, f, &prep.weights[r], cfg));
    }
    let block_rows: usize = blocks.iter().map(|b| b.nrows()).sum();

    let scale = data
        .rows()
        .rows()
        .into_iter()
        .zip(&prep.weights)
        .map(|(f, w)| f.iter().zip(w).map(|(v, wk)| (v * wk).norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
        / k as f64;

    let n_unknowns = if cfg.relax { n + 1 } else { n };
    let total_rows = block_rows + usize::from(cfg.relax);
    if total_rows < n_unknowns {
        return Err(Error::numerical(
            format!("reduced pole system has {total_rows} equations for {n_unknowns} unknowns"),
            f64::INFINITY,
        ));
    }
    let mut a = DMatrix::zeros(total_rows, n_unknowns);
    let mut b = DVector::zeros(total_rows);
    let mut row = 0;
    for blk in &blocks {
        for i in 0..blk.nrows() {
            for j in 0..n_unknowns {
                a[(row, j)] = blk[(i, j)];
            }
            if !cfg.relax {
                b[row] = -blk[(i, n)];
            }
            row += 1;
        }
    }
    if cfg.relax {
        for j in 0..n {
            a[(row, j)] = scale * phi.column(j).iter().map(|v| v.re).sum::<f64>();
        }
        a[(row, n)] = scale * k as f64;
        b[row] = scale * k as f64;
    }

    let sol = solve_min_norm(a, &b).ok_or_else(|| {
        Error::numerical("reduced pole system is identically zero", f64::INFINITY)
    })?;
    let x = sol.x;
    let (mut d, mut guarded) = (1.0, false);
    if cfg.relax {
        d = x[n];
        if d.abs() < SIGMA_CONST_GUARD {
            d = if d < 0.0 { -SIGMA_CONST_GUARD } else { SIGMA_CONST_GUARD };
            guarded = true;
        }
    }
    let c: Vec<f64> = x.iter().take(n).copied().collect();

    let (mut am, bv) = poles.state_space();
    for i in 0..n {
        for j in 0..n {
            am[(i, j)] -= bv[i] * c[j] / d;
        }
    }
    let zeros: Vec<Complex64> = am.complex_eigenvalues().iter().copied().collect();
    let new_poles = PoleSet::from_real_spectrum(&zeros)
        .map_err(|_| Error::numerical("relocated poles are not conjugate-closed", sol.condition))?;

    Ok((
        new_poles,
        SigmaEstimate {
            sigma_residues: expand_coefficients(poles, &c),
            sigma_const: d,
            guarded,
            condition: sol.condition,
            rank: sol.rank,
            relaxation_scale: if cfg.relax { scale } else { 0.0 },
        },
    ))
}
