use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::modal::{mac, ModalSet};

/// Default pairing tolerance, percent of the reference frequency.
pub const DEFAULT_F_TOL_PCT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ModePair {
    pub a: usize,
    pub b: usize,
    pub f_a: f64,
    pub f_b: f64,
    /// `(f_b − f_a) / f_a`, percent.
    pub df_pct: f64,
    pub zeta_a: f64,
    pub zeta_b: f64,
    /// `ζ_b − ζ_a`.
    pub dzeta: f64,
    /// NaN when the shapes are not comparable (length mismatch, zero vector).
    pub mac: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Comparison {
    pub pairs: Vec<ModePair>,
    pub unpaired_a: Vec<usize>,
    pub unpaired_b: Vec<usize>,
}

impl Comparison {
    /// Pair whose reference side is mode `a`.
    pub fn pair_for_a(&self, a: usize) -> Option<&ModePair> {
        self.pairs.iter().find(|p| p.a == a)
    }
}

/// One-to-one pairing by nearest relative frequency, closest pairs first.
/// Candidates farther apart than `f_tol_pct` percent of `f_a` stay unpaired.
pub fn compare_modes(a: &ModalSet, b: &ModalSet, f_tol_pct: f64) -> Result<Comparison> {
    if !(f_tol_pct.is_finite() && f_tol_pct >= 0.0) {
        return Err(Error::precondition(format!("frequency tolerance must be >= 0, got {f_tol_pct}")));
    }
    let (ma, mb) = (a.modes(), b.modes());
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, x) in ma.iter().enumerate() {
        for (j, y) in mb.iter().enumerate() {
            let rel = (y.f_hz - x.f_hz).abs() / x.f_hz * 100.0;
            if rel <= f_tol_pct {
                cands.push((rel, i, j));
            }
        }
    }
    cands.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut used_a = vec![false; ma.len()];
    let mut used_b = vec![false; mb.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in cands {
        if used_a[i] || used_b[j] {
            continue;
        }
        used_a[i] = true;
        used_b[j] = true;
        let (x, y) = (&ma[i], &mb[j]);
        pairs.push(ModePair {
            a: i,
            b: j,
            f_a: x.f_hz,
            f_b: y.f_hz,
            df_pct: (y.f_hz - x.f_hz) / x.f_hz * 100.0,
            zeta_a: x.zeta,
            zeta_b: y.zeta,
            dzeta: y.zeta - x.zeta,
            mac: mac(&x.shape, &y.shape).unwrap_or(f64::NAN),
        });
    }
    pairs.sort_by_key(|p| p.a);
    Ok(Comparison {
        pairs,
        unpaired_a: (0..ma.len()).filter(|&i| !used_a[i]).collect(),
        unpaired_b: (0..mb.len()).filter(|&j| !used_b[j]).collect(),
    })
}

fn write_rows<W: Write>(c: &Comparison, a: &ModalSet, b: &ModalSet, mut w: W) -> std::io::Result<()> {
    writeln!(w, "status,idx_a,idx_b,f_a_hz,f_b_hz,df_pct,zeta_a,zeta_b,dzeta,mac")?;
    for p in &c.pairs {
        writeln!(
            w,
            "paired,{},{},{},{},{},{},{},{},{}",
            p.a + 1,
            p.b + 1,
            fmt_f64(p.f_a),
            fmt_f64(p.f_b),
            fmt_f64(p.df_pct),
            fmt_f64(p.zeta_a),
            fmt_f64(p.zeta_b),
            fmt_f64(p.dzeta),
            fmt_f64(p.mac)
        )?;
    }
    for &i in &c.unpaired_a {
        let m = &a.modes()[i];
        writeln!(w, "only_a,{},,{},,,{},,,", i + 1, fmt_f64(m.f_hz), fmt_f64(m.zeta))?;
    }
    for &j in &c.unpaired_b {
        let m = &b.modes()[j];
        writeln!(w, "only_b,,{},,{},,,{},,", j + 1, fmt_f64(m.f_hz), fmt_f64(m.zeta))?;
    }
    w.flush()
}

pub fn write_comparison_csv_to<W: Write>(c: &Comparison, a: &ModalSet, b: &ModalSet, w: W) -> std::io::Result<()> {
    write_rows(c, a, b, w)
}

pub fn write_comparison_csv(c: &Comparison, a: &ModalSet, b: &ModalSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(c, a, b, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
