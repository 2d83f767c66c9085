use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::beam::fft_grid;
use crate::error::{Error, Result};
use crate::frf::FrfTensor;
use crate::io::fmt_f64;

/// One-sided periodogram `|X_k|² / (fs·n)` per channel on bins 1..=n/2.
pub fn periodogram(data: &Array2<f64>, fs_hz: f64) -> Result<(Vec<f64>, Array2<f64>)> {
    let (n_ch, n) = data.dim();
    if n < 2 || n_ch == 0 {
        return Err(Error::precondition("periodogram needs at least one channel of 2 samples"));
    }
    let grid = fft_grid(fs_hz, n);
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut out = Array2::zeros((n_ch, grid.len()));
    for (c, row) in data.rows().into_iter().enumerate() {
        let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.process(&mut buf);
        for k in 0..grid.len() {
            out[(c, k)] = buf[k + 1].norm_sqr() / (fs_hz * n as f64);
        }
    }
    Ok((grid, out))
}

/// `|H|²` of every channel, output-major, as a PSD proxy.
pub fn frf_power(t: &FrfTensor) -> Array2<f64> {
    let mut out = Array2::zeros((t.n_out() * t.n_in(), t.n_freq()));
    for o in 0..t.n_out() {
        for i in 0..t.n_in() {
            let row = o * t.n_in() + i;
            for (k, v) in t.channel(o, i).iter().enumerate() {
                out[(row, k)] = v.norm_sqr();
            }
        }
    }
    out
}

fn write_anpsd_rows<W: Write>(freq: &[f64], anpsd: &Array1<f64>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "freq_hz,anpsd")?;
    for (f, v) in freq.iter().zip(anpsd) {
        writeln!(w, "{},{}", fmt_f64(*f), fmt_f64(*v))?;
    }
    w.flush()
}

fn write_psd_rows<W: Write>(freq: &[f64], psd: &Array2<f64>, mut w: W) -> std::io::Result<()> {
    write!(w, "freq_hz")?;
    for c in 0..psd.nrows() {
        write!(w, ",ch_{}", c + 1)?;
    }
    writeln!(w)?;
    for (k, f) in freq.iter().enumerate() {
        write!(w, "{}", fmt_f64(*f))?;
        for c in 0..psd.nrows() {
            write!(w, ",{}", fmt_f64(psd[(c, k)]))?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn write_anpsd_csv(freq: &[f64], anpsd: &Array1<f64>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_anpsd_rows(freq, anpsd, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Wide layout: `freq_hz,ch_1,…,ch_n`.
pub fn write_psd_csv(freq: &[f64], psd: &Array2<f64>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_psd_rows(freq, psd, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
