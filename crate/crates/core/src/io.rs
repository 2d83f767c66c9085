//! Text formats: frf-csv v1, th-csv v1 and flat `key=value` config files.
//!
//! Every float is written with 17 significant digits in scientific notation,
//! which round-trips any `f64` exactly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frf::{FrfTensor, UnitKind};

/// Formats a float so that parsing it back yields the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{}'", s.trim())))
}

/// Splits `a=1 b=2` header payloads into pairs.
fn header_pairs(body: &str, line: usize) -> Result<Vec<(&str, &str)>> {
    body.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .ok_or_else(|| parse_err(line, format!("malformed header field '{tok}'")))
        })
        .collect()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

struct FrfHeader {
    n_out: Option<usize>,
    n_in: Option<usize>,
    n_freq: Option<usize>,
    unit: Option<UnitKind>,
    magic: bool,
}

struct Sample {
    freq: f64,
    out: usize,
    inp: usize,
    value: Complex64,
    line: usize,
}

/// Parses frf-csv v1 text. Samples may appear in any order.
pub fn parse_frf_csv<R: BufRead>(reader: R) -> Result<FrfTensor> {
    let mut hdr = FrfHeader {
        n_out: None,
        n_in: None,
        n_freq: None,
        unit: None,
        magic: false,
    };
    let mut samples = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(body) = text.strip_prefix('#') {
            let body = body.trim();
            if body == "frf-csv v1" {
                hdr.magic = true;
            } else if let Some(u) = body.strip_prefix("unit=") {
                hdr.unit = Some(
                    u.trim()
                        .parse()
                        .map_err(|e: Error| parse_err(lineno, e.to_string()))?,
                );
            } else if body.starts_with("n_out=") {
                for (k, v) in header_pairs(body, lineno)? {
                    let n = parse_num::<usize>(v, lineno, k)?;
                    match k {
                        "n_out" => hdr.n_out = Some(n),
                        "n_in" => hdr.n_in = Some(n),
                        "n_freq" => hdr.n_freq = Some(n),
                        _ => return Err(parse_err(lineno, format!("unknown header key '{k}'"))),
                    }
                }
            }
            continue;
        }
        if !hdr.magic {
            return Err(parse_err(lineno, "missing '# frf-csv v1' header"));
        }
        if text == "freq_hz,out_idx,in_idx,re,im" {
            continue;
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_err(
                lineno,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let freq: f64 = parse_num(fields[0], lineno, "frequency")?;
        let out: usize = parse_num(fields[1], lineno, "output index")?;
        let inp: usize = parse_num(fields[2], lineno, "input index")?;
        let re: f64 = parse_num(fields[3], lineno, "real part")?;
        let im: f64 = parse_num(fields[4], lineno, "imaginary part")?;
        if !(freq.is_finite() && re.is_finite() && im.is_finite()) {
            return Err(parse_err(lineno, "NaN or infinite value"));
        }
        if freq <= 0.0 {
            return Err(parse_err(lineno, format!("frequency {freq} is not positive")));
        }
        samples.push(Sample {
            freq,
            out,
            inp,
            value: Complex64::new(re, im),
            line: lineno,
        });
    }

    if !hdr.magic {
        return Err(parse_err(0, "missing '# frf-csv v1' header"));
    }
    let (n_out, n_in, n_freq) = match (hdr.n_out, hdr.n_in, hdr.n_freq) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(parse_err(0, "missing '# n_out=.. n_in=.. n_freq=..' header")),
    };
    let unit = hdr
        .unit
        .ok_or_else(|| parse_err(0, "missing '# unit=..' header"))?;
    if n_out == 0 || n_in == 0 || n_freq < 2 {
        return Err(Error::invalid(format!(
            "invalid dimensions n_out={n_out} n_in={n_in} n_freq={n_freq}"
        )));
    }
    for s in &samples {
        if s.out == 0 || s.out > n_out || s.inp == 0 || s.inp > n_in {
            return Err(parse_err(
                s.line,
                format!("channel ({}, {}) outside {n_out}x{n_in}", s.out, s.inp),
            ));
        }
    }
    let expected = n_out * n_in * n_freq;
    if samples.len() != expected {
        return Err(Error::invalid(format!(
            "incomplete tensor: expected {expected} samples, found {}",
            samples.len()
        )));
    }

    samples.sort_by(|a, b| {
        (a.out, a.inp)
            .cmp(&(b.out, b.inp))
            .then(a.freq.total_cmp(&b.freq))
            .then(a.line.cmp(&b.line))
    });

    let mut values = Array3::zeros((n_out, n_in, n_freq));
    let mut grid: Vec<f64> = Vec::with_capacity(n_freq);
    for chunk in samples.chunk_by(|a, b| (a.out, a.inp) == (b.out, b.inp)) {
        for w in chunk.windows(2) {
            if w[1].freq <= w[0].freq {
                let line = w[0].line.max(w[1].line);
                return Err(Error::invalid(format!(
                    "non-monotone frequency grid at line {line}"
                )));
            }
        }
        let (o, i) = (chunk[0].out, chunk[0].inp);
        if chunk.len() != n_freq {
            return Err(Error::invalid(format!(
                "incomplete tensor: channel ({o}, {i}) has {} of {n_freq} samples",
                chunk.len()
            )));
        }
        if grid.is_empty() {
            grid = chunk.iter().map(|s| s.freq).collect();
        } else if let Some(s) = chunk.iter().zip(&grid).find(|(s, &f)| s.freq != f) {
            return Err(parse_err(
                s.0.line,
                format!("frequency {} of channel ({o}, {i}) is not on the shared grid", s.0.freq),
            ));
        }
        for (k, s) in chunk.iter().enumerate() {
            values[[o - 1, i - 1, k]] = s.value;
        }
    }
    FrfTensor::new(values, grid, unit)
}

pub fn read_frf_csv(path: &Path) -> Result<FrfTensor> {
    parse_frf_csv(open(path)?).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    })
}

/// Writes frf-csv v1, samples ordered by (out, in, freq).
pub fn write_frf_csv_to<W: Write>(t: &FrfTensor, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# frf-csv v1")?;
    writeln!(w, "# n_out={} n_in={} n_freq={}", t.n_out(), t.n_in(), t.n_freq())?;
    writeln!(w, "# unit={}", t.unit())?;
    let freq: Vec<String> = t.freq_hz().iter().map(|&f| fmt_f64(f)).collect();
    for o in 0..t.n_out() {
        for i in 0..t.n_in() {
            for (f, v) in freq.iter().zip(t.channel(o, i)) {
                writeln!(w, "{f},{},{},{},{}", o + 1, i + 1, fmt_f64(v.re), fmt_f64(v.im))?;
            }
        }
    }
    w.flush()
}

pub fn write_frf_csv(t: &FrfTensor, path: &Path) -> Result<()> {
    write_frf_csv_to(t, create(path)?).map_err(|e| Error::io(path, e))
}

/// Whether a th-csv file holds response or excitation channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThKind {
    Output,
    Input,
}

impl ThKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ThKind::Output => "output",
            ThKind::Input => "input",
        }
    }
}

/// Uniformly sampled channels from one th-csv v1 file.
#[derive(Debug, Clone, PartialEq)]
pub struct ThRecord {
    pub fs_hz: f64,
    pub kind: ThKind,
    /// `[n_ch × n_samp]`
    pub data: Array2<f64>,
}

pub fn write_th_csv_to<W: Write>(rec: &ThRecord, mut w: W) -> std::io::Result<()> {
    let (n_ch, n_samp) = rec.data.dim();
    writeln!(w, "# th-csv v1")?;
    writeln!(
        w,
        "# fs_hz={} n_ch={n_ch} n_samp={n_samp} kind={}",
        fmt_f64(rec.fs_hz),
        rec.kind.as_str()
    )?;
    let times: Vec<String> = (0..n_samp).map(|k| fmt_f64(k as f64 / rec.fs_hz)).collect();
    for (c, row) in rec.data.rows().into_iter().enumerate() {
        for (t, v) in times.iter().zip(row) {
            writeln!(w, "{t},{},{}", c + 1, fmt_f64(*v))?;
        }
    }
    w.flush()
}

pub fn write_th_csv(rec: &ThRecord, path: &Path) -> Result<()> {
    write_th_csv_to(rec, create(path)?).map_err(|e| Error::io(path, e))
}

pub fn parse_th_csv<R: BufRead>(reader: R) -> Result<ThRecord> {
    let mut magic = false;
    let mut dims: Option<(f64, usize, usize, ThKind)> = None;
    let mut data: Option<Array2<f64>> = None;
    let mut seen: Option<Array2<bool>> = None;
    let mut count = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(body) = text.strip_prefix('#') {
            let body = body.trim();
            if body == "th-csv v1" {
                magic = true;
            } else if body.starts_with("fs_hz=") {
                let (mut fs, mut n_ch, mut n_samp, mut kind) = (None, None, None, None);
                for (k, v) in header_pairs(body, lineno)? {
                    match k {
                        "fs_hz" => fs = Some(parse_num::<f64>(v, lineno, k)?),
                        "n_ch" => n_ch = Some(parse_num::<usize>(v, lineno, k)?),
                        "n_samp" => n_samp = Some(parse_num::<usize>(v, lineno, k)?),
                        "kind" => {
                            kind = Some(match v {
                                "output" => ThKind::Output,
                                "input" => ThKind::Input,
                                _ => return Err(parse_err(lineno, format!("unknown kind '{v}'"))),
                            })
                        }
                        _ => return Err(parse_err(lineno, format!("unknown header key '{k}'"))),
                    }
                }
                match (fs, n_ch, n_samp, kind) {
                    (Some(fs), Some(c), Some(n), Some(k)) if fs > 0.0 && fs.is_finite() => {
                        dims = Some((fs, c, n, k));
                        data = Some(Array2::zeros((c, n)));
                        seen = Some(Array2::from_elem((c, n), false));
                    }
                    _ => return Err(parse_err(lineno, "incomplete or invalid th-csv header")),
                }
            }
            continue;
        }
        if !magic {
            return Err(parse_err(lineno, "missing '# th-csv v1' header"));
        }
        if text == "t_s,ch_idx,value" {
            continue;
        }
        let (fs, n_ch, n_samp, _) =
            dims.ok_or_else(|| parse_err(lineno, "data before the fs_hz header"))?;
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let t: f64 = parse_num(fields[0], lineno, "time")?;
        let ch: usize = parse_num(fields[1], lineno, "channel index")?;
        let v: f64 = parse_num(fields[2], lineno, "value")?;
        if !(t.is_finite() && v.is_finite()) {
            return Err(parse_err(lineno, "NaN or infinite value"));
        }
        if ch == 0 || ch > n_ch {
            return Err(parse_err(lineno, format!("channel {ch} outside 1..={n_ch}")));
        }
        let k = (t * fs).round();
        if k < 0.0 || k >= n_samp as f64 || (t * fs - k).abs() > 1e-6 {
            return Err(parse_err(lineno, format!("time {t} is not on the sample grid")));
        }
        let k = k as usize;
        let seen = seen.as_mut().expect("allocated with header");
        if seen[[ch - 1, k]] {
            return Err(parse_err(lineno, format!("duplicate sample for channel {ch}")));
        }
        seen[[ch - 1, k]] = true;
        data.as_mut().expect("allocated with header")[[ch - 1, k]] = v;
        count += 1;
    }

    let (fs_hz, n_ch, n_samp, kind) = match (magic, dims) {
        (true, Some(d)) => d,
        _ => return Err(parse_err(0, "missing th-csv v1 header")),
    };
    if count != n_ch * n_samp {
        return Err(Error::invalid(format!(
            "incomplete time history: expected {} samples, found {count}",
            n_ch * n_samp
        )));
    }
    Ok(ThRecord {
        fs_hz,
        kind,
        data: data.expect("allocated with header"),
    })
}

pub fn read_th_csv(path: &Path) -> Result<ThRecord> {
    parse_th_csv(open(path)?)
}

/// Flat `key=value` file; `#` starts a comment. Keys map to (value, line).
pub fn parse_kv<R: BufRead>(reader: R) -> Result<BTreeMap<String, (String, usize)>> {
    let mut out = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| parse_err(lineno, format!("expected key=value, found '{text}'")))?;
        let k = k.trim().to_string();
        if k.is_empty() {
            return Err(parse_err(lineno, "empty key"));
        }
        if out.insert(k.clone(), (v.trim().to_string(), lineno)).is_some() {
            return Err(parse_err(lineno, format!("duplicate key '{k}'")));
        }
    }
    Ok(out)
}

pub fn read_kv(path: &Path) -> Result<BTreeMap<String, (String, usize)>> {
    parse_kv(open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<FrfTensor> {
        parse_frf_csv(text.as_bytes())
    }

    const GOOD: &str = "# frf-csv v1\n# n_out=2 n_in=1 n_freq=3\n# unit=mobility\n\
        2.0,2,1,0.5,-1\n1.0,1,1,1,0\n2.0,1,1,2,0\n3.0,1,1,3,0\n1.0,2,1,0.25,0\n3.0,2,1,1e-3,7\n";

    #[test]
    fn reads_unordered_file() {
        let t = parse(GOOD).unwrap();
        assert_eq!(t.values().dim(), (2, 1, 3));
        assert_eq!(t.freq_hz(), &[1.0, 2.0, 3.0]);
        assert_eq!(t.unit(), UnitKind::Mobility);
        assert_eq!(t.values()[[1, 0, 1]], Complex64::new(0.5, -1.0));
        assert_eq!(t.values()[[1, 0, 2]], Complex64::new(1e-3, 7.0));
    }

    #[test]
    fn missing_sample_is_reported() {
        let text = GOOD.replace("3.0,2,1,1e-3,7\n", "");
        let err = parse(&text).unwrap_err();
        assert_eq!(err.to_string(), "incomplete tensor: expected 6 samples, found 5");
    }

    #[test]
    fn duplicate_frequency_is_non_monotone() {
        let text = "# frf-csv v1\n# n_out=1 n_in=1 n_freq=3\n# unit=receptance\n\
            10,1,1,1,0\n10,1,1,1,0\n20,1,1,1,0\n";
        let err = parse(text).unwrap_err();
        assert_eq!(err.to_string(), "non-monotone frequency grid at line 5");
    }

    #[test]
    fn rejects_nan_and_bad_index() {
        let text = GOOD.replace("0.25,0", "NaN,0");
        assert!(matches!(parse(&text), Err(Error::Parse { line: 8, .. })));
        let text = GOOD.replace("3.0,2,1", "3.0,3,1");
        assert!(parse(&text).is_err());
        assert!(parse("1.0,1,1,1,0\n").is_err());
    }

    #[test]
    fn write_read_is_bit_exact() {
        let values = Array3::from_shape_fn((2, 2, 4), |(i, j, k)| {
            Complex64::new(
                (i as f64 + 0.1).powi(7) / 3.0 * (k as f64 + 1.0).sqrt(),
                -std::f64::consts::PI * 1e-300 * (j as f64 + 1.0),
            )
        });
        let freq = vec![0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e5 + 1e-9];
        let t = FrfTensor::new(values, freq, UnitKind::Inertance).unwrap();
        let mut buf = Vec::new();
        write_frf_csv_to(&t, &mut buf).unwrap();
        let back = parse_frf_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# frf-csv v1\n# n_out=2 n_in=2 n_freq=4\n# unit=inertance\n"));
        assert!(text.contains("\n1.0000000000000001e-1,1,1,"));
    }

    #[test]
    fn th_round_trip() {
        let data = Array2::from_shape_fn((2, 5), |(c, k)| (c as f64 - 0.3) * (k as f64).exp());
        let rec = ThRecord {
            fs_hz: 1000.0,
            kind: ThKind::Input,
            data,
        };
        let mut buf = Vec::new();
        write_th_csv_to(&rec, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("# fs_hz=1.0000000000000000e3 n_ch=2 n_samp=5 kind=input"));
        assert_eq!(parse_th_csv(buf.as_slice()).unwrap(), rec);
    }

    #[test]
    fn kv_parsing() {
        let kv = parse_kv("# beam\nlength_m = 2.5\n\nn_elem=8 # finer\n".as_bytes()).unwrap();
        assert_eq!(kv["length_m"], ("2.5".to_string(), 2));
        assert_eq!(kv["n_elem"].0, "8");
        assert!(parse_kv("a=1\na=2\n".as_bytes()).is_err());
        assert!(parse_kv("novalue\n".as_bytes()).is_err());
    }
}
