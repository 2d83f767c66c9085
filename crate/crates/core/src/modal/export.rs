//! modes-json v1 and stab-csv v1.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::modes::{ModalSet, Mode, Provenance};
use super::stabilization::StabilizationDiagram;
use crate::error::{Error, Result};
use crate::io::fmt_f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeRecord {
    f_hz: f64,
    zeta: f64,
    shape_re: Vec<f64>,
    shape_im: Vec<f64>,
    source_orders: Vec<usize>,
}

pub fn modes_to_json(set: &ModalSet) -> String {
    let records: Vec<ModeRecord> = set
        .modes()
        .iter()
        .map(|m| ModeRecord {
            f_hz: m.f_hz,
            zeta: m.zeta,
            shape_re: m.shape.iter().map(|c| c.re).collect(),
            shape_im: m.shape.iter().map(|c| c.im).collect(),
            source_orders: m.source_orders.clone(),
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&records).expect("plain records serialize");
    s.push('\n');
    s
}

/// Parses modes-json v1. Poles are rebuilt from `f_hz` and `zeta`.
pub fn modes_from_json(text: &str) -> Result<ModalSet> {
    let records: Vec<ModeRecord> = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    let mut modes = Vec::with_capacity(records.len());
    for (k, r) in records.into_iter().enumerate() {
        if r.shape_re.len() != r.shape_im.len() {
            return Err(Error::invalid(format!(
                "mode {}: shape_re and shape_im differ in length",
                k + 1
            )));
        }
        if !(r.f_hz.is_finite() && r.f_hz > 0.0 && r.zeta.is_finite()) {
            return Err(Error::invalid(format!("mode {}: invalid f_hz or zeta", k + 1)));
        }
        modes.push(Mode {
            pole: Mode::pole_from_parameters(r.f_hz, r.zeta),
            f_hz: r.f_hz,
            zeta: r.zeta,
            shape: r
                .shape_re
                .iter()
                .zip(&r.shape_im)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect(),
            source_orders: r.source_orders,
        });
    }
    Ok(ModalSet::new(modes, Provenance::default()))
}

pub fn write_modes_json(set: &ModalSet, path: &Path) -> Result<()> {
    std::fs::write(path, modes_to_json(set)).map_err(|e| Error::io(path, e))
}

pub fn read_modes_json(path: &Path) -> Result<ModalSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    modes_from_json(&text)
}

pub fn write_stab_csv_to<W: Write>(diag: &StabilizationDiagram, mut w: W) -> std::io::Result<()> {
    writeln!(w, "order,f_hz,zeta,freq_stable,damp_stable,shape_stable")?;
    for e in &diag.entries {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.order,
            fmt_f64(e.mode.f_hz),
            fmt_f64(e.mode.zeta),
            e.flags.freq_stable,
            e.flags.damp_stable,
            e.flags.shape_stable
        )?;
    }
    w.flush()
}

pub fn write_stab_csv(diag: &StabilizationDiagram, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_stab_csv_to(diag, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::stabilization::Criteria;

    fn sample() -> ModalSet {
        let modes = vec![
            Mode::from_pole(
                Complex64::new(-0.9427, 31.4),
                &[Complex64::new(0.1, 0.3), Complex64::new(-2.0, 1e-17)],
                vec![20, 22, 24],
            )
            .unwrap(),
            Mode::from_pole(Complex64::new(-3.1, 71.9), &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], vec![]).unwrap(),
        ];
        ModalSet::new(modes, Provenance::default())
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let set = sample();
        let back = modes_from_json(&modes_to_json(&set)).unwrap();
        assert_eq!(back.len(), set.len());
        for (a, b) in set.modes().iter().zip(back.modes()) {
            assert_eq!(a.f_hz.to_bits(), b.f_hz.to_bits());
            assert_eq!(a.zeta.to_bits(), b.zeta.to_bits());
            assert_eq!(a.shape, b.shape);
            assert_eq!(a.source_orders, b.source_orders);
        }
        assert_eq!(modes_to_json(&back), modes_to_json(&set));
    }

    #[test]
    fn json_field_names() {
        let text = modes_to_json(&sample());
        for key in ["f_hz", "zeta", "shape_re", "shape_im", "source_orders"] {
            assert!(text.contains(&format!("\"{key}\"")));
        }
        assert!(modes_from_json("[{\"f_hz\": 1.0}]").is_err());
    }

    #[test]
    fn stab_csv_layout() {
        let set = sample();
        let diag = StabilizationDiagram::from_modal_sets(&[(10, set.clone()), (12, set)], Criteria::default());
        let mut buf = Vec::new();
        write_stab_csv_to(&diag, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "order,f_hz,zeta,freq_stable,damp_stable,shape_stable");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("10,") && lines[1].ends_with(",false,false,false"));
        assert!(lines[3].starts_with("12,") && lines[3].ends_with(",true,true,true"));
    }
}
