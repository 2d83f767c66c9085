use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::modes::{mac, model_to_modal, ModalSet, Mode, Provenance};
use crate::engine::{fit_frf, FitConfig};
use crate::error::{Error, Result};
use crate::frf::StackedFrf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub df_max_hz: f64,
    pub dzeta_max: f64,
    pub mac_min: f64,
}

impl Default for Criteria {
    fn default() -> Self {
        Self {
            df_max_hz: 1.0,
            dzeta_max: 0.05,
            mac_min: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StabilityFlags {
    pub freq_stable: bool,
    pub damp_stable: bool,
    pub shape_stable: bool,
}

impl StabilityFlags {
    pub fn all(&self) -> bool {
        self.freq_stable && self.damp_stable && self.shape_stable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabEntry {
    pub order: usize,
    pub mode: Mode,
    pub flags: StabilityFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationDiagram {
    pub entries: Vec<StabEntry>,
    pub criteria: Criteria,
    pub orders: Vec<usize>,
}

fn shape_mac(a: &Mode, b: &Mode) -> f64 {
    mac(&a.shape, &b.shape).unwrap_or(0.0)
}

/// Predecessor of `m`: nearest frequency, ties to the higher MAC.
fn nearest<'a>(m: &Mode, previous: &'a [Mode]) -> Option<&'a Mode> {
    previous.iter().min_by(|a, b| {
        let da = (a.f_hz - m.f_hz).abs();
        let db = (b.f_hz - m.f_hz).abs();
        da.total_cmp(&db)
            .then_with(|| shape_mac(b, m).total_cmp(&shape_mac(a, m)))
    })
}

impl StabilizationDiagram {
    /// Flags each candidate against its nearest-frequency candidate at the
    /// preceding order. Candidates at the first order have no predecessor
    /// and are never stable.
    pub fn from_modal_sets(sets: &[(usize, ModalSet)], criteria: Criteria) -> Self {
        let mut entries = Vec::new();
        let mut previous: &[Mode] = &[];
        for (order, set) in sets {
            for m in set.modes() {
                let flags = match nearest(m, previous) {
                    Some(p) => StabilityFlags {
                        freq_stable: (m.f_hz - p.f_hz).abs() < criteria.df_max_hz,
                        damp_stable: (m.zeta - p.zeta).abs() < criteria.dzeta_max,
                        shape_stable: shape_mac(m, p) > criteria.mac_min,
                    },
                    None => StabilityFlags::default(),
                };
                entries.push(StabEntry {
                    order: *order,
                    mode: m.clone(),
                    flags,
                });
            }
            previous = set.modes();
        }
        Self {
            entries,
            criteria,
            orders: sets.iter().map(|(o, _)| *o).collect(),
        }
    }
}

/// Fits every order (concurrently) and flags the candidates. Candidates
/// outside the data band are discarded before flagging.
pub fn build_stabilization(
    data: &StackedFrf,
    orders: &[usize],
    cfg: &FitConfig,
    criteria: Criteria,
) -> Result<StabilizationDiagram> {
    if orders.len() < 2 {
        return Err(Error::precondition("a stabilization sweep needs at least 2 orders"));
    }
    if orders.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::precondition("stabilization orders must be strictly ascending"));
    }
    let freq = data.freq_hz();
    let (f_lo, f_hi) = (freq[0], freq[freq.len() - 1]);
    let sets = orders
        .par_iter()
        .map(|&order| {
            let mut c = cfg.clone();
            c.order = order;
            fit_frf(data, &c)
                .map(|(m, _)| (order, model_to_modal(&m).within_band(f_lo, f_hi)))
                .map_err(|e| e.at_order(order))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilizationDiagram::from_modal_sets(&sets, criteria))
}

struct Cluster {
    members: Vec<usize>,
    f_sum: f64,
    centroid: Vec<Complex64>,
}

impl Cluster {
    fn mean_f(&self) -> f64 {
        self.f_sum / self.members.len() as f64
    }
}

/// Adds `shape` to `acc` after rotating it onto the phase of `acc`.
fn accumulate(acc: &mut [Complex64], shape: &[Complex64]) {
    let inner: Complex64 = acc.iter().zip(shape).map(|(a, b)| b.conj() * a).sum();
    let rot = if inner.norm() > 0.0 { inner / inner.norm() } else { Complex64::new(1.0, 0.0) };
    for (a, b) in acc.iter_mut().zip(shape) {
        *a += b * rot;
    }
}

/// Groups fully stable candidates by frequency (within `df_max_hz` of the
/// cluster mean) and shape (MAC above `mac_min` to the phase-aligned
/// centroid). Clusters seen at `min_occurrences` distinct orders or more are
/// reported by their median-frequency member.
pub fn select_stable(diag: &StabilizationDiagram, min_occurrences: usize) -> Result<ModalSet> {
    if min_occurrences < 2 {
        return Err(Error::precondition(format!(
            "min_occurrences must be at least 2, got {min_occurrences}"
        )));
    }
    let mut stable: Vec<usize> = (0..diag.entries.len())
        .filter(|&i| diag.entries[i].flags.all())
        .collect();
    stable.sort_by(|&a, &b| {
        let (ea, eb) = (&diag.entries[a], &diag.entries[b]);
        ea.mode.f_hz.total_cmp(&eb.mode.f_hz).then(ea.order.cmp(&eb.order))
    });

    let mut clusters: Vec<Cluster> = Vec::new();
    for i in stable {
        let m = &diag.entries[i].mode;
        let best = clusters
            .iter_mut()
            .filter(|c| (m.f_hz - c.mean_f()).abs() <= diag.criteria.df_max_hz)
            .filter(|c| mac(&c.centroid, &m.shape).is_ok_and(|v| v > diag.criteria.mac_min))
            .min_by(|a, b| (a.mean_f() - m.f_hz).abs().total_cmp(&(b.mean_f() - m.f_hz).abs()));
        match best {
            Some(c) => {
                c.members.push(i);
                c.f_sum += m.f_hz;
                accumulate(&mut c.centroid, &m.shape);
            }
            None => clusters.push(Cluster {
                members: vec![i],
                f_sum: m.f_hz,
                centroid: m.shape.clone(),
            }),
        }
    }

    let mut modes = Vec::new();
    for c in clusters {
        let mut orders: Vec<usize> = c.members.iter().map(|&i| diag.entries[i].order).collect();
        orders.sort_unstable();
        orders.dedup();
        if orders.len() < min_occurrences {
            continue;
        }
        let mut members = c.members.clone();
        members.sort_by(|&a, &b| {
            diag.entries[a].mode.f_hz.total_cmp(&diag.entries[b].mode.f_hz)
        });
        let median = members[(members.len() - 1) / 2];
        let mut mode = diag.entries[median].mode.clone();
        mode.source_orders = orders;
        modes.push(mode);
    }
    Ok(ModalSet::new(
        modes,
        Provenance {
            orders: diag.orders.clone(),
            selection: Some(format!(
                "stable in f/zeta/MAC at >= {min_occurrences} orders; median-frequency member"
            )),
            ..Provenance::default()
        },
    ))
}
