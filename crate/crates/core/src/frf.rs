//! FRF data model: 3-D measurement tensors, band truncation, repetition
//! averaging, and the transforms that turn a tensor into the 2-D row array
//! the fitting engine consumes.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, Array3, ArrayView1, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical quantity measured at the outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    /// Displacement per force, m/N.
    Receptance,
    /// Velocity per force, m s⁻¹/N.
    Mobility,
    /// Acceleration per force, m s⁻²/N.
    Inertance,
}

impl UnitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitKind::Receptance => "receptance",
            UnitKind::Mobility => "mobility",
            UnitKind::Inertance => "inertance",
        }
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UnitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "receptance" => Ok(UnitKind::Receptance),
            "mobility" => Ok(UnitKind::Mobility),
            "inertance" => Ok(UnitKind::Inertance),
            other => Err(Error::invalid(format!("unknown unit kind '{other}'"))),
        }
    }
}

fn check_grid(freq_hz: &[f64], min_len: usize) -> Result<()> {
    if freq_hz.len() < min_len {
        return Err(Error::invalid(format!(
            "frequency grid needs at least {min_len} samples, got {}",
            freq_hz.len()
        )));
    }
    for (k, &f) in freq_hz.iter().enumerate() {
        if !f.is_finite() || f <= 0.0 {
            return Err(Error::invalid(format!(
                "frequency {f} at index {k} is not a positive finite value"
            )));
        }
    }
    if let Some(k) = freq_hz.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "non-monotone frequency grid at index {}",
            k + 1
        )));
    }
    Ok(())
}

/// Complex FRF samples `H_ij(s_k)` indexed `[output, input, frequency]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrfTensor {
    values: Array3<Complex64>,
    freq_hz: Vec<f64>,
    unit: UnitKind,
}

impl FrfTensor {
    pub fn new(values: Array3<Complex64>, freq_hz: Vec<f64>, unit: UnitKind) -> Result<Self> {
        let (n_out, n_in, n_freq) = values.dim();
        if n_out == 0 || n_in == 0 {
            return Err(Error::invalid("tensor needs at least one output and one input"));
        }
        if n_freq != freq_hz.len() {
            return Err(Error::invalid(format!(
                "tensor has {n_freq} frequency samples but grid has {}",
                freq_hz.len()
            )));
        }
        check_grid(&freq_hz, 2)?;
        if let Some(((i, j, k), _)) = values
            .indexed_iter()
            .find(|(_, v)| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::invalid(format!(
                "non-finite FRF value at output {}, input {}, frequency index {k}",
                i + 1,
                j + 1
            )));
        }
        Ok(Self {
            values,
            freq_hz,
            unit,
        })
    }

    pub fn values(&self) -> &Array3<Complex64> {
        &self.values
    }

    pub fn freq_hz(&self) -> &[f64] {
        &self.freq_hz
    }

    pub fn unit(&self) -> UnitKind {
        self.unit
    }

    pub fn n_out(&self) -> usize {
        self.values.dim().0
    }

    pub fn n_in(&self) -> usize {
        self.values.dim().1
    }

    pub fn n_freq(&self) -> usize {
        self.freq_hz.len()
    }

    /// The SISO channel between output `out` and input `inp` (0-based).
    pub fn channel(&self, out: usize, inp: usize) -> ArrayView1<'_, Complex64> {
        self.values.slice(s![out, inp, ..])
    }

    /// Multiplies every sample by `scale`.
    pub fn scaled(&self, scale: Complex64) -> Self {
        Self {
            values: self.values.mapv(|v| v * scale),
            freq_hz: self.freq_hz.clone(),
            unit: self.unit,
        }
    }
}

/// How a [`StackedFrf`] was produced from its source tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackingKind {
    Superposed,
    UpperTriangular,
    Passthrough,
}

impl StackingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StackingKind::Superposed => "superposed",
            StackingKind::UpperTriangular => "upper_triangular",
            StackingKind::Passthrough => "passthrough",
        }
    }
}

/// 2-D array of complex rows sharing one frequency grid; the fitting target.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedFrf {
    rows: Array2<Complex64>,
    freq_hz: Vec<f64>,
    row_to_output: Vec<usize>,
    source_inputs: usize,
    kind: StackingKind,
}

impl StackedFrf {
    pub fn new(
        rows: Array2<Complex64>,
        freq_hz: Vec<f64>,
        row_to_output: Vec<usize>,
        source_inputs: usize,
        kind: StackingKind,
    ) -> Result<Self> {
        let (n_rows, n_freq) = rows.dim();
        if n_rows == 0 {
            return Err(Error::invalid("stacked FRF needs at least one row"));
        }
        if n_freq != freq_hz.len() {
            return Err(Error::invalid(format!(
                "stacked rows have {n_freq} samples but grid has {}",
                freq_hz.len()
            )));
        }
        if row_to_output.len() != n_rows {
            return Err(Error::invalid("row_to_output length differs from row count"));
        }
        check_grid(&freq_hz, 1)?;
        if rows.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid("non-finite value in stacked FRF"));
        }
        if kind == StackingKind::Superposed
            && row_to_output.iter().enumerate().any(|(r, &o)| r != o)
        {
            return Err(Error::invalid("superposed stacking requires the identity row map"));
        }
        Ok(Self {
            rows,
            freq_hz,
            row_to_output,
            source_inputs,
            kind,
        })
    }

    /// Rows treated as independent channels (one output each, one input).
    pub fn from_rows(rows: Array2<Complex64>, freq_hz: Vec<f64>) -> Result<Self> {
        let n = rows.nrows();
        Self::new(rows, freq_hz, (0..n).collect(), 1, StackingKind::Superposed)
    }

    pub fn rows(&self) -> &Array2<Complex64> {
        &self.rows
    }

    pub fn freq_hz(&self) -> &[f64] {
        &self.freq_hz
    }

    pub fn row_to_output(&self) -> &[usize] {
        &self.row_to_output
    }

    /// Input count J of the source tensor.
    pub fn source_inputs(&self) -> usize {
        self.source_inputs
    }

    pub fn kind(&self) -> StackingKind {
        self.kind
    }

    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_freq(&self) -> usize {
        self.freq_hz.len()
    }

    pub fn scaled(&self, scale: Complex64) -> Self {
        Self {
            rows: self.rows.mapv(|v| v * scale),
            ..self.clone()
        }
    }

    /// Same stacking restricted to `f_min ≤ f ≤ f_max`.
    pub fn truncated(&self, f_min: f64, f_max: f64) -> Result<Self> {
        let (lo, hi) = band_indices(&self.freq_hz, f_min, f_max)?;
        Ok(Self {
            rows: self.rows.slice(s![.., lo..hi]).to_owned(),
            freq_hz: self.freq_hz[lo..hi].to_vec(),
            ..self.clone()
        })
    }
}

fn band_indices(freq_hz: &[f64], f_min: f64, f_max: f64) -> Result<(usize, usize)> {
    if !(f_min < f_max) {
        return Err(Error::precondition(format!(
            "band requires f_min < f_max, got [{f_min}, {f_max}]"
        )));
    }
    let lo = freq_hz.partition_point(|&f| f < f_min);
    let hi = freq_hz.partition_point(|&f| f <= f_max);
    match hi.saturating_sub(lo) {
        0 => Err(Error::precondition(format!("no samples in [{f_min}, {f_max}]"))),
        1 => Err(Error::precondition(format!(
            "only one sample in [{f_min}, {f_max}]; at least 2 required"
        ))),
        _ => Ok((lo, hi)),
    }
}

/// Restricts the tensor to `f_min ≤ f ≤ f_max` (both ends inclusive).
pub fn truncate_band(t: &FrfTensor, f_min: f64, f_max: f64) -> Result<FrfTensor> {
    let (lo, hi) = band_indices(&t.freq_hz, f_min, f_max)?;
    Ok(FrfTensor {
        values: t.values.slice(s![.., .., lo..hi]).to_owned(),
        freq_hz: t.freq_hz[lo..hi].to_vec(),
        unit: t.unit,
    })
}

/// Element-wise complex mean of repeated measurements.
pub fn average_repetitions(reps: &[FrfTensor]) -> Result<FrfTensor> {
    let first = reps
        .first()
        .ok_or_else(|| Error::precondition("cannot average an empty repetition list"))?;
    for (k, r) in reps.iter().enumerate().skip(1) {
        if r.values.dim() != first.values.dim() {
            return Err(Error::precondition(format!(
                "repetition {k} has shape {:?}, expected {:?}",
                r.values.dim(),
                first.values.dim()
            )));
        }
        if r.freq_hz != first.freq_hz {
            return Err(Error::precondition(format!(
                "repetition {k} has a different frequency grid"
            )));
        }
        if r.unit != first.unit {
            return Err(Error::precondition(format!(
                "repetition {k} is {} but repetition 0 is {}",
                r.unit, first.unit
            )));
        }
    }
    let mut sum = first.values.clone();
    for r in &reps[1..] {
        sum += &r.values;
    }
    let n = reps.len() as f64;
    sum.mapv_inplace(|v| v / n);
    Ok(FrfTensor {
        values: sum,
        freq_hz: first.freq_hz.clone(),
        unit: first.unit,
    })
}

/// Input-superposition stacking: row `i` is `Σ_j H_ij`, the FRF to a virtual
/// input driving all physical inputs with unit amplitude and equal phase.
pub fn stack_superposed(t: &FrfTensor) -> StackedFrf {
    let rows = t.values.sum_axis(Axis(1));
    StackedFrf {
        rows,
        freq_hz: t.freq_hz.clone(),
        row_to_output: (0..t.n_out()).collect(),
        source_inputs: t.n_in(),
        kind: StackingKind::Superposed,
    }
}

/// Conventional square-system stacking: lower-triangle channels `(row, col)`
/// with `row ≥ col`, column-major. Only valid under reciprocity.
pub fn stack_upper_triangular(t: &FrfTensor) -> Result<StackedFrf> {
    let n = t.n_out();
    if n != t.n_in() {
        return Err(Error::precondition(
            "upper-triangular stacking requires N_out = N_in",
        ));
    }
    let n_rows = n * (n + 1) / 2;
    let mut rows = Array2::zeros((n_rows, t.n_freq()));
    let mut row_to_output = Vec::with_capacity(n_rows);
    let mut r = 0;
    for col in 0..n {
        for row in col..n {
            rows.row_mut(r).assign(&t.channel(row, col));
            row_to_output.push(row);
            r += 1;
        }
    }
    Ok(StackedFrf {
        rows,
        freq_hz: t.freq_hz.clone(),
        row_to_output,
        source_inputs: n,
        kind: StackingKind::UpperTriangular,
    })
}

/// Every channel as its own row, row-major over (output, input).
pub fn flatten_all(t: &FrfTensor) -> StackedFrf {
    let (n_out, n_in, n_freq) = t.values.dim();
    let rows = t
        .values
        .to_shape((n_out * n_in, n_freq))
        .expect("standard layout reshape")
        .to_owned();
    StackedFrf {
        rows,
        freq_hz: t.freq_hz.clone(),
        row_to_output: (0..n_out).flat_map(|o| std::iter::repeat_n(o, n_in)).collect(),
        source_inputs: n_in,
        kind: StackingKind::Passthrough,
    }
}
