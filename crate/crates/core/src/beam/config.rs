use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cantilever with a rectangular hollow section, clamped at node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub length_m: f64,
    pub b_ext_m: f64,
    pub h_ext_m: f64,
    pub wall_t_m: f64,
    pub rho_kg_m3: f64,
    #[serde(rename = "E_pa")]
    pub e_pa: f64,
    pub nu: f64,
    pub n_elem: usize,
    pub zeta_all: f64,
    pub fs_hz: f64,
    pub duration_s: f64,
    /// Drop modes at or above Nyquist from sampled time histories, as an
    /// ideal anti-alias filter would.
    pub anti_alias: bool,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            length_m: 2.0,
            b_ext_m: 0.02,
            h_ext_m: 0.05,
            wall_t_m: 0.005,
            rho_kg_m3: 2700.0,
            e_pa: 69e9,
            nu: 0.3,
            n_elem: 6,
            zeta_all: 0.03,
            fs_hz: 1000.0,
            duration_s: 30.0,
            anti_alias: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub area: f64,
    /// Second moment for bending in the x–z plane.
    pub i_y: f64,
    /// Second moment for bending in the x–y plane.
    pub i_z: f64,
}

impl BeamConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length_m", self.length_m),
            ("b_ext_m", self.b_ext_m),
            ("h_ext_m", self.h_ext_m),
            ("wall_t_m", self.wall_t_m),
            ("rho_kg_m3", self.rho_kg_m3),
            ("E_pa", self.e_pa),
            ("nu", self.nu),
            ("fs_hz", self.fs_hz),
            ("duration_s", self.duration_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::precondition(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.zeta_all.is_finite() && (0.0..1.0).contains(&self.zeta_all)) {
            return Err(Error::precondition(format!(
                "zeta_all must lie in [0, 1), got {}",
                self.zeta_all
            )));
        }
        if self.wall_t_m >= self.b_ext_m.min(self.h_ext_m) / 2.0 {
            return Err(Error::precondition(format!(
                "wall thickness {} leaves no hollow core in a {}x{} section",
                self.wall_t_m, self.b_ext_m, self.h_ext_m
            )));
        }
        if self.n_elem < 1 {
            return Err(Error::precondition("n_elem must be at least 1"));
        }
        if self.n_samples() < 2 {
            return Err(Error::precondition("record must hold at least 2 samples"));
        }
        Ok(())
    }

    pub fn section(&self) -> Section {
        let (b, h, t) = (self.b_ext_m, self.h_ext_m, self.wall_t_m);
        let (bi, hi) = (b - 2.0 * t, h - 2.0 * t);
        Section {
            area: b * h - bi * hi,
            i_z: (b * h.powi(3) - bi * hi.powi(3)) / 12.0,
            i_y: (h * b.powi(3) - hi * bi.powi(3)) / 12.0,
        }
    }

    pub fn shear_modulus(&self) -> f64 {
        self.e_pa / (2.0 * (1.0 + self.nu))
    }

    pub fn n_samples(&self) -> usize {
        (self.fs_hz * self.duration_s).round() as usize
    }

    /// Overrides defaults with entries of a parsed `key=value` file.
    pub fn from_kv(kv: &BTreeMap<String, (String, usize)>) -> Result<Self> {
        let mut cfg = Self::default();
        for (key, (value, line)) in kv {
            let bad = || Error::Parse {
                line: *line,
                msg: format!("invalid value '{value}' for {key}"),
            };
            let float = || value.parse::<f64>().map_err(|_| bad());
            match key.as_str() {
                "length_m" => cfg.length_m = float()?,
                "b_ext_m" => cfg.b_ext_m = float()?,
                "h_ext_m" => cfg.h_ext_m = float()?,
                "wall_t_m" => cfg.wall_t_m = float()?,
                "rho_kg_m3" => cfg.rho_kg_m3 = float()?,
                "E_pa" | "e_pa" => cfg.e_pa = float()?,
                "nu" => cfg.nu = float()?,
                "n_elem" => cfg.n_elem = value.parse().map_err(|_| bad())?,
                "zeta_all" => cfg.zeta_all = float()?,
                "fs_hz" => cfg.fs_hz = float()?,
                "duration_s" => cfg.duration_s = float()?,
                "anti_alias" => cfg.anti_alias = value.parse().map_err(|_| bad())?,
                _ => {
                    return Err(Error::Parse {
                        line: *line,
                        msg: format!("unknown beam config key '{key}'"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
