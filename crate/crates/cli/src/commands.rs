use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use frvf::beam::{add_awgn_channels, channel_seed, simulate_impulse, synthesize_frf_analytic, BeamConfig, TimeHistories};
use frvf::engine::FitConfig;
use frvf::frf::{truncate_band, FrfTensor, UnitKind};
use frvf::io::{read_frf_csv, read_kv, read_th_csv, write_frf_csv, write_th_csv};
use frvf::modal::{anpsd, build_stabilization, read_modes_json, select_stable, write_modes_json, write_stab_csv, Criteria};
use frvf::pipeline::{
    compare_modes, frf_power, identify, periodogram, run_noise_sweep, write_anpsd_csv, write_comparison_csv,
    write_fit_csv, write_psd_csv, write_sweep_csv, BeamOracle, IdentifyConfig, SweepConfig,
};
use ndarray::Array3;
use serde_json::json;

use crate::args::{
    parse_orders, AnpsdArgs, Cli, CompareArgs, FitArgs, IdentifyArgs, SimulateArgs, StabilizeArgs, StackArgs,
    SweepArgs,
};
use crate::manifest::OutDir;

#[derive(Debug)]
pub enum Failure {
    Core(frvf::Error),
    Usage(String),
    Io(PathBuf, std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(e) => e.exit_code(),
            Failure::Usage(_) => 2,
            Failure::Io(..) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<frvf::Error> for Failure {
    fn from(e: frvf::Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

pub struct Ctx<'a> {
    pub cli: &'a Cli,
}

impl Ctx<'_> {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.cli.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn out(&self) -> Result<OutDir, Failure> {
        OutDir::create(&self.cli.out_dir).map_err(|e| Failure::Io(self.cli.out_dir.clone(), e))
    }

    fn finish(&self, out: OutDir, command: &str, config: serde_json::Value, inputs: &[PathBuf], seeds: Vec<u64>) -> Outcome {
        let path = out
            .finish(command, config, inputs, seeds)
            .map_err(|e| Failure::Io(self.cli.out_dir.clone(), e))?;
        self.info(format!("wrote {}", path.display()));
        Ok(())
    }
}

fn beam_config(path: Option<&Path>, n_elem: Option<usize>) -> Result<BeamConfig, Failure> {
    let mut cfg = match path {
        Some(p) => BeamConfig::from_kv(&read_kv(p)?)?,
        None => BeamConfig::default(),
    };
    if let Some(n) = n_elem {
        cfg.n_elem = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fit_config(order: usize, a: &FitArgs) -> IdentifyConfig {
    let mut fit = FitConfig::new(order);
    fit.iterations = a.iterations;
    fit.weighting = a.weighting.into();
    fit.relax = !a.no_relax;
    fit.include_d = !a.no_d;
    fit.include_e = a.include_e;
    IdentifyConfig {
        f_min: a.fmin,
        f_max: a.fmax,
        stacking: a.stacking.into(),
        fit,
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("configuration serializes")
}

fn write_text(path: &Path, text: String) -> Outcome {
    std::fs::write(path, text + "\n").map_err(|e| Failure::Io(path.to_path_buf(), e))
}

pub fn simulate_beam(ctx: &Ctx, a: &SimulateArgs) -> Outcome {
    let cfg = beam_config(a.config.as_deref(), a.n_elem)?;
    let seed = ctx.cli.seed;
    ctx.info(format!(
        "simulating {} elements, {} samples at {} Hz",
        cfg.n_elem,
        cfg.n_samples(),
        cfg.fs_hz
    ));
    let oracle = BeamOracle::new(&cfg)?;
    let estimated = oracle.estimated_frf(a.noise, seed)?;
    let analytic = synthesize_frf_analytic(&oracle.model, estimated.freq_hz())?;

    // the simultaneous two-impulse record, noise drawn after the
    // per-input records' streams
    let clean = simulate_impulse(&oracle.model, &cfg)?;
    let key = 2 * oracle.records.len();
    let th = TimeHistories {
        fs_hz: clean.fs_hz,
        outputs: add_awgn_channels(&clean.outputs, a.noise, channel_seed(seed, key))?,
        inputs: add_awgn_channels(&clean.inputs, a.noise, channel_seed(seed, key + 1))?,
    };

    let mut out = ctx.out()?;
    write_frf_csv(&estimated, &out.file("frf_estimated.csv"))?;
    write_frf_csv(&analytic, &out.file("frf_analytic.csv"))?;
    write_th_csv(&th.output_record(), &out.file("th_outputs.csv"))?;
    write_th_csv(&th.input_record(), &out.file("th_inputs.csv"))?;
    write_modes_json(&oracle.reference, &out.file("reference_modes.json"))?;
    for (k, m) in oracle.reference.modes().iter().enumerate() {
        ctx.info(format!("mode {:2}: {:10.4} Hz  zeta {:.4}", k + 1, m.f_hz, m.zeta));
    }
    let config = json!({ "beam": to_json(&cfg), "noise_pct": a.noise });
    ctx.finish(out, "simulate-beam", config, &[], vec![seed])
}

pub fn identify_cmd(ctx: &Ctx, a: &IdentifyArgs) -> Outcome {
    let t = read_frf_csv(&a.frf)?;
    let cfg = fit_config(a.order, &a.fit);
    let id = identify(&t, &cfg)?;
    let mut out = ctx.out()?;
    write_modes_json(&id.modes, &out.file("modes.json"))?;
    let diag = serde_json::to_string_pretty(&id.diagnostics).expect("diagnostics serialize");
    write_text(&out.file("fit_diagnostics.json"), diag)?;
    write_fit_csv(&id.data, &id.model, &out.file("fit_vs_data.csv"))?;
    ctx.info(format!("{} modes in band", id.modes.len()));
    for (k, m) in id.modes.modes().iter().enumerate() {
        ctx.info(format!("mode {:2}: {:10.4} Hz  zeta {:.4}", k + 1, m.f_hz, m.zeta));
    }
    let (f_min, f_max) = cfg.band(t.freq_hz());
    let config = json!({ "identify": to_json(&cfg), "band_hz": [f_min, f_max] });
    ctx.finish(out, "identify", config, std::slice::from_ref(&a.frf), vec![])
}

pub fn stabilize(ctx: &Ctx, a: &StabilizeArgs) -> Outcome {
    let orders = parse_orders(&a.orders).map_err(Failure::Usage)?;
    let t = read_frf_csv(&a.frf)?;
    let cfg = fit_config(orders[0], &a.fit);
    let (f_min, f_max) = cfg.band(t.freq_hz());
    let data = cfg.stacking.apply(&truncate_band(&t, f_min, f_max)?)?;
    let criteria = Criteria {
        df_max_hz: a.df_hz,
        dzeta_max: a.dzeta,
        mac_min: a.mac_min,
    };
    ctx.info(format!("fitting {} orders: {:?}", orders.len(), orders));
    let diag = build_stabilization(&data, &orders, &cfg.fit, criteria)?;
    if a.min_occurrences > orders.len() {
        eprintln!(
            "warning: min-occurrences {} exceeds the {} orders fitted; selection is empty",
            a.min_occurrences,
            orders.len()
        );
    }
    let selected = select_stable(&diag, a.min_occurrences)?;
    let mut out = ctx.out()?;
    write_stab_csv(&diag, &out.file("stab.csv"))?;
    write_modes_json(&selected, &out.file("modes.json"))?;
    ctx.info(format!("{} stable modes selected", selected.len()));
    for (k, m) in selected.modes().iter().enumerate() {
        ctx.info(format!(
            "mode {:2}: {:10.4} Hz  zeta {:.4}  orders {:?}",
            k + 1,
            m.f_hz,
            m.zeta,
            m.source_orders
        ));
    }
    let config = json!({
        "identify": to_json(&cfg),
        "band_hz": [f_min, f_max],
        "orders": orders,
        "min_occurrences": a.min_occurrences,
        "criteria": to_json(&criteria),
    });
    ctx.finish(out, "stabilize", config, std::slice::from_ref(&a.frf), vec![])
}

pub fn noise_sweep(ctx: &Ctx, a: &SweepArgs) -> Outcome {
    let beam = beam_config(a.config.as_deref(), None)?;
    let mut cfg = SweepConfig {
        levels: a.levels.clone(),
        reps: a.reps,
        seed: ctx.cli.seed,
        f_tol_pct: a.f_tol_pct,
        ..SweepConfig::default()
    };
    cfg.identify.fit.order = a.order;
    cfg.identify.fit.iterations = a.iterations;
    cfg.identify.f_min = Some(a.fmin);
    cfg.identify.f_max = Some(a.fmax);
    ctx.info(format!("{} levels x {} repetitions", cfg.levels.len(), cfg.reps));
    let oracle = BeamOracle::new(&beam)?;
    let rows = run_noise_sweep(&oracle, &cfg)?;
    let missing = rows.iter().filter(|r| !r.retrieved()).count();
    if missing > 0 {
        eprintln!("warning: {missing} reference modes were not retrieved");
    }
    let mut out = ctx.out()?;
    write_sweep_csv(&rows, &out.file("sweep.csv"))?;
    write_modes_json(&oracle.reference, &out.file("reference_modes.json"))?;
    let config = json!({
        "beam": to_json(&beam),
        "levels_pct": cfg.levels,
        "reps": cfg.reps,
        "identify": to_json(&cfg.identify),
        "f_tol_pct": cfg.f_tol_pct,
    });
    ctx.finish(out, "noise-sweep", config, &[], vec![cfg.seed])
}

pub fn compare(ctx: &Ctx, a: &CompareArgs) -> Outcome {
    let sa = read_modes_json(&a.modes_a)?;
    let sb = read_modes_json(&a.modes_b)?;
    let c = compare_modes(&sa, &sb, a.f_tol_pct)?;
    let mut out = ctx.out()?;
    write_comparison_csv(&c, &sa, &sb, &out.file("comparison.csv"))?;
    ctx.info(format!(
        "{} pairs, {} only in A, {} only in B",
        c.pairs.len(),
        c.unpaired_a.len(),
        c.unpaired_b.len()
    ));
    let config = json!({ "f_tol_pct": a.f_tol_pct });
    ctx.finish(out, "compare", config, &[a.modes_a.clone(), a.modes_b.clone()], vec![])
}

fn first_line(path: &Path) -> Result<String, Failure> {
    let file = File::open(path).map_err(|e| Failure::Io(path.to_path_buf(), e))?;
    let mut line = String::new();
    BufReader::new(file)
        .read_line(&mut line)
        .map_err(|e| Failure::Io(path.to_path_buf(), e))?;
    Ok(line.trim().to_string())
}

pub fn anpsd_cmd(ctx: &Ctx, a: &AnpsdArgs) -> Outcome {
    let magic = first_line(&a.input)?;
    let (source, freq, psd) = match magic.as_str() {
        "# th-csv v1" => {
            let rec = read_th_csv(&a.input)?;
            let (freq, psd) = periodogram(&rec.data, rec.fs_hz)?;
            ("periodogram", freq, psd)
        }
        "# frf-csv v1" => {
            let t = read_frf_csv(&a.input)?;
            ("frf_magnitude_squared", t.freq_hz().to_vec(), frf_power(&t))
        }
        _ => {
            return Err(frvf::Error::Parse {
                line: 1,
                msg: format!("expected '# th-csv v1' or '# frf-csv v1', found '{magic}'"),
            }
            .into())
        }
    };
    let avg = anpsd(&psd)?;
    let mut out = ctx.out()?;
    write_anpsd_csv(&freq, &avg, &out.file("anpsd.csv"))?;
    write_psd_csv(&freq, &psd, &out.file("psd.csv"))?;
    ctx.info(format!("{} channels, {} frequencies", psd.nrows(), freq.len()));
    let config = json!({ "source": source });
    ctx.finish(out, "anpsd", config, std::slice::from_ref(&a.input), vec![])
}

pub fn stack(ctx: &Ctx, a: &StackArgs) -> Outcome {
    let t = read_frf_csv(&a.frf)?;
    let stacking: frvf::pipeline::Stacking = a.stacking.into();
    let s = stacking.apply(&t)?;
    let rows = s.rows();
    let values = Array3::from_shape_fn((rows.nrows(), 1, rows.ncols()), |(r, _, k)| rows[[r, k]]);
    let unit: UnitKind = t.unit();
    let as_tensor = FrfTensor::new(values, s.freq_hz().to_vec(), unit)?;
    let mut out = ctx.out()?;
    write_frf_csv(&as_tensor, &out.file("stacked.csv"))?;
    ctx.info(format!("{} stacked rows", s.n_rows()));
    let config = json!({
        "stacking": stacking.as_str(),
        "row_to_output": s.row_to_output(),
        "source_inputs": s.source_inputs(),
    });
    ctx.finish(out, "stack", config, std::slice::from_ref(&a.frf), vec![])
}
