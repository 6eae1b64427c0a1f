//! Configuration-driven experiments: simulation runs, step-size scans and
//! homological solves, each writing its artifacts plus a manifest that
//! holds the fully resolved configuration.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::integrators::{evolve, EvolutionConfig, LongTimeParams, SplittingScheme, TrajectoryRecord};
use crate::io::{state_to_bytes, state_to_csv, write_atomic};
use crate::lattice::{Mode, ModeLattice};
use crate::models::{ModelDescriptor, PdeModel};
use crate::normalform::{homological_solve_with_floor, verify_conjugacy, SparsePolynomial, DEFAULT_DIVISOR_FLOOR};
use crate::resonance::{midpoint_grid, resonance_scan, scan_to_csv, Frequencies, ResonanceTable};
use crate::state::SpectralState;

/// A model descriptor given inline or as a path relative to the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Path(PathBuf),
    Inline(ModelDescriptor),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitude {
    pub mode: Vec<i32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Explicit amplitudes; unlisted modes are zero.
    Modes { modes: Vec<ModeAmplitude> },
    /// Amplitudes `(1 + |a|²)^{-decay/2}` with seeded random phases on
    /// `max_a |a_i| <= max_mode`, optionally rescaled to `‖z‖_s = norm`.
    Smooth {
        max_mode: usize,
        decay: f64,
        #[serde(default)]
        norm: Option<f64>,
    },
    /// Smooth profile scaled to `‖z‖_s = ε` and projected once with
    /// `η = ε^{r+1/4}`; `(ε, r)` come from the evolution settings.
    LongTime { max_mode: usize, decay: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepGrid {
    List { h: Vec<f64> },
    Uniform { h_min: f64, h_max: f64, count: usize },
    Midpoint { h0: f64, count: usize },
}

impl StepGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        match self {
            StepGrid::List { h } => Ok(h.clone()),
            StepGrid::Uniform { h_min, h_max, count } => {
                if *count < 2 || !(h_min < h_max) {
                    return Err(Error::domain("uniform grid needs count >= 2 and h_min < h_max"));
                }
                let step = (h_max - h_min) / (*count - 1) as f64;
                Ok((0..*count).map(|k| h_min + step * k as f64).collect())
            }
            StepGrid::Midpoint { h0, count } => {
                if *count == 0 || !(*h0 > 0.0) {
                    return Err(Error::domain("midpoint grid needs count >= 1 and h0 > 0"));
                }
                Ok(midpoint_grid(*h0, *count))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub r: usize,
    pub ncap: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub grid: StepGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFormConfig {
    pub h: f64,
    pub n: f64,
    #[serde(default = "default_floor")]
    pub divisor_floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_DIVISOR_FLOOR
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    #[serde(default)]
    pub scheme: SplittingScheme,
    #[serde(default)]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub normalform: Option<NormalFormConfig>,
    #[serde(default)]
    pub seed: u64,
    /// Also write SVG charts of the trajectory.
    #[serde(default)]
    pub plots: bool,
}

impl ExperimentConfig {
    /// Parses a config, or the `config` member of a manifest. A model path
    /// is resolved against `base` and inlined.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let inner = match value.get("config") {
            Some(cfg) if value.get("tool").is_some() => cfg.clone(),
            _ => value,
        };
        let mut cfg: ExperimentConfig = serde_json::from_value(inner)?;
        if let ModelSource::Path(p) = &cfg.model {
            let path = if p.is_absolute() { p.clone() } else { base.join(p) };
            cfg.model = ModelSource::Inline(ModelDescriptor::load(&path)?);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json(&std::fs::read_to_string(path)?, base)
    }

    pub fn descriptor(&self) -> Result<&ModelDescriptor> {
        match &self.model {
            ModelSource::Inline(d) => Ok(d),
            ModelSource::Path(p) => Err(Error::domain(format!("model path {} was not resolved", p.display()))),
        }
    }

    pub fn build_model(&self) -> Result<PdeModel> {
        self.descriptor()?.build()
    }
}

/// Seeded smooth profile: `ξ_a = (1 + |a|²)^{-decay/2} e^{iθ_a}` on
/// `max_i |a_i| <= max_mode`, zero elsewhere.
pub fn smooth_profile(lattice: &ModeLattice, max_mode: usize, decay: f64, seed: u64) -> SpectralState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = lattice
        .modes()
        .map(|m| {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            if m.coords().iter().all(|c| c.unsigned_abs() as usize <= max_mode) {
                let amp = (1.0 + m.norm_sq() as f64).powf(-0.5 * decay);
                Complex64::from_polar(amp, theta)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    SpectralState::from_coefficients(*lattice, coeffs).expect("finite profile")
}

/// Smooth profile scaled to `‖z‖_s = ε`, then projected with
/// `η = ε^{r+1/4}`, giving `Π z⁰ = z⁰`.
pub fn long_time_initial(
    lattice: &ModeLattice,
    max_mode: usize,
    decay: f64,
    long_time: LongTimeParams,
    s: f64,
    seed: u64,
) -> Result<(SpectralState, usize)> {
    let mut z = smooth_profile(lattice, max_mode, decay, seed);
    rescale(&mut z, long_time.epsilon, s)?;
    let zeroed = z.project_in_place(long_time.eta(), s);
    Ok((z, zeroed))
}

fn rescale(z: &mut SpectralState, norm: f64, s: f64) -> Result<()> {
    let current = z.sobolev_norm(s);
    if current == 0.0 {
        return Err(Error::domain("cannot rescale the zero state"));
    }
    z.scale(norm / current);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InitialReport {
    pub norm_s: f64,
    pub norm_2s: f64,
    /// Whether `‖z⁰‖_{2s} <= 1`; reported only.
    pub norm_2s_at_most_one: bool,
    pub zeroed_by_preparation: usize,
}

pub fn build_initial(
    model: &PdeModel,
    recipe: &InitialData,
    evolution: &EvolutionConfig,
    seed: u64,
) -> Result<(SpectralState, InitialReport)> {
    let lattice = *model.lattice();
    let s = evolution.s;
    let (z, zeroed) = match recipe {
        InitialData::Modes { modes } => {
            let mut z = SpectralState::zeros(lattice);
            for m in modes {
                if m.mode.is_empty() || m.mode.len() > crate::lattice::MAX_DIM {
                    return Err(Error::domain("initial mode has a bad dimension"));
                }
                z.set(&Mode::new(&m.mode), Complex64::new(m.re, m.im))?;
            }
            (z, 0)
        }
        InitialData::Smooth { max_mode, decay, norm } => {
            let mut z = smooth_profile(&lattice, *max_mode, *decay, seed);
            if let Some(n) = norm {
                rescale(&mut z, *n, s)?;
            }
            (z, 0)
        }
        InitialData::LongTime { max_mode, decay } => {
            let t = evolution
                .long_time
                .ok_or_else(|| Error::domain("long_time initial data needs evolution.long_time"))?;
            long_time_initial(&lattice, *max_mode, *decay, t, s, seed)?
        }
    };
    let norm_2s = z.sobolev_norm(2.0 * s);
    let report = InitialReport {
        norm_s: z.sobolev_norm(s),
        norm_2s,
        norm_2s_at_most_one: norm_2s <= 1.0,
        zeroed_by_preparation: zeroed,
    };
    Ok((z, report))
}

fn manifest(command: &str, config: &ExperimentConfig, derived: serde_json::Value) -> Result<Vec<u8>> {
    let value = json!({
        "tool": "hamsplit",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "derived": derived,
    });
    Ok(serde_json::to_vec_pretty(&value)?)
}

fn write(out: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join(name);
    write_atomic(&path, bytes)?;
    written.push(path);
    Ok(())
}

/// Runs the configured evolution; writes `trajectory.csv`,
/// `final_state.csv`, `final_state.bin`, `manifest.json` and, when asked,
/// SVG charts.
pub fn run_simulate(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let model = config.build_model()?;
    let evolution = config
        .evolution
        .as_ref()
        .ok_or_else(|| Error::domain("simulate needs an `evolution` section"))?;
    evolution.validate()?;
    let recipe = config
        .initial
        .as_ref()
        .ok_or_else(|| Error::domain("simulate needs an `initial` section"))?;
    let (z0, report) = build_initial(&model, recipe, evolution, config.seed)?;
    let record = evolve(&config.scheme, &model, &z0, evolution)?;

    let mut written = Vec::new();
    write(out, "trajectory.csv", record.to_csv().as_bytes(), &mut written)?;
    write(
        out,
        "final_state.csv",
        state_to_csv(&record.final_state).as_bytes(),
        &mut written,
    )?;
    write(
        out,
        "final_state.bin",
        &state_to_bytes(&record.final_state),
        &mut written,
    )?;
    if config.plots {
        write(out, "norm.svg", norm_chart(&record).as_bytes(), &mut written)?;
        if !record.tracked.is_empty() {
            write(out, "actions.svg", action_chart(&record).as_bytes(), &mut written)?;
        }
    }
    let derived = json!({
        "eta": record.eta,
        "lattice_size": model.lattice().len(),
        "initial": report,
        "max_norm_s": record.max_norm(),
        "samples": record.samples.len(),
    });
    write(
        out,
        "manifest.json",
        &manifest("simulate", config, derived)?,
        &mut written,
    )?;
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlaggedStep {
    pub h: f64,
    pub min_divisor: f64,
    pub threshold: f64,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanSummary {
    pub rows: usize,
    pub flagged: usize,
    pub fraction: f64,
    pub worst_divisor: f64,
    pub worst_h: f64,
    pub flagged_steps: Vec<FlaggedStep>,
    pub frequency_resonances: Vec<String>,
}

/// Runs the configured step-size scan; writes `scan.csv`,
/// `scan_summary.json` and `manifest.json`.
pub fn run_scan(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let model = config.build_model()?;
    let scan = config
        .scan
        .as_ref()
        .ok_or_else(|| Error::domain("scan needs a `scan` section"))?;
    let freqs = Frequencies::from_model(&model);
    let grid = scan.grid.points()?;
    let rows = resonance_scan(&freqs, &grid, scan.r, scan.ncap, scan.gamma, scan.alpha)?;
    let table = ResonanceTable::build(&freqs, 2, scan.r, scan.ncap)?;
    let flagged_steps: Vec<FlaggedStep> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| FlaggedStep {
            h: r.h,
            min_divisor: r.min_divisor,
            threshold: r.threshold,
            witness: r.witness.as_ref().map(|w| w.to_string()),
        })
        .collect();
    let (worst_h, worst_divisor) = rows
        .iter()
        .map(|r| (r.h, r.min_divisor))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    let summary = ScanSummary {
        rows: rows.len(),
        flagged: flagged_steps.len(),
        fraction: flagged_steps.len() as f64 / rows.len() as f64,
        worst_divisor,
        worst_h,
        flagged_steps,
        frequency_resonances: table.frequency_resonances().iter().map(|j| j.to_string()).collect(),
    };
    let mut written = Vec::new();
    write(out, "scan.csv", scan_to_csv(&rows).as_bytes(), &mut written)?;
    write(
        out,
        "scan_summary.json",
        &serde_json::to_vec_pretty(&summary)?,
        &mut written,
    )?;
    let derived = json!({ "candidates": table.candidates(), "enumerated": table.enumerated() });
    write(out, "manifest.json", &manifest("scan", config, derived)?, &mut written)?;
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub residual: f64,
    /// `max_j |h P_j|`
    pub scale: f64,
    pub relative: f64,
    pub chi_terms: usize,
    pub zed_terms: usize,
    pub support_invariants_hold: bool,
}

/// Solves the homological equation for the polynomial at `poly`; writes
/// `chi.json`, `zed.json`, `residual.json` and `manifest.json`.
pub fn run_normalform(config: &ExperimentConfig, poly: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let model = config.build_model()?;
    let nf = config
        .normalform
        .as_ref()
        .ok_or_else(|| Error::domain("normalform needs a `normalform` section"))?;
    let p = SparsePolynomial::load(poly)?;
    let freqs = Frequencies::from_model(&model);
    let sol = homological_solve_with_floor(&p, &freqs, nf.h, nf.n, nf.divisor_floor)?;
    let residual = verify_conjugacy(&sol, &p, &freqs, nf.h)?;
    let scale = nf.h * p.max_abs_coefficient();
    let report = ResidualReport {
        residual,
        scale,
        relative: if scale > 0.0 { residual / scale } else { 0.0 },
        chi_terms: sol.chi.len(),
        zed_terms: sol.zed.len(),
        support_invariants_hold: sol.support_invariants_hold(),
    };
    let mut written = Vec::new();
    write(out, "chi.json", sol.chi.to_json().as_bytes(), &mut written)?;
    write(out, "zed.json", sol.zed.to_json().as_bytes(), &mut written)?;
    write(out, "residual.json", &serde_json::to_vec_pretty(&report)?, &mut written)?;
    let derived = json!({ "poly": poly, "terms": p.len(), "degree": sol.degree });
    write(
        out,
        "manifest.json",
        &manifest("normalform", config, derived)?,
        &mut written,
    )?;
    Ok(written)
}

fn norm_chart(record: &TrajectoryRecord) -> String {
    let t: Vec<f64> = record.samples.iter().map(|s| s.time).collect();
    let norm: Vec<f64> = record.samples.iter().map(|s| s.sobolev_norm_s).collect();
    svg_line_chart("Sobolev norm", &t, &[("norm_s".to_string(), norm)])
}

fn action_chart(record: &TrajectoryRecord) -> String {
    let t: Vec<f64> = record.samples.iter().map(|s| s.time).collect();
    let series: Vec<(String, Vec<f64>)> = record
        .tracked
        .iter()
        .enumerate()
        .map(|(k, m)| {
            (
                format!("I_{m}"),
                record.samples.iter().map(|s| s.tracked_actions[k]).collect(),
            )
        })
        .collect();
    svg_line_chart("Tracked actions", &t, &series)
}

/// Minimal SVG line chart with shared axes.
pub fn svg_line_chart(title: &str, xs: &[f64], series: &[(String, Vec<f64>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let finite = |v: &f64| v.is_finite();
    let (x0, x1) = bounds(xs.iter().copied().filter(finite));
    let (y0, y1) = bounds(series.iter().flat_map(|(_, ys)| ys.iter().copied().filter(finite)));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n\
         <line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{PAD}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{x0:.3e}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{x1:.3e}</text>\n\
         <text x=\"4\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{y0:.3e}</text>\n\
         <text x=\"4\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{y1:.3e}</text>\n",
        W / 2.0,
        xml_escape(title),
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD,
        H - PAD + 15.0,
        W - PAD,
        H - PAD + 15.0,
        H - PAD,
        PAD,
    );
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>\n\
             <text x=\"{}\" y=\"{}\" fill=\"{color}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            points.join(" "),
            W - PAD - 120.0,
            PAD + 14.0 * (k as f64 + 1.0),
            xml_escape(name),
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Exit status for an error: 3 numeric, 4 resonance, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Integration { .. } => 3,
        Error::Resonance { .. } => 4,
        _ => 2,
    }
}
