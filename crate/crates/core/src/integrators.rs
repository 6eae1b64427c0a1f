//! Splitting integrators for `H = H_0 + P`.
//!
//! `φ_{H_0}^h` is the exact phase rotation `ξ_a ↦ e^{-ihω_a} ξ_a`. `φ_P^h` is
//! exact for gauge-invariant NLS (pointwise `ψ ↦ e^{-ihG'(|ψ|²)} ψ` on the
//! grid) and for the wave kick (`q` fixed, `p` pushed by the force). The
//! mollified NLS flow has no closed form and uses RK4 with substep
//! doubling.
//!
//! A rounded step applies `Π_{η,s}` after the composition.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Mode;
use crate::models::{FilterKind, ModelType, NonlinearityDescriptor, PdeModel};
use crate::state::{DiagnosticsSample, SpectralState};

/// Substeps the RK4 fallback starts from.
pub const RK4_INITIAL_SUBSTEPS: usize = 16;
/// Substep count at which the RK4 fallback stops refining.
pub const RK4_MAX_SUBSTEPS: usize = 4096;
/// Relative agreement required between successive RK4 refinements.
pub const RK4_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    /// `φ_{H_0}^h ∘ φ_P^h`
    #[default]
    Lie,
    /// `φ_P^{h/2} ∘ φ_{H_0}^h ∘ φ_P^{h/2}`
    Strang,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rounding {
    pub enabled: bool,
    /// Threshold `η`; when absent, [`evolve`] derives it from `(ε, r)`.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Sobolev exponent of the projection.
    #[serde(default)]
    pub s: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplittingScheme {
    #[serde(default)]
    pub composition: Composition,
    #[serde(default)]
    pub rounding: Rounding,
    #[serde(default)]
    pub mollified: bool,
}

impl SplittingScheme {
    pub fn lie() -> Self {
        SplittingScheme::default()
    }

    pub fn strang() -> Self {
        SplittingScheme {
            composition: Composition::Strang,
            ..SplittingScheme::default()
        }
    }

    pub fn with_rounding(mut self, eta: f64, s: f64) -> Self {
        self.rounding = Rounding {
            enabled: true,
            eta: Some(eta),
            s,
        };
        self
    }

    pub fn with_mollifier(mut self) -> Self {
        self.mollified = true;
        self
    }

    /// Threshold in effect: 0 when rounding is off.
    pub fn effective_eta(&self) -> Result<f64> {
        if !self.rounding.enabled {
            return Ok(0.0);
        }
        match self.rounding.eta {
            Some(eta) if eta >= 0.0 && eta.is_finite() => Ok(eta),
            Some(eta) => Err(Error::domain(format!("eta must be finite and >= 0, got {eta}"))),
            None => Err(Error::domain("rounding enabled without eta")),
        }
    }
}

/// `(ε, r)` of the long-time result; they fix `η = ε^{r+1/4}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongTimeParams {
    pub epsilon: f64,
    pub r: u32,
}

impl LongTimeParams {
    pub fn eta(&self) -> f64 {
        self.epsilon.powf(self.r as f64 + 0.25)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub h: f64,
    pub n_steps: usize,
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default)]
    pub tracked: Vec<Vec<i32>>,
    /// Head/tail split `N`.
    #[serde(default = "default_split")]
    pub split_n: f64,
    /// Sobolev exponent of the diagnostics.
    pub s: f64,
    #[serde(default)]
    pub long_time: Option<LongTimeParams>,
}

fn default_cadence() -> usize {
    1
}

fn default_split() -> f64 {
    1.0
}

impl EvolutionConfig {
    pub fn new(h: f64, n_steps: usize, s: f64) -> Self {
        EvolutionConfig {
            h,
            n_steps,
            cadence: 1,
            tracked: Vec::new(),
            split_n: 1.0,
            s,
            long_time: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::domain(format!("step size must be positive, got {}", self.h)));
        }
        if self.cadence == 0 {
            return Err(Error::domain("diagnostics cadence must be at least 1"));
        }
        if !(self.split_n >= 1.0) {
            return Err(Error::domain("head/tail split N must be at least 1"));
        }
        if !(self.s >= 0.0) {
            return Err(Error::domain("Sobolev exponent must be >= 0"));
        }
        if let Some(t) = &self.long_time {
            if !(t.epsilon > 0.0) || t.r < 2 {
                return Err(Error::domain("long-time parameters need epsilon > 0 and r >= 2"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub h: f64,
    /// Threshold used by the projection (0 when rounding is off).
    pub eta: f64,
    pub tracked: Vec<Mode>,
    pub samples: Vec<DiagnosticsSample>,
    pub final_state: SpectralState,
}

impl TrajectoryRecord {
    /// CSV with columns `step,t,norm_s,h0_energy,head,tail,zeroed,I_<a>..`;
    /// `zeroed` is cumulative.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,t,norm_s,h0_energy,head,tail,zeroed");
        for m in &self.tracked {
            let name: Vec<String> = m.coords().iter().map(|c| c.to_string()).collect();
            out.push_str(&format!(",I_{}", name.join("_")));
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                s.step, s.time, s.sobolev_norm_s, s.h0_energy, s.head, s.tail, s.zeroed_total
            ));
            for a in &s.tracked_actions {
                out.push_str(&format!(",{a:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn max_norm(&self) -> f64 {
        self.samples.iter().map(|s| s.sobolev_norm_s).fold(0.0, f64::max)
    }
}

/// `e^{-iθ} - 1` without cancellation for small `θ`.
fn phase_increment(theta: f64) -> Complex64 {
    let half = (0.5 * theta).sin();
    Complex64::new(-2.0 * half * half, -theta.sin())
}

/// `ξ_a ↦ e^{-ihω_a} ξ_a`
pub fn linear_flow(model: &PdeModel, state: &SpectralState, h: f64) -> Result<SpectralState> {
    model.check_state(state)?;
    let mut out = state.clone();
    for (c, w) in out.coefficients_mut().iter_mut().zip(model.frequencies()) {
        *c *= Complex64::from_polar(1.0, -h * w);
    }
    Ok(out)
}

/// Exact flow of `P` over time `h`.
pub fn nonlinear_flow(model: &PdeModel, state: &SpectralState, h: f64) -> Result<SpectralState> {
    model.check_state(state)?;
    let mut out = state.clone();
    exact_kick(model, &mut out, h, None)?;
    Ok(out)
}

/// Flow of `z ↦ P(Φ(h_f H_0) z)` over time `tau`.
pub fn mollified_nonlinear_flow(
    model: &PdeModel,
    state: &SpectralState,
    tau: f64,
    h_filter: f64,
) -> Result<SpectralState> {
    model.check_state(state)?;
    if model.filter() == FilterKind::None {
        return Err(Error::domain("mollified flow needs a model filter"));
    }
    let mut out = state.clone();
    match model.model_type() {
        ModelType::Wave => exact_kick(model, &mut out, tau, Some(h_filter))?,
        ModelType::Nls => out = adaptive_rk4(model, &out, tau, Some(h_filter))?,
    }
    Ok(out)
}

/// Classical RK4 on `ξ' = -i ∂P/∂η` (mollified when `h_filter` is given)
/// with a fixed number of substeps.
pub fn rk4_nonlinear_flow(
    model: &PdeModel,
    state: &SpectralState,
    tau: f64,
    substeps: usize,
    h_filter: Option<f64>,
) -> Result<SpectralState> {
    model.check_state(state)?;
    if substeps == 0 {
        return Err(Error::domain("RK4 needs at least one substep"));
    }
    let dt = tau / substeps as f64;
    let rhs = |z: &SpectralState| -> Result<Vec<Complex64>> {
        let g = match h_filter {
            Some(hf) => model.mollified_gradient(hf, z)?,
            None => model.nonlinear_gradient(z)?,
        };
        Ok(g.coefficients().iter().map(|c| Complex64::new(c.im, -c.re)).collect())
    };
    let lattice = *state.lattice();
    let shifted = |base: &[Complex64], k: &[Complex64], f: f64| -> Result<SpectralState> {
        SpectralState::from_coefficients(lattice, base.iter().zip(k).map(|(b, k)| b + k * f).collect()).map_err(|_| {
            Error::Integration {
                step: 0,
                reason: "RK4 stage left the finite range".into(),
            }
        })
    };
    let mut z: Vec<Complex64> = state.coefficients().to_vec();
    for _ in 0..substeps {
        let k1 = rhs(&shifted(&z, &z, 0.0)?)?;
        let k2 = rhs(&shifted(&z, &k1, 0.5 * dt)?)?;
        let k3 = rhs(&shifted(&z, &k2, 0.5 * dt)?)?;
        let k4 = rhs(&shifted(&z, &k3, dt)?)?;
        for i in 0..z.len() {
            z[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }
    }
    shifted(&z, &z, 0.0)
}

fn adaptive_rk4(model: &PdeModel, state: &SpectralState, tau: f64, h_filter: Option<f64>) -> Result<SpectralState> {
    let mut n = RK4_INITIAL_SUBSTEPS;
    let mut coarse = rk4_nonlinear_flow(model, state, tau, n, h_filter)?;
    loop {
        let fine = rk4_nonlinear_flow(model, state, tau, 2 * n, h_filter)?;
        let scale = 1.0 + fine.sobolev_norm(0.0);
        if fine.max_abs_diff(&coarse)? <= RK4_TOLERANCE * scale || 2 * n >= RK4_MAX_SUBSTEPS {
            return Ok(fine);
        }
        coarse = fine;
        n *= 2;
    }
}

/// Exact flow of `P` (or of its mollified form for the wave kick), in place.
fn exact_kick(model: &PdeModel, state: &mut SpectralState, tau: f64, h_filter: Option<f64>) -> Result<()> {
    if tau == 0.0 {
        return Ok(());
    }
    match model.nonlinearity() {
        NonlinearityDescriptor::NlsGauge { coefficients } => {
            if h_filter.is_some() {
                return Err(Error::domain("mollified NLS flow has no exact form"));
            }
            let grid = model.fourier_grid().expect("NLS model has a Fourier grid");
            // transform only the increment (e^{-iτG'} - 1)ψ
            let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
            grid.to_grid(state.coefficients(), &mut buf);
            let scale = model.nls_density_scale();
            for p in buf.iter_mut() {
                let theta = tau * coefficients.eval(scale * p.norm_sqr());
                *p *= phase_increment(theta);
            }
            let mut delta = vec![Complex64::new(0.0, 0.0); state.coefficients().len()];
            grid.from_grid(&mut buf, &mut delta);
            for (c, d) in state.coefficients_mut().iter_mut().zip(&delta) {
                *c += d;
            }
        }
        NonlinearityDescriptor::WaveKick { .. } => {
            let grad = match h_filter {
                Some(hf) => model.mollified_gradient(hf, state)?,
                None => model.nonlinear_gradient(state)?,
            };
            for (c, g) in state.coefficients_mut().iter_mut().zip(grad.coefficients()) {
                *c -= Complex64::new(0.0, tau) * g;
            }
        }
    }
    if !state.is_finite() {
        return Err(Error::Integration {
            step: 0,
            reason: "nonlinear flow produced non-finite amplitudes".into(),
        });
    }
    Ok(())
}

/// One scheme at a fixed step size, with the phase factors precomputed.
#[derive(Clone, Debug)]
pub struct SplitStepper {
    model: PdeModel,
    scheme: SplittingScheme,
    h: f64,
    eta: f64,
    phases: Vec<Complex64>,
}

impl SplitStepper {
    /// `h` may be negative (backward steps).
    pub fn new(model: &PdeModel, scheme: &SplittingScheme, h: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::domain("step size must be finite"));
        }
        if scheme.mollified && model.filter() == FilterKind::None {
            return Err(Error::domain("mollified scheme needs a model filter"));
        }
        let eta = scheme.effective_eta()?;
        let phases = model
            .frequencies()
            .iter()
            .map(|w| Complex64::from_polar(1.0, -h * w))
            .collect();
        Ok(SplitStepper {
            model: model.clone(),
            scheme: *scheme,
            h,
            eta,
            phases,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn model(&self) -> &PdeModel {
        &self.model
    }

    fn linear(&self, state: &mut SpectralState) {
        for (c, p) in state.coefficients_mut().iter_mut().zip(&self.phases) {
            *c *= p;
        }
    }

    fn nonlinear(&self, state: &mut SpectralState, tau: f64) -> Result<()> {
        if self.scheme.mollified {
            *state = mollified_nonlinear_flow(&self.model, state, tau, self.h.abs())?;
            Ok(())
        } else {
            exact_kick(&self.model, state, tau, None)
        }
    }

    /// Advances `state` by one step; returns the number of modes the
    /// projection cleared.
    pub fn step(&self, state: &mut SpectralState) -> Result<usize> {
        self.model.check_state(state)?;
        match self.scheme.composition {
            Composition::Lie => {
                self.nonlinear(state, self.h)?;
                self.linear(state);
            }
            Composition::Strang => {
                self.nonlinear(state, 0.5 * self.h)?;
                self.linear(state);
                self.nonlinear(state, 0.5 * self.h)?;
            }
        }
        Ok(if self.scheme.rounding.enabled {
            state.project_in_place(self.eta, self.scheme.rounding.s)
        } else {
            0
        })
    }
}

/// One step of `scheme`; returns the new state and the projection count.
pub fn split_step(
    scheme: &SplittingScheme,
    model: &PdeModel,
    state: &SpectralState,
    h: f64,
) -> Result<(SpectralState, usize)> {
    let stepper = SplitStepper::new(model, scheme, h)?;
    let mut out = state.clone();
    let zeroed = stepper.step(&mut out)?;
    Ok((out, zeroed))
}

/// Iterates the scheme `n_steps` times. Samples are taken at step 0, at
/// every multiple of the cadence and at the last step, on the projected
/// state.
pub fn evolve(
    scheme: &SplittingScheme,
    model: &PdeModel,
    state: &SpectralState,
    config: &EvolutionConfig,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    model.check_state(state)?;
    let mut scheme = *scheme;
    if scheme.rounding.enabled && scheme.rounding.eta.is_none() {
        let t = config
            .long_time
            .ok_or_else(|| Error::domain("rounding needs eta or (epsilon, r)"))?;
        scheme.rounding.eta = Some(t.eta());
    }
    let tracked: Vec<Mode> = config.tracked.iter().map(|c| Mode::new(c)).collect();
    let tracked_idx = tracked
        .iter()
        .map(|m| {
            model
                .lattice()
                .index_of(m)
                .ok_or_else(|| Error::domain(format!("tracked mode {m} outside lattice")))
        })
        .collect::<Result<Vec<_>>>()?;

    let stepper = SplitStepper::new(model, &scheme, config.h)?;
    let sample = |n: usize, z: &SpectralState, last: usize, total: usize| -> Result<DiagnosticsSample> {
        let d = DiagnosticsSample::measure(
            n,
            n as f64 * config.h,
            z,
            model.frequencies(),
            config.s,
            config.split_n,
            &tracked_idx,
            last,
            total,
        )?;
        if !d.is_finite() {
            return Err(Error::Integration {
                step: n,
                reason: "non-finite diagnostics".into(),
            });
        }
        Ok(d)
    };

    let mut z = state.clone();
    let mut samples = vec![sample(0, &z, 0, 0)?];
    let mut total = 0;
    for n in 1..=config.n_steps {
        let last = stepper.step(&mut z).map_err(|e| match e {
            Error::Integration { reason, .. } => Error::Integration { step: n, reason },
            other => other,
        })?;
        total += last;
        if n % config.cadence == 0 || n == config.n_steps {
            samples.push(sample(n, &z, last, total)?);
        }
    }
    Ok(TrajectoryRecord {
        h: config.h,
        eta: stepper.eta(),
        tracked,
        samples,
        final_state: z,
    })
}
