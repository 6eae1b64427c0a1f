//! Concrete Hamiltonians `H = Σ ω_a I_a + P`: the nonlinear Schrödinger
//! equation on `T^d` with a convolution potential and the nonlinear wave
//! equation on the circle.
//!
//! NLS amplitudes follow `ψ(x) = (2π)^{-d/2} Σ_a ξ_a e^{i a·x}` and
//! `P = ∫ G(|ψ|²) dx`, evaluated by collocation on a [`FourierGrid`].
//!
//! Wave amplitudes are `ξ_a = (q_a + i p_a)/√2` with `q = A^{1/2} u`,
//! `p = A^{-1/2} v`, `A = (-∂_xx + m)^{1/2}`, over the cosine eigenbasis of
//! even functions, and `P = ∫ G(u) dx` with `G' = g`.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Mode, ModeLattice};
use crate::spectral::{CosineGrid, FourierGrid};
use crate::state::SpectralState;

/// A real polynomial `Σ_k c_k x^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        RealPolynomial { coeffs }
    }

    /// `c · x^power`
    pub fn monomial(c: f64, power: usize) -> Self {
        let mut coeffs = vec![0.0; power + 1];
        coeffs[power] = c;
        Self::new(coeffs)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// `∫_0^x`
    pub fn antiderivative_at(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, c)| acc * x + c / (k + 1) as f64)
            * x
    }

    /// Order of the zero at the origin; `None` for the zero polynomial.
    pub fn vanishing_order(&self) -> Option<usize> {
        self.coeffs.iter().position(|&c| c != 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityDescriptor {
    /// `P = ∫ G(|ψ|²)`, described by `G'(μ)` as a polynomial in `μ = |ψ|²`.
    NlsGauge { coefficients: RealPolynomial },
    /// `P = ∫ G(u)` with `G' = g`, a polynomial in `u`.
    WaveKick { coefficients: RealPolynomial },
}

/// Frequency filter `Φ` for mollified impulse splitting: real, even,
/// `|Φ| <= 1`, `Φ(0) = 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    #[default]
    None,
    /// `sin(x/2) / (x/2)`
    Sinc,
    /// `(1 + cos x)/2` on `|x| <= π`, zero outside.
    RaisedCosine,
}

impl FilterKind {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            FilterKind::None => 1.0,
            FilterKind::Sinc => {
                let y = 0.5 * x;
                if y.abs() < 1e-8 {
                    1.0 - y * y / 6.0
                } else {
                    y.sin() / y
                }
            }
            FilterKind::RaisedCosine => {
                if x.abs() <= PI {
                    0.5 * (1.0 + x.cos())
                } else {
                    0.0
                }
            }
        }
    }
}

/// How nonlinear terms are evaluated on the NLS grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Collocation {
    /// `2K + 1` points per axis: the grid map is a bijection and the
    /// pointwise nonlinear flow is the exact flow of the collocated `P`.
    #[default]
    Exact,
    /// 3/2-rule padded grid, truncated back to the lattice.
    Dealiased,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelType {
    Nls,
    Wave,
}

#[derive(Clone, Debug)]
enum Grid {
    Fourier(FourierGrid),
    Cosine(CosineGrid),
}

#[derive(Clone, Debug)]
pub struct PdeModel {
    lattice: ModeLattice,
    frequencies: Vec<f64>,
    nonlinearity: NonlinearityDescriptor,
    filter: FilterKind,
    collocation: Collocation,
    mass: Option<f64>,
    grid: Grid,
}

/// NLS on `T^d`: `ω_a = a_1² + ... + a_d² + V̂_a` on the full lattice.
///
/// `potential` lists the nonzero Fourier coefficients of the potential; each
/// must be real. `g_prime` is `G'(μ)` and must vanish at `μ = 0`.
pub fn nls_model(
    dim: usize,
    cutoff: usize,
    potential: &[(Mode, Complex64)],
    g_prime: RealPolynomial,
) -> Result<PdeModel> {
    let lattice = ModeLattice::full(dim, cutoff)?;
    let mut vhat = vec![0.0; lattice.len()];
    for (mode, value) in potential {
        if value.im != 0.0 || !value.re.is_finite() {
            return Err(Error::domain(format!(
                "potential coefficient at {mode} must be real and finite, got {value}"
            )));
        }
        let i = lattice
            .index_of(mode)
            .ok_or_else(|| Error::domain(format!("potential mode {mode} outside lattice")))?;
        vhat[i] = value.re;
    }
    if g_prime.coefficients().first().is_some_and(|&c| c != 0.0) {
        return Err(Error::domain("G'(0) must vanish: P needs a zero of order at least 3"));
    }
    let frequencies = lattice
        .modes()
        .zip(&vhat)
        .map(|(m, v)| m.norm_sq() as f64 + v)
        .collect();
    Ok(PdeModel {
        lattice,
        frequencies,
        nonlinearity: NonlinearityDescriptor::NlsGauge { coefficients: g_prime },
        filter: FilterKind::None,
        collocation: Collocation::Exact,
        mass: None,
        grid: Grid::Fourier(FourierGrid::exact(&lattice)?),
    })
}

/// Wave equation on the circle: `ω_a = sqrt(a² + m)` on the half lattice.
/// `g` must vanish to order at least 2.
pub fn wave_model(mass: f64, cutoff: usize, g: RealPolynomial) -> Result<PdeModel> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::domain(format!("wave mass must be positive, got {mass}")));
    }
    if g.vanishing_order().is_some_and(|o| o < 2) {
        return Err(Error::domain(
            "g must vanish to order 2: P needs a zero of order at least 3",
        ));
    }
    let lattice = ModeLattice::half(1, cutoff)?;
    let frequencies = lattice.modes().map(|m| ((m.norm_sq() as f64) + mass).sqrt()).collect();
    Ok(PdeModel {
        lattice,
        frequencies,
        nonlinearity: NonlinearityDescriptor::WaveKick { coefficients: g },
        filter: FilterKind::None,
        collocation: Collocation::Exact,
        mass: Some(mass),
        grid: Grid::Cosine(CosineGrid::new(&lattice)?),
    })
}

impl PdeModel {
    pub fn with_filter(mut self, filter: FilterKind) -> Self {
        self.filter = filter;
        self
    }

    /// Only NLS models have a choice of collocation.
    pub fn with_collocation(mut self, collocation: Collocation) -> Result<Self> {
        if let Grid::Fourier(_) = self.grid {
            self.grid = Grid::Fourier(match collocation {
                Collocation::Exact => FourierGrid::exact(&self.lattice)?,
                Collocation::Dealiased => FourierGrid::dealiased(&self.lattice)?,
            });
            self.collocation = collocation;
            Ok(self)
        } else if collocation == Collocation::Exact {
            Ok(self)
        } else {
            Err(Error::domain("dealiasing applies to NLS models only"))
        }
    }

    pub fn lattice(&self) -> &ModeLattice {
        &self.lattice
    }

    pub fn model_type(&self) -> ModelType {
        match self.nonlinearity {
            NonlinearityDescriptor::NlsGauge { .. } => ModelType::Nls,
            NonlinearityDescriptor::WaveKick { .. } => ModelType::Wave,
        }
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn frequency(&self, mode: &Mode) -> Option<f64> {
        self.lattice.index_of(mode).map(|i| self.frequencies[i])
    }

    pub fn nonlinearity(&self) -> &NonlinearityDescriptor {
        &self.nonlinearity
    }

    pub fn filter(&self) -> FilterKind {
        self.filter
    }

    pub fn collocation(&self) -> Collocation {
        self.collocation
    }

    pub fn mass(&self) -> Option<f64> {
        self.mass
    }

    /// Exponent `m` in `|ω_a| <= C |a|_w^m`.
    pub fn frequency_growth_exponent(&self) -> f64 {
        match self.model_type() {
            ModelType::Nls => 2.0,
            ModelType::Wave => 1.0,
        }
    }

    /// Smallest `C` with `|ω_a| <= C |a|_w^m` over the stored modes.
    pub fn frequency_bound_constant(&self) -> f64 {
        let m = self.frequency_growth_exponent();
        self.lattice
            .modes()
            .zip(&self.frequencies)
            .map(|(a, w)| w.abs() / a.weight().powf(m))
            .fold(0.0, f64::max)
    }

    pub fn fourier_grid(&self) -> Option<&FourierGrid> {
        match &self.grid {
            Grid::Fourier(g) => Some(g),
            Grid::Cosine(_) => None,
        }
    }

    pub fn cosine_grid(&self) -> Option<&CosineGrid> {
        match &self.grid {
            Grid::Cosine(g) => Some(g),
            Grid::Fourier(_) => None,
        }
    }

    pub(crate) fn check_state(&self, state: &SpectralState) -> Result<()> {
        if state.lattice() != &self.lattice {
            return Err(Error::domain("state lattice does not match the model"));
        }
        Ok(())
    }

    /// `(2π)^{-d}`, the factor turning `|ψ̃|²` on the grid into `|ψ|²`.
    pub(crate) fn nls_density_scale(&self) -> f64 {
        (2.0 * PI).powi(-(self.lattice.dim() as i32))
    }

    /// Filter factors `Φ(h ω_a)` in lattice order.
    pub fn filter_factors(&self, h: f64) -> Vec<f64> {
        self.frequencies.iter().map(|w| self.filter.eval(h * w)).collect()
    }

    /// The nonlinear part `P(z)` of the Hamiltonian.
    pub fn potential_energy(&self, state: &SpectralState) -> Result<f64> {
        self.check_state(state)?;
        match (&self.nonlinearity, &self.grid) {
            (NonlinearityDescriptor::NlsGauge { coefficients }, Grid::Fourier(grid)) => {
                let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
                grid.to_grid(state.coefficients(), &mut buf);
                let scale = self.nls_density_scale();
                let cell = (2.0 * PI / grid.points_per_axis() as f64).powi(self.lattice.dim() as i32);
                Ok(cell
                    * buf
                        .iter()
                        .map(|p| coefficients.antiderivative_at(scale * p.norm_sqr()))
                        .sum::<f64>())
            }
            (NonlinearityDescriptor::WaveKick { coefficients }, Grid::Cosine(grid)) => {
                let u = self.wave_displacement(state, grid);
                Ok(grid.weight() * u.iter().map(|&x| coefficients.antiderivative_at(x)).sum::<f64>())
            }
            _ => unreachable!("model grid matches its nonlinearity"),
        }
    }

    fn wave_displacement(&self, state: &SpectralState, grid: &CosineGrid) -> Vec<f64> {
        let ua: Vec<f64> = state
            .coefficients()
            .iter()
            .zip(&self.frequencies)
            .map(|(xi, w)| SQRT_2 * xi.re / w.sqrt())
            .collect();
        let mut u = vec![0.0; grid.len()];
        grid.to_grid(&ua, &mut u);
        u
    }

    /// `∂P/∂η_a` in spectral form.
    pub fn nonlinear_gradient(&self, state: &SpectralState) -> Result<SpectralState> {
        self.check_state(state)?;
        let mut out = SpectralState::zeros(self.lattice);
        match (&self.nonlinearity, &self.grid) {
            (NonlinearityDescriptor::NlsGauge { coefficients }, Grid::Fourier(grid)) => {
                let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
                grid.to_grid(state.coefficients(), &mut buf);
                let scale = self.nls_density_scale();
                for p in buf.iter_mut() {
                    *p *= coefficients.eval(scale * p.norm_sqr());
                }
                grid.from_grid(&mut buf, out.coefficients_mut());
            }
            (NonlinearityDescriptor::WaveKick { coefficients }, Grid::Cosine(grid)) => {
                let mut force = self.wave_displacement(state, grid);
                for f in force.iter_mut() {
                    *f = coefficients.eval(*f);
                }
                let mut fa = vec![0.0; grid.len()];
                grid.from_grid(&force, &mut fa);
                for ((o, f), w) in out.coefficients_mut().iter_mut().zip(&fa).zip(&self.frequencies) {
                    *o = Complex64::new(f / (SQRT_2 * w.sqrt()), 0.0);
                }
            }
            _ => unreachable!("model grid matches its nonlinearity"),
        }
        Ok(out)
    }

    /// Gradient of `z ↦ P(Φ(hH_0) z)`, i.e. `Φ(hH_0) ∇P(Φ(hH_0) z)`.
    pub fn mollified_gradient(&self, h: f64, state: &SpectralState) -> Result<SpectralState> {
        let filtered = self.mollifier_apply(h, state)?;
        let mut grad = self.nonlinear_gradient(&filtered)?;
        for (g, f) in grad.coefficients_mut().iter_mut().zip(self.filter_factors(h)) {
            *g *= f;
        }
        Ok(grad)
    }

    /// `ξ_a ← Φ(h ω_a) ξ_a`
    pub fn mollifier_apply(&self, h: f64, state: &SpectralState) -> Result<SpectralState> {
        self.check_state(state)?;
        let mut out = state.clone();
        if self.filter == FilterKind::None {
            return Ok(out);
        }
        for (c, f) in out.coefficients_mut().iter_mut().zip(self.filter_factors(h)) {
            *c *= f;
        }
        Ok(out)
    }

    /// Builds the state from displacement `u` and velocity `v` sampled on
    /// the cosine grid.
    pub fn wave_encode(&self, u: &[f64], v: &[f64]) -> Result<SpectralState> {
        let grid = self
            .cosine_grid()
            .ok_or_else(|| Error::domain("wave_encode needs a wave model"))?;
        if u.len() != grid.len() || v.len() != grid.len() {
            return Err(Error::domain(format!(
                "expected grids of {} points, got {} and {}",
                grid.len(),
                u.len(),
                v.len()
            )));
        }
        let mut ua = vec![0.0; grid.len()];
        let mut va = vec![0.0; grid.len()];
        grid.from_grid(u, &mut ua);
        grid.from_grid(v, &mut va);
        let coeffs = ua
            .iter()
            .zip(&va)
            .zip(&self.frequencies)
            .map(|((u, v), w)| {
                let q = w.sqrt() * u;
                let p = v / w.sqrt();
                Complex64::new(q, p) / SQRT_2
            })
            .collect();
        SpectralState::from_coefficients(self.lattice, coeffs)
    }

    /// Inverse of [`PdeModel::wave_encode`].
    pub fn wave_decode(&self, state: &SpectralState) -> Result<(Vec<f64>, Vec<f64>)> {
        let grid = self
            .cosine_grid()
            .ok_or_else(|| Error::domain("wave_decode needs a wave model"))?;
        self.check_state(state)?;
        let (ua, va): (Vec<f64>, Vec<f64>) = state
            .coefficients()
            .iter()
            .zip(&self.frequencies)
            .map(|(xi, w)| {
                let q = SQRT_2 * xi.re;
                let p = SQRT_2 * xi.im;
                (q / w.sqrt(), p * w.sqrt())
            })
            .unzip();
        let mut u = vec![0.0; grid.len()];
        let mut v = vec![0.0; grid.len()];
        grid.to_grid(&ua, &mut u);
        grid.to_grid(&va, &mut v);
        Ok((u, v))
    }
}

/// JSON model descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    #[serde(rename = "type")]
    pub model_type: ModelType,
    #[serde(default = "default_dim")]
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    /// Rows `[a_1, .., a_d, value]`; `value` is a number or `[re, im]`.
    #[serde(default)]
    pub potential: Vec<Vec<serde_json::Value>>,
    pub nonlinearity: NonlinearityDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default)]
    pub filter: FilterKind,
    #[serde(default)]
    pub collocation: Collocation,
}

fn default_dim() -> usize {
    1
}

impl ModelDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<PdeModel> {
        let model = match (self.model_type, &self.nonlinearity) {
            (ModelType::Nls, NonlinearityDescriptor::NlsGauge { coefficients }) => {
                let potential = self
                    .potential
                    .iter()
                    .map(|row| parse_potential_row(row, self.d))
                    .collect::<Result<Vec<_>>>()?;
                nls_model(self.d, self.k, &potential, coefficients.clone())?.with_collocation(self.collocation)?
            }
            (ModelType::Wave, NonlinearityDescriptor::WaveKick { coefficients }) => {
                if self.d != 1 {
                    return Err(Error::domain("wave model lives on the circle (d = 1)"));
                }
                if !self.potential.is_empty() {
                    return Err(Error::domain("wave model takes no potential"));
                }
                let mass = self.mass.ok_or_else(|| Error::domain("wave model needs a mass"))?;
                wave_model(mass, self.k, coefficients.clone())?.with_collocation(self.collocation)?
            }
            _ => return Err(Error::domain("nonlinearity kind does not match the model type")),
        };
        Ok(model.with_filter(self.filter))
    }
}

fn parse_potential_row(row: &[serde_json::Value], dim: usize) -> Result<(Mode, Complex64)> {
    if row.len() != dim + 1 {
        return Err(Error::domain(format!(
            "potential row needs {} entries, got {}",
            dim + 1,
            row.len()
        )));
    }
    let coords = row[..dim]
        .iter()
        .map(|v| {
            v.as_i64()
                .and_then(|x| i32::try_from(x).ok())
                .ok_or_else(|| Error::domain(format!("bad potential mode coordinate {v}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let value = match &row[dim] {
        serde_json::Value::Number(n) => Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0),
        serde_json::Value::Array(parts) if parts.len() == 2 => Complex64::new(
            parts[0].as_f64().unwrap_or(f64::NAN),
            parts[1].as_f64().unwrap_or(f64::NAN),
        ),
        v => return Err(Error::domain(format!("bad potential value {v}"))),
    };
    Ok((Mode::new(&coords), value))
}
