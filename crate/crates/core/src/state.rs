//! Spectral states `ξ_a` on a mode lattice and the quantities measured on
//! them: weighted Sobolev norms, actions, the head/tail energy split and the
//! rounding projection.
//!
//! A state stores only `ξ`; it stands for the real point `z = (ξ, ξ̄)`.
//! Norms are sums over both signs `(a, ±1)`, so every mode contributes
//! twice: `‖z‖_s² = 2 Σ_a |a|_w^{2s} |ξ_a|²`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Mode, ModeLattice};

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralState {
    lattice: ModeLattice,
    coeffs: Vec<Complex64>,
}

/// `|a|_w^{2s}` for every stored mode, in lattice order.
pub fn sobolev_weights(lattice: &ModeLattice, s: f64) -> Vec<f64> {
    lattice.modes().map(|m| (m.weight_sq() as f64).powf(s)).collect()
}

impl SpectralState {
    pub fn zeros(lattice: ModeLattice) -> Self {
        SpectralState {
            lattice,
            coeffs: vec![Complex64::new(0.0, 0.0); lattice.len()],
        }
    }

    pub fn from_coefficients(lattice: ModeLattice, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::domain(format!(
                "expected {} coefficients, got {}",
                lattice.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::domain("non-finite amplitude"));
        }
        Ok(SpectralState { lattice, coeffs })
    }

    pub fn lattice(&self) -> &ModeLattice {
        &self.lattice
    }

    /// Amplitudes in lattice (lexicographic) order.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, mode: &Mode) -> Option<Complex64> {
        self.lattice.index_of(mode).map(|i| self.coeffs[i])
    }

    pub fn set(&mut self, mode: &Mode, value: Complex64) -> Result<()> {
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::domain("non-finite amplitude"));
        }
        let i = self
            .lattice
            .index_of(mode)
            .ok_or_else(|| Error::domain(format!("mode {mode} outside lattice")))?;
        self.coeffs[i] = value;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&mut self, factor: f64) {
        for c in &mut self.coeffs {
            *c *= factor;
        }
    }

    pub fn same_lattice(&self, other: &SpectralState) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::domain("states live on different lattices"));
        }
        Ok(())
    }

    /// `‖z‖_s² = 2 Σ_a |a|_w^{2s} |ξ_a|²`
    pub fn sobolev_norm_sq(&self, s: f64) -> f64 {
        2.0 * self
            .lattice
            .modes()
            .zip(&self.coeffs)
            .map(|(m, c)| (m.weight_sq() as f64).powf(s) * c.norm_sqr())
            .sum::<f64>()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_norm_sq(s).sqrt()
    }

    /// `I_a = |ξ_a|²` in lattice order.
    pub fn actions(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn action(&self, mode: &Mode) -> Option<f64> {
        self.get(mode).map(|c| c.norm_sqr())
    }

    /// Total mass `Σ_a I_a`.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `(N_s^N, R_s^N)`: weighted energy of the modes with `|a|_w <= N` and of
    /// the rest. Both carry the factor 2 of the norm, so they add up to
    /// `‖z‖_s²`.
    pub fn head_tail(&self, s: f64, n: f64) -> Result<(f64, f64)> {
        if !(n >= 1.0) {
            return Err(Error::domain(format!("head/tail split needs N >= 1, got {n}")));
        }
        let mut head = 0.0;
        let mut tail = 0.0;
        for (m, c) in self.lattice.modes().zip(&self.coeffs) {
            let e = (m.weight_sq() as f64).powf(s) * c.norm_sqr();
            if m.weight() <= n {
                head += e;
            } else {
                tail += e;
            }
        }
        Ok((2.0 * head, 2.0 * tail))
    }

    /// Rounding projection `Π_{η,s}`: zeroes every mode with
    /// `|a|_w^s |ξ_a| <= eta`. Returns the number of nonzero amplitudes that
    /// were cleared.
    pub fn project_in_place(&mut self, eta: f64, s: f64) -> usize {
        let mut zeroed = 0;
        for (m, c) in self.lattice.modes().zip(self.coeffs.iter_mut()) {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            if (m.weight_sq() as f64).powf(0.5 * s) * c.norm() <= eta {
                *c = Complex64::new(0.0, 0.0);
                zeroed += 1;
            }
        }
        zeroed
    }

    pub fn project(&self, eta: f64, s: f64) -> (SpectralState, usize) {
        let mut out = self.clone();
        let zeroed = out.project_in_place(eta, s);
        (out, zeroed)
    }

    /// `Σ_a |a|_w^{2s} |I_a(self) - I_a(reference)|`
    pub fn weighted_action_distance(&self, reference: &SpectralState, s: f64) -> Result<f64> {
        self.same_lattice(reference)?;
        Ok(self
            .lattice
            .modes()
            .zip(self.coeffs.iter().zip(&reference.coeffs))
            .map(|(m, (a, b))| (m.weight_sq() as f64).powf(s) * (a.norm_sqr() - b.norm_sqr()).abs())
            .sum())
    }

    /// Largest coefficient-wise distance `max_a |ξ_a - ζ_a|`.
    pub fn max_abs_diff(&self, other: &SpectralState) -> Result<f64> {
        self.same_lattice(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `‖self - other‖_s`
    pub fn sobolev_distance(&self, other: &SpectralState, s: f64) -> Result<f64> {
        self.same_lattice(other)?;
        let diff = SpectralState {
            lattice: self.lattice,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        };
        Ok(diff.sobolev_norm(s))
    }
}

/// Per-step diagnostics of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsSample {
    pub step: usize,
    pub time: f64,
    pub sobolev_norm_s: f64,
    /// `H_0 = Σ_a ω_a I_a`
    pub h0_energy: f64,
    pub head: f64,
    pub tail: f64,
    /// Actions of the tracked modes, in tracking order.
    pub tracked_actions: Vec<f64>,
    /// Modes cleared by the projection of this step.
    pub zeroed_last: usize,
    /// Modes cleared by all projections so far.
    pub zeroed_total: usize,
}

impl DiagnosticsSample {
    #[allow(clippy::too_many_arguments)]
    pub fn measure(
        step: usize,
        time: f64,
        state: &SpectralState,
        frequencies: &[f64],
        s: f64,
        split_n: f64,
        tracked: &[usize],
        zeroed_last: usize,
        zeroed_total: usize,
    ) -> Result<Self> {
        let (head, tail) = state.head_tail(s, split_n)?;
        let h0_energy = state
            .coefficients()
            .iter()
            .zip(frequencies)
            .map(|(c, w)| w * c.norm_sqr())
            .sum();
        let coeffs = state.coefficients();
        Ok(DiagnosticsSample {
            step,
            time,
            sobolev_norm_s: (head + tail).sqrt(),
            h0_energy,
            head,
            tail,
            tracked_actions: tracked.iter().map(|&i| coeffs[i].norm_sqr()).collect(),
            zeroed_last,
            zeroed_total,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.sobolev_norm_s.is_finite()
            && self.h0_energy.is_finite()
            && self.tracked_actions.iter().all(|a| a.is_finite())
    }
}
