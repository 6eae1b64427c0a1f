//! Collocation grids linking mode amplitudes to point values.
//!
//! [`FourierGrid`] serves `Z^d` lattices: `n` equispaced points per axis on
//! `[0, 2π)`, with `n = 2K + 1` for exact (bijective) collocation or a padded
//! size for dealiased products. [`CosineGrid`] serves the half lattice `N` of
//! even functions on the circle, sampled at the `K + 1` midpoints of
//! `(0, π)`; mirrored, these are `2(K + 1)` points of the circle.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::{LatticeKind, ModeLattice};

#[derive(Clone)]
pub struct FourierGrid {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    positions: Vec<usize>,
}

impl std::fmt::Debug for FourierGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl FourierGrid {
    /// Grid with `n` points per axis; needs `n >= 2K + 1`.
    pub fn new(lattice: &ModeLattice, n: usize) -> Result<Self> {
        if lattice.kind() != LatticeKind::Full {
            return Err(Error::domain("Fourier collocation needs a full lattice"));
        }
        let k = lattice.cutoff();
        if n < 2 * k + 1 {
            return Err(Error::domain(format!(
                "grid of {n} points cannot resolve modes up to {k}"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let dim = lattice.dim();
        let positions = lattice
            .modes()
            .map(|m| {
                m.coords()
                    .iter()
                    .fold(0usize, |acc, &c| acc * n + (c.rem_euclid(n as i32) as usize))
            })
            .collect();
        Ok(FourierGrid {
            dim,
            n,
            forward,
            inverse,
            positions,
        })
    }

    /// Exact collocation: `2K + 1` points per axis.
    pub fn exact(lattice: &ModeLattice) -> Result<Self> {
        Self::new(lattice, 2 * lattice.cutoff() + 1)
    }

    /// 3/2-rule zero padding of the exact grid.
    pub fn dealiased(lattice: &ModeLattice) -> Result<Self> {
        let base = 2 * lattice.cutoff() + 1;
        Self::new(lattice, (3 * base).div_ceil(2))
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid coordinates `x_k = 2π k / n` along one axis.
    pub fn axis_points(&self) -> Vec<f64> {
        (0..self.n).map(|k| 2.0 * PI * k as f64 / self.n as f64).collect()
    }

    /// Lattice index → flat grid buffer position of that mode's FFT bin.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// `buf[x] = Σ_a c_a e^{i a·x}` (no normalization).
    pub fn to_grid(&self, coeffs: &[Complex64], buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len());
        buf.fill(Complex64::new(0.0, 0.0));
        for (c, &p) in coeffs.iter().zip(&self.positions) {
            buf[p] = *c;
        }
        self.transform(buf, &self.inverse);
    }

    /// `c_a = n^{-d} Σ_x buf[x] e^{-i a·x}`; overwrites `buf`.
    pub fn from_grid(&self, buf: &mut [Complex64], coeffs: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len());
        self.transform(buf, &self.forward);
        // exact division, not a rounded reciprocal
        let n = self.len() as f64;
        for (c, &p) in coeffs.iter_mut().zip(&self.positions) {
            *c = buf[p] / n;
        }
    }

    fn transform(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        if self.dim == 1 {
            fft.process_with_scratch(buf, &mut scratch);
            return;
        }
        let total = buf.len();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            for base in 0..total {
                if !(base / stride).is_multiple_of(n) {
                    continue;
                }
                for (j, l) in line.iter_mut().enumerate() {
                    *l = buf[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, l) in line.iter().enumerate() {
                    buf[base + j * stride] = *l;
                }
            }
        }
    }
}

/// Even functions on the circle, `u(x) = Σ_{a=0}^{K} u_a φ_a(x)` with the
/// L²-orthonormal basis `φ_0 = (2π)^{-1/2}`, `φ_a = π^{-1/2} cos(a x)`.
#[derive(Clone, Debug)]
pub struct CosineGrid {
    modes: usize,
    /// `table[a * modes + k] = φ_a(x_k)`
    table: Vec<f64>,
    weight: f64,
}

impl CosineGrid {
    pub fn new(lattice: &ModeLattice) -> Result<Self> {
        if lattice.kind() != LatticeKind::Half || lattice.dim() != 1 {
            return Err(Error::domain("cosine collocation needs the half lattice N"));
        }
        let modes = lattice.cutoff() + 1;
        let mut table = vec![0.0; modes * modes];
        for a in 0..modes {
            for k in 0..modes {
                let x = PI * (k as f64 + 0.5) / modes as f64;
                table[a * modes + k] = basis(a, x);
            }
        }
        Ok(CosineGrid {
            modes,
            table,
            weight: 2.0 * PI / modes as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.modes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample points `x_k = π (k + 1/2) / (K + 1)`.
    pub fn points(&self) -> Vec<f64> {
        (0..self.modes)
            .map(|k| PI * (k as f64 + 0.5) / self.modes as f64)
            .collect()
    }

    /// Quadrature weight: `∫_T f dx ≈ weight · Σ_k f(x_k)` for even `f`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn to_grid(&self, coeffs: &[f64], values: &mut [f64]) {
        let m = self.modes;
        values.fill(0.0);
        for (a, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.table[a * m..(a + 1) * m];
            for (v, phi) in values.iter_mut().zip(row) {
                *v += c * phi;
            }
        }
    }

    pub fn from_grid(&self, values: &[f64], coeffs: &mut [f64]) {
        let m = self.modes;
        for (a, c) in coeffs.iter_mut().enumerate() {
            let row = &self.table[a * m..(a + 1) * m];
            *c = self.weight * row.iter().zip(values).map(|(p, v)| p * v).sum::<f64>();
        }
    }
}

fn basis(a: usize, x: f64) -> f64 {
    if a == 0 {
        (2.0 * PI).sqrt().recip()
    } else {
        (a as f64 * x).cos() / PI.sqrt()
    }
}
