#![allow(dead_code)]

use hamsplit::{Entry, Mode, ModeLattice, MultiIndex, Sign, SparsePolynomial, SpectralState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random state with `‖z‖_s = norm`.
pub fn random_state(lattice: ModeLattice, norm: f64, s: f64, seed: u64) -> SpectralState {
    let mut r = rng(seed);
    let coeffs = lattice
        .modes()
        .map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
        .collect();
    let mut z = SpectralState::from_coefficients(lattice, coeffs).unwrap();
    let n = z.sobolev_norm(s);
    z.scale(norm / n);
    z
}

/// Random state supported on `|a|_w <= cap`, other amplitudes exactly 0.
pub fn random_state_within(lattice: ModeLattice, cap: f64, seed: u64) -> SpectralState {
    let mut r = rng(seed);
    let coeffs = lattice
        .modes()
        .map(|m| {
            let v = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
            if m.weight() <= cap {
                v * 0.3
            } else {
                c(0.0, 0.0)
            }
        })
        .collect();
    SpectralState::from_coefficients(lattice, coeffs).unwrap()
}

/// Every signed mode of the 1-d lattice `|a| <= k`.
pub fn signed_modes_1d(k: i32) -> Vec<Entry> {
    (-k..=k)
        .flat_map(|a| [Entry::plus(Mode::d1(a)), Entry::minus(Mode::d1(a))])
        .collect()
}

/// Random zero-moment index of length `r` in one dimension with `|a| <= k`.
pub fn random_index(r: &mut impl Rng, len: usize, k: i32) -> MultiIndex {
    loop {
        let mut entries = Vec::with_capacity(len);
        let mut moment = 0;
        for _ in 0..len - 1 {
            let a = r.gen_range(-k..=k);
            let s = if r.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
            moment += a * s.value();
            entries.push(Entry::new(Mode::d1(a), s));
        }
        let s = if r.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
        let a = -moment * s.value();
        if a.abs() > k {
            continue;
        }
        entries.push(Entry::new(Mode::d1(a), s));
        return MultiIndex::new(entries).unwrap();
    }
}

/// Adds `c z_j + conj(c) z_{j̄}`, which keeps the polynomial real.
pub fn add_real_pair(p: &mut SparsePolynomial, j: MultiIndex, coef: Complex64) {
    let jc = j.conjugate();
    if jc == j {
        p.insert_raw(j, c(coef.re, 0.0)).unwrap();
    } else {
        p.insert_raw(j, coef).unwrap();
        p.insert_raw(jc, coef.conj()).unwrap();
    }
}

/// Random real polynomial with `terms` conjugate pairs of the given
/// lengths, one-dimensional modes `|a| <= k`.
pub fn random_real_polynomial(r: &mut impl Rng, lengths: &[usize], terms: usize, k: i32) -> SparsePolynomial {
    let mut p = SparsePolynomial::new();
    for t in 0..terms {
        let len = lengths[t % lengths.len()];
        let j = random_index(r, len, k);
        add_real_pair(&mut p, j, c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
    }
    p
}

/// `z_j` evaluated entry by entry.
pub fn monomial(j: &MultiIndex, z: &SpectralState) -> Complex64 {
    j.entries().iter().fold(c(1.0, 0.0), |acc, e| {
        let xi = z.get(&e.mode).unwrap();
        acc * match e.sign {
            Sign::Plus => xi,
            Sign::Minus => xi.conj(),
        }
    })
}

pub fn eval(p: &SparsePolynomial, z: &SpectralState) -> Complex64 {
    p.iter().map(|(j, coef)| coef * monomial(j, z)).sum()
}

/// `∂P/∂η_a` at `z`, for every mode of the lattice.
pub fn d_eta(p: &SparsePolynomial, z: &SpectralState) -> Vec<Complex64> {
    let lattice = *z.lattice();
    lattice
        .modes()
        .map(|m| {
            let e = Entry::minus(m);
            p.iter()
                .map(|(j, coef)| {
                    let mult = j.multiplicity(&e);
                    if mult == 0 {
                        return c(0.0, 0.0);
                    }
                    let rest = j.without(&e).map_or(c(1.0, 0.0), |r| monomial(&r, z));
                    coef * rest * mult as f64
                })
                .sum()
        })
        .collect()
}

/// `{F, G}(z)` as the derivative of `F` along the flow
/// `ξ̇_a = -i ∂G/∂η_a` of a real `G`, by a fourth-order central stencil.
pub fn bracket_by_flow(f: &SparsePolynomial, g: &SparsePolynomial, z: &SpectralState, t: f64) -> Complex64 {
    let v: Vec<Complex64> = d_eta(g, z).into_iter().map(|d| c(0.0, -1.0) * d).collect();
    let shift = |sign: f64| {
        let coeffs = z
            .coefficients()
            .iter()
            .zip(&v)
            .map(|(x, d)| x + d * (sign * t))
            .collect();
        SpectralState::from_coefficients(*z.lattice(), coeffs).unwrap()
    };
    let d = |k: f64| eval(f, &shift(k)) - eval(f, &shift(-k));
    (d(1.0) * 8.0 - d(2.0)) / (12.0 * t)
}
