//! Small divisors `|1 - e^{ihΩ(j)}|` of a step size `h` over zero-moment
//! multi-indices, with `Ω(j) = Σ δ_i ω_{a_i}`.
//!
//! Action-type indices have `Ω ≡ 0` and are excluded. Other indices whose
//! frequency sum vanishes for the given frequencies (for instance
//! `((0,+),(a,+),(a,-))` when `ω_0 = 0`) make every `h` resonant; they are
//! listed separately as frequency resonances and are left out of the
//! divisor minimization.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Mode, ModeLattice};
use crate::models::PdeModel;
use crate::multiindex::{Entry, MultiIndex, Sign};

/// Largest lattice dimension accepted by the enumeration.
pub const MAX_ENUM_DIM: usize = 2;
/// Largest degree accepted by the enumeration.
pub const MAX_ENUM_DEGREE: usize = 6;
/// `hΩ` within this distance of `2πZ` counts as an exact resonance.
pub const EXACT_RESONANCE_TOL: f64 = 1e-14;
/// `|Ω| <= tol · max|ω|` counts as a vanishing frequency sum.
pub const FREQUENCY_RESONANCE_TOL: f64 = 1e-12;

/// Frequencies `ω_a` on a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Frequencies {
    lattice: ModeLattice,
    values: Vec<f64>,
}

impl Frequencies {
    pub fn new(lattice: ModeLattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::domain("one frequency per stored mode required"));
        }
        if values.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain("frequencies must be finite"));
        }
        Ok(Frequencies { lattice, values })
    }

    pub fn from_fn(lattice: ModeLattice, f: impl Fn(&Mode) -> f64) -> Result<Self> {
        let values = lattice.modes().map(|m| f(&m)).collect();
        Self::new(lattice, values)
    }

    /// `ω_a = a_1² + ... + a_d²` on the full lattice.
    pub fn quadratic(dim: usize, cutoff: usize) -> Result<Self> {
        Self::from_fn(ModeLattice::full(dim, cutoff)?, |m| m.norm_sq() as f64)
    }

    pub fn from_model(model: &PdeModel) -> Self {
        Frequencies {
            lattice: *model.lattice(),
            values: model.frequencies().to_vec(),
        }
    }

    pub fn lattice(&self) -> &ModeLattice {
        &self.lattice
    }

    pub fn get(&self, mode: &Mode) -> Option<f64> {
        self.lattice.index_of(mode).map(|i| self.values[i])
    }
}

/// `Σ δ_i a_i`
pub fn moment(j: &MultiIndex) -> Mode {
    j.moment()
}

/// `Ω(j) = Σ δ_i ω_{a_i}`
pub fn omega_sum(freqs: &Frequencies, j: &MultiIndex) -> Result<f64> {
    j.entries().iter().try_fold(0.0, |acc, e| {
        let w = freqs
            .get(&e.mode)
            .ok_or_else(|| Error::domain(format!("mode {} outside the frequency lattice", e.mode)))?;
        Ok(acc + e.sign.value() as f64 * w)
    })
}

pub fn is_action_type(j: &MultiIndex) -> bool {
    j.is_action_type()
}

/// `|1 - e^{ihΩ}|`, reduced modulo `2π` first; exact resonances give 0.
pub fn divisor(h: f64, omega: f64) -> f64 {
    let turns = h * omega / (2.0 * PI);
    let frac = turns - turns.round();
    if (2.0 * PI * frac).abs() <= EXACT_RESONANCE_TOL {
        0.0
    } else {
        2.0 * (PI * frac).sin().abs()
    }
}

fn validate(r: usize, ncap: usize, lattice: &ModeLattice) -> Result<()> {
    if !(2..=MAX_ENUM_DEGREE).contains(&r) {
        return Err(Error::domain(format!("degree r = {r} outside 2..={MAX_ENUM_DEGREE}")));
    }
    if ncap == 0 {
        return Err(Error::domain("Ncap must be at least 1"));
    }
    if lattice.dim() > MAX_ENUM_DIM {
        return Err(Error::domain(format!("enumeration supports d <= {MAX_ENUM_DIM}")));
    }
    Ok(())
}

/// Signed modes with `|a|_w <= Ncap`, in canonical entry order.
fn candidate_entries(ncap: usize, lattice: &ModeLattice) -> Vec<Entry> {
    let cap = (ncap * ncap) as i64;
    let mut entries: Vec<Entry> = lattice
        .modes()
        .filter(|m| m.weight_sq() <= cap)
        .flat_map(|m| [Entry::minus(m), Entry::plus(m)])
        .collect();
    entries.sort_unstable();
    entries
}

/// Every canonical zero-moment index of length `r` with all `|a_i|_w <=
/// Ncap`, each exactly once. The first `r - 1` entries run over
/// nondecreasing tuples; the last one is fixed by the moment.
pub fn enumerate_zero_moment(r: usize, ncap: usize, lattice: &ModeLattice) -> Result<Vec<MultiIndex>> {
    validate(r, ncap, lattice)?;
    let entries = candidate_entries(ncap, lattice);
    let position: HashMap<Entry, usize> = entries.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let mut out = Vec::new();
    let mut stack = vec![0usize; r - 1];
    let zero = Mode::zero(lattice.dim());
    rec(&entries, &position, &mut stack, 0, 0, zero, &mut out);
    Ok(out)
}

fn rec(
    entries: &[Entry],
    position: &HashMap<Entry, usize>,
    stack: &mut Vec<usize>,
    depth: usize,
    start: usize,
    partial: Mode,
    out: &mut Vec<MultiIndex>,
) {
    if depth == stack.len() {
        let last = stack.last().copied().unwrap_or(0);
        for sign in [Sign::Minus, Sign::Plus] {
            // δ a = -partial
            let mode = partial.scaled(-sign.value());
            let e = Entry::new(mode, sign);
            if let Some(&p) = position.get(&e) {
                if p >= last {
                    let mut v: Vec<Entry> = stack.iter().map(|&i| entries[i]).collect();
                    v.push(e);
                    out.push(MultiIndex::new(v).expect("valid entries"));
                }
            }
        }
        return;
    }
    for i in start..entries.len() {
        stack[depth] = i;
        let e = entries[i];
        let next = partial.add(&e.mode.scaled(e.sign.value()));
        rec(entries, position, stack, depth + 1, i, next, out);
    }
}

/// Ordering used to pick a witness among equally small divisors: fewest
/// negative coordinates, then fewest `-` signs, then smallest modes.
pub(crate) fn witness_key(j: &MultiIndex) -> (usize, usize, u64, &MultiIndex) {
    (j.negative_coords(), j.count_minus(), j.max_weight().to_bits(), j)
}

/// Smallest `N` with all `|a_i|_w <= N`.
fn n_min(j: &MultiIndex) -> u32 {
    (j.max_weight() - 1e-9).ceil().max(1.0) as u32
}

fn threshold(h: f64, gamma: f64, alpha: f64, n: u32) -> f64 {
    h * gamma / (n as f64).powf(alpha)
}

#[derive(Clone, Debug)]
struct IndexInfo {
    index: MultiIndex,
    omega: f64,
    n: u32,
}

/// Zero-moment indices of degrees `2..=r_max` with their frequency sums.
#[derive(Clone, Debug)]
pub struct ResonanceTable {
    r_min: usize,
    r_max: usize,
    ncap: usize,
    infos: Vec<IndexInfo>,
    frequency_resonances: Vec<MultiIndex>,
    enumerated: usize,
    groups: Vec<Group>,
}

/// Indices sharing `(Ω, N_min)`; they pass or fail together.
#[derive(Clone, Debug)]
struct Group {
    omega: f64,
    n: u32,
    witness: MultiIndex,
}

impl ResonanceTable {
    pub fn build(freqs: &Frequencies, r_min: usize, r_max: usize, ncap: usize) -> Result<Self> {
        if r_min > r_max {
            return Err(Error::domain("empty degree range"));
        }
        let cap = (ncap * ncap) as i64;
        let scale = freqs
            .lattice
            .modes()
            .zip(&freqs.values)
            .filter(|(m, _)| m.weight_sq() <= cap)
            .map(|(_, w)| w.abs())
            .fold(0.0, f64::max);
        let mut infos = Vec::new();
        let mut frequency_resonances = Vec::new();
        let mut enumerated = 0;
        for r in r_min..=r_max {
            for j in enumerate_zero_moment(r, ncap, &freqs.lattice)? {
                enumerated += 1;
                if j.is_action_type() {
                    continue;
                }
                let omega = omega_sum(freqs, &j)?;
                if omega.abs() <= FREQUENCY_RESONANCE_TOL * scale {
                    frequency_resonances.push(j);
                    continue;
                }
                let n = n_min(&j);
                infos.push(IndexInfo { index: j, omega, n });
            }
        }
        let mut by_key: BTreeMap<(u64, u32), MultiIndex> = BTreeMap::new();
        for info in &infos {
            let key = (info.omega.abs().to_bits(), info.n);
            match by_key.get(&key) {
                Some(w) if witness_key(w) <= witness_key(&info.index) => {}
                _ => {
                    by_key.insert(key, info.index.clone());
                }
            }
        }
        let groups = by_key
            .into_iter()
            .map(|((bits, n), witness)| Group {
                omega: f64::from_bits(bits),
                n,
                witness,
            })
            .collect();
        Ok(ResonanceTable {
            r_min,
            r_max,
            ncap,
            infos,
            frequency_resonances,
            enumerated,
            groups,
        })
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.r_min, self.r_max)
    }

    pub fn ncap(&self) -> usize {
        self.ncap
    }

    /// Zero-moment indices visited, action-type ones included.
    pub fn enumerated(&self) -> usize {
        self.enumerated
    }

    /// Indices taking part in the minimization.
    pub fn candidates(&self) -> usize {
        self.infos.len()
    }

    pub fn frequency_resonances(&self) -> &[MultiIndex] {
        &self.frequency_resonances
    }

    /// Scan row for one step size.
    pub fn evaluate(&self, h: f64, gamma: f64, alpha: f64) -> ScanRow {
        let mut min: Option<(f64, &Group)> = None;
        let mut worst: Option<(f64, &Group)> = None;
        for g in &self.groups {
            let d = divisor(h, g.omega);
            let better = |cur: &Option<(f64, &Group)>, val: f64| match cur {
                None => true,
                Some((v, w)) => val < *v || (val == *v && witness_key(&g.witness) < witness_key(&w.witness)),
            };
            if better(&min, d) {
                min = Some((d, g));
            }
            let thr = threshold(h, gamma, alpha, g.n);
            if d < thr || d == 0.0 {
                let score = d * (g.n as f64).powf(alpha);
                if better(&worst, score) {
                    worst = Some((score, g));
                }
            }
        }
        let pass = worst.is_none();
        let (min_divisor, reported) = match (min, worst) {
            (None, _) => (f64::NAN, None),
            (Some((d, _)), Some((_, w))) => (d, Some(w)),
            (Some((d, g)), None) => (d, Some(g)),
        };
        ScanRow {
            h,
            min_divisor,
            threshold: reported.map_or(f64::NAN, |g| threshold(h, gamma, alpha, g.n)),
            pass,
            witness: reported.map(|g| g.witness.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivisorReport {
    pub h: f64,
    pub r: usize,
    pub ncap: usize,
    pub min_divisor: f64,
    #[serde(serialize_with = "ser_index")]
    pub witness: MultiIndex,
    /// `Ω` of the witness.
    pub omega: f64,
    /// Zero-moment indices visited, action-type ones included.
    pub enumerated: usize,
    #[serde(serialize_with = "ser_indices")]
    pub frequency_resonances: Vec<MultiIndex>,
}

impl DivisorReport {
    /// `hγ*/N^{α*}` at the witness's smallest admissible `N`.
    pub fn threshold(&self, gamma: f64, alpha: f64) -> f64 {
        threshold(self.h, gamma, alpha, n_min(&self.witness))
    }

    pub fn passes(&self, gamma: f64, alpha: f64) -> bool {
        self.min_divisor > 0.0 && self.min_divisor >= self.threshold(gamma, alpha)
    }
}

fn ser_index<S: serde::Serializer>(j: &MultiIndex, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&j.to_string())
}

fn ser_indices<S: serde::Serializer>(js: &[MultiIndex], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(js.iter().map(|j| j.to_string()))
}

fn ser_opt_index<S: serde::Serializer>(j: &Option<MultiIndex>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match j {
        Some(j) => s.serialize_str(&j.to_string()),
        None => s.serialize_none(),
    }
}

/// Minimizes `|1 - e^{ihΩ(j)}|` over zero-moment indices of length `r`
/// with `|a_i|_w <= Ncap`, skipping action-type indices and vanishing
/// frequency sums.
pub fn min_divisor(freqs: &Frequencies, h: f64, r: usize, ncap: usize) -> Result<DivisorReport> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("step size must be positive, got {h}")));
    }
    let table = ResonanceTable::build(freqs, r, r, ncap)?;
    let best = table
        .infos
        .iter()
        .map(|i| (divisor(h, i.omega), i))
        .min_by(|(a, i), (b, k)| {
            a.total_cmp(b)
                .then_with(|| witness_key(&i.index).cmp(&witness_key(&k.index)))
        })
        .ok_or_else(|| {
            Error::domain(format!(
                "no non-action zero-moment index of degree {r} with nonvanishing frequency sum up to Ncap = {ncap}"
            ))
        })?;
    Ok(DivisorReport {
        h,
        r,
        ncap,
        min_divisor: best.0,
        witness: best.1.index.clone(),
        omega: best.1.omega,
        enumerated: table.enumerated,
        frequency_resonances: table.frequency_resonances.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    /// Length of the witness.
    pub degree: usize,
    /// Smallest `N` whose box contains the witness; the test fails for every
    /// `N` from here up to the first `N` with a lower threshold than the
    /// divisor.
    pub n: u32,
    #[serde(serialize_with = "ser_index")]
    pub witness: MultiIndex,
    pub divisor: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct H1Report {
    pub h: f64,
    pub pass: bool,
    /// Worst violation per `(degree, N)`, ordered by degree then `N`.
    pub violations: Vec<Violation>,
    #[serde(serialize_with = "ser_indices")]
    pub frequency_resonances: Vec<MultiIndex>,
}

/// Tests `|1 - e^{ihΩ(j)}| >= hγ*/N^{α*}` for every degree `2..=r_max` and
/// every `N <= Ncap`, over indices inside the box `|a_i|_w <= N`. An exact
/// resonance always fails.
pub fn check_h1(freqs: &Frequencies, h: f64, r_max: usize, ncap: usize, gamma: f64, alpha: f64) -> Result<H1Report> {
    check_params(h, gamma, alpha)?;
    let table = ResonanceTable::build(freqs, 2, r_max, ncap)?;
    Ok(check_with_table(&table, h, gamma, alpha))
}

fn check_params(h: f64, gamma: f64, alpha: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("step size must be positive, got {h}")));
    }
    if !(gamma >= 0.0) || !(alpha >= 0.0) {
        return Err(Error::domain("gamma* and alpha* must be >= 0"));
    }
    Ok(())
}

pub fn check_with_table(table: &ResonanceTable, h: f64, gamma: f64, alpha: f64) -> H1Report {
    let mut worst: BTreeMap<(usize, u32), Violation> = BTreeMap::new();
    for info in &table.infos {
        let d = divisor(h, info.omega);
        let thr = threshold(h, gamma, alpha, info.n);
        if !(d < thr || d == 0.0) {
            continue;
        }
        let key = (info.index.len(), info.n);
        let replace = match worst.get(&key) {
            None => true,
            Some(v) => d < v.divisor || (d == v.divisor && witness_key(&info.index) < witness_key(&v.witness)),
        };
        if replace {
            worst.insert(
                key,
                Violation {
                    degree: info.index.len(),
                    n: info.n,
                    witness: info.index.clone(),
                    divisor: d,
                    threshold: thr,
                },
            );
        }
    }
    H1Report {
        h,
        pass: worst.is_empty(),
        violations: worst.into_values().collect(),
        frequency_resonances: table.frequency_resonances.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub h: f64,
    /// Smallest divisor over all candidates.
    pub min_divisor: f64,
    /// `hγ*/N^{α*}` at the reported witness.
    pub threshold: f64,
    pub pass: bool,
    /// Worst violation when failing, smallest divisor otherwise.
    #[serde(serialize_with = "ser_opt_index")]
    pub witness: Option<MultiIndex>,
}

/// `check_h1` on every grid point, in parallel, rows in grid order.
pub fn resonance_scan(
    freqs: &Frequencies,
    h_grid: &[f64],
    r: usize,
    ncap: usize,
    gamma: f64,
    alpha: f64,
) -> Result<Vec<ScanRow>> {
    if h_grid.is_empty() {
        return Err(Error::domain("empty step-size grid"));
    }
    if h_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("step-size grid must be strictly ascending"));
    }
    for &h in h_grid {
        check_params(h, gamma, alpha)?;
    }
    let table = ResonanceTable::build(freqs, 2, r, ncap)?;
    Ok(h_grid.par_iter().map(|&h| table.evaluate(h, gamma, alpha)).collect())
}

pub fn scan_to_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("h,min_divisor,threshold,pass,witness\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{},{}\n",
            r.h,
            r.min_divisor,
            r.threshold,
            r.pass,
            r.witness.as_ref().map(|w| w.to_string()).unwrap_or_default()
        ));
    }
    out
}

/// Midpoint grid `(k + 1/2) h_0 / n`, `k = 0..n`.
pub fn midpoint_grid(h0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| (k as f64 + 0.5) * h0 / count as f64).collect()
}

/// Fraction of the midpoint grid of `(0, h_0)` failing `check_h1`.
pub fn resonant_measure(
    freqs: &Frequencies,
    h0: f64,
    grid_count: usize,
    r: usize,
    ncap: usize,
    gamma: f64,
    alpha: f64,
) -> Result<f64> {
    if grid_count < 1000 {
        return Err(Error::domain("resonant_measure needs at least 1000 grid points"));
    }
    check_params(h0, gamma, alpha)?;
    let table = ResonanceTable::build(freqs, 2, r, ncap)?;
    let failed = midpoint_grid(h0, grid_count)
        .par_iter()
        .filter(|&&h| !table.evaluate(h, gamma, alpha).pass)
        .count();
    Ok(failed as f64 / grid_count as f64)
}
