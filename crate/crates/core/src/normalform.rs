//! Sparse polynomials `Q(z) = Σ_j Q_j z_j` over zero-moment multi-indices,
//! their Poisson brackets and regularity seminorms, and the leading-order
//! discrete homological equation
//! `(e^{ihΩ(j)} - 1) χ_j = h P_j - h Z_j`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Mode;
use crate::multiindex::{Entry, MultiIndex, Sign};
use crate::resonance::{divisor, omega_sum, witness_key, Frequencies};
use crate::state::SpectralState;

/// Default `|e^{ihΩ} - 1|` below which the homological equation is treated
/// as resonant.
pub const DEFAULT_DIVISOR_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparsePolynomial {
    terms: BTreeMap<MultiIndex, Complex64>,
}

impl SparsePolynomial {
    pub fn new() -> Self {
        SparsePolynomial::default()
    }

    /// Adds `c z_j`; `j` must have zero moment.
    pub fn insert(&mut self, j: MultiIndex, c: Complex64) -> Result<()> {
        if !j.has_zero_moment() {
            return Err(Error::domain(format!("index {j} has nonzero moment")));
        }
        self.insert_raw(j, c)
    }

    /// Adds `c z_j` without the moment check, for low-degree test monomials.
    pub fn insert_raw(&mut self, j: MultiIndex, c: Complex64) -> Result<()> {
        if let Some((k, _)) = self.terms.iter().next() {
            if k.dim() != j.dim() {
                return Err(Error::domain("polynomial indices have mixed dimensions"));
            }
        }
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::domain("coefficient must be finite"));
        }
        let value = self.get(&j) + c;
        if value == Complex64::new(0.0, 0.0) {
            self.terms.remove(&j);
        } else {
            self.terms.insert(j, value);
        }
        Ok(())
    }

    /// The action `I_a = ξ_a η_a`.
    pub fn action(mode: Mode) -> Self {
        let mut p = SparsePolynomial::new();
        let j = MultiIndex::new(vec![Entry::plus(mode), Entry::minus(mode)]).expect("valid index");
        p.insert(j, Complex64::new(1.0, 0.0)).expect("zero moment");
        p
    }

    pub fn get(&self, j: &MultiIndex) -> Complex64 {
        self.terms.get(j).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.terms.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &MultiIndex> {
        self.terms.keys()
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(|j| j.len()).max().unwrap_or(0)
    }

    /// The common degree when every monomial has the same length.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degrees = self.terms.keys().map(|j| j.len());
        let first = degrees.next()?;
        degrees.all(|d| d == first).then_some(first)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = SparsePolynomial::new();
        for (j, c) in &self.terms {
            out.insert_raw(j.clone(), c * factor).expect("finite");
        }
        out
    }

    pub fn add(&self, other: &SparsePolynomial) -> Result<Self> {
        let mut out = self.clone();
        for (j, c) in &other.terms {
            out.insert_raw(j.clone(), *c)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SparsePolynomial) -> Result<Self> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Largest `|Q_j - conj(Q_{j̄})|`; zero for real polynomials.
    pub fn reality_defect(&self) -> f64 {
        let keys: BTreeSet<MultiIndex> = self.terms.keys().flat_map(|j| [j.clone(), j.conjugate()]).collect();
        keys.iter()
            .map(|j| (self.get(j) - self.get(&j.conjugate()).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.reality_defect() <= tol
    }

    /// `Q(z)` at the real point `z = (ξ, ξ̄)`.
    pub fn evaluate(&self, state: &SpectralState) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (j, c) in &self.terms {
            total += c * monomial_value(j, state)?;
        }
        Ok(total)
    }
}

/// `z_j` at the real point of `state`.
pub fn monomial_value(j: &MultiIndex, state: &SpectralState) -> Result<Complex64> {
    j.entries().iter().try_fold(Complex64::new(1.0, 0.0), |acc, e| {
        let xi = state
            .get(&e.mode)
            .ok_or_else(|| Error::domain(format!("mode {} outside the state lattice", e.mode)))?;
        Ok(acc
            * match e.sign {
                Sign::Plus => xi,
                Sign::Minus => xi.conj(),
            })
    })
}

/// `(μ(j), S(j))`: with weights sorted decreasingly, `μ` is the third and
/// `S = w_1 - w_2 + μ`.
pub fn mu_and_s(j: &MultiIndex) -> Result<(f64, f64)> {
    if j.len() < 3 {
        return Err(Error::domain("μ and S need at least three entries"));
    }
    let w = j.weights_desc();
    Ok((w[2], w[0] - w[1] + w[2]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JClass {
    ActionType,
    InJ,
    OutsideJ,
}

/// Classification against `J_r(N)`: largest weight `<= (r-1)N` and second
/// largest `<= N`.
pub fn jclass(j: &MultiIndex, n: f64, r: usize) -> JClass {
    if j.is_action_type() {
        return JClass::ActionType;
    }
    let w = j.weights_desc();
    let largest = w[0];
    let second = w.get(1).copied().unwrap_or(0.0);
    if largest <= (r as f64 - 1.0) * n && second <= n {
        JClass::InJ
    } else {
        JClass::OutsideJ
    }
}

/// `max_j |Q_j| S(j)^M / μ(j)^{M+ν}` over monomials of degree at least 3.
pub fn seminorm(q: &SparsePolynomial, m: f64, nu: f64) -> f64 {
    q.iter()
        .filter(|(j, _)| j.len() >= 3)
        .map(|(j, c)| {
            let (mu, s) = mu_and_s(j).expect("degree >= 3");
            c.norm() * s.powf(m) / mu.powf(m + nu)
        })
        .fold(0.0, f64::max)
}

/// `∂z_j/∂z_e = mult · z_{j∖e}`; `None` inside means the constant 1.
fn derivative(j: &MultiIndex, e: &Entry) -> Option<(usize, Option<MultiIndex>)> {
    let mult = j.multiplicity(e);
    (mult > 0).then(|| (mult, j.without(e)))
}

fn product(a: &Option<MultiIndex>, b: &Option<MultiIndex>) -> Result<MultiIndex> {
    match (a, b) {
        (Some(a), Some(b)) => a.concat(b),
        (Some(a), None) => Ok(a.clone()),
        (None, Some(b)) => Ok(b.clone()),
        (None, None) => Err(Error::domain("bracket produced a constant term")),
    }
}

/// `{F, G} = i Σ_a (∂F/∂η_a ∂G/∂ξ_a - ∂F/∂ξ_a ∂G/∂η_a)`.
///
/// Evaluated as `(B(F,G) - B(G,F))/2` with `B` the termwise expansion, so
/// antisymmetry holds bit for bit.
pub fn poisson_bracket(f: &SparsePolynomial, g: &SparsePolynomial, max_degree: usize) -> Result<SparsePolynomial> {
    let degree = (f.max_degree() + g.max_degree()).saturating_sub(2);
    if !f.is_empty() && !g.is_empty() && degree > max_degree {
        return Err(Error::domain(format!(
            "bracket degree {degree} exceeds the limit {max_degree}"
        )));
    }
    let fg = expand_bracket(f, g)?;
    let gf = expand_bracket(g, f)?;
    let keys: BTreeSet<&MultiIndex> = fg.keys().chain(gf.keys()).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = SparsePolynomial::new();
    for j in keys {
        let x = fg.get(j).copied().unwrap_or(zero);
        let y = gf.get(j).copied().unwrap_or(zero);
        let c = (x - y) * 0.5;
        if c != zero {
            out.terms.insert(j.clone(), c);
        }
    }
    Ok(out)
}

fn expand_bracket(f: &SparsePolynomial, g: &SparsePolynomial) -> Result<BTreeMap<MultiIndex, Complex64>> {
    let i = Complex64::new(0.0, 1.0);
    let mut out: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
    let mut add = |j: MultiIndex, c: Complex64| {
        *out.entry(j).or_insert(Complex64::new(0.0, 0.0)) += c;
    };
    for (jf, cf) in f.iter() {
        let modes: BTreeSet<Mode> = jf.entries().iter().map(|e| e.mode).collect();
        for (jg, cg) in g.iter() {
            let w = cf * cg;
            for mode in &modes {
                let plus = Entry::plus(*mode);
                let minus = Entry::minus(*mode);
                if let (Some((mf, rf)), Some((mg, rg))) = (derivative(jf, &minus), derivative(jg, &plus)) {
                    add(product(&rf, &rg)?, i * (w * (mf * mg) as f64));
                }
                if let (Some((mf, rf)), Some((mg, rg))) = (derivative(jf, &plus), derivative(jg, &minus)) {
                    add(product(&rf, &rg)?, -i * (w * (mf * mg) as f64));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomologicalSolution {
    pub chi: SparsePolynomial,
    pub zed: SparsePolynomial,
    pub h: f64,
    pub n: f64,
    /// Degree of the solved polynomial; `None` for the zero polynomial.
    pub degree: Option<usize>,
}

impl HomologicalSolution {
    /// `zed` on `A ∪ (I \ J(N))`, `chi` on `J(N) \ A`, disjoint.
    pub fn support_invariants_hold(&self) -> bool {
        let Some(r) = self.degree else {
            return self.chi.is_empty() && self.zed.is_empty();
        };
        let zed_ok = self
            .zed
            .support()
            .all(|j| j.len() == r && jclass(j, self.n, r) != JClass::InJ);
        let chi_ok = self
            .chi
            .support()
            .all(|j| j.len() == r && jclass(j, self.n, r) == JClass::InJ);
        let disjoint = self.chi.support().all(|j| self.zed.get(j) == Complex64::new(0.0, 0.0));
        zed_ok && chi_ok && disjoint
    }
}

/// Leading-order solve of the homological equation for a homogeneous `P`
/// of degree at least 3, with the default divisor floor.
pub fn homological_solve(p: &SparsePolynomial, freqs: &Frequencies, h: f64, n: f64) -> Result<HomologicalSolution> {
    homological_solve_with_floor(p, freqs, h, n, DEFAULT_DIVISOR_FLOOR)
}

pub fn homological_solve_with_floor(
    p: &SparsePolynomial,
    freqs: &Frequencies,
    h: f64,
    n: f64,
    floor: f64,
) -> Result<HomologicalSolution> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("step size must be positive, got {h}")));
    }
    if !(n >= 1.0) {
        return Err(Error::domain("N must be at least 1"));
    }
    let mut sol = HomologicalSolution {
        chi: SparsePolynomial::new(),
        zed: SparsePolynomial::new(),
        h,
        n,
        degree: None,
    };
    if p.is_empty() {
        return Ok(sol);
    }
    let r = p
        .homogeneous_degree()
        .ok_or_else(|| Error::domain("P must be homogeneous"))?;
    if r < 3 {
        return Err(Error::domain("P must have degree at least 3"));
    }
    sol.degree = Some(r);
    let mut resonant: Option<(f64, &MultiIndex)> = None;
    for (j, c) in p.iter() {
        match jclass(j, n, r) {
            JClass::ActionType | JClass::OutsideJ => sol.zed.insert(j.clone(), *c)?,
            JClass::InJ => {
                let omega = omega_sum(freqs, j)?;
                let d = divisor(h, omega);
                if d < floor {
                    let better = match resonant {
                        None => true,
                        Some((v, w)) => d < v || (d == v && witness_key(j) < witness_key(w)),
                    };
                    if better {
                        resonant = Some((d, j));
                    }
                    continue;
                }
                let den = Complex64::from_polar(1.0, h * omega) - 1.0;
                sol.chi.insert(j.clone(), c * h / den)?;
            }
        }
    }
    match resonant {
        Some((divisor, witness)) => Err(Error::Resonance {
            witness: witness.clone(),
            divisor,
        }),
        None => Ok(sol),
    }
}

/// `max_j |(e^{ihΩ(j)} - 1) χ_j - h P_j + h Z_j|` over the joint support.
pub fn verify_conjugacy(sol: &HomologicalSolution, p: &SparsePolynomial, freqs: &Frequencies, h: f64) -> Result<f64> {
    let support: BTreeSet<&MultiIndex> = p.support().chain(sol.chi.support()).chain(sol.zed.support()).collect();
    let mut worst: f64 = 0.0;
    for j in support {
        let omega = omega_sum(freqs, j)?;
        let rot = Complex64::from_polar(1.0, h * omega) - 1.0;
        let res = rot * sol.chi.get(j) - p.get(j) * h + sol.zed.get(j) * h;
        worst = worst.max(res.norm());
    }
    Ok(worst)
}

/// `|{N_s^N, Z}(z)|` with `N_s^N = Σ_{|a|_w <= N} |a|_w^{2s} ξ_a η_a`,
/// computed by bracketing monomials and evaluating at `state`. The state
/// must carry no weight beyond `N`.
pub fn normal_form_vanishing_check(z: &SparsePolynomial, state: &SpectralState, s: f64, n: f64) -> Result<f64> {
    let (_, tail) = state.head_tail(s, n)?;
    if tail != 0.0 {
        return Err(Error::domain(format!("state tail beyond N = {n} is {tail:e}, not 0")));
    }
    if z.is_empty() {
        return Ok(0.0);
    }
    let mut head = SparsePolynomial::new();
    for mode in state.lattice().modes().filter(|m| m.weight() <= n) {
        let w = (mode.weight_sq() as f64).powf(s);
        let j = MultiIndex::new(vec![Entry::plus(mode), Entry::minus(mode)])?;
        head.insert(j, Complex64::new(w, 0.0))?;
    }
    let bracket = poisson_bracket(&head, z, z.max_degree())?;
    Ok(bracket.evaluate(state)?.norm())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TermRecord {
    index: Vec<Vec<i64>>,
    re: f64,
    im: f64,
}

impl SparsePolynomial {
    pub fn to_json(&self) -> String {
        let records: Vec<TermRecord> = self
            .terms
            .iter()
            .map(|(j, c)| TermRecord {
                index: j
                    .entries()
                    .iter()
                    .map(|e| {
                        let mut v: Vec<i64> = e.mode.coords().iter().map(|&x| x as i64).collect();
                        v.push(e.sign.value() as i64);
                        v
                    })
                    .collect(),
                re: c.re,
                im: c.im,
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("serializable")
    }

    /// Reads the list form; indices are canonicalized and must have zero
    /// moment. Repeated indices add up.
    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<TermRecord> = serde_json::from_str(text)?;
        let mut out = SparsePolynomial::new();
        for rec in records {
            let entries = rec
                .index
                .iter()
                .map(|row| {
                    let (sign, coords) = row
                        .split_last()
                        .filter(|(_, c)| !c.is_empty() && c.len() <= crate::lattice::MAX_DIM)
                        .ok_or_else(|| Error::Parse(format!("bad index entry {row:?}")))?;
                    let coords = coords
                        .iter()
                        .map(|&c| i32::try_from(c).map_err(|_| Error::Parse(format!("coordinate {c} too large"))))
                        .collect::<Result<Vec<_>>>()?;
                    let sign = Sign::from_value(*sign).map_err(|e| Error::Parse(e.to_string()))?;
                    Ok(Entry::new(Mode::new(&coords), sign))
                })
                .collect::<Result<Vec<_>>>()?;
            let j = MultiIndex::new(entries).map_err(|e| Error::Parse(e.to_string()))?;
            if !j.has_zero_moment() {
                return Err(Error::Parse(format!("index {j} has nonzero moment")));
            }
            out.insert(j, Complex64::new(rec.re, rec.im))?;
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
