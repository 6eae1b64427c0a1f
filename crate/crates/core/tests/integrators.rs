mod common;

use common::{c, random_state};
use hamsplit::integrators::{mollified_nonlinear_flow, rk4_nonlinear_flow, LongTimeParams};
use hamsplit::{
    evolve, linear_flow, nls_model, nonlinear_flow, split_step, wave_model, Error, EvolutionConfig, FilterKind, Mode,
    PdeModel, RealPolynomial, SpectralState, SplitStepper, SplittingScheme,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn cubic_nls(k: usize) -> PdeModel {
    let potential = [(Mode::d1(0), c(0.3, 0.0)), (Mode::d1(1), c(0.1, 0.0))];
    nls_model(1, k, &potential, RealPolynomial::monomial(1.0, 1)).unwrap()
}

fn quartic_wave(k: usize) -> PdeModel {
    wave_model(1.0, k, RealPolynomial::new(vec![0.0, 0.0, 0.5, 1.0])).unwrap()
}

fn hamiltonian(model: &PdeModel, z: &SpectralState) -> f64 {
    let h0: f64 = z
        .coefficients()
        .iter()
        .zip(model.frequencies())
        .map(|(x, w)| w * x.norm_sqr())
        .sum();
    h0 + model.potential_energy(z).unwrap()
}

/// Real coordinates `(Re ξ, Im ξ)`.
fn to_real(z: &SpectralState) -> Vec<f64> {
    let n = z.coefficients().len();
    let mut v = vec![0.0; 2 * n];
    for (i, x) in z.coefficients().iter().enumerate() {
        v[i] = x.re;
        v[n + i] = x.im;
    }
    v
}

fn from_real(template: &SpectralState, v: &[f64]) -> SpectralState {
    let n = v.len() / 2;
    let coeffs = (0..n).map(|i| c(v[i], v[n + i])).collect();
    SpectralState::from_coefficients(*template.lattice(), coeffs).unwrap()
}

/// `max |Jᵀ Ω J - Ω|` for the step map, Jacobian by central differences.
fn symplectic_defect(step: impl Fn(&SpectralState) -> SpectralState, z: &SpectralState) -> f64 {
    let x = to_real(z);
    let dim = x.len();
    let n = dim / 2;
    let t = 1e-6;
    let mut jac = vec![vec![0.0; dim]; dim];
    for k in 0..dim {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += t;
        xm[k] -= t;
        let fp = to_real(&step(&from_real(z, &xp)));
        let fm = to_real(&step(&from_real(z, &xm)));
        for i in 0..dim {
            jac[i][k] = (fp[i] - fm[i]) / (2.0 * t);
        }
    }
    let omega = |i: usize, j: usize| -> f64 {
        if i < n && j == i + n {
            1.0
        } else if i >= n && j + n == i {
            -1.0
        } else {
            0.0
        }
    };
    let mut worst: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            let mut s = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    let o = omega(i, j);
                    if o != 0.0 {
                        s += jac[i][a] * o * jac[j][b];
                    }
                }
            }
            worst = worst.max((s - omega(a, b)).abs());
        }
    }
    worst
}

#[test]
fn linear_flow_is_the_phase_rotation() {
    let model = cubic_nls(6);
    let z = random_state(*model.lattice(), 0.4, 0.0, 1);
    let h = 0.37;
    let out = linear_flow(&model, &z, h).unwrap();
    for ((a, b), w) in z.coefficients().iter().zip(out.coefficients()).zip(model.frequencies()) {
        let expected = a * Complex64::from_polar(1.0, -h * w);
        assert!((b - expected).norm() < 1e-16);
        assert!((b.norm_sqr() - a.norm_sqr()).abs() < 1e-16);
    }
    let twice = linear_flow(&model, &linear_flow(&model, &z, 0.2).unwrap(), 0.17).unwrap();
    assert!(twice.max_abs_diff(&out).unwrap() < 1e-15);
}

#[test]
fn exact_nonlinear_flows_match_fine_rk4() {
    for model in [cubic_nls(8), quartic_wave(8)] {
        let z = random_state(*model.lattice(), 0.7, 0.0, 2);
        let exact = nonlinear_flow(&model, &z, 0.4).unwrap();
        let rk = rk4_nonlinear_flow(&model, &z, 0.4, 400, None).unwrap();
        let err = exact.max_abs_diff(&rk).unwrap();
        assert!(err < 1e-13, "{:?}: {err:e}", model.model_type());
    }
}

#[test]
fn nonlinear_flow_is_a_group() {
    for model in [cubic_nls(5), quartic_wave(5)] {
        let z = random_state(*model.lattice(), 0.7, 0.0, 3);
        let one = nonlinear_flow(&model, &z, 0.5).unwrap();
        let two = nonlinear_flow(&model, &nonlinear_flow(&model, &z, 0.2).unwrap(), 0.3).unwrap();
        assert!(one.max_abs_diff(&two).unwrap() < 1e-14);
        let back = nonlinear_flow(&model, &one, -0.5).unwrap();
        assert!(back.max_abs_diff(&z).unwrap() < 1e-14);
    }
}

#[test]
fn gauge_flow_conserves_mass_and_energy() {
    let model = cubic_nls(10);
    let z = random_state(*model.lattice(), 1.0, 0.0, 4);
    let out = nonlinear_flow(&model, &z, 1.0).unwrap();
    assert!((out.mass() - z.mass()).abs() < 1e-14 * z.mass());
    let (p0, p1) = (
        model.potential_energy(&z).unwrap(),
        model.potential_energy(&out).unwrap(),
    );
    assert!((p0 - p1).abs() < 1e-14 * p0.abs());
}

#[test]
fn strang_is_time_symmetric() {
    for model in [cubic_nls(6), quartic_wave(6)] {
        let z = random_state(*model.lattice(), 0.5, 0.0, 5);
        let scheme = SplittingScheme::strang();
        let (fwd, _) = split_step(&scheme, &model, &z, 0.1).unwrap();
        let (back, _) = split_step(&scheme, &model, &fwd, -0.1).unwrap();
        assert!(back.max_abs_diff(&z).unwrap() < 1e-14);
    }
}

#[test]
fn splitting_steps_are_symplectic() {
    for model in [cubic_nls(3), quartic_wave(4)] {
        let z = random_state(*model.lattice(), 0.6, 0.0, 6);
        for scheme in [SplittingScheme::lie(), SplittingScheme::strang()] {
            let stepper = SplitStepper::new(&model, &scheme, 0.2).unwrap();
            let step = |w: &SpectralState| {
                let mut w = w.clone();
                stepper.step(&mut w).unwrap();
                w
            };
            let defect = symplectic_defect(step, &z);
            assert!(defect < 1e-8, "{:?}: {defect:e}", scheme.composition);
        }
    }
    let model = quartic_wave(4).with_filter(FilterKind::Sinc);
    let z = random_state(*model.lattice(), 0.6, 0.0, 7);
    let stepper = SplitStepper::new(&model, &SplittingScheme::strang().with_mollifier(), 0.5).unwrap();
    let defect = symplectic_defect(
        |w| {
            let mut w = w.clone();
            stepper.step(&mut w).unwrap();
            w
        },
        &z,
    );
    assert!(defect < 1e-8, "mollified: {defect:e}");
}

#[test]
fn strang_energy_error_stays_bounded() {
    let model = cubic_nls(16);
    let z = random_state(*model.lattice(), 0.3, 1.0, 8);
    let e0 = hamiltonian(&model, &z);
    let stepper = SplitStepper::new(&model, &SplittingScheme::strang(), 0.005).unwrap();
    let mut w = z.clone();
    let mut early: f64 = 0.0;
    let mut late: f64 = 0.0;
    for n in 1..=20_000 {
        stepper.step(&mut w).unwrap();
        let err = (hamiltonian(&model, &w) - e0).abs();
        if n <= 2_000 {
            early = early.max(err);
        } else {
            late = late.max(err);
        }
    }
    assert!(early < 1e-4 * e0.abs());
    assert!(late < 2.0 * early, "early {early:e} late {late:e}");
}

#[test]
fn mollified_flows_match_fine_rk4() {
    let h = 0.4;
    let nls = cubic_nls(6).with_filter(FilterKind::Sinc);
    let z = random_state(*nls.lattice(), 0.8, 0.0, 9);
    let adaptive = mollified_nonlinear_flow(&nls, &z, 0.2, h).unwrap();
    let fine = rk4_nonlinear_flow(&nls, &z, 0.2, 4096, Some(h)).unwrap();
    assert!(adaptive.max_abs_diff(&fine).unwrap() < 1e-12);

    let wave = quartic_wave(6).with_filter(FilterKind::RaisedCosine);
    let z = random_state(*wave.lattice(), 0.8, 0.0, 10);
    let exact = mollified_nonlinear_flow(&wave, &z, 0.2, h).unwrap();
    let fine = rk4_nonlinear_flow(&wave, &z, 0.2, 64, Some(h)).unwrap();
    assert!(exact.max_abs_diff(&fine).unwrap() < 1e-14);

    assert!(mollified_nonlinear_flow(&cubic_nls(4), &SpectralState::zeros(*cubic_nls(4).lattice()), 0.1, h).is_err());
    assert!(SplitStepper::new(&cubic_nls(4), &SplittingScheme::lie().with_mollifier(), 0.1).is_err());
}

#[test]
fn mollifier_with_unit_filter_is_plain_splitting() {
    // Φ ≡ 1 at the resolved frequencies when h = 0
    let wave = quartic_wave(5).with_filter(FilterKind::Sinc);
    let z = random_state(*wave.lattice(), 0.5, 0.0, 11);
    let plain = nonlinear_flow(&wave, &z, 0.3).unwrap();
    let moll = mollified_nonlinear_flow(&wave, &z, 0.3, 0.0).unwrap();
    assert!(plain.max_abs_diff(&moll).unwrap() < 1e-15);
}

#[test]
fn evolve_sampling_and_counters() {
    let model = cubic_nls(8);
    let z = random_state(*model.lattice(), 0.1, 2.0, 12);
    let mut cfg = EvolutionConfig::new(0.01, 23, 2.0);
    cfg.cadence = 5;
    cfg.tracked = vec![vec![1], vec![-3]];
    let rec = evolve(&SplittingScheme::lie(), &model, &z, &cfg).unwrap();
    let steps: Vec<usize> = rec.samples.iter().map(|s| s.step).collect();
    assert_eq!(steps, vec![0, 5, 10, 15, 20, 23]);
    assert_eq!(rec.eta, 0.0);
    let csv = rec.to_csv();
    assert!(csv.starts_with("step,t,norm_s,h0_energy,head,tail,zeroed,I_1,I_-3\n"));
    assert_eq!(csv.lines().count(), 7);

    let mut manual = z.clone();
    let stepper = SplitStepper::new(&model, &SplittingScheme::lie(), 0.01).unwrap();
    for _ in 0..23 {
        stepper.step(&mut manual).unwrap();
    }
    assert_eq!(manual, rec.final_state);

    cfg.n_steps = 0;
    let rec0 = evolve(&SplittingScheme::lie(), &model, &z, &cfg).unwrap();
    assert_eq!(rec0.samples.len(), 1);
    assert_eq!(rec0.final_state, z);
}

#[test]
fn evolve_rounding_counts_and_default_eta() {
    let model = cubic_nls(12);
    let mut z = random_state(*model.lattice(), 0.1, 2.0, 13);
    z.set(&Mode::d1(12), c(1e-9, 0.0)).unwrap();
    z.set(&Mode::d1(-11), c(0.0, 1e-9)).unwrap();
    let mut cfg = EvolutionConfig::new(0.01, 10, 2.0);
    cfg.long_time = Some(LongTimeParams { epsilon: 0.1, r: 4 });
    let mut scheme = SplittingScheme::lie();
    scheme.rounding.enabled = true;
    scheme.rounding.s = 2.0;
    let rec = evolve(&scheme, &model, &z, &cfg).unwrap();
    assert!((rec.eta - 0.1f64.powf(4.25)).abs() < 1e-20);
    let totals: Vec<usize> = rec.samples.iter().map(|s| s.zeroed_total).collect();
    assert!(totals.windows(2).all(|w| w[0] <= w[1]));
    assert!(totals[1] >= 2);
    assert_eq!(rec.final_state.get(&Mode::d1(12)).unwrap(), c(0.0, 0.0));

    cfg.long_time = None;
    assert!(evolve(&scheme, &model, &z, &cfg).is_err());
    let bad = SplittingScheme::lie().with_rounding(-1.0, 2.0);
    assert!(evolve(&bad, &model, &z, &EvolutionConfig::new(0.01, 1, 2.0)).is_err());
    assert!(evolve(
        &SplittingScheme::lie(),
        &model,
        &z,
        &EvolutionConfig::new(-0.01, 1, 2.0)
    )
    .is_err());
    let mut untracked = EvolutionConfig::new(0.01, 1, 2.0);
    untracked.tracked = vec![vec![40]];
    assert!(evolve(&SplittingScheme::lie(), &model, &z, &untracked).is_err());
}

#[test]
fn blow_up_is_reported_with_its_step() {
    let model = wave_model(1.0, 4, RealPolynomial::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, -1.0])).unwrap();
    let mut z = SpectralState::zeros(*model.lattice());
    z.set(&Mode::d1(0), c(1e30, 0.0)).unwrap();
    let err = evolve(&SplittingScheme::lie(), &model, &z, &EvolutionConfig::new(0.5, 50, 1.0)).unwrap_err();
    match err {
        Error::Integration { step, .. } => assert!((1..=50).contains(&step)),
        other => panic!("unexpected error {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_step_is_identity(seed in 0u64..1000) {
        for model in [cubic_nls(5), quartic_wave(5)] {
            let z = random_state(*model.lattice(), 0.5, 0.0, seed);
            for scheme in [SplittingScheme::lie(), SplittingScheme::strang()] {
                let (out, zeroed) = split_step(&scheme, &model, &z, 0.0).unwrap();
                prop_assert_eq!(zeroed, 0);
                prop_assert_eq!(&out, &z);
            }
        }
    }

    #[test]
    fn lie_mass_is_conserved(seed in 0u64..1000, h in 0.001f64..0.5) {
        let model = cubic_nls(7);
        let z = random_state(*model.lattice(), 0.8, 0.0, seed);
        let stepper = SplitStepper::new(&model, &SplittingScheme::lie(), h).unwrap();
        let mut w = z.clone();
        for _ in 0..50 {
            stepper.step(&mut w).unwrap();
        }
        prop_assert!((w.mass() - z.mass()).abs() < 1e-13 * z.mass());
    }
}
