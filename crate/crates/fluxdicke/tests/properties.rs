//! Randomized invariants: structural facts that must hold for any valid
//! parameter set, not just the reference device. Case counts are kept small
//! where a case costs a diagonalization.

use proptest::prelude::*;

use fluxdicke::config::{fmt_sig, RawConfig};
use fluxdicke::fit::nearest_line;
use fluxdicke::longitudinal::{merged_spectrum, LongitudinalParams};
use fluxdicke::model::{build_h_dicke, build_h_flux, parity_op};
use fluxdicke::nelder_mead::{minimize, NelderMeadOptions};
use fluxdicke::spectrum::{
    apply_crosstalk, bias_to_epsilon, complete_label_set, epsilon_to_bias, parse_label,
    projections, SweepCalibration,
};
use fluxdicke::{hermitian_eigenvalues, DickeParams};

fn arb_params(n_cut: usize) -> impl Strategy<Value = DickeParams> {
    (
        1.0f64..10.0,
        -10.0f64..10.0,
        -10.0f64..10.0,
        0.01f64..5.0,
        0.01f64..5.0,
        0.0f64..5.0,
        0.0f64..5.0,
    )
        .prop_map(move |(omega_r, eps1, eps2, delta1, delta2, g1, g2)| DickeParams {
            omega_r,
            eps1,
            eps2,
            delta1,
            delta2,
            g1,
            g2,
            n_cut,
        })
}

fn arb_calibration() -> impl Strategy<Value = SweepCalibration> {
    (
        50.0f64..400.0,
        -1.0f64..1.0,
        -0.05f64..0.05,
        -0.005f64..0.005,
        -0.005f64..0.005,
    )
        .prop_map(|(eps_tilde0, i_b0, a, b_plus, b_minus)| SweepCalibration {
            eps_tilde0,
            i_b0,
            a,
            b_plus,
            b_minus,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The laboratory-frame and rotated-frame builders describe the same
    /// physics: their spectra agree to 1e-9 GHz for any valid parameters.
    #[test]
    fn frames_are_isospectral(p in arb_params(8)) {
        let wf = hermitian_eigenvalues(&build_h_flux(&p).unwrap()).unwrap();
        let wd = hermitian_eigenvalues(&build_h_dicke(&p).unwrap()).unwrap();
        for (a, b) in wf.iter().zip(&wd) {
            prop_assert!((a - b).abs() < 1e-9, "spectra differ by {}", (a - b).abs());
        }
    }

    /// Eigenvalues come back finite and ascending.
    #[test]
    fn spectrum_is_finite_and_sorted(p in arb_params(6)) {
        let w = hermitian_eigenvalues(&build_h_flux(&p).unwrap()).unwrap();
        prop_assert_eq!(w.len(), 4 * p.n_cut);
        for pair in w.windows(2) {
            prop_assert!(pair[0].is_finite() && pair[0] <= pair[1] + 1e-12);
        }
    }

    /// With both bias energies zero the model conserves excitation parity:
    /// the parity operator commutes with the rotated-frame Hamiltonian
    /// (whose qubit quantization axis matches the operator's).
    #[test]
    fn parity_commutes_at_zero_bias(p in arb_params(8)) {
        let p = DickeParams { eps1: 0.0, eps2: 0.0, ..p };
        let h = build_h_dicke(&p).unwrap();
        let parity = parity_op(p.n_cut).unwrap();
        let comm = h.dot(&parity) - parity.dot(&h);
        let scale = h.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let worst = comm.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(worst < 1e-12 * scale.max(1.0), "commutator {worst:.2e} vs scale {scale:.2e}");
    }

    /// The bias-current map and its inverse round-trip.
    #[test]
    fn bias_map_round_trips(cal in arb_calibration(), eps in -20.0f64..20.0) {
        let i = epsilon_to_bias(&cal, eps);
        let back = bias_to_epsilon(&cal, i);
        prop_assert!((back - eps).abs() < 1e-9 * (1.0 + eps.abs()));
    }

    /// Switching the bias-shift coefficients off makes the bias map a pure
    /// relabeling: the shared parameters pass through untouched.
    #[test]
    fn zeroed_crosstalk_is_identity(p in arb_params(4), eps1 in -8.0f64..8.0) {
        let cal = SweepCalibration { a: 0.0, b_plus: 0.0, b_minus: 0.0, ..SweepCalibration::reference_device() };
        let out = apply_crosstalk(&cal, &p, eps1).unwrap();
        prop_assert_eq!(out.eps1, eps1);
        prop_assert_eq!(out.eps2, p.eps2);
        prop_assert_eq!(out.omega_r, p.omega_r);
        prop_assert_eq!(out.delta1, p.delta1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Projection weights over the complete bare basis are a probability
    /// distribution for every eigenstate.
    #[test]
    fn projection_weights_are_complete(p in arb_params(6), eps1 in -6.0f64..6.0) {
        let cal = SweepCalibration::crosstalk_free();
        let labels = complete_label_set(p.n_cut);
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let n_states = 5;
        let t = projections(&p, &cal, &[eps1], &refs, n_states).unwrap();
        for i in 0..n_states {
            let mut sum = 0.0;
            for &w in &t.weights[0][i] {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&w), "weight {w} out of range");
                sum += w;
            }
            prop_assert!((sum - 1.0).abs() < 1e-9, "state {i}: weights sum to {sum}");
        }
    }

    /// The zero-gap sector solution matches an exact diagonalization with
    /// the gaps floored, for any moderate-coupling parameter set.
    #[test]
    fn zero_gap_sectors_match_numerics(
        omega_r in 2.0f64..8.0,
        eps1 in -6.0f64..6.0,
        eps2 in -6.0f64..6.0,
        g_frac in 0.0f64..0.7,
    ) {
        let p = LongitudinalParams { omega_r, eps1, eps2, g: g_frac * omega_r };
        let analytic = merged_spectrum(&p, 3).unwrap();
        let numeric = hermitian_eigenvalues(&build_h_flux(&p.to_dicke(1e-9, 30)).unwrap()).unwrap();
        for (a, b) in analytic.iter().take(4).zip(&numeric) {
            prop_assert!((a - b).abs() < 1e-7, "levels differ by {}", (a - b).abs());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// `nearest_line` picks the closest line, breaking ties toward the
    /// lower index.
    #[test]
    fn nearest_line_matches_reference_rule(
        lines in prop::array::uniform7(0.1f64..20.0),
        omega in 0.0f64..21.0,
    ) {
        let got = nearest_line(&lines, omega);
        let mut best = 0usize;
        for (i, l) in lines.iter().enumerate() {
            if (l - omega).abs() < (lines[best] - omega).abs() {
                best = i;
            }
        }
        prop_assert_eq!(got, best);
        prop_assert!((lines[got] - omega).abs() <= (lines[best] - omega).abs());
    }

    /// Label formatting and parsing invert each other.
    #[test]
    fn state_labels_round_trip(e1 in any::<bool>(), e2 in any::<bool>(), n in 0usize..30) {
        let label = format!(
            "{}{}{}",
            if e1 { 'e' } else { 'g' },
            if e2 { 'e' } else { 'g' },
            n
        );
        let (p1, p2, pn) = parse_label(&label, 30).unwrap();
        prop_assert_eq!((p1, p2, pn), (e1, e2, n));
    }

    /// Significant-digit formatting survives a parse round-trip.
    #[test]
    fn csv_numbers_round_trip(mantissa in -1.0f64..1.0, exp in -6i32..7) {
        let x = mantissa * 10.0f64.powi(exp);
        let s = fmt_sig(x, 12);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs().max(1e-12), "{x} -> {s} -> {back}");
    }

    /// Parsing is stable: the same text yields the same entries and digest.
    #[test]
    fn config_parse_is_deterministic(
        vals in prop::collection::vec(-1000.0f64..1000.0, 1..6)
    ) {
        let mut text = String::from("[model]\n");
        for (i, v) in vals.iter().enumerate() {
            text.push_str(&format!("key{i} = {v}\n"));
        }
        let a = RawConfig::parse(&text).unwrap();
        let b = RawConfig::parse(&text).unwrap();
        prop_assert_eq!(a.digest(), b.digest());
        for (i, v) in vals.iter().enumerate() {
            let got = a.f64("model", &format!("key{i}"), f64::NAN).unwrap();
            prop_assert_eq!(got, *v);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The simplex minimizer finds the minimum of any positive-definite
    /// diagonal quadratic, and its per-iteration best value never rises.
    #[test]
    fn simplex_descends_quadratics(
        center in prop::collection::vec(-2.0f64..2.0, 2..5),
        scales in prop::collection::vec(0.5f64..4.0, 4),
    ) {
        let n = center.len();
        let c = center.clone();
        let s = scales[..n].to_vec();
        let f = move |x: &[f64]| -> f64 {
            x.iter().zip(&c).zip(&s).map(|((xi, ci), si)| si * (xi - ci).powi(2)).sum()
        };
        let opts = NelderMeadOptions { max_iter: 4000, fatol: 1e-12, xatol: 1e-8 };
        let r = minimize(f, &vec![0.0; n], None, &opts).unwrap();
        prop_assert!(r.converged);
        for (xi, ci) in r.x.iter().zip(&center) {
            prop_assert!((xi - ci).abs() < 1e-3, "minimizer off: {xi} vs {ci}");
        }
        for pair in r.trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-15, "trace rose: {:?}", pair);
        }
    }
}
