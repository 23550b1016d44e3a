mod common;

use common::*;
use flyq::io::Table;
use flyq::model::{build_component, make_envelope, AtomKind, ControlSchedule, EnvelopeKind, PhaseSpec};
use flyq::numerics::C64;
use flyq::simulator::propagate;
use flyq::synthesis::*;
use flyq::Error;
use proptest::prelude::*;

fn chirp(c: f64) -> PhaseSpec {
    PhaseSpec { global_pi: false, chirp_rad_per_us: c }
}

fn chirp_pi(c: f64) -> PhaseSpec {
    PhaseSpec { global_pi: true, chirp_rad_per_us: c }
}

fn signed_chirp() -> impl Strategy<Value = f64> {
    (0.5f64..20.0, any::<bool>()).prop_map(|(c, neg)| if neg { -c } else { c })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn convert_rejects_equal_chirped_phases(c in signed_chirp(), w in 1.5f64..2.5, tp in 0.15f64..0.25) {
        let g = grid(-0.75, 0.95, 801);
        let x1 = gauss_phase(&g, w, 0.0, chirp(c));
        let x2 = gauss_phase(&g, w, tp, chirp(c));
        prop_assert!(matches!(synth_lambda_convert(&x1, &x2), Err(Error::PhaseMismatch(_))));
        // the same pair with inverted phase is accepted
        let x2pi = gauss_phase(&g, w, tp, chirp_pi(c));
        prop_assert!(synth_lambda_convert(&x1, &x2pi).is_ok());
    }

    #[test]
    fn lambda_generate_rejects_unequal_chirps(c1 in signed_chirp(), dc in signed_chirp(), w2 in 3.0f64..4.5) {
        let g = grid(-0.75, 0.75, 801);
        let x1 = gauss_phase(&g, 2.0, 0.0, chirp(c1));
        let x2 = gauss_phase(&g, w2, 0.0, chirp(c1 + dc));
        prop_assert!(matches!(
            synth_lambda_generate(half(), half(), &x1, &x2),
            Err(Error::PhaseMismatch(_))
        ));
        let same = gauss_phase(&g, w2, 0.0, chirp(c1));
        let s = synth_lambda_generate(half(), half(), &x1, &same).unwrap();
        let mid = g.nearest_index(0.0);
        prop_assert!((s.epsilon(0)[mid] - c1).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn margin_antisymmetric(w1 in 1.8f64..4.0, w2 in 1.8f64..4.0, c1 in -0.1f64..0.1, c2 in -0.1f64..0.1) {
        let g = grid(-0.9, 0.9, 601);
        let (x1, x2) = (gauss(&g, w1, c1), gauss(&g, w2, c2));
        let (a, b) = (check_tail_dominance(&x1, &x2), check_tail_dominance(&x2, &x1));
        for (p, q) in a.margin.iter().zip(&b.margin) {
            prop_assert_eq!(*p, -*q);
        }
    }

    #[test]
    fn channel_swap_exact(th in 0.05f64..1.5, ph in -3.0f64..3.0, w2 in 1.5f64..4.0) {
        let g = grid(-0.75, 0.75, 401);
        let (x1, x2) = (gauss(&g, 2.0, 0.0), gauss(&g, w2, 0.0));
        let (a1, a2) = (C64::new(th.cos(), 0.0), C64::from_polar(th.sin(), ph));
        let s = synth_lambda_generate(a1, a2, &x1, &x2).unwrap();
        let w = synth_lambda_generate(a2, a1, &x2, &x1).unwrap().permuted(&[1, 0]).unwrap();
        prop_assert_eq!(s.gamma(0), w.gamma(0));
        prop_assert_eq!(s.gamma(1), w.gamma(1));
    }

    #[test]
    fn synthesized_rates_are_valid(w1 in 1.8f64..4.0, w2 in 1.8f64..4.0, tp in 0.0f64..0.3) {
        let g = grid(-0.9, 1.2, 801);
        let (x1, x2) = (gauss(&g, w1, 0.0), gauss(&g, w2, tp));
        let outputs = [
            synth_two_level_generate(&x1),
            synth_two_level_catch(&x2),
            synth_lambda_generate(half(), half(), &x1, &x2.clone().with_label("b")),
            synth_xi_pair(&x1, &x2),
            synth_v_catch(half(), half(), &x1, &x2),
        ];
        for s in outputs.into_iter().flatten() {
            for j in 0..s.channels() {
                prop_assert!(s.gamma(j).iter().all(|v| v.is_finite() && *v >= 0.0 && *v <= 1e4));
                prop_assert!(s.epsilon(j).iter().all(|v| v.is_finite()));
            }
        }
    }

    #[test]
    fn generators_are_contractions(
        kind in prop_oneof![Just(AtomKind::Lambda), Just(AtomKind::Vee), Just(AtomKind::Xi)],
        rates in proptest::collection::vec(0.0f64..200.0, 8),
        eps in proptest::collection::vec(-50.0f64..50.0, 8),
    ) {
        // random knots held piecewise constant on a grid fine enough for RK4
        let g = grid(0.0, 0.5, 401);
        let knot = |v: &[f64]| (0..g.len()).map(|i| v[(i * 4 / g.len()).min(3)]).collect::<Vec<_>>();
        let s = ControlSchedule::new(
            g,
            vec![knot(&rates[..4]), knot(&rates[4..])],
            vec![knot(&eps[..4]), knot(&eps[4..])],
            vec![],
        )
        .unwrap();
        let comp = build_component(kind, &s).unwrap();
        for i in 0..g.len() {
            prop_assert!(comp.max_dissipation_eigenvalue(i) <= 1e-12);
        }
        let traj = propagate(&comp).unwrap();
        prop_assert!(traj.max_column_norm_growth() <= 1e-9);
    }

    #[test]
    fn normalization_is_idempotent(re in proptest::collection::vec(-1.0f64..1.0, 64), im in proptest::collection::vec(-1.0f64..1.0, 64)) {
        prop_assume!(re.iter().chain(&im).any(|v| v.abs() > 1e-3));
        let g = grid(0.0, 1.0, 64);
        // taper the ends so the window edge check passes
        let vals: Vec<C64> = (0..64)
            .map(|i| {
                let w = if i == 0 || i == 63 { 0.0 } else { 1.0 };
                C64::new(re[i], im[i]) * w
            })
            .collect();
        let once = make_envelope(EnvelopeKind::Custom(vals), PhaseSpec::default(), &g, "x").unwrap();
        let twice = once.normalized().unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_symmetric_about_center(w in 1.8f64..5.0, n in 101usize..801) {
        let g = grid(-0.9, 0.9, 2 * (n / 2) + 1);
        let x = gauss(&g, w, 0.0);
        let v = x.values();
        for i in 0..v.len() / 2 {
            prop_assert!((v[i] - v[v.len() - 1 - i]).norm() <= 1e-12 * v[v.len() / 2].norm());
        }
    }

    #[test]
    fn csv_round_trip_is_exact(xs in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..50)) {
        let t = Table::new().with("x", xs.clone());
        let back = Table::from_csv_str(&t.to_csv_string().unwrap()).unwrap();
        for (a, b) in xs.iter().zip(back.column("x").unwrap()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
