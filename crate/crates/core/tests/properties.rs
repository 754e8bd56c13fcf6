mod common;

use nitride_rts::materials::BinaryTable;
use nitride_rts::observables::{OscillatorForm, TransitionTable};
use nitride_rts::poisson::{hartree_closed_form, ionized_donors, occupation};
use nitride_rts::polarization::{internal_fields, layer_polarizations, Substrate};
use nitride_rts::potential::{LinearSegment, PiecewiseLinearPotential};
use nitride_rts::scf::convergence_delta;
use nitride_rts::schrodinger::{bound_states, SolverOptions};
use nitride_rts::special_fn::airy_scaled;
use nitride_rts::structure::{Layer, LayerRole, LayerStack};
use proptest::prelude::*;

fn layers() -> impl Strategy<Value = Vec<Layer>> {
    prop::collection::vec((0.0f64..=1.0, 0.3f64..3.0), 1..9).prop_map(|v| {
        v.into_iter()
            .map(|(x, t)| Layer::new((x * 20.0).round() / 20.0, t, LayerRole::Barrier))
            .collect()
    })
}

fn split(pot: &PiecewiseLinearPotential) -> PiecewiseLinearPotential {
    let mut segs = Vec::new();
    for s in &pot.segments {
        let zm = 0.5 * (s.z0 + s.z1);
        let vm = s.value_at(zm);
        segs.push(LinearSegment { z1: zm, v1: vm, ..*s });
        segs.push(LinearSegment { z0: zm, v0: vm, ..*s });
    }
    PiecewiseLinearPotential::new(segs, pot.left, pot.right).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fields_leave_no_net_voltage(layers in layers(), clad in 0.0f64..=1.0) {
        let t = BinaryTable::default();
        let stack = LayerStack::new(layers, clad, &t).unwrap();
        let p = layer_polarizations(&stack, &t, Substrate::Cladding).unwrap();
        let f = internal_fields(&stack, &p).unwrap();
        let scale: f64 = f.fields.iter().zip(&stack.thicknesses()).map(|(a, d)| (a * d).abs()).sum();
        prop_assert!(f.voltage_sum().abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn displacement_is_continuous(layers in layers(), pert in prop::collection::vec(-0.05f64..0.05, 9)) {
        let t = BinaryTable::default();
        let stack = LayerStack::new(layers, 1.0, &t).unwrap();
        let p: Vec<f64> = (0..stack.len()).map(|i| -0.06 + pert[i]).collect();
        let f = internal_fields(&stack, &p).unwrap();
        let d = f.displacements();
        let scale = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for w in d.windows(2) {
            prop_assert!((w[0] - w[1]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn airy_wronskian(x in -60.0f64..60.0) {
        let w = airy_scaled(x).values.wronskian();
        prop_assert!((w * std::f64::consts::PI - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn delta_is_zero_on_repeat_and_scales(v in prop::collection::vec(1e-6f64..1.0, 1..50), k in 0.1f64..3.0) {
        prop_assert_eq!(convergence_delta(&v, &v), 0.0);
        let w: Vec<f64> = v.iter().map(|x| k * x).collect();
        prop_assert!((convergence_delta(&v, &w) - (k - 1.0).abs()).abs() <= 1e-12);
    }

    #[test]
    fn occupations_grow_with_fermi_level(e in -0.5f64..0.5, ef in -0.5f64..0.5, de in 1e-4f64..0.1) {
        prop_assert!(occupation(e, ef + de, 300.0) > occupation(e, ef, 300.0));
        prop_assert!(ionized_donors(1.0, ef + de, 300.0, e, 2.0) <= ionized_donors(1.0, ef, 300.0, e, 2.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn states_are_normalized(seed in any::<u64>()) {
        let pot = common::random_potential(seed);
        for s in bound_states(&pot, &SolverOptions::default()).unwrap() {
            prop_assert!((s.norm() - 1.0).abs() <= 1e-8, "E = {} norm = {}", s.energy, s.norm());
        }
    }

    #[test]
    fn states_have_increasing_node_counts(seed in any::<u64>()) {
        let pot = common::random_potential(seed);
        let states = bound_states(&pot, &SolverOptions::default()).unwrap();
        for (n, s) in states.iter().enumerate() {
            prop_assert_eq!(s.node_count, n);
        }
    }

    #[test]
    fn splitting_segments_keeps_eigenvalues(seed in any::<u64>()) {
        let pot = common::random_potential(seed);
        let a = bound_states(&pot, &SolverOptions::default()).unwrap();
        let b = bound_states(&split(&pot), &SolverOptions::default()).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.energy - y.energy).abs() <= 1e-6);
        }
    }

    #[test]
    fn oscillator_table_is_antisymmetric(seed in any::<u64>()) {
        let pot = common::random_potential(seed);
        let states = bound_states(&pot, &SolverOptions::default()).unwrap();
        let t = TransitionTable::new(&states, OscillatorForm::LayerResolved);
        for i in 0..t.len() {
            prop_assert_eq!(t.f[i][i], 0.0);
            for j in 0..t.len() {
                prop_assert_eq!(t.f[i][j], -t.f[j][i]);
                prop_assert_eq!(t.omega[i][j], -t.omega[j][i]);
            }
        }
        if t.len() >= 3 {
            prop_assert!((t.omega[2][0] - (t.omega[2][1] + t.omega[1][0])).abs() <= 1e-15);
        }
    }

    #[test]
    fn hartree_vanishes_at_both_ends(seed in any::<u64>(), nd in 1e17f64..5e19) {
        let pot = common::random_potential(seed);
        let states = bound_states(&pot, &SolverOptions::default()).unwrap();
        prop_assume!(!states.is_empty());
        let c = common::doped_charge(&pot, &states, nd, 0);
        let h = hartree_closed_form(&pot, &c).unwrap();
        prop_assert!(h.value(&c, pot.start()).abs() <= 1e-12);
        prop_assert!(h.end_value(&c).abs() <= 1e-12);
        prop_assert!(h.matching_residual(&c) <= 1e-10);
    }
}
