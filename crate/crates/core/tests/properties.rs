//! Property tests for the label-level invariants.

use num_complex::Complex64;
use proptest::prelude::*;
use spinqsd::analytic::{self, TorusCoords};
use spinqsd::{Chart, CoherentLabel, ModelParams, SpinQuantum};

fn finite_complex(range: f64) -> impl Strategy<Value = Complex64> {
    (-range..range, -range..range).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #[test]
    fn mirror_is_an_exact_involution(mu in finite_complex(1e6)) {
        let label = CoherentLabel::north(mu);
        prop_assert_eq!(label.mirror().mirror().value(), label.value());
        // mirror reflects the Bloch vector in the x = 0 plane exactly
        let n = label.bloch_vector();
        let nm = label.mirror().bloch_vector();
        prop_assert_eq!(nm[0], -n[0]);
        prop_assert_eq!(nm[1], n[1]);
        prop_assert_eq!(nm[2], n[2]);
    }

    #[test]
    fn bloch_vectors_are_unit_norm(mu in finite_complex(1e3), south in any::<bool>()) {
        let label = if south {
            CoherentLabel::south(mu)
        } else {
            CoherentLabel::north(mu)
        };
        let n = label.bloch_vector();
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn chart_conversion_round_trips(mu in finite_complex(10.0)) {
        prop_assume!(mu.norm() > 0.1 && mu.norm() < 10.0);
        let label = CoherentLabel::north(mu);
        let back = label.to_chart(Chart::South).to_chart(Chart::North);
        prop_assert!((back.value() - mu).norm() <= 1e-12 * mu.norm());
        // both charts describe the same point on the sphere
        let n = label.bloch_vector();
        let ns = label.to_chart(Chart::South).bloch_vector();
        for k in 0..3 {
            prop_assert!((n[k] - ns[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn torus_coordinates_round_trip(
        m in -0.95f64..0.95,
        phi in 0.0f64..std::f64::consts::TAU,
        two_j in 2u32..200,
    ) {
        let p = ModelParams::from_lambda(SpinQuantum::from_two_j(two_j).unwrap(), 1.7).unwrap();
        let label = analytic::analytic_trajectory(&TorusCoords { m, phi }, &p, 0.0).unwrap();
        let coords = analytic::to_torus_coords(&label, &p).unwrap();
        prop_assert!((coords.m - m).abs() <= 1e-10);
        let mut dphi = coords.phi - phi;
        while dphi > std::f64::consts::PI { dphi -= 2.0 * std::f64::consts::PI; }
        while dphi < -std::f64::consts::PI { dphi += 2.0 * std::f64::consts::PI; }
        prop_assert!(dphi.abs() <= 1e-10);
    }

    #[test]
    fn coherent_states_are_normalized(
        mu in finite_complex(8.0),
        two_j in prop::sample::select(vec![1u32, 2, 7, 40, 61, 300]),
    ) {
        let j = SpinQuantum::from_two_j(two_j).unwrap();
        let s = spinqsd::spin::coherent_state(j, &CoherentLabel::north(mu)).unwrap();
        let norm: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
        // first amplitude real non-negative fixes the global phase
        prop_assert!(s[0].im == 0.0 && s[0].re >= 0.0);
    }

    #[test]
    fn torus_sampler_stays_in_range_and_matches_pdf_support(
        u in 0.0f64..1.0,
        lambda in 1.01f64..5.0,
    ) {
        let m = analytic::torus_distribution_sample(u, lambda);
        prop_assert!((-1.0..=1.0).contains(&m));
        prop_assert!(analytic::torus_distribution_pdf(m, lambda) > 0.0);
    }
}
