//! Randomized invariants for the sequence, filter, and optimizer layers.

use std::f64::consts::PI;

use ddforge::filter::{
    chi_frequency_domain, chi_time_domain, modulation, window_transform, CoherencePair,
};
use ddforge::noise::OUNoiseParams;
use ddforge::optimize::{gaps_from_times, times_from_gaps, OptimizationProblem};
use ddforge::sequence::{cpmg, custom_symmetric, udd, PulseSequence};
use proptest::prelude::*;

fn noise() -> OUNoiseParams {
    OUNoiseParams::symmetric(2.0 * PI * 0.08, 0.5, 0.8).unwrap()
}

/// Random admissible pulse times in (0, 1) with a minimum gap.
fn pulse_times() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, 1..6).prop_map(|raw| {
        let total: f64 = raw.iter().sum::<f64>() + 0.05;
        let mut acc = 0.0;
        raw.iter()
            .take(raw.len() - 1)
            .map(|g| {
                acc += g;
                acc / total
            })
            .collect::<Vec<_>>()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn builders_produce_sorted_interior_times(n in 1usize..12, t in 0.1f64..10.0) {
        for seq in [cpmg(n, t).unwrap(), udd(n, t).unwrap()] {
            let times = seq.pulse_times(0);
            prop_assert_eq!(times.len(), n);
            for w in times.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
            prop_assert!(times[0] > 0.0 && *times.last().unwrap() < t);
            prop_assert_eq!(seq.pulse_times(0), seq.pulse_times(1));
        }
    }

    #[test]
    fn stretching_scales_pulse_times(n in 1usize..9, t in 0.1f64..4.0, k in 0.2f64..5.0) {
        let seq = cpmg(n, t).unwrap();
        let stretched = seq.stretched(k * t).unwrap();
        let a = seq.pulse_times(0);
        let b = stretched.pulse_times(0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - k * x).abs() < 1e-12 * (k * t));
        }
    }

    #[test]
    fn sequence_json_roundtrip(times in pulse_times()) {
        prop_assume!(!times.is_empty());
        let seq = custom_symmetric(&times, 1.0).unwrap();
        let back = PulseSequence::from_json(&seq.to_json()).unwrap();
        prop_assert_eq!(seq, back);
    }

    #[test]
    fn zero_frequency_transform_equals_signed_area(times in pulse_times()) {
        prop_assume!(!times.is_empty());
        let seq = custom_symmetric(&times, 1.0).unwrap();
        let y = modulation(&seq, 0);
        let w0 = window_transform(&y, 0.0);
        prop_assert!((w0.re - y.signed_area()).abs() < 1e-12);
        prop_assert!(w0.im.abs() < 1e-12);
    }

    #[test]
    fn exponent_is_nonnegative_and_time_reversal_invariant(times in pulse_times()) {
        prop_assume!(!times.is_empty());
        let p = noise();
        let pair = CoherencePair::bell();
        let seq = custom_symmetric(&times, 1.0).unwrap();
        let chi = chi_time_domain(&p, &seq, &pair, 1.0);
        prop_assert!(chi >= 0.0);

        let mut mirrored: Vec<f64> = times.iter().map(|t| 1.0 - t).collect();
        mirrored.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rev = custom_symmetric(&mirrored, 1.0).unwrap();
        let chi_rev = chi_time_domain(&p, &rev, &pair, 1.0);
        prop_assert!((chi - chi_rev).abs() <= 1e-10 * chi.max(1e-30));
    }

    #[test]
    fn gap_parameterization_roundtrips(times in pulse_times()) {
        prop_assume!(!times.is_empty());
        let problem = OptimizationProblem::new(times.len(), 1.0, noise()).unwrap();
        let u = gaps_from_times(&problem, &times);
        let back = times_from_gaps(&problem, &u);
        for (a, b) in times.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

proptest! {
    // The quadrature cross-check is comparatively slow; fewer cases.
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn quadrature_tracks_exact_exponent(times in pulse_times()) {
        prop_assume!(!times.is_empty());
        let p = noise();
        let pair = CoherencePair::bell();
        let seq = custom_symmetric(&times, 1.0).unwrap();
        let td = chi_time_domain(&p, &seq, &pair, 1.0);
        let fd = chi_frequency_domain(&p, &seq, &pair, 1.0).unwrap();
        prop_assert!((td - fd).abs() <= 1e-4 * td.abs().max(1e-12));
    }
}
