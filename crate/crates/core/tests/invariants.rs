use std::collections::HashSet;

use magwake::dataset::{enumerate_grid, NormalizationSpec, ParamGrid, SampleMeta, TrainingSample};
use magwake::emfield::{EnvParams, HarmonicSet};
use magwake::hydro::{
    solve_dispersion, HullModel, KochinMethod, KochinRule, VesselParams, DEFAULT_HULL_RATIO, GRAVITY,
};
use magwake::neural::{InputScaler, NetPlan, ResidualNet};
use magwake::train::{loss_drnn, physics_residual, Batch};
use magwake::wake::{add_noise, Provenance, WakeSeries};
use proptest::prelude::*;

fn vessel(length: f64, beam: f64, speed: f64) -> VesselParams {
    VesselParams::with_hull_ratio(length, DEFAULT_HULL_RATIO, beam, speed, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kochin_is_even_in_angle(theta in 0.0f64..1.4, length in 30.0f64..330.0, speed in 1.0f64..10.0, depth in 100.0f64..3000.0) {
        let p = vessel(length, 2000.0, speed);
        let k = solve_dispersion(theta, speed, depth, GRAVITY).unwrap();
        let method = KochinMethod::Quadrature(KochinRule::default());
        for hull in HullModel::ALL {
            let a = method.evaluate_scaled(theta, hull, &p, depth, k).unwrap();
            let b = method.evaluate_scaled(-theta, hull, &p, depth, k).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
        }
    }

    #[test]
    fn hull_slopes_match_offset_differences(length in 30.0f64..330.0, xs in -0.45f64..0.45, zs in -0.95f64..-0.05) {
        let p = vessel(length, 2000.0, 5.0);
        let (x, z) = (xs * p.length, zs * p.draft);
        for hull in [HullModel::Wigley, HullModel::Parabolic] {
            let h = 1e-4 * p.length;
            let fd = (hull.offset(&p, x + h, z).unwrap() - hull.offset(&p, x - h, z).unwrap()) / (2.0 * h);
            let an = hull.slope(&p, x, z).unwrap();
            prop_assert!((fd - an).abs() <= 1e-8 * an.abs().max(1e-3), "{hull:?}: {fd} vs {an}");
        }
    }

    #[test]
    fn field_is_linear_in_geomagnetic_vector(theta in -1.4f64..1.4, speed in 1.0f64..10.0, depth in 100.0f64..3000.0, c in 0.1f64..10.0) {
        let env = EnvParams::with_depth(depth);
        let mut scaled = env;
        scaled.geomagnetic = env.geomagnetic.map(|b| c * b);
        let k = solve_dispersion(theta, speed, depth, GRAVITY).unwrap();
        let omega = k * speed * theta.cos();
        let a = HarmonicSet::solve(theta, k, omega, &env).unwrap();
        let b = HarmonicSet::solve(theta, k, omega, &scaled).unwrap();
        for z in [30.0, -0.5 * depth, -depth - 10.0] {
            let (ha, hb) = (a.assemble_h(z), b.assemble_h(z));
            // Largest component, not the 2-norm: squares underflow near the bed.
            let norm = ha.iter().fold(0.0f64, |m, v| m.max(v.norm())) * c;
            for i in 0..3 {
                prop_assert!((hb[i] - ha[i] * c).norm() <= 1e-12 * norm.max(1e-300));
            }
        }
    }

    #[test]
    fn normalisation_round_trips_and_is_monotone(u in prop::array::uniform4(0.0f64..=1.0), v in prop::array::uniform4(0.0f64..=1.0)) {
        let norm = NormalizationSpec::default();
        let (y, w) = (norm.denormalize(&u), norm.denormalize(&v));
        let back = norm.normalize(&y);
        for i in 0..4 {
            prop_assert!((back[i] - u[i]).abs() < 1e-12);
            if u[i] < v[i] {
                prop_assert!(y[i] < w[i]);
            }
        }
    }

    #[test]
    fn noise_keeps_layout_and_is_reproducible(values in prop::collection::vec(0.0f64..1e-9, 1..40), snr in -20.0f64..30.0, seed: u64) {
        prop_assume!(values.iter().any(|&v| v > 0.0));
        let clean = WakeSeries { samples: values, t_start: 1.5, sample_rate: 10.0, provenance: Provenance::Clean };
        let a = add_noise(&clean, snr, seed).unwrap();
        prop_assert_eq!(a.len(), clean.len());
        prop_assert_eq!(a.t_start, clean.t_start);
        prop_assert!(a.samples.iter().all(|&v| v >= 0.0 && v.is_finite()));
        prop_assert_eq!(&a, &add_noise(&clean, snr, seed).unwrap());
    }

    #[test]
    fn scaled_inputs_stay_finite(rows in prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 1e-300f64..1e-3], 5), 1..12), probe in prop::collection::vec(prop_oneof![Just(0.0), 1e-320f64..1.0], 5)) {
        let fit: Vec<Vec<f64>> = rows.iter().map(|r| { let mut r = r.clone(); r.push(500.0); r }).collect();
        let sc = InputScaler::fit(fit.iter().map(|r| r.as_slice()), 5, 100.0, 2900.0).unwrap();
        let mut x = probe;
        x.push(2500.0);
        prop_assert!(sc.transform(&x).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn losses_are_non_negative(seed: u64, obs in prop::collection::vec(0.0f64..1e-6, 15), pred in prop::collection::vec(0.0f64..1e-6, 15)) {
        prop_assert!(physics_residual(&obs, &pred) >= 0.0);
        prop_assert_eq!(physics_residual(&obs, &obs), 0.0);
        let norm = NormalizationSpec::default();
        let samples: Vec<TrainingSample> = (0..3).map(|i| {
            let mut x = obs.clone();
            x.push(300.0 + 900.0 * i as f64);
            TrainingSample {
                x,
                y: norm.denormalize(&[0.2 * i as f64, 0.5, 0.7, 0.4]),
                meta: SampleMeta { seed: 0, index: [0; 5], noisy: false },
            }
        }).collect();
        let refs: Vec<&TrainingSample> = samples.iter().collect();
        let sc = InputScaler::fit(samples.iter().map(|s| s.x.as_slice()), 15, 100.0, 2900.0).unwrap();
        let net = ResidualNet::init(NetPlan::reference(16), seed).unwrap();
        prop_assert!(loss_drnn(&net, &Batch::new(&refs, &sc).unwrap(), &norm).unwrap() >= 0.0);
    }
}

#[test]
fn grid_enumeration_is_a_bijection_onto_indices() {
    let grid = ParamGrid::desk();
    let tuples = enumerate_grid(&grid, 5).unwrap();
    assert_eq!(tuples.len(), grid.size());
    let unique: HashSet<[u32; 5]> = tuples.iter().map(|t| t.index).collect();
    assert_eq!(unique.len(), tuples.len());
    let counts = grid.intervals().map(|(_, iv)| iv.count as u32);
    assert!(tuples.iter().all(|t| t.index.iter().zip(counts).all(|(&i, c)| i < c)));
}
