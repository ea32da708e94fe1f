use ia_manifold::alignment::{analyze_receivers, leakage_cost, PrecoderSet};
use ia_manifold::harness::config::parse_snr_list;
use ia_manifold::manifolds::{descent_direction, inner_product, retract, ManifoldKind};
use ia_manifold::metrics::{dof_slope, interference_angles, normalized_leakage, sum_rate};
use ia_manifold::network::{sample_channels, sample_initial_precoders, NetworkConfig};
use ia_manifold::numerics::{hermitian_eig, thin_qr, thin_svd, ComplexMatrix};
use num_complex::Complex64;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec(-1.0f64..1.0, 2 * rows * cols).prop_map(move |v| {
        ComplexMatrix::from_fn(rows, cols, |r, c| {
            let i = 2 * (c * rows + r);
            Complex64::new(v[i], v[i + 1])
        })
    })
}

fn tall() -> impl Strategy<Value = ComplexMatrix> {
    (1usize..6)
        .prop_flat_map(|rows| (Just(rows), 1..=rows))
        .prop_flat_map(|(rows, cols)| matrix(rows, cols))
}

fn kind() -> impl Strategy<Value = ManifoldKind> {
    prop_oneof![
        Just(ManifoldKind::Euclidean),
        Just(ManifoldKind::Stiefel),
        Just(ManifoldKind::Grassmann)
    ]
}

fn network() -> impl Strategy<Value = (NetworkConfig, u64)> {
    (2usize..5, 1usize..3, 3usize..5, any::<u64>()).prop_map(|(m, d, users, seed)| {
        let d = d.min(m);
        (NetworkConfig::symmetric(users, m, m, d, 10.0).unwrap(), seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reassembles(a in (1usize..6).prop_flat_map(|n| matrix(n, n))) {
        let h = &a + &a.adjoint();
        let eig = hermitian_eig(&h).unwrap();
        let rebuilt = &(&eig.vectors * &ComplexMatrix::diag_real(&eig.values)) * &eig.vectors.adjoint();
        prop_assert!(rebuilt.distance(&h) <= 1e-10 * (1.0 + h.frobenius_norm()));
        prop_assert!(eig.vectors.orthonormality_defect() <= 1e-10);
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn svd_and_qr_reassemble(a in tall()) {
        let svd = thin_svd(&a).unwrap();
        let rebuilt = &(&svd.u * &ComplexMatrix::diag_real(&svd.singular_values)) * &svd.v.adjoint();
        prop_assert!(rebuilt.distance(&a) <= 1e-10);
        prop_assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let qr = thin_qr(&a).unwrap();
        prop_assert!((&qr.q * &qr.r).distance(&a) <= 1e-10);
        for i in 0..qr.r.cols() {
            prop_assert!(qr.r[(i, i)].im == 0.0 && qr.r[(i, i)].re >= 0.0);
        }
    }

    #[test]
    fn retraction_lands_on_the_manifold(kind in kind(), y in tall()) {
        // Random matrices are full rank almost surely; skip the rare miss.
        if let Ok(v) = retract(kind, &y) {
            prop_assert!(v.orthonormality_defect() <= 1e-10);
            prop_assert_eq!(v.shape(), y.shape());
        }
    }

    #[test]
    fn directions_are_tangent_and_metrics_positive(
        kind in kind(),
        (v, g) in (1usize..5).prop_flat_map(|n| (1..=n).prop_flat_map(move |p| (matrix(n, p), matrix(n, p)))),
    ) {
        let Ok(v) = retract(ManifoldKind::Stiefel, &v) else { return Ok(()) };
        let z = descent_direction(kind, &v, &g);
        prop_assert!(z.tangency_defect(&v) <= 1e-10);
        let zz = inner_product(kind, &v, &z.z, &z.z);
        prop_assert!(zz >= -1e-14);
        let w = descent_direction(kind, &v, &v);
        let zw = inner_product(kind, &v, &z.z, &w.z);
        let wz = inner_product(kind, &v, &w.z, &z.z);
        prop_assert!((zw - wz).abs() <= 1e-12 * (1.0 + zw.abs()));
    }

    #[test]
    fn cost_is_nonnegative_and_rotation_invariant((cfg, seed) in network()) {
        let ch = sample_channels(&cfg, seed);
        let pre = sample_initial_precoders(&cfg, seed ^ 1);
        let cost = leakage_cost(&ch, &pre, &cfg).unwrap();
        prop_assert!(cost >= 0.0);
        let unitary_cfg = NetworkConfig::symmetric(cfg.users(), cfg.streams(0), cfg.streams(0), cfg.streams(0), 1.0).unwrap();
        let t = sample_initial_precoders(&unitary_cfg, seed ^ 2).into_inner();
        let rotated: PrecoderSet = pre.rotated(&t).unwrap();
        let again = leakage_cost(&ch, &rotated, &cfg).unwrap();
        prop_assert!((cost - again).abs() <= 1e-10 * cost.max(1.0));
    }

    #[test]
    fn angles_are_symmetric_and_bounded((cfg, seed) in network()) {
        let ch = sample_channels(&cfg, seed);
        let pre = sample_initial_precoders(&cfg, seed ^ 3);
        for k in 0..cfg.users() {
            for pair in interference_angles(&ch, &pre, &cfg, k).unwrap() {
                let a = ch.get(k, pair.first) * &pre[pair.first];
                let b = ch.get(k, pair.second) * &pre[pair.second];
                let swapped = ia_manifold::metrics::principal_angles(&b, &a).unwrap();
                for (x, y) in pair.angles.iter().zip(&swapped) {
                    prop_assert!((x - y).abs() <= 1e-10);
                    prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(x));
                }
            }
        }
    }

    #[test]
    fn rate_grows_with_snr_for_fixed_precoders((cfg, seed) in network(), lo in -10.0f64..40.0, gap in 0.5f64..20.0) {
        let ch = sample_channels(&cfg, seed);
        let pre = sample_initial_precoders(&cfg, seed ^ 4);
        // Without a gap the receive subspace is not unique and may be
        // picked differently at each SNR.
        let analyses = analyze_receivers(&ch, &pre, &cfg).unwrap();
        prop_assume!(analyses.iter().all(|a| a
            .spectral_gap()
            .is_none_or(|g| g > 1e-6 * a.eig.values.last().unwrap())));
        let low = sum_rate(&ch, &pre, &cfg, lo).unwrap();
        let high = sum_rate(&ch, &pre, &cfg, lo + gap).unwrap();
        prop_assert!(low >= 0.0);
        prop_assert!(high >= low - 1e-9);
    }

    #[test]
    fn normalized_trace_starts_at_one(trace in proptest::collection::vec(1e-6f64..1e3, 1..20)) {
        let n = normalized_leakage(&trace).unwrap();
        prop_assert_eq!(n[0], 1.0);
        prop_assert!(n.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn slope_recovers_affine_rates(a in 0.0f64..6.0, b in -5.0f64..5.0, n in 2usize..12) {
        let rates: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let snr = 5.0 * i as f64;
                (snr, a * (snr / 10.0) * std::f64::consts::LOG2_10 + b)
            })
            .collect();
        prop_assert!((dof_slope(&rates).unwrap() - a).abs() <= 1e-9);
    }

    #[test]
    fn snr_ranges_hit_both_ends(start in -20i32..20, count in 0usize..12, step in 1i32..6) {
        let stop = start + step * count as i32;
        let list = parse_snr_list(&format!("{start}:{stop}:{step}")).unwrap();
        prop_assert_eq!(list.len(), count + 1);
        prop_assert_eq!(list[0], start as f64);
        prop_assert!((list[count] - stop as f64).abs() < 1e-9);
    }
}
