//! Property tests for the aggregation laws: internality, idempotency,
//! symmetry, oracle equivalence of the two evaluation routes, weight-scale
//! invariance, the large-epsilon limit, and monotonicity.

use devfuse_core::baselines::{reduce_plain, AggregatorId};
use devfuse_core::decision::{
    collective_matrix, preference_column, ExpertWeights, PreferenceTensor,
};
use devfuse_core::metrics::{mse, nn_magnify, ssim_image, SsimConfig};
use devfuse_core::pooling::{md_pool_backward, md_pool_forward, PoolParams};
use devfuse_core::{
    d_mean_bisect, d_mean_epsilon_closed, fuse, reduce_blocks, DeviationSpec, MonotoneMap,
    MultiMatrix, PadMode, SolverConfig, WeightSpec,
};
use proptest::prelude::*;

/// (value, weight) pairs with at least one clearly positive weight.
fn weighted_values() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..=1.0, 0.0f64..=2.0), 1..=16)
        .prop_filter("needs a positive weight", |v| {
            v.iter().any(|(_, w)| *w > 0.05)
        })
}

fn split(pairs: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    pairs.iter().copied().unzip()
}

fn specs_under_test() -> Vec<DeviationSpec> {
    vec![
        DeviationSpec::epsilon(1.0).unwrap(),
        DeviationSpec::epsilon(32.0).unwrap(),
        DeviationSpec::linear(),
        DeviationSpec::basic(MonotoneMap::OddPower(3), MonotoneMap::Identity).unwrap(),
    ]
}

proptest! {
    #[test]
    fn internality_both_routes(pairs in weighted_values(), eps in prop::sample::select(vec![1.0, 2.0, 4.0, 32.0])) {
        let (values, weights) = split(&pairs);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let closed = d_mean_epsilon_closed(&values, &weights, eps).unwrap();
        prop_assert!(closed >= lo && closed <= hi);
        for spec in specs_under_test() {
            let y = d_mean_bisect(&spec, &values, &weights, &SolverConfig::default()).unwrap();
            prop_assert!(y >= lo && y <= hi, "{spec:?} escaped [{lo}, {hi}]: {y}");
        }
    }

    #[test]
    fn idempotency_exact(c in 0.0f64..=1.0, eps in 1.0f64..=64.0, len in 1usize..=9) {
        let values = vec![c; len];
        let weights: Vec<f64> = (0..len).map(|i| 0.25 + i as f64).collect();
        prop_assert_eq!(d_mean_epsilon_closed(&values, &weights, eps).unwrap(), c);
        for spec in specs_under_test() {
            prop_assert_eq!(d_mean_bisect(&spec, &values, &weights, &SolverConfig::default()).unwrap(), c);
        }
    }

    #[test]
    fn symmetry_under_permutation(
        (pairs, shuffled) in weighted_values().prop_flat_map(|p| {
            let orig = p.clone();
            (Just(orig), Just(p).prop_shuffle())
        }),
        eps in prop::sample::select(vec![1.0, 4.0, 32.0]),
    ) {
        let (values, weights) = split(&pairs);
        let (pvalues, pweights) = split(&shuffled);
        let a = d_mean_epsilon_closed(&values, &weights, eps).unwrap();
        let b = d_mean_epsilon_closed(&pvalues, &pweights, eps).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);

        let cfg = SolverConfig::default();
        let spec = DeviationSpec::epsilon(eps).unwrap();
        let a = d_mean_bisect(&spec, &values, &weights, &cfg).unwrap();
        let b = d_mean_bisect(&spec, &pvalues, &pweights, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 10.0 * cfg.tolerance());
    }

    #[test]
    fn closed_form_matches_bisection(pairs in weighted_values(), eps in prop::sample::select(vec![1.0, 2.0, 4.0, 32.0])) {
        let (values, weights) = split(&pairs);
        let cfg = SolverConfig::default();
        let spec = DeviationSpec::epsilon(eps).unwrap();
        let closed = d_mean_epsilon_closed(&values, &weights, eps).unwrap();
        let bisected = d_mean_bisect(&spec, &values, &weights, &cfg).unwrap();
        prop_assert!((closed - bisected).abs() < 10.0 * cfg.tolerance());
    }

    #[test]
    fn weight_scale_invariance(pairs in weighted_values(), lambda in 0.05f64..=20.0, eps in prop::sample::select(vec![1.0, 32.0])) {
        let (values, weights) = split(&pairs);
        let scaled: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
        let a = d_mean_epsilon_closed(&values, &weights, eps).unwrap();
        let b = d_mean_epsilon_closed(&values, &scaled, eps).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));

        // bisection locates each boundary to cfg.tolerance, so compare at a
        // tolerance below the asserted bound
        let cfg = SolverConfig::new(1e-13, 200).unwrap();
        let spec = DeviationSpec::epsilon(eps).unwrap();
        let a = d_mean_bisect(&spec, &values, &weights, &cfg).unwrap();
        let b = d_mean_bisect(&spec, &values, &scaled, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn epsilon_limit_is_the_mean(values in prop::collection::vec(0.0f64..=1.0, 1..=16)) {
        let unit = vec![1.0; values.len()];
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let far = d_mean_epsilon_closed(&values, &unit, 1e6).unwrap();
        prop_assert!((far - mean).abs() <= 1e-4);
        // measured constant: |MD(eps) - mean| * eps stays below 1
        let near = d_mean_epsilon_closed(&values, &unit, 100.0).unwrap();
        prop_assert!((near - mean).abs() * 100.0 < 1.0);
    }

    #[test]
    fn monotone_in_each_input(
        pairs in weighted_values(),
        idx in any::<prop::sample::Index>(),
        bump in 0.0f64..=1.0,
        eps in prop::sample::select(vec![1.0, 2.0, 32.0]),
    ) {
        let (values, weights) = split(&pairs);
        let i = idx.index(values.len());
        let mut bumped = values.clone();
        bumped[i] = (bumped[i] + bump).min(1.0);
        let before = d_mean_epsilon_closed(&values, &weights, eps).unwrap();
        let after = d_mean_epsilon_closed(&bumped, &weights, eps).unwrap();
        prop_assert!(after >= before - 1e-12, "{before} -> {after}");
    }

    #[test]
    fn kalpha_endpoints_are_min_and_max(values in prop::collection::vec(0.0f64..=1.0, 1..=12)) {
        let min = reduce_plain(&values, &AggregatorId::Min).unwrap();
        let max = reduce_plain(&values, &AggregatorId::Max).unwrap();
        prop_assert_eq!(reduce_plain(&values, &AggregatorId::KAlpha(0.0)).unwrap(), min);
        prop_assert_eq!(reduce_plain(&values, &AggregatorId::KAlpha(1.0)).unwrap(), max);
    }

    #[test]
    fn fuse_after_pad_accepts_any_shape(
        rows in 1usize..=9,
        cols in 1usize..=9,
        r in 2usize..=3,
        seed in 0u64..1000,
    ) {
        let data: Vec<f64> = (0..rows * cols * 2)
            .map(|i| (((i as u64).wrapping_mul(2654435761).wrapping_add(seed) % 1000) as f64) / 1000.0)
            .collect();
        let m = MultiMatrix::new(rows, cols, 2, data).unwrap();
        let padded = m.pad(r, PadMode::Replicate).unwrap();
        let spec = DeviationSpec::epsilon(1.0).unwrap();
        let fused = fuse(&padded, r, &spec, &WeightSpec::unit(2), &SolverConfig::default()).unwrap();
        prop_assert_eq!(fused.rows(), rows.div_ceil(r));
        prop_assert_eq!(fused.cols(), cols.div_ceil(r));
    }

    #[test]
    fn fused_entries_stay_in_block_intervals(
        data in prop::collection::vec(0.0f64..=1.0, 4 * 6 * 3..=4 * 6 * 3),
        eps in prop::sample::select(vec![1.0, 8.0]),
    ) {
        let m = MultiMatrix::new(4, 6, 3, data).unwrap();
        let spec = DeviationSpec::epsilon(eps).unwrap();
        let fused = fuse(&m, 2, &spec, &WeightSpec::unit(3), &SolverConfig::default()).unwrap();
        for a in 0..2 {
            for b in 0..3 {
                let block = m.extract_block(a, b, 2).unwrap();
                for k in 0..3 {
                    prop_assert!(block.channel_interval(k).contains(fused.get(a, b, k)));
                }
            }
        }
    }

    #[test]
    fn pooling_gradients_against_finite_differences(
        window in prop::collection::vec(0.0f64..=1.0, 4..=4),
        w in 0.5f64..=2.0,
        eps in prop::sample::select(vec![1.0, 2.0, 32.0]),
    ) {
        let t = MultiMatrix::new(2, 2, 1, window).unwrap();
        let params = PoolParams::lmd(2, eps, vec![w]).unwrap();
        let grad_out = MultiMatrix::filled(1, 1, 1, 1.0).unwrap();
        let (grad_in, grad_w) = md_pool_backward(&t, &params, &grad_out).unwrap();

        let h = 1e-6;
        let mut fd = Vec::new();
        for idx in 0..4 {
            let mut plus = t.data().to_vec();
            let mut minus = t.data().to_vec();
            plus[idx] += h;
            minus[idx] -= h;
            let yp = md_pool_forward(&MultiMatrix::new(2, 2, 1, plus).unwrap(), &params).unwrap();
            let ym = md_pool_forward(&MultiMatrix::new(2, 2, 1, minus).unwrap(), &params).unwrap();
            fd.push((yp.get(0, 0, 0) - ym.get(0, 0, 0)) / (2.0 * h));
        }
        let pp = PoolParams::lmd(2, eps, vec![w + h]).unwrap();
        let pm = PoolParams::lmd(2, eps, vec![w - h]).unwrap();
        let fd_w = (md_pool_forward(&t, &pp).unwrap().get(0, 0, 0)
            - md_pool_forward(&t, &pm).unwrap().get(0, 0, 0))
            / (2.0 * h);

        // vector-norm relative error over (inputs, weight) jointly
        let mut diff_sq = (grad_w[0] - fd_w) * (grad_w[0] - fd_w);
        let mut norm_sq = fd_w * fd_w;
        for (a, f) in grad_in.data().iter().zip(&fd) {
            diff_sq += (a - f) * (a - f);
            norm_sq += f * f;
        }
        prop_assert!(diff_sq.sqrt() / norm_sq.sqrt().max(1e-12) < 1e-6);
    }

    #[test]
    fn decision_pipeline_monotone_in_a_row(
        base in prop::collection::vec(0.0f64..=1.0, 18..=18),
        bumps in prop::collection::vec(0.0f64..=0.5, 2..=2),
    ) {
        // 3 alternatives, 2 experts; fill off-diagonal entries from `base`
        let p = 3;
        let mut data = vec![0.5; p * p * 2];
        let mut it = base.into_iter();
        for k in 0..2 {
            for i in 0..p {
                for j in 0..p {
                    if i != j {
                        data[k * p * p + i * p + j] = it.next().unwrap();
                    }
                }
            }
        }
        let x = PreferenceTensor::new(p, 2, data.clone(), 0.5).unwrap();
        // raise every off-diagonal entry of row 0 in both expert matrices
        for k in 0..2 {
            for j in 0..p {
                if j != 0 {
                    let cell = &mut data[k * p * p + j];
                    *cell = (*cell + bumps[k]).min(1.0);
                }
            }
        }
        let y = PreferenceTensor::new(p, 2, data, 0.5).unwrap();
        let w = ExpertWeights::unit(2);
        let before = preference_column(&collective_matrix(&x, &w, 1.0).unwrap(), 1.0).unwrap();
        let after = preference_column(&collective_matrix(&y, &w, 1.0).unwrap(), 1.0).unwrap();
        prop_assert!(after.values()[0] >= before.values()[0] - 1e-12);
    }

    #[test]
    fn ssim_bounded_by_one(
        x in prop::collection::vec(0.0f64..=1.0, 4..=4),
        y in prop::collection::vec(0.0f64..=1.0, 4..=4),
    ) {
        use devfuse_core::metrics::ssim_window;
        let cfg = SsimConfig::new(2, 1e-4, 9e-4).unwrap();
        let s = ssim_window(&x, &y, &cfg).unwrap();
        prop_assert!(s <= 1.0 + 1e-12);
        prop_assert!(s > -1.0 - 1e-12);
        if x != y {
            prop_assert!(s < 1.0);
        } else {
            prop_assert_eq!(s, 1.0);
        }
        prop_assert_eq!(ssim_window(&y, &x, &cfg).unwrap(), s);
    }

    #[test]
    fn mse_is_a_symmetric_premetric(
        a in prop::collection::vec(0.0f64..=1.0, 12..=12),
        b in prop::collection::vec(0.0f64..=1.0, 12..=12),
    ) {
        let ma = MultiMatrix::new(2, 2, 3, a.clone()).unwrap();
        let mb = MultiMatrix::new(2, 2, 3, b.clone()).unwrap();
        let d = mse(&ma, &mb).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(mse(&mb, &ma).unwrap(), d);
        prop_assert_eq!(d == 0.0, a == b);
    }

    #[test]
    fn ranking_is_a_descending_permutation(scores in prop::collection::vec(0.0f64..=1.0, 1..=10)) {
        let ranking = devfuse_core::decision::rank_alternatives(&scores);
        let mut seen = vec![false; scores.len()];
        for &i in &ranking {
            prop_assert!(!seen[i]);
            seen[i] = true;
        }
        for pair in ranking.windows(2) {
            prop_assert!(scores[pair[0]] >= scores[pair[1]]);
        }
    }
}

/// Reduce -> magnify -> compare on a constant image is lossless for every
/// reducer, including the deviation-based one.
#[test]
fn constant_image_round_trip_is_perfect_for_every_reducer() {
    let image = MultiMatrix::filled(16, 16, 3, 0.6).unwrap();
    let cfg = SsimConfig::default();
    let r = 2;

    let mut reductions: Vec<MultiMatrix> = Vec::new();
    let spec = DeviationSpec::epsilon(32.0).unwrap();
    reductions.push(
        fuse(
            &image,
            r,
            &spec,
            &WeightSpec::unit(3),
            &SolverConfig::default(),
        )
        .unwrap(),
    );
    let plain = [
        AggregatorId::Mean,
        AggregatorId::Median,
        AggregatorId::Gaussian,
        AggregatorId::GeometricMean,
        AggregatorId::KAlpha(0.25),
        AggregatorId::KAlpha(0.5),
        AggregatorId::KAlpha(0.75),
        AggregatorId::CenteredOwa,
        AggregatorId::Penalty(AggregatorId::default_penalty_candidates()),
    ];
    for id in plain {
        reductions.push(
            reduce_blocks(&image, r, |block| {
                (0..block.channels())
                    .map(|k| reduce_plain(block.channel_values(k), &id))
                    .collect()
            })
            .unwrap(),
        );
    }

    for reduced in reductions {
        let recon = nn_magnify(&reduced, r).unwrap();
        assert_eq!(ssim_image(&image, &recon, &cfg).unwrap(), 1.0);
        assert_eq!(mse(&image, &recon).unwrap(), 0.0);
    }
}

/// A per-channel scalar weight is invisible to deviation weighting but not
/// to input scaling.
#[test]
fn weighting_modes_differ_exactly_where_expected() {
    use devfuse_core::{WeightPayload, WeightSpec};
    let m = MultiMatrix::new(2, 2, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let spec = DeviationSpec::epsilon(1.0).unwrap();
    let cfg = SolverConfig::default();

    let dev = WeightSpec::deviation_weighted(WeightPayload::ChannelVector(vec![2.0]));
    let a = fuse(&m, 2, &spec, &dev, &cfg).unwrap();
    let b = fuse(&m, 2, &spec, &WeightSpec::unit(1), &cfg).unwrap();
    assert!((a.get(0, 0, 0) - b.get(0, 0, 0)).abs() < 1e-12);

    let scaled = WeightSpec::input_scaled(WeightPayload::ChannelVector(vec![2.0]));
    let c = fuse(&m, 2, &spec, &scaled, &cfg).unwrap();
    assert!((c.get(0, 0, 0) - 1.5).abs() < 1e-15);
    assert!((c.get(0, 0, 0) - b.get(0, 0, 0)).abs() > 0.1);
}
