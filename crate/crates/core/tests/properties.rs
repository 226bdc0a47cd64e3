//! Property suites over the panel transforms, the window estimator, splits,
//! and the paired t-test.

use proptest::prelude::*;

use ruptura_core::evaluator::{paired_ttest, split_by_region, SplitRatios};
use ruptura_core::panel::{Observation, Panel, RegionId};
use ruptura_core::rdd::{estimate_discontinuity, fit_segment, EpisodeWindow};

fn panel_of(scores: &[(i64, f64, u64)]) -> Panel {
    let mut panel = Panel::new("prop");
    panel.regions.insert(
        RegionId::from("r1"),
        scores
            .iter()
            .map(|&(week, score, n_users)| Observation {
                week,
                score,
                n_users,
            })
            .collect(),
    );
    panel
}

proptest! {
    #[test]
    fn filter_reliability_is_monotone(
        users in prop::collection::vec(0u64..600, 3..40),
        lo in 0u64..300,
        step in 0u64..300,
    ) {
        let rows: Vec<(i64, f64, u64)> = users
            .iter()
            .enumerate()
            .map(|(i, &u)| (i as i64, i as f64, u))
            .collect();
        let loose = panel_of(&rows).filter_reliability(lo);
        let strict = panel_of(&rows).filter_reliability(lo + step);
        prop_assert!(strict.n_observations() <= loose.n_observations());
    }

    #[test]
    fn zscore_is_idempotent(
        scores in prop::collection::vec(-100.0f64..100.0, 3..30),
    ) {
        let rows: Vec<(i64, f64, u64)> = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| (i as i64, s, 500))
            .collect();
        let once = panel_of(&rows).zscore_per_region();
        let twice = once.clone().zscore_per_region();
        let a = once.region(&RegionId::from("r1"));
        let b = twice.region(&RegionId::from("r1"));
        match (a, b) {
            (Some(a), Some(b)) => {
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x.score - y.score).abs() < 1e-9);
                }
            }
            // constant input: dropped both times
            (None, None) => {}
            _ => prop_assert!(false, "idempotence broke region presence"),
        }
    }

    #[test]
    fn differencing_cumulative_sums_recovers_increments(
        increments in prop::collection::vec(-10.0f64..10.0, 2..30),
    ) {
        let mut running = 0.0;
        let rows: Vec<(i64, f64, u64)> = increments
            .iter()
            .enumerate()
            .map(|(i, &dx)| {
                running += dx;
                (i as i64 + 1, running, 500)
            })
            .collect();
        // prepend the zero origin so every increment has a lag partner
        let mut with_origin = vec![(0i64, 0.0, 500)];
        with_origin.extend(rows);
        let diffed = panel_of(&with_origin).difference(1).unwrap();
        let obs = diffed.region(&RegionId::from("r1")).unwrap();
        prop_assert_eq!(obs.len(), increments.len());
        for (o, dx) in obs.iter().zip(&increments) {
            prop_assert!((o.score - dx).abs() < 1e-9);
        }
    }

    #[test]
    fn deltas_are_shift_invariant_and_scale_equivariant(
        ys in prop::collection::vec(-5.0f64..5.0, 18),
        shift in -50.0f64..50.0,
        scale in 0.1f64..10.0,
    ) {
        let window = |f: &dyn Fn(f64) -> f64| EpisodeWindow {
            region_id: RegionId::from("r1"),
            event_week: 0,
            before: (-9..=-1).zip(ys.iter().take(9)).map(|(t, &y)| (t, f(y))).collect(),
            after: (1..=9).zip(ys.iter().skip(9)).map(|(t, &y)| (t, f(y))).collect(),
            y_at_event: None,
            y_after_event: None,
        };
        let base = estimate_discontinuity(&window(&|y| y), "e").unwrap();
        let shifted = estimate_discontinuity(&window(&|y| y + shift), "e").unwrap();
        let scaled = estimate_discontinuity(&window(&|y| y * scale), "e").unwrap();
        prop_assert!((base.delta0 - shifted.delta0).abs() < 1e-8);
        prop_assert!((base.delta1 - shifted.delta1).abs() < 1e-8);
        prop_assert!((base.delta0 * scale - scaled.delta0).abs() < 1e-8);
        prop_assert!((base.delta1 * scale - scaled.delta1).abs() < 1e-8);
    }

    #[test]
    fn fit_segment_matches_normal_equations(
        pairs in prop::collection::vec((-20i64..20, -10.0f64..10.0), 2..15),
    ) {
        let mut points: Vec<(f64, f64)> = pairs
            .iter()
            .map(|&(t, y)| (t as f64, y))
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        points.dedup_by(|a, b| a.0 == b.0);
        prop_assume!(points.len() >= 2);

        let fit = fit_segment(&points).unwrap();
        // independent 2x2 normal-equations solve
        let n = points.len() as f64;
        let st: f64 = points.iter().map(|p| p.0).sum();
        let stt: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sty: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let det = n * stt - st * st;
        let beta0 = (stt * sy - st * sty) / det;
        let beta1 = (n * sty - st * sy) / det;
        prop_assert!((fit.beta0 - beta0).abs() < 1e-6, "{} vs {}", fit.beta0, beta0);
        prop_assert!((fit.beta1 - beta1).abs() < 1e-6, "{} vs {}", fit.beta1, beta1);
    }

    #[test]
    fn exact_lines_are_recovered_to_1e12(
        beta0 in -10.0f64..10.0,
        beta1 in -3.0f64..3.0,
    ) {
        let points: Vec<(f64, f64)> = (-9..=-1)
            .map(|t| (t as f64, beta0 + beta1 * t as f64))
            .collect();
        let fit = fit_segment(&points).unwrap();
        prop_assert!((fit.beta0 - beta0).abs() < 1e-12);
        prop_assert!((fit.beta1 - beta1).abs() < 1e-12);
    }

    #[test]
    fn splits_partition_regions(n in 5usize..120, seed in 0u64..1000) {
        let regions: Vec<RegionId> = (0..n).map(|i| RegionId(format!("r{i:04}"))).collect();
        let plan = split_by_region(&regions, SplitRatios::default(), seed).unwrap();
        let mut all: Vec<RegionId> = plan
            .train
            .iter()
            .chain(&plan.dev)
            .chain(&plan.test)
            .cloned()
            .collect();
        all.sort();
        let mut expected = regions.clone();
        expected.sort();
        prop_assert_eq!(all, expected);
        // pairwise disjoint
        for r in &plan.train {
            prop_assert!(!plan.dev.contains(r) && !plan.test.contains(r));
        }
        for r in &plan.dev {
            prop_assert!(!plan.test.contains(r));
        }
    }

    #[test]
    fn ttest_sign_flips_under_swap(
        a in prop::collection::vec(-5.0f64..5.0, 3..20),
        offsets in prop::collection::vec(-5.0f64..5.0, 3..20),
    ) {
        let n = a.len().min(offsets.len());
        let a = &a[..n];
        let b: Vec<f64> = a.iter().zip(&offsets[..n]).map(|(x, d)| x + d).collect();
        let ab = paired_ttest(a, &b).unwrap();
        let ba = paired_ttest(&b, a).unwrap();
        if ab.t_statistic.is_finite() {
            prop_assert!((ab.t_statistic + ba.t_statistic).abs() < 1e-9);
        } else {
            prop_assert_eq!(ab.t_statistic, -ba.t_statistic);
        }
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-9);
    }
}
