use carveopt_core::{envelope, pwl_breakpoints, pwl_cuts, Instance, Material, StockBatch, DEFAULT_EXPONENT_SCALE};
use proptest::prelude::*;

/// Merged batches, as an instance would hold them after loading.
fn merged(raw: &[(f64, f64)]) -> Vec<StockBatch> {
    let m = raw
        .iter()
        .fold(Material::new("x"), |m, &(q, life)| m.with_batch(q, life));
    Instance::load(vec![m], vec![]).unwrap().material(0).batches.clone()
}

/// Direct evaluation: drain newest first, each unit priced at its slope.
fn direct(batches: &[StockBatch], scale: f64, s_old: f64) -> f64 {
    let mut sorted = batches.to_vec();
    sorted.sort_by(|a, b| b.remaining_shelf_life.total_cmp(&a.remaining_shelf_life));
    let mut left = s_old;
    let mut total = 0.0;
    for b in sorted {
        let take = left.min(b.quantity);
        total += take * (-b.remaining_shelf_life / scale).exp();
        left -= take;
        if left <= 0.0 {
            break;
        }
    }
    total
}

fn batch_list() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.01f64..1000.0, (0u32..20_000).prop_map(f64::from)), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn envelope_equals_interpolation(raw in batch_list(), fractions in prop::collection::vec(0.0f64..=1.0, 100)) {
        let batches = merged(&raw);
        let scale = DEFAULT_EXPONENT_SCALE;
        let bp = pwl_breakpoints(&batches, scale);
        let cuts = pwl_cuts(&bp);
        let h: f64 = batches.iter().map(|b| b.quantity).sum();
        prop_assert!((bp.points.last().unwrap().0 - h).abs() <= 1e-12 * h);
        for t in fractions {
            let s = t * h;
            let interp = bp.evaluate(s);
            let tol = 1e-12 * interp.abs().max(1.0);
            prop_assert!((envelope(&cuts, s) - interp).abs() <= tol);
            prop_assert!((direct(&batches, scale, s) - interp).abs() <= tol);
        }
    }

    #[test]
    fn slopes_strictly_increase(raw in batch_list()) {
        let batches = merged(&raw);
        let bp = pwl_breakpoints(&batches, DEFAULT_EXPONENT_SCALE);
        prop_assert_eq!(bp.num_segments(), batches.len());
        for w in bp.slopes.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        for w in bp.points.windows(2) {
            prop_assert!(w[0].0 < w[1].0);
        }
    }
}

#[test]
fn two_batch_breakpoints() {
    let batches = merged(&[(5.0, 2.0), (3.0, 1.0)]);
    let bp = pwl_breakpoints(&batches, 1.0);
    let (e1, e2) = ((-1.0f64).exp(), (-2.0f64).exp());
    assert_eq!(bp.points, vec![(0.0, 0.0), (5.0, 5.0 * e2), (8.0, 5.0 * e2 + 3.0 * e1)]);
    let cuts = pwl_cuts(&bp);
    assert_eq!(cuts.len(), 2);
    for s in [0.0, 2.5, 5.0, 6.5, 8.0] {
        assert!((envelope(&cuts, s) - direct(&batches, 1.0, s)).abs() <= 1e-12);
    }
}

#[test]
fn four_batches_give_a_convex_increasing_envelope() {
    let batches = merged(&[(40.0, 9000.0), (25.0, 6000.0), (30.0, 2500.0), (10.0, 0.0)]);
    let bp = pwl_breakpoints(&batches, DEFAULT_EXPONENT_SCALE);
    let cuts = pwl_cuts(&bp);
    assert_eq!(cuts.len(), 4);
    let h = 105.0;
    let values: Vec<f64> = (0..=210).map(|k| envelope(&cuts, h * k as f64 / 210.0)).collect();
    for w in values.windows(3) {
        assert!(w[1] > w[0]);
        assert!(w[1] <= 0.5 * (w[0] + w[2]) + 1e-12);
    }
}

#[test]
fn single_batch_cut() {
    let batches = merged(&[(10.0, 0.0)]);
    let bp = pwl_breakpoints(&batches, 1.0);
    assert_eq!(bp.points, vec![(0.0, 0.0), (10.0, 10.0)]);
    let cuts = pwl_cuts(&bp);
    assert_eq!((cuts[0].slope, cuts[0].rhs), (1.0, 0.0));
}
