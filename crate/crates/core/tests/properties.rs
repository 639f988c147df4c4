use nalgebra::DVector;
use proptest::prelude::*;

use byzsim::aggregation::{verify_robustness, AggregatorSpec, Mixing, Rule};
use byzsim::harness::{RunTrace, TraceRow};
use byzsim::optimizers::{gamma_schedule, weighted_average_weight};
use byzsim::problems::parse_dataset_csv;

const DIM: usize = 3;

fn vectors(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<DVector<f64>>> {
    prop::collection::vec(prop::collection::vec(-100.0f64..100.0, DIM), n)
        .prop_map(|vs| vs.into_iter().map(DVector::from_vec).collect())
}

fn specs() -> impl Strategy<Value = AggregatorSpec> {
    specs_over(vec![Rule::Cwtm, Rule::Cwm, Rule::Gm, Rule::Krum])
}

fn specs_over(rules: Vec<Rule>) -> impl Strategy<Value = AggregatorSpec> {
    let rule = prop::sample::select(rules);
    let mixing = prop::option::of(prop::sample::select(vec![Mixing::Nnm, Mixing::FrgGts { rho: 4.0 }]));
    (rule, mixing).prop_map(|(rule, mixing)| {
        let spec = AggregatorSpec::new(rule, 1);
        match mixing {
            Some(m) => spec.with_mixing(m),
            None => spec,
        }
    })
}

fn close(a: &DVector<f64>, b: &DVector<f64>, scale: f64) -> bool {
    (a - b).norm() <= 1e-6 * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coordinatewise_rules_ignore_order(vs in vectors(4..=9), seed in any::<u64>()) {
        let mut shuffled = vs.clone();
        let len = shuffled.len();
        shuffled.rotate_left((seed as usize) % len);
        shuffled.swap(0, len - 1);
        for rule in [Rule::Cwtm, Rule::Cwm, Rule::Gm, Rule::Mean] {
            let spec = AggregatorSpec::new(rule, 1);
            let a = spec.aggregate(&vs).unwrap();
            let b = spec.aggregate(&shuffled).unwrap();
            prop_assert!(close(&a, &b, a.norm()), "{rule:?}: {a} vs {b}");
        }
    }

    #[test]
    fn identical_inputs_are_returned(v in prop::collection::vec(-100.0f64..100.0, DIM), n in 4usize..9, spec in specs()) {
        let v = DVector::from_vec(v);
        let out = spec.aggregate(&vec![v.clone(); n]).unwrap();
        prop_assert!(close(&out, &v, v.norm()), "{spec}: {out} vs {v}");
    }

    // Krum selects a single input, so near-ties may flip under the rounding of a shift.
    #[test]
    fn aggregation_commutes_with_translation(
        vs in vectors(4..=9),
        shift in prop::collection::vec(-50.0f64..50.0, DIM),
        spec in specs_over(vec![Rule::Cwtm, Rule::Cwm, Rule::Gm]),
    ) {
        let shift = DVector::from_vec(shift);
        let moved: Vec<_> = vs.iter().map(|v| v + &shift).collect();
        let a = spec.aggregate(&vs).unwrap() + &shift;
        let b = spec.aggregate(&moved).unwrap();
        prop_assert!(close(&a, &b, a.norm()), "{spec}: {a} vs {b}");
    }

    #[test]
    fn robustness_coefficient_bounds_every_subset(vs in vectors(5..=11), spec in specs()) {
        prop_assume!(spec.robustness_coefficient(vs.len()).is_ok());
        let check = verify_robustness(&spec, &vs).unwrap();
        prop_assert!(check.worst_ratio <= check.nu * (1.0 + 1e-9) + 1e-12, "{spec}: {} > {}", check.worst_ratio, check.nu);
    }

    #[test]
    fn gamma_recursion_holds_to_rounding(l in 0.1f64..1e4, ratio in 1e-6f64..1.0, k in 1usize..3000) {
        let schedule = gamma_schedule(l, l * ratio, k);
        for i in 0..k {
            prop_assert!(schedule.relative_residual(i) <= 1e-12);
            prop_assert!(schedule.ratio_prev_partial(i) < 1.0);
            prop_assert!(schedule.ln_partial_sum(i + 1) > schedule.ln_partial_sum(i));
        }
    }

    #[test]
    fn folded_weights_reproduce_the_geometric_average(q in 1.0f64..2.0, xs in prop::collection::vec(-10.0f64..10.0, 1..60)) {
        let mut running = xs[0];
        for (k, x) in xs.iter().enumerate().skip(1) {
            let w = weighted_average_weight(q, k);
            running = (1.0 - w) * running + w * x;
        }
        let (num, den) = xs.iter().enumerate().fold((0.0, 0.0), |(n, d), (k, x)| {
            let beta = q.powi(k as i32);
            (n + beta * x, d + beta)
        });
        prop_assert!((running - num / den).abs() <= 1e-9 * (1.0 + running.abs()));
    }

    #[test]
    fn trace_csv_round_trips(rows in prop::collection::vec((0.0f64..1e6, 0.0f64..1e3, 0usize..1000), 0..20)) {
        let mut trace = RunTrace::new("t");
        for (round, (gap, norm, inner)) in rows.into_iter().enumerate() {
            trace.rows.push(TraceRow {
                round,
                loss_gap: gap,
                grad_norm: norm,
                dist_to_opt: norm / 2.0,
                oracle_err_sq: gap * 1e-3,
                lemma1_bound: gap + 1.0,
                inner_iters: inner,
                wall_ms: 0.0,
            });
        }
        let back = RunTrace::parse_csv(&trace.to_csv_string(), "t").unwrap();
        prop_assert_eq!(back, trace);
    }

    #[test]
    fn dataset_parser_never_panics(text in "[0-9a-z,.\\-\\n ]{0,200}") {
        let _ = parse_dataset_csv(&text);
    }
}
