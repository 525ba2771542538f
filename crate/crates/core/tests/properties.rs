use proptest::prelude::*;

use online_mdp::mdp::{
    expected_loss, induce_transition_matrix, l1_distance, policy_distance, propagate, LossFunction, Policy,
    ProblemShape, StateDistribution, TransitionModel,
};
use online_mdp::textfmt::{parse_blocks, write_loss, write_model, write_policy, Block};

/// Rows of positive weights, normalized.
fn stochastic_rows(rows: usize, width: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, width), rows).prop_map(|rows| {
        rows.into_iter()
            .flat_map(|mut r| {
                // Occasionally all-zero draws; fall back to a vertex.
                if r.iter().sum::<f64>() == 0.0 {
                    r[0] = 1.0;
                }
                let s: f64 = r.iter().sum();
                r.into_iter().map(move |v| v / s)
            })
            .collect()
    })
}

#[derive(Debug, Clone)]
struct Case {
    shape: ProblemShape,
    p: Policy,
    q: Policy,
    model: TransitionModel,
    d: StateDistribution,
    e: StateDistribution,
    loss: LossFunction,
    alpha: f64,
}

fn case() -> impl Strategy<Value = Case> {
    (1usize..6, 1usize..4)
        .prop_flat_map(|(n, k)| {
            (
                Just((n, k)),
                stochastic_rows(n, k),
                stochastic_rows(n, k),
                stochastic_rows(n * k, n),
                stochastic_rows(1, n),
                stochastic_rows(1, n),
                prop::collection::vec(0.0f64..=1.0, n * k),
                0.0f64..=1.0,
            )
        })
        .prop_map(|((n, k), p, q, m, d, e, l, alpha)| {
            let shape = ProblemShape::new(n, k).unwrap();
            Case {
                shape,
                p: Policy::new(shape, p).unwrap(),
                q: Policy::new(shape, q).unwrap(),
                model: TransitionModel::new(shape, m).unwrap(),
                d: StateDistribution::new(d).unwrap(),
                e: StateDistribution::new(e).unwrap(),
                loss: LossFunction::new(shape, l).unwrap(),
                alpha,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 500,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn induced_rows_are_stochastic(c in case()) {
        let m = induce_transition_matrix(&c.p, &c.model).unwrap();
        for x in 0..c.shape.num_states() {
            let s: f64 = m.row(x).iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-9);
            prop_assert!(m.row(x).iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn propagation_stays_on_the_simplex(c in case()) {
        let m = induce_transition_matrix(&c.p, &c.model).unwrap();
        let mut d = c.d.clone();
        for _ in 0..50 {
            d = propagate(&d, &m).unwrap();
        }
        let s: f64 = d.as_slice().iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
        prop_assert!(d.as_slice().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn policy_perturbation_is_bounded(c in case()) {
        let lhs = l1_distance(
            &c.d.push_forward(&c.p, &c.model).unwrap(),
            &c.d.push_forward(&c.q, &c.model).unwrap(),
        ).unwrap();
        prop_assert!(lhs <= policy_distance(&c.p, &c.q).unwrap() + 1e-9);
    }

    #[test]
    fn expected_loss_is_linear_in_the_state_law(c in case()) {
        let mix: Vec<f64> = c.d.as_slice().iter().zip(c.e.as_slice())
            .map(|(a, b)| c.alpha * a + (1.0 - c.alpha) * b)
            .collect();
        let s: f64 = mix.iter().sum();
        let mix = StateDistribution::new(mix.iter().map(|v| v / s).collect()).unwrap();
        let lhs = expected_loss(&mix, &c.p, &c.loss).unwrap();
        let rhs = c.alpha * expected_loss(&c.d, &c.p, &c.loss).unwrap()
            + (1.0 - c.alpha) * expected_loss(&c.e, &c.p, &c.loss).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&lhs));
    }

    #[test]
    fn text_format_round_trips(c in case()) {
        let mut text = String::new();
        write_policy(&mut text, &c.p);
        write_model(&mut text, &c.model);
        write_loss(&mut text, &c.loss);
        let blocks = parse_blocks(&text).unwrap();
        prop_assert_eq!(blocks, vec![Block::Policy(c.p), Block::Model(c.model), Block::Loss(c.loss)]);
    }
}
