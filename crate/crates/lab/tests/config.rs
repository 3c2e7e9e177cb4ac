use dqrom::config::{Abscissa, ExperimentConfig, Framework, Ranks, RegressionOptions, SolutionOptions};
use proptest::prelude::*;

fn framework_set() -> impl Strategy<Value = Vec<Framework>> {
    prop::sample::subsequence(Framework::ALL.to_vec(), 1..=4)
}

fn ranks() -> impl Strategy<Value = Ranks> {
    prop_oneof![
        prop::collection::vec(1usize..200, 1..10).prop_map(Ranks::List),
        (1usize..50, 0usize..50).prop_map(|(min, span)| Ranks::Range { min, max: min + span }),
    ]
}

prop_compose! {
    fn config()(
        n_cells in 2usize..2048,
        nu in 1e-4..1.0_f64,
        steps in 1usize..2000,
        dt in 1e-4..1e-2_f64,
        frameworks in framework_set(),
        ranks in ranks(),
        i_u in 0.0..10.0_f64,
        cutoff in 1e-16..1e-2_f64,
        tail in any::<bool>(),
        r_min in prop::option::of(1usize..10),
    ) -> ExperimentConfig {
        ExperimentConfig {
            n_cells,
            nu,
            dt,
            t_final: dt * steps as f64,
            frameworks,
            ranks,
            i_u_constant: i_u,
            pod_cutoff: cutoff,
            regression: RegressionOptions {
                abscissa: if tail { Abscissa::Tail } else { Abscissa::Rhs },
                r_min,
                r_max: None,
            },
            solutions: SolutionOptions { ranks: vec![5, 13], times: vec![0.0] },
            ..ExperimentConfig::default()
        }
    }
}

proptest! {
    #[test]
    fn json_round_trip_is_lossless(cfg in config()) {
        let text = cfg.to_json();
        let back = ExperimentConfig::from_json(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_json(), text);
    }
}

#[test]
fn unknown_fields_are_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"n_cell": 64}"#).is_err());
    let cfg = ExperimentConfig::from_json(r#"{"n_cells": 64, "ranks": [2, 4]}"#).unwrap();
    assert_eq!(cfg.n_cells, 64);
    assert_eq!(cfg.ranks, Ranks::List(vec![2, 4]));
}
