use cpomdp::model::{validate_model, PomdpModel};
use cpomdp::parser::{parse_pomdp, serialize_model};
use cpomdp::problems::{instance, instantiate, list_instances, BudgetLevel, HorizonType, INSTANCE_NAMES};

#[test]
fn every_instance_is_valid_and_round_trips() {
    for name in INSTANCE_NAMES {
        let rec = instance(name).unwrap();
        assert!(validate_model(&rec.model).is_empty(), "{name}");
        let again = parse_pomdp(&serialize_model(&rec.model)).unwrap();
        let m = &rec.model;
        assert_eq!((&again.states, &again.actions, &again.observations), (&m.states, &m.actions, &m.observations));
        let flat = |x: &PomdpModel| -> Vec<f64> {
            let mut v: Vec<f64> = x.trans.iter().flatten().flatten().copied().collect();
            v.extend(x.obs.iter().flatten().flatten());
            v.extend(x.reward.iter().flatten());
            v.extend(&x.terminal_reward);
            v.push(x.discount);
            v
        };
        let (a, b) = (flat(&again), flat(m));
        assert_eq!(a.len(), b.len());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12), "{name}");
        assert_eq!(rec.cost.len(), rec.model.num_actions());
        assert!((rec.initial_belief.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn budgets_increase_with_level() {
    for name in INSTANCE_NAMES {
        for kind in [HorizonType::Finite, HorizonType::Infinite] {
            let b: Vec<f64> =
                BudgetLevel::ALL.iter().map(|&l| instantiate(name, l, kind).unwrap().spec.budget).collect();
            assert!(b[0] < b[1] && b[1] < b[2], "{name} {kind:?}: {b:?}");
        }
    }
}

#[test]
fn catalog_listing_matches_models() {
    let sizes: Vec<(usize, usize, usize)> = list_instances().iter().map(|s| (s.states, s.actions, s.observations)).collect();
    assert_eq!(sizes[0], (2, 3, 2));
    assert_eq!(sizes[5], (129, 8, 2));
    assert!(instance("no-such-problem").is_err());
}
