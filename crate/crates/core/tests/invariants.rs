mod common;

use std::collections::{BTreeMap, BTreeSet};

use blm::audit::{diff_models, impact};
use blm::blps;
use blm::model::{ElementIndex, ElementKind};
use blm::props::{eval_computability, evaluate_all};
use blm::{abstract_flow, build_flow, load_contract, parse_source, print_contract, print_model, Contract};
use common::{random_cost, random_model, rng};
use proptest::prelude::*;
use rand::RngExt;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 128, ..ProptestConfig::default() }
}

fn contract_strategy() -> impl Strategy<Value = Contract> {
    let label = prop_oneof![Just("BF1"), Just("BFf1"), Just("DR2"), Just("CRr1"), Just("BFrcv")];
    let kinds = [
        ElementKind::BusinessLogic,
        ElementKind::BusinessFunction,
        ElementKind::DataRule,
        ElementKind::ConditionalRule,
    ];
    (
        "[a-z][a-z0-9-]{0,8}",
        1u64..10_000,
        prop::collection::btree_set("[a-z][a-z0-9_]{0,5}", 0..4),
        prop::collection::vec(prop::option::of(1u64..20), 4),
        prop::collection::btree_map("s[0-3]", prop::collection::btree_set(label.clone(), 0..4), 0..3),
        prop::collection::vec(("s[0-3]", label, "t[0-3]"), 0..3),
    )
        .prop_map(move |(name, budget, trace, weights, accessible, bindings)| {
            let mut c = Contract { name, budget, trace, ..Contract::default() };
            for (kind, w) in kinds.iter().zip(weights) {
                if let Some(w) = w {
                    c.cost.set_weight(*kind, w);
                }
            }
            c.accessible = accessible
                .into_iter()
                .map(|(s, ls)| (s, ls.into_iter().map(str::to_string).collect()))
                .collect::<BTreeMap<_, BTreeSet<_>>>();
            c.bindings = bindings.into_iter().map(|(s, l, t)| (ElementIndex::new(&s, l), t)).collect();
            c
        })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn printed_models_reparse(seed in any::<u64>()) {
        let (_, model) = random_model(&mut rng(seed), 12);
        let text = print_model(&model);
        prop_assert_eq!(parse_source(&text).unwrap(), model);
    }

    #[test]
    fn flow_text_round_trips(seed in any::<u64>()) {
        let (_, model) = random_model(&mut rng(seed), 12);
        for graph in [build_flow(&model).unwrap(), abstract_flow(&model).unwrap()] {
            let text = graph.to_string();
            let back = blm::parser::parse_flow_productions(&text).unwrap();
            prop_assert!(back.same_productions(&graph), "{}", text);
            prop_assert_eq!(back.to_string(), text);
        }
    }

    #[test]
    fn cf_grows_with_budget(seed in any::<u64>(), budget in 1u64..60, k in 1u64..30) {
        let mut r = rng(seed);
        let (_, model) = random_model(&mut r, 12);
        let cost = random_cost(&mut r);
        let (a, _) = eval_computability(&model, &cost, budget).unwrap();
        let (b, _) = eval_computability(&model, &cost, budget + k).unwrap();
        prop_assert!(a.is_subset(&b));
    }

    #[test]
    fn cf_is_scale_invariant(seed in any::<u64>(), budget in 1u64..60, factor in 2u64..7) {
        let mut r = rng(seed);
        let (_, model) = random_model(&mut r, 12);
        let cost = random_cost(&mut r);
        let (a, _) = eval_computability(&model, &cost, budget).unwrap();
        let (b, _) = eval_computability(&model, &cost.scaled(factor), budget * factor).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn access_sets_partition_the_model(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (_, model) = random_model(&mut r, 12);
        let mut contract = Contract::default();
        for e in model.elements() {
            if r.random_bool(0.4) {
                contract.accessible.entry(e.index.service.clone()).or_default().insert(e.index.local.clone());
            }
        }
        let props = evaluate_all(&model, &contract).unwrap();
        let all: BTreeSet<ElementIndex> = model.elements().map(|e| e.index.clone()).collect();
        prop_assert!(props.af.is_disjoint(&props.naf));
        prop_assert_eq!(props.af.union(&props.naf).cloned().collect::<BTreeSet<_>>(), all.clone());
        prop_assert!(props.cf.is_subset(&all));
    }

    #[test]
    fn contract_text_round_trips(c in contract_strategy()) {
        let text = print_contract(&c);
        let back = load_contract(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(print_contract(&back), text);
    }

    #[test]
    fn diff_is_antisymmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (_, a) = random_model(&mut rng(s1), 12);
        let (_, b) = random_model(&mut rng(s2), 12);
        let ab = diff_models(&a, &b);
        let ba = diff_models(&b, &a);
        prop_assert_eq!(&ab.added, &ba.removed);
        prop_assert_eq!(&ab.removed, &ba.added);
        prop_assert_eq!(ab.modified.keys().collect::<Vec<_>>(), ba.modified.keys().collect::<Vec<_>>());
        for (ix, fields) in &ab.modified {
            let back = &ba.modified[ix];
            prop_assert_eq!(fields.len(), back.len());
            for (f, g) in fields.iter().zip(back) {
                prop_assert_eq!(&f.field, &g.field);
                prop_assert_eq!(&f.old, &g.new);
            }
        }
        prop_assert!(diff_models(&a, &a).is_empty());

        let contract = Contract::default();
        let fwd = impact(&a, &b, &contract).unwrap();
        let rev = impact(&b, &a, &contract).unwrap();
        prop_assert_eq!(&fwd.cf.entered, &rev.cf.left);
        prop_assert_eq!(&fwd.tf.left, &rev.tf.entered);
        prop_assert_eq!(fwd.verdict, rev.verdict);
    }

    #[test]
    fn blps_preserves_the_model(seed in any::<u64>()) {
        let (_, model) = random_model(&mut rng(seed), 12);
        let props = evaluate_all(&model, &Contract::default()).unwrap();
        let doc = blps::generate_integrated_blps(&model, &props, "outer");
        let back = blps::deserialize(&blps::serialize(&doc)).unwrap();
        prop_assert_eq!(blps::to_model(&back).unwrap(), model);
    }
}
