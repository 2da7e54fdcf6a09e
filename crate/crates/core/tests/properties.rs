mod common;

use std::collections::BTreeSet;

use medidiom::causal::{backdoor_adjust, build_twin, counterfactual_query, do_surgery, interventional_query};
use medidiom::graph::Assignment;
use medidiom::idiom::{catalog, IdiomId};
use medidiom::inference::{enumerate_posterior, posterior};
use medidiom::lint::{lint, RuleId, Severity};
use medidiom::model::{elaborate, parse, serialize, ModelDocument};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::{bind_template, ci_gap, joint_table, random_net, rng, template_net};

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_sums_to_one(seed in any::<u64>(), n in 1usize..=10) {
        let net = random_net(&mut rng(seed), n, 2, 0.4);
        let total: f64 = joint_table(&net).iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9, "sum {total}");
    }

    #[test]
    fn d_separation_is_symmetric_and_sound(seed in any::<u64>(), n in 2usize..=8) {
        let mut r = rng(seed);
        let net = random_net(&mut r, n, 2, 0.35);
        let mut names: Vec<String> = net.variables().iter().map(|v| v.name.clone()).collect();
        names.shuffle(&mut r);
        let zc = r.gen_range(0..=n - 2);
        let x = [names[0].as_str()];
        let y = [names[1].as_str()];
        let z: Vec<&str> = names[2..2 + zc].iter().map(String::as_str).collect();
        let xy = net.d_separated(&x, &y, &z).unwrap();
        prop_assert_eq!(xy, net.d_separated(&y, &x, &z).unwrap());
        if xy {
            let gap = ci_gap(&net, &x, &y, &z);
            prop_assert!(gap <= 1e-9, "gap {gap:e}");
        }
    }

    #[test]
    fn ancestors_mirror_descendants(seed in any::<u64>(), n in 1usize..=10) {
        let net = random_net(&mut rng(seed), n, 3, 0.4);
        for a in net.variables() {
            let down = net.descendants(&a.name).unwrap();
            prop_assert!(!down.contains(&a.name));
            for b in net.variables() {
                prop_assert_eq!(down.contains(&b.name), net.ancestors(&b.name).unwrap().contains(&a.name));
            }
        }
    }

    #[test]
    fn elimination_matches_enumeration(seed in any::<u64>(), n in 1usize..=9) {
        let mut r = rng(seed);
        let net = random_net(&mut r, n, 3, 0.4);
        let mut ev = Assignment::new();
        for v in net.variables() {
            if r.gen_bool(0.3) {
                ev.insert(v.name.clone(), v.states[r.gen_range(0..v.states.len())].clone());
            }
        }
        for t in net.variables() {
            let a = posterior(&net, &t.name, &ev).unwrap();
            let b = enumerate_posterior(&net, &t.name, &ev).unwrap();
            prop_assert!(a.max_abs_diff(&b) <= 1e-9);
            prop_assert!((a.probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn surgery_agrees_with_parent_adjustment(seed in any::<u64>(), n in 2usize..=9) {
        let mut r = rng(seed);
        let net = random_net(&mut r, n, 2, 0.4);
        let vars = net.variables();
        let t = &vars[r.gen_range(0..n)];
        let parents: Vec<&str> = net.parents(&t.name).unwrap();
        let candidates: Vec<&str> = vars
            .iter()
            .map(|v| v.name.as_str())
            .filter(|v| *v != t.name && !parents.contains(v))
            .collect();
        prop_assume!(!candidates.is_empty());
        let y = candidates[r.gen_range(0..candidates.len())];
        let state = &t.states[r.gen_range(0..t.states.len())];
        let forced = Assignment::new().with(t.name.clone(), state.clone());
        let surgery = interventional_query(&net, y, &forced, &Assignment::new()).unwrap().distribution;
        let adjusted = backdoor_adjust(&net, y, &t.name, state, &parents).unwrap();
        prop_assert!(surgery.max_abs_diff(&adjusted) <= 1e-9);
    }

    #[test]
    fn interventions_do_not_inform_ancestors(seed in any::<u64>(), n in 2usize..=9) {
        let mut r = rng(seed);
        let net = random_net(&mut r, n, 2, 0.5);
        let vars = net.variables();
        let x = &vars[r.gen_range(0..n)];
        let forced = Assignment::new().with(x.name.clone(), x.states[r.gen_range(0..2)].clone());
        let mutilated = do_surgery(&net, &forced).unwrap();
        prop_assert!(mutilated.parents(&x.name).unwrap().is_empty());
        for a in net.ancestors(&x.name).unwrap() {
            let prior = posterior(&net, &a, &Assignment::new()).unwrap();
            let after = interventional_query(&net, &a, &forced, &Assignment::new()).unwrap().distribution;
            prop_assert!(prior.max_abs_diff(&after) <= 1e-12, "{} moved", a);
        }
    }

    #[test]
    fn root_do_equals_conditioning(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let net = random_net(&mut r, n, 3, 0.4);
        let roots: Vec<_> = net.variables().iter().filter(|v| net.parents(&v.name).unwrap().is_empty()).collect();
        let root = roots[r.gen_range(0..roots.len())];
        let set = Assignment::new().with(root.name.clone(), root.states[0].clone());
        for t in net.variables() {
            let cond = posterior(&net, &t.name, &set).unwrap();
            let done = interventional_query(&net, &t.name, &set, &Assignment::new()).unwrap().distribution;
            prop_assert_eq!(cond.probabilities, done.probabilities);
        }
    }

    #[test]
    fn twin_structure(seed in any::<u64>(), n in 2usize..=8) {
        let mut r = rng(seed);
        let net = random_net(&mut r, n, 2, 0.4);
        let x = net.variables()[r.gen_range(0..n)].clone();
        let forced = Assignment::new().with(x.name.clone(), x.states[1].clone());
        let twin = build_twin(&net, &forced, false).unwrap();
        let down = net.descendants(&x.name).unwrap();
        let copied: BTreeSet<String> = twin.hypothetical.keys().cloned().collect();
        let mut expected = down.clone();
        expected.insert(x.name.clone());
        prop_assert_eq!(&copied, &expected);
        prop_assert_eq!(twin.net.len(), n + expected.len());
        for v in net.variables() {
            prop_assert_eq!(twin.shared.contains(&v.name), !expected.contains(&v.name));
        }
        let copy = twin.hypothetical_name(&x.name).unwrap();
        prop_assert!(twin.net.parents(copy).unwrap().is_empty());

        // With nothing observed the hypothetical world is the mutilated one.
        for t in net.variables() {
            let cf = counterfactual_query(&net, &Assignment::new(), &forced, &t.name).unwrap().distribution;
            let done = interventional_query(&net, &t.name, &forced, &Assignment::new()).unwrap().distribution;
            prop_assert!(max_gap(&cf.probabilities, &done.probabilities) <= 1e-9);
        }
    }

    #[test]
    fn conforming_templates_raise_no_errors(seed in any::<u64>(), which in 0usize..14, optional in any::<bool>()) {
        let mut r = rng(seed);
        let id: IdiomId = catalog()[which].id;
        let (instance, roles) = bind_template(id, |_, _, allowed| *allowed.choose(&mut r).unwrap(), optional);
        let net = template_net(&instance, &roles);
        let report = lint(&net, Some(std::slice::from_ref(&instance)));
        for f in &report.findings {
            prop_assert!(f.severity != Severity::Error, "{} {:?}: {}", id, roles, f);
            prop_assert!(![RuleId::R1, RuleId::R2, RuleId::R5, RuleId::R6].contains(&f.rule));
        }
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>(), n in 1usize..=7) {
        let net = random_net(&mut rng(seed), n, 3, 0.4);
        let text = serialize(&ModelDocument::from_network(&net, &[]));
        let doc = parse(&text).unwrap();
        prop_assert_eq!(serialize(&doc), text.clone());
        let back = elaborate(&doc).unwrap().net;
        // Numbers are written with 12 significant digits.
        let edges = |n: &medidiom::graph::BayesNet| n.edges().iter().cloned().collect::<BTreeSet<_>>();
        prop_assert_eq!(edges(&back), edges(&net));
        for v in net.variables() {
            prop_assert_eq!(back.variable(&v.name), Some(v));
            let (a, b) = (net.cpt(&v.name).unwrap(), back.cpt(&v.name).unwrap());
            prop_assert_eq!(&a.parents, &b.parents);
            for (ra, rb) in a.table.iter().zip(&b.table) {
                prop_assert!(max_gap(ra, rb) <= 1e-11);
            }
        }
        let again = elaborate(&parse(&serialize(&ModelDocument::from_network(&back, &[]))).unwrap()).unwrap().net;
        prop_assert!(again.equivalent(&back));
    }
}
