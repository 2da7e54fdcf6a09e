#![allow(dead_code)]

use std::collections::BTreeMap;

use medidiom::graph::{build_network, Assignment, BayesNet, Cpt, Role, Variable};
use medidiom::idiom::{instantiate_instance, Arity, IdiomId, IdiomInstance};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_row(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random DAG over `V0..V{n-1}` (edges only go forward), at most three
/// parents per node, strictly positive CPTs.
pub fn random_net(rng: &mut impl Rng, n: usize, max_states: usize, edge_p: f64) -> BayesNet {
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=max_states.max(2))).collect();
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let variables: Vec<Variable> = (0..n)
        .map(|i| {
            let states: Vec<String> = (0..cards[i]).map(|s| format!("s{s}")).collect();
            Variable::new(&names[i], &states, Role::Unclassified)
        })
        .collect();
    let mut edges = Vec::new();
    let mut cpts = Vec::new();
    for j in 0..n {
        let mut parents: Vec<usize> = (0..j).filter(|_| rng.gen_bool(edge_p)).collect();
        parents.shuffle(rng);
        parents.truncate(3);
        parents.sort_unstable();
        for &p in &parents {
            edges.push((names[p].clone(), names[j].clone()));
        }
        let rows: usize = parents.iter().map(|&p| cards[p]).product();
        let table = (0..rows).map(|_| random_row(rng, cards[j])).collect();
        let parent_names: Vec<&str> = parents.iter().map(|&p| names[p].as_str()).collect();
        cpts.push(Cpt::new(&names[j], &parent_names, table));
    }
    build_network(variables, edges, cpts, Vec::new()).expect("generator builds valid networks")
}

/// Every full assignment with its joint probability.
pub fn joint_table(net: &BayesNet) -> Vec<(Vec<usize>, f64)> {
    let vars = net.variables();
    let mut digits = vec![0usize; vars.len()];
    let mut out = Vec::new();
    loop {
        let a: Assignment = vars
            .iter()
            .zip(&digits)
            .map(|(v, &d)| (v.name.clone(), v.states[d].clone()))
            .collect();
        out.push((digits.clone(), net.joint_probability(&a).unwrap()));
        let mut k = vars.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < vars[k].states.len() {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// `max |P(x,y|z) - P(x|z) P(y|z)|` over all joint states with `P(z) > 0`.
pub fn ci_gap(net: &BayesNet, x: &[&str], y: &[&str], z: &[&str]) -> f64 {
    let idx = |set: &[&str]| -> Vec<usize> { set.iter().map(|v| net.index_of(v).unwrap()).collect() };
    let (xi, yi, zi) = (idx(x), idx(y), idx(z));
    let pick = |a: &[usize], ids: &[usize]| -> Vec<usize> { ids.iter().map(|&i| a[i]).collect() };
    type Key = Vec<usize>;
    let mut pz: BTreeMap<Key, f64> = BTreeMap::new();
    let mut pxz: BTreeMap<(Key, Key), f64> = BTreeMap::new();
    let mut pyz: BTreeMap<(Key, Key), f64> = BTreeMap::new();
    let mut pxyz: BTreeMap<(Key, Key, Key), f64> = BTreeMap::new();
    for (a, p) in joint_table(net) {
        let (kx, ky, kz) = (pick(&a, &xi), pick(&a, &yi), pick(&a, &zi));
        *pz.entry(kz.clone()).or_default() += p;
        *pxz.entry((kx.clone(), kz.clone())).or_default() += p;
        *pyz.entry((ky.clone(), kz.clone())).or_default() += p;
        *pxyz.entry((kx, ky, kz)).or_default() += p;
    }
    let mut gap: f64 = 0.0;
    for ((kx, kz), p_xz) in &pxz {
        for ((ky, kz2), p_yz) in &pyz {
            if kz != kz2 || pz[kz] <= 0.0 {
                continue;
            }
            let p = pz[kz];
            let p_xyz = pxyz.get(&(kx.clone(), ky.clone(), kz.clone())).copied().unwrap_or(0.0);
            gap = gap.max((p_xyz / p - (p_xz / p) * (p_yz / p)).abs());
        }
    }
    gap
}

/// Builds a network from a single idiom instance with the given roles and
/// uniform CPTs.
pub fn template_net(instance: &IdiomInstance, roles: &BTreeMap<String, Role>) -> BayesNet {
    let fragment = instantiate_instance(instance, |v| roles.get(v).copied()).expect("conforming binding");
    let variables: Vec<Variable> = roles.iter().map(|(n, r)| Variable::new(n, &["a", "b"], *r)).collect();
    let edges: Vec<(String, String)> = fragment.edges().keys().cloned().collect();
    let decisions: Vec<(String, String)> = fragment
        .edges()
        .iter()
        .filter(|(_, e)| e.decision)
        .map(|(k, _)| k.clone())
        .collect();
    let cpts = variables
        .iter()
        .map(|v| {
            let parents: Vec<&str> = edges.iter().filter(|(_, to)| *to == v.name).map(|(f, _)| f.as_str()).collect();
            Cpt::new(&v.name, &parents, vec![vec![0.5, 0.5]; 1 << parents.len()])
        })
        .collect();
    build_network(variables, edges, cpts, decisions).expect("template networks build")
}

/// One role per bound variable, picked by `choose` from each slot's allowed set.
pub fn bind_template(
    id: IdiomId,
    mut choose: impl FnMut(&str, usize, &'static [Role]) -> Role,
    include_optional: bool,
) -> (IdiomInstance, BTreeMap<String, Role>) {
    let mut instance = IdiomInstance::new(id, "t");
    let mut roles = BTreeMap::new();
    for slot in id.template().slots {
        let count = match slot.arity {
            Arity::One => 1,
            Arity::Many => 2,
            Arity::Optional => usize::from(include_optional),
        };
        if count == 0 {
            continue;
        }
        let names: Vec<String> = (0..count).map(|k| format!("{}{k}", slot.name)).collect();
        for (k, n) in names.iter().enumerate() {
            roles.insert(n.clone(), choose(slot.name, k, slot.allowed));
        }
        instance = instance.bind(slot.name, &names);
    }
    (instance, roles)
}
