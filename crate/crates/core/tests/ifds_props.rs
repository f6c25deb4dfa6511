use std::collections::BTreeSet;

use evflow::corpus;
use evflow::event_model::EventModel;
use evflow::gen::{generate, GenConfig};
use evflow::ifds::{
    apply_rel, compose_rel, meet_rel, mvp_bruteforce, reach_unbalanced, rep_relation, resume_ifds, solve_ifds, Fact,
    FactSet,
};
use evflow::lang::parse;
use evflow::oracle::check_equivalence;
use evflow::transform::{analyze_uninit, Analysis};
use proptest::prelude::*;

/// A distributive function given directly: `gen ∪ ⋃_{d ∈ S} edges[d]`.
#[derive(Debug, Clone)]
struct SetFn {
    gen: FactSet,
    edges: Vec<FactSet>,
}

impl SetFn {
    fn call(&self, s: &FactSet) -> FactSet {
        let mut out = self.gen.clone();
        for &d in s {
            out.extend(self.edges[d as usize - 1].iter().copied());
        }
        out
    }
}

fn subsets(n: usize) -> Vec<FactSet> {
    (0..1u32 << n)
        .map(|mask| (1..=n as Fact).filter(|d| mask & (1 << (d - 1)) != 0).collect())
        .collect()
}

fn set_fn(n: usize) -> impl Strategy<Value = SetFn> {
    let set = move || prop::collection::btree_set(1..=n as Fact, 0..=n);
    (set(), prop::collection::vec(set(), n)).prop_map(|(gen, edges)| SetFn { gen, edges })
}

#[test]
fn representation_round_trips_exhaustively() {
    for n in 0..=3usize {
        let all = subsets(n);
        let mut seen = BTreeSet::new();
        let mut tables = BTreeSet::new();
        let count = all.len().pow(n as u32 + 1);
        for code in 0..count {
            let mut c = code;
            let mut pick = || {
                let s = all[c % all.len()].clone();
                c /= all.len();
                s
            };
            let gen = pick();
            let edges = (0..n).map(|_| pick()).collect();
            let f = SetFn { gen, edges };
            let r = rep_relation(|s| f.call(s), n);
            for s in &all {
                assert_eq!(apply_rel(&r, s), f.call(s), "n={n} f={f:?} s={s:?}");
            }
            let again = rep_relation(|s| apply_rel(&r, s), n);
            assert_eq!(again, r);
            seen.insert(r);
            tables.insert(all.iter().map(|s| f.call(s)).collect::<Vec<_>>());
        }
        assert_eq!(seen.len(), tables.len(), "one representation per function");
    }
}

proptest! {
    #[test]
    fn composition_matches_sets(f in set_fn(4), g in set_fn(4)) {
        let (rf, rg) = (rep_relation(|s| f.call(s), 4), rep_relation(|s| g.call(s), 4));
        let c = compose_rel(&rf, &rg);
        for s in subsets(4) {
            prop_assert_eq!(apply_rel(&c, &s), g.call(&f.call(&s)));
        }
    }

    #[test]
    fn meet_is_union(f in set_fn(4), g in set_fn(4)) {
        let (rf, rg) = (rep_relation(|s| f.call(s), 4), rep_relation(|s| g.call(s), 4));
        let m = meet_rel(&rf, &rg);
        for s in subsets(4) {
            let want: FactSet = f.call(&s).union(&g.call(&s)).copied().collect();
            prop_assert_eq!(apply_rel(&m, &s), want);
        }
    }
}

fn analyses(cfg: &GenConfig, seeds: std::ops::Range<u64>) -> Vec<(String, Analysis)> {
    let mut out = Vec::new();
    for c in corpus::ALL {
        let p = c.program().unwrap();
        out.push((c.name.to_string(), analyze_uninit(&p, &c.event_model().unwrap()).unwrap()));
    }
    for seed in seeds {
        let p = generate(seed, cfg);
        out.push((format!("gen_{seed}"), analyze_uninit(&p, &EventModel::builtin()).unwrap()));
    }
    out
}

#[test]
fn tabulation_within_unbalanced_reachability() {
    for (name, a) in analyses(&GenConfig::default(), 0..60) {
        let g = a.exploded();
        let reach = reach_unbalanced(&g, a.graph.entry());
        for n in a.graph.nodes() {
            if !a.ifds.is_reachable(n) {
                continue;
            }
            let r = reach[n.index()].as_ref().unwrap_or_else(|| panic!("{name}: n{} unreachable", n.0));
            assert!(a.ifds.facts_at(n).is_subset(r), "{name}: n{}", n.0);
        }
    }
}

#[test]
fn resuming_at_a_fixpoint_changes_nothing() {
    for (name, a) in analyses(&GenConfig::default(), 0..60) {
        let g = a.exploded();
        let fresh = solve_ifds(&g, a.graph.entry());
        assert_eq!(fresh.path_edges(), a.ifds.path_edges(), "{name}");
        let again = resume_ifds(&g, &fresh);
        assert_eq!(again.path_edges(), fresh.path_edges(), "{name}");
    }
}

#[test]
fn loop_free_programs_match_path_enumeration() {
    let cfg = GenConfig {
        loops: false,
        ..GenConfig::small()
    };
    for (name, a) in analyses(&cfg, 0..80) {
        let (o, v) = check_equivalence(&a, 40, 200_000).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(v.is_empty(), "{name}: {}", v[0]);
        assert_eq!(o.beyond_bound, 0, "{name}");
    }
}

#[test]
fn unbalanced_returns_are_excluded() {
    let src = "var g;\nf();\ng = 1;\nf();\nprint(g);\n\nfunction f() {\n    print(1);\n}\n";
    let p = parse(src).unwrap();
    let a = analyze_uninit(&p, &EventModel::builtin()).unwrap();
    let g_fact = (1..=a.num_facts() as Fact).find(|&d| a.fact_name(d) == "g").unwrap();
    let (_, s) = a.program.statements().into_iter().find(|(_, s)| s.span.line == 5).unwrap();
    let n = a.graph.stmt_node(s.id).unwrap();
    assert!(!a.ifds.holds(n, g_fact));
    let reach = reach_unbalanced(&a.exploded(), a.graph.entry());
    assert!(reach[n.index()].as_ref().unwrap().contains(&g_fact));
    let brute = mvp_bruteforce(&a.exploded(), a.graph.entry(), 60, 100_000).unwrap();
    assert!(!brute[n.index()].as_ref().unwrap().contains(&g_fact));
}
