use evflow::corpus;
use evflow::event_lattice::HStateMap;
use evflow::event_model::EventModel;
use evflow::gen::{generate, GenConfig};
use evflow::ide::{mvp_ide_bruteforce, resume_ide, solve_ide, EventDomain};
use evflow::transform::{analyze_uninit, transform, Analysis};

fn check_against_enumeration(name: &str, a: &Analysis, max_len: usize) -> usize {
    let dom = EventDomain::new();
    let g = transform(a.exploded());
    let entry = a.graph.entry();
    let brute = mvp_ide_bruteforce(&dom, &g, entry, HStateMap::all_start(), max_len, 500_000)
        .unwrap_or_else(|e| panic!("{name}: {e}"));
    let mut compared = 0;
    for n in a.graph.nodes() {
        let Some(env) = &brute[n.index()] else {
            continue;
        };
        compared += 1;
        assert_eq!(a.ide.env(n), Some(env), "{name}: n{}", n.0);
    }
    compared
}

#[test]
fn case_studies_match_enumeration() {
    for c in corpus::ALL {
        let p = c.program().unwrap();
        let a = analyze_uninit(&p, &c.event_model().unwrap()).unwrap();
        let compared = check_against_enumeration(c.name, &a, 60);
        assert_eq!(compared, a.graph.nodes().filter(|&n| a.ide.is_reachable(n)).count(), "{}", c.name);
    }
}

#[test]
fn small_programs_match_enumeration() {
    let mut total = 0;
    for seed in 0..60 {
        let p = generate(seed, &GenConfig::small());
        let a = analyze_uninit(&p, &EventModel::builtin()).unwrap();
        total += check_against_enumeration(&format!("gen_{seed}"), &a, 40);
    }
    assert!(total > 500);
}

#[test]
fn resuming_at_a_fixpoint_changes_nothing() {
    for seed in 0..40 {
        let p = generate(seed, &GenConfig::default());
        let a = analyze_uninit(&p, &EventModel::builtin()).unwrap();
        let dom = EventDomain::new();
        let g = transform(a.exploded());
        let entry = a.graph.entry();
        let fresh = solve_ide(&dom, &g, entry, HStateMap::all_start());
        assert_eq!(fresh.jump_functions(), a.ide.jump_functions(), "seed {seed}");
        let again = resume_ide(&dom, &g, entry, HStateMap::all_start(), &fresh);
        assert_eq!(again.jump_functions(), fresh.jump_functions(), "seed {seed}");
        for n in a.graph.nodes() {
            assert_eq!(again.env(n), fresh.env(n), "seed {seed}: n{}", n.0);
        }
    }
}

#[test]
fn reachability_agrees_with_ifds() {
    for seed in 0..60 {
        let p = generate(seed, &GenConfig::default());
        let a = analyze_uninit(&p, &EventModel::builtin()).unwrap();
        for n in a.graph.nodes() {
            assert_eq!(a.ide.is_reachable(n), a.ifds.is_reachable(n), "seed {seed}: n{}", n.0);
            let ide_facts: Vec<u32> = a.ide.env(n).map(|e| e.keys().copied().filter(|&d| d != 0).collect()).unwrap_or_default();
            let ifds_facts: Vec<u32> = a.ifds.facts_at(n).iter().copied().collect();
            assert_eq!(ide_facts, ifds_facts, "seed {seed}: n{}", n.0);
        }
    }
}
