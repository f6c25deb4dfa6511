use std::collections::BTreeSet;

use evflow::event_model::EventModel;
use evflow::ifds::{apply_rel, Fact, FactSet, RepRelation};
use evflow::lang::{interpret, parse, Program, SchedulePolicy, StmtId};
use evflow::transform::analyze_uninit;
use evflow::uninit::{report_uses, UninitProblem};
use proptest::prelude::*;

fn stmt_relation(src: &str, line: u32) -> (Program, RepRelation) {
    let p = parse(src).unwrap();
    let problem = UninitProblem::new(&p);
    let (_, s) = p.statements().into_iter().find(|(_, s)| s.span.line == line).unwrap();
    let r = problem.stmt_flow(s);
    (p, r)
}

fn fact(p: &Program, name: &str) -> Fact {
    let vars = p.all_vars();
    vars.iter().position(|&v| p.var_name(v) == name).unwrap() as Fact + 1
}

#[test]
fn assignment_relation() {
    let (p, r) = stmt_relation("var x;\nvar y;\nvar z;\nx = y + z;\n", 4);
    let (x, y, z) = (fact(&p, "x"), fact(&p, "y"), fact(&p, "z"));
    let want = RepRelation::from_pairs([(0, 0), (y, y), (z, z), (y, x), (z, x)]);
    assert_eq!(r, want);
}

#[test]
fn declaration_without_initializer_gens() {
    let (p, r) = stmt_relation("var x;\nvar y;\n", 2);
    let (x, y) = (fact(&p, "x"), fact(&p, "y"));
    assert_eq!(r, RepRelation::from_pairs([(0, 0), (x, x), (0, y)]));
    assert_eq!(apply_rel(&r, &FactSet::new()), FactSet::from([y]));
}

#[test]
fn constant_assignment_kills() {
    let (p, r) = stmt_relation("var x;\nx = 3;\n", 2);
    let x = fact(&p, "x");
    assert_eq!(apply_rel(&r, &FactSet::from([x])), FactSet::new());
}

#[test]
fn self_assignment_keeps_state() {
    let (p, r) = stmt_relation("var x;\nvar y;\nx = x + 1;\n", 3);
    let (x, y) = (fact(&p, "x"), fact(&p, "y"));
    assert_eq!(apply_rel(&r, &FactSet::from([x, y])), FactSet::from([x, y]));
    assert_eq!(apply_rel(&r, &FactSet::from([y])), FactSet::from([y]));
}

#[test]
fn print_is_identity() {
    let (p, r) = stmt_relation("var x;\nprint(x);\n", 2);
    assert_eq!(r, RepRelation::identity(p.all_vars().len()));
}

const VARS: [&str; 3] = ["a", "b", "c"];

fn expr() -> impl Strategy<Value = String> {
    prop_oneof![
        (0..5i32).prop_map(|n| n.to_string()),
        (0..3usize).prop_map(|i| VARS[i].to_string()),
        (0..3usize, 0..3usize).prop_map(|(i, j)| format!("{} + {}", VARS[i], VARS[j])),
    ]
}

fn stmt() -> impl Strategy<Value = String> {
    prop_oneof![
        (0..3usize, expr()).prop_map(|(i, e)| format!("{} = {e};", VARS[i])),
        expr().prop_map(|e| format!("print({e});")),
        expr().prop_map(|e| format!("show({e});")),
    ]
}

/// Straight-line programs over three globals plus a helper with a local.
fn straight_line() -> impl Strategy<Value = String> {
    (prop::collection::vec(prop::option::of(0..5i32), 3), prop::collection::vec(stmt(), 0..10)).prop_map(|(inits, body)| {
        let mut src = String::new();
        for (v, init) in VARS.iter().zip(inits) {
            match init {
                Some(k) => src.push_str(&format!("var {v} = {k};\n")),
                None => src.push_str(&format!("var {v};\n")),
            }
        }
        for s in body {
            src.push_str(&s);
            src.push('\n');
        }
        src.push_str("\nfunction show(p) {\n    var t;\n    print(p);\n    t = p;\n    print(t);\n}\n");
        src
    })
}

fn interpreter_reads(p: &Program) -> BTreeSet<(StmtId, String)> {
    let trace = match interpret(p, &SchedulePolicy::Fifo, 10_000) {
        Ok(t) => t,
        Err(e) => e.trace,
    };
    trace.uninit_reads().into_iter().map(|(s, v)| (s, v.to_string())).collect()
}

proptest! {
    #[test]
    fn flow_functions_distribute(src in straight_line(), a in prop::collection::btree_set(1u32..=5, 0..5),
                                 b in prop::collection::btree_set(1u32..=5, 0..5)) {
        let p = parse(&src).unwrap();
        let problem = UninitProblem::new(&p);
        let n = p.all_vars().len() as Fact;
        let a: FactSet = a.into_iter().filter(|&d| d <= n).collect();
        let b: FactSet = b.into_iter().filter(|&d| d <= n).collect();
        let both: FactSet = a.union(&b).copied().collect();
        for (_, s) in p.statements() {
            let r = problem.stmt_flow(s);
            let sep: FactSet = apply_rel(&r, &a).union(&apply_rel(&r, &b)).copied().collect();
            prop_assert_eq!(apply_rel(&r, &both), sep);
        }
    }

    #[test]
    fn straight_line_matches_interpreter(src in straight_line()) {
        let p = parse(&src).unwrap();
        let a = analyze_uninit(&p, &EventModel::builtin()).unwrap();
        let problem = UninitProblem::new(&a.program);
        let predicted: BTreeSet<(StmtId, String)> =
            report_uses(&a.program, &a.graph, &problem, |n, d| a.ifds.holds(n, d))
                .into_iter()
                .map(|d| (d.stmt, a.fact_name(d.fact).to_string()))
                .collect();
        // Without branches or events every path is executed, so the analysis
        // is exact up to calls sharing one summary.
        let actual = interpreter_reads(&a.program);
        prop_assert!(actual.is_subset(&predicted), "missed {:?}", actual.difference(&predicted).collect::<Vec<_>>());
        let top_only = |s: &&(StmtId, String)| a.program.statement(s.0).is_some_and(|(f, _)| f == evflow::lang::FuncId::TOP);
        let pt: BTreeSet<_> = predicted.iter().filter(top_only).collect();
        let at: BTreeSet<_> = actual.iter().filter(top_only).collect();
        prop_assert_eq!(pt, at);
    }
}
