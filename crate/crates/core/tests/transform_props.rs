use evflow::corpus::{self, CorpusEntry};
use evflow::event_lattice::{HState, HandlerMicroFn, MicroFn};
use evflow::event_model::EventModel;
use evflow::gen::{generate, GenConfig};
use evflow::lang::{interpret, parse, SchedulePolicy};
use evflow::report::{build_report, render_text, Mode, Report, Status};
use evflow::supergraph::{EdgeKind, EventOp};
use evflow::transform::{analyze_uninit, transform, Analysis};

fn analyze(c: &CorpusEntry) -> Analysis {
    analyze_uninit(&c.program().unwrap(), &c.event_model().unwrap()).unwrap()
}

fn all_analyses() -> Vec<(String, Analysis)> {
    let mut out: Vec<(String, Analysis)> = corpus::ALL.iter().map(|c| (c.name.to_string(), analyze(c))).collect();
    for seed in 0..40 {
        let p = generate(seed, &GenConfig::default());
        out.push((format!("gen_{seed}"), analyze_uninit(&p, &EventModel::builtin()).unwrap()));
    }
    out
}

#[test]
fn transform_preserves_structure() {
    for (name, a) in all_analyses() {
        let ex = a.exploded();
        let (nodes, edges) = (ex.node_count(), ex.edge_count());
        let labeled = transform(a.exploded());
        assert_eq!(labeled.exploded().node_count(), nodes, "{name}");
        assert_eq!(labeled.exploded().edge_count(), edges, "{name}");
        assert_eq!(labeled.labels().len(), a.graph.edge_count(), "{name}");
        for e in a.graph.edge_ids() {
            assert_eq!(labeled.exploded().flow(e), ex.flow(e), "{name}");
            let ops = a.graph.annotation(e);
            assert_eq!(labeled.label(e), &HandlerMicroFn::for_ops(ops), "{name}");
            if ops.is_empty() {
                assert!(labeled.label(e).is_identity(), "{name}");
            }
            if let EdgeKind::Dispatch(h) = a.graph.edge(e).kind {
                assert_eq!(ops, &[EventOp::Invoke(h)], "{name}");
            }
        }
    }
}

#[test]
fn door_register_label() {
    let a = analyze(&corpus::DOOR);
    let open = a.graph.handler_id("hdlOpen").unwrap();
    let labeled = transform(a.exploded());
    let e = a
        .graph
        .edge_ids()
        .find(|&e| a.graph.annotation(e) == [EventOp::Register(open)])
        .expect("register edge");
    assert_eq!(labeled.label(e), &HandlerMicroFn::single(open, MicroFn::REGISTER));
    assert_eq!(labeled.label(e).entries().len(), 1);
}

#[test]
fn dirstat_async_label() {
    let a = analyze(&corpus::DIRSTAT);
    let labeled = transform(a.exploded());
    for name in ["f", "h"] {
        let h = a.graph.handler_id(name).unwrap();
        let e = a
            .graph
            .edge_ids()
            .find(|&e| a.graph.annotation(e) == [EventOp::EmitRegister(h)])
            .expect("register_async edge");
        let want = MicroFn::EMIT.compose(MicroFn::REGISTER);
        assert_eq!(labeled.label(e), &HandlerMicroFn::single(h, want));
        assert_eq!(want.table(), [HState::X, HState::E, HState::E, HState::E]);
    }
}

#[test]
fn without_handlers_filtering_is_the_identity() {
    let sources = [
        corpus::TRIVIALLY_CLEAN.source.to_string(),
        "var a;\nvar b = 1;\nif (b > 0) { a = 1; } else { print(b); }\nprint(a);\n".to_string(),
        "var x;\nf(x);\nprint(x);\n\nfunction f(p) {\n    var q;\n    while (p < 2) { q = p; p = p + 1; }\n    print(q);\n}\n"
            .to_string(),
    ];
    for src in sources {
        let p = parse(&src).unwrap();
        let a = analyze_uninit(&p, &EventModel::builtin()).unwrap();
        assert!(a.graph.handlers().is_empty());
        assert!(a.filtered.provenance.is_empty());
        for n in a.graph.nodes() {
            assert_eq!(a.filtered.is_reachable(n), a.ifds.is_reachable(n));
            assert_eq!(a.filtered.facts_at(n), a.ifds.facts_at(n), "{src}");
        }
    }
}

#[test]
fn every_ifds_fact_is_kept_or_explained() {
    for (name, a) in all_analyses() {
        for n in a.graph.nodes() {
            let kept = a.filtered.facts_at(n);
            for &d in a.ifds.facts_at(n) {
                let explained = a.filtered.provenance.get(&(n, d));
                assert!(kept.contains(&d) != explained.is_some(), "{name}: n{} fact {d}", n.0);
                if let Some(m) = explained {
                    assert!(!m.is_feasible(), "{name}: provenance must be infeasible");
                }
            }
            let total = kept.len() + a.filtered.provenance.keys().filter(|k| k.0 == n).count();
            assert_eq!(total, a.ifds.facts_at(n).len(), "{name}: n{}", n.0);
        }
    }
}

#[test]
fn report_modes_are_consistent() {
    for (name, a) in all_analyses() {
        let files = vec![format!("{name}.evl")];
        let ifds = build_report(&a, &files, Mode::Ifds, 0.0);
        let ide = build_report(&a, &files, Mode::Ide, 0.0);
        let diff = build_report(&a, &files, Mode::Diff, 0.0);
        assert_eq!(diff.diagnostics.len(), ifds.diagnostics.len(), "{name}");
        assert_eq!(diff.reported(), ide.reported(), "{name}");
        assert_eq!(diff.filtered(), ifds.reported() - ide.reported(), "{name}");
        for d in &diff.diagnostics {
            assert_eq!(d.handler_states.is_some(), d.status == Status::Filtered, "{name}");
        }
    }
}

#[test]
fn reports_round_trip_through_json() {
    for (name, a) in all_analyses() {
        for mode in [Mode::Ifds, Mode::Ide, Mode::Diff] {
            let r = build_report(&a, &[format!("{name}.evl")], mode, 1.25);
            let back = Report::from_json(&r.to_json()).unwrap();
            assert_eq!(back, r, "{name}");
        }
    }
}

#[test]
fn timer_diff_text() {
    let a = analyze(&corpus::TIMER);
    let r = build_report(&a, &["timer.evl".to_string()], Mode::Diff, 0.0);
    let text = render_text(&r, false);
    assert!(text.contains("variable 'rem' may be uninitialized [infeasible-path artifact]"), "{text}");
    assert!(text.contains("would require handler 'tick' invoked before emission"), "{text}");
    assert!(text.contains("handler states: {start: E, tick: X}"), "{text}");
    assert!(text.ends_with("0 reported, 3 filtered\n"), "{text}");
    assert!(!text.contains('\x1b'));
    assert!(render_text(&r, true).contains('\x1b'));
}

#[test]
fn reordered_door_keeps_its_diagnostic() {
    let a = analyze(&corpus::DOOR_REORDERED);
    let r = build_report(&a, &["door_reordered.evl".to_string()], Mode::Ide, 0.0);
    let lines: Vec<(u32, &str)> = r.diagnostics.iter().map(|d| (d.line, d.var.as_str())).collect();
    assert_eq!(lines, vec![(12, "txt")]);
    assert_eq!(r.exit_code(), 1);
    let trace = interpret(&a.program, &SchedulePolicy::Fifo, 1_000).unwrap();
    let reads: Vec<&str> = trace.uninit_reads().into_iter().map(|(_, v)| v).collect();
    assert_eq!(reads, vec!["txt"]);
}
