//! End-to-end acceptance checks. Runs without the libtest harness so that
//! each criterion prints exactly one PASS/FAIL line.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use evflow::corpus::{self, CorpusEntry};
use evflow::event_lattice::{verify_tables, HState, HStateMap, MicroFn};
use evflow::event_model::EventModel;
use evflow::gen::{generate, GenConfig};
use evflow::lang::Program;
use evflow::oracle::{check_equivalence, check_precision, check_soundness};
use evflow::supergraph::HandlerId;
use evflow::transform::{analyze_uninit, compose_path, Analysis};
use evflow::uninit::{report_uses, Diagnostic, UninitProblem};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn analyze(c: &CorpusEntry) -> Result<Analysis, String> {
    let p = c.program().map_err(|e| e.to_string())?;
    let m = c.event_model().map_err(|e| e.to_string())?;
    analyze_uninit(&p, &m).map_err(|e| e.to_string())
}

fn diagnostics(a: &Analysis, filtered: bool) -> Vec<Diagnostic> {
    let problem = UninitProblem::new(&a.program);
    report_uses(&a.program, &a.graph, &problem, |n, d| {
        if filtered {
            a.filtered.holds(n, d)
        } else {
            a.ifds.holds(n, d)
        }
    })
}

fn lines_for(diags: &[Diagnostic], var: &str) -> Vec<u32> {
    diags.iter().filter(|d| d.var == var).map(|d| d.line).collect()
}

fn states(a: &Analysis, pairs: &[(&str, HState)]) -> HStateMap {
    HStateMap::from_entries(pairs.iter().map(|&(h, s)| (a.graph.handler_id(h).expect("known handler"), s)))
}

fn fact_of(a: &Analysis, name: &str) -> u32 {
    (1..=a.num_facts() as u32).find(|&d| a.fact_name(d) == name).expect("known variable")
}

fn start_of(a: &Analysis, f: &str) -> evflow::supergraph::NodeId {
    a.graph.start(a.program.func_id(f).expect("known function"))
}

/// Node of the first statement on `line`.
fn read_node(a: &Analysis, line: u32) -> evflow::supergraph::NodeId {
    let (_, s) = a
        .program
        .statements()
        .into_iter()
        .find(|(_, s)| s.span.line == line)
        .expect("statement on line");
    a.graph.stmt_node(s.id).expect("statement node")
}

fn timed(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, format!("took {t:?}, limit {limit:?}"))
}

fn door() -> Check {
    let start = Instant::now();
    let a = analyze(&corpus::DOOR)?;
    let txt = fact_of(&a, "txt");
    let ifds = diagnostics(&a, false);
    ensure(lines_for(&ifds, "txt") == vec![12], format!("IFDS txt lines {:?}", lines_for(&ifds, "txt")))?;
    let filtered = diagnostics(&a, true);
    ensure(filtered.is_empty(), format!("{} filtered diagnostics", filtered.len()))?;
    let open = a.ide.value(start_of(&a, "hdlOpen"), txt).cloned();
    let expect_open = states(&a, &[("hdlOpen", HState::E), ("hdlClose", HState::S)]);
    ensure(open.as_ref() == Some(&expect_open), format!("txt entering hdlOpen: {open:?}"))?;
    let close_start = start_of(&a, "hdlClose");
    let close = a.ide.value(close_start, txt).cloned();
    let expect_close = states(&a, &[("hdlOpen", HState::E), ("hdlClose", HState::X)]);
    ensure(close.as_ref() == Some(&expect_close), format!("txt entering hdlClose: {close:?}"))?;
    let path = a.graph.shortest_path(a.graph.entry(), close_start).ok_or("no path to hdlClose")?;
    let along = compose_path(&a.graph, &path).apply(&HStateMap::all_start());
    ensure(along == expect_close, format!("shortest path gives {along:?}"))?;
    timed(Duration::from_secs(1), start)?;
    Ok(format!(
        "txt reported at line 12 by IFDS only; {} / {}",
        expect_open.render(a.graph.handlers()),
        expect_close.render(a.graph.handlers())
    ))
}

fn dirstat() -> Check {
    let start = Instant::now();
    let a = analyze(&corpus::DIRSTAT)?;
    let sum = fact_of(&a, "sum");
    ensure(lines_for(&diagnostics(&a, false), "sum").contains(&20), "IFDS misses sum at line 20")?;
    ensure(lines_for(&diagnostics(&a, true), "sum").is_empty(), "filtered analysis reports sum")?;
    let n = read_node(&a, 20);
    let feasible = a.ide.value(n, 0).cloned();
    let expect = states(&a, &[("f", HState::E), ("h", HState::E)]);
    ensure(feasible.as_ref() == Some(&expect), format!("state at sum = sum + sz: {feasible:?}"))?;
    let infeasible = a.filtered.provenance.get(&(n, sum));
    let expect_x = states(&a, &[("f", HState::E), ("h", HState::X)]);
    ensure(infeasible == Some(&expect_x), format!("sum provenance {infeasible:?}"))?;
    timed(Duration::from_secs(1), start)?;
    Ok(format!("feasible {}", expect.render(a.graph.handlers())))
}

fn timer_and_server() -> Check {
    let start = Instant::now();
    let mut notes = Vec::new();
    for (c, var, line, good, bad) in [
        (&corpus::TIMER, "rem", 10, "start", "tick"),
        (&corpus::SERVER, "nConn", 11, "lstn", "conn"),
    ] {
        let a = analyze(c)?;
        let d = fact_of(&a, var);
        let n = read_node(&a, line);
        ensure(a.ifds.holds(n, d), format!("{}: IFDS misses {var}", c.name))?;
        ensure(!a.filtered.holds(n, d), format!("{}: {var} not filtered", c.name))?;
        ensure(lines_for(&diagnostics(&a, true), var).is_empty(), format!("{}: filtered report", c.name))?;
        let expect = states(&a, &[(good, HState::E), (bad, HState::X)]);
        let got = a.filtered.provenance.get(&(n, d));
        ensure(got == Some(&expect), format!("{}: provenance {got:?}", c.name))?;
        notes.push(format!("{var} {}", expect.render(a.graph.handlers())));
    }
    timed(Duration::from_secs(1), start)?;
    Ok(notes.join("; "))
}

fn micro_functions() -> Check {
    let start = Instant::now();
    use HState::*;
    ensure(MicroFn::REGISTER.table() == [X, R, R, E], "register")?;
    ensure(MicroFn::EMIT.table() == [X, S, E, E], "emit")?;
    ensure(MicroFn::INVOKE.table() == [X, X, X, E], "invoke")?;
    ensure(MicroFn::ID.table() == [X, S, R, E], "identity")?;
    let all: BTreeSet<MicroFn> = MicroFn::all().collect();
    ensure(all.len() == 256, "256 functions")?;
    verify_tables()?;
    // Closure of the generators under composition and meet.
    let mut closed: BTreeSet<MicroFn> = [MicroFn::ID, MicroFn::REGISTER, MicroFn::EMIT, MicroFn::INVOKE].into();
    loop {
        let before = closed.len();
        let cur: Vec<MicroFn> = closed.iter().copied().collect();
        for &f in &cur {
            for &g in &cur {
                closed.insert(f.compose(g));
                closed.insert(f.meet(g));
            }
        }
        if closed.len() == before {
            break;
        }
    }
    for f in &closed {
        ensure(f.is_monotone(), format!("{f} not monotone"))?;
        for a in HState::ALL {
            for b in HState::ALL {
                ensure(f.apply(a.meet(b)) == f.apply(a).meet(f.apply(b)), format!("{f} not distributive"))?;
            }
        }
    }
    timed(Duration::from_secs(1), start)?;
    Ok(format!("table verified; {} generated functions, all distributive", closed.len()))
}

fn suite_programs() -> Result<Vec<(String, Program, EventModel)>, String> {
    let mut out = Vec::new();
    for c in corpus::CASE_STUDIES {
        out.push((c.name.to_string(), c.program().map_err(|e| e.to_string())?, c.event_model().map_err(|e| e.to_string())?));
    }
    for seed in 0..100 {
        out.push((format!("gen_{seed}"), generate(seed, &GenConfig::default()), EventModel::builtin()));
    }
    Ok(out)
}

fn precision() -> Check {
    let mut nodes = 0;
    for (name, p, m) in suite_programs()? {
        let a = analyze_uninit(&p, &m).map_err(|e| e.to_string())?;
        let v = check_precision(&a);
        if let Some(x) = v.first() {
            return Err(format!("{name}: {x}"));
        }
        nodes += a.graph.node_count();
    }
    Ok(format!("104 programs, {nodes} nodes, 0 violations"))
}

fn soundness() -> Check {
    let start = Instant::now();
    let (mut traces, mut reads) = (0, 0);
    for (name, p, m) in suite_programs()? {
        let a = analyze_uninit(&p, &m).map_err(|e| e.to_string())?;
        let (o, v) = check_soundness(&a, 6, 5_000);
        if let Some(x) = v.first() {
            return Err(format!("{name}: {x}"));
        }
        traces += o.traces;
        reads += o.uninit_reads;
    }
    timed(Duration::from_secs(30), start)?;
    Ok(format!("{traces} traces, {reads} uninitialized reads, 0 violations"))
}

fn equivalence() -> Check {
    let mut compared = 0;
    for seed in 0..50 {
        let p = generate(seed, &GenConfig::small());
        let a = analyze_uninit(&p, &EventModel::builtin()).map_err(|e| e.to_string())?;
        let (o, v) = check_equivalence(&a, 40, 100_000).map_err(|e| format!("seed {seed}: {e}"))?;
        if let Some(x) = v.first() {
            return Err(format!("seed {seed}: {x}"));
        }
        ensure(o.beyond_bound == 0, format!("seed {seed}: {} nodes beyond the path bound", o.beyond_bound))?;
        compared += o.compared;
    }
    Ok(format!("50 programs, {compared} nodes compared, 0 mismatches"))
}

fn overhead() -> Check {
    let mut max_seen = 0;
    for (name, p, m) in suite_programs()? {
        let a = analyze_uninit(&p, &m).map_err(|e| e.to_string())?;
        let h = a.graph.handlers().len();
        let ops = a.stats.ide.ops;
        ensure(ops.max_touched <= h, format!("{name}: touched {} > |H| = {h}", ops.max_touched))?;
        ensure(ops.total_touched <= (ops.compositions + ops.meets) * h.max(1), format!("{name}: total work"))?;
        for f in a.ide.jump_functions().values() {
            ensure(f.entries().len() <= h, format!("{name}: jump function wider than |H|"))?;
            let ids: Vec<HandlerId> = f.entries().iter().map(|e| e.0).collect();
            ensure(ids.iter().all(|i| i.index() < h), format!("{name}: unknown handler"))?;
        }
        max_seen = max_seen.max(ops.max_touched);
    }
    Ok(format!("max handlers touched per operation: {max_seen} (≤ |H| ≤ 3)"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("door case", door),
        ("dirstat case", dirstat),
        ("timer and server cases", timer_and_server),
        ("micro-function algebra", micro_functions),
        ("precision", precision),
        ("soundness", soundness),
        ("oracle equivalence", equivalence),
        ("handler overhead bound", overhead),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match check() {
            Ok(detail) => println!("criterion {} ({name}): PASS in {:.0?}: {detail}", i + 1, start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
