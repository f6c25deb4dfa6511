//! IDE: environment transformers over the exploded supergraph, solved in two
//! phases. Phase 1 tabulates jump functions from procedure starts; phase 2
//! pushes values from the entry through call edges and then evaluates the
//! jump functions at every node.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::{Debug, Write};
use std::hash::Hash;

use serde::Serialize;

use crate::event_lattice::{HStateMap, HandlerMicroFn, OpCounter, OpStats};
use crate::ifds::{BruteForceError, ExplodedSupergraph, Fact, PathEdge, ZERO};
use crate::supergraph::{EdgeId, EdgeKind, NodeId};

/// The value lattice and its function space.
pub trait IdeDomain {
    type Value: Clone + Eq + Ord + Hash + Debug;
    type Fn: Clone + Eq + Debug;

    fn identity(&self) -> Self::Fn;
    /// `g ∘ f`.
    fn compose(&self, g: &Self::Fn, f: &Self::Fn) -> Self::Fn;
    fn meet_fn(&self, a: &Self::Fn, b: &Self::Fn) -> Self::Fn;
    fn apply(&self, f: &Self::Fn, v: &Self::Value) -> Self::Value;
    fn meet_value(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;

    fn op_stats(&self) -> OpStats {
        OpStats::default()
    }
}

/// Values are handler-state maps; functions are separable handler
/// transformers. Counts every composition and meet it performs.
#[derive(Debug, Default)]
pub struct EventDomain {
    counter: OpCounter,
}

impl EventDomain {
    pub fn new() -> EventDomain {
        EventDomain::default()
    }

    pub fn reset_stats(&self) {
        self.counter.reset();
    }
}

impl IdeDomain for EventDomain {
    type Value = HStateMap;
    type Fn = HandlerMicroFn;

    fn identity(&self) -> HandlerMicroFn {
        HandlerMicroFn::identity()
    }

    fn compose(&self, g: &HandlerMicroFn, f: &HandlerMicroFn) -> HandlerMicroFn {
        let (out, touched) = g.compose_counted(f);
        self.counter.record(true, touched);
        out
    }

    fn meet_fn(&self, a: &HandlerMicroFn, b: &HandlerMicroFn) -> HandlerMicroFn {
        let (out, touched) = a.meet_counted(b);
        self.counter.record(false, touched);
        out
    }

    fn apply(&self, f: &HandlerMicroFn, v: &HStateMap) -> HStateMap {
        f.apply(v)
    }

    fn meet_value(&self, a: &HStateMap, b: &HStateMap) -> HStateMap {
        a.meet(b)
    }

    fn op_stats(&self) -> OpStats {
        self.counter.get()
    }
}

/// An exploded supergraph whose exploded edges carry micro-function labels.
/// All exploded edges over one supergraph edge share its label.
#[derive(Debug, Clone)]
pub struct LabeledExplodedSupergraph<'g, F> {
    exploded: ExplodedSupergraph<'g>,
    labels: Vec<F>,
}

impl<'g, F> LabeledExplodedSupergraph<'g, F> {
    pub fn new(exploded: ExplodedSupergraph<'g>, labels: Vec<F>) -> Self {
        assert_eq!(labels.len(), exploded.graph().edge_count(), "one label per supergraph edge");
        LabeledExplodedSupergraph { exploded, labels }
    }

    pub fn exploded(&self) -> &ExplodedSupergraph<'g> {
        &self.exploded
    }

    pub fn label(&self, e: EdgeId) -> &F {
        &self.labels[e.index()]
    }

    pub fn labels(&self) -> &[F] {
        &self.labels
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IdeStats {
    pub jump_functions: usize,
    pub summary_functions: usize,
    pub phase1_steps: usize,
    pub phase2_steps: usize,
    /// Times an existing jump function was lowered by a meet.
    pub jump_updates: usize,
    pub ops: OpStats,
}

#[derive(Debug, Clone)]
pub struct IdeResult<D: IdeDomain> {
    /// `None` for nodes no valid path reaches.
    values: Vec<Option<BTreeMap<Fact, D::Value>>>,
    jumps: BTreeMap<PathEdge, D::Fn>,
    pub stats: IdeStats,
}

impl<D: IdeDomain> IdeResult<D> {
    pub fn is_reachable(&self, n: NodeId) -> bool {
        self.values[n.index()].is_some()
    }

    /// The environment at `n`; facts without an entry are absent (⊤).
    pub fn env(&self, n: NodeId) -> Option<&BTreeMap<Fact, D::Value>> {
        self.values[n.index()].as_ref()
    }

    pub fn value(&self, n: NodeId, d: Fact) -> Option<&D::Value> {
        self.env(n).and_then(|m| m.get(&d))
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    pub fn jump_functions(&self) -> &BTreeMap<PathEdge, D::Fn> {
        &self.jumps
    }

    /// One line per jump function, `d1 n<id> d2 <fn>`, sorted.
    pub fn dump_jumps(&self) -> String {
        let mut out = String::new();
        for ((d1, n, d2), f) in &self.jumps {
            let _ = writeln!(out, "{d1} n{} {d2} {f:?}", n.0);
        }
        out
    }
}

struct Phase1<'a, 'g, D: IdeDomain> {
    dom: &'a D,
    g: &'a LabeledExplodedSupergraph<'g, D::Fn>,
    jumps: BTreeMap<PathEdge, D::Fn>,
    by_target: BTreeMap<(NodeId, Fact), BTreeSet<Fact>>,
    worklist: VecDeque<PathEdge>,
    queued: BTreeSet<PathEdge>,
    incoming: BTreeMap<(NodeId, Fact), BTreeSet<(usize, Fact)>>,
    /// `(start, d1)` → exit fact → jump function to the exit.
    end_summary: BTreeMap<(NodeId, Fact), BTreeMap<Fact, D::Fn>>,
    /// `(link, caller fact)` → return-site fact → summary function.
    summary: BTreeMap<(usize, Fact), BTreeMap<Fact, D::Fn>>,
    stats: IdeStats,
}

/// Meets `f` into `slot`; true when the stored function changed.
fn meet_into<D: IdeDomain>(dom: &D, slot: &mut BTreeMap<Fact, D::Fn>, k: Fact, f: D::Fn) -> bool {
    match slot.get(&k) {
        None => {
            slot.insert(k, f);
            true
        }
        Some(old) => {
            let m = dom.meet_fn(old, &f);
            if &m == old {
                false
            } else {
                slot.insert(k, m);
                true
            }
        }
    }
}

impl<'a, 'g, D: IdeDomain> Phase1<'a, 'g, D> {
    fn new(dom: &'a D, g: &'a LabeledExplodedSupergraph<'g, D::Fn>) -> Self {
        Phase1 {
            dom,
            g,
            jumps: BTreeMap::new(),
            by_target: BTreeMap::new(),
            worklist: VecDeque::new(),
            queued: BTreeSet::new(),
            incoming: BTreeMap::new(),
            end_summary: BTreeMap::new(),
            summary: BTreeMap::new(),
            stats: IdeStats::default(),
        }
    }

    fn propagate(&mut self, e: PathEdge, f: D::Fn) {
        let changed = match self.jumps.get(&e) {
            None => {
                self.by_target.entry((e.1, e.2)).or_default().insert(e.0);
                self.jumps.insert(e, f);
                true
            }
            Some(old) => {
                let m = self.dom.meet_fn(old, &f);
                if &m == old {
                    false
                } else {
                    self.stats.jump_updates += 1;
                    self.jumps.insert(e, m);
                    true
                }
            }
        };
        if changed && self.queued.insert(e) {
            self.worklist.push_back(e);
        }
    }

    fn run(&mut self) {
        let sg = self.g.exploded().graph();
        while let Some(pe) = self.worklist.pop_front() {
            self.queued.remove(&pe);
            self.stats.phase1_steps += 1;
            let (d1, n, d2) = pe;
            let f = self.jumps[&pe].clone();
            for &e in sg.succ(n) {
                let edge = sg.edge(e);
                let targets: Vec<Fact> = self.g.exploded().flow(e).targets(d2).collect();
                match edge.kind {
                    EdgeKind::Intraproc | EdgeKind::CallToReturn => {
                        let h = self.dom.compose(self.g.label(e), &f);
                        for d3 in targets {
                            self.propagate((d1, edge.to, d3), h.clone());
                        }
                    }
                    EdgeKind::Call | EdgeKind::Dispatch(_) => {
                        let li = sg.link_index(e).expect("call edges belong to a link");
                        let start = sg.links()[li].callee_start;
                        for d3 in targets {
                            self.propagate((d3, start, d3), self.dom.identity());
                            if self.incoming.entry((start, d3)).or_default().insert((li, d2)) {
                                let exits: Vec<(Fact, D::Fn)> = self
                                    .end_summary
                                    .get(&(start, d3))
                                    .map(|m| m.iter().map(|(k, v)| (*k, v.clone())).collect())
                                    .unwrap_or_default();
                                for (d4, ef) in exits {
                                    self.apply_return(li, d2, d4, &ef);
                                }
                            }
                        }
                        let ret = sg.links()[li].return_site;
                        let known: Vec<(Fact, D::Fn)> = self
                            .summary
                            .get(&(li, d2))
                            .map(|m| m.iter().map(|(k, v)| (*k, v.clone())).collect())
                            .unwrap_or_default();
                        for (d5, sf) in known {
                            let h = self.dom.compose(&sf, &f);
                            self.propagate((d1, ret, d5), h);
                        }
                    }
                    EdgeKind::ToEventLoop => {
                        for d3 in targets {
                            self.propagate((d3, edge.to, d3), self.dom.identity());
                        }
                    }
                    EdgeKind::Return => {}
                }
            }
            if sg.is_proc_exit(n) {
                let start = sg.proc_start(sg.kind(n).proc());
                let slot = self.end_summary.entry((start, d1)).or_default();
                if meet_into(self.dom, slot, d2, f) {
                    let ef = slot[&d2].clone();
                    let callers: Vec<(usize, Fact)> = self
                        .incoming
                        .get(&(start, d1))
                        .map(|s| s.iter().copied().collect())
                        .unwrap_or_default();
                    for (li, d_call) in callers {
                        self.apply_return(li, d_call, d2, &ef);
                    }
                }
            }
        }
    }

    /// Extends the summary of link `li` for caller fact `d_call` by a callee
    /// exit fact `d_exit` reached with jump function `exit_fn`.
    fn apply_return(&mut self, li: usize, d_call: Fact, d_exit: Fact, exit_fn: &D::Fn) {
        let link = self.g.exploded().graph().links()[li];
        let through = self
            .dom
            .compose(self.g.label(link.return_edge), &self.dom.compose(exit_fn, self.g.label(link.call_edge)));
        let rets: Vec<Fact> = self.g.exploded().flow(link.return_edge).targets(d_exit).collect();
        for d5 in rets {
            let slot = self.summary.entry((li, d_call)).or_default();
            if meet_into(self.dom, slot, d5, through.clone()) {
                let sf = slot[&d5].clone();
                let callers: Vec<Fact> = self
                    .by_target
                    .get(&(link.call_site, d_call))
                    .map(|s| s.iter().copied().collect())
                    .unwrap_or_default();
                for d0 in callers {
                    let jf = self.jumps[&(d0, link.call_site, d_call)].clone();
                    let h = self.dom.compose(&sf, &jf);
                    self.propagate((d0, link.return_site, d5), h);
                }
            }
        }
    }
}

fn meet_value_into<D: IdeDomain>(
    dom: &D,
    slot: &mut BTreeMap<(NodeId, Fact), D::Value>,
    k: (NodeId, Fact),
    v: D::Value,
) -> bool {
    match slot.get(&k) {
        None => {
            slot.insert(k, v);
            true
        }
        Some(old) => {
            let m = dom.meet_value(old, &v);
            if &m == old {
                false
            } else {
                slot.insert(k, m);
                true
            }
        }
    }
}

/// Solves from `(entry, 0)` with `init` as the value of the tautological
/// fact at the entry.
pub fn solve_ide<D: IdeDomain>(
    dom: &D,
    g: &LabeledExplodedSupergraph<'_, D::Fn>,
    entry: NodeId,
    init: D::Value,
) -> IdeResult<D> {
    let mut p1 = Phase1::new(dom, g);
    p1.propagate((ZERO, entry, ZERO), dom.identity());
    p1.run();
    finish(dom, g, entry, init, p1)
}

/// Re-runs phase 1 seeded with every jump function of `previous`; at a
/// fixpoint the table is unchanged.
pub fn resume_ide<D: IdeDomain>(
    dom: &D,
    g: &LabeledExplodedSupergraph<'_, D::Fn>,
    entry: NodeId,
    init: D::Value,
    previous: &IdeResult<D>,
) -> IdeResult<D> {
    let mut p1 = Phase1::new(dom, g);
    for (&e, f) in &previous.jumps {
        p1.propagate(e, f.clone());
    }
    p1.run();
    finish(dom, g, entry, init, p1)
}

fn finish<D: IdeDomain>(
    dom: &D,
    g: &LabeledExplodedSupergraph<'_, D::Fn>,
    entry: NodeId,
    init: D::Value,
    p1: Phase1<'_, '_, D>,
) -> IdeResult<D> {
    let sg = g.exploded().graph();
    let mut stats = p1.stats;
    stats.jump_functions = p1.jumps.len();
    stats.summary_functions = p1.summary.values().map(BTreeMap::len).sum();

    // Jump functions grouped by their source `(start, d1)`.
    let mut by_source: BTreeMap<(NodeId, Fact), Vec<(NodeId, Fact)>> = BTreeMap::new();
    for &(d1, n, d2) in p1.jumps.keys() {
        let start = sg.proc_start(sg.kind(n).proc());
        by_source.entry((start, d1)).or_default().push((n, d2));
    }

    // Phase 2(i): values at procedure starts.
    let mut start_vals: BTreeMap<(NodeId, Fact), D::Value> = BTreeMap::new();
    let mut work: VecDeque<(NodeId, Fact)> = VecDeque::new();
    let mut queued: BTreeSet<(NodeId, Fact)> = BTreeSet::new();
    if p1.jumps.contains_key(&(ZERO, entry, ZERO)) {
        start_vals.insert((entry, ZERO), init);
        work.push_back((entry, ZERO));
        queued.insert((entry, ZERO));
    }
    while let Some((sp, d1)) = work.pop_front() {
        queued.remove(&(sp, d1));
        stats.phase2_steps += 1;
        let v = start_vals[&(sp, d1)].clone();
        for &(n, d2) in by_source.get(&(sp, d1)).map(Vec::as_slice).unwrap_or(&[]) {
            let mut at_n: Option<D::Value> = None;
            for &e in sg.succ(n) {
                let edge = sg.edge(e);
                if !(edge.kind.is_call() || edge.kind == EdgeKind::ToEventLoop) {
                    continue;
                }
                let vn = at_n.get_or_insert_with(|| dom.apply(&p1.jumps[&(d1, n, d2)], &v)).clone();
                let out = dom.apply(g.label(e), &vn);
                for d3 in g.exploded().flow(e).targets(d2) {
                    if meet_value_into(dom, &mut start_vals, (edge.to, d3), out.clone()) && queued.insert((edge.to, d3)) {
                        work.push_back((edge.to, d3));
                    }
                }
            }
        }
    }

    // Phase 2(ii): values everywhere.
    let mut values: Vec<Option<BTreeMap<Fact, D::Value>>> = vec![None; sg.node_count()];
    for (&(d1, n, d2), f) in &p1.jumps {
        let env = values[n.index()].get_or_insert_with(BTreeMap::new);
        let start = sg.proc_start(sg.kind(n).proc());
        let Some(sv) = start_vals.get(&(start, d1)) else {
            continue;
        };
        let v = dom.apply(f, sv);
        let merged = match env.get(&d2) {
            Some(old) => dom.meet_value(old, &v),
            None => v,
        };
        env.insert(d2, merged);
    }
    stats.ops = dom.op_stats();
    IdeResult {
        values,
        jumps: p1.jumps,
        stats,
    }
}

/// Per node, the meet over every valid path of at most `max_len` edges of
/// the path's environment transformer applied to `{0 ↦ init}`.
pub fn mvp_ide_bruteforce<D: IdeDomain>(
    dom: &D,
    g: &LabeledExplodedSupergraph<'_, D::Fn>,
    entry: NodeId,
    init: D::Value,
    max_len: usize,
    budget: usize,
) -> Result<Vec<Option<Env<D::Value>>>, BruteForceError> {
    let mut e = EnvEnumerator {
        dom,
        g,
        out: vec![None; g.exploded().graph().node_count()],
        seen: HashMap::new(),
        expansions: 0,
        budget,
    };
    e.visit(entry, &mut Vec::new(), BTreeMap::from([(ZERO, init)]), max_len)?;
    Ok(e.out)
}

pub type Env<V> = BTreeMap<Fact, V>;

/// Node, pending call links, environment.
type EnumState<V> = (NodeId, Vec<usize>, Env<V>);

struct EnvEnumerator<'a, 'g, D: IdeDomain> {
    dom: &'a D,
    g: &'a LabeledExplodedSupergraph<'g, D::Fn>,
    out: Vec<Option<Env<D::Value>>>,
    seen: HashMap<EnumState<D::Value>, usize>,
    expansions: usize,
    budget: usize,
}

impl<D: IdeDomain> EnvEnumerator<'_, '_, D> {
    fn step(&self, e: EdgeId, env: &Env<D::Value>) -> Env<D::Value> {
        let mut next: Env<D::Value> = BTreeMap::new();
        let label = self.g.label(e);
        for (&d, v) in env {
            let w = self.dom.apply(label, v);
            for d2 in self.g.exploded().flow(e).targets(d) {
                let merged = match next.get(&d2) {
                    Some(old) => self.dom.meet_value(old, &w),
                    None => w.clone(),
                };
                next.insert(d2, merged);
            }
        }
        next
    }

    fn visit(
        &mut self,
        n: NodeId,
        stack: &mut Vec<usize>,
        env: Env<D::Value>,
        remaining: usize,
    ) -> Result<(), BruteForceError> {
        let slot = self.out[n.index()].get_or_insert_with(BTreeMap::new);
        for (&d, v) in &env {
            let merged = match slot.get(&d) {
                Some(old) => self.dom.meet_value(old, v),
                None => v.clone(),
            };
            slot.insert(d, merged);
        }
        if remaining == 0 {
            return Ok(());
        }
        let key = (n, stack.clone(), env);
        if matches!(self.seen.get(&key), Some(&r) if r >= remaining) {
            return Ok(());
        }
        let env = key.2.clone();
        self.seen.insert(key, remaining);
        self.expansions += 1;
        if self.expansions > self.budget {
            return Err(BruteForceError::PathBudgetExceeded { budget: self.budget });
        }
        let sg = self.g.exploded().graph();
        for &e in sg.succ(n) {
            let edge = sg.edge(e);
            let next = self.step(e, &env);
            match edge.kind {
                EdgeKind::Intraproc | EdgeKind::CallToReturn | EdgeKind::ToEventLoop => {
                    self.visit(edge.to, stack, next, remaining - 1)?;
                }
                EdgeKind::Call | EdgeKind::Dispatch(_) => {
                    stack.push(sg.link_index(e).expect("call edges belong to a link"));
                    self.visit(edge.to, stack, next, remaining - 1)?;
                    stack.pop();
                }
                EdgeKind::Return => {
                    let li = sg.link_index(e).expect("return edges belong to a link");
                    if stack.last() == Some(&li) {
                        stack.pop();
                        self.visit(edge.to, stack, next, remaining - 1)?;
                        stack.push(li);
                    }
                }
            }
        }
        Ok(())
    }
}
