//! Tabulation solver: path edges within procedures, end summaries per
//! procedure entry fact, and summary edges per call link.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use super::exploded::ExplodedSupergraph;
use super::relation::{Fact, FactSet, ZERO};
use crate::supergraph::{EdgeKind, NodeId};

/// A path edge `(d1, n, d2)`: `(n, d2)` is reachable from `(start(proc(n)), d1)`.
pub type PathEdge = (Fact, NodeId, Fact);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolverStats {
    pub path_edges: usize,
    pub summary_edges: usize,
    pub worklist_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IfdsResult {
    /// `None` for nodes no valid path reaches.
    facts: Vec<Option<FactSet>>,
    path_edges: BTreeSet<PathEdge>,
    pub stats: SolverStats,
}

impl IfdsResult {
    pub fn is_reachable(&self, n: NodeId) -> bool {
        self.facts[n.index()].is_some()
    }

    /// Facts holding at `n`, excluding the tautology; empty when unreachable.
    pub fn facts_at(&self, n: NodeId) -> &FactSet {
        static EMPTY: FactSet = FactSet::new();
        self.facts[n.index()].as_ref().unwrap_or(&EMPTY)
    }

    pub fn holds(&self, n: NodeId, d: Fact) -> bool {
        self.facts_at(n).contains(&d)
    }

    pub fn node_count(&self) -> usize {
        self.facts.len()
    }

    pub fn path_edges(&self) -> &BTreeSet<PathEdge> {
        &self.path_edges
    }

    pub fn total_facts(&self) -> usize {
        self.facts.iter().flatten().map(BTreeSet::len).sum()
    }
}

struct Tabulation<'a, 'g> {
    g: &'a ExplodedSupergraph<'g>,
    path_edges: BTreeSet<PathEdge>,
    /// `(n, d2)` → every `d1` with a path edge `(d1, n, d2)`.
    by_target: BTreeMap<(NodeId, Fact), BTreeSet<Fact>>,
    worklist: VecDeque<PathEdge>,
    /// `(callee start, entry fact)` → `(link, caller fact at the call site)`.
    incoming: BTreeMap<(NodeId, Fact), BTreeSet<(usize, Fact)>>,
    end_summary: BTreeMap<(NodeId, Fact), BTreeSet<Fact>>,
    /// `(link, caller fact at call site)` → facts at the return site.
    summary: BTreeMap<(usize, Fact), BTreeSet<Fact>>,
    stats: SolverStats,
}

impl<'a, 'g> Tabulation<'a, 'g> {
    fn new(g: &'a ExplodedSupergraph<'g>) -> Self {
        Tabulation {
            g,
            path_edges: BTreeSet::new(),
            by_target: BTreeMap::new(),
            worklist: VecDeque::new(),
            incoming: BTreeMap::new(),
            end_summary: BTreeMap::new(),
            summary: BTreeMap::new(),
            stats: SolverStats::default(),
        }
    }

    fn propagate(&mut self, e: PathEdge) {
        if self.path_edges.insert(e) {
            self.by_target.entry((e.1, e.2)).or_default().insert(e.0);
            self.worklist.push_back(e);
        }
    }

    fn run(&mut self) {
        let sg = self.g.graph();
        while let Some((d1, n, d2)) = self.worklist.pop_front() {
            self.stats.worklist_steps += 1;
            for &e in sg.succ(n) {
                let edge = sg.edge(e);
                let targets: Vec<Fact> = self.g.flow(e).targets(d2).collect();
                match edge.kind {
                    EdgeKind::Intraproc | EdgeKind::CallToReturn => {
                        for d3 in targets {
                            self.propagate((d1, edge.to, d3));
                        }
                    }
                    EdgeKind::Call | EdgeKind::Dispatch(_) => {
                        let li = sg.link_index(e).expect("call edges belong to a link");
                        let link = sg.links()[li];
                        for d3 in targets {
                            self.propagate((d3, link.callee_start, d3));
                            if self.incoming.entry((link.callee_start, d3)).or_default().insert((li, d2)) {
                                let exits: Vec<Fact> = self
                                    .end_summary
                                    .get(&(link.callee_start, d3))
                                    .map(|s| s.iter().copied().collect())
                                    .unwrap_or_default();
                                for d4 in exits {
                                    self.apply_return(li, d2, d4);
                                }
                            }
                        }
                        let known: Vec<Fact> = self
                            .summary
                            .get(&(li, d2))
                            .map(|s| s.iter().copied().collect())
                            .unwrap_or_default();
                        for d5 in known {
                            self.propagate((d1, link.return_site, d5));
                        }
                    }
                    EdgeKind::ToEventLoop => {
                        for d3 in targets {
                            self.propagate((d3, edge.to, d3));
                        }
                    }
                    EdgeKind::Return => {}
                }
            }
            if sg.is_proc_exit(n) {
                let start = sg.proc_start(sg.kind(n).proc());
                if self.end_summary.entry((start, d1)).or_default().insert(d2) {
                    let callers: Vec<(usize, Fact)> = self
                        .incoming
                        .get(&(start, d1))
                        .map(|s| s.iter().copied().collect())
                        .unwrap_or_default();
                    for (li, d4) in callers {
                        self.apply_return(li, d4, d2);
                    }
                }
            }
        }
    }

    fn apply_return(&mut self, li: usize, d_call: Fact, d_exit: Fact) {
        let link = self.g.graph().links()[li];
        let rets: Vec<Fact> = self.g.flow(link.return_edge).targets(d_exit).collect();
        for d5 in rets {
            if self.summary.entry((li, d_call)).or_default().insert(d5) {
                self.stats.summary_edges += 1;
                let callers: Vec<Fact> = self
                    .by_target
                    .get(&(link.call_site, d_call))
                    .map(|s| s.iter().copied().collect())
                    .unwrap_or_default();
                for d3 in callers {
                    self.propagate((d3, link.return_site, d5));
                }
            }
        }
    }

    fn finish(self) -> IfdsResult {
        let mut facts: Vec<Option<FactSet>> = vec![None; self.g.graph().node_count()];
        for &(_, n, d2) in &self.path_edges {
            let slot = facts[n.index()].get_or_insert_with(FactSet::new);
            if d2 != ZERO {
                slot.insert(d2);
            }
        }
        let mut stats = self.stats;
        stats.path_edges = self.path_edges.len();
        IfdsResult {
            facts,
            path_edges: self.path_edges,
            stats,
        }
    }
}

/// Meet-over-valid-paths solution (union meet) from `(entry, 0)`.
pub fn solve_ifds(g: &ExplodedSupergraph<'_>, entry: NodeId) -> IfdsResult {
    let mut t = Tabulation::new(g);
    t.propagate((ZERO, entry, ZERO));
    t.run();
    t.finish()
}

/// Re-runs the tabulation seeded with every path edge of `previous`; a
/// fixpoint yields the same path edges.
pub fn resume_ifds(g: &ExplodedSupergraph<'_>, previous: &IfdsResult) -> IfdsResult {
    let mut t = Tabulation::new(g);
    for &e in previous.path_edges() {
        t.propagate(e);
    }
    t.run();
    t.finish()
}

/// Plain reachability in the exploded graph from `(entry, 0)`, ignoring
/// call/return matching.
pub fn reach_unbalanced(g: &ExplodedSupergraph<'_>, entry: NodeId) -> Vec<Option<FactSet>> {
    let sg = g.graph();
    let mut seen: BTreeSet<(NodeId, Fact)> = BTreeSet::from([(entry, ZERO)]);
    let mut q = VecDeque::from([(entry, ZERO)]);
    while let Some((n, d)) = q.pop_front() {
        for (_, m, d2) in g.successors(n, d) {
            if seen.insert((m, d2)) {
                q.push_back((m, d2));
            }
        }
    }
    let mut out: Vec<Option<FactSet>> = vec![None; sg.node_count()];
    for (n, d) in seen {
        let slot = out[n.index()].get_or_insert_with(FactSet::new);
        if d != ZERO {
            slot.insert(d);
        }
    }
    out
}
