use std::collections::BTreeSet;
use std::fmt::Write;

use super::relation::{Fact, RepRelation};
use crate::lang::Program;
use crate::supergraph::{dot_quote, EdgeId, NodeId, Supergraph};

/// A supergraph whose every edge carries the representation relation of its
/// flow function. Exploded nodes are `(n, d)` pairs with `d ∈ 0..=num_facts`.
#[derive(Debug, Clone)]
pub struct ExplodedSupergraph<'g> {
    graph: &'g Supergraph,
    num_facts: usize,
    flows: Vec<RepRelation>,
}

impl<'g> ExplodedSupergraph<'g> {
    pub fn new(graph: &'g Supergraph, num_facts: usize, flows: Vec<RepRelation>) -> Self {
        assert_eq!(flows.len(), graph.edge_count(), "one relation per supergraph edge");
        debug_assert!(flows
            .iter()
            .flat_map(|r| r.pairs())
            .all(|&(a, b)| (a as usize) <= num_facts && (b as usize) <= num_facts));
        ExplodedSupergraph {
            graph,
            num_facts,
            flows,
        }
    }

    pub fn graph(&self) -> &'g Supergraph {
        self.graph
    }

    pub fn num_facts(&self) -> usize {
        self.num_facts
    }

    pub fn flow(&self, e: EdgeId) -> &RepRelation {
        &self.flows[e.index()]
    }

    pub fn flows(&self) -> &[RepRelation] {
        &self.flows
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count() * (self.num_facts + 1)
    }

    pub fn edge_count(&self) -> usize {
        self.flows.iter().map(RepRelation::len).sum()
    }

    /// Exploded successors of `(n, d)`.
    pub fn successors(&self, n: NodeId, d: Fact) -> Vec<(EdgeId, NodeId, Fact)> {
        let mut out = Vec::new();
        for &e in self.graph.succ(n) {
            let to = self.graph.edge(e).to;
            out.extend(self.flow(e).targets(d).map(|d2| (e, to, d2)));
        }
        out
    }

    /// Graphviz rendering with one row of fact nodes per supergraph node.
    /// Only facts touched by some edge are drawn; `fact_name(0)` should
    /// name the tautological fact.
    pub fn to_dot(&self, p: &Program, fact_name: impl Fn(Fact) -> String) -> String {
        let mut used: Vec<BTreeSet<Fact>> = vec![BTreeSet::new(); self.graph.node_count()];
        for e in self.graph.edge_ids() {
            let edge = self.graph.edge(e);
            for &(a, b) in self.flow(e).pairs() {
                used[edge.from.index()].insert(a);
                used[edge.to.index()].insert(b);
            }
        }
        let mut out = String::from("digraph exploded {\n  rankdir=TB;\n  node [shape=circle, width=0.25, fontsize=9];\n");
        for n in self.graph.nodes() {
            let _ = writeln!(out, "  subgraph row{} {{", n.0);
            out.push_str("    rank=same;\n");
            let _ = writeln!(
                out,
                "    r{} [shape=plaintext, label={}];",
                n.0,
                dot_quote(&self.graph.node_label(p, n))
            );
            for &d in &used[n.index()] {
                let _ = writeln!(out, "    n{}_{} [label={}];", n.0, d, dot_quote(&fact_name(d)));
            }
            out.push_str("  }\n");
        }
        for e in self.graph.edge_ids() {
            let edge = self.graph.edge(e);
            let style = if edge.kind.is_interprocedural() { " [style=dashed]" } else { "" };
            for &(a, b) in self.flow(e).pairs() {
                let _ = writeln!(out, "  n{}_{} -> n{}_{}{style};", edge.from.0, a, edge.to.0, b);
            }
        }
        out.push_str("}\n");
        out
    }
}
