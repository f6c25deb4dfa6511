//! IFDS: distributive subset problems as reachability over the exploded
//! supergraph.

mod bruteforce;
mod exploded;
mod relation;
mod solver;

pub use bruteforce::{mvp_bruteforce, BruteForceError};
pub use exploded::ExplodedSupergraph;
pub use relation::{apply_rel, compose_rel, meet_rel, rep_relation, Fact, FactSet, RepRelation, ZERO};
pub use solver::{reach_unbalanced, resume_ifds, solve_ifds, IfdsResult, PathEdge, SolverStats};

use crate::supergraph::{EdgeId, Supergraph};

/// An IFDS client: a fact universe `1..=num_facts` and a distributive flow
/// function per supergraph edge.
pub trait IfdsProblem {
    fn num_facts(&self) -> usize;
    fn flow(&self, g: &Supergraph, e: EdgeId) -> RepRelation;
    fn fact_name(&self, d: Fact) -> String;
}

/// Builds the exploded supergraph of `problem` over `g`.
pub fn explode<'g>(g: &'g Supergraph, problem: &dyn IfdsProblem) -> ExplodedSupergraph<'g> {
    let flows = g.edge_ids().map(|e| problem.flow(g, e)).collect();
    ExplodedSupergraph::new(g, problem.num_facts(), flows)
}
