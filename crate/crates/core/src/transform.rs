//! Lifting an IFDS problem into the event-aware IDE problem and projecting
//! the IDE result back onto fact sets.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::event_lattice::{HStateMap, HandlerMicroFn};
use crate::event_model::{EventModel, ModelError};
use crate::ide::{solve_ide, EventDomain, IdeResult, IdeStats, LabeledExplodedSupergraph};
use crate::ifds::{explode, solve_ifds, ExplodedSupergraph, Fact, FactSet, IfdsProblem, IfdsResult, RepRelation, SolverStats, ZERO};
use crate::lang::Program;
use crate::supergraph::{build_supergraph, EdgeId, GraphError, NodeId, Supergraph};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Labels every exploded edge with the transformer of its supergraph edge's
/// event operations. The exploded graph itself is unchanged.
pub fn transform(g: ExplodedSupergraph<'_>) -> LabeledExplodedSupergraph<'_, HandlerMicroFn> {
    let sg = g.graph();
    let labels = sg.edge_ids().map(|e| HandlerMicroFn::for_ops(sg.annotation(e))).collect();
    LabeledExplodedSupergraph::new(g, labels)
}

/// Labels every exploded edge with the identity.
pub fn identity_labels(g: ExplodedSupergraph<'_>) -> LabeledExplodedSupergraph<'_, HandlerMicroFn> {
    let labels = vec![HandlerMicroFn::identity(); g.graph().edge_count()];
    LabeledExplodedSupergraph::new(g, labels)
}

/// The transformer along a sequence of supergraph edges.
pub fn compose_path(g: &Supergraph, edges: &[EdgeId]) -> HandlerMicroFn {
    edges.iter().fold(HandlerMicroFn::identity(), |acc, &e| {
        HandlerMicroFn::for_ops(g.annotation(e)).compose(&acc)
    })
}

/// Fact sets after dropping every fact whose handler states contain `X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilteredResult {
    facts: Vec<Option<FactSet>>,
    /// The states of facts that were dropped.
    pub provenance: BTreeMap<(NodeId, Fact), HStateMap>,
}

impl FilteredResult {
    pub fn is_reachable(&self, n: NodeId) -> bool {
        self.facts[n.index()].is_some()
    }

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

    pub fn total_facts(&self) -> usize {
        self.facts.iter().flatten().map(FactSet::len).sum()
    }
}

pub fn untransform(r: &IdeResult<EventDomain>) -> FilteredResult {
    let mut facts = vec![None; r.node_count()];
    let mut provenance = BTreeMap::new();
    for (i, slot) in facts.iter_mut().enumerate() {
        let n = NodeId(i as u32);
        let Some(env) = r.env(n) else {
            continue;
        };
        let kept = slot.get_or_insert_with(FactSet::new);
        for (&d, v) in env {
            if d == ZERO {
                continue;
            }
            if v.is_feasible() {
                kept.insert(d);
            } else {
                provenance.insert((n, d), v.clone());
            }
        }
    }
    FilteredResult { facts, provenance }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AnalysisStats {
    pub nodes: usize,
    pub edges: usize,
    pub facts: usize,
    pub handlers: usize,
    pub exploded_nodes: usize,
    pub exploded_edges: usize,
    pub ifds: SolverStats,
    pub ide: IdeStats,
}

/// Both solutions of one client problem over one program.
pub struct Analysis {
    /// The program after event-model desugaring.
    pub program: Program,
    pub graph: Supergraph,
    flows: Vec<RepRelation>,
    fact_names: Vec<String>,
    pub ifds: IfdsResult,
    pub ide: IdeResult<EventDomain>,
    pub filtered: FilteredResult,
    pub stats: AnalysisStats,
}

impl Analysis {
    pub fn exploded(&self) -> ExplodedSupergraph<'_> {
        ExplodedSupergraph::new(&self.graph, self.fact_names.len() - 1, self.flows.clone())
    }

    pub fn fact_name(&self, d: Fact) -> &str {
        &self.fact_names[d as usize]
    }

    pub fn num_facts(&self) -> usize {
        self.fact_names.len() - 1
    }
}

/// Desugars `p` under `model`, builds the supergraph, and solves the client
/// both as plain IFDS and through the event-aware IDE lifting.
pub fn analyze_event_aware(
    p: &Program,
    model: &EventModel,
    make_client: &dyn Fn(&Program) -> Box<dyn IfdsProblem + '_>,
) -> Result<Analysis, AnalysisError> {
    let program = model.desugar(p)?;
    let graph = build_supergraph(&program)?;
    let (flows, fact_names) = {
        let client = make_client(&program);
        let names = (0..=client.num_facts() as Fact).map(|d| client.fact_name(d)).collect::<Vec<_>>();
        (explode(&graph, client.as_ref()).flows().to_vec(), names)
    };
    let exploded = ExplodedSupergraph::new(&graph, fact_names.len() - 1, flows.clone());
    let ifds = solve_ifds(&exploded, graph.entry());
    let stats_base = AnalysisStats {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        facts: fact_names.len() - 1,
        handlers: graph.handlers().len(),
        exploded_nodes: exploded.node_count(),
        exploded_edges: exploded.edge_count(),
        ifds: ifds.stats,
        ide: IdeStats::default(),
    };
    let labeled = transform(exploded);
    let dom = EventDomain::new();
    let ide = solve_ide(&dom, &labeled, graph.entry(), HStateMap::all_start());
    drop(labeled);
    let filtered = untransform(&ide);
    let stats = AnalysisStats {
        ide: ide.stats,
        ..stats_base
    };
    Ok(Analysis {
        program,
        graph,
        flows,
        fact_names,
        ifds,
        ide,
        filtered,
        stats,
    })
}

/// [`analyze_event_aware`] with the possibly-uninitialized-variables client.
pub fn analyze_uninit(p: &Program, model: &EventModel) -> Result<Analysis, AnalysisError> {
    analyze_event_aware(p, model, &uninit_client)
}

fn uninit_client(p: &Program) -> Box<dyn IfdsProblem + '_> {
    Box::new(crate::uninit::UninitProblem::new(p))
}
