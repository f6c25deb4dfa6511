//! Reference solution by explicit enumeration of valid paths.

use std::collections::HashMap;

use thiserror::Error;

use super::exploded::ExplodedSupergraph;
use super::relation::{apply_rel, FactSet};
use crate::supergraph::{EdgeKind, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BruteForceError {
    #[error("path enumeration exceeded its budget of {budget} expansions")]
    PathBudgetExceeded { budget: usize },
}

/// Per node, the union of `M(p)(∅)` over every valid path `p` from `entry`
/// with at most `max_len` edges; `None` for nodes no such path reaches.
///
/// A path is valid when each `Return` edge matches the innermost pending
/// `Call`/`Dispatch`; pending calls may remain open at the end.
pub fn mvp_bruteforce(
    g: &ExplodedSupergraph<'_>,
    entry: NodeId,
    max_len: usize,
    budget: usize,
) -> Result<Vec<Option<FactSet>>, BruteForceError> {
    let mut e = Enumerator {
        g,
        out: vec![None; g.graph().node_count()],
        // Longest remaining length with which a state was already expanded.
        seen: HashMap::new(),
        expansions: 0,
        budget,
    };
    e.visit(entry, &mut Vec::new(), FactSet::new(), max_len)?;
    Ok(e.out)
}

struct Enumerator<'a, 'g> {
    g: &'a ExplodedSupergraph<'g>,
    out: Vec<Option<FactSet>>,
    seen: HashMap<(NodeId, Vec<usize>, FactSet), usize>,
    expansions: usize,
    budget: usize,
}

impl Enumerator<'_, '_> {
    fn visit(&mut self, n: NodeId, stack: &mut Vec<usize>, facts: FactSet, remaining: usize) -> Result<(), BruteForceError> {
        let slot = self.out[n.index()].get_or_insert_with(FactSet::new);
        slot.extend(facts.iter().copied());
        if remaining == 0 {
            return Ok(());
        }
        let key = (n, stack.clone(), facts);
        match self.seen.get(&key) {
            Some(&r) if r >= remaining => return Ok(()),
            _ => {}
        }
        let facts = key.2.clone();
        self.seen.insert(key, remaining);
        self.expansions += 1;
        if self.expansions > self.budget {
            return Err(BruteForceError::PathBudgetExceeded { budget: self.budget });
        }
        let sg = self.g.graph();
        for &e in sg.succ(n) {
            let edge = sg.edge(e);
            let next = apply_rel(self.g.flow(e), &facts);
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
