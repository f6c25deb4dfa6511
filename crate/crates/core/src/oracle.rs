//! Independent checks of the analysis against the interpreter and against
//! path enumeration.

use std::collections::BTreeMap;
use std::fmt;

use crate::event_lattice::HStateMap;
use crate::event_model::EventModel;
use crate::ide::{solve_ide, EventDomain};
use crate::ifds::{mvp_bruteforce, BruteForceError, Fact};
use crate::lang::{explore_schedules, Program, StmtId};
use crate::supergraph::NodeId;
use crate::transform::{analyze_uninit, identity_labels, Analysis, AnalysisError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A filtered fact missing from the IFDS result.
    Precision { node: NodeId, fact: String },
    /// An uninitialized read the filtered result does not predict.
    Soundness { stmt: StmtId, var: String, schedule: Vec<usize> },
    /// The interpreter invoked a handler it had not armed.
    Ordering { message: String, schedule: Vec<usize> },
    /// Path enumeration and tabulation disagree at a node.
    BruteForce { node: NodeId, ifds: Vec<Fact>, brute: Vec<Fact> },
    /// Identity-labeled IDE and IFDS disagree at a node.
    Degeneracy { node: NodeId, ifds: Vec<Fact>, ide: Vec<Fact> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Precision { node, fact } => {
                write!(f, "precision: `{fact}` filtered-in but not in IFDS result at n{}", node.0)
            }
            Violation::Soundness { stmt, var, schedule } => write!(
                f,
                "soundness: uninitialized read of `{var}` at {stmt} under schedule {schedule:?} is not reported"
            ),
            Violation::Ordering { message, schedule } => write!(f, "ordering under schedule {schedule:?}: {message}"),
            Violation::BruteForce { node, ifds, brute } => {
                write!(f, "brute force at n{}: tabulation {ifds:?}, enumeration {brute:?}", node.0)
            }
            Violation::Degeneracy { node, ifds, ide } => {
                write!(f, "identity-labeled IDE at n{}: IFDS {ifds:?}, IDE {ide:?}", node.0)
            }
        }
    }
}

/// `filtered(n) ⊆ ifds(n)` at every node.
pub fn check_precision(a: &Analysis) -> Vec<Violation> {
    let mut out = Vec::new();
    for n in a.graph.nodes() {
        for &d in a.filtered.facts_at(n) {
            if !a.ifds.holds(n, d) {
                out.push(Violation::Precision {
                    node: n,
                    fact: a.fact_name(d).to_string(),
                });
            }
        }
        if a.filtered.is_reachable(n) && !a.ifds.is_reachable(n) {
            out.push(Violation::Precision {
                node: n,
                fact: "0".to_string(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SoundnessOutcome {
    pub traces: usize,
    pub uninit_reads: usize,
    pub runtime_errors: usize,
}

/// Runs every schedule differing in the first `max_decisions` dispatch
/// choices and checks each uninitialized read against the filtered result.
/// Traces cut short by a runtime error are checked up to the error.
pub fn check_soundness(
    a: &Analysis,
    max_decisions: usize,
    step_limit: usize,
) -> (SoundnessOutcome, Vec<Violation>) {
    let by_name: BTreeMap<&str, Fact> = (1..=a.num_facts() as Fact).map(|d| (a.fact_name(d), d)).collect();
    let mut outcome = SoundnessOutcome::default();
    let mut violations = Vec::new();
    for run in explore_schedules(&a.program, max_decisions, step_limit) {
        let trace = match run {
            Ok(t) => t,
            Err(e) => {
                outcome.runtime_errors += 1;
                e.trace
            }
        };
        outcome.traces += 1;
        let schedule = trace.decisions.clone();
        for (s, var) in trace.uninit_reads() {
            outcome.uninit_reads += 1;
            let node = a.graph.stmt_node(s);
            let ok = match (node, by_name.get(var)) {
                (Some(n), Some(&d)) => a.filtered.holds(n, d),
                _ => false,
            };
            if !ok {
                violations.push(Violation::Soundness {
                    stmt: s,
                    var: var.to_string(),
                    schedule: schedule.clone(),
                });
            }
        }
        if let Err(message) = trace.check_handler_ordering() {
            violations.push(Violation::Ordering { message, schedule });
        }
    }
    (outcome, violations)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EquivalenceOutcome {
    /// Nodes reached by enumeration and compared.
    pub compared: usize,
    /// Nodes IFDS reaches only along paths longer than the bound.
    pub beyond_bound: usize,
}

/// Compares tabulation with bounded path enumeration at every node the
/// enumeration reaches, and identity-labeled IDE with IFDS at every node.
pub fn check_equivalence(
    a: &Analysis,
    max_len: usize,
    budget: usize,
) -> Result<(EquivalenceOutcome, Vec<Violation>), BruteForceError> {
    let exploded = a.exploded();
    let entry = a.graph.entry();
    let brute = mvp_bruteforce(&exploded, entry, max_len, budget)?;
    let mut outcome = EquivalenceOutcome::default();
    let mut violations = Vec::new();
    for n in a.graph.nodes() {
        match &brute[n.index()] {
            Some(b) => {
                outcome.compared += 1;
                let t = a.ifds.facts_at(n);
                if !a.ifds.is_reachable(n) || t != b {
                    violations.push(Violation::BruteForce {
                        node: n,
                        ifds: t.iter().copied().collect(),
                        brute: b.iter().copied().collect(),
                    });
                }
            }
            None if a.ifds.is_reachable(n) => outcome.beyond_bound += 1,
            None => {}
        }
    }
    let dom = EventDomain::new();
    let labeled = identity_labels(exploded);
    let ide = solve_ide(&dom, &labeled, entry, HStateMap::all_start());
    for n in a.graph.nodes() {
        let ide_facts: Vec<Fact> = ide
            .env(n)
            .map(|env| env.keys().copied().filter(|&d| d != 0).collect())
            .unwrap_or_default();
        let ifds_facts: Vec<Fact> = a.ifds.facts_at(n).iter().copied().collect();
        if ide.is_reachable(n) != a.ifds.is_reachable(n) || ide_facts != ifds_facts {
            violations.push(Violation::Degeneracy {
                node: n,
                ifds: ifds_facts,
                ide: ide_facts,
            });
        }
    }
    Ok((outcome, violations))
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub max_decisions: usize,
    pub step_limit: usize,
    pub random_programs: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            max_decisions: 6,
            step_limit: 5_000,
            random_programs: 100,
            seed: 0,
        }
    }
}

/// One program's outcome in the suite.
#[derive(Debug, Clone)]
pub struct ProgramOutcome {
    pub name: String,
    pub source: String,
    pub traces: usize,
    pub violations: Vec<Violation>,
}

/// Precision and soundness checks on one program.
pub fn check_program(
    name: &str,
    source: &str,
    p: &Program,
    model: &EventModel,
    cfg: &SuiteConfig,
) -> Result<ProgramOutcome, AnalysisError> {
    let a = analyze_uninit(p, model)?;
    let mut violations = check_precision(&a);
    let (outcome, v) = check_soundness(&a, cfg.max_decisions, cfg.step_limit);
    violations.extend(v);
    Ok(ProgramOutcome {
        name: name.to_string(),
        source: source.to_string(),
        traces: outcome.traces,
        violations,
    })
}
