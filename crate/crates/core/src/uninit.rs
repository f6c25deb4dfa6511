//! Possibly-uninitialized variables as an IFDS problem.
//!
//! Fact `i + 1` is the `i`-th variable of [`Program::all_vars`]. A fact
//! holding at a node means the variable may be uninitialized there.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ifds::{Fact, IfdsProblem, RepRelation, ZERO};
use crate::lang::{Expr, FuncId, Program, Stmt, StmtId, StmtKind, VarRef};
use crate::supergraph::{EdgeId, EdgeKind, NodeId, NodeKind, Proc, Supergraph};

pub struct UninitProblem<'p> {
    p: &'p Program,
    vars: Vec<VarRef>,
    index: BTreeMap<VarRef, Fact>,
    stmts: BTreeMap<StmtId, &'p Stmt>,
}

impl<'p> UninitProblem<'p> {
    pub fn new(p: &'p Program) -> Self {
        let vars = p.all_vars();
        let index = vars.iter().enumerate().map(|(i, &v)| (v, i as Fact + 1)).collect();
        let stmts = p.statements().into_iter().map(|(_, s)| (s.id, s)).collect();
        UninitProblem { p, vars, index, stmts }
    }

    pub fn fact(&self, v: VarRef) -> Fact {
        self.index[&v]
    }

    pub fn var(&self, d: Fact) -> Option<VarRef> {
        (d != ZERO).then(|| self.vars[d as usize - 1])
    }

    fn globals(&self) -> impl Iterator<Item = Fact> + '_ {
        1..=self.p.globals.len() as Fact
    }

    fn locals(&self, f: FuncId) -> impl Iterator<Item = (usize, Fact)> + '_ {
        let n = self.p.function(f).locals.len();
        (0..n).map(move |i| (i, self.fact(VarRef::Local(f, i as u32))))
    }

    fn keep(&self, facts: impl Iterator<Item = Fact>) -> Vec<(Fact, Fact)> {
        facts.map(|d| (d, d)).collect()
    }

    /// Effect of the statement executed at the source of an intraprocedural
    /// edge.
    pub fn stmt_flow(&self, s: &Stmt) -> RepRelation {
        let n = self.vars.len();
        let (target, value) = match &s.kind {
            StmtKind::VarDecl { var: Some(v), init, .. } => (self.fact(*v), init.as_ref()),
            StmtKind::Assign { var: Some(v), value, .. } => (self.fact(*v), Some(value)),
            _ => return RepRelation::identity(n),
        };
        let mut pairs: Vec<(Fact, Fact)> = (1..=n as Fact).filter(|&d| d != target).map(|d| (d, d)).collect();
        match value {
            None => pairs.push((ZERO, target)),
            Some(e) => pairs.extend(e.reads().into_iter().map(|v| (self.fact(v), target))),
        }
        RepRelation::from_pairs(pairs)
    }

    fn start_flow(&self, f: FuncId) -> RepRelation {
        let n = self.vars.len();
        let mut pairs: Vec<(Fact, Fact)> = self.keep(1..=n as Fact);
        if f == FuncId::TOP {
            pairs.extend(self.globals().map(|d| (ZERO, d)));
        }
        let params = self.p.function(f).params.len();
        pairs.extend(self.locals(f).filter(|&(i, _)| i >= params).map(|(_, d)| (ZERO, d)));
        RepRelation::from_pairs(pairs)
    }

    fn call_flow(&self, callee: FuncId, args: &[Expr]) -> RepRelation {
        let mut pairs = self.keep(self.globals());
        for (i, a) in args.iter().enumerate() {
            let param = self.fact(VarRef::Local(callee, i as u32));
            pairs.extend(a.reads().into_iter().map(|v| (self.fact(v), param)));
        }
        RepRelation::from_pairs(pairs)
    }
}

impl IfdsProblem for UninitProblem<'_> {
    fn num_facts(&self) -> usize {
        self.vars.len()
    }

    fn flow(&self, g: &Supergraph, e: EdgeId) -> RepRelation {
        let edge = g.edge(e);
        match edge.kind {
            EdgeKind::Intraproc => match g.kind(edge.from) {
                NodeKind::Start(f) => self.start_flow(f),
                NodeKind::Stmt(_, s) => self.stmt_flow(self.stmts[&s]),
                _ => RepRelation::identity(self.vars.len()),
            },
            EdgeKind::Call => match (g.kind(edge.from), g.kind(edge.to)) {
                (NodeKind::CallSite(_, s), NodeKind::Start(callee)) => match &self.stmts[&s].kind {
                    StmtKind::Call { args, .. } => self.call_flow(callee, args),
                    _ => self.call_flow(callee, &[]),
                },
                _ => RepRelation::from_pairs(self.keep(self.globals())),
            },
            EdgeKind::Dispatch(h) => {
                let f = g.handler_func(h);
                let mut pairs = self.keep(self.globals());
                let params = self.p.function(f).params.len();
                pairs.extend(self.locals(f).filter(|&(i, _)| i < params).map(|(_, d)| (ZERO, d)));
                RepRelation::from_pairs(pairs)
            }
            EdgeKind::Return | EdgeKind::ToEventLoop => RepRelation::from_pairs(self.keep(self.globals())),
            EdgeKind::CallToReturn => match g.kind(edge.from).proc() {
                Proc::Func(f) => RepRelation::from_pairs(self.locals(f).map(|(_, d)| (d, d))),
                Proc::EventLoop => RepRelation::kill_all(),
            },
        }
    }

    fn fact_name(&self, d: Fact) -> String {
        match self.var(d) {
            None => "0".to_string(),
            Some(v) => self.p.var_name(v),
        }
    }
}

/// A read of a variable that may be uninitialized.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: u32,
    /// Source-level name.
    pub var: String,
    #[serde(skip)]
    pub stmt: StmtId,
    #[serde(skip)]
    pub node: NodeId,
    #[serde(skip)]
    pub fact: Fact,
}

impl Diagnostic {
    pub fn message(&self) -> String {
        format!("{}:{}: variable '{}' may be uninitialized", self.file, self.line, self.var)
    }
}

fn bare_name(p: &Program, v: VarRef) -> String {
    match v {
        VarRef::Global(i) => p.globals[i as usize].clone(),
        VarRef::Local(f, i) => p.function(f).locals[i as usize].clone(),
    }
}

/// One diagnostic per (statement, variable it reads) whose fact holds at the
/// statement's node, in statement order.
pub fn report_uses(
    p: &Program,
    g: &Supergraph,
    problem: &UninitProblem<'_>,
    holds: impl Fn(NodeId, Fact) -> bool,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (_, s) in p.statements() {
        let Some(n) = g.stmt_node(s.id) else {
            continue;
        };
        for v in s.kind.reads() {
            let d = problem.fact(v);
            if holds(n, d) {
                out.push(Diagnostic {
                    file: p.file_name(s.span).to_string(),
                    line: s.span.line,
                    var: bare_name(p, v),
                    stmt: s.id,
                    node: n,
                    fact: d,
                });
            }
        }
    }
    out
}
