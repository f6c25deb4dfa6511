//! Interprocedural supergraph with an event-loop node.
//!
//! The event loop is modelled as a pseudo-procedure whose start and exit are
//! the same node. `emit` calls into it, the end of `top-level` flows into it
//! unbalanced, and it calls every handler through a `Dispatch` edge.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::event_model::handler_registry;
use crate::lang::{stmt_header, FuncId, Program, Stmt, StmtId, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EdgeId(pub u32);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Index into [`Supergraph::handlers`], in function declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct HandlerId(pub u32);

impl HandlerId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A procedure of the supergraph: a function, or the event loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Proc {
    Func(FuncId),
    EventLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Start(FuncId),
    End(FuncId),
    Stmt(FuncId, StmtId),
    CallSite(FuncId, StmtId),
    ReturnSite(FuncId, StmtId),
    EventLoop,
}

impl NodeKind {
    pub fn proc(self) -> Proc {
        match self {
            NodeKind::Start(f)
            | NodeKind::End(f)
            | NodeKind::Stmt(f, _)
            | NodeKind::CallSite(f, _)
            | NodeKind::ReturnSite(f, _) => Proc::Func(f),
            NodeKind::EventLoop => Proc::EventLoop,
        }
    }

    pub fn stmt(self) -> Option<StmtId> {
        match self {
            NodeKind::Stmt(_, s) | NodeKind::CallSite(_, s) | NodeKind::ReturnSite(_, s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Intraproc,
    Call,
    Return,
    CallToReturn,
    ToEventLoop,
    Dispatch(HandlerId),
}

impl EdgeKind {
    pub fn is_call(self) -> bool {
        matches!(self, EdgeKind::Call | EdgeKind::Dispatch(_))
    }

    pub fn is_interprocedural(self) -> bool {
        matches!(
            self,
            EdgeKind::Call | EdgeKind::Return | EdgeKind::ToEventLoop | EdgeKind::Dispatch(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventOp {
    Register(HandlerId),
    Emit(HandlerId),
    EmitRegister(HandlerId),
    Invoke(HandlerId),
}

impl EventOp {
    pub fn handler(self) -> HandlerId {
        match self {
            EventOp::Register(h) | EventOp::Emit(h) | EventOp::EmitRegister(h) | EventOp::Invoke(h) => h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
}

/// One call relationship: a `Call`/`Dispatch` edge with its matching
/// `Return` and `CallToReturn` edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CallLink {
    pub call_site: NodeId,
    pub return_site: NodeId,
    pub callee_start: NodeId,
    pub callee_exit: NodeId,
    pub call_edge: EdgeId,
    pub return_edge: EdgeId,
    pub call_to_return: EdgeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown handler `{name}`")]
    UnknownHandler { name: String },
    #[error("unknown function `{name}` called at {site}")]
    UnknownCallee { name: String, site: StmtId },
}

#[derive(Debug, Clone)]
pub struct Supergraph {
    nodes: Vec<NodeKind>,
    edges: Vec<Edge>,
    succ: Vec<Vec<EdgeId>>,
    pred: Vec<Vec<EdgeId>>,
    /// Per edge: the events it performs. Empty means no event operation.
    annotations: Vec<Vec<EventOp>>,
    links: Vec<CallLink>,
    link_of_edge: Vec<Option<usize>>,
    starts: Vec<NodeId>,
    ends: Vec<NodeId>,
    event_loop: NodeId,
    handlers: Vec<String>,
    handler_funcs: Vec<FuncId>,
    stmt_nodes: BTreeMap<StmtId, NodeId>,
    pub warnings: Vec<String>,
}

impl Supergraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len() as u32).map(EdgeId)
    }

    pub fn kind(&self, n: NodeId) -> NodeKind {
        self.nodes[n.index()]
    }

    pub fn edge(&self, e: EdgeId) -> Edge {
        self.edges[e.index()]
    }

    pub fn succ(&self, n: NodeId) -> &[EdgeId] {
        &self.succ[n.index()]
    }

    pub fn pred(&self, n: NodeId) -> &[EdgeId] {
        &self.pred[n.index()]
    }

    pub fn annotation(&self, e: EdgeId) -> &[EventOp] {
        &self.annotations[e.index()]
    }

    pub fn links(&self) -> &[CallLink] {
        &self.links
    }

    /// The call link a `Call`, `Dispatch` or `Return` edge belongs to.
    pub fn link_of(&self, e: EdgeId) -> Option<&CallLink> {
        self.link_of_edge[e.index()].map(|i| &self.links[i])
    }

    /// Index into [`Supergraph::links`] of the link an edge belongs to.
    pub fn link_index(&self, e: EdgeId) -> Option<usize> {
        self.link_of_edge[e.index()]
    }

    pub fn start(&self, f: FuncId) -> NodeId {
        self.starts[f.index()]
    }

    pub fn end(&self, f: FuncId) -> NodeId {
        self.ends[f.index()]
    }

    pub fn entry(&self) -> NodeId {
        self.start(FuncId::TOP)
    }

    pub fn event_loop(&self) -> NodeId {
        self.event_loop
    }

    pub fn proc_start(&self, p: Proc) -> NodeId {
        match p {
            Proc::Func(f) => self.start(f),
            Proc::EventLoop => self.event_loop,
        }
    }

    pub fn proc_exit(&self, p: Proc) -> NodeId {
        match p {
            Proc::Func(f) => self.end(f),
            Proc::EventLoop => self.event_loop,
        }
    }

    pub fn is_proc_start(&self, n: NodeId) -> bool {
        matches!(self.kind(n), NodeKind::Start(_) | NodeKind::EventLoop)
    }

    pub fn is_proc_exit(&self, n: NodeId) -> bool {
        matches!(self.kind(n), NodeKind::End(_) | NodeKind::EventLoop)
    }

    /// Handler names indexed by [`HandlerId`].
    pub fn handlers(&self) -> &[String] {
        &self.handlers
    }

    pub fn handler_func(&self, h: HandlerId) -> FuncId {
        self.handler_funcs[h.index()]
    }

    pub fn handler_id(&self, name: &str) -> Option<HandlerId> {
        self.handlers
            .iter()
            .position(|h| h == name)
            .map(|i| HandlerId(i as u32))
    }

    /// The node at which a statement starts executing (where its reads happen).
    pub fn stmt_node(&self, s: StmtId) -> Option<NodeId> {
        self.stmt_nodes.get(&s).copied()
    }

    /// Shortest path (by edge count) ignoring call/return matching.
    pub fn shortest_path(&self, from: NodeId, to: NodeId) -> Option<Vec<EdgeId>> {
        let mut prev: Vec<Option<EdgeId>> = vec![None; self.nodes.len()];
        let mut seen = vec![false; self.nodes.len()];
        let mut q = VecDeque::from([from]);
        seen[from.index()] = true;
        while let Some(n) = q.pop_front() {
            if n == to {
                let mut path = Vec::new();
                let mut cur = to;
                while cur != from {
                    let e = prev[cur.index()].expect("visited nodes have a predecessor");
                    path.push(e);
                    cur = self.edge(e).from;
                }
                path.reverse();
                return Some(path);
            }
            for &e in self.succ(n) {
                let t = self.edge(e).to;
                if !seen[t.index()] {
                    seen[t.index()] = true;
                    prev[t.index()] = Some(e);
                    q.push_back(t);
                }
            }
        }
        None
    }

    pub fn node_label(&self, p: &Program, n: NodeId) -> String {
        match self.kind(n) {
            NodeKind::Start(f) => format!("start {}", p.function(f).name),
            NodeKind::End(f) => format!("end {}", p.function(f).name),
            NodeKind::EventLoop => "event loop".to_string(),
            NodeKind::Stmt(_, s) => stmt_text(p, s),
            NodeKind::CallSite(_, s) => format!("call {}", stmt_text(p, s)),
            NodeKind::ReturnSite(_, s) => format!("return from {}", stmt_text(p, s)),
        }
    }

    pub fn annotation_label(&self, e: EdgeId) -> Option<String> {
        let ops = self.annotation(e);
        if ops.is_empty() {
            return None;
        }
        let parts: Vec<String> = ops
            .iter()
            .map(|op| {
                let (name, h) = match op {
                    EventOp::Register(h) => ("register", h),
                    EventOp::Emit(h) => ("emit", h),
                    EventOp::EmitRegister(h) => ("emit∘register", h),
                    EventOp::Invoke(h) => ("invoke", h),
                };
                format!("{name}({})", self.handlers[h.index()])
            })
            .collect();
        Some(parts.join(", "))
    }

    /// Graphviz rendering: one cluster per procedure, dashed interprocedural
    /// edges, and `highlight` drawn bold.
    pub fn to_dot(&self, p: &Program, highlight: &[EdgeId]) -> String {
        let bold: BTreeSet<EdgeId> = highlight.iter().copied().collect();
        let mut out = String::from("digraph supergraph {\n  node [shape=box, fontname=\"monospace\"];\n");
        for f in p.func_ids() {
            let _ = writeln!(out, "  subgraph cluster_{} {{", f.0);
            let _ = writeln!(out, "    label={};", dot_quote(&p.function(f).name));
            for n in self.nodes() {
                if self.kind(n).proc() == Proc::Func(f) {
                    let _ = writeln!(out, "    n{} [label={}];", n.0, dot_quote(&self.node_label(p, n)));
                }
            }
            out.push_str("  }\n");
        }
        let _ = writeln!(out, "  n{} [label=\"event loop\", shape=ellipse];", self.event_loop.0);
        for e in self.edge_ids() {
            let edge = self.edge(e);
            let mut attrs = Vec::new();
            if edge.kind.is_interprocedural() {
                attrs.push("style=dashed".to_string());
            }
            if edge.kind == EdgeKind::CallToReturn {
                attrs.push("style=dotted".to_string());
            }
            if bold.contains(&e) {
                attrs.retain(|a| !a.starts_with("style="));
                attrs.push("style=bold".to_string());
                attrs.push("penwidth=2.5".to_string());
            }
            if let Some(l) = self.annotation_label(e) {
                attrs.push(format!("label={}", dot_quote(&l)));
            }
            let _ = write!(out, "  n{} -> n{}", edge.from.0, edge.to.0);
            if !attrs.is_empty() {
                let _ = write!(out, " [{}]", attrs.join(", "));
            }
            out.push_str(";\n");
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

fn stmt_text(p: &Program, s: StmtId) -> String {
    match p.statement(s) {
        Some((_, stmt)) => format!("{}: {}", stmt.span.line, stmt_header(stmt)),
        None => s.to_string(),
    }
}

pub(crate) fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

type Pending = (NodeId, Vec<EventOp>);

struct Builder<'p> {
    p: &'p Program,
    g: Supergraph,
    registry: BTreeMap<String, BTreeSet<String>>,
}

impl Builder<'_> {
    fn node(&mut self, k: NodeKind) -> NodeId {
        let id = NodeId(self.g.nodes.len() as u32);
        self.g.nodes.push(k);
        self.g.succ.push(Vec::new());
        self.g.pred.push(Vec::new());
        id
    }

    fn edge(&mut self, from: NodeId, to: NodeId, kind: EdgeKind, ann: Vec<EventOp>) -> EdgeId {
        if kind == EdgeKind::Intraproc {
            if let Some(&e) = self.g.succ[from.index()].iter().find(|&&e| {
                let x = self.g.edges[e.index()];
                x.to == to && x.kind == kind && self.g.annotations[e.index()] == ann
            }) {
                return e;
            }
        }
        let id = EdgeId(self.g.edges.len() as u32);
        self.g.edges.push(Edge { from, to, kind });
        self.g.annotations.push(ann);
        self.g.link_of_edge.push(None);
        self.g.succ[from.index()].push(id);
        self.g.pred[to.index()].push(id);
        id
    }

    fn connect(&mut self, preds: Vec<Pending>, to: NodeId) {
        for (from, ann) in preds {
            self.edge(from, to, EdgeKind::Intraproc, ann);
        }
    }

    fn link(
        &mut self,
        (call_site, return_site): (NodeId, NodeId),
        (callee_start, callee_exit): (NodeId, NodeId),
        call_kind: EdgeKind,
        ann: Vec<EventOp>,
        ctr: Option<EdgeId>,
    ) {
        let call_edge = self.edge(call_site, callee_start, call_kind, ann);
        let return_edge = self.edge(callee_exit, return_site, EdgeKind::Return, Vec::new());
        let call_to_return = ctr.unwrap_or_else(|| self.edge(call_site, return_site, EdgeKind::CallToReturn, Vec::new()));
        let idx = self.g.links.len();
        self.g.links.push(CallLink {
            call_site,
            return_site,
            callee_start,
            callee_exit,
            call_edge,
            return_edge,
            call_to_return,
        });
        self.g.link_of_edge[call_edge.index()] = Some(idx);
        self.g.link_of_edge[return_edge.index()] = Some(idx);
    }

    fn handler(&self, name: &str) -> Result<HandlerId, GraphError> {
        self.g
            .handler_id(name)
            .ok_or_else(|| GraphError::UnknownHandler { name: name.to_string() })
    }

    fn block(&mut self, f: FuncId, stmts: &[Stmt], mut preds: Vec<Pending>) -> Result<Vec<Pending>, GraphError> {
        for s in stmts {
            preds = self.stmt(f, s, preds)?;
        }
        Ok(preds)
    }

    fn stmt(&mut self, f: FuncId, s: &Stmt, preds: Vec<Pending>) -> Result<Vec<Pending>, GraphError> {
        let el = self.g.event_loop;
        match &s.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                let n = self.enter(s, NodeKind::Stmt(f, s.id), preds);
                let mut out = self.block(f, then_branch, vec![(n, Vec::new())])?;
                out.extend(self.block(f, else_branch, vec![(n, Vec::new())])?);
                Ok(out)
            }
            StmtKind::While { body, .. } => {
                let n = self.enter(s, NodeKind::Stmt(f, s.id), preds);
                let body_out = self.block(f, body, vec![(n, Vec::new())])?;
                self.connect(body_out, n);
                Ok(vec![(n, Vec::new())])
            }
            StmtKind::Call { callee, .. } => {
                let g = self.p.func_id(callee).ok_or_else(|| GraphError::UnknownCallee {
                    name: callee.clone(),
                    site: s.id,
                })?;
                let c = self.enter(s, NodeKind::CallSite(f, s.id), preds);
                let r = self.node(NodeKind::ReturnSite(f, s.id));
                let (start, end) = (self.g.starts[g.index()], self.g.ends[g.index()]);
                self.link((c, r), (start, end), EdgeKind::Call, Vec::new(), None);
                Ok(vec![(r, Vec::new())])
            }
            StmtKind::Emit { event } => {
                let n = self.enter(s, NodeKind::Stmt(f, s.id), preds);
                let mut ops = Vec::new();
                for h in self.registry.get(event).cloned().unwrap_or_default() {
                    ops.push(EventOp::Emit(self.handler(&h)?));
                }
                ops.sort();
                if ops.is_empty() {
                    let line = s.span.line;
                    self.g.warnings.push(format!(
                        "{}:{line}: no handler is ever registered for event \"{event}\"",
                        self.p.file_name(s.span)
                    ));
                }
                let c = self.node(NodeKind::CallSite(f, s.id));
                self.edge(n, c, EdgeKind::Intraproc, ops);
                let r = self.node(NodeKind::ReturnSite(f, s.id));
                self.link((c, r), (el, el), EdgeKind::Call, Vec::new(), None);
                Ok(vec![(r, Vec::new())])
            }
            StmtKind::Return => {
                let n = self.enter(s, NodeKind::Stmt(f, s.id), preds);
                let end = self.g.ends[f.index()];
                self.edge(n, end, EdgeKind::Intraproc, Vec::new());
                Ok(Vec::new())
            }
            StmtKind::Register { handler, .. } => {
                let n = self.enter(s, NodeKind::Stmt(f, s.id), preds);
                Ok(vec![(n, vec![EventOp::Register(self.handler(handler)?)])])
            }
            StmtKind::RegisterAsync { handler, .. } => {
                let n = self.enter(s, NodeKind::Stmt(f, s.id), preds);
                Ok(vec![(n, vec![EventOp::EmitRegister(self.handler(handler)?)])])
            }
            StmtKind::VarDecl { .. } | StmtKind::Assign { .. } | StmtKind::Print(_) => {
                let n = self.enter(s, NodeKind::Stmt(f, s.id), preds);
                Ok(vec![(n, Vec::new())])
            }
        }
    }

    fn enter(&mut self, s: &Stmt, kind: NodeKind, preds: Vec<Pending>) -> NodeId {
        let n = self.node(kind);
        self.g.stmt_nodes.insert(s.id, n);
        self.connect(preds, n);
        n
    }
}

/// Builds the supergraph of an already desugared program. Handlers are the
/// functions named in `register`/`register_async` statements.
pub fn build_supergraph(p: &Program) -> Result<Supergraph, GraphError> {
    let mut handler_names: BTreeSet<&str> = BTreeSet::new();
    for (_, s) in p.statements() {
        match &s.kind {
            StmtKind::Register { handler, .. } | StmtKind::RegisterAsync { handler, .. } => {
                handler_names.insert(handler);
            }
            _ => {}
        }
    }
    let mut handlers = Vec::new();
    let mut handler_funcs = Vec::new();
    for name in &handler_names {
        let f = p
            .func_id(name)
            .ok_or_else(|| GraphError::UnknownHandler { name: name.to_string() })?;
        handlers.push((f, name.to_string()));
    }
    handlers.sort();
    let handlers: Vec<String> = handlers
        .into_iter()
        .map(|(f, n)| {
            handler_funcs.push(f);
            n
        })
        .collect();

    let mut b = Builder {
        p,
        g: Supergraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            succ: Vec::new(),
            pred: Vec::new(),
            annotations: Vec::new(),
            links: Vec::new(),
            link_of_edge: Vec::new(),
            starts: Vec::new(),
            ends: Vec::new(),
            event_loop: NodeId(0),
            handlers,
            handler_funcs,
            stmt_nodes: BTreeMap::new(),
            warnings: Vec::new(),
        },
        registry: handler_registry(p),
    };
    b.g.event_loop = b.node(NodeKind::EventLoop);
    for f in p.func_ids() {
        let s = b.node(NodeKind::Start(f));
        let e = b.node(NodeKind::End(f));
        b.g.starts.push(s);
        b.g.ends.push(e);
    }
    for f in p.func_ids() {
        let start = b.g.starts[f.index()];
        let out = b.block(f, &p.function(f).body, vec![(start, Vec::new())])?;
        let end = b.g.ends[f.index()];
        b.connect(out, end);
    }

    let el = b.g.event_loop;
    let top_end = b.g.ends[FuncId::TOP.index()];
    b.edge(top_end, el, EdgeKind::ToEventLoop, Vec::new());
    if !b.g.handlers.is_empty() {
        let ctr = b.edge(el, el, EdgeKind::CallToReturn, Vec::new());
        for i in 0..b.g.handlers.len() {
            let h = HandlerId(i as u32);
            let f = b.g.handler_funcs[i];
            let (start, end) = (b.g.starts[f.index()], b.g.ends[f.index()]);
            b.link((el, el), (start, end), EdgeKind::Dispatch(h), vec![EventOp::Invoke(h)], Some(ctr));
        }
    }
    Ok(b.g)
}
