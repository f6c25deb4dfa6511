//! Concrete interpreter with single-threaded, non-preemptive event-loop
//! semantics.
//!
//! * `register("e", h)` adds `h` to the listeners of `e`; re-registration is a no-op.
//! * `emit("e")` synchronously invokes every listener of `e` in registration
//!   order, then returns to the emitter. Listeners registered later miss it.
//! * `register_async(h, ..)` queues one invocation of `h`; the queue is drained
//!   only after `top-level` (and each subsequently dispatched handler) finishes.
//!
//! Every value carries an "uninitialized" bit. Reading a never-assigned
//! variable, or one assigned from an expression that read such a variable,
//! records an [`TraceEvent::UninitRead`] and yields the sentinel `0`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchedulePolicy {
    /// Dispatch queued handlers in arrival order.
    Fifo,
    /// At the k-th dispatch decision with more than one distinct ready
    /// handler, take the `choices[k]`-th distinct one in queue order
    /// (clamped); FIFO once choices run out.
    Choices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    StmtExec(StmtId),
    HandlerInvoked(String),
    /// Qualified variable name as produced by [`Program::var_name`].
    UninitRead(StmtId, String),
    Output(String),
    Registered { handler: String, event: Option<String> },
    Emitted(String),
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExecutionTrace {
    pub events: Vec<TraceEvent>,
    pub truncated: bool,
    pub steps: usize,
    /// Number of distinct ready handlers at each dispatch decision that had
    /// a choice.
    pub decisions: Vec<usize>,
}

impl ExecutionTrace {
    pub fn outputs(&self) -> Vec<&str> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Output(s) => Some(s.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn uninit_reads(&self) -> Vec<(StmtId, &str)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::UninitRead(s, v) => Some((*s, v.as_str())),
                _ => None,
            })
            .collect()
    }

    /// Checks that every invocation of a handler is preceded by its
    /// registration followed by an emission of one of its events, or by a
    /// `register_async` of it.
    pub fn check_handler_ordering(&self) -> Result<(), String> {
        let mut registered_for: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut armed: BTreeMap<&str, bool> = BTreeMap::new();
        for (i, e) in self.events.iter().enumerate() {
            match e {
                TraceEvent::Registered { handler, event } => match event {
                    Some(ev) => registered_for.entry(ev.as_str()).or_default().push(handler),
                    None => {
                        armed.insert(handler, true);
                    }
                },
                TraceEvent::Emitted(ev) => {
                    for h in registered_for.get(ev.as_str()).into_iter().flatten() {
                        armed.insert(h, true);
                    }
                }
                TraceEvent::HandlerInvoked(h) if !armed.get(h.as_str()).copied().unwrap_or(false) => {
                    return Err(format!("event {i}: handler `{h}` invoked before being registered and emitted"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeError {
    pub stmt: StmtId,
    pub message: String,
    /// Events up to the failing statement.
    pub trace: ExecutionTrace,
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "runtime error at {}: {}", self.stmt, self.message)
    }
}

impl std::error::Error for RuntimeError {}

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Int(i64),
    Str(String),
    Bool(bool),
    Func(String),
}

impl Val {
    fn truthy(&self) -> bool {
        match self {
            Val::Int(n) => *n != 0,
            Val::Str(s) => !s.is_empty(),
            Val::Bool(b) => *b,
            Val::Func(_) => true,
        }
    }

    fn render(&self) -> String {
        match self {
            Val::Int(n) => n.to_string(),
            Val::Str(s) => s.clone(),
            Val::Bool(b) => b.to_string(),
            Val::Func(f) => format!("[function {f}]"),
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    val: Val,
    uninit: bool,
}

impl Slot {
    fn uninit() -> Slot {
        Slot {
            val: Val::Int(0),
            uninit: true,
        }
    }
}

enum Stop {
    Truncated,
    Error(StmtId, String),
}

enum Flow {
    Normal,
    Return,
}

const MAX_CALL_DEPTH: usize = 48;

struct Machine<'p> {
    program: &'p Program,
    globals: Vec<Slot>,
    listeners: BTreeMap<String, Vec<String>>,
    queue: VecDeque<String>,
    trace: ExecutionTrace,
    step_limit: usize,
    depth: usize,
}

impl<'p> Machine<'p> {
    fn step(&mut self, id: StmtId) -> Result<(), Stop> {
        if self.trace.steps >= self.step_limit {
            return Err(Stop::Truncated);
        }
        self.trace.steps += 1;
        self.trace.events.push(TraceEvent::StmtExec(id));
        Ok(())
    }

    fn call(&mut self, f: FuncId, args: Vec<Slot>, at: StmtId) -> Result<(), Stop> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(Stop::Truncated);
        }
        let func = self.program.function(f);
        let mut locals: Vec<Slot> = vec![Slot::uninit(); func.locals.len()];
        for (slot, a) in locals.iter_mut().zip(args) {
            *slot = a;
        }
        if func.is_top_level() {
            debug_assert!(locals.is_empty());
        }
        let _ = at;
        self.depth += 1;
        let r = self.block(f, &func.body, &mut locals);
        self.depth -= 1;
        r.map(|_| ())
    }

    fn invoke_handler(&mut self, name: &str, at: StmtId) -> Result<(), Stop> {
        let f = self
            .program
            .func_id(name)
            .ok_or_else(|| Stop::Error(at, format!("unknown handler `{name}`")))?;
        self.trace.events.push(TraceEvent::HandlerInvoked(name.to_string()));
        self.call(f, Vec::new(), at)
    }

    fn block(&mut self, f: FuncId, stmts: &[Stmt], locals: &mut Vec<Slot>) -> Result<Flow, Stop> {
        for s in stmts {
            if let Flow::Return = self.stmt(f, s, locals)? {
                return Ok(Flow::Return);
            }
        }
        Ok(Flow::Normal)
    }

    fn store(&mut self, v: VarRef, slot: Slot, locals: &mut [Slot]) {
        match v {
            VarRef::Global(i) => self.globals[i as usize] = slot,
            VarRef::Local(_, i) => locals[i as usize] = slot,
        }
    }

    fn stmt(&mut self, f: FuncId, s: &Stmt, locals: &mut Vec<Slot>) -> Result<Flow, Stop> {
        self.step(s.id)?;
        match &s.kind {
            StmtKind::VarDecl { var, init, .. } => {
                let slot = match init {
                    Some(e) => self.eval(e, s.id, locals)?,
                    None => Slot::uninit(),
                };
                self.store(var.expect("resolved"), slot, locals);
            }
            StmtKind::Assign { var, value, .. } => {
                let slot = self.eval(value, s.id, locals)?;
                self.store(var.expect("resolved"), slot, locals);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.eval(cond, s.id, locals)?;
                let branch = if c.val.truthy() { then_branch } else { else_branch };
                return self.block(f, branch, locals);
            }
            StmtKind::While { cond, body } => loop {
                let c = self.eval(cond, s.id, locals)?;
                if !c.val.truthy() {
                    break;
                }
                if let Flow::Return = self.block(f, body, locals)? {
                    return Ok(Flow::Return);
                }
                // Each further condition evaluation counts as a visit to the loop head.
                self.step(s.id)?;
            },
            StmtKind::Call { callee, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, s.id, locals)?);
                }
                let g = self
                    .program
                    .func_id(callee)
                    .ok_or_else(|| Stop::Error(s.id, format!("unknown function `{callee}`")))?;
                self.call(g, vals, s.id)?;
            }
            StmtKind::Print(e) => {
                let v = self.eval(e, s.id, locals)?;
                self.trace.events.push(TraceEvent::Output(v.val.render()));
            }
            StmtKind::Register { event, handler } => {
                self.trace.events.push(TraceEvent::Registered {
                    handler: handler.clone(),
                    event: Some(event.clone()),
                });
                let ls = self.listeners.entry(event.clone()).or_default();
                if !ls.contains(handler) {
                    ls.push(handler.clone());
                }
            }
            StmtKind::Emit { event } => {
                self.trace.events.push(TraceEvent::Emitted(event.clone()));
                let targets = self.listeners.get(event).cloned().unwrap_or_default();
                for h in targets {
                    self.invoke_handler(&h, s.id)?;
                }
            }
            StmtKind::RegisterAsync { handler, args } => {
                for a in args {
                    self.eval(a, s.id, locals)?;
                }
                self.trace.events.push(TraceEvent::Registered {
                    handler: handler.clone(),
                    event: None,
                });
                self.queue.push_back(handler.clone());
            }
            StmtKind::Return => return Ok(Flow::Return),
        }
        Ok(Flow::Normal)
    }

    fn eval(&mut self, e: &Expr, at: StmtId, locals: &[Slot]) -> Result<Slot, Stop> {
        let ok = |val: Val, uninit: bool| Ok(Slot { val, uninit });
        match e {
            Expr::Int(n) => ok(Val::Int(*n), false),
            Expr::Str(s) => ok(Val::Str(s.clone()), false),
            Expr::Bool(b) => ok(Val::Bool(*b), false),
            Expr::FuncRef(f) => ok(Val::Func(f.clone()), false),
            Expr::Var { var, .. } => {
                let v = var.expect("resolved");
                let slot = match v {
                    VarRef::Global(i) => self.globals[i as usize].clone(),
                    VarRef::Local(_, i) => locals[i as usize].clone(),
                };
                if slot.uninit {
                    self.trace
                        .events
                        .push(TraceEvent::UninitRead(at, self.program.var_name(v)));
                }
                Ok(slot)
            }
            Expr::Unary(op, inner) => {
                let v = self.eval(inner, at, locals)?;
                let val = match (op, &v.val) {
                    (UnOp::Neg, Val::Int(n)) => Val::Int(n.wrapping_neg()),
                    (UnOp::Not, other) => Val::Bool(!other.truthy()),
                    (UnOp::Neg, other) => {
                        return Err(Stop::Error(at, format!("cannot negate {}", other.render())))
                    }
                };
                ok(val, v.uninit)
            }
            Expr::Binary(BinOp::And, a, b) => {
                let l = self.eval(a, at, locals)?;
                if !l.val.truthy() {
                    return ok(Val::Bool(false), l.uninit);
                }
                let r = self.eval(b, at, locals)?;
                ok(Val::Bool(r.val.truthy()), l.uninit || r.uninit)
            }
            Expr::Binary(BinOp::Or, a, b) => {
                let l = self.eval(a, at, locals)?;
                if l.val.truthy() {
                    return ok(Val::Bool(true), l.uninit);
                }
                let r = self.eval(b, at, locals)?;
                ok(Val::Bool(r.val.truthy()), l.uninit || r.uninit)
            }
            Expr::Binary(op, a, b) => {
                let l = self.eval(a, at, locals)?;
                let r = self.eval(b, at, locals)?;
                let val = binary(*op, &l.val, &r.val).map_err(|m| Stop::Error(at, m))?;
                ok(val, l.uninit || r.uninit)
            }
        }
    }
}

fn binary(op: BinOp, l: &Val, r: &Val) -> Result<Val, String> {
    use Val::*;
    Ok(match (op, l, r) {
        (BinOp::Add, Str(_), _) | (BinOp::Add, _, Str(_)) => Str(l.render() + &r.render()),
        (BinOp::Add, Int(a), Int(b)) => Int(a.wrapping_add(*b)),
        (BinOp::Sub, Int(a), Int(b)) => Int(a.wrapping_sub(*b)),
        (BinOp::Mul, Int(a), Int(b)) => Int(a.wrapping_mul(*b)),
        (BinOp::Div | BinOp::Mod, Int(_), Int(0)) => return Err("division by zero".into()),
        (BinOp::Div, Int(a), Int(b)) => Int(a.wrapping_div(*b)),
        (BinOp::Mod, Int(a), Int(b)) => Int(a.wrapping_rem(*b)),
        (BinOp::Eq, a, b) => Bool(a == b),
        (BinOp::Ne, a, b) => Bool(a != b),
        (BinOp::Lt, Int(a), Int(b)) => Bool(a < b),
        (BinOp::Le, Int(a), Int(b)) => Bool(a <= b),
        (BinOp::Gt, Int(a), Int(b)) => Bool(a > b),
        (BinOp::Ge, Int(a), Int(b)) => Bool(a >= b),
        (BinOp::Lt, Str(a), Str(b)) => Bool(a < b),
        (BinOp::Le, Str(a), Str(b)) => Bool(a <= b),
        (BinOp::Gt, Str(a), Str(b)) => Bool(a > b),
        (BinOp::Ge, Str(a), Str(b)) => Bool(a >= b),
        _ => {
            return Err(format!(
                "type error: {} {} {}",
                l.render(),
                op.symbol(),
                r.render()
            ))
        }
    })
}

/// Runs `top-level` to completion, then drains the handler queue.
pub fn interpret(
    p: &Program,
    schedule: &SchedulePolicy,
    step_limit: usize,
) -> Result<ExecutionTrace, RuntimeError> {
    assert!(step_limit > 0, "step limit must be positive");
    let mut m = Machine {
        program: p,
        globals: vec![Slot::uninit(); p.globals.len()],
        listeners: BTreeMap::new(),
        queue: VecDeque::new(),
        trace: ExecutionTrace::default(),
        step_limit,
        depth: 0,
    };
    let entry = StmtId(u32::MAX);
    let mut result = m.call(FuncId::TOP, Vec::new(), entry);
    while result.is_ok() && !m.queue.is_empty() {
        // Queued invocations of the same handler are interchangeable, so a
        // decision picks among distinct handlers, by first occurrence.
        let mut firsts: Vec<usize> = Vec::new();
        for (i, h) in m.queue.iter().enumerate() {
            if !firsts.iter().any(|&j| m.queue[j] == *h) {
                firsts.push(i);
            }
        }
        let idx = if firsts.len() > 1 {
            let k = m.trace.decisions.len();
            m.trace.decisions.push(firsts.len());
            let pick = match schedule {
                SchedulePolicy::Fifo => 0,
                SchedulePolicy::Choices(c) => c.get(k).copied().unwrap_or(0).min(firsts.len() - 1),
            };
            firsts[pick]
        } else {
            0
        };
        let h = m.queue.remove(idx).expect("index within queue");
        result = m.invoke_handler(&h, entry);
    }
    match result {
        Ok(()) => Ok(m.trace),
        Err(Stop::Truncated) => {
            m.trace.truncated = true;
            m.trace.events.push(TraceEvent::Truncated);
            Ok(m.trace)
        }
        Err(Stop::Error(stmt, message)) => Err(RuntimeError {
            stmt,
            message,
            trace: m.trace,
        }),
    }
}

/// Enumerates every schedule that differs in at most the first
/// `max_decisions` dispatch choices (later choices are FIFO). The FIFO run
/// comes first.
pub fn explore_schedules(
    p: &Program,
    max_decisions: usize,
    step_limit: usize,
) -> Vec<Result<ExecutionTrace, RuntimeError>> {
    let mut out = Vec::new();
    let mut pending: VecDeque<Vec<usize>> = VecDeque::from([Vec::new()]);
    while let Some(prefix) = pending.pop_front() {
        let policy = SchedulePolicy::Choices(prefix.clone());
        let result = interpret(p, &policy, step_limit);
        let decisions = match &result {
            Ok(t) => t.decisions.clone(),
            Err(e) => e.trace.decisions.clone(),
        };
        let limit = decisions.len().min(max_decisions);
        for (i, &width) in decisions.iter().enumerate().take(limit).skip(prefix.len()) {
            for alt in 1..width {
                let mut next = prefix.clone();
                next.resize(i, 0);
                next.push(alt);
                pending.push_back(next);
            }
        }
        out.push(result);
    }
    out
}
