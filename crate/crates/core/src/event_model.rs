//! Declarative description of which calls register handlers and which emit
//! events, and the rewriting of such calls into EVL's event primitives.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Expr, Program, Stmt, StmtId, StmtKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registration {
    pub callee: String,
    /// Position of the event-name argument. Callback-style APIs that emit
    /// implicitly may have none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_arg: Option<usize>,
    pub handler_arg: usize,
    #[serde(default)]
    pub implicit_emit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Emission {
    pub callee: String,
    pub event_arg: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct EventModel {
    #[serde(default)]
    pub registrations: Vec<Registration>,
    #[serde(default)]
    pub emissions: Vec<Emission>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid event model: {0}")]
    Json(String),
    #[error("event model: `{callee}` is described more than once")]
    DuplicateCallee { callee: String },
    #[error("event model: `{callee}` is an EVL primitive and cannot be redefined")]
    PrimitiveRedefined { callee: String },
    #[error("event model: argument {position} of `{callee}` is out of range (arity {arity})")]
    ArgumentOutOfRange {
        callee: String,
        position: usize,
        arity: usize,
    },
    #[error("event model: registration of `{callee}` has neither an event argument nor implicit_emit")]
    MissingEvent { callee: String },
    #[error("{site}: argument {position} of `{callee}` must be a {expected}")]
    NonLiteralArgument {
        callee: String,
        position: usize,
        expected: &'static str,
        site: StmtId,
    },
}

const PRIMITIVES: [&str; 3] = ["register", "emit", "register_async"];

impl EventModel {
    /// The model describing EVL's own primitives.
    pub fn builtin() -> EventModel {
        EventModel {
            registrations: vec![
                Registration {
                    callee: "register".into(),
                    event_arg: Some(0),
                    handler_arg: 1,
                    implicit_emit: false,
                },
                Registration {
                    callee: "register_async".into(),
                    event_arg: None,
                    handler_arg: 0,
                    implicit_emit: true,
                },
            ],
            emissions: vec![Emission {
                callee: "emit".into(),
                event_arg: 0,
            }],
        }
    }

    /// Parses a JSON configuration and appends it to the builtin model.
    pub fn from_json(text: &str) -> Result<EventModel, ModelError> {
        let ext: EventModel = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        let mut m = EventModel::builtin();
        m.registrations.extend(ext.registrations);
        m.emissions.extend(ext.emissions);
        m.check_shape()?;
        Ok(m)
    }

    fn user_callees(&self) -> impl Iterator<Item = &str> {
        self.registrations
            .iter()
            .map(|r| r.callee.as_str())
            .chain(self.emissions.iter().map(|e| e.callee.as_str()))
            .filter(|c| !PRIMITIVES.contains(c))
    }

    fn check_shape(&self) -> Result<(), ModelError> {
        let builtin = EventModel::builtin();
        let mut seen = BTreeSet::new();
        for r in &self.registrations {
            if PRIMITIVES.contains(&r.callee.as_str()) && !builtin.registrations.contains(r) {
                return Err(ModelError::PrimitiveRedefined { callee: r.callee.clone() });
            }
            if r.event_arg.is_none() && !r.implicit_emit {
                return Err(ModelError::MissingEvent { callee: r.callee.clone() });
            }
        }
        for e in &self.emissions {
            if PRIMITIVES.contains(&e.callee.as_str()) && !builtin.emissions.contains(e) {
                return Err(ModelError::PrimitiveRedefined { callee: e.callee.clone() });
            }
        }
        for c in self.user_callees() {
            if !seen.insert(c) {
                return Err(ModelError::DuplicateCallee { callee: c.to_string() });
            }
        }
        Ok(())
    }

    /// Checks argument positions against the arities of the wrapper
    /// functions declared in `p`. Entries for undeclared callees are ignored.
    pub fn validate(&self, p: &Program) -> Result<(), ModelError> {
        self.check_shape()?;
        let arity = |callee: &str| p.func_id(callee).map(|f| p.function(f).params.len());
        let check = |callee: &str, position: usize| match arity(callee) {
            Some(a) if position >= a => Err(ModelError::ArgumentOutOfRange {
                callee: callee.to_string(),
                position,
                arity: a,
            }),
            _ => Ok(()),
        };
        for r in self.registrations.iter().filter(|r| !PRIMITIVES.contains(&r.callee.as_str())) {
            check(&r.callee, r.handler_arg)?;
            if let Some(e) = r.event_arg {
                check(&r.callee, e)?;
            }
        }
        for e in self.emissions.iter().filter(|e| !PRIMITIVES.contains(&e.callee.as_str())) {
            check(&e.callee, e.event_arg)?;
        }
        Ok(())
    }

    fn registration(&self, callee: &str) -> Option<&Registration> {
        self.registrations.iter().find(|r| r.callee == callee)
    }

    fn emission(&self, callee: &str) -> Option<&Emission> {
        self.emissions.iter().find(|e| e.callee == callee)
    }

    /// Rewrites every call to a modelled wrapper into the corresponding
    /// primitive, keeping statement ids and spans. Registrations with
    /// `implicit_emit` become `register_async`; the remaining arguments are
    /// kept as reads where the primitive has room for them.
    pub fn desugar(&self, p: &Program) -> Result<Program, ModelError> {
        self.validate(p)?;
        let mut out = p.clone();
        for f in &mut out.functions {
            self.rewrite(&mut f.body)?;
        }
        Ok(out)
    }

    fn rewrite(&self, stmts: &mut [Stmt]) -> Result<(), ModelError> {
        for s in stmts {
            match &mut s.kind {
                StmtKind::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    self.rewrite(then_branch)?;
                    self.rewrite(else_branch)?;
                }
                StmtKind::While { body, .. } => self.rewrite(body)?,
                StmtKind::Call { callee, args } => {
                    if let Some(kind) = self.primitive_for(callee, args, s.id)? {
                        s.kind = kind;
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn primitive_for(&self, callee: &str, args: &[Expr], site: StmtId) -> Result<Option<StmtKind>, ModelError> {
        let literal_event = |position: usize| match args.get(position) {
            Some(Expr::Str(s)) => Ok(s.clone()),
            _ => Err(ModelError::NonLiteralArgument {
                callee: callee.to_string(),
                position,
                expected: "string literal event name",
                site,
            }),
        };
        if let Some(r) = self.registration(callee) {
            let handler = match args.get(r.handler_arg) {
                Some(Expr::FuncRef(h)) => h.clone(),
                _ => {
                    return Err(ModelError::NonLiteralArgument {
                        callee: callee.to_string(),
                        position: r.handler_arg,
                        expected: "function name",
                        site,
                    })
                }
            };
            if r.implicit_emit {
                let rest = args
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != r.handler_arg && Some(*i) != r.event_arg)
                    .map(|(_, a)| a.clone())
                    .collect();
                return Ok(Some(StmtKind::RegisterAsync { handler, args: rest }));
            }
            let event = literal_event(r.event_arg.expect("checked by validate"))?;
            return Ok(Some(StmtKind::Register { event, handler }));
        }
        if let Some(e) = self.emission(callee) {
            let event = literal_event(e.event_arg)?;
            return Ok(Some(StmtKind::Emit { event }));
        }
        Ok(None)
    }
}

/// For each event literal, every handler registered for it anywhere in `p`.
pub fn handler_registry(p: &Program) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (_, s) in p.statements() {
        if let StmtKind::Register { event, handler } = &s.kind {
            out.entry(event.clone()).or_default().insert(handler.clone());
        }
    }
    out
}
