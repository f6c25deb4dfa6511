//! EVL: a small event-driven language with C-like statements, globals,
//! synchronous function calls, and three event primitives:
//! `register("evt", f)`, `emit("evt")` and `register_async(f, args...)`.
//!
//! Top-level statements form the body of the synthetic function `top-level`;
//! variables declared there are globals.

mod ast;
mod interp;
mod lexer;
mod parser;
mod pretty;

pub use ast::*;
pub use interp::{
    explore_schedules, interpret, ExecutionTrace, RuntimeError, SchedulePolicy, TraceEvent,
};
pub use pretty::{pretty_print, stmt_header};

use parser::{ParsedFile, Parser};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{file}:{line}:{col}: syntax error: {message}")]
    Syntax {
        file: String,
        line: u32,
        col: u32,
        message: String,
    },
    #[error("duplicate function `{name}`")]
    DuplicateFunction { name: String },
    #[error("{file}:{line}:{col}: unresolved callee `{name}`")]
    UnresolvedCallee {
        name: String,
        file: String,
        line: u32,
        col: u32,
    },
    #[error("{file}:{line}:{col}: undeclared variable `{name}`")]
    UndeclaredVariable {
        name: String,
        file: String,
        line: u32,
        col: u32,
    },
    #[error("{file}:{line}:{col}: `{callee}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        callee: String,
        expected: usize,
        found: usize,
        file: String,
        line: u32,
        col: u32,
    },
}

/// Parses a single EVL source.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    parse_files(&[("<input>", source)])
}

/// Parses several sources into one program; their top-level statements are
/// concatenated in input order.
pub fn parse_files<S: AsRef<str>>(sources: &[(S, S)]) -> Result<Program, ParseError> {
    let mut next_id = 0u32;
    let mut parsed = Vec::new();
    for (i, (name, src)) in sources.iter().enumerate() {
        let p = Parser::new(name.as_ref(), i as u32, src.as_ref(), &mut next_id)?;
        parsed.push(p.parse_file()?);
    }
    let files = sources.iter().map(|(n, _)| n.as_ref().to_string()).collect();
    resolve(files, parsed)
}

fn resolve(files: Vec<String>, parsed: Vec<ParsedFile>) -> Result<Program, ParseError> {
    let mut top_body = Vec::new();
    let mut functions = vec![];
    for pf in parsed {
        top_body.extend(pf.top);
        functions.extend(pf.functions);
    }
    let mut all = vec![FunctionDecl {
        name: TOP_LEVEL.to_string(),
        params: Vec::new(),
        body: top_body,
        span: Span::default(),
        locals: Vec::new(),
    }];
    for f in functions {
        if all.iter().any(|g| g.name == f.name) {
            return Err(ParseError::DuplicateFunction { name: f.name });
        }
        all.push(f);
    }

    let mut globals = Vec::new();
    collect_decls(&all[0].body, &mut globals);
    for f in all.iter_mut().skip(1) {
        let mut locals = f.params.clone();
        collect_decls(&f.body, &mut locals);
        f.locals = locals;
    }

    let signatures: Vec<(String, usize)> =
        all.iter().map(|f| (f.name.clone(), f.params.len())).collect();
    let mut program = Program {
        files,
        functions: Vec::new(),
        globals,
    };
    let mut resolved = Vec::with_capacity(all.len());
    for (i, mut f) in all.into_iter().enumerate() {
        let scope = Scope {
            func: FuncId(i as u32),
            locals: &f.locals,
            globals: &program.globals,
            signatures: &signatures,
            files: &program.files,
        };
        let mut body = std::mem::take(&mut f.body);
        scope.stmts(&mut body)?;
        f.body = body;
        resolved.push(f);
    }
    program.functions = resolved;
    Ok(program)
}

fn collect_decls(stmts: &[Stmt], out: &mut Vec<String>) {
    for s in stmts {
        match &s.kind {
            StmtKind::VarDecl { name, .. } => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                collect_decls(then_branch, out);
                collect_decls(else_branch, out);
            }
            StmtKind::While { body, .. } => collect_decls(body, out),
            _ => {}
        }
    }
}

struct Scope<'a> {
    func: FuncId,
    locals: &'a [String],
    globals: &'a [String],
    signatures: &'a [(String, usize)],
    files: &'a [String],
}

impl Scope<'_> {
    fn lookup(&self, name: &str) -> Option<VarRef> {
        if let Some(i) = self.locals.iter().position(|l| l == name) {
            return Some(VarRef::Local(self.func, i as u32));
        }
        self.globals
            .iter()
            .position(|g| g == name)
            .map(|i| VarRef::Global(i as u32))
    }

    fn function_arity(&self, name: &str) -> Option<usize> {
        self.signatures
            .iter()
            .skip(1)
            .find(|(n, _)| n == name)
            .map(|(_, a)| *a)
    }

    fn file(&self, span: Span) -> String {
        self.files
            .get(span.file as usize)
            .cloned()
            .unwrap_or_else(|| "<input>".to_string())
    }

    fn undeclared(&self, name: &str, span: Span) -> ParseError {
        ParseError::UndeclaredVariable {
            name: name.to_string(),
            file: self.file(span),
            line: span.line,
            col: span.col,
        }
    }

    fn unresolved(&self, name: &str, span: Span) -> ParseError {
        ParseError::UnresolvedCallee {
            name: name.to_string(),
            file: self.file(span),
            line: span.line,
            col: span.col,
        }
    }

    fn stmts(&self, stmts: &mut [Stmt]) -> Result<(), ParseError> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&self, s: &mut Stmt) -> Result<(), ParseError> {
        let span = s.span;
        match &mut s.kind {
            StmtKind::VarDecl { name, var, init } => {
                if let Some(e) = init {
                    self.expr(e, span)?;
                }
                *var = Some(self.lookup(name).ok_or_else(|| self.undeclared(name, span))?);
            }
            StmtKind::Assign { name, var, value } => {
                self.expr(value, span)?;
                *var = Some(self.lookup(name).ok_or_else(|| self.undeclared(name, span))?);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr(cond, span)?;
                self.stmts(then_branch)?;
                self.stmts(else_branch)?;
            }
            StmtKind::While { cond, body } => {
                self.expr(cond, span)?;
                self.stmts(body)?;
            }
            StmtKind::Call { callee, args } => {
                let arity = self
                    .function_arity(callee)
                    .ok_or_else(|| self.unresolved(callee, span))?;
                if arity != args.len() {
                    return Err(ParseError::ArityMismatch {
                        callee: callee.clone(),
                        expected: arity,
                        found: args.len(),
                        file: self.file(span),
                        line: span.line,
                        col: span.col,
                    });
                }
                for a in args {
                    self.expr(a, span)?;
                }
            }
            StmtKind::Print(e) => self.expr(e, span)?,
            StmtKind::Register { handler, .. } => {
                if self.function_arity(handler).is_none() {
                    return Err(self.unresolved(handler, span));
                }
            }
            StmtKind::RegisterAsync { handler, args } => {
                if self.function_arity(handler).is_none() {
                    return Err(self.unresolved(handler, span));
                }
                for a in args {
                    self.expr(a, span)?;
                }
            }
            StmtKind::Emit { .. } | StmtKind::Return => {}
        }
        Ok(())
    }

    fn expr(&self, e: &mut Expr, span: Span) -> Result<(), ParseError> {
        match e {
            Expr::Var { name, var } => match self.lookup(name) {
                Some(v) => *var = Some(v),
                None if self.function_arity(name).is_some() => *e = Expr::FuncRef(name.clone()),
                None => return Err(self.undeclared(name, span)),
            },
            Expr::Unary(_, inner) => self.expr(inner, span)?,
            Expr::Binary(_, a, b) => {
                self.expr(a, span)?;
                self.expr(b, span)?;
            }
            Expr::Int(_) | Expr::Str(_) | Expr::Bool(_) | Expr::FuncRef(_) => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn var_decl_at_top_level() {
        let p = parse("var x;").unwrap();
        assert_eq!(p.functions.len(), 1);
        assert_eq!(p.functions[0].name, TOP_LEVEL);
        assert_eq!(p.globals, vec!["x".to_string()]);
        match &p.functions[0].body[0].kind {
            StmtKind::VarDecl { name, init, var } => {
                assert_eq!(name, "x");
                assert!(init.is_none());
                assert_eq!(*var, Some(VarRef::Global(0)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn assignment_of_sum() {
        let p = parse("var x; var y; var z; x = y + z;").unwrap();
        let StmtKind::Assign { name, value, .. } = &p.functions[0].body[3].kind else {
            panic!("expected assignment");
        };
        assert_eq!(name, "x");
        let Expr::Binary(BinOp::Add, a, b) = value else {
            panic!("expected addition");
        };
        assert!(matches!(&**a, Expr::Var { name, .. } if name == "y"));
        assert!(matches!(&**b, Expr::Var { name, .. } if name == "z"));
    }

    #[test]
    fn precedence_and_associativity() {
        let p = parse("var a = 1 - 2 - 3 * 4 < 5 && true;").unwrap();
        let StmtKind::VarDecl { init: Some(e), .. } = &p.functions[0].body[0].kind else {
            panic!();
        };
        // ((((1 - 2) - (3 * 4)) < 5) && true)
        let Expr::Binary(BinOp::And, lhs, _) = e else { panic!() };
        let Expr::Binary(BinOp::Lt, sub, _) = &**lhs else { panic!() };
        let Expr::Binary(BinOp::Sub, first, mul) = &**sub else { panic!() };
        assert!(matches!(&**first, Expr::Binary(BinOp::Sub, _, _)));
        assert!(matches!(&**mul, Expr::Binary(BinOp::Mul, _, _)));
    }

    #[test]
    fn locals_and_params_resolve_before_globals() {
        let src = "var x; function f(x) { var y = x; x = y; }";
        let p = parse(src).unwrap();
        let f = &p.functions[1];
        assert_eq!(f.locals, vec!["x".to_string(), "y".to_string()]);
        let StmtKind::VarDecl { init: Some(Expr::Var { var, .. }), .. } = &f.body[0].kind else {
            panic!();
        };
        assert_eq!(*var, Some(VarRef::Local(FuncId(1), 0)));
        assert_eq!(p.var_name(VarRef::Local(FuncId(1), 1)), "f::y");
    }

    #[test]
    fn globals_declared_later_are_visible_in_functions() {
        let p = parse("function f() { sum = 1; } var sum;").unwrap();
        let StmtKind::Assign { var, .. } = &p.functions[1].body[0].kind else { panic!() };
        assert_eq!(*var, Some(VarRef::Global(0)));
    }

    #[test]
    fn function_names_become_refs_in_arguments() {
        let p = parse("function on(cb) { } function h() { } on(h);").unwrap();
        let StmtKind::Call { args, .. } = &p.functions[0].body[0].kind else { panic!() };
        assert_eq!(args[0], Expr::FuncRef("h".into()));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse("var x;\nx = ;").unwrap_err();
        match err {
            ParseError::Syntax { line, col, .. } => assert_eq!((line, col), (2, 5)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_function_rejected() {
        let err = parse("function f() { } function f() { }").unwrap_err();
        assert_eq!(err, ParseError::DuplicateFunction { name: "f".into() });
    }

    #[test]
    fn unresolved_callee_rejected() {
        assert!(matches!(
            parse("g();").unwrap_err(),
            ParseError::UnresolvedCallee { name, .. } if name == "g"
        ));
        assert!(matches!(
            parse("register(\"e\", nope);").unwrap_err(),
            ParseError::UnresolvedCallee { name, .. } if name == "nope"
        ));
    }

    #[test]
    fn undeclared_variable_rejected() {
        assert!(matches!(
            parse("print(q);").unwrap_err(),
            ParseError::UndeclaredVariable { name, .. } if name == "q"
        ));
    }

    #[test]
    fn arity_checked() {
        assert!(matches!(
            parse("function f(a) { } f();").unwrap_err(),
            ParseError::ArityMismatch { expected: 1, found: 0, .. }
        ));
    }

    #[test]
    fn calls_inside_expressions_rejected() {
        assert!(matches!(
            parse("function f() { } var x = f();").unwrap_err(),
            ParseError::Syntax { .. }
        ));
    }

    #[test]
    fn comments_and_string_escapes() {
        let p = parse("// header\nprint(\"a\\\"b\\n\"); // trailing\n").unwrap();
        assert_eq!(
            p.functions[0].body[0].kind,
            StmtKind::Print(Expr::Str("a\"b\n".into()))
        );
    }

    #[test]
    fn multiple_files_concatenate_top_level() {
        let p = parse_files(&[("a.evl", "var x;"), ("b.evl", "x = 1;")]).unwrap();
        assert_eq!(p.functions[0].body.len(), 2);
        assert_eq!(p.file_name(p.functions[0].body[1].span), "b.evl");
        assert_eq!(p.functions[0].body[1].span.line, 1);
    }
}
