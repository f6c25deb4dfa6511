use std::fmt::Write;

use super::ast::*;

/// Renders a program as canonical EVL: top-level statements first, then each
/// function in declaration order, four-space indentation.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for s in &p.functions[0].body {
        stmt(&mut out, s, 0);
    }
    for f in p.functions.iter().skip(1) {
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "function {}({}) {{", f.name, f.params.join(", "));
        for s in &f.body {
            stmt(&mut out, s, 1);
        }
        out.push_str("}\n");
    }
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn block(out: &mut String, stmts: &[Stmt], level: usize) {
    out.push_str("{\n");
    for s in stmts {
        stmt(out, s, level + 1);
    }
    indent(out, level);
    out.push('}');
}

fn stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match &s.kind {
        StmtKind::VarDecl { name, init, .. } => match init {
            Some(e) => {
                let _ = write!(out, "var {name} = {};", expr(e));
            }
            None => {
                let _ = write!(out, "var {name};");
            }
        },
        StmtKind::Assign { name, value, .. } => {
            let _ = write!(out, "{name} = {};", expr(value));
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = write!(out, "if ({}) ", expr(cond));
            block(out, then_branch, level);
            if !else_branch.is_empty() {
                out.push_str(" else ");
                block(out, else_branch, level);
            }
        }
        StmtKind::While { cond, body } => {
            let _ = write!(out, "while ({}) ", expr(cond));
            block(out, body, level);
        }
        StmtKind::Call { callee, args } => {
            let _ = write!(out, "{callee}({});", args_list(args));
        }
        StmtKind::Print(e) => {
            let _ = write!(out, "print({});", expr(e));
        }
        StmtKind::Register { event, handler } => {
            let _ = write!(out, "register({}, {handler});", quote(event));
        }
        StmtKind::Emit { event } => {
            let _ = write!(out, "emit({});", quote(event));
        }
        StmtKind::RegisterAsync { handler, args } => {
            if args.is_empty() {
                let _ = write!(out, "register_async({handler});");
            } else {
                let _ = write!(out, "register_async({handler}, {});", args_list(args));
            }
        }
        StmtKind::Return => out.push_str("return;"),
    }
    out.push('\n');
}

/// One-line rendering of a statement without nested blocks, e.g. `while (i < n)`.
pub fn stmt_header(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::If { cond, .. } => format!("if ({})", expr(cond)),
        StmtKind::While { cond, .. } => format!("while ({})", expr(cond)),
        _ => {
            let mut out = String::new();
            stmt(&mut out, s, 0);
            out.trim_end().to_string()
        }
    }
}

fn args_list(args: &[Expr]) -> String {
    args.iter().map(expr).collect::<Vec<_>>().join(", ")
}

pub(crate) fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

pub(crate) fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(n) => n.to_string(),
        Expr::Str(s) => quote(s),
        Expr::Bool(b) => b.to_string(),
        Expr::Var { name, .. } => name.clone(),
        Expr::FuncRef(name) => name.clone(),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            };
            match **inner {
                Expr::Binary(..) => format!("{sym}({})", expr(inner)),
                _ => format!("{sym}{}", expr(inner)),
            }
        }
        Expr::Binary(op, a, b) => {
            let lhs = operand(a, op.precedence(), false);
            let rhs = operand(b, op.precedence(), true);
            format!("{lhs} {} {rhs}", op.symbol())
        }
    }
}

fn operand(e: &Expr, parent: u8, right: bool) -> String {
    match e {
        Expr::Binary(op, ..) if op.precedence() < parent || (right && op.precedence() == parent) => {
            format!("({})", expr(e))
        }
        _ => expr(e),
    }
}
