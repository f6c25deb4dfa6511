use std::fmt;

/// Name of the synthetic function holding top-level statements.
pub const TOP_LEVEL: &str = "top-level";

/// Index of a function in [`Program::functions`]. Index 0 is always `top-level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncId(pub u32);

impl FuncId {
    pub const TOP: FuncId = FuncId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Program-wide unique statement identifier, assigned in source order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StmtId(pub u32);

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub file: u32,
    pub line: u32,
    pub col: u32,
}

/// A resolved variable: either a global (declared at top level) or a local
/// of a non-top-level function (parameters come first in the local list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    Global(u32),
    Local(FuncId, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Str(String),
    Bool(bool),
    /// A variable read. `var` is filled in by name resolution.
    Var { name: String, var: Option<VarRef> },
    /// A bare function name used as a value (handler arguments).
    FuncRef(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var {
            name: name.into(),
            var: None,
        }
    }

    /// Resolved variables read by this expression, in first-occurrence order.
    pub fn reads(&self) -> Vec<VarRef> {
        let mut out = Vec::new();
        self.collect_reads(&mut out);
        out
    }

    fn collect_reads(&self, out: &mut Vec<VarRef>) {
        match self {
            Expr::Var { var: Some(v), .. } => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Expr::Unary(_, e) => e.collect_reads(out),
            Expr::Binary(_, a, b) => {
                a.collect_reads(out);
                b.collect_reads(out);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub id: StmtId,
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    VarDecl {
        name: String,
        var: Option<VarRef>,
        init: Option<Expr>,
    },
    Assign {
        name: String,
        var: Option<VarRef>,
        value: Expr,
    },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Call {
        callee: String,
        args: Vec<Expr>,
    },
    Print(Expr),
    Register {
        event: String,
        handler: String,
    },
    Emit {
        event: String,
    },
    RegisterAsync {
        handler: String,
        args: Vec<Expr>,
    },
    Return,
}

impl StmtKind {
    /// Expressions whose variables are read when the statement executes.
    pub fn read_exprs(&self) -> Vec<&Expr> {
        match self {
            StmtKind::VarDecl { init, .. } => init.iter().collect(),
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Call { args, .. } | StmtKind::RegisterAsync { args, .. } => {
                args.iter().collect()
            }
            StmtKind::Print(e) => vec![e],
            StmtKind::Register { .. } | StmtKind::Emit { .. } | StmtKind::Return => vec![],
        }
    }

    /// Variables read by the statement itself (not by nested blocks).
    pub fn reads(&self) -> Vec<VarRef> {
        let mut out: Vec<VarRef> = Vec::new();
        for e in self.read_exprs() {
            for v in e.reads() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
    /// Parameters followed by every `var` declared anywhere in the body.
    /// Empty for `top-level`, whose declarations are globals.
    pub locals: Vec<String>,
}

impl FunctionDecl {
    pub fn is_top_level(&self) -> bool {
        self.name == TOP_LEVEL
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    /// Source file names, indexed by [`Span::file`].
    pub files: Vec<String>,
    pub functions: Vec<FunctionDecl>,
    pub globals: Vec<String>,
}

impl Program {
    pub fn function(&self, id: FuncId) -> &FunctionDecl {
        &self.functions[id.index()]
    }

    pub fn func_id(&self, name: &str) -> Option<FuncId> {
        self.functions
            .iter()
            .position(|f| f.name == name)
            .map(|i| FuncId(i as u32))
    }

    pub fn func_ids(&self) -> impl Iterator<Item = FuncId> {
        (0..self.functions.len() as u32).map(FuncId)
    }

    /// Qualified name of a variable: `x` for globals, `f::x` for locals.
    pub fn var_name(&self, v: VarRef) -> String {
        match v {
            VarRef::Global(i) => self.globals[i as usize].clone(),
            VarRef::Local(f, i) => {
                let func = self.function(f);
                format!("{}::{}", func.name, func.locals[i as usize])
            }
        }
    }

    /// Every variable in the program: globals first, then locals per function.
    pub fn all_vars(&self) -> Vec<VarRef> {
        let mut out: Vec<VarRef> = (0..self.globals.len() as u32).map(VarRef::Global).collect();
        for f in self.func_ids() {
            let n = self.function(f).locals.len() as u32;
            out.extend((0..n).map(|i| VarRef::Local(f, i)));
        }
        out
    }

    pub fn file_name(&self, span: Span) -> &str {
        self.files
            .get(span.file as usize)
            .map(String::as_str)
            .unwrap_or("<input>")
    }

    /// All statements in source order, paired with their owning function.
    pub fn statements(&self) -> Vec<(FuncId, &Stmt)> {
        fn walk<'a>(f: FuncId, stmts: &'a [Stmt], out: &mut Vec<(FuncId, &'a Stmt)>) {
            for s in stmts {
                out.push((f, s));
                match &s.kind {
                    StmtKind::If {
                        then_branch,
                        else_branch,
                        ..
                    } => {
                        walk(f, then_branch, out);
                        walk(f, else_branch, out);
                    }
                    StmtKind::While { body, .. } => walk(f, body, out),
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        for f in self.func_ids() {
            walk(f, &self.function(f).body, &mut out);
        }
        out.sort_by_key(|(_, s)| s.id);
        out
    }

    pub fn statement(&self, id: StmtId) -> Option<(FuncId, &Stmt)> {
        self.statements().into_iter().find(|(_, s)| s.id == id)
    }
}
