use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Unresolved output of parsing one file.
pub(crate) struct ParsedFile {
    pub top: Vec<Stmt>,
    pub functions: Vec<FunctionDecl>,
}

pub(crate) struct Parser<'a> {
    file_name: &'a str,
    file_index: u32,
    toks: Vec<Token>,
    pos: usize,
    next_id: &'a mut u32,
}

impl<'a> Parser<'a> {
    pub fn new(
        file_name: &'a str,
        file_index: u32,
        src: &str,
        next_id: &'a mut u32,
    ) -> Result<Self, ParseError> {
        Ok(Parser {
            file_name,
            file_index,
            toks: tokenize(file_name, src)?,
            pos: 0,
            next_id,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        let t = &self.toks[self.pos];
        Span {
            file: self.file_index,
            line: t.line,
            col: t.col,
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        Err(ParseError::Syntax {
            file: self.file_name.to_string(),
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            let found = self.peek().describe();
            self.error(format!("expected {}, found {found}", want.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            other => self.error(format!("expected {what}, found {}", other.describe())),
        }
    }

    fn string_lit(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!(
                "expected {what} (a string literal), found {}",
                other.describe()
            )),
        }
    }

    fn fresh_id(&mut self) -> StmtId {
        let id = StmtId(*self.next_id);
        *self.next_id += 1;
        id
    }

    pub fn parse_file(mut self) -> Result<ParsedFile, ParseError> {
        let mut top = Vec::new();
        let mut functions = Vec::new();
        while *self.peek() != Tok::Eof {
            if *self.peek() == Tok::Function {
                functions.push(self.function()?);
            } else {
                top.push(self.statement()?);
            }
        }
        Ok(ParsedFile { top, functions })
    }

    fn function(&mut self) -> Result<FunctionDecl, ParseError> {
        let span = self.span();
        self.expect(Tok::Function)?;
        let name = self.ident("function name")?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let p = self.ident("parameter name")?;
                if params.contains(&p) {
                    return self.error(format!("duplicate parameter `{p}`"));
                }
                params.push(p);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let body = self.block()?;
        Ok(FunctionDecl {
            name,
            params,
            body,
            span,
            locals: Vec::new(),
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return self.error("unexpected end of input inside block");
            }
            if *self.peek() == Tok::Function {
                return self.error("function declarations are only allowed at top level");
            }
            stmts.push(self.statement()?);
        }
        self.bump();
        Ok(stmts)
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        let id = self.fresh_id();
        let kind = match self.peek().clone() {
            Tok::Var => {
                self.bump();
                let name = self.ident("variable name")?;
                let init = if *self.peek() == Tok::Assign {
                    self.bump();
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(Tok::Semi)?;
                StmtKind::VarDecl {
                    name,
                    var: None,
                    init,
                }
            }
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then_branch = self.block()?;
                let else_branch = if *self.peek() == Tok::Else {
                    self.bump();
                    if *self.peek() == Tok::If {
                        vec![self.statement()?]
                    } else {
                        self.block()?
                    }
                } else {
                    Vec::new()
                };
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            Tok::While => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Print => {
                self.bump();
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                StmtKind::Print(e)
            }
            Tok::Register => {
                self.bump();
                self.expect(Tok::LParen)?;
                let event = self.string_lit("event name")?;
                self.expect(Tok::Comma)?;
                let handler = self.ident("handler function name")?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                StmtKind::Register { event, handler }
            }
            Tok::Emit => {
                self.bump();
                self.expect(Tok::LParen)?;
                let event = self.string_lit("event name")?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                StmtKind::Emit { event }
            }
            Tok::RegisterAsync => {
                self.bump();
                self.expect(Tok::LParen)?;
                let handler = self.ident("handler function name")?;
                let mut args = Vec::new();
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                StmtKind::RegisterAsync { handler, args }
            }
            Tok::Return => {
                self.bump();
                self.expect(Tok::Semi)?;
                StmtKind::Return
            }
            Tok::Ident(name) => {
                self.bump();
                match self.peek() {
                    Tok::Assign => {
                        self.bump();
                        let value = self.expr()?;
                        self.expect(Tok::Semi)?;
                        StmtKind::Assign {
                            name,
                            var: None,
                            value,
                        }
                    }
                    Tok::LParen => {
                        self.bump();
                        let args = self.args()?;
                        self.expect(Tok::Semi)?;
                        StmtKind::Call { callee: name, args }
                    }
                    other => {
                        let found = other.describe();
                        return self.error(format!(
                            "expected `=` or `(` after `{name}`, found {found}"
                        ));
                    }
                }
            }
            other => return self.error(format!("expected a statement, found {}", other.describe())),
        };
        Ok(Stmt { id, span, kind })
    }

    /// Parses a comma-separated argument list; the opening paren is consumed.
    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Mod,
            _ => return None,
        })
    }

    // Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            Tok::Bang => {
                self.bump();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(name) => {
                if *self.peek_at(1) == Tok::LParen {
                    return self.error(format!(
                        "call to `{name}` inside an expression; calls are statements in EVL"
                    ));
                }
                self.bump();
                Ok(Expr::var(name))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => self.error(format!("expected an expression, found {}", other.describe())),
        }
    }
}
