//! Hand-written lexer and recursive-descent parser for MTIR.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::*;
use super::FrontendError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

const SYMBOLS: [&str; 20] = [
    "<=", ">=", "==", "!=", "&&", "||", "+", "-", "*", "/", "<", ">", "!", "=", "(", ")", "{", "}", ";", ",",
];

fn lex(text: &str) -> Result<Vec<Token>, FrontendError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += (i - start) as u32;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += (i - start) as u32;
            out.push(Token {
                tok: Tok::Int(chars[start..i].iter().collect()),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        let sym = SYMBOLS.iter().find(|s| {
            let mut it = s.chars();
            let first = it.next();
            let second = it.next();
            first == Some(c) && second.is_none_or(|d| chars.get(i + 1) == Some(&d))
        });
        match sym {
            Some(s) => {
                i += s.len();
                col += s.len() as u32;
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: start_line,
                    col: start_col,
                });
            }
            None => {
                return Err(FrontendError::Syntax {
                    line,
                    col,
                    message: alloc::format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

const KEYWORDS: [&str; 12] = [
    "int", "bool", "thread", "if", "else", "while", "assert", "error", "create", "join", "true", "false",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        &self.toks[(self.pos + ahead).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, FrontendError> {
        let t = self.peek();
        Err(FrontendError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) | Tok::Int(s) => alloc::format!("`{s}`"),
            Tok::Sym(s) => alloc::format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(t) if t == kw)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), FrontendError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.error(alloc::format!(
                "expected `{s}`, found {}",
                Self::describe(&self.peek().tok)
            ))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), FrontendError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(alloc::format!(
                "expected `{kw}`, found {}",
                Self::describe(&self.peek().tok)
            ))
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            other => {
                let msg = alloc::format!("expected identifier, found {}", Self::describe(other));
                self.error(msg)
            }
        }
    }

    fn scalar_type(&mut self) -> Option<ScalarType> {
        if self.is_kw("int") {
            self.bump();
            Some(ScalarType::Int)
        } else if self.is_kw("bool") {
            self.bump();
            Some(ScalarType::Bool)
        } else {
            None
        }
    }

    fn int_literal(&mut self, negative: bool) -> Result<i64, FrontendError> {
        match self.peek().tok.clone() {
            Tok::Int(digits) => {
                let text = if negative { alloc::format!("-{digits}") } else { digits };
                match text.parse::<i64>() {
                    Ok(v) => {
                        self.bump();
                        Ok(v)
                    }
                    Err(_) => self.error(alloc::format!("integer literal `{text}` out of range")),
                }
            }
            other => {
                let msg = alloc::format!("expected integer, found {}", Self::describe(&other));
                self.error(msg)
            }
        }
    }

    /// literal := ["-"] INT | "true" | "false"
    fn literal(&mut self) -> Result<i64, FrontendError> {
        if self.is_kw("true") {
            self.bump();
            return Ok(1);
        }
        if self.is_kw("false") {
            self.bump();
            return Ok(0);
        }
        if self.is_sym("-") {
            self.bump();
            return self.int_literal(true);
        }
        self.int_literal(false)
    }

    fn program(&mut self) -> Result<SourceProgram, FrontendError> {
        let mut globals = Vec::new();
        let mut seen = BTreeSet::new();
        while self.is_kw("int") || self.is_kw("bool") {
            let line = self.peek().line;
            let ty = self.scalar_type().expect("checked above");
            let name = self.ident()?;
            self.expect_sym("=")?;
            let init = self.literal()?;
            self.expect_sym(";")?;
            if !seen.insert(name.clone()) {
                return Err(FrontendError::DuplicateGlobal { name });
            }
            globals.push(GlobalDecl { name, ty, init, line });
        }
        let mut routines: Vec<Routine> = Vec::new();
        while !matches!(self.peek().tok, Tok::Eof) {
            let r = self.routine()?;
            if routines.iter().any(|o| o.name == r.name) {
                return Err(FrontendError::DuplicateRoutine { name: r.name });
            }
            routines.push(r);
        }
        if routines.is_empty() {
            return self.error("expected at least one `thread` routine");
        }
        Ok(SourceProgram {
            globals,
            routines,
            entry: ENTRY_ROUTINE.to_string(),
        })
    }

    fn routine(&mut self) -> Result<Routine, FrontendError> {
        let line = self.peek().line;
        self.expect_kw("thread")?;
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            loop {
                self.expect_kw("int")?;
                params.push(self.ident()?);
                if self.is_sym(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        let (body, end_line) = self.block()?;
        Ok(Routine {
            name,
            params,
            body,
            line,
            end_line,
        })
    }

    fn block(&mut self) -> Result<(Vec<Stmt>, u32), FrontendError> {
        self.expect_sym("{")?;
        let mut stmts = Vec::new();
        while !self.is_sym("}") {
            if matches!(self.peek().tok, Tok::Eof) {
                return self.error("unterminated block");
            }
            stmts.push(self.stmt()?);
        }
        let end = self.bump().line;
        Ok((stmts, end))
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let line = self.peek().line;
        let kind = if let Some(ty) = self.scalar_type() {
            let name = self.ident()?;
            self.expect_sym("=")?;
            let value = self.expr()?;
            self.expect_sym(";")?;
            StmtKind::Decl { ty, name, value }
        } else if self.is_kw("if") {
            self.bump();
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let (then_block, _) = self.block()?;
            let else_block = if self.is_kw("else") {
                self.bump();
                Some(self.block()?.0)
            } else {
                None
            };
            StmtKind::If {
                cond,
                then_block,
                else_block,
            }
        } else if self.is_kw("while") {
            self.bump();
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let (body, _) = self.block()?;
            StmtKind::While { cond, body }
        } else if self.is_kw("assert") {
            self.bump();
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            StmtKind::Assert(cond)
        } else if self.is_kw("error") {
            self.bump();
            self.expect_sym(";")?;
            StmtKind::Error
        } else if self.is_kw("create") {
            self.bump();
            self.expect_sym("(")?;
            let routine = self.ident()?;
            let mut args = Vec::new();
            while self.is_sym(",") {
                self.bump();
                args.push(self.literal()?);
            }
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            StmtKind::Create { routine, args }
        } else if self.is_kw("join") {
            self.bump();
            self.expect_sym("(")?;
            let routine = self.ident()?;
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            StmtKind::Join { routine }
        } else {
            let target = self.ident()?;
            self.expect_sym("=")?;
            let value = self.expr()?;
            self.expect_sym(";")?;
            StmtKind::Assign { target, value }
        };
        Ok(Stmt { kind, line })
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Sym(s) = self.peek().tok else {
            return None;
        };
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.expr_above(0)
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn expr_above(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec <= min_prec {
                break;
            }
            self.bump();
            let rhs = self.expr_above(prec)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        if self.is_sym("!") {
            self.bump();
            return Ok(Expr::Not(alloc::boxed::Box::new(self.unary()?)));
        }
        if self.is_sym("*") {
            self.bump();
            return Ok(Expr::Nondet);
        }
        if self.is_sym("-") && matches!(self.peek_at(1), Tok::Int(_)) {
            self.bump();
            return Ok(Expr::Int(self.int_literal(true)?));
        }
        if self.is_sym("(") {
            self.bump();
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        match self.peek().tok.clone() {
            Tok::Int(_) => Ok(Expr::Int(self.int_literal(false)?)),
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(_) => Ok(Expr::Var(self.ident()?)),
            other => {
                let msg = alloc::format!("expected expression, found {}", Self::describe(&other));
                self.error(msg)
            }
        }
    }
}

fn check_references(program: &SourceProgram) -> Result<(), FrontendError> {
    fn walk(program: &SourceProgram, stmts: &[Stmt]) -> Result<(), FrontendError> {
        for s in stmts {
            match &s.kind {
                StmtKind::Create { routine, .. } | StmtKind::Join { routine } => {
                    if program.routine(routine).is_none() {
                        return Err(FrontendError::UnknownRoutine { name: routine.clone() });
                    }
                }
                StmtKind::If {
                    then_block, else_block, ..
                } => {
                    walk(program, then_block)?;
                    if let Some(e) = else_block {
                        walk(program, e)?;
                    }
                }
                StmtKind::While { body, .. } => walk(program, body)?,
                _ => {}
            }
        }
        Ok(())
    }
    if program.routine(&program.entry).is_none() {
        return Err(FrontendError::MissingEntry);
    }
    for r in &program.routines {
        walk(program, &r.body)?;
    }
    Ok(())
}

/// Parse MTIR source text.
pub fn parse(text: &str) -> Result<SourceProgram, FrontendError> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, pos: 0 };
    let program = parser.program()?;
    check_references(&program)?;
    Ok(program)
}
