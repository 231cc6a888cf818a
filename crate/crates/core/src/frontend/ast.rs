//! Surface syntax of MTIR programs.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarType {
    Int,
    Bool,
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalarType::Int => "int",
            ScalarType::Bool => "bool",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
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
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    /// `*`: an arbitrary value.
    Nondet,
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    /// 1-based source line of the statement's first token.
    pub line: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Assign {
        target: String,
        value: Expr,
    },
    Decl {
        ty: ScalarType,
        name: String,
        value: Expr,
    },
    If {
        cond: Expr,
        then_block: Vec<Stmt>,
        else_block: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Assert(Expr),
    /// `error;`, equivalent to `assert(false);`.
    Error,
    Create {
        routine: String,
        args: Vec<i64>,
    },
    Join {
        routine: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalDecl {
    pub name: String,
    pub ty: ScalarType,
    pub init: i64,
    pub line: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Routine {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub line: u32,
    /// Line of the closing brace.
    pub end_line: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProgram {
    pub globals: Vec<GlobalDecl>,
    pub routines: Vec<Routine>,
    pub entry: String,
}

pub const ENTRY_ROUTINE: &str = "main";

impl SourceProgram {
    pub fn routine(&self, name: &str) -> Option<&Routine> {
        self.routines.iter().find(|r| r.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&GlobalDecl> {
        self.globals.iter().find(|g| g.name == name)
    }

    /// Copy with every source position zeroed, for structural comparison.
    pub fn without_lines(&self) -> SourceProgram {
        fn strip(stmts: &[Stmt]) -> Vec<Stmt> {
            stmts
                .iter()
                .map(|s| Stmt {
                    line: 0,
                    kind: match &s.kind {
                        StmtKind::If {
                            cond,
                            then_block,
                            else_block,
                        } => StmtKind::If {
                            cond: cond.clone(),
                            then_block: strip(then_block),
                            else_block: else_block.as_deref().map(strip),
                        },
                        StmtKind::While { cond, body } => StmtKind::While {
                            cond: cond.clone(),
                            body: strip(body),
                        },
                        other => other.clone(),
                    },
                })
                .collect()
        }
        SourceProgram {
            globals: self
                .globals
                .iter()
                .map(|g| GlobalDecl { line: 0, ..g.clone() })
                .collect(),
            routines: self
                .routines
                .iter()
                .map(|r| Routine {
                    name: r.name.clone(),
                    params: r.params.clone(),
                    body: strip(&r.body),
                    line: 0,
                    end_line: 0,
                })
                .collect(),
            entry: self.entry.clone(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Nondet => f.write_str("*"),
            Expr::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expr::Not(inner) => write!(f, "!{inner}"),
        }
    }
}

fn write_block(f: &mut fmt::Formatter<'_>, stmts: &[Stmt], depth: usize) -> fmt::Result {
    f.write_str("{\n")?;
    for stmt in stmts {
        write_stmt(f, stmt, depth + 1)?;
    }
    write!(f, "{:width$}}}", "", width = depth * 2)
}

fn write_stmt(f: &mut fmt::Formatter<'_>, stmt: &Stmt, depth: usize) -> fmt::Result {
    write!(f, "{:width$}", "", width = depth * 2)?;
    match &stmt.kind {
        StmtKind::Assign { target, value } => writeln!(f, "{target} = {value};"),
        StmtKind::Decl { ty, name, value } => writeln!(f, "{ty} {name} = {value};"),
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            write!(f, "if ({cond}) ")?;
            write_block(f, then_block, depth)?;
            if let Some(else_block) = else_block {
                f.write_str(" else ")?;
                write_block(f, else_block, depth)?;
            }
            f.write_str("\n")
        }
        StmtKind::While { cond, body } => {
            write!(f, "while ({cond}) ")?;
            write_block(f, body, depth)?;
            f.write_str("\n")
        }
        StmtKind::Assert(cond) => writeln!(f, "assert({cond});"),
        StmtKind::Error => writeln!(f, "error;"),
        StmtKind::Create { routine, args } => {
            write!(f, "create({routine}")?;
            for arg in args {
                write!(f, ", {arg}")?;
            }
            writeln!(f, ");")
        }
        StmtKind::Join { routine } => writeln!(f, "join({routine});"),
    }
}

impl fmt::Display for SourceProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.globals {
            let init = match g.ty {
                ScalarType::Bool if g.init == 0 => "false".into(),
                ScalarType::Bool => "true".into(),
                ScalarType::Int => alloc::format!("{}", g.init),
            };
            writeln!(f, "{} {} = {init};", g.ty, g.name)?;
        }
        for r in &self.routines {
            write!(f, "thread {}(", r.name)?;
            for (i, p) in r.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "int {p}")?;
            }
            f.write_str(") ")?;
            write_block(f, &r.body, 0)?;
            f.write_str("\n")?;
        }
        Ok(())
    }
}
