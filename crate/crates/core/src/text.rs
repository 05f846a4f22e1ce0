//! Canonical text form of programs.
//!
//! ```text
//! set r1 42
//! while r1 {
//!   dec r1
//!   inc r0
//! }
//! eval r2 r1 r0
//! copy r0 r2
//! ```
//!
//! One statement per line. A loop opens with `while rN {` and closes with a
//! lone `}`; `while rN {}` is accepted for an empty body. Indentation is two
//! spaces per level on output and ignored on input. `#` starts a comment.
//! The empty program renders as the empty string.

use std::fmt::Write;

use num_bigint::BigUint;
use thiserror::Error;

use crate::lang::{Program, Register, Statement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    write_block(&program.body, 0, &mut out);
    out
}

fn write_block(body: &[Statement], depth: usize, out: &mut String) {
    for stmt in body {
        for _ in 0..depth {
            out.push_str("  ");
        }
        match stmt {
            Statement::Inc { reg } => writeln!(out, "inc {reg}"),
            Statement::Dec { reg } => writeln!(out, "dec {reg}"),
            Statement::SetConst { reg, value } => writeln!(out, "set {reg} {value}"),
            Statement::Copy { dst, src } => writeln!(out, "copy {dst} {src}"),
            Statement::Eval { dst, prog, arg } => writeln!(out, "eval {dst} {prog} {arg}"),
            Statement::While { reg, body } => {
                writeln!(out, "while {reg} {{").unwrap();
                write_block(body, depth + 1, out);
                for _ in 0..depth {
                    out.push_str("  ");
                }
                writeln!(out, "}}")
            }
        }
        .unwrap();
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = line.split('#').next().unwrap_or("");
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in code.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                tokens.push(Token {
                    text: &code[s..i],
                    column: s + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &code[s..],
            column: s + 1,
        });
    }
    tokens
}

pub fn parse(text: &str) -> Result<Program, ParseError> {
    // Stack of open blocks: (loop register, body so far, opening line).
    let mut open: Vec<(Register, Vec<Statement>, usize)> = Vec::new();
    let mut top: Vec<Statement> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let tokens = tokenize(line);
        let Some(first) = tokens.first() else {
            continue;
        };
        let err = |column: usize, message: String| ParseError {
            line: lineno,
            column,
            message,
        };

        let reg = |i: usize| -> Result<Register, ParseError> {
            let tok = tokens
                .get(i)
                .ok_or_else(|| err(line.len() + 1, "expected register".into()))?;
            parse_register(tok.text)
                .ok_or_else(|| err(tok.column, format!("bad register {:?}", tok.text)))
        };
        let nat = |i: usize| -> Result<BigUint, ParseError> {
            let tok = tokens
                .get(i)
                .ok_or_else(|| err(line.len() + 1, "expected natural".into()))?;
            crate::decimal::parse(tok.text).map_err(|m| err(tok.column, m))
        };
        let arity = |n: usize| -> Result<(), ParseError> {
            match tokens.get(n) {
                Some(extra) => Err(err(extra.column, format!("unexpected {:?}", extra.text))),
                None => Ok(()),
            }
        };

        let current = match open.last_mut() {
            Some((_, body, _)) => body,
            None => &mut top,
        };

        match first.text {
            "inc" => {
                current.push(Statement::Inc { reg: reg(1)? });
                arity(2)?
            }
            "dec" => {
                current.push(Statement::Dec { reg: reg(1)? });
                arity(2)?
            }
            "set" => {
                current.push(Statement::SetConst {
                    reg: reg(1)?,
                    value: nat(2)?,
                });
                arity(3)?
            }
            "copy" => {
                current.push(Statement::Copy {
                    dst: reg(1)?,
                    src: reg(2)?,
                });
                arity(3)?
            }
            "eval" => {
                current.push(Statement::Eval {
                    dst: reg(1)?,
                    prog: reg(2)?,
                    arg: reg(3)?,
                });
                arity(4)?
            }
            "while" => {
                let r = reg(1)?;
                match tokens.get(2).map(|t| t.text) {
                    Some("{") => {
                        arity(3)?;
                        open.push((r, Vec::new(), lineno));
                    }
                    Some("{}") => {
                        arity(3)?;
                        current.push(Statement::While {
                            reg: r,
                            body: Vec::new(),
                        });
                    }
                    _ => {
                        let column = tokens.get(2).map_or(line.len() + 1, |t| t.column);
                        return Err(err(column, "expected `{` after loop register".into()));
                    }
                }
            }
            "}" => {
                arity(1)?;
                let (r, body, _) = open
                    .pop()
                    .ok_or_else(|| err(first.column, "unmatched `}`".into()))?;
                let parent = match open.last_mut() {
                    Some((_, body, _)) => body,
                    None => &mut top,
                };
                parent.push(Statement::While { reg: r, body });
            }
            other => return Err(err(first.column, format!("unknown statement {other:?}"))),
        }
    }

    if let Some((_, _, opened)) = open.last() {
        return Err(ParseError {
            line: *opened,
            column: 1,
            message: "loop opened here is never closed".into(),
        });
    }
    Ok(Program::new(top))
}

fn parse_register(text: &str) -> Option<Register> {
    let digits = text.strip_prefix('r')?;
    crate::decimal::parse(digits).ok().map(Register)
}
