//! Canonical prefix text: `(+ (sin x0) (sin (* x1 x1)))`.

use super::{Primitive, SymbolicTree};
use crate::{DgpError, Result};

fn tokenize(s: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        match c {
            '(' | ')' => {
                if let Some(st) = start.take() {
                    tokens.push(&s[st..i]);
                }
                tokens.push(&s[i..i + 1]);
            }
            c if c.is_whitespace() => {
                if let Some(st) = start.take() {
                    tokens.push(&s[st..i]);
                }
            }
            _ => {
                if start.is_none() {
                    start = Some(i);
                }
            }
        }
    }
    if let Some(st) = start {
        tokens.push(&s[st..]);
    }
    tokens
}

fn primitive_from_symbol(tok: &str) -> Result<Primitive> {
    Ok(match tok {
        "+" => Primitive::Add,
        "-" => Primitive::Sub,
        "*" => Primitive::Mul,
        "/" => Primitive::Div,
        "sin" => Primitive::Sin,
        "cos" => Primitive::Cos,
        "exp" => Primitive::Exp,
        "log" => Primitive::Log,
        "pass" => Primitive::Pass,
        t => match t.strip_prefix('x').map(str::parse::<usize>) {
            Some(Ok(v)) => Primitive::Var(v),
            _ => return Err(DgpError::Parse(format!("unknown symbol `{t}`"))),
        },
    })
}

struct Parser<'a> {
    tokens: Vec<&'a str>,
    pos: usize,
    out: Vec<Primitive>,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<&'a str> {
        let t = self
            .tokens
            .get(self.pos)
            .copied()
            .ok_or_else(|| DgpError::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn expr(&mut self) -> Result<()> {
        match self.next()? {
            "(" => {
                let head = self.next()?;
                let p = primitive_from_symbol(head)?;
                if p.is_terminal() {
                    return Err(DgpError::Parse(format!(
                        "terminal `{head}` cannot be applied"
                    )));
                }
                self.out.push(p);
                for _ in 0..p.arity() {
                    self.expr()?;
                }
                match self.next()? {
                    ")" => Ok(()),
                    t => Err(DgpError::Parse(format!(
                        "`{head}` takes {} operand(s), found extra `{t}`",
                        p.arity()
                    ))),
                }
            }
            ")" => Err(DgpError::Parse("unexpected `)`".into())),
            tok => {
                let p = primitive_from_symbol(tok)?;
                if !p.is_terminal() {
                    return Err(DgpError::Parse(format!(
                        "function `{tok}` must be parenthesized with its operands"
                    )));
                }
                self.out.push(p);
                Ok(())
            }
        }
    }
}

/// Parses the canonical prefix form produced by `SymbolicTree`'s `Display`.
pub fn parse_tree(s: &str) -> Result<SymbolicTree> {
    let mut p = Parser {
        tokens: tokenize(s),
        pos: 0,
        out: Vec::new(),
    };
    p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(DgpError::Parse(format!(
            "trailing input after expression: `{}`",
            p.tokens[p.pos..].join(" ")
        )));
    }
    SymbolicTree::from_prefix(&p.out)
}
