//! Recursive-descent parser for the concrete STL syntax.
//!
//! ```text
//! formula  = conj { "|" conj } ;
//! conj     = clause { "&" clause } ;
//! clause   = temporal | "(" formula ")" | atom ;
//! temporal = ("G" | "F") interval clause | "U" interval "(" formula "," formula ")" ;
//! atom     = "in(" name ")" | "out(" name ")" | "!" clause | affine ;
//! affine   = term { ("+" | "-") term } (">=" | "<=") [sign] number ;
//! term     = number "*" var | number | var ;
//! interval = "[" number "," number "]" ;
//! ```
//!
//! `&` binds tighter than `|`. The empty string parses to the empty
//! conjunction.

use super::formula::{Formula, Interval, Predicate, Relation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Amp,
    Pipe,
    Bang,
    Plus,
    Minus,
    Star,
    Ge,
    Le,
    Num(f64),
    Ident(String),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let single = match c {
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Pipe),
            '!' => Some(Tok::Bang),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            _ => None,
        };
        if let Some(t) = single {
            out.push((start, t));
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
        } else if c == '>' || c == '<' {
            if bytes.get(i + 1) != Some(&b'=') {
                return Err(Error::Syntax {
                    pos: i,
                    msg: format!("expected `{c}=`"),
                });
            }
            out.push((start, if c == '>' { Tok::Ge } else { Tok::Le }));
            i += 2;
        } else if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            return Err(Error::Syntax {
                pos: start,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let mut parts = vec![self.conj()?];
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            Formula::Or(parts)
        })
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut parts = vec![self.clause()?];
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            parts.push(self.clause()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            Formula::And(parts)
        })
    }

    fn clause(&mut self) -> Result<Formula> {
        match (self.peek(), self.peek_at(1)) {
            (Some(Tok::Ident(k)), Some(Tok::LBracket)) if k == "F" || k == "G" => {
                let globally = k == "G";
                self.pos += 1;
                let iv = self.interval()?;
                let inner = Box::new(self.clause()?);
                Ok(if globally {
                    Formula::Globally(iv, inner)
                } else {
                    Formula::Finally(iv, inner)
                })
            }
            (Some(Tok::Ident(k)), Some(Tok::LBracket)) if k == "U" => {
                self.pos += 1;
                let iv = self.interval()?;
                self.expect(Tok::LParen, "`(` after until interval")?;
                let lhs = self.formula()?;
                self.expect(Tok::Comma, "`,` between until operands")?;
                let rhs = self.formula()?;
                self.expect(Tok::RParen, "`)` closing until")?;
                Ok(Formula::Until(iv, Box::new(lhs), Box::new(rhs)))
            }
            (Some(Tok::Ident(k)), Some(Tok::LParen)) if k == "in" || k == "out" => {
                let inside = k == "in";
                self.pos += 2;
                let name = match self.bump() {
                    Some(Tok::Ident(n)) => n,
                    _ => {
                        self.pos -= 1;
                        return self.err("expected region name");
                    }
                };
                self.expect(Tok::RParen, "`)` after region name")?;
                Ok(Formula::Pred(Predicate::Region { name, inside }))
            }
            (Some(Tok::LParen), _) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            (Some(Tok::Bang), _) => {
                self.pos += 1;
                Ok(Formula::Not(Box::new(self.clause()?)))
            }
            (Some(Tok::Num(_) | Tok::Plus | Tok::Minus), _) => self.affine(),
            (Some(Tok::Ident(v)), _) if v == "x1" || v == "x2" => self.affine(),
            (None, _) => self.err("unexpected end of input"),
            _ => self.err("expected a formula"),
        }
    }

    fn interval(&mut self) -> Result<Interval> {
        let at = self.offset();
        self.expect(Tok::LBracket, "`[`")?;
        let lo = self.number()?;
        self.expect(Tok::Comma, "`,` in interval")?;
        let hi = self.number()?;
        self.expect(Tok::RBracket, "`]`")?;
        Interval::new(lo, hi).ok_or(Error::Interval { pos: at, lo, hi })
    }

    fn number(&mut self) -> Result<f64> {
        match self.peek() {
            Some(Tok::Num(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => self.err("expected number"),
        }
    }

    fn affine(&mut self) -> Result<Formula> {
        let mut coeffs = [0.0; 2];
        let mut offset = 0.0;
        let mut first = true;
        loop {
            let sign = match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    1.0
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    -1.0
                }
                _ if first => 1.0,
                Some(Tok::Ge | Tok::Le) => break,
                _ => return self.err("expected `+`, `-`, `>=` or `<=`"),
            };
            first = false;
            match self.bump() {
                Some(Tok::Num(v)) => {
                    if self.peek() == Some(&Tok::Star) {
                        self.pos += 1;
                        let idx = self.var()?;
                        coeffs[idx] += sign * v;
                    } else {
                        offset += sign * v;
                    }
                }
                Some(Tok::Ident(v)) if v == "x1" || v == "x2" => {
                    coeffs[if v == "x1" { 0 } else { 1 }] += sign;
                }
                _ => {
                    self.pos -= 1;
                    return self.err("expected coefficient or variable");
                }
            }
        }
        let rel = match self.bump() {
            Some(Tok::Ge) => Relation::Ge,
            Some(Tok::Le) => Relation::Le,
            _ => unreachable!("loop exits on a relation token"),
        };
        let rhs_sign = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                -1.0
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                1.0
            }
            _ => 1.0,
        };
        let rhs = rhs_sign * self.number()?;
        if rhs != 0.0 {
            offset -= rhs;
        }
        Ok(Formula::Pred(Predicate::Affine {
            coeffs,
            offset,
            rel,
        }))
    }

    fn var(&mut self) -> Result<usize> {
        match self.bump() {
            Some(Tok::Ident(v)) if v == "x1" => Ok(0),
            Some(Tok::Ident(v)) if v == "x2" => Ok(1),
            _ => {
                self.pos -= 1;
                self.err("expected `x1` or `x2`")
            }
        }
    }
}

/// Syntactic layer of a (sub)formula: 0 = boolean combination of
/// predicates, 1 = at most one temporal operator (possibly negated),
/// 2 = task level.
fn layer(f: &Formula) -> Result<u8> {
    Ok(match f {
        Formula::Pred(_) => 0,
        Formula::Not(inner) => {
            let l = layer(inner)?;
            if l == 2 {
                return Err(Error::Stratification(format!(
                    "negation applied to task-level formula `{inner}`"
                )));
            }
            l
        }
        Formula::And(fs) | Formula::Or(fs) => {
            let mut top = 0;
            for c in fs {
                top = top.max(layer(c)?);
            }
            if top == 0 {
                0
            } else {
                2
            }
        }
        Formula::Finally(_, inner) | Formula::Globally(_, inner) => match layer(inner)? {
            0 => 1,
            1 => 2,
            _ => {
                return Err(Error::Stratification(format!(
                    "temporal operator nested over task-level formula `{inner}`"
                )))
            }
        },
        Formula::Until(_, a, b) => {
            if layer(a)? > 0 || layer(b)? > 0 {
                return Err(Error::Stratification(
                    "until operands must be temporal-free".into(),
                ));
            }
            2
        }
    })
}

fn check_top(f: &Formula) -> Result<()> {
    match f {
        Formula::And(fs) | Formula::Or(fs) => fs.iter().try_for_each(check_top),
        Formula::Not(_) if layer(f)? >= 1 => Err(Error::Stratification(format!(
            "negation of a temporal formula at task level: `{f}`"
        ))),
        _ => layer(f).map(|_| ()),
    }
}

/// Checks that negation and nesting respect the task / inner-specification
/// layering of the supported syntax.
pub fn check_stratification(f: &Formula) -> Result<()> {
    check_top(f)
}

pub fn parse(src: &str) -> Result<Formula> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Ok(Formula::And(vec![]));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
    };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    check_stratification(&f)?;
    Ok(f)
}
