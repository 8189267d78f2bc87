//! Readers for the s-expression and infix forms of [`Expr`].

use super::expr::{BinOp, Expr, Func};
use crate::simnet::{ObsVector, OBS_DIM};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Op(char),
}

/// In s-expressions a `-` directly followed by a digit is always a sign;
/// in infix text it is a sign only where an operand is expected.
fn tokenize(s: &str, sexpr: bool) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            out.push(Tok::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Tok::RParen);
            i += 1;
        } else if "+*/".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else if c == '-' {
            if chars.get(i + 1).is_some_and(|n| n.is_ascii_digit() || *n == '.') && (sexpr || starts_operand(&out)) {
                let (v, j) = read_number(&chars, i)?;
                out.push(Tok::Num(v));
                i = j;
            } else {
                out.push(Tok::Op('-'));
                i += 1;
            }
        } else if c.is_ascii_digit() || c == '.' {
            let (v, j) = read_number(&chars, i)?;
            out.push(Tok::Num(v));
            i = j;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else {
            return Err(Error::Parse(format!("unexpected character '{c}' at offset {i}")));
        }
    }
    Ok(out)
}

/// True when the previous token cannot end an operand, so a following `-`
/// is a sign rather than subtraction.
fn starts_operand(prev: &[Tok]) -> bool {
    !matches!(prev.last(), Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::RParen))
}

fn read_number(chars: &[char], start: usize) -> Result<(f64, usize)> {
    let mut i = start;
    if chars[i] == '-' {
        i += 1;
    }
    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
        i += 1;
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
            j += 1;
        }
        if j < chars.len() && chars[j].is_ascii_digit() {
            i = j;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    let text: String = chars[start..i].iter().collect();
    text.parse::<f64>()
        .map(|v| (v, i))
        .map_err(|_| Error::Parse(format!("bad number '{text}'")))
}

fn input_index(name: &str) -> Option<usize> {
    if let Some(p) = ObsVector::field_index(name) {
        return Some(p);
    }
    let rest = name.strip_prefix('x')?;
    let p: usize = rest.parse().ok()?;
    (p < OBS_DIM).then_some(p)
}

struct Cursor {
    toks: Vec<Tok>,
    pos: usize,
}

impl Cursor {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<Tok> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Parse("unexpected end of input".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        let t = self.next()?;
        if t == want {
            Ok(())
        } else {
            Err(Error::Parse(format!("expected {want:?}, found {t:?}")))
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.next()? {
            Tok::Num(v) => Ok(v),
            t => Err(Error::Parse(format!("expected a number, found {t:?}"))),
        }
    }

    fn finish(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(Error::Parse(format!("trailing input at {t:?}"))),
        }
    }
}

/// Reads the canonical s-expression form written by [`Expr::to_sexpr`].
pub fn parse_sexpr(text: &str) -> Result<Expr> {
    let mut c = Cursor {
        toks: tokenize(text, true)?,
        pos: 0,
    };
    let e = sexpr(&mut c)?;
    c.finish()?;
    e.validate()?;
    Ok(e)
}

fn sexpr(c: &mut Cursor) -> Result<Expr> {
    match c.next()? {
        Tok::Num(v) => Ok(Expr::Const(v)),
        Tok::Ident(name) => input_index(&name)
            .map(Expr::Input)
            .ok_or_else(|| Error::Parse(format!("unknown input '{name}'"))),
        Tok::LParen => {
            let head = c.next()?;
            let e = match head {
                Tok::Op(op) => {
                    let op = binop(op)?;
                    let l = sexpr(c)?;
                    let r = sexpr(c)?;
                    Expr::binary(op, l, r)
                }
                Tok::Ident(name) if name == "affine" => {
                    let fname = match c.next()? {
                        Tok::Ident(n) => n,
                        t => return Err(Error::Parse(format!("expected a function name, found {t:?}"))),
                    };
                    let func = Func::from_name(&fname).ok_or_else(|| Error::Parse(format!("unknown function '{fname}'")))?;
                    let (a, b, cc, d) = (c.number()?, c.number()?, c.number()?, c.number()?);
                    Expr::affine(func, a, b, cc, d, sexpr(c)?)
                }
                Tok::Ident(name) => {
                    let f = Func::from_name(&name).ok_or_else(|| Error::Parse(format!("unknown function '{name}'")))?;
                    Expr::unary(f, sexpr(c)?)
                }
                t => return Err(Error::Parse(format!("unexpected {t:?} after '('"))),
            };
            c.expect(Tok::RParen)?;
            Ok(e)
        }
        t => Err(Error::Parse(format!("unexpected {t:?}"))),
    }
}

fn binop(c: char) -> Result<BinOp> {
    match c {
        '+' => Ok(BinOp::Add),
        '-' => Ok(BinOp::Sub),
        '*' => Ok(BinOp::Mul),
        '/' => Ok(BinOp::Div),
        _ => Err(Error::Parse(format!("unknown operator '{c}'"))),
    }
}

/// Reads infix text such as `1.3 - lambda / 5 - square(0.9 * delta_lambda + 1) / 3`.
/// Inputs are observation field names or `x0`..`x9`.
pub fn parse_infix(text: &str) -> Result<Expr> {
    let mut c = Cursor {
        toks: tokenize(text, false)?,
        pos: 0,
    };
    let e = infix_sum(&mut c)?;
    c.finish()?;
    e.validate()?;
    Ok(e)
}

fn infix_sum(c: &mut Cursor) -> Result<Expr> {
    let mut lhs = infix_product(c)?;
    while let Some(Tok::Op(op @ ('+' | '-'))) = c.peek().cloned() {
        c.pos += 1;
        let rhs = infix_product(c)?;
        lhs = Expr::binary(binop(op)?, lhs, rhs);
    }
    Ok(lhs)
}

fn infix_product(c: &mut Cursor) -> Result<Expr> {
    let mut lhs = infix_unary(c)?;
    while let Some(Tok::Op(op @ ('*' | '/'))) = c.peek().cloned() {
        c.pos += 1;
        let rhs = infix_unary(c)?;
        lhs = Expr::binary(binop(op)?, lhs, rhs);
    }
    Ok(lhs)
}

fn infix_unary(c: &mut Cursor) -> Result<Expr> {
    if c.peek() == Some(&Tok::Op('-')) {
        c.pos += 1;
        return Ok(match infix_unary(c)? {
            Expr::Const(v) => Expr::Const(-v),
            e => Expr::binary(BinOp::Sub, Expr::Const(0.0), e),
        });
    }
    infix_primary(c)
}

fn infix_primary(c: &mut Cursor) -> Result<Expr> {
    match c.next()? {
        Tok::Num(v) => Ok(Expr::Const(v)),
        Tok::LParen => {
            let e = infix_sum(c)?;
            c.expect(Tok::RParen)?;
            Ok(e)
        }
        Tok::Ident(name) => {
            if c.peek() == Some(&Tok::LParen) {
                let f = Func::from_name(&name).ok_or_else(|| Error::Parse(format!("unknown function '{name}'")))?;
                c.pos += 1;
                let arg = infix_sum(c)?;
                c.expect(Tok::RParen)?;
                Ok(Expr::unary(f, arg))
            } else {
                input_index(&name)
                    .map(Expr::Input)
                    .ok_or_else(|| Error::Parse(format!("unknown input '{name}'")))
            }
        }
        t => Err(Error::Parse(format!("unexpected {t:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sexpr_round_trip_is_identical() {
        let e = Expr::binary(
            BinOp::Sub,
            Expr::affine(Func::Tanh, 2.0, -1.0, 3.0, -0.5, Expr::input(7)),
            Expr::unary(Func::Square, Expr::binary(BinOp::Div, Expr::Const(-1e-7), Expr::input(0))),
        );
        assert_eq!(parse_sexpr(&e.to_sexpr()).unwrap(), e);
    }

    #[test]
    fn infix_precedence() {
        let e = parse_infix("1 - 2 * x1 / 4 - -3").unwrap();
        assert_eq!(e.eval_raw(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 3.5);
        let e = parse_infix("2 * (lambda - 1)").unwrap();
        assert_eq!(e.eval_raw(&[3.0; 10]), 4.0);
    }

    #[test]
    fn malformed_text_is_rejected() {
        assert!(parse_infix("1 +").is_err());
        assert!(parse_infix("foo(1)").is_err());
        assert!(parse_sexpr("(+ 1)").is_err());
        assert!(parse_sexpr("x12").is_err());
        assert!(parse_infix("1 2").is_err());
    }
}
