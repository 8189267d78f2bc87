use std::fmt;

use serde::{Deserialize, Serialize};

use crate::simnet::OBS_DIM;

pub const LOG_FLOOR: f64 = 1e-6;
pub const DIV_FLOOR: f64 = 1e-6;
pub const EXP_CEIL: f64 = 80.0;

/// Unary functions of the monotone basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Func {
    Identity,
    Square,
    Cube,
    Sqrt,
    Exp,
    Log,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Identity,
        Func::Square,
        Func::Cube,
        Func::Sqrt,
        Func::Exp,
        Func::Log,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Identity => "id",
            Func::Square => "square",
            Func::Cube => "cube",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Protected evaluation.
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Identity => x,
            Func::Square => x * x,
            Func::Cube => x * x * x,
            Func::Sqrt => x.max(0.0).sqrt(),
            Func::Exp => x.min(EXP_CEIL).exp(),
            Func::Log => x.max(LOG_FLOOR).ln(),
            Func::Tanh => x.tanh(),
        }
    }

    /// Derivative of [`Func::apply`]; zero where a guard is active.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Func::Identity => 1.0,
            Func::Square => 2.0 * x,
            Func::Cube => 3.0 * x * x,
            Func::Sqrt => {
                if x > 0.0 {
                    0.5 / x.sqrt()
                } else {
                    0.0
                }
            }
            Func::Exp => {
                if x < EXP_CEIL {
                    x.exp()
                } else {
                    0.0
                }
            }
            Func::Log => {
                if x > LOG_FLOOR {
                    1.0 / x
                } else {
                    0.0
                }
            }
            Func::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub const ALL: [BinOp; 4] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn apply(self, l: f64, r: f64) -> f64 {
        match self {
            BinOp::Add => l + r,
            BinOp::Sub => l - r,
            BinOp::Mul => l * r,
            BinOp::Div => l / guard_den(r),
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Denominators closer to zero than [`DIV_FLOOR`] are pushed out to it,
/// keeping their sign (zero counts as positive).
pub fn guard_den(r: f64) -> f64 {
    if r.abs() >= DIV_FLOOR {
        r
    } else if r < 0.0 {
        -DIV_FLOOR
    } else {
        DIV_FLOOR
    }
}

/// Expression tree over the observation inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    Input(usize),
    Unary(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `c * f(a * arg + b) + d`.
    Affine {
        func: Func,
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        arg: Box<Expr>,
    },
}

/// Clip to `[-1, 1]`, mapping NaN to 0.
pub fn clip_action(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-1.0, 1.0)
    }
}

impl Expr {
    pub fn input(p: usize) -> Expr {
        Expr::Input(p)
    }

    pub fn unary(f: Func, e: Expr) -> Expr {
        Expr::Unary(f, Box::new(e))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn affine(func: Func, a: f64, b: f64, c: f64, d: f64, arg: Expr) -> Expr {
        Expr::Affine {
            func,
            a,
            b,
            c,
            d,
            arg: Box::new(arg),
        }
    }

    /// Sum of `terms`, left-associated; `Const(0)` when empty.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut it = terms.into_iter();
        match it.next() {
            None => Expr::Const(0.0),
            Some(first) => it.fold(first, |acc, t| Expr::binary(BinOp::Add, acc, t)),
        }
    }

    /// Tree value before the final clip.
    pub fn eval_raw(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Input(p) => x[*p],
            Expr::Unary(f, e) => f.apply(e.eval_raw(x)),
            Expr::Binary(op, l, r) => op.apply(l.eval_raw(x), r.eval_raw(x)),
            Expr::Affine { func, a, b, c, d, arg } => c * func.apply(a * arg.eval_raw(x) + b) + d,
        }
    }

    /// Action in `[-1, 1]`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        clip_action(self.eval_raw(x))
    }

    /// Number of nodes; an affine wrapper counts as one node plus its
    /// four constants.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Input(_) => 1,
            Expr::Unary(_, e) => 1 + e.size(),
            Expr::Binary(_, l, r) => 1 + l.size() + r.size(),
            Expr::Affine { arg, .. } => 5 + arg.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Input(_) => 1,
            Expr::Unary(_, e) => 1 + e.depth(),
            Expr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
            Expr::Affine { arg, .. } => 1 + arg.depth(),
        }
    }

    pub fn has_inputs(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Input(_) => true,
            Expr::Unary(_, e) => e.has_inputs(),
            Expr::Binary(_, l, r) => l.has_inputs() || r.has_inputs(),
            Expr::Affine { arg, .. } => arg.has_inputs(),
        }
    }

    /// Input indices used, ascending and deduplicated.
    pub fn inputs(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Input(p) = e {
                out.push(*p);
            }
        });
        out.sort_unstable();
        out.dedup();
        out
    }

    fn visit<F: FnMut(&Expr)>(&self, f: &mut F) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Input(_) => {}
            Expr::Unary(_, e) => e.visit(f),
            Expr::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Expr::Affine { arg, .. } => arg.visit(f),
        }
    }

    /// Structural validation: input indices in range, constants finite.
    pub fn validate(&self) -> crate::Result<()> {
        let mut err = None;
        self.visit(&mut |e| match e {
            Expr::Input(p) if *p >= OBS_DIM => err = Some(format!("input index {p} out of range")),
            Expr::Const(c) if !c.is_finite() => err = Some(format!("non-finite constant {c}")),
            Expr::Affine { a, b, c, d, .. } if ![a, b, c, d].iter().all(|v| v.is_finite()) => {
                err = Some("non-finite affine parameter".into())
            }
            _ => {}
        });
        match err {
            Some(m) => Err(crate::Error::Parse(m)),
            None => Ok(()),
        }
    }

    /// Numeric constants in pre-order (affine parameters as `a, b, c, d`).
    pub fn constants(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_constants(&mut out);
        out
    }

    fn collect_constants(&self, out: &mut Vec<f64>) {
        match self {
            Expr::Const(c) => out.push(*c),
            Expr::Input(_) => {}
            Expr::Unary(_, e) => e.collect_constants(out),
            Expr::Binary(_, l, r) => {
                l.collect_constants(out);
                r.collect_constants(out);
            }
            Expr::Affine { a, b, c, d, arg, .. } => {
                out.extend_from_slice(&[*a, *b, *c, *d]);
                arg.collect_constants(out);
            }
        }
    }

    pub fn num_constants(&self) -> usize {
        match self {
            Expr::Const(_) => 1,
            Expr::Input(_) => 0,
            Expr::Unary(_, e) => e.num_constants(),
            Expr::Binary(_, l, r) => l.num_constants() + r.num_constants(),
            Expr::Affine { arg, .. } => 4 + arg.num_constants(),
        }
    }

    /// Replaces the constants in the order of [`Expr::constants`].
    pub fn set_constants(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.num_constants());
        let mut i = 0;
        self.assign_constants(values, &mut i);
    }

    fn assign_constants(&mut self, values: &[f64], i: &mut usize) {
        match self {
            Expr::Const(c) => {
                *c = values[*i];
                *i += 1;
            }
            Expr::Input(_) => {}
            Expr::Unary(_, e) => e.assign_constants(values, i),
            Expr::Binary(_, l, r) => {
                l.assign_constants(values, i);
                r.assign_constants(values, i);
            }
            Expr::Affine { a, b, c, d, arg, .. } => {
                *a = values[*i];
                *b = values[*i + 1];
                *c = values[*i + 2];
                *d = values[*i + 3];
                *i += 4;
                arg.assign_constants(values, i);
            }
        }
    }

    /// Reverse-mode gradient of the raw value: accumulates
    /// `upstream * d(raw)/d(constants)` into `const_grad` (same order as
    /// [`Expr::constants`]) and `upstream * d(raw)/d(x)` into `input_grad`.
    pub fn backward_raw(&self, x: &[f64], upstream: f64, const_grad: &mut [f64], input_grad: &mut [f64]) {
        let mut i = 0;
        self.backward_inner(x, upstream, const_grad, input_grad, &mut i);
    }

    fn backward_inner(&self, x: &[f64], up: f64, cg: &mut [f64], ig: &mut [f64], i: &mut usize) {
        match self {
            Expr::Const(_) => {
                cg[*i] += up;
                *i += 1;
            }
            Expr::Input(p) => ig[*p] += up,
            Expr::Unary(f, e) => {
                let v = e.eval_raw(x);
                e.backward_inner(x, up * f.derivative(v), cg, ig, i);
            }
            Expr::Binary(op, l, r) => {
                let (lv, rv) = (l.eval_raw(x), r.eval_raw(x));
                let (dl, dr) = match op {
                    BinOp::Add => (1.0, 1.0),
                    BinOp::Sub => (1.0, -1.0),
                    BinOp::Mul => (rv, lv),
                    BinOp::Div => {
                        let den = guard_den(rv);
                        let dr = if rv.abs() >= DIV_FLOOR { -lv / (den * den) } else { 0.0 };
                        (1.0 / den, dr)
                    }
                };
                l.backward_inner(x, up * dl, cg, ig, i);
                r.backward_inner(x, up * dr, cg, ig, i);
            }
            Expr::Affine { func, a, b, c, arg, .. } => {
                let v = arg.eval_raw(x);
                let z = a * v + b;
                let fz = func.apply(z);
                let dfz = func.derivative(z);
                cg[*i] += up * c * dfz * v;
                cg[*i + 1] += up * c * dfz;
                cg[*i + 2] += up * fz;
                cg[*i + 3] += up;
                *i += 4;
                arg.backward_inner(x, up * c * dfz * a, cg, ig, i);
            }
        }
    }

    /// Folds every input-free subtree into a constant.
    pub fn fold_constants(&self) -> Expr {
        if !self.has_inputs() {
            return Expr::Const(self.eval_raw(&[0.0; OBS_DIM]));
        }
        match self {
            Expr::Const(_) | Expr::Input(_) => self.clone(),
            Expr::Unary(f, e) => Expr::unary(*f, e.fold_constants()),
            Expr::Binary(op, l, r) => Expr::binary(*op, l.fold_constants(), r.fold_constants()),
            Expr::Affine { func, a, b, c, d, arg } => Expr::affine(*func, *a, *b, *c, *d, arg.fold_constants()),
        }
    }

    /// Canonical s-expression text, re-read by [`super::parse_sexpr`].
    pub fn to_sexpr(&self) -> String {
        let mut s = String::new();
        self.write_sexpr(&mut s);
        s
    }

    fn write_sexpr(&self, s: &mut String) {
        match self {
            Expr::Const(c) => s.push_str(&format_number(*c)),
            Expr::Input(p) => s.push_str(&format!("x{p}")),
            Expr::Unary(f, e) => {
                s.push('(');
                s.push_str(f.name());
                s.push(' ');
                e.write_sexpr(s);
                s.push(')');
            }
            Expr::Binary(op, l, r) => {
                s.push('(');
                s.push_str(op.symbol());
                s.push(' ');
                l.write_sexpr(s);
                s.push(' ');
                r.write_sexpr(s);
                s.push(')');
            }
            Expr::Affine { func, a, b, c, d, arg } => {
                s.push_str(&format!(
                    "(affine {} {} {} {} {} ",
                    func.name(),
                    format_number(*a),
                    format_number(*b),
                    format_number(*c),
                    format_number(*d)
                ));
                arg.write_sexpr(s);
                s.push(')');
            }
        }
    }

    /// Human-readable infix form with observation field names, re-read by
    /// [`super::parse_infix`].
    pub fn to_infix(&self) -> String {
        self.infix(0, false)
    }

    fn infix(&self, parent_prec: u8, right_side: bool) -> String {
        match self {
            Expr::Const(c) => {
                let t = format_number(*c);
                if *c < 0.0 || t.starts_with('-') {
                    format!("({t})")
                } else {
                    t
                }
            }
            Expr::Input(p) => crate::simnet::ObsVector::FIELD_NAMES[*p].to_string(),
            Expr::Unary(f, e) => format!("{}({})", f.name(), e.infix(0, false)),
            Expr::Binary(op, l, r) => {
                let prec = op.precedence();
                let body = match (op, r.as_ref()) {
                    // `x + -c` reads as `x - c`; both round identically
                    (BinOp::Add | BinOp::Sub, Expr::Const(c)) if *c < 0.0 => {
                        let flipped = if *op == BinOp::Add { "-" } else { "+" };
                        format!("{} {flipped} {}", l.infix(prec, false), format_number(-c))
                    }
                    _ => format!("{} {} {}", l.infix(prec, false), op.symbol(), r.infix(prec, true)),
                };
                if prec < parent_prec || (prec == parent_prec && right_side) {
                    format!("({body})")
                } else {
                    body
                }
            }
            Expr::Affine { func, a, b, c, d, arg } => {
                // unit scales and zero offsets are dropped; both are exact in f64
                let scaled = match (*a == 1.0, *b == 0.0) {
                    (true, true) => arg.infix(0, false),
                    (true, false) => format!("{} {}", arg.infix(1, false), signed_tail(*b)),
                    (false, true) => format!("{} * {}", format_number(*a), arg.infix(2, true)),
                    (false, false) => {
                        format!("{} * {} {}", format_number(*a), arg.infix(2, true), signed_tail(*b))
                    }
                };
                let applied = match func {
                    Func::Identity if *a == 1.0 && *b == 0.0 && *c == 1.0 && *d == 0.0 => {
                        return arg.infix(parent_prec, right_side);
                    }
                    Func::Identity if *c == 1.0 && *d == 0.0 => {
                        return if parent_prec >= 1 { format!("({scaled})") } else { scaled };
                    }
                    Func::Identity if *a == 1.0 && *b == 0.0 => arg.infix(2, true),
                    Func::Identity => format!("({scaled})"),
                    f => format!("{}({scaled})", f.name()),
                };
                let mut body = if *c == 1.0 { applied } else { format!("{} * {applied}", format_number(*c)) };
                if *d != 0.0 {
                    body = format!("{body} {}", signed_tail(*d));
                }
                if parent_prec >= 1 {
                    format!("({body})")
                } else {
                    body
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_infix())
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    let s = format!("{v:?}");
    if s == "-0.0" {
        "0.0".to_string()
    } else {
        s
    }
}

/// `+ v` or `- |v|`.
fn signed_tail(v: f64) -> String {
    if v < 0.0 {
        format!("- {}", format_number(-v))
    } else {
        format!("+ {}", format_number(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_and_projection() {
        assert_eq!(Expr::Const(2.0).eval(&[0.0; 10]), 1.0);
        let mut x = [0.0; 10];
        x[4] = 0.3;
        assert_eq!(Expr::input(4).eval(&x), 0.3);
    }

    #[test]
    fn protected_operators_are_total() {
        let x = [0.0; 10];
        assert_eq!(Expr::unary(Func::Log, Expr::Const(-3.0)).eval_raw(&x), LOG_FLOOR.ln());
        assert_eq!(Expr::unary(Func::Sqrt, Expr::Const(-3.0)).eval_raw(&x), 0.0);
        assert_eq!(Expr::binary(BinOp::Div, Expr::Const(1.0), Expr::Const(0.0)).eval_raw(&x), 1e6);
        assert!(Expr::unary(Func::Exp, Expr::Const(1e9)).eval_raw(&x).is_finite());
        let nan = Expr::binary(
            BinOp::Sub,
            Expr::unary(Func::Cube, Expr::Const(1e200)),
            Expr::unary(Func::Cube, Expr::Const(1e200)),
        );
        assert_eq!(nan.eval(&x), 0.0);
    }

    #[test]
    fn constants_round_trip() {
        let mut e = Expr::binary(
            BinOp::Add,
            Expr::Const(1.0),
            Expr::affine(Func::Tanh, 2.0, -1.0, 3.0, 0.5, Expr::input(0)),
        );
        assert_eq!(e.constants(), vec![1.0, 2.0, -1.0, 3.0, 0.5]);
        e.set_constants(&[5.0, 4.0, 3.0, 2.0, 1.0]);
        assert_eq!(e.constants(), vec![5.0, 4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn folding_keeps_value() {
        let e = Expr::binary(
            BinOp::Mul,
            Expr::binary(BinOp::Add, Expr::Const(1.0), Expr::Const(2.0)),
            Expr::input(3),
        );
        let f = e.fold_constants();
        assert_eq!(f.size(), 3);
        let x = [0.5; 10];
        assert_eq!(e.eval_raw(&x), f.eval_raw(&x));
    }
}
