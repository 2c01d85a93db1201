//! Arithmetic expression grammar for potentials and forcing functions.
//!
//! A small recursive-descent parser over one free variable `x`. Binary
//! operators `+ - * / ^` follow the usual precedence (`^` above unary
//! minus, then `* /`, then `+ -`); `^` is right-associative, the rest are
//! left-associative. The function set is fixed: `sin`, `cos`, `exp`,
//! `sinh`, `cosh`, `sqrt`, `abs`, `log` (natural).

use std::fmt;

use crate::error::ExprError;

/// One of the supported unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sinh,
    Cosh,
    Sqrt,
    Abs,
    Log,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Log => "log",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "log" => Func::Log,
            _ => return None,
        })
    }
}

/// Binary operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parsed expression tree over the variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parses `src` into an expression tree.
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut parser = Parser::new(src);
        let expr = parser.parse_sum()?;
        parser.skip_ws();
        if parser.pos < parser.src.len() {
            return Err(ExprError::Syntax {
                offset: parser.pos,
                message: format!("unexpected input `{}`", parser.rest_preview()),
            });
        }
        Ok(expr)
    }

    /// Evaluates the expression at `x`, reporting domain errors with the
    /// offending abscissa.
    pub fn eval(&self, x: f64) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var => x,
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(x)?;
                let b = b.eval(x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(ExprError::Domain {
                                x,
                                message: "division by zero".into(),
                            });
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(x)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sinh => v.sinh(),
                    Func::Cosh => v.cosh(),
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(ExprError::Domain {
                                x,
                                message: format!("sqrt of negative value {v}"),
                            });
                        }
                        v.sqrt()
                    }
                    Func::Abs => v.abs(),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(ExprError::Domain {
                                x,
                                message: format!("log of non-positive value {v}"),
                            });
                        }
                        v.ln()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain {
                x,
                message: "non-finite result".into(),
            })
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Const(_) | Expr::Var | Expr::Call(..) => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn paren(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
            if e.precedence() < min_prec {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Var => write!(f, "x"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                paren(f, e, 3)
            }
            Expr::Bin(op, a, b) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                // Left-associative operators need strictly tighter binding on
                // the right; `^` is right-associative so it is the mirror case.
                if *op == BinOp::Pow {
                    paren(f, a, prec + 1)?;
                    write!(f, " {sym} ")?;
                    paren(f, b, prec)
                } else {
                    paren(f, a, prec)?;
                    write!(f, " {sym} ")?;
                    paren(f, b, prec + 1)
                }
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn rest_preview(&self) -> String {
        let rest = &self.src[self.pos..];
        let take = rest.len().min(8);
        String::from_utf8_lossy(&rest[..take]).into_owned()
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_product()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.parse_product()?;
                lhs = Expr::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.parse_product()?;
                lhs = Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.parse_unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.parse_unary()?;
                lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.parse_unary()?;
                lhs = Expr::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            let inner = self.parse_unary()?;
            Ok(Expr::Neg(Box::new(inner)))
        } else if self.eat(b'+') {
            self.parse_unary()
        } else {
            self.parse_power()
        }
    }

    fn parse_power(&mut self) -> Result<Expr, ExprError> {
        let base = self.parse_atom()?;
        if self.eat(b'^') {
            // Right-associative; the exponent admits a leading sign.
            let exp = self.parse_unary()?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn parse_atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_sum()?;
                if !self.eat(b')') {
                    return Err(ExprError::Syntax {
                        offset: self.pos,
                        message: "expected `)`".into(),
                    });
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.parse_ident(),
            _ => Err(ExprError::Syntax {
                offset: self.pos,
                message: if self.pos >= self.src.len() {
                    "unexpected end of input".into()
                } else {
                    format!("unexpected `{}`", self.rest_preview())
                },
            }),
        }
    }

    fn parse_number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == b'.')
        {
            self.pos += 1;
        }
        // Exponent suffix: e or E, optional sign, digits.
        if self.src.get(self.pos).is_some_and(|c| matches!(c, b'e' | b'E')) {
            let mut probe = self.pos + 1;
            if self.src.get(probe).is_some_and(|c| matches!(c, b'+' | b'-')) {
                probe += 1;
            }
            if self.src.get(probe).is_some_and(|c| c.is_ascii_digit()) {
                probe += 1;
                while self.src.get(probe).is_some_and(|c| c.is_ascii_digit()) {
                    probe += 1;
                }
                self.pos = probe;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map(Expr::Const).map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("invalid number `{text}`"),
        })
    }

    fn parse_ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if name == "x" {
            return Ok(Expr::Var);
        }
        if let Some(func) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(ExprError::Syntax {
                    offset: self.pos,
                    message: format!("expected `(` after `{name}`"),
                });
            }
            let arg = self.parse_sum()?;
            if !self.eat(b')') {
                return Err(ExprError::Syntax {
                    offset: self.pos,
                    message: "expected `)`".into(),
                });
            }
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        Err(ExprError::UnknownIdentifier {
            name: name.into(),
            offset: start,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval_str(src: &str, x: f64) -> f64 {
        Expr::parse(src).unwrap().eval(x).unwrap()
    }

    #[test]
    fn parses_constants_and_polynomials() {
        assert_eq!(eval_str("0", 3.7), 0.0);
        assert_eq!(eval_str("x^2 - 1", 2.0), 3.0);
        assert_eq!(eval_str("2*cos(2*x)", 0.0), 2.0);
    }

    #[test]
    fn evaluates_named_functions() {
        assert!((eval_str("sin(x)", std::f64::consts::FRAC_PI_2) - 1.0).abs() < 1e-15);
        assert_eq!(eval_str("exp(0*x)", 7.3), 1.0);
        assert!((eval_str("log(exp(x))", 2.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ binds above unary minus and is right-associative.
        assert_eq!(eval_str("-x^2", 3.0), -9.0);
        assert_eq!(eval_str("2^3^2", 0.0), 512.0);
        assert_eq!(eval_str("2^-1", 0.0), 0.5);
        assert_eq!(eval_str("8 - 3 - 2", 0.0), 3.0);
        assert_eq!(eval_str("8 / 2 / 2", 0.0), 2.0);
        assert_eq!(eval_str("1 + 2 * 3", 0.0), 7.0);
    }

    #[test]
    fn division_by_zero_reports_abscissa() {
        let expr = Expr::parse("1/x").unwrap();
        match expr.eval(0.0) {
            Err(ExprError::Domain { x, .. }) => assert_eq!(x, 0.0),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn log_of_nonpositive_is_domain_error() {
        let expr = Expr::parse("log(x)").unwrap();
        assert!(matches!(expr.eval(-1.0), Err(ExprError::Domain { .. })));
        assert!(matches!(expr.eval(0.0), Err(ExprError::Domain { .. })));
    }

    #[test]
    fn syntax_errors_carry_byte_offsets() {
        match Expr::parse("1 + * 2") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match Expr::parse("2*y + 1") {
            Err(ExprError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "y");
                assert_eq!(offset, 2);
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
        match Expr::parse("sin x") {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn trailing_garbage_rejected() {
        assert!(matches!(
            Expr::parse("1 + 2 )"),
            Err(ExprError::Syntax { offset: 6, .. })
        ));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-10.0..10.0f64).prop_map(Expr::Const),
            Just(Expr::Var),
        ];
        leaf.prop_recursive(5, 64, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                    BinOp::Add,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                    BinOp::Sub,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                    BinOp::Mul,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), (1.0..10.0f64)).prop_map(|(a, d)| Expr::Bin(
                    BinOp::Div,
                    Box::new(a),
                    Box::new(Expr::Const(d))
                )),
                inner.clone().prop_map(|e| Expr::Call(Func::Sin, Box::new(e))),
                inner.clone().prop_map(|e| Expr::Call(Func::Cos, Box::new(e))),
                inner.prop_map(|e| Expr::Call(Func::Cosh, Box::new(e))),
            ]
        })
    }

    proptest! {
        // Parse-print-parse fixpoint: the printed form evaluates identically
        // on a 100-point grid.
        #[test]
        fn print_parse_fixpoint(expr in arb_expr()) {
            let printed = expr.to_string();
            let reparsed = Expr::parse(&printed).unwrap();
            for i in 0..100 {
                let x = -2.0 + 4.0 * (i as f64) / 99.0;
                let (a, b) = match (expr.eval(x), reparsed.eval(x)) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(_), Err(_)) => continue,
                    (a, b) => panic!("eval disagreement at x={x}: {a:?} vs {b:?}"),
                };
                let scale = a.abs().max(1.0);
                prop_assert!((a - b).abs() <= 1e-12 * scale, "x={x}: {a} vs {b}");
            }
        }
    }
}
