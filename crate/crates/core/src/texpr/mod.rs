//! Scalar time expressions: the entry language of problem files.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := power (('*' | '/') power)*
//! power  := unary ('^' power)?          right-associative, integer exponent >= 1
//! unary  := '-' unary | atom
//! atom   := number | 't' | 'pi' | ('sin' | 'cos') '(' expr ')' | '(' expr ')'
//! ```
//!
//! Unary minus binds tighter than `^`, so `-t^2` is `(-t)^2`.

mod parser;

use std::fmt;

use thiserror::Error;

pub use parser::{parse, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at t = {t}")]
    DivisionByZero { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Time,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Time => t,
            Expr::Neg(e) => -e.eval(t)?,
            Expr::Add(a, b) => a.eval(t)? + b.eval(t)?,
            Expr::Sub(a, b) => a.eval(t)? - b.eval(t)?,
            Expr::Mul(a, b) => a.eval(t)? * b.eval(t)?,
            Expr::Div(a, b) => {
                let den = b.eval(t)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero { t });
                }
                a.eval(t)? / den
            }
            Expr::Pow(e, n) => e.eval(t)?.powi(*n as i32),
            Expr::Sin(e) => e.eval(t)?.sin(),
            Expr::Cos(e) => e.eval(t)?.cos(),
        })
    }

    /// `d/dt` of the expression. No simplification is attempted.
    pub fn differentiate(&self) -> Expr {
        use Expr::*;
        match self {
            Const(_) => Const(0.0),
            Time => Const(1.0),
            Neg(e) => Neg(Box::new(e.differentiate())),
            Add(a, b) => Add(Box::new(a.differentiate()), Box::new(b.differentiate())),
            Sub(a, b) => Sub(Box::new(a.differentiate()), Box::new(b.differentiate())),
            Mul(a, b) => Add(
                Box::new(Mul(Box::new(a.differentiate()), b.clone())),
                Box::new(Mul(a.clone(), Box::new(b.differentiate()))),
            ),
            Div(a, b) => Div(
                Box::new(Sub(
                    Box::new(Mul(Box::new(a.differentiate()), b.clone())),
                    Box::new(Mul(a.clone(), Box::new(b.differentiate()))),
                )),
                Box::new(Pow(b.clone(), 2)),
            ),
            Pow(e, n) => {
                let inner = e.differentiate();
                if *n == 1 {
                    inner
                } else {
                    let lowered = if *n == 2 { (**e).clone() } else { Pow(e.clone(), n - 1) };
                    Mul(
                        Box::new(Mul(Box::new(Const(f64::from(*n))), Box::new(lowered))),
                        Box::new(inner),
                    )
                }
            }
            Sin(e) => Mul(Box::new(Cos(e.clone())), Box::new(e.differentiate())),
            Cos(e) => Mul(Box::new(Neg(Box::new(Sin(e.clone())))), Box::new(e.differentiate())),
        }
    }

    pub fn contains_time(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Time => true,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Sin(e) | Expr::Cos(e) => e.contains_time(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_time() || b.contains_time()
            }
        }
    }

    /// Calls `f` on every `Div` denominator.
    pub fn visit_denominators<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match self {
            Expr::Const(_) | Expr::Time => {}
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Sin(e) | Expr::Cos(e) => e.visit_denominators(f),
            Expr::Div(a, b) => {
                f(b);
                a.visit_denominators(f);
                b.visit_denominators(f);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.visit_denominators(f);
                b.visit_denominators(f);
            }
        }
    }
}

/// Canonical, fully parenthesized form that [`parse`] reads back.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Time => write!(f, "t"),
            Expr::Neg(e) => write!(f, "(-({e}))"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(e, n) => write!(f, "({e})^{n}"),
            Expr::Sin(e) => write!(f, "sin({e})"),
            Expr::Cos(e) => write!(f, "cos({e})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(s: &str, t: f64) -> f64 {
        parse(s).unwrap().eval(t).unwrap()
    }

    fn dev(s: &str, t: f64) -> f64 {
        parse(s).unwrap().differentiate().eval(t).unwrap()
    }

    #[test]
    fn evaluates_example_entries() {
        assert_eq!(ev("6+sin(t)", 0.0), 6.0);
        assert_eq!(ev("cos(t)", 0.0), 1.0);
        assert_eq!(ev("2*cos(t)^2 - 2*cos(t)*sin(t) + 6*sin(t)", 0.0), 2.0);
        assert!((ev("pi", 0.0) - PI).abs() == 0.0);
    }

    #[test]
    fn derivatives_at_known_points() {
        assert_eq!(dev("sin(t)", 0.0), 1.0);
        assert!(dev("6+sin(t)", PI / 2.0).abs() < 1e-12);
        let t = 0.7;
        let h = 1e-5;
        let fd = (ev("2*cos(t)^2", t + h) - ev("2*cos(t)^2", t - h)) / (2.0 * h);
        assert!((dev("2*cos(t)^2", t) - fd).abs() < 1e-6);
        assert_eq!(dev("5", 3.0), 0.0);
        assert_eq!(dev("t^1", 3.0), 1.0);
        assert_eq!(dev("t^3", 2.0), 12.0);
        assert!((dev("1/t", 2.0) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = parse("1/t").unwrap();
        assert_eq!(e.eval(0.0), Err(EvalError::DivisionByZero { t: 0.0 }));
        assert_eq!(e.eval(2.0), Ok(0.5));
    }

    #[test]
    fn unary_minus_binds_tighter_than_power() {
        assert_eq!(ev("-t^2", 3.0), 9.0);
        assert_eq!(ev("0-t^2", 3.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
    }

    #[test]
    fn printer_round_trips() {
        for s in ["-t^2", "2*cos(t)^2 - 2*cos(t)*sin(t) + 6*sin(t)", "-2*sin(2*t)-6*cos(t)+2", "1/(t+0.1)", "--t"] {
            let e = parse(s).unwrap();
            let back = parse(&e.to_string()).unwrap();
            for t in [0.0, 0.3, 1.7, 9.5] {
                assert_eq!(e.eval(t), back.eval(t), "{s}");
            }
        }
        let neg = Expr::Mul(Box::new(Expr::Const(-2.5)), Box::new(Expr::Time));
        assert_eq!(parse(&neg.to_string()).unwrap().eval(2.0), Ok(-5.0));
    }

    #[test]
    fn contains_time_detects_variable() {
        assert!(parse("sin(2*t)").unwrap().contains_time());
        assert!(!parse("sin(2*pi)").unwrap().contains_time());
    }
}
