use std::fmt;

use crate::error::{Error, Result};
use crate::jets::{Jet, Layout};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl UnaryOp {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

/// Expression tree over the coordinates of a chart.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    Unary(UnaryOp, Box<Expr>),
    /// For `Pow`, the right operand is always a `Const`.
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Self {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Coord(i) => Some(*i),
            Expr::Unary(_, a) => a.max_coord(),
            Expr::Binary(_, a, b) => match (a.max_coord(), b.max_coord()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Checks coordinate bounds and the constant-exponent rule.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Expr::Const(_) => Ok(()),
            Expr::Coord(i) if *i < dim => Ok(()),
            Expr::Coord(i) => Err(Error::IndexOutOfRange { index: *i, dim }),
            Expr::Unary(_, a) => a.validate(dim),
            Expr::Binary(BinaryOp::Pow, a, b) => {
                if !matches!(**b, Expr::Const(_)) {
                    return Err(Error::Shape("pow exponent must be a constant".into()));
                }
                a.validate(dim)
            }
            Expr::Binary(_, a, b) => {
                a.validate(dim)?;
                b.validate(dim)
            }
        }
    }

    /// Plain floating-point evaluation at a point.
    pub fn eval<T: Scalar>(&self, point: &[T]) -> Result<T> {
        Ok(match self {
            Expr::Const(c) => T::lit(*c),
            Expr::Coord(i) => *point
                .get(*i)
                .ok_or(Error::IndexOutOfRange { index: *i, dim: point.len() })?,
            Expr::Unary(op, a) => {
                let x = a.eval(point)?;
                match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Ln => {
                        if !(x > T::zero()) {
                            return Err(Error::Domain(format!("ln of non-positive value {x}")));
                        }
                        x.ln()
                    }
                    UnaryOp::Sqrt => {
                        if x < T::zero() {
                            return Err(Error::Domain(format!("sqrt of negative value {x}")));
                        }
                        x.sqrt()
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval(point)?;
                let y = b.eval(point)?;
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y == T::zero() {
                            return Err(Error::SingularPoint("division by zero".into()));
                        }
                        x / y
                    }
                    BinaryOp::Pow => {
                        if y.fract() == T::zero() && y.abs() <= T::lit(1024.0) {
                            if x == T::zero() && y < T::zero() {
                                return Err(Error::SingularPoint("zero to a negative power".into()));
                            }
                            x.powi(y.to_i32().expect("integral exponent"))
                        } else {
                            if !(x > T::zero()) {
                                return Err(Error::Domain(format!(
                                    "non-integer power {y} of non-positive value {x}"
                                )));
                            }
                            x.powf(y)
                        }
                    }
                }
            }
        })
    }

    /// Evaluates the expression on coordinate jets.
    pub fn eval_jet<T: Scalar>(&self, vars: &[Jet<T>]) -> Result<Jet<T>> {
        let first = vars.first().ok_or_else(|| Error::Shape("no coordinate jets".into()))?;
        self.eval_jet_with(vars, first.layout(), first.order())
    }

    fn eval_jet_with<T: Scalar>(
        &self,
        vars: &[Jet<T>],
        layout: &std::sync::Arc<Layout>,
        order: usize,
    ) -> Result<Jet<T>> {
        Ok(match self {
            Expr::Const(c) => Jet::constant(layout, order, T::lit(*c)),
            Expr::Coord(i) => vars
                .get(*i)
                .ok_or(Error::IndexOutOfRange { index: *i, dim: vars.len() })?
                .clone(),
            Expr::Unary(op, a) => {
                let x = a.eval_jet_with(vars, layout, order)?;
                match op {
                    UnaryOp::Neg => -&x,
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Ln => x.ln()?,
                    UnaryOp::Sqrt => x.sqrt()?,
                }
            }
            Expr::Binary(BinaryOp::Pow, a, b) => {
                let Expr::Const(p) = **b else {
                    return Err(Error::Shape("pow exponent must be a constant".into()));
                };
                a.eval_jet_with(vars, layout, order)?.powf(T::lit(p))?
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval_jet_with(vars, layout, order)?;
                let y = b.eval_jet_with(vars, layout, order)?;
                match op {
                    BinaryOp::Add => &x + &y,
                    BinaryOp::Sub => &x - &y,
                    BinaryOp::Mul => &x * &y,
                    BinaryOp::Div => x.try_div(&y)?,
                    BinaryOp::Pow => unreachable!(),
                }
            }
        })
    }

    /// Renders the tree with the given coordinate names.
    ///
    /// Output re-parses to an equal tree.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

fn write_atom(e: &Expr, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(_) | Expr::Coord(_) => write_expr(e, names, f),
        Expr::Unary(op, _) if *op != UnaryOp::Neg => write_expr(e, names, f),
        _ => {
            f.write_str("(")?;
            write_expr(e, names, f)?;
            f.write_str(")")
        }
    }
}

fn write_expr(e: &Expr, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{})", -c),
        Expr::Const(c) => write!(f, "{c}"),
        Expr::Coord(i) => match names.get(*i) {
            Some(n) => f.write_str(n),
            None => write!(f, "x{}", i + 1),
        },
        Expr::Unary(UnaryOp::Neg, a) => {
            f.write_str("-")?;
            write_atom(a, names, f)
        }
        Expr::Unary(op, a) => {
            write!(f, "{}(", op.name())?;
            write_expr(a, names, f)?;
            f.write_str(")")
        }
        Expr::Binary(op, a, b) => {
            write_atom(a, names, f)?;
            write!(f, " {} ", op.symbol())?;
            write_atom(b, names, f)
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.expr, self.names, f)
    }
}
