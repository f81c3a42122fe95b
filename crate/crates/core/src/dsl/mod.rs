//! Metric description language: expressions, documents and pointwise evaluation.

mod ast;
mod document;
mod eval;
mod parse;

pub use ast::{BinaryOp, Expr, ExprDisplay, UnaryOp};
pub use document::{
    parse_metric_document, ConformalFactorSpec, Interval, MetricSpec, DEFAULT_HALF_WIDTH,
};
pub use eval::{eval_metric_at, MetricJets};
pub use parse::{parse_expression, ParseError, ParseErrorKind};
