//! Unnormalized expression trees and the `canonicalize` entry point.

use num_rational::BigRational;

use crate::error::Result;

use super::monomial::Exponent;
use super::symbol::Symbol;
use super::Expr;

/// An expression tree as produced by parsers and test generators;
/// [`RawExpr::canonicalize`] folds it into the canonical [`Expr`] form.
#[derive(Clone, Debug, PartialEq)]
pub enum RawExpr {
    Rational(BigRational),
    Symbol(Symbol),
    Add(Vec<RawExpr>),
    Mul(Vec<RawExpr>),
    Neg(Box<RawExpr>),
    Sub(Box<RawExpr>, Box<RawExpr>),
    Div(Box<RawExpr>, Box<RawExpr>),
    Pow(Box<RawExpr>, Exponent),
}

impl RawExpr {
    pub fn int(n: i64) -> RawExpr {
        RawExpr::Rational(super::rat(n, 1))
    }

    pub fn canonicalize(&self) -> Result<Expr> {
        match self {
            RawExpr::Rational(c) => Ok(Expr::constant(c.clone())),
            RawExpr::Symbol(sym) => Ok(Expr::symbol(sym.clone())),
            RawExpr::Add(terms) => {
                let mut acc = Expr::zero();
                for t in terms {
                    acc = acc.add(&t.canonicalize()?);
                }
                Ok(acc)
            }
            RawExpr::Mul(factors) => {
                let mut acc = Expr::one();
                for t in factors {
                    acc = acc.mul(&t.canonicalize()?);
                }
                Ok(acc)
            }
            RawExpr::Neg(inner) => Ok(inner.canonicalize()?.neg()),
            RawExpr::Sub(a, b) => Ok(a.canonicalize()?.sub(&b.canonicalize()?)),
            RawExpr::Div(a, b) => a.canonicalize()?.div(&b.canonicalize()?),
            RawExpr::Pow(base, e) => base.canonicalize()?.pow(*e),
        }
    }
}
