//! Numeric evaluation of canonical expressions.
//!
//! Fractional powers use the real odd-root branch: `u^(1/5)` is defined
//! and sign-preserving for every nonzero real `u`. Even-denominator
//! exponents of negative bases fail with `NumericFailure`.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};

use super::monomial::Exponent;
use super::symbol::Symbol;
use super::{Expr, Monomial};

/// Supplies numeric values for symbols. Implementations decide how
/// coefficient-function symbols are bound (the oracle evaluates the
/// k-th derivative of a concrete coefficient at the current `x`).
pub trait EvalEnv {
    fn value(&self, sym: &Symbol) -> Result<f64>;
}

/// Plain map environment; any symbol outside the map is unbound.
#[derive(Clone, Debug, Default)]
pub struct MapEnv(pub BTreeMap<Symbol, f64>);

impl EvalEnv for MapEnv {
    fn value(&self, sym: &Symbol) -> Result<f64> {
        self.0
            .get(sym)
            .copied()
            .ok_or_else(|| Error::UnboundSymbol(sym.to_string()))
    }
}

/// `base^(p/q)` with the real odd-root branch for negative bases.
pub fn real_pow(base: f64, e: Exponent) -> Result<f64> {
    let p = *e.numer();
    let q = *e.denom();
    if base == 0.0 {
        if p < 0 {
            return Err(Error::PoleAtPoint);
        }
        return Ok(0.0);
    }
    let value = if q == 1 {
        let k = i32::try_from(p)
            .map_err(|_| Error::NumericFailure(format!("integer exponent {p} too large")))?;
        base.powi(k)
    } else if base < 0.0 {
        if q % 2 == 0 {
            return Err(Error::NumericFailure(format!(
                "even root of negative base {base}"
            )));
        }
        let mag = (-base).powf(e.to_f64().ok_or_else(|| {
            Error::NumericFailure("exponent not representable".into())
        })?);
        if p.rem_euclid(2) == 1 {
            -mag
        } else {
            mag
        }
    } else {
        base.powf(
            e.to_f64()
                .ok_or_else(|| Error::NumericFailure("exponent not representable".into()))?,
        )
    };
    if !value.is_finite() {
        return Err(Error::NumericFailure(format!(
            "non-finite value {base}^{e}"
        )));
    }
    Ok(value)
}

fn eval_monomial(m: &Monomial, env: &dyn EvalEnv) -> Result<f64> {
    let mut acc = m
        .coeff
        .to_f64()
        .ok_or_else(|| Error::NumericFailure("coefficient overflows f64".into()))?;
    for (sym, e) in &m.factors {
        acc *= real_pow(env.value(sym)?, *e)?;
    }
    Ok(acc)
}

pub(super) fn evaluate(expr: &Expr, env: &dyn EvalEnv) -> Result<f64> {
    let mut num = 0.0;
    for m in &expr.num {
        num += eval_monomial(m, env)?;
    }
    let mut den = 0.0;
    for m in &expr.den {
        den += eval_monomial(m, env)?;
    }
    if den == 0.0 {
        return Err(Error::PoleAtPoint);
    }
    let value = num / den;
    if !value.is_finite() {
        return Err(Error::NumericFailure("non-finite quotient".into()));
    }
    Ok(value)
}
