//! Exact symbolic arithmetic: canonical-form rational expressions over
//! symbols with rational exponents.
//!
//! An [`Expr`] is a quotient of two ordered sums of [`Monomial`]s kept
//! in a canonical form:
//!
//! * monomials sorted by the fixed total order, like terms merged,
//!   zero terms dropped;
//! * the denominator is never empty (zero is `0/1`);
//! * monomial content is cancelled between numerator and denominator,
//!   after which every exponent is nonnegative and, for each symbol,
//!   some monomial omits it;
//! * the leading denominator coefficient is `+1`.
//!
//! There is deliberately no multivariate gcd: equal values can have
//! distinct canonical forms when a polynomial common factor survives,
//! and [`Expr::equivalent`] (cross-multiplication zero test) is the
//! semantic equality. Everything the reductions produce has monomial
//! denominators, for which the canonical form is unique.

mod eval;
mod monomial;
mod parse;
mod raw;
mod serialize;
mod symbol;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub use eval::{EvalEnv, MapEnv};
pub use monomial::{Exponent, Monomial, EXPONENT_DENOMINATOR_LIMIT};
pub use parse::{parse_expr, ParseContext};
pub use raw::RawExpr;
pub use symbol::{JetCoord, Symbol};


/// Convenience constructor for exact rational constants.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A canonical rational expression. See the module docs for the
/// invariants; all constructors and operators maintain them.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Expr {
    num: Vec<Monomial>,
    den: Vec<Monomial>,
}

impl Expr {
    pub fn zero() -> Expr {
        Expr {
            num: Vec::new(),
            den: vec![Monomial::one()],
        }
    }

    pub fn one() -> Expr {
        Expr::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            num: vec![Monomial::constant(c)],
            den: vec![Monomial::one()],
        }
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::constant(rat(n, d))
    }

    pub fn symbol(sym: Symbol) -> Expr {
        Expr {
            num: vec![Monomial::symbol(sym)],
            den: vec![Monomial::one()],
        }
    }

    pub fn jet(c: JetCoord) -> Expr {
        Expr::symbol(Symbol::jet(c))
    }

    pub fn group(n: u8) -> Expr {
        Expr::symbol(Symbol::group(n))
    }

    pub fn coeff_fn(index: u8, order: u32) -> Expr {
        Expr::symbol(Symbol::coeff(index, order))
    }

    /// Builds `sym^e` directly.
    pub fn symbol_pow(sym: Symbol, e: Exponent) -> Result<Expr> {
        Expr::symbol(sym).pow(e)
    }

    /// Builds the canonical form of `sum(num) / sum(den)` from raw
    /// monomial lists.
    pub fn from_monomials(num: Vec<Monomial>, den: Vec<Monomial>) -> Result<Expr> {
        Expr::normalize(num, den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.den.len() == 1
            && self.den[0].is_constant()
            && self.num.len() == 1
            && self.num[0].is_constant()
            && self.num[0].coeff.is_one()
    }

    pub fn numerator(&self) -> &[Monomial] {
        &self.num
    }

    pub fn denominator(&self) -> &[Monomial] {
        &self.den
    }

    /// `Some(c)` when the expression is the constant `c`.
    pub fn as_rational_constant(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        if self.num.len() == 1
            && self.den.len() == 1
            && self.num[0].is_constant()
            && self.den[0].is_constant()
        {
            return Some(&self.num[0].coeff / &self.den[0].coeff);
        }
        None
    }

    /// Single-monomial numerator over a single-monomial denominator.
    pub fn as_monomial_ratio(&self) -> Option<(&Monomial, &Monomial)> {
        if self.num.len() == 1 && self.den.len() == 1 {
            Some((&self.num[0], &self.den[0]))
        } else {
            None
        }
    }

    /// Every symbol occurring in numerator or denominator.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for m in self.num.iter().chain(self.den.iter()) {
            out.extend(m.factors.keys().cloned());
        }
        out
    }

    pub fn contains(&self, sym: &Symbol) -> bool {
        self.num
            .iter()
            .chain(self.den.iter())
            .any(|m| m.factors.contains_key(sym))
    }

    // ---- canonicalization core ----

    /// Builds the canonical form from unnormalized monomial sums.
    fn normalize(num: Vec<Monomial>, den: Vec<Monomial>) -> Result<Expr> {
        let mut num = merge_sum(num);
        let mut den = merge_sum(den);
        if den.is_empty() {
            return Err(Error::DivisionByZero);
        }
        if num.is_empty() {
            return Ok(Expr::zero());
        }

        // Monomial content: for each symbol pull the minimal exponent
        // over all monomials of both sides (zero when absent); dividing
        // it out leaves nonnegative exponents with, per symbol, at
        // least one monomial omitting it.
        let mut minima: BTreeMap<Symbol, Exponent> = BTreeMap::new();
        let all: Vec<&Monomial> = num.iter().chain(den.iter()).collect();
        let mut support: BTreeSet<Symbol> = BTreeSet::new();
        for m in &all {
            support.extend(m.factors.keys().cloned());
        }
        for sym in support {
            let min = all
                .iter()
                .map(|m| m.exponent(&sym))
                .min()
                .unwrap_or_else(Exponent::zero);
            if !min.is_zero() {
                minima.insert(sym, min);
            }
        }
        if !minima.is_empty() {
            let divide = |ms: Vec<Monomial>| -> Vec<Monomial> {
                ms.into_iter()
                    .map(|mut m| {
                        for (sym, e) in &minima {
                            m = m.divide_symbol(sym, *e);
                        }
                        m
                    })
                    .collect()
            };
            num = divide(num);
            den = divide(den);
        }

        // Scale so that the leading denominator coefficient is +1.
        let lead = den[0].coeff.clone();
        if !lead.is_one() {
            for m in num.iter_mut().chain(den.iter_mut()) {
                m.coeff = &m.coeff / &lead;
            }
        }
        Ok(Expr { num, den })
    }

    // ---- arithmetic ----

    pub fn add(&self, other: &Expr) -> Expr {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (num, den) = if self.den == other.den {
            (
                concat(&self.num, &other.num),
                self.den.clone(),
            )
        } else {
            (
                concat(
                    &mul_sums(&self.num, &other.den),
                    &mul_sums(&other.num, &self.den),
                ),
                mul_sums(&self.den, &other.den),
            )
        };
        Expr::normalize(num, den).expect("nonzero denominators stay nonzero under multiplication")
    }

    pub fn neg(&self) -> Expr {
        let num = self
            .num
            .iter()
            .map(|m| Monomial {
                coeff: -m.coeff.clone(),
                factors: m.factors.clone(),
            })
            .collect();
        Expr {
            num,
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        if self.is_zero() || other.is_zero() {
            return Expr::zero();
        }
        Expr::normalize(
            mul_sums(&self.num, &other.num),
            mul_sums(&self.den, &other.den),
        )
        .expect("nonzero denominators stay nonzero under multiplication")
    }

    pub fn div(&self, other: &Expr) -> Result<Expr> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Expr::normalize(
            mul_sums(&self.num, &other.den),
            mul_sums(&self.den, &other.num),
        )
    }

    pub fn scale(&self, c: &BigRational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        let num = self
            .num
            .iter()
            .map(|m| Monomial {
                coeff: &m.coeff * c,
                factors: m.factors.clone(),
            })
            .collect();
        Expr::normalize(num, self.den.clone()).expect("denominator unchanged")
    }

    /// Integer powers by repeated squaring; fractional powers only for
    /// monomial-over-monomial expressions.
    pub fn pow(&self, e: Exponent) -> Result<Expr> {
        monomial::check_exponent(e)?;
        if e.is_zero() {
            if self.is_zero() {
                return Err(Error::Internal("0^0 is undefined".into()));
            }
            return Ok(Expr::one());
        }
        if e.is_integer() {
            let k = *e.numer();
            let mut base = if k < 0 {
                if self.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                Expr::normalize(self.den.clone(), self.num.clone())?
            } else {
                self.clone()
            };
            let mut n = k.unsigned_abs();
            let mut acc = Expr::one();
            while n > 0 {
                if n & 1 == 1 {
                    acc = acc.mul(&base);
                }
                base = base.mul(&base);
                n >>= 1;
            }
            return Ok(acc);
        }
        match self.as_monomial_ratio() {
            Some((n, d)) => {
                let num = n.pow(e)?;
                let den = d.pow(e)?;
                Expr::normalize(vec![num], vec![den])
            }
            None => Err(Error::NonMonomialRadical(e.to_string())),
        }
    }

    /// Semantic equality by cross-multiplication: `a/b == c/d` iff
    /// `a*d - c*b` canonicalizes to zero.
    pub fn equivalent(&self, other: &Expr) -> bool {
        if self == other {
            return true;
        }
        let lhs = mul_sums(&self.num, &other.den);
        let rhs = mul_sums(&other.num, &self.den);
        merge_sum(concat(&lhs, &negate(&rhs))).is_empty()
    }

    // ---- calculus ----

    /// Partial derivative with respect to a single symbol; every other
    /// symbol (including coefficient functions) is held constant.
    pub fn partial_derivative(&self, sym: &Symbol) -> Expr {
        let dn = derive_sum(&self.num, sym);
        let dd = derive_sum(&self.den, sym);
        if dd.is_empty() {
            // Denominator free of `sym`: differentiate termwise.
            return Expr::normalize(dn, self.den.clone()).expect("denominator unchanged");
        }
        // Quotient rule: (n' d - n d') / d^2.
        let num = concat(
            &mul_sums(&dn, &self.den),
            &negate(&mul_sums(&self.num, &dd)),
        );
        let den = mul_sums(&self.den, &self.den);
        Expr::normalize(num, den).expect("d^2 of nonzero denominator is nonzero")
    }

    /// Simultaneous substitution. Binding values must not mention any
    /// bound symbol; a fractional exponent on a bound symbol requires
    /// the bound value to be a monomial ratio.
    pub fn substitute(&self, bindings: &BTreeMap<Symbol, Expr>) -> Result<Expr> {
        for (sym, value) in bindings {
            for bound in bindings.keys() {
                if value.contains(bound) {
                    return Err(Error::InvalidSubstitution(sym.to_string()));
                }
            }
        }
        let relevant = bindings
            .keys()
            .any(|s| self.contains(s));
        if !relevant {
            return Ok(self.clone());
        }
        let num = substitute_sum(&self.num, bindings)?;
        let den = substitute_sum(&self.den, bindings)?;
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        num.div(&den)
    }

    /// Numeric evaluation; see [`EvalEnv`] for how symbols are bound.
    pub fn evaluate(&self, env: &dyn EvalEnv) -> Result<f64> {
        eval::evaluate(self, env)
    }
}

fn concat(a: &[Monomial], b: &[Monomial]) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

fn negate(ms: &[Monomial]) -> Vec<Monomial> {
    ms.iter()
        .map(|m| Monomial {
            coeff: -m.coeff.clone(),
            factors: m.factors.clone(),
        })
        .collect()
}

/// Sorts by the canonical monomial order, merges equal factor maps,
/// drops zero coefficients.
fn merge_sum(mut ms: Vec<Monomial>) -> Vec<Monomial> {
    ms.sort_by(|a, b| a.cmp_order(b));
    let mut out: Vec<Monomial> = Vec::with_capacity(ms.len());
    for m in ms {
        if m.coeff.is_zero() {
            continue;
        }
        if let Some(last) = out.last_mut() {
            if last.factors == m.factors {
                last.coeff += &m.coeff;
                if last.coeff.is_zero() {
                    out.pop();
                }
                continue;
            }
        }
        out.push(m);
    }
    out
}

fn mul_sums(a: &[Monomial], b: &[Monomial]) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for ma in a {
        for mb in b {
            out.push(ma.mul(mb));
        }
    }
    merge_sum(out)
}

fn derive_sum(ms: &[Monomial], sym: &Symbol) -> Vec<Monomial> {
    ms.iter().filter_map(|m| m.partial(sym)).collect()
}

fn substitute_sum(ms: &[Monomial], bindings: &BTreeMap<Symbol, Expr>) -> Result<Expr> {
    let mut acc = Expr::zero();
    for m in ms {
        let mut term = Expr::constant(m.coeff.clone());
        for (sym, exp) in &m.factors {
            let factor = match bindings.get(sym) {
                Some(value) => value.pow(*exp)?,
                None => Expr::symbol_pow(sym.clone(), *exp)?,
            };
            term = term.mul(&factor);
        }
        acc = acc.add(&term);
    }
    Ok(acc)
}

// ---- printing ----

impl fmt::Display for Expr {
    /// Deterministic printer; `parse_expr` reads this syntax back.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let num = format_sum(&self.num);
        if self.den.len() == 1 && self.den[0].is_constant() && self.den[0].coeff.is_one() {
            return write!(f, "{num}");
        }
        let den = format_sum(&self.den);
        let num_str = if self.num.len() > 1 {
            format!("({num})")
        } else {
            num
        };
        let den_str = if self.den.len() > 1 || self.den[0].factors.len() > 1 {
            format!("({den})")
        } else {
            den
        };
        write!(f, "{num_str}/{den_str}")
    }
}

fn format_sum(ms: &[Monomial]) -> String {
    let mut out = String::new();
    for (i, m) in ms.iter().enumerate() {
        let body = m.to_string();
        if i == 0 {
            out.push_str(&body);
        } else if let Some(stripped) = body.strip_prefix('-') {
            out.push_str(" - ");
            out.push_str(stripped);
        } else {
            out.push_str(" + ");
            out.push_str(&body);
        }
    }
    out
}

/// `Ratio<i64>` helper for exponents.
pub fn exp(n: i64, d: i64) -> Exponent {
    Ratio::new(n, d)
}

#[cfg(test)]
mod tests;
