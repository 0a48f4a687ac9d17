//! Monomials: an exact rational coefficient times a product of symbols
//! raised to rational exponents.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

use super::symbol::Symbol;

/// Exponents are exact rationals with machine-word components; the
/// pipeline only ever needs fifth roots.
pub type Exponent = Ratio<i64>;

/// Largest exponent denominator accepted when exponents enter from
/// outside (parser, `pow`); the paper needs only fifth roots.
pub const EXPONENT_DENOMINATOR_LIMIT: i64 = 20;

pub(crate) fn check_exponent(e: Exponent) -> Result<Exponent> {
    if *e.denom() > EXPONENT_DENOMINATOR_LIMIT {
        return Err(Error::ExponentDenominator(
            e.to_string(),
            EXPONENT_DENOMINATOR_LIMIT,
        ));
    }
    Ok(e)
}

/// `coeff * prod(sym_i ^ exp_i)` with no zero exponent stored and a
/// nonzero coefficient (the zero monomial is never materialized; sums
/// drop it instead).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial {
    pub coeff: BigRational,
    pub factors: BTreeMap<Symbol, Exponent>,
}

impl Monomial {
    pub fn constant(coeff: BigRational) -> Monomial {
        Monomial {
            coeff,
            factors: BTreeMap::new(),
        }
    }

    pub fn one() -> Monomial {
        Monomial::constant(BigRational::one())
    }

    pub fn symbol(sym: Symbol) -> Monomial {
        let mut factors = BTreeMap::new();
        factors.insert(sym, Exponent::one());
        Monomial {
            coeff: BigRational::one(),
            factors,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn exponent(&self, sym: &Symbol) -> Exponent {
        self.factors.get(sym).copied().unwrap_or_else(Exponent::zero)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut factors = self.factors.clone();
        for (sym, exp) in &other.factors {
            let entry = factors.entry(sym.clone()).or_insert_with(Exponent::zero);
            *entry += exp;
            if entry.is_zero() {
                factors.remove(sym);
            }
        }
        Monomial {
            coeff: &self.coeff * &other.coeff,
            factors,
        }
    }

    /// Divides by `sym^exp` (used for content extraction).
    pub fn divide_symbol(&self, sym: &Symbol, exp: Exponent) -> Monomial {
        let mut factors = self.factors.clone();
        let entry = factors.entry(sym.clone()).or_insert_with(Exponent::zero);
        *entry -= exp;
        if entry.is_zero() {
            factors.remove(sym);
        }
        Monomial {
            coeff: self.coeff.clone(),
            factors,
        }
    }

    /// Raises the monomial to a rational power. The coefficient must
    /// have an exact rational root when the power is fractional.
    pub fn pow(&self, e: Exponent) -> Result<Monomial> {
        check_exponent(e)?;
        let mut factors = BTreeMap::new();
        for (sym, exp) in &self.factors {
            let new = check_exponent(exp * e)?;
            if !new.is_zero() {
                factors.insert(sym.clone(), new);
            }
        }
        let coeff = rational_pow(&self.coeff, e)?;
        Ok(Monomial { coeff, factors })
    }

    /// `d/ds`: power rule on the `s` factor, zero when `s` is absent.
    pub fn partial(&self, sym: &Symbol) -> Option<Monomial> {
        let exp = *self.factors.get(sym)?;
        let mut factors = self.factors.clone();
        let new = exp - Exponent::one();
        if new.is_zero() {
            factors.remove(sym);
        } else {
            factors.insert(sym.clone(), new);
        }
        let scale = BigRational::new(BigInt::from(*exp.numer()), BigInt::from(*exp.denom()));
        Some(Monomial {
            coeff: &self.coeff * scale,
            factors,
        })
    }

    /// Total order used for the canonical sum order: walk the united
    /// symbol support in ascending symbol order; at the first symbol
    /// whose exponents differ, the larger exponent sorts first.
    pub fn cmp_order(&self, other: &Monomial) -> Ordering {
        let mut a = self.factors.iter().peekable();
        let mut b = other.factors.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some((sa, ea)), Some((sb, eb))) => match sa.cmp(sb) {
                    Ordering::Less => {
                        // `self` carries the earlier symbol with nonzero
                        // exponent, `other` has exponent zero there.
                        return cmp_exp(**ea, Exponent::zero());
                    }
                    Ordering::Greater => {
                        return cmp_exp(Exponent::zero(), **eb);
                    }
                    Ordering::Equal => {
                        match cmp_exp(**ea, **eb) {
                            Ordering::Equal => {
                                a.next();
                                b.next();
                            }
                            ord => return ord,
                        }
                    }
                },
                (Some((_, ea)), None) => return cmp_exp(**ea, Exponent::zero()),
                (None, Some((_, eb))) => return cmp_exp(Exponent::zero(), **eb),
            }
        }
    }
}

/// Higher exponent sorts earlier (descending power of the earliest
/// differing symbol), which puts leading terms first.
fn cmp_exp(a: Exponent, b: Exponent) -> Ordering {
    b.cmp(&a)
}

/// Exact `c^(p/q)` over the rationals: integer powers directly, roots
/// by exact integer root extraction; negative bases take the real odd
/// root, even roots of negatives are rejected.
pub(crate) fn rational_pow(c: &BigRational, e: Exponent) -> Result<BigRational> {
    if e.is_zero() {
        return Ok(BigRational::one());
    }
    if c.is_zero() {
        if e.is_negative() {
            return Err(Error::DivisionByZero);
        }
        return Ok(BigRational::zero());
    }
    if e.is_integer() {
        let k = *e.numer();
        let mag = k.unsigned_abs() as u32;
        let num = c.numer().pow(mag);
        let den = c.denom().pow(mag);
        return Ok(if k >= 0 {
            BigRational::new(num, den)
        } else {
            BigRational::new(den, num)
        });
    }
    let q = *e.denom();
    let p = *e.numer();
    let root = |n: &BigInt| -> Result<BigInt> {
        if n.is_negative() {
            if q % 2 == 0 {
                return Err(Error::NonRationalRoot(c.to_string(), q));
            }
            return Ok(-((-n).nth_root(q as u32)));
        }
        Ok(n.nth_root(q as u32))
    };
    let rn = root(c.numer())?;
    let rd = root(c.denom())?;
    if rn.pow(q as u32) != *c.numer() || rd.pow(q as u32) != *c.denom() {
        return Err(Error::NonRationalRoot(c.to_string(), q));
    }
    rational_pow(&BigRational::new(rn, rd), Ratio::from_integer(p))
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        if self.coeff != BigRational::one() || self.factors.is_empty() {
            if self.coeff == -BigRational::one() && !self.factors.is_empty() {
                write!(f, "-")?;
            } else {
                write!(f, "{}", self.coeff)?;
                wrote = true;
            }
        }
        for (sym, exp) in &self.factors {
            if wrote {
                write!(f, "*")?;
            }
            write!(f, "{sym}")?;
            if !exp.is_one() {
                if exp.is_integer() && !exp.is_negative() {
                    write!(f, "^{}", exp.numer())?;
                } else {
                    write!(f, "^({exp})")?;
                }
            }
            wrote = true;
        }
        Ok(())
    }
}
