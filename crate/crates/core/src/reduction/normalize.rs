//! Normalization: solve designated essential-torsion components for
//! group parameters.
//!
//! Entries whose torsion is a single monomial ratio are solved jointly
//! by linear algebra on exponent vectors (the target of a monomial
//! equation is necessarily nonzero). Entries that are affine in their
//! designated parameter are isolated, in as many passes as needed so
//! that entries may feed each other within a loop.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::expr::{Expr, Exponent, Monomial, Symbol};

use super::plan::PlanLoop;
use super::AbsorptionResult;
use super::StructureEquations;

/// Result of one loop of normalization.
#[derive(Clone, Debug, Default)]
pub struct NormalizationOutcome {
    pub assignments: BTreeMap<u8, Expr>,
    /// Parameters whose plan entry pointed at an absorbable slot, so
    /// the raw (pre-absorption) torsion value was used instead of an
    /// essential component.
    pub raw_slot_params: Vec<u8>,
}

struct WorkEntry {
    param: u8,
    target: BigRational,
    value: Expr,
    equation: u8,
    slot: (u8, u8),
}

pub fn normalize(
    se: &StructureEquations,
    ar: &AbsorptionResult,
    plan_loop: &PlanLoop,
) -> Result<NormalizationOutcome> {
    let mut outcome = NormalizationOutcome::default();
    let mut work: Vec<WorkEntry> = Vec::new();
    let mut designated: BTreeSet<u8> = BTreeSet::new();
    for entry in &plan_loop.entries {
        if !designated.insert(entry.param) {
            return Err(Error::PlanMismatch(format!(
                "parameter a{} designated twice in one loop",
                entry.param
            )));
        }
        let key = (entry.equation, entry.slot);
        let value = match ar.essential.get(&key) {
            Some(v) => v.clone(),
            None => {
                // The slot was absorbed; fall back to the raw torsion
                // component and record that the plan normalizes a
                // removable coefficient.
                let raw = se.torsion(entry.equation, entry.slot.0, entry.slot.1);
                if raw.is_zero() {
                    return Err(Error::PlanMismatch(format!(
                        "T^{}_{{{},{}}} is identically zero; nothing to solve for a{}",
                        entry.equation, entry.slot.0, entry.slot.1, entry.param
                    )));
                }
                outcome.raw_slot_params.push(entry.param);
                raw
            }
        };
        work.push(WorkEntry {
            param: entry.param,
            target: entry.target.clone(),
            value,
            equation: entry.equation,
            slot: entry.slot,
        });
    }
    let originals: Vec<(u8, (u8, u8), Expr, BigRational)> = work
        .iter()
        .map(|e| (e.equation, e.slot, e.value.clone(), e.target.clone()))
        .collect();

    let unknowns: BTreeSet<u8> = designated.clone();
    while !work.is_empty() {
        // Substitute everything solved so far.
        let bindings: BTreeMap<Symbol, Expr> = outcome
            .assignments
            .iter()
            .map(|(n, e)| (Symbol::group(*n), e.clone()))
            .collect();
        if !bindings.is_empty() {
            for entry in work.iter_mut() {
                entry.value = entry.value.substitute(&bindings)?;
            }
        }

        // Joint monomial batch: every remaining entry whose value is a
        // monomial ratio mentioning at least one unsolved parameter.
        let unsolved = |e: &Expr| -> BTreeSet<u8> {
            e.symbols()
                .into_iter()
                .filter_map(|s| match s {
                    Symbol::Group(n)
                        if unknowns.contains(&n)
                            && !outcome.assignments.contains_key(&n) =>
                    {
                        Some(n)
                    }
                    _ => None,
                })
                .collect()
        };
        let monomial_idx: Vec<usize> = work
            .iter()
            .enumerate()
            .filter(|(_, e)| e.value.as_monomial_ratio().is_some() && !unsolved(&e.value).is_empty())
            .map(|(i, _)| i)
            .collect();
        if !monomial_idx.is_empty() {
            let batch: Vec<&WorkEntry> = monomial_idx.iter().map(|i| &work[*i]).collect();
            let solved = solve_monomial_batch(&batch)?;
            for (n, v) in solved {
                outcome.assignments.insert(n, v);
            }
            let mut idx = 0usize;
            work.retain(|_| {
                let keep = !monomial_idx.contains(&idx);
                idx += 1;
                keep
            });
            continue;
        }

        // Affine isolation: first entry affine in exactly its own
        // parameter, with no other unsolved parameter involved.
        let mut progressed = false;
        for i in 0..work.len() {
            let entry = &work[i];
            let deps = unsolved(&entry.value);
            if deps.len() != 1 || !deps.contains(&entry.param) {
                continue;
            }
            if let Some(value) = solve_affine(&entry.value, entry.param, &entry.target)? {
                outcome.assignments.insert(entry.param, value);
                work.remove(i);
                progressed = true;
                break;
            }
        }
        if !progressed {
            let stuck: Vec<String> = work
                .iter()
                .map(|e| {
                    format!(
                        "a{} from T^{}_{{{},{}}} = {}",
                        e.param, e.equation, e.slot.0, e.slot.1, e.value
                    )
                })
                .collect();
            return Err(Error::PlanMismatch(format!(
                "no entry is monomial or affine in its designated parameter: {}",
                stuck.join("; ")
            )));
        }
    }

    // Normalization correctness: substituting the assignments makes
    // each targeted torsion equal its target constant.
    let bindings: BTreeMap<Symbol, Expr> = outcome
        .assignments
        .iter()
        .map(|(n, e)| (Symbol::group(*n), e.clone()))
        .collect();
    for (equation, slot, original, target) in &originals {
        let reached = original.substitute(&bindings)?;
        if reached != Expr::constant(target.clone()) {
            return Err(Error::PlanMismatch(format!(
                "T^{}_{{{},{}}} normalizes to {reached}, wanted {target}",
                equation, slot.0, slot.1
            )));
        }
    }
    Ok(outcome)
}

/// Solves `T = target` for `param` when `T = (A*param + B)/C` with
/// `A, B, C` free of `param`. Returns `None` when the torsion is not
/// affine in the parameter.
fn solve_affine(value: &Expr, param: u8, target: &BigRational) -> Result<Option<Expr>> {
    let sym = Symbol::group(param);
    // Denominator must not involve the parameter.
    if value
        .denominator()
        .iter()
        .any(|m: &Monomial| m.factors.contains_key(&sym))
    {
        return Ok(None);
    }
    let mut linear: Vec<Monomial> = Vec::new();
    let mut constant: Vec<Monomial> = Vec::new();
    for m in value.numerator() {
        let e = m.exponent(&sym);
        if e.is_zero() {
            constant.push(m.clone());
        } else if e == Exponent::one() {
            linear.push(m.divide_symbol(&sym, Exponent::one()));
        } else {
            return Ok(None);
        }
    }
    if linear.is_empty() {
        return Ok(None);
    }
    let den = Expr::from_monomials(value.denominator().to_vec(), vec![Monomial::one()])?;
    let a = Expr::from_monomials(linear, vec![Monomial::one()])?;
    let b = Expr::from_monomials(constant, vec![Monomial::one()])?;
    // (A p + B)/C = t  =>  p = (t C - B)/A.
    let solution = den
        .scale(target)
        .sub(&b)
        .div(&a)?;
    Ok(Some(solution))
}

/// Solves the joint system `c_e * prod_i a_i^{m_ei} * prod_w w^{n_ew}
/// = t_e` for the designated parameters, with the ansatz
/// `a_i = d_i * prod_w w^{g_iw}`.
fn solve_monomial_batch(batch: &[&WorkEntry]) -> Result<BTreeMap<u8, Expr>> {
    let params: Vec<u8> = {
        let mut p: Vec<u8> = batch.iter().map(|e| e.param).collect();
        p.sort_unstable();
        p
    };
    if params.len() != batch.len() {
        return Err(Error::PlanMismatch(
            "monomial batch has repeated parameters".into(),
        ));
    }

    // Exponent matrix over the unknown parameters and the known-symbol
    // exponent table per equation.
    let mut matrix: Vec<Vec<BigRational>> = Vec::with_capacity(batch.len());
    let mut known_syms: BTreeSet<Symbol> = BTreeSet::new();
    let mut knowns: Vec<BTreeMap<Symbol, Exponent>> = Vec::with_capacity(batch.len());
    let mut ratios: Vec<BigRational> = Vec::with_capacity(batch.len());
    let param_set: BTreeSet<Symbol> = params.iter().map(|n| Symbol::group(*n)).collect();
    for entry in batch {
        if entry.target.is_zero() {
            return Err(Error::PlanMismatch(format!(
                "T^{}_{{{},{}}} is a monomial; it cannot be normalized to zero",
                entry.equation, entry.slot.0, entry.slot.1
            )));
        }
        let (num, den) = entry
            .value
            .as_monomial_ratio()
            .expect("batch entries are monomial ratios");
        let coeff = &num.coeff / &den.coeff;
        ratios.push(&entry.target / coeff);
        let mut row = vec![BigRational::zero(); params.len()];
        let mut known: BTreeMap<Symbol, Exponent> = BTreeMap::new();
        let push = |sym: &Symbol, e: Exponent, known: &mut BTreeMap<Symbol, Exponent>, row: &mut Vec<BigRational>| {
            if param_set.contains(sym) {
                let idx = params
                    .iter()
                    .position(|n| Symbol::group(*n) == *sym)
                    .unwrap();
                row[idx] += exp_to_rational(e);
            } else {
                let slot = known.entry(sym.clone()).or_insert_with(Exponent::zero);
                *slot += e;
            }
        };
        for (sym, e) in &num.factors {
            push(sym, *e, &mut known, &mut row);
        }
        for (sym, e) in &den.factors {
            push(sym, -*e, &mut known, &mut row);
        }
        known.retain(|_, e| !e.is_zero());
        known_syms.extend(known.keys().cloned());
        if known.keys().any(|s| s.is_group()) {
            return Err(Error::PlanMismatch(format!(
                "T^{}_{{{},{}}} mentions a group parameter outside the batch",
                entry.equation, entry.slot.0, entry.slot.1
            )));
        }
        knowns.push(known);
        matrix.push(row);
    }

    // Exponents of the ansatz, one solve per known symbol.
    let mut exponents: BTreeMap<Symbol, Vec<Exponent>> = BTreeMap::new();
    for sym in &known_syms {
        let rhs: Vec<BigRational> = knowns
            .iter()
            .map(|k| -exp_to_rational(k.get(sym).copied().unwrap_or_else(Exponent::zero)))
            .collect();
        let solution = solve_rational(&matrix, &rhs).ok_or_else(|| {
            Error::PlanMismatch(format!(
                "monomial exponent system for {sym} is singular"
            ))
        })?;
        exponents.insert(
            sym.clone(),
            solution
                .iter()
                .map(rational_to_exp)
                .collect::<Result<Vec<_>>>()?,
        );
    }

    // Constant magnitudes, prime by prime.
    let mut primes: BTreeSet<BigInt> = BTreeSet::new();
    for r in &ratios {
        for p in prime_factors(&r.numer().abs()) {
            primes.insert(p);
        }
        for p in prime_factors(&r.denom().abs()) {
            primes.insert(p);
        }
    }
    let mut magnitudes = vec![BigRational::one(); params.len()];
    for prime in &primes {
        let rhs: Vec<BigRational> = ratios
            .iter()
            .map(|r| {
                BigRational::from_integer(BigInt::from(
                    valuation(&r.numer().abs(), prime) as i64
                        - valuation(&r.denom().abs(), prime) as i64,
                ))
            })
            .collect();
        let solution = solve_rational(&matrix, &rhs).ok_or_else(|| {
            Error::PlanMismatch("monomial coefficient system is singular".into())
        })?;
        for (i, v) in solution.iter().enumerate() {
            if !v.is_integer() {
                return Err(Error::PlanMismatch(format!(
                    "normalization needs an irrational constant ({prime}^{v})"
                )));
            }
            let k = i64::try_from(v.to_integer())
                .map_err(|_| Error::PlanMismatch("constant exponent overflow".into()))?;
            let factor = BigRational::from_integer(prime.clone());
            magnitudes[i] *= rational_int_pow(&factor, k);
        }
    }

    // Signs: smallest (most-positive-first) sign vector satisfying
    // every equation.
    let signs = solve_signs(&matrix, &ratios, params.len())?;

    let mut out = BTreeMap::new();
    for (i, n) in params.iter().enumerate() {
        let coeff = if signs[i] {
            -magnitudes[i].clone()
        } else {
            magnitudes[i].clone()
        };
        let mut value = Expr::constant(coeff);
        for (sym, exps) in &exponents {
            let e = exps[i];
            if !e.is_zero() {
                value = value.mul(&Expr::symbol_pow(sym.clone(), e)?);
            }
        }
        out.insert(*n, value);
    }

    // Verify before committing: every equation must hit its target.
    let bindings: BTreeMap<Symbol, Expr> = out
        .iter()
        .map(|(n, e)| (Symbol::group(*n), e.clone()))
        .collect();
    for entry in batch {
        let reached = entry.value.substitute(&bindings)?;
        let target = Expr::constant(entry.target.clone());
        if reached != target {
            return Err(Error::PlanMismatch(format!(
                "monomial solve for T^{}_{{{},{}}} reached {reached}, wanted {target}",
                entry.equation, entry.slot.0, entry.slot.1
            )));
        }
    }
    Ok(out)
}

fn exp_to_rational(e: Exponent) -> BigRational {
    BigRational::new(BigInt::from(*e.numer()), BigInt::from(*e.denom()))
}

fn rational_to_exp(r: &BigRational) -> Result<Exponent> {
    let n = i64::try_from(r.numer().clone())
        .map_err(|_| Error::PlanMismatch("exponent overflow".into()))?;
    let d = i64::try_from(r.denom().clone())
        .map_err(|_| Error::PlanMismatch("exponent overflow".into()))?;
    Ok(Ratio::new(n, d))
}

fn rational_int_pow(base: &BigRational, k: i64) -> BigRational {
    let mag = base.pow(k.unsigned_abs().try_into().unwrap_or(u32::MAX) as i32);
    if k < 0 {
        mag.recip()
    } else {
        mag
    }
}

/// Dense Gaussian elimination over the rationals; `None` when the
/// square system has no unique solution.
fn solve_rational(matrix: &[Vec<BigRational>], rhs: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|r| r.len() != n) || rhs.len() != n {
        return None;
    }
    let mut m: Vec<Vec<BigRational>> = matrix.to_vec();
    let mut b: Vec<BigRational> = rhs.to_vec();
    for col in 0..n {
        let pivot = (col..n).find(|r| !m[*r][col].is_zero())?;
        m.swap(col, pivot);
        b.swap(col, pivot);
        let p = m[col][col].clone();
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &p;
            for c in 0..n {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    Some(
        (0..n)
            .map(|i| &b[i] / &m[i][i])
            .collect(),
    )
}

fn prime_factors(n: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut n = n.clone();
    if n.is_zero() || n == BigInt::one() {
        return out;
    }
    let mut p = BigInt::from(2);
    while &p * &p <= n {
        if (&n % &p).is_zero() {
            out.push(p.clone());
            while (&n % &p).is_zero() {
                n /= &p;
            }
        }
        p += 1;
    }
    if n > BigInt::one() {
        out.push(n);
    }
    out
}

fn valuation(n: &BigInt, p: &BigInt) -> u32 {
    let mut v = 0;
    let mut n = n.clone();
    if n.is_zero() {
        return 0;
    }
    while (&n % p).is_zero() {
        v += 1;
        n /= p;
    }
    v
}

/// Finds the lexicographically first sign vector (`false` = +1) such
/// that `prod_i sign_i^{m_ei} = sign(t_e/c_e)` for every equation.
fn solve_signs(
    matrix: &[Vec<BigRational>],
    ratios: &[BigRational],
    n: usize,
) -> Result<Vec<bool>> {
    if n > 16 {
        return Err(Error::PlanMismatch(
            "monomial batch too large for sign search".into(),
        ));
    }
    'mask: for mask in 0u32..(1 << n) {
        let signs: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
        for (row, ratio) in matrix.iter().zip(ratios) {
            let mut sign_negative = false;
            for (i, m) in row.iter().enumerate() {
                if !signs[i] || m.is_zero() {
                    continue;
                }
                // (-1)^(p/q): defined for odd q only, value (-1)^p.
                if m.denom() % BigInt::from(2) == BigInt::zero() {
                    continue 'mask;
                }
                if m.numer() % BigInt::from(2) != BigInt::zero() {
                    sign_negative = !sign_negative;
                }
            }
            if sign_negative != ratio.is_negative() {
                continue 'mask;
            }
        }
        return Ok(signs);
    }
    Err(Error::PlanMismatch(
        "no sign assignment satisfies the monomial system".into(),
    ))
}
