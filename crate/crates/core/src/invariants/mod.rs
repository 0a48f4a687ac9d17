//! Extraction, specialization, and numeric comparison of the
//! fundamental invariants of the final {e}-structure.


use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expr::{EvalEnv, Expr, JetCoord, Symbol};
use crate::problem::{OperatorSpec, Variant};
use crate::reduction::ReductionTrace;

/// Where each named invariant lives in the final structure equations:
/// `(name, equation, slot)`.
fn named_slots(variant: Variant) -> &'static [(&'static str, u8, (u8, u8))] {
    match variant {
        Variant::Direct => &[
            ("I1", 4, (1, 4)),
            ("I2", 5, (1, 4)),
            ("I3", 6, (1, 2)),
            ("I4", 6, (1, 3)),
            ("I5", 6, (1, 4)),
            ("I6", 6, (3, 4)),
        ],
        Variant::Gauge => &[
            ("L1", 4, (1, 4)),
            ("L2", 5, (1, 4)),
            ("L3", 6, (1, 3)),
            ("L4", 6, (1, 4)),
            ("L5", 6, (3, 4)),
        ],
    }
}

/// The named fundamental invariants of one reduction, plus anything
/// non-constant the engine found outside the named slots.
#[derive(Clone, Debug)]
pub struct InvariantSet {
    pub variant: Variant,
    pub entries: BTreeMap<String, Expr>,
    pub extras: BTreeMap<String, Expr>,
}

impl InvariantSet {
    pub fn get(&self, name: &str) -> Option<&Expr> {
        self.entries.get(name)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "variant": self.variant.name(),
            "invariants": self.entries.iter().map(|(k, v)| (k.clone(), v.to_string())).collect::<BTreeMap<_, _>>(),
            "structured": self.entries,
            "extras": self.extras.iter().map(|(k, v)| (k.clone(), v.to_string())).collect::<BTreeMap<_, _>>(),
        })
    }
}

/// Reads the named invariants out of a completed reduction trace.
pub fn extract_invariants(trace: &ReductionTrace) -> Result<InvariantSet> {
    for eq in &trace.final_structure.equations {
        for coeff in eq.values() {
            if coeff.symbols().iter().any(Symbol::is_group) {
                return Err(Error::IncompleteReduction(
                    "final equations still mention group parameters".into(),
                ));
            }
        }
    }
    let mut entries = BTreeMap::new();
    let mut named: Vec<(u8, (u8, u8))> = Vec::new();
    for (name, eq, slot) in named_slots(trace.variant) {
        entries.insert(name.to_string(), trace.final_torsion(*eq, slot.0, slot.1));
        named.push((*eq, *slot));
    }
    let mut extras = BTreeMap::new();
    for (i, eq) in trace.final_structure.equations.iter().enumerate() {
        for (slot, coeff) in eq {
            let key = ((i + 1) as u8, *slot);
            if named.contains(&key) || coeff.as_rational_constant().is_some() {
                continue;
            }
            extras.insert(
                format!("T^{}_{{{},{}}}", i + 1, slot.0, slot.1),
                coeff.clone(),
            );
        }
    }
    Ok(InvariantSet {
        variant: trace.variant,
        entries,
        extras,
    })
}

/// Substitutes a concrete operator's coefficients (with all needed
/// derivative bumps) into a generic invariant set.
pub fn specialize(inv: &InvariantSet, op: &OperatorSpec) -> Result<InvariantSet> {
    let mut bindings: BTreeMap<Symbol, Expr> = BTreeMap::new();
    for e in inv.entries.values().chain(inv.extras.values()) {
        for sym in e.symbols() {
            if let Symbol::Coeff { index, order } = sym {
                bindings
                    .entry(Symbol::coeff(index, order))
                    .or_insert_with(|| op.coefficient_derivative(index, order));
            }
        }
    }
    let map = |src: &BTreeMap<String, Expr>| -> Result<BTreeMap<String, Expr>> {
        src.iter()
            .map(|(k, v)| Ok((k.clone(), v.substitute(&bindings)?)))
            .collect()
    };
    Ok(InvariantSet {
        variant: inv.variant,
        entries: map(&inv.entries)?,
        extras: map(&inv.extras)?,
    })
}

/// Sampling domain: `x` uniform in [-1, 1], `u` uniform in [0.5, 2]
/// (the positive component, clear of the `u = 0` pole), the remaining
/// jet coordinates uniform in [-2, 2].
pub fn sample_point(rng: &mut impl Rng) -> BTreeMap<Symbol, f64> {
    let mut point = BTreeMap::new();
    point.insert(Symbol::jet(JetCoord::X), rng.gen_range(-1.0..1.0));
    point.insert(Symbol::jet(JetCoord::U), rng.gen_range(0.5..2.0));
    for c in [JetCoord::P, JetCoord::Q, JetCoord::R, JetCoord::S, JetCoord::T] {
        point.insert(Symbol::jet(c), rng.gen_range(-2.0..2.0));
    }
    point
}

struct ConstEnv<'a> {
    point: &'a BTreeMap<Symbol, f64>,
    consts: &'a BTreeMap<String, f64>,
}

impl EvalEnv for ConstEnv<'_> {
    fn value(&self, sym: &Symbol) -> Result<f64> {
        if let Some(v) = self.point.get(sym) {
            return Ok(*v);
        }
        if let Symbol::Const(name) = sym {
            if let Some(v) = self.consts.get(name.as_ref()) {
                return Ok(*v);
            }
        }
        Err(Error::UnboundSymbol(sym.to_string()))
    }
}

/// Scale-aware constancy test: sample standard deviation below
/// `1e-9 * (1 + |mean|)`.
fn is_constant(values: &[f64]) -> bool {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() < 1e-9 * (1.0 + mean.abs())
}

/// Numeric behavior of one invariant over the sample set.
#[derive(Clone, Debug)]
pub struct InvariantFingerprint {
    pub name: String,
    pub constant: bool,
    pub x_independent: bool,
    pub values: Vec<f64>,
}

/// Numeric fingerprint of an invariant set: per-invariant constancy
/// and x-dependence flags, the generic Jacobian rank with respect to
/// the seven jet coordinates, and pairwise functional-dependence
/// indicators.
#[derive(Clone, Debug)]
pub struct Fingerprint {
    pub variant: Variant,
    pub invariants: Vec<InvariantFingerprint>,
    pub jacobian_rank: usize,
    pub dependent_pairs: Vec<(String, String)>,
}

impl Fingerprint {
    pub fn to_json(&self) -> Value {
        json!({
            "variant": self.variant.name(),
            "jacobian_rank": self.jacobian_rank,
            "invariants": self.invariants.iter().map(|f| {
                json!({
                    "name": f.name,
                    "constant": f.constant,
                    "x_independent": f.x_independent,
                })
            }).collect::<Vec<_>>(),
            "dependent_pairs": self.dependent_pairs,
        })
    }
}

const RANK_POINTS: usize = 8;
const FD_STEP: f64 = 1e-5;
const RANK_TOLERANCE: f64 = 1e-7;

/// Computes the fingerprint of a specialized invariant set at `n`
/// seeded sample points. Points where any invariant fails to evaluate
/// are rejected; more than 90% rejection aborts with
/// `SamplingFailure`.
pub fn fingerprint(
    inv: &InvariantSet,
    seed: u64,
    n: usize,
    consts: &BTreeMap<String, f64>,
) -> Result<Fingerprint> {
    let exprs: Vec<(&String, &Expr)> = inv.entries.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<BTreeMap<Symbol, f64>> = Vec::with_capacity(n);
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(n); exprs.len()];
    let mut attempts = 0usize;
    while points.len() < n {
        attempts += 1;
        if attempts > 10 * n.max(1) {
            return Err(Error::SamplingFailure);
        }
        let point = sample_point(&mut rng);
        let env = ConstEnv {
            point: &point,
            consts,
        };
        let evaluated: Result<Vec<f64>> =
            exprs.iter().map(|(_, e)| e.evaluate(&env)).collect();
        match evaluated {
            Ok(vs) => {
                for (column, v) in values.iter_mut().zip(vs) {
                    column.push(v);
                }
                points.push(point);
            }
            Err(_) => continue,
        }
    }

    // x-independence: vary x along a fixed jet fiber.
    let mut x_flags = Vec::with_capacity(exprs.len());
    {
        let mut fiber = sample_point(&mut rng);
        let mut ok = vec![true; exprs.len()];
        let mut slices: Vec<Vec<f64>> = vec![Vec::new(); exprs.len()];
        let steps = n.max(8);
        for k in 0..steps {
            fiber.insert(
                Symbol::jet(JetCoord::X),
                -1.0 + 2.0 * (k as f64 + 0.5) / steps as f64,
            );
            let env = ConstEnv {
                point: &fiber,
                consts,
            };
            for (idx, (_, e)) in exprs.iter().enumerate() {
                match e.evaluate(&env) {
                    Ok(v) => slices[idx].push(v),
                    Err(_) => ok[idx] = false,
                }
            }
        }
        for (idx, slice) in slices.iter().enumerate() {
            x_flags.push(ok[idx] && !slice.is_empty() && is_constant(slice));
        }
    }

    let invariants: Vec<InvariantFingerprint> = exprs
        .iter()
        .enumerate()
        .map(|(idx, (name, _))| InvariantFingerprint {
            name: (*name).clone(),
            constant: is_constant(&values[idx]),
            x_independent: x_flags[idx],
            values: values[idx].clone(),
        })
        .collect();

    // Jacobian rank: maximum over a few sample points of the rank of
    // the (invariants x jet coordinates) matrix of central differences.
    let mut rank = 0usize;
    for point in points.iter().take(RANK_POINTS) {
        if let Some(jac) = jacobian(&exprs, point, consts) {
            rank = rank.max(numeric_rank(&jac));
        }
    }

    // Pairwise functional dependence: a pair is flagged when its 2x7
    // Jacobian never exceeds rank one on the sampled points.
    let mut dependent_pairs = Vec::new();
    for a in 0..exprs.len() {
        for b in (a + 1)..exprs.len() {
            let pair = [exprs[a], exprs[b]];
            let mut dependent = true;
            for point in points.iter().take(RANK_POINTS) {
                if let Some(jac) = jacobian(&pair, point, consts) {
                    if numeric_rank(&jac) > 1 {
                        dependent = false;
                        break;
                    }
                }
            }
            if dependent {
                dependent_pairs.push((exprs[a].0.clone(), exprs[b].0.clone()));
            }
        }
    }

    Ok(Fingerprint {
        variant: inv.variant,
        invariants,
        jacobian_rank: rank,
        dependent_pairs,
    })
}

fn jacobian(
    exprs: &[(&String, &Expr)],
    point: &BTreeMap<Symbol, f64>,
    consts: &BTreeMap<String, f64>,
) -> Option<Vec<Vec<f64>>> {
    let mut jac = Vec::with_capacity(exprs.len());
    for (_, e) in exprs {
        let mut row = Vec::with_capacity(7);
        for c in JetCoord::ALL {
            row.push(central_difference(e, &Symbol::jet(c), point, consts).ok()?);
        }
        jac.push(row);
    }
    Some(jac)
}

fn central_difference(
    e: &Expr,
    sym: &Symbol,
    point: &BTreeMap<Symbol, f64>,
    consts: &BTreeMap<String, f64>,
) -> Result<f64> {
    let mut hi = point.clone();
    let mut lo = point.clone();
    *hi.get_mut(sym).unwrap() += FD_STEP;
    *lo.get_mut(sym).unwrap() -= FD_STEP;
    let vh = e.evaluate(&ConstEnv { point: &hi, consts })?;
    let vl = e.evaluate(&ConstEnv { point: &lo, consts })?;
    Ok((vh - vl) / (2.0 * FD_STEP))
}

/// Row-echelon rank with a relative pivot threshold.
fn numeric_rank(matrix: &[Vec<f64>]) -> usize {
    if matrix.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<f64>> = matrix.to_vec();
    let cols = m[0].len();
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let tol = RANK_TOLERANCE * scale;
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..m.len()).max_by(|a, b| m[*a][col].abs().total_cmp(&m[*b][col].abs()));
        let Some(pivot) = pivot else { break };
        if m[pivot][col].abs() <= tol {
            continue;
        }
        m.swap(rank, pivot);
        for r in 0..m.len() {
            if r == rank {
                continue;
            }
            let factor = m[r][col] / m[rank][col];
            for c in 0..cols {
                m[r][c] -= factor * m[rank][c];
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Verdict of a necessary-condition comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Every implemented necessary condition agrees. Explicitly *not*
    /// a proof of equivalence.
    NecessaryConditionsHold,
    /// A concrete witness separates the two operators.
    Distinguished,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    ConstancyMismatch { invariant: String },
    ConstantValueMismatch { invariant: String, left: f64, right: f64 },
    XDependenceMismatch { invariant: String },
    RankMismatch { left: usize, right: usize },
    ValueMismatch { invariant: String, point_index: usize, left: f64, right: f64 },
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub left: Fingerprint,
    pub right: Fingerprint,
}

impl CompareReport {
    pub fn to_json(&self) -> Value {
        let witness = self.witness.as_ref().map(|w| match w {
            Witness::ConstancyMismatch { invariant } => json!({
                "kind": "constancy_mismatch", "invariant": invariant,
            }),
            Witness::ConstantValueMismatch { invariant, left, right } => json!({
                "kind": "constant_value_mismatch", "invariant": invariant,
                "left": left, "right": right,
            }),
            Witness::XDependenceMismatch { invariant } => json!({
                "kind": "x_dependence_mismatch", "invariant": invariant,
            }),
            Witness::RankMismatch { left, right } => json!({
                "kind": "rank_mismatch", "left": left, "right": right,
            }),
            Witness::ValueMismatch { invariant, point_index, left, right } => json!({
                "kind": "value_mismatch", "invariant": invariant,
                "point_index": point_index, "left": left, "right": right,
            }),
        });
        json!({
            "verdict": match self.verdict {
                Verdict::NecessaryConditionsHold => "necessary_conditions_hold",
                Verdict::Distinguished => "distinguished",
            },
            "witness": witness,
            "left": self.left.to_json(),
            "right": self.right.to_json(),
        })
    }
}

/// Compares two concrete operators through the invariants of the given
/// equivalence problem, sampling both at the same seeded points.
///
/// `Distinguished` always carries a concrete witness. The last-resort
/// pointwise value witness compares invariants in matched coordinates;
/// it separates operators that differ as written (the f4-shift case)
/// but is not invariant under changes of variables, so it is tried
/// only after the coordinate-free witnesses.
pub fn compare(
    op1: &OperatorSpec,
    op2: &OperatorSpec,
    variant: Variant,
    seed: u64,
    n: usize,
    consts: &BTreeMap<String, f64>,
) -> Result<CompareReport> {
    let plan = crate::reduction::NormalizationPlan::default_for(variant);
    let generic = crate::reduction::run_reduction(&OperatorSpec::generic(), variant, plan)?;
    let base = extract_invariants(&generic)?;
    let left_set = specialize(&base, op1)?;
    let right_set = specialize(&base, op2)?;
    let left = fingerprint(&left_set, seed, n, consts)?;
    let right = fingerprint(&right_set, seed, n, consts)?;

    let witness = find_witness(&left, &right);
    Ok(CompareReport {
        verdict: if witness.is_some() {
            Verdict::Distinguished
        } else {
            Verdict::NecessaryConditionsHold
        },
        witness,
        left,
        right,
    })
}

fn find_witness(left: &Fingerprint, right: &Fingerprint) -> Option<Witness> {
    for (a, b) in left.invariants.iter().zip(&right.invariants) {
        if a.constant != b.constant {
            return Some(Witness::ConstancyMismatch {
                invariant: a.name.clone(),
            });
        }
    }
    for (a, b) in left.invariants.iter().zip(&right.invariants) {
        if a.constant && b.constant {
            let va = a.values[0];
            let vb = b.values[0];
            if (va - vb).abs() > 1e-6 * (1.0 + va.abs().max(vb.abs())) {
                return Some(Witness::ConstantValueMismatch {
                    invariant: a.name.clone(),
                    left: va,
                    right: vb,
                });
            }
        }
    }
    for (a, b) in left.invariants.iter().zip(&right.invariants) {
        if a.x_independent != b.x_independent {
            return Some(Witness::XDependenceMismatch {
                invariant: a.name.clone(),
            });
        }
    }
    if left.jacobian_rank != right.jacobian_rank {
        return Some(Witness::RankMismatch {
            left: left.jacobian_rank,
            right: right.jacobian_rank,
        });
    }
    for (a, b) in left.invariants.iter().zip(&right.invariants) {
        for (idx, (va, vb)) in a.values.iter().zip(&b.values).enumerate() {
            if (va - vb).abs() > 1e-6 * (1.0 + va.abs().max(vb.abs())) {
                return Some(Witness::ValueMismatch {
                    invariant: a.name.clone(),
                    point_index: idx,
                    left: *va,
                    right: *vb,
                });
            }
        }
    }
    None
}
