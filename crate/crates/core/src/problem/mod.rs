//! The fifth-order operator, its two equivalence problems, the base
//! coframe, the 15-parameter structure group, the lifted coframe, and
//! the Maurer-Cartan basis.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, JetCoord, Symbol};
use crate::forms::{
    coord_to_theta_from_inverse, differential, BasisContext, CovectorLabel, ExprMatrix,
    FrameBasis, OneForm,
};

#[cfg(test)]
mod tests;

/// Which equivalence problem is being solved; the variants differ only
/// in the last coframe element and hence in the loop-one torsion.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Identification `D[u] = Dbar[ubar]`.
    Direct,
    /// Conjugation `Dbar = phi * D * (1/phi)`, preserving eigenvalue
    /// problems.
    Gauge,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Direct => "direct",
            Variant::Gauge => "gauge",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A monic fifth-order operator `D^5 + f4 D^4 + ... + f1 D + f0`.
///
/// Coefficients are either concrete expressions in `x` and declared
/// constants, or the formal symbols `f0..f4` (the generic operator the
/// reductions are run on symbolically).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpec {
    coeffs: [Expr; 5],
    consts: Vec<Arc<str>>,
    formal: bool,
}

impl OperatorSpec {
    /// The generic operator: every coefficient is an opaque analytic
    /// function of `x`, represented by the formal symbols `f0..f4`.
    pub fn generic() -> OperatorSpec {
        OperatorSpec {
            coeffs: std::array::from_fn(|i| Expr::coeff_fn(i as u8, 0)),
            consts: Vec::new(),
            formal: true,
        }
    }

    /// A concrete operator; coefficients may mention only `x` and the
    /// declared constants.
    pub fn new(
        coeffs: [Expr; 5],
        consts: impl IntoIterator<Item = Arc<str>>,
    ) -> Result<OperatorSpec> {
        let consts: Vec<Arc<str>> = consts.into_iter().collect();
        for (i, c) in coeffs.iter().enumerate() {
            for sym in c.symbols() {
                let ok = match &sym {
                    Symbol::Jet(JetCoord::X) => true,
                    Symbol::Const(name) => consts.iter().any(|c| c == name),
                    _ => false,
                };
                if !ok {
                    return Err(Error::Internal(format!(
                        "coefficient f{i} mentions {sym}, expected only x and declared constants"
                    )));
                }
            }
        }
        Ok(OperatorSpec {
            coeffs,
            consts,
            formal: false,
        })
    }

    pub fn is_formal(&self) -> bool {
        self.formal
    }

    pub fn constants(&self) -> &[Arc<str>] {
        &self.consts
    }

    pub fn coefficient(&self, i: u8) -> &Expr {
        &self.coeffs[i as usize]
    }

    /// The `order`-th x-derivative of coefficient `i`: a formal bump
    /// for the generic operator, exact differentiation otherwise.
    pub fn coefficient_derivative(&self, i: u8, order: u32) -> Expr {
        if self.formal {
            return Expr::coeff_fn(i, order);
        }
        let mut e = self.coeffs[i as usize].clone();
        for _ in 0..order {
            e = e.partial_derivative(&Symbol::jet(JetCoord::X));
        }
        e
    }

    /// The invariant scalar whose differential closes the coframe:
    /// `I = D[u]` for the direct problem, `I = D[u]/u` for gauge.
    pub fn invariant_scalar(&self, variant: Variant) -> Expr {
        // D^i u in jet coordinates: u, p, q, r, s, t.
        let jets = [JetCoord::U, JetCoord::P, JetCoord::Q, JetCoord::R, JetCoord::S];
        let mut total = Expr::jet(JetCoord::T);
        for (i, jet) in jets.iter().enumerate() {
            total = total.add(&self.coeffs[i].mul(&Expr::jet(*jet)));
        }
        match variant {
            Variant::Direct => total,
            Variant::Gauge => total
                .div(&Expr::jet(JetCoord::U))
                .expect("u is a symbol, not zero"),
        }
    }
}

/// The base coframe `omega^1..omega^7`: the six contact forms shared by
/// both problems and the exact form `omega^7 = dI`.
pub fn base_coframe(op: &OperatorSpec, variant: Variant) -> [OneForm; 7] {
    let ctx = BasisContext::coordinate();
    let coord = |c: JetCoord| CovectorLabel::Coord(c);
    let x = Expr::jet(JetCoord::U);
    let _ = x;
    let mut omega: Vec<OneForm> = Vec::with_capacity(7);

    // omega^1 = dx
    omega.push(
        OneForm::from_terms(ctx.clone(), [(coord(JetCoord::X), Expr::one())]).unwrap(),
    );
    // omega^2 = (du - p dx)/u
    let u = Expr::jet(JetCoord::U);
    omega.push(
        OneForm::from_terms(
            ctx.clone(),
            [
                (coord(JetCoord::U), Expr::one().div(&u).unwrap()),
                (
                    coord(JetCoord::X),
                    Expr::jet(JetCoord::P).neg().div(&u).unwrap(),
                ),
            ],
        )
        .unwrap(),
    );
    // omega^{k+2} = d(jet_k) - jet_{k+1} dx for (p,q), (q,r), (r,s), (s,t)
    let ladder = [
        (JetCoord::P, JetCoord::Q),
        (JetCoord::Q, JetCoord::R),
        (JetCoord::R, JetCoord::S),
        (JetCoord::S, JetCoord::T),
    ];
    for (a, b) in ladder {
        omega.push(
            OneForm::from_terms(
                ctx.clone(),
                [
                    (coord(a), Expr::one()),
                    (coord(JetCoord::X), Expr::jet(b).neg()),
                ],
            )
            .unwrap(),
        );
    }
    // omega^7 = dI, exact by construction.
    omega.push(differential(&op.invariant_scalar(variant)));
    omega.try_into().expect("seven forms")
}

/// Group parameter state: assigned parameters map to expressions in
/// the jet coordinates (never to other group parameters); the rest are
/// still-free symbols.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroupState {
    assigned: BTreeMap<u8, Expr>,
}

impl GroupState {
    pub fn fresh() -> GroupState {
        GroupState::default()
    }

    /// The identity element's value for a parameter: `1` on the
    /// diagonal slots, `0` elsewhere.
    pub fn identity_value(n: u8) -> Expr {
        if matches!(n, 1 | 3 | 6 | 10 | 15) {
            Expr::one()
        } else {
            Expr::zero()
        }
    }

    /// A state whose `frozen` parameters sit at the identity element
    /// and whose remaining parameters stay free. Used by the
    /// progressive reduction: once a loop's solutions are substituted
    /// into the coframe, the residual subgroup acts relative to the
    /// renamed base with the solved slots at the identity.
    pub fn identity_frozen(frozen: impl IntoIterator<Item = u8>) -> Result<GroupState> {
        let mut state = GroupState::fresh();
        for n in frozen {
            state.assign(n, GroupState::identity_value(n))?;
        }
        Ok(state)
    }

    pub fn assigned(&self) -> &BTreeMap<u8, Expr> {
        &self.assigned
    }

    pub fn is_free(&self, n: u8) -> bool {
        !self.assigned.contains_key(&n)
    }

    pub fn free_params(&self) -> Vec<u8> {
        (1..=15).filter(|n| self.is_free(*n)).collect()
    }

    pub fn free_count(&self) -> usize {
        15 - self.assigned.len()
    }

    /// The current value of `a{n}`: its assignment, or the symbol
    /// itself while free.
    pub fn entry(&self, n: u8) -> Expr {
        self.assigned
            .get(&n)
            .cloned()
            .unwrap_or_else(|| Expr::group(n))
    }

    pub fn assign(&mut self, n: u8, value: Expr) -> Result<()> {
        if !(1..=15).contains(&n) {
            return Err(Error::Internal(format!("no group parameter a{n}")));
        }
        if self.assigned.contains_key(&n) {
            return Err(Error::PlanMismatch(format!(
                "parameter a{n} assigned twice"
            )));
        }
        if value.symbols().iter().any(Symbol::is_group) {
            return Err(Error::Internal(format!(
                "assignment for a{n} still mentions group parameters: {value}"
            )));
        }
        self.assigned.insert(n, value);
        Ok(())
    }

    /// The domain condition `a1*a3*a6*a10*a15 != 0`.
    pub fn check_nondegenerate(&self) -> Result<()> {
        for n in [1u8, 3, 6, 10, 15] {
            if self.entry(n).is_zero() {
                return Err(Error::SingularGroup(format!("a{n} vanishes")));
            }
        }
        Ok(())
    }
}

/// Row/column slot of each parameter in the structure-group matrix;
/// `PARAM_SLOTS[n-1]` is the slot of `a{n}` (1-based rows and columns).
pub const PARAM_SLOTS: [(u8, u8); 15] = [
    (1, 1),
    (3, 2),
    (3, 3),
    (4, 2),
    (4, 3),
    (4, 4),
    (5, 2),
    (5, 3),
    (5, 4),
    (5, 5),
    (6, 2),
    (6, 3),
    (6, 4),
    (6, 5),
    (6, 6),
];

/// The structure-group matrix with the state's assignments substituted.
pub fn group_matrix(state: &GroupState) -> ExprMatrix {
    let mut g = ExprMatrix::zero(7, 7);
    g.set(1, 1, Expr::one());
    g.set(6, 6, Expr::one());
    for (idx, (row, col)) in PARAM_SLOTS.iter().enumerate() {
        g.set(
            (*row - 1) as usize,
            (*col - 1) as usize,
            state.entry((idx + 1) as u8),
        );
    }
    g
}

/// A lifted coframe `theta = g . omega` together with the group state
/// and the cached coordinate change of basis.
#[derive(Clone, Debug)]
pub struct LiftedCoframe {
    pub theta: [OneForm; 7],
    pub group: GroupState,
    /// `theta^i = sum_c coord_matrix[i][c] dcoord_c`.
    pub coord_matrix: ExprMatrix,
    /// Exact inverse: `dcoord_c = sum_i change_of_basis[c][i] theta^i`.
    pub change_of_basis: ExprMatrix,
}

pub fn lifted_coframe(base: &[OneForm; 7], state: &GroupState) -> Result<LiftedCoframe> {
    state.check_nondegenerate()?;
    let g = group_matrix(state);
    let ctx = BasisContext::coordinate();
    let mut theta: Vec<OneForm> = Vec::with_capacity(7);
    for i in 0..7 {
        let mut form = OneForm::zero(ctx.clone());
        for (j, omega) in base.iter().enumerate() {
            let coeff = g.get(i, j);
            if coeff.is_zero() {
                continue;
            }
            form = form.add(&omega.scale(coeff))?;
        }
        theta.push(form);
    }
    let theta: [OneForm; 7] = theta.try_into().expect("seven forms");

    let mut coord_matrix = ExprMatrix::zero(7, 7);
    for (i, form) in theta.iter().enumerate() {
        for (label, coeff) in form.terms() {
            match label {
                CovectorLabel::Coord(c) => coord_matrix.set(i, c.index(), coeff.clone()),
                other => {
                    return Err(Error::Internal(format!(
                        "lifted coframe mentions {other}"
                    )))
                }
            }
        }
    }
    let change_of_basis = coord_matrix
        .inverse()
        .map_err(|e| match e {
            Error::SingularSystem { .. } => {
                Error::SingularGroup("lifted coframe does not span the cotangent space".into())
            }
            other => other,
        })?;
    Ok(LiftedCoframe {
        theta,
        group: state.clone(),
        coord_matrix,
        change_of_basis,
    })
}

/// The Maurer-Cartan basis of the current free subgroup.
#[derive(Clone, Debug)]
pub struct MaurerCartan {
    /// Basis one-forms in the `da` covectors, labelled by the group
    /// parameter sitting at the matrix slot the form came from (which
    /// reproduces the alpha numbering of the full group).
    pub alphas: Vec<(u8, OneForm)>,
    /// `da{m} = sum_l da_to_alpha[m][l] alpha^l`, frame context.
    pub da_to_alpha: BTreeMap<u8, OneForm>,
}

/// Computes `gamma = dg . g^{-1}` with `d` acting on the free
/// parameters only, selects a basis among the nonzero entries (in the
/// canonical slot order), and inverts the basis onto the free `da`s.
pub fn maurer_cartan(state: &GroupState) -> Result<MaurerCartan> {
    state.check_nondegenerate()?;
    let free = state.free_params();
    if free.is_empty() {
        return Ok(MaurerCartan {
            alphas: Vec::new(),
            da_to_alpha: BTreeMap::new(),
        });
    }
    let g = group_matrix(state);
    let g_inv = g.inverse().map_err(|_| {
        Error::SingularGroup("structure-group matrix is not invertible".into())
    })?;

    let ctx = BasisContext::coordinate();
    // gamma[i][j] = sum over free slots (i,k) of da_m * g_inv[k][j].
    let mut gamma: Vec<((u8, u8), OneForm)> = Vec::new();
    for (idx, (row, col)) in PARAM_SLOTS.iter().enumerate() {
        let m = (idx + 1) as u8;
        if !state.is_free(m) {
            continue;
        }
        for j in 0..7usize {
            let coeff = g_inv.get((*col - 1) as usize, j);
            if coeff.is_zero() {
                continue;
            }
            let slot = (*row, (j + 1) as u8);
            let entry = gamma.iter_mut().find(|(s, _)| *s == slot);
            let term = OneForm::from_terms(
                ctx.clone(),
                [(CovectorLabel::Param(m), coeff.clone())],
            )?;
            match entry {
                Some((_, form)) => *form = form.add(&term)?,
                None => gamma.push((slot, term)),
            }
        }
    }
    // Deterministic order: by the canonical numbering of slots.
    gamma.sort_by_key(|(slot, _)| slot_number(*slot));

    // Greedy basis selection by symbolic elimination over the free-da
    // coefficient vectors.
    let col_of: BTreeMap<u8, usize> = free.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let to_vec = |form: &OneForm| -> Vec<Expr> {
        let mut v = vec![Expr::zero(); free.len()];
        for (label, coeff) in form.terms() {
            if let CovectorLabel::Param(m) = label {
                v[col_of[&m]] = coeff.clone();
            }
        }
        v
    };
    let mut reduced: Vec<(usize, Vec<Expr>)> = Vec::new(); // (pivot col, row)
    let mut alphas: Vec<(u8, OneForm)> = Vec::new();
    for (slot, form) in &gamma {
        let mut row = to_vec(form);
        for (pc, basis_row) in &reduced {
            if row[*pc].is_zero() {
                continue;
            }
            let factor = row[*pc].div(&basis_row[*pc])?;
            for (a, b) in row.iter_mut().zip(basis_row) {
                *a = a.sub(&b.mul(&factor));
            }
        }
        if let Some(pc) = row.iter().position(|e| !e.is_zero()) {
            reduced.push((pc, row));
            let label = slot_number(*slot).ok_or_else(|| {
                Error::Internal(format!("gamma entry at non-canonical slot {slot:?}"))
            })?;
            alphas.push((label, form.clone()));
        }
    }
    if alphas.len() != free.len() {
        return Err(Error::SingularGroup(format!(
            "Maurer-Cartan matrix spans {} directions for {} free parameters",
            alphas.len(),
            free.len()
        )));
    }

    // Invert: alpha = P . da  =>  da = P^{-1} . alpha.
    let p = ExprMatrix::from_rows(alphas.iter().map(|(_, f)| to_vec(f)).collect());
    let p_inv = p.inverse()?;
    let frame = BasisContext::frame();
    let mut da_to_alpha = BTreeMap::new();
    for (col, m) in free.iter().enumerate() {
        let mut form = OneForm::zero(frame.clone());
        for (row, (label, _)) in alphas.iter().enumerate() {
            form.add_term(
                CovectorLabel::Alpha(*label),
                p_inv.get(col, row).clone(),
            )?;
        }
        da_to_alpha.insert(*m, form);
    }
    Ok(MaurerCartan {
        alphas,
        da_to_alpha,
    })
}

/// The canonical alpha number of a matrix slot: the index of the group
/// parameter living there in the full group.
fn slot_number(slot: (u8, u8)) -> Option<u8> {
    PARAM_SLOTS
        .iter()
        .position(|s| *s == slot)
        .map(|i| (i + 1) as u8)
}

/// Assembles the per-loop change-of-basis cache from the lifted
/// coframe and the Maurer-Cartan basis.
pub fn frame_basis(lc: &LiftedCoframe, mc: &MaurerCartan) -> FrameBasis {
    FrameBasis::new(
        coord_to_theta_from_inverse(&lc.change_of_basis),
        mc.da_to_alpha.clone(),
        lc.theta.clone(),
        mc.alphas.clone(),
    )
}
