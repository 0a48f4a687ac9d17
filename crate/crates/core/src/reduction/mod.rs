//! The Cartan loop: structure equations, torsion absorption,
//! plan-driven normalization, and the reduction trace down to the
//! {e}-structure.

mod absorb;
mod latex;
mod normalize;
mod plan;
mod run;

#[cfg(test)]
mod tests;

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::forms::{
    decompose_two_form, exterior_derivative, recompose, FrameBasis, TwoForm,
};
use crate::problem::LiftedCoframe;

pub use absorb::{absorb, AbsorptionResult};
pub use latex::{final_structure_latex, invariants_latex};
pub use normalize::normalize;
pub use plan::{NormalizationPlan, PlanEntry, PlanLoop};
pub use run::{
    paper_final_table, paper_invariant_text, run_reduction, Discrepancy, FinalStructure,
    LoopRecord, ReductionTrace,
};

/// One structure equation `d theta^i = sum A^i_{jl} alpha^l ^ theta^j
/// + sum T^i_{jk} theta^j ^ theta^k`.
#[derive(Clone, Debug, Default)]
pub struct StructureRow {
    /// `(l, j, A)` with constant `A`; only currently-free parameters
    /// appear as labels `l`.
    pub mc_terms: Vec<(u8, u8, BigRational)>,
    /// Torsion coefficients keyed by the oriented pair `j < k`.
    pub torsion: BTreeMap<(u8, u8), Expr>,
}

/// The seven structure equations of one loop.
#[derive(Clone, Debug, Default)]
pub struct StructureEquations {
    pub rows: [StructureRow; 7],
}

impl StructureEquations {
    pub fn row(&self, i: u8) -> &StructureRow {
        &self.rows[(i - 1) as usize]
    }

    pub fn torsion(&self, i: u8, j: u8, k: u8) -> Expr {
        self.rows[(i - 1) as usize]
            .torsion
            .get(&(j, k))
            .cloned()
            .unwrap_or_else(Expr::zero)
    }
}

/// Computes the exact structure equations of the lifted coframe by
/// exterior differentiation and change of basis. Each decomposition is
/// verified by recomposition before it is accepted.
pub fn structure_equations(
    lc: &LiftedCoframe,
    basis: &FrameBasis,
) -> Result<StructureEquations> {
    let mut rows: Vec<StructureRow> = Vec::with_capacity(7);
    for i in 0..7 {
        let dtheta = exterior_derivative(&lc.theta[i])?;
        let dec = decompose_two_form(&dtheta, basis)?;
        let back = recompose(&dec, basis)?;
        if back != dtheta {
            return Err(Error::Internal(format!(
                "decomposition of d(theta^{}) does not recompose",
                i + 1
            )));
        }
        let mut mc_terms = Vec::with_capacity(dec.mc.len());
        for ((l, j), coeff) in &dec.mc {
            let a = coeff.as_rational_constant().ok_or_else(|| {
                Error::Internal(format!(
                    "non-constant Maurer-Cartan coefficient {coeff} at alpha^{l} ^ theta^{j} in d(theta^{})",
                    i + 1
                ))
            })?;
            mc_terms.push((*l, *j, a));
        }
        rows.push(StructureRow {
            mc_terms,
            torsion: dec.torsion,
        });
    }
    Ok(StructureEquations {
        rows: rows.try_into().expect("seven rows"),
    })
}

/// Recomputes `d theta^i` for one row as a coordinate two-form; used
/// by consistency checks.
pub fn dtheta(lc: &LiftedCoframe, i: u8) -> Result<TwoForm> {
    exterior_derivative(&lc.theta[(i - 1) as usize])
}
