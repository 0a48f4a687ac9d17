//! Absorption of torsion: solve the linear system
//! `sum_l (A^i_{jl} z^l_k - A^i_{kl} z^l_j) = -T^i_{jk}`
//! for the modification coefficients `z`, set the undetermined
//! components to zero, and report the torsion that survives every
//! choice (the essential torsion).

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::Result;
use crate::expr::Expr;

use super::StructureEquations;

/// Outcome of absorption for one loop.
#[derive(Clone, Debug, Default)]
pub struct AbsorptionResult {
    /// Solved modification coefficients `z^l_j`; components the system
    /// leaves free are pinned to zero for determinism.
    pub z: BTreeMap<(u8, u8), Expr>,
    /// `U^i_{jk} = T^i_{jk} + B^i_{jk}[z]`, keyed `(i, (j, k))`; only
    /// nonzero entries are stored. This is exactly the torsion no
    /// choice of `z` can remove.
    pub essential: BTreeMap<(u8, (u8, u8)), Expr>,
}

pub fn absorb(se: &StructureEquations) -> Result<AbsorptionResult> {
    // Variable order: (alpha label, theta index), ascending.
    let mut labels: Vec<u8> = se
        .rows
        .iter()
        .flat_map(|row| row.mc_terms.iter().map(|(l, _, _)| *l))
        .collect();
    labels.sort_unstable();
    labels.dedup();
    let mut vars: Vec<(u8, u8)> = Vec::with_capacity(labels.len() * 7);
    for l in &labels {
        for j in 1..=7u8 {
            vars.push((*l, j));
        }
    }
    let var_index: BTreeMap<(u8, u8), usize> =
        vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();

    // Assemble the sparse rational rows with expression right-hand
    // sides, in deterministic (i, j, k) order.
    struct Row {
        coeffs: BTreeMap<usize, BigRational>,
        rhs: Expr,
    }
    let mut system: Vec<Row> = Vec::new();
    for i in 1..=7u8 {
        let row = se.row(i);
        for j in 1..=7u8 {
            for k in (j + 1)..=7u8 {
                // Substituting alpha^l -> pi^l + z^l_m theta^m turns the
                // torsion into U = T + B with
                // B^i_{jk} = sum_l (A^i_{kl} z^l_j - A^i_{jl} z^l_k);
                // absorption solves B = -T.
                let mut coeffs: BTreeMap<usize, BigRational> = BTreeMap::new();
                for (l, jp, a) in &row.mc_terms {
                    if *jp == k {
                        let idx = var_index[&(*l, j)];
                        let slot = coeffs.entry(idx).or_insert_with(BigRational::zero);
                        *slot += a;
                    }
                    if *jp == j {
                        let idx = var_index[&(*l, k)];
                        let slot = coeffs.entry(idx).or_insert_with(BigRational::zero);
                        *slot -= a;
                    }
                }
                coeffs.retain(|_, c| !c.is_zero());
                let torsion = row.torsion.get(&(j, k));
                if coeffs.is_empty() && torsion.is_none() {
                    continue;
                }
                let rhs = torsion.map(Expr::neg).unwrap_or_else(Expr::zero);
                system.push(Row { coeffs, rhs });
            }
        }
    }

    // Gauss-Jordan over the rationals, expression-valued RHS. Pivot
    // selection is first-nonzero in variable order, so the result is
    // deterministic.
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (var col, row)
    let mut used_rows: Vec<bool> = vec![false; system.len()];
    for col in 0..vars.len() {
        let Some(pivot_row) = (0..system.len()).find(|r| {
            !used_rows[*r]
                && system[*r]
                    .coeffs
                    .get(&col)
                    .is_some_and(|c| !c.is_zero())
        }) else {
            continue;
        };
        used_rows[pivot_row] = true;
        pivots.push((col, pivot_row));
        let pivot_coeff = system[pivot_row].coeffs[&col].clone();
        // Normalize the pivot row.
        {
            let row = &mut system[pivot_row];
            for c in row.coeffs.values_mut() {
                *c /= &pivot_coeff;
            }
            row.rhs = row.rhs.scale(&(BigRational::from_integer(1.into()) / &pivot_coeff));
        }
        let pivot_copy_coeffs = system[pivot_row].coeffs.clone();
        let pivot_copy_rhs = system[pivot_row].rhs.clone();
        for r in 0..system.len() {
            if r == pivot_row {
                continue;
            }
            let Some(factor) = system[r].coeffs.get(&col).cloned() else {
                continue;
            };
            if factor.is_zero() {
                continue;
            }
            let row = &mut system[r];
            for (c, v) in &pivot_copy_coeffs {
                let slot = row.coeffs.entry(*c).or_insert_with(BigRational::zero);
                *slot -= &factor * v;
            }
            row.coeffs.retain(|_, c| !c.is_zero());
            row.rhs = row.rhs.sub(&pivot_copy_rhs.scale(&factor));
        }
    }

    // Read the particular solution: free variables are zero, so each
    // pivot variable equals its row's RHS.
    let mut z: BTreeMap<(u8, u8), Expr> = BTreeMap::new();
    for (col, row) in &pivots {
        let value = system[*row].rhs.clone();
        if !value.is_zero() {
            z.insert(vars[*col], value.clone());
        }
    }
    // Determinism and completeness: record explicit zeros for the free
    // components that actually occur in some equation.
    for (l, j) in &vars {
        z.entry((*l, *j)).or_insert_with(Expr::zero);
    }

    // Essential torsion: U = T + B[z] per slot.
    let mut essential = BTreeMap::new();
    for i in 1..=7u8 {
        let row = se.row(i);
        for j in 1..=7u8 {
            for k in (j + 1)..=7u8 {
                let mut u = row
                    .torsion
                    .get(&(j, k))
                    .cloned()
                    .unwrap_or_else(Expr::zero);
                // B^i_{jk}[z] = sum_l (A^i_{kl} z^l_j - A^i_{jl} z^l_k).
                for (l, jp, a) in &row.mc_terms {
                    if *jp == k {
                        u = u.add(&z[&(*l, j)].scale(a));
                    }
                    if *jp == j {
                        u = u.sub(&z[&(*l, k)].scale(a));
                    }
                }
                if !u.is_zero() {
                    essential.insert((i, (j, k)), u);
                }
            }
        }
    }
    Ok(AbsorptionResult { z, essential })
}
