//! Change of basis between coordinate covectors and the abstract
//! `(theta, alpha)` frame, and the decomposition of two-forms into
//! `alpha^theta` and `theta^theta` buckets.
//!
//! A [`FrameBasis`] is built once per reduction loop from the current
//! lifted coframe and Maurer-Cartan basis; it caches both directions of
//! the rewrite, which is the hot path of every loop.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::Expr;

use super::{BasisContext, CovectorLabel, OneForm, TwoForm};

/// Cached change of basis for one loop of the reduction.
#[derive(Clone, Debug)]
pub struct FrameBasis {
    /// For each jet coordinate, its differential rewritten over
    /// `theta^1..theta^7` (frame context).
    coord_to_theta: [OneForm; 7],
    /// For each free group parameter, `da` rewritten over the alpha
    /// basis (frame context).
    da_to_alpha: BTreeMap<u8, OneForm>,
    /// The lifted coframe itself: `theta^i` as coordinate forms.
    theta_coord: [OneForm; 7],
    /// The Maurer-Cartan basis: label and coordinate (da) form.
    alpha_coord: Vec<(u8, OneForm)>,
}

/// Exact rewrite of a coordinate two-form over the frame:
/// `mc[(l, j)] alpha^l ^ theta^j + torsion[(j, k)] theta^j ^ theta^k`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Decomposition {
    pub mc: BTreeMap<(u8, u8), Expr>,
    pub torsion: BTreeMap<(u8, u8), Expr>,
}

impl FrameBasis {
    pub fn new(
        coord_to_theta: [OneForm; 7],
        da_to_alpha: BTreeMap<u8, OneForm>,
        theta_coord: [OneForm; 7],
        alpha_coord: Vec<(u8, OneForm)>,
    ) -> FrameBasis {
        FrameBasis {
            coord_to_theta,
            da_to_alpha,
            theta_coord,
            alpha_coord,
        }
    }

    pub fn theta(&self, i: u8) -> &OneForm {
        &self.theta_coord[(i - 1) as usize]
    }

    pub fn alphas(&self) -> &[(u8, OneForm)] {
        &self.alpha_coord
    }

    fn alpha_coordinate_form(&self, label: u8) -> Option<&OneForm> {
        self.alpha_coord
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, f)| f)
    }

    /// The frame image of a coordinate covector.
    fn frame_image(&self, label: CovectorLabel) -> Result<&OneForm> {
        match label {
            CovectorLabel::Coord(c) => Ok(&self.coord_to_theta[c.index()]),
            CovectorLabel::Param(n) => self.da_to_alpha.get(&n).ok_or(Error::BasisMismatch),
            _ => Err(Error::NeedsCoordinateBasis),
        }
    }
}

/// Rewrites a coordinate-basis two-form exactly over the frame.
///
/// Fails with `BasisMismatch` when the form mentions the differential
/// of a parameter that has no alpha image (an already-normalized
/// parameter), and with `Internal` if an `alpha^alpha` term survives,
/// which would mean the claimed frame does not span the input.
pub fn decompose_two_form(two: &TwoForm, basis: &FrameBasis) -> Result<Decomposition> {
    let frame_ctx = BasisContext::frame();
    let mut acc = TwoForm::zero(frame_ctx);
    for ((a, b), coeff) in two.terms() {
        let fa = basis.frame_image(a)?;
        let fb = basis.frame_image(b)?;
        let wedge = fa.wedge(fb)?;
        acc = acc.add(&wedge.scale(coeff))?;
    }
    let mut out = Decomposition::default();
    for ((a, b), coeff) in acc.terms() {
        match (a, b) {
            (CovectorLabel::Alpha(l), CovectorLabel::Theta(j)) => {
                out.mc.insert((l, j), coeff.clone());
            }
            (CovectorLabel::Theta(j), CovectorLabel::Theta(k)) => {
                out.torsion.insert((j, k), coeff.clone());
            }
            (CovectorLabel::Alpha(_), CovectorLabel::Alpha(_)) => {
                return Err(Error::Internal(format!(
                    "alpha^alpha residue {a}^{b} in decomposition"
                )));
            }
            _ => {
                return Err(Error::Internal(format!(
                    "unexpected frame pair {a}^{b}"
                )));
            }
        }
    }
    Ok(out)
}

/// Expands a decomposition back into the coordinate basis; the inverse
/// of [`decompose_two_form`] on its image.
pub fn recompose(dec: &Decomposition, basis: &FrameBasis) -> Result<TwoForm> {
    let mut out = TwoForm::zero(BasisContext::coordinate());
    for ((l, j), coeff) in &dec.mc {
        let alpha = basis
            .alpha_coordinate_form(*l)
            .ok_or(Error::BasisMismatch)?;
        let theta = basis.theta(*j);
        out = out.add(&alpha.wedge(theta)?.scale(coeff))?;
    }
    for ((j, k), coeff) in &dec.torsion {
        let wedge = basis.theta(*j).wedge(basis.theta(*k))?;
        out = out.add(&wedge.scale(coeff))?;
    }
    Ok(out)
}

/// Builds the jet-coordinate side of a frame from the lifted coframe's
/// inverse change-of-basis matrix (`dcoord_c = sum inv[c][i] theta^i`).
pub fn coord_to_theta_from_inverse(inv: &super::ExprMatrix) -> [OneForm; 7] {
    let frame_ctx = BasisContext::frame();
    std::array::from_fn(|c| {
        let mut form = OneForm::zero(frame_ctx.clone());
        for i in 0..7 {
            form.add_term(
                CovectorLabel::Theta((i + 1) as u8),
                inv.get(c, i).clone(),
            )
            .unwrap();
        }
        form
    })
}

