//! Sparse one-forms and two-forms over the expression field: wedge
//! products, exterior derivatives, change of basis, and exact symbolic
//! linear solving.

mod frame;
mod solve;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{Expr, JetCoord, Symbol};

pub use frame::{
    coord_to_theta_from_inverse, decompose_two_form, recompose, Decomposition, FrameBasis,
};
pub use solve::{solve_linear, ExprMatrix, LinearRhs};

/// A basis one-form label. Coordinate bases use `Coord`/`Param`
/// (differentials of jet coordinates and group parameters); abstract
/// frame bases use `Alpha`/`Theta` (Maurer-Cartan forms and the lifted
/// coframe).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum CovectorLabel {
    /// `da{n}`, the differential of a structure-group parameter.
    Param(u8),
    /// `d{coord}` for a jet coordinate.
    Coord(JetCoord),
    /// Maurer-Cartan basis element `alpha^{l}`.
    Alpha(u8),
    /// Lifted coframe element `theta^{i}`.
    Theta(u8),
}

impl fmt::Display for CovectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovectorLabel::Coord(c) => write!(f, "d{}", c.name()),
            CovectorLabel::Param(n) => write!(f, "da{n}"),
            CovectorLabel::Alpha(l) => write!(f, "alpha^{l}"),
            CovectorLabel::Theta(i) => write!(f, "theta^{i}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BasisKind {
    Coordinate,
    Frame,
}

/// An ordered covector basis. The order is fixed for the context's
/// lifetime and orients every stored two-form pair.
#[derive(Debug)]
pub struct BasisContext {
    labels: Vec<CovectorLabel>,
    index: BTreeMap<CovectorLabel, usize>,
    kind: BasisKind,
}

impl BasisContext {
    fn new(labels: Vec<CovectorLabel>, kind: BasisKind) -> Arc<BasisContext> {
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (*l, i))
            .collect::<BTreeMap<_, _>>();
        assert_eq!(index.len(), labels.len(), "duplicate covector label");
        Arc::new(BasisContext {
            labels,
            index,
            kind,
        })
    }

    /// The coordinate basis: `dx..dt` followed by `da1..da15`.
    pub fn coordinate() -> Arc<BasisContext> {
        static CTX: OnceLock<Arc<BasisContext>> = OnceLock::new();
        CTX.get_or_init(|| {
            let mut labels: Vec<CovectorLabel> = JetCoord::ALL
                .iter()
                .map(|c| CovectorLabel::Coord(*c))
                .collect();
            labels.extend((1..=15).map(CovectorLabel::Param));
            BasisContext::new(labels, BasisKind::Coordinate)
        })
        .clone()
    }

    /// The frame basis: `alpha^1..alpha^15` followed by
    /// `theta^1..theta^7`, so stored pairs are already oriented as
    /// `alpha ^ alpha`, `alpha ^ theta`, or `theta ^ theta`.
    pub fn frame() -> Arc<BasisContext> {
        static CTX: OnceLock<Arc<BasisContext>> = OnceLock::new();
        CTX.get_or_init(|| {
            let mut labels: Vec<CovectorLabel> = (1..=15).map(CovectorLabel::Alpha).collect();
            labels.extend((1..=7).map(CovectorLabel::Theta));
            BasisContext::new(labels, BasisKind::Frame)
        })
        .clone()
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn labels(&self) -> &[CovectorLabel] {
        &self.labels
    }

    pub fn position(&self, label: CovectorLabel) -> Option<usize> {
        self.index.get(&label).copied()
    }
}

fn same_context(a: &Arc<BasisContext>, b: &Arc<BasisContext>) -> bool {
    Arc::ptr_eq(a, b) || a.labels == b.labels
}

/// A one-form: a sparse map from basis covectors to coefficients.
#[derive(Clone, Debug)]
pub struct OneForm {
    ctx: Arc<BasisContext>,
    terms: BTreeMap<usize, Expr>,
}

impl PartialEq for OneForm {
    fn eq(&self, other: &Self) -> bool {
        same_context(&self.ctx, &other.ctx) && self.terms == other.terms
    }
}

impl OneForm {
    pub fn zero(ctx: Arc<BasisContext>) -> OneForm {
        OneForm {
            ctx,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(
        ctx: Arc<BasisContext>,
        terms: impl IntoIterator<Item = (CovectorLabel, Expr)>,
    ) -> Result<OneForm> {
        let mut form = OneForm::zero(ctx);
        for (label, coeff) in terms {
            form.add_term(label, coeff)?;
        }
        Ok(form)
    }

    pub fn context(&self) -> &Arc<BasisContext> {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, label: CovectorLabel) -> Expr {
        self.ctx
            .position(label)
            .and_then(|i| self.terms.get(&i))
            .cloned()
            .unwrap_or_else(Expr::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (CovectorLabel, &Expr)> {
        self.terms
            .iter()
            .map(move |(i, e)| (self.ctx.labels[*i], e))
    }

    pub fn add_term(&mut self, label: CovectorLabel, coeff: Expr) -> Result<()> {
        if coeff.is_zero() {
            return Ok(());
        }
        let pos = self
            .ctx
            .position(label)
            .ok_or(Error::BasisMismatch)?;
        let entry = self.terms.entry(pos).or_insert_with(Expr::zero);
        *entry = entry.add(&coeff);
        if entry.is_zero() {
            self.terms.remove(&pos);
        }
        Ok(())
    }

    pub fn add(&self, other: &OneForm) -> Result<OneForm> {
        if !same_context(&self.ctx, &other.ctx) {
            return Err(Error::BasisMismatch);
        }
        let mut out = self.clone();
        for (i, e) in &other.terms {
            let entry = out.terms.entry(*i).or_insert_with(Expr::zero);
            *entry = entry.add(e);
            if entry.is_zero() {
                out.terms.remove(i);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &OneForm) -> Result<OneForm> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, by: &Expr) -> OneForm {
        if by.is_zero() {
            return OneForm::zero(self.ctx.clone());
        }
        OneForm {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .map(|(i, e)| (*i, e.mul(by)))
                .collect(),
        }
    }

    pub fn scale_div(&self, by: &Expr) -> Result<OneForm> {
        if by.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let mut terms = BTreeMap::new();
        for (i, e) in &self.terms {
            terms.insert(*i, e.div(by)?);
        }
        Ok(OneForm {
            ctx: self.ctx.clone(),
            terms,
        })
    }

    /// Wedge product; both forms must share a context.
    pub fn wedge(&self, other: &OneForm) -> Result<TwoForm> {
        if !same_context(&self.ctx, &other.ctx) {
            return Err(Error::BasisMismatch);
        }
        let mut out = TwoForm::zero(self.ctx.clone());
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                if i == j {
                    continue;
                }
                out.add_indexed(*i, *j, a.mul(b));
            }
        }
        Ok(out)
    }
}

/// A two-form stored under the context's `(i < j)` orientation;
/// antisymmetry is structural.
#[derive(Clone, Debug)]
pub struct TwoForm {
    ctx: Arc<BasisContext>,
    terms: BTreeMap<(usize, usize), Expr>,
}

impl PartialEq for TwoForm {
    fn eq(&self, other: &Self) -> bool {
        same_context(&self.ctx, &other.ctx) && self.terms == other.terms
    }
}

impl TwoForm {
    pub fn zero(ctx: Arc<BasisContext>) -> TwoForm {
        TwoForm {
            ctx,
            terms: BTreeMap::new(),
        }
    }

    pub fn context(&self) -> &Arc<BasisContext> {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_indexed(&mut self, i: usize, j: usize, coeff: Expr) {
        if coeff.is_zero() || i == j {
            return;
        }
        let (key, value) = if i < j {
            ((i, j), coeff)
        } else {
            ((j, i), coeff.neg())
        };
        let entry = self.terms.entry(key).or_insert_with(Expr::zero);
        *entry = entry.add(&value);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add_term(
        &mut self,
        a: CovectorLabel,
        b: CovectorLabel,
        coeff: Expr,
    ) -> Result<()> {
        let i = self.ctx.position(a).ok_or(Error::BasisMismatch)?;
        let j = self.ctx.position(b).ok_or(Error::BasisMismatch)?;
        self.add_indexed(i, j, coeff);
        Ok(())
    }

    pub fn coefficient(&self, a: CovectorLabel, b: CovectorLabel) -> Expr {
        let (Some(i), Some(j)) = (self.ctx.position(a), self.ctx.position(b)) else {
            return Expr::zero();
        };
        if i < j {
            self.terms.get(&(i, j)).cloned().unwrap_or_else(Expr::zero)
        } else {
            self.terms
                .get(&(j, i))
                .map(Expr::neg)
                .unwrap_or_else(Expr::zero)
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ((CovectorLabel, CovectorLabel), &Expr)> {
        self.terms
            .iter()
            .map(move |((i, j), e)| ((self.ctx.labels[*i], self.ctx.labels[*j]), e))
    }

    pub fn add(&self, other: &TwoForm) -> Result<TwoForm> {
        if !same_context(&self.ctx, &other.ctx) {
            return Err(Error::BasisMismatch);
        }
        let mut out = self.clone();
        for ((i, j), e) in &other.terms {
            out.add_indexed(*i, *j, e.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TwoForm) -> Result<TwoForm> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, by: &Expr) -> TwoForm {
        if by.is_zero() {
            return TwoForm::zero(self.ctx.clone());
        }
        TwoForm {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, e)| (*k, e.mul(by)))
                .collect(),
        }
    }
}

/// The differential of a scalar (0-form) in the coordinate basis.
///
/// Jet and group symbols contribute their own differentials; a
/// coefficient-function symbol `f` contributes `f' dx` (the formal
/// derivative bump); constants contribute nothing.
pub fn differential(e: &Expr) -> OneForm {
    let ctx = BasisContext::coordinate();
    let mut out = OneForm::zero(ctx);
    for sym in e.symbols() {
        let partial = e.partial_derivative(&sym);
        if partial.is_zero() {
            continue;
        }
        match &sym {
            Symbol::Jet(c) => {
                out.add_term(CovectorLabel::Coord(*c), partial).unwrap();
            }
            Symbol::Group(n) => {
                out.add_term(CovectorLabel::Param(*n), partial).unwrap();
            }
            Symbol::Coeff { .. } => {
                let bumped = sym.bump_derivative().expect("coeff symbols bump");
                out.add_term(
                    CovectorLabel::Coord(JetCoord::X),
                    partial.mul(&Expr::symbol(bumped)),
                )
                .unwrap();
            }
            Symbol::Const(_) => {}
        }
    }
    out
}

/// Exterior derivative of a coordinate-basis one-form:
/// `d(sum e_c dc) = sum de_c ^ dc`.
pub fn exterior_derivative(form: &OneForm) -> Result<TwoForm> {
    if form.ctx.kind() != BasisKind::Coordinate {
        return Err(Error::NeedsCoordinateBasis);
    }
    let mut out = TwoForm::zero(form.ctx.clone());
    for (label, coeff) in form.terms() {
        let de = differential(coeff);
        for (dlabel, dcoeff) in de.terms() {
            out.add_term(dlabel, label, dcoeff.clone())?;
        }
    }
    Ok(out)
}

impl Serialize for OneForm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.terms.len()))?;
        for (label, coeff) in self.terms() {
            map.serialize_entry(&label.to_string(), &coeff.to_string())?;
        }
        map.end()
    }
}

impl Serialize for TwoForm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.terms.len()))?;
        for ((a, b), coeff) in self.terms() {
            map.serialize_entry(&format!("{a}^{b}"), &coeff.to_string())?;
        }
        map.end()
    }
}

#[cfg(test)]
mod tests;
