//! Independent numeric validation: evaluate the final coframe at
//! concrete jet points with concrete coefficient functions and check
//! every claimed structure equation by finite-difference exterior
//! derivatives.
//!
//! The only finite-difference error is in the jet-coordinate
//! directions: coefficient-function derivatives are computed
//! symbolically from the operator's (polynomial or rational)
//! coefficients.


use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expr::{EvalEnv, JetCoord, Symbol};
use crate::forms::{CovectorLabel, OneForm};
use crate::invariants::sample_point;
use crate::problem::OperatorSpec;
use crate::reduction::ReductionTrace;

/// Default relative tolerance with its absolute floor, matching
/// central-difference truncation at the chosen steps for O(1)
/// quantities.
pub const RELATIVE_TOLERANCE: f64 = 1e-6;
pub const ABSOLUTE_FLOOR: f64 = 1e-9;

/// The two-step sweep used for Richardson extrapolation.
pub const STEPS: [f64; 2] = [1e-4, 1e-5];

/// A concrete evaluation context: one jet point, the operator whose
/// coefficient functions are evaluated (with exact symbolic
/// derivatives), and numeric values for declared constants.
#[derive(Clone, Debug)]
pub struct NumericScene {
    pub point: BTreeMap<Symbol, f64>,
    pub op: OperatorSpec,
    pub consts: BTreeMap<String, f64>,
}

impl NumericScene {
    pub fn new(
        point: BTreeMap<Symbol, f64>,
        op: OperatorSpec,
        consts: BTreeMap<String, f64>,
    ) -> Result<NumericScene> {
        if op.is_formal() {
            return Err(Error::NumericFailure(
                "numeric scenes need a concrete operator".into(),
            ));
        }
        if point[&Symbol::jet(JetCoord::U)] == 0.0 {
            return Err(Error::NumericFailure("scene sits on the u = 0 pole".into()));
        }
        Ok(NumericScene { point, op, consts })
    }

    /// Seeded scene batch over the standard sampling domain.
    pub fn batch(
        count: usize,
        seed: u64,
        op: &OperatorSpec,
        consts: &BTreeMap<String, f64>,
    ) -> Result<Vec<NumericScene>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| NumericScene::new(sample_point(&mut rng), op.clone(), consts.clone()))
            .collect()
    }

    fn env<'a>(&'a self, point: &'a BTreeMap<Symbol, f64>) -> SceneEnv<'a> {
        SceneEnv { scene: self, point }
    }

    fn shifted(&self, coord: JetCoord, delta: f64) -> BTreeMap<Symbol, f64> {
        let mut point = self.point.clone();
        *point.get_mut(&Symbol::jet(coord)).unwrap() += delta;
        point
    }
}

struct SceneEnv<'a> {
    scene: &'a NumericScene,
    point: &'a BTreeMap<Symbol, f64>,
}

impl EvalEnv for SceneEnv<'_> {
    fn value(&self, sym: &Symbol) -> Result<f64> {
        if let Some(v) = self.point.get(sym) {
            return Ok(*v);
        }
        match sym {
            Symbol::Coeff { index, order } => {
                let x = self.point[&Symbol::jet(JetCoord::X)];
                let expr = self.scene.op.coefficient_derivative(*index, *order);
                let mut env = BTreeMap::new();
                env.insert(Symbol::jet(JetCoord::X), x);
                expr.evaluate(&ShiftedConstEnv {
                    values: &env,
                    consts: &self.scene.consts,
                })
            }
            Symbol::Const(name) => self
                .scene
                .consts
                .get(name.as_ref())
                .copied()
                .ok_or_else(|| Error::UnboundSymbol(sym.to_string())),
            _ => Err(Error::UnboundSymbol(sym.to_string())),
        }
    }
}

struct ShiftedConstEnv<'a> {
    values: &'a BTreeMap<Symbol, f64>,
    consts: &'a BTreeMap<String, f64>,
}

impl EvalEnv for ShiftedConstEnv<'_> {
    fn value(&self, sym: &Symbol) -> Result<f64> {
        if let Some(v) = self.values.get(sym) {
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

/// An antisymmetric numeric two-form on the seven jet directions.
pub type NumericTwoForm = [[f64; 7]; 7];

fn coefficient_at(
    form: &OneForm,
    coord: JetCoord,
    scene: &NumericScene,
    point: &BTreeMap<Symbol, f64>,
) -> Result<f64> {
    let coeff = form.coefficient(CovectorLabel::Coord(coord));
    if coeff.is_zero() {
        return Ok(0.0);
    }
    coeff.evaluate(&scene.env(point))
}

/// Central-difference exterior derivative of a coordinate one-form at
/// the scene's point: `d omega (e_a, e_b) ~ d_a omega_b - d_b omega_a`,
/// at a single step size.
pub fn fd_exterior_derivative_step(
    form: &OneForm,
    scene: &NumericScene,
    h: f64,
) -> Result<NumericTwoForm> {
    let mut out = [[0.0; 7]; 7];
    for (ai, a) in JetCoord::ALL.iter().enumerate() {
        for (bi, b) in JetCoord::ALL.iter().enumerate() {
            if ai >= bi {
                continue;
            }
            let da_wb = {
                let hi = coefficient_at(form, *b, scene, &scene.shifted(*a, h))?;
                let lo = coefficient_at(form, *b, scene, &scene.shifted(*a, -h))?;
                (hi - lo) / (2.0 * h)
            };
            let db_wa = {
                let hi = coefficient_at(form, *a, scene, &scene.shifted(*b, h))?;
                let lo = coefficient_at(form, *a, scene, &scene.shifted(*b, -h))?;
                (hi - lo) / (2.0 * h)
            };
            let v = da_wb - db_wa;
            if !v.is_finite() {
                return Err(Error::NumericFailure(format!(
                    "non-finite finite difference in ({a:?},{b:?})"
                )));
            }
            out[ai][bi] = v;
            out[bi][ai] = -v;
        }
    }
    Ok(out)
}

/// Richardson-extrapolated finite-difference exterior derivative over
/// the standard step sweep. Central differences have O(h^2) error, so
/// with h2 = h1/10 the extrapolation is `(100 D(h2) - D(h1))/99`.
pub fn fd_exterior_derivative(form: &OneForm, scene: &NumericScene) -> Result<NumericTwoForm> {
    let d1 = fd_exterior_derivative_step(form, scene, STEPS[0])?;
    let d2 = fd_exterior_derivative_step(form, scene, STEPS[1])?;
    let mut out = [[0.0; 7]; 7];
    for a in 0..7 {
        for b in 0..7 {
            out[a][b] = (100.0 * d2[a][b] - d1[a][b]) / 99.0;
        }
    }
    Ok(out)
}

/// Evaluates the right-hand side of one final structure equation at
/// the scene: `sum T^i_{jk} (theta^j x theta^k - theta^k x theta^j)`.
fn rhs_two_form(
    trace: &ReductionTrace,
    i: usize,
    scene: &NumericScene,
) -> Result<NumericTwoForm> {
    // Component vectors of each coframe element.
    let mut theta = [[0.0; 7]; 7];
    for (j, form) in trace.final_structure.coframe.iter().enumerate() {
        for (c, coord) in JetCoord::ALL.iter().enumerate() {
            theta[j][c] = coefficient_at(form, *coord, scene, &scene.point)?;
        }
    }
    let mut out = [[0.0; 7]; 7];
    for ((j, k), coeff) in &trace.final_structure.equations[i] {
        let t = coeff.evaluate(&scene.env(&scene.point))?;
        let tj = &theta[(*j - 1) as usize];
        let tk = &theta[(*k - 1) as usize];
        for a in 0..7 {
            for b in 0..7 {
                out[a][b] += t * (tj[a] * tk[b] - tj[b] * tk[a]);
            }
        }
    }
    Ok(out)
}

/// Residual of one structure equation on one scene.
#[derive(Clone, Copy, Debug)]
pub struct EquationResidual {
    pub equation: u8,
    pub max_residual: f64,
    pub pass: bool,
}

/// Residual report over a scene batch: per structure equation, the
/// maximum relative residual over all sampled tangent-plane pairs.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub equations: Vec<EquationResidual>,
    pub scenes: usize,
}

impl ResidualReport {
    pub fn pass(&self) -> bool {
        self.equations.iter().all(|e| e.pass)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "scenes": self.scenes,
            "pass": self.pass(),
            "equations": self.equations.iter().map(|e| json!({
                "equation": format!("d(theta^{})", e.equation),
                "max_residual": e.max_residual,
                "pass": e.pass,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Checks every final structure equation of the trace on every scene:
/// the finite-difference (Richardson-extrapolated) left-hand side
/// against the symbolic right-hand side, relative tolerance with an
/// absolute floor.
pub fn check_structure_equations(
    trace: &ReductionTrace,
    scenes: &[NumericScene],
) -> Result<ResidualReport> {
    let mut worst = [0.0f64; 7];
    for scene in scenes {
        for i in 0..7usize {
            let lhs = fd_exterior_derivative(&trace.final_structure.coframe[i], scene)?;
            let rhs = rhs_two_form(trace, i, scene)?;
            let mut err = 0.0f64;
            let mut scale = 1.0f64;
            for a in 0..7 {
                for b in (a + 1)..7 {
                    err = err.max((lhs[a][b] - rhs[a][b]).abs());
                    scale = scale.max(lhs[a][b].abs()).max(rhs[a][b].abs());
                }
            }
            let residual = if err <= ABSOLUTE_FLOOR { 0.0 } else { err / scale };
            worst[i] = worst[i].max(residual);
        }
    }
    Ok(ResidualReport {
        equations: (0..7)
            .map(|i| EquationResidual {
                equation: (i + 1) as u8,
                max_residual: worst[i],
                pass: worst[i] < RELATIVE_TOLERANCE,
            })
            .collect(),
        scenes: scenes.len(),
    })
}
