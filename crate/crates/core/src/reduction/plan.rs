//! Normalization plans: which torsion component is set to which
//! constant to solve which parameter, loop by loop.
//!
//! The default plans are data files transcribing the published loops;
//! the paper states the resulting parameter values, so each plan also
//! carries those as expected assignments and `validate_assignments`
//! fails loudly when the engine solves anything else.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::OnceLock;

use num_rational::BigRational;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr, ParseContext};
use crate::problem::Variant;

use super::run::ReductionTrace;

/// One plan entry: normalize `T^{equation}_{slot}` to `target`,
/// solving for `a{param}`.
#[derive(Clone, Debug)]
pub struct PlanEntry {
    pub equation: u8,
    pub slot: (u8, u8),
    pub target: BigRational,
    pub param: u8,
}

#[derive(Clone, Debug, Default)]
pub struct PlanLoop {
    pub entries: Vec<PlanEntry>,
}

#[derive(Clone, Debug)]
pub struct NormalizationPlan {
    pub variant: Variant,
    pub loops: Vec<PlanLoop>,
    /// Published parameter values, parsed lazily from the plan file.
    pub expected_assignments: BTreeMap<u8, Expr>,
}

#[derive(Deserialize)]
struct PlanFile {
    variant: String,
    loops: Vec<PlanLoopFile>,
    expected_assignments: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct PlanLoopFile {
    entries: Vec<PlanEntryFile>,
}

#[derive(Deserialize)]
struct PlanEntryFile {
    equation: u8,
    slot: [u8; 2],
    target: String,
    param: String,
}

const DIRECT_PLAN: &str = include_str!("../../data/direct_plan.json");
const GAUGE_PLAN: &str = include_str!("../../data/gauge_plan.json");

fn parse_param(name: &str) -> Result<u8> {
    name.strip_prefix('a')
        .and_then(|rest| rest.parse::<u8>().ok())
        .filter(|n| (1..=15).contains(n))
        .ok_or_else(|| Error::PlanMismatch(format!("bad parameter name {name}")))
}

fn parse_plan(text: &str) -> Result<NormalizationPlan> {
    let file: PlanFile = serde_json::from_str(text)
        .map_err(|e| Error::PlanMismatch(format!("unreadable plan file: {e}")))?;
    let variant = match file.variant.as_str() {
        "direct" => Variant::Direct,
        "gauge" => Variant::Gauge,
        other => {
            return Err(Error::PlanMismatch(format!("unknown variant {other}")));
        }
    };
    let mut seen: Vec<u8> = Vec::new();
    let mut loops = Vec::with_capacity(file.loops.len());
    for lp in &file.loops {
        let mut entries = Vec::with_capacity(lp.entries.len());
        for e in &lp.entries {
            let param = parse_param(&e.param)?;
            if seen.contains(&param) {
                return Err(Error::PlanMismatch(format!(
                    "parameter a{param} solved twice across the plan"
                )));
            }
            seen.push(param);
            let target = BigRational::from_str(&e.target)
                .map_err(|err| Error::PlanMismatch(format!("bad target {}: {err}", e.target)))?;
            if !(1..=7).contains(&e.equation)
                || !(1..=7).contains(&e.slot[0])
                || !(1..=7).contains(&e.slot[1])
                || e.slot[0] >= e.slot[1]
            {
                return Err(Error::PlanMismatch(format!(
                    "bad torsion index T^{}_{{{},{}}}",
                    e.equation, e.slot[0], e.slot[1]
                )));
            }
            entries.push(PlanEntry {
                equation: e.equation,
                slot: (e.slot[0], e.slot[1]),
                target,
                param,
            });
        }
        loops.push(PlanLoop { entries });
    }
    let ctx = ParseContext::default();
    let mut expected_assignments = BTreeMap::new();
    for (name, text) in &file.expected_assignments {
        expected_assignments.insert(parse_param(name)?, parse_expr(text, &ctx)?);
    }
    Ok(NormalizationPlan {
        variant,
        loops,
        expected_assignments,
    })
}

impl NormalizationPlan {
    /// The built-in plan for a variant, transcribed from the published
    /// reduction.
    pub fn default_for(variant: Variant) -> &'static NormalizationPlan {
        static DIRECT: OnceLock<NormalizationPlan> = OnceLock::new();
        static GAUGE: OnceLock<NormalizationPlan> = OnceLock::new();
        match variant {
            Variant::Direct => DIRECT.get_or_init(|| {
                parse_plan(DIRECT_PLAN).expect("built-in direct plan parses")
            }),
            Variant::Gauge => {
                GAUGE.get_or_init(|| parse_plan(GAUGE_PLAN).expect("built-in gauge plan parses"))
            }
        }
    }

    /// Every parameter the plan solves, in plan order.
    pub fn solved_params(&self) -> Vec<u8> {
        self.loops
            .iter()
            .flat_map(|l| l.entries.iter().map(|e| e.param))
            .collect()
    }

    /// Fails loudly when the engine's solved assignments differ from
    /// the published values carried by the plan.
    pub fn validate_assignments(&self, trace: &ReductionTrace) -> Result<()> {
        let mut solved: BTreeMap<u8, Expr> = BTreeMap::new();
        for lp in &trace.loops {
            solved.extend(lp.assignments.iter().map(|(n, e)| (*n, e.clone())));
        }
        for (param, expected) in &self.expected_assignments {
            match solved.get(param) {
                None => {
                    return Err(Error::PlanMismatch(format!(
                        "a{param} was never solved (expected {expected})"
                    )));
                }
                Some(got) if got != expected && !got.equivalent(expected) => {
                    return Err(Error::PlanMismatch(format!(
                        "a{param} = {got}, published value {expected}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}
