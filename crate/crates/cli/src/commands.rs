//! Subcommand implementations.

use std::collections::BTreeMap;
use std::process::ExitCode;

use serde_json::Value;

use cartan5_core::error::{Error, Result};
use cartan5_core::expr::{parse_expr, Expr, ParseContext};
use cartan5_core::invariants::{
    compare, extract_invariants, CompareReport, InvariantSet, Verdict,
};
use cartan5_core::oracle::{check_structure_equations, NumericScene, ResidualReport};
use cartan5_core::problem::{OperatorSpec, Variant};
use cartan5_core::reduction::{
    final_structure_latex, invariants_latex, run_reduction, NormalizationPlan, ReductionTrace,
};

use crate::operator::{parse_operator, print_operator};
use crate::{Command, Format, OutputOpts};

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Derive {
            variant,
            operator,
            output,
        } => {
            let op = parse_operator(&operator)?;
            let variant = variant.into();
            let trace = derive(&op, variant)?;
            let doc = match output.format {
                Format::Text => trace_text(&op, &trace),
                Format::Json => pretty(&trace.to_json()),
                Format::Latex => final_structure_latex(variant, &trace.final_structure),
            };
            emit(&output, &doc)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Invariants {
            variant,
            operator,
            output,
        } => {
            let op = parse_operator(&operator)?;
            let variant = variant.into();
            let trace = derive(&op, variant)?;
            let inv = extract_invariants(&trace)?;
            let doc = match output.format {
                Format::Text => invariants_text(&op, &inv),
                Format::Json => pretty(&inv.to_json()),
                Format::Latex => {
                    let entries: Vec<(String, Expr)> = inv
                        .entries
                        .iter()
                        .map(|(k, v)| (k.clone(), v.clone()))
                        .collect();
                    invariants_latex(variant, &entries)
                }
            };
            emit(&output, &doc)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            variant,
            operator1,
            operator2,
            samples,
            output,
        } => {
            let op1 = parse_operator(&operator1)?;
            let op2 = parse_operator(&operator2)?;
            let consts = parse_constants(&samples.constants)?;
            let n = samples.samples.unwrap_or(64);
            let report = compare(&op1, &op2, variant.into(), samples.seed, n, &consts)?;
            let doc = match output.format {
                Format::Text => compare_text(&report),
                Format::Json => pretty(&report.to_json()),
                Format::Latex => {
                    return Err(Error::Internal(
                        "latex output is defined for derive and invariants only".into(),
                    ))
                }
            };
            emit(&output, &doc)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            variant,
            operator,
            samples,
            output,
        } => {
            let op = parse_operator(&operator)?;
            let consts = parse_constants(&samples.constants)?;
            let n = samples.samples.unwrap_or(100);
            let trace = derive(&op, variant.into())?;
            let scenes = NumericScene::batch(n, samples.seed, &op, &consts)?;
            let report = check_structure_equations(&trace, &scenes)?;
            let doc = match output.format {
                Format::Text => residual_text(&report),
                Format::Json => pretty(&report.to_json()),
                Format::Latex => {
                    return Err(Error::Internal(
                        "latex output is defined for derive and invariants only".into(),
                    ))
                }
            };
            emit(&output, &doc)?;
            Ok(if report.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Example { variant, output } => {
            let variants: Vec<Variant> = match variant {
                Some(v) => vec![v.into()],
                None => vec![Variant::Direct, Variant::Gauge],
            };
            example(&variants, &output)
        }
    }
}

fn derive(op: &OperatorSpec, variant: Variant) -> Result<ReductionTrace> {
    run_reduction(op, variant, NormalizationPlan::default_for(variant))
}

fn parse_constants(items: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in items {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (name, value) = item.split_once('=').ok_or_else(|| {
            Error::parse(0, format!("bad constant binding '{item}', expected name=value"))
        })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::parse(0, format!("bad numeric value in '{item}'"))
        })?;
        out.insert(name.trim().to_string(), value);
    }
    Ok(out)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable document");
    s.push('\n');
    s
}

fn emit(output: &OutputOpts, doc: &str) -> Result<()> {
    match &output.out {
        Some(path) => std::fs::write(path, doc).map_err(|e| {
            Error::Internal(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

fn trace_text(op: &OperatorSpec, trace: &ReductionTrace) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "operator: {}\nproblem: {} equivalence\n\n",
        print_operator(op),
        trace.variant
    ));
    for lp in &trace.loops {
        out.push_str(&format!(
            "loop {} (free parameters after: {})\n",
            lp.index, lp.free_after
        ));
        for ((i, (j, k)), e) in &lp.absorption.essential {
            out.push_str(&format!("  essential T^{i}_{{{j},{k}}} = {e}\n"));
        }
        for (n, v) in &lp.assignments {
            out.push_str(&format!("  normalize a{n} = {v}\n"));
        }
        if !lp.raw_slot_params.is_empty() {
            let list: Vec<String> = lp
                .raw_slot_params
                .iter()
                .map(|n| format!("a{n}"))
                .collect();
            out.push_str(&format!(
                "  (raw-torsion slots used for: {})\n",
                list.join(", ")
            ));
        }
    }
    out.push_str("\nfinal structure equations:\n");
    for (i, eq) in trace.final_structure.equations.iter().enumerate() {
        if eq.is_empty() {
            out.push_str(&format!("  d(theta^{}) = 0\n", i + 1));
            continue;
        }
        let terms: Vec<String> = eq
            .iter()
            .map(|((j, k), c)| {
                if c.is_one() {
                    format!("theta^{j}^theta^{k}")
                } else {
                    format!("({c}) theta^{j}^theta^{k}")
                }
            })
            .collect();
        out.push_str(&format!("  d(theta^{}) = {}\n", i + 1, terms.join(" + ")));
    }
    if trace.discrepancies.is_empty() {
        out.push_str("\ndiscrepancy log: empty\n");
    } else {
        out.push_str("\ndiscrepancy log:\n");
        for d in &trace.discrepancies {
            out.push_str(&format!(
                "  d(theta^{}) slot ({},{}): engine = {} ; published = {}\n",
                d.equation, d.slot.0, d.slot.1, d.engine, d.paper
            ));
        }
    }
    out
}

fn invariants_text(op: &OperatorSpec, inv: &InvariantSet) -> String {
    let mut out = format!(
        "operator: {}\nproblem: {} equivalence\n\n",
        print_operator(op),
        inv.variant
    );
    for (name, value) in &inv.entries {
        out.push_str(&format!("{name} = {value}\n"));
    }
    for (name, value) in &inv.extras {
        out.push_str(&format!("extra {name} = {value}\n"));
    }
    out
}

fn compare_text(report: &CompareReport) -> String {
    let mut out = String::new();
    out.push_str(match report.verdict {
        Verdict::NecessaryConditionsHold => "verdict: necessary conditions hold\n",
        Verdict::Distinguished => "verdict: distinguished\n",
    });
    if let Some(w) = &report.witness {
        out.push_str(&format!("witness: {w:?}\n"));
    }
    out.push_str(&format!(
        "jacobian ranks: left {} right {}\n",
        report.left.jacobian_rank, report.right.jacobian_rank
    ));
    for (a, b) in report.left.invariants.iter().zip(&report.right.invariants) {
        out.push_str(&format!(
            "{}: constant {}/{} x-independent {}/{}\n",
            a.name, a.constant, b.constant, a.x_independent, b.x_independent
        ));
    }
    out
}

fn residual_text(report: &ResidualReport) -> String {
    let mut out = format!("scenes: {}\n", report.scenes);
    for eq in &report.equations {
        out.push_str(&format!(
            "d(theta^{}): max residual {:.3e} {}\n",
            eq.equation,
            eq.max_residual,
            if eq.pass { "PASS" } else { "FAIL" }
        ));
    }
    out.push_str(if report.pass() { "all equations PASS\n" } else { "FAIL\n" });
    out
}

/// The built-in example: constant potential `f0 = q0 - lam*a^5`.
pub fn example_operator() -> OperatorSpec {
    parse_operator("D^5 + (q0 - lam*a^5)").expect("built-in example parses")
}

/// Golden invariants of the example, per variant.
pub fn example_goldens(variant: Variant) -> Vec<(&'static str, &'static str)> {
    match variant {
        Variant::Direct => vec![
            ("I1", "-3*p/u^(4/5)"),
            ("I2", "(-9*p^2 - 10*q*u)/(5*u^(8/5))"),
            ("I3", "lam*a^5*u - q0*u - t"),
            (
                "I4",
                "-(1770*p^2*q*u - 1275*p*r*u^2 + 3000*s*u^3 - 594*p^4 - 800*q^2*u^2)/(625*u^(16/5))",
            ),
            ("I5", "-(33*p^3 - 45*p*q*u + 100*r*u^2)/(25*u^(12/5))"),
            ("I6", "-3*p/u^(4/5)"),
        ],
        Variant::Gauge => vec![
            ("L1", "-5*p/u"),
            ("L2", "-10*p^2/u^2"),
            ("L3", "-5*s/u"),
            ("L4", "(-10*p^3 + 5*p*q*u - 5*r*u^2)/u^3"),
            ("L5", "-5*p/u"),
        ],
    }
}

fn example(variants: &[Variant], output: &OutputOpts) -> Result<ExitCode> {
    let op = example_operator();
    let ctx = ParseContext::with_consts(["q0", "lam", "a"]);
    let mut all_pass = true;
    let mut text = format!("operator: {}\n", print_operator(&op));
    let mut json_variants = Vec::new();
    for variant in variants {
        let trace = derive(&op, *variant)?;
        let inv = extract_invariants(&trace)?;
        text.push_str(&format!("\n{} equivalence:\n", variant));
        let mut rows = Vec::new();
        for (name, golden) in example_goldens(*variant) {
            let expected = parse_expr(golden, &ctx)?;
            let got = inv.get(name).ok_or_else(|| {
                Error::Internal(format!("invariant {name} missing from extraction"))
            })?;
            let pass = *got == expected;
            all_pass &= pass;
            let status = if pass {
                "PASS".to_string()
            } else {
                format!("FAIL (golden {expected})")
            };
            text.push_str(&format!("  {name} = {got} {status}\n"));
            rows.push(serde_json::json!({
                "name": name,
                "engine": got.to_string(),
                "golden": expected.to_string(),
                "pass": pass,
            }));
        }
        json_variants.push(serde_json::json!({
            "variant": variant.name(),
            "invariants": rows,
        }));
    }
    text.push_str(if all_pass { "\nexample: PASS\n" } else { "\nexample: FAIL\n" });
    let doc = match output.format {
        Format::Text => text,
        Format::Json => pretty(&serde_json::json!({
            "operator": print_operator(&op),
            "pass": all_pass,
            "variants": json_variants,
        })),
        Format::Latex => {
            return Err(Error::Internal(
                "latex output is defined for derive and invariants only".into(),
            ))
        }
    };
    emit(output, &doc)?;
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
