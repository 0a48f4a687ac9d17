//! Operator text syntax.
//!
//! ```text
//! operator := term (("+" | "-") term)*
//! term     := coeff "*" dpart | dpart "*" coeff | dpart | coeff
//! dpart    := "D" ("^" int)?
//! coeff    := arithmetic over x, declared constants, rationals, "^", parens
//! ```
//!
//! `D` powers run 0..=5; the `D^5` coefficient, when present, must be
//! exactly 1 (the operator is monic by convention, so `D^5` may also be
//! omitted entirely). Identifiers other than `x` and `D` are declared
//! as constants on first use; jet coordinates and group parameters are
//! rejected inside coefficients.

use std::collections::BTreeSet;
use std::sync::Arc;

use cartan5_core::error::{Error, Result};
use cartan5_core::expr::{parse_expr, Expr, JetCoord, ParseContext, Symbol};
use cartan5_core::problem::OperatorSpec;

/// Splits at depth zero on the given separators, keeping the pieces.
fn split_top_level(text: &str, seps: &[char]) -> Vec<(char, String)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    let mut sign = '+';
    for c in text.chars() {
        match c {
            '(' => {
                depth += 1;
                current.push(c);
            }
            ')' => {
                depth -= 1;
                current.push(c);
            }
            _ if depth == 0 && seps.contains(&c) => {
                if !current.trim().is_empty() {
                    out.push((sign, current.clone()));
                }
                current.clear();
                sign = c;
            }
            _ => current.push(c),
        }
    }
    if !current.trim().is_empty() {
        out.push((sign, current));
    }
    out
}

fn parse_d_power(factor: &str) -> Option<Result<u8>> {
    let t = factor.trim();
    if t == "D" {
        return Some(Ok(1));
    }
    let rest = t.strip_prefix("D^")?;
    match rest.trim().parse::<u8>() {
        Ok(k) if k <= 5 => Some(Ok(k)),
        Ok(k) => Some(Err(Error::parse(
            0,
            format!("derivative power D^{k} exceeds the operator order 5"),
        ))),
        Err(_) => Some(Err(Error::parse(0, format!("bad derivative power '{t}'")))),
    }
}

/// Parses operator text into an [`OperatorSpec`]. Constants are
/// auto-declared; the same text always produces the same canonical
/// spec.
pub fn parse_operator(text: &str) -> Result<OperatorSpec> {
    if text.trim().is_empty() {
        return Err(Error::parse(0, "empty operator"));
    }
    let mut coeffs = [
        Expr::zero(),
        Expr::zero(),
        Expr::zero(),
        Expr::zero(),
        Expr::zero(),
    ];
    let mut top_coeff = Expr::zero(); // coefficient collected for D^5
    let ctx = ParseContext {
        consts: Vec::new(),
        auto_const: true,
    };
    let mut consts: BTreeSet<Arc<str>> = BTreeSet::new();

    for (sign, term) in split_top_level(text, &['+', '-']) {
        let factors = split_top_level(&term, &['*']);
        let mut power: Option<u8> = None;
        let mut coeff_parts: Vec<String> = Vec::new();
        for (_, factor) in factors {
            match parse_d_power(&factor) {
                Some(Ok(k)) => {
                    if power.replace(k).is_some() {
                        return Err(Error::parse(
                            0,
                            format!("term '{}' has two derivative factors", term.trim()),
                        ));
                    }
                }
                Some(Err(e)) => return Err(e),
                None => coeff_parts.push(factor),
            }
        }
        let coeff_text = if coeff_parts.is_empty() {
            "1".to_string()
        } else {
            coeff_parts.join("*")
        };
        let mut coeff = parse_expr(&coeff_text, &ctx)?;
        for sym in coeff.symbols() {
            match &sym {
                Symbol::Jet(JetCoord::X) => {}
                Symbol::Const(name) if name.as_ref() != "D" => {
                    consts.insert(name.clone());
                }
                other => {
                    return Err(Error::parse(
                        0,
                        format!(
                            "coefficient '{}' mentions '{other}'; only x and constants are allowed",
                            coeff_text.trim()
                        ),
                    ));
                }
            }
        }
        if sign == '-' {
            coeff = coeff.neg();
        }
        match power.unwrap_or(0) {
            5 => top_coeff = top_coeff.add(&coeff),
            k => coeffs[k as usize] = coeffs[k as usize].add(&coeff),
        }
    }
    if !top_coeff.is_zero() && !top_coeff.is_one() {
        return Err(Error::NotMonic);
    }
    OperatorSpec::new(coeffs, consts)
}

/// Prints an operator in the same grammar; `parse_operator` reads it
/// back to an identical spec.
pub fn print_operator(op: &OperatorSpec) -> String {
    let mut terms: Vec<String> = vec!["D^5".to_string()];
    for i in (0..5u8).rev() {
        let c = op.coefficient(i);
        if c.is_zero() {
            continue;
        }
        let coeff = if c.is_one() && i > 0 {
            String::new()
        } else {
            let text = c.to_string();
            let atomic = c.as_monomial_ratio().is_some() && !text.contains(' ');
            if atomic {
                text
            } else {
                format!("({text})")
            }
        };
        let term = match (i, coeff.is_empty()) {
            (0, _) => {
                if coeff.is_empty() {
                    "1".to_string()
                } else {
                    coeff
                }
            }
            (1, true) => "D".to_string(),
            (1, false) => format!("{coeff}*D"),
            (k, true) => format!("D^{k}"),
            (k, false) => format!("{coeff}*D^{k}"),
        };
        terms.push(term);
    }
    terms.join(" + ")
}
