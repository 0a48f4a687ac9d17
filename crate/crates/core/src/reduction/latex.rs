//! LaTeX rendering of expressions and structure equations.

use num_traits::{One, Signed};

use crate::expr::{Expr, Monomial, Symbol};
use crate::problem::Variant;

use super::run::FinalStructure;

fn symbol_latex(sym: &Symbol) -> String {
    match sym {
        Symbol::Jet(c) => c.name().to_string(),
        Symbol::Group(n) => format!("a_{{{n}}}"),
        Symbol::Coeff { index, order } => {
            let primes: String = "'".repeat(*order as usize);
            format!("f_{{{index}}}{primes}")
        }
        Symbol::Const(name) => name.to_string(),
    }
}

fn monomial_latex(m: &Monomial, lead: bool) -> String {
    let mut out = String::new();
    let coeff = &m.coeff;
    let abs = coeff.abs();
    let negative = coeff < &num_rational::BigRational::from_integer(0.into());
    if negative {
        out.push('-');
    } else if !lead {
        out.push('+');
    }
    let show_coeff = !abs.is_one() || m.factors.is_empty();
    if show_coeff {
        if abs.is_integer() {
            out.push_str(&abs.to_string());
        } else {
            out.push_str(&format!("\\tfrac{{{}}}{{{}}}", abs.numer(), abs.denom()));
        }
    }
    for (sym, exp) in &m.factors {
        out.push_str(&symbol_latex(sym));
        if !exp.is_one() {
            if exp.is_integer() {
                out.push_str(&format!("^{{{}}}", exp.numer()));
            } else {
                out.push_str(&format!("^{{{}/{}}}", exp.numer(), exp.denom()));
            }
        }
        out.push(' ');
    }
    out.trim_end().to_string()
}

fn sum_latex(ms: &[Monomial]) -> String {
    if ms.is_empty() {
        return "0".to_string();
    }
    ms.iter()
        .enumerate()
        .map(|(i, m)| monomial_latex(m, i == 0))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn expr_latex(e: &Expr) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    let num = sum_latex(e.numerator());
    let den = e.denominator();
    if den.len() == 1 && den[0].is_constant() && den[0].coeff.is_one() {
        num
    } else {
        format!("\\frac{{{num}}}{{{}}}", sum_latex(den))
    }
}

fn coefficient_latex(e: &Expr) -> String {
    // Wrap sums in parentheses so the wedge term reads unambiguously.
    if e.is_one() {
        return String::new();
    }
    let body = expr_latex(e);
    if e.numerator().len() > 1 && !body.starts_with("\\frac") {
        format!("\\left({body}\\right)")
    } else {
        body
    }
}

/// The final structure equations as a standalone LaTeX document.
pub fn final_structure_latex(variant: Variant, fs: &FinalStructure) -> String {
    let mut body = String::new();
    body.push_str("\\begin{align*}\n");
    for i in 0..7usize {
        body.push_str(&format!("d\\theta^{} &= ", i + 1));
        let eq = &fs.equations[i];
        if eq.is_empty() {
            body.push('0');
        } else {
            let terms: Vec<String> = eq
                .iter()
                .map(|((j, k), coeff)| {
                    let c = coefficient_latex(coeff);
                    format!("{c}\\,\\theta^{j}\\wedge\\theta^{k}")
                })
                .collect();
            body.push_str(&terms.join(" + "));
        }
        if i < 6 {
            body.push_str(", \\\\\n");
        } else {
            body.push('\n');
        }
    }
    body.push_str("\\end{align*}\n");
    standalone_document(&format!(
        "% Final structure equations, {} equivalence\n{}",
        variant, body
    ))
}

/// Renders a named coefficient list in the shape of the theorem
/// displays.
pub fn invariants_latex(variant: Variant, entries: &[(String, Expr)]) -> String {
    let mut body = String::new();
    body.push_str("\\begin{align*}\n");
    for (i, (name, value)) in entries.iter().enumerate() {
        let (head, index) = name.split_at(1);
        body.push_str(&format!(
            "{head}_{{{index}}} &= {}",
            expr_latex(value)
        ));
        if i + 1 < entries.len() {
            body.push_str(", \\\\\n");
        } else {
            body.push('\n');
        }
    }
    body.push_str("\\end{align*}\n");
    standalone_document(&format!(
        "% Fundamental invariants, {} equivalence\n{}",
        variant, body
    ))
}

fn standalone_document(body: &str) -> String {
    format!(
        "\\documentclass{{article}}\n\\usepackage{{amsmath}}\n\\begin{{document}}\n{body}\\end{{document}}\n"
    )
}
