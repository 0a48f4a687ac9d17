//! Symbols: the indeterminates of the expression kernel.
//!
//! Four kinds of symbol occur in the reduction pipeline:
//!
//! * jet coordinates `x, u, p, q, r, s, t` of the fifth jet space,
//! * structure-group parameters `a1..a15`,
//! * formal coefficient functions `f0..f4` together with their formal
//!   `d/dx` derivatives (`f4'`, `f4''`, ...),
//! * user-declared constants (the worked example needs `lam` and `a`).
//!
//! The `Ord` impl fixes the global symbol order used by the canonical
//! monomial order: jets < group parameters < coefficient functions <
//! constants.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

/// A coordinate on the fifth jet space, in the fixed chart order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum JetCoord {
    X,
    U,
    P,
    Q,
    R,
    S,
    T,
}

impl JetCoord {
    pub const ALL: [JetCoord; 7] = [
        JetCoord::X,
        JetCoord::U,
        JetCoord::P,
        JetCoord::Q,
        JetCoord::R,
        JetCoord::S,
        JetCoord::T,
    ];

    pub fn name(self) -> &'static str {
        match self {
            JetCoord::X => "x",
            JetCoord::U => "u",
            JetCoord::P => "p",
            JetCoord::Q => "q",
            JetCoord::R => "r",
            JetCoord::S => "s",
            JetCoord::T => "t",
        }
    }

    pub fn from_name(name: &str) -> Option<JetCoord> {
        JetCoord::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Position in the chart order `(x, u, p, q, r, s, t)`.
    pub fn index(self) -> usize {
        self as usize
    }
}

/// An indeterminate of the coefficient field.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Symbol {
    /// One of the jet coordinates.
    Jet(JetCoord),
    /// Structure-group parameter `a{n}`, `n` in `1..=15`.
    Group(u8),
    /// Formal coefficient function `f{index}` differentiated `order` times.
    Coeff { index: u8, order: u32 },
    /// A named constant declared by the caller.
    Const(Arc<str>),
}

impl Symbol {
    pub fn jet(c: JetCoord) -> Symbol {
        Symbol::Jet(c)
    }

    /// Group parameter `a{n}`. Panics if `n` is outside `1..=15`.
    pub fn group(n: u8) -> Symbol {
        assert!((1..=15).contains(&n), "group parameter index {n} out of range");
        Symbol::Group(n)
    }

    /// Coefficient function `f{index}` with `order` formal primes.
    /// Panics if `index` is outside `0..=4`.
    pub fn coeff(index: u8, order: u32) -> Symbol {
        assert!(index <= 4, "coefficient function index {index} out of range");
        Symbol::Coeff { index, order }
    }

    pub fn constant(name: impl Into<Arc<str>>) -> Symbol {
        Symbol::Const(name.into())
    }

    pub fn is_group(&self) -> bool {
        matches!(self, Symbol::Group(_))
    }

    pub fn is_jet(&self) -> bool {
        matches!(self, Symbol::Jet(_))
    }

    /// The formal derivative bump: `f -> f'`, used by the exterior
    /// derivative rule `d f = f' dx`. `None` for every other kind.
    pub fn bump_derivative(&self) -> Option<Symbol> {
        match self {
            Symbol::Coeff { index, order } => Some(Symbol::Coeff {
                index: *index,
                order: order + 1,
            }),
            _ => None,
        }
    }

    /// Parses the printer's notation: jet names, `a1..a15`, `f0..f4`
    /// with trailing primes, anything else is rejected (constants must
    /// be introduced explicitly so typos do not silently become new
    /// symbols).
    pub fn from_name(name: &str, consts: &[Arc<str>]) -> Option<Symbol> {
        if let Some(c) = JetCoord::from_name(name) {
            return Some(Symbol::Jet(c));
        }
        if let Some(rest) = name.strip_prefix('a') {
            if let Ok(n) = rest.parse::<u8>() {
                if (1..=15).contains(&n) {
                    return Some(Symbol::Group(n));
                }
            }
        }
        if let Some(rest) = name.strip_prefix('f') {
            let primes = rest.len() - rest.trim_end_matches('\'').len();
            let digits = &rest[..rest.len() - primes];
            if let Ok(i) = digits.parse::<u8>() {
                if i <= 4 {
                    return Some(Symbol::Coeff {
                        index: i,
                        order: primes as u32,
                    });
                }
            }
        }
        consts
            .iter()
            .find(|c| c.as_ref() == name)
            .map(|c| Symbol::Const(c.clone()))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Jet(c) => write!(f, "{}", c.name()),
            Symbol::Group(n) => write!(f, "a{n}"),
            Symbol::Coeff { index, order } => {
                write!(f, "f{index}")?;
                for _ in 0..*order {
                    write!(f, "'")?;
                }
                Ok(())
            }
            Symbol::Const(name) => write!(f, "{name}"),
        }
    }
}

impl Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}
