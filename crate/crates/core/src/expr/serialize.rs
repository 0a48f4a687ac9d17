//! Structured serialization of expressions:
//! `{"numerator": [monomials], "denominator": [monomials]}` with exact
//! rational coefficients rendered as `"p/q"` strings.

use serde::ser::{SerializeMap, SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use super::{Expr, Monomial};

impl Serialize for Monomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Monomial", 2)?;
        st.serialize_field("coeff", &self.coeff.to_string())?;
        st.serialize_field("factors", &FactorMap(self))?;
        st.end()
    }
}

struct FactorMap<'a>(&'a Monomial);

impl Serialize for FactorMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.factors.len()))?;
        for (sym, exp) in &self.0.factors {
            map.serialize_entry(&sym.to_string(), &exp.to_string())?;
        }
        map.end()
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Expr", 3)?;
        st.serialize_field("text", &self.to_string())?;
        st.serialize_field("numerator", &Terms(&self.num))?;
        st.serialize_field("denominator", &Terms(&self.den))?;
        st.end()
    }
}

struct Terms<'a>(&'a [Monomial]);

impl Serialize for Terms<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
        for m in self.0 {
            seq.serialize_element(m)?;
        }
        seq.end()
    }
}
