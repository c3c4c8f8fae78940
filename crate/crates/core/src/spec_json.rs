//! JSON spec documents.
//!
//! ```json
//! {"n": 2, "p": 2, "mode": "rational", "symmetric": false,
//!  "variables": [{"atoms": [{"v": "-1", "prob": "1/2"}, {"v": "1", "prob": "1/2"}]},
//!                {"sampler": "normal"}],
//!  "kernels": {"type": "homogeneous", "coeffs": [{"subset": [1, 2], "a": "1"}]}}
//! ```
//!
//! Table kernels use `{"type": "table", "entries": [{"subset": [..], "table": [..]}]}`.
//! Subsets are 1-based. Scalars are strings (`"3/4"`, `"-0.25"`) or JSON
//! numbers.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{
    validate_spec, Atom, FiniteDistribution, Kernel, KernelFamily, SamplerKind, Subset, UStatisticSpec, Variable,
    Violation,
};
use crate::scalar::{Mode, ParseScalarError, Scalar};
use crate::BigRational;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecParseError {
    #[error("malformed spec document: {0}")]
    Json(String),
    #[error(transparent)]
    Scalar(#[from] ParseScalarError),
    #[error("{0}")]
    Structure(String),
    #[error("invalid spec: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    n: usize,
    p: usize,
    #[serde(default = "default_mode")]
    mode: Mode,
    variables: Vec<VariableDoc>,
    kernels: KernelsDoc,
    #[serde(default)]
    symmetric: bool,
}

fn default_mode() -> Mode {
    Mode::Rational
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum VariableDoc {
    Finite { atoms: Vec<AtomDoc> },
    Sampler { sampler: SamplerKind },
}

#[derive(Serialize, Deserialize)]
struct AtomDoc {
    v: Value,
    prob: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum KernelsDoc {
    Homogeneous { coeffs: Vec<CoeffDoc> },
    Table { entries: Vec<TableDoc> },
}

#[derive(Serialize, Deserialize)]
struct CoeffDoc {
    subset: Vec<usize>,
    a: Value,
}

#[derive(Serialize, Deserialize)]
struct TableDoc {
    subset: Vec<usize>,
    table: Vec<Value>,
}

/// A parsed spec in the mode it declares.
#[derive(Clone, Debug, PartialEq)]
pub enum AnySpec {
    Rational(UStatisticSpec<BigRational>),
    Real(UStatisticSpec<f64>),
}

impl AnySpec {
    pub fn mode(&self) -> Mode {
        match self {
            AnySpec::Rational(_) => Mode::Rational,
            AnySpec::Real(_) => Mode::Real,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            AnySpec::Rational(s) => s.n,
            AnySpec::Real(s) => s.n,
        }
    }

    pub fn p(&self) -> usize {
        match self {
            AnySpec::Rational(s) => s.p(),
            AnySpec::Real(s) => s.p(),
        }
    }

    pub fn symmetric(&self) -> bool {
        match self {
            AnySpec::Rational(s) => s.symmetric,
            AnySpec::Real(s) => s.symmetric,
        }
    }

    pub fn to_real(&self) -> UStatisticSpec<f64> {
        match self {
            AnySpec::Rational(s) => s.to_real(),
            AnySpec::Real(s) => s.clone(),
        }
    }
}

fn scalar<S: Scalar>(v: &Value) -> Result<S, SpecParseError> {
    match v {
        Value::String(s) => Ok(S::parse(s)?),
        // `Display` of a JSON number is its shortest decimal form, which
        // parses exactly in rational mode.
        Value::Number(n) => Ok(S::parse(&n.to_string())?),
        other => Err(SpecParseError::Structure(format!("expected a number or string, found {other}"))),
    }
}

fn subset(one_based: &[usize], n: usize) -> Result<Subset, SpecParseError> {
    if one_based.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SpecParseError::Structure(format!(
            "subset {one_based:?} must be strictly increasing"
        )));
    }
    if one_based.iter().any(|&i| i == 0 || i > n) {
        return Err(SpecParseError::Structure(format!(
            "subset {one_based:?} is outside 1..={n}"
        )));
    }
    Subset::from_one_based(one_based).ok_or_else(|| SpecParseError::Structure(format!("bad subset {one_based:?}")))
}

fn build<S: Scalar>(doc: &Document) -> Result<UStatisticSpec<S>, SpecParseError> {
    let variables = doc
        .variables
        .iter()
        .map(|v| match v {
            VariableDoc::Finite { atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|a| {
                        Ok(Atom {
                            value: scalar(&a.v)?,
                            prob: scalar(&a.prob)?,
                        })
                    })
                    .collect::<Result<Vec<_>, SpecParseError>>()?;
                Ok(Variable::Finite(FiniteDistribution { atoms }))
            }
            VariableDoc::Sampler { sampler } => Ok(Variable::Sampler(*sampler)),
        })
        .collect::<Result<Vec<_>, SpecParseError>>()?;
    let mut kernels = KernelFamily::new(doc.p);
    let mut insert = |s: Subset, k: Kernel<S>| {
        let text = s.to_string();
        match kernels.entries.insert(s, k) {
            Some(_) => Err(SpecParseError::Structure(format!("subset {text} appears twice"))),
            None => Ok(()),
        }
    };
    match &doc.kernels {
        KernelsDoc::Homogeneous { coeffs } => {
            for c in coeffs {
                insert(subset(&c.subset, doc.n)?, Kernel::Product(scalar(&c.a)?))?;
            }
        }
        KernelsDoc::Table { entries } => {
            for e in entries {
                let table = e.table.iter().map(scalar).collect::<Result<Vec<S>, _>>()?;
                insert(subset(&e.subset, doc.n)?, Kernel::Table(table))?;
            }
        }
    }
    let spec = UStatisticSpec {
        n: doc.n,
        variables,
        kernels,
        symmetric: doc.symmetric,
    };
    let violations = validate_spec(&spec);
    if !violations.is_empty() {
        return Err(SpecParseError::Invalid(violations));
    }
    Ok(spec)
}

pub fn parse_spec(text: &str) -> Result<AnySpec, SpecParseError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| SpecParseError::Json(e.to_string()))?;
    match doc.mode {
        Mode::Rational => Ok(AnySpec::Rational(build(&doc)?)),
        Mode::Real => Ok(AnySpec::Real(build(&doc)?)),
    }
}

/// Serializes a spec; kernels must be all products or all tables.
pub fn spec_to_json<S: Scalar>(spec: &UStatisticSpec<S>) -> Value {
    let s = |v: &S| Value::String(v.to_canonical());
    let variables: Vec<Value> = spec
        .variables
        .iter()
        .map(|v| match v {
            Variable::Finite(d) => serde_json::json!({
                "atoms": d.atoms.iter().map(|a| serde_json::json!({"v": s(&a.value), "prob": s(&a.prob)})).collect::<Vec<_>>()
            }),
            Variable::Sampler(k) => serde_json::json!({ "sampler": k }),
        })
        .collect();
    let all_products = spec.kernels.entries.values().all(|k| matches!(k, Kernel::Product(_)));
    let kernels = if all_products {
        let coeffs: Vec<Value> = spec
            .kernels
            .entries
            .iter()
            .map(|(sub, k)| match k {
                Kernel::Product(a) => serde_json::json!({"subset": sub.one_based(), "a": s(a)}),
                Kernel::Table(_) => unreachable!(),
            })
            .collect();
        serde_json::json!({"type": "homogeneous", "coeffs": coeffs})
    } else {
        let entries: Vec<Value> = spec
            .kernels
            .entries
            .iter()
            .map(|(sub, k)| {
                let t = spec.kernel_table(sub, k);
                serde_json::json!({"subset": sub.one_based(), "table": t.iter().map(s).collect::<Vec<_>>()})
            })
            .collect();
        serde_json::json!({"type": "table", "entries": entries})
    };
    serde_json::json!({
        "n": spec.n,
        "p": spec.p(),
        "mode": S::MODE,
        "variables": variables,
        "kernels": kernels,
        "symmetric": spec.symmetric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const X1X2: &str = r#"{"n":2,"p":2,"mode":"rational",
        "variables":[{"atoms":[{"v":"-1","prob":"1/2"},{"v":"1","prob":"1/2"}]},
                     {"atoms":[{"v":"-1","prob":"1/2"},{"v":"1","prob":"1/2"}]}],
        "kernels":{"type":"homogeneous","coeffs":[{"subset":[1,2],"a":"1"}]},"symmetric":false}"#;

    #[test]
    fn parses_product_spec() {
        let AnySpec::Rational(s) = parse_spec(X1X2).unwrap() else {
            panic!("mode")
        };
        assert_eq!(s.n, 2);
        assert_eq!(s.p(), 2);
        assert_eq!(s.evaluate(&[0, 1]), BigRational::from_int(-1));
    }

    #[test]
    fn round_trip() {
        let a = parse_spec(X1X2).unwrap();
        let AnySpec::Rational(s) = &a else { panic!() };
        let text = spec_to_json(s).to_string();
        assert_eq!(parse_spec(&text).unwrap(), a);
    }

    #[test]
    fn real_mode_and_samplers() {
        let text = r#"{"n":2,"p":1,"mode":"real","variables":[{"sampler":"normal"},{"sampler":"uniform"}],
            "kernels":{"type":"homogeneous","coeffs":[{"subset":[1],"a":0.6},{"subset":[2],"a":"0.8"}]}}"#;
        let AnySpec::Real(s) = parse_spec(text).unwrap() else { panic!() };
        assert!(!s.is_finite());
        assert_eq!(s.kernels.entries[&Subset::new(vec![0])], Kernel::Product(0.6));
    }

    #[test]
    fn decimal_numbers_are_exact() {
        let text = X1X2.replace(r#""a":"1""#, r#""a":0.1"#);
        let AnySpec::Rational(s) = parse_spec(&text).unwrap() else { panic!() };
        assert_eq!(
            s.kernels.entries[&Subset::new(vec![0, 1])],
            Kernel::Product(BigRational::from_ratio(1, 10))
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_spec("{"), Err(SpecParseError::Json(_))));
        assert!(matches!(parse_spec(&X1X2.replace("[1,2]", "[2,1]")), Err(SpecParseError::Structure(_))));
        assert!(matches!(parse_spec(&X1X2.replace("[1,2]", "[1,3]")), Err(SpecParseError::Structure(_))));
        assert!(matches!(parse_spec(&X1X2.replace("\"1/2\"", "\"x\"")), Err(SpecParseError::Scalar(_))));
        assert!(matches!(parse_spec(&X1X2.replace("\"p\":2", "\"p\":1")), Err(SpecParseError::Invalid(_))));
    }
}
