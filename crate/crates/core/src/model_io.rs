//! JSON model files: a sequence of independent coordinates plus a functional.
//!
//! ```json
//! {"rademacher": 2,
//!  "functional": {"kind": "weighted_sum", "coeffs": [0.7071067811865476, 0.7071067811865476]}}
//! ```
//!
//! The sequence is given by exactly one of `"coordinates"` (a list of
//! `{"atoms": [[value, prob], ...]}`), `"rademacher"` (a count) or
//! `"bernoulli"` (a list of success probabilities). Functional kinds:
//! `weighted_sum` (`coeffs`, optional `center`), `partial_sum`,
//! `quadratic_form` (`matrix`), `m_run` (`coeffs`, `m`), `m_scan` (`m`,
//! `tables` of `[[sum, value], ...]` per window), `exceedance_count`
//! (`threshold`, `m`) and `table` (`values` in enumeration order, last
//! coordinate fastest). Any kind accepts `"integer_valued": true|false`.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::SteinError;
use crate::functional::{self, Functional, ScanTable};
use crate::prob_model::{DiscreteDistribution, IndependentSequence};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default)]
    pub coordinates: Option<Vec<CoordinateSpec>>,
    #[serde(default)]
    pub rademacher: Option<usize>,
    #[serde(default)]
    pub bernoulli: Option<Vec<f64>>,
    pub functional: FunctionalSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinateSpec {
    pub atoms: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    WeightedSum {
        coeffs: Vec<f64>,
        #[serde(default)]
        center: bool,
        #[serde(default)]
        integer_valued: Option<bool>,
    },
    PartialSum {
        #[serde(default)]
        integer_valued: Option<bool>,
    },
    QuadraticForm {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        integer_valued: Option<bool>,
    },
    MRun {
        coeffs: Vec<f64>,
        m: usize,
        #[serde(default)]
        integer_valued: Option<bool>,
    },
    MScan {
        m: usize,
        tables: Vec<Vec<(f64, f64)>>,
        #[serde(default)]
        integer_valued: Option<bool>,
    },
    ExceedanceCount {
        threshold: f64,
        m: usize,
        #[serde(default)]
        integer_valued: Option<bool>,
    },
    Table {
        values: Vec<f64>,
        #[serde(default)]
        integer_valued: Option<bool>,
    },
}

/// Why a model could not be loaded.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// Unreadable file or JSON that does not match the schema.
    Schema(String),
    /// Well-formed input that violates a model precondition.
    Invalid(SteinError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Schema(m) => write!(f, "schema error: {m}"),
            ModelError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<SteinError> for ModelError {
    fn from(e: SteinError) -> Self {
        ModelError::Invalid(e)
    }
}

/// A loaded model: the sequence and the functional bound to it.
#[derive(Debug, Clone)]
pub struct Model {
    pub seq: IndependentSequence,
    pub functional: Functional,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Schema(e.to_string()))
    }

    pub fn sequence(&self) -> Result<IndependentSequence, ModelError> {
        let given = [self.coordinates.is_some(), self.rademacher.is_some(), self.bernoulli.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(ModelError::Schema(
                "give exactly one of \"coordinates\", \"rademacher\", \"bernoulli\"".into(),
            ));
        }
        let seq = if let Some(coords) = &self.coordinates {
            let dists =
                coords.iter().map(|c| DiscreteDistribution::new(&c.atoms)).collect::<crate::Result<Vec<_>>>()?;
            IndependentSequence::new(dists)?
        } else if let Some(n) = self.rademacher {
            IndependentSequence::rademacher(n)?
        } else {
            IndependentSequence::bernoulli(self.bernoulli.as_deref().unwrap_or_default())?
        };
        Ok(seq)
    }

    pub fn build(&self) -> Result<Model, ModelError> {
        let seq = self.sequence()?;
        let (f, flag) = match &self.functional {
            FunctionalSpec::WeightedSum { coeffs, center, integer_valued } => {
                (functional::weighted_sum(coeffs, *center)?, *integer_valued)
            }
            FunctionalSpec::PartialSum { integer_valued } => (functional::partial_sum(&seq)?, *integer_valued),
            FunctionalSpec::QuadraticForm { matrix, integer_valued } => {
                (functional::quadratic_form(matrix)?, *integer_valued)
            }
            FunctionalSpec::MRun { coeffs, m, integer_valued } => (functional::m_run(coeffs, *m)?, *integer_valued),
            FunctionalSpec::MScan { m, tables, integer_valued } => {
                let tables = tables.iter().map(|t| ScanTable::new(t.clone())).collect();
                (functional::m_scan(tables, *m)?, *integer_valued)
            }
            FunctionalSpec::ExceedanceCount { threshold, m, integer_valued } => {
                (functional::exceedance_count(*threshold, *m, seq.len())?, *integer_valued)
            }
            FunctionalSpec::Table { values, integer_valued } => {
                (functional::table(seq.len(), values.clone())?, *integer_valued)
            }
        };
        let f = match flag {
            Some(b) => f.with_integer_valued(b),
            None => f,
        };
        // Surfaces arity and table-shape problems at load time.
        f.evaluator(&seq)?;
        Ok(Model { seq, functional: f })
    }
}

pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    ModelFile::parse(text)?.build()
}

pub fn load_model(path: &Path) -> Result<Model, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Schema(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::Kind;

    #[test]
    fn parses_each_sequence_form() {
        let m = parse_model(r#"{"rademacher":2,"functional":{"kind":"weighted_sum","coeffs":[1,1]}}"#).unwrap();
        assert_eq!(m.seq.len(), 2);
        let m = parse_model(r#"{"bernoulli":[0.5,0.25],"functional":{"kind":"m_run","coeffs":[1],"m":2}}"#).unwrap();
        assert_eq!(m.functional.kind(), Kind::MRun);
        let m = parse_model(
            r#"{"coordinates":[{"atoms":[[0,0.2],[1,0.3],[2,0.5]]},{"atoms":[[-1,0.5],[1,0.5]]}],
                "functional":{"kind":"table","values":[1,2,3,4,5,6],"integer_valued":true}}"#,
        )
        .unwrap();
        assert_eq!(m.functional.declared_integer_valued(), Some(true));
    }

    #[test]
    fn schema_and_precondition_errors_differ() {
        let missing = parse_model(r#"{"functional":{"kind":"partial_sum"}}"#);
        assert!(matches!(missing, Err(ModelError::Schema(_))));
        let both = parse_model(r#"{"rademacher":2,"bernoulli":[0.5],"functional":{"kind":"partial_sum"}}"#);
        assert!(matches!(both, Err(ModelError::Schema(_))));
        let unknown = parse_model(r#"{"rademacher":2,"functional":{"kind":"spline"}}"#);
        assert!(matches!(unknown, Err(ModelError::Schema(_))));
        let diag = parse_model(r#"{"rademacher":2,"functional":{"kind":"quadratic_form","matrix":[[1,0],[0,0]]}}"#);
        assert!(matches!(diag, Err(ModelError::Invalid(SteinError::NonzeroDiagonal { index: 0, .. }))));
        let arity = parse_model(r#"{"rademacher":3,"functional":{"kind":"weighted_sum","coeffs":[1,1]}}"#);
        assert!(matches!(arity, Err(ModelError::Invalid(SteinError::ArityMismatch { .. }))));
    }
}
