//! The result type shared by every supremum estimator.

use serde::{Deserialize, Serialize};

use crate::json::{Cplx, MatrixJson};

/// An estimated constant together with the configuration that attains it.
///
/// Suprema over infinite sets are reported as maximization lower bounds
/// (`is_lower_bound`); the witness carries enough data to re-evaluate the
/// value without repeating the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub value: f64,
    pub witness: Witness,
    pub method: MethodInfo,
    pub is_lower_bound: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodInfo {
    /// `exhaustive`, `randomized`, `grid`, `exact`, ...
    pub mode: String,
    pub samples: usize,
    pub seed: Option<u64>,
    pub starts: usize,
    pub evaluations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MethodInfo {
    pub fn new(mode: &str) -> Self {
        MethodInfo { mode: mode.to_string(), ..Default::default() }
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    None,
    /// A point of the complex plane, e.g. the arg-max of `||zR(z,A)||`.
    Point { zeta: Cplx },
    /// Member selection and vectors (plus dual vectors for the weak forms).
    Vectors {
        selection: Vec<usize>,
        x: Vec<Vec<Cplx>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        xstar: Vec<Vec<Cplx>>,
    },
    /// Doubly indexed vectors (row-major `j * n + k`), optional scalars and duals.
    Grid {
        n: usize,
        x: Vec<Vec<Cplx>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        xstar: Vec<Vec<Cplx>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        alpha: Vec<Cplx>,
    },
    /// Coefficients of a dyadic / sign sum, with the dilation parameter.
    Coefficients {
        t: f64,
        #[serde(default)]
        ray: i8,
        coefficients: Vec<Cplx>,
    },
    /// A single vector, e.g. the maximizer of a ratio of norms.
    Vector { x: Vec<Cplx> },
    /// Parameters of a test function.
    Function { description: String, params: serde_json::Value },
    Matrix { matrix: MatrixJson },
}

impl BoundEstimate {
    pub fn new(value: f64, witness: Witness, method: MethodInfo, is_lower_bound: bool) -> Self {
        BoundEstimate { value, witness, method, is_lower_bound }
    }
}
