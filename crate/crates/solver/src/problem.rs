use serde::{Deserialize, Serialize};

use crate::SolverError;

/// Index of a variable inside a [`Problem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl RowSense {
    pub fn symbol(self) -> &'static str {
        match self {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Constraint {
    /// Left-hand side value at `x`.
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * x[v.0]).sum()
    }
}

/// A linear (mixed-integer) program: `min/max c'x` subject to row constraints and variable bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub sense: ObjectiveSense,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl Default for Problem {
    fn default() -> Self {
        Problem::new("problem", ObjectiveSense::Minimize)
    }
}

impl Problem {
    pub fn new(name: impl Into<String>, sense: ObjectiveSense) -> Self {
        Problem {
            name: name.into(),
            sense,
            variables: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        cost: f64,
        integer: bool,
    ) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            cost,
            integer,
        });
        VarId(self.variables.len() - 1)
    }

    /// Continuous variable in `[0, +inf)`.
    pub fn add_nonneg(&mut self, name: impl Into<String>, cost: f64) -> VarId {
        self.add_variable(name, 0.0, f64::INFINITY, cost, false)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_integer(&self) -> usize {
        self.variables.iter().filter(|v| v.integer).count()
    }

    pub fn has_integers(&self) -> bool {
        self.variables.iter().any(|v| v.integer)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables.iter().zip(x).map(|(v, xi)| v.cost * xi).sum()
    }

    /// Copy of the problem with every integrality mark dropped.
    pub fn relaxation(&self) -> Problem {
        let mut relaxed = self.clone();
        for v in &mut relaxed.variables {
            v.integer = false;
        }
        relaxed
    }

    /// Structural checks: finite coefficients, consistent bounds, known variable ids.
    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.variables.len();
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || !v.cost.is_finite() {
                return Err(SolverError::InvalidProblem(format!(
                    "variable `{}` has a non-finite cost or NaN bound",
                    v.name
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(SolverError::InvalidProblem(format!(
                    "variable `{}` has an empty domain",
                    v.name
                )));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(SolverError::InvalidProblem(format!(
                    "constraint `{}` has a non-finite right-hand side",
                    c.name
                )));
            }
            for &(v, a) in &c.terms {
                if v.0 >= n {
                    return Err(SolverError::InvalidProblem(format!(
                        "constraint `{}` references undeclared variable #{}",
                        c.name, v.0
                    )));
                }
                if !a.is_finite() {
                    return Err(SolverError::InvalidProblem(format!(
                        "constraint `{}` has a non-finite coefficient",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }
}
