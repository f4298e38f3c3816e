//! JSON problem documents.
//!
//! ```json
//! {
//!   "n": 2,
//!   "grid": {
//!     "extents": [[-5, 5], [-5, 5]],
//!     "nodes": [81, 81],
//!     "m": 1,
//!     "boundary": ["dirichlet", "dirichlet"]
//!   },
//!   "coefficients": [{"kind": "constant"}, {"kind": "p-power", "p": 3.0}],
//!   "potential": {"kind": "blwz"},
//!   "bc": {"kind": "dirichlet-from-init"}
//! }
//! ```
//!
//! Validation errors carry JSON-pointer-style paths.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fields::{make_grid, Boundary};
use crate::model::{AlphaProfile, Coefficient, Potential, Problem};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub n: usize,
    pub grid: GridDoc,
    pub coefficients: Vec<CoefficientDoc>,
    pub potential: PotentialDoc,
    #[serde(default)]
    pub bc: Option<BcDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub extents: Vec<[f64; 2]>,
    pub nodes: Vec<usize>,
    pub m: usize,
    pub boundary: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientDoc {
    pub kind: String,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub alpha: Option<AlphaDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaDoc {
    pub base: f64,
    #[serde(default)]
    pub amp: f64,
    #[serde(default)]
    pub freq: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialDoc {
    pub kind: String,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcDoc {
    pub kind: String,
}

fn cfg_err(pointer: &str, message: impl Into<String>) -> Error {
    Error::Config {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

fn parse_boundary(pointer: &str, s: &str) -> Result<Boundary> {
    match s {
        "dirichlet" => Ok(Boundary::Dirichlet),
        "periodic" => Ok(Boundary::Periodic),
        "neumann-zero" => Ok(Boundary::NeumannZero),
        other => Err(cfg_err(
            pointer,
            format!("unknown boundary '{other}' (dirichlet | periodic | neumann-zero)"),
        )),
    }
}

fn build_coefficient(pointer: &str, doc: &CoefficientDoc) -> Result<Coefficient> {
    match doc.kind.as_str() {
        "constant" => {
            let v = doc.value.unwrap_or(1.0);
            if v <= 0.0 {
                return Err(cfg_err(
                    &format!("{pointer}/value"),
                    "constant coefficient must be positive",
                ));
            }
            Ok(Coefficient::Constant { value: v })
        }
        "p-power" => {
            let p = doc
                .p
                .ok_or_else(|| cfg_err(&format!("{pointer}/p"), "p-power requires 'p'"))?;
            Coefficient::p_power(p).map_err(|e| cfg_err(&format!("{pointer}/p"), e.to_string()))
        }
        "x-modulated" => {
            let p = doc
                .p
                .ok_or_else(|| cfg_err(&format!("{pointer}/p"), "x-modulated requires 'p'"))?;
            let a = doc.alpha.as_ref().ok_or_else(|| {
                cfg_err(&format!("{pointer}/alpha"), "x-modulated requires 'alpha'")
            })?;
            Coefficient::x_modulated(
                p,
                AlphaProfile {
                    base: a.base,
                    amp: a.amp,
                    freq: a.freq,
                },
            )
            .map_err(|e| cfg_err(&format!("{pointer}/alpha"), e.to_string()))
        }
        other => Err(cfg_err(
            &format!("{pointer}/kind"),
            format!("unknown coefficient kind '{other}' (constant | p-power | x-modulated)"),
        )),
    }
}

fn build_potential(doc: &PotentialDoc) -> Result<Potential> {
    match doc.kind.as_str() {
        "zero" => Ok(Potential::Zero),
        "quadratic" => Ok(Potential::Quadratic {
            c: doc
                .c
                .ok_or_else(|| cfg_err("/potential/c", "quadratic requires 'c'"))?,
        }),
        "blwz" => Ok(Potential::Blwz),
        "allen-cahn" => Ok(Potential::AllenCahn),
        "coupled-double-well" => Ok(Potential::CoupledDoubleWell {
            kappa: doc.kappa.unwrap_or(1.0),
        }),
        "abg" => Ok(Potential::Abg),
        "sphere-well" => Ok(Potential::SphereWell {
            scale: doc.scale.unwrap_or(1.0),
        }),
        other => Err(cfg_err(
            "/potential/kind",
            format!(
                "unknown potential kind '{other}' (zero | quadratic | blwz | allen-cahn | \
                 coupled-double-well | abg | sphere-well)"
            ),
        )),
    }
}

impl ProblemDoc {
    pub fn build(&self) -> Result<Problem> {
        let g = &self.grid;
        if g.extents.len() != g.nodes.len() || g.extents.len() != g.boundary.len() {
            return Err(cfg_err(
                "/grid",
                format!(
                    "extents ({}), nodes ({}) and boundary ({}) lengths differ",
                    g.extents.len(),
                    g.nodes.len(),
                    g.boundary.len()
                ),
            ));
        }
        let bounds: Vec<Boundary> = g
            .boundary
            .iter()
            .enumerate()
            .map(|(i, s)| parse_boundary(&format!("/grid/boundary/{i}"), s))
            .collect::<Result<_>>()?;
        let grid = make_grid(&g.extents, &g.nodes, g.m, &bounds)
            .map_err(|e| cfg_err("/grid", e.to_string()))?;
        if self.coefficients.len() != self.n {
            return Err(cfg_err(
                "/coefficients",
                format!("{} entries for n = {}", self.coefficients.len(), self.n),
            ));
        }
        let coefficients: Vec<Coefficient> = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, d)| build_coefficient(&format!("/coefficients/{i}"), d))
            .collect::<Result<_>>()?;
        let potential = build_potential(&self.potential)?;
        if let Some(bc) = &self.bc {
            match bc.kind.as_str() {
                "dirichlet-from-init" | "zero" => {}
                other => {
                    return Err(cfg_err(
                        "/bc/kind",
                        format!("unknown bc kind '{other}' (dirichlet-from-init | zero)"),
                    ))
                }
            }
        }
        let mut problem = Problem::new(self.n, coefficients, potential, grid)
            .map_err(|e| cfg_err("", e.to_string()))?;
        if let Some(bc) = &self.bc {
            if bc.kind == "zero" {
                problem.bc = crate::model::BcSpec::ZeroDirichlet;
            }
        }
        Ok(problem)
    }
}

pub fn load_problem_str(json: &str) -> Result<Problem> {
    let doc: ProblemDoc = serde_json::from_str(json)?;
    doc.build()
}

pub fn load_problem(path: &std::path::Path) -> Result<Problem> {
    let text = std::fs::read_to_string(path)?;
    load_problem_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
        "n": 2,
        "grid": {"extents": [[-5, 5], [-5, 5]], "nodes": [21, 21], "m": 1,
                 "boundary": ["dirichlet", "dirichlet"]},
        "coefficients": [{"kind": "constant"}, {"kind": "p-power", "p": 3.0}],
        "potential": {"kind": "blwz"}
    }"#;

    #[test]
    fn loads_valid_document() {
        let p = load_problem_str(GOOD).unwrap();
        assert_eq!(p.n, 2);
        assert_eq!(p.grid.dim_x(), 1);
        assert_eq!(p.potential.label(), "blwz");
    }

    #[test]
    fn unknown_kind_reports_pointer() {
        let bad = GOOD.replace("p-power", "q-power");
        let err = load_problem_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("/coefficients/1/kind"), "{msg}");
    }

    #[test]
    fn bad_p_reports_pointer() {
        let bad = GOOD.replace("3.0", "0.5");
        let err = load_problem_str(&bad).unwrap_err();
        assert!(err.to_string().contains("/coefficients/1/p"));
    }

    #[test]
    fn mismatched_grid_arrays_report_pointer() {
        let bad = GOOD.replace("\"nodes\": [21, 21]", "\"nodes\": [21]");
        let err = load_problem_str(&bad).unwrap_err();
        assert!(err.to_string().contains("/grid"));
    }

    #[test]
    fn malformed_json_is_a_json_error() {
        assert!(matches!(
            load_problem_str("{ not json"),
            Err(Error::Json(_))
        ));
    }

    #[test]
    fn wrong_component_count_for_potential() {
        let bad = GOOD
            .replace("\"n\": 2", "\"n\": 1")
            .replace(
                "[{\"kind\": \"constant\"}, {\"kind\": \"p-power\", \"p\": 3.0}]",
                "[{\"kind\": \"constant\"}]",
            );
        let err = load_problem_str(&bad).unwrap_err();
        assert!(err.to_string().contains("needs n = 2"));
    }
}
