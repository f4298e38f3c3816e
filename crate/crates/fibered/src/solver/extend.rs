//! Builds an N-dimensional field from a one-variable profile:
//! u(x, y) = ubar(<omega, y>), the shape every one-dimensionally symmetric
//! solution takes. The returned field carries exact derivative callbacks
//! from ubar', ubar''.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::analytic::{Analytic, Extended1d, Profile};
use crate::fields::{sample, Grid, ScalarField};

#[derive(Debug, Clone, Default)]
pub struct ExtendOptions {
    /// Reject a non-unit direction instead of normalizing it.
    pub strict: bool,
}

pub struct Extended {
    pub field: ScalarField,
    pub omega: Vec<f64>,
    pub was_normalized: bool,
}

pub fn extend_1d_to_nd(
    profile: Arc<dyn Profile>,
    omega: &[f64],
    grid: &Arc<Grid>,
    opts: &ExtendOptions,
) -> Result<Extended> {
    let dy = grid.dim_y();
    if omega.len() != dy {
        return Err(Error::DimensionMismatch(format!(
            "direction has {} components, grid has {} homogeneous directions",
            omega.len(),
            dy
        )));
    }
    let norm: f64 = omega.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Domain("direction cannot be zero".into()));
    }
    let deviates = (norm - 1.0).abs() > 1e-12;
    if deviates && opts.strict {
        return Err(Error::Domain(format!(
            "direction norm {norm} differs from 1 beyond 1e-12"
        )));
    }
    let unit: Vec<f64> = omega.iter().map(|v| v / norm).collect();
    let analytic = Extended1d::new(grid.dim_total(), grid.dim_x(), unit.clone(), profile);
    let field = sample(Arc::new(analytic) as Arc<dyn Analytic>, grid.clone())?;
    Ok(Extended {
        field,
        omega: unit,
        was_normalized: deviates,
    })
}

/// Adds a fiber-base modulation mu(x): u(x, y) = mu(x) ubar(<omega, y>).
pub fn extend_1d_to_nd_modulated(
    profile: Arc<dyn Profile>,
    omega: &[f64],
    modulation: Arc<dyn Analytic>,
    grid: &Arc<Grid>,
    opts: &ExtendOptions,
) -> Result<Extended> {
    if modulation.dim() != grid.dim_x() {
        return Err(Error::DimensionMismatch(
            "modulation must live on the fiber base".into(),
        ));
    }
    let base = extend_1d_to_nd(profile.clone(), omega, grid, opts)?;
    let mut analytic = Extended1d::new(
        grid.dim_total(),
        grid.dim_x(),
        base.omega.clone(),
        profile,
    );
    analytic.modulation = Some(modulation);
    let field = sample(Arc::new(analytic) as Arc<dyn Analytic>, grid.clone())?;
    Ok(Extended {
        field,
        omega: base.omega,
        was_normalized: base.was_normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::analytic::{LinearProfile, TanhProfile};
    use crate::fields::{make_grid, y_grad, Boundary, DerivMode};

    fn grid3() -> Arc<Grid> {
        make_grid(
            &[[-1.0, 1.0], [-2.0, 2.0], [-2.0, 2.0]],
            &[5, 9, 9],
            1,
            &[
                Boundary::Dirichlet,
                Boundary::Dirichlet,
                Boundary::Dirichlet,
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_profile_along_first_axis() {
        let g = grid3();
        let e = extend_1d_to_nd(
            Arc::new(LinearProfile {
                slope: 1.0,
                offset: 0.0,
            }),
            &[1.0, 0.0],
            &g,
            &ExtendOptions::default(),
        )
        .unwrap();
        for idx in 0..g.len() {
            let c = g.coords_vec(idx);
            assert!((e.field.value(idx) - c[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn kink_y_gradient_parallel_to_direction() {
        let g = grid3();
        let omega = [0.6, 0.8];
        let e = extend_1d_to_nd(
            Arc::new(TanhProfile { width: 1.0 }),
            &omega,
            &g,
            &ExtendOptions::default(),
        )
        .unwrap();
        let yg = y_grad(&e.field, DerivMode::Analytic).unwrap();
        for idx in 0..g.len() {
            let v = yg.at(idx);
            let cross = v[0] * omega[1] - v[1] * omega[0];
            assert!(cross.abs() < 1e-14);
        }
    }

    #[test]
    fn non_unit_direction_strict_vs_lenient() {
        let g = grid3();
        let p: Arc<dyn Profile> = Arc::new(LinearProfile {
            slope: 1.0,
            offset: 0.0,
        });
        let strict = extend_1d_to_nd(
            p.clone(),
            &[3.0, 4.0],
            &g,
            &ExtendOptions { strict: true },
        );
        assert!(strict.is_err());
        let lenient = extend_1d_to_nd(p, &[3.0, 4.0], &g, &ExtendOptions::default()).unwrap();
        assert!(lenient.was_normalized);
        assert!((lenient.omega[0] - 0.6).abs() < 1e-15);
        assert!((lenient.omega[1] - 0.8).abs() < 1e-15);
    }
}
