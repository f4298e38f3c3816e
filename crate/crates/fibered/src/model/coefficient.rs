//! Diffusion coefficients a(x, t) and their eigenvalue profiles.
//!
//! A coefficient depends on the fiber-base point x in R^m and on the
//! gradient magnitude t > 0. The registry covers the constant medium, the
//! p-power law a = t^{p-2}, and the x-modulated power law
//! a = alpha(x) t^{p-2} with alpha bounded below away from zero.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::adaptive_simpson;

/// alpha(x) = base + amp * cos(freq * x_1); requires base - |amp| > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaProfile {
    pub base: f64,
    pub amp: f64,
    pub freq: f64,
}

impl AlphaProfile {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.base + self.amp * (self.freq * x.first().copied().unwrap_or(0.0)).cos()
    }

    pub fn lower_bound(&self) -> f64 {
        self.base - self.amp.abs()
    }
}

/// Custom coefficient from closures, with an optional registered closed
/// form for the t-integral of lambda_2.
pub struct CustomCoefficient {
    pub label: String,
    pub a: Box<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
    pub dt: Box<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
    pub lambda2_integral: Option<Box<dyn Fn(&[f64], f64) -> f64 + Send + Sync>>,
}

#[derive(Clone)]
pub enum Coefficient {
    /// a(x, t) = value
    Constant { value: f64 },
    /// a(x, t) = t^{p-2}
    PPower { p: f64 },
    /// a(x, t) = alpha(x) t^{p-2}
    XModulated { p: f64, alpha: AlphaProfile },
    Custom(Arc<CustomCoefficient>),
}

impl std::fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Coefficient({})", self.label())
    }
}

impl Coefficient {
    pub fn constant() -> Coefficient {
        Coefficient::Constant { value: 1.0 }
    }

    pub fn p_power(p: f64) -> Result<Coefficient> {
        if p <= 1.0 {
            return Err(Error::Domain(format!("p-power coefficient needs p > 1, got {p}")));
        }
        Ok(Coefficient::PPower { p })
    }

    pub fn x_modulated(p: f64, alpha: AlphaProfile) -> Result<Coefficient> {
        if p <= 1.0 {
            return Err(Error::Domain(format!("p-power coefficient needs p > 1, got {p}")));
        }
        if alpha.lower_bound() <= 0.0 {
            return Err(Error::Domain(
                "modulation must be bounded below away from zero".into(),
            ));
        }
        Ok(Coefficient::XModulated { p, alpha })
    }

    pub fn label(&self) -> String {
        match self {
            Coefficient::Constant { value } => format!("constant {value}"),
            Coefficient::PPower { p } => format!("p-power p={p}"),
            Coefficient::XModulated { p, .. } => format!("x-modulated p-power p={p}"),
            Coefficient::Custom(c) => c.label.clone(),
        }
    }

    /// a(x, t); positive for t > 0 by construction of the registry.
    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::PPower { p } => t.powf(p - 2.0),
            Coefficient::XModulated { p, alpha } => alpha.value(x) * t.powf(p - 2.0),
            Coefficient::Custom(c) => (c.a)(x, t),
        }
    }

    /// da/dt(x, t).
    pub fn dt(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Coefficient::Constant { .. } => 0.0,
            Coefficient::PPower { p } | Coefficient::XModulated { p, .. } if *p == 2.0 => 0.0,
            Coefficient::PPower { p } => (p - 2.0) * t.powf(p - 3.0),
            Coefficient::XModulated { p, alpha } => {
                alpha.value(x) * (p - 2.0) * t.powf(p - 3.0)
            }
            Coefficient::Custom(c) => (c.dt)(x, t),
        }
    }

    /// lambda_1(x, t) = da/dt * t + a, the radial eigenvalue of the
    /// linearized flux.
    pub fn lambda1(&self, x: &[f64], t: f64) -> f64 {
        self.dt(x, t) * t + self.value(x, t)
    }

    /// lambda_2(x, t) = a(x, t), the tangential eigenvalue.
    pub fn lambda2(&self, x: &[f64], t: f64) -> f64 {
        self.value(x, t)
    }

    /// Largest eigenvalue of the linearized flux matrix at gradient
    /// magnitude t.
    pub fn a_bar(&self, x: &[f64], t: f64) -> f64 {
        self.lambda1(x, t).max(self.lambda2(x, t))
    }

    /// Lambda_2(x, t) = integral_0^t lambda_2(x, |tau|) tau dtau.
    ///
    /// Closed forms for the registry entries; custom coefficients use the
    /// registered form when present and adaptive quadrature otherwise.
    /// Near t = 0 the integrand can behave like a power law tau^gamma with
    /// gamma in (-1, 0); that head is integrated by a fitted power law.
    pub fn big_lambda2(&self, x: &[f64], t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let t = t.abs();
        match self {
            Coefficient::Constant { value } => 0.5 * value * t * t,
            Coefficient::PPower { p } => t.powf(*p) / p,
            Coefficient::XModulated { p, alpha } => alpha.value(x) * t.powf(*p) / p,
            Coefficient::Custom(c) => {
                if let Some(cf) = &c.lambda2_integral {
                    return cf(x, t);
                }
                let f = |tau: f64| (c.a)(x, tau.abs()) * tau;
                let eps = 1e-6 * t;
                let q1 = f(eps);
                let q2 = f(2.0 * eps);
                let head = if q1.abs() < 1e-300 {
                    0.0
                } else {
                    let gamma = (q2 / q1).log2();
                    // integral of c tau^gamma over [0, eps]
                    q1 * eps / (gamma + 1.0)
                };
                head + adaptive_simpson(&f, eps, t, 1e-12 * (1.0 + t * t))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profiles() {
        let c = Coefficient::constant();
        let x = [0.0];
        assert_eq!(c.lambda1(&x, 2.0), 1.0);
        assert_eq!(c.lambda2(&x, 2.0), 1.0);
        assert!((c.big_lambda2(&x, 2.0) - 2.0).abs() < 1e-15);
        assert_eq!(c.big_lambda2(&x, 0.0), 0.0);
    }

    #[test]
    fn p_power_profiles() {
        let p = 2.5;
        let c = Coefficient::p_power(p).unwrap();
        let x = [0.0];
        for &t in &[0.3, 1.0, 1.7] {
            assert!((c.lambda1(&x, t) - (p - 1.0) * t.powf(p - 2.0)).abs() < 1e-14);
            assert!((c.lambda2(&x, t) - t.powf(p - 2.0)).abs() < 1e-14);
            assert!((c.big_lambda2(&x, t) - t.powf(p) / p).abs() < 1e-14);
        }
    }

    #[test]
    fn p_equals_two_is_constant() {
        let c = Coefficient::p_power(2.0).unwrap();
        let x = [1.0];
        assert!((c.value(&x, 0.37) - 1.0).abs() < 1e-15);
        assert_eq!(c.dt(&x, 0.37), 0.0);
    }

    #[test]
    fn custom_quadrature_matches_closed_form_for_sub_quadratic_power() {
        // a = t^{p-2} with p = 1.5: integrand tau^{0.5 - ... } = tau^{p-1}
        // has a power-law head near zero.
        let p = 1.5;
        let c = Coefficient::Custom(Arc::new(CustomCoefficient {
            label: "raw p=1.5".into(),
            a: Box::new(move |_x, t| t.powf(p - 2.0)),
            dt: Box::new(move |_x, t| (p - 2.0) * t.powf(p - 3.0)),
            lambda2_integral: None,
        }));
        let x = [0.0];
        for &t in &[0.2, 1.0, 3.0] {
            let got = c.big_lambda2(&x, t);
            let want = t.powf(p) / p;
            assert!((got - want).abs() < 1e-8 * (1.0 + want), "{got} vs {want}");
        }
    }

    #[test]
    fn modulated_coefficient_stays_positive() {
        let alpha = AlphaProfile {
            base: 2.0,
            amp: 0.5,
            freq: 1.3,
        };
        let c = Coefficient::x_modulated(3.0, alpha).unwrap();
        for i in 0..50 {
            let x = [-5.0 + 0.2 * i as f64];
            assert!(c.value(&x, 0.7) > 0.0);
        }
        assert!(Coefficient::x_modulated(
            3.0,
            AlphaProfile {
                base: 1.0,
                amp: 1.5,
                freq: 1.0
            }
        )
        .is_err());
    }
}
