//! Convex displacement costs `c(x)` with closed-form conjugates.
//!
//! Two families are supported: the quadratic cost `½‖x‖²`, which is its own
//! conjugate, and the power cost `‖x‖^p / p` for `p > 1`, whose conjugate is
//! `‖y‖^q / q` with `1/p + 1/q = 1`. Gradients at the origin are taken to be 0.
//!
//! The [`ConvexCost`] trait is what the rest of the crate consumes. It is
//! object safe so test harnesses can wrap a cost and perturb one of its maps.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, RiftError};

/// A convex cost together with its convex conjugate and both gradients.
pub trait ConvexCost: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);
    fn conjugate(&self, y: &[f64]) -> f64;
    fn conjugate_gradient_into(&self, y: &[f64], out: &mut [f64]);

    /// Short human-readable name.
    fn describe(&self) -> String {
        "custom".into()
    }

    /// True when `c = c* = ½‖·‖²`, which admits closed-form fits.
    fn is_quadratic(&self) -> bool {
        false
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.gradient_into(x, &mut out);
        out
    }

    fn conjugate_gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.conjugate_gradient_into(y, &mut out);
        out
    }

    /// `B_c(x; y) = c(x) - c(y) - (x - y)ᵀ ∇c(y)`.
    fn bregman(&self, x: &[f64], y: &[f64]) -> f64 {
        let g = self.gradient(y);
        let lin: f64 = x
            .iter()
            .zip(y)
            .zip(&g)
            .map(|((xi, yi), gi)| (xi - yi) * gi)
            .sum();
        self.value(x) - self.value(y) - lin
    }

    /// `M_c(x; y) = c(x) - xᵀy + c*(y)`, nonnegative by Fenchel-Young.
    fn matching(&self, x: &[f64], y: &[f64]) -> f64 {
        self.value(x) - dot(x, y) + self.conjugate(y)
    }
}

/// The cost families admitted by the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostFunction {
    Quadratic,
    Power { p: f64 },
}

impl CostFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 {
            return Err(RiftError::Construction(format!(
                "power cost requires a finite exponent p > 1, got {p}"
            )));
        }
        Ok(CostFunction::Power { p })
    }

    /// Conjugate exponent `q` with `1/p + 1/q = 1`; 2 for the quadratic cost.
    pub fn conjugate_exponent(&self) -> f64 {
        match *self {
            CostFunction::Quadratic => 2.0,
            CostFunction::Power { p } => p / (p - 1.0),
        }
    }
}

impl ConvexCost for CostFunction {
    fn describe(&self) -> String {
        self.to_string()
    }

    fn is_quadratic(&self) -> bool {
        matches!(self, CostFunction::Quadratic)
    }

    fn value(&self, x: &[f64]) -> f64 {
        match *self {
            CostFunction::Quadratic => 0.5 * dot(x, x),
            CostFunction::Power { p } => norm(x).powf(p) / p,
        }
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            CostFunction::Quadratic => out.copy_from_slice(x),
            CostFunction::Power { p } => scaled_power_map(x, p, out),
        }
    }

    fn conjugate(&self, y: &[f64]) -> f64 {
        match *self {
            CostFunction::Quadratic => 0.5 * dot(y, y),
            CostFunction::Power { .. } => {
                let q = self.conjugate_exponent();
                norm(y).powf(q) / q
            }
        }
    }

    fn conjugate_gradient_into(&self, y: &[f64], out: &mut [f64]) {
        match *self {
            CostFunction::Quadratic => out.copy_from_slice(y),
            CostFunction::Power { .. } => scaled_power_map(y, self.conjugate_exponent(), out),
        }
    }
}

/// `out = ‖x‖^{e-2} x`, with 0 at the origin.
fn scaled_power_map(x: &[f64], e: f64, out: &mut [f64]) {
    let r = norm(x);
    if r == 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    let s = r.powf(e - 2.0);
    for (o, xi) in out.iter_mut().zip(x) {
        *o = s * xi;
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFunction::Quadratic => write!(f, "quadratic"),
            CostFunction::Power { p } => write!(f, "power:{p}"),
        }
    }
}

impl FromStr for CostFunction {
    type Err = RiftError;

    /// Parses `quadratic` or `power:<p>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("quadratic") {
            return Ok(CostFunction::Quadratic);
        }
        if let Some(rest) = s.strip_prefix("power:") {
            let p: f64 = rest.trim().parse().map_err(|_| {
                RiftError::Construction(format!("cannot parse power exponent {rest:?}"))
            })?;
            return CostFunction::power(p);
        }
        Err(RiftError::Construction(format!(
            "unknown cost {s:?}; expected `quadratic` or `power:<p>`"
        )))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(RiftError::Domain(format!("{name} has non-finite entries")))
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    check_finite("x", x)?;
    check_finite("y", y)?;
    if x.len() != y.len() {
        return Err(RiftError::SizeMismatch(format!(
            "vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Checked `c(x)`.
pub fn eval_cost(c: &dyn ConvexCost, x: &[f64]) -> Result<f64> {
    check_finite("x", x)?;
    Ok(c.value(x))
}

/// Checked `∇c(x)`.
pub fn grad_cost(c: &dyn ConvexCost, x: &[f64]) -> Result<Vec<f64>> {
    check_finite("x", x)?;
    Ok(c.gradient(x))
}

/// Checked `c*(y)`.
pub fn eval_conj(c: &dyn ConvexCost, y: &[f64]) -> Result<f64> {
    check_finite("y", y)?;
    Ok(c.conjugate(y))
}

/// Checked `∇c*(y)`.
pub fn grad_conj(c: &dyn ConvexCost, y: &[f64]) -> Result<Vec<f64>> {
    check_finite("y", y)?;
    Ok(c.conjugate_gradient(y))
}

pub fn bregman(c: &dyn ConvexCost, x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    Ok(c.bregman(x, y))
}

pub fn matching(c: &dyn ConvexCost, x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    Ok(c.matching(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p4() -> CostFunction {
        CostFunction::power(4.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cost_values() {
        let q = CostFunction::Quadratic;
        assert_eq!(eval_cost(&q, &[3.0, 4.0]).unwrap(), 12.5);
        assert_eq!(eval_cost(&p4(), &[1.0, 0.0]).unwrap(), 0.25);
        assert_eq!(eval_cost(&q, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_input_is_a_domain_error() {
        let q = CostFunction::Quadratic;
        assert!(matches!(
            eval_cost(&q, &[f64::NAN]),
            Err(RiftError::Domain(_))
        ));
        assert!(grad_cost(&q, &[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn gradients() {
        assert_eq!(
            grad_cost(&CostFunction::Quadratic, &[3.0, 4.0]).unwrap(),
            vec![3.0, 4.0]
        );
        assert_eq!(grad_cost(&p4(), &[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let p15 = CostFunction::power(1.5).unwrap();
        assert_eq!(grad_cost(&p15, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn conjugate_values() {
        assert_eq!(eval_conj(&CostFunction::Quadratic, &[1.0, 1.0]).unwrap(), 1.0);
        // Brute-force sup over x of xy - x^4/4 on [-3, 3] with step 1e-4.
        let y = 1.0;
        let brute = (0..=60_000)
            .map(|k| -3.0 + 1e-4 * k as f64)
            .map(|x| x * y - x.powi(4) / 4.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let analytic = eval_conj(&p4(), &[1.0, 0.0]).unwrap();
        assert!(close(brute, 0.75, 1e-8));
        assert!(close(analytic, brute, 1e-8));
        for c in [CostFunction::Quadratic, p4(), CostFunction::power(1.5).unwrap()] {
            assert_eq!(eval_conj(&c, &[0.0, 0.0]).unwrap(), 0.0);
            assert_eq!(grad_conj(&c, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn conjugate_gradient_inverts_gradient() {
        assert_eq!(
            grad_conj(&CostFunction::Quadratic, &[2.0, -1.0]).unwrap(),
            vec![2.0, -1.0]
        );
        let c = p4();
        let back = grad_conj(&c, &grad_cost(&c, &[1.0, 0.0]).unwrap()).unwrap();
        assert!(close(back[0], 1.0, 1e-12) && back[1] == 0.0);
        let back = grad_conj(&c, &[1.0, 0.0]).unwrap();
        assert!(close(back[0], 1.0, 1e-12));
    }

    #[test]
    fn bregman_examples() {
        let q = CostFunction::Quadratic;
        assert_eq!(bregman(&q, &[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.5);
        for c in [q, p4()] {
            assert!(bregman(&c, &[0.3, 0.7], &[0.3, 0.7]).unwrap().abs() < 1e-15);
        }
        // c(1) - c(2) - (1 - 2) * c'(2) with c(x) = x^4/4.
        let generic = 0.25 - 4.0 - (1.0 - 2.0) * 8.0;
        let b = bregman(&p4(), &[1.0, 0.0], &[2.0, 0.0]).unwrap();
        assert!(close(b, 4.25, 1e-12) && close(b, generic, 1e-12));
    }

    #[test]
    fn matching_examples() {
        let q = CostFunction::Quadratic;
        assert_eq!(matching(&q, &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(matching(&q, &[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.5);
        let expected = 0.25 - 0.5 + eval_conj(&p4(), &[0.5, 0.0]).unwrap();
        let m = matching(&p4(), &[1.0, 0.0], &[0.5, 0.0]).unwrap();
        assert!(close(m, expected, 1e-14));
        assert!(close(m, 0.047_637_6, 1e-6));
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("quadratic".parse::<CostFunction>().unwrap(), CostFunction::Quadratic);
        assert_eq!(
            "power:1.5".parse::<CostFunction>().unwrap(),
            CostFunction::Power { p: 1.5 }
        );
        assert!("power:0.5".parse::<CostFunction>().is_err());
        assert!("power:1".parse::<CostFunction>().is_err());
        assert!("cubic".parse::<CostFunction>().is_err());
        let c = CostFunction::power(2.5).unwrap();
        assert_eq!(c.to_string().parse::<CostFunction>().unwrap(), c);
    }
}
