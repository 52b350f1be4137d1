//! Fejer-type kernels and the convolution integrals used to force large
//! values of the partial sums.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::AdaptiveSimpson;

/// `sin(pi x)`, exact zero at integers.
fn sin_pi(x: f64) -> f64 {
    let r = x.round();
    let s = (PI * (x - r)).sin();
    if r.rem_euclid(2.0) == 0.0 {
        s
    } else {
        -s
    }
}

/// Fourier transform of the triangle `1 - |u|` on `[-1, 1]`: `(sin(pi xi) / (pi xi))^2`.
pub fn kernel_w(xi: f64) -> f64 {
    if xi == 0.0 {
        return 1.0;
    }
    let s = sin_pi(xi) / (PI * xi);
    s * s
}

/// `K_tau(u) = (1 - |u|)(1 + tau cos(4 pi alpha u))`.
pub fn kernel_k(alpha: f64, tau: i8, u: f64) -> f64 {
    (1.0 - u.abs()) * (1.0 + tau as f64 * (4.0 * PI * alpha * u).cos())
}

/// Parameters of one kernel integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelParams {
    /// Kernel frequency, at least 1.
    pub alpha: f64,
    /// +1 or -1.
    pub tau: i8,
    /// Centre, a positive integer.
    pub t: u64,
    /// `beta = beta_num / beta_den > 0`.
    pub beta_num: u64,
    pub beta_den: u64,
}

impl KernelParams {
    pub fn new(alpha: f64, tau: i8, t: u64, beta_num: u64, beta_den: u64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 1.0 {
            return Err(Error::usage(format!("kernel frequency must be >= 1, got {alpha}")));
        }
        if tau != 1 && tau != -1 {
            return Err(Error::usage(format!("tau must be +1 or -1, got {tau}")));
        }
        if t == 0 || beta_num == 0 || beta_den == 0 {
            return Err(Error::usage("t and beta must be positive"));
        }
        Ok(KernelParams {
            alpha,
            tau,
            t,
            beta_num,
            beta_den,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta_num as f64 / self.beta_den as f64
    }

    pub fn beta_is_one(&self) -> bool {
        self.beta_num == self.beta_den
    }

    /// `alpha_beta = 2 alpha sqrt(beta)`.
    pub fn alpha_beta(&self) -> f64 {
        2.0 * self.alpha * self.beta().sqrt()
    }

    /// `alpha_beta^+- = 2 alpha (sqrt(beta) +- 1)`.
    pub fn alpha_beta_pm(&self) -> (f64, f64) {
        let r = self.beta().sqrt();
        (2.0 * self.alpha * (r + 1.0), 2.0 * self.alpha * (r - 1.0))
    }
}

/// Both routes to `r_beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RBeta {
    /// Adaptive quadrature of the defining integral.
    pub numeric: f64,
    /// `(w(a_b) + tau/2 w(a_b^+) + tau/2 w(a_b^-)) cos(4 pi t sqrt(beta) - pi/4)`.
    pub closed_form: f64,
}

/// `r_beta = int_{-1}^{1} K_tau(u) cos(4 pi (t + alpha u) sqrt(beta) - pi/4) du`.
pub fn r_beta(p: &KernelParams) -> RBeta {
    let root = p.beta().sqrt();
    let t = p.t as f64;
    let integrand = |u: f64| {
        kernel_k(p.alpha, p.tau, u) * (4.0 * PI * (t + p.alpha * u) * root - PI / 4.0).cos()
    };
    // At least eight panels per period of the fastest oscillation on each half.
    let cycles = 2.0 * p.alpha * (root + 1.0);
    let panels = (8.0 * cycles).ceil() as usize + 8;
    let quad = AdaptiveSimpson::with_tolerance(1e-11);
    let numeric =
        quad.integrate_panels(integrand, -1.0, 0.0, panels) + quad.integrate_panels(integrand, 0.0, 1.0, panels);

    let tau = p.tau as f64;
    let (plus, minus) = p.alpha_beta_pm();
    let weight = kernel_w(p.alpha_beta()) + 0.5 * tau * kernel_w(plus) + 0.5 * tau * kernel_w(minus);
    let closed_form = weight * (4.0 * PI * t * root - PI / 4.0).cos();
    RBeta { numeric, closed_form }
}

/// The leading term `delta_{beta=1} tau / (2 sqrt 2)` of `r_beta`.
pub fn r_beta_leading(p: &KernelParams) -> f64 {
    if p.beta_is_one() {
        p.tau as f64 / (2.0 * SQRT_2)
    } else {
        0.0
    }
}

/// `int_{-1}^{1} K_tau(u) du` by quadrature.
pub fn kernel_mass(alpha: f64, tau: i8) -> f64 {
    let panels = (16.0 * alpha).ceil() as usize + 8;
    let quad = AdaptiveSimpson::with_tolerance(1e-12);
    let k = |u| kernel_k(alpha, tau, u);
    quad.integrate_panels(k, -1.0, 0.0, panels) + quad.integrate_panels(k, 0.0, 1.0, panels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_values() {
        assert_eq!(kernel_w(0.0), 1.0);
        assert!((kernel_w(0.5) - 4.0 / (PI * PI)).abs() < 1e-15);
        assert_eq!(kernel_w(1.0), 0.0);
        assert_eq!(kernel_w(-3.0), 0.0);
    }

    #[test]
    fn w_is_even_and_bounded() {
        for i in 1..2000 {
            let xi = i as f64 * 0.0173;
            let w = kernel_w(xi);
            assert_eq!(w, kernel_w(-xi));
            assert!(w >= 0.0);
            assert!(w <= 1.0_f64.min((PI * xi).powi(-2)) * (1.0 + 1e-12), "xi = {xi}");
        }
    }

    #[test]
    fn w_matches_its_defining_integral() {
        let quad = AdaptiveSimpson::with_tolerance(1e-12);
        for xi in [0.0, 0.25, 0.5, 1.5, 3.7] {
            let f = |u: f64| (1.0 - u.abs()) * (2.0 * PI * xi * u).cos();
            let v = quad.integrate_panels(f, -1.0, 0.0, 16) + quad.integrate_panels(f, 0.0, 1.0, 16);
            assert!((v - kernel_w(xi)).abs() < 1e-10, "xi = {xi}");
        }
    }

    #[test]
    fn kernel_is_nonnegative_with_bounded_mass() {
        for alpha in [1.0, 5.0, 10.0, 20.0, 50.0, 7.3] {
            for tau in [1, -1] {
                for i in 0..=400 {
                    let u = -1.0 + i as f64 / 200.0;
                    assert!(kernel_k(alpha, tau, u) >= 0.0);
                }
                let mass = kernel_mass(alpha, tau);
                let lower = 1.0 - (2.0 * PI * alpha).powi(-2);
                assert!(mass >= lower - 1e-10 && mass <= 2.0, "alpha {alpha} tau {tau}: {mass}");
            }
        }
    }

    #[test]
    fn beta_one_main_term() {
        for alpha in [20.0, 25.0, 50.0, 20.5] {
            for tau in [1, -1] {
                for t in [1, 7, 100] {
                    let p = KernelParams::new(alpha, tau, t, 3, 3).unwrap();
                    let r = r_beta(&p);
                    assert!((r.closed_form - r_beta_leading(&p)).abs() < 0.01);
                    assert!((r.numeric - r.closed_form).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn small_for_beta_four() {
        let p = KernelParams::new(10.0, 1, 1, 4, 1).unwrap();
        assert!(r_beta(&p).numeric.abs() <= 0.01);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(KernelParams::new(0.5, 1, 1, 1, 1).is_err());
        assert!(KernelParams::new(2.0, 0, 1, 1, 1).is_err());
        assert!(KernelParams::new(2.0, 1, 0, 1, 1).is_err());
        assert!(KernelParams::new(2.0, 1, 1, 0, 1).is_err());
    }
}
