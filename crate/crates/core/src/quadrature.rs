//! Adaptive Simpson quadrature.

/// Adaptive Simpson rule with Richardson extrapolation on each accepted panel.
#[derive(Clone, Copy, Debug)]
pub struct AdaptiveSimpson {
    /// Absolute tolerance for the whole interval.
    pub tolerance: f64,
    /// Maximum bisection depth below each starting panel.
    pub max_depth: u32,
}

impl Default for AdaptiveSimpson {
    fn default() -> Self {
        AdaptiveSimpson {
            tolerance: 1e-9,
            max_depth: 40,
        }
    }
}

impl AdaptiveSimpson {
    pub fn with_tolerance(tolerance: f64) -> Self {
        AdaptiveSimpson {
            tolerance,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[a, b]` starting from a single panel.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.integrate_panels(f, a, b, 1)
    }

    /// Integrates over `[a, b]` split into `panels` equal starting panels.
    /// Oscillatory integrands need enough panels that Simpson's five
    /// samples cannot alias a full period.
    pub fn integrate_panels<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, panels: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let tol = self.tolerance / panels as f64;
        let mut total = 0.0;
        let mut compensation = 0.0;
        for i in 0..panels {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            let flo = f(lo);
            let fhi = f(hi);
            let mid = 0.5 * (lo + hi);
            let fmid = f(mid);
            let whole = simpson(lo, hi, flo, fmid, fhi);
            let v = self.recurse(&f, lo, hi, flo, fmid, fhi, whole, tol, self.max_depth);
            // Kahan step; panel counts can reach the tens of thousands.
            let y = v - compensation;
            let t = total + y;
            compensation = (t - total) - y;
            total = t;
        }
        total
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        self.recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + self.recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let q = AdaptiveSimpson::default();
        let v = q.integrate(|x| 3.0 * x * x * x - x + 2.0, -1.0, 2.0);
        assert!((v - (3.0 * 15.0 / 4.0 - 1.5 + 6.0)).abs() < 1e-12);
        assert_eq!(q.integrate(|x| x, 1.0, 1.0), 0.0);
    }

    #[test]
    fn smooth_and_kinked_integrands() {
        let q = AdaptiveSimpson::with_tolerance(1e-10);
        assert!((q.integrate(f64::sin, 0.0, PI) - 2.0).abs() < 1e-10);
        assert!((q.integrate(|x| x.abs(), -1.0, 1.0) - 1.0).abs() < 1e-10);
        assert!((q.integrate(|x| (-x * x).exp(), -6.0, 6.0) - PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn oscillatory_needs_panels() {
        // int_{-1}^{1} cos(200 pi x + 0.3) dx = 2 sin(200 pi) cos(0.3) / (200 pi) = 0
        let q = AdaptiveSimpson::with_tolerance(1e-10);
        let v = q.integrate_panels(|x| (200.0 * PI * x + 0.3).cos(), -1.0, 1.0, 800);
        assert!(v.abs() < 1e-9, "{v}");
    }
}
