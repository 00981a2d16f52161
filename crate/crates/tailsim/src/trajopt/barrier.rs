//! Relaxed logarithmic barrier for keeping iterates inside box bounds.
//!
//! The barrier is the plain `-ln(z)` of the distance to the bound while the
//! iterate is comfortably inside, and switches to the matching quadratic
//! below a relaxation threshold so the cost stays defined (and C2) even when
//! a line-search candidate steps outside the box.

/// One-sided relaxed log barrier on a distance `z` (feasible for `z > 0`).
#[derive(Debug, Clone, Copy)]
pub struct RelaxedLogBarrier {
    /// Multiplier applied to the barrier value and derivatives.
    pub weight: f64,
    /// Switch point between the log region and the quadratic extension.
    pub relax: f64,
    /// Distance at which the barrier value is zero, making values
    /// comparable across weights. Does not affect derivatives.
    pub reference: f64,
}

impl RelaxedLogBarrier {
    pub fn new(weight: f64, relax: f64, reference: f64) -> Self {
        assert!(relax > 0.0, "relaxation must be positive");
        assert!(reference > 0.0, "reference distance must be positive");
        Self {
            weight,
            relax,
            reference,
        }
    }

    /// Barrier value, first and second derivative with respect to `z`.
    pub fn eval(&self, z: f64) -> (f64, f64, f64) {
        let d = self.relax;
        let offset = self.reference.ln();
        let (v, g, h) = if z > d {
            (offset - z.ln(), -1.0 / z, 1.0 / (z * z))
        } else {
            // Quadratic with matched value and first two derivatives at d.
            let s = z - d;
            (
                offset - d.ln() - s / d + 0.5 * s * s / (d * d),
                -1.0 / d + s / (d * d),
                1.0 / (d * d),
            )
        };
        (self.weight * v, self.weight * g, self.weight * h)
    }

    /// Value alone, for cost evaluation.
    pub fn value(&self, z: f64) -> f64 {
        self.eval(z).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_region_matches_ln() {
        let b = RelaxedLogBarrier::new(2.0, 0.1, 1.0);
        let (v, g, h) = b.eval(1.5);
        assert!((v - 2.0 * -(1.5f64.ln())).abs() < 1e-12);
        assert!((g + 2.0 / 1.5).abs() < 1e-12);
        assert!((h - 2.0 / 2.25).abs() < 1e-12);
    }

    #[test]
    fn extension_is_c2_at_switch() {
        let b = RelaxedLogBarrier::new(1.0, 0.2, 1.0);
        let eps = 1e-9;
        let above = b.eval(0.2 + eps);
        let below = b.eval(0.2 - eps);
        assert!((above.0 - below.0).abs() < 1e-7);
        assert!((above.1 - below.1).abs() < 1e-6);
        assert!((above.2 - below.2).abs() < 1e-5);
    }

    #[test]
    fn defined_and_convex_outside_the_box() {
        let b = RelaxedLogBarrier::new(1.0, 0.1, 1.0);
        let (v, g, h) = b.eval(-0.5);
        assert!(v.is_finite() && v > 0.0);
        assert!(g < 0.0);
        assert!(h > 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = RelaxedLogBarrier::new(0.7, 0.15, 1.0);
        for &z in &[0.05, 0.149, 0.151, 0.5, 2.0, -0.2] {
            let h = 1e-6;
            let (_, g, hess) = b.eval(z);
            let fd_g = (b.value(z + h) - b.value(z - h)) / (2.0 * h);
            let fd_h = (b.value(z + h) - 2.0 * b.value(z) + b.value(z - h)) / (h * h);
            assert!((g - fd_g).abs() < 1e-6, "grad at {z}");
            assert!((hess - fd_h).abs() < 1e-3, "hess at {z}");
        }
    }
}
