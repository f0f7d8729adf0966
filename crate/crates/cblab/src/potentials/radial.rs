//! Radial pair functions and the smooth cutoff taper.
//!
//! Raw potentials (Morse, Lennard-Jones, exponential densities) are
//! multiplied by a C^3 window that is identically 1 below `0.9 r_cut`
//! and identically 0 above `r_cut`, so tapered potentials vanish with
//! three continuous derivatives at the cutoff and agree with the raw
//! potential (value and first three derivatives) at the inner edge.

use std::sync::Arc;

/// A scalar radial function with an analytic first derivative.
pub trait RadialPotential: Send + Sync {
    fn value(&self, r: f64) -> f64;
    fn deriv(&self, r: f64) -> f64;
    /// Radius beyond which the function vanishes identically.
    fn cutoff(&self) -> f64 {
        f64::INFINITY
    }
}

/// Morse potential `D (e^{-2a(r - r0)} - 2 e^{-a(r - r0)})`, zero at infinity.
#[derive(Clone, Copy, Debug)]
pub struct Morse {
    pub well_depth: f64,
    pub stiffness: f64,
    pub equilibrium: f64,
}

impl RadialPotential for Morse {
    fn value(&self, r: f64) -> f64 {
        let e = (-self.stiffness * (r - self.equilibrium)).exp();
        self.well_depth * (e * e - 2.0 * e)
    }

    fn deriv(&self, r: f64) -> f64 {
        let e = (-self.stiffness * (r - self.equilibrium)).exp();
        2.0 * self.stiffness * self.well_depth * (e - e * e)
    }
}

/// Lennard-Jones potential `4 eps ((sigma/r)^12 - (sigma/r)^6)`.
#[derive(Clone, Copy, Debug)]
pub struct LennardJones {
    pub epsilon: f64,
    pub sigma: f64,
}

impl RadialPotential for LennardJones {
    fn value(&self, r: f64) -> f64 {
        let s6 = (self.sigma / r).powi(6);
        4.0 * self.epsilon * (s6 * s6 - s6)
    }

    fn deriv(&self, r: f64) -> f64 {
        let s6 = (self.sigma / r).powi(6);
        4.0 * self.epsilon * (-12.0 * s6 * s6 + 6.0 * s6) / r
    }
}

/// Exponential electron-density profile `e^{-b (r - r0)}`.
#[derive(Clone, Copy, Debug)]
pub struct ExpDensity {
    pub decay: f64,
    pub reference: f64,
}

impl RadialPotential for ExpDensity {
    fn value(&self, r: f64) -> f64 {
        (-self.decay * (r - self.reference)).exp()
    }

    fn deriv(&self, r: f64) -> f64 {
        -self.decay * self.value(r)
    }
}

// Degree-15 smoothstep window: s(0) = 0, s(1) = 1 with seven vanishing
// derivatives at both ends. Three continuous derivatives would satisfy
// the potentials' regularity requirement; the extra smoothness keeps the
// taper from throttling the composite quadrature, whose kink error decays
// like h^(smoothness + 1) along the curves where bond lengths cross the
// taper edges.
pub(crate) fn window(t: f64) -> f64 {
    let t8 = (t * t * t * t) * (t * t * t * t);
    t8 * (6435.0
        + t * (-40040.0
            + t * (108108.0
                + t * (-163800.0
                    + t * (150150.0 + t * (-83160.0 + t * (25740.0 - 3432.0 * t)))))))
}

pub(crate) fn window_deriv(t: f64) -> f64 {
    // s'(t) = 51480 t^7 (1 - t)^7
    let u = t * (1.0 - t);
    let u3 = u * u * u;
    51480.0 * u3 * u3 * u
}

/// A radial function multiplied by the C^3 cutoff window on
/// `[taper_start, r_cut]`.
#[derive(Clone)]
pub struct Tapered {
    raw: Arc<dyn RadialPotential>,
    r_cut: f64,
    taper_start: f64,
}

impl Tapered {
    /// Taper over `[0.9 r_cut, r_cut]`.
    pub fn new(raw: Arc<dyn RadialPotential>, r_cut: f64) -> Self {
        Self {
            raw,
            r_cut,
            taper_start: 0.9 * r_cut,
        }
    }
}

impl RadialPotential for Tapered {
    fn value(&self, r: f64) -> f64 {
        if r >= self.r_cut {
            0.0
        } else if r <= self.taper_start {
            self.raw.value(r)
        } else {
            let t = (self.r_cut - r) / (self.r_cut - self.taper_start);
            self.raw.value(r) * window(t)
        }
    }

    fn deriv(&self, r: f64) -> f64 {
        if r >= self.r_cut {
            0.0
        } else if r <= self.taper_start {
            self.raw.deriv(r)
        } else {
            let width = self.r_cut - self.taper_start;
            let t = (self.r_cut - r) / width;
            self.raw.deriv(r) * window(t) - self.raw.value(r) * window_deriv(t) / width
        }
    }

    fn cutoff(&self) -> f64 {
        self.r_cut
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn tapered_morse() -> Tapered {
        Tapered::new(
            Arc::new(Morse {
                well_depth: 1.0,
                stiffness: 3.0,
                equilibrium: 1.0,
            }),
            2.2,
        )
    }

    #[test]
    fn vanishes_beyond_cutoff() {
        let phi = tapered_morse();
        assert_eq!(phi.value(2.3), 0.0);
        assert_eq!(phi.deriv(2.3), 0.0);
        assert_eq!(phi.value(2.2), 0.0);
        assert_eq!(phi.deriv(2.2), 0.0);
    }

    #[test]
    fn matches_raw_at_taper_start() {
        let raw = Morse {
            well_depth: 1.0,
            stiffness: 3.0,
            equilibrium: 1.0,
        };
        let phi = tapered_morse();
        let r = 0.9 * 2.2;
        assert_abs_diff_eq!(phi.value(r), raw.value(r), epsilon = 1e-12);
        assert_abs_diff_eq!(phi.deriv(r), raw.deriv(r), epsilon = 1e-12);
        // Just inside the taper the window is still ~1.
        assert_relative_eq!(phi.value(r - 1e-9), raw.value(r - 1e-9), epsilon = 1e-12);
    }

    #[test]
    fn morse_minimum_at_equilibrium() {
        let raw = Morse {
            well_depth: 1.0,
            stiffness: 3.0,
            equilibrium: 1.0,
        };
        assert_abs_diff_eq!(raw.value(1.0), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(raw.deriv(1.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lj_minimum_at_unit_distance() {
        let lj = LennardJones {
            epsilon: 1.0,
            sigma: 2f64.powf(-1.0 / 6.0),
        };
        assert_abs_diff_eq!(lj.value(1.0), -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(lj.deriv(1.0), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn derivs_match_central_differences() {
        // Includes points inside the taper window.
        let pots: Vec<Box<dyn RadialPotential>> = vec![
            Box::new(tapered_morse()),
            Box::new(Tapered::new(
                Arc::new(LennardJones {
                    epsilon: 1.0,
                    sigma: 2f64.powf(-1.0 / 6.0),
                }),
                2.2,
            )),
            Box::new(Tapered::new(
                Arc::new(ExpDensity {
                    decay: 3.0,
                    reference: 1.0,
                }),
                2.2,
            )),
        ];
        let h = 1e-6;
        for phi in &pots {
            for r in [0.6, 0.9, 1.0, 1.4, 1.97, 2.05, 2.1, 2.19] {
                let numeric = (phi.value(r + h) - phi.value(r - h)) / (2.0 * h);
                let analytic = phi.deriv(r);
                let scale = analytic.abs().max(1e-3);
                assert!(
                    (numeric - analytic).abs() / scale < 1e-6,
                    "r = {r}: analytic {analytic:.3e}, numeric {numeric:.3e}"
                );
            }
        }
    }

    #[test]
    fn window_has_three_vanishing_derivatives_at_both_ends() {
        assert_eq!(window(0.0), 0.0);
        assert_eq!(window(1.0), 1.0);
        assert_eq!(window_deriv(0.0), 0.0);
        assert_eq!(window_deriv(1.0), 0.0);
        let h = 1e-3;
        for t in [0.0, 1.0] {
            // s'' and s''' from divided differences of the polynomial.
            let d2 = (window_deriv(t + h) - window_deriv(t - h)) / (2.0 * h);
            let d3 = (window_deriv(t + h) - 2.0 * window_deriv(t)
                + window_deriv(t - h))
                / (h * h);
            assert!(d2.abs() < 1e-2, "t = {t}: s'' = {d2:.3e}");
            assert!(d3.abs() < 1.0, "t = {t}: s''' = {d3:.3e}");
        }
    }
}
