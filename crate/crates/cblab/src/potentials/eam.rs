//! A toy embedded-atom site potential:
//! `V(g) = G(sum psi(|g_rhohat|)) + 1/2 sum phi(|g_rhohat|)` with the
//! embedding `G(s) = c (sqrt(1 + s) - 1)`.
//!
//! Single species by construction; the density and pair part ignore the
//! atom indices of the range entries.

use std::sync::Arc;

use crate::lattice::InteractionRange;
use crate::{Error, Result, Vector};

use super::{PairPotential, RadialPotential, SitePotential, SymmetryCertificate};

#[derive(Clone)]
pub struct ManyBodyToy {
    /// `c` in `G(s) = c (sqrt(1 + s) - 1)`.
    pub embedding_scale: f64,
    /// Electron density contribution per bond, tapered to zero at cutoff.
    pub density: Arc<dyn RadialPotential>,
    /// Additive pair part.
    pub pair: PairPotential,
}

impl ManyBodyToy {
    pub fn r_cut(&self) -> f64 {
        self.pair.r_cut().max(self.density.cutoff())
    }

    fn embedding(&self, s: f64) -> f64 {
        self.embedding_scale * ((1.0 + s).sqrt() - 1.0)
    }

    fn embedding_deriv(&self, s: f64) -> f64 {
        0.5 * self.embedding_scale / (1.0 + s).sqrt()
    }
}

/// Site potential of the toy many-body model over a range.
pub struct EamSite {
    toy: ManyBodyToy,
    range: InteractionRange,
    certificate: SymmetryCertificate,
}

pub fn eam_site(toy: ManyBodyToy, range: InteractionRange) -> EamSite {
    // The model depends only on bond lengths, so any closure of the range
    // under an involution that preserves |g| yields the identity.
    let certificate = SymmetryCertificate {
        neg: range.is_neg_closed(),
        sim: range.is_sim_closed(),
    };
    EamSite {
        toy,
        range,
        certificate,
    }
}

impl EamSite {
    fn guarded_norm(&self, g: &Vector, entry: usize) -> Result<f64> {
        let r = g.norm();
        if r < self.toy.pair.r_min() {
            Err(Error::BelowGuardRadius {
                r,
                r_min: self.toy.pair.r_min(),
                entry,
            })
        } else {
            Ok(r)
        }
    }
}

impl SitePotential for EamSite {
    fn range(&self) -> &InteractionRange {
        &self.range
    }

    fn certificate(&self) -> SymmetryCertificate {
        self.certificate
    }

    fn value(&self, g: &[Vector]) -> Result<f64> {
        debug_assert_eq!(g.len(), self.range.len());
        let mut density = 0.0;
        let mut pair = 0.0;
        for (i, gi) in g.iter().enumerate() {
            let r = self.guarded_norm(gi, i)?;
            density += self.toy.density.value(r);
            pair += 0.5 * self.toy.pair.phi(0, 0).value(r);
        }
        Ok(self.toy.embedding(density) + pair)
    }

    fn gradient(&self, g: &[Vector]) -> Result<Vec<Vector>> {
        debug_assert_eq!(g.len(), self.range.len());
        let mut norms = Vec::with_capacity(g.len());
        let mut density = 0.0;
        for (i, gi) in g.iter().enumerate() {
            let r = self.guarded_norm(gi, i)?;
            density += self.toy.density.value(r);
            norms.push(r);
        }
        let g_prime = self.toy.embedding_deriv(density);
        let out = g
            .iter()
            .zip(&norms)
            .map(|(gi, &r)| {
                let radial =
                    g_prime * self.toy.density.deriv(r) + 0.5 * self.toy.pair.phi(0, 0).deriv(r);
                gi * (radial / r)
            })
            .collect();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{base_shift, generic_strain};
    use crate::lattice::range_from_cutoff;
    use crate::potentials::builtin_potential;

    fn toy_site() -> Box<dyn SitePotential> {
        let pot = builtin_potential("eam_toy_single").unwrap();
        let range = range_from_cutoff(
            2,
            &generic_strain(2),
            &Vector::zeros(),
            &base_shift(2),
            pot.r_cut(),
        )
        .unwrap();
        pot.site(range)
    }

    #[test]
    fn certified_under_both_symmetries() {
        let v = toy_site();
        assert!(v.certificate().neg);
        assert!(v.certificate().sim);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let v = toy_site();
        let g: Vec<Vector> = v
            .range()
            .iter()
            .enumerate()
            .map(|(i, m)| {
                generic_strain(2) * m.rho_vector()
                    + (m.beta() as f64 - m.alpha() as f64) * base_shift(2)
                    + Vector::new(
                        0.02 * (i as f64 * 0.9).sin(),
                        0.02 * (i as f64 * 1.7).cos(),
                        0.0,
                    )
            })
            .collect();
        let rel = crate::potentials::gradient_fd_defect(&*v, &g, 1e-6).unwrap();
        assert!(rel < 1e-6, "gradient vs finite differences: rel = {rel:.3e}");
    }

    #[test]
    fn value_is_embedding_plus_pair() {
        let pot = builtin_potential("eam_toy_single").unwrap();
        let toy = match pot {
            crate::potentials::BuiltinPotential::ManyBody(t) => t,
            _ => unreachable!(),
        };
        let range = crate::lattice::InteractionRange::new(
            1,
            vec![
                crate::lattice::MultiIndex::new(1, &[1], 0, 1).unwrap(),
                crate::lattice::MultiIndex::new(1, &[-1], 1, 0).unwrap(),
            ],
        )
        .unwrap();
        let v = eam_site(toy.clone(), range);
        let g = [Vector::new(1.1, 0.0, 0.0), Vector::new(-0.95, 0.0, 0.0)];
        let s = toy.density.value(1.1) + toy.density.value(0.95);
        let expected = toy.embedding_scale * ((1.0 + s).sqrt() - 1.0)
            + 0.5 * (toy.pair.phi(0, 0).value(1.1) + toy.pair.phi(0, 0).value(0.95));
        approx::assert_abs_diff_eq!(v.value(&g).unwrap(), expected, epsilon = 1e-14);
    }
}
