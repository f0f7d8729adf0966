//! Exact atomistic energy sums and the continuum strain energies they
//! are compared against.
//!
//! The atomistic energy of an N-periodic deformation is the sum of site
//! energies over the periodic cell. Continuum energies are integrals of
//! the site potential over the unit cell with bond vectors replaced by
//! directional derivatives; by scaling invariance the unit-cell integral
//! equals the energy per site of the scaled field, which removes N from
//! the quadrature cost. The shift-gradient density is the exception: its
//! integrand carries `eps = 1/N` explicitly and is recomputed per N.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fields::{AtomisticDeformation, ConnectionRule, ContinuumField};
use crate::potentials::SitePotential;
use crate::quadrature::{integrate_unit_cell, QuadratureDiag, QuadratureSpec};
use crate::sum::deterministic_sum;
use crate::{Error, Matrix, Result, Vector};

/// Which continuum model an energy or a sweep refers to.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ModelTag {
    #[serde(rename = "CB_bravais")]
    CbBravais,
    #[serde(rename = "CB_classical")]
    CbClassical,
    #[serde(rename = "CB_centroid")]
    CbCentroid,
    #[serde(rename = "W_eps")]
    WEps,
}

impl ModelTag {
    /// The atomistic/continuum connection each model is defined with.
    pub fn connection_rule(&self) -> ConnectionRule {
        match self {
            ModelTag::CbCentroid => ConnectionRule::Centroid,
            _ => ConnectionRule::Classical,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::CbBravais => "CB_bravais",
            ModelTag::CbClassical => "CB_classical",
            ModelTag::CbCentroid => "CB_centroid",
            ModelTag::WEps => "W_eps",
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "CB_bravais" => Ok(ModelTag::CbBravais),
            "CB_classical" => Ok(ModelTag::CbClassical),
            "CB_centroid" => Ok(ModelTag::CbCentroid),
            "W_eps" => Ok(ModelTag::WEps),
            other => Err(Error::Config(format!(
                "unknown model `{other}` (expected CB_bravais, CB_classical, \
                 CB_centroid, or W_eps)"
            ))),
        }
    }
}

/// One atomistic/continuum comparison at a fixed period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub model: ModelTag,
    pub n: usize,
    /// `N^{-d} E^a(y^N)`.
    pub e_atomistic_per_site: f64,
    /// Unit-cell continuum energy of the same field.
    pub e_continuum: f64,
    /// `|e_atomistic_per_site - e_continuum|`.
    pub err: f64,
    pub quadrature: QuadratureDiag,
}

/// One full atomistic/continuum comparison at fixed N: sample the field
/// under the model's connection rule, evaluate both energies, report the
/// per-site error.
pub fn compare_at(
    field: &ContinuumField,
    potential: &dyn SitePotential,
    model: ModelTag,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<EnergyReport> {
    let scaled = crate::fields::ScaledField::new(field.clone(), n)?;
    let def = scaled.sample(model.connection_rule());
    let e_atomistic_per_site =
        atomistic_energy(&def, potential)? / def.cell().num_sites() as f64;
    let (e_continuum, quadrature) = match model {
        ModelTag::WEps => eps_energy(field, potential, n, quad)?,
        _ => cb_energy(field, potential, quad)?,
    };
    Ok(EnergyReport {
        model,
        n,
        e_atomistic_per_site,
        e_continuum,
        err: (e_atomistic_per_site - e_continuum).abs(),
        quadrature,
    })
}

/// Total atomistic energy: the sum of `V(D_R y(xi))` over the periodic
/// cell, in lexicographic site order with compensated accumulation.
pub fn atomistic_energy(def: &AtomisticDeformation, potential: &dyn SitePotential) -> Result<f64> {
    let cell = *def.cell();
    let range = potential.range();
    deterministic_sum(cell.num_sites(), |idx| {
        let xi = cell.site_at(idx);
        let g: Vec<Vector> = range.iter().map(|mi| def.fd(&xi, mi)).collect();
        potential.value(&g).map_err(|e| Error::AtSite {
            site: xi[..cell.dim()].to_vec(),
            source: Box::new(e),
        })
    })
}

/// Atomistic energy per lattice site, `N^{-d} E^a`.
pub fn atomistic_energy_per_site(
    def: &AtomisticDeformation,
    potential: &dyn SitePotential,
) -> Result<f64> {
    Ok(atomistic_energy(def, potential)? / def.cell().num_sites() as f64)
}

/// Cauchy-Born strain energy density `W(F, P) = V({F rho + (beta - alpha) P})`.
pub fn cb_density(strain: &Matrix, shift: &Vector, potential: &dyn SitePotential) -> Result<f64> {
    let g: Vec<Vector> = potential
        .range()
        .iter()
        .map(|mi| strain * mi.rho_vector() + (mi.beta() as f64 - mi.alpha() as f64) * shift)
        .collect();
    potential.value(&g)
}

/// Cauchy-Born energy of the unit cell,
/// `E^c(Y, P) = integral of V over the directional derivatives of (Y, P)`.
pub fn cb_energy(
    field: &ContinuumField,
    potential: &dyn SitePotential,
    quad: &QuadratureSpec,
) -> Result<(f64, QuadratureDiag)> {
    let range = potential.range();
    integrate_unit_cell(field.dim(), quad, |x| {
        // Shared per-node field data, hoisted out of the entry loop.
        let grad_y = field.grad_y(x);
        let p = field.p(x);
        let g: Vec<Vector> = range
            .iter()
            .map(|mi| grad_y * mi.rho_vector() + (mi.beta() as f64 - mi.alpha() as f64) * p)
            .collect();
        potential.value(&g)
    })
}

/// Shift-gradient stored energy with `eps` fixed explicitly; see
/// [`eps_energy`] for the `eps = 1/N` form used in sweeps.
pub fn eps_energy_at(
    field: &ContinuumField,
    potential: &dyn SitePotential,
    eps: f64,
    quad: &QuadratureSpec,
) -> Result<(f64, QuadratureDiag)> {
    if !potential.certificate().sim {
        return Err(Error::IncompatibleModel {
            model: ModelTag::WEps.to_string(),
            requirement: "a sim-certified site potential".into(),
        });
    }
    let range = potential.range();
    integrate_unit_cell(field.dim(), quad, |x| {
        let grad_y = field.grad_y(x);
        let p = field.p(x);
        let grad_p = field.grad_p(x);
        let g: Vec<Vector> = range
            .iter()
            .map(|mi| {
                let rho = mi.rho_vector();
                let sign = mi.beta() as f64 - mi.alpha() as f64;
                let weight = 0.5 * (mi.alpha() + mi.beta()) as f64;
                grad_y * rho + sign * p + (weight * eps) * (grad_p * rho)
            })
            .collect();
        potential.value(&g)
    })
}

/// Unit-cell integral of the shift-gradient stored energy density with
/// `eps = 1/N`. Not scale invariant: the integrand depends on N and the
/// integral must be recomputed per N.
pub fn eps_energy(
    field: &ContinuumField,
    potential: &dyn SitePotential,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<(f64, QuadratureDiag)> {
    if n < 2 {
        return Err(Error::Config(format!("period N must be >= 2, got {n}")));
    }
    eps_energy_at(field, potential, 1.0 / n as f64, quad)
}
