//! Site potentials over interaction ranges, their analytic gradients,
//! and the two point-symmetrization constructions.
//!
//! A site potential `V` maps the tuple of bond vectors
//! `g = {g_rhohat}` over an interaction range to the energy contributed
//! by one lattice site. Symmetry certificates record which of the two
//! function identities
//!
//! * `V(g) = V(-{g_{neg rhohat}})` (index reversal), or
//! * `V(g) = V({-g_{sim rhohat}})` (bond reversal)
//!
//! are guaranteed by construction.

mod eam;
mod radial;

pub use eam::{eam_site, EamSite, ManyBodyToy};
pub use radial::{ExpDensity, LennardJones, Morse, RadialPotential, Tapered};

use std::sync::Arc;

use crate::fields::ContinuumField;
use crate::lattice::{InteractionRange, SymmetryOp};
use crate::{Error, Result, Vector};

/// Which point-symmetry identities a potential satisfies by construction.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct SymmetryCertificate {
    pub neg: bool,
    pub sim: bool,
}

impl SymmetryCertificate {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn has(&self, op: SymmetryOp) -> bool {
        match op {
            SymmetryOp::Neg => self.neg,
            SymmetryOp::Sim => self.sim,
        }
    }
}

/// Energy contribution of a single site as a function of its bond
/// vector tuple, ordered like the entries of the interaction range.
pub trait SitePotential: Send + Sync {
    fn range(&self) -> &InteractionRange;
    fn certificate(&self) -> SymmetryCertificate;
    fn value(&self, g: &[Vector]) -> Result<f64>;
    fn gradient(&self, g: &[Vector]) -> Result<Vec<Vector>>;
}

impl<V: SitePotential + ?Sized> SitePotential for Box<V> {
    fn range(&self) -> &InteractionRange {
        (**self).range()
    }
    fn certificate(&self) -> SymmetryCertificate {
        (**self).certificate()
    }
    fn value(&self, g: &[Vector]) -> Result<f64> {
        (**self).value(g)
    }
    fn gradient(&self, g: &[Vector]) -> Result<Vec<Vector>> {
        (**self).gradient(g)
    }
}

/// A family of radial pair potentials indexed by the interacting atom
/// indices, with a common cutoff and guard radius.
#[derive(Clone)]
pub struct PairPotential {
    // phi[2 * alpha + beta]; species symmetry is shared Arc identity.
    phi: [Arc<dyn RadialPotential>; 4],
    r_cut: f64,
    r_min: f64,
}

impl PairPotential {
    pub fn single_species(phi: Arc<dyn RadialPotential>, r_cut: f64, r_min: f64) -> Self {
        Self {
            phi: [phi.clone(), phi.clone(), phi.clone(), phi],
            r_cut,
            r_min,
        }
    }

    /// Two species with the physical requirement `phi_01 = phi_10`.
    pub fn two_species(
        phi00: Arc<dyn RadialPotential>,
        phi01: Arc<dyn RadialPotential>,
        phi11: Arc<dyn RadialPotential>,
        r_cut: f64,
        r_min: f64,
    ) -> Self {
        Self {
            phi: [phi00, phi01.clone(), phi01, phi11],
            r_cut,
            r_min,
        }
    }

    /// Fully general family, including species-asymmetric ones.
    pub fn from_parts(phi: [Arc<dyn RadialPotential>; 4], r_cut: f64, r_min: f64) -> Self {
        Self { phi, r_cut, r_min }
    }

    pub fn phi(&self, alpha: usize, beta: usize) -> &dyn RadialPotential {
        self.phi[2 * alpha + beta].as_ref()
    }

    pub fn r_cut(&self) -> f64 {
        self.r_cut
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    /// True iff `phi_01` and `phi_10` are the same function object.
    pub fn is_species_symmetric(&self) -> bool {
        Arc::ptr_eq(&self.phi[1], &self.phi[2])
    }

    /// True iff all four members are the same function object.
    pub fn is_single_species(&self) -> bool {
        Arc::ptr_eq(&self.phi[0], &self.phi[1])
            && Arc::ptr_eq(&self.phi[1], &self.phi[2])
            && Arc::ptr_eq(&self.phi[2], &self.phi[3])
    }
}

/// Pair-interaction site potential `V(g) = 1/2 sum phi_ab(|g_rhohat|)`.
#[derive(Clone)]
pub struct PairSite {
    pair: PairPotential,
    range: InteractionRange,
    certificate: SymmetryCertificate,
}

/// Builds the pair site potential over a range, deriving the symmetry
/// certificate from species symmetry and range closure.
pub fn pair_site(pair: PairPotential, range: InteractionRange) -> PairSite {
    let certificate = SymmetryCertificate {
        neg: pair.is_single_species() && range.is_neg_closed(),
        sim: pair.is_species_symmetric() && range.is_sim_closed(),
    };
    PairSite {
        pair,
        range,
        certificate,
    }
}

impl PairSite {
    pub fn pair(&self) -> &PairPotential {
        &self.pair
    }

    fn guarded_norm(&self, g: &Vector, entry: usize) -> Result<f64> {
        let r = g.norm();
        if r < self.pair.r_min {
            Err(Error::BelowGuardRadius {
                r,
                r_min: self.pair.r_min,
                entry,
            })
        } else {
            Ok(r)
        }
    }
}

impl SitePotential for PairSite {
    fn range(&self) -> &InteractionRange {
        &self.range
    }

    fn certificate(&self) -> SymmetryCertificate {
        self.certificate
    }

    fn value(&self, g: &[Vector]) -> Result<f64> {
        debug_assert_eq!(g.len(), self.range.len());
        let mut acc = 0.0;
        for (i, mi) in self.range.iter().enumerate() {
            let r = self.guarded_norm(&g[i], i)?;
            acc += 0.5 * self.pair.phi(mi.alpha(), mi.beta()).value(r);
        }
        Ok(acc)
    }

    fn gradient(&self, g: &[Vector]) -> Result<Vec<Vector>> {
        debug_assert_eq!(g.len(), self.range.len());
        let mut out = Vec::with_capacity(g.len());
        for (i, mi) in self.range.iter().enumerate() {
            let r = self.guarded_norm(&g[i], i)?;
            let dphi = self.pair.phi(mi.alpha(), mi.beta()).deriv(r);
            out.push(g[i] * (0.5 * dphi / r));
        }
        Ok(out)
    }
}

/// A site potential averaged with its image under a symmetry operator,
/// defined on the closed range.
pub struct Symmetrized<V> {
    inner: V,
    range: InteractionRange,
    certificate: SymmetryCertificate,
    // Positions in the closed range of each inner entry and of its image.
    inner_pos: Vec<usize>,
    image_pos: Vec<usize>,
}

fn symmetrize<V: SitePotential>(inner: V, op: SymmetryOp) -> Symmetrized<V> {
    let range = inner.range().close(op);
    let inner_pos: Vec<usize> = inner
        .range()
        .iter()
        .map(|mi| range.index_of(mi).expect("closure contains the input"))
        .collect();
    let image_pos: Vec<usize> = inner
        .range()
        .iter()
        .map(|mi| range.index_of(&op.apply(mi)).expect("closure is closed"))
        .collect();
    let inherited = inner.certificate();
    let certificate = SymmetryCertificate {
        neg: op == SymmetryOp::Neg || inherited.neg,
        sim: op == SymmetryOp::Sim || inherited.sim,
    };
    Symmetrized {
        inner,
        range,
        certificate,
        inner_pos,
        image_pos,
    }
}

/// Index-reversal symmetrization
/// `V~(g) = 1/2 V({g_rhohat}) + 1/2 V({-g_{neg rhohat}})` on the
/// neg-closed range. Preserves total lattice energies of single-species
/// potentials and carries the `neg` certificate.
pub fn symmetrize_neg<V: SitePotential>(inner: V) -> Symmetrized<V> {
    symmetrize(inner, SymmetryOp::Neg)
}

/// Point symmetrization for a Bravais-case potential (every range entry
/// has `alpha = beta = 0`): `V~(g) = 1/2 V({g_rho}) + 1/2 V({-g_{-rho}})`
/// on the reflection-closed range.
pub fn symmetrize_point<V: SitePotential>(inner: V) -> Result<Symmetrized<V>> {
    if !inner.range().is_bravais() {
        return Err(Error::IncompatibleModel {
            model: "point symmetrization".into(),
            requirement: "a Bravais range (all entries alpha = beta = 0)".into(),
        });
    }
    // On a Bravais range, bond reversal acts as pure point reflection
    // rho -> -rho.
    Ok(symmetrize(inner, SymmetryOp::Sim))
}

impl<V: SitePotential> Symmetrized<V> {
    pub fn inner(&self) -> &V {
        &self.inner
    }

    fn split_args(&self, g: &[Vector]) -> (Vec<Vector>, Vec<Vector>) {
        let direct: Vec<Vector> = self.inner_pos.iter().map(|&i| g[i]).collect();
        let reflected: Vec<Vector> = self.image_pos.iter().map(|&i| -g[i]).collect();
        (direct, reflected)
    }
}

impl<V: SitePotential> SitePotential for Symmetrized<V> {
    fn range(&self) -> &InteractionRange {
        &self.range
    }

    fn certificate(&self) -> SymmetryCertificate {
        self.certificate
    }

    fn value(&self, g: &[Vector]) -> Result<f64> {
        debug_assert_eq!(g.len(), self.range.len());
        let (direct, reflected) = self.split_args(g);
        Ok(0.5 * self.inner.value(&direct)? + 0.5 * self.inner.value(&reflected)?)
    }

    fn gradient(&self, g: &[Vector]) -> Result<Vec<Vector>> {
        debug_assert_eq!(g.len(), self.range.len());
        let (direct, reflected) = self.split_args(g);
        let grad_direct = self.inner.gradient(&direct)?;
        let grad_reflected = self.inner.gradient(&reflected)?;
        let mut out = vec![Vector::zeros(); self.range.len()];
        for k in 0..self.inner_pos.len() {
            out[self.inner_pos[k]] += 0.5 * grad_direct[k];
            out[self.image_pos[k]] -= 0.5 * grad_reflected[k];
        }
        Ok(out)
    }
}

/// Maximum defect `|V_rhohat(g) + V_{op rhohat}(g)|` over the range, with
/// `g` assembled from the field's directional derivatives at `x`.
///
/// For a potential certified under `op` the contract is a defect below
/// 1e-10; for uncertified potentials the returned defect is merely
/// descriptive.
pub fn check_derivative_symmetry(
    potential: &dyn SitePotential,
    field: &ContinuumField,
    x: &Vector,
    op: SymmetryOp,
) -> Result<f64> {
    let range = potential.range();
    let g: Vec<Vector> = range.iter().map(|mi| field.dirder(x, mi)).collect();
    let grad = potential.gradient(&g)?;
    let mut worst = 0.0f64;
    for (i, mi) in range.iter().enumerate() {
        let image = op.apply(mi);
        let j = range
            .index_of(&image)
            .ok_or_else(|| Error::MissingEntry(image.to_string()))?;
        worst = worst.max((grad[i] + grad[j]).norm());
    }
    Ok(worst)
}

/// Worst entry-component deviation between the analytic gradient and a
/// central finite-difference estimate with step `h`, relative to the
/// gradient scale `max_i |V_i|`.
///
/// The scale matters: the difference quotient carries the cancellation
/// noise of the full site-energy sum, which buries components that are
/// orders of magnitude below the dominant ones.
pub fn gradient_fd_defect(
    potential: &dyn SitePotential,
    g: &[Vector],
    h: f64,
) -> Result<f64> {
    let analytic = potential.gradient(g)?;
    let dim = potential.range().dim();
    let scale = analytic
        .iter()
        .map(|a| a.norm())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let mut worst = 0.0f64;
    for i in 0..g.len() {
        for c in 0..dim {
            let mut plus = g.to_vec();
            let mut minus = g.to_vec();
            plus[i][c] += h;
            minus[i][c] -= h;
            let numeric = (potential.value(&plus)? - potential.value(&minus)?) / (2.0 * h);
            worst = worst.max((numeric - analytic[i][c]).abs());
        }
    }
    Ok(worst / scale)
}

/// Named potentials used by the experiment harness.
pub enum BuiltinPotential {
    Pair(PairPotential),
    ManyBody(ManyBodyToy),
}

impl BuiltinPotential {
    pub fn r_cut(&self) -> f64 {
        match self {
            BuiltinPotential::Pair(p) => p.r_cut(),
            BuiltinPotential::ManyBody(t) => t.r_cut(),
        }
    }

    pub fn is_single_species(&self) -> bool {
        match self {
            BuiltinPotential::Pair(p) => p.is_single_species(),
            BuiltinPotential::ManyBody(_) => true,
        }
    }

    /// Site potential of this interaction model over the given range.
    pub fn site(&self, range: InteractionRange) -> Box<dyn SitePotential> {
        match self {
            BuiltinPotential::Pair(p) => Box::new(pair_site(p.clone(), range)),
            BuiltinPotential::ManyBody(t) => Box::new(eam_site(t.clone(), range)),
        }
    }
}

const BUILTIN_R_CUT: f64 = 2.2;
const BUILTIN_R_MIN: f64 = 0.2;

fn tapered_morse(equilibrium: f64) -> Arc<dyn RadialPotential> {
    Arc::new(Tapered::new(
        Arc::new(Morse {
            well_depth: 1.0,
            stiffness: 3.0,
            equilibrium,
        }),
        BUILTIN_R_CUT,
    ))
}

/// The named built-in potentials: `morse_single`, `morse_two_species`,
/// `lj_smooth_single`, `eam_toy_single`. All carry the C^3 cutoff taper.
pub fn builtin_potential(name: &str) -> Result<BuiltinPotential> {
    match name {
        "morse_single" => Ok(BuiltinPotential::Pair(PairPotential::single_species(
            tapered_morse(1.0),
            BUILTIN_R_CUT,
            BUILTIN_R_MIN,
        ))),
        "morse_two_species" => Ok(BuiltinPotential::Pair(PairPotential::two_species(
            tapered_morse(1.0),
            tapered_morse(0.95),
            tapered_morse(1.05),
            BUILTIN_R_CUT,
            BUILTIN_R_MIN,
        ))),
        "lj_smooth_single" => Ok(BuiltinPotential::Pair(PairPotential::single_species(
            Arc::new(Tapered::new(
                Arc::new(LennardJones {
                    epsilon: 1.0,
                    sigma: 2f64.powf(-1.0 / 6.0),
                }),
                BUILTIN_R_CUT,
            )),
            BUILTIN_R_CUT,
            BUILTIN_R_MIN,
        ))),
        "eam_toy_single" => Ok(BuiltinPotential::ManyBody(ManyBodyToy {
            embedding_scale: -0.9,
            density: Arc::new(Tapered::new(
                Arc::new(ExpDensity {
                    decay: 3.0,
                    reference: 1.0,
                }),
                BUILTIN_R_CUT,
            )),
            pair: PairPotential::single_species(
                tapered_morse(1.0),
                BUILTIN_R_CUT,
                BUILTIN_R_MIN,
            ),
        })),
        other => Err(Error::UnknownPotential(other.to_string())),
    }
}
