//! Finite-volume Hamiltonians `h_Λ(q) = Σ_{g+Δ⊆Λ} α_g(q − ε_Λ(q) 1)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ffsys::{check_ff, FfSystem};
use crate::legs::LegSplit;
use crate::linalg::{hermitian_eigen, identity, op_norm, CMatrix, C64, ONE};
use crate::region::{enumerate_translates, hilbert_dim, Region, Site};
use crate::settings::Settings;
use crate::subspace::{LocalOperator, Projector};

/// Hermitian finite-range interaction `q` supported on `Δ`.
#[derive(Clone, Debug)]
pub struct Interaction {
    q: LocalOperator,
}

impl Interaction {
    pub fn new(q: LocalOperator, tol: f64) -> Result<Self> {
        let r = q.hermiticity_residual();
        if r > tol {
            return Err(Error::Invalid(format!("interaction is not Hermitian (residual {r:.3e})")));
        }
        Ok(Self { q })
    }

    pub fn from_projector(p: &Projector) -> Self {
        Self { q: LocalOperator::new(p.matrix().clone(), p.region(), p.site_dim()).expect("shape") }
    }

    pub fn q(&self) -> &LocalOperator {
        &self.q
    }

    pub fn range(&self) -> &Region {
        self.q.region()
    }

    pub fn site_dim(&self) -> usize {
        self.q.site_dim()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let m = self.q.matrix() * C64::new(c, 0.0);
        Self { q: LocalOperator::new(m, self.range(), self.site_dim()).expect("shape") }
    }

    pub fn min_spec(&self) -> f64 {
        hermitian_eigen(self.q.matrix()).0[0]
    }

    /// `q − min Spec(q)·1`, which is positive with zero in its spectrum.
    pub fn normalized(&self) -> Self {
        let n = self.q.matrix().nrows();
        let m = self.q.matrix() - identity(n) * C64::new(self.min_spec(), 0.0);
        Self { q: LocalOperator::new(m, self.range(), self.site_dim()).expect("shape") }
    }
}

/// Eigenvalues at most this far above zero count as zero modes.
pub fn zero_threshold(norm: f64) -> f64 {
    100.0 * f64::EPSILON * norm.max(1.0)
}

/// `h_Λ(q)` together with its diagonalization.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    h: LocalOperator,
    /// Per-translate shift `ε_Λ(q)`; the raw sum is `h + n_terms·ε·1`.
    epsilon: f64,
    n_terms: usize,
    spectrum: Vec<f64>,
    eigenvectors: CMatrix,
}

impl Hamiltonian {
    pub fn region(&self) -> &Region {
        self.h.region()
    }

    pub fn operator(&self) -> &LocalOperator {
        &self.h
    }

    pub fn matrix(&self) -> &CMatrix {
        self.h.matrix()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of translates `g` with `g + Δ ⊆ Λ`.
    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    /// The total constant removed from the raw sum.
    pub fn total_shift(&self) -> f64 {
        self.epsilon * self.n_terms as f64
    }

    /// Ascending.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum[0]
    }

    pub fn norm(&self) -> f64 {
        self.spectrum.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn zero_threshold(&self) -> f64 {
        zero_threshold(self.norm())
    }

    pub fn ground_dim(&self) -> usize {
        let t = self.zero_threshold();
        self.spectrum.iter().take_while(|&&x| x <= t).count()
    }

    /// Orthonormal basis of `ker h`.
    pub fn kernel_basis(&self) -> CMatrix {
        self.eigenvectors.columns(0, self.ground_dim()).into_owned()
    }
}

fn raw_sum(q: &Interaction, lambda: &Region, settings: &Settings) -> Result<(CMatrix, usize)> {
    if q.range().dim() != lambda.dim() {
        return Err(Error::InvalidRegion(format!("{lambda} and {} live in different lattices", q.range())));
    }
    let shifts = enumerate_translates(q.range(), lambda);
    if shifts.is_empty() {
        return Err(Error::NoTranslate(lambda.clone()));
    }
    let dim = hilbert_dim(q.site_dim(), lambda.len(), settings.max_dim)?;
    let mut raw = CMatrix::zeros(dim, dim);
    for g in &shifts {
        let split = LegSplit::between(&q.range().translate(g), lambda, q.site_dim())?;
        split.add_embedded(q.q().matrix(), ONE, &mut raw);
    }
    Ok((raw, shifts.len()))
}

/// Assemble and diagonalize `h_Λ(q)`, with `ε_Λ(q)` chosen so that the
/// smallest eigenvalue of `h` is zero.
pub fn assemble(q: &Interaction, lambda: &Region, settings: &Settings) -> Result<Hamiltonian> {
    let (raw, n_terms) = raw_sum(q, lambda, settings)?;
    let (vals, vecs) = hermitian_eigen(&raw);
    let lowest = vals[0];
    let h = raw - identity(vals.len()) * C64::new(lowest, 0.0);
    Ok(Hamiltonian {
        h: LocalOperator::new(h, lambda, q.site_dim())?,
        epsilon: lowest / n_terms as f64,
        n_terms,
        spectrum: vals.iter().map(|x| x - lowest).collect(),
        eigenvectors: vecs,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowEpsilon {
    pub window: Region,
    pub epsilon: f64,
    /// `ε_Λ(q) − min Spec(q)`.
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FfModelReport {
    pub ok: bool,
    pub tol: f64,
    pub min_spec_q: f64,
    pub windows: Vec<WindowEpsilon>,
    pub violations: Vec<Region>,
}

/// Whether `ε_Λ(q) = min Spec(q)` on every window that holds a translate of
/// `Δ`. Windows without a translate are skipped.
pub fn is_ff_model(q: &Interaction, windows: &[Region], settings: &Settings) -> Result<FfModelReport> {
    let min_q = q.min_spec();
    let qn = q.normalized();
    let fitting: Vec<&Region> = windows.iter().filter(|w| !enumerate_translates(qn.range(), w).is_empty()).collect();
    let mut rows = fitting
        .par_iter()
        .map(|w| {
            let (raw, n) = raw_sum(&qn, w, settings)?;
            let lowest = hermitian_eigen(&raw).0[0];
            let dev = lowest / n as f64;
            Ok(WindowEpsilon { window: (*w).clone(), epsilon: dev + min_q, deviation: dev })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.window.cmp(&b.window));
    let violations: Vec<Region> =
        rows.iter().filter(|r| r.deviation.abs() > settings.tol).map(|r| r.window.clone()).collect();
    Ok(FfModelReport { ok: violations.is_empty(), tol: settings.tol, min_spec_q: min_q, windows: rows, violations })
}

/// `h_Λ(p_Δ) = Σ p_{g+Δ}` for a frustration-free system. When `Λ` is itself
/// a window of the system, `Ran p_Λ^⊥ ⊆ ker h` is verified.
pub fn assemble_from_system(sys: &FfSystem, delta: &Region, lambda: &Region, settings: &Settings) -> Result<Hamiltonian> {
    let report = check_ff(sys, settings.tol);
    if !report.ok {
        return Err(Error::FfViolation(format!(
            "nesting residual {:.3e} on {:?}",
            report.worst_residual, report.worst_pair
        )));
    }
    let q = Interaction::from_projector(sys.projector(delta)?);
    let h = assemble(&q, lambda, settings)?;
    if let Some(p) = sys.get(lambda) {
        let k = p.kernel_basis();
        let leak = op_norm(&(h.matrix() * &k));
        if leak > settings.tol * h.norm().max(1.0) {
            return Err(Error::FfViolation(format!("ground vectors of {lambda} leave ker h by {leak:.3e}")));
        }
    }
    Ok(h)
}

/// Projector onto the eigenvectors of `h` above the zero cluster.
pub fn supporting_projection(h: &Hamiltonian, settings: &Settings) -> Projector {
    Projector::from_kernel_basis(h.kernel_basis(), h.region(), h.operator().site_dim(), settings.tol)
}

/// Smallest eigenvalue above the zero cluster; `+∞` when there is none.
pub fn spectral_gap(h: &Hamiltonian) -> f64 {
    let t = h.zero_threshold();
    h.spectrum.iter().copied().find(|&x| x > t).unwrap_or(f64::INFINITY)
}

/// Supporting projections of `h_Λ(q)` on every box of `bbox` holding a
/// translate of `Δ`.
pub fn supporting_system(q: &Interaction, bbox: &Region, settings: &Settings) -> Result<FfSystem> {
    let windows: Vec<Region> =
        bbox.sub_boxes().into_iter().filter(|w| !enumerate_translates(q.range(), w).is_empty()).collect();
    let projectors = windows
        .par_iter()
        .map(|w| Ok(supporting_projection(&assemble(q, w, settings)?, settings)))
        .collect::<Result<Vec<_>>>()?;
    FfSystem::new(q.site_dim(), projectors)
}

#[derive(Clone, Debug)]
pub struct DerivationAction {
    /// `[h_Λ(q), a ⊗ 1]` on `Λ`.
    pub commutator: LocalOperator,
    /// Norm of the terms added by enlarging `Λ` with its unit shell.
    pub change_on_enlargement: f64,
    pub stabilized: bool,
}

/// Sum of `[α_g(q), a]` over the given shifts, on the union of the supports.
fn local_commutators(q: &Interaction, a: &LocalOperator, shifts: &[Site], settings: &Settings) -> Result<LocalOperator> {
    let support = shifts.iter().fold(a.region().clone(), |acc, g| acc.union(&q.range().translate(g)));
    let dim = hilbert_dim(a.site_dim(), support.len(), settings.max_dim)?;
    let mut out = CMatrix::zeros(dim, dim);
    for g in shifts {
        let qg = q.q().translated(g);
        let u = qg.region().union(a.region());
        let qe = qg.embed(&u)?.into_matrix();
        let ae = a.embed(&u)?.into_matrix();
        let c = &qe * &ae - &ae * &qe;
        LegSplit::between(&u, &support, a.site_dim())?.add_embedded(&c, ONE, &mut out);
    }
    LocalOperator::new(out, &support, a.site_dim())
}

/// The finite-volume derivation `a ↦ [h_Λ(q), a]`. The constant shift drops
/// out, so only translates meeting `supp(a)` contribute.
pub fn derivation_action(q: &Interaction, a: &LocalOperator, lambda: &Region, settings: &Settings) -> Result<DerivationAction> {
    if !a.region().is_subset(lambda) {
        return Err(Error::NotContained { inner: a.region().clone(), outer: lambda.clone() });
    }
    if a.site_dim() != q.site_dim() {
        return Err(Error::DimensionMismatch { expected: q.site_dim(), found: a.site_dim() });
    }
    let touches = |g: &Site| !q.range().translate(g).intersection(a.region()).is_empty();
    let inside: Vec<Site> = enumerate_translates(q.range(), lambda).into_iter().filter(|g| touches(g)).collect();
    let local = local_commutators(q, a, &inside, settings)?;
    let commutator = local.embed(lambda)?;
    let bigger = lambda.shell();
    let extra: Vec<Site> = enumerate_translates(q.range(), &bigger)
        .into_iter()
        .filter(|g| touches(g) && !inside.contains(g))
        .collect();
    let change = if extra.is_empty() { 0.0 } else { op_norm(local_commutators(q, a, &extra, settings)?.matrix()) };
    Ok(DerivationAction { commutator, change_on_enlargement: change, stabilized: change <= settings.tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitize, subspace_distance, ZERO};
    use crate::models::{aklt_spec, mps_system, product_system};
    use crate::random::{random_hermitian, random_matrix, rng};
    use crate::CVector;

    fn op(m: CMatrix, region: &Region, d: usize) -> LocalOperator {
        LocalOperator::new(m, region, d).unwrap()
    }

    fn aklt_q() -> (FfSystem, Interaction) {
        let sys = mps_system(6, &aklt_spec(), &Settings::default()).unwrap();
        let q = Interaction::from_projector(sys.projector(&Region::interval(0, 2)).unwrap());
        (sys, q)
    }

    #[test]
    fn identity_interaction_shifts_to_zero() {
        let d = Region::interval(0, 2);
        let q = Interaction::new(LocalOperator::identity(&d, 2), 1e-12).unwrap();
        let h = assemble(&q, &Region::interval(0, 4), &Settings::default()).unwrap();
        assert_eq!(h.n_terms(), 3);
        assert!((h.epsilon() - 1.0).abs() < 1e-12);
        assert!((h.total_shift() - 3.0).abs() < 1e-12);
        assert!(op_norm(h.matrix()) < 1e-12);
        assert_eq!(spectral_gap(&h), f64::INFINITY);
        assert_eq!(supporting_projection(&h, &Settings::default()).rank(), 0);
    }

    #[test]
    fn random_interaction_epsilon_matches_independent_eigensolver() {
        let mut r = rng(1);
        let d = Region::interval(0, 2);
        let m = random_hermitian(&mut r, 4);
        let q = Interaction::new(op(m.clone(), &d, 2), 1e-12).unwrap();
        let lam = Region::interval(0, 4);
        let h = assemble(&q, &lam, &Settings::default()).unwrap();
        // raw sum by Kronecker products, lowest eigenvalue via Rayleigh
        // iteration on a shifted operator.
        let i2 = identity(2);
        let k = crate::linalg::kron;
        let raw = k(&k(&m, &i2), &i2) + k(&k(&i2, &m), &i2) + k(&i2, &k(&i2, &m));
        let shift = op_norm(&raw) + 1.0;
        let b = identity(16) * C64::new(shift, 0.0) - &raw;
        let mut v = CVector::from_element(16, ONE);
        for _ in 0..5000 {
            v = &b * &v;
            v /= C64::new(v.norm(), 0.0);
        }
        let top = (v.adjoint() * &b * &v)[(0, 0)].re;
        let lowest = shift - top;
        assert!((h.epsilon() * 3.0 - lowest).abs() < 1e-8);
        assert!(h.min_eigenvalue().abs() < 1e-12);
        assert!(op_norm(&(h.matrix() - (raw - identity(16) * C64::new(lowest, 0.0)))) < 1e-8);
    }

    #[test]
    fn epsilon_scales_with_q() {
        let mut r = rng(2);
        let d = Region::interval(0, 2);
        let q = Interaction::new(op(random_hermitian(&mut r, 4), &d, 2), 1e-12).unwrap();
        let lam = Region::interval(0, 3);
        let e1 = assemble(&q, &lam, &Settings::default()).unwrap().epsilon();
        let e2 = assemble(&q.scaled(2.5), &lam, &Settings::default()).unwrap().epsilon();
        assert!((2.5 * e1 - e2).abs() < 1e-10);
    }

    #[test]
    fn no_translate_is_an_error() {
        let q = Interaction::new(LocalOperator::identity(&Region::interval(0, 3), 2), 1e-12).unwrap();
        assert!(matches!(
            assemble(&q, &Region::interval(0, 2), &Settings::default()),
            Err(Error::NoTranslate(_))
        ));
    }

    #[test]
    fn aklt_hamiltonians_have_four_dimensional_kernels() {
        let (sys, _) = aklt_q();
        let s = Settings::default();
        for n in 2..=5 {
            let lam = Region::interval(0, n);
            let h = assemble_from_system(&sys, &Region::interval(0, 2), &lam, &s).unwrap();
            assert!(h.epsilon().abs() < 1e-12);
            assert_eq!(h.ground_dim(), 4, "n={n}");
            let k = sys.projector(&lam).unwrap().kernel_basis();
            assert!(subspace_distance(&h.kernel_basis(), &k) < 1e-8);
            assert!(h.operator().hermiticity_residual() < 1e-12);
        }
    }

    #[test]
    fn single_term_hamiltonian_is_the_projector() {
        let (sys, _) = aklt_q();
        let delta = Region::interval(0, 2);
        let h = assemble_from_system(&sys, &delta, &delta, &Settings::default()).unwrap();
        assert!(op_norm(&(h.matrix() - sys.projector(&delta).unwrap().matrix())) < 1e-12);
        assert!((spectral_gap(&h) - 1.0).abs() < 1e-10);
        let p = supporting_projection(&h, &Settings::default());
        assert!(p.distance(sys.projector(&delta).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn product_kernel_contains_product_vector() {
        let psi = CVector::from_vec(vec![ONE, ZERO]);
        let sys = product_system(&psi, &Region::interval(0, 4), &Settings::default()).unwrap();
        let h = assemble_from_system(&sys, &Region::interval(0, 1), &Region::interval(0, 4), &Settings::default()).unwrap();
        let v = crate::models::product_vector(&psi, 4);
        assert!(op_norm(&(h.matrix() * v)) < 1e-12);
    }

    #[test]
    fn aklt_gap_on_four_sites_matches_dense_eigenvalues() {
        let (_, q) = aklt_q();
        let lam = Region::interval(0, 4);
        let h = assemble(&q, &lam, &Settings::default()).unwrap();
        // Oracle: eigenvalues of h² are squares; take the smallest nonzero.
        let sq = h.matrix() * h.matrix();
        let (vals, _) = hermitian_eigen(&hermitize(&sq));
        let smallest_nonzero = vals.iter().copied().find(|&x| x > 1e-8).unwrap().sqrt();
        assert!((spectral_gap(&h) - smallest_nonzero).abs() < 1e-8);
        let p = supporting_projection(&h, &Settings::default());
        assert_eq!(p.corank(), 4);
    }

    #[test]
    fn supporting_projections_form_ff_system() {
        let (_, q) = aklt_q();
        let sys = supporting_system(&q, &Region::interval(0, 5), &Settings::default()).unwrap();
        assert!(check_ff(&sys, 1e-9).ok);
        assert!(sys.windows().all(|w| w.len() >= 2));
    }

    #[test]
    fn ff_model_detection() {
        let s = Settings::default();
        let (_, q) = aklt_q();
        let windows = Region::interval(0, 5).sub_boxes();
        assert!(is_ff_model(&q, &windows, &s).unwrap().ok);
        let mut r = rng(7);
        let p = crate::random::random_projector(&mut r, &Region::interval(0, 2), 3, 6, 1e-9);
        let frustrated = Interaction::from_projector(&p);
        let report = is_ff_model(&frustrated, &Region::interval(0, 3).sub_boxes(), &s).unwrap();
        assert!(!report.ok);
        assert!(report.violations.contains(&Region::interval(0, 3)));
        let single = is_ff_model(&frustrated, &[Region::interval(0, 2)], &s).unwrap();
        assert!(single.ok);
    }

    #[test]
    fn derivation_of_identity_and_commuting_operators_vanishes() {
        let (_, q) = aklt_q();
        let lam = Region::interval(0, 4);
        let s = Settings::default();
        let one = LocalOperator::identity(&Region::interval(1, 1), 3);
        let act = derivation_action(&q, &one, &lam, &s).unwrap();
        assert!(op_norm(act.commutator.matrix()) < 1e-12);
        let diag = |n: usize, f: &dyn Fn(usize) -> f64| CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(f(i), 0.0) } else { ZERO });
        let qd = Interaction::new(op(diag(4, &|i| i as f64), &Region::interval(0, 2), 2), 1e-12).unwrap();
        let ad = op(diag(2, &|i| 1.0 - 2.0 * i as f64), &Region::interval(2, 1), 2);
        let act = derivation_action(&qd, &ad, &Region::interval(0, 5), &s).unwrap();
        assert!(op_norm(act.commutator.matrix()) < 1e-12);
        let outside = op(diag(2, &|i| i as f64), &Region::interval(7, 1), 2);
        assert!(derivation_action(&qd, &outside, &Region::interval(0, 5), &s).is_err());
    }

    #[test]
    fn derivation_matches_dense_commutator_and_flags_stabilization() {
        let mut r = rng(9);
        let (_, q) = aklt_q();
        let lam = Region::interval(0, 5);
        let s = Settings::default();
        let a = op(random_matrix(&mut r, 3, 3), &Region::interval(2, 1), 3);
        let act = derivation_action(&q, &a, &lam, &s).unwrap();
        let h = assemble(&q, &lam, &s).unwrap();
        let ae = a.embed(&lam).unwrap().into_matrix();
        let dense = h.matrix() * &ae - &ae * h.matrix();
        assert!(op_norm(&(act.commutator.matrix() - dense)) < 1e-10);
        assert!(act.stabilized);
        let edge = op(random_matrix(&mut r, 3, 3), &Region::interval(0, 1), 3);
        let act = derivation_action(&q, &edge, &lam, &s).unwrap();
        assert!(!act.stabilized);
    }

    #[test]
    fn ground_state_positivity() {
        let (sys, q) = aklt_q();
        let lam = Region::interval(0, 5);
        let s = Settings::default();
        let k = sys.projector(&lam).unwrap().kernel_basis();
        let rho = &k * k.adjoint() / C64::new(k.ncols() as f64, 0.0);
        let mut r = rng(31);
        for seed in 0..10 {
            let site = Region::interval(seed % 4, 2);
            let a = op(random_matrix(&mut r, 9, 9), &site, 3);
            let act = derivation_action(&q, &a, &lam, &s).unwrap();
            let ae = a.embed(&lam).unwrap().into_matrix();
            let val = (&rho * ae.adjoint() * act.commutator.matrix()).trace();
            assert!(val.re >= -1e-10, "{val}");
            assert!(val.im.abs() < 1e-10);
        }
    }
}
