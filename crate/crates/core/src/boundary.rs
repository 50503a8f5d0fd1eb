//! Finite proxies for half-lattice boundary algebras, corner commutants and
//! normalized traces of the constraint projections.
//!
//! The infinite-volume ground projection `p^⊥` is replaced by `p_Γ^⊥` for an
//! ambient window `Γ ⊇ Λ`. Boundary elements are stored compressed to
//! `Ran p_Γ^⊥`: for `x` commuting with `P = W W†` we keep `C = W† x W`, so
//! that `x P = W C W†`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ffsys::FfSystem;
use crate::legs::LegSplit;
use crate::linalg::{
    adj_mul, column_space, hermitian_eigen, hermitize, null_space, numerical_rank, op_norm, singular_values, CMatrix, C64,
};
use crate::random::{random_hermitian, rng};
use crate::region::{HalfLatticeRegion, Region};
use crate::settings::Settings;
use crate::subspace::{LocalOperator, Projector};

#[derive(Clone, Debug)]
pub struct BoundaryAlgebraBasis {
    window: HalfLatticeRegion,
    ambient: HalfLatticeRegion,
    site_dim: usize,
    isometry: CMatrix,
    elements: Vec<CMatrix>,
    solution_dim: usize,
    invariant_dim: usize,
    softest_constraint: Option<f64>,
    commutation_residual: f64,
}

impl BoundaryAlgebraBasis {
    pub fn window(&self) -> &HalfLatticeRegion {
        &self.window
    }

    pub fn ambient(&self) -> &HalfLatticeRegion {
        &self.ambient
    }

    /// Orthonormal basis `W` of `Ran p_Γ^⊥`.
    pub fn isometry(&self) -> &CMatrix {
        &self.isometry
    }

    /// Hilbert–Schmidt orthonormal compressed elements `W† x W`.
    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Dimension of `{x ∈ p_Λ^⊥ S_Λ p_Λ^⊥ : [x, p_Γ^⊥] = 0}` before
    /// multiplying by `p_Γ^⊥`.
    pub fn solution_dim(&self) -> usize {
        self.solution_dim
    }

    /// Dimension of the larger space where only `x p_Γ^⊥ = p_Γ^⊥ x p_Γ^⊥`
    /// is imposed.
    pub fn invariant_dim(&self) -> usize {
        self.invariant_dim
    }

    /// Smallest singular value of the commutation constraints above the rank
    /// cutoff, relative to the largest. Small values flag directions that
    /// commute only approximately at this window size.
    pub fn softest_constraint(&self) -> Option<f64> {
        self.softest_constraint
    }

    /// Whether `x ↦ x p_Γ^⊥` is injective on the solution space.
    pub fn lto4_injective(&self) -> bool {
        self.solution_dim == self.elements.len()
    }

    /// Largest `‖[x, p_Γ^⊥]‖` over the solutions found.
    pub fn commutation_residual(&self) -> f64 {
        self.commutation_residual
    }

    /// Dense `x p_Γ^⊥ = W C W†` on `Γ`.
    pub fn element_operator(&self, k: usize) -> Result<LocalOperator> {
        let w = &self.isometry;
        let m = w * &self.elements[k] * w.adjoint();
        LocalOperator::new(m, self.ambient.region(), self.site_dim)
    }

    /// Largest distance from a product `C_i C_j` or adjoint `C_i†` to the span.
    pub fn closure_residual(&self) -> f64 {
        let stacked = stack(&self.elements);
        let outside = |m: &CMatrix| {
            let v = CMatrix::from_column_slice(m.len(), 1, m.as_slice());
            (&v - &stacked * (stacked.adjoint() * &v)).norm()
        };
        let mut worst = 0.0f64;
        for a in &self.elements {
            worst = worst.max(outside(&a.adjoint()));
            for b in &self.elements {
                worst = worst.max(outside(&(a * b)));
            }
        }
        worst
    }

    /// Largest distance from an element of `other` to the span of `self`,
    /// for bases compressed with the same isometry.
    pub fn inclusion_residual(&self, other: &BoundaryAlgebraBasis) -> Result<f64> {
        if self.isometry.shape() != other.isometry.shape() || op_norm(&(&self.isometry - &other.isometry)) > 1e-12 {
            return Err(Error::RegionMismatch {
                left: self.ambient.region().clone(),
                right: other.ambient.region().clone(),
            });
        }
        let stacked = stack(&self.elements);
        Ok(other
            .elements
            .iter()
            .map(|m| {
                let v = CMatrix::from_column_slice(m.len(), 1, m.as_slice());
                (&v - &stacked * (stacked.adjoint() * &v)).norm()
            })
            .fold(0.0, f64::max))
    }
}

/// Columns are the vectorized matrices.
fn stack(ms: &[CMatrix]) -> CMatrix {
    let len = ms.first().map_or(0, |m| m.len());
    CMatrix::from_fn(len, ms.len(), |i, j| ms[j].as_slice()[i])
}

/// Solve `{x ∈ p_Λ^⊥ S_Λ p_Λ^⊥ embedded in Γ : [x, p_Γ^⊥] = 0}` and return an
/// orthonormal basis of `{x p_Γ^⊥}`.
pub fn boundary_basis(
    sys: &FfSystem,
    lambda: &HalfLatticeRegion,
    gamma: &HalfLatticeRegion,
    settings: &Settings,
) -> Result<BoundaryAlgebraBasis> {
    let (lam, gam) = (lambda.region(), gamma.region());
    if lambda.boundary().is_empty() {
        return Err(Error::EmptyBoundary(lam.clone()));
    }
    if !lam.is_subset(gam) {
        return Err(Error::NotContained { inner: lam.clone(), outer: gam.clone() });
    }
    let d = sys.site_dim();
    let wl = sys.projector(lam)?.kernel_basis();
    let pg = sys.projector(gam)?;
    let (wg, qg) = (pg.kernel_basis(), pg.range_basis());
    let split = LegSplit::between(lam, gam, d)?;
    let (r, big_r) = (wl.ncols(), wg.ncols());
    // Q† x W with Q spanning Ran p_Γ; its entries have the same Gram matrix
    // as (1 − P) x W.
    let leak = |x_local: &CMatrix| adj_mul(&qg, &split.apply(x_local, &wg));
    // Q† x_ab W for every matrix unit x_ab = w_a w_b†.
    let cols: Vec<CMatrix> = (0..r * r)
        .into_par_iter()
        .map(|ab| {
            let (a, b) = (ab / r, ab % r);
            leak(&(wl.column(a) * wl.column(b).adjoint()))
        })
        .collect();
    let block = cols.first().map_or(0, |c| c.len());
    let mut constraints = CMatrix::zeros(2 * block, r * r);
    for ab in 0..r * r {
        let (a, b) = (ab / r, ab % r);
        constraints.view_mut((0, ab), (block, 1)).copy_from_slice(cols[ab].as_slice());
        // P x (1 − P) = 0 is Q† x† W = 0, and x† has coefficients
        // conj(y_ab) on x_ba; conjugating the equation makes it linear in y.
        let adj = cols[b * r + a].map(|z| z.conj());
        constraints.view_mut((block, ab), (block, 1)).copy_from_slice(adj.as_slice());
    }
    let solutions = null_space(&constraints, settings.rank);
    let invariant_dim = null_space(&constraints.rows(0, block).into_owned(), settings.rank).ncols();
    let sv = singular_values(&constraints);
    let cut = settings.rank.cutoff(sv.first().copied().unwrap_or(0.0));
    let softest_constraint = sv.iter().rev().find(|&&x| x > cut).map(|x| x / sv[0]);
    let s = solutions.ncols();
    let mut compressed = Vec::with_capacity(s);
    let mut residual = 0.0f64;
    for k in 0..s {
        let y = CMatrix::from_fn(r, r, |a, b| solutions[(a * r + b, k)]);
        let x_local = &wl * y * wl.adjoint();
        residual = residual.max(op_norm(&leak(&x_local))).max(op_norm(&leak(&x_local.adjoint())));
        compressed.push(adj_mul(&wg, &split.apply(&x_local, &wg)));
    }
    let basis = if s == 0 || big_r == 0 { CMatrix::zeros(big_r * big_r, 0) } else { column_space(&stack(&compressed), settings.rank) };
    let elements = (0..basis.ncols())
        .map(|k| CMatrix::from_column_slice(big_r, big_r, basis.column(k).as_slice()))
        .collect();
    Ok(BoundaryAlgebraBasis {
        window: lambda.clone(),
        ambient: gamma.clone(),
        site_dim: d,
        isometry: wg,
        elements,
        solution_dim: s,
        invariant_dim,
        softest_constraint,
        commutation_residual: residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryRow {
    pub window: Region,
    pub ambient: Region,
    pub n: usize,
    pub gamma_size: usize,
    pub boundary_dim: usize,
    pub lto4_injective: bool,
    pub invariant_dim: usize,
    pub softest_constraint: Option<f64>,
    /// The previous rung's window, solved inside this rung's ambient window,
    /// lands in this rung's span.
    pub consistent: bool,
    /// Same dimension as the previous rung.
    pub stabilized: bool,
    pub trace_estimate: f64,
    pub lower_bound: f64,
}

/// Boundary dimensions along a nested ladder of `(Λ, Γ)` pairs.
pub fn boundary_dim_scan(
    sys: &FfSystem,
    rungs: &[(HalfLatticeRegion, HalfLatticeRegion)],
    settings: &Settings,
) -> Result<Vec<BoundaryRow>> {
    for pair in rungs.windows(2) {
        let ((l0, g0), (l1, g1)) = (&pair[0], &pair[1]);
        if !l0.region().is_subset(l1.region()) || !g0.region().is_subset(g1.region()) {
            return Err(Error::Invalid(format!("ladder is not nested at {}", l1.region())));
        }
    }
    let bases = rungs
        .par_iter()
        .map(|(l, g)| boundary_basis(sys, l, g, settings))
        .collect::<Result<Vec<_>>>()?;
    let consistency = (0..rungs.len())
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return Ok(true);
            }
            let prev = boundary_basis(sys, &rungs[i - 1].0, &rungs[i].1, settings)?;
            Ok(bases[i].inclusion_residual(&prev)? <= settings.tol.sqrt())
        })
        .collect::<Result<Vec<bool>>>()?;
    let mut rows = Vec::with_capacity(rungs.len());
    for (i, ((l, g), b)) in rungs.iter().zip(&bases).enumerate() {
        let p = sys.projector(l.region())?;
        let est = trace_estimate(p);
        rows.push(BoundaryRow {
            window: l.region().clone(),
            ambient: g.region().clone(),
            n: l.region().len(),
            gamma_size: g.region().len(),
            boundary_dim: b.dim(),
            lto4_injective: b.lto4_injective(),
            invariant_dim: b.invariant_dim(),
            softest_constraint: b.softest_constraint(),
            consistent: consistency[i],
            stabilized: i > 0 && bases[i - 1].dim() == b.dim(),
            trace_estimate: est.trace_estimate,
            lower_bound: est.lower_bound,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutantReport {
    pub window: Region,
    pub dim: usize,
    /// `1 + rank(p_Λ^⊥)²`.
    pub expected: usize,
    pub matches: bool,
    /// `p_Λ = 0`: the corner vanishes and the commutant is all of `S_Λ`.
    pub degenerate: bool,
}

/// Relative commutant of the corner `p_Λ S_Λ p_Λ` inside `S_Λ`.
///
/// The corner is generated by two random elements `b₁ = p(H₁ + c)p` and
/// `b₂ = pH₂p`, with `c` making `H₁ + c` positive. An `x` commuting with `b₁`
/// is block diagonal for its eigenspaces: one-dimensional blocks inside
/// `Ran p` (the eigenvalues there are simple for generic `H₁`) and an
/// arbitrary block on `ker p`. Commuting with `b₂` then forces the diagonal
/// coefficients `c_i` to satisfy `(c_i − c_j)(b₂)_ij = 0`, whose solution
/// space is the null space of the weighted graph Laplacian `Σ |b_ij|² (e_i −
/// e_j)(e_i − e_j)^T`.
pub fn commutant_structure_check(sys: &FfSystem, lambda: &Region, seed: u64, settings: &Settings) -> Result<CommutantReport> {
    let p = sys.projector(lambda)?;
    let r = p.corank();
    let range = p.range_basis();
    let rp = range.ncols();
    let expected = 1 + r * r;
    if rp == 0 {
        let dim = r * r;
        return Ok(CommutantReport { window: lambda.clone(), dim, expected, matches: dim == expected, degenerate: true });
    }
    let mut g = rng(seed);
    let mut diag_dim = None;
    for _ in 0..8 {
        let h1 = random_hermitian(&mut g, rp);
        let h2 = random_hermitian(&mut g, rp);
        let shift = op_norm(&h1) + 1.0;
        let b1 = hermitize(&(h1 + CMatrix::identity(rp, rp) * C64::new(shift, 0.0)));
        let (vals, vecs) = hermitian_eigen(&b1);
        let spread = vals.last().unwrap() - vals[0];
        let min_gap = vals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if rp > 1 && min_gap <= 1e-8 * spread.max(1.0) {
            continue;
        }
        let b2 = vecs.adjoint() * h2 * &vecs;
        let mut lap = CMatrix::zeros(rp, rp);
        for i in 0..rp {
            for j in 0..rp {
                if i != j {
                    let w = C64::new(b2[(i, j)].norm_sqr(), 0.0);
                    lap[(i, i)] += w;
                    lap[(i, j)] -= w;
                }
            }
        }
        let nullity = if rp == 1 { 1 } else { rp - numerical_rank(&lap, settings.rank) };
        diag_dim = Some(nullity);
        break;
    }
    let diag_dim = diag_dim.ok_or_else(|| Error::Invalid("could not draw a generic corner element".into()))?;
    let dim = diag_dim + r * r;
    Ok(CommutantReport { window: lambda.clone(), dim, expected, matches: dim == expected, degenerate: false })
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceEstimate {
    pub window: Region,
    pub n: usize,
    /// `Tr(p_Λ) / d^{|Λ|}`, summed from the stored frame.
    pub trace_estimate: f64,
    /// `1 − rank(p_Λ^⊥) / d^{|Λ|}`.
    pub lower_bound: f64,
}

pub fn trace_estimate(p: &Projector) -> TraceEstimate {
    let dim = p.dim() as f64;
    let tr = match p.frame() {
        crate::subspace::Frame::Range(b) => b.norm_squared(),
        crate::subspace::Frame::Kernel(k) => dim - k.norm_squared(),
    };
    TraceEstimate {
        window: p.region().clone(),
        n: p.region().len(),
        trace_estimate: tr / dim,
        lower_bound: 1.0 - p.corank() as f64 / dim,
    }
}

/// Normalized traces along a ladder of windows.
pub fn cuntz_trace_estimate(sys: &FfSystem, ladder: &[Region]) -> Result<Vec<TraceEstimate>> {
    for pair in ladder.windows(2) {
        if !(pair[0].is_subset(&pair[1]) && pair[0] != pair[1]) {
            return Err(Error::Invalid(format!("ladder is not increasing at {}", pair[1])));
        }
    }
    ladder.iter().map(|w| Ok(trace_estimate(sys.projector(w)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, ONE, ZERO};
    use crate::models::{aklt_spec, mps_system, product_system};
    use crate::CVector;

    fn half(r: Region) -> HalfLatticeRegion {
        HalfLatticeRegion::new(r).unwrap()
    }

    fn e0() -> CVector {
        CVector::from_vec(vec![ONE, ZERO])
    }

    /// Dimension of `{x : [x, b] = 0 for all b}` by brute force over all of
    /// `M_D`: `[x, b] = 0 ⇔ (1 ⊗ b − b^T ⊗ 1) vec(x) = 0`.
    fn brute_commutant_dim(gens: &[CMatrix]) -> usize {
        let n = gens[0].nrows();
        let i = CMatrix::identity(n, n);
        let rows: Vec<CMatrix> = gens.iter().map(|b| kron(&i, b) - kron(&b.transpose(), &i)).collect();
        let mut stacked = CMatrix::zeros(rows.len() * n * n, n * n);
        for (k, m) in rows.iter().enumerate() {
            stacked.view_mut((k * n * n, 0), (n * n, n * n)).copy_from(m);
        }
        null_space(&stacked, Default::default()).ncols()
    }

    fn corner_generators(p: &CMatrix) -> Vec<CMatrix> {
        let n = p.nrows();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let mut e = CMatrix::zeros(n, n);
                e[(a, b)] = ONE;
                out.push(p * e * p);
            }
        }
        out
    }

    #[test]
    fn product_boundary_is_scalars() {
        let s = Settings::default();
        let sys = product_system(&e0(), &Region::interval(0, 6), &s).unwrap();
        for n in 1..=3 {
            let b = boundary_basis(&sys, &half(Region::interval(0, n)), &half(Region::interval(0, n + 2)), &s).unwrap();
            assert_eq!(b.dim(), 1);
            assert!(b.lto4_injective());
            assert!(b.closure_residual() < 1e-10);
        }
    }

    #[test]
    fn aklt_boundary_on_finite_windows() {
        // Left multiplications on the outer bond leave Ran p_Γ^⊥ invariant
        // (four dimensions), but their adjoints do so only up to terms that
        // shrink by a factor 3 per site of Λ, so the exact commutant is the
        // scalars.
        let s = Settings::default();
        let sys = mps_system(7, &aklt_spec(), &s).unwrap();
        let mut prev = f64::INFINITY;
        for (n, m) in [(2, 4), (3, 5), (4, 6), (5, 7)] {
            let b = boundary_basis(&sys, &half(Region::interval(0, n)), &half(Region::interval(0, m)), &s).unwrap();
            assert_eq!(b.dim(), 1, "n={n} m={m}");
            assert_eq!(b.invariant_dim(), 4, "n={n} m={m}");
            assert!(b.lto4_injective());
            assert!(b.commutation_residual() < 1e-9);
            assert!(b.closure_residual() < 1e-9);
            let soft = b.softest_constraint().unwrap();
            assert!(soft < prev / 2.5 && soft > prev / 3.5 || prev.is_infinite(), "{soft} after {prev}");
            prev = soft;
        }
        let wide = boundary_basis(&sys, &half(Region::interval(0, 2)), &half(Region::interval(0, 7)), &s).unwrap();
        assert_eq!((wide.dim(), wide.invariant_dim()), (1, 4));
    }

    #[test]
    fn boundary_elements_commute_with_ground_projection() {
        let s = Settings::default();
        let sys = mps_system(4, &aklt_spec(), &s).unwrap();
        let gam = Region::interval(0, 4);
        let b = boundary_basis(&sys, &half(Region::interval(0, 2)), &half(gam.clone()), &s).unwrap();
        let pp = sys.projector(&gam).unwrap().complement();
        for k in 0..b.dim() {
            let x = b.element_operator(k).unwrap().into_matrix();
            let pm = pp.matrix();
            assert!(op_norm(&(&x * pm - pm * &x)) < 1e-10);
        }
    }

    #[test]
    fn brute_force_commutation_null_space_agrees() {
        // Solve {x on Γ : x = p_Λ^⊥ x p_Λ^⊥ ⊗ 1 form, [x, P] = 0} directly in
        // the Kronecker formulation for a small product-like window.
        let s = Settings::default();
        let sys = mps_system(3, &aklt_spec(), &s).unwrap();
        let lam = Region::interval(0, 2);
        let gam = Region::interval(0, 3);
        let wl = sys.projector(&lam).unwrap().kernel_basis();
        let pg = sys.projector(&gam).unwrap().complement().matrix().clone();
        let r = wl.ncols();
        let split = LegSplit::between(&lam, &gam, 3).unwrap();
        let mut cons = CMatrix::zeros(27 * 27, r * r);
        let mut xs = Vec::new();
        for ab in 0..r * r {
            let (a, b) = (ab / r, ab % r);
            let x = split.embed(&(wl.column(a) * wl.column(b).adjoint()));
            let c = &x * &pg - &pg * &x;
            cons.set_column(ab, &CVector::from_column_slice(c.as_slice()));
            xs.push(x);
        }
        let sol = null_space(&cons, s.rank);
        let mut images = CMatrix::zeros(27 * 27, sol.ncols());
        for k in 0..sol.ncols() {
            let x = (0..r * r).fold(CMatrix::zeros(27, 27), |acc, ab| acc + &xs[ab] * sol[(ab, k)]);
            images.set_column(k, &CVector::from_column_slice((x * &pg).as_slice()));
        }
        let b = boundary_basis(&sys, &half(lam), &half(gam), &s).unwrap();
        assert_eq!(numerical_rank(&images, s.rank), b.dim());
        assert_eq!(b.solution_dim(), sol.ncols());
    }

    #[test]
    fn empty_constraint_gives_full_matrix_algebra() {
        let s = Settings::default();
        let lam = Region::interval(0, 1);
        let gam = Region::interval(0, 2);
        let sys = FfSystem::new(2, [Projector::zero(&lam, 2, 1e-9), Projector::zero(&gam, 2, 1e-9)]).unwrap();
        let b = boundary_basis(&sys, &half(lam.clone()), &half(gam), &s).unwrap();
        assert_eq!(b.dim(), 4);
        let c = commutant_structure_check(&sys, &lam, 1, &s).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.dim, 4);
    }

    #[test]
    fn window_without_boundary_is_rejected() {
        let s = Settings::default();
        let sys = product_system(&e0(), &Region::interval(0, 4), &s).unwrap();
        let r = boundary_basis(&sys, &half(Region::interval(1, 2)), &half(Region::interval(0, 4)), &s);
        assert!(matches!(r, Err(Error::EmptyBoundary(_))));
        let r = boundary_basis(&sys, &half(Region::interval(0, 3)), &half(Region::interval(0, 2)), &s);
        assert!(matches!(r, Err(Error::NotContained { .. })));
    }

    #[test]
    fn scans_report_stable_dimensions() {
        let s = Settings::default();
        let sys = mps_system(6, &aklt_spec(), &s).unwrap();
        let rungs: Vec<_> = (2..=4)
            .map(|n| (half(Region::interval(0, n)), half(Region::interval(0, n + 2))))
            .collect();
        let rows = boundary_dim_scan(&sys, &rungs, &s).unwrap();
        assert!(rows.iter().all(|r| r.boundary_dim == 1 && r.invariant_dim == 4 && r.consistent));
        assert!(!rows[0].stabilized && rows[1].stabilized && rows[2].stabilized);
        let prod = product_system(&e0(), &Region::interval(0, 6), &s).unwrap();
        let rungs: Vec<_> = (1..=4)
            .map(|n| (half(Region::interval(0, n)), half(Region::interval(0, n + 2))))
            .collect();
        assert!(boundary_dim_scan(&prod, &rungs, &s).unwrap().iter().all(|r| r.boundary_dim == 1));
    }

    #[test]
    fn commutant_dimension_matches_brute_force() {
        let s = Settings::default();
        let prod = product_system(&e0(), &Region::interval(0, 3), &s).unwrap();
        let aklt = mps_system(3, &aklt_spec(), &s).unwrap();
        let cases = [(&prod, Region::interval(0, 2)), (&prod, Region::interval(0, 1)), (&aklt, Region::interval(0, 2))];
        for (sys, w) in cases {
            let p = sys.projector(&w).unwrap();
            let rep = commutant_structure_check(sys, &w, 3, &s).unwrap();
            assert_eq!(rep.dim, brute_commutant_dim(&corner_generators(p.matrix())), "{w}");
            assert!(rep.matches && !rep.degenerate);
            assert_eq!(rep.expected, 1 + p.corank() * p.corank());
        }
    }

    #[test]
    fn trace_estimates() {
        let s = Settings::default();
        let sys = mps_system(6, &aklt_spec(), &s).unwrap();
        let ladder: Vec<Region> = (2..=6).map(|n| Region::interval(0, n)).collect();
        let est = cuntz_trace_estimate(&sys, &ladder).unwrap();
        for e in &est {
            let exact = 1.0 - 4.0 / 3f64.powi(e.n as i32);
            assert!((e.trace_estimate - exact).abs() < 1e-12);
            assert!(e.trace_estimate >= e.lower_bound - 1e-12);
            assert!((0.0..1.0).contains(&e.trace_estimate));
        }
        assert!(est.last().unwrap().trace_estimate > 0.99);
        let prod = product_system(&e0(), &Region::interval(0, 4), &s).unwrap();
        for e in cuntz_trace_estimate(&prod, &[Region::interval(0, 2), Region::interval(0, 4)]).unwrap() {
            assert!((e.trace_estimate - (1.0 - 0.5f64.powi(e.n as i32))).abs() < 1e-12);
        }
    }
}
