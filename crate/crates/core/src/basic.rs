//! The basic construction `C*⟨A, e_P⟩` on the GNS space of `tr ∘ E`, its dual
//! expectation, the Jones tower and the tunnel construction.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{is_projection, sum_elements, AlgebraElement, MultiMatrixAlgebra};
use crate::error::{Error, Result};
use crate::expectation::{ConditionalExpectation, ExpectationReport};
use crate::gns::GnsSpace;
use crate::index::{solve_quasi_basis, watatani_index, IndexedExpectation, QuasiBasis};
use crate::linalg::{self, Orthonormalizer, C64};
use crate::subspace::{elements_matrix, generated_subalgebra, Subalgebra, Subspace};
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasicDefects {
    /// Residual of the least-squares extension of `Ê` over its spanning set.
    pub well_definedness: f64,
    /// `max ‖e_P λ(a) e_P − λ(E(a)) e_P‖`
    pub jones_module: f64,
    /// `max ‖z e_P − λ(Index E) Ê(z e_P) e_P‖`
    pub index_identity: f64,
    /// Disagreement between the least-squares `Ê` and the closed formula.
    pub route_agreement: f64,
}

impl BasicDefects {
    pub fn max(&self) -> f64 {
        self.well_definedness.max(self.jones_module).max(self.index_identity).max(self.route_agreement)
    }
}

#[derive(Debug, Clone)]
pub struct BasicConstruction {
    source: IndexedExpectation,
    gns: GnsSpace,
    jones: AlgebraElement,
    image: Subalgebra,
    algebra: Subalgebra,
    dual: ConditionalExpectation,
    lambda_index: AlgebraElement,
    defects: BasicDefects,
}

pub fn build_basic_construction(ie: &IndexedExpectation, tol: &ToleranceConfig) -> Result<BasicConstruction> {
    let e = ie.expectation();
    let gns = GnsSpace::new(e, tol)?;
    let ops = gns.operator_algebra().clone();
    let d = gns.dim();
    let jones = gns.jones_projection();
    let image = gns.image(tol)?;

    let mut gens = image.generators().to_vec();
    gens.push(jones.clone());
    let algebra = generated_subalgebra(&ops, &gens, tol)?;

    let p = jones.block(0).clone();
    let lam = gns.lambda_basis();
    let lam_inv_index = gns.left_matrix(&ie.index().inverse());

    // Ê by linear extension of λ(b_m) e_P λ(b_j) ↦ λ(I^{-1} b_m b_j), in B coordinates.
    let dim_b = algebra.dim();
    let qb = algebra.space().basis_matrix();
    let mut span_coords = DMatrix::<C64>::zeros(dim_b, d * d);
    let mut target_coords = DMatrix::<C64>::zeros(dim_b, d * d);
    for (m, lm) in lam.iter().enumerate() {
        let lp = lm * &p;
        let li = &lam_inv_index * lm;
        let mut sv = DMatrix::<C64>::zeros(d * d, d);
        let mut tv = DMatrix::<C64>::zeros(d * d, d);
        for (j, lj) in lam.iter().enumerate() {
            sv.set_column(j, &linalg::row_major(&(&lp * lj)));
            tv.set_column(j, &linalg::row_major(&(&li * lj)));
        }
        span_coords.columns_mut(m * d, d).copy_from(&(qb.adjoint() * sv));
        target_coords.columns_mut(m * d, d).copy_from(&(qb.adjoint() * tv));
    }
    let map = &target_coords * linalg::pinv(&span_coords, tol.rank_tol);
    let well_definedness = (&map * &span_coords - &target_coords).norm() / target_coords.norm().max(1.0);
    if !tol.ok(well_definedness) {
        return Err(Error::WellDefinedness { residual: well_definedness });
    }
    let dual = ConditionalExpectation::new(algebra.clone(), image.clone(), map, tol)?;

    let lambda_index = gns.lambda(ie.index().element());
    let mut bc = BasicConstruction {
        source: ie.clone(),
        gns,
        jones,
        image,
        algebra,
        dual,
        lambda_index,
        defects: BasicDefects { well_definedness, jones_module: 0.0, index_identity: 0.0, route_agreement: 0.0 },
    };
    bc.defects.jones_module = bc.jones_module_defect(tol);
    bc.defects.index_identity = bc.index_identity_defect(tol);
    bc.defects.route_agreement = bc.route_agreement_defect(tol);
    for (name, d) in [
        ("e_P λ(a) e_P = λ(E(a)) e_P", bc.defects.jones_module),
        ("z e_P = (Index E) Ê(z e_P) e_P", bc.defects.index_identity),
        ("least-squares and formula dual expectation agree", bc.defects.route_agreement),
    ] {
        if !tol.ok(d) {
            return Err(Error::Verification { check: name.into(), defect: d });
        }
    }
    Ok(bc)
}

impl BasicConstruction {
    pub fn source(&self) -> &IndexedExpectation {
        &self.source
    }

    pub fn gns(&self) -> &GnsSpace {
        &self.gns
    }

    /// `M_d`, the operators on the GNS space.
    pub fn operator_algebra(&self) -> &MultiMatrixAlgebra {
        self.gns.operator_algebra()
    }

    pub fn jones_projection(&self) -> &AlgebraElement {
        &self.jones
    }

    /// `λ(A)`.
    pub fn image(&self) -> &Subalgebra {
        &self.image
    }

    /// `B = C*⟨λ(A), e_P⟩`.
    pub fn algebra(&self) -> &Subalgebra {
        &self.algebra
    }

    /// `Ê: B → λ(A)`.
    pub fn dual(&self) -> &ConditionalExpectation {
        &self.dual
    }

    pub fn lambda(&self, x: &AlgebraElement) -> AlgebraElement {
        self.gns.lambda(x)
    }

    pub fn lambda_inverse(&self, x: &AlgebraElement) -> AlgebraElement {
        self.gns.lambda_inverse(x)
    }

    /// `λ(Index E)`.
    pub fn lambda_index(&self) -> &AlgebraElement {
        &self.lambda_index
    }

    pub fn defects(&self) -> BasicDefects {
        self.defects
    }

    fn jones_module_defect(&self, tol: &ToleranceConfig) -> f64 {
        let e = self.source.expectation();
        let mut worst: f64 = 0.0;
        for a in e.upper().space().check_elements(tol, 0xba) {
            let la = self.lambda(&a);
            let lhs = &(&self.jones * &la) * &self.jones;
            let rhs = &self.lambda(&e.apply(&a)) * &self.jones;
            worst = worst.max((&lhs - &rhs).frobenius_norm() / a.frobenius_norm().max(1.0));
        }
        worst
    }

    fn index_identity_defect(&self, tol: &ToleranceConfig) -> f64 {
        let mut worst: f64 = 0.0;
        for z in self.algebra.space().check_elements(tol, 0xbb) {
            let ze = &z * &self.jones;
            let rhs = &(&self.lambda_index * &self.dual.apply(&ze)) * &self.jones;
            worst = worst.max((&ze - &rhs).frobenius_norm() / z.frobenius_norm().max(1.0));
        }
        worst
    }

    fn route_agreement_defect(&self, tol: &ToleranceConfig) -> f64 {
        let mut worst: f64 = 0.0;
        for z in self.algebra.space().check_elements(tol, 0xbc) {
            let a = self.dual.apply(&z);
            let b = self.dual_by_formula(&z);
            worst = worst.max((&a - &b).frobenius_norm() / z.frobenius_norm().max(1.0));
        }
        worst
    }

    /// `Ê(z) = λ(I^{-1} Σ_i η^{-1}(z η(u_i)) v_i)`, from writing
    /// `z = Σ_i z λ(u_i) e_P λ(v_i)` and `w e_P = λ(η^{-1}(w η(1))) e_P`.
    pub fn dual_by_formula(&self, z: &AlgebraElement) -> AlgebraElement {
        let src = self.source.expectation().upper().ambient();
        let terms: Vec<AlgebraElement> = self
            .source
            .quasi_basis()
            .pairs()
            .iter()
            .map(|(u, v)| &self.gns.eta_inverse(&(z.block(0) * self.gns.eta(u))) * v)
            .collect();
        let s = sum_elements(src, &terms);
        self.lambda(&(&self.source.index().inverse() * &s))
    }

    /// `{(λ(u_i) e_P, λ(I) e_P λ(v_i))}`, a quasi-basis for `Ê`.
    pub fn dual_quasi_basis(&self) -> QuasiBasis {
        let pairs = self
            .source
            .quasi_basis()
            .pairs()
            .iter()
            .map(|(u, v)| {
                let left = &self.lambda(u) * &self.jones;
                let right = &(&self.lambda_index * &self.jones) * &self.lambda(v);
                (left, right)
            })
            .collect();
        QuasiBasis::new(pairs)
    }

    /// `Ê` with the closed-form quasi-basis, verified.
    pub fn dual_indexed(&self, tol: &ToleranceConfig) -> Result<IndexedExpectation> {
        IndexedExpectation::from_quasi_basis(&self.dual, self.dual_quasi_basis(), tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualIndexReport {
    pub index: Option<f64>,
    /// From solving for a quasi-basis of `Ê` directly; skipped above `full_check_dim`.
    pub dual_index_solved: Option<f64>,
    /// From the closed-form dual quasi-basis.
    pub dual_index_closed_form: Option<f64>,
    pub max_error: f64,
    pub pass: bool,
}

pub fn dual_index_check(bc: &BasicConstruction, tol: &ToleranceConfig) -> Result<DualIndexReport> {
    let index = bc.source.index().scalar();
    let closed = bc.dual_indexed(tol)?;
    let dual_index_closed_form = closed.index().scalar();
    let dual_index_solved = if tol.full_check(bc.algebra.dim()) {
        let qb = solve_quasi_basis(&bc.dual, tol)?;
        watatani_index(&bc.dual, &qb, tol)?.scalar()
    } else {
        None
    };
    let mut max_error: f64 = 0.0;
    let mut pass = true;
    match index {
        Some(i) => {
            for v in [dual_index_closed_form, dual_index_solved].into_iter().flatten() {
                max_error = max_error.max((v - i).abs());
            }
            pass &= dual_index_closed_form.is_some();
            pass &= tol.full_check(bc.algebra.dim()) == dual_index_solved.is_some();
            pass &= max_error <= 10.0 * tol.eq_tol * i.max(1.0);
        }
        None => {
            // Non-scalar index: compare the index elements of the two routes.
            if tol.full_check(bc.algebra.dim()) {
                let qb = solve_quasi_basis(&bc.dual, tol)?;
                let solved = watatani_index(&bc.dual, &qb, tol)?;
                max_error = solved.element().distance(closed.index().element());
                pass &= tol.close(max_error, solved.element().norm());
            }
        }
    }
    Ok(DualIndexReport { index, dual_index_solved, dual_index_closed_form, max_error, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct TunnelReport {
    pub projection_defect: f64,
    /// `‖E(e) − (Index E)^{-1}‖`
    pub expectation_defect: f64,
    pub q_dim: usize,
    pub f_report: ExpectationReport,
    /// How far `F` maps outside `P`.
    pub f_outside: f64,
    /// Distance from `1` to `span{x e y : x, y ∈ A}`.
    pub fullness_residual: f64,
    pub full: bool,
    /// `dim span{x e y : x, y ∈ P}`, computed only when `e` is full.
    pub span_dim: Option<usize>,
    pub upper_dim: usize,
    /// `max ‖e p e − F(p) e‖` over `P`, computed only when `e` is full.
    pub module_defect: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Tunnel {
    pub q: Subalgebra,
    pub f: ConditionalExpectation,
    pub report: TunnelReport,
}

/// `Q = P ∩ {e}′` and `F(x) = (Index E)·E(exe)` on `P`. When `e` is full the
/// report checks that `A` is the basic construction of `Q ⊂ P` with Jones
/// projection `e`; otherwise those checks are skipped.
pub fn tunnel_construction(ie: &IndexedExpectation, e: &AlgebraElement, tol: &ToleranceConfig) -> Result<Tunnel> {
    let ex = ie.expectation();
    let upper = ex.upper();
    let lower = ex.lower();
    upper.ambient().conforms(e)?;
    let pr = is_projection(e, tol);
    if !pr.pass {
        return Err(Error::Precondition(format!("e is not a projection (defect {:.3e})", pr.max_defect())));
    }
    if !upper.contains(e, tol) {
        return Err(Error::Precondition("e does not lie in the upper algebra".into()));
    }
    let inv = ie.index().inverse();
    let expectation_defect = ex.apply(e).distance(&inv);
    if !tol.close(expectation_defect, inv.norm()) {
        return Err(Error::Precondition(format!(
            "E(e) differs from (Index E)^-1 by {expectation_defect:.3e}"
        )));
    }

    let q = lower.commutant_of(std::slice::from_ref(e), tol)?;
    let index = ie.index().element().clone();
    let (f, f_outside) = ConditionalExpectation::tabulate(lower.clone(), q.clone(), |x| {
        &index * &ex.apply(&(&(e * x) * e))
    })?;
    let f_report = f.verify(tol);

    let amb = upper.ambient();
    let ubasis = upper.basis();
    let mut o = Orthonormalizer::new(amb.vector_dim(), tol.rank_tol);
    for x in &ubasis {
        let xe = x * e;
        let cands: Vec<AlgebraElement> = ubasis.iter().map(|y| &xe * y).collect();
        o.extend(&elements_matrix(amb, &cands));
    }
    let span = Subspace::span(amb, &[], tol.rank_tol)?;
    let span = if o.is_empty() { span } else { Subspace::from_vectors(amb, &o.basis(), tol.rank_tol)? };
    let one = amb.unit();
    let fullness_residual = span.distance(&one) / one.frobenius_norm();
    let full = fullness_residual <= tol.eq_tol;

    let (span_dim, module_defect) = if full {
        let lbasis = lower.basis();
        let mut o = Orthonormalizer::new(amb.vector_dim(), tol.rank_tol);
        for x in &lbasis {
            let xe = x * e;
            let cands: Vec<AlgebraElement> = lbasis.iter().map(|y| &xe * y).collect();
            o.extend(&elements_matrix(amb, &cands));
        }
        let mut worst: f64 = 0.0;
        for p in lower.space().check_elements(tol, 0x7e) {
            let lhs = &(e * &p) * e;
            let rhs = &f.apply(&p) * e;
            worst = worst.max((&lhs - &rhs).frobenius_norm() / p.frobenius_norm().max(1.0));
        }
        (Some(o.len()), Some(worst))
    } else {
        (None, None)
    };

    let pass = f_report.pass
        && tol.ok(f_outside)
        && full
        && span_dim == Some(upper.dim())
        && module_defect.map(|d| tol.ok(d)).unwrap_or(false);
    let report = TunnelReport {
        projection_defect: pr.max_defect(),
        expectation_defect,
        q_dim: q.dim(),
        f_report,
        f_outside,
        fullness_residual,
        full,
        span_dim,
        upper_dim: upper.dim(),
        module_defect,
        pass,
    };
    Ok(Tunnel { q, f, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TowerLevel {
    pub level: usize,
    pub source_dim: usize,
    pub algebra_dim: usize,
    pub index: Option<f64>,
    pub max_defect: f64,
}

/// Iterated basic constructions `B_1 ⊂ B_2 ⊂ …`; level `k+1` is the basic
/// construction of the dual expectation of level `k`. Each level is refused
/// once its algebra would exceed `dim_cap`.
pub fn jones_tower(ie: &IndexedExpectation, levels: usize, dim_cap: usize, tol: &ToleranceConfig) -> Result<Vec<BasicConstruction>> {
    if levels == 0 {
        return Err(Error::Precondition("levels must be at least 1".into()));
    }
    let mut out: Vec<BasicConstruction> = Vec::with_capacity(levels);
    let mut current = ie.clone();
    for _ in 0..levels {
        let src_dim = current.expectation().upper().dim();
        // dim B ≥ dim A, so refuse before doing the work.
        if src_dim > dim_cap {
            return Err(Error::DimensionCap { dim: src_dim, cap: dim_cap });
        }
        let bc = build_basic_construction(&current, tol)?;
        if bc.algebra().dim() > dim_cap {
            return Err(Error::DimensionCap { dim: bc.algebra().dim(), cap: dim_cap });
        }
        current = bc.dual_indexed(tol)?;
        out.push(bc);
    }
    Ok(out)
}

pub fn tower_summary(levels: &[BasicConstruction]) -> Vec<TowerLevel> {
    levels
        .iter()
        .enumerate()
        .map(|(k, bc)| TowerLevel {
            level: k + 1,
            source_dim: bc.source().expectation().upper().dim(),
            algebra_dim: bc.algebra().dim(),
            index: bc.source().index().scalar(),
            max_defect: bc.defects().max().max(bc.source().defects().max()),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::uniform_trace_expectation;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn pinching(n: usize) -> IndexedExpectation {
        let a = MultiMatrixAlgebra::full_matrix(n);
        let units: Vec<AlgebraElement> = (0..n).map(|i| a.matrix_unit(0, i, i)).collect();
        let p = generated_subalgebra(&a, &units, &tol()).unwrap();
        let e = uniform_trace_expectation(&Subalgebra::full(&a), &p, &tol()).unwrap();
        IndexedExpectation::new(&e, &tol()).unwrap()
    }

    #[test]
    fn pinching_m2_basic_construction() {
        let bc = build_basic_construction(&pinching(2), &tol()).unwrap();
        assert_eq!(bc.algebra().dim(), 8);
        assert!(bc.defects().max() < 1e-10, "{:?}", bc.defects());
        let r = dual_index_check(&bc, &tol()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.dual_index_solved.unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn identity_gives_trivial_construction() {
        let a = MultiMatrixAlgebra::full_matrix(2);
        let e = ConditionalExpectation::identity(Subalgebra::full(&a));
        let ie = IndexedExpectation::new(&e, &tol()).unwrap();
        let bc = build_basic_construction(&ie, &tol()).unwrap();
        assert_eq!(bc.algebra().dim(), 4);
        assert!(bc.jones_projection().distance(&bc.operator_algebra().unit()) < 1e-12);
    }

    #[test]
    fn pinching_tower_doubles() {
        let levels = jones_tower(&pinching(2), 3, 256, &tol()).unwrap();
        let s = tower_summary(&levels);
        let dims: Vec<usize> = s.iter().map(|l| l.algebra_dim).collect();
        assert_eq!(dims, vec![8, 16, 32]);
        assert!(s.iter().all(|l| (l.index.unwrap() - 2.0).abs() < 1e-8));
    }

    #[test]
    fn tower_respects_cap() {
        assert!(matches!(jones_tower(&pinching(2), 3, 10, &tol()), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn tunnel_rejects_wrong_expectation_value() {
        let ie = pinching(2);
        let a = ie.expectation().upper().ambient().clone();
        assert!(matches!(tunnel_construction(&ie, &a.unit(), &tol()), Err(Error::Precondition(_))));
    }
}
