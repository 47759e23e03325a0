//! The Rohlin property and approximate representability for conditional
//! expectations, read at the exact level (`A_∞` is replaced by the center),
//! together with the duality harness, relative commutants and the β-map.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{is_projection, random_c64, sum_elements, AlgebraElement};
use crate::basic::{build_basic_construction, BasicConstruction};
use crate::error::{Error, Result};
use crate::expectation::{verify_expectation, ConditionalExpectation};
use crate::index::IndexedExpectation;
use crate::linalg::{self, C64};
use crate::subspace::{elements_matrix, Subalgebra};
use crate::tolerance::ToleranceConfig;

/// Smallest singular value of `x ↦ xe` on `s`, in trace-orthonormal coordinates.
pub fn right_multiplication_margin(s: &Subalgebra, e: &AlgebraElement) -> f64 {
    let prods: Vec<AlgebraElement> = s.basis().iter().map(|b| b * e).collect();
    linalg::smallest_singular_value(&elements_matrix(s.ambient(), &prods))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RohlinReport {
    pub projection: f64,
    /// Distance from `e` to `A`.
    pub membership: f64,
    /// Largest `‖[e, a]‖` over generators of `A`.
    pub centrality: f64,
    /// `‖E(e) − (Index E)^{-1}‖`
    pub expectation: f64,
    /// Margin of `x ↦ xe` on `A`. Zero whenever `e` is a central projection
    /// other than `1`, so it is reported but does not decide `pass`.
    pub injectivity_margin: f64,
    /// Margin of `x ↦ xe` on `P`; this one gates `pass`.
    pub injectivity_margin_lower: f64,
    pub pass: bool,
}

impl RohlinReport {
    pub fn max_defect(&self) -> f64 {
        self.projection.max(self.membership).max(self.centrality).max(self.expectation)
    }
}

pub fn rohlin_check(ie: &IndexedExpectation, e: &AlgebraElement, tol: &ToleranceConfig) -> Result<RohlinReport> {
    let ex = ie.expectation();
    let upper = ex.upper();
    upper.ambient().conforms(e)?;
    let projection = is_projection(e, tol).max_defect();
    let membership = upper.space().distance(e);
    let centrality = upper.commutation_defect(e);
    let expectation = (&ex.apply(e) - &ie.index().inverse()).norm();
    let injectivity_margin = right_multiplication_margin(upper, e);
    let injectivity_margin_lower = right_multiplication_margin(ex.lower(), e);
    let mut r = RohlinReport {
        projection,
        membership,
        centrality,
        expectation,
        injectivity_margin,
        injectivity_margin_lower,
        pass: false,
    };
    r.pass = tol.ok(r.max_defect()) && injectivity_margin_lower > tol.rank_tol;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxRepReport {
    pub projection: f64,
    /// Distance from `e` to `P`.
    pub membership: f64,
    /// Largest `‖[e, p]‖` over generators of `P`.
    pub centrality: f64,
    /// `max ‖e x e − E(x) e‖` over `A`.
    pub module_identity: f64,
    /// Margin of `x ↦ xe` on `P`. Zero whenever `e` is central in `P` and
    /// not `1`, so it is reported but does not decide `pass`.
    pub injectivity_margin: f64,
    /// Margin of `x ↦ xe` on `A`, reported alongside.
    pub injectivity_margin_upper: f64,
    /// `‖e‖`; a zero witness satisfies the module identity vacuously.
    pub norm: f64,
    pub pass: bool,
}

impl ApproxRepReport {
    pub fn max_defect(&self) -> f64 {
        self.projection.max(self.membership).max(self.centrality).max(self.module_identity)
    }
}

pub fn approx_rep_check(ex: &ConditionalExpectation, e: &AlgebraElement, tol: &ToleranceConfig) -> Result<ApproxRepReport> {
    let upper = ex.upper();
    let lower = ex.lower();
    upper.ambient().conforms(e)?;
    let projection = is_projection(e, tol).max_defect();
    let membership = lower.space().distance(e);
    let centrality = lower.commutation_defect(e);
    let mut module_identity: f64 = 0.0;
    for x in upper.space().check_elements(tol, 0x3e) {
        let lhs = &(e * &x) * e;
        let rhs = &ex.apply(&x) * e;
        module_identity = module_identity.max((&lhs - &rhs).norm() / x.norm().max(1.0));
    }
    let mut r = ApproxRepReport {
        projection,
        membership,
        centrality,
        module_identity,
        injectivity_margin: right_multiplication_margin(lower, e),
        injectivity_margin_upper: right_multiplication_margin(upper, e),
        norm: e.norm(),
        pass: false,
    };
    r.pass = tol.ok(r.max_defect()) && r.norm > 0.5;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForwardReport {
    pub rohlin: RohlinReport,
    /// `‖e_P λ(e) e_P − λ(Index E)^{-1} e_P‖`
    pub jones_sandwich: f64,
    /// `‖λ(e) e_P λ(e) − λ(Index E)^{-1} λ(e)‖`
    pub witness_sandwich: f64,
    /// `max ‖λ(e) z λ(e) − Ê(z) λ(e)‖` over `B`.
    pub module_identity: f64,
    pub approx_rep: ApproxRepReport,
    pub pass: bool,
}

impl ForwardReport {
    pub fn max_defect(&self) -> f64 {
        self.jones_sandwich
            .max(self.witness_sandwich)
            .max(self.module_identity)
            .max(self.approx_rep.max_defect())
    }
}

/// From a Rohlin projection `e` for `E`, checks that `λ(e)` makes `Ê`
/// approximately representable. Returns `λ(e)` with the report.
pub fn duality_forward(bc: &BasicConstruction, e: &AlgebraElement, tol: &ToleranceConfig) -> Result<(AlgebraElement, ForwardReport)> {
    let rohlin = rohlin_check(bc.source(), e, tol)?;
    if !rohlin.pass {
        return Err(Error::Precondition(format!(
            "e is not a Rohlin projection (defect {:.3e}, margin on P {:.3e})",
            rohlin.max_defect(),
            rohlin.injectivity_margin_lower
        )));
    }
    let le = bc.lambda(e);
    let ep = bc.jones_projection();
    let linv = bc.lambda(&bc.source().index().inverse());
    let jones_sandwich = (&(&(ep * &le) * ep) - &(&linv * ep)).norm();
    let witness_sandwich = (&(&(&le * ep) * &le) - &(&linv * &le)).norm();
    let mut module_identity: f64 = 0.0;
    for z in bc.algebra().space().check_elements(tol, 0xf0) {
        let lhs = &(&le * &z) * &le;
        let rhs = &bc.dual().apply(&z) * &le;
        module_identity = module_identity.max((&lhs - &rhs).norm() / z.norm().max(1.0));
    }
    let approx_rep = approx_rep_check(bc.dual(), &le, tol)?;
    let mut r = ForwardReport { rohlin, jones_sandwich, witness_sandwich, module_identity, approx_rep, pass: false };
    r.pass = approx_rep.pass && tol.ok(r.max_defect());
    Ok((le, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackwardReport {
    pub approx_rep: ApproxRepReport,
    /// `f` checked as a Rohlin projection for `Ê`.
    pub rohlin: RohlinReport,
    pub pass: bool,
}

/// From an approximately representable witness `e ∈ P` for `E`, builds
/// `f = Σ_i λ(u_i) λ(e) e_P λ(v_i)` and checks it as a Rohlin projection
/// for `Ê`.
pub fn duality_backward(bc: &BasicConstruction, e: &AlgebraElement, tol: &ToleranceConfig) -> Result<(AlgebraElement, BackwardReport)> {
    let approx_rep = approx_rep_check(bc.source().expectation(), e, tol)?;
    if !approx_rep.pass {
        return Err(Error::Precondition(format!(
            "e is not an approximately representable witness (defect {:.3e})",
            approx_rep.max_defect()
        )));
    }
    let f = backward_projection(bc, bc.source(), e);
    let dual = bc.dual_indexed(tol)?;
    let rohlin = rohlin_check(&dual, &f, tol)?;
    Ok((f, BackwardReport { approx_rep, rohlin, pass: rohlin.pass }))
}

/// `Σ_i λ(u_i) λ(e) e_P λ(v_i)` for an arbitrary quasi-basis.
pub fn backward_projection(bc: &BasicConstruction, ie: &IndexedExpectation, e: &AlgebraElement) -> AlgebraElement {
    let lep = &bc.lambda(e) * bc.jones_projection();
    let terms: Vec<AlgebraElement> = ie
        .quasi_basis()
        .pairs()
        .iter()
        .map(|(u, v)| &(&bc.lambda(u) * &lep) * &bc.lambda(v))
        .collect();
    sum_elements(bc.operator_algebra(), &terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoverReport {
    pub rohlin: RohlinReport,
    /// Distance from `λ^{-1}` of the recovered operator to `λ(A)`.
    pub pullback_residual: f64,
    /// `‖λ(e) e_P − f e_P‖`
    pub jones_agreement: f64,
    pub approx_rep: ApproxRepReport,
    pub pass: bool,
}

/// `e = λ^{-1}((Index E)·Ê(f e_P))` from a Rohlin projection `f` for `Ê`.
pub fn recover_rohlin_projection(bc: &BasicConstruction, f: &AlgebraElement, tol: &ToleranceConfig) -> Result<(AlgebraElement, RecoverReport)> {
    let dual = bc.dual_indexed(tol)?;
    let rohlin = rohlin_check(&dual, f, tol)?;
    if !rohlin.pass {
        return Err(Error::Precondition(format!("f is not a Rohlin projection for the dual (defect {:.3e})", rohlin.max_defect())));
    }
    let ep = bc.jones_projection();
    let op = bc.lambda_index() * &bc.dual().apply(&(f * ep));
    let pullback_residual = bc.image().space().distance(&op);
    let e = bc.lambda_inverse(&op);
    let jones_agreement = (&(&bc.lambda(&e) * ep) - &(f * ep)).norm();
    let approx_rep = approx_rep_check(bc.source().expectation(), &e, tol)?;
    let pass = approx_rep.pass && tol.ok(pullback_residual) && tol.ok(jones_agreement);
    Ok((e, RecoverReport { rohlin, pullback_residual, jones_agreement, approx_rep, pass }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTripReport {
    pub forward: ForwardReport,
    pub backward: BackwardReport,
    pub recover: RecoverReport,
    /// `‖recovered − λ(e)‖` in the first basic construction.
    pub witness_error: f64,
    /// `‖λ^{-1}(recovered) − e‖` in `A`.
    pub source_error: f64,
    pub pass: bool,
}

/// Forward at the first level, then backward and recovery one level up,
/// ending with the original Rohlin projection.
pub fn duality_round_trip(ie: &IndexedExpectation, e: &AlgebraElement, tol: &ToleranceConfig) -> Result<RoundTripReport> {
    let bc1 = build_basic_construction(ie, tol)?;
    let (le, forward) = duality_forward(&bc1, e, tol)?;
    let dual1 = bc1.dual_indexed(tol)?;
    let bc2 = build_basic_construction(&dual1, tol)?;
    let (f, backward) = duality_backward(&bc2, &le, tol)?;
    let (back, recover) = recover_rohlin_projection(&bc2, &f, tol)?;
    let witness_error = (&back - &le).norm();
    let source_error = (&bc1.lambda_inverse(&back) - e).norm();
    let pass = forward.pass && backward.pass && recover.pass && tol.ok(witness_error) && tol.ok(source_error);
    Ok(RoundTripReport { forward, backward, recover, witness_error, source_error, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeCommutantReport {
    pub dim: usize,
    /// How far `P′ ∩ A` sticks out of `P`.
    pub containment_defect: f64,
    pub contained_in_lower: bool,
    pub irreducible: bool,
}

/// `P′ ∩ A`, its dimension, and whether it lies in `P`.
pub fn relative_commutant_report(upper: &Subalgebra, lower: &Subalgebra, tol: &ToleranceConfig) -> Result<RelativeCommutantReport> {
    let rc = upper.relative_commutant(lower, tol)?;
    let containment_defect = lower.space().containment_defect(rc.space());
    Ok(RelativeCommutantReport {
        dim: rc.dim(),
        containment_defect,
        contained_in_lower: containment_defect <= tol.eq_tol,
        irreducible: rc.dim() == 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaReport {
    /// `max ‖β(x) e − x e‖`
    pub intertwining: f64,
    pub unital: f64,
    pub adjoint: f64,
    pub multiplicativity: f64,
    /// Margin of `β` as a linear map on `A`; reported only, for the same
    /// reason as [`RohlinReport::injectivity_margin`].
    pub injectivity_margin: f64,
    /// `max ‖β(p) − p‖` over `P`.
    pub fixes_lower: f64,
    /// Largest gap between `β(x)` and a fresh solution of `y e = x e`, `y ∈ P`.
    pub uniqueness: f64,
    /// Smallest singular value of `y ↦ y e` on `P`; positive means the
    /// solution `y` is unique.
    pub uniqueness_margin: f64,
    pub pass: bool,
}

impl BetaReport {
    pub fn max_defect(&self) -> f64 {
        self.intertwining
            .max(self.unital)
            .max(self.adjoint)
            .max(self.multiplicativity)
            .max(self.fixes_lower)
            .max(self.uniqueness)
    }
}

/// `β(x) = (Index E)·E(xe)`, the homomorphism `A → P` with `β(x) e = x e`.
pub fn beta(ie: &IndexedExpectation, e: &AlgebraElement, x: &AlgebraElement) -> AlgebraElement {
    ie.index().element() * &ie.apply(&(x * e))
}

pub fn beta_map(ie: &IndexedExpectation, e: &AlgebraElement, tol: &ToleranceConfig) -> Result<BetaReport> {
    let rohlin = rohlin_check(ie, e, tol)?;
    if !rohlin.pass {
        return Err(Error::Precondition(format!("e is not a Rohlin projection (defect {:.3e})", rohlin.max_defect())));
    }
    let ex = ie.expectation();
    let upper = ex.upper();
    let lower = ex.lower();
    let amb = upper.ambient();
    let checks = upper.space().check_elements(tol, 0xbe);
    let images: Vec<AlgebraElement> = checks.iter().map(|x| beta(ie, e, x)).collect();

    let mut r = BetaReport {
        intertwining: 0.0,
        unital: beta(ie, e, &amb.unit()).distance(&amb.unit()),
        adjoint: 0.0,
        multiplicativity: 0.0,
        injectivity_margin: 0.0,
        fixes_lower: 0.0,
        uniqueness: 0.0,
        uniqueness_margin: right_multiplication_margin(lower, e),
        pass: false,
    };
    // Fresh solve of y e = x e over P, by least squares in P coordinates.
    let pe: Vec<AlgebraElement> = lower.basis().iter().map(|p| p * e).collect();
    let pe_mat = elements_matrix(amb, &pe);
    let solver = linalg::pinv(&pe_mat, tol.rank_tol);
    for (x, bx) in checks.iter().zip(&images) {
        let s = x.norm().max(1.0);
        let xe = x * e;
        r.intertwining = r.intertwining.max((&(bx * e) - &xe).norm() / s);
        r.adjoint = r.adjoint.max(beta(ie, e, &x.adjoint()).distance(&bx.adjoint()) / s);
        let y = lower.element(&(&solver * xe.to_vector()));
        r.uniqueness = r.uniqueness.max(y.distance(bx) / s);
        for (z, bz) in checks.iter().zip(&images) {
            let lhs = beta(ie, e, &(x * z));
            r.multiplicativity = r.multiplicativity.max((&lhs - &(bx * bz)).norm() / (s * z.norm().max(1.0)));
        }
    }
    for p in lower.space().check_elements(tol, 0xbf) {
        r.fixes_lower = r.fixes_lower.max(beta(ie, e, &p).distance(&p) / p.norm().max(1.0));
    }
    let basis_images: Vec<AlgebraElement> = upper.basis().iter().map(|b| beta(ie, e, b)).collect();
    r.injectivity_margin = linalg::smallest_singular_value(&elements_matrix(amb, &basis_images));
    if !tol.ok(r.multiplicativity) {
        return Err(Error::Verification { check: "β multiplicativity".into(), defect: r.multiplicativity });
    }
    r.pass = tol.ok(r.max_defect()) && r.uniqueness_margin > tol.rank_tol;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniquenessSearch {
    pub candidates: usize,
    /// Candidates that passed verification as expectations onto `P`.
    pub verified: usize,
    /// Verified candidates that differ from `E`.
    pub distinct: usize,
    /// Largest distance from `E` among verified candidates.
    pub max_distance: f64,
}

/// Sampled search for another conditional expectation onto the same `P`.
///
/// Two families are tried: trace-orthogonal projections for random positive
/// central weights on `A`, which are genuine expectations whenever they
/// exist, and `E + ε·D` with `D` a random map from `A` into `P` vanishing on
/// `P`.
pub fn expectation_uniqueness_search(ex: &ConditionalExpectation, trials: usize, tol: &ToleranceConfig) -> Result<UniquenessSearch> {
    let upper = ex.upper();
    let lower = ex.lower();
    let center = upper.center(tol)?;
    let q = upper.space().basis_matrix();
    let c = upper.space().coords_of_vectors(lower.space().basis_matrix());
    let d = upper.dim();
    let mut rng = tol.rng(0x0e);
    let mut out = UniquenessSearch { candidates: 0, verified: 0, distinct: 0, max_distance: 0.0 };
    let scale = ex.map_matrix().norm().max(1.0);
    for t in 0..trials {
        let map = if t % 2 == 0 {
            // Central weight h = Σ w_k z_k* z_k over a center basis, made positive.
            let z = center.space().random_element(&mut rng);
            let h = &(&z.adjoint() * &z) + &upper.ambient().unit().scale_real(0.1);
            let hq: Vec<AlgebraElement> = upper.basis().iter().map(|b| &h * b).collect();
            let g = q.adjoint() * elements_matrix(upper.ambient(), &hq);
            let small = c.adjoint() * &g * &c;
            match small.try_inverse() {
                Some(inv) => &c * inv * c.adjoint() * g,
                None => continue,
            }
        } else {
            let psi = DMatrix::from_fn(c.ncols(), d, |_, _| random_c64(&mut rng));
            let kill = DMatrix::<C64>::identity(d, d) - ex.map_matrix();
            let dmap = &c * psi * kill;
            ex.map_matrix() + dmap * linalg::re(1e-3)
        };
        out.candidates += 1;
        let cand = ConditionalExpectation::new_unchecked(upper.clone(), lower.clone(), map)?;
        if verify_expectation(&cand, tol).pass {
            out.verified += 1;
            let dist = (cand.map_matrix() - ex.map_matrix()).norm();
            out.max_distance = out.max_distance.max(dist);
            if !tol.close(dist, scale) {
                out.distinct += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{FiniteGroup, GroupAction};
    use crate::algebra::MultiMatrixAlgebra;
    use crate::expectation::uniform_trace_expectation;
    use crate::subspace::generated_subalgebra;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn swap() -> (IndexedExpectation, AlgebraElement) {
        let a = MultiMatrixAlgebra::new(vec![2, 2]).unwrap();
        let a2 = a.clone();
        let act = GroupAction::from_fn(
            FiniteGroup::cyclic(2).unwrap(),
            a.clone(),
            move |g, x| {
                if g == 0 {
                    x.clone()
                } else {
                    a2.from_blocks(vec![x.block(1).clone(), x.block(0).clone()]).unwrap()
                }
            },
            &tol(),
        )
        .unwrap();
        let e = act.canonical_expectation(&tol()).unwrap();
        (IndexedExpectation::new(&e, &tol()).unwrap(), a.block_unit(0))
    }

    #[test]
    fn swap_is_rohlin() {
        let (ie, e) = swap();
        let r = rohlin_check(&ie, &e, &tol()).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn pinching_is_not_rohlin() {
        let a = MultiMatrixAlgebra::full_matrix(2);
        let units: Vec<AlgebraElement> = (0..2).map(|i| a.matrix_unit(0, i, i)).collect();
        let p = generated_subalgebra(&a, &units, &tol()).unwrap();
        let e = uniform_trace_expectation(&Subalgebra::full(&a), &p, &tol()).unwrap();
        let ie = IndexedExpectation::new(&e, &tol()).unwrap();
        for cand in [a.unit(), a.zero()] {
            let r = rohlin_check(&ie, &cand, &tol()).unwrap();
            assert!(!r.pass);
            assert!(r.expectation >= 0.5 - 1e-9);
        }
    }

    #[test]
    fn swap_round_trip() {
        let (ie, e) = swap();
        let r = duality_round_trip(&ie, &e, &tol()).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.source_error < 1e-9);
    }

    #[test]
    fn beta_on_swap() {
        let (ie, e) = swap();
        let r = beta_map(&ie, &e, &tol()).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn unit_is_not_approx_rep_for_proper_inclusion() {
        let (ie, _) = swap();
        let a = ie.expectation().upper().ambient().clone();
        let r = approx_rep_check(ie.expectation(), &a.unit(), &tol()).unwrap();
        assert!(!r.pass && r.module_identity > 0.1);
    }
}
