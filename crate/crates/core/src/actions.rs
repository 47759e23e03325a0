//! Finite groups acting on multi-matrix algebras: fixed points, the averaging
//! expectation, inner automorphisms, Rohlin partitions and subgroup inclusions.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{is_projection, random_c64, sum_elements, AlgebraElement, MultiMatrixAlgebra};
use crate::error::{Error, Result};
use crate::expectation::ConditionalExpectation;
use crate::index::IndexedExpectation;
use crate::linalg::{self, C64};
use crate::subspace::{elements_matrix, Subalgebra, Subspace};
use crate::tolerance::ToleranceConfig;

/// A finite group given by its multiplication table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    unit: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Checks closure, associativity, a two-sided unit and inverses.
    pub fn new(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::GroupAxiom("empty table".into()));
        }
        if table.iter().any(|row| row.len() != n || row.iter().any(|&k| k >= n)) {
            return Err(Error::GroupAxiom("table is not a closed n x n table".into()));
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::GroupAxiom(format!("associativity fails at ({a},{b},{c})")));
                    }
                }
            }
        }
        let unit = (0..n)
            .find(|&u| (0..n).all(|g| table[u][g] == g && table[g][u] == g))
            .ok_or_else(|| Error::GroupAxiom("no unit".into()))?;
        let mut inverse = Vec::with_capacity(n);
        for g in 0..n {
            let inv = (0..n)
                .find(|&h| table[g][h] == unit && table[h][g] == unit)
                .ok_or_else(|| Error::GroupAxiom(format!("element {g} has no inverse")))?;
            inverse.push(inv);
        }
        Ok(Self { table, unit, inverse })
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        Self::new((0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect())
    }

    /// The group generated by composing the given permutations, which must
    /// already be closed; `(gh)(i) = g(h(i))`.
    pub fn from_permutations(perms: &[Vec<usize>]) -> Result<Self> {
        let find = |p: &Vec<usize>| perms.iter().position(|q| q == p);
        let mut table = Vec::with_capacity(perms.len());
        for g in perms {
            let mut row = Vec::with_capacity(perms.len());
            for h in perms {
                let gh: Vec<usize> = h.iter().map(|&i| g[i]).collect();
                row.push(find(&gh).ok_or_else(|| Error::GroupAxiom("permutations not closed".into()))?);
            }
            table.push(row);
        }
        Self::new(table)
    }

    /// `S_3` in lexicographic order of permutations of `{0,1,2}`; element 0 is
    /// the identity and element 2 swaps the first two points.
    pub fn symmetric3() -> Self {
        let perms = vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ];
        Self::from_permutations(&perms).expect("S3 is a group")
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g][h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    /// Checks that `h` is a subgroup: in range, contains the unit, closed
    /// under products and inverses, no repeats.
    pub fn check_subgroup(&self, h: &[usize]) -> Result<()> {
        let n = self.order();
        let mut seen = vec![false; n];
        for &x in h {
            if x >= n || seen[x] {
                return Err(Error::GroupAxiom(format!("subgroup element {x} out of range or repeated")));
            }
            seen[x] = true;
        }
        if !seen[self.unit] {
            return Err(Error::GroupAxiom("subgroup misses the unit".into()));
        }
        for &a in h {
            if !seen[self.inv(a)] {
                return Err(Error::GroupAxiom(format!("subgroup not closed under inverse at {a}")));
            }
            for &b in h {
                if !seen[self.mul(a, b)] {
                    return Err(Error::GroupAxiom(format!("subgroup not closed at ({a},{b})")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionDefects {
    pub multiplicativity: f64,
    pub adjoint: f64,
    pub unit: f64,
    /// Smallest singular value over all `α_g`.
    pub invertibility_margin: f64,
    pub composition: f64,
}

/// `α: G → Aut(A)`, with each `α_g` stored as a matrix on the canonical
/// (matrix-unit) coordinates of `A`.
#[derive(Debug, Clone)]
pub struct GroupAction {
    group: FiniteGroup,
    algebra: MultiMatrixAlgebra,
    maps: Vec<DMatrix<C64>>,
    defects: ActionDefects,
}

impl GroupAction {
    pub fn new(group: FiniteGroup, algebra: MultiMatrixAlgebra, maps: Vec<DMatrix<C64>>, tol: &ToleranceConfig) -> Result<Self> {
        let n = algebra.vector_dim();
        if maps.len() != group.order() {
            return Err(Error::Precondition(format!("{} maps for a group of order {}", maps.len(), group.order())));
        }
        if maps.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::Precondition(format!("action maps must be {n} x {n}")));
        }
        let mut act = Self {
            group,
            algebra,
            maps,
            defects: ActionDefects { multiplicativity: 0.0, adjoint: 0.0, unit: 0.0, invertibility_margin: 0.0, composition: 0.0 },
        };
        act.defects = act.measure(tol);
        let d = act.defects;
        for (axiom, v) in [
            ("multiplicativity", d.multiplicativity),
            ("adjoint", d.adjoint),
            ("unit", d.unit),
            ("composition", d.composition),
        ] {
            if !tol.ok(v) {
                return Err(Error::ActionAxiom { axiom, defect: v });
            }
        }
        if d.invertibility_margin <= tol.rank_tol {
            return Err(Error::ActionAxiom { axiom: "invertibility", defect: d.invertibility_margin });
        }
        Ok(act)
    }

    /// Tabulates `f(g, ·)` on the canonical basis.
    pub fn from_fn(
        group: FiniteGroup,
        algebra: MultiMatrixAlgebra,
        f: impl Fn(usize, &AlgebraElement) -> AlgebraElement,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let basis = algebra.canonical_basis();
        let maps = (0..group.order())
            .map(|g| {
                let imgs: Vec<AlgebraElement> = basis.iter().map(|b| f(g, b)).collect();
                elements_matrix(&algebra, &imgs)
            })
            .collect();
        Self::new(group, algebra, maps, tol)
    }

    /// `G` on `C(G)` by left translation, `α_g(δ_h) = δ_{gh}`.
    pub fn translation(group: FiniteGroup, tol: &ToleranceConfig) -> Result<Self> {
        let n = group.order();
        let algebra = MultiMatrixAlgebra::commutative(n);
        let g2 = group.clone();
        Self::from_fn(
            group,
            algebra.clone(),
            move |g, x| {
                let mut diag = vec![C64::new(0.0, 0.0); n];
                for h in 0..n {
                    diag[g2.mul(g, h)] = x.block(h)[(0, 0)];
                }
                let blocks = diag.into_iter().map(|c| DMatrix::from_element(1, 1, c)).collect();
                algebra.from_blocks(blocks).expect("commutative blocks")
            },
            tol,
        )
    }

    /// `α_g = Ad u_g`.
    pub fn inner(group: FiniteGroup, algebra: MultiMatrixAlgebra, unitaries: Vec<AlgebraElement>, tol: &ToleranceConfig) -> Result<Self> {
        if unitaries.len() != group.order() {
            return Err(Error::Precondition("one unitary per group element".into()));
        }
        Self::from_fn(group, algebra, |g, x| &(&unitaries[g] * x) * &unitaries[g].adjoint(), tol)
    }

    /// The trivial action of `group`.
    pub fn trivial(group: FiniteGroup, algebra: MultiMatrixAlgebra, tol: &ToleranceConfig) -> Result<Self> {
        let n = algebra.vector_dim();
        let maps = vec![DMatrix::identity(n, n); group.order()];
        Self::new(group, algebra, maps, tol)
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        &self.algebra
    }

    pub fn map_matrix(&self, g: usize) -> &DMatrix<C64> {
        &self.maps[g]
    }

    pub fn defects(&self) -> ActionDefects {
        self.defects
    }

    pub fn apply(&self, g: usize, x: &AlgebraElement) -> AlgebraElement {
        self.algebra.from_vector(&(&self.maps[g] * x.to_vector()))
    }

    /// `(1/|S|) Σ_{s ∈ S} α_s(x)`.
    pub fn average_over(&self, subset: &[usize], x: &AlgebraElement) -> AlgebraElement {
        let imgs: Vec<AlgebraElement> = subset.iter().map(|&g| self.apply(g, x)).collect();
        sum_elements(&self.algebra, &imgs).scale_real(1.0 / subset.len() as f64)
    }

    fn measure(&self, tol: &ToleranceConfig) -> ActionDefects {
        let basis = self.algebra.canonical_basis();
        let checks: Vec<AlgebraElement> = if tol.full_check(basis.len()) {
            basis.clone()
        } else {
            let mut rng = tol.rng(0xac);
            (0..tol.spot_checks).map(|_| self.algebra.random_element(&mut rng)).collect()
        };
        let unit = self.algebra.unit();
        let n = self.algebra.vector_dim();
        let mut d = ActionDefects {
            multiplicativity: 0.0,
            adjoint: 0.0,
            unit: 0.0,
            invertibility_margin: f64::INFINITY,
            composition: 0.0,
        };
        for g in 0..self.group.order() {
            let imgs: Vec<AlgebraElement> = checks.iter().map(|x| self.apply(g, x)).collect();
            for (x, ax) in checks.iter().zip(&imgs) {
                let scale = x.norm().max(1.0);
                for (y, ay) in checks.iter().zip(&imgs) {
                    let lhs = self.apply(g, &(x * y));
                    d.multiplicativity = d.multiplicativity.max((&lhs - &(ax * ay)).norm() / (scale * y.norm().max(1.0)));
                }
                d.adjoint = d.adjoint.max(self.apply(g, &x.adjoint()).distance(&ax.adjoint()) / scale);
            }
            d.unit = d.unit.max(self.apply(g, &unit).distance(&unit));
            d.invertibility_margin = d.invertibility_margin.min(linalg::smallest_singular_value(&self.maps[g]));
            for h in 0..self.group.order() {
                let gh = self.group.mul(g, h);
                let c = (&self.maps[g] * &self.maps[h] - &self.maps[gh]).norm();
                d.composition = d.composition.max(c);
            }
        }
        let e = self.group.unit();
        d.composition = d.composition.max((&self.maps[e] - DMatrix::<C64>::identity(n, n)).norm());
        d
    }

    /// `A^α`, the joint kernel of `α_g − id`.
    pub fn fixed_point_algebra(&self, tol: &ToleranceConfig) -> Result<Subalgebra> {
        self.fixed_points_of(&(0..self.group.order()).collect::<Vec<_>>(), tol)
    }

    /// Fixed points of the elements in `subset`.
    pub fn fixed_points_of(&self, subset: &[usize], tol: &ToleranceConfig) -> Result<Subalgebra> {
        let n = self.algebra.vector_dim();
        let mut stacked = DMatrix::<C64>::zeros(n * subset.len().max(1), n);
        for (k, &g) in subset.iter().enumerate() {
            let m = &self.maps[g] - DMatrix::<C64>::identity(n, n);
            stacked.view_mut((k * n, 0), (n, n)).copy_from(&m);
        }
        let ns = linalg::null_space(&stacked, tol.rank_tol);
        let space = Subspace::from_vectors(&self.algebra, &ns, tol.rank_tol)?;
        Subalgebra::from_basis(&self.algebra, &space.basis(), tol)
    }

    /// `E(x) = (1/|G|) Σ_g α_g(x)` onto the fixed points, verified.
    pub fn canonical_expectation(&self, tol: &ToleranceConfig) -> Result<ConditionalExpectation> {
        let fixed = self.fixed_point_algebra(tol)?;
        let all: Vec<usize> = (0..self.group.order()).collect();
        ConditionalExpectation::from_fn(Subalgebra::full(&self.algebra), fixed, |x| self.average_over(&all, x), tol)
    }

    /// A unitary `u` with `α_g = Ad u`, if one exists.
    ///
    /// The intertwiners `{u : u a = α_g(a) u}` form a linear space; a random
    /// element of it is invertible exactly when some element is, and its
    /// polar part then implements `α_g`.
    pub fn is_inner(&self, g: usize, tol: &ToleranceConfig) -> Option<AlgebraElement> {
        let amb = &self.algebra;
        let n = amb.vector_dim();
        let gens = Subalgebra::full(amb).generators().to_vec();
        let basis = amb.canonical_basis();
        let mut stacked = DMatrix::<C64>::zeros(n * gens.len(), n);
        for (k, a) in gens.iter().enumerate() {
            let aa = self.apply(g, a);
            for (j, u) in basis.iter().enumerate() {
                let c = (&(u * a) - &(&aa * u)).to_vector();
                stacked.view_mut((k * n, j), (n, 1)).copy_from(&c);
            }
        }
        let ns = linalg::null_space(&stacked, tol.rank_tol);
        if ns.ncols() == 0 {
            return None;
        }
        let mut rng = tol.rng(0x1a + g as u64);
        let coeffs = nalgebra::DVector::from_fn(ns.ncols(), |_, _| random_c64(&mut rng));
        let w = amb.from_vector(&(&ns * coeffs));
        let smin = w
            .blocks()
            .iter()
            .map(linalg::smallest_singular_value)
            .fold(f64::INFINITY, f64::min);
        if smin <= tol.rank_tol * w.norm().max(1.0) {
            return None;
        }
        let u = w.polar_unitary();
        let worst = basis
            .iter()
            .map(|a| (&(&(&u * a) * &u.adjoint()) - &self.apply(g, a)).norm())
            .fold(0.0, f64::max);
        if tol.ok(worst) { Some(u) } else { None }
    }

    fn order_f64(&self) -> f64 {
        self.group.order() as f64
    }
}

/// `{e_g}` indexed by group element.
#[derive(Debug, Clone, PartialEq)]
pub struct RohlinPartition {
    pub projections: Vec<AlgebraElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RohlinPartitionReport {
    pub projection: f64,
    /// `‖Σ_g e_g − 1‖`
    pub summation: f64,
    /// Largest `‖[e_g, a]‖` over generators `a` of `A`.
    pub centrality: f64,
    /// Largest `‖α_g(e_h) − e_{gh}‖`.
    pub equivariance: f64,
    pub pass: bool,
}

impl RohlinPartitionReport {
    pub fn max_defect(&self) -> f64 {
        self.projection.max(self.summation).max(self.centrality).max(self.equivariance)
    }
}

pub fn rohlin_partition_check(act: &GroupAction, partition: &RohlinPartition, tol: &ToleranceConfig) -> Result<RohlinPartitionReport> {
    let amb = act.algebra();
    if partition.projections.len() != act.group().order() {
        return Err(Error::Precondition(format!(
            "partition has {} projections for a group of order {}",
            partition.projections.len(),
            act.group().order()
        )));
    }
    for e in &partition.projections {
        amb.conforms(e)?;
    }
    let full = Subalgebra::full(amb);
    let mut r = RohlinPartitionReport { projection: 0.0, summation: 0.0, centrality: 0.0, equivariance: 0.0, pass: false };
    for e in &partition.projections {
        r.projection = r.projection.max(is_projection(e, tol).max_defect());
        r.centrality = r.centrality.max(full.commutation_defect(e));
    }
    r.summation = (&sum_elements(amb, &partition.projections) - &amb.unit()).norm();
    let grp = act.group();
    for g in 0..grp.order() {
        for h in 0..grp.order() {
            let d = (&act.apply(g, &partition.projections[h]) - &partition.projections[grp.mul(g, h)]).norm();
            r.equivariance = r.equivariance.max(d);
        }
    }
    r.pass = tol.ok(r.max_defect());
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RohlinCriterionReport {
    /// `‖E(e) − (1/|G|)·1‖`
    pub expectation_defect: f64,
    pub projection_defect: f64,
    pub centrality_defect: f64,
    /// The check of `{α_g(e)}`, run only when the expectation condition holds.
    pub partition: Option<RohlinPartitionReport>,
    pub pass: bool,
}

/// Tests `E(e) = (1/|G|)·1` for the averaging expectation and, when it holds,
/// checks `e_g = α_g(e)` as a Rohlin partition.
pub fn rohlin_criterion(act: &GroupAction, e: &AlgebraElement, tol: &ToleranceConfig) -> Result<(Option<RohlinPartition>, RohlinCriterionReport)> {
    let amb = act.algebra();
    amb.conforms(e)?;
    let all: Vec<usize> = (0..act.group().order()).collect();
    let target = amb.unit().scale_real(1.0 / act.order_f64());
    let expectation_defect = (&act.average_over(&all, e) - &target).norm();
    let projection_defect = is_projection(e, tol).max_defect();
    let centrality_defect = Subalgebra::full(amb).commutation_defect(e);
    let (partition, report) = if tol.ok(expectation_defect) {
        let p = RohlinPartition { projections: all.iter().map(|&g| act.apply(g, e)).collect() };
        let r = rohlin_partition_check(act, &p, tol)?;
        (Some(p), Some(r))
    } else {
        (None, None)
    };
    let pass = tol.ok(expectation_defect)
        && tol.ok(projection_defect)
        && tol.ok(centrality_defect)
        && report.as_ref().is_some_and(|r| r.pass);
    Ok((partition, RohlinCriterionReport { expectation_defect, projection_defect, centrality_defect, partition: report, pass }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgroupReport {
    pub group_order: usize,
    pub subgroup_order: usize,
    pub upper_dim: usize,
    pub lower_dim: usize,
    pub index_f: Option<f64>,
    /// `|Index F − |G|/|H||`
    pub index_error: f64,
    /// `‖F(e_H) − (Index F)^{-1}‖`
    pub f_eh_defect: f64,
    /// `‖E(e_H) − (|H|/|G|)·1‖`
    pub e_eh_defect: f64,
    /// `max ‖E(x) − F(E_H(x))‖`
    pub composition_defect: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct SubgroupInclusion {
    /// `A = Q^H`
    pub upper: Subalgebra,
    /// `P = Q^G`
    pub lower: Subalgebra,
    /// `E_H: Q → Q^H`
    pub e_h_expectation: ConditionalExpectation,
    /// `F = E|_{Q^H}: Q^H → Q^G`
    pub f: IndexedExpectation,
    /// `e_H = Σ_{h ∈ H} e_h`
    pub e_h: AlgebraElement,
    pub report: SubgroupReport,
}

/// `Q^G ⊂ Q^H` with `F = E` restricted, and `e_H = Σ_{h∈H} e_h` built from a
/// Rohlin partition of the action.
pub fn subgroup_inclusion(
    act: &GroupAction,
    h: &[usize],
    partition: &RohlinPartition,
    tol: &ToleranceConfig,
) -> Result<SubgroupInclusion> {
    let grp = act.group();
    grp.check_subgroup(h)?;
    let pr = rohlin_partition_check(act, partition, tol)?;
    if !pr.pass {
        return Err(Error::Precondition(format!("Rohlin partition check failed (defect {:.3e})", pr.max_defect())));
    }
    let amb = act.algebra();
    let all: Vec<usize> = (0..grp.order()).collect();
    let upper = act.fixed_points_of(h, tol)?;
    let lower = act.fixed_point_algebra(tol)?;
    let full = Subalgebra::full(amb);
    let e_h_expectation = ConditionalExpectation::from_fn(full.clone(), upper.clone(), |x| act.average_over(h, x), tol)?;
    let f_map = ConditionalExpectation::from_fn(upper.clone(), lower.clone(), |x| act.average_over(&all, x), tol)?;
    let f = IndexedExpectation::new(&f_map, tol)?;
    let e_h = sum_elements(amb, h.iter().map(|&k| &partition.projections[k]));

    let expected = grp.order() as f64 / h.len() as f64;
    let index_f = f.index().scalar();
    let index_error = index_f.map(|v| (v - expected).abs()).unwrap_or(f64::INFINITY);
    let f_eh_defect = (&f.apply(&e_h) - &f.index().inverse()).norm();
    let target = amb.unit().scale_real(h.len() as f64 / grp.order() as f64);
    let e_eh_defect = (&act.average_over(&all, &e_h) - &target).norm();
    let mut composition_defect: f64 = 0.0;
    for x in full.space().check_elements(tol, 0x41) {
        let lhs = act.average_over(&all, &x);
        let rhs = f.apply(&e_h_expectation.apply(&x));
        composition_defect = composition_defect.max(lhs.distance(&rhs) / x.frobenius_norm().max(1.0));
    }
    let pass = tol.close(index_error, expected) && tol.ok(f_eh_defect) && tol.ok(e_eh_defect) && tol.ok(composition_defect);
    let report = SubgroupReport {
        group_order: grp.order(),
        subgroup_order: h.len(),
        upper_dim: upper.dim(),
        lower_dim: lower.dim(),
        index_f,
        index_error,
        f_eh_defect,
        e_eh_defect,
        composition_defect,
        pass,
    };
    Ok(SubgroupInclusion { upper, lower, e_h_expectation, f, e_h, report })
}
