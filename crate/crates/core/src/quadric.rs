//! Points and maximals of the parabolic quadric Q(2d, q) and their incidence.

use std::collections::HashMap;
use std::collections::HashSet;

use thiserror::Error;

use crate::exec::Exec;
use crate::gf::Fe;
use crate::linform::{axpy, leading_index, projective_vectors, scale, Matrix, StandardModel, Subspace, Vector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadricError {
    #[error("subspace is not a maximal totally singular subspace")]
    NotMaximal,
}

/// A totally singular 1-space, represented by the vector whose first nonzero coordinate is 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjectivePoint {
    rep: Vector,
}

impl ProjectivePoint {
    pub fn rep(&self) -> &[Fe] {
        &self.rep
    }

    /// Caller guarantees `rep` is normalized.
    pub(crate) fn from_normalized(rep: Vector) -> ProjectivePoint {
        debug_assert_eq!(rep.iter().find(|a| !a.is_zero()), Some(&Fe::ONE));
        ProjectivePoint { rep }
    }
}

/// `s + 1 = (q^d - 1)/(q - 1)`, points per maximal.
pub fn points_per_maximal(q: u64, d: u32) -> u64 {
    (q.pow(d) - 1) / (q - 1)
}

/// `t + 1 = ∏_{i=1}^{d-1} (q^i + 1)`, maximals per point.
pub fn maximals_per_point(q: u64, d: u32) -> u64 {
    (1..d).map(|i| q.pow(i) + 1).product()
}

/// `(q^{2d} - 1)/(q - 1)`
pub fn point_count(q: u64, d: u32) -> u64 {
    (q.pow(2 * d) - 1) / (q - 1)
}

/// `∏_{i=1}^{d} (q^i + 1)`
pub fn maximal_count(q: u64, d: u32) -> u64 {
    (1..=d).map(|i| q.pow(i) + 1).product()
}

/// All singular points in canonical (lexicographic) order.
pub fn enumerate_points(model: &StandardModel) -> Vec<ProjectivePoint> {
    projective_vectors(model.field(), model.dim())
        .into_iter()
        .filter(|v| model.kappa(v).is_zero())
        .map(ProjectivePoint::from_normalized)
        .collect()
}

fn bitset_words(n: usize) -> usize {
    n.div_ceil(64)
}

/// Collinearity and coordinate-zero bitsets over the point list, the only
/// tables maximal enumeration needs.
struct PointTables<'a> {
    model: &'a StandardModel,
    points: &'a [ProjectivePoint],
    ids: &'a HashMap<Vector, u32>,
    perp: Vec<Vec<u64>>,
    zero_at: Vec<Vec<u64>>,
}

impl<'a> PointTables<'a> {
    fn new(model: &'a StandardModel, points: &'a [ProjectivePoint], ids: &'a HashMap<Vector, u32>, exec: Exec) -> Self {
        let f = model.field();
        let n = points.len();
        let words = bitset_words(n);
        let images: Vec<Vector> = exec.map(points, |p| model.space().gram().apply(f, p.rep()));
        let perp = exec.map_range(n, |i| {
            let mut row = vec![0u64; words];
            for (j, p) in points.iter().enumerate() {
                if crate::linform::dot(f, &images[i], p.rep()).is_zero() {
                    row[j / 64] |= 1 << (j % 64);
                }
            }
            row
        });
        let zero_at = (0..model.dim())
            .map(|c| {
                let mut row = vec![0u64; words];
                for (j, p) in points.iter().enumerate() {
                    if p.rep()[c].is_zero() {
                        row[j / 64] |= 1 << (j % 64);
                    }
                }
                row
            })
            .collect();
        PointTables { model, points, ids, perp, zero_at }
    }

    /// Every `S + <P>` with `P` a singular point in `S^⊥` reduced against `S`'s
    /// pivots. Each 1-space of `S^⊥ / S` is hit exactly once.
    fn extensions(&self, s: &Subspace) -> Vec<Subspace> {
        let f = self.model.field();
        let basis = s.basis();
        let mut mask = self.perp[self.ids[basis.row(0)] as usize].clone();
        for i in 1..s.dim() {
            let other = &self.perp[self.ids[basis.row(i)] as usize];
            mask.iter_mut().zip(other).for_each(|(a, b)| *a &= b);
        }
        for p in s.pivots() {
            mask.iter_mut().zip(&self.zero_at[p]).for_each(|(a, b)| *a &= b);
        }
        let mut out = Vec::new();
        for (w, &bits) in mask.iter().enumerate() {
            let mut bits = bits;
            while bits != 0 {
                let j = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                out.push(s.extend_reduced(f, self.points[j].rep()));
            }
        }
        out
    }
}

const LEVEL_CHUNK: usize = 1 << 14;

fn enumerate_with_tables(tables: &PointTables<'_>, exec: Exec) -> Vec<Subspace> {
    let d = tables.model.rank();
    let mut level: Vec<Subspace> = tables
        .points
        .iter()
        .map(|p| Subspace::from_rref_unchecked(Matrix::from_rows(p.rep().len(), &[p.rep().to_vec()])))
        .collect();
    for _ in 1..d {
        let mut seen: HashSet<Subspace> = HashSet::new();
        for chunk in level.chunks(LEVEL_CHUNK) {
            seen.extend(exec.flat_map(chunk, |s| tables.extensions(s)));
        }
        level = seen.into_iter().collect();
        exec.sort_dedup(&mut level);
    }
    level
}

/// All maximals (totally singular d-spaces) in canonical order, built level by
/// level from points with RREF deduplication at each level.
pub fn enumerate_maximals(model: &StandardModel, exec: Exec) -> Vec<Subspace> {
    let points = enumerate_points(model);
    let ids = point_index(&points);
    let tables = PointTables::new(model, &points, &ids, exec);
    enumerate_with_tables(&tables, exec)
}

fn point_index(points: &[ProjectivePoint]) -> HashMap<Vector, u32> {
    points.iter().enumerate().map(|(i, p)| (p.rep.clone(), i as u32)).collect()
}

/// The quadric with its points, maximals and id-based incidence tables.
pub struct QuadricModel {
    model: StandardModel,
    points: Vec<ProjectivePoint>,
    point_ids: HashMap<Vector, u32>,
    maximals: Vec<Subspace>,
    maximal_ids: HashMap<Subspace, u32>,
    maximal_points: Vec<Vec<u32>>,
    point_maximals: Vec<Vec<u32>>,
}

impl QuadricModel {
    pub fn build(model: StandardModel, exec: Exec) -> QuadricModel {
        let points = enumerate_points(&model);
        let point_ids = point_index(&points);
        let maximals = {
            let tables = PointTables::new(&model, &points, &point_ids, exec);
            enumerate_with_tables(&tables, exec)
        };
        let maximal_ids = maximals.iter().enumerate().map(|(i, m)| (m.clone(), i as u32)).collect();
        let f = model.field().clone();
        let maximal_points: Vec<Vec<u32>> = exec.map(&maximals, |m| {
            let mut ids: Vec<u32> = m.points(&f).iter().map(|v| point_ids[v]).collect();
            ids.sort_unstable();
            ids
        });
        let mut point_maximals = vec![Vec::new(); points.len()];
        for (mid, pts) in maximal_points.iter().enumerate() {
            for &p in pts {
                point_maximals[p as usize].push(mid as u32);
            }
        }
        QuadricModel { model, points, point_ids, maximals, maximal_ids, maximal_points, point_maximals }
    }

    pub fn model(&self) -> &StandardModel {
        &self.model
    }

    pub fn points(&self) -> &[ProjectivePoint] {
        &self.points
    }

    pub fn maximals(&self) -> &[Subspace] {
        &self.maximals
    }

    pub fn point_id(&self, rep: &[Fe]) -> Option<u32> {
        self.point_ids.get(rep).copied()
    }

    pub fn maximal_id(&self, m: &Subspace) -> Option<u32> {
        self.maximal_ids.get(m).copied()
    }

    /// Point ids on maximal `mid`, ascending.
    pub fn points_on(&self, mid: u32) -> &[u32] {
        &self.maximal_points[mid as usize]
    }

    /// Maximal ids through point `pid`, ascending.
    pub fn maximals_on(&self, pid: u32) -> &[u32] {
        &self.point_maximals[pid as usize]
    }

    /// `s + 1`
    pub fn s_plus_one(&self) -> u64 {
        points_per_maximal(self.model.field().q() as u64, self.model.rank() as u32)
    }

    /// `t + 1`
    pub fn t_plus_one(&self) -> u64 {
        maximals_per_point(self.model.field().q() as u64, self.model.rank() as u32)
    }

    /// Incidence by raw subspace membership, independent of the index tables.
    pub fn incidence(&self, p: &ProjectivePoint, m: &Subspace) -> bool {
        m.contains(self.model.field(), p.rep())
    }
}

/// Whether some vector of `M` has a nonzero `z`-coordinate.
pub fn z_projection_nontrivial(m: &Subspace) -> bool {
    (0..m.dim()).any(|i| !m.basis().get(i, StandardModel::Z).is_zero())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisCase {
    /// `z + u_1, e_0 + u_2, f_0 + u_3, u_4, ...`
    One,
    /// `z + λ f_0 + u_1, e_0 + μ f_0 + u_2, u_3, ...`
    Two,
    /// `z + λ e_0 + u_1, f_0 + u_2, u_3, ...`
    Three,
}

/// A basis of a maximal in one of the three shapes above. `u_parts[i]` is the
/// `U`-component of the i-th basis vector, in ambient coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaximalBasisForm {
    pub case: BasisCase,
    pub lambda: Option<Fe>,
    pub mu: Option<Fe>,
    pub u_parts: Vec<Vector>,
}

impl MaximalBasisForm {
    pub fn basis_vectors(&self, model: &StandardModel) -> Vec<Vector> {
        let f = model.field();
        let with = |u: &Vector, terms: &[(usize, Fe)]| {
            let mut v = u.clone();
            for &(c, a) in terms {
                v[c] = f.add(v[c], a);
            }
            v
        };
        let (z, e0, f0) = (StandardModel::Z, StandardModel::E0, StandardModel::F0);
        let one = Fe::ONE;
        let u = &self.u_parts;
        let mut out = match self.case {
            BasisCase::One => vec![with(&u[0], &[(z, one)]), with(&u[1], &[(e0, one)]), with(&u[2], &[(f0, one)])],
            BasisCase::Two => vec![
                with(&u[0], &[(z, one), (f0, self.lambda.unwrap())]),
                with(&u[1], &[(e0, one), (f0, self.mu.unwrap())]),
            ],
            BasisCase::Three => vec![with(&u[0], &[(z, one), (e0, self.lambda.unwrap())]), with(&u[1], &[(f0, one)])],
        };
        let head = out.len();
        out.extend(u[head..].iter().cloned());
        out
    }

    pub fn reassemble(&self, model: &StandardModel) -> Subspace {
        Subspace::span(model.field(), model.dim(), &self.basis_vectors(model))
    }
}

/// Brings a maximal into one of the three basis shapes: pivot on the
/// `z`-coordinate and clear it from the other vectors, then pivot the
/// remainder on its `<e_0, f_0>`-projection.
pub fn basis_normal_form(model: &StandardModel, m: &Subspace) -> Result<MaximalBasisForm, QuadricError> {
    let f = model.field();
    if m.dim() != model.rank() || m.ambient() != model.dim() || !model.space().is_totally_singular(m.basis()) {
        return Err(QuadricError::NotMaximal);
    }
    let (z, e0, f0) = (StandardModel::Z, StandardModel::E0, StandardModel::F0);
    let mut rows = m.basis().row_vecs();

    // Pivot on z.
    let zi = rows.iter().position(|r| !r[z].is_zero()).ok_or(QuadricError::NotMaximal)?;
    let b1 = rows.remove(zi);
    let b1 = scale(f, f.inv_nz(b1[z]), &b1);
    let mut rest: Vec<Vector> = rows.iter().map(|r| axpy(f, r, f.neg(r[z]), &b1)).collect();
    let mut b1 = b1;

    // Pivot the remainder on a coordinate of <e_0, f_0>, clearing it everywhere else.
    let take_pivot = |rest: &mut Vec<Vector>, c: usize, head: &mut [&mut Vector]| -> Option<Vector> {
        let i = rest.iter().position(|r| !r[c].is_zero())?;
        let r = rest.remove(i);
        let r = scale(f, f.inv_nz(r[c]), &r);
        for other in rest.iter_mut() {
            *other = axpy(f, other, f.neg(other[c]), &r);
        }
        for h in head.iter_mut() {
            **h = axpy(f, h, f.neg(h[c]), &r);
        }
        Some(r)
    };

    let u_of = |v: &Vector| {
        let mut u = v.clone();
        for c in model.w_coords() {
            u[c] = Fe::ZERO;
        }
        u
    };

    let form = match take_pivot(&mut rest, e0, &mut [&mut b1]) {
        Some(mut b2) => match take_pivot(&mut rest, f0, &mut [&mut b1, &mut b2]) {
            Some(b3) => {
                let mut u_parts = vec![u_of(&b1), u_of(&b2), u_of(&b3)];
                u_parts.extend(rest.iter().map(u_of));
                MaximalBasisForm { case: BasisCase::One, lambda: None, mu: None, u_parts }
            }
            None => {
                let mut u_parts = vec![u_of(&b1), u_of(&b2)];
                u_parts.extend(rest.iter().map(u_of));
                MaximalBasisForm { case: BasisCase::Two, lambda: Some(b1[f0]), mu: Some(b2[f0]), u_parts }
            }
        },
        None => {
            let b2 = take_pivot(&mut rest, f0, &mut [&mut b1]).ok_or(QuadricError::NotMaximal)?;
            let mut u_parts = vec![u_of(&b1), u_of(&b2)];
            u_parts.extend(rest.iter().map(u_of));
            MaximalBasisForm { case: BasisCase::Three, lambda: Some(b1[e0]), mu: None, u_parts }
        }
    };
    debug_assert!(form
        .u_parts
        .iter()
        .skip(match form.case {
            BasisCase::One => 3,
            _ => 2,
        })
        .all(|u| leading_index(u).is_none_or(|l| l >= 3)));
    Ok(form)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;

    fn model(p: u32, k: u32, d: usize) -> StandardModel {
        StandardModel::new(&Field::new(p, k, None).unwrap(), d).unwrap()
    }

    /// Independent maximal count: mutually orthogonal independent point
    /// tuples, identified by the set of point ids they span (no RREF).
    fn brute_maximal_count(m: &StandardModel) -> usize {
        let pts: Vec<Vector> = enumerate_points(m).into_iter().map(|p| p.rep).collect();
        let ids: HashMap<Vector, usize> = pts.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let d = m.rank();
        let mut found: HashSet<Vec<usize>> = HashSet::new();
        fn span_ids(f: &Field, vs: &[Vector], ids: &HashMap<Vector, usize>) -> Vec<usize> {
            let q = f.q();
            let r = vs.len();
            let mut out = Vec::new();
            for code in 1..q.pow(r as u32) {
                let mut c = code;
                let mut v = vec![Fe::ZERO; vs[0].len()];
                for b in vs {
                    v = axpy(f, &v, f.element(c % q), b);
                    c /= q;
                }
                if let Some(n) = crate::linform::normalize(f, &v) {
                    out.push(ids[&n]);
                }
            }
            out.sort_unstable();
            out.dedup();
            out
        }
        #[allow(clippy::too_many_arguments)]
        fn grow(
            m: &StandardModel,
            pts: &[Vector],
            ids: &HashMap<Vector, usize>,
            chosen: &mut Vec<Vector>,
            covered: &[usize],
            from: usize,
            d: usize,
            found: &mut HashSet<Vec<usize>>,
        ) {
            if chosen.len() == d {
                found.insert(covered.to_vec());
                return;
            }
            for i in from..pts.len() {
                if covered.binary_search(&i).is_ok() || !chosen.iter().all(|c| m.beta(c, &pts[i]).is_zero()) {
                    continue;
                }
                chosen.push(pts[i].clone());
                let cov = span_ids(m.field(), chosen, ids);
                grow(m, pts, ids, chosen, &cov, i + 1, d, found);
                chosen.pop();
            }
        }
        grow(m, &pts, &ids, &mut Vec::new(), &[], 0, d, &mut found);
        found.len()
    }

    #[test]
    fn point_counts_match_brute_force() {
        for (p, k, d, expect) in [(3, 1, 2, 40), (5, 1, 2, 156), (7, 1, 2, 400), (3, 2, 2, 820), (3, 1, 3, 364)] {
            let m = model(p, k, d);
            let brute = projective_vectors(m.field(), m.dim()).iter().filter(|v| m.kappa(v).is_zero()).count();
            let pts = enumerate_points(&m);
            assert_eq!(pts.len(), expect);
            assert_eq!(pts.len(), brute);
            assert_eq!(pts.len() as u64, point_count(m.field().q() as u64, d as u32));
            assert!(pts.windows(2).all(|w| w[0] < w[1]));
            let f = m.field();
            for pt in &pts {
                for l in f.nonzero() {
                    assert!(m.kappa(&scale(f, l, pt.rep())).is_zero());
                }
            }
        }
    }

    #[test]
    fn maximal_counts() {
        for (p, k, d, expect) in [(3, 1, 2, 40), (5, 1, 2, 156), (3, 1, 3, 1120)] {
            let m = model(p, k, d);
            let seq = enumerate_maximals(&m, Exec::Sequential);
            assert_eq!(seq.len(), expect);
            assert_eq!(seq.len() as u64, maximal_count(m.field().q() as u64, d as u32));
            assert_eq!(seq, enumerate_maximals(&m, Exec::Parallel));
            assert!(seq.windows(2).all(|w| w[0] < w[1]));
            for mx in &seq {
                assert_eq!(mx.dim(), d);
                assert!(m.space().is_totally_singular(mx.basis()));
            }
        }
    }

    #[test]
    fn maximal_count_matches_independent_oracle() {
        for (p, d) in [(3, 2), (5, 2), (3, 3)] {
            let m = model(p, 1, d);
            assert_eq!(brute_maximal_count(&m), enumerate_maximals(&m, Exec::Sequential).len());
        }
    }

    #[test]
    fn regularity_and_incidence() {
        let q = QuadricModel::build(model(3, 1, 2), Exec::default());
        assert_eq!(q.s_plus_one(), 4);
        assert_eq!(q.t_plus_one(), 4);
        assert_eq!(q.t_plus_one() % 2, 0);
        for mid in 0..q.maximals().len() as u32 {
            assert_eq!(q.points_on(mid).len() as u64, q.s_plus_one());
        }
        for pid in 0..q.points().len() as u32 {
            assert_eq!(q.maximals_on(pid).len() as u64, q.t_plus_one());
        }
        // slow path agrees with the index
        for (mid, m) in q.maximals().iter().enumerate() {
            for (pid, p) in q.points().iter().enumerate() {
                assert_eq!(q.incidence(p, m), q.points_on(mid as u32).contains(&(pid as u32)));
            }
            let row0 = ProjectivePoint::from_normalized(m.basis().row(0).to_vec());
            assert!(q.incidence(&row0, m));
        }
    }

    #[test]
    fn projection_onto_z() {
        for (p, d) in [(3, 2), (3, 3)] {
            let m = model(p, 1, d);
            assert!(enumerate_maximals(&m, Exec::default()).iter().all(z_projection_nontrivial));
        }
        // a singular line inside <z>^⊥: <e_0, e_1>
        let m = model(3, 1, 3);
        let line = Subspace::span(m.field(), 7, &[m.unit(StandardModel::e(0)), m.unit(StandardModel::e(1))]);
        assert!(m.space().is_totally_singular(line.basis()));
        assert!(!z_projection_nontrivial(&line));
    }

    #[test]
    fn normal_form_round_trips() {
        for (p, d) in [(3, 2), (5, 2), (3, 3)] {
            let m = model(p, 1, d);
            let mut seen = HashSet::new();
            for mx in enumerate_maximals(&m, Exec::default()) {
                let form = basis_normal_form(&m, &mx).unwrap();
                assert_eq!(form.reassemble(&m), mx);
                seen.insert(format!("{:?}", form.case));
                if d == 2 {
                    assert_ne!(form.case, BasisCase::One);
                }
            }
            assert!(seen.contains("Two") && seen.contains("Three"));
            if d == 3 {
                assert!(seen.contains("One"));
            }
        }
    }

    #[test]
    fn normal_form_cases() {
        let m = model(3, 1, 3);
        let f = m.field();
        let maxs = enumerate_maximals(&m, Exec::default());
        let case_one = maxs
            .iter()
            .find(|mx| {
                let proj = Matrix::from_fn(mx.dim(), 2, |i, j| mx.basis().get(i, 1 + j));
                proj.rank(f) == 2
            })
            .unwrap();
        assert_eq!(basis_normal_form(&m, case_one).unwrap().case, BasisCase::One);

        let case_three =
            maxs.iter().find(|mx| (0..mx.dim()).all(|i| mx.basis().get(i, StandardModel::E0).is_zero())).unwrap();
        let form = basis_normal_form(&m, case_three).unwrap();
        assert_eq!(form.case, BasisCase::Three);
        assert_eq!(form.basis_vectors(&m)[1][StandardModel::F0], Fe::ONE);

        let line = Subspace::span(f, 7, &[m.unit(StandardModel::e(0)), m.unit(StandardModel::e(1))]);
        assert_eq!(basis_normal_form(&m, &line), Err(QuadricError::NotMaximal));
    }
}
