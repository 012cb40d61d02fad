//! The groups `B = Ω(W)`, `A = <B, τ>` and their actions.
//!
//! `Ω_3(q)` is realized as the image of `SL_2(q)` acting on binary quadratic
//! forms `a X² + b XY + c Y²` by substitution. That action preserves the
//! discriminant; a Witt similarity carries it onto the form restricted to
//! `W = <z, e_0, f_0>`, and each element is extended by the identity on `U`.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::gf::{Fe, Field};
use crate::linform::{
    dot, normalize, projective_vectors, rref, Matrix, QuadraticSpace, StandardModel, Subspace, Vector,
};
use crate::quadric::ProjectivePoint;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("generated group has order {got}, expected {expected}")]
    GenerationFailure { expected: usize, got: usize },
    #[error("matrix does not have determinant 1")]
    NotUnimodular,
    #[error("no similarity with square multiplier between the two forms")]
    NoIsometry,
    #[error("group closure exceeded {0} elements")]
    TooLarge(usize),
}

/// Upper bound on enumerated group orders.
const CLOSURE_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    mat: Matrix,
}

impl GroupElement {
    pub fn new(mat: Matrix) -> GroupElement {
        assert_eq!(mat.rows(), mat.cols(), "group elements are square");
        GroupElement { mat }
    }

    pub fn identity(n: usize) -> GroupElement {
        GroupElement { mat: Matrix::identity(n) }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn mul(&self, f: &Field, other: &GroupElement) -> GroupElement {
        GroupElement { mat: self.mat.mul(f, &other.mat) }
    }

    pub fn inverse(&self, f: &Field) -> GroupElement {
        GroupElement { mat: self.mat.inverse(f).expect("group elements are invertible") }
    }

    pub fn det(&self, f: &Field) -> Fe {
        self.mat.det(f)
    }

    pub fn act_vector(&self, f: &Field, v: &[Fe]) -> Vector {
        self.mat.apply(f, v)
    }
}

/// Image of a point, renormalized. Right action: `P^(gh) = (P^g)^h`.
pub fn act_point(f: &Field, g: &GroupElement, p: &ProjectivePoint) -> ProjectivePoint {
    let v = normalize(f, &g.act_vector(f, p.rep())).expect("invertible image of a nonzero vector");
    ProjectivePoint::from_normalized(v)
}

/// Image of a subspace, re-canonicalized.
pub fn act_subspace(f: &Field, g: &GroupElement, m: &Subspace) -> Subspace {
    rref(f, &m.basis().mul(f, &g.mat))
}

/// A finite matrix group, fully enumerated.
#[derive(Clone, Debug)]
pub struct GeneratedGroup {
    field: Field,
    generators: Vec<GroupElement>,
    elements: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
}

impl GeneratedGroup {
    /// Breadth-first closure of the generators under right multiplication.
    pub fn closure(field: &Field, generators: Vec<GroupElement>) -> Result<GeneratedGroup, GroupError> {
        let n = generators.first().map_or(0, |g| g.dim());
        let id = GroupElement::identity(n);
        let mut seen: HashMap<GroupElement, ()> = HashMap::new();
        let mut queue = VecDeque::from([id.clone()]);
        seen.insert(id, ());
        while let Some(x) = queue.pop_front() {
            for g in &generators {
                let y = x.mul(field, g);
                if !seen.contains_key(&y) {
                    if seen.len() >= CLOSURE_LIMIT {
                        return Err(GroupError::TooLarge(CLOSURE_LIMIT));
                    }
                    seen.insert(y.clone(), ());
                    queue.push_back(y);
                }
            }
        }
        let mut elements: Vec<GroupElement> = seen.into_keys().collect();
        elements.sort();
        let index = elements.iter().enumerate().map(|(i, g)| (g.clone(), i)).collect();
        Ok(GeneratedGroup { field: field.clone(), generators, elements, index })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index.contains_key(g)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Order of `g` as a group element.
    pub fn element_order(&self, g: &GroupElement) -> usize {
        let id = GroupElement::identity(g.dim());
        let mut x = g.clone();
        let mut k = 1;
        while x != id {
            x = x.mul(&self.field, g);
            k += 1;
        }
        k
    }
}

/// `|SL_2(q)| = q (q² - 1)`
pub fn sl2_order(q: usize) -> usize {
    q * (q * q - 1)
}

/// Transvections `[[1, α], [0, 1]]`, `[[1, 0], [α, 1]]` for `α` in the basis
/// `1, ω, ..., ω^{k-1}` of GF(q) over GF(p) (ω the polynomial generator),
/// and the Weyl element `[[0, 1], [-1, 0]]`. The closure is checked to have
/// order `|SL_2(q)|`.
pub fn sl2_generators(f: &Field) -> Result<Vec<Matrix>, GroupError> {
    let k = f.k() as usize;
    let mut gens = Vec::new();
    for i in 0..k {
        let mut c = vec![0u32; k];
        c[i] = 1;
        let alpha = f.from_coeffs(&c).expect("basis monomial");
        gens.push(Matrix::from_rows(2, &[vec![Fe::ONE, alpha], vec![Fe::ZERO, Fe::ONE]]));
        gens.push(Matrix::from_rows(2, &[vec![Fe::ONE, Fe::ZERO], vec![alpha, Fe::ONE]]));
    }
    gens.push(Matrix::from_rows(2, &[vec![Fe::ZERO, Fe::ONE], vec![f.neg(Fe::ONE), Fe::ZERO]]));
    let group = GeneratedGroup::closure(f, gens.iter().cloned().map(GroupElement::new).collect())?;
    let expected = sl2_order(f.q());
    if group.order() != expected {
        return Err(GroupError::GenerationFailure { expected, got: group.order() });
    }
    Ok(gens)
}

/// Action of `g = [[α, β], [γ, δ]]` on the coefficients `(a, b, c)` of
/// `a X² + b XY + c Y²` under `X -> αX + βY, Y -> γX + δY`, as a 3×3 matrix
/// acting on row vectors.
pub fn sym_square(f: &Field, g: &Matrix) -> Result<Matrix, GroupError> {
    assert_eq!((g.rows(), g.cols()), (2, 2), "sym_square takes a 2x2 matrix");
    if g.det(f) != Fe::ONE {
        return Err(GroupError::NotUnimodular);
    }
    let (al, be, ga, de) = (g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1));
    let two = f.from_int(2);
    let m = |a: Fe, b: Fe| f.mul(a, b);
    Ok(Matrix::from_rows(
        3,
        &[
            vec![m(al, al), m(two, m(al, be)), m(be, be)],
            vec![m(al, ga), f.add(m(al, de), m(be, ga)), m(be, de)],
            vec![m(ga, ga), m(two, m(ga, de)), m(de, de)],
        ],
    ))
}

/// The discriminant form on binary quadratic forms, scaled by 1/2:
/// `κ(a, b, c) = b²/2 - 2ac`. Its square class matches `κ|_W`.
pub fn discriminant_space(f: &Field) -> QuadraticSpace {
    let m2 = f.from_int(-2);
    let gram = Matrix::from_rows(
        3,
        &[vec![Fe::ZERO, Fe::ZERO, m2], vec![Fe::ZERO, Fe::ONE, Fe::ZERO], vec![m2, Fe::ZERO, Fe::ZERO]],
    );
    QuadraticSpace::new(f.clone(), gram).expect("discriminant form is nondegenerate")
}

/// `T` with `T J_to Tᵀ = c J_from`, `c` a nonzero square.
#[derive(Clone, Debug)]
pub struct Similarity {
    pub matrix: Matrix,
    pub scalar: Fe,
}

impl Similarity {
    /// Carries an isometry of the source form to an isometry of the target: `T⁻¹ g T`.
    pub fn conjugate(&self, f: &Field, g: &Matrix) -> Matrix {
        let inv = self.matrix.inverse(f).expect("similarity is invertible");
        inv.mul(f, g).mul(f, &self.matrix)
    }
}

fn kappa_local(f: &Field, g: &Matrix, v: &[Fe]) -> Fe {
    f.mul(dot(f, &g.apply(f, v), v), f.half())
}

/// Orthogonal bases of `(F^r, ga)` and `(F^r, gb)` with equal norms, vector by
/// vector. By Witt cancellation the first match at each step extends whenever
/// the forms are isometric.
fn matched_bases(f: &Field, ga: &Matrix, gb: &Matrix) -> Option<(Vec<Vector>, Vec<Vector>)> {
    let r = ga.rows();
    if r == 0 {
        return Some((vec![], vec![]));
    }
    let cands = projective_vectors(f, r);
    let u = cands.iter().find(|v| !kappa_local(f, ga, v).is_zero())?;
    let alpha = kappa_local(f, ga, u);
    let v = cands.iter().find_map(|v| {
        let kv = kappa_local(f, gb, v);
        if kv.is_zero() {
            return None;
        }
        f.nonzero().find(|&l| f.mul(f.mul(l, l), kv) == alpha).map(|l| crate::linform::scale(f, l, v))
    })?;
    let ka = Matrix::from_rows(r, &[ga.apply(f, u)]).nullspace(f);
    let kb = Matrix::from_rows(r, &[gb.apply(f, &v)]).nullspace(f);
    let sub_a = ka.mul(f, ga).mul(f, &ka.transpose());
    let sub_b = kb.mul(f, gb).mul(f, &kb.transpose());
    let (us, vs) = matched_bases(f, &sub_a, &sub_b)?;
    let mut ua = vec![u.clone()];
    ua.extend(us.iter().map(|x| ka.apply(f, x)));
    let mut vb = vec![v];
    vb.extend(vs.iter().map(|x| kb.apply(f, x)));
    Some((ua, vb))
}

/// Constructive Witt similarity between two nondegenerate spaces of equal
/// dimension. Multipliers are tried in canonical order of the nonzero squares, so
/// an exact isometry (`c = 1`) is returned whenever one exists.
pub fn witt_isometry(from: &QuadraticSpace, to: &QuadraticSpace) -> Result<Similarity, GroupError> {
    let f = from.field();
    if from.dim() != to.dim() || to.field() != f {
        return Err(GroupError::NoIsometry);
    }
    let n = from.dim();
    for c in f.nonzero().filter(|&c| f.is_square(c)) {
        let ga = from.gram().scaled(f, c);
        if let Some((us, vs)) = matched_bases(f, &ga, to.gram()) {
            let u = Matrix::from_rows(n, &us);
            let v = Matrix::from_rows(n, &vs);
            let t = u.inverse(f).expect("orthogonal basis of a nondegenerate space").mul(f, &v);
            debug_assert_eq!(t.mul(f, to.gram()).mul(f, &t.transpose()), ga);
            return Ok(Similarity { matrix: t, scalar: c });
        }
    }
    Err(GroupError::NoIsometry)
}

/// `g ⊕ I` with the 3×3 block `g` on the `W` coordinates.
pub fn embed_w(model: &StandardModel, g: &Matrix) -> GroupElement {
    let mut m = Matrix::identity(model.dim());
    for i in 0..3 {
        for j in 0..3 {
            m.set(i, j, g.get(i, j));
        }
    }
    GroupElement::new(m)
}

/// The 3×3 block of `g` on the `W` coordinates.
pub fn w_block(g: &GroupElement) -> Matrix {
    Matrix::from_fn(3, 3, |i, j| g.matrix().get(i, j))
}

/// `QuadraticSpace` of `κ|_W` in the basis `z, e_0, f_0`.
pub fn w_space(model: &StandardModel) -> QuadraticSpace {
    let j = model.space().gram();
    QuadraticSpace::new(model.field().clone(), Matrix::from_fn(3, 3, |a, b| j.get(a, b))).expect("W is nondegenerate")
}

/// `|Ω_3(q)| = q (q² - 1) / 2`
pub fn omega3_order(q: usize) -> usize {
    sl2_order(q) / 2
}

/// `B = Ω(W)` acting on the whole space, trivially on `U`.
pub fn omega_w(model: &StandardModel) -> Result<GeneratedGroup, GroupError> {
    let f = model.field();
    let sim = witt_isometry(&discriminant_space(f), &w_space(model))?;
    let mut gens: Vec<GroupElement> = Vec::new();
    for g in sl2_generators(f)? {
        let h = embed_w(model, &sim.conjugate(f, &sym_square(f, &g)?));
        if !gens.contains(&h) {
            gens.push(h);
        }
    }
    let group = GeneratedGroup::closure(f, gens)?;
    let expected = omega3_order(f.q());
    if group.order() != expected {
        return Err(GroupError::GenerationFailure { expected, got: group.order() });
    }
    Ok(group)
}

/// `τ = diag(-1, 1, 1) ⊕ I_{2d-2}`.
pub fn tau(model: &StandardModel) -> GroupElement {
    let mut m = Matrix::identity(model.dim());
    m.set(StandardModel::Z, StandardModel::Z, model.field().neg(Fe::ONE));
    GroupElement::new(m)
}

/// `A = <B, τ>`, checked to contain `B` with index 2.
pub fn group_a(model: &StandardModel, b: &GeneratedGroup) -> Result<GeneratedGroup, GroupError> {
    let mut gens = b.generators().to_vec();
    gens.push(tau(model));
    let a = GeneratedGroup::closure(model.field(), gens)?;
    let expected = 2 * b.order();
    if a.order() != expected {
        return Err(GroupError::GenerationFailure { expected, got: a.order() });
    }
    Ok(a)
}

/// Whether the vector `v` is fixed, used for the "identity on U" invariant.
pub fn fixes(f: &Field, g: &GroupElement, v: &[Fe]) -> bool {
    g.act_vector(f, v) == v
}
