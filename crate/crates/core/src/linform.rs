//! Vectors, matrices and quadratic forms over GF(q).
//!
//! Vectors are row vectors and matrices act on the right, `v -> v M`. A
//! [`QuadraticSpace`] stores only its Gram matrix `J`; the bilinear form is
//! `β(u, v) = u J vᵀ` and the quadratic form is `κ(v) = β(v, v) / 2`.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::gf::{Fe, Field, FieldError};

pub type Vector = Vec<Fe>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Gram matrix is not symmetric")]
    NotSymmetric,
    #[error("Gram matrix is singular")]
    Degenerate,
    #[error("form restricted to the subspace is degenerate")]
    DegenerateRestriction,
    #[error("rank d = {0} is not supported, need d >= 2")]
    BadRank(usize),
    #[error("malformed matrix: {0}")]
    Parse(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub fn dot(f: &Field, u: &[Fe], v: &[Fe]) -> Fe {
    u.iter().zip(v).fold(Fe::ZERO, |acc, (&a, &b)| f.mul_add(acc, a, b))
}

pub fn scale(f: &Field, c: Fe, v: &[Fe]) -> Vector {
    v.iter().map(|&a| f.mul(c, a)).collect()
}

pub fn add(f: &Field, u: &[Fe], v: &[Fe]) -> Vector {
    u.iter().zip(v).map(|(&a, &b)| f.add(a, b)).collect()
}

/// `u + c v`
pub fn axpy(f: &Field, u: &[Fe], c: Fe, v: &[Fe]) -> Vector {
    u.iter().zip(v).map(|(&a, &b)| f.mul_add(a, c, b)).collect()
}

/// Rescales so the first nonzero coordinate is 1. Returns `None` for the zero vector.
pub fn normalize(f: &Field, v: &[Fe]) -> Option<Vector> {
    let lead = *v.iter().find(|a| !a.is_zero())?;
    if lead == Fe::ONE {
        return Some(v.to_vec());
    }
    Some(scale(f, f.inv_nz(lead), v))
}

pub fn leading_index(v: &[Fe]) -> Option<usize> {
    v.iter().position(|a| !a.is_zero())
}

/// All nonzero vectors of `F^n` whose first nonzero coordinate is 1, in
/// canonical (lexicographic) order. These name the 1-spaces of `F^n`.
pub fn projective_vectors(f: &Field, n: usize) -> Vec<Vector> {
    let q = f.q();
    let mut out = Vec::new();
    for lead in (0..n).rev() {
        let tail = n - lead - 1;
        let count = q.pow(tail as u32);
        for code in 0..count {
            let mut v = vec![Fe::ZERO; n];
            v[lead] = Fe::ONE;
            let mut c = code;
            for slot in v[lead + 1..].iter_mut().rev() {
                *slot = f.element(c % q);
                c /= q;
            }
            out.push(v);
        }
    }
    out
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Fe>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![Fe::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Fe::ONE);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[Vector]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut g: impl FnMut(usize, usize) -> Fe) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(g(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Fe {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Fe) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Fe] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vector> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[Fe] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn mul(&self, f: &Field, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let cur = out.get(i, j);
                    out.set(i, j, f.mul_add(cur, a, other.get(l, j)));
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn apply(&self, f: &Field, v: &[Fe]) -> Vector {
        assert_eq!(v.len(), self.rows, "vector/matrix dimension mismatch");
        let mut out = vec![Fe::ZERO; self.cols];
        for (l, &a) in v.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let row = self.row(l);
            for (o, &b) in out.iter_mut().zip(row) {
                *o = f.mul_add(*o, a, b);
            }
        }
        out
    }

    pub fn scaled(&self, f: &Field, c: Fe) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: scale(f, c, &self.data) }
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// In-place reduced row-echelon form; zero rows are dropped. Returns the pivot columns.
    pub fn rref_in_place(&mut self, f: &Field) -> Vec<usize> {
        let (rows, cols) = (self.rows, self.cols);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(pr) = (r..rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for j in 0..cols {
                    self.data.swap(pr * cols + j, r * cols + j);
                }
            }
            let inv = f.inv_nz(self.get(r, c));
            if inv != Fe::ONE {
                for j in c..cols {
                    let v = f.mul(inv, self.get(r, j));
                    self.set(r, j, v);
                }
            }
            for i in 0..rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor.is_zero() {
                    continue;
                }
                let neg = f.neg(factor);
                for j in c..cols {
                    let v = f.mul_add(self.get(i, j), neg, self.get(r, j));
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        self.rows = r;
        self.data.truncate(r * cols);
        pivots
    }

    pub fn rank(&self, f: &Field) -> usize {
        self.clone().rref_in_place(f).len()
    }

    pub fn det(&self, f: &Field) -> Fe {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Fe::ONE;
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| !m.get(i, c).is_zero()) else {
                return Fe::ZERO;
            };
            if pr != c {
                for j in 0..n {
                    m.data.swap(pr * n + j, c * n + j);
                }
                det = f.neg(det);
            }
            let piv = m.get(c, c);
            det = f.mul(det, piv);
            let inv = f.inv_nz(piv);
            for i in c + 1..n {
                let factor = f.mul(m.get(i, c), inv);
                if factor.is_zero() {
                    continue;
                }
                let neg = f.neg(factor);
                for j in c..n {
                    let v = f.mul_add(m.get(i, j), neg, m.get(c, j));
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    pub fn inverse(&self, f: &Field) -> Option<Matrix> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut aug = Matrix::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self.get(i, j)
            } else if j - n == i {
                Fe::ONE
            } else {
                Fe::ZERO
            }
        });
        let piv = aug.rref_in_place(f);
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        Some(Matrix::from_fn(n, n, |i, j| aug.get(i, n + j)))
    }

    /// Basis (as rows, in RREF) of `{v : M vᵀ = 0}`.
    pub fn nullspace(&self, f: &Field) -> Matrix {
        let mut m = self.clone();
        let pivots = m.rref_in_place(f);
        let n = self.cols;
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Vec::with_capacity(free.len());
        for &fc in &free {
            let mut v = vec![Fe::ZERO; n];
            v[fc] = Fe::ONE;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(m.get(r, fc));
            }
            basis.push(v);
        }
        let mut out = Matrix::from_rows(n, &basis);
        out.rref_in_place(f);
        out
    }

    /// Rows joined by `;`, entries by a space, each entry in the field's digit form.
    pub fn format(&self, f: &Field) -> String {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|&a| f.format(a)).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse(f: &Field, s: &str, cols: usize) -> Result<Matrix, FormError> {
        let mut rows = Vec::new();
        for part in s.split(';') {
            let row: Result<Vector, _> = part.split_whitespace().map(|e| f.parse(e)).collect();
            let row = row?;
            if row.len() != cols {
                return Err(FormError::Parse(format!("row {part:?} has {} entries, expected {cols}", row.len())));
            }
            rows.push(row);
        }
        Ok(Matrix::from_rows(cols, &rows))
    }
}

/// A nondegenerate quadratic space `(F^n, J)`.
#[derive(Clone, Debug)]
pub struct QuadraticSpace {
    field: Field,
    gram: Matrix,
    half: Fe,
}

impl QuadraticSpace {
    pub fn new(field: Field, gram: Matrix) -> Result<QuadraticSpace, FormError> {
        if !gram.is_symmetric() {
            return Err(FormError::NotSymmetric);
        }
        if gram.det(&field).is_zero() {
            return Err(FormError::Degenerate);
        }
        let half = field.half();
        Ok(QuadraticSpace { field, gram, half })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    pub fn beta(&self, u: &[Fe], v: &[Fe]) -> Fe {
        debug_assert_eq!(u.len(), self.dim());
        dot(&self.field, &self.gram.apply(&self.field, u), v)
    }

    pub fn kappa(&self, v: &[Fe]) -> Fe {
        self.field.mul(self.beta(v, v), self.half)
    }

    /// Gram matrix of the form restricted to the row space of `basis`.
    pub fn restricted_gram(&self, basis: &Matrix) -> Matrix {
        let f = &self.field;
        basis.mul(f, &self.gram).mul(f, &basis.transpose())
    }

    /// Whether `g` preserves the form: `g J gᵀ = J`.
    pub fn preserves(&self, g: &Matrix) -> bool {
        let f = &self.field;
        g.mul(f, &self.gram).mul(f, &g.transpose()) == self.gram
    }

    pub fn is_totally_singular(&self, basis: &Matrix) -> bool {
        let g = self.restricted_gram(basis);
        g.as_slice().iter().all(|a| a.is_zero())
    }
}

/// A subspace named by its reduced row-echelon basis. Structural equality is
/// subspace equality; the derived order is row-major lexicographic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    basis: Matrix,
}

impl PartialOrd for Subspace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Subspace {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.basis.rows, self.basis.cols)
            .cmp(&(other.basis.rows, other.basis.cols))
            .then_with(|| self.basis.data.cmp(&other.basis.data))
    }
}

pub fn rref(f: &Field, basis: &Matrix) -> Subspace {
    let mut m = basis.clone();
    m.rref_in_place(f);
    Subspace { basis: m }
}

impl Subspace {
    pub fn span(f: &Field, ambient: usize, rows: &[Vector]) -> Subspace {
        rref(f, &Matrix::from_rows(ambient, rows))
    }

    pub fn zero(ambient: usize) -> Subspace {
        Subspace { basis: Matrix::zeros(0, ambient) }
    }

    pub fn whole(ambient: usize) -> Subspace {
        Subspace { basis: Matrix::identity(ambient) }
    }

    /// Wraps a matrix already known to be in RREF.
    pub(crate) fn from_rref_unchecked(basis: Matrix) -> Subspace {
        Subspace { basis }
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn ambient(&self) -> usize {
        self.basis.cols()
    }

    pub fn pivots(&self) -> Vec<usize> {
        (0..self.dim()).map(|i| leading_index(self.basis.row(i)).expect("RREF rows are nonzero")).collect()
    }

    pub fn contains(&self, f: &Field, v: &[Fe]) -> bool {
        let mut r = v.to_vec();
        for (i, p) in self.pivots().into_iter().enumerate() {
            let c = r[p];
            if !c.is_zero() {
                r = axpy(f, &r, f.neg(c), self.basis.row(i));
            }
        }
        r.iter().all(|a| a.is_zero())
    }

    pub fn contains_subspace(&self, f: &Field, other: &Subspace) -> bool {
        (0..other.dim()).all(|i| self.contains(f, other.basis.row(i)))
    }

    /// `self + <v>` where `v` is normalized and vanishes on every pivot column
    /// of `self`. Skips the general elimination: only `v`'s leading column has
    /// to be cleared from the existing rows.
    pub fn extend_reduced(&self, f: &Field, v: &[Fe]) -> Subspace {
        let lead = leading_index(v).expect("extension vector is nonzero");
        debug_assert_eq!(v[lead], Fe::ONE);
        let n = self.ambient();
        let mut rows: Vec<Vector> = Vec::with_capacity(self.dim() + 1);
        let mut inserted = false;
        for i in 0..self.dim() {
            let row = self.basis.row(i);
            if !inserted && leading_index(row).unwrap() > lead {
                rows.push(v.to_vec());
                inserted = true;
            }
            let c = row[lead];
            rows.push(if c.is_zero() { row.to_vec() } else { axpy(f, row, f.neg(c), v) });
        }
        if !inserted {
            rows.push(v.to_vec());
        }
        Subspace { basis: Matrix::from_rows(n, &rows) }
    }

    /// All 1-spaces of the subspace, as normalized vectors. RREF makes every
    /// combination with leading coefficient 1 already normalized.
    pub fn points(&self, f: &Field) -> Vec<Vector> {
        projective_vectors(f, self.dim()).iter().map(|c| self.basis.apply(f, c)).collect()
    }
}

pub fn perp(space: &QuadraticSpace, s: &Subspace) -> Subspace {
    let f = space.field();
    let m = s.basis().mul(f, space.gram());
    if s.dim() == 0 {
        return Subspace::whole(space.dim());
    }
    Subspace { basis: m.nullspace(f) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormType {
    Parabolic,
    Hyperbolic,
    Elliptic,
}

/// `S = H_1 ⊥ ... ⊥ H_r ⊥ X` with each `H_i` spanned by a hyperbolic pair and
/// `X` anisotropic; vectors in ambient coordinates.
#[derive(Clone, Debug)]
pub struct WittDecomposition {
    pub pairs: Vec<(Vector, Vector)>,
    pub anisotropic: Vec<Vector>,
}

impl WittDecomposition {
    pub fn index(&self) -> usize {
        self.pairs.len()
    }

    pub fn form_type(&self) -> FormType {
        match (2 * self.pairs.len() + self.anisotropic.len()) % 2 {
            1 => FormType::Parabolic,
            _ if self.anisotropic.is_empty() => FormType::Hyperbolic,
            _ => FormType::Elliptic,
        }
    }
}

/// Splits off hyperbolic pairs one at a time: find a singular vector by
/// exhaustive scan, complete it to a hyperbolic pair, recurse on the perp.
pub fn witt_decomposition(space: &QuadraticSpace, s: &Subspace) -> Result<WittDecomposition, FormError> {
    let f = space.field();
    let mut basis = s.basis().clone();
    let mut gram = space.restricted_gram(&basis);
    if s.dim() > 0 && gram.det(f).is_zero() {
        return Err(FormError::DegenerateRestriction);
    }
    let half = f.half();
    let kappa = |g: &Matrix, v: &[Fe]| f.mul(dot(f, &g.apply(f, v), v), half);

    let mut pairs = Vec::new();
    loop {
        let r = gram.rows();
        if r == 0 {
            break;
        }
        let Some(v) = projective_vectors(f, r).into_iter().find(|v| kappa(&gram, v).is_zero()) else {
            break;
        };
        let vg = gram.apply(f, &v);
        let j = leading_index(&vg).expect("nondegenerate form has no radical");
        let mut w = vec![Fe::ZERO; r];
        w[j] = f.inv_nz(vg[j]);
        let w = axpy(f, &w, f.neg(kappa(&gram, &w)), &v);
        pairs.push((basis.apply(f, &v), basis.apply(f, &w)));

        let constraints = Matrix::from_rows(r, &[vg, gram.apply(f, &w)]);
        let k = constraints.nullspace(f);
        basis = k.mul(f, &basis);
        gram = k.mul(f, &gram).mul(f, &k.transpose());
    }
    let anisotropic = basis.row_vecs();
    debug_assert!(anisotropic.len() <= 2);
    Ok(WittDecomposition { pairs, anisotropic })
}

pub fn witt_index(space: &QuadraticSpace, s: &Subspace) -> Result<usize, FormError> {
    Ok(witt_decomposition(space, s)?.index())
}

pub fn classify_type(space: &QuadraticSpace, s: &Subspace) -> Result<FormType, FormError> {
    Ok(witt_decomposition(space, s)?.form_type())
}

/// The ambient space in the coordinate order
/// `z, e_0, f_0, x, y, e_1, f_1, ..., e_{d-2}, f_{d-2}`.
///
/// `<z>` has `β(z, z) = 1`, each `(e_i, f_i)` is a hyperbolic pair and `<x, y>`
/// carries `diag(1, -ν)` with `ν` the first non-square, so it is anisotropic.
#[derive(Clone, Debug)]
pub struct StandardModel {
    space: QuadraticSpace,
    d: usize,
    nu: Fe,
}

impl StandardModel {
    pub const Z: usize = 0;
    pub const E0: usize = 1;
    pub const F0: usize = 2;
    pub const X: usize = 3;
    pub const Y: usize = 4;

    pub fn new(field: &Field, d: usize) -> Result<StandardModel, FormError> {
        if d < 2 {
            return Err(FormError::BadRank(d));
        }
        let n = 2 * d + 1;
        let nu = field.first_nonsquare();
        let mut j = Matrix::zeros(n, n);
        j.set(Self::Z, Self::Z, Fe::ONE);
        for i in 0..=d - 2 {
            let (e, fi) = (Self::e(i), Self::f(i));
            j.set(e, fi, Fe::ONE);
            j.set(fi, e, Fe::ONE);
        }
        j.set(Self::X, Self::X, Fe::ONE);
        j.set(Self::Y, Self::Y, field.neg(nu));
        let space = QuadraticSpace::new(field.clone(), j)?;
        Ok(StandardModel { space, d, nu })
    }

    /// Coordinate of `e_i`.
    pub fn e(i: usize) -> usize {
        if i == 0 {
            Self::E0
        } else {
            3 + 2 * i
        }
    }

    /// Coordinate of `f_i`.
    pub fn f(i: usize) -> usize {
        if i == 0 {
            Self::F0
        } else {
            4 + 2 * i
        }
    }

    pub fn space(&self) -> &QuadraticSpace {
        &self.space
    }

    pub fn field(&self) -> &Field {
        self.space.field()
    }

    pub fn rank(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        2 * self.d + 1
    }

    pub fn nu(&self) -> Fe {
        self.nu
    }

    pub fn unit(&self, coord: usize) -> Vector {
        let mut v = vec![Fe::ZERO; self.dim()];
        v[coord] = Fe::ONE;
        v
    }

    pub fn w_coords(&self) -> std::ops::Range<usize> {
        0..3
    }

    pub fn u_coords(&self) -> std::ops::Range<usize> {
        3..self.dim()
    }

    /// `W = <z, e_0, f_0>`.
    pub fn w(&self) -> Subspace {
        let rows: Vec<Vector> = self.w_coords().map(|c| self.unit(c)).collect();
        Subspace::span(self.field(), self.dim(), &rows)
    }

    /// `U = W^⊥ = <x, y, e_1, f_1, ...>`.
    pub fn u(&self) -> Subspace {
        let rows: Vec<Vector> = self.u_coords().map(|c| self.unit(c)).collect();
        Subspace::span(self.field(), self.dim(), &rows)
    }

    pub fn kappa(&self, v: &[Fe]) -> Fe {
        self.space.kappa(v)
    }

    pub fn beta(&self, u: &[Fe], v: &[Fe]) -> Fe {
        self.space.beta(u, v)
    }
}

impl fmt::Display for StandardModel {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.field().spec();
        write!(out, "Q({}, {}^{})", 2 * self.d, s.p, s.k)
    }
}
