//! Hemisystems from pairs of `B`-orbits, and an independent verifier.
//!
//! With `B ⊴ A` of index 2, equal point orbits, and each `A`-orbit on maximals
//! splitting into two `B`-orbits swapped by `τ`, picking one half of every
//! `A`-orbit gives a hemisystem.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::exec::Exec;
use crate::gf::{Field, FieldSpec};
use crate::grp::{act_subspace, group_a, omega_w, tau, GeneratedGroup, GroupElement, GroupError};
use crate::linform::{FormError, Matrix, StandardModel};
use crate::orbits::{maximal_permutations, point_permutations, OrbitError, OrbitPartition, Permutation};
use crate::quadric::QuadricModel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HemiError {
    #[error("mask has wrong length: expected {expected} bits ({} hex digits)", expected.div_ceil(4))]
    MaskLength { expected: usize },
    #[error("2^{m} hemisystems exceed the cap {cap}")]
    TooManyOrbits { m: usize, cap: u64 },
    #[error("unknown maximal id {0}")]
    UnknownMaximalId(u32),
    #[error("maximal id {0} listed twice")]
    DuplicateMaximalId(u32),
    #[error("orbit-pair hypotheses fail: {0}")]
    HypothesesFailed(String),
    #[error("assembled set failed verification")]
    VerificationFailed,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Per-A-orbit choice bits. Bit `i` selects which `B`-orbit of `A`-orbit `i`
/// is taken: 0 for the one holding the smaller maximal id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    bits: Vec<bool>,
}

impl Mask {
    pub fn zeros(m: usize) -> Mask {
        Mask { bits: vec![false; m] }
    }

    pub fn ones(m: usize) -> Mask {
        Mask { bits: vec![true; m] }
    }

    /// Bits of `n`, least significant first. Requires `m ≤ 64`.
    pub fn from_index(n: u64, m: usize) -> Mask {
        assert!(m <= 64);
        Mask { bits: (0..m).map(|i| n >> i & 1 == 1).collect() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Mask {
        Mask { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn complement(&self) -> Mask {
        Mask { bits: self.bits.iter().map(|b| !b).collect() }
    }

    /// Hex digits of `Σ bit_i 2^i`, most significant first, exactly `⌈m/4⌉` of them.
    pub fn to_hex(&self) -> String {
        let digits = self.bits.len().div_ceil(4);
        (0..digits)
            .rev()
            .map(|d| {
                let nib = (0..4).filter(|&j| self.bits.get(4 * d + j) == Some(&true)).fold(0u32, |a, j| a | 1 << j);
                char::from_digit(nib, 16).unwrap()
            })
            .collect()
    }

    /// Inverse of [`Mask::to_hex`]; the digit count must be `⌈m/4⌉` and no
    /// bit at or above `m` may be set.
    pub fn from_hex(s: &str, m: usize) -> Result<Mask, HemiError> {
        let s = s.trim();
        let s = s.strip_prefix("0x").unwrap_or(s);
        if s.len() != m.div_ceil(4) {
            return Err(HemiError::MaskLength { expected: m });
        }
        let mut bits = vec![false; 4 * s.len()];
        for (d, c) in s.chars().rev().enumerate() {
            let nib = c.to_digit(16).ok_or(HemiError::MaskLength { expected: m })?;
            for j in 0..4 {
                bits[4 * d + j] = nib >> j & 1 == 1;
            }
        }
        if bits[m..].iter().any(|&b| b) {
            return Err(HemiError::MaskLength { expected: m });
        }
        bits.truncate(m);
        Ok(Mask { bits })
    }
}

impl fmt::Display for Mask {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.write_str(&self.to_hex())
    }
}

/// A failed hypothesis, with the object that shows it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// `τ⁻¹ b τ ∉ B` for this element index of `B`.
    NotNormal { element: usize },
    /// `τ ∈ B`, or `|A| ≠ 2|B|`.
    NotIndexTwo { a_order: usize, b_order: usize },
    /// `τ` moves this point orbit of `B`.
    PointOrbitMoved { orbit: u32, image: u32 },
    /// `τ` maps this maximal orbit of `B` onto itself.
    MaximalOrbitFixed { orbit: u32 },
    /// `τ` pairs two maximal orbits of different sizes.
    UnequalPair { orbit: u32, image: u32 },
    /// The image of an orbit under `τ` is not a single orbit.
    SplitImage { orbit: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ABReport {
    pub normal_ok: bool,
    pub points_ok: bool,
    pub split_ok: bool,
    /// `A`-orbits on maximals.
    pub m: usize,
    /// `B`-orbits on maximals.
    pub n_b: usize,
    pub witnesses: Vec<Witness>,
}

impl ABReport {
    pub fn all_ok(&self) -> bool {
        self.normal_ok && self.points_ok && self.split_ok
    }
}

/// An element together with the permutations it induces on point and maximal ids.
pub struct ResolvedElement<'a> {
    pub element: &'a GroupElement,
    pub points: &'a Permutation,
    pub maximals: &'a Permutation,
}

/// Checks the three hypotheses for `B`, `A = <B, t>` and the involution `t`,
/// given `B`'s orbit partitions.
pub fn ab_check(
    field: &Field,
    b: &GeneratedGroup,
    a: &GeneratedGroup,
    points: &OrbitPartition,
    maximals: &OrbitPartition,
    t: &ResolvedElement<'_>,
) -> ABReport {
    let (t_points, t_maximals) = (t.points, t.maximals);
    let t = t.element;
    let mut witnesses = Vec::new();

    let t_inv = t.inverse(field);
    let mut normal_ok = true;
    if b.contains(t) || a.order() != 2 * b.order() {
        normal_ok = false;
        witnesses.push(Witness::NotIndexTwo { a_order: a.order(), b_order: b.order() });
    }
    if let Some(element) = b.elements().iter().position(|g| !b.contains(&t_inv.mul(field, g).mul(field, t))) {
        normal_ok = false;
        witnesses.push(Witness::NotNormal { element });
    }

    let mut points_ok = true;
    for id in 0..points.len() as u32 {
        match points.image_of_orbit(id, t_points) {
            Ok(img) if img == id => {}
            Ok(image) => {
                points_ok = false;
                witnesses.push(Witness::PointOrbitMoved { orbit: id, image });
                break;
            }
            Err(_) => {
                points_ok = false;
                witnesses.push(Witness::SplitImage { orbit: id });
                break;
            }
        }
    }

    let mut split_ok = true;
    let mut classes: HashSet<(u32, u32)> = HashSet::new();
    for id in 0..maximals.len() as u32 {
        let img = match maximals.image_of_orbit(id, t_maximals) {
            Ok(img) => img,
            Err(_) => {
                if split_ok {
                    witnesses.push(Witness::SplitImage { orbit: id });
                }
                split_ok = false;
                classes.insert((id, id));
                continue;
            }
        };
        classes.insert((id.min(img), id.max(img)));
        if img == id {
            if split_ok {
                witnesses.push(Witness::MaximalOrbitFixed { orbit: id });
            }
            split_ok = false;
        } else if maximals.orbit(id).len() != maximals.orbit(img).len() {
            if split_ok {
                witnesses.push(Witness::UnequalPair { orbit: id, image: img });
            }
            split_ok = false;
        }
    }

    ABReport { normal_ok, points_ok, split_ok, m: classes.len(), n_b: maximals.len(), witnesses }
}

/// `B`, `A`, `τ`, the quadric, and the orbit data for one `(q, d)`.
pub struct Construction {
    quadric: QuadricModel,
    b: GeneratedGroup,
    a: GeneratedGroup,
    tau: GroupElement,
    point_orbits: OrbitPartition,
    maximal_orbits: OrbitPartition,
    tau_points: Permutation,
    tau_maximals: Permutation,
}

impl Construction {
    pub fn new(field: &Field, d: usize, exec: Exec) -> Result<Construction, HemiError> {
        Construction::from_model(StandardModel::new(field, d)?, exec)
    }

    pub fn from_model(model: StandardModel, exec: Exec) -> Result<Construction, HemiError> {
        let b = omega_w(&model)?;
        let a = group_a(&model, &b)?;
        let t = tau(&model);
        let quadric = QuadricModel::build(model, exec);
        let pperms = point_permutations(&quadric, b.generators(), exec)?;
        let point_orbits = OrbitPartition::from_permutations(quadric.points().len(), &pperms);
        let mperms = maximal_permutations(&quadric, b.generators(), exec)?;
        let maximal_orbits = OrbitPartition::from_permutations(quadric.maximals().len(), &mperms);
        let tau_points = point_permutations(&quadric, std::slice::from_ref(&t), exec)?.remove(0);
        let tau_maximals = maximal_permutations(&quadric, std::slice::from_ref(&t), exec)?.remove(0);
        Ok(Construction { quadric, b, a, tau: t, point_orbits, maximal_orbits, tau_points, tau_maximals })
    }

    pub fn quadric(&self) -> &QuadricModel {
        &self.quadric
    }

    pub fn model(&self) -> &StandardModel {
        self.quadric.model()
    }

    pub fn field(&self) -> &Field {
        self.model().field()
    }

    pub fn b(&self) -> &GeneratedGroup {
        &self.b
    }

    pub fn a(&self) -> &GeneratedGroup {
        &self.a
    }

    pub fn tau(&self) -> &GroupElement {
        &self.tau
    }

    pub fn point_orbits(&self) -> &OrbitPartition {
        &self.point_orbits
    }

    pub fn maximal_orbits(&self) -> &OrbitPartition {
        &self.maximal_orbits
    }

    pub fn tau_maximals(&self) -> &Permutation {
        &self.tau_maximals
    }

    pub fn ab_report(&self) -> ABReport {
        let t = ResolvedElement { element: &self.tau, points: &self.tau_points, maximals: &self.tau_maximals };
        ab_check(self.field(), &self.b, &self.a, &self.point_orbits, &self.maximal_orbits, &t)
    }

    /// [`ab_check`] with `t` in place of `τ`; `A` is regenerated from `B` and `t`.
    pub fn ab_report_with(&self, t: &GroupElement, exec: Exec) -> Result<ABReport, HemiError> {
        let mut gens = self.b.generators().to_vec();
        gens.push(t.clone());
        let a = GeneratedGroup::closure(self.field(), gens)?;
        let tp = point_permutations(&self.quadric, std::slice::from_ref(t), exec)?.remove(0);
        let tm = maximal_permutations(&self.quadric, std::slice::from_ref(t), exec)?.remove(0);
        let t = ResolvedElement { element: t, points: &tp, maximals: &tm };
        Ok(ab_check(self.field(), &self.b, &a, &self.point_orbits, &self.maximal_orbits, &t))
    }

    /// The `A`-orbits on maximals as pairs `(O, O^τ)` of `B`-orbit ids with
    /// `O < O^τ`, ordered by `O`.
    pub fn a_orbits(&self) -> Result<Vec<(u32, u32)>, HemiError> {
        let report = self.ab_report();
        if !report.all_ok() {
            return Err(HemiError::HypothesesFailed(format!("{:?}", report.witnesses)));
        }
        let images = self.maximal_orbits.orbit_images(&self.tau_maximals)?;
        Ok(images.iter().enumerate().filter(|&(i, &j)| (i as u32) < j).map(|(i, &j)| (i as u32, j)).collect())
    }

    /// `τ`-image orbit of every `B`-orbit on maximals.
    pub fn tau_pairing(&self) -> Result<Vec<u32>, HemiError> {
        Ok(self.maximal_orbits.orbit_images(&self.tau_maximals)?)
    }

    /// Union of the `B`-orbits selected by `mask`.
    pub fn assemble(&self, mask: &Mask) -> Result<HemisystemCertificate, HemiError> {
        let pairs = self.a_orbits()?;
        if mask.len() != pairs.len() {
            return Err(HemiError::MaskLength { expected: pairs.len() });
        }
        let mut members: Vec<u32> = pairs
            .iter()
            .enumerate()
            .flat_map(|(i, &(lo, hi))| self.maximal_orbits.orbit(if mask.bit(i) { hi } else { lo }).iter().copied())
            .collect();
        members.sort_unstable();
        let model = self.model();
        Ok(HemisystemCertificate {
            field: self.field().spec().clone(),
            d: model.rank(),
            gram: model.space().gram().clone(),
            total_maximals: self.quadric.maximals().len(),
            degree: self.quadric.t_plus_one() / 2,
            generators: self.b.generators().iter().map(|g| g.matrix().clone()).collect(),
            mask: mask.clone(),
            members,
        })
    }

    /// [`Construction::assemble`] followed by [`verify_hemisystem`]; an
    /// assembled set that fails is an internal error.
    pub fn construct(&self, mask: &Mask, exec: Exec) -> Result<HemisystemCertificate, HemiError> {
        let cert = self.assemble(mask)?;
        if !verify_hemisystem(&self.quadric, &cert.members, exec)?.verified {
            return Err(HemiError::VerificationFailed);
        }
        Ok(cert)
    }
}

/// Default bound on the number of hemisystems [`enumerate_all_hemisystems`] produces.
pub const DEFAULT_CAP: u64 = 1 << 16;

/// Every mask's hemisystem, in mask order. Fails early if `2^m > cap`.
pub fn enumerate_all_hemisystems(c: &Construction, cap: u64) -> Result<Vec<HemisystemCertificate>, HemiError> {
    let m = c.a_orbits()?.len();
    if m >= 64 || 1u64 << m > cap {
        return Err(HemiError::TooManyOrbits { m, cap });
    }
    (0..1u64 << m).map(|n| c.assemble(&Mask::from_index(n, m))).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HemisystemCertificate {
    pub field: FieldSpec,
    pub d: usize,
    pub gram: Matrix,
    pub total_maximals: usize,
    /// `(t + 1) / 2`
    pub degree: u64,
    pub generators: Vec<Matrix>,
    pub mask: Mask,
    /// Sorted maximal ids.
    pub members: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    /// `(t + 1) / 2`
    pub target: u64,
    /// Degree → number of points with that degree.
    pub histogram: BTreeMap<u64, usize>,
    pub size: usize,
    pub verified: bool,
}

impl VerifyReport {
    fn from_degrees(target: u64, size: usize, degrees: &[u64]) -> VerifyReport {
        let mut histogram = BTreeMap::new();
        for &dg in degrees {
            *histogram.entry(dg).or_insert(0) += 1;
        }
        let verified = histogram.len() == 1 && histogram.contains_key(&target);
        VerifyReport { target, histogram, size, verified }
    }
}

fn membership(quadric: &QuadricModel, members: &[u32]) -> Result<Vec<bool>, HemiError> {
    let mut inside = vec![false; quadric.maximals().len()];
    for &id in members {
        let slot = inside.get_mut(id as usize).ok_or(HemiError::UnknownMaximalId(id))?;
        if std::mem::replace(slot, true) {
            return Err(HemiError::DuplicateMaximalId(id));
        }
    }
    Ok(inside)
}

/// Counts, for every point, the members of `H` through it using the
/// incidence index. Verified iff every count is `(t + 1) / 2`.
pub fn verify_hemisystem(quadric: &QuadricModel, members: &[u32], exec: Exec) -> Result<VerifyReport, HemiError> {
    let inside = membership(quadric, members)?;
    let degrees = exec.map_range(quadric.points().len(), |p| {
        quadric.maximals_on(p as u32).iter().filter(|&&m| inside[m as usize]).count() as u64
    });
    Ok(VerifyReport::from_degrees(quadric.t_plus_one() / 2, members.len(), &degrees))
}

/// [`verify_hemisystem`] from raw subspace membership, bypassing the index.
pub fn verify_hemisystem_raw(quadric: &QuadricModel, members: &[u32], exec: Exec) -> Result<VerifyReport, HemiError> {
    membership(quadric, members)?;
    let f = quadric.model().field();
    let subspaces: Vec<_> = members.iter().map(|&m| &quadric.maximals()[m as usize]).collect();
    let degrees = exec.map(quadric.points(), |p| subspaces.iter().filter(|m| m.contains(f, p.rep())).count() as u64);
    Ok(VerifyReport::from_degrees(quadric.t_plus_one() / 2, members.len(), &degrees))
}

/// Whether each generator maps `H` into itself, acting on the subspaces directly.
pub fn is_invariant(quadric: &QuadricModel, members: &[u32], gens: &[GroupElement], exec: Exec) -> bool {
    let f = quadric.model().field();
    let set: HashSet<u32> = members.iter().copied().collect();
    gens.iter().all(|g| {
        exec.all(members, |&m| {
            quadric.maximal_id(&act_subspace(f, g, &quadric.maximals()[m as usize])).is_some_and(|id| set.contains(&id))
        })
    })
}

/// `H` with the `B`-orbit `out` replaced by the `B`-orbit `inn`.
pub fn swap_orbit(orbits: &OrbitPartition, members: &[u32], out: u32, inn: u32) -> Vec<u32> {
    let mut h: Vec<u32> = members.iter().copied().filter(|&m| orbits.orbit_of(m) != out).collect();
    h.extend_from_slice(orbits.orbit(inn));
    h.sort_unstable();
    h.dedup();
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c32() -> Construction {
        Construction::new(&Field::prime(3).unwrap(), 2, Exec::Sequential).unwrap()
    }

    #[test]
    fn mask_hex_roundtrip() {
        for m in 1..=13 {
            for n in [0u64, 1, 5, (1 << m) - 1] {
                let mask = Mask::from_index(n & ((1 << m) - 1), m);
                assert_eq!(mask.to_hex().len(), m.div_ceil(4));
                assert_eq!(Mask::from_hex(&mask.to_hex(), m).unwrap(), mask);
            }
        }
        assert_eq!(Mask::from_index(0b1_0110, 5).to_hex(), "16");
        assert_eq!(Mask::from_hex("7", 3).unwrap(), Mask::ones(3));
        assert_eq!(Mask::from_hex("f", 3), Err(HemiError::MaskLength { expected: 3 }));
        assert_eq!(Mask::from_hex("00", 3), Err(HemiError::MaskLength { expected: 3 }));
        assert_eq!(Mask::from_hex("g", 3), Err(HemiError::MaskLength { expected: 3 }));
    }

    #[test]
    fn ab_hypotheses_at_3_2() {
        let c = c32();
        let r = c.ab_report();
        assert!(r.all_ok(), "{r:?}");
        assert_eq!(r.n_b, 2 * r.m);
        assert!(r.witnesses.is_empty());
    }

    #[test]
    fn identity_in_place_of_tau_fails_split() {
        let c = c32();
        let r = c.ab_report_with(&GroupElement::identity(5), Exec::Sequential).unwrap();
        assert!(!r.split_ok);
        assert!(!r.normal_ok);
        assert!(r.points_ok);
        assert!(r.witnesses.contains(&Witness::MaximalOrbitFixed { orbit: 0 }));
    }

    #[test]
    fn assemble_halves_and_complements() {
        let c = c32();
        let m = c.a_orbits().unwrap().len();
        let h0 = c.assemble(&Mask::zeros(m)).unwrap();
        assert_eq!(h0.members.len(), 20);
        assert!(h0.members.contains(&0));
        let h1 = c.assemble(&Mask::ones(m)).unwrap();
        let union: HashSet<u32> = h0.members.iter().chain(&h1.members).copied().collect();
        assert_eq!(union.len(), 40);
        for h in [&h0, &h1] {
            let r = verify_hemisystem(c.quadric(), &h.members, Exec::Sequential).unwrap();
            assert!(r.verified);
            assert_eq!(r.histogram, BTreeMap::from([(2, 40)]));
            assert_eq!(verify_hemisystem_raw(c.quadric(), &h.members, Exec::Sequential).unwrap(), r);
            assert!(is_invariant(c.quadric(), &h.members, c.b().generators(), Exec::Sequential));
        }
        assert_eq!(c.assemble(&Mask::zeros(m + 1)), Err(HemiError::MaskLength { expected: m }));
    }

    #[test]
    fn verifier_rejections() {
        let c = c32();
        let all: Vec<u32> = (0..40).collect();
        let r = verify_hemisystem(c.quadric(), &all, Exec::Sequential).unwrap();
        assert!(!r.verified);
        assert_eq!(r.histogram, BTreeMap::from([(4, 40)]));
        assert_eq!(verify_hemisystem(c.quadric(), &[40], Exec::Sequential), Err(HemiError::UnknownMaximalId(40)));
        assert_eq!(verify_hemisystem(c.quadric(), &[3, 3], Exec::Sequential), Err(HemiError::DuplicateMaximalId(3)));

        let h = c.assemble(&Mask::zeros(c.a_orbits().unwrap().len())).unwrap();
        let o = c.maximal_orbits().orbit_of(h.members[0]);
        let removed: Vec<u32> = h.members.iter().copied().filter(|&x| c.maximal_orbits().orbit_of(x) != o).collect();
        let r = verify_hemisystem(c.quadric(), &removed, Exec::Sequential).unwrap();
        assert!(!r.verified);
        assert!(r.histogram.len() > 1);
    }

    #[test]
    fn enumerate_all_at_3_2() {
        let c = c32();
        let all = enumerate_all_hemisystems(&c, DEFAULT_CAP).unwrap();
        let m = c.a_orbits().unwrap().len();
        assert_eq!(all.len(), 1 << m);
        let sets: HashSet<Vec<u32>> = all.iter().map(|h| h.members.clone()).collect();
        assert_eq!(sets.len(), all.len());
        assert!(matches!(enumerate_all_hemisystems(&c, 1), Err(HemiError::TooManyOrbits { .. })) == (m > 0));
    }
}
