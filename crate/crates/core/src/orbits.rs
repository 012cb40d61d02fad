//! Orbit partitions of a group acting on an id-indexed universe of objects.
//!
//! Each generator is first resolved to a permutation of ids; orbit closure then
//! runs on integer arrays only.

use std::collections::HashMap;
use std::hash::Hash;

use thiserror::Error;

use crate::exec::Exec;
use crate::gf::Field;
use crate::grp::{act_point, act_subspace, w_block, GroupElement};
use crate::linform::{projective_vectors, scale, Vector};
use crate::quadric::QuadricModel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrbitError {
    #[error("image of object {object} under generator {generator} is not in the universe")]
    ActionEscape { object: usize, generator: usize },
    #[error("generator {generator} is not injective on the universe")]
    NotBijective { generator: usize },
    #[error("image of orbit {orbit} meets more than one orbit")]
    SplitImage { orbit: usize },
}

/// A permutation of `0..n` given by its images.
pub type Permutation = Vec<u32>;

/// Resolves `act(object)` to ids for every object of the universe.
pub fn permutation<T, F>(objects: &[T], generator: usize, exec: Exec, lookup: F) -> Result<Permutation, OrbitError>
where
    T: Sync,
    F: Fn(&T) -> Option<u32> + Sync + Send,
{
    let images = exec.map(objects, |o| lookup(o));
    let mut perm = Vec::with_capacity(objects.len());
    let mut hit = vec![false; objects.len()];
    for (object, img) in images.into_iter().enumerate() {
        let j = img.ok_or(OrbitError::ActionEscape { object, generator })?;
        if std::mem::replace(&mut hit[j as usize], true) {
            return Err(OrbitError::NotBijective { generator });
        }
        perm.push(j);
    }
    Ok(perm)
}

/// Permutations induced by `gens` on `objects`, where `index` gives object ids.
pub fn permutations<T, F>(
    objects: &[T],
    index: &HashMap<T, u32>,
    gens: &[GroupElement],
    exec: Exec,
    act: F,
) -> Result<Vec<Permutation>, OrbitError>
where
    T: Sync + Eq + Hash,
    F: Fn(&GroupElement, &T) -> T + Sync + Send,
{
    gens.iter().enumerate().map(|(gi, g)| permutation(objects, gi, exec, |o| index.get(&act(g, o)).copied())).collect()
}

/// Permutations of the point ids of `quadric` induced by `gens`.
pub fn point_permutations(
    quadric: &QuadricModel,
    gens: &[GroupElement],
    exec: Exec,
) -> Result<Vec<Permutation>, OrbitError> {
    let f = quadric.model().field();
    gens.iter()
        .enumerate()
        .map(|(gi, g)| permutation(quadric.points(), gi, exec, |p| quadric.point_id(act_point(f, g, p).rep())))
        .collect()
}

/// Permutations of the maximal ids of `quadric` induced by `gens`.
pub fn maximal_permutations(
    quadric: &QuadricModel,
    gens: &[GroupElement],
    exec: Exec,
) -> Result<Vec<Permutation>, OrbitError> {
    let f = quadric.model().field();
    gens.iter()
        .enumerate()
        .map(|(gi, g)| permutation(quadric.maximals(), gi, exec, |m| quadric.maximal_id(&act_subspace(f, g, m))))
        .collect()
}

/// All nonzero vectors of `W` (3-vectors), in lexicographic order.
pub fn w_vectors(f: &Field) -> Vec<Vector> {
    projective_vectors(f, 3)
        .into_iter()
        .flat_map(|v| f.nonzero().map(move |c| scale(f, c, &v)).collect::<Vec<_>>())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Orbits of `gens` on the nonzero vectors of `W` (vectors, not points),
/// acting through their `W`-blocks.
pub fn w_vector_partition(
    f: &Field,
    gens: &[GroupElement],
    exec: Exec,
) -> Result<(Vec<Vector>, OrbitPartition), OrbitError> {
    let vectors = w_vectors(f);
    let index: HashMap<Vector, u32> = vectors.iter().cloned().enumerate().map(|(i, v)| (v, i as u32)).collect();
    let blocks: Vec<GroupElement> = gens.iter().map(|g| GroupElement::new(w_block(g))).collect();
    let perms = permutations(&vectors, &index, &blocks, exec, |g, v| g.act_vector(f, v))?;
    let part = OrbitPartition::from_permutations(vectors.len(), &perms);
    Ok((vectors, part))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitPartition {
    orbit_of: Vec<u32>,
    orbits: Vec<Vec<u32>>,
}

impl OrbitPartition {
    /// Orbits of the group generated by `perms` on `0..n`. Seeds are taken in
    /// increasing id order, so orbit `i` has the `i`-th smallest representative.
    pub fn from_permutations(n: usize, perms: &[Permutation]) -> OrbitPartition {
        const UNSEEN: u32 = u32::MAX;
        let mut orbit_of = vec![UNSEEN; n];
        let mut orbits = Vec::new();
        for seed in 0..n {
            if orbit_of[seed] != UNSEEN {
                continue;
            }
            let id = orbits.len() as u32;
            orbit_of[seed] = id;
            let mut members = vec![seed as u32];
            let mut head = 0;
            while head < members.len() {
                let x = members[head] as usize;
                head += 1;
                for p in perms {
                    let y = p[x];
                    if orbit_of[y as usize] == UNSEEN {
                        orbit_of[y as usize] = id;
                        members.push(y);
                    }
                }
            }
            members.sort_unstable();
            orbits.push(members);
        }
        OrbitPartition { orbit_of, orbits }
    }

    pub fn universe(&self) -> usize {
        self.orbit_of.len()
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn orbit_of(&self, object: u32) -> u32 {
        self.orbit_of[object as usize]
    }

    /// Members of orbit `id`, ascending.
    pub fn orbit(&self, id: u32) -> &[u32] {
        &self.orbits[id as usize]
    }

    pub fn orbits(&self) -> &[Vec<u32>] {
        &self.orbits
    }

    pub fn representative(&self, id: u32) -> u32 {
        self.orbits[id as usize][0]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.orbits.iter().map(Vec::len).collect()
    }

    /// Whether every orbit is mapped into itself by each permutation.
    pub fn is_closed_under(&self, perms: &[Permutation]) -> bool {
        perms.iter().all(|p| p.iter().enumerate().all(|(x, &y)| self.orbit_of[x] == self.orbit_of[y as usize]))
    }

    /// The orbit containing the image of orbit `id` under `perm`, after
    /// checking that the whole orbit lands there.
    pub fn image_of_orbit(&self, id: u32, perm: &Permutation) -> Result<u32, OrbitError> {
        let members = self.orbit(id);
        let target = self.orbit_of[perm[members[0] as usize] as usize];
        if members.iter().any(|&x| self.orbit_of[perm[x as usize] as usize] != target) {
            return Err(OrbitError::SplitImage { orbit: id as usize });
        }
        Ok(target)
    }

    /// [`Self::image_of_orbit`] for every orbit.
    pub fn orbit_images(&self, perm: &Permutation) -> Result<Vec<u32>, OrbitError> {
        (0..self.len() as u32).map(|i| self.image_of_orbit(i, perm)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grp::{group_a, omega_w, tau};
    use crate::linform::StandardModel;

    fn setup(p: u32, d: usize) -> (QuadricModel, crate::grp::GeneratedGroup) {
        let f = Field::prime(p).unwrap();
        let model = StandardModel::new(&f, d).unwrap();
        let b = omega_w(&model).unwrap();
        (QuadricModel::build(model, Exec::Sequential), b)
    }

    #[test]
    fn identity_gives_singletons() {
        let (quadric, _) = setup(3, 2);
        let id = vec![GroupElement::identity(5)];
        let perms = maximal_permutations(&quadric, &id, Exec::Sequential).unwrap();
        let part = OrbitPartition::from_permutations(40, &perms);
        assert_eq!(part.len(), 40);
        assert!(part.sizes().iter().all(|&s| s == 1));
        let part = OrbitPartition::from_permutations(7, &[]);
        assert_eq!(part.len(), 7);
    }

    #[test]
    fn small_permutation_example() {
        let perms = vec![vec![1, 2, 0, 3, 5, 4]];
        let part = OrbitPartition::from_permutations(6, &perms);
        assert_eq!(part.orbits(), &[vec![0, 1, 2], vec![3], vec![4, 5]]);
        assert_eq!(part.orbit_of(5), 2);
        assert_eq!(part.representative(2), 4);
        assert!(part.is_closed_under(&perms));
        let swap = vec![3, 4, 5, 0, 1, 2];
        assert!(matches!(part.image_of_orbit(0, &swap), Err(OrbitError::SplitImage { orbit: 0 })));
    }

    #[test]
    fn escape_and_bijectivity_errors() {
        let objs = [0u32, 1, 2];
        assert_eq!(
            permutation(&objs, 4, Exec::Sequential, |&x| if x == 1 { None } else { Some(x) }),
            Err(OrbitError::ActionEscape { object: 1, generator: 4 })
        );
        assert_eq!(
            permutation(&objs, 0, Exec::Sequential, |_| Some(0)),
            Err(OrbitError::NotBijective { generator: 0 })
        );
    }

    #[test]
    fn orbit_sizes_match_stabilizers() {
        let (quadric, b) = setup(3, 2);
        let f = quadric.model().field().clone();
        let perms = point_permutations(&quadric, b.generators(), Exec::Sequential).unwrap();
        let part = OrbitPartition::from_permutations(quadric.points().len(), &perms);
        assert_eq!(part.sizes().iter().sum::<usize>(), 40);
        assert!(part.is_closed_under(&perms));
        for id in 0..part.len() as u32 {
            let rep = &quadric.points()[part.representative(id) as usize];
            let stab = b.elements().iter().filter(|g| &act_point(&f, g, rep) == rep).count();
            assert_eq!(stab * part.orbit(id).len(), b.order());
        }
        let mperms = maximal_permutations(&quadric, b.generators(), Exec::Sequential).unwrap();
        let mpart = OrbitPartition::from_permutations(quadric.maximals().len(), &mperms);
        for id in 0..mpart.len() as u32 {
            let rep = &quadric.maximals()[mpart.representative(id) as usize];
            let stab = b.elements().iter().filter(|g| &act_subspace(&f, g, rep) == rep).count();
            assert_eq!(stab * mpart.orbit(id).len(), b.order());
        }
    }

    /// Orbits recomputed by applying every group element to every object.
    #[test]
    fn partition_matches_full_group_action() {
        let (quadric, b) = setup(5, 2);
        let f = quadric.model().field().clone();
        let perms = maximal_permutations(&quadric, b.generators(), Exec::Parallel).unwrap();
        let part = OrbitPartition::from_permutations(quadric.maximals().len(), &perms);
        for (i, m) in quadric.maximals().iter().enumerate() {
            let mut orbit: Vec<u32> =
                b.elements().iter().map(|g| quadric.maximal_id(&act_subspace(&f, g, m)).unwrap()).collect();
            orbit.sort_unstable();
            orbit.dedup();
            assert_eq!(orbit, part.orbit(part.orbit_of(i as u32)));
        }
    }

    #[test]
    fn tau_on_orbits() {
        let (quadric, b) = setup(3, 2);
        let model = quadric.model().clone();
        let t = tau(&model);
        let tp = &point_permutations(&quadric, std::slice::from_ref(&t), Exec::Sequential).unwrap()[0];
        let tm = &maximal_permutations(&quadric, std::slice::from_ref(&t), Exec::Sequential).unwrap()[0];
        let pperms = point_permutations(&quadric, b.generators(), Exec::Sequential).unwrap();
        let ppart = OrbitPartition::from_permutations(quadric.points().len(), &pperms);
        for id in 0..ppart.len() as u32 {
            assert_eq!(ppart.image_of_orbit(id, tp).unwrap(), id);
        }
        let mperms = maximal_permutations(&quadric, b.generators(), Exec::Sequential).unwrap();
        let mpart = OrbitPartition::from_permutations(quadric.maximals().len(), &mperms);
        for id in 0..mpart.len() as u32 {
            let img = mpart.image_of_orbit(id, tm).unwrap();
            assert_ne!(img, id);
            assert_eq!(mpart.image_of_orbit(img, tm).unwrap(), id);
        }
        // A-orbits on points equal B-orbits
        let a = group_a(&model, &b).unwrap();
        let aperms = point_permutations(&quadric, a.generators(), Exec::Sequential).unwrap();
        assert_eq!(OrbitPartition::from_permutations(quadric.points().len(), &aperms), ppart);
    }
}
