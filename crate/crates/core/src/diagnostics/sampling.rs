//! Seeded random vectors and families shared by the estimators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::measure::{AtomSpace, DisjointFamily, KVec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Exp(1)` magnitude with a fair random sign.
pub fn signed_exponential<R: Rng>(rng: &mut R) -> f64 {
    let m: f64 = rng.sample(Exp1);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// I.i.d. signed exponential coordinates; with probability ½ a random
/// subset of atoms (at least one kept) is zeroed.
pub fn signed_exponential_vector<R: Rng>(space: &AtomSpace, rng: &mut R) -> KVec {
    let n = space.len();
    let mut vals: Vec<f64> = (0..n).map(|_| signed_exponential(rng)).collect();
    if n > 1 && rng.gen_bool(0.5) {
        let keep = rng.gen_range(1..=n);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        for &i in &idx[keep..] {
            vals[i] = 0.0;
        }
    }
    KVec::new(space, vals).expect("length matches space")
}

/// `n` disjoint members: a random set of atoms split into `n` nonempty
/// groups, each carrying random positive values. With `successive`, groups
/// are consecutive runs in atom order.
pub fn random_family<R: Rng>(space: &AtomSpace, n: usize, successive: bool, rng: &mut R) -> DisjointFamily {
    let total = space.len();
    assert!(n >= 1 && n <= total, "family size {n} on {total} atoms");
    let used = rng.gen_range(n..=total);
    let mut atoms: Vec<usize> = (0..total).collect();
    atoms.shuffle(rng);
    atoms.truncate(used);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    if successive {
        atoms.sort_unstable();
        let mut cuts: Vec<usize> = (1..used).collect();
        cuts.shuffle(rng);
        cuts.truncate(n - 1);
        cuts.sort_unstable();
        let mut start = 0;
        for (k, &c) in cuts.iter().chain(std::iter::once(&used)).enumerate() {
            groups[k] = atoms[start..c].to_vec();
            start = c;
        }
    } else {
        for (k, &a) in atoms.iter().enumerate() {
            let g = if k < n { k } else { rng.gen_range(0..n) };
            groups[g].push(a);
        }
    }
    let members = groups
        .into_iter()
        .map(|g| {
            let mut v = KVec::zeros(space);
            for a in g {
                v.values_mut()[a] = (0.5 * standard_normal(rng)).exp();
            }
            v
        })
        .collect();
    DisjointFamily::new(members).expect("groups are disjoint and nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_are_valid_and_seeded() {
        let space = AtomSpace::counting(20).unwrap();
        for seed in 0..50 {
            let mut r = rng(seed);
            let n = 1 + (seed as usize % 10);
            let fam = random_family(&space, n, seed % 2 == 0, &mut r);
            assert_eq!(fam.len(), n);
            if seed % 2 == 0 {
                assert!(fam.is_successive());
            }
            let again = random_family(&space, n, seed % 2 == 0, &mut rng(seed));
            assert_eq!(fam.sum(), again.sum());
        }
    }

    #[test]
    fn exponential_vectors_are_nonzero() {
        let space = AtomSpace::counting(5).unwrap();
        let mut r = rng(7);
        for _ in 0..200 {
            assert!(!signed_exponential_vector(&space, &mut r).is_zero());
        }
    }
}
