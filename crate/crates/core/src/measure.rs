//! Finite weighted atomic measure spaces and the vectors living on them.
//!
//! Atoms are indexed `0..len()` in code; that index order is the total order
//! used for rank-function ties and for successive (block) families.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TwistError};

/// A finite atomic measure space: atom `i` has mass `weights[i] > 0`.
#[derive(Debug, Clone)]
pub struct AtomSpace {
    weights: Arc<[f64]>,
}

impl PartialEq for AtomSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.weights, &other.weights) || self.weights == other.weights
    }
}

impl AtomSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(TwistError::EmptySpace);
        }
        if let Some((index, &weight)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(TwistError::NonPositiveWeight { index, weight });
        }
        Ok(Self {
            weights: weights.into(),
        })
    }

    /// Counting measure on `n` atoms (a sequence space).
    pub fn counting(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    /// `n` atoms of mass `1/n`: a uniform discretization of `[0, 1]`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Atom `i` has mass `ratio^i`.
    pub fn geometric(n: usize, ratio: f64) -> Result<Self> {
        Self::new((0..n).map(|i| ratio.powi(i as i32)).collect())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }
}

/// A real function on an [`AtomSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct KVec {
    space: AtomSpace,
    values: Vec<f64>,
}

impl KVec {
    pub fn new(space: &AtomSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(TwistError::LengthMismatch {
                expected: space.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            space: space.clone(),
            values,
        })
    }

    pub fn zeros(space: &AtomSpace) -> Self {
        Self {
            space: space.clone(),
            values: vec![0.0; space.len()],
        }
    }

    /// The unit vector at atom `i`.
    pub fn unit(space: &AtomSpace, i: usize) -> Self {
        let mut v = Self::zeros(space);
        v.values[i] = 1.0;
        v
    }

    pub fn indicator<I: IntoIterator<Item = usize>>(space: &AtomSpace, atoms: I) -> Self {
        let mut v = Self::zeros(space);
        for i in atoms {
            v.values[i] = 1.0;
        }
        v
    }

    pub fn constant(space: &AtomSpace, c: f64) -> Self {
        Self {
            space: space.clone(),
            values: vec![c; space.len()],
        }
    }

    pub fn space(&self) -> &AtomSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn support(&self) -> Vec<usize> {
        support(self)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            space: self.space.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.space != other.space {
            return Err(TwistError::MixedSpaces);
        }
        Ok(Self {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self + c * other`, in place.
    pub fn axpy(&mut self, c: f64, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(TwistError::MixedSpaces);
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    /// Weighted pairing `Σ w_i x_i y_i`.
    pub fn pairing(&self, other: &Self) -> Result<f64> {
        if self.space != other.space {
            return Err(TwistError::MixedSpaces);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.space.weights())
            .map(|((a, b), w)| w * a * b)
            .sum())
    }

    /// Zero out every atom outside `atoms`.
    pub fn restrict(&self, atoms: &[usize]) -> Self {
        let mut out = Self::zeros(&self.space);
        for &i in atoms {
            out.values[i] = self.values[i];
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct KVecRepr {
    weights: Vec<f64>,
    values: Vec<f64>,
}

impl Serialize for KVec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KVecRepr {
            weights: self.space.weights().to_vec(),
            values: self.values.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = KVecRepr::deserialize(d)?;
        let space = AtomSpace::new(repr.weights).map_err(serde::de::Error::custom)?;
        KVec::new(&space, repr.values).map_err(serde::de::Error::custom)
    }
}

impl Serialize for AtomSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            weights: &'a [f64],
        }
        Repr {
            weights: self.weights(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            weights: Vec<f64>,
        }
        let repr = Repr::deserialize(d)?;
        AtomSpace::new(repr.weights).map_err(serde::de::Error::custom)
    }
}

/// Atoms where `x` is exactly nonzero.
pub fn support(x: &KVec) -> Vec<usize> {
    x.values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// True iff the supports are pairwise disjoint.
pub fn are_disjoint(xs: &[KVec]) -> Result<bool> {
    let Some(first) = xs.first() else {
        return Ok(true);
    };
    let mut seen = vec![false; first.len()];
    for x in xs {
        if x.space != first.space {
            return Err(TwistError::MixedSpaces);
        }
        for i in support(x) {
            if seen[i] {
                return Ok(false);
            }
            seen[i] = true;
        }
    }
    Ok(true)
}

/// Atom indices sorted by decreasing `|x|`, ties by atom order.
fn decreasing_order(x: &KVec) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x.values[b]
            .abs()
            .total_cmp(&x.values[a].abs())
            .then(a.cmp(&b))
    });
    order
}

/// `|x|` sorted in decreasing order, each value paired with the running mass
/// `T_k` of the atoms delivering the first `k` values.
pub fn decreasing_rearrangement(x: &KVec) -> Vec<(f64, f64)> {
    let w = x.space.weights();
    let mut mass = 0.0;
    decreasing_order(x)
        .into_iter()
        .map(|i| {
            mass += w[i];
            (x.values[i].abs(), mass)
        })
        .collect()
}

/// `r_x(t) = μ{s : |x(s)| > |x(t)|} + μ{s ≤ t : |x(s)| = |x(t)|}`.
pub fn rank_function(x: &KVec) -> KVec {
    let w = x.space.weights();
    let mut r = KVec::zeros(&x.space);
    let mut mass = 0.0;
    for i in decreasing_order(x) {
        mass += w[i];
        r.values[i] = mass;
    }
    r
}

/// `x · log(num / den)` on the support of `x`, zero elsewhere.
///
/// The `0 · log(anything) = 0` convention is applied before any logarithm is
/// taken, so `num` and `den` are only inspected on `support(x)`.
pub fn xlog_ratio(x: &KVec, num: &KVec, den: &KVec) -> Result<KVec> {
    if x.space != num.space || x.space != den.space {
        return Err(TwistError::MixedSpaces);
    }
    let mut out = KVec::zeros(&x.space);
    for (i, &xi) in x.values.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let (n, d) = (num.values[i], den.values[i]);
        if !(n > 0.0 && d > 0.0) {
            return Err(TwistError::LogDomain {
                index: i,
                num: n,
                den: d,
            });
        }
        out.values[i] = xi * (n / d).ln();
    }
    Ok(out)
}

/// An ordered list of pairwise disjointly supported nonzero vectors.
#[derive(Debug, Clone, Serialize)]
pub struct DisjointFamily {
    members: Vec<KVec>,
    successive: bool,
}

impl DisjointFamily {
    /// Validates disjointness and records whether the members are successive
    /// (each support lies strictly after the previous one).
    pub fn new(members: Vec<KVec>) -> Result<Self> {
        if members.is_empty() {
            return Err(TwistError::InvalidFamily("empty family".into()));
        }
        if members.iter().any(KVec::is_zero) {
            return Err(TwistError::InvalidFamily("zero member".into()));
        }
        if !are_disjoint(&members)? {
            return Err(TwistError::InvalidFamily(
                "supports are not pairwise disjoint".into(),
            ));
        }
        let successive = members.windows(2).all(|pair| {
            let prev = support(&pair[0]);
            let next = support(&pair[1]);
            prev.last() < next.first()
        });
        Ok(Self {
            members,
            successive,
        })
    }

    /// `e_0, …, e_{n-1}`.
    pub fn canonical(space: &AtomSpace, n: usize) -> Result<Self> {
        if n > space.len() {
            return Err(TwistError::InvalidFamily(format!(
                "{n} atoms requested from a space of {}",
                space.len()
            )));
        }
        Self::new((0..n).map(|i| KVec::unit(space, i)).collect())
    }

    /// The non-zero vectors among `(λ_1 u_1, λ_2 u_2, …)`.
    pub fn scaled(&self, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != self.members.len() {
            return Err(TwistError::InvalidFamily(format!(
                "{} coefficients for {} members",
                coeffs.len(),
                self.members.len()
            )));
        }
        let members: Vec<KVec> = self
            .members
            .iter()
            .zip(coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(u, &c)| u.scale(c))
            .collect();
        Self::new(members)
    }

    pub fn members(&self) -> &[KVec] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_successive(&self) -> bool {
        self.successive
    }

    pub fn space(&self) -> &AtomSpace {
        self.members[0].space()
    }

    /// `Σ λ_i u_i`.
    pub fn combine(&self, coeffs: &[f64]) -> KVec {
        let mut out = KVec::zeros(self.space());
        for (u, &c) in self.members.iter().zip(coeffs) {
            for (o, v) in out.values.iter_mut().zip(&u.values) {
                *o += c * v;
            }
        }
        out
    }

    pub fn sum(&self) -> KVec {
        self.combine(&vec![1.0; self.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_on(weights: &[f64], values: &[f64]) -> KVec {
        let space = AtomSpace::new(weights.to_vec()).unwrap();
        KVec::new(&space, values.to_vec()).unwrap()
    }

    #[test]
    fn space_rejects_bad_weights() {
        assert!(matches!(AtomSpace::new(vec![]), Err(TwistError::EmptySpace)));
        assert!(matches!(
            AtomSpace::new(vec![1.0, 0.0]),
            Err(TwistError::NonPositiveWeight { index: 1, .. })
        ));
        assert!(AtomSpace::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn support_examples() {
        let ones = [1.0; 3];
        assert_eq!(support(&vec_on(&ones, &[0.0, 3.0, 0.0])), vec![1]);
        assert!(support(&vec_on(&ones, &[0.0; 3])).is_empty());
        assert_eq!(support(&vec_on(&ones, &[1.0; 3])), vec![0, 1, 2]);
    }

    #[test]
    fn disjointness() {
        let s = AtomSpace::counting(3).unwrap();
        let a = KVec::new(&s, vec![1.0, 0.0, 0.0]).unwrap();
        let b = KVec::new(&s, vec![0.0, 2.0, 0.0]).unwrap();
        let c = KVec::new(&s, vec![1.0, 1.0, 0.0]).unwrap();
        assert!(are_disjoint(&[a.clone(), b.clone()]).unwrap());
        assert!(!are_disjoint(&[c, b]).unwrap());
        assert!(are_disjoint(&[a.clone()]).unwrap());

        let other = AtomSpace::counting(3).unwrap();
        let d = KVec::unit(&AtomSpace::uniform(3).unwrap(), 2);
        assert!(matches!(
            are_disjoint(&[a.clone(), d]),
            Err(TwistError::MixedSpaces)
        ));
        // Equal weights on a separately built space count as the same space.
        assert!(are_disjoint(&[a, KVec::unit(&other, 2)]).unwrap());
    }

    #[test]
    fn rearrangement_examples() {
        assert_eq!(
            decreasing_rearrangement(&vec_on(&[1.0; 3], &[1.0, 3.0, 2.0])),
            vec![(3.0, 1.0), (2.0, 2.0), (1.0, 3.0)]
        );
        assert_eq!(
            decreasing_rearrangement(&vec_on(&[0.5, 0.5], &[2.0, 2.0])),
            vec![(2.0, 0.5), (2.0, 1.0)]
        );
        assert_eq!(
            decreasing_rearrangement(&vec_on(&[1.0, 1.0], &[0.0, -5.0])),
            vec![(5.0, 1.0), (0.0, 2.0)]
        );
    }

    #[test]
    fn rank_function_examples() {
        let r = rank_function(&vec_on(&[1.0; 3], &[3.0, 1.0, 2.0]));
        assert_eq!(r.values(), &[1.0, 3.0, 2.0]);
        let r = rank_function(&vec_on(&[1.0; 2], &[5.0, 5.0]));
        assert_eq!(r.values(), &[1.0, 2.0]);
        let r = rank_function(&vec_on(&[0.25; 4], &[4.0, 3.0, 2.0, 1.0]));
        assert_eq!(r.values(), &[0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn rank_function_matches_measure_formula() {
        // Direct evaluation of the defining measure, quadratic time.
        let x = vec_on(&[0.3, 1.2, 0.7, 0.1, 2.0], &[1.0, -2.0, 1.0, 0.0, 2.0]);
        let w = x.space().weights();
        let r = rank_function(&x);
        for t in 0..x.len() {
            let xt = x.get(t).abs();
            let expected: f64 = (0..x.len())
                .filter(|&s| x.get(s).abs() > xt || (x.get(s).abs() == xt && s <= t))
                .map(|s| w[s])
                .sum();
            assert!((r.get(t) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn xlog_ratio_examples() {
        let s = AtomSpace::counting(2).unwrap();
        let x = KVec::new(&s, vec![1.0, 0.0]).unwrap();
        // Off-support entries of num/den are never inspected.
        let num = KVec::new(&s, vec![1.0, -3.0]).unwrap();
        let den = KVec::new(&s, vec![1.0, 0.0]).unwrap();
        assert_eq!(xlog_ratio(&x, &num, &den).unwrap().values(), &[0.0, 0.0]);

        let x = KVec::new(&s, vec![2.0, 0.0]).unwrap();
        let num = KVec::new(&s, vec![std::f64::consts::E, 0.0]).unwrap();
        let den = KVec::new(&s, vec![1.0, 0.0]).unwrap();
        let out = xlog_ratio(&x, &num, &den).unwrap();
        assert!((out.get(0) - 2.0).abs() < 1e-15);
        assert_eq!(out.get(1), 0.0);

        let zero = KVec::zeros(&s);
        assert!(xlog_ratio(&zero, &zero, &zero).unwrap().is_zero());

        assert!(matches!(
            xlog_ratio(&x, &zero, &den),
            Err(TwistError::LogDomain { index: 0, .. })
        ));
    }

    #[test]
    fn family_validation() {
        let s = AtomSpace::counting(4).unwrap();
        let fam = DisjointFamily::canonical(&s, 3).unwrap();
        assert!(fam.is_successive());
        assert_eq!(fam.sum().values(), &[1.0, 1.0, 1.0, 0.0]);

        let rev = DisjointFamily::new(vec![KVec::unit(&s, 2), KVec::unit(&s, 0)]).unwrap();
        assert!(!rev.is_successive());

        assert!(DisjointFamily::new(vec![]).is_err());
        assert!(DisjointFamily::new(vec![KVec::zeros(&s)]).is_err());
        assert!(DisjointFamily::new(vec![KVec::unit(&s, 1), KVec::unit(&s, 1)]).is_err());

        let scaled = fam.scaled(&[2.0, 0.0, -1.0]).unwrap();
        assert_eq!(scaled.len(), 2);
        assert_eq!(scaled.sum().values(), &[2.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn json_shape() {
        let x = vec_on(&[0.5, 0.5], &[1.0, -2.0]);
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(json, r#"{"weights":[0.5,0.5],"values":[1.0,-2.0]}"#);
        let back: KVec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<KVec>(r#"{"weights":[1.0],"values":[1.0,2.0]}"#).is_err());
    }
}
