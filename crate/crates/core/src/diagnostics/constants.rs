//! Empirical quasi-linearity and centralizer constants.
//!
//! Both are suprema of ratios over seeded random inputs, so they are lower
//! bounds for the true constants.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::centralizers::Centralizer;
use crate::diagnostics::sampling::{rng, signed_exponential_vector, standard_normal};
use crate::error::Result;
use crate::measure::{AtomSpace, KVec};
use crate::spaces::KotheNorm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub samples: usize,
    pub seed: u64,
    /// Sample index that attained the supremum.
    pub argmax: Option<usize>,
}

/// Pairs cycle through four classes: independent vectors, near-parallel
/// `y ≈ c·x`, near-cancelling `y ≈ −x`, and disjointly supported halves.
fn sample_pair<R: Rng>(space: &AtomSpace, k: usize, r: &mut R) -> Result<(KVec, KVec)> {
    let x = signed_exponential_vector(space, r);
    let y = match k % 4 {
        0 => signed_exponential_vector(space, r),
        1 | 2 => {
            let c = if k % 4 == 1 { r.gen_range(0.5..2.0) } else { -1.0 };
            let eps = 10f64.powf(-r.gen_range(1.0..6.0));
            let noise = KVec::new(space, (0..space.len()).map(|_| eps * standard_normal(r)).collect())?;
            x.scale(c).add(&noise)?
        }
        _ => {
            let mut atoms: Vec<usize> = (0..space.len()).collect();
            atoms.shuffle(r);
            let cut = r.gen_range(0..=atoms.len());
            let z = signed_exponential_vector(space, r);
            let (xs, ys) = atoms.split_at(cut);
            return Ok((z.restrict(xs), z.restrict(ys)));
        }
    };
    Ok((x, y))
}

/// `sup ‖Ω(x+y) − Ωx − Ωy‖ / (‖x‖ + ‖y‖)` over seeded pairs.
pub fn quasi_linearity_constant(
    omega: &dyn Centralizer,
    norm: &KotheNorm,
    space: &AtomSpace,
    cfg: &SamplerConfig,
) -> Result<ConstantEstimate> {
    let mut r = rng(cfg.seed);
    let mut best = ConstantEstimate {
        value: 0.0,
        samples: cfg.samples,
        seed: cfg.seed,
        argmax: None,
    };
    for k in 0..cfg.samples {
        let (x, y) = sample_pair(space, k, &mut r)?;
        let denom = norm.norm(&x)? + norm.norm(&y)?;
        if denom == 0.0 {
            continue;
        }
        let dev = omega
            .apply(&x.add(&y)?)?
            .sub(&omega.apply(&x)?)?
            .sub(&omega.apply(&y)?)?;
        let ratio = norm.norm(&dev)? / denom;
        if ratio > best.value {
            best.value = ratio;
            best.argmax = Some(k);
        }
    }
    Ok(best)
}

/// Multipliers cycle through uniform `[-1,1]` values, sign patterns,
/// indicators of random sets, and values concentrated near zero.
fn sample_multiplier<R: Rng>(space: &AtomSpace, k: usize, r: &mut R) -> Result<KVec> {
    let n = space.len();
    let vals: Vec<f64> = match k % 4 {
        0 => (0..n).map(|_| r.gen_range(-1.0..=1.0)).collect(),
        1 => (0..n).map(|_| if r.gen_bool(0.5) { 1.0 } else { -1.0 }).collect(),
        2 => (0..n).map(|_| if r.gen_bool(0.5) { 1.0 } else { 0.0 }).collect(),
        _ => {
            let c: f64 = r.gen_range(0.01..=1.0);
            let power = r.gen_range(1.0..6.0);
            (0..n)
                .map(|_| c * r.gen_range(-1.0f64..=1.0).abs().powf(power) * if r.gen_bool(0.5) { 1.0 } else { -1.0 })
                .collect()
        }
    };
    KVec::new(space, vals)
}

/// `sup ‖Ω(fx) − fΩ(x)‖ / (‖f‖_∞ ‖x‖)` over seeded `(f, x)`.
pub fn centralizer_constant(
    omega: &dyn Centralizer,
    norm: &KotheNorm,
    space: &AtomSpace,
    cfg: &SamplerConfig,
) -> Result<ConstantEstimate> {
    let mut r = rng(cfg.seed);
    let mut best = ConstantEstimate {
        value: 0.0,
        samples: cfg.samples,
        seed: cfg.seed,
        argmax: None,
    };
    for k in 0..cfg.samples {
        let x = signed_exponential_vector(space, &mut r);
        let f = sample_multiplier(space, k, &mut r)?;
        let ratio = centralizer_ratio(omega, norm, &f, &x)?;
        if ratio > best.value {
            best.value = ratio;
            best.argmax = Some(k);
        }
    }
    Ok(best)
}

/// `‖Ω(fx) − fΩ(x)‖ / (‖f‖_∞ ‖x‖)`, zero when the denominator vanishes.
pub fn centralizer_ratio(omega: &dyn Centralizer, norm: &KotheNorm, f: &KVec, x: &KVec) -> Result<f64> {
    let denom = f.sup_norm() * norm.norm(x)?;
    if denom == 0.0 {
        return Ok(0.0);
    }
    let dev = omega.apply(&f.mul(x)?)?.sub(&f.mul(&omega.apply(x)?)?)?;
    Ok(norm.norm(&dev)? / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centralizers::{CentralizerKind, Multiplier, Zero};

    #[test]
    fn zero_and_linear_maps() {
        let space = AtomSpace::counting(8).unwrap();
        let norm = KotheNorm::lp(2.0);
        let cfg = SamplerConfig { samples: 500, seed: 1 };
        assert_eq!(quasi_linearity_constant(&Zero, &norm, &space, &cfg).unwrap().value, 0.0);
        let g = KVec::new(&space, (0..8).map(|i| i as f64 - 3.0).collect()).unwrap();
        let lin = Multiplier(g);
        assert!(quasi_linearity_constant(&lin, &norm, &space, &cfg).unwrap().value < 1e-13);
        assert!(centralizer_constant(&lin, &norm, &space, &cfg).unwrap().value < 1e-13);
    }

    #[test]
    fn kalton_peck_unimodular_multipliers() {
        let space = AtomSpace::counting(6).unwrap();
        let norm = KotheNorm::lp(2.0);
        let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
        let x = KVec::new(&space, vec![1.0, -0.5, 2.0, 0.0, 0.3, 1.1]).unwrap();
        let one = KVec::constant(&space, 1.0);
        assert_eq!(centralizer_ratio(&kp, &norm, &one, &x).unwrap(), 0.0);
        let signs = KVec::new(&space, vec![1.0, -1.0, -1.0, 1.0, 1.0, -1.0]).unwrap();
        assert!(centralizer_ratio(&kp, &norm, &signs, &x).unwrap() < 1e-15);
    }

    #[test]
    fn kalton_peck_constants_are_modest() {
        let space = AtomSpace::counting(16).unwrap();
        let norm = KotheNorm::lp(2.0);
        let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
        let cfg = SamplerConfig { samples: 2000, seed: 5 };
        let c = centralizer_constant(&kp, &norm, &space, &cfg).unwrap();
        assert!(c.value <= 2.0 / std::f64::consts::E + 0.01);
        assert!(c.value > 0.0);
        let q = quasi_linearity_constant(&kp, &norm, &space, &cfg).unwrap();
        assert!(q.value > 0.0 && q.value <= 4.0, "{q:?}");
    }
}
