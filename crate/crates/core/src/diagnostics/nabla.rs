//! Sign averages `∇_[b] Ω = Ave_± ‖Ω(Σ ±b_k) − Σ ±Ω(b_k)‖`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centralizers::Centralizer;
use crate::diagnostics::sampling::rng;
use crate::error::{Result, TwistError};
use crate::measure::{DisjointFamily, KVec};
use crate::spaces::KotheNorm;

pub const DEFAULT_EXACT_CAP: usize = 20;
const HARD_EXACT_LIMIT: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NablaMode {
    /// Exact when the family has at most `exact_cap` members, Monte-Carlo otherwise.
    Auto {
        exact_cap: usize,
        samples: usize,
        seed: u64,
    },
    Exact,
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

impl NablaMode {
    pub fn auto(seed: u64) -> Self {
        NablaMode::Auto {
            exact_cap: DEFAULT_EXACT_CAP,
            samples: 4096,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Evaluation {
    Exact { patterns: u64 },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NablaResult {
    pub value: f64,
    pub evaluation: Evaluation,
    /// Standard error of the mean; zero for exact evaluation.
    pub stderr: f64,
}

/// Precomputed `Ω(b_k)` for repeated sign evaluations.
struct SignProblem<'a, C: Centralizer + ?Sized> {
    omega: &'a C,
    norm: &'a KotheNorm,
    members: &'a [KVec],
    images: Vec<KVec>,
}

impl<'a, C: Centralizer + ?Sized> SignProblem<'a, C> {
    fn new(omega: &'a C, norm: &'a KotheNorm, family: &'a DisjointFamily) -> Result<Self> {
        let images = family
            .members()
            .iter()
            .map(|b| omega.apply(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            omega,
            norm,
            members: family.members(),
            images,
        })
    }

    fn deviation(&self, sign: impl Fn(usize) -> f64) -> Result<f64> {
        let space = self.members[0].space();
        let mut combo = KVec::zeros(space);
        let mut image_sum = KVec::zeros(space);
        for (k, (b, ob)) in self.members.iter().zip(&self.images).enumerate() {
            let s = sign(k);
            combo.axpy(s, b)?;
            image_sum.axpy(s, ob)?;
        }
        let diff = self.omega.apply(&combo)?.sub(&image_sum)?;
        self.norm.norm(&diff)
    }
}

/// `‖Ω(Σ ε_k b_k) − Σ ε_k Ω(b_k)‖` for every sign pattern; bit `k` of the
/// pattern index set means `ε_k = −1`.
pub fn sign_pattern_deviations<C: Centralizer + ?Sized>(
    omega: &C,
    norm: &KotheNorm,
    family: &DisjointFamily,
) -> Result<Vec<f64>> {
    let n = family.len();
    if n > HARD_EXACT_LIMIT {
        return Err(TwistError::InvalidParameter(format!(
            "exact enumeration over 2^{n} patterns is not supported"
        )));
    }
    let problem = SignProblem::new(omega, norm, family)?;
    (0..1u64 << n)
        .into_par_iter()
        .map(|mask| problem.deviation(|k| if mask >> k & 1 == 1 { -1.0 } else { 1.0 }))
        .collect()
}

/// `∇_[λb] Ω`: members are scaled by `coeffs` (zero coefficients drop the
/// member) before averaging.
pub fn nabla<C: Centralizer + ?Sized>(
    omega: &C,
    norm: &KotheNorm,
    family: &DisjointFamily,
    coeffs: Option<&[f64]>,
    mode: NablaMode,
) -> Result<NablaResult> {
    let scaled;
    let family = match coeffs {
        Some(c) => {
            scaled = family.scaled(c)?;
            &scaled
        }
        None => family,
    };
    let n = family.len();
    let exact = match mode {
        NablaMode::Exact => true,
        NablaMode::MonteCarlo { .. } => false,
        NablaMode::Auto { exact_cap, .. } => n <= exact_cap,
    };
    if exact {
        let devs = sign_pattern_deviations(omega, norm, family)?;
        let value = devs.iter().sum::<f64>() / devs.len() as f64;
        return Ok(NablaResult {
            value,
            evaluation: Evaluation::Exact {
                patterns: devs.len() as u64,
            },
            stderr: 0.0,
        });
    }
    let (samples, seed) = match mode {
        NablaMode::MonteCarlo { samples, seed } | NablaMode::Auto { samples, seed, .. } => (samples, seed),
        NablaMode::Exact => unreachable!(),
    };
    if samples < 2 {
        return Err(TwistError::InvalidParameter("Monte-Carlo needs at least 2 samples".into()));
    }
    let mut r = rng(seed);
    let patterns: Vec<Vec<bool>> = (0..samples)
        .map(|_| (0..n).map(|_| r.gen::<bool>()).collect())
        .collect();
    let problem = SignProblem::new(omega, norm, family)?;
    let devs: Vec<f64> = patterns
        .par_iter()
        .map(|pat| problem.deviation(|k| if pat[k] { -1.0 } else { 1.0 }))
        .collect::<Result<_>>()?;
    let mean = devs.iter().sum::<f64>() / samples as f64;
    let var = devs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    Ok(NablaResult {
        value: mean,
        evaluation: Evaluation::MonteCarlo { samples, seed },
        stderr: (var / samples as f64).sqrt(),
    })
}

/// `p⁻¹ n^{1/p} log n`: the deviation of `𝒦_p` on any `n` disjoint
/// normalized vectors of `L_p`, for every sign pattern.
pub fn kalton_peck_nabla_closed_form(p: f64, n: usize) -> f64 {
    let n = n as f64;
    n.powf(1.0 / p) * n.ln() / p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centralizers::{CentralizerKind, Zero};
    use crate::measure::AtomSpace;

    #[test]
    fn zero_map_and_singletons() {
        let space = AtomSpace::counting(6).unwrap();
        let fam = DisjointFamily::canonical(&space, 4).unwrap();
        let norm = KotheNorm::lp(2.0);
        let r = nabla(&Zero, &norm, &fam, None, NablaMode::Exact).unwrap();
        assert_eq!(r.value, 0.0);

        let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
        let single = DisjointFamily::new(vec![KVec::indicator(&space, [1, 3]).scale(0.7)]).unwrap();
        let r = nabla(&kp, &norm, &single, None, NablaMode::Exact).unwrap();
        assert!(r.value.abs() < 1e-15);
    }

    #[test]
    fn kalton_peck_identity_small() {
        let space = AtomSpace::counting(8).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let norm = KotheNorm::lp(p);
            let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
            let fam = DisjointFamily::canonical(&space, 5).unwrap();
            let expected = kalton_peck_nabla_closed_form(p, 5);
            for d in sign_pattern_deviations(&kp, &norm, &fam).unwrap() {
                assert!((d - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coefficients_drop_zero_members() {
        let space = AtomSpace::counting(6).unwrap();
        let norm = KotheNorm::lp(2.0);
        let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
        let fam = DisjointFamily::canonical(&space, 4).unwrap();
        let r = nabla(&kp, &norm, &fam, Some(&[1.0, 0.0, 1.0, 0.0]), NablaMode::Exact).unwrap();
        assert_eq!(r.evaluation, Evaluation::Exact { patterns: 4 });
        assert!((r.value - kalton_peck_nabla_closed_form(2.0, 2)).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let space = AtomSpace::counting(10).unwrap();
        let norm = KotheNorm::lp(1.5);
        let kappa = CentralizerKind::Kappa {};
        let fam = crate::diagnostics::sampling::random_family(&space, 6, false, &mut rng(3));
        let mode = NablaMode::MonteCarlo { samples: 256, seed: 11 };
        let a = nabla(&kappa, &norm, &fam, None, mode).unwrap();
        let b = nabla(&kappa, &norm, &fam, None, mode).unwrap();
        assert_eq!(a, b);
        assert!(a.stderr > 0.0);
        assert!(nabla(&kappa, &norm, &fam, None, NablaMode::MonteCarlo { samples: 1, seed: 0 }).is_err());
    }
}
