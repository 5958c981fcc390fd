//! Brackets for the super-disjoint-singularity modulus `ψ_Ω(n)`: lower tracks
//! from growth parameters and an upper scan from measured distances. No
//! point estimate is ever produced.

use serde::{Deserialize, Serialize};

use crate::centralizers::{check_theta, Centralizer};
use crate::diagnostics::distance::{triviality_distance, FitConfig};
use crate::diagnostics::sampling::{random_family, rng};
use crate::error::{Result, TwistError};
use crate::measure::{AtomSpace, DisjointFamily, KVec};
use crate::spaces::KotheNorm;

/// Base of the logarithm appearing inside growth parameters such as
/// `M(n) = log n`. Outer logarithms are always natural.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

/// Known growth laws of `M(n)` (and `m(n)` where it coincides).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum AnalyticParams {
    /// `n^{1/p}`, with `p = ∞` giving 1.
    Power { p: f64 },
    /// `log_b n`.
    Logarithmic { base: LogBase },
}

impl AnalyticParams {
    pub fn lp(p: f64) -> Self {
        AnalyticParams::Power { p }
    }

    pub fn schreier() -> Self {
        AnalyticParams::Power { p: 1.0 }
    }

    pub fn schreier_dual(base: LogBase) -> Self {
        AnalyticParams::Logarithmic { base }
    }

    pub fn lorentz(p: f64, q: f64) -> Self {
        AnalyticParams::Power { p: p.min(q) }
    }

    pub fn eval(&self, n: usize) -> f64 {
        let n = n as f64;
        match *self {
            AnalyticParams::Power { p } => n.powf(1.0 / p),
            AnalyticParams::Logarithmic { base } => base.log(n),
        }
    }
}

/// `|log(M₀(n)/M₁(n))|·m_θ(n)/M_θ(n) − 3/max{θ, 1−θ}`.
pub fn psi_lower_track(
    big_m0: impl Fn(usize) -> f64,
    big_m1: impl Fn(usize) -> f64,
    small_m_theta: impl Fn(usize) -> f64,
    big_m_theta: impl Fn(usize) -> f64,
    theta: f64,
    n: usize,
) -> Result<f64> {
    check_theta(theta)?;
    Ok((big_m0(n) / big_m1(n)).ln().abs() * small_m_theta(n) / big_m_theta(n) - 3.0 / theta.max(1.0 - theta))
}

/// Track for `𝒦_p` on `L_p` in its published closed form
/// `log n − 3/min{θ, 1−θ}`, `θ = 1/p′`.
pub fn kalton_peck_track(p: f64, n: usize) -> f64 {
    let theta = 1.0 - 1.0 / p;
    (n as f64).ln() - 3.0 / theta.min(1.0 - theta)
}

/// Track for the Schreier couple at `θ = ½`: `|log n − log(log_b n)| − 6`.
pub fn schreier_half_track(n: usize, base: LogBase) -> f64 {
    let n = n as f64;
    (n.ln() - base.log(n).ln()).abs() - 6.0
}

/// Track for `𝒦` on the `p`-convexified Schreier space:
/// `(1/p)|log n|^{1/p′} − (3/p)/max{1/p, 1/p′}`.
pub fn pconvex_schreier_track(p: f64, n: usize) -> f64 {
    let ip = 1.0 / p;
    let ipc = 1.0 - ip;
    ip * (n as f64).ln().abs().powf(ipc) - 3.0 * ip / ip.max(ipc)
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiCandidate {
    pub label: String,
    pub value: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiScan {
    pub n: usize,
    /// Smallest measured distance: an upper bound for `ψ_Ω(n)` up to the
    /// probe heuristic.
    pub value: f64,
    pub witness: DisjointFamily,
    pub candidates: Vec<PsiCandidate>,
}

/// Minimum of the triviality distance over the canonical family, equal
/// consecutive indicator blocks, and `budget` seeded random families.
pub fn psi_upper_scan(
    omega: &dyn Centralizer,
    norm: &KotheNorm,
    space: &AtomSpace,
    n: usize,
    budget: usize,
    cfg: &FitConfig,
) -> Result<PsiScan> {
    if budget == 0 {
        return Err(TwistError::InvalidParameter("budget must be at least 1".into()));
    }
    if n == 0 || n > space.len() {
        return Err(TwistError::InvalidParameter(format!(
            "family size {n} must be in 1..={}",
            space.len()
        )));
    }
    let mut families = vec![("canonical".to_string(), DisjointFamily::canonical(space, n)?)];
    let len = space.len() / n;
    if len > 1 {
        let members = (0..n).map(|k| KVec::indicator(space, k * len..(k + 1) * len)).collect();
        families.push((format!("blocks(len={len})"), DisjointFamily::new(members)?));
    }
    let mut r = rng(cfg.seed);
    for k in 0..budget {
        families.push((format!("random#{k}"), random_family(space, n, k % 2 == 1, &mut r)));
    }

    let mut best: Option<(f64, DisjointFamily)> = None;
    let mut candidates = Vec::with_capacity(families.len());
    for (label, fam) in families {
        let est = triviality_distance(omega, norm, &fam, cfg)?;
        candidates.push(PsiCandidate {
            label,
            value: est.value,
            converged: est.solver_trace.converged,
        });
        if best.as_ref().map_or(true, |(v, _)| est.value < *v) {
            best = Some((est.value, fam));
        }
    }
    let (value, witness) = best.expect("at least one family");
    Ok(PsiScan {
        n,
        value,
        witness,
        candidates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainReport {
    /// `‖Ω(Σu_i) − ΣΩ(u_i) − log(M₀/M₁)·Σu_i‖`.
    pub lhs: f64,
    /// `3·M_θ(n)/max{θ, 1−θ}`.
    pub rhs: f64,
    pub slack: f64,
    pub violated: bool,
}

/// Evaluates both sides of the interpolation estimate on one family whose
/// members lie in the unit ball of `norm_theta`.
pub fn estimate_chain_check(
    omega: &dyn Centralizer,
    norm_theta: &KotheNorm,
    big_m0: f64,
    big_m1: f64,
    big_m_theta: f64,
    theta: f64,
    family: &DisjointFamily,
) -> Result<ChainReport> {
    check_theta(theta)?;
    for (i, u) in family.members().iter().enumerate() {
        let nu = norm_theta.norm(u)?;
        if nu > 1.0 + 1e-12 {
            return Err(TwistError::InvalidFamily(format!(
                "member {i} has norm {nu} outside the unit ball"
            )));
        }
    }
    let total = family.sum();
    let mut dev = omega.apply(&total)?;
    for u in family.members() {
        dev = dev.sub(&omega.apply(u)?)?;
    }
    dev.axpy(-(big_m0 / big_m1).ln(), &total)?;
    let lhs = norm_theta.norm(&dev)?;
    let rhs = 3.0 * big_m_theta / theta.max(1.0 - theta);
    let slack = rhs - lhs;
    Ok(ChainReport {
        lhs,
        rhs,
        slack,
        violated: slack < -1e-9 * rhs.max(1.0),
    })
}
