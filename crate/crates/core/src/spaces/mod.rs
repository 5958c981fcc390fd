//! Norm oracles for the Köthe spaces used as examples: `L_p`, Lorentz,
//! Schreier and its dual, Schlumprecht, p-convexifications and
//! `ℓ_p(⊕ℓ_2)` block sums.

mod schreier;
mod simplex;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TwistError};
use crate::measure::{decreasing_rearrangement, AtomSpace, KVec};

pub use schreier::{
    schlumprecht_norm, schreier_dual_norm, schreier_dual_with_witness, schreier_norm,
    schreier_with_witness,
};

pub const DEFAULT_SCHREIER_DUAL_CAP: usize = 16;
pub const DEFAULT_SCHLUMPRECHT_CAP: usize = 64;
pub const DEFAULT_SCHLUMPRECHT_MAX_ITERS: usize = 200;
pub const DEFAULT_SCHLUMPRECHT_TOL: f64 = 1e-10;

fn default_dual_cap() -> usize {
    DEFAULT_SCHREIER_DUAL_CAP
}
fn default_schlumprecht_cap() -> usize {
    DEFAULT_SCHLUMPRECHT_CAP
}
fn default_schlumprecht_iters() -> usize {
    DEFAULT_SCHLUMPRECHT_MAX_ITERS
}
fn default_schlumprecht_tol() -> f64 {
    DEFAULT_SCHLUMPRECHT_TOL
}

/// Which space a [`KotheNorm`] measures. `p = f64::INFINITY` is written
/// `null` in JSON (serde_json has no infinity) and `inf` on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum NormKind {
    Lp {
        #[serde(with = "extended_real")]
        p: f64,
    },
    Lorentz {
        p: f64,
        q: f64,
    },
    Schreier {},
    SchreierDual {
        #[serde(default = "default_dual_cap")]
        cap: usize,
    },
    Schlumprecht {
        #[serde(default = "default_schlumprecht_cap")]
        cap: usize,
        #[serde(default = "default_schlumprecht_iters")]
        max_iters: usize,
        #[serde(default = "default_schlumprecht_tol")]
        tol: f64,
    },
    PConvexification {
        base: Box<NormKind>,
        p: f64,
    },
    LpSumL2Blocks {
        #[serde(with = "extended_real")]
        p: f64,
        block_sizes: Vec<usize>,
    },
}

/// `f64` with `+∞` serialized as `null`.
pub(crate) mod extended_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// A lattice norm (or quasi-norm) oracle with declared metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KotheNorm {
    kind: NormKind,
}

impl From<NormKind> for KotheNorm {
    fn from(kind: NormKind) -> Self {
        Self { kind }
    }
}

impl KotheNorm {
    pub fn lp(p: f64) -> Self {
        NormKind::Lp { p }.into()
    }

    pub fn lorentz(p: f64, q: f64) -> Self {
        NormKind::Lorentz { p, q }.into()
    }

    pub fn schreier() -> Self {
        NormKind::Schreier {}.into()
    }

    pub fn schreier_dual() -> Self {
        NormKind::SchreierDual {
            cap: DEFAULT_SCHREIER_DUAL_CAP,
        }
        .into()
    }

    pub fn schlumprecht() -> Self {
        NormKind::Schlumprecht {
            cap: DEFAULT_SCHLUMPRECHT_CAP,
            max_iters: DEFAULT_SCHLUMPRECHT_MAX_ITERS,
            tol: DEFAULT_SCHLUMPRECHT_TOL,
        }
        .into()
    }

    pub fn p_convexification(base: KotheNorm, p: f64) -> Self {
        NormKind::PConvexification {
            base: Box::new(base.kind),
            p,
        }
        .into()
    }

    pub fn lp_sum_l2_blocks(p: f64, block_sizes: Vec<usize>) -> Self {
        NormKind::LpSumL2Blocks { p, block_sizes }.into()
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    /// Parameter checks that do not depend on a vector.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TwistError::InvalidParameter(msg));
        match &self.kind {
            NormKind::Lp { p } | NormKind::LpSumL2Blocks { p, .. } if !(*p > 0.0) => {
                bad(format!("p must be positive, got {p}"))
            }
            NormKind::Lorentz { p, q }
                if !(*p > 0.0 && *q > 0.0 && p.is_finite() && q.is_finite()) =>
            {
                bad(format!("Lorentz indices must be in (0, ∞), got ({p}, {q})"))
            }
            NormKind::PConvexification { base, p } => {
                if !(*p > 1.0 && p.is_finite()) {
                    return bad(format!("convexification exponent must be > 1, got {p}"));
                }
                KotheNorm::from((**base).clone()).validate()
            }
            _ => Ok(()),
        }
    }

    /// Checks that the norm can be evaluated on vectors of `space`.
    pub fn check_space(&self, space: &AtomSpace) -> Result<()> {
        self.validate()?;
        match &self.kind {
            NormKind::Schreier {} if !space.has_unit_weights() => {
                Err(TwistError::NonUnitWeights { norm: "schreier" })
            }
            NormKind::SchreierDual { cap } => {
                if !space.has_unit_weights() {
                    Err(TwistError::NonUnitWeights {
                        norm: "schreier dual",
                    })
                } else if space.len() > *cap {
                    Err(TwistError::CapExceeded {
                        norm: "schreier dual",
                        size: space.len(),
                        cap: *cap,
                    })
                } else {
                    Ok(())
                }
            }
            NormKind::Schlumprecht { .. } if !space.has_unit_weights() => {
                Err(TwistError::NonUnitWeights {
                    norm: "schlumprecht",
                })
            }
            NormKind::LpSumL2Blocks { block_sizes, .. } => {
                let blocks: usize = block_sizes.iter().sum();
                if blocks != space.len() || block_sizes.contains(&0) {
                    Err(TwistError::PartitionMismatch {
                        blocks,
                        atoms: space.len(),
                    })
                } else {
                    Ok(())
                }
            }
            NormKind::PConvexification { base, .. } => {
                KotheNorm::from((**base).clone()).check_space(space)
            }
            _ => Ok(()),
        }
    }

    pub fn norm(&self, x: &KVec) -> Result<f64> {
        match &self.kind {
            NormKind::Lp { p } => Ok(norm_lp(*p, x)),
            NormKind::Lorentz { p, q } => Ok(norm_lorentz(*p, *q, x)),
            NormKind::Schreier {} => {
                require_unit(x, "schreier")?;
                Ok(schreier_norm(x.values()))
            }
            NormKind::SchreierDual { cap } => {
                require_unit(x, "schreier dual")?;
                schreier_dual_norm(x.values(), *cap)
            }
            NormKind::Schlumprecht {
                cap,
                max_iters,
                tol,
            } => {
                require_unit(x, "schlumprecht")?;
                schlumprecht_norm(x.values(), *cap, *max_iters, *tol)
            }
            NormKind::PConvexification { base, p } => {
                let base = KotheNorm::from((**base).clone());
                let powered = x.map(|v| v.abs().powf(*p));
                Ok(base.norm(&powered)?.powf(1.0 / p))
            }
            NormKind::LpSumL2Blocks { p, block_sizes } => norm_lp_sum_l2_blocks(*p, block_sizes, x),
        }
    }

    /// Declared constant `C` in `‖x + y‖ ≤ C (‖x‖ + ‖y‖)`.
    pub fn quasi_triangle_constant(&self) -> f64 {
        match &self.kind {
            NormKind::Lp { p } | NormKind::LpSumL2Blocks { p, .. } => {
                if *p >= 1.0 {
                    1.0
                } else {
                    2f64.powf(1.0 / p - 1.0)
                }
            }
            NormKind::Lorentz { p, q } => {
                if 1.0 <= *q && q <= p {
                    1.0
                } else {
                    // (f+g)*(t) ≤ f*(t/2) + g*(t/2): dilation costs 2^{1/p},
                    // the weighted L_q step costs max(1, 2^{1/q-1}).
                    2f64.powf(1.0 / p) * 2f64.powf(1.0 / q - 1.0).max(1.0)
                }
            }
            NormKind::Schreier {} | NormKind::SchreierDual { .. } | NormKind::Schlumprecht { .. } => 1.0,
            NormKind::PConvexification { base, p } => {
                let c = KotheNorm::from((**base).clone()).quasi_triangle_constant();
                if c == 1.0 {
                    1.0
                } else {
                    (2f64.powf(p - 1.0) * c).powf(1.0 / p)
                }
            }
        }
    }

    pub fn rearrangement_invariant(&self) -> bool {
        matches!(self.kind, NormKind::Lp { .. } | NormKind::Lorentz { .. })
    }

    /// Whether growth parameters should be measured on successive families.
    pub fn successive_only_params(&self) -> bool {
        match &self.kind {
            NormKind::Schlumprecht { .. } => true,
            NormKind::PConvexification { base, .. } => {
                KotheNorm::from((**base).clone()).successive_only_params()
            }
            _ => false,
        }
    }

    /// The Köthe dual under the pairing `Σ w_i x_i y_i`, where implemented.
    pub fn dual(&self) -> Option<KotheNorm> {
        match &self.kind {
            NormKind::Lp { p } => Some(KotheNorm::lp(conjugate(*p))),
            NormKind::Schreier {} => Some(KotheNorm::schreier_dual()),
            NormKind::SchreierDual { .. } => Some(KotheNorm::schreier()),
            _ => None,
        }
    }

    /// A functional `y` with `⟨x, y⟩ = ‖x‖`, `‖y‖_* = 1` and
    /// `supp y ⊆ supp x`, where a closed form is available.
    pub fn norming_functional(&self, x: &KVec) -> Result<Option<KVec>> {
        if x.is_zero() {
            return Ok(None);
        }
        let y = match &self.kind {
            NormKind::Lp { p } if p.is_infinite() => {
                let (j, _) = x
                    .values()
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |(bj, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bj, bv) });
                let mut y = KVec::zeros(x.space());
                y.values_mut()[j] = x.get(j).signum() / x.space().weight(j);
                y
            }
            NormKind::Lp { p } => {
                let n = norm_lp(*p, x);
                x.map(|v| if v == 0.0 { 0.0 } else { v.signum() * (v.abs() / n).powf(p - 1.0) })
            }
            NormKind::Schreier {} => {
                require_unit(x, "schreier")?;
                let (_, set) = schreier_with_witness(x.values());
                let mut y = KVec::zeros(x.space());
                for i in set.into_iter().filter(|&i| x.get(i) != 0.0) {
                    y.values_mut()[i] = x.get(i).signum();
                }
                y
            }
            NormKind::SchreierDual { cap } => {
                require_unit(x, "schreier dual")?;
                let (_, w) = schreier_dual_with_witness(x.values(), *cap)?;
                let vals = x
                    .values()
                    .iter()
                    .zip(w)
                    .map(|(v, wi)| if *v == 0.0 { 0.0 } else { v.signum() * wi })
                    .collect();
                KVec::new(x.space(), vals)?
            }
            _ => return Ok(None),
        };
        Ok(Some(y))
    }

    /// A subgradient of `x ↦ ‖x‖` in coordinates. Closed form for `L_p`,
    /// central differences otherwise.
    pub fn gradient(&self, x: &KVec) -> Result<KVec> {
        match &self.kind {
            NormKind::Lp { p } if x.is_zero() || p.is_finite() && *p >= 1.0 => {
                if x.is_zero() {
                    return Ok(KVec::zeros(x.space()));
                }
                let n = norm_lp(*p, x);
                let w = x.space().weights().to_vec();
                let vals = x
                    .values()
                    .iter()
                    .zip(w)
                    .map(|(v, wi)| {
                        if *v == 0.0 {
                            0.0
                        } else {
                            wi * v.signum() * (v.abs() / n).powf(p - 1.0)
                        }
                    })
                    .collect();
                KVec::new(x.space(), vals)
            }
            NormKind::Lp { p } if p.is_infinite() => {
                let mut g = KVec::zeros(x.space());
                let (j, _) = x
                    .values()
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |(bj, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bj, bv) });
                g.values_mut()[j] = x.get(j).signum();
                Ok(g)
            }
            _ => {
                let h = 1e-7 * x.sup_norm().max(1e-12);
                let mut g = KVec::zeros(x.space());
                let mut probe = x.clone();
                for i in 0..x.len() {
                    let orig = probe.get(i);
                    probe.values_mut()[i] = orig + h;
                    let up = self.norm(&probe)?;
                    probe.values_mut()[i] = orig - h;
                    let down = self.norm(&probe)?;
                    probe.values_mut()[i] = orig;
                    g.values_mut()[i] = (up - down) / (2.0 * h);
                }
                Ok(g)
            }
        }
    }

    /// Short human-readable descriptor, also accepted by [`FromStr`].
    pub fn label(&self) -> String {
        fn fmt_p(p: f64) -> String {
            if p.is_infinite() {
                "inf".into()
            } else {
                format!("{p}")
            }
        }
        match &self.kind {
            NormKind::Lp { p } => format!("lp:{}", fmt_p(*p)),
            NormKind::Lorentz { p, q } => format!("lorentz:{p},{q}"),
            NormKind::Schreier {} => "schreier".into(),
            NormKind::SchreierDual { .. } => "schreier-dual".into(),
            NormKind::Schlumprecht { .. } => "schlumprecht".into(),
            NormKind::PConvexification { base, p } => {
                format!("pconv:{p}:{}", KotheNorm::from((**base).clone()).label())
            }
            NormKind::LpSumL2Blocks { p, block_sizes } => {
                let sizes: Vec<String> = block_sizes.iter().map(|b| b.to_string()).collect();
                format!("blocks:{}:{}", fmt_p(*p), sizes.join(","))
            }
        }
    }
}

impl fmt::Display for KotheNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub(crate) fn parse_real(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        t => t
            .parse()
            .map_err(|_| TwistError::InvalidParameter(format!("not a number: {t:?}"))),
    }
}

impl FromStr for KotheNorm {
    type Err = TwistError;

    /// `lp:2`, `lp:inf`, `lorentz:2,1`, `schreier`, `schreier-dual`,
    /// `schlumprecht`, `pconv:2:schreier`, `blocks:2:3,3,4`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let norm = match head {
            "lp" | "l" => KotheNorm::lp(parse_real(rest)?),
            "lorentz" => {
                let (p, q) = rest.split_once(',').ok_or_else(|| {
                    TwistError::InvalidParameter(format!("lorentz needs p,q: {s:?}"))
                })?;
                KotheNorm::lorentz(parse_real(p)?, parse_real(q)?)
            }
            "schreier" => KotheNorm::schreier(),
            "schreier-dual" | "schreier_dual" => KotheNorm::schreier_dual(),
            "schlumprecht" => KotheNorm::schlumprecht(),
            "pconv" => {
                let (p, base) = rest.split_once(':').ok_or_else(|| {
                    TwistError::InvalidParameter(format!("pconv needs p:base: {s:?}"))
                })?;
                KotheNorm::p_convexification(base.parse()?, parse_real(p)?)
            }
            "blocks" => {
                let (p, sizes) = rest.split_once(':').ok_or_else(|| {
                    TwistError::InvalidParameter(format!("blocks needs p:sizes: {s:?}"))
                })?;
                let sizes = sizes
                    .split(',')
                    .map(|b| {
                        b.trim()
                            .parse()
                            .map_err(|_| TwistError::InvalidParameter(format!("bad block size {b:?}")))
                    })
                    .collect::<Result<Vec<usize>>>()?;
                KotheNorm::lp_sum_l2_blocks(parse_real(p)?, sizes)
            }
            _ => return Err(TwistError::InvalidParameter(format!("unknown space {s:?}"))),
        };
        norm.validate()?;
        Ok(norm)
    }
}

fn require_unit(x: &KVec, norm: &'static str) -> Result<()> {
    if x.space().has_unit_weights() {
        Ok(())
    } else {
        Err(TwistError::NonUnitWeights { norm })
    }
}

/// Hölder conjugate, with `1 ↔ ∞`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `(Σ w_i |x_i|^p)^{1/p}`; for `p = ∞` the weights are ignored.
pub fn norm_lp(p: f64, x: &KVec) -> f64 {
    if p.is_infinite() {
        return x.sup_norm();
    }
    let s: f64 = x
        .values()
        .iter()
        .zip(x.space().weights())
        .filter(|(v, _)| **v != 0.0)
        .map(|(v, w)| w * v.abs().powf(p))
        .sum();
    s.powf(1.0 / p)
}

/// `(Σ_k (x*_k)^q (T_k^{q/p} − T_{k−1}^{q/p}))^{1/q}` over the decreasing
/// rearrangement. The indicator of a set of mass `T` has norm `T^{1/p}`.
pub fn norm_lorentz(p: f64, q: f64, x: &KVec) -> f64 {
    let r = q / p;
    let mut prev = 0.0f64;
    let mut acc = 0.0;
    for (v, t) in decreasing_rearrangement(x) {
        if v == 0.0 {
            break;
        }
        acc += v.powf(q) * (t.powf(r) - prev.powf(r));
        prev = t;
    }
    acc.powf(1.0 / q)
}

/// `(Σ_k ‖x^k‖_2^p)^{1/p}` with `x^k` the restriction to the k-th block of
/// consecutive atoms.
pub fn norm_lp_sum_l2_blocks(p: f64, block_sizes: &[usize], x: &KVec) -> Result<f64> {
    let norms = block_l2_norms(block_sizes, x)?;
    if p.is_infinite() {
        return Ok(norms.iter().fold(0.0, |m: f64, v| m.max(*v)));
    }
    Ok(norms.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Weighted ℓ_2 norm of each block.
pub(crate) fn block_l2_norms(block_sizes: &[usize], x: &KVec) -> Result<Vec<f64>> {
    let blocks: usize = block_sizes.iter().sum();
    if blocks != x.len() {
        return Err(TwistError::PartitionMismatch {
            blocks,
            atoms: x.len(),
        });
    }
    let w = x.space().weights();
    let mut start = 0;
    Ok(block_sizes
        .iter()
        .map(|&len| {
            let s: f64 = (start..start + len).map(|i| w[i] * x.get(i) * x.get(i)).sum();
            start += len;
            s.sqrt()
        })
        .collect())
}
