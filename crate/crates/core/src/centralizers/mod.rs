//! Closed-form centralizers and the interpolation derivation obtained from a
//! numerical Lozanovskii factorization.
//!
//! Every map here is homogeneous, sends `0` to `0`, and is contractive:
//! `supp Ω(x) ⊆ supp x`.

mod lozanovskii;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TwistError};
use crate::measure::{rank_function, xlog_ratio, KVec};
use crate::spaces::{block_l2_norms, extended_real, norm_lp_sum_l2_blocks, KotheNorm};

pub use lozanovskii::{
    derivation_from_decomposition, lozanovskii_decompose, Decomposition, SolverConfig,
};

/// A homogeneous map on the lattice, evaluated pointwise on vectors.
pub trait Centralizer: Send + Sync {
    fn apply(&self, x: &KVec) -> Result<KVec>;

    fn describe(&self) -> String {
        "centralizer".into()
    }
}

impl<C: Centralizer + ?Sized> Centralizer for &C {
    fn apply(&self, x: &KVec) -> Result<KVec> {
        (**self).apply(x)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<C: Centralizer + ?Sized> Centralizer for Box<C> {
    fn apply(&self, x: &KVec) -> Result<KVec> {
        (**self).apply(x)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// The closed-form families, plus the numerical interpolation derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum CentralizerKind {
    KaltonPeck {
        norm: KotheNorm,
    },
    Kappa {},
    LorentzDerivation {
        p0: f64,
        q0: f64,
        p1: f64,
        q1: f64,
        theta: f64,
    },
    BlockDerivation {
        #[serde(with = "extended_real")]
        p0: f64,
        #[serde(with = "extended_real")]
        p1: f64,
        theta: f64,
        block_sizes: Vec<usize>,
    },
    ScaledKp {
        norm: KotheNorm,
        factor: f64,
    },
    Lozanovskii {
        norm0: KotheNorm,
        norm1: KotheNorm,
        theta: f64,
        #[serde(default)]
        solver: SolverConfig,
    },
}

impl Centralizer for CentralizerKind {
    fn apply(&self, x: &KVec) -> Result<KVec> {
        match self {
            CentralizerKind::KaltonPeck { norm } => kalton_peck(norm, x),
            CentralizerKind::Kappa {} => Ok(kalton_kappa(x)),
            CentralizerKind::LorentzDerivation {
                p0,
                q0,
                p1,
                q1,
                theta,
            } => lorentz_derivation(*p0, *q0, *p1, *q1, *theta, x),
            CentralizerKind::BlockDerivation {
                p0,
                p1,
                theta,
                block_sizes,
            } => block_derivation(*p0, *p1, *theta, block_sizes, x),
            CentralizerKind::ScaledKp { norm, factor } => Ok(kalton_peck(norm, x)?.scale(*factor)),
            CentralizerKind::Lozanovskii {
                norm0,
                norm1,
                theta,
                solver,
            } => {
                if x.is_zero() {
                    return Ok(KVec::zeros(x.space()));
                }
                let dec = lozanovskii_decompose(norm0, norm1, *theta, x, solver)?;
                derivation_from_decomposition(&dec, x)
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            CentralizerKind::KaltonPeck { norm } => format!("kalton-peck[{norm}]"),
            CentralizerKind::Kappa {} => "kappa".into(),
            CentralizerKind::LorentzDerivation {
                p0,
                q0,
                p1,
                q1,
                theta,
            } => format!("lorentz[({p0},{q0}),({p1},{q1});θ={theta}]"),
            CentralizerKind::BlockDerivation {
                p0, p1, theta, ..
            } => format!("blocks[p0={p0},p1={p1};θ={theta}]"),
            CentralizerKind::ScaledKp { norm, factor } => format!("{factor}·kalton-peck[{norm}]"),
            CentralizerKind::Lozanovskii {
                norm0,
                norm1,
                theta,
                ..
            } => format!("lozanovskii[({norm0},{norm1});θ={theta}]"),
        }
    }
}

/// `Ω ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl Centralizer for Zero {
    fn apply(&self, x: &KVec) -> Result<KVec> {
        Ok(KVec::zeros(x.space()))
    }

    fn describe(&self) -> String {
        "zero".into()
    }
}

/// The linear centralizer `x ↦ g·x`.
#[derive(Debug, Clone)]
pub struct Multiplier(pub KVec);

impl Centralizer for Multiplier {
    fn apply(&self, x: &KVec) -> Result<KVec> {
        self.0.mul(x)
    }

    fn describe(&self) -> String {
        "multiplier".into()
    }
}

/// `Ω + Ψ`.
pub struct Sum<A, B>(pub A, pub B);

impl<A: Centralizer, B: Centralizer> Centralizer for Sum<A, B> {
    fn apply(&self, x: &KVec) -> Result<KVec> {
        self.0.apply(x)?.add(&self.1.apply(x)?)
    }

    fn describe(&self) -> String {
        format!("{} + {}", self.0.describe(), self.1.describe())
    }
}

/// `𝒦(x) = x log(|x| / ‖x‖)`, with `𝒦(0) = 0`.
pub fn kalton_peck(norm: &KotheNorm, x: &KVec) -> Result<KVec> {
    if x.is_zero() {
        return Ok(KVec::zeros(x.space()));
    }
    let n = norm.norm(x)?;
    xlog_ratio(x, &x.abs(), &KVec::constant(x.space(), n))
}

/// Kalton's map `κ(x) = x · r_x`.
pub fn kalton_kappa(x: &KVec) -> KVec {
    let r = rank_function(x);
    x.mul(&r).expect("rank function shares the space of x")
}

/// Exponents and coefficients of the Lorentz-couple derivation
/// `Ω = kp·𝒦_{L_{p,q}} + kappa·κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LorentzCoefficients {
    pub p: f64,
    pub q: f64,
    pub kp: f64,
    pub kappa: f64,
}

pub fn lorentz_coefficients(p0: f64, q0: f64, p1: f64, q1: f64, theta: f64) -> Result<LorentzCoefficients> {
    for (name, v) in [("p0", p0), ("q0", q0), ("p1", p1), ("q1", q1)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(TwistError::InvalidParameter(format!("{name} must be in (0, ∞), got {v}")));
        }
    }
    check_theta(theta)?;
    let p = 1.0 / ((1.0 - theta) / p0 + theta / p1);
    let q = 1.0 / ((1.0 - theta) / q0 + theta / q1);
    let kp = q * (1.0 / q1 - 1.0 / q0);
    let kappa = q / p * (1.0 / q0 - 1.0 / q1) - (1.0 / p0 - 1.0 / p1);
    Ok(LorentzCoefficients { p, q, kp, kappa })
}

pub fn lorentz_derivation(p0: f64, q0: f64, p1: f64, q1: f64, theta: f64, x: &KVec) -> Result<KVec> {
    let c = lorentz_coefficients(p0, q0, p1, q1, theta)?;
    let mut out = KVec::zeros(x.space());
    if c.kp != 0.0 {
        out.axpy(c.kp, &kalton_peck(&KotheNorm::lorentz(c.p, c.q), x)?)?;
    }
    if c.kappa != 0.0 {
        out.axpy(c.kappa, &kalton_kappa(x))?;
    }
    Ok(out)
}

/// Interpolation exponent of the block couple:
/// `1/p = (1−θ)/p₁ + θ/p₀`.
pub fn block_exponent(p0: f64, p1: f64, theta: f64) -> f64 {
    1.0 / ((1.0 - theta) / p1 + theta / p0)
}

/// `Ω(x) = ((p/p₁ − p/p₀) log(‖x^k‖₂ / ‖x‖) x^k)_k` with `‖x‖` the
/// `ℓ_p(⊕ℓ_2)` norm.
pub fn block_derivation(p0: f64, p1: f64, theta: f64, block_sizes: &[usize], x: &KVec) -> Result<KVec> {
    check_theta(theta)?;
    if !(p0 > 0.0 && p1 > 0.0) {
        return Err(TwistError::InvalidParameter(format!(
            "block exponents must be positive, got ({p0}, {p1})"
        )));
    }
    let block_norms = block_l2_norms(block_sizes, x)?;
    if x.is_zero() {
        return Ok(KVec::zeros(x.space()));
    }
    if block_norms.iter().filter(|&&b| b > 0.0).count() == 1 {
        return Ok(KVec::zeros(x.space()));
    }
    let p = block_exponent(p0, p1, theta);
    let coef = p / p1 - p / p0;
    let total = norm_lp_sum_l2_blocks(p, block_sizes, x)?;
    let mut out = KVec::zeros(x.space());
    let mut start = 0;
    for (&len, &bn) in block_sizes.iter().zip(&block_norms) {
        if bn > 0.0 && coef != 0.0 {
            let factor = coef * (bn / total).ln();
            for i in start..start + len {
                out.values_mut()[i] = factor * x.get(i);
            }
        }
        start += len;
    }
    Ok(out)
}

/// `‖(w, x)‖ = ‖x‖ + ‖w − Ωx‖` on the twisted sum.
pub fn twisted_norm(norm: &KotheNorm, omega: &dyn Centralizer, w: &KVec, x: &KVec) -> Result<f64> {
    let ox = omega.apply(x)?;
    Ok(norm.norm(x)? + norm.norm(&w.sub(&ox)?)?)
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(TwistError::InvalidParameter(format!("θ must be in (0, 1), got {theta}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::AtomSpace;

    #[test]
    fn kalton_peck_examples() {
        let s = AtomSpace::counting(4).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let e = KVec::unit(&s, 2).scale(-2.5);
            assert!(kalton_peck(&KotheNorm::lp(p), &e).unwrap().is_zero());
        }
        let s2 = AtomSpace::counting(2).unwrap();
        let x = KVec::new(&s2, vec![1.0, 1.0]).unwrap();
        let k = kalton_peck(&KotheNorm::lp(2.0), &x).unwrap();
        let expected = -0.5 * 2f64.ln();
        assert!((k.get(0) - expected).abs() < 1e-15 && (k.get(1) - expected).abs() < 1e-15);
        assert!(kalton_peck(&KotheNorm::lp(2.0), &KVec::zeros(&s2)).unwrap().is_zero());

        let y = KVec::new(&s, vec![0.3, -1.2, 0.0, 2.2]).unwrap();
        let k1 = kalton_peck(&KotheNorm::lp(2.0), &y).unwrap();
        let k2 = kalton_peck(&KotheNorm::lp(2.0), &y.scale(2.0)).unwrap();
        for i in 0..4 {
            assert!((k2.get(i) - 2.0 * k1.get(i)).abs() < 1e-14);
        }
    }

    #[test]
    fn kappa_examples() {
        let s = AtomSpace::counting(3).unwrap();
        let x = KVec::new(&s, vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(kalton_kappa(&x).values(), &[3.0, 3.0, 4.0]);
        assert_eq!(kalton_kappa(&KVec::unit(&s, 0)).values(), &[1.0, 0.0, 0.0]);
        assert_eq!(kalton_kappa(&x.scale(-1.0)).values(), &[-3.0, -3.0, -4.0]);
    }

    #[test]
    fn lorentz_degenerations() {
        let s = AtomSpace::counting(5).unwrap();
        let x = KVec::new(&s, vec![0.5, -2.0, 1.0, 0.0, 3.0]).unwrap();
        assert!(lorentz_derivation(2.0, 3.0, 2.0, 3.0, 0.4, &x).unwrap().is_zero());

        let c = lorentz_coefficients(2.0, 3.0, 4.0, 3.0, 0.3).unwrap();
        assert_eq!(c.kp, 0.0);
        assert_eq!(c.kappa, -(1.0 / 2.0 - 1.0 / 4.0));
        let om = lorentz_derivation(2.0, 3.0, 4.0, 3.0, 0.3, &x).unwrap();
        let kap = kalton_kappa(&x);
        for i in 0..5 {
            assert!((om.get(i) + 0.25 * kap.get(i)).abs() < 1e-15);
        }

        // L_p endpoints: κ coefficient vanishes, p = q.
        for (p0, p1, theta) in [(1.0, 4.0, 0.5), (2.0, 3.0, 0.25), (1.5, 8.0, 0.9)] {
            let c = lorentz_coefficients(p0, p0, p1, p1, theta).unwrap();
            assert!((c.p - c.q).abs() < 1e-12);
            assert!(c.kappa.abs() < 1e-15, "{c:?}");
            assert!((c.kp - c.q * (1.0 / p1 - 1.0 / p0)).abs() < 1e-15);
        }
        assert!(lorentz_coefficients(2.0, 2.0, 3.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn block_derivation_examples() {
        let s = AtomSpace::counting(7).unwrap();
        let blocks = [3, 4];
        // inside one block
        let x = KVec::new(&s, vec![0.0, 0.0, 0.0, 1.0, -2.0, 0.5, 3.0]).unwrap();
        let om = block_derivation(1.8, 1.2, 0.4, &blocks, &x).unwrap();
        assert!(om.values().iter().all(|&v| v == 0.0));
        // p0 = p1
        let y = KVec::new(&s, vec![1.0, 2.0, 0.0, 1.0, -2.0, 0.5, 3.0]).unwrap();
        assert!(block_derivation(1.5, 1.5, 0.4, &blocks, &y).unwrap().is_zero());
        // two blocks of equal ℓ_2 norm
        let z = KVec::new(&s, vec![3.0, 4.0, 0.0, 0.0, 5.0, 0.0, 0.0]).unwrap();
        let (p0, p1, theta) = (1.8, 1.2, 0.4);
        let p = block_exponent(p0, p1, theta);
        let om = block_derivation(p0, p1, theta, &blocks, &z).unwrap();
        let factor = (p / p1 - p / p0) * (-(2f64.ln()) / p);
        for i in 0..7 {
            assert!((om.get(i) - factor * z.get(i)).abs() < 1e-14);
        }
        // With p = 2 the log factor is exactly -½ log 2.
        let (p0, p1) = (4.0, 4.0 / 3.0);
        let theta = 0.5;
        assert!((block_exponent(p0, p1, theta) - 2.0).abs() < 1e-15);
        let om = block_derivation(p0, p1, theta, &blocks, &z).unwrap();
        let factor = (2.0 / p1 - 2.0 / p0) * (-0.5 * 2f64.ln());
        assert!((om.get(0) - factor * 3.0).abs() < 1e-14);

        assert!(matches!(
            block_derivation(2.0, 1.0, 0.5, &[3, 3], &z),
            Err(TwistError::PartitionMismatch { .. })
        ));
    }

    #[test]
    fn twisted_norm_examples() {
        let s = AtomSpace::counting(3).unwrap();
        let norm = KotheNorm::lp(2.0);
        let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
        let x = KVec::new(&s, vec![1.0, -2.0, 0.5]).unwrap();
        let w = KVec::new(&s, vec![0.3, 0.1, -1.0]).unwrap();
        let ox = kp.apply(&x).unwrap();
        assert!((twisted_norm(&norm, &kp, &ox, &x).unwrap() - norm.norm(&x).unwrap()).abs() < 1e-15);
        let zero = KVec::zeros(&s);
        assert_eq!(twisted_norm(&norm, &kp, &w, &zero).unwrap(), norm.norm(&w).unwrap());
        assert_eq!(
            twisted_norm(&norm, &Zero, &w, &x).unwrap(),
            norm.norm(&x).unwrap() + norm.norm(&w).unwrap()
        );
    }

    #[test]
    fn descriptor_json() {
        let c = CentralizerKind::BlockDerivation {
            p0: f64::INFINITY,
            p1: 1.0,
            theta: 0.5,
            block_sizes: vec![2, 2],
        };
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"block_derivation","params":{"p0":null,"p1":1.0,"theta":0.5,"block_sizes":[2,2]}}"#
        );
        assert_eq!(serde_json::from_str::<CentralizerKind>(&json).unwrap(), c);
        let kp: CentralizerKind =
            serde_json::from_str(r#"{"kind":"kalton_peck","params":{"norm":{"kind":"lp","params":{"p":2.0}}}}"#)
                .unwrap();
        assert_eq!(kp, CentralizerKind::KaltonPeck { norm: KotheNorm::lp(2.0) });
    }
}
