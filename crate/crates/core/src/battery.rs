//! The acceptance battery: ten numbered criteria with pinned tolerances,
//! seeds and runtime limits. Used by the `acceptance` test target and the
//! `suite` subcommand.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::centralizers::{
    kalton_peck, lorentz_coefficients, lorentz_derivation, lozanovskii_decompose, block_derivation, block_exponent,
    derivation_from_decomposition, Centralizer, CentralizerKind, SolverConfig, Sum,
};
use crate::diagnostics::{
    centralizer_constant, duality_check, kalton_peck_nabla_closed_form, kalton_peck_track, nabla, parameters,
    pconvex_schreier_track, psi_lower_track, psi_upper_scan, schreier_half_track, sign_pattern_deviations,
    triviality_distance, FitConfig, LogBase, NablaMode, ParamStrategy, SamplerConfig,
};
use crate::diagnostics::sampling::{random_family, rng, signed_exponential_vector, standard_normal};
use crate::error::Result;
use crate::measure::{AtomSpace, DisjointFamily, KVec};
use crate::spaces::{conjugate, KotheNorm};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_secs: f64,
    pub limit_secs: Option<f64>,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {:>2} {} ({:.2}s", self.id, self.name, self.elapsed_secs)?;
        if let Some(limit) = self.limit_secs {
            write!(f, " / limit {limit:.0}s")?;
        }
        write!(f, "): {}", self.detail)
    }
}

type Check = fn() -> Result<(bool, String)>;

const CRITERIA: [(u8, &str, Option<f64>, Check); 10] = [
    (1, "nabla identity", Some(1.0), nabla_identity),
    (2, "kalton-peck centralizer constant", Some(5.0), kp_centralizer_constant),
    (3, "growth parameters", Some(60.0), growth_parameters),
    (4, "duality", None, duality),
    (5, "lozanovskii agreement", Some(30.0), lozanovskii_agreement),
    (6, "lorentz degenerations", None, lorentz_degenerations),
    (7, "block derivation", None, block_derivation_checks),
    (8, "triviality-distance window", Some(60.0), distance_window),
    (9, "psi tracks", Some(300.0), psi_tracks),
    (10, "property battery", Some(120.0), property_battery),
];

pub fn criterion_ids() -> Vec<u8> {
    CRITERIA.iter().map(|c| c.0).collect()
}

/// Runs one criterion; panics on an unknown id.
pub fn run_criterion(id: u8) -> CriterionOutcome {
    let &(id, name, limit, check) = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .unwrap_or_else(|| panic!("unknown criterion {id}"));
    let start = Instant::now();
    let result = check();
    let elapsed_secs = start.elapsed().as_secs_f64();
    let (ok, mut detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = limit.map_or(true, |l| elapsed_secs < l);
    if !in_time {
        detail.push_str("; runtime limit exceeded");
    }
    CriterionOutcome {
        id,
        name,
        passed: ok && in_time,
        detail,
        elapsed_secs,
        limit_secs: limit,
    }
}

pub fn run_all() -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|c| run_criterion(c.0)).collect()
}

fn nabla_identity() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for p in [1.0, 2.0, 4.0] {
        let norm = KotheNorm::lp(p);
        let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
        for n in [2, 4, 8, 16] {
            let space = AtomSpace::counting(n)?;
            let fam = DisjointFamily::canonical(&space, n)?;
            let expected = kalton_peck_nabla_closed_form(p, n);
            for d in sign_pattern_deviations(&kp, &norm, &fam)? {
                worst = worst.max((d - expected).abs());
            }
            let avg = nabla(&kp, &norm, &fam, None, NablaMode::Exact)?;
            worst = worst.max((avg.value - expected).abs());
        }
    }
    Ok((worst <= 1e-9, format!("max |deviation − p⁻¹n^(1/p)·ln n| = {worst:.3e} (tol 1e-9)")))
}

fn kp_centralizer_constant() -> Result<(bool, String)> {
    let space = AtomSpace::counting(32)?;
    let norm = KotheNorm::lp(2.0);
    let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
    let est = centralizer_constant(&kp, &norm, &space, &SamplerConfig { samples: 10_000, seed: 0 })?;
    let bound = 2.0 / std::f64::consts::E + 0.01;
    Ok((
        est.value <= bound,
        format!("sup ratio {:.6} over {} samples (bound {bound:.6})", est.value, est.samples),
    ))
}

fn growth_parameters() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();

    let space = AtomSpace::counting(32)?;
    let strategy = ParamStrategy {
        budget: 40,
        ..Default::default()
    };
    let mut lp_err = 0.0f64;
    for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
        let norm = KotheNorm::lp(p);
        for n in 1..=32 {
            let est = parameters(&norm, &space, n, &strategy)?;
            let target = (n as f64).powf(1.0 / p);
            lp_err = lp_err.max((est.big_m - target).abs()).max((est.small_m - target).abs());
        }
    }
    ok &= lp_err <= 1e-10;
    notes.push(format!("lp max error {lp_err:.1e}"));

    let space = AtomSpace::counting(20)?;
    let schreier = KotheNorm::schreier();
    let mut s_err = 0.0f64;
    for n in 1..=10 {
        let est = parameters(&schreier, &space, n, &ParamStrategy::default())?;
        s_err = s_err.max((est.big_m - n as f64).abs());
    }
    ok &= s_err <= 1e-12;
    notes.push(format!("schreier max |M(n) − n| {s_err:.1e}"));

    let space = AtomSpace::counting(16)?;
    let dual = KotheNorm::schreier_dual();
    let mut ratios = Vec::new();
    for n in [4, 8, 12] {
        let est = parameters(&dual, &space, n, &ParamStrategy::default())?;
        let r = est.big_m / (n as f64).log2();
        ok &= (0.25..=4.0).contains(&r);
        ratios.push(format!("{r:.3}"));
    }
    notes.push(format!("schreier-dual M/log2 n = [{}]", ratios.join(", ")));

    let space = lorentz_space()?;
    let mut worst = 1.0f64;
    for (p, q) in [(2.0, 1.0), (1.0, 2.0), (3.0, 2.0)] {
        let norm = KotheNorm::lorentz(p, q);
        for n in 1..=16 {
            let est = parameters(&norm, &space, n, &ParamStrategy::default())?;
            let target = (n as f64).powf(1.0 / f64::min(p, q));
            let factor = (est.big_m / target).max(target / est.big_m);
            worst = worst.max(factor);
        }
    }
    ok &= worst <= 2.0;
    notes.push(format!("lorentz worst factor {worst:.3}"));
    Ok((ok, notes.join("; ")))
}

/// Sixteen unit atoms followed by sixteen atoms of geometrically growing
/// measure, so both equal-measure and scale-separated families exist.
pub fn lorentz_space() -> Result<AtomSpace> {
    let mut weights = vec![1.0; 16];
    weights.extend((0..16).map(|k| 1e4f64.powi(k)));
    AtomSpace::new(weights)
}

fn duality() -> Result<(bool, String)> {
    let space = AtomSpace::counting(32)?;
    let strategy = ParamStrategy {
        budget: 40,
        ..Default::default()
    };
    let mut lp_err = 0.0f64;
    let mut cert_err = 0.0f64;
    for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
        let norm = KotheNorm::lp(p);
        let dual = KotheNorm::lp(conjugate(p));
        for n in 1..=32 {
            let m = parameters(&norm, &space, n, &strategy)?.small_m;
            let big_m = parameters(&dual, &space, n, &strategy)?.big_m;
            lp_err = lp_err.max((m * big_m - n as f64).abs());
            let rep = duality_check(&norm, &space, n, &strategy)?;
            cert_err = cert_err.max((rep.ratio - 1.0).abs());
        }
    }
    let space = AtomSpace::counting(20)?;
    let mut min_ratio = f64::INFINITY;
    for n in 1..=10 {
        let rep = duality_check(&KotheNorm::schreier(), &space, n, &ParamStrategy::default())?;
        min_ratio = min_ratio.min(rep.ratio);
    }
    let ok = lp_err <= 1e-9 && cert_err <= 1e-9 && min_ratio >= 1.0 - 1e-9;
    Ok((
        ok,
        format!(
            "lp max |m·M* − n| {lp_err:.1e}, certified ratio error {cert_err:.1e}; schreier min ratio {min_ratio:.4}"
        ),
    ))
}

fn lozanovskii_agreement() -> Result<(bool, String)> {
    let space = AtomSpace::counting(64)?;
    let (l1, linf) = (KotheNorm::lp(1.0), KotheNorm::lp(f64::INFINITY));
    let mut r = rng(5);
    let mut value_err = 0.0f64;
    let mut omega_err = 0.0f64;
    let ps = [1.5, 2.0, 3.0, 4.0];
    for k in 0..100 {
        let p = ps[k % ps.len()];
        let x = KVec::new(&space, (0..64).map(|_| standard_normal(&mut r).exp()).collect())?;
        let dec = lozanovskii_decompose(&l1, &linf, 1.0 - 1.0 / p, &x, &SolverConfig::default())?;
        let lp = KotheNorm::lp(p);
        let target = lp.norm(&x)?;
        value_err = value_err.max((dec.achieved_value - target).abs() / target);
        let om = derivation_from_decomposition(&dec, &x)?;
        let reference = kalton_peck(&lp, &x)?.scale(-p);
        for i in 0..64 {
            omega_err = omega_err.max((om.get(i) - reference.get(i)).abs() / reference.get(i).abs());
        }
    }
    Ok((
        value_err <= 1e-6 && omega_err <= 1e-3,
        format!("value rel err {value_err:.2e} (tol 1e-6); derivation vs −p·KP max rel err {omega_err:.2e} (tol 1e-3)"),
    ))
}

fn lorentz_degenerations() -> Result<(bool, String)> {
    let space = AtomSpace::counting(12)?;
    let mut r = rng(6);
    let mut ok = true;
    for _ in 0..200 {
        let p = r.gen_range(0.5..5.0);
        let q = r.gen_range(0.5..5.0);
        let theta = r.gen_range(0.05..0.95);
        let x = signed_exponential_vector(&space, &mut r);
        ok &= lorentz_derivation(p, q, p, q, theta, &x)?.values().iter().all(|&v| v == 0.0);
        let p1 = r.gen_range(0.5..5.0);
        ok &= lorentz_coefficients(p, q, p1, q, theta)?.kp == 0.0;
    }
    Ok((ok, "equal endpoints give Ω ≡ 0 and q₀ = q₁ gives a zero KP coefficient on 200 draws".into()))
}

fn block_derivation_checks() -> Result<(bool, String)> {
    let blocks = vec![4, 6, 8, 5];
    let space = AtomSpace::counting(23)?;
    let mut r = rng(7);
    let mut exact = true;
    let mut worst = 0.0f64;
    let starts = [0, 4, 10, 18];
    for trial in 0..40 {
        let b = trial % blocks.len();
        let (p0, p1) = (r.gen_range(1.0..4.0), r.gen_range(1.0..4.0));
        let theta = r.gen_range(0.1..0.9);
        let inside: Vec<usize> = (starts[b]..starts[b] + blocks[b]).collect();
        let mut x = KVec::zeros(&space);
        for &i in &inside {
            x.values_mut()[i] = standard_normal(&mut r);
        }
        exact &= block_derivation(p0, p1, theta, &blocks, &x)?.values().iter().all(|&v| v == 0.0);

        let n = r.gen_range(2..=blocks[b].min(4));
        let members = (0..n)
            .map(|k| {
                let atoms: Vec<usize> = inside.iter().copied().skip(k).step_by(n).collect();
                x.restrict(&atoms)
            })
            .filter(|u| !u.is_zero())
            .collect();
        let fam = DisjointFamily::new(members)?;
        let omega = CentralizerKind::BlockDerivation {
            p0,
            p1,
            theta,
            block_sizes: blocks.clone(),
        };
        let norm = KotheNorm::lp_sum_l2_blocks(block_exponent(p0, p1, theta), blocks.clone());
        let cfg = FitConfig {
            max_iters: 50,
            rounds: 1,
            ..Default::default()
        };
        worst = worst.max(triviality_distance(&omega, &norm, &fam, &cfg)?.value);
    }
    Ok((
        exact && worst <= 1e-8,
        format!("within-block Ω exactly zero: {exact}; max within-block distance {worst:.1e} (tol 1e-8)"),
    ))
}

fn distance_window() -> Result<(bool, String)> {
    let space = AtomSpace::counting(64)?;
    let norm = KotheNorm::lp(2.0);
    let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
    let fam = DisjointFamily::canonical(&space, 64)?;
    let est = triviality_distance(&kp, &norm, &fam, &FitConfig::default())?;
    let ln = 64f64.ln();
    let (lo, hi) = (f64::max(0.0, ln / 4.0 - 2.0), ln / 2.0 + 0.5);
    Ok((
        (lo..=hi).contains(&est.value),
        format!(
            "estimate {:.4} in [{lo:.4}, {hi:.4}], {} iterations, {} probes",
            est.value, est.solver_trace.iterations, est.solver_trace.probes
        ),
    ))
}

fn psi_tracks() -> Result<(bool, String)> {
    let mut formula_err = 0.0f64;
    for n in [2usize, 3, 8, 16, 100, 1 << 12, 1 << 20] {
        let ln = (n as f64).ln();
        for p in [1.25, 1.5, 2.0, 3.0, 4.0] {
            let theta = 1.0 - 1.0 / p;
            formula_err = formula_err.max((kalton_peck_track(p, n) - (ln - 3.0 / f64::min(theta, 1.0 - theta))).abs());
            let pc = conjugate(p);
            let expected = ln.abs().powf(1.0 / pc) / p - (3.0 / p) / f64::max(1.0 / p, 1.0 / pc);
            formula_err = formula_err.max((pconvex_schreier_track(p, n) - expected).abs());
        }
        for base in [LogBase::Natural, LogBase::Two] {
            let expected = (ln - base.log(n as f64).ln()).abs() - 6.0;
            formula_err = formula_err.max((schreier_half_track(n, base) - expected).abs());
            let sq = |n: usize| (n as f64).sqrt();
            let general = psi_lower_track(|n| n as f64, |n| base.log(n as f64), sq, sq, 0.5, n)?;
            formula_err = formula_err.max((general - expected).abs());
        }
        let sq = |n: usize| (n as f64).sqrt();
        let general = psi_lower_track(|n| n as f64, |_| 1.0, sq, sq, 0.5, n)?;
        formula_err = formula_err.max((general - kalton_peck_track(2.0, n)).abs());
    }
    let mut ok = formula_err <= 1e-12;
    let mut notes = vec![format!("closed-form track error {formula_err:.1e}")];

    let norm = KotheNorm::lp(2.0);
    let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
    for n in [16, 32] {
        let space = AtomSpace::counting(2 * n)?;
        let lower = kalton_peck_track(2.0, n);
        let scan = psi_upper_scan(&kp, &norm, &space, n, 20, &FitConfig { seed: 9, ..Default::default() })?;
        if lower > 0.0 {
            ok &= scan.value >= lower;
        }
        notes.push(format!("n={n}: lower {lower:.4}, upper {:.4}", scan.value));
    }
    Ok((ok, notes.join("; ")))
}

fn property_battery() -> Result<(bool, String)> {
    const CASES: usize = 10_000;
    let mut r = rng(10);
    let norms = [
        KotheNorm::lp(0.5),
        KotheNorm::lp(1.0),
        KotheNorm::lp(2.5),
        KotheNorm::lp(f64::INFINITY),
        KotheNorm::lorentz(2.0, 1.0),
        KotheNorm::lorentz(1.5, 3.0),
        KotheNorm::schreier(),
        KotheNorm::schreier_dual(),
        KotheNorm::schlumprecht(),
        KotheNorm::p_convexification(KotheNorm::schreier(), 2.0),
        KotheNorm::lp_sum_l2_blocks(1.5, vec![3, 2, 3]),
    ];
    let space = AtomSpace::counting(8)?;
    let weighted = AtomSpace::new(vec![0.5, 1.0, 2.0, 0.25, 1.5, 3.0, 1.0, 0.75])?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()) + 1e-12;

    let mut violations = [0usize; 5];
    for k in 0..CASES {
        let norm = &norms[k % norms.len()];
        let sp = if norm.check_space(&weighted).is_ok() && k % 2 == 0 {
            &weighted
        } else {
            &space
        };
        let x = signed_exponential_vector(sp, &mut r);
        let y = signed_exponential_vector(sp, &mut r);
        let c = standard_normal(&mut r) * 3.0;
        if !close(norm.norm(&x.scale(c))?, c.abs() * norm.norm(&x)?) {
            violations[0] += 1;
        }
        let shrink = KVec::new(sp, (0..sp.len()).map(|_| r.gen_range(0.0..=1.0)).collect())?;
        if norm.norm(&x.mul(&shrink)?)? > norm.norm(&x)? * (1.0 + 1e-9) + 1e-12 {
            violations[1] += 1;
        }
        let bound = norm.quasi_triangle_constant() * (norm.norm(&x)? + norm.norm(&y)?);
        if norm.norm(&x.add(&y)?)? > bound * (1.0 + 1e-9) {
            violations[2] += 1;
        }
    }

    let lp = KotheNorm::lp(2.0);
    let blocks = vec![3, 2, 3];
    let maps: Vec<CentralizerKind> = vec![
        CentralizerKind::KaltonPeck { norm: lp.clone() },
        CentralizerKind::KaltonPeck {
            norm: KotheNorm::lorentz(2.0, 1.0),
        },
        CentralizerKind::Kappa {},
        CentralizerKind::LorentzDerivation {
            p0: 1.5,
            q0: 1.0,
            p1: 3.0,
            q1: 2.0,
            theta: 0.4,
        },
        CentralizerKind::BlockDerivation {
            p0: 1.0,
            p1: 4.0,
            theta: 0.3,
            block_sizes: blocks,
        },
        CentralizerKind::ScaledKp {
            norm: KotheNorm::lp(1.5),
            factor: -1.5,
        },
    ];
    for k in 0..CASES {
        let omega = &maps[k % maps.len()];
        let x = signed_exponential_vector(&space, &mut r);
        let ox = omega.apply(&x)?;
        let contractive = ox.support().iter().all(|&i| x.get(i) != 0.0);
        let c = standard_normal(&mut r) * 3.0;
        let oc = omega.apply(&x.scale(c))?;
        let homogeneous = (0..space.len()).all(|i| close(oc.get(i), c * ox.get(i)));
        if !(contractive && homogeneous) {
            violations[3] += 1;
        }
    }

    for k in 0..CASES {
        let a = &maps[k % maps.len()];
        let b = &maps[(k / maps.len() + 1 + k) % maps.len()];
        let n = r.gen_range(1..=5);
        let fam = random_family(&space, n, k % 2 == 0, &mut r);
        let sum = Sum(a, b);
        let both = nabla(&sum, &lp, &fam, None, NablaMode::Exact)?.value;
        let split = nabla(a, &lp, &fam, None, NablaMode::Exact)?.value + nabla(b, &lp, &fam, None, NablaMode::Exact)?.value;
        if both > split * (1.0 + 1e-9) + 1e-12 {
            violations[4] += 1;
        }
    }

    let names = ["homogeneity", "monotonicity", "quasi-triangle", "contractive+homogeneous", "nabla subadditivity"];
    let detail = names
        .iter()
        .zip(violations)
        .map(|(n, v)| format!("{n} {v}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((
        violations.iter().all(|&v| v == 0),
        format!("{CASES} cases per property; violations: {detail}"),
    ))
}
