use twistlab_core::centralizers::{lorentz_coefficients, twisted_norm, CentralizerKind, Zero};
use twistlab_core::diagnostics::sampling::{random_family, rng};
use twistlab_core::diagnostics::{
    estimate_chain_check, psi_upper_scan, quasi_linearity_constant, FitConfig, SamplerConfig,
};
use twistlab_core::{AtomSpace, DisjointFamily, KVec, KotheNorm};

#[test]
fn kalton_peck_scan_stays_away_from_zero() {
    let space = AtomSpace::counting(32).unwrap();
    let norm = KotheNorm::lp(2.0);
    let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
    let scan = psi_upper_scan(&kp, &norm, &space, 16, 6, &FitConfig { seed: 4, ..Default::default() }).unwrap();
    assert!(scan.value >= 0.1, "{}", scan.value);
    assert_eq!(scan.witness.len(), 16);
    assert!(scan.candidates.iter().all(|c| c.value >= scan.value));
}

#[test]
fn block_scan_finds_a_trivial_family() {
    let blocks = vec![6, 6];
    let space = AtomSpace::counting(12).unwrap();
    let omega = CentralizerKind::BlockDerivation {
        p0: 1.0,
        p1: 3.0,
        theta: 0.5,
        block_sizes: blocks.clone(),
    };
    let norm = KotheNorm::lp_sum_l2_blocks(1.5, blocks);
    let cfg = FitConfig {
        max_iters: 100,
        rounds: 1,
        ..Default::default()
    };
    let scan = psi_upper_scan(&omega, &norm, &space, 4, 3, &cfg).unwrap();
    assert!(scan.value < 1e-8, "{}", scan.value);
}

#[test]
fn lorentz_chain_has_slack() {
    let (p0, q0, p1, q1, theta) = (1.5, 1.0, 4.0, 3.0, 0.35);
    let c = lorentz_coefficients(p0, q0, p1, q1, theta).unwrap();
    let omega = CentralizerKind::LorentzDerivation { p0, q0, p1, q1, theta };
    let norm = KotheNorm::lorentz(c.p, c.q);
    let space = AtomSpace::counting(24).unwrap();
    let mut r = rng(12);
    for n in [2, 4, 8] {
        let fam = random_family(&space, n, false, &mut r);
        let members = fam
            .members()
            .iter()
            .map(|u| u.scale(1.0 / norm.norm(u).unwrap()))
            .collect();
        let fam = DisjointFamily::new(members).unwrap();
        let m = |p: f64, q: f64| (n as f64).powf(1.0 / p.min(q));
        let rep = estimate_chain_check(&omega, &norm, m(p0, q0), m(p1, q1), m(c.p, c.q), theta, &fam).unwrap();
        assert!(!rep.violated, "n={n}: {rep:?}");
    }
}

#[test]
fn kalton_peck_quasi_linearity_is_modest() {
    let space = AtomSpace::counting(32).unwrap();
    let norm = KotheNorm::lp(2.0);
    let kp = CentralizerKind::KaltonPeck { norm: norm.clone() };
    let q = quasi_linearity_constant(&kp, &norm, &space, &SamplerConfig::default()).unwrap();
    assert!(q.value > 0.0 && q.value <= 4.0, "{q:?}");
    assert_eq!(quasi_linearity_constant(&Zero, &norm, &space, &SamplerConfig::default()).unwrap().value, 0.0);
}

#[test]
fn twisted_sum_of_a_linear_pair() {
    let space = AtomSpace::counting(3).unwrap();
    let norm = KotheNorm::lp(1.0);
    let x = KVec::new(&space, vec![1.0, -1.0, 2.0]).unwrap();
    assert_eq!(twisted_norm(&norm, &Zero, &x, &x).unwrap(), 8.0);
    assert_eq!(twisted_norm(&norm, &Zero, &KVec::zeros(&space), &x).unwrap(), 4.0);
}

#[test]
fn descriptors_round_trip_through_json() {
    let kinds = vec![
        CentralizerKind::KaltonPeck {
            norm: KotheNorm::lp(f64::INFINITY),
        },
        CentralizerKind::Lozanovskii {
            norm0: KotheNorm::lp(1.0),
            norm1: KotheNorm::schreier(),
            theta: 0.5,
            solver: Default::default(),
        },
    ];
    for k in kinds {
        let s = serde_json::to_string(&k).unwrap();
        let back: CentralizerKind = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
    }
}
