//! Growth parameters `M_K(n)` (sup of `‖x_1+…+x_n‖` over disjoint families in
//! the unit ball) and `m_K(n)` (inf over disjoint families in the unit
//! sphere), plus the successive variants.
//!
//! Every reported value is attained by a logged witness family, so `M` is a
//! certified lower bound and `m` a certified upper bound for the true
//! parameter.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::sampling::{random_family, rng, standard_normal};
use crate::error::{Result, TwistError};
use crate::measure::{AtomSpace, DisjointFamily, KVec};
use crate::spaces::{KotheNorm, NormKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamStrategy {
    /// Norm evaluations spent on randomized local search, per extremum.
    pub budget: usize,
    pub seed: u64,
    /// Force successive (or arbitrary disjoint) families; `None` follows the
    /// norm's declared preference.
    pub successive: Option<bool>,
    /// Offsets tried per block length.
    pub max_offsets: usize,
}

impl Default for ParamStrategy {
    fn default() -> Self {
        Self {
            budget: 400,
            seed: 0,
            successive: None,
            max_offsets: 32,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamEstimate {
    pub n: usize,
    pub big_m: f64,
    pub small_m: f64,
    pub successive: bool,
    pub big_m_source: String,
    pub small_m_source: String,
    #[serde(skip)]
    pub big_m_witness: DisjointFamily,
    #[serde(skip)]
    pub small_m_witness: DisjointFamily,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
struct Candidate {
    members: Vec<KVec>,
    value: f64,
    source: String,
}

struct Evaluator<'a> {
    norm: &'a KotheNorm,
    evaluations: usize,
}

impl Evaluator<'_> {
    fn normalize(&self, u: &KVec) -> Result<KVec> {
        let n = self.norm.norm(u)?;
        Ok(u.scale(1.0 / n))
    }

    fn value(&mut self, members: &[KVec]) -> Result<f64> {
        self.evaluations += 1;
        let mut sum = KVec::zeros(members[0].space());
        for u in members {
            sum.axpy(1.0, u)?;
        }
        self.norm.norm(&sum)
    }
}

fn evenly_spaced(count: usize, max: usize) -> Vec<usize> {
    if count <= max {
        return (0..count).collect();
    }
    if max < 2 {
        return vec![0];
    }
    (0..max).map(|k| k * (count - 1) / (max - 1)).collect()
}

/// Both extremes over the strategy's family classes: consecutive indicator
/// blocks of equal length at many offsets (length one covers single-atom
/// families), then budgeted local search from random families and from the
/// best block family.
pub fn parameters(norm: &KotheNorm, space: &AtomSpace, n: usize, strategy: &ParamStrategy) -> Result<ParamEstimate> {
    norm.check_space(space)?;
    let atoms = space.len();
    if n == 0 || n > atoms {
        return Err(TwistError::InvalidParameter(format!(
            "family size {n} must be in 1..={atoms}"
        )));
    }
    let successive = strategy.successive.unwrap_or_else(|| norm.successive_only_params());
    let mut ev = Evaluator { norm, evaluations: 0 };

    let mut best_hi: Option<Candidate> = None;
    let mut best_lo: Option<Candidate> = None;
    let consider = |c: Candidate, hi: &mut Option<Candidate>, lo: &mut Option<Candidate>| {
        if hi.as_ref().map_or(true, |h| c.value > h.value) {
            *hi = Some(c.clone());
        }
        if lo.as_ref().map_or(true, |l| c.value < l.value) {
            *lo = Some(c);
        }
    };

    for len in 1..=atoms / n {
        let offsets = atoms - n * len + 1;
        for off in evenly_spaced(offsets, strategy.max_offsets) {
            let members = (0..n)
                .map(|k| ev.normalize(&KVec::indicator(space, off + k * len..off + (k + 1) * len)))
                .collect::<Result<Vec<_>>>()?;
            let value = ev.value(&members)?;
            consider(
                Candidate {
                    members,
                    value,
                    source: format!("blocks(len={len},offset={off})"),
                },
                &mut best_hi,
                &mut best_lo,
            );
        }
    }

    let mut r = rng(strategy.seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    if strategy.budget > 0 {
        let restarts = (strategy.budget / 40).max(1);
        let steps = strategy.budget / restarts;
        for maximize in [true, false] {
            let seed_cand = if maximize { best_hi.clone() } else { best_lo.clone() }.expect("blocks evaluated");
            let mut starts = vec![seed_cand];
            for _ in 1..restarts {
                let fam = random_family(space, n, successive, &mut r);
                let members = fam
                    .members()
                    .iter()
                    .map(|u| ev.normalize(u))
                    .collect::<Result<Vec<_>>>()?;
                let value = ev.value(&members)?;
                starts.push(Candidate {
                    members,
                    value,
                    source: "random".into(),
                });
            }
            for start in starts {
                let label = format!("local-search from {}", start.source);
                let mut cand = local_search(&mut ev, start, steps, maximize, successive, &mut r)?;
                cand.source = label;
                consider(cand, &mut best_hi, &mut best_lo);
            }
        }
    }

    let hi = best_hi.expect("at least one candidate");
    let lo = best_lo.expect("at least one candidate");
    Ok(ParamEstimate {
        n,
        big_m: hi.value,
        small_m: lo.value,
        successive,
        big_m_source: hi.source,
        small_m_source: lo.source,
        big_m_witness: DisjointFamily::new(hi.members)?,
        small_m_witness: DisjointFamily::new(lo.members)?,
        evaluations: ev.evaluations,
    })
}

fn local_search<R: Rng>(
    ev: &mut Evaluator<'_>,
    start: Candidate,
    steps: usize,
    maximize: bool,
    successive: bool,
    r: &mut R,
) -> Result<Candidate> {
    let mut cur = start;
    let n = cur.members.len();
    let atoms = cur.members[0].len();
    for _ in 0..steps {
        let mut trial = cur.members.clone();
        let k = r.gen_range(0..n);
        let supp = trial[k].support();
        match r.gen_range(0..3) {
            0 => {
                let &a = supp.choose(r).expect("members are nonzero");
                trial[k].values_mut()[a] *= (0.5 * standard_normal(r)).exp();
            }
            1 => {
                let mut owner = vec![usize::MAX; atoms];
                for (j, u) in trial.iter().enumerate() {
                    for i in u.support() {
                        owner[i] = j;
                    }
                }
                let free: Vec<usize> = (0..atoms).filter(|&i| owner[i] == usize::MAX).collect();
                let Some(&f) = free.choose(r) else { continue };
                let target = if successive {
                    // the members immediately before or after the free atom
                    let before = (0..n).filter(|&j| trial[j].support().last().is_some_and(|&l| l < f)).max();
                    let after = (0..n).filter(|&j| trial[j].support().first().is_some_and(|&s| s > f)).min();
                    match (before, after) {
                        (Some(b), Some(a)) => {
                            if r.gen_bool(0.5) {
                                b
                            } else {
                                a
                            }
                        }
                        (Some(b), None) => b,
                        (None, Some(a)) => a,
                        (None, None) => continue,
                    }
                } else {
                    k
                };
                let scale = trial[target].sup_norm();
                trial[target].values_mut()[f] = scale * (0.5 * standard_normal(r)).exp();
            }
            _ => {
                if supp.len() < 2 {
                    continue;
                }
                let &a = supp.choose(r).expect("nonempty");
                trial[k].values_mut()[a] = 0.0;
            }
        }
        for u in trial.iter_mut() {
            *u = ev.normalize(u)?;
        }
        let value = ev.value(&trial)?;
        let better = if maximize { value > cur.value } else { value < cur.value };
        if better {
            cur = Candidate {
                members: trial,
                value,
                source: cur.source,
            };
        }
    }
    Ok(cur)
}

pub fn parameter_big_m(norm: &KotheNorm, space: &AtomSpace, n: usize, strategy: &ParamStrategy) -> Result<f64> {
    parameters(norm, space, n, strategy).map(|e| e.big_m)
}

pub fn parameter_small_m(norm: &KotheNorm, space: &AtomSpace, n: usize, strategy: &ParamStrategy) -> Result<f64> {
    parameters(norm, space, n, strategy).map(|e| e.small_m)
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamTable {
    pub norm: String,
    pub n_values: Vec<usize>,
    #[serde(rename = "M")]
    pub big_m: Vec<f64>,
    #[serde(rename = "m")]
    pub small_m: Vec<f64>,
    pub successive: bool,
    pub strategy_log: Vec<String>,
}

/// Parameters over an n-grid (rows evaluated in parallel). When a measured
/// `M(n)` falls below an earlier row, the earlier witness is padded with
/// unit vectors on free atoms; by lattice monotonicity the padded family is
/// at least as large.
pub fn param_table(
    norm: &KotheNorm,
    space: &AtomSpace,
    n_values: &[usize],
    strategy: &ParamStrategy,
) -> Result<ParamTable> {
    let mut grid = n_values.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let rows: Vec<ParamEstimate> = grid
        .par_iter()
        .map(|&n| parameters(norm, space, n, strategy))
        .collect::<Result<_>>()?;

    let successive = rows.first().is_some_and(|r| r.successive);
    let mut big_m = Vec::with_capacity(rows.len());
    let mut small_m = Vec::with_capacity(rows.len());
    let mut log = Vec::with_capacity(rows.len());
    let mut prev: Option<(f64, DisjointFamily)> = None;
    for row in &rows {
        let mut value = row.big_m;
        let mut witness = row.big_m_witness.clone();
        let mut source = row.big_m_source.clone();
        if let Some((pv, pw)) = &prev {
            if value < *pv {
                if let Some(padded) = pad_family(norm, pw, row.n, successive)? {
                    let v = norm.norm(&padded.sum())?;
                    if v > value {
                        value = v;
                        witness = padded;
                        source = "padded from previous row".into();
                    }
                }
            }
        }
        big_m.push(value);
        small_m.push(row.small_m);
        log.push(format!(
            "n={}: M via {source}; m via {}; {} evaluations",
            row.n, row.small_m_source, row.evaluations
        ));
        prev = Some((value, witness));
    }
    Ok(ParamTable {
        norm: norm.label(),
        n_values: grid,
        big_m,
        small_m,
        successive,
        strategy_log: log,
    })
}

fn pad_family(norm: &KotheNorm, fam: &DisjointFamily, n: usize, successive: bool) -> Result<Option<DisjointFamily>> {
    let extra = n - fam.len();
    let space = fam.space();
    let mut used = vec![false; space.len()];
    for u in fam.members() {
        for i in u.support() {
            used[i] = true;
        }
    }
    let last = fam.members().iter().filter_map(|u| u.support().last().copied()).max().unwrap_or(0);
    let free: Vec<usize> = (0..space.len())
        .filter(|&i| !used[i] && (!successive || i > last))
        .take(extra)
        .collect();
    if free.len() < extra {
        return Ok(None);
    }
    let mut members = fam.members().to_vec();
    for i in free {
        let e = KVec::unit(space, i);
        let en = norm.norm(&e)?;
        members.push(e.scale(1.0 / en));
    }
    Ok(Some(DisjointFamily::new(members)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    pub n: usize,
    /// `m_K(n)` attained by the witness family.
    pub m: f64,
    /// `M_{K*}(n)` attained by the norming functionals of that family.
    pub dual_big_m: f64,
    /// `m·M_* / n`; at least one for an exact dual norm.
    pub ratio: f64,
    pub certified: bool,
}

/// Pairs the `m`-witness `u_1..u_n` with normalized norming functionals
/// `y_i`; `⟨Σy_i, Σu_i⟩ ≥ n` forces `m(n)·‖Σy_i‖_* ≥ n`.
pub fn duality_check(norm: &KotheNorm, space: &AtomSpace, n: usize, strategy: &ParamStrategy) -> Result<DualityReport> {
    let dual = norm
        .dual()
        .ok_or_else(|| TwistError::InvalidParameter(format!("no dual norm available for {}", norm.label())))?;
    let dual = match dual.kind() {
        NormKind::SchreierDual { cap } => KotheNorm::from(NormKind::SchreierDual {
            cap: (*cap).max(space.len()),
        }),
        _ => dual,
    };
    let est = parameters(norm, space, n, strategy)?;
    let mut total = KVec::zeros(space);
    for u in est.small_m_witness.members() {
        let y = norm
            .norming_functional(u)?
            .ok_or_else(|| TwistError::InvalidParameter(format!("no norming functional for {}", norm.label())))?;
        let y = y.restrict(&u.support());
        let yn = dual.norm(&y)?;
        total.axpy(1.0 / yn, &y)?;
    }
    let dual_big_m = dual.norm(&total)?;
    let ratio = est.small_m * dual_big_m / n as f64;
    Ok(DualityReport {
        n,
        m: est.small_m,
        dual_big_m,
        ratio,
        certified: ratio >= 1.0 - 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_parameters_are_exact() {
        let space = AtomSpace::counting(12).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let norm = KotheNorm::lp(p);
            for n in [1, 3, 5, 12] {
                let e = parameters(&norm, &space, n, &ParamStrategy { budget: 100, ..Default::default() }).unwrap();
                let target = (n as f64).powf(1.0 / p);
                assert!((e.big_m - target).abs() < 1e-10);
                assert!((e.small_m - target).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn schreier_witness_is_found() {
        let space = AtomSpace::counting(12).unwrap();
        let e = parameters(&KotheNorm::schreier(), &space, 5, &ParamStrategy::default()).unwrap();
        assert!((e.big_m - 5.0).abs() < 1e-12);
        assert!(e.small_m <= e.big_m);
    }

    #[test]
    fn rejects_oversized_families() {
        let space = AtomSpace::counting(4).unwrap();
        assert!(parameters(&KotheNorm::lp(2.0), &space, 5, &ParamStrategy::default()).is_err());
        assert!(parameters(&KotheNorm::lp(2.0), &space, 0, &ParamStrategy::default()).is_err());
    }

    #[test]
    fn table_is_monotone() {
        let space = AtomSpace::counting(16).unwrap();
        let t = param_table(&KotheNorm::schreier(), &space, &[1, 2, 3, 4, 6, 8], &ParamStrategy::default()).unwrap();
        for w in t.big_m.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for (hi, lo) in t.big_m.iter().zip(&t.small_m) {
            assert!(lo <= hi);
        }
    }

    #[test]
    fn lp_duality_is_tight() {
        let space = AtomSpace::counting(10).unwrap();
        for p in [1.5, 2.0, 4.0] {
            for n in [2, 5, 10] {
                let d = duality_check(&KotheNorm::lp(p), &space, n, &ParamStrategy::default()).unwrap();
                assert!((d.ratio - 1.0).abs() < 1e-9, "{d:?}");
            }
        }
    }

    #[test]
    fn schreier_duality_certifies() {
        let space = AtomSpace::counting(12).unwrap();
        for n in [1, 3, 6] {
            let d = duality_check(&KotheNorm::schreier(), &space, n, &ParamStrategy::default()).unwrap();
            assert!(d.certified, "{d:?}");
        }
        assert!(duality_check(&KotheNorm::schlumprecht(), &space, 2, &ParamStrategy::default()).is_err());
    }

    #[test]
    fn offsets_cover_the_ends() {
        assert_eq!(evenly_spaced(5, 32), vec![0, 1, 2, 3, 4]);
        let picked = evenly_spaced(100, 5);
        assert_eq!(picked.first(), Some(&0));
        assert_eq!(picked.last(), Some(&99));
        assert_eq!(picked.len(), 5);
    }
}
