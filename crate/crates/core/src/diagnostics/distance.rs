//! Distance from a centralizer restricted to `[u_1..u_n]` to the linear maps
//! on that span.
//!
//! Members are normalized first, so the estimate only depends on the lines
//! they span. A linear map is `Σλ_i u_i ↦ Σλ_i v_i` with `v_i` supported on
//! `supp u_i`. For fixed `v` the operator deviation is maximized over a
//! finite probe set of unit vectors of the span; the `v_i` are then fitted by
//! subgradient descent on that maximum, and adversarial hill-climbing adds
//! new probes between fitting rounds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centralizers::Centralizer;
use crate::diagnostics::sampling::{rng, standard_normal};
use crate::error::{Result, TwistError};
use crate::measure::{DisjointFamily, KVec};
use crate::spaces::KotheNorm;

const SIGN_PROBE_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Subgradient iterations per round.
    pub max_iters: usize,
    /// Fit / probe-search rounds.
    pub rounds: usize,
    pub random_probes: usize,
    /// Hill-climbing steps per adversarial probe search.
    pub climb_steps: usize,
    pub seed: u64,
    /// Initial step, relative to the starting objective.
    pub step0: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            rounds: 3,
            random_probes: 64,
            climb_steps: 200,
            seed: 0,
            step0: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverTrace {
    pub iterations: usize,
    pub probes: usize,
    /// Objective at the start of the last round minus the final objective.
    pub final_gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceEstimate {
    /// Largest probe deviation at the fitted map.
    pub value: f64,
    /// Fitted images `L(u_i)` of the original (unnormalized) members.
    pub fitted_images: Vec<KVec>,
    pub solver_trace: SolverTrace,
}

struct Probe {
    coeffs: Vec<f64>,
    image: KVec,
}

struct Problem<'a> {
    omega: &'a dyn Centralizer,
    norm: &'a KotheNorm,
    members: Vec<KVec>,
    supports: Vec<Vec<usize>>,
}

impl Problem<'_> {
    fn combine(&self, coeffs: &[f64]) -> Result<KVec> {
        let mut x = KVec::zeros(self.members[0].space());
        for (c, u) in coeffs.iter().zip(&self.members) {
            x.axpy(*c, u)?;
        }
        Ok(x)
    }

    /// Rescales `coeffs` to a unit vector of the span and records `Ω` there.
    fn probe(&self, coeffs: Vec<f64>) -> Result<Option<Probe>> {
        let x = self.combine(&coeffs)?;
        let nx = self.norm.norm(&x)?;
        if !(nx > 0.0) || !nx.is_finite() {
            return Ok(None);
        }
        let coeffs: Vec<f64> = coeffs.iter().map(|c| c / nx).collect();
        let image = self.omega.apply(&x.scale(1.0 / nx))?;
        Ok(Some(Probe { coeffs, image }))
    }

    fn residual(&self, probe: &Probe, v: &[KVec]) -> Result<KVec> {
        let mut r = probe.image.clone();
        for (c, vi) in probe.coeffs.iter().zip(v) {
            r.axpy(-c, vi)?;
        }
        Ok(r)
    }

    fn deviation(&self, probe: &Probe, v: &[KVec]) -> Result<f64> {
        self.norm.norm(&self.residual(probe, v)?)
    }

    /// Worst probe and its deviation.
    fn worst(&self, probes: &[Probe], v: &[KVec]) -> Result<(usize, f64)> {
        let devs: Vec<f64> = probes
            .par_iter()
            .map(|p| self.deviation(p, v))
            .collect::<Result<_>>()?;
        Ok(devs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &d)| if d > bv { (i, d) } else { (bi, bv) }))
    }
}

/// Estimated `dist(Ω|[u], L([u], X))`, reported as the probe maximum at the
/// best fitted map.
pub fn triviality_distance(
    omega: &dyn Centralizer,
    norm: &KotheNorm,
    family: &DisjointFamily,
    cfg: &FitConfig,
) -> Result<DistanceEstimate> {
    norm.check_space(family.space())?;
    if cfg.max_iters == 0 {
        return Err(TwistError::InvalidParameter("max_iters must be positive".into()));
    }
    let scales = family
        .members()
        .iter()
        .map(|u| norm.norm(u))
        .collect::<Result<Vec<_>>>()?;
    let members: Vec<KVec> = family.members().iter().zip(&scales).map(|(u, s)| u.scale(1.0 / s)).collect();
    let supports = members.iter().map(KVec::support).collect();
    let problem = Problem {
        omega,
        norm,
        members,
        supports,
    };
    let n = problem.members.len();
    let mut r = rng(cfg.seed);

    let mut raw: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        raw.push(e.clone());
        e[i] = -1.0;
        raw.push(e);
    }
    raw.push(vec![1.0; n]);
    if n <= SIGN_PROBE_CAP {
        for mask in 1..(1u64 << n) {
            raw.push((0..n).map(|k| if mask >> k & 1 == 1 { -1.0 } else { 1.0 }).collect());
        }
    }
    for _ in 0..cfg.random_probes {
        raw.push((0..n).map(|_| standard_normal(&mut r)).collect());
    }
    let mut probes: Vec<Probe> = raw
        .into_par_iter()
        .map(|c| problem.probe(c))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut v = problem
        .members
        .iter()
        .map(|u| omega.apply(u))
        .collect::<Result<Vec<_>>>()?;
    let (_, mut best_value) = problem.worst(&probes, &v)?;
    let mut best_v = v.clone();
    let mut iterations = 0;
    let mut round_start = best_value;
    let mut converged = false;

    for round in 0..cfg.rounds.max(1) {
        if round > 0 {
            for _ in 0..n.min(4) {
                if let Some(p) = climb(&problem, &best_v, cfg.climb_steps, &mut r)? {
                    probes.push(p);
                }
            }
            v = best_v.clone();
            let (_, val) = problem.worst(&probes, &v)?;
            best_value = val;
        }
        round_start = best_value;
        let alpha0 = cfg.step0 * best_value.max(1e-12);
        let mut last_improvement = 0;
        for k in 1..=cfg.max_iters {
            iterations += 1;
            let (w, val) = problem.worst(&probes, &v)?;
            if val < best_value {
                if best_value - val > 1e-9 * best_value.max(1.0) {
                    last_improvement = k;
                }
                best_value = val;
                best_v.clone_from(&v);
            }
            if val == 0.0 {
                break;
            }
            let res = problem.residual(&probes[w], &v)?;
            let g = norm.gradient(&res)?;
            let gnorm = g.values().iter().map(|x| x * x).sum::<f64>().sqrt();
            if gnorm == 0.0 {
                break;
            }
            let step = alpha0 / (k as f64).sqrt() / gnorm;
            for (i, vi) in v.iter_mut().enumerate() {
                let c = probes[w].coeffs[i];
                if c == 0.0 {
                    continue;
                }
                for &a in &problem.supports[i] {
                    vi.values_mut()[a] += step * c * g.get(a);
                }
            }
        }
        converged = cfg.max_iters - last_improvement >= cfg.max_iters / 5;
    }

    let (_, value) = problem.worst(&probes, &best_v)?;
    let fitted_images = best_v.iter().zip(&scales).map(|(vi, s)| vi.scale(*s)).collect();
    Ok(DistanceEstimate {
        value,
        fitted_images,
        solver_trace: SolverTrace {
            iterations,
            probes: probes.len(),
            final_gap: round_start - value,
            converged,
        },
    })
}

/// Random-walk ascent on the unit sphere of the span for the deviation at `v`.
fn climb<R: Rng>(problem: &Problem<'_>, v: &[KVec], steps: usize, r: &mut R) -> Result<Option<Probe>> {
    let n = problem.members.len();
    let Some(mut cur) = problem.probe((0..n).map(|_| standard_normal(r)).collect())? else {
        return Ok(None);
    };
    let mut cur_dev = problem.deviation(&cur, v)?;
    let mut sigma = 0.5;
    for _ in 0..steps {
        let trial: Vec<f64> = cur.coeffs.iter().map(|c| c + sigma * standard_normal(r) / (n as f64).sqrt()).collect();
        if let Some(p) = problem.probe(trial)? {
            let d = problem.deviation(&p, v)?;
            if d > cur_dev {
                cur = p;
                cur_dev = d;
                continue;
            }
        }
        sigma = (sigma * 0.97).max(1e-3);
    }
    Ok(Some(cur))
}
