use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use twistlab_core::battery::{criterion_ids, run_criterion};
use twistlab_core::centralizers::{derivation_from_decomposition, kalton_peck, lozanovskii_decompose};
use twistlab_core::diagnostics::nabla::DEFAULT_EXACT_CAP;
use twistlab_core::diagnostics::sampling::{rng, standard_normal};
use twistlab_core::diagnostics::{
    centralizer_constant, kalton_peck_nabla_closed_form, kalton_peck_track, nabla, param_table,
    pconvex_schreier_track, psi_upper_scan, quasi_linearity_constant, schreier_half_track, triviality_distance,
    AnalyticParams, Evaluation, FitConfig, LogBase, NablaMode, ParamStrategy, SamplerConfig,
};
use twistlab_core::spaces::NormKind;
use twistlab_core::{AtomSpace, Centralizer, CentralizerKind, DisjointFamily, KVec, KotheNorm, SolverConfig};

use crate::plot::{line_plot, Series};
use crate::settings::Settings;

/// Everything a subcommand produces before it is written out.
pub struct Outcome {
    pub rows: Value,
    pub csv: String,
    pub extra: Value,
    pub svg: Option<String>,
    /// Printed instead of the CSV table when present.
    pub summary: Option<String>,
    pub success: bool,
}

fn table<T: Serialize>(rows: &[T]) -> Result<(Value, String)> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)?;
    Ok((serde_json::to_value(rows)?, csv))
}

fn series(name: &str, points: impl IntoIterator<Item = (f64, Option<f64>)>) -> Series {
    Series {
        name: name.into(),
        points: points.into_iter().filter_map(|(x, y)| y.map(|y| (x, y))).collect(),
    }
}

/// Block spaces fix their own size; other lattices default to a multiple of
/// the largest family size.
fn space_for(norm: &KotheNorm, grid: &[usize], atoms: Option<usize>, default_factor: usize) -> Result<AtomSpace> {
    let max = grid.iter().copied().max().unwrap_or(1);
    let atoms = atoms.unwrap_or(match norm.kind() {
        NormKind::LpSumL2Blocks { block_sizes, .. } => block_sizes.iter().sum(),
        _ => max * default_factor,
    });
    if atoms < max {
        bail!("--atoms {atoms} is smaller than the largest family size {max}");
    }
    if grid.contains(&0) {
        bail!("family sizes must be positive");
    }
    Ok(AtomSpace::counting(atoms)?)
}

fn normalized_canonical(norm: &KotheNorm, space: &AtomSpace, n: usize) -> twistlab_core::Result<DisjointFamily> {
    let members = (0..n)
        .map(|i| {
            let e = KVec::unit(space, i);
            norm.norm(&e).map(|s| e.scale(1.0 / s))
        })
        .collect::<twistlab_core::Result<Vec<_>>>()?;
    DisjointFamily::new(members)
}

fn finite_lp(norm: &KotheNorm) -> Option<f64> {
    match norm.kind() {
        NormKind::Lp { p } if p.is_finite() => Some(*p),
        _ => None,
    }
}

#[derive(Serialize)]
struct NablaRow {
    n: usize,
    nabla: Option<f64>,
    stderr: Option<f64>,
    evaluation: String,
    closed_form: Option<f64>,
    abs_error: Option<f64>,
    error: Option<String>,
}

pub fn nabla_cmd(s: &Settings) -> Result<Outcome> {
    let norm = s.norm()?;
    let omega = s.centralizer(&norm)?;
    let grid = s.grid(&[2, 4, 8, 16]);
    let space = space_for(&norm, &grid, s.atoms, 1)?;
    let samples = s.samples.unwrap_or(4096);
    let mode = match s.mode.as_deref().unwrap_or("auto") {
        "auto" => NablaMode::Auto {
            exact_cap: s.exact_cap.unwrap_or(DEFAULT_EXACT_CAP),
            samples,
            seed: s.seed(),
        },
        "exact" => NablaMode::Exact,
        "mc" | "monte-carlo" => NablaMode::MonteCarlo { samples, seed: s.seed() },
        other => bail!("unknown mode {other:?}"),
    };
    let kp_p = match omega {
        CentralizerKind::KaltonPeck { .. } => finite_lp(&norm),
        _ => None,
    };
    let rows: Vec<NablaRow> = grid
        .par_iter()
        .map(|&n| {
            let closed_form = kp_p.map(|p| kalton_peck_nabla_closed_form(p, n));
            let res = normalized_canonical(&norm, &space, n).and_then(|f| nabla(&omega, &norm, &f, None, mode));
            match res {
                Ok(r) => NablaRow {
                    n,
                    nabla: Some(r.value),
                    stderr: Some(r.stderr),
                    evaluation: match r.evaluation {
                        Evaluation::Exact { .. } => "exact".into(),
                        Evaluation::MonteCarlo { .. } => "monte_carlo".into(),
                    },
                    closed_form,
                    abs_error: closed_form.map(|c| (c - r.value).abs()),
                    error: None,
                },
                Err(e) => NablaRow {
                    n,
                    nabla: None,
                    stderr: None,
                    evaluation: String::new(),
                    closed_form,
                    abs_error: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let svg = line_plot(
        &format!("∇ of {} on {}", omega.describe(), norm.label()),
        "n",
        "∇",
        &[
            series("measured", rows.iter().map(|r| (r.n as f64, r.nabla))),
            series("closed form", rows.iter().map(|r| (r.n as f64, r.closed_form))),
        ],
    );
    let (json, csv) = table(&rows)?;
    Ok(Outcome {
        rows: json,
        csv,
        extra: json!({ "centralizer": omega, "space": norm, "mode": mode }),
        svg: Some(svg),
        summary: None,
        success: true,
    })
}

#[derive(Serialize)]
struct ParamRow {
    n: usize,
    #[serde(rename = "M")]
    big_m: f64,
    #[serde(rename = "m")]
    small_m: f64,
    analytic: Option<f64>,
}

fn analytic_params(norm: &KotheNorm) -> Option<AnalyticParams> {
    match norm.kind() {
        NormKind::Lp { p } => Some(AnalyticParams::lp(*p)),
        NormKind::Lorentz { p, q } => Some(AnalyticParams::lorentz(*p, *q)),
        NormKind::Schreier {} => Some(AnalyticParams::schreier()),
        NormKind::SchreierDual { .. } => Some(AnalyticParams::schreier_dual(LogBase::Two)),
        _ => None,
    }
}

pub fn params_cmd(s: &Settings) -> Result<Outcome> {
    let norm = s.norm()?;
    let grid = s.grid(&[1, 2, 4, 8]);
    let space = space_for(&norm, &grid, s.atoms, 2)?;
    let strategy = ParamStrategy {
        budget: s.budget.unwrap_or(400),
        seed: s.seed(),
        successive: s.successive,
        ..Default::default()
    };
    let t = param_table(&norm, &space, &grid, &strategy)?;
    let law = analytic_params(&norm);
    let rows: Vec<ParamRow> = t
        .n_values
        .iter()
        .zip(t.big_m.iter().zip(&t.small_m))
        .map(|(&n, (&big_m, &small_m))| ParamRow {
            n,
            big_m,
            small_m,
            analytic: law.map(|l| l.eval(n)),
        })
        .collect();
    let svg = line_plot(
        &format!("growth parameters of {}", norm.label()),
        "n",
        "value",
        &[
            series("M(n)", rows.iter().map(|r| (r.n as f64, Some(r.big_m)))),
            series("m(n)", rows.iter().map(|r| (r.n as f64, Some(r.small_m)))),
            series("analytic", rows.iter().map(|r| (r.n as f64, r.analytic))),
        ],
    );
    let (json, csv) = table(&rows)?;
    Ok(Outcome {
        rows: json,
        csv,
        extra: json!({
            "space": norm,
            "atoms": space.len(),
            "strategy": strategy,
            "successive": t.successive,
            "strategy_log": t.strategy_log,
        }),
        svg: Some(svg),
        summary: None,
        success: true,
    })
}

#[derive(Serialize)]
struct DistanceRow {
    n: usize,
    estimate: Option<f64>,
    iterations: Option<usize>,
    probes: Option<usize>,
    converged: Option<bool>,
    error: Option<String>,
}

fn fit_config(s: &Settings) -> FitConfig {
    let d = FitConfig::default();
    FitConfig {
        seed: s.seed(),
        max_iters: s.max_iters.unwrap_or(d.max_iters),
        ..d
    }
}

pub fn distance_cmd(s: &Settings) -> Result<Outcome> {
    let norm = s.norm()?;
    let omega = s.centralizer(&norm)?;
    let grid = s.grid(&[4, 8, 16, 32]);
    let space = space_for(&norm, &grid, s.atoms, 1)?;
    let cfg = fit_config(s);
    let rows: Vec<DistanceRow> = grid
        .par_iter()
        .map(|&n| {
            match normalized_canonical(&norm, &space, n).and_then(|f| triviality_distance(&omega, &norm, &f, &cfg)) {
                Ok(d) => DistanceRow {
                    n,
                    estimate: Some(d.value),
                    iterations: Some(d.solver_trace.iterations),
                    probes: Some(d.solver_trace.probes),
                    converged: Some(d.solver_trace.converged),
                    error: None,
                },
                Err(e) => DistanceRow {
                    n,
                    estimate: None,
                    iterations: None,
                    probes: None,
                    converged: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let svg = line_plot(
        &format!("distance to linear maps: {}", omega.describe()),
        "n",
        "estimate",
        &[series("estimate", rows.iter().map(|r| (r.n as f64, r.estimate)))],
    );
    let (json, csv) = table(&rows)?;
    Ok(Outcome {
        rows: json,
        csv,
        extra: json!({ "centralizer": omega, "space": norm, "regime": regime(&norm), "fit": cfg }),
        svg: Some(svg),
        summary: None,
        success: true,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "track", rename_all = "snake_case")]
enum Track {
    KaltonPeck { p: f64 },
    SchreierHalf { base: LogBase },
    PconvexSchreier { p: f64 },
}

impl Track {
    fn eval(self, n: usize) -> f64 {
        match self {
            Track::KaltonPeck { p } => kalton_peck_track(p, n),
            Track::SchreierHalf { base } => schreier_half_track(n, base),
            Track::PconvexSchreier { p } => pconvex_schreier_track(p, n),
        }
    }
}

fn parse_track(s: &Settings, omega: &CentralizerKind, norm: &KotheNorm) -> Result<Option<Track>> {
    let base = match s.log_base.as_deref().unwrap_or("e") {
        "e" | "natural" | "ln" => LogBase::Natural,
        "2" | "two" => LogBase::Two,
        other => bail!("unknown log base {other:?}"),
    };
    let real = |t: &str| t.parse::<f64>().map_err(|_| anyhow::anyhow!("bad track parameter {t:?}"));
    Ok(match s.track.as_deref() {
        None => match omega {
            CentralizerKind::KaltonPeck { .. } => finite_lp(norm).filter(|&p| p > 1.0).map(|p| Track::KaltonPeck { p }),
            _ => None,
        },
        Some("none") => None,
        Some("schreier-half") => Some(Track::SchreierHalf { base }),
        Some(t) => match t.split_once(':') {
            Some(("kp", p)) => Some(Track::KaltonPeck { p: real(p)? }),
            Some(("pconvex", p)) => Some(Track::PconvexSchreier { p: real(p)? }),
            _ => bail!("unknown track {t:?}"),
        },
    })
}

/// Boundedness of the triviality distances characterizes triviality only on
/// `L_p`; elsewhere the estimates give one direction.
fn regime(norm: &KotheNorm) -> &'static str {
    match norm.kind() {
        NormKind::Lp { .. } => "two_sided",
        _ => "one_sided",
    }
}

#[derive(Serialize)]
struct PsiRow {
    n: usize,
    lower: Option<f64>,
    upper: Option<f64>,
    bracket_ok: Option<bool>,
    error: Option<String>,
}

pub fn psi_cmd(s: &Settings) -> Result<Outcome> {
    let norm = s.norm()?;
    let omega = s.centralizer(&norm)?;
    let grid = s.grid(&[16, 32]);
    let space = space_for(&norm, &grid, s.atoms, 2)?;
    let budget = s.budget.unwrap_or(20);
    let track = parse_track(s, &omega, &norm)?;
    let cfg = fit_config(s);
    let results: Vec<(PsiRow, Option<Value>)> = grid
        .par_iter()
        .map(|&n| {
            let lower = track.map(|t| t.eval(n));
            match psi_upper_scan(&omega, &norm, &space, n, budget, &cfg) {
                Ok(scan) => {
                    let bracket_ok = lower.map(|l| l <= 0.0 || scan.value >= l);
                    let witness = json!({ "n": n, "family": scan.witness, "candidates": scan.candidates });
                    (
                        PsiRow {
                            n,
                            lower,
                            upper: Some(scan.value),
                            bracket_ok,
                            error: None,
                        },
                        Some(witness),
                    )
                }
                Err(e) => (
                    PsiRow {
                        n,
                        lower,
                        upper: None,
                        bracket_ok: None,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();
    let (rows, witnesses): (Vec<PsiRow>, Vec<Option<Value>>) = results.into_iter().unzip();
    let svg = line_plot(
        &format!("ψ bracket for {}", omega.describe()),
        "n",
        "ψ",
        &[
            series("lower track", rows.iter().map(|r| (r.n as f64, r.lower))),
            series("upper scan", rows.iter().map(|r| (r.n as f64, r.upper))),
        ],
    );
    let (json, csv) = table(&rows)?;
    Ok(Outcome {
        rows: json,
        csv,
        extra: json!({
            "centralizer": omega,
            "space": norm,
            "budget": budget,
            "regime": regime(&norm),
            "track": track,
            "fit": cfg,
            "witnesses": witnesses.into_iter().flatten().collect::<Vec<_>>(),
        }),
        svg: Some(svg),
        summary: None,
        success: true,
    })
}

#[derive(Serialize)]
struct DecomposeRow {
    sample: usize,
    achieved_value: Option<f64>,
    closed_form_value: Option<f64>,
    value_residual: Option<f64>,
    derivation_residual: Option<f64>,
    sweeps: Option<usize>,
    last_improvement: Option<f64>,
    nonconvex_endpoint: Option<bool>,
    error: Option<String>,
}

pub fn decompose_cmd(s: &Settings) -> Result<Outcome> {
    let (norm0, norm1) = s.couple()?;
    let theta = s.theta.unwrap_or(0.5);
    let space = AtomSpace::counting(s.atoms.unwrap_or(16))?;
    let count = s.samples.unwrap_or(8);
    let solver = SolverConfig {
        max_iters: s.max_iters.unwrap_or(SolverConfig::default().max_iters),
        ..Default::default()
    };
    let mut r = rng(s.seed());
    let inputs: Vec<KVec> = (0..count)
        .map(|_| KVec::new(&space, (0..space.len()).map(|_| standard_normal(&mut r).exp()).collect()))
        .collect::<twistlab_core::Result<_>>()?;
    // (L_{p0}, L_{p1})_θ = L_p with Ω_θ = p(1/p1 − 1/p0)·𝒦_p
    let closed = match (norm0.kind(), norm1.kind()) {
        (NormKind::Lp { p: p0 }, NormKind::Lp { p: p1 }) => {
            let p = 1.0 / ((1.0 - theta) / p0 + theta / p1);
            Some((p, p * (1.0 / p1 - 1.0 / p0)))
        }
        _ => None,
    };
    let rows: Vec<DecomposeRow> = inputs
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            let run = || -> twistlab_core::Result<DecomposeRow> {
                let dec = lozanovskii_decompose(&norm0, &norm1, theta, x, &solver)?;
                let mut row = DecomposeRow {
                    sample: k,
                    achieved_value: Some(dec.achieved_value),
                    closed_form_value: None,
                    value_residual: None,
                    derivation_residual: None,
                    sweeps: Some(dec.sweeps),
                    last_improvement: Some(dec.last_improvement),
                    nonconvex_endpoint: Some(dec.nonconvex_endpoint),
                    error: None,
                };
                if let Some((p, coef)) = closed {
                    let lp = KotheNorm::lp(p);
                    let target = lp.norm(x)?;
                    row.closed_form_value = Some(target);
                    row.value_residual = Some((dec.achieved_value - target).abs() / target);
                    let om = derivation_from_decomposition(&dec, x)?;
                    let reference = kalton_peck(&lp, x)?.scale(coef);
                    let worst = (0..x.len())
                        .map(|i| {
                            let d = (om.get(i) - reference.get(i)).abs();
                            if reference.get(i) == 0.0 {
                                d
                            } else {
                                d / reference.get(i).abs()
                            }
                        })
                        .fold(0.0, f64::max);
                    row.derivation_residual = Some(worst);
                }
                Ok(row)
            };
            run().unwrap_or_else(|e| DecomposeRow {
                sample: k,
                achieved_value: None,
                closed_form_value: None,
                value_residual: None,
                derivation_residual: None,
                sweeps: None,
                last_improvement: None,
                nonconvex_endpoint: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let svg = line_plot(
        &format!("factorization of ({norm0}, {norm1}) at θ = {theta}"),
        "sample",
        "relative residual",
        &[
            series("value", rows.iter().map(|r| (r.sample as f64, r.value_residual))),
            series("derivation", rows.iter().map(|r| (r.sample as f64, r.derivation_residual))),
        ],
    );
    let (json, csv) = table(&rows)?;
    Ok(Outcome {
        rows: json,
        csv,
        extra: json!({ "couple": [norm0, norm1], "theta": theta, "solver": solver }),
        svg: Some(svg),
        summary: None,
        success: true,
    })
}

#[derive(Serialize)]
struct ConstantsRow {
    centralizer: String,
    space: String,
    atoms: usize,
    samples: usize,
    seed: u64,
    quasi_linearity: f64,
    centralizer_constant: f64,
}

pub fn constants_cmd(s: &Settings) -> Result<Outcome> {
    let norm = s.norm()?;
    let omega = s.centralizer(&norm)?;
    let space = AtomSpace::counting(s.atoms.unwrap_or(32))?;
    let cfg = SamplerConfig {
        samples: s.samples.unwrap_or(10_000),
        seed: s.seed(),
    };
    let (q, c) = rayon::join(
        || quasi_linearity_constant(&omega, &norm, &space, &cfg),
        || centralizer_constant(&omega, &norm, &space, &cfg),
    );
    let rows = vec![ConstantsRow {
        centralizer: omega.describe(),
        space: norm.label(),
        atoms: space.len(),
        samples: cfg.samples,
        seed: cfg.seed,
        quasi_linearity: q?.value,
        centralizer_constant: c?.value,
    }];
    let (json, csv) = table(&rows)?;
    Ok(Outcome {
        rows: json,
        csv,
        extra: json!({ "centralizer": omega, "space": norm }),
        svg: None,
        summary: None,
        success: true,
    })
}

#[derive(Serialize)]
struct SuiteRow {
    id: u8,
    name: &'static str,
    passed: bool,
    detail: String,
}

pub fn suite_cmd(s: &Settings) -> Result<Outcome> {
    let all = criterion_ids();
    let ids = match &s.only {
        Some(g) => {
            for id in &g.0 {
                if !all.iter().any(|&a| a as usize == *id) {
                    bail!("unknown criterion {id}");
                }
            }
            g.0.iter().map(|&i| i as u8).collect()
        }
        None => all,
    };
    let mut lines = Vec::new();
    let mut rows = Vec::new();
    for id in ids {
        let o = run_criterion(id);
        lines.push(o.to_string());
        rows.push(SuiteRow {
            id: o.id,
            name: o.name,
            passed: o.passed,
            detail: o.detail,
        });
    }
    let success = rows.iter().all(|r| r.passed);
    let (json, csv) = table(&rows)?;
    Ok(Outcome {
        rows: json,
        csv,
        extra: json!({ "passed": success }),
        svg: None,
        summary: Some(lines.join("\n")),
        success,
    })
}
