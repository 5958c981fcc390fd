//! Experiment settings: a flat set of optional keys shared by every
//! subcommand. A JSON config file supplies a base layer and flags override it.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use twistlab_core::spaces::NormKind;
use twistlab_core::{CentralizerKind, KotheNorm};

/// An `n`-grid such as `2,4,8`, `1..10` (inclusive) or `1..4,8`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "Vec<usize>")]
pub struct Grid(pub Vec<usize>);

#[derive(Deserialize)]
#[serde(untagged)]
enum GridRepr {
    List(Vec<usize>),
    Text(String),
}

impl TryFrom<GridRepr> for Grid {
    type Error = String;

    fn try_from(r: GridRepr) -> Result<Self, String> {
        match r {
            GridRepr::List(v) => Ok(Grid(v)),
            GridRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Grid> for Vec<usize> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad grid entry {t:?}"));
            if let Some((a, b)) = part.split_once("..") {
                let b = b.strip_prefix('=').unwrap_or(b);
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range {part:?}"));
                }
                out.extend(a..=b);
            } else {
                out.push(num(part)?);
            }
        }
        if out.is_empty() {
            return Err(format!("empty grid {s:?}"));
        }
        Ok(Grid(out))
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Lattice descriptor, e.g. `lp:2`, `lorentz:2,1`, `schreier`, `blocks:1.5:4,4,4`.
    #[arg(long)]
    pub space: Option<String>,
    /// `kp`, `kappa`, `scaled-kp:F`, `lorentz:p0,q0,p1,q1,theta`, `block:p0,p1,theta`,
    /// `lozanovskii` (uses --couple and --theta), or a JSON descriptor.
    #[arg(long)]
    pub centralizer: Option<String>,
    /// Family sizes, e.g. `2,4,8,16` or `1..10`.
    #[arg(long)]
    pub n: Option<Grid>,
    #[arg(long)]
    pub atoms: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// `auto`, `exact` or `mc`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub exact_cap: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Two lattices separated by a comma, e.g. `l1,linf` or `lp:1,lorentz:2,1`.
    #[arg(long)]
    pub couple: Option<String>,
    /// Lower track: `kp:P`, `schreier-half` or `pconvex:P`.
    #[arg(long)]
    pub track: Option<String>,
    /// Base of inner logarithms: `e` or `2`.
    #[arg(long)]
    pub log_base: Option<String>,
    #[arg(long)]
    pub successive: Option<bool>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Criterion ids for `suite`.
    #[arg(long)]
    pub only: Option<Grid>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write SVG plots next to the tables.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub plot: Option<bool>,
}

macro_rules! overlay {
    ($flags:expr, $base:expr; $($field:ident),*) => {
        Settings { $($field: $flags.$field.or($base.$field),)* }
    };
}

impl Settings {
    /// Flags win over the config file.
    pub fn merged(flags: Settings, base: Settings) -> Settings {
        overlay!(flags, base; space, centralizer, n, atoms, seed, samples, budget, mode, exact_cap,
            theta, couple, track, log_base, successive, max_iters, only, out, plot)
    }

    pub fn load(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// SHA-256 of the command name and the merged settings as JSON, leaving
    /// out the keys that only affect where and how results are written.
    pub fn hash(&self, command: &str) -> String {
        let keyed = Settings {
            out: None,
            plot: None,
            ..self.clone()
        };
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update([0]);
        h.update(serde_json::to_vec(&keyed).expect("settings serialize"));
        format!("{:x}", h.finalize())
    }

    pub fn norm(&self) -> Result<KotheNorm> {
        let s = self.space.as_deref().unwrap_or("lp:2");
        parse_norm(s)
    }

    pub fn grid(&self, default: &[usize]) -> Vec<usize> {
        self.n.as_ref().map_or_else(|| default.to_vec(), |g| g.0.clone())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn plot(&self) -> bool {
        self.plot.unwrap_or(false)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("twistlab-out"))
    }

    pub fn couple(&self) -> Result<(KotheNorm, KotheNorm)> {
        parse_couple(self.couple.as_deref().unwrap_or("l1,linf"))
    }

    pub fn centralizer(&self, norm: &KotheNorm) -> Result<CentralizerKind> {
        let spec = self.centralizer.as_deref().unwrap_or("kp").trim();
        if spec.starts_with('{') {
            return serde_json::from_str(spec).context("parsing centralizer descriptor");
        }
        let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let reals = || -> Result<Vec<f64>> {
            rest.split(',')
                .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number {t:?} in {spec:?}")))
                .collect()
        };
        Ok(match head {
            "kp" | "kalton-peck" => CentralizerKind::KaltonPeck { norm: norm.clone() },
            "kappa" => CentralizerKind::Kappa {},
            "scaled-kp" => CentralizerKind::ScaledKp {
                norm: norm.clone(),
                factor: rest.trim().parse().with_context(|| format!("bad factor in {spec:?}"))?,
            },
            "lorentz" => match reals()?[..] {
                [p0, q0, p1, q1, theta] => CentralizerKind::LorentzDerivation { p0, q0, p1, q1, theta },
                _ => bail!("lorentz centralizer needs p0,q0,p1,q1,theta"),
            },
            "block" => {
                let NormKind::LpSumL2Blocks { block_sizes, .. } = norm.kind() else {
                    bail!("block centralizer needs a blocks:... space");
                };
                match reals()?[..] {
                    [p0, p1, theta] => CentralizerKind::BlockDerivation {
                        p0,
                        p1,
                        theta,
                        block_sizes: block_sizes.clone(),
                    },
                    _ => bail!("block centralizer needs p0,p1,theta"),
                }
            }
            "lozanovskii" => {
                let (norm0, norm1) = self.couple()?;
                CentralizerKind::Lozanovskii {
                    norm0,
                    norm1,
                    theta: self.theta.unwrap_or(0.5),
                    solver: Default::default(),
                }
            }
            _ => bail!("unknown centralizer {spec:?}"),
        })
    }
}

/// Accepts the core descriptors plus the shorthands `l1`, `l2.5`, `linf`.
pub fn parse_norm(s: &str) -> Result<KotheNorm> {
    let s = s.trim();
    if let Some(p) = s.strip_prefix('l').filter(|p| p.starts_with(|c: char| c.is_ascii_digit()) || *p == "inf") {
        return format!("lp:{p}").parse().map_err(Into::into);
    }
    s.parse().with_context(|| format!("invalid space {s:?}"))
}

/// Splits at the first comma that leaves two valid descriptors.
pub fn parse_couple(s: &str) -> Result<(KotheNorm, KotheNorm)> {
    for (i, _) in s.match_indices(',') {
        if let (Ok(a), Ok(b)) = (parse_norm(&s[..i]), parse_norm(&s[i + 1..])) {
            return Ok((a, b));
        }
    }
    bail!("invalid couple {s:?}: expected two lattices separated by a comma")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!("1..4,8".parse::<Grid>().unwrap().0, vec![1, 2, 3, 4, 8]);
        assert_eq!("2,4".parse::<Grid>().unwrap().0, vec![2, 4]);
        assert_eq!("3..=5".parse::<Grid>().unwrap().0, vec![3, 4, 5]);
        assert!("5..3".parse::<Grid>().is_err());
        assert!("".parse::<Grid>().is_err());
        let g: Grid = serde_json::from_str("[1,2]").unwrap();
        assert_eq!(g.0, vec![1, 2]);
        let g: Grid = serde_json::from_str("\"1..3\"").unwrap();
        assert_eq!(g.0, vec![1, 2, 3]);
    }

    #[test]
    fn couples() {
        let (a, b) = parse_couple("l1,linf").unwrap();
        assert_eq!(a, KotheNorm::lp(1.0));
        assert_eq!(b, KotheNorm::lp(f64::INFINITY));
        let (a, b) = parse_couple("lorentz:2,1,schreier").unwrap();
        assert_eq!(a, KotheNorm::lorentz(2.0, 1.0));
        assert_eq!(b, KotheNorm::schreier());
        assert!(parse_couple("l1").is_err());
    }

    #[test]
    fn flags_override_config() {
        let base = Settings {
            space: Some("schreier".into()),
            seed: Some(3),
            ..Default::default()
        };
        let flags = Settings {
            seed: Some(9),
            ..Default::default()
        };
        let m = Settings::merged(flags, base);
        assert_eq!(m.space.as_deref(), Some("schreier"));
        assert_eq!(m.seed, Some(9));
        assert_eq!(m.hash("params"), m.clone().hash("params"));
        assert_ne!(m.hash("params"), m.hash("nabla"));
        let moved = Settings {
            out: Some("elsewhere".into()),
            ..m.clone()
        };
        assert_eq!(moved.hash("params"), m.hash("params"));
    }

    #[test]
    fn centralizer_specs() {
        let s = Settings {
            centralizer: Some("block:1,3,0.5".into()),
            ..Default::default()
        };
        let norm = parse_norm("blocks:1.5:2,2").unwrap();
        assert!(matches!(s.centralizer(&norm).unwrap(), CentralizerKind::BlockDerivation { .. }));
        assert!(s.centralizer(&KotheNorm::lp(2.0)).is_err());
    }
}
