//! Canonical preference instances with known analytic values, plus random
//! model generators for property checks.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{PlComponent, PreferenceModel, RankingComponent};

/// Largest `m` for which the full permutation population is built (8! = 40320).
pub const MAX_UNIFORM_RANKINGS: usize = 8;

/// `|Y| = k + 1` responses under a single constant reward.
pub fn uniform_pl_instance(k: usize) -> Result<PreferenceModel> {
    if k == 0 {
        return invalid("uniform-pl needs k >= 1");
    }
    PreferenceModel::plackett_luce(
        PreferenceModel::default_labels(k + 1),
        vec![(1.0, PlComponent::new(vec![1.0; k + 1])?)],
    )
}

/// All `m!` rankings of `m` responses with equal weight.
pub fn uniform_rankings_instance(m: usize) -> Result<PreferenceModel> {
    if m < 2 {
        return invalid("uniform-rankings needs m >= 2");
    }
    if m > MAX_UNIFORM_RANKINGS {
        return invalid(format!(
            "uniform-rankings with m = {m} would need {m}! components; the cap is m = {MAX_UNIFORM_RANKINGS}"
        ));
    }
    let perms = permutations(m);
    let w = 1.0 / perms.len() as f64;
    let comps = perms
        .into_iter()
        .map(|p| Ok((w, RankingComponent::new(p)?)))
        .collect::<Result<Vec<_>>>()?;
    PreferenceModel::rankings(PreferenceModel::default_labels(m), comps)
}

/// Two responses; `y1 ≻ y2` with probability `1/2 + eps`.
pub fn majority_instance(eps: f64) -> Result<PreferenceModel> {
    if !(eps > 0.0 && eps < 0.5) {
        return invalid(format!("majority needs eps in (0, 1/2), got {eps}"));
    }
    PreferenceModel::rankings(
        PreferenceModel::default_labels(2),
        vec![
            (0.5 + eps, RankingComponent::new(vec![0, 1])?),
            (0.5 - eps, RankingComponent::new(vec![1, 0])?),
        ],
    )
}

/// `a ≻ b ≻ c`, `b ≻ c ≻ a`, `c ≻ a ≻ b`, one third each.
pub fn condorcet_cycle_instance() -> Result<PreferenceModel> {
    let t = 1.0 / 3.0;
    PreferenceModel::rankings(
        vec!["a".into(), "b".into(), "c".into()],
        vec![
            (t, RankingComponent::new(vec![0, 1, 2])?),
            (t, RankingComponent::new(vec![1, 2, 0])?),
            (t, RankingComponent::new(vec![2, 0, 1])?),
        ],
    )
}

/// Permutations of `0..m` in lexicographic order.
fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..m).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (0..m.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..m).rev().find(|&j| p[j] > p[i]).expect("pivot has a successor");
        p.swap(i, j);
        p[i + 1..].reverse();
        out.push(p.clone());
    }
}

/// Random mixture of `comps` Plackett–Luce components with rewards in [-3, 3].
pub fn random_pl_mixture<R: Rng>(n: usize, comps: usize, rng: &mut R) -> PreferenceModel {
    let weights = random_simplex(comps, rng);
    let components = weights
        .into_iter()
        .map(|w| {
            let rewards = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            (w, PlComponent::new(rewards).expect("finite rewards"))
        })
        .collect();
    PreferenceModel::plackett_luce(PreferenceModel::default_labels(n), components).expect("valid random model")
}

/// Random population of `comps` uniformly shuffled rankings.
pub fn random_ranking_population<R: Rng>(n: usize, comps: usize, rng: &mut R) -> PreferenceModel {
    let weights = random_simplex(comps, rng);
    let components = weights
        .into_iter()
        .map(|w| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            (w, RankingComponent::new(order).expect("shuffled permutation"))
        })
        .collect();
    PreferenceModel::rankings(PreferenceModel::default_labels(n), components).expect("valid random model")
}

/// Uniform sample from the simplex, normalized so the weights sum to 1.
pub(crate) fn random_simplex<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// A named instance family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    UniformPl { k: usize },
    UniformRankings { m: usize },
    Majority { eps: f64 },
    CondorcetCycle,
    /// A model file, or a directory of per-prompt model files.
    Custom { path: PathBuf },
}

/// One non-contextual game: a model for a single prompt.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub prompt: String,
    pub model: PreferenceModel,
}

impl InstanceSpec {
    /// Builds every prompt's model; canonical instances have a single prompt.
    pub fn build(&self) -> Result<Vec<Instance>> {
        let single = |model: PreferenceModel| {
            Ok(vec![Instance {
                name: self.to_string(),
                prompt: "x0".into(),
                model,
            }])
        };
        match self {
            InstanceSpec::UniformPl { k } => single(uniform_pl_instance(*k)?),
            InstanceSpec::UniformRankings { m } => single(uniform_rankings_instance(*m)?),
            InstanceSpec::Majority { eps } => single(majority_instance(*eps)?),
            InstanceSpec::CondorcetCycle => single(condorcet_cycle_instance()?),
            InstanceSpec::Custom { path } => load_custom(path, &self.to_string()),
        }
    }
}

fn load_custom(path: &Path, name: &str) -> Result<Vec<Instance>> {
    let stem = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "x0".into())
    };
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        if files.is_empty() {
            return invalid(format!("no .json instance files in {}", path.display()));
        }
        files
            .iter()
            .map(|f| {
                Ok(Instance {
                    name: name.to_string(),
                    prompt: stem(f),
                    model: PreferenceModel::from_json_file(f)?,
                })
            })
            .collect()
    } else {
        Ok(vec![Instance {
            name: name.to_string(),
            prompt: stem(path),
            model: PreferenceModel::from_json_file(path)?,
        }])
    }
}

impl fmt::Display for InstanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceSpec::UniformPl { k } => write!(f, "uniform-pl:{k}"),
            InstanceSpec::UniformRankings { m } => write!(f, "uniform-rankings:{m}"),
            InstanceSpec::Majority { eps } => write!(f, "majority:{eps}"),
            InstanceSpec::CondorcetCycle => write!(f, "condorcet-cycle"),
            InstanceSpec::Custom { path } => write!(f, "custom:{}", path.display()),
        }
    }
}

impl FromStr for InstanceSpec {
    type Err = Error;

    /// `uniform-pl:K`, `uniform-rankings:M`, `majority:EPS`, `condorcet-cycle`
    /// or `custom:PATH`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let need = |what: &str| {
            arg.ok_or_else(|| Error::InvalidArgument(format!("instance {name:?} needs a parameter ({what})")))
        };
        let num = |what: &str| -> Result<usize> {
            need(what)?
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("instance {name:?}: {what} must be an integer")))
        };
        let spec = match name {
            "uniform-pl" => InstanceSpec::UniformPl { k: num("k")? },
            "uniform-rankings" => InstanceSpec::UniformRankings { m: num("m")? },
            "majority" => InstanceSpec::Majority {
                eps: need("eps")?
                    .parse()
                    .map_err(|_| Error::InvalidArgument("majority: eps must be a number".into()))?,
            },
            "condorcet-cycle" => InstanceSpec::CondorcetCycle,
            "custom" => InstanceSpec::Custom {
                path: PathBuf::from(need("path")?),
            },
            other => return invalid(format!("unknown instance {other:?}")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InstanceSpec::UniformPl { k: 0 } => invalid("uniform-pl needs k >= 1"),
            InstanceSpec::UniformRankings { m } if !(2..=MAX_UNIFORM_RANKINGS).contains(&m) => {
                invalid(format!("uniform-rankings needs 2 <= m <= {MAX_UNIFORM_RANKINGS}"))
            }
            InstanceSpec::Majority { eps } if !(eps > 0.0 && eps < 0.5) => invalid("majority needs eps in (0, 1/2)"),
            _ => Ok(()),
        }
    }
}

impl Serialize for InstanceSpec {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InstanceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(de)?.parse().map_err(serde::de::Error::custom)
    }
}
