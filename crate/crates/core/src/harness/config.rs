use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{bilinear_game, toy_gan_game, GameSpec, ToyGanParams, UpdateOrder};
use crate::geometry::ConvexBody;
use crate::losses::default_half_width;

/// A config file: an optional output directory and a list of
/// `[[experiment]]` tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Tsogd,
    Stochastic,
    Newton,
    AdversaryVsTsogd,
    Game,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub horizon: usize,
    pub window: usize,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Gradient-noise level, stochastic experiments only.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub seeds: SeedSpec,
    #[serde(default)]
    pub body: Option<BodySpec>,
    #[serde(default)]
    pub sequence: Option<SequenceSpec>,
    #[serde(default)]
    pub game: Option<GameConfig>,
    #[serde(default)]
    pub order: UpdateOrder,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub safety_cap: Option<u64>,
    /// When false the bound rows are still reported but never fail the run.
    #[serde(default = "default_true")]
    pub assert_bounds: bool,
}

fn default_true() -> bool {
    true
}

/// Either an explicit list or `{ first, count }`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { first: u64, count: u64 },
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::List(vec![0])
    }
}

impl SeedSpec {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { first, count } => (*first..first + count).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Unconstrained { dim: usize },
    Cube { dim: usize, half_width: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl BodySpec {
    pub fn build(&self) -> Result<ConvexBody> {
        match self {
            BodySpec::Unconstrained { dim } => ConvexBody::unconstrained(*dim),
            BodySpec::Cube { dim, half_width } => ConvexBody::cube(*dim, *half_width),
            BodySpec::Box { lower, upper } => ConvexBody::new_box(lower.clone(), upper.clone()),
            BodySpec::Ball { center, radius } => ConvexBody::ball(center.clone(), *radius),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    /// The same builtin every round.
    Builtin {
        name: String,
        #[serde(default)]
        params: Vec<f64>,
        /// Cube on which the constants are declared; defaults to the body's
        /// extent, or the builtin's default on unconstrained bodies.
        #[serde(default)]
        half_width: Option<f64>,
    },
    /// Builtins drawn per round from `pool` with randomized parameters,
    /// seeded by the run seed.
    Random {
        #[serde(default = "default_pool")]
        pool: Vec<String>,
    },
}

fn default_pool() -> Vec<String> {
    ["quadratic", "negquadratic", "linear", "sine_mix", "rastrigin_smooth"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameConfig {
    ToyGan(ToyGanParams),
    Bilinear {
        #[serde(default = "one")]
        dim: usize,
        #[serde(default = "one_f")]
        half_width: f64,
    },
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

impl GameConfig {
    pub fn build(&self) -> Result<GameSpec> {
        match self {
            GameConfig::ToyGan(p) => toy_gan_game(*p),
            GameConfig::Bilinear { dim, half_width } => bilinear_game(*dim, *half_width),
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Structural checks that need no loss evaluations.
    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for exp in &self.experiments {
            if !names.insert(exp.name.as_str()) {
                return Err(Error::Config(format!("duplicate experiment name {:?}", exp.name)));
            }
            exp.validate()?;
        }
        Ok(())
    }
}

impl ExperimentConfig {
    fn fail(&self, msg: impl std::fmt::Display) -> Error {
        Error::Config(format!("experiment {:?}: {msg}", self.name))
    }

    pub fn seed_list(&self) -> Vec<u64> {
        self.seeds.to_vec()
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            || self.name.starts_with('.')
        {
            return Err(self.fail("name must be non-empty and use only [A-Za-z0-9._-]"));
        }
        if self.window < 1 {
            return Err(self.fail(format!("w = {} violates 1 <= w", self.window)));
        }
        if self.horizon < 1 {
            return Err(self.fail(format!("T = {} violates 1 <= T", self.horizon)));
        }
        if self.seed_list().is_empty() {
            return Err(self.fail("seed list is empty"));
        }
        for (name, v) in [("eta", self.eta), ("delta", self.delta)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(self.fail(format!("{name} = {v} violates {name} > 0")));
                }
            }
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(self.fail(format!("sigma = {s} violates sigma >= 0")));
            }
            if self.kind != ExperimentKind::Stochastic {
                return Err(self.fail("sigma applies to stochastic experiments only"));
            }
        }
        let needs = |what: &str, present: bool| -> Result<()> {
            if present {
                Ok(())
            } else {
                Err(self.fail(format!("{:?} experiments need a [experiment.{what}] table", self.kind)))
            }
        };
        let forbids = |what: &str, present: bool| -> Result<()> {
            if present {
                Err(self.fail(format!("{:?} experiments take no {what}", self.kind)))
            } else {
                Ok(())
            }
        };
        match self.kind {
            ExperimentKind::Tsogd | ExperimentKind::Stochastic | ExperimentKind::Newton => {
                needs("body", self.body.is_some())?;
                needs("sequence", self.sequence.is_some())?;
                forbids("game", self.game.is_some())?;
                let body = self.body.as_ref().expect("checked").build().map_err(|e| self.fail(e))?;
                if self.kind != ExperimentKind::Tsogd && !body.is_unconstrained() {
                    return Err(self.fail(format!(
                        "{:?} experiments run on an unconstrained body",
                        self.kind
                    )));
                }
                if let Some(SequenceSpec::Builtin { name, half_width, .. }) = &self.sequence {
                    default_half_width(name).map_err(|e| self.fail(e))?;
                    if let Some(r) = half_width {
                        if !(r.is_finite() && *r > 0.0) {
                            return Err(self.fail(format!("half_width = {r} violates half_width > 0")));
                        }
                    }
                }
                if self.kind == ExperimentKind::Newton && self.eta.is_some() {
                    return Err(self.fail("the Newton learner has no learning rate"));
                }
                if self.kind == ExperimentKind::Stochastic && self.delta.is_some() {
                    return Err(self.fail("the stochastic learner has no tolerance"));
                }
                if let Some(start) = &self.start {
                    if start.len() != body.dim() {
                        return Err(self.fail(format!(
                            "start has {} coordinates, body has dimension {}",
                            start.len(),
                            body.dim()
                        )));
                    }
                }
            }
            ExperimentKind::AdversaryVsTsogd => {
                forbids("body", self.body.is_some())?;
                forbids("sequence", self.sequence.is_some())?;
                forbids("game", self.game.is_some())?;
                if self.window > self.horizon {
                    return Err(self.fail(format!(
                        "w = {} violates w <= T = {}",
                        self.window, self.horizon
                    )));
                }
                if let Some(start) = &self.start {
                    if start.len() != 1 || start[0].abs() > 1.0 {
                        return Err(self.fail("start must be one coordinate in [-1, 1]"));
                    }
                }
            }
            ExperimentKind::Game => {
                needs("game", self.game.is_some())?;
                forbids("body", self.body.is_some())?;
                forbids("sequence", self.sequence.is_some())?;
                forbids("start", self.start.is_some())?;
                if self.eta.is_some() || self.delta.is_some() {
                    return Err(self.fail("game players use their default eta and delta"));
                }
                if self.horizon <= self.window {
                    return Err(self.fail(format!(
                        "T = {} violates T > w = {}",
                        self.horizon, self.window
                    )));
                }
                self.game.as_ref().expect("checked").build().map_err(|e| self.fail(e))?;
            }
        }
        if self.kind != ExperimentKind::Game && self.order != UpdateOrder::Simultaneous {
            return Err(self.fail("update order applies to game experiments only"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
        output_dir = "out"

        [[experiment]]
        name = "smooth"
        kind = "tsogd"
        horizon = 100
        window = 10
        seeds = [1, 2, 3]
        body = { kind = "cube", dim = 2, half_width = 1.0 }
        sequence = { kind = "builtin", name = "sine_mix", params = [3.0, 0.5] }

        [[experiment]]
        name = "hard"
        kind = "adversary-vs-tsogd"
        horizon = 200
        window = 5
        seeds = { first = 0, count = 500 }

        [[experiment]]
        name = "gan"
        kind = "game"
        horizon = 40
        window = 10
        game = { kind = "toy_gan", target = 1.5 }
    "#;

    #[test]
    fn parses_and_validates_the_sample() {
        let c = ConfigFile::parse(SAMPLE).unwrap();
        c.validate().unwrap();
        assert_eq!(c.experiments.len(), 3);
        assert_eq!(c.experiments[0].seed_list(), vec![1, 2, 3]);
        assert_eq!(c.experiments[1].seed_list().len(), 500);
        match &c.experiments[2].game {
            Some(GameConfig::ToyGan(p)) => {
                assert_eq!(p.target, 1.5);
                assert_eq!(p.gen_bound, ToyGanParams::default().gen_bound);
            }
            other => panic!("{other:?}"),
        }
    }

    fn one(extra: &str) -> Result<()> {
        let text = format!(
            "[[experiment]]\nname = \"x\"\nkind = \"tsogd\"\nhorizon = 10\nwindow = 2\n\
             body = {{ kind = \"cube\", dim = 1, half_width = 1.0 }}\n\
             sequence = {{ kind = \"builtin\", name = \"quadratic\" }}\n{extra}"
        );
        ConfigFile::parse(&text)?.validate()
    }

    #[test]
    fn violated_inequalities_are_named() {
        let err = one("eta = -1.0").unwrap_err().to_string();
        assert!(err.contains("eta > 0"), "{err}");
        let err = one("sigma = 1.0").unwrap_err().to_string();
        assert!(err.contains("stochastic"), "{err}");
        assert!(one("").is_ok());
        assert!(matches!(one("bogus = 1"), Err(Error::Config(_))));
    }

    #[test]
    fn kind_specific_rules() {
        let game = ConfigFile::parse(
            "[[experiment]]\nname = \"g\"\nkind = \"game\"\nhorizon = 5\nwindow = 5\n\
             game = { kind = \"bilinear\" }",
        )
        .unwrap();
        let err = game.validate().unwrap_err().to_string();
        assert!(err.contains("T > w"), "{err}");
        let adv = ConfigFile::parse(
            "[[experiment]]\nname = \"a\"\nkind = \"adversary-vs-tsogd\"\nhorizon = 3\nwindow = 5",
        )
        .unwrap();
        assert!(adv.validate().unwrap_err().to_string().contains("w <= T"));
        let stoch = ConfigFile::parse(
            "[[experiment]]\nname = \"s\"\nkind = \"stochastic\"\nhorizon = 3\nwindow = 1\n\
             body = { kind = \"cube\", dim = 1, half_width = 1.0 }\n\
             sequence = { kind = \"builtin\", name = \"sine_mix\" }",
        )
        .unwrap();
        assert!(stoch.validate().unwrap_err().to_string().contains("unconstrained"));
    }

    #[test]
    fn duplicate_names_and_bad_names_are_rejected() {
        let dup = format!("{SAMPLE}\n[[experiment]]\nname = \"gan\"\nkind = \"game\"\nhorizon = 4\nwindow = 1\ngame = {{ kind = \"bilinear\" }}");
        assert!(ConfigFile::parse(&dup).unwrap().validate().is_err());
        let bad = SAMPLE.replace("\"smooth\"", "\"../up\"");
        assert!(ConfigFile::parse(&bad).unwrap().validate().is_err());
    }
}
