//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! data_dir = data
//! symbols = AAA, BBB
//! mode = portfolio
//! sentiment_enabled = true
//! env.window = 5
//! ppo.total_timesteps = 20000
//! eval.episodes = 100
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sentio::evalkit::{DEFAULT_EPISODES, DEFAULT_EPISODE_STEPS};
use sentio::ppo::OptimizerKind;
use sentio::{EnvConfig, PpoConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Single,
    Portfolio,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Mode::Single),
            "portfolio" => Ok(Mode::Portfolio),
            other => Err(format!("unknown mode `{other}` (expected single or portfolio)")),
        }
    }
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Portfolio => "portfolio",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub episodes: usize,
    pub steps: usize,
    /// Act with the policy mean instead of sampling.
    pub deterministic: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            episodes: DEFAULT_EPISODES,
            steps: DEFAULT_EPISODE_STEPS,
            deterministic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub symbols: Vec<String>,
    pub mode: Mode,
    pub sentiment_enabled: bool,
    /// `Date,Symbol,Label` file; days without a label are neutral.
    pub sentiment_file: Option<PathBuf>,
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub eval: EvalSettings,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            symbols: Vec::new(),
            mode: Mode::Single,
            sentiment_enabled: false,
            sentiment_file: None,
            env: EnvConfig::default(),
            ppo: PpoConfig::default(),
            eval: EvalSettings::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{raw}`")))
}

fn list(raw: &str) -> Vec<&str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, raw) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), raw.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: `{key}` set twice", i + 1)));
            }
        }

        let mut cfg = RunConfig::default();
        cfg.data_dir = base_dir.join(&cfg.data_dir);
        cfg.out_dir = base_dir.join(&cfg.out_dir);
        if let Some(raw) = entries.get("mode") {
            cfg.mode = raw.parse().map_err(CliError::Config)?;
        }
        if cfg.mode == Mode::Portfolio {
            cfg.env = EnvConfig::portfolio();
        }
        let path = |raw: &str| base_dir.join(raw);

        for (key, raw) in &entries {
            let raw = raw.as_str();
            match key.as_str() {
                "mode" => {}
                "data_dir" => cfg.data_dir = path(raw),
                "symbols" => cfg.symbols = list(raw).into_iter().map(String::from).collect(),
                "sentiment_enabled" => cfg.sentiment_enabled = value(key, raw)?,
                "sentiment_file" => cfg.sentiment_file = (!raw.is_empty()).then(|| path(raw)),
                "out_dir" => cfg.out_dir = path(raw),
                "seed" => cfg.seed = value(key, raw)?,
                "env.initial_balance" => cfg.env.initial_balance = value(key, raw)?,
                "env.window" => cfg.env.window = value(key, raw)?,
                "env.max_steps" => cfg.env.max_steps = value(key, raw)?,
                "env.tx_cost_rate" => cfg.env.tx_cost_rate = value(key, raw)?,
                "env.stability_coef" => cfg.env.stability_coef = value(key, raw)?,
                "env.sentiment_coef" => cfg.env.sentiment_coef = value(key, raw)?,
                "env.vol_damping" => cfg.env.vol_damping = value(key, raw)?,
                "env.net_worth_floor_frac" => cfg.env.net_worth_floor_frac = value(key, raw)?,
                "ppo.gamma" => cfg.ppo.gamma = value(key, raw)?,
                "ppo.gae_lambda" => cfg.ppo.gae_lambda = value(key, raw)?,
                "ppo.clip_eps" => cfg.ppo.clip_eps = value(key, raw)?,
                "ppo.learning_rate" => cfg.ppo.learning_rate = value(key, raw)?,
                "ppo.rollout_horizon" => cfg.ppo.rollout_horizon = value(key, raw)?,
                "ppo.update_epochs" => cfg.ppo.update_epochs = value(key, raw)?,
                "ppo.minibatch_size" => cfg.ppo.minibatch_size = value(key, raw)?,
                "ppo.value_coef" => cfg.ppo.value_coef = value(key, raw)?,
                "ppo.entropy_coef" => cfg.ppo.entropy_coef = value(key, raw)?,
                "ppo.grad_clip_norm" => cfg.ppo.grad_clip_norm = value(key, raw)?,
                "ppo.total_timesteps" => cfg.ppo.total_timesteps = value(key, raw)?,
                "ppo.hidden" => {
                    cfg.ppo.hidden = list(raw)
                        .into_iter()
                        .map(|s| value(key, s))
                        .collect::<Result<_, _>>()?
                }
                "ppo.init_log_std" => cfg.ppo.init_log_std = value(key, raw)?,
                "ppo.optimizer" => cfg.ppo.optimizer = raw.parse().map_err(CliError::Config)?,
                "ppo.num_envs" => cfg.ppo.num_envs = value(key, raw)?,
                "eval.episodes" => cfg.eval.episodes = value(key, raw)?,
                "eval.steps" => cfg.eval.steps = value(key, raw)?,
                "eval.deterministic" => cfg.eval.deterministic = value(key, raw)?,
                other => return Err(CliError::Config(format!("unknown key `{other}`"))),
            }
        }
        cfg.env.sentiment_enabled = cfg.sentiment_enabled;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let base = std::fs::canonicalize(base).map_err(CliError::io(base))?;
        Self::parse(&text, &base)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.env.validate()?;
        self.ppo.validate()?;
        if self.mode == Mode::Single && self.symbols.len() > 1 {
            return Err(CliError::Config(format!(
                "single mode takes exactly one symbol, got {}",
                self.symbols.len()
            )));
        }
        Ok(())
    }

    /// Symbols are only needed by commands that read market data.
    pub fn require_symbols(&self) -> Result<(), CliError> {
        if self.symbols.is_empty() {
            return Err(CliError::Config("`symbols` must list at least one symbol".into()));
        }
        Ok(())
    }

    pub fn env_config(&self, seed: u64) -> EnvConfig {
        EnvConfig {
            sentiment_enabled: self.sentiment_enabled,
            seed,
            ..self.env.clone()
        }
    }

    pub fn ppo_config(&self) -> PpoConfig {
        PpoConfig {
            seed: self.seed,
            ..self.ppo.clone()
        }
    }

    /// Every setting after defaults, in a form [`RunConfig::parse`] accepts.
    pub fn render(&self) -> String {
        let e = &self.env;
        let p = &self.ppo;
        let optimizer = match p.optimizer {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Momentum { .. } => "momentum",
            OptimizerKind::Adam { .. } => "adam",
        };
        let hidden: Vec<String> = p.hidden.iter().map(usize::to_string).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("data_dir", self.data_dir.display().to_string());
        kv("symbols", self.symbols.join(","));
        kv("mode", self.mode.name().into());
        kv("sentiment_enabled", self.sentiment_enabled.to_string());
        kv(
            "sentiment_file",
            self.sentiment_file
                .as_ref()
                .map_or(String::new(), |p| p.display().to_string()),
        );
        kv("out_dir", self.out_dir.display().to_string());
        kv("seed", self.seed.to_string());
        kv("env.initial_balance", e.initial_balance.to_string());
        kv("env.window", e.window.to_string());
        kv("env.max_steps", e.max_steps.to_string());
        kv("env.tx_cost_rate", e.tx_cost_rate.to_string());
        kv("env.stability_coef", e.stability_coef.to_string());
        kv("env.sentiment_coef", e.sentiment_coef.to_string());
        kv("env.vol_damping", e.vol_damping.to_string());
        kv("env.net_worth_floor_frac", e.net_worth_floor_frac.to_string());
        kv("ppo.gamma", p.gamma.to_string());
        kv("ppo.gae_lambda", p.gae_lambda.to_string());
        kv("ppo.clip_eps", p.clip_eps.to_string());
        kv("ppo.learning_rate", p.learning_rate.to_string());
        kv("ppo.rollout_horizon", p.rollout_horizon.to_string());
        kv("ppo.update_epochs", p.update_epochs.to_string());
        kv("ppo.minibatch_size", p.minibatch_size.to_string());
        kv("ppo.value_coef", p.value_coef.to_string());
        kv("ppo.entropy_coef", p.entropy_coef.to_string());
        kv("ppo.grad_clip_norm", p.grad_clip_norm.to_string());
        kv("ppo.total_timesteps", p.total_timesteps.to_string());
        kv("ppo.hidden", hidden.join(","));
        kv("ppo.init_log_std", p.init_log_std.to_string());
        kv("ppo.optimizer", optimizer.into());
        kv("ppo.num_envs", p.num_envs.to_string());
        kv("eval.episodes", self.eval.episodes.to_string());
        kv("eval.steps", self.eval.steps.to_string());
        kv("eval.deterministic", self.eval.deterministic.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_protocol() {
        let cfg = RunConfig::parse("symbols = AAA\n", Path::new("/base")).unwrap();
        assert_eq!(cfg.eval.episodes, 100);
        assert_eq!(cfg.eval.steps, 2000);
        assert_eq!(cfg.data_dir, PathBuf::from("/base/data"));
        assert_eq!(cfg.env.net_worth_floor_frac, 0.0);
    }

    #[test]
    fn portfolio_mode_sets_floor() {
        let cfg = RunConfig::parse("mode = portfolio\nsymbols = A,B\n", Path::new("/")).unwrap();
        assert_eq!(cfg.env.net_worth_floor_frac, 0.1);
        let cfg = RunConfig::parse("mode = portfolio\nenv.net_worth_floor_frac = 0.2\n", Path::new("/")).unwrap();
        assert_eq!(cfg.env.net_worth_floor_frac, 0.2);
    }

    #[test]
    fn render_round_trips() {
        let text = "symbols = AAA\nppo.hidden = 16, 8\nppo.learning_rate = 0.0003\nppo.optimizer = adam\n\
                    sentiment_enabled = true\nsentiment_file = s.csv\nseed = 9\n";
        let cfg = RunConfig::parse(text, Path::new("/x")).unwrap();
        let again = RunConfig::parse(&cfg.render(), Path::new("/elsewhere")).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.render(), cfg.render());
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "bogus = 1",
            "seed = x",
            "seed = 1\nseed = 2",
            "no equals sign",
            "mode = single\nsymbols = A,B",
            "mode = both",
            "ppo.gamma = 2",
        ] {
            assert!(
                matches!(RunConfig::parse(text, Path::new("/")), Err(CliError::Config(_))),
                "{text}"
            );
        }
    }
}
