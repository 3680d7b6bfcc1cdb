//! Flat `key = value` experiment configs.
//!
//! ```text
//! # applies to every subcommand
//! seed = 42
//!
//! [clt]
//! n = 200
//! k = 3
//! beta = 10
//! init = warm
//!
//! [coverage]
//! n = 200
//! k = 3
//! beta = sqrt_n, 1.2*sqrt_n
//! ```
//!
//! Keys before the first section are shared; a section only feeds its own
//! subcommand and overrides shared keys. Later assignments win, and overrides
//! given with [`RawConfig::set`] win over everything in the file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::{DirectionSpec, ExperimentConfig, InitSpec, NoiseMode, SweepMode, SweepSpec};
use crate::power::IterationConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Clt,
    Coverage,
    Mixture,
    Sweep,
    Weights,
}

impl Subcommand {
    pub const ALL: [Subcommand; 5] = [
        Subcommand::Clt,
        Subcommand::Coverage,
        Subcommand::Mixture,
        Subcommand::Sweep,
        Subcommand::Weights,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Subcommand::Clt => "clt",
            Subcommand::Coverage => "coverage",
            Subcommand::Mixture => "mixture",
            Subcommand::Sweep => "sweep",
            Subcommand::Weights => "weights",
        }
    }

    fn default_trials(self) -> usize {
        match self {
            Subcommand::Clt => 2000,
            Subcommand::Coverage | Subcommand::Mixture => 1000,
            Subcommand::Sweep => 60,
            Subcommand::Weights => 1,
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown subcommand `{s}`")))
    }
}

const KNOWN_KEYS: &[&str] = &[
    "n",
    "k",
    "r",
    "beta",
    "trials",
    "init",
    "warm_target",
    "warm_mix",
    "init_overlap",
    "a",
    "alpha",
    "seed",
    "t_max",
    "tol",
    "fixed_spikes",
    "noise",
    "memory_budget",
    "grid",
    "mode",
    "mc_samples",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    section: Option<Subcommand>,
    key: String,
    value: String,
    /// 1-based line in the file; 0 for command-line overrides.
    line: usize,
}

/// Parsed but unresolved configuration text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: Vec<Entry>,
}

fn config_err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut section = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(line, content, "unterminated section header"))?
                    .trim();
                section =
                    Some(name.parse::<Subcommand>().map_err(|_| config_err(line, name, "unknown section"))?);
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, content, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(config_err(line, key, "unknown key"));
            }
            entries.push(Entry {
                section,
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Adds a shared assignment that takes precedence over the file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(config_err(0, key, "unknown key"));
        }
        self.entries.push(Entry {
            section: None,
            key: key.to_string(),
            value: value.to_string(),
            line: 0,
        });
        Ok(())
    }

    /// Parses a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| config_err(0, pair, "expected `key=value`"))?;
        self.set(k.trim(), v.trim())
    }

    pub fn resolve(&self, cmd: Subcommand) -> Result<RunConfig> {
        Resolver { raw: self, cmd }.run()
    }
}

/// Settings for the `weights` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightsConfig {
    pub k: usize,
    pub betas: Vec<f64>,
    /// Monte Carlo samples for a cross-check; 0 skips it.
    pub mc_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Experiment(ExperimentConfig),
    Sweep(ExperimentConfig, SweepSpec),
    Weights(WeightsConfig),
}

struct Resolver<'a> {
    raw: &'a RawConfig,
    cmd: Subcommand,
}

fn parse_value<T: FromStr>(e: &Entry) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| config_err(e.line, &e.key, format!("cannot parse `{}`", e.value)))
}

/// `sqrt_n`, `c*sqrt_n` or a plain number.
pub fn parse_beta_expr(expr: &str, n: Option<usize>) -> std::result::Result<f64, String> {
    let expr = expr.trim();
    let (coef, uses_n) = match expr.strip_suffix("sqrt_n") {
        Some(rest) => {
            let rest = rest.trim();
            let coef = match rest {
                "" => 1.0,
                "-" => -1.0,
                _ => rest
                    .strip_suffix('*')
                    .ok_or_else(|| format!("cannot parse `{expr}`"))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| format!("cannot parse `{expr}`"))?,
            };
            (coef, true)
        }
        None => (expr.parse::<f64>().map_err(|_| format!("cannot parse `{expr}`"))?, false),
    };
    if !uses_n {
        return Ok(coef);
    }
    let n = n.ok_or_else(|| format!("`{expr}` needs n"))?;
    Ok(coef * (n as f64).sqrt())
}

impl Resolver<'_> {
    fn entry(&self, key: &str) -> Option<&Entry> {
        self.raw
            .entries
            .iter()
            .rev()
            .find(|e| e.key == key && (e.section.is_none() || e.section == Some(self.cmd)))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.entry(key).map(parse_value).transpose()
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| config_err(0, key, format!("missing required field for `{}`", self.cmd)))
    }

    fn line(&self, key: &str) -> usize {
        self.entry(key).map_or(0, |e| e.line)
    }

    fn list<T>(&self, key: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<Vec<T>>> {
        let Some(e) = self.entry(key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|s| f(s.trim()).map_err(|m| config_err(e.line, key, m)))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn betas(&self, n: Option<usize>) -> Result<Option<Vec<f64>>> {
        self.list("beta", |s| parse_beta_expr(s, n))
    }

    fn order(&self) -> Result<usize> {
        let k: usize = self.require("k")?;
        if k < 2 {
            return Err(config_err(self.line("k"), "k", format!("tensor order must be at least 2, got {k}")));
        }
        Ok(k)
    }

    fn run(&self) -> Result<RunConfig> {
        if self.cmd == Subcommand::Weights {
            return self.weights();
        }
        let n: usize = self.require("n")?;
        if n < 1 {
            return Err(config_err(self.line("n"), "n", "n must be positive"));
        }
        let k = self.order()?;
        let sweep_mode = match self.entry("mode").filter(|_| self.cmd == Subcommand::Sweep) {
            None => SweepMode::Random,
            Some(e) => match e.value.as_str() {
                "random" => SweepMode::Random,
                "warm" => SweepMode::Warm,
                _ => return Err(config_err(e.line, "mode", "expected `random` or `warm`")),
            },
        };
        let betas = match self.betas(Some(n))? {
            Some(b) => b,
            None if self.cmd == Subcommand::Sweep && sweep_mode == SweepMode::Random => vec![1.0],
            None => return Err(config_err(0, "beta", format!("missing required field for `{}`", self.cmd))),
        };
        if let Some(b) = betas.iter().find(|b| **b == 0.0 || !b.is_finite()) {
            return Err(config_err(self.line("beta"), "beta", format!("strength must be finite and non-zero, got {b}")));
        }
        let r: usize = self.get("r")?.unwrap_or(betas.len());
        if r > n {
            return Err(config_err(self.line("r"), "r", format!("r = {r} exceeds n = {n}")));
        }
        if r != betas.len() {
            return Err(config_err(
                self.line("beta"),
                "beta",
                format!("{} strengths given for r = {r}", betas.len()),
            ));
        }
        let seed: u64 = self.get("seed")?.unwrap_or(0);
        let trials: usize = self.get("trials")?.unwrap_or(self.cmd.default_trials());

        let grid = if self.cmd == Subcommand::Sweep {
            let g = self
                .list("grid", |s| s.parse::<f64>().map_err(|_| format!("cannot parse `{s}`")))?
                .ok_or_else(|| config_err(0, "grid", "missing required field for `sweep`"))?;
            if g.is_empty() {
                return Err(config_err(self.line("grid"), "grid", "empty grid"));
            }
            Some(g)
        } else {
            None
        };

        let mut config = ExperimentConfig::new(n, k, betas.clone(), trials, seed)
            .map_err(|e| config_err(self.line("beta"), "beta", e.to_string()))?;
        if let (Some(g), SweepMode::Random) = (&grid, sweep_mode) {
            // the default budget follows the weakest grid strength
            let scale = (n as f64).powf((k as f64 - 2.0) / 2.0);
            let weakest = g.iter().fold(f64::INFINITY, |m, x| m.min((x * scale).abs()));
            if weakest > 0.0 && weakest.is_finite() {
                config.iteration = IterationConfig::default_for(weakest, n, k, false)?;
            }
        }
        if let Some(t) = self.get("t_max")? {
            config.iteration.t_max = t;
        }
        if let Some(t) = self.get("tol")? {
            config.iteration.tol = t;
        }
        if let Some(a) = self.get("alpha")? {
            config.alpha = a;
        }
        if let Some(f) = self.get("fixed_spikes")? {
            config.fixed_spikes = f;
        }
        if let Some(b) = self.get("memory_budget")? {
            config.memory_budget = b;
        }
        if let Some(e) = self.entry("noise") {
            config.noise = match e.value.as_str() {
                "auto" => NoiseMode::Auto,
                "dense" => NoiseMode::Dense,
                "streaming" => NoiseMode::Streaming,
                "zero" => NoiseMode::Zero,
                _ => return Err(config_err(e.line, "noise", "expected auto, dense, streaming or zero")),
            };
        }
        config.a_spec = self.direction(n)?;
        config.init = self.init()?;

        config.validate().map_err(|e| {
            let key = match &e {
                Error::InvalidConfig(m) if m.contains("alpha") => "alpha",
                Error::InvalidConfig(m) if m.contains("trials") => "trials",
                Error::InvalidConfig(m) if m.contains("warm") || m.contains("overlap") => "init",
                _ => "config",
            };
            config_err(self.line(key), key, e.to_string())
        })?;

        Ok(match grid {
            Some(grid) => RunConfig::Sweep(config, SweepSpec { grid, mode: sweep_mode }),
            None => RunConfig::Experiment(config),
        })
    }

    fn init(&self) -> Result<InitSpec> {
        let target: usize = self.get("warm_target")?.unwrap_or(0);
        match self.entry("init").map(|e| (e.value.as_str(), e.line)) {
            None | Some(("random", _)) => Ok(InitSpec::Random),
            Some(("warm", _)) => Ok(InitSpec::Warm {
                target,
                mix: self.get("warm_mix")?.unwrap_or(0.5),
            }),
            Some(("overlap", _)) => Ok(InitSpec::Overlap {
                target,
                overlap: self.require("init_overlap")?,
            }),
            Some((_, line)) => Err(config_err(line, "init", "expected random, warm or overlap")),
        }
    }

    fn direction(&self, n: usize) -> Result<DirectionSpec> {
        let Some(e) = self.entry("a") else { return Ok(DirectionSpec::Paper) };
        if e.value == "paper" {
            return Ok(DirectionSpec::Paper);
        }
        let pairs = self
            .list("a", |s| {
                let (i, w) = s.split_once(':').ok_or_else(|| format!("expected `index:weight`, got `{s}`"))?;
                let i: usize = i.trim().parse().map_err(|_| format!("bad index `{i}`"))?;
                let w: f64 = w.trim().parse().map_err(|_| format!("bad weight `{w}`"))?;
                Ok((i, w))
            })?
            .unwrap_or_default();
        let spec = DirectionSpec::Explicit(pairs);
        spec.resolve(n).map_err(|err| config_err(e.line, "a", err.to_string()))?;
        Ok(spec)
    }

    fn weights(&self) -> Result<RunConfig> {
        let k = self.order()?;
        let n: Option<usize> = self.get("n")?;
        let betas = match self.betas(n)? {
            Some(b) if !b.is_empty() => b,
            _ => return Err(config_err(0, "beta", "missing required field for `weights`")),
        };
        Ok(RunConfig::Weights(WeightsConfig {
            k,
            betas,
            mc_samples: self.get("mc_samples")?.unwrap_or(0),
            seed: self.get("seed")?.unwrap_or(0),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn experiment(text: &str, cmd: Subcommand) -> ExperimentConfig {
        match RawConfig::parse(text).unwrap().resolve(cmd).unwrap() {
            RunConfig::Experiment(c) => c,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimal_rank_one_fills_defaults() {
        let c = experiment("n = 50\nk = 3\nbeta = 8\n", Subcommand::Clt);
        assert_eq!((c.n, c.k, c.r), (50, 3, 1));
        assert_eq!(c.betas, vec![8.0]);
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c.iteration.tol, 1e-10);
        assert_eq!(c.trials, 2000);
        assert_eq!(c.init, InitSpec::Random);
        assert_eq!(c.a_spec, DirectionSpec::Paper);
    }

    #[test]
    fn beta_expressions() {
        assert!((parse_beta_expr("1.2*sqrt_n", Some(600)).unwrap() - 29.393_876_913).abs() < 1e-8);
        assert_eq!(parse_beta_expr("sqrt_n", Some(400)).unwrap(), 20.0);
        assert_eq!(parse_beta_expr("-sqrt_n", Some(400)).unwrap(), -20.0);
        assert_eq!(parse_beta_expr("2.5", None).unwrap(), 2.5);
        assert!(parse_beta_expr("sqrt_n", None).is_err());
        assert!(parse_beta_expr("x*sqrt_n", Some(4)).is_err());
        let c = experiment("n = 600\nk = 3\nbeta = sqrt_n, 1.2*sqrt_n\n", Subcommand::Coverage);
        assert_eq!(c.r, 2);
        assert!((c.betas[1] - 29.393_876_913).abs() < 1e-8);
    }

    fn err_key(text: &str, cmd: Subcommand) -> (usize, String) {
        match RawConfig::parse(text).and_then(|r| r.resolve(cmd)) {
            Err(Error::Config { line, key, .. }) => (line, key),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_key_and_line() {
        assert_eq!(err_key("n = 10\nk = 1\nbeta = 3\n", Subcommand::Clt), (2, "k".into()));
        assert_eq!(err_key("n = 10\nk = 3\nbogus = 1\n", Subcommand::Clt), (3, "bogus".into()));
        assert_eq!(err_key("n = 2\nk = 3\nbeta = 1,2,3\nr = 3\n", Subcommand::Clt), (4, "r".into()));
        assert_eq!(err_key("k = 3\nbeta = 3\n", Subcommand::Clt), (0, "n".into()));
        assert_eq!(err_key("n = 5\nk = 3\n", Subcommand::Clt), (0, "beta".into()));
        assert_eq!(err_key("n = 5\nk = 3\nbeta = 2\nalpha = 2\n", Subcommand::Clt), (4, "alpha".into()));
        assert_eq!(err_key("[nope]\n", Subcommand::Clt), (1, "nope".into()));
        assert_eq!(err_key("n = 5\nk = 3\nbeta = 2\n", Subcommand::Sweep), (0, "grid".into()));
    }

    #[test]
    fn sections_and_overrides() {
        let text = "seed = 1\nn = 20\nk = 3\nbeta = 4\n[clt]\nseed = 2\ninit = warm\n[coverage]\nalpha = 0.1\n";
        let c = experiment(text, Subcommand::Clt);
        assert_eq!(c.seed, 2);
        assert_eq!(c.init, InitSpec::Warm { target: 0, mix: 0.5 });
        assert_eq!(c.alpha, 0.05);
        let c = experiment(text, Subcommand::Coverage);
        assert_eq!((c.seed, c.alpha), (1, 0.1));

        let mut raw = RawConfig::parse(text).unwrap();
        raw.set_pair("seed=9").unwrap();
        raw.set("noise", "zero").unwrap();
        let RunConfig::Experiment(c) = raw.resolve(Subcommand::Clt).unwrap() else { panic!() };
        assert_eq!(c.seed, 9);
        assert_eq!(c.noise, NoiseMode::Zero);
        assert!(raw.set("nonsense", "1").is_err());
    }

    #[test]
    fn sweep_and_weights() {
        let raw = RawConfig::parse("n = 40\nk = 3\ngrid = 0.5, 1, 2\ntrials = 5\n").unwrap();
        let RunConfig::Sweep(c, s) = raw.resolve(Subcommand::Sweep).unwrap() else { panic!() };
        assert_eq!(s.grid, vec![0.5, 1.0, 2.0]);
        assert_eq!(s.mode, SweepMode::Random);
        assert_eq!(c.trials, 5);

        let raw = RawConfig::parse("k = 3\nbeta = 1, 1.2\n").unwrap();
        let RunConfig::Weights(w) = raw.resolve(Subcommand::Weights).unwrap() else { panic!() };
        assert_eq!(w.betas, vec![1.0, 1.2]);
        assert_eq!(w.mc_samples, 0);
    }

    #[test]
    fn explicit_direction() {
        let c = experiment("n = 10\nk = 3\nbeta = 4\na = 1:1, 10:1\n", Subcommand::Clt);
        assert_eq!(c.a_spec, DirectionSpec::Explicit(vec![(1, 1.0), (10, 1.0)]));
        assert_eq!(err_key("n = 10\nk = 3\nbeta = 4\na = 11:1\n", Subcommand::Clt), (4, "a".into()));
    }
}
