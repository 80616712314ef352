//! Campaign configuration: an INI-style key/value file with `[scenario]`,
//! `[filter]`, `[benchmark]` and `[campaign]` sections.
//!
//! ```text
//! [scenario]
//! antennas = 64
//! snr_db = 20
//!
//! [filter]
//! dims = 4,4,4
//! rank = 3
//!
//! [campaign]
//! sweep = snr_db
//! values = 0,10,20,30
//! trials = 100
//! seed = 1
//! ```
//!
//! Every key can also be set as `section.key=value`, which is how the CLI
//! applies overrides on top of a file.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::equalize::{Init, Loading, LrTmmseConfig};
use crate::error::{Error, Result};
use crate::metrics::SolveTail;
use crate::sysmodel::ScenarioParams;

/// Quantity varied across the points of a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    SnrDb,
    FrameLen,
    Rank,
    Order,
    Antennas,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::SnrDb => "snr_db",
            SweepVar::FrameLen => "K",
            SweepVar::Rank => "R",
            SweepVar::Order => "D",
            SweepVar::Antennas => "N",
        }
    }
}

impl FromStr for SweepVar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "snr_db" | "snr" => Ok(SweepVar::SnrDb),
            "K" | "k" | "frame_len" => Ok(SweepVar::FrameLen),
            "R" | "r" | "rank" => Ok(SweepVar::Rank),
            "D" | "d" | "order" => Ok(SweepVar::Order),
            "N" | "n" | "antennas" => Ok(SweepVar::Antennas),
            other => Err(Error::Config(format!(
                "unknown sweep variable '{other}' (expected snr_db, K, R, D or N)"
            ))),
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EqualizerId {
    MmseTheoretical,
    MmseSample,
    LrTmmse,
}

impl EqualizerId {
    pub const ALL: [EqualizerId; 3] = [
        EqualizerId::MmseTheoretical,
        EqualizerId::MmseSample,
        EqualizerId::LrTmmse,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EqualizerId::MmseTheoretical => "mmse-theoretical",
            EqualizerId::MmseSample => "mmse-sample",
            EqualizerId::LrTmmse => "lr-tmmse",
        }
    }
}

impl FromStr for EqualizerId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EqualizerId::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown equalizer '{s}'")))
    }
}

/// How the target lag is chosen in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaRule {
    /// From the exact covariances of the drawn channel.
    #[default]
    Genie,
    /// Lag whose sample MMSE filter attains the lowest training MSE.
    Training,
}

/// Everything needed to run one trial at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub scenario: ScenarioParams,
    pub filter: LrTmmseConfig,
    /// Filter order used when `dims` has to be derived from `N`.
    pub order: usize,
    /// Whether `filter.dims` was set explicitly rather than derived.
    pub explicit_dims: bool,
    pub target_user: usize,
    pub sample_loading: Loading,
    pub delta_rule: DeltaRule,
    pub solve_tail: SolveTail,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioParams::default(),
            filter: LrTmmseConfig::default(),
            order: 3,
            explicit_dims: false,
            target_user: 0,
            sample_loading: Loading::default(),
            delta_rule: DeltaRule::Genie,
            solve_tail: SolveTail::Linear,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.filter.validate(self.scenario.antennas)?;
        self.sample_loading.validate()?;
        if self.target_user >= self.scenario.users {
            return Err(Error::Config(format!(
                "target user {} but only {} users",
                self.target_user, self.scenario.users
            )));
        }
        Ok(())
    }

    /// Re-derives `filter.dims` from `N` and `order` unless they were given.
    pub fn resolve_dims(&mut self) -> Result<()> {
        if !self.explicit_dims {
            self.filter.dims = balanced_factorization(self.scenario.antennas, self.order)?;
        }
        Ok(())
    }
}

/// Splits `n` into `order` factors, each at least 2 and as equal as the prime
/// factorization allows, largest first.
pub fn balanced_factorization(n: usize, order: usize) -> Result<Vec<usize>> {
    if order == 0 {
        return Err(Error::Config("filter order must be at least 1".into()));
    }
    let mut primes = Vec::new();
    let mut rest = n;
    let mut p = 2;
    while p * p <= rest {
        while rest.is_multiple_of(p) {
            primes.push(p);
            rest /= p;
        }
        p += 1;
    }
    if rest > 1 {
        primes.push(rest);
    }
    if order == 1 && n >= 1 {
        return Ok(vec![n]);
    }
    if primes.len() < order {
        return Err(Error::Config(format!(
            "N = {n} cannot be factored into {order} dimensions of size >= 2"
        )));
    }
    let mut bins = vec![1usize; order];
    for &p in primes.iter().rev() {
        let smallest = (0..order).min_by_key(|&i| (bins[i], i)).expect("order > 0");
        bins[smallest] *= p;
    }
    bins.sort_unstable_by(|a, b| b.cmp(a));
    Ok(bins)
}

/// A sweep over one variable with a fixed number of seeded trials per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub sweep: SweepVar,
    pub values: Vec<f64>,
    pub trials: usize,
    pub base: TrialConfig,
    pub master_seed: u64,
    pub equalizers: Vec<EqualizerId>,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl Default for Campaign {
    /// Desk-scale operating point: N = 64 as 4x4x4, K = 600, 100 trials.
    fn default() -> Self {
        Self {
            sweep: SweepVar::SnrDb,
            values: vec![0.0, 10.0, 20.0, 30.0],
            trials: 100,
            base: TrialConfig {
                filter: LrTmmseConfig {
                    dims: vec![4, 4, 4],
                    ..Default::default()
                },
                explicit_dims: true,
                ..Default::default()
            },
            master_seed: 1,
            equalizers: EqualizerId::ALL.to_vec(),
            out: None,
            plot: None,
        }
    }
}

impl Campaign {
    pub fn from_ini(text: &str) -> Result<Self> {
        let mut campaign = Campaign::default();
        for (key, value) in parse_ini(text)? {
            campaign.set(&key, &value)?;
        }
        Ok(campaign)
    }

    /// Applies one `section.key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let base = &mut self.base;
        match key.trim() {
            "scenario.antennas" => base.scenario.antennas = parse(key, v)?,
            "scenario.users" => base.scenario.users = parse(key, v)?,
            "scenario.taps" => base.scenario.taps = parse(key, v)?,
            "scenario.paths" => base.scenario.paths = parse(key, v)?,
            "scenario.frame_len" => base.scenario.frame_len = parse(key, v)?,
            "scenario.sigma_s2" => base.scenario.sigma_s2 = parse(key, v)?,
            "scenario.snr_db" => base.scenario.snr_db = parse(key, v)?,
            "scenario.max_delay" => {
                base.scenario.max_delay = if v == "auto" {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "scenario.normalize_gains" => base.scenario.normalize_gains = parse(key, v)?,
            "scenario.target_user" => base.target_user = parse(key, v)?,
            "filter.dims" => {
                if v == "auto" {
                    base.explicit_dims = false;
                } else {
                    base.filter.dims = parse_list(key, v)?;
                    base.order = base.filter.dims.len();
                    base.explicit_dims = true;
                }
            }
            "filter.order" => {
                base.order = parse(key, v)?;
                base.explicit_dims = false;
            }
            "filter.rank" => base.filter.rank = parse(key, v)?,
            "filter.epsilon" => base.filter.epsilon = parse(key, v)?,
            "filter.max_iters" => base.filter.max_iters = parse(key, v)?,
            "filter.loading" => base.filter.loading = parse_loading(key, v)?,
            "filter.init" => {
                base.filter.init = match v {
                    "canonical" => Init::Canonical,
                    "canonical-perturbed" => Init::default(),
                    "random" => Init::Random,
                    other => {
                        return Err(Error::Config(format!(
                            "{key}: unknown initialization '{other}'"
                        )))
                    }
                }
            }
            "filter.perturbation" => {
                base.filter.init = Init::CanonicalPerturbed {
                    magnitude: parse(key, v)?,
                }
            }
            "filter.solve_tail" => {
                base.solve_tail = match v {
                    "linear" => SolveTail::Linear,
                    "quadratic" => SolveTail::Quadratic,
                    other => {
                        return Err(Error::Config(format!(
                            "{key}: expected linear or quadratic, got '{other}'"
                        )))
                    }
                }
            }
            "benchmark.loading" => base.sample_loading = parse_loading(key, v)?,
            "campaign.sweep" => self.sweep = v.parse()?,
            "campaign.values" => self.values = parse_list(key, v)?,
            "campaign.trials" => self.trials = parse(key, v)?,
            "campaign.seed" => self.master_seed = parse(key, v)?,
            "campaign.equalizers" => {
                self.equalizers = v.split(',').map(str::parse).collect::<Result<Vec<_>>>()?;
            }
            "campaign.delta_rule" => {
                base.delta_rule = match v {
                    "genie" => DeltaRule::Genie,
                    "training" => DeltaRule::Training,
                    other => {
                        return Err(Error::Config(format!(
                            "{key}: expected genie or training, got '{other}'"
                        )))
                    }
                }
            }
            "campaign.out" => self.out = Some(PathBuf::from(v)),
            "campaign.plot" => self.plot = Some(PathBuf::from(v)),
            other => {
                return Err(Error::Config(format!(
                    "unknown configuration key '{other}'"
                )))
            }
        }
        Ok(())
    }

    /// Parses `VAR=v1,v2,...`.
    pub fn set_sweep(&mut self, text: &str) -> Result<()> {
        let (var, values) = text
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep '{text}' is not VAR=v1,v2,...")))?;
        self.sweep = var.parse()?;
        self.values = parse_list("sweep", values)?;
        Ok(())
    }

    /// Trial configuration at one sweep value.
    pub fn point(&self, value: f64) -> Result<TrialConfig> {
        let mut cfg = self.base.clone();
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v < 1e12 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!(
                    "sweep value {v} for {} must be a positive integer",
                    self.sweep
                )))
            }
        };
        match self.sweep {
            SweepVar::SnrDb => cfg.scenario.snr_db = value,
            SweepVar::FrameLen => cfg.scenario.frame_len = as_count(value)?,
            SweepVar::Rank => cfg.filter.rank = as_count(value)?,
            SweepVar::Order => {
                cfg.order = as_count(value)?;
                cfg.explicit_dims = false;
            }
            SweepVar::Antennas => {
                cfg.scenario.antennas = as_count(value)?;
                if cfg.explicit_dims {
                    cfg.order = cfg.filter.dims.len();
                    cfg.explicit_dims = false;
                }
            }
        }
        cfg.resolve_dims()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every sweep point before any trial runs.
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep has no values".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.equalizers.is_empty() {
            return Err(Error::Config("no equalizers selected".into()));
        }
        for &v in &self.values {
            self.point(v)?;
        }
        Ok(())
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse '{v}': {e}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// `1e-8` or `relative:1e-8` is trace-relative; `absolute:0.01` is a fixed lambda.
fn parse_loading(key: &str, v: &str) -> Result<Loading> {
    let loading = match v.split_once(':') {
        Some(("absolute", x)) => Loading::Absolute(parse(key, x)?),
        Some(("relative", x)) => Loading::Relative(parse(key, x)?),
        Some((mode, _)) => {
            return Err(Error::Config(format!(
                "{key}: unknown loading mode '{mode}'"
            )))
        }
        None => Loading::Relative(parse(key, v)?),
    };
    loading.validate()?;
    Ok(loading)
}

/// Flattens an INI document into `(section.key, value)` pairs in file order.
/// `#` and `;` start comments.
pub fn parse_ini(text: &str) -> Result<Vec<(String, String)>> {
    let mut section = String::new();
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| {
                Error::Config(format!("line {}: unterminated section header", lineno + 1))
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        out.push((full, value.trim().to_string()));
    }
    Ok(out)
}
