//! Run configuration: built-in defaults, flat `key=value` files and flag
//! overrides, in increasing order of precedence.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use langevin_kl::accountant::KlConvention;
use langevin_kl::data::{NeighborNotion, NormalizeMode, DEFAULT_REPLACE_CAP};
use langevin_kl::{InitScheme, NetArch};

use crate::error::CliError;

/// Every key a configuration may carry, in header order.
pub const KEYS: &[&str] = &[
    "data",
    "d",
    "width",
    "depth",
    "outputs",
    "scheme",
    "model",
    "eta",
    "steps",
    "sigma2",
    "trajectory_sigma2",
    "runs",
    "seed",
    "neighbor",
    "pool",
    "cap",
    "record_every",
    "kl_constant",
    "labels",
    "label_column",
    "normalize",
    "samples",
    "input_norm_sq",
    "time",
    "c",
    "beta_smooth",
    "rank_mt",
    "e_delta0",
    "e_grad0",
    "epsilon",
    "lazy_r",
    "ridge",
    "metric",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bound,
    Estimate,
    McVerify,
    Lazy,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bound => "bound",
            Command::Estimate => "estimate",
            Command::McVerify => "mc-verify",
            Command::Lazy => "lazy",
            Command::Sweep => "sweep",
        }
    }

    /// Keys that influence this command and are written to its headers.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Command::Bound => &[
                "data",
                "d",
                "width",
                "depth",
                "outputs",
                "scheme",
                "eta",
                "steps",
                "sigma2",
                "labels",
                "label_column",
                "normalize",
                "time",
                "c",
                "beta_smooth",
                "rank_mt",
                "e_delta0",
                "e_grad0",
                "epsilon",
                "lazy_r",
                "kl_constant",
                "seed",
                "out",
            ],
            Command::Estimate => &[
                "data",
                "d",
                "width",
                "depth",
                "outputs",
                "scheme",
                "model",
                "eta",
                "steps",
                "sigma2",
                "trajectory_sigma2",
                "runs",
                "seed",
                "neighbor",
                "pool",
                "cap",
                "record_every",
                "kl_constant",
                "labels",
                "label_column",
                "normalize",
                "out",
            ],
            Command::McVerify => &[
                "data",
                "d",
                "width",
                "depth",
                "outputs",
                "scheme",
                "samples",
                "input_norm_sq",
                "seed",
                "labels",
                "label_column",
                "normalize",
                "out",
            ],
            Command::Lazy => &[
                "data",
                "d",
                "width",
                "depth",
                "outputs",
                "scheme",
                "ridge",
                "eta",
                "steps",
                "sigma2",
                "seed",
                "labels",
                "label_column",
                "normalize",
                "out",
            ],
            Command::Sweep => &[
                "data",
                "d",
                "width",
                "depth",
                "outputs",
                "scheme",
                "model",
                "metric",
                "eta",
                "steps",
                "sigma2",
                "trajectory_sigma2",
                "runs",
                "seed",
                "neighbor",
                "pool",
                "cap",
                "record_every",
                "kl_constant",
                "labels",
                "label_column",
                "normalize",
                "out",
            ],
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        [
            Command::Bound,
            Command::Estimate,
            Command::McVerify,
            Command::Lazy,
            Command::Sweep,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| CliError::Config(format!("unknown command '{s}'")))
    }
}

/// Explicit list of schemes, or all four named ones.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeChoice {
    List(Vec<InitScheme>),
    All,
}

impl SchemeChoice {
    pub fn schemes(&self) -> Vec<InitScheme> {
        match self {
            SchemeChoice::List(list) => list.clone(),
            SchemeChoice::All => InitScheme::NAMED.to_vec(),
        }
    }

    pub fn single(&self, command: Command) -> Result<&InitScheme, CliError> {
        match self {
            SchemeChoice::List(list) if list.len() == 1 => Ok(&list[0]),
            _ => Err(CliError::Config(format!(
                "{} needs a single scheme, got '{self}'",
                command.name()
            ))),
        }
    }
}

impl fmt::Display for SchemeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeChoice::List(list) => {
                let names: Vec<String> = list.iter().map(InitScheme::to_string).collect();
                f.write_str(&names.join(","))
            }
            SchemeChoice::All => f.write_str("all"),
        }
    }
}

impl FromStr for SchemeChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(SchemeChoice::All);
        }
        let list = s.split(',').map(str::parse).collect::<Result<Vec<InitScheme>, _>>()?;
        Ok(SchemeChoice::List(list))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// `n` synthetic points on the sphere of radius `√d`.
    Synth(usize),
    Csv(PathBuf),
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::Synth(n) => write!(f, "synth:{n}"),
            DataSource::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

impl FromStr for DataSource {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        if let Some(n) = s.strip_prefix("synth:") {
            let n = n
                .parse()
                .map_err(|_| CliError::Config(format!("bad sample count in data source '{s}'")))?;
            return Ok(DataSource::Synth(n));
        }
        if let Some(p) = s.strip_prefix("csv:") {
            if p.is_empty() {
                return Err(CliError::Config("csv data source needs a path".into()));
            }
            return Ok(DataSource::Csv(PathBuf::from(p)));
        }
        Err(CliError::Config(format!(
            "data source must be synth:<n> or csv:<path>, got '{s}'"
        )))
    }
}

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => $text),+ })
            }
        }

        impl FromStr for $name {
            type Err = CliError;

            fn from_str(s: &str) -> Result<Self, CliError> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(CliError::Config(format!(
                        concat!("expected one of ", $($text, " "),+, "got '{}'"), s
                    ))),
                }
            }
        }
    };
}

keyword_enum!(SynthLabels { Sign => "sign", Teacher => "teacher", Class => "class" });
keyword_enum!(ModelKind { Dnn => "dnn", Linearized => "linearized" });
keyword_enum!(SweepMetric { Analytic => "analytic", Empirical => "empirical", Both => "both" });

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub data: DataSource,
    /// Unset only for CSV data until the file has been read.
    pub d: Option<usize>,
    /// Hidden widths: one value for a uniform net, or one per hidden layer.
    /// A grid of uniform widths for `sweep`.
    pub width: Vec<usize>,
    /// Number of weight matrices; a grid for `sweep`.
    pub depth: Vec<usize>,
    pub outputs: usize,
    pub scheme: SchemeChoice,
    pub model: ModelKind,
    pub eta: f64,
    pub steps: usize,
    pub sigma2: f64,
    pub trajectory_sigma2: Option<f64>,
    pub runs: usize,
    pub seed: u64,
    pub neighbor: NeighborNotion,
    pub pool: usize,
    pub cap: usize,
    pub record_every: usize,
    pub kl_constant: KlConvention,
    pub labels: SynthLabels,
    pub label_column: String,
    pub normalize: NormalizeMode,
    pub samples: usize,
    pub input_norm_sq: Option<f64>,
    pub time: Option<f64>,
    pub c: Option<f64>,
    pub beta_smooth: Option<f64>,
    pub rank_mt: Option<usize>,
    pub e_delta0: Option<f64>,
    pub e_grad0: Option<f64>,
    pub epsilon: Option<f64>,
    pub lazy_r: Option<f64>,
    pub ridge: f64,
    pub metric: SweepMetric,
    pub out: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value for {key}: '{value}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, CliError> {
    let list = value
        .split(',')
        .map(|t| parse(key, t))
        .collect::<Result<Vec<usize>, _>>()?;
    if list.is_empty() {
        return Err(CliError::Config(format!("{key} needs at least one value")));
    }
    Ok(list)
}

fn join(list: &[usize]) -> String {
    list.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Reads `key=value` lines. Blank lines and `#` comments are skipped.
///
/// A file whose comments contain `command=` is treated as the output of an
/// earlier run: only its `# key=value` header lines are read, so a result file
/// can be fed back to reproduce itself.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let is_output = text.lines().any(|l| {
        l.trim_start()
            .strip_prefix('#')
            .is_some_and(|r| r.trim_start().starts_with("command="))
    });
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let (content, commented) = match line.strip_prefix('#') {
            Some(rest) => (rest.trim(), true),
            None => (line, false),
        };
        if line.is_empty() || (is_output && !commented) {
            continue;
        }
        match content.split_once('=') {
            Some((k, v)) => pairs.push((k.trim().to_string(), v.trim().to_string())),
            None if commented => {}
            None => {
                return Err(CliError::Config(format!(
                    "config line {}: expected key=value, got '{raw}'",
                    lineno + 1
                )))
            }
        }
    }
    Ok(pairs)
}

impl RunConfig {
    /// Resolves `pairs` (later entries win) on top of the defaults.
    pub fn resolve(command: Command, pairs: &[(String, String)]) -> Result<Self, CliError> {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, v) in pairs {
            match k.as_str() {
                "version" => continue,
                "command" => {
                    if v != command.name() {
                        return Err(CliError::Config(format!(
                            "configuration was written for '{v}', not '{}'",
                            command.name()
                        )));
                    }
                    continue;
                }
                key if KEYS.contains(&key) => {
                    map.insert(key, v.as_str());
                }
                other => return Err(CliError::Config(format!("unknown configuration key '{other}'"))),
            }
        }
        let get = |key: &str| map.get(key).copied();
        fn or<T: FromStr>(get: Option<&str>, key: &str, default: T) -> Result<T, CliError> {
            get.map_or(Ok(default), |v| parse(key, v))
        }
        fn opt<T: FromStr>(get: Option<&str>, key: &str) -> Result<Option<T>, CliError> {
            get.filter(|v| !v.is_empty()).map(|v| parse(key, v)).transpose()
        }

        let data: DataSource = match get("data") {
            Some(v) => v.parse()?,
            None => DataSource::Synth(64),
        };
        let d = match (opt::<usize>(get("d"), "d")?, &data) {
            (Some(d), _) => Some(d),
            (None, DataSource::Synth(_)) => Some(16),
            (None, DataSource::Csv(_)) => None,
        };
        let width = match get("width") {
            Some(v) => parse_list("width", v)?,
            None => vec![64],
        };
        let depth = match get("depth") {
            Some(v) => parse_list("depth", v)?,
            None if command != Command::Sweep && width.len() > 1 => vec![width.len() + 1],
            None => vec![3],
        };
        let outputs = or(get("outputs"), "outputs", 1usize)?;
        let default_labels = if outputs == 1 {
            SynthLabels::Teacher
        } else {
            SynthLabels::Class
        };
        let cfg = RunConfig {
            command,
            data,
            d,
            width,
            depth,
            outputs,
            scheme: match get("scheme") {
                Some(v) => v.parse()?,
                None => SchemeChoice::List(vec![InitScheme::LeCun]),
            },
            model: or(get("model"), "model", ModelKind::Dnn)?,
            eta: or(get("eta"), "eta", 0.01)?,
            steps: or(get("steps"), "steps", 100)?,
            sigma2: or(get("sigma2"), "sigma2", 0.01)?,
            trajectory_sigma2: opt(get("trajectory_sigma2"), "trajectory_sigma2")?,
            runs: or(get("runs"), "runs", 6)?,
            seed: or(get("seed"), "seed", 0)?,
            neighbor: or(get("neighbor"), "neighbor", NeighborNotion::RemoveOne)?,
            pool: or(get("pool"), "pool", 8)?,
            cap: or(get("cap"), "cap", DEFAULT_REPLACE_CAP)?,
            record_every: or(get("record_every"), "record_every", 1)?,
            kl_constant: or(get("kl_constant"), "kl_constant", KlConvention::PaperHalfSigma2)?,
            labels: or(get("labels"), "labels", default_labels)?,
            label_column: get("label_column").unwrap_or("label").to_string(),
            normalize: or(get("normalize"), "normalize", NormalizeMode::Cap)?,
            samples: or(get("samples"), "samples", 4000)?,
            input_norm_sq: opt(get("input_norm_sq"), "input_norm_sq")?,
            time: opt(get("time"), "time")?,
            c: opt(get("c"), "c")?,
            beta_smooth: opt(get("beta_smooth"), "beta_smooth")?,
            rank_mt: opt(get("rank_mt"), "rank_mt")?,
            e_delta0: opt(get("e_delta0"), "e_delta0")?,
            e_grad0: opt(get("e_grad0"), "e_grad0")?,
            epsilon: opt(get("epsilon"), "epsilon")?,
            lazy_r: opt(get("lazy_r"), "lazy_r")?,
            ridge: or(get("ridge"), "ridge", 0.0)?,
            metric: or(get("metric"), "metric", SweepMetric::Analytic)?,
            out: get("out").filter(|v| !v.is_empty()).map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.outputs == 0 {
            return fail("outputs must be at least 1".into());
        }
        if let DataSource::Synth(0) = self.data {
            return fail("synthetic data needs at least one sample".into());
        }
        if self.command != Command::Sweep && self.depth.len() != 1 {
            return fail(format!("{} takes a single depth", self.command.name()));
        }
        if self.command == Command::Sweep && self.width.iter().chain(&self.depth).any(|&v| v == 0) {
            return fail("sweep grids must not contain zero".into());
        }
        match (self.labels, self.outputs) {
            (SynthLabels::Class, 1) => return fail("class labels need outputs >= 2".into()),
            (SynthLabels::Sign | SynthLabels::Teacher, o) if o > 1 => {
                return fail(format!("{} labels need a single output", self.labels))
            }
            _ => {}
        }
        if self.samples < 2 {
            return fail("samples must be at least 2".into());
        }
        if self.neighbor != NeighborNotion::RemoveOne && self.pool == 0 {
            return fail(format!("neighbor notion {} needs pool >= 1", self.neighbor));
        }
        Ok(())
    }

    /// Architecture for the single-network commands.
    pub fn arch(&self) -> Result<NetArch, CliError> {
        let d = self.input_dim()?;
        let depth = self.depth[0];
        let arch = if self.width.len() == 1 {
            NetArch::uniform(d, self.width[0], depth, self.outputs)?
        } else {
            if depth != self.width.len() + 1 {
                return Err(CliError::Config(format!(
                    "{} hidden widths need depth {}, got {depth}",
                    self.width.len(),
                    self.width.len() + 1
                )));
            }
            NetArch::new(d, &self.width, self.outputs)?
        };
        Ok(arch)
    }

    pub fn input_dim(&self) -> Result<usize, CliError> {
        self.d
            .ok_or_else(|| CliError::Config("input dimension is not known before loading the data".into()))
    }

    /// Continuous training time: explicit `time`, else `η·steps`.
    pub fn train_time(&self) -> f64 {
        self.time.unwrap_or(self.eta * self.steps as f64)
    }

    fn value_of(&self, key: &str) -> Option<String> {
        let some = |v: String| Some(v);
        let opt = |v: Option<f64>| v.map(|x| x.to_string());
        match key {
            "data" => some(self.data.to_string()),
            "d" => self.d.map(|d| d.to_string()),
            "width" => some(join(&self.width)),
            "depth" => some(join(&self.depth)),
            "outputs" => some(self.outputs.to_string()),
            "scheme" => some(self.scheme.to_string()),
            "model" => some(self.model.to_string()),
            "eta" => some(self.eta.to_string()),
            "steps" => some(self.steps.to_string()),
            "sigma2" => some(self.sigma2.to_string()),
            "trajectory_sigma2" => opt(self.trajectory_sigma2),
            "runs" => some(self.runs.to_string()),
            "seed" => some(self.seed.to_string()),
            "neighbor" => some(self.neighbor.to_string()),
            "pool" => (self.neighbor != NeighborNotion::RemoveOne).then(|| self.pool.to_string()),
            "cap" => (self.neighbor == NeighborNotion::ReplaceOne).then(|| self.cap.to_string()),
            "record_every" => some(self.record_every.to_string()),
            "kl_constant" => some(self.kl_constant.to_string()),
            "labels" => matches!(self.data, DataSource::Synth(_)).then(|| self.labels.to_string()),
            "label_column" => matches!(self.data, DataSource::Csv(_)).then(|| self.label_column.clone()),
            "normalize" => matches!(self.data, DataSource::Csv(_)).then(|| self.normalize.to_string()),
            "samples" => some(self.samples.to_string()),
            "input_norm_sq" => opt(self.input_norm_sq),
            "time" => opt(self.time),
            "c" => opt(self.c),
            "beta_smooth" => opt(self.beta_smooth),
            "rank_mt" => self.rank_mt.map(|r| r.to_string()),
            "e_delta0" => opt(self.e_delta0),
            "e_grad0" => opt(self.e_grad0),
            "epsilon" => opt(self.epsilon),
            "lazy_r" => opt(self.lazy_r),
            "ridge" => some(self.ridge.to_string()),
            "metric" => some(self.metric.to_string()),
            "out" => self.out.as_ref().map(|p| p.display().to_string()),
            _ => None,
        }
    }

    /// `key=value` pairs written at the top of every output file: the
    /// command, the library version and every setting the command reads.
    pub fn header(&self) -> Vec<(String, String)> {
        let mut pairs = vec![
            ("command".to_string(), self.command.name().to_string()),
            ("version".to_string(), langevin_kl::VERSION.to_string()),
        ];
        for key in self.command.keys() {
            if let Some(v) = self.value_of(key) {
                pairs.push((key.to_string(), v));
            }
        }
        pairs
    }
}
