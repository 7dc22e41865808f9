//! Flat `key=value` configuration. Values are resolved in three layers:
//! built-in defaults for the command and profile, then the config file,
//! then `--key value` overrides from the command line.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use manicov::eig::Deformation;
use manicov::manifolds::{ManifoldKind, DEFAULT_SPIRAL_RANGE};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SpiralGeodesic,
    GeodesicRates,
    S1Eigenvalues,
    AlphaSensitivity,
    EigConstant,
    FlatCalibration,
    Sample,
    Covgeo,
    EigDist,
    Lle,
    LdrLle,
    Dm,
}

impl Command {
    pub const ALL: [Command; 12] = [
        Command::SpiralGeodesic,
        Command::GeodesicRates,
        Command::S1Eigenvalues,
        Command::AlphaSensitivity,
        Command::EigConstant,
        Command::FlatCalibration,
        Command::Sample,
        Command::Covgeo,
        Command::EigDist,
        Command::Lle,
        Command::LdrLle,
        Command::Dm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SpiralGeodesic => "spiral-geodesic",
            Command::GeodesicRates => "geodesic-rates",
            Command::S1Eigenvalues => "s1-eigenvalues",
            Command::AlphaSensitivity => "alpha-sensitivity",
            Command::EigConstant => "eig-constant",
            Command::FlatCalibration => "flat-calibration",
            Command::Sample => "sample",
            Command::Covgeo => "covgeo",
            Command::EigDist => "eig-dist",
            Command::Lle => "lle",
            Command::LdrLle => "ldr-lle",
            Command::Dm => "dm",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ConfigError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| ConfigError::UnknownCommand(name.to_string()))
    }

    /// Ad-hoc tools read a point cloud from `input`.
    pub fn reads_input(self) -> bool {
        matches!(
            self,
            Command::Covgeo | Command::EigDist | Command::Lle | Command::LdrLle | Command::Dm
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// n = 2000 class runs that finish in seconds to minutes.
    Desk,
    /// The larger sizes of the original experiments; dense spectral steps
    /// become slow.
    Paper,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }
}

/// Every tunable of every command. Keys that a command does not use are
/// still resolved and echoed, so a result file records the full state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub profile: Profile,
    pub manifold: ManifoldKind,
    pub n: usize,
    /// Kernel / neighborhood bandwidth for the spectral tools.
    pub h: f64,
    /// Frame radius; `None` means the command's natural choice.
    pub h_bar: Option<f64>,
    pub eps: f64,
    /// Fixed LLE regularization; `None` means trace-scaled.
    pub c: Option<f64>,
    pub d: usize,
    pub alpha: usize,
    pub alpha_list: Vec<usize>,
    /// Distance buckets of the α scan; empty means derived from `eps`.
    pub t_values: Vec<f64>,
    /// Upper pair distance for the EIG constant check; `None` means `eps / 2`.
    pub t_max: Option<f64>,
    pub h_bar_list: Vec<f64>,
    pub ell: usize,
    pub k_eigs: usize,
    /// k-NN neighborhoods instead of radius `h`.
    pub knn: Option<usize>,
    pub dm_alpha: f64,
    pub num_pairs: usize,
    pub seed: u64,
    pub deformation: Deformation,
    pub output_dir: PathBuf,
    pub input: Option<PathBuf>,
    pub latent: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
}

const KEYS: [&str; 26] = [
    "profile",
    "manifold",
    "n",
    "h",
    "h_bar",
    "eps",
    "c",
    "d",
    "alpha",
    "alpha_list",
    "t_values",
    "t_max",
    "h_bar_list",
    "ell",
    "k_eigs",
    "knn",
    "dm_alpha",
    "num_pairs",
    "seed",
    "s_range",
    "interval",
    "deformation",
    "output_dir",
    "input",
    "latent",
    "pairs",
];

type Raw = BTreeMap<String, String>;

fn set(raw: &mut Raw, key: &str, value: &str) {
    raw.insert(key.to_string(), value.to_string());
}

fn defaults(command: Command, profile: Profile) -> Raw {
    let mut raw = Raw::new();
    let spiral_range = format!("{}:{}", DEFAULT_SPIRAL_RANGE.0, DEFAULT_SPIRAL_RANGE.1);
    for (k, v) in [
        ("profile", profile.name()),
        ("manifold", "circle_uniform"),
        ("n", "2000"),
        ("h", "0.1"),
        ("h_bar", "auto"),
        ("eps", "0.2"),
        ("c", "auto"),
        ("d", "1"),
        ("alpha", "1"),
        ("alpha_list", "1,2,3,4"),
        ("t_values", "auto"),
        ("t_max", "auto"),
        ("h_bar_list", "0.4,0.2,0.1,0.05"),
        ("ell", "2"),
        ("k_eigs", "7"),
        ("knn", "none"),
        ("dm_alpha", "1"),
        ("num_pairs", "50"),
        ("seed", "42"),
        ("s_range", spiral_range.as_str()),
        ("interval", "0:1"),
        ("deformation", "identity"),
        ("output_dir", "results"),
        ("input", "none"),
        ("latent", "none"),
        ("pairs", "none"),
    ] {
        set(&mut raw, k, v);
    }
    let paper = profile == Profile::Paper;
    match command {
        Command::SpiralGeodesic => {
            set(&mut raw, "manifold", "spiral");
            set(&mut raw, "n", if paper { "8000" } else { "2000" });
        }
        Command::GeodesicRates => {
            set(&mut raw, "n", "4000");
        }
        Command::S1Eigenvalues => {
            set(&mut raw, "manifold", "circle_nonuniform");
            set(&mut raw, "n", if paper { "8000" } else { "2000" });
            set(&mut raw, "h", if paper { "0.03" } else { "0.05" });
        }
        Command::AlphaSensitivity => {
            set(&mut raw, "manifold", "sphere");
            set(&mut raw, "d", "2");
            set(&mut raw, "n", "8000");
            set(&mut raw, "eps", "0.1");
            set(&mut raw, "deformation", "bend:0.5");
        }
        Command::EigConstant => {
            set(&mut raw, "manifold", "segment");
            set(&mut raw, "n", "5000");
            set(&mut raw, "eps", "0.05");
            set(&mut raw, "deformation", "linear:3,1");
        }
        Command::FlatCalibration => {
            set(&mut raw, "manifold", "segment");
            set(&mut raw, "n", "5000");
            set(&mut raw, "eps", "0.05");
            set(&mut raw, "interval", "auto");
        }
        Command::Sample | Command::Covgeo | Command::EigDist | Command::Lle | Command::LdrLle | Command::Dm => {}
    }
    raw
}

/// Parses config file text: `key=value` lines, `#` comments, blank lines.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: idx + 1,
            text: line.to_string(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Splits `--key value` pairs. `--key=value` is accepted as well.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let key = arg.strip_prefix("--").ok_or_else(|| ConfigError::StrayArgument(arg.clone()))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
            continue;
        }
        let value = iter.next().ok_or_else(|| ConfigError::MissingValue(key.to_string()))?;
        out.push((key.to_string(), value.clone()));
    }
    Ok(out)
}

fn canonical_key(key: &str) -> String {
    key.replace('-', "_")
}

fn is_unset(v: &str) -> bool {
    v == "auto" || v == "none" || v.is_empty()
}

fn parse_num<T: std::str::FromStr>(field: &str, v: &str) -> Result<T, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| ConfigError::invalid(field, format!("cannot parse `{v}`")))
}

fn positive(field: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse_num(field, v)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::invalid(field, format!("must be a positive number, got {v}")))
    }
}

fn positive_count(field: &str, v: &str) -> Result<usize, ConfigError> {
    let x: usize = parse_num(field, v)?;
    if x == 0 {
        return Err(ConfigError::invalid(field, "must be at least 1"));
    }
    Ok(x)
}

fn list<T>(field: &str, v: &str, item: impl Fn(&str, &str) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    let items: Vec<T> = v
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| item(field, s.trim()))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(ConfigError::invalid(field, "list is empty"));
    }
    Ok(items)
}

fn interval(field: &str, v: &str) -> Result<(f64, f64), ConfigError> {
    let (a, b) = v
        .split_once(':')
        .ok_or_else(|| ConfigError::invalid(field, format!("expected `lo:hi`, got `{v}`")))?;
    let (a, b): (f64, f64) = (parse_num(field, a)?, parse_num(field, b)?);
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(ConfigError::invalid(field, format!("need finite lo < hi, got `{v}`")));
    }
    Ok((a, b))
}

fn optional_path(v: &str) -> Option<PathBuf> {
    (!is_unset(v)).then(|| PathBuf::from(v))
}

/// `identity`, `linear:s1,s2,...`, `warp:a,b` or `bend:a`.
pub fn parse_deformation(v: &str) -> Result<Deformation, ConfigError> {
    const FIELD: &str = "deformation";
    let (name, params) = v.split_once(':').unwrap_or((v, ""));
    let nums = || -> Result<Vec<f64>, ConfigError> { list(FIELD, params, parse_num) };
    let deformation = match name.trim() {
        "identity" => Deformation::Identity,
        "linear" => Deformation::LinearScaling { diag: nums()? },
        "warp" => match *nums()?.as_slice() {
            [a, b] if (a * b).abs() < 1.0 => Deformation::CoordinateWarp { a, b },
            [_, _] => return Err(ConfigError::invalid(FIELD, "warp needs |a·b| < 1")),
            _ => return Err(ConfigError::invalid(FIELD, "warp takes `warp:a,b`")),
        },
        "bend" => match nums()?.as_slice() {
            &[a] => Deformation::SphereBend { a },
            _ => return Err(ConfigError::invalid(FIELD, "bend takes `bend:a`")),
        },
        other => return Err(ConfigError::invalid(FIELD, format!("unknown deformation `{other}`"))),
    };
    Ok(deformation)
}

fn format_deformation(d: &Deformation) -> String {
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    match d {
        Deformation::Identity => "identity".into(),
        Deformation::LinearScaling { diag } => format!("linear:{}", join(diag)),
        Deformation::CoordinateWarp { a, b } => format!("warp:{a},{b}"),
        Deformation::SphereBend { a } => format!("bend:{a}"),
    }
}

fn manifold_from(raw: &Raw, d: usize, eps: f64) -> Result<ManifoldKind, ConfigError> {
    let kind = match raw["manifold"].as_str() {
        "spiral" => ManifoldKind::Spiral {
            s_range: interval("s_range", &raw["s_range"])?,
        },
        "circle_uniform" => ManifoldKind::CircleUniform,
        "circle_nonuniform" => ManifoldKind::CircleNonuniform,
        "sphere" => ManifoldKind::Sphere { d },
        "segment" => ManifoldKind::Segment {
            interval: if is_unset(&raw["interval"]) {
                (-eps, eps)
            } else {
                interval("interval", &raw["interval"])?
            },
        },
        other => return Err(ConfigError::invalid("manifold", format!("unknown manifold `{other}`"))),
    };
    Ok(kind)
}

impl ExperimentConfig {
    /// Resolves a configuration from defaults, an optional file, and overrides.
    /// A `config` key among the overrides names the file.
    pub fn resolve(command: &str, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let command = Command::from_name(command)?;
        let mut file_path = None;
        let mut cli = Vec::new();
        for (k, v) in overrides {
            match canonical_key(k).as_str() {
                "config" => file_path = Some(PathBuf::from(v)),
                key => cli.push((key.to_string(), v.clone())),
            }
        }
        let file = match &file_path {
            Some(path) => Self::read_file(path)?,
            None => Vec::new(),
        };
        Self::from_layers(command, &file, &cli)
    }

    pub fn read_file(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        parse_config_text(&text)
    }

    /// Defaults for `command`, overlaid with `file` and then `cli`.
    pub fn from_layers(
        command: Command,
        file: &[(String, String)],
        cli: &[(String, String)],
    ) -> Result<Self, ConfigError> {
        let layered: Vec<(String, String)> = file
            .iter()
            .chain(cli)
            .map(|(k, v)| (canonical_key(k), v.clone()))
            .collect();
        for (k, _) in &layered {
            if !KEYS.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
        }
        // The profile decides the defaults, so it is settled first.
        let profile = match layered.iter().rev().find(|(k, _)| k == "profile").map(|(_, v)| v.as_str()) {
            None | Some("desk") => Profile::Desk,
            Some("paper") => Profile::Paper,
            Some(other) => return Err(ConfigError::invalid("profile", format!("expected desk or paper, got `{other}`"))),
        };
        let mut raw = defaults(command, profile);
        for (k, v) in layered {
            raw.insert(k, v);
        }
        Self::from_raw(command, profile, &raw)
    }

    pub fn defaults(command: Command) -> Self {
        Self::from_layers(command, &[], &[]).expect("built-in defaults are valid")
    }

    fn from_raw(command: Command, profile: Profile, raw: &Raw) -> Result<Self, ConfigError> {
        let opt_pos = |k: &str| -> Result<Option<f64>, ConfigError> {
            let v = &raw[k];
            if is_unset(v) {
                Ok(None)
            } else {
                positive(k, v).map(Some)
            }
        };
        let d = positive_count("d", &raw["d"])?;
        let eps = positive("eps", &raw["eps"])?;
        let dm_alpha: f64 = parse_num("dm_alpha", &raw["dm_alpha"])?;
        if !(0.0..=1.0).contains(&dm_alpha) {
            return Err(ConfigError::invalid("dm_alpha", "must lie in [0, 1]"));
        }
        let n = positive_count("n", &raw["n"])?;
        if n < 2 {
            return Err(ConfigError::invalid("n", "need at least 2 points"));
        }
        let cfg = ExperimentConfig {
            command,
            profile,
            manifold: manifold_from(raw, d, eps)?,
            n,
            h: positive("h", &raw["h"])?,
            h_bar: opt_pos("h_bar")?,
            eps,
            c: opt_pos("c")?,
            d,
            alpha: positive_count("alpha", &raw["alpha"])?,
            alpha_list: list("alpha_list", &raw["alpha_list"], positive_count)?,
            t_values: if is_unset(&raw["t_values"]) {
                Vec::new()
            } else {
                list("t_values", &raw["t_values"], positive)?
            },
            t_max: opt_pos("t_max")?,
            h_bar_list: list("h_bar_list", &raw["h_bar_list"], positive)?,
            ell: positive_count("ell", &raw["ell"])?,
            k_eigs: positive_count("k_eigs", &raw["k_eigs"])?,
            knn: if is_unset(&raw["knn"]) {
                None
            } else {
                Some(positive_count("knn", &raw["knn"])?)
            },
            dm_alpha,
            num_pairs: positive_count("num_pairs", &raw["num_pairs"])?,
            seed: parse_num("seed", &raw["seed"])?,
            deformation: parse_deformation(&raw["deformation"])?,
            output_dir: PathBuf::from(&raw["output_dir"]),
            input: optional_path(&raw["input"]),
            latent: optional_path(&raw["latent"]),
            pairs: optional_path(&raw["pairs"]),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let intrinsic = self.manifold.intrinsic_dim();
        let one_dim = |what: &str| -> Result<(), ConfigError> {
            if intrinsic != 1 {
                return Err(ConfigError::invalid("manifold", format!("{what} needs a curve, got {}", self.manifold.name())));
            }
            Ok(())
        };
        match self.command {
            Command::SpiralGeodesic | Command::GeodesicRates => one_dim(self.command.name())?,
            Command::S1Eigenvalues => {
                if !matches!(self.manifold, ManifoldKind::CircleUniform | ManifoldKind::CircleNonuniform) {
                    return Err(ConfigError::invalid("manifold", "the circle spectrum needs circle_uniform or circle_nonuniform"));
                }
            }
            Command::EigConstant | Command::FlatCalibration
                if !matches!(self.manifold, ManifoldKind::Segment { .. }) => {
                    return Err(ConfigError::invalid("manifold", format!("{} needs a segment", self.command.name())));
                }
            _ => {}
        }
        if !self.command.reads_input() && self.d != intrinsic {
            return Err(ConfigError::invalid(
                "d",
                format!("{} has intrinsic dimension {intrinsic}, got d={}", self.manifold.name(), self.d),
            ));
        }
        if self.command.reads_input() && self.input.is_none() {
            return Err(ConfigError::invalid("input", format!("{} needs an input point cloud", self.command.name())));
        }
        if self.command == Command::EigDist && self.latent.is_none() {
            return Err(ConfigError::invalid("latent", "eig-dist needs the latent coordinates of the input"));
        }
        if self.command == Command::Sample && matches!(self.manifold, ManifoldKind::Sphere { d } if self.n < d + 2) {
            return Err(ConfigError::invalid("n", "a sphere sample needs n >= d + 2"));
        }
        if let ManifoldKind::Spiral { s_range } = self.manifold {
            if s_range.0 < -2f64.sqrt() {
                return Err(ConfigError::invalid("s_range", "spiral parameter must stay above -sqrt(2)"));
            }
        }
        Ok(())
    }

    /// Resolved values of every key, in key order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| x.to_string());
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("none".to_string(), |p| p.display().to_string());
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let (s_range, interval) = match self.manifold {
            ManifoldKind::Spiral { s_range } => (format!("{}:{}", s_range.0, s_range.1), "n/a".to_string()),
            ManifoldKind::Segment { interval } => ("n/a".to_string(), format!("{}:{}", interval.0, interval.1)),
            _ => ("n/a".to_string(), "n/a".to_string()),
        };
        let mut out = vec![
            ("command", self.command.name().to_string()),
            ("profile", self.profile.name().to_string()),
            ("manifold", self.manifold.name().to_string()),
            ("n", self.n.to_string()),
            ("h", self.h.to_string()),
            ("h_bar", opt(self.h_bar)),
            ("eps", self.eps.to_string()),
            ("c", opt(self.c)),
            ("d", self.d.to_string()),
            ("alpha", self.alpha.to_string()),
            (
                "alpha_list",
                self.alpha_list.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(","),
            ),
            (
                "t_values",
                if self.t_values.is_empty() { "auto".into() } else { join(&self.t_values) },
            ),
            ("t_max", opt(self.t_max)),
            ("h_bar_list", join(&self.h_bar_list)),
            ("ell", self.ell.to_string()),
            ("k_eigs", self.k_eigs.to_string()),
            ("knn", self.knn.map_or("none".to_string(), |k| k.to_string())),
            ("dm_alpha", self.dm_alpha.to_string()),
            ("num_pairs", self.num_pairs.to_string()),
            ("seed", self.seed.to_string()),
            ("s_range", s_range),
            ("interval", interval),
            ("deformation", format_deformation(&self.deformation)),
            ("output_dir", self.output_dir.display().to_string()),
            ("input", path(&self.input)),
            ("latent", path(&self.latent)),
            ("pairs", path(&self.pairs)),
        ];
        out.sort_by(|a, b| a.0.cmp(b.0));
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}
