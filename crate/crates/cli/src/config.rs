//! Command-line and config-file parsing into a validated [`RunConfig`].
//!
//! Every parameter has a lowercase key that doubles as its long flag. Values
//! come from the defaults, then the config file, then the flags; the merged
//! map is canonicalised so that dumping and re-reading it is lossless.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, ArgMatches, Command};

use tunnel_clock::experiments::{FixedParams, Scale, SweepKind, SweepSpec, Variable};
use tunnel_clock::propagate::Grid1D;
use tunnel_clock::{GaussianPacket, PhysicalParams, Potential, QuadratureOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subcommand {
    Stationary,
    Average,
    Sweep,
    Spectrum,
    Resonances,
    Propagate,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::Stationary,
        Subcommand::Average,
        Subcommand::Sweep,
        Subcommand::Spectrum,
        Subcommand::Resonances,
        Subcommand::Propagate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Stationary => "stationary",
            Subcommand::Average => "average",
            Subcommand::Sweep => "sweep",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Resonances => "resonances",
            Subcommand::Propagate => "propagate",
        }
    }

    fn about(self) -> &'static str {
        match self {
            Subcommand::Stationary => "Scattering amplitudes, clock and dwell times at one wave number",
            Subcommand::Average => "Post-selected average times of a Gaussian packet",
            Subcommand::Sweep => "Average times over a range of barrier parameters",
            Subcommand::Spectrum => "Incident and transmitted wave-number densities",
            Subcommand::Resonances => "Transmission resonances of the double-delta barrier",
            Subcommand::Propagate => "Crank-Nicolson propagation of the packet on a grid",
        }
    }

    /// Keys this subcommand accepts.
    fn keys(self) -> &'static [&'static str] {
        const QUAD: [&str; 4] = ["rel_tol", "window", "max_depth", "resonance_split"];
        match self {
            Subcommand::Stationary => &["potential", "v0", "a", "gamma", "d", "k", "verbosity"],
            Subcommand::Average => &[
                "potential",
                "v0",
                "a",
                "gamma",
                "d",
                "k0",
                "sigma",
                "z0",
                QUAD[0],
                QUAD[1],
                QUAD[2],
                QUAD[3],
                "verbosity",
            ],
            Subcommand::Sweep => &[
                "kind",
                "v0",
                "a",
                "gamma",
                "d",
                "k0",
                "sigma",
                "z0",
                "start",
                "stop",
                "count",
                "scale",
                QUAD[0],
                QUAD[1],
                QUAD[2],
                QUAD[3],
                "workers",
                "out",
                "plot",
                "plot_scale",
                "log_y",
                "title",
                "verbosity",
            ],
            Subcommand::Spectrum => &[
                "potential",
                "v0",
                "a",
                "gamma",
                "d",
                "k0",
                "sigma",
                "z0",
                "start",
                "stop",
                "count",
                QUAD[0],
                QUAD[1],
                QUAD[2],
                QUAD[3],
                "workers",
                "out",
                "plot",
                "title",
                "verbosity",
            ],
            Subcommand::Resonances => &["gamma", "d", "kmin", "kmax", "verbosity"],
            Subcommand::Propagate => &[
                "potential",
                "v0",
                "a",
                "gamma",
                "d",
                "k0",
                "sigma",
                "z0",
                "z_min",
                "z_max",
                "dz",
                "dt",
                "t_max",
                "snapshot_times",
                "snapshot_prefix",
                "verbosity",
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Float,
    Count,
    Bool,
    Text,
    Path,
    FloatList,
}

fn key_info(key: &str) -> (Kind, &'static str) {
    match key {
        "potential" => (Kind::Text, "Barrier: rect or dd"),
        "v0" => (Kind::Float, "Rectangular barrier height"),
        "a" => (Kind::Float, "Rectangular barrier width"),
        "gamma" => (Kind::Float, "Double-delta strength"),
        "d" => (Kind::Float, "Double-delta separation"),
        "k" => (Kind::Float, "Wave number"),
        "k0" => (Kind::Float, "Packet central wave number"),
        "sigma" => (Kind::Float, "Packet width"),
        "z0" => (Kind::Float, "Packet initial centre"),
        "rel_tol" => (Kind::Float, "Relative tolerance of the k integrals"),
        "window" => (Kind::Float, "Half-width of the k window in momentum spreads"),
        "max_depth" => (Kind::Count, "Maximum bisection depth of the k integrals"),
        "resonance_split" => (Kind::Bool, "Seed quadrature panels at resonances"),
        "kind" => (Kind::Text, "Swept quantity: width, gamma or separation"),
        "start" => (Kind::Float, "First swept value"),
        "stop" => (Kind::Float, "Last swept value"),
        "count" => (Kind::Count, "Number of swept values"),
        "scale" => (Kind::Text, "Spacing of swept values: linear or log"),
        "workers" => (Kind::Count, "Worker threads (default: all cores)"),
        "out" => (Kind::Path, "Output CSV file"),
        "plot" => (Kind::Path, "Output SVG file"),
        "plot_scale" => (Kind::Float, "Plot-only factor applied to every curve except <t_T>"),
        "log_y" => (Kind::Bool, "Logarithmic plot y axis"),
        "title" => (Kind::Text, "Plot title"),
        "kmin" => (Kind::Float, "Lower end of the k interval"),
        "kmax" => (Kind::Float, "Upper end of the k interval"),
        "z_min" => (Kind::Float, "Left grid edge"),
        "z_max" => (Kind::Float, "Right grid edge"),
        "dz" => (Kind::Float, "Grid spacing"),
        "dt" => (Kind::Float, "Time step (default 0.5 dz^2)"),
        "t_max" => (Kind::Float, "Final time"),
        "snapshot_times" => (Kind::FloatList, "Comma-separated density snapshot times"),
        "snapshot_prefix" => (Kind::Path, "Snapshot files are <prefix>_<index>.csv"),
        "verbosity" => (Kind::Count, "Log level: 0 warn, 1 info, 2 debug, 3 trace"),
        _ => unreachable!("unregistered key {key}"),
    }
}

/// A usage error; the message names the offending flag or key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Subcommand plus the merged, canonical parameter map.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub values: BTreeMap<String, String>,
    pub dump_config: bool,
}

/// Fully typed job description built from a [`RunConfig`].
#[derive(Clone, Debug)]
pub enum Job {
    Stationary {
        potential: Potential,
        k: f64,
    },
    Average {
        potential: Potential,
        packet: GaussianPacket,
        quadrature: QuadratureOptions,
    },
    Sweep {
        spec: SweepSpec,
        out: PathBuf,
        plot: Option<PathBuf>,
        plot_scale: f64,
        log_y: bool,
        title: String,
    },
    Spectrum {
        spec: SweepSpec,
        out: PathBuf,
        plot: Option<PathBuf>,
        title: String,
    },
    Resonances {
        gamma: f64,
        d: f64,
        k_min: f64,
        k_max: f64,
    },
    Propagate {
        potential: Potential,
        packet: GaussianPacket,
        grid: Grid1D,
        dt: f64,
        t_max: f64,
        snapshot_times: Vec<f64>,
        snapshot_prefix: Option<PathBuf>,
    },
}

pub fn command() -> Command {
    let mut cmd = Command::new("tunnel-clock")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Clock, dwell and average tunneling times (atomic units)")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for sub in Subcommand::ALL {
        let mut c = Command::new(sub.name())
            .about(sub.about())
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_name("FILE")
                    .help("Read `key = value` parameters from FILE; flags take precedence"),
            )
            .arg(
                Arg::new("dump-config")
                    .long("dump-config")
                    .action(ArgAction::SetTrue)
                    .help("Print the merged configuration and exit"),
            );
        for &key in sub.keys() {
            let (kind, help) = key_info(key);
            let mut arg = Arg::new(key)
                .long(key)
                .value_name(if kind == Kind::Path { "PATH" } else { "VALUE" })
                .allow_hyphen_values(true)
                .help(help);
            if key.contains('_') {
                arg = arg.visible_alias(key.replace('_', "-"));
            }
            c = c.arg(arg);
        }
        cmd = cmd.subcommand(c);
    }
    cmd
}

/// Parse `key = value` text; `#` starts a comment.
pub fn parse_config_text(text: &str, sub: Subcommand, origin: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{origin}:{}: expected `key = value`", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !sub.keys().contains(&key) {
            return Err(usage(format!(
                "{origin}:{}: unknown key `{key}` for `{}`",
                i + 1,
                sub.name()
            )));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(usage(format!("{origin}:{}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(out)
}

/// Parse argv (including the program name) into a merged configuration.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, ParseFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = command().try_get_matches_from(argv).map_err(ParseFailure::Clap)?;
    let (name, sub_m) = matches.subcommand().expect("subcommand is required");
    let sub = Subcommand::ALL
        .into_iter()
        .find(|s| s.name() == name)
        .expect("registered subcommand");
    from_matches(sub, sub_m).map_err(ParseFailure::Usage)
}

#[derive(Debug)]
pub enum ParseFailure {
    Clap(clap::Error),
    Usage(UsageError),
}

fn from_matches(sub: Subcommand, m: &ArgMatches) -> Result<RunConfig, UsageError> {
    let mut values = match m.get_one::<String>("config") {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| usage(format!("--config: cannot read {path}: {e}")))?;
            parse_config_text(&text, sub, path)?
        }
        None => BTreeMap::new(),
    };
    for &key in sub.keys() {
        if let Some(v) = m.get_one::<String>(key) {
            values.insert(key.to_string(), v.trim().to_string());
        }
    }
    let mut cfg = RunConfig {
        subcommand: sub,
        values,
        dump_config: m.get_flag("dump-config"),
    };
    cfg.canonicalize()?;
    cfg.job()?;
    Ok(cfg)
}

fn canonical(key: &str, value: &str) -> Result<String, UsageError> {
    let bad = |what: &str| usage(format!("--{key}: expected {what}, got `{value}`"));
    match key_info(key).0 {
        Kind::Float => {
            let v: f64 = value.parse().map_err(|_| bad("a number"))?;
            if !v.is_finite() {
                return Err(bad("a finite number"));
            }
            Ok(format!("{v:?}"))
        }
        Kind::Count => value
            .parse::<u64>()
            .map(|v| v.to_string())
            .map_err(|_| bad("a non-negative integer")),
        Kind::Bool => match value {
            "true" | "yes" | "1" => Ok("true".into()),
            "false" | "no" | "0" => Ok("false".into()),
            _ => Err(bad("true or false")),
        },
        Kind::FloatList => {
            let parts: Result<Vec<String>, _> = value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .map(|v| format!("{v:?}"))
                        .ok_or_else(|| bad("comma-separated numbers"))
                })
                .collect();
            Ok(parts?.join(","))
        }
        Kind::Text | Kind::Path => {
            if value.is_empty() {
                Err(bad("a non-empty value"))
            } else if value.contains('#') || value.contains('\n') {
                Err(bad("a value without `#` or newlines"))
            } else {
                Ok(value.to_string())
            }
        }
    }
}

impl RunConfig {
    fn canonicalize(&mut self) -> Result<(), UsageError> {
        for (k, v) in self.values.iter_mut() {
            *v = canonical(k, v)?;
        }
        self.fill_defaults()?;
        for (k, v) in self.values.iter_mut() {
            *v = canonical(k, v)?;
        }
        Ok(())
    }

    fn fill_defaults(&mut self) -> Result<(), UsageError> {
        let mut defaults: Vec<(&str, String)> = vec![("verbosity", "0".into())];
        match self.subcommand {
            Subcommand::Average => defaults.extend(quadrature_defaults()),
            Subcommand::Sweep => {
                let kind = self.sweep_kind()?;
                let spec = match kind {
                    SweepKind::Width => SweepSpec::fig1(),
                    SweepKind::Gamma => SweepSpec::fig3(),
                    _ => SweepSpec::fig4(),
                };
                defaults.extend(fixed_defaults(&spec.fixed, kind));
                let var = &spec.variable;
                defaults.push(("start", format!("{}", var.start)));
                defaults.push(("stop", format!("{}", var.stop)));
                let scale = match self.values.get("scale").map(String::as_str) {
                    Some("log") => Scale::Log,
                    Some("linear") => Scale::Linear,
                    _ => var.scale,
                };
                let count = match scale {
                    Scale::Log => 40,
                    Scale::Linear => 60,
                };
                defaults.push(("count", count.to_string()));
                defaults.push(("scale", scale_name(var.scale).into()));
                defaults.push(("plot_scale", "1".into()));
                defaults.push(("log_y", "false".into()));
                defaults.extend(quadrature_defaults());
            }
            Subcommand::Spectrum => {
                let spec = SweepSpec::fig2();
                defaults.push(("potential", "dd".into()));
                let rect = self.values.get("potential").map(String::as_str) == Some("rect");
                let f = &spec.fixed;
                if rect {
                    defaults.push(("v0", format!("{}", f.v0)));
                    defaults.push(("a", format!("{}", f.a)));
                } else {
                    defaults.push(("gamma", format!("{}", f.gamma)));
                    defaults.push(("d", format!("{}", f.d)));
                }
                defaults.push(("k0", format!("{}", f.k0)));
                defaults.push(("sigma", format!("{}", f.sigma)));
                defaults.push(("z0", format!("{}", f.z0)));
                defaults.push(("start", format!("{}", spec.variable.start)));
                defaults.push(("stop", format!("{}", spec.variable.stop)));
                defaults.push(("count", spec.variable.count.to_string()));
                defaults.extend(quadrature_defaults());
            }
            Subcommand::Propagate => {
                if let Some(dz) = self.values.get("dz").and_then(|v| v.parse::<f64>().ok()) {
                    let p = PhysicalParams::default();
                    defaults.push(("dt", format!("{}", 0.5 * p.mu * dz * dz / p.hbar)));
                }
            }
            Subcommand::Stationary | Subcommand::Resonances => {}
        }
        for (k, v) in defaults {
            self.values.entry(k.to_string()).or_insert(v);
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str, UsageError> {
        self.get(key).ok_or_else(|| {
            usage(format!(
                "missing required flag --{key} for `{}`",
                self.subcommand.name()
            ))
        })
    }

    fn float(&self, key: &str) -> Result<f64, UsageError> {
        Ok(self.required(key)?.parse().expect("canonical float"))
    }

    fn count(&self, key: &str) -> Result<usize, UsageError> {
        Ok(self.required(key)?.parse().expect("canonical count"))
    }

    fn flag(&self, key: &str) -> bool {
        self.get(key) == Some("true")
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    fn sweep_kind(&self) -> Result<SweepKind, UsageError> {
        let s = self.required("kind")?;
        match SweepKind::parse(s) {
            Some(k) if k != SweepKind::Spectrum => Ok(k),
            _ => Err(usage(format!("--kind: expected width, gamma or separation, got `{s}`"))),
        }
    }

    /// Reject keys that do not apply to the chosen barrier.
    fn forbid(&self, keys: &[&str], reason: &str) -> Result<(), UsageError> {
        match keys.iter().find(|k| self.values.contains_key(**k)) {
            Some(k) => Err(usage(format!("--{k} does not apply {reason}"))),
            None => Ok(()),
        }
    }

    fn potential(&self) -> Result<Potential, UsageError> {
        let p = match self.required("potential")? {
            "rect" => {
                self.forbid(&["gamma", "d"], "to potential rect")?;
                Potential::rectangular(self.float("v0")?, self.float("a")?)
            }
            "dd" => {
                self.forbid(&["v0", "a"], "to potential dd")?;
                Potential::double_delta(self.float("gamma")?, self.float("d")?)
            }
            other => return Err(usage(format!("--potential: expected rect or dd, got `{other}`"))),
        };
        p.map_err(flag_error)
    }

    fn packet(&self) -> Result<GaussianPacket, UsageError> {
        GaussianPacket::new(self.float("k0")?, self.float("sigma")?, self.float("z0")?).map_err(flag_error)
    }

    fn quadrature(&self) -> Result<QuadratureOptions, UsageError> {
        let q = QuadratureOptions {
            rel_tol: self.float("rel_tol")?,
            window: self.float("window")?,
            max_depth: u32::try_from(self.count("max_depth")?).map_err(|_| usage("--max_depth: too large"))?,
            resonance_split: self.flag("resonance_split"),
        };
        q.validate().map_err(flag_error)?;
        Ok(q)
    }

    fn workers(&self) -> Result<Option<usize>, UsageError> {
        match self.get("workers") {
            None => Ok(None),
            Some(_) => match self.count("workers")? {
                0 => Err(usage("--workers: must be >= 1")),
                w => Ok(Some(w)),
            },
        }
    }

    /// Build and validate the typed job; nothing is computed.
    pub fn job(&self) -> Result<Job, UsageError> {
        match self.subcommand {
            Subcommand::Stationary => {
                let potential = self.potential()?;
                let k = self.float("k")?;
                if k <= 0.0 {
                    return Err(usage(format!("--k: must be > 0, got {k}")));
                }
                Ok(Job::Stationary { potential, k })
            }
            Subcommand::Average => Ok(Job::Average {
                potential: self.potential()?,
                packet: self.packet()?,
                quadrature: self.quadrature()?,
            }),
            Subcommand::Sweep => {
                let kind = self.sweep_kind()?;
                let swept = kind.variable();
                if self.values.contains_key(swept) {
                    return Err(usage(format!("--{swept} is the swept quantity; use --start/--stop")));
                }
                let (irrelevant, barrier): (&[&str], _) = match kind {
                    SweepKind::Width => (&["gamma", "d"], "rectangular"),
                    _ => (&["v0", "a"], "double-delta"),
                };
                self.forbid(irrelevant, &format!("to a {barrier} sweep"))?;
                let f = |k: &str| -> Result<f64, UsageError> {
                    if irrelevant.contains(&k) || k == swept {
                        Ok(f64::NAN)
                    } else {
                        self.float(k)
                    }
                };
                let preset = match kind {
                    SweepKind::Width => SweepSpec::fig1(),
                    SweepKind::Gamma => SweepSpec::fig3(),
                    _ => SweepSpec::fig4(),
                };
                let fixed = FixedParams {
                    v0: f("v0")?,
                    a: f("a")?,
                    gamma: f("gamma")?,
                    d: f("d")?,
                    k0: self.float("k0")?,
                    sigma: self.float("sigma")?,
                    z0: self.float("z0")?,
                };
                let scale = match self.required("scale")? {
                    "linear" => Scale::Linear,
                    "log" => Scale::Log,
                    s => return Err(usage(format!("--scale: expected linear or log, got `{s}`"))),
                };
                let spec = SweepSpec {
                    kind,
                    fixed,
                    variable: Variable {
                        start: self.float("start")?,
                        stop: self.float("stop")?,
                        count: self.count("count")?,
                        scale,
                    },
                    quadrature: self.quadrature()?,
                    params: preset.params,
                    workers: self.workers()?,
                    rectangular_spectrum: false,
                };
                spec.validate().map_err(sweep_error)?;
                let plot_scale = self.float("plot_scale")?;
                if plot_scale <= 0.0 {
                    return Err(usage("--plot_scale: must be > 0"));
                }
                Ok(Job::Sweep {
                    spec,
                    out: self
                        .path("out")
                        .ok_or_else(|| usage("missing required flag --out for `sweep`"))?,
                    plot: self.path("plot"),
                    plot_scale,
                    log_y: self.flag("log_y"),
                    title: self.get("title").unwrap_or("").to_string(),
                })
            }
            Subcommand::Spectrum => {
                self.potential()?;
                let rect = matches!(self.get("potential"), Some("rect"));
                let mut spec = SweepSpec::fig2();
                spec.rectangular_spectrum = rect;
                spec.fixed.k0 = self.float("k0")?;
                spec.fixed.sigma = self.float("sigma")?;
                spec.fixed.z0 = self.float("z0")?;
                if rect {
                    spec.fixed.v0 = self.float("v0")?;
                    spec.fixed.a = self.float("a")?;
                } else {
                    spec.fixed.gamma = self.float("gamma")?;
                    spec.fixed.d = self.float("d")?;
                }
                spec.variable = Variable {
                    start: self.float("start")?,
                    stop: self.float("stop")?,
                    count: self.count("count")?,
                    scale: Scale::Linear,
                };
                spec.quadrature = self.quadrature()?;
                spec.workers = self.workers()?;
                spec.validate().map_err(sweep_error)?;
                Ok(Job::Spectrum {
                    spec,
                    out: self
                        .path("out")
                        .ok_or_else(|| usage("missing required flag --out for `spectrum`"))?,
                    plot: self.path("plot"),
                    title: self.get("title").unwrap_or("").to_string(),
                })
            }
            Subcommand::Resonances => {
                let (gamma, d) = (self.float("gamma")?, self.float("d")?);
                let (k_min, k_max) = (self.float("kmin")?, self.float("kmax")?);
                for (name, v) in [("gamma", gamma), ("d", d), ("kmin", k_min)] {
                    if v <= 0.0 {
                        return Err(usage(format!("--{name}: must be > 0, got {v}")));
                    }
                }
                if k_max <= k_min {
                    return Err(usage(format!("--kmax: must exceed --kmin, got {k_max}")));
                }
                Ok(Job::Resonances { gamma, d, k_min, k_max })
            }
            Subcommand::Propagate => {
                let potential = self.potential()?;
                let packet = self.packet()?;
                let grid = Grid1D::with_spacing(self.float("z_min")?, self.float("z_max")?, self.float("dz")?)
                    .map_err(flag_error)?;
                let dt = self.float("dt")?;
                let t_max = self.float("t_max")?;
                for (name, v) in [("dt", dt), ("t_max", t_max)] {
                    if v <= 0.0 {
                        return Err(usage(format!("--{name}: must be > 0, got {v}")));
                    }
                }
                let snapshot_times: Vec<f64> = self
                    .get("snapshot_times")
                    .map(|s| {
                        s.split(',')
                            .filter(|p| !p.is_empty())
                            .map(|p| p.parse().expect("canonical"))
                            .collect()
                    })
                    .unwrap_or_default();
                let snapshot_prefix = self.path("snapshot_prefix");
                if !snapshot_times.is_empty() && snapshot_prefix.is_none() {
                    return Err(usage("--snapshot_times needs --snapshot_prefix"));
                }
                Ok(Job::Propagate {
                    potential,
                    packet,
                    grid,
                    dt,
                    t_max,
                    snapshot_times,
                    snapshot_prefix,
                })
            }
        }
    }

    pub fn verbosity(&self) -> u8 {
        self.get("verbosity").and_then(|v| v.parse().ok()).unwrap_or(0).min(3)
    }

    /// `key = value` lines that re-parse to this configuration.
    pub fn to_config_text(&self) -> String {
        let mut s = format!("# tunnel-clock {} configuration\n", self.subcommand.name());
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Output paths named in the configuration.
    pub fn output_paths(&self) -> Vec<&Path> {
        ["out", "plot"]
            .iter()
            .filter_map(|k| self.values.get(*k))
            .map(Path::new)
            .collect()
    }
}

fn quadrature_defaults() -> Vec<(&'static str, String)> {
    let q = QuadratureOptions::default();
    vec![
        ("rel_tol", format!("{}", q.rel_tol)),
        ("window", format!("{}", q.window)),
        ("max_depth", q.max_depth.to_string()),
        ("resonance_split", q.resonance_split.to_string()),
    ]
}

fn fixed_defaults(f: &FixedParams, kind: SweepKind) -> Vec<(&'static str, String)> {
    let mut out = vec![
        ("k0", format!("{}", f.k0)),
        ("sigma", format!("{}", f.sigma)),
        ("z0", format!("{}", f.z0)),
    ];
    match kind {
        SweepKind::Width => out.push(("v0", format!("{}", f.v0))),
        SweepKind::Gamma => out.push(("d", format!("{}", f.d))),
        _ => out.push(("gamma", format!("{}", f.gamma))),
    }
    out
}

fn scale_name(s: Scale) -> &'static str {
    match s {
        Scale::Linear => "linear",
        Scale::Log => "log",
    }
}

/// Library validation errors name the parameter, which is also the flag.
fn flag_error(e: tunnel_clock::Error) -> UsageError {
    match e {
        tunnel_clock::Error::InvalidParameter { name, reason } => usage(format!("--{name}: {reason}")),
        other => usage(other.to_string()),
    }
}

fn sweep_error(e: tunnel_clock::Error) -> UsageError {
    match e {
        tunnel_clock::Error::InvalidSweep(msg) => usage(format!("sweep range: {msg}")),
        other => flag_error(other),
    }
}
