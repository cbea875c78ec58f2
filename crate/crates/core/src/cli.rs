//! Scenario files, the command-line front end and report emission.
//!
//! Exit codes: 0 certified failure (or completed classification), 1 not
//! certified, 2 configuration error, 3 pipeline error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::construct::{build_counterexample, BuildOptions, InnerProblem, Mode};
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::mcatalog::{classify, find_increasing_pair, MClassification, MFunctionSpec, DEFAULT_GRID_POINTS};
use crate::oracle1d::oracle_report;
use crate::verify::{certify, demonstrate_product_necessity, CertVerdict, Certificate, Counterexample, NecessityReport};

pub const EXIT_CERTIFIED: i32 = 0;
pub const EXIT_NOT_CERTIFIED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;

pub const DEFAULT_T_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunMode {
    Ssm,
    StrongCp,
    WeakCp,
    Classify,
    Necessity,
}

impl RunMode {
    fn construction(self) -> Option<Mode> {
        match self {
            RunMode::Ssm => Some(Mode::Ssm),
            RunMode::StrongCp => Some(Mode::StrongCp),
            RunMode::WeakCp => Some(Mode::WeakCp),
            RunMode::Classify | RunMode::Necessity => None,
        }
    }
}

/// Either an inline coefficient or a two-column CSV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MSource {
    Csv { csv: PathBuf },
    Inline(MFunctionSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub domain: DomainSpec,
    #[serde(rename = "M")]
    pub m: MSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    pub mode: RunMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Starting τ of the enlargement search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Upper end of the classification and pair-search grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<usize>,
    pub output_path: PathBuf,
    /// Nodal plot data; next to the report with a `.csv` extension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_path: Option<PathBuf>,
}

impl ScenarioConfig {
    /// The one-dimensional Kirchhoff scenario M(t) = 1 + t on (−π/2, π/2).
    pub fn kirchhoff_example() -> ScenarioConfig {
        ScenarioConfig {
            domain: DomainSpec::Interval { a: -std::f64::consts::FRAC_PI_2, b: std::f64::consts::FRAC_PI_2 },
            m: MSource::Inline(MFunctionSpec::Affine { a: 1.0, b: 1.0 }),
            t1: Some(1.0),
            t2: Some(4.0),
            mode: RunMode::Ssm,
            h: None,
            tau: Some(0.5),
            t_max: None,
            n_grid: None,
            output_path: PathBuf::from("kirchhoff_ssm.json"),
            plot_path: None,
        }
    }

    pub fn from_json(text: &str) -> Result<ScenarioConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a scenario; relative paths inside it resolve against the file's directory.
    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = ScenarioConfig::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let MSource::Csv { csv } = &mut cfg.m {
            if csv.is_relative() {
                *csv = base.join(&*csv);
            }
        }
        if cfg.output_path.is_relative() {
            cfg.output_path = base.join(&cfg.output_path);
        }
        if let Some(p) = cfg.plot_path.as_mut().filter(|p| p.is_relative()) {
            *p = base.join(&*p);
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn m_spec(&self) -> Result<MFunctionSpec> {
        match &self.m {
            MSource::Inline(spec) => {
                spec.validate_shape()?;
                Ok(spec.clone())
            }
            MSource::Csv { csv } => MFunctionSpec::from_csv(csv),
        }
    }

    pub fn validate(&self) -> Result<MFunctionSpec> {
        self.domain.validate()?;
        let spec = self.m_spec()?;
        match (self.t1, self.t2) {
            (Some(t1), Some(t2)) if !(t1 > 0.0 && t2 > t1) => {
                return Err(Error::Config(format!("need 0 < t1 < t2, got t1 = {t1}, t2 = {t2}")));
            }
            (Some(_), None) | (None, Some(_)) => return Err(Error::Config("t1 and t2 must be given together".into())),
            _ => {}
        }
        if self.mode == RunMode::Necessity && self.t1.is_none() {
            return Err(Error::Config("NECESSITY needs t1 and t2".into()));
        }
        for (name, v) in [("h", self.h), ("tau", self.tau), ("t_max", self.t_max)] {
            if let Some(v) = v.filter(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_grid.is_some_and(|n| n < 2) {
            return Err(Error::Config("n_grid must be at least 2".into()));
        }
        Ok(spec)
    }

    pub fn plot_path(&self) -> PathBuf {
        self.plot_path.clone().unwrap_or_else(|| self.output_path.with_extension("csv"))
    }
}

/// JSON with every float written at 17 significant digits.
struct FixedFloats<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FixedFloats<'_> {
    forward!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", format_float(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

#[derive(Debug, Clone, Serialize)]
struct Report<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    kind: &'static str,
    scenario: &'a ScenarioConfig,
    #[serde(flatten)]
    result: &'a T,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Certificate(Box<Certificate>, Box<Counterexample>),
    Classification(MClassification),
    Necessity(NecessityReport),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        let ok = match self {
            Outcome::Certificate(c, _) => c.verdict == CertVerdict::CertifiedFailure,
            Outcome::Classification(_) => true,
            Outcome::Necessity(r) => !r.degenerate && r.rhs_margin > 0.0 && r.ordering_margin > 0.0,
        };
        if ok {
            EXIT_CERTIFIED
        } else {
            EXIT_NOT_CERTIFIED
        }
    }
}

/// Runs the pipeline selected by the scenario's mode.
pub fn execute(cfg: &ScenarioConfig, m: &MFunctionSpec) -> Result<Outcome> {
    let n_grid = cfg.n_grid.unwrap_or(DEFAULT_GRID_POINTS);
    let t_max = cfg.t_max.unwrap_or(DEFAULT_T_MAX);
    let h = cfg.h.unwrap_or_else(|| cfg.domain.default_h());
    match cfg.mode {
        RunMode::Classify => Ok(Outcome::Classification(classify(m, t_max, n_grid)?)),
        RunMode::Necessity => {
            let (t1, t2) = (cfg.t1.unwrap_or_default(), cfg.t2.unwrap_or_default());
            let inner = InnerProblem::new(&cfg.domain, h)?;
            Ok(Outcome::Necessity(demonstrate_product_necessity(m, t1, t2, &inner.eigen, &inner.ops)?))
        }
        mode => {
            let mode = mode.construction().expect("construction mode");
            let (t1, t2) = match (cfg.t1, cfg.t2) {
                (Some(t1), Some(t2)) => (t1, t2),
                _ => {
                    let pair = find_increasing_pair(m, t_max, n_grid)?.ok_or_else(|| {
                        Error::PreconditionViolated(format!("M has no increasing pair on (0, {t_max}]"))
                    })?;
                    (pair.t1, pair.t2)
                }
            };
            let cex = build_counterexample(&cfg.domain, m, t1, t2, mode, BuildOptions { h: Some(h), tau0: cfg.tau })?;
            let cert = certify(&cex, m)?;
            Ok(Outcome::Certificate(Box::new(cert), Box::new(cex)))
        }
    }
}

pub fn report_json(cfg: &ScenarioConfig, outcome: &Outcome) -> String {
    let tool = env!("CARGO_PKG_NAME");
    let version = env!("CARGO_PKG_VERSION");
    match outcome {
        Outcome::Certificate(c, _) => {
            to_json_string(&Report { tool, version, kind: "certificate", scenario: cfg, result: c.as_ref() })
        }
        Outcome::Classification(c) => {
            to_json_string(&Report { tool, version, kind: "classification", scenario: cfg, result: c })
        }
        Outcome::Necessity(r) => to_json_string(&Report { tool, version, kind: "necessity", scenario: cfg, result: r }),
    }
}

/// Nodal columns x[, y], lower, upper, phi1, phi_tau_restricted.
pub fn write_plot<W: Write>(cex: &Counterexample, out: W) -> Result<()> {
    let mesh = &cex.inner.mesh;
    let two_d = mesh.dim() == 2;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(io::Error::other(e));
    let mut header = vec!["x"];
    if two_d {
        header.push("y");
    }
    header.extend(["lower", "upper", "phi1", "phi_tau_restricted"]);
    w.write_record(&header).map_err(csv_err)?;
    for (i, p) in mesh.nodes().iter().enumerate() {
        let mut row = vec![format_float(p[0])];
        if two_d {
            row.push(format_float(p[1]));
        }
        for f in [&cex.lower, &cex.upper, &cex.inner.eigen.phi, &cex.outer.phi_restricted] {
            row.push(format_float(f.values()[i]));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the report document and, for certificates, the plot columns.
pub fn emit_report(cfg: &ScenarioConfig, outcome: &Outcome) -> Result<()> {
    write_file(&cfg.output_path, report_json(cfg, outcome).as_bytes())?;
    if let Outcome::Certificate(_, cex) = outcome {
        let mut buf = Vec::new();
        write_plot(cex, &mut buf)?;
        write_file(&cfg.plot_path(), &buf)?;
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "nonlocal-cp", version, about = "Counterexample certificates for nonlocal Kirchhoff-type operators")]
pub struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Print the one-dimensional reference values, e.g. `--oracle tau=0.5 eps=0.5 alpha=1`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    oracle: Option<Vec<String>>,
    /// Print the scenario (the given one, or a default example) instead of running it.
    #[arg(long, global = true)]
    dump_config: bool,
    /// Override the element size.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Override the report path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and certify the counterexample described by a scenario file.
    Run { config: PathBuf },
    /// Classify the scenario's coefficient M.
    Classify { config: PathBuf },
}

fn parse_oracle(args: &[String]) -> Result<(f64, f64, f64)> {
    let (mut tau, mut eps, mut alpha) = (None, Some(1.0), Some(1.0));
    for arg in args {
        let (k, v) = arg.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got {arg}")))?;
        let v: f64 = v.parse().map_err(|_| Error::Config(format!("{k}: not a number: {v}")))?;
        match k {
            "tau" => tau = Some(v),
            "eps" | "epsilon" => eps = Some(v),
            "alpha" => alpha = Some(v),
            _ => return Err(Error::Config(format!("unknown oracle key {k}"))),
        }
    }
    let tau = tau.ok_or_else(|| Error::Config("oracle needs tau".into()))?;
    let (eps, alpha) = (eps.unwrap_or(1.0), alpha.unwrap_or(1.0));
    if !(tau > 0.0 && eps > 0.0 && eps <= 1.0 && alpha >= 1.0) {
        return Err(Error::Config("oracle needs tau > 0, 0 < eps <= 1, alpha >= 1".into()));
    }
    Ok((tau, eps, alpha))
}

fn print_or_write(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn fail(code: i32, e: &Error) -> i32 {
    eprintln!("error [{}]: {e}", e.kind());
    code
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_CERTIFIED };
            let _ = e.print();
            return code;
        }
    };
    if let Some(kv) = &cli.oracle {
        return match parse_oracle(kv) {
            Ok((tau, eps, alpha)) => match print_or_write(cli.out.as_deref(), &to_json_string(&oracle_report(tau, eps, alpha))) {
                Ok(()) => EXIT_CERTIFIED,
                Err(e) => fail(EXIT_PIPELINE, &e),
            },
            Err(e) => fail(EXIT_CONFIG, &e),
        };
    }
    let (path, forced) = match &cli.command {
        Some(Command::Run { config }) => (Some(config), None),
        Some(Command::Classify { config }) => (Some(config), Some(RunMode::Classify)),
        None if cli.dump_config => (None, None),
        None => {
            eprintln!("nothing to do; see --help");
            return EXIT_CONFIG;
        }
    };
    let mut cfg = match path {
        Some(p) => match ScenarioConfig::load(p) {
            Ok(c) => c,
            Err(e) => return fail(EXIT_CONFIG, &e),
        },
        None => ScenarioConfig::kirchhoff_example(),
    };
    if let Some(mode) = forced {
        cfg.mode = mode;
    }
    if let Some(h) = cli.h {
        cfg.h = Some(h);
    }
    if cli.dump_config {
        return match print_or_write(cli.out.as_deref(), &cfg.to_json()) {
            Ok(()) => EXIT_CERTIFIED,
            Err(e) => fail(EXIT_PIPELINE, &e),
        };
    }
    if let Some(out) = &cli.out {
        cfg.output_path = out.clone();
    }
    let m = match cfg.validate() {
        Ok(m) => m,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    let outcome = match execute(&cfg, &m) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_PIPELINE, &e),
    };
    if let Err(e) = emit_report(&cfg, &outcome) {
        return fail(EXIT_PIPELINE, &e);
    }
    let code = outcome.exit_code();
    if let Outcome::Certificate(c, _) = &outcome {
        match c.verdict {
            CertVerdict::CertifiedFailure => eprintln!("CERTIFIED_FAILURE -> {}", cfg.output_path.display()),
            CertVerdict::NotCertified => eprintln!("NOT_CERTIFIED ({}) -> {}", c.failed.join(", "), cfg.output_path.display()),
        }
    }
    code
}
