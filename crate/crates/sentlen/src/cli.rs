//! Command-line front end.
//!
//! Every command prints its TSV report on stdout. With `--out DIR` the report
//! (and, for `fit` and `validate`, the other artifacts) is also written to
//! `DIR` together with a `manifest.txt` recording the run's settings.
//!
//! Exit codes: 0 on success, 1 for bad input or usage, 2 when the numerics
//! fail.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sentlen_core::divergence::{inherent_noise, DivergenceError, SplitKind, Tolerance};
use sentlen_core::evidence::{self, SampleSize};
use sentlen_core::fit::{FitConfig, FitError};
use sentlen_core::histogram::{EmpiricalDistribution, LengthHistogram, DEFAULT_CUTOFF};
use sentlen_core::objective::ObjectiveError;
use sentlen_core::validation::{self, ValidationConfig, ValidationError};
use sentlen_core::walk::{MixtureModel, ModelStructure};
use thiserror::Error;

use crate::io::{read_histogram, read_lengths, InputError, InputFormat};
use crate::manifest::{RunManifest, ToleranceSource};
use crate::model_file::{self, ModelFileError};
use crate::{parallel, report};

#[derive(Debug, Parser)]
#[command(
    name = "sentlen",
    version,
    about = "Sentence lengths as random-walk return times"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus statistics: size, mean, 99.9th percentile, max, tail masses.
    Stats {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Inherent noise: symmetric divergence between the two halves.
    Noise {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fit templates and write one model file per template.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        /// Template id such as `1.k3` or `2.k1-3`; repeatable.
        #[arg(
            long = "model",
            required_unless_present = "all",
            conflicts_with = "all"
        )]
        models: Vec<ModelStructure>,
        /// All 93 templates.
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        fit: FitArgs,
        /// Directory for `<id>.model`, `fits.tsv` and `manifest.txt`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evidence comparison of fitted models.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        /// Directory of `.model` files, as written by `fit`.
        #[arg(long)]
        fitted: PathBuf,
        #[command(flatten)]
        tolerance: ToleranceArgs,
        /// Comma-separated sample sizes; `k`, `M`, `G` suffixes and `inf`.
        #[arg(long, value_parser = parse_n_grid, default_value = "1k,10k,100k,1M,1G,inf")]
        n_grid: NGrid,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Description-length comparison of fitted models.
    Mdl {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        fitted: PathBuf,
        #[command(flatten)]
        tolerance: ToleranceArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Draw walk lengths from a model file.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// One `length 1` row per walk in draw order instead of a histogram,
        /// so the halves used by `noise` are preserved.
        #[arg(long)]
        ordered: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Synthetic end-to-end run on walks from 1.k3 with p = (0.5, 0.25, 0.25).
    Validate {
        #[arg(long, default_value_t = 2_000_000)]
        count: usize,
        #[arg(long, value_parser = parse_n_grid, default_value = "1k,10k,100k,1M,1G,inf")]
        n_grid: NGrid,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus (one sentence per line) or `length<TAB>count` table; `-` is stdin.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// Longest sentence kept.
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    pub cutoff: u32,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Also write the report and a manifest to this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitMode {
    /// First half of the records against the second.
    First,
    /// Seeded shuffle first.
    Random,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, value_enum, default_value_t = SplitMode::First)]
    pub split: SplitMode,
    /// Shuffle seed for `--split random`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SplitArgs {
    fn kind(&self) -> SplitKind {
        match self.split {
            SplitMode::First => SplitKind::FirstSecond,
            SplitMode::Random => SplitKind::Random(self.seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ToleranceArg {
    /// Measure on the input.
    Auto,
    Nats(f64),
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    /// `auto` (measure on the input), or a value in nats; `0` disables it.
    #[arg(long, value_parser = parse_tolerance, default_value = "auto")]
    pub tolerance: ToleranceArg,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Adagrad base step size.
    #[arg(long, default_value_t = FitConfig::default().learning_rate)]
    pub eta: f64,
    #[arg(long, default_value_t = FitConfig::default().grad_tol)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = FitConfig::default().max_iters)]
    pub max_iters: usize,
    /// Run seed. Fitting itself is deterministic; `validate` seeds its
    /// sampler with it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl FitArgs {
    fn config(&self) -> FitConfig {
        FitConfig {
            learning_rate: self.eta,
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            seed: self.seed,
            ..FitConfig::default()
        }
    }

    fn record(&self, m: &mut RunManifest) {
        let c = self.config();
        m.set("eta", c.learning_rate)
            .set("fallback_eta", c.fallback_rate)
            .set("grad_tol", c.grad_tol)
            .set("max_iters", c.max_iters)
            .set("fallback_iters", c.fallback_iters);
        m.seed = Some(c.seed);
    }
}

/// Wrapper so clap treats the grid as one value.
#[derive(Debug, Clone, PartialEq)]
pub struct NGrid(pub Vec<SampleSize>);

pub fn parse_sample_size(s: &str) -> Result<SampleSize, String> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") {
        return Ok(SampleSize::Infinite);
    }
    let (num, scale) = match s.char_indices().last() {
        Some((i, 'k')) => (&s[..i], 1e3),
        Some((i, 'M')) => (&s[..i], 1e6),
        Some((i, 'G')) => (&s[..i], 1e9),
        _ => (s, 1.0),
    };
    let n: f64 = num
        .parse()
        .map_err(|_| format!("`{s}` is not a sample size"))?;
    SampleSize::finite(n * scale).map_err(|e| format!("`{s}`: {e}"))
}

fn parse_n_grid(s: &str) -> Result<NGrid, String> {
    let grid = s
        .split(',')
        .map(parse_sample_size)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(NGrid(grid))
}

fn parse_tolerance(s: &str) -> Result<ToleranceArg, String> {
    if s == "auto" {
        return Ok(ToleranceArg::Auto);
    }
    let x: f64 = s
        .parse()
        .map_err(|_| format!("`{s}` is neither `auto` nor a number"))?;
    Tolerance::new(x).map_err(|e| e.to_string())?;
    Ok(ToleranceArg::Nats(x))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    ModelFile(#[from] ModelFileError),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

impl From<DivergenceError> for CliError {
    fn from(e: DivergenceError) -> Self {
        match e {
            DivergenceError::Histogram(_) | DivergenceError::NegativeTolerance(_) => {
                CliError::Usage(e.to_string())
            }
            DivergenceError::NotADistribution { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<evidence::EvidenceError> for CliError {
    fn from(e: evidence::EvidenceError) -> Self {
        match e {
            evidence::EvidenceError::Objective(ObjectiveError::Unfittable { .. }) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        match e {
            ValidationError::TooFewSamples => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn out_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.to_owned(),
        source,
    }
}

/// Files a command writes under `--out`, besides the manifest.
struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, name: impl Into<String>, text: impl Into<String>) {
        self.files.push((name.into(), text.into()));
    }

    fn write(&self, dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(out_err(dir))?;
        for (name, text) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(out_err(&p))?;
        }
        manifest.write(dir).map_err(out_err(dir))
    }
}

fn print(text: &str) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush())
        .map_err(out_err(Path::new("<stdout>")))
}

/// Prints `report` and, with `--out`, writes it as `name` plus the manifest.
fn finish(
    out: &OutArgs,
    name: &str,
    report: String,
    manifest: &RunManifest,
) -> Result<(), CliError> {
    if let Some(dir) = &out.out {
        let mut files = Outputs::new();
        files.add(name, report.clone());
        files.write(dir, manifest)?;
    }
    print(&report)
}

fn manifest_for(command: &str, input: &InputArgs) -> RunManifest {
    let mut m = RunManifest::new(command);
    m.inputs.push(input.input.clone());
    m.cutoff = Some(input.cutoff);
    m.set(
        "format",
        format!("{:?}", input.format.resolve(&input.input)).to_lowercase(),
    );
    m
}

fn load(input: &InputArgs) -> Result<(LengthHistogram, EmpiricalDistribution), CliError> {
    let (hist, _) = read_histogram(&input.input, input.format, input.cutoff)?;
    let data = hist.empirical().map_err(|source| InputError::Histogram {
        path: input.input.clone(),
        source,
    })?;
    Ok((hist, data))
}

fn load_models(dir: &Path) -> Result<Vec<MixtureModel>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|source| InputError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut paths = Vec::new();
    for e in entries {
        let p = e
            .map_err(|source| InputError::Io {
                path: dir.to_owned(),
                source,
            })?
            .path();
        if p.extension().is_some_and(|x| x == "model") {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!(
            "no .model files in {}",
            dir.display()
        )));
    }
    let mut models = Vec::with_capacity(paths.len());
    for p in paths {
        let m =
            model_file::read(&p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
        models.push(m);
    }
    Ok(models)
}

fn resolve_tolerance(
    t: &ToleranceArgs,
    input: &InputArgs,
    manifest: &mut RunManifest,
) -> Result<Tolerance, CliError> {
    let tol = match t.tolerance {
        ToleranceArg::Nats(x) => {
            manifest.tolerance = Some(ToleranceSource::Explicit(x));
            x
        }
        ToleranceArg::Auto => {
            let lengths = read_lengths(&input.input, input.format, input.cutoff)?;
            let noise = inherent_noise(&lengths, t.split.kind())?;
            manifest.tolerance = Some(ToleranceSource::Measured(noise.delta));
            manifest.set("split", report::split_name(noise.split_kind));
            noise.delta
        }
    };
    Tolerance::new(tol).map_err(CliError::from)
}

fn stats(input: &InputArgs, out: &OutArgs) -> Result<(), CliError> {
    let (hist, ingest) = read_histogram(&input.input, input.format, input.cutoff)?;
    let summary = hist.summary().map_err(|source| InputError::Histogram {
        path: input.input.clone(),
        source,
    })?;
    let manifest = manifest_for("stats", input);
    finish(
        out,
        "stats.tsv",
        report::summary(&summary, &hist, &ingest),
        &manifest,
    )
}

fn noise(input: &InputArgs, split: &SplitArgs, out: &OutArgs) -> Result<(), CliError> {
    let lengths = read_lengths(&input.input, input.format, input.cutoff)?;
    let noise = inherent_noise(&lengths, split.kind())?;
    let mut manifest = manifest_for("noise", input);
    manifest.set("split", report::split_name(noise.split_kind));
    finish(out, "noise.tsv", report::noise(&noise), &manifest)
}

fn fit(
    input: &InputArgs,
    models: &[ModelStructure],
    all: bool,
    args: &FitArgs,
    out: &Path,
) -> Result<(), CliError> {
    let (_, data) = load(input)?;
    let templates = if all {
        ModelStructure::all()
    } else {
        models.to_vec()
    };
    let table = parallel::fit_templates(&data, &templates, &args.config());

    let mut manifest = manifest_for("fit", input);
    args.record(&mut manifest);
    let ids: Vec<String> = templates.iter().map(ToString::to_string).collect();
    manifest.set("templates", ids.join(","));

    let fits_tsv = report::fits(&table);
    let mut files = Outputs::new();
    for (s, r) in &table {
        if let Ok(f) = r {
            files.add(format!("{s}.model"), model_file::to_string(&f.model));
        }
    }
    files.add("fits.tsv", fits_tsv.clone());
    files.write(out, &manifest)?;
    print(&fits_tsv)?;

    let numeric = table.iter().find_map(|(_, r)| match r {
        Err(e @ FitError::NonFinite { .. }) => Some(e.to_string()),
        _ => None,
    });
    match numeric {
        Some(e) => Err(CliError::Numerical(e)),
        None if table.iter().all(|(_, r)| r.is_err()) => {
            Err(CliError::Usage("no template could be fitted".into()))
        }
        None => Ok(()),
    }
}

fn compare(
    input: &InputArgs,
    fitted: &Path,
    tolerance: &ToleranceArgs,
    grid: &NGrid,
    out: &OutArgs,
) -> Result<(), CliError> {
    let (_, data) = load(input)?;
    let models = load_models(fitted)?;
    let mut manifest = manifest_for("compare", input);
    manifest.inputs.push(fitted.to_owned());
    manifest.n_grid = grid.0.clone();
    let tol = resolve_tolerance(tolerance, input, &mut manifest)?;
    let scores = parallel::score_all(&data, &models, tol)?;
    let report = evidence::compare_scores(scores, tol, &grid.0);
    finish(out, "compare.tsv", report::comparison(&report), &manifest)
}

fn mdl(
    input: &InputArgs,
    fitted: &Path,
    tolerance: &ToleranceArgs,
    out: &OutArgs,
) -> Result<(), CliError> {
    let (_, data) = load(input)?;
    let models = load_models(fitted)?;
    let mut manifest = manifest_for("mdl", input);
    manifest.inputs.push(fitted.to_owned());
    let tol = resolve_tolerance(tolerance, input, &mut manifest)?;
    let report = parallel::mdl_compare(&data, &models, tol);
    finish(out, "mdl.tsv", report::mdl(&report), &manifest)
}

fn sample(
    model: &Path,
    count: usize,
    seed: u64,
    ordered: bool,
    out: &OutArgs,
) -> Result<(), CliError> {
    let m = model_file::read(model)?;
    let (lengths, rejected) = validation::sample_walks(&m, count, seed);
    let mut manifest = RunManifest::new("sample");
    manifest.inputs.push(model.to_owned());
    manifest.seed = Some(seed);
    manifest
        .set("count", count)
        .set("ordered", ordered)
        .set("rejected", rejected);
    let text = if ordered {
        let mut s = String::from("length\tcount\n");
        for x in &lengths {
            s.push_str(&format!("{x}\t1\n"));
        }
        s
    } else {
        let cutoff = lengths.iter().copied().max().unwrap_or(1).max(1);
        let hist = LengthHistogram::from_lengths(&lengths, cutoff)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        report::lengths(&hist)
    };
    finish(out, "lengths.tsv", text, &manifest)
}

fn validate(count: usize, grid: &NGrid, args: &FitArgs, out: &OutArgs) -> Result<(), CliError> {
    let cfg = ValidationConfig {
        count,
        seed: args.seed,
        fit: args.config(),
        n_grid: grid.0.clone(),
        ..ValidationConfig::default()
    };
    let r = validation::run(&cfg, parallel::fit_templates)?;
    let summary = report::validation(&r);

    let mut manifest = RunManifest::new("validate");
    args.record(&mut manifest);
    manifest.n_grid = grid.0.clone();
    manifest.tolerance = Some(ToleranceSource::Measured(r.noise.delta));
    manifest
        .set("count", count)
        .set("split", report::split_name(r.noise.split_kind));
    if let Some(dir) = &out.out {
        let mut files = Outputs::new();
        files.add("validation.tsv", summary.clone());
        files.add("truth.model", model_file::to_string(&r.truth));
        files.add("lengths.tsv", report::lengths(&r.histogram));
        files.add("noise.tsv", report::noise(&r.noise));
        files.add("fits.tsv", report::fits(&r.fits));
        files.add("compare.tsv", report::comparison(&r.bayes));
        files.add(
            "compare_without_true.tsv",
            report::comparison(&r.bayes_without_true),
        );
        files.add("mdl.tsv", report::mdl(&r.mdl));
        files.add("mdl_without_true.tsv", report::mdl(&r.mdl_without_true));
        for f in r.fitted() {
            files.add(
                format!("fitted/{}.model", f.id()),
                model_file::to_string(&f.model),
            );
        }
        std::fs::create_dir_all(dir.join("fitted")).map_err(out_err(dir))?;
        files.write(dir, &manifest)?;
    }
    print(&summary)
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Stats { input, out } => stats(input, out),
        Command::Noise { input, split, out } => noise(input, split, out),
        Command::Fit {
            input,
            models,
            all,
            fit: args,
            out,
        } => fit(input, models, *all, args, out),
        Command::Compare {
            input,
            fitted,
            tolerance,
            n_grid,
            out,
        } => compare(input, fitted, tolerance, n_grid, out),
        Command::Mdl {
            input,
            fitted,
            tolerance,
            out,
        } => mdl(input, fitted, tolerance, out),
        Command::Sample {
            model,
            count,
            seed,
            ordered,
            out,
        } => sample(model, *count, *seed, *ordered, out),
        Command::Validate {
            count,
            n_grid,
            fit: args,
            out,
        } => validate(*count, n_grid, args, out),
    }
}

/// Parses `args` and runs the command. Usage errors exit with 1; `--help`
/// and `--version` with 0.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sentlen: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
