//! The `hgt` command line: configuration loading and the five commands.
//!
//! Configuration files are TOML restricted to flat `section.key = value`
//! lines (ordinary `[section]` tables are accepted too). Unknown keys are
//! errors. Relative `data.path` values resolve against the config file's
//! directory. See the README for every key.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::data::MultiResponseDataset;
use crate::diagnostics::residual_intervals;
use crate::engine::ChainConfig;
use crate::error::{HgtError, Result};
use crate::pipeline::{self, BasisChoice, FitConfig, SplitSpec};
use crate::sim::{self, FriedmanConfig, Method};

#[derive(Debug, Parser)]
#[command(
    name = "hgt",
    version,
    about = "Hierarchical generalized transformation models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (flat `section.key = value` TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `chain.seed` (and `sim.seed` for `simulate`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `chain.chains`.
    #[arg(long, global = true)]
    pub chains: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; falls back to HGT_THREADS, then to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the Friedman benchmark and write the RMSE table.
    Simulate {
        /// Comma-separated methods (hgt-sme, saturated, truth).
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
    },
    /// Fit the model to `data.path` and write chains, reports and forecasts.
    Fit,
    /// Rerun the validation and forecast stages from saved chain dumps.
    Forecast,
    /// Summaries, R-hat and residual intervals from saved chain dumps.
    Diagnose,
    /// Write the design and basis matrices for `data.path`.
    ExportBasis,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_end: Option<usize>,
    pub validation_days: Vec<usize>,
    pub test_days: Vec<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSection {
    pub kind: Option<String>,
    pub region_knots: Option<usize>,
    pub shared_knots: Option<usize>,
    pub rank: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub chains: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub mode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastSection {
    pub draws: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub total_cells: Option<usize>,
    pub observed: Option<[usize; 3]>,
    pub trials: Option<u64>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub hide_x2: Option<bool>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub chains: Option<usize>,
    pub rank: Option<usize>,
    pub neighbours: Option<usize>,
    pub methods: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Parsed configuration file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub split: SplitSection,
    pub basis: BasisSection,
    pub chain: ChainSection,
    pub link: LinkSection,
    pub forecast: ForecastSection,
    pub sim: SimSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HgtError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| HgtError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if let Some(p) = &config.data.path {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                config.data.path = Some(base.join(p));
            }
        }
        Ok(config)
    }

    pub fn fit_config(&self) -> Result<FitConfig> {
        let mut fc = FitConfig::default();
        fc.split = SplitSpec {
            train_end: self.split.train_end,
            validation_days: self.split.validation_days.clone(),
            test_days: self.split.test_days.clone(),
        };
        fc.basis = match self.basis.kind.as_deref().unwrap_or("thinplate") {
            "thinplate" => BasisChoice::ThinPlate {
                region_knots: self.basis.region_knots.unwrap_or(10),
                shared_knots: self.basis.shared_knots.unwrap_or(25),
            },
            "moran" => BasisChoice::Moran {
                rank: self.basis.rank.unwrap_or(50),
            },
            other => {
                return Err(HgtError::Config(format!(
                    "basis.kind `{other}` is not one of thinplate, moran"
                )))
            }
        };
        let d = ChainConfig::default();
        fc.chain = ChainConfig {
            iterations: self.chain.iterations.unwrap_or(d.iterations),
            burn_in: self.chain.burn_in.unwrap_or(d.burn_in),
            thin: self.chain.thin.unwrap_or(d.thin),
            chains: self.chain.chains.unwrap_or(d.chains),
            seed: self.chain.seed.unwrap_or(d.seed),
        };
        if let Some(mode) = &self.link.mode {
            fc.link = mode.parse()?;
        }
        if let Some(draws) = self.forecast.draws {
            fc.forecast_draws = draws;
        }
        fc.validate()?;
        Ok(fc)
    }

    pub fn friedman_config(&self) -> Result<(FriedmanConfig, Vec<Method>)> {
        let d = FriedmanConfig::default();
        let s = &self.sim;
        let config = FriedmanConfig {
            total_cells: s.total_cells.unwrap_or(d.total_cells),
            observed: s.observed.unwrap_or(d.observed),
            trials: s.trials.unwrap_or(d.trials),
            replicates: s.replicates.unwrap_or(d.replicates),
            seed: s.seed.unwrap_or(d.seed),
            hide_x2: s.hide_x2.unwrap_or(d.hide_x2),
            iterations: s.iterations.unwrap_or(d.iterations),
            burn_in: s.burn_in.unwrap_or(d.burn_in),
            chains: s.chains.unwrap_or(d.chains),
            basis_rank: s.rank.unwrap_or(d.basis_rank),
            neighbours: s.neighbours.unwrap_or(d.neighbours),
        };
        let methods = match &s.methods {
            Some(names) => names
                .iter()
                .map(|m| m.parse())
                .collect::<Result<Vec<_>>>()?,
            None => vec![Method::HgtSme, Method::Saturated],
        };
        Ok((config, methods))
    }

    fn dataset(&self) -> Result<MultiResponseDataset> {
        let path = self
            .data
            .path
            .as_ref()
            .ok_or_else(|| HgtError::Config("data.path is required".into()))?;
        MultiResponseDataset::read_csv_path(path)
    }
}

/// Thread count from the flag, then HGT_THREADS.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("HGT_THREADS") {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map(Some).map_err(|_| {
            HgtError::Config(format!("HGT_THREADS must be a positive integer, got `{v}`"))
        }),
        _ => Ok(None),
    }
}

fn stage_of(err: &HgtError) -> &'static str {
    match err {
        HgtError::Stage { stage, .. } => stage,
        _ => "setup",
    }
}

fn write_failure_marker(dir: &Path, err: &HgtError) {
    let text = format!(
        "stage: {}\nerror: {err}\noutputs in this directory are incomplete\n",
        stage_of(err)
    );
    let _ = fs::create_dir_all(dir).and_then(|_| fs::write(dir.join("FAILED"), text));
}

struct Context {
    config: RunConfig,
    out: PathBuf,
    seed: Option<u64>,
    chains: Option<usize>,
}

impl Context {
    fn fit_config(&self) -> Result<FitConfig> {
        let mut fc = self.config.fit_config().map_err(|e| e.in_stage("config"))?;
        if let Some(seed) = self.seed {
            fc.chain.seed = seed;
        }
        if let Some(chains) = self.chains {
            fc.chain.chains = chains;
        }
        fc.validate().map_err(|e| e.in_stage("config"))?;
        Ok(fc)
    }

    fn dataset(&self) -> Result<MultiResponseDataset> {
        self.config.dataset().map_err(|e| e.in_stage("ingest"))
    }
}

fn simulate(ctx: &Context, methods: Option<Vec<String>>) -> Result<()> {
    let (mut config, mut chosen) = ctx
        .config
        .friedman_config()
        .map_err(|e| e.in_stage("config"))?;
    if let Some(names) = methods {
        chosen = names
            .iter()
            .map(|m| m.parse())
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_stage("config"))?;
    }
    if let Some(seed) = ctx.seed {
        config.seed = seed;
    }
    if let Some(chains) = ctx.chains {
        config.chains = chains;
    }
    let results = sim::run_benchmark(&config, &chosen).map_err(|e| e.in_stage("simulate"))?;
    let out = &ctx.out;
    sim::write_benchmark_csv(
        &results,
        BufWriter::new(fs::File::create(out.join("benchmark.csv"))?),
    )?;
    sim::write_benchmark_details_csv(
        &results,
        BufWriter::new(fs::File::create(out.join("benchmark_details.csv"))?),
    )?;
    if let Some(r) = results.iter().find(|r| !r.residual_vs_x2.is_empty()) {
        let mut wtr = csv::Writer::from_writer(BufWriter::new(fs::File::create(
            out.join("residual_vs_x2.csv"),
        )?));
        wtr.write_record(["x2", "median_residual"])?;
        for (x, d) in &r.residual_vs_x2 {
            wtr.write_record([x.to_string(), d.to_string()])?;
        }
        wtr.flush()?;
    }
    let failures = results
        .iter()
        .flat_map(|r| r.rows.iter())
        .filter(|row| row.error.is_some())
        .count();
    if failures > 0 {
        eprintln!("{failures} replicate fits failed; see benchmark_details.csv");
    }
    Ok(())
}

fn fit(ctx: &Context) -> Result<()> {
    let config = ctx.fit_config()?;
    let dataset = ctx.dataset()?;
    let prepared = pipeline::prepare(&dataset, &config)?;
    let chains = pipeline::sample_chains(&prepared, &config)?;
    pipeline::write_chain_dumps(&chains, &ctx.out).map_err(|e| e.in_stage("output"))?;
    let report = pipeline::complete(&prepared, &config, chains)?;
    pipeline::write_reports(&prepared, &report, &ctx.out).map_err(|e| e.in_stage("output"))?;
    print_fit_summary(&report);
    Ok(())
}

fn print_fit_summary(report: &pipeline::FitReport) {
    println!(
        "residual zero-containment: {:.4}",
        report.residuals.containment
    );
    if let Some(c) = report.coverage {
        println!("test predictive coverage (95%): {c:.4}");
    }
}

fn forecast(ctx: &Context) -> Result<()> {
    let config = ctx.fit_config()?;
    let dataset = ctx.dataset()?;
    let prepared = pipeline::prepare(&dataset, &config)?;
    let chains = pipeline::read_chain_dumps(&ctx.out).map_err(|e| e.in_stage("load"))?;
    let report = pipeline::complete(&prepared, &config, chains)?;
    if !report.kappa.is_empty() {
        pipeline::write_kappa(&report.kappa, &ctx.out).map_err(|e| e.in_stage("output"))?;
    }
    match &report.forecast {
        Some(f) => {
            pipeline::write_forecast(&prepared, f, &ctx.out).map_err(|e| e.in_stage("output"))?
        }
        None => {
            return Err(
                HgtError::Config("split.test_days is empty; nothing to forecast".into())
                    .in_stage("config"),
            )
        }
    }
    print_fit_summary(&report);
    Ok(())
}

fn diagnose(ctx: &Context) -> Result<()> {
    let chains = pipeline::read_chain_dumps(&ctx.out).map_err(|e| e.in_stage("load"))?;
    let names = pipeline::theta_names_from_layout(&chains[0].theta_layout);
    let run = || -> Result<()> {
        pipeline::write_summary(&chains, &names, &[], &ctx.out)?;
        pipeline::write_rhat(&chains, &names, &ctx.out)?;
        let pooled: Vec<_> = chains
            .iter()
            .flat_map(|c| c.draws.iter().cloned())
            .collect();
        let report = residual_intervals(&pooled, 0.05)?;
        let mut wtr = csv::Writer::from_writer(BufWriter::new(fs::File::create(
            ctx.out.join("residuals.csv"),
        )?));
        wtr.write_record(["cell", "median", "lower", "upper", "contains_zero"])?;
        for (i, (lo, hi)) in report.intervals.iter().enumerate() {
            wtr.write_record([
                i.to_string(),
                report.medians[i].to_string(),
                lo.to_string(),
                hi.to_string(),
                u8::from(*lo <= 0.0 && 0.0 <= *hi).to_string(),
            ])?;
        }
        wtr.flush()?;
        println!("residual zero-containment: {:.4}", report.containment);
        Ok(())
    };
    run().map_err(|e| e.in_stage("diagnostics"))
}

fn export_basis(ctx: &Context) -> Result<()> {
    let config = ctx.fit_config()?;
    let dataset = ctx.dataset()?;
    let prepared = pipeline::prepare(&dataset, &config)?;
    let write = || -> Result<()> {
        prepared
            .basis
            .write_csv(BufWriter::new(fs::File::create(ctx.out.join("basis.csv"))?))?;
        let mut wtr = csv::Writer::from_writer(BufWriter::new(fs::File::create(
            ctx.out.join("design.csv"),
        )?));
        let mut header = vec!["row".to_string()];
        header.extend(prepared.design.labels.iter().cloned());
        wtr.write_record(&header)?;
        for i in 0..prepared.design.nrows() {
            let mut rec = vec![i.to_string()];
            rec.extend(prepared.design.matrix.row(i).iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    };
    write().map_err(|e| e.in_stage("output"))
}

/// Runs a parsed command line. On failure a `FAILED` marker naming the
/// stage is written to the output directory.
pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| e.in_stage("config"))?,
        None => RunConfig::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("hgt-out"));
    let marker = out.join("FAILED");
    let result = (|| -> Result<()> {
        fs::create_dir_all(&out).map_err(|e| HgtError::from(e).in_stage("output"))?;
        if marker.exists() {
            fs::remove_file(&marker)?;
        }
        if let Some(n) = thread_count(cli.threads).map_err(|e| e.in_stage("config"))? {
            if n == 0 {
                return Err(
                    HgtError::Config("--threads must be at least 1".into()).in_stage("config")
                );
            }
            // A second call in the same process keeps the first pool.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        let ctx = Context {
            config,
            out: out.clone(),
            seed: cli.seed,
            chains: cli.chains,
        };
        match cli.command {
            Command::Simulate { methods } => simulate(&ctx, methods),
            Command::Fit => fit(&ctx),
            Command::Forecast => forecast(&ctx),
            Command::Diagnose => diagnose(&ctx),
            Command::ExportBasis => export_basis(&ctx),
        }
    })();
    if let Err(e) = &result {
        write_failure_marker(&out, e);
    }
    result
}

/// Entry point used by the binary. Exit code 0 iff every stage succeeded.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut stderr = std::io::stderr().lock();
            let _ = writeln!(stderr, "error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::LinkMode;

    #[test]
    fn flat_keys_parse() {
        let c = RunConfig::parse(
            "data.path = \"x.csv\"\nsplit.train_end = 76\nsplit.test_days = [78]\nchain.iterations = 50\nchain.burn_in = 10\nlink.mode = \"identity\"\n",
        )
        .unwrap();
        let fc = c.fit_config().unwrap();
        assert_eq!(fc.chain.iterations, 50);
        assert_eq!(fc.split.train_end, Some(76));
        assert_eq!(fc.split.test_days, vec![78]);
        assert_eq!(fc.link, LinkMode::Identity);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("chain.iterationz = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("iterationz"), "{err}");
    }

    #[test]
    fn unknown_basis_and_method_are_rejected() {
        let c = RunConfig::parse("basis.kind = \"wavelet\"\n").unwrap();
        assert!(c.fit_config().is_err());
        let c = RunConfig::parse("sim.methods = [\"bart\"]\n").unwrap();
        let err = c.friedman_config().unwrap_err().to_string();
        assert!(err.contains("available methods"), "{err}");
    }

    #[test]
    fn empty_config_is_the_default_benchmark() {
        let (c, m) = RunConfig::default().friedman_config().unwrap();
        assert_eq!(c, FriedmanConfig::default());
        assert_eq!(m, vec![Method::HgtSme, Method::Saturated]);
    }

    #[test]
    fn relative_data_path_follows_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "data.path = \"series.csv\"\n").unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.data.path.unwrap(), dir.path().join("series.csv"));
    }

    #[test]
    fn missing_data_marks_ingest_stage() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "data.path = \"absent.csv\"\n").unwrap();
        let cli = Cli::try_parse_from([
            "hgt",
            "fit",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .unwrap();
        let err = run(cli).unwrap_err();
        assert_eq!(stage_of(&err), "ingest");
        let marker = fs::read_to_string(dir.path().join("out/FAILED")).unwrap();
        assert!(marker.starts_with("stage: ingest\n"), "{marker}");
    }
}
