//! Day-split fitting pipeline: geometry, design, basis, the three
//! algorithms and the diagnostic reports written by the `fit` command.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::basis::{
    assemble_joint_basis, morans_basis, BasisMatrix, DesignMatrix, JointLayout, KnotGrid,
};
use crate::data::{MultiResponseDataset, Observation, ResponseKind};
use crate::diagnostics::{
    gelman_rubin, nearest_rank, predictive_coverage, residual_intervals, summarize,
    summarize_columns, summary_rows, write_long_csv, IntervalReport, DEFAULT_PERCENTILES,
};
use crate::engine::{
    check_forecast_geometry, read_dump, run_algorithm2, run_algorithm3, run_chains, write_dump,
    ChainConfig, ChainOutput, ForecastCell, ForecastOutput, LinkMode, StoredDraw,
    TransformSettings, ValidationLink,
};
use crate::error::{HgtError, Result};
use crate::sme::{shared_effect_summary, DaySummary, SmeModel, SmePriors};
use crate::transform::TransformHyper;

#[derive(Clone, Debug, PartialEq)]
pub enum BasisChoice {
    /// Joint thin-plate basis over days: a shared block plus per-region and
    /// per-series blocks.
    ThinPlate {
        region_knots: usize,
        shared_knots: usize,
    },
    /// Moran basis on a graph linking consecutive days of one series and
    /// all rows of one day.
    Moran { rank: usize },
}

impl Default for BasisChoice {
    fn default() -> Self {
        BasisChoice::ThinPlate {
            region_knots: 10,
            shared_knots: 25,
        }
    }
}

/// Training is days `1..=train_end`; validation and test days come after.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SplitSpec {
    /// `None` trains on every day not used for validation or testing.
    pub train_end: Option<usize>,
    pub validation_days: Vec<usize>,
    pub test_days: Vec<usize>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.train_end == Some(0) {
            return Err(HgtError::Config(
                "split.train_end must be at least 1".into(),
            ));
        }
        let last_train = self.train_end.unwrap_or(0);
        if let Some(d) = self.validation_days.iter().find(|&&d| d <= last_train) {
            return Err(HgtError::Config(format!(
                "validation day {d} does not follow the training days"
            )));
        }
        let last_val = self
            .validation_days
            .iter()
            .copied()
            .max()
            .unwrap_or(last_train);
        if let Some(d) = self
            .test_days
            .iter()
            .find(|&&d| d <= last_val.max(last_train))
        {
            return Err(HgtError::Config(format!(
                "test day {d} does not follow the training and validation days"
            )));
        }
        Ok(())
    }

    fn train_end_for(&self, dataset: &MultiResponseDataset) -> usize {
        self.train_end.unwrap_or_else(|| {
            let held: Vec<usize> = self
                .validation_days
                .iter()
                .chain(&self.test_days)
                .copied()
                .collect();
            held.iter()
                .copied()
                .min()
                .map(|d| d.saturating_sub(1))
                .unwrap_or_else(|| dataset.max_day())
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub split: SplitSpec,
    pub basis: BasisChoice,
    pub chain: ChainConfig,
    pub link: LinkMode,
    /// Predictive draws per test cell.
    pub forecast_draws: usize,
    pub transform: TransformSettings,
    pub priors: SmePriors,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            split: SplitSpec::default(),
            basis: BasisChoice::default(),
            chain: ChainConfig::default(),
            link: LinkMode::Identity,
            forecast_draws: 1000,
            transform: TransformSettings::default(),
            priors: SmePriors::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.chain.validate()?;
        self.priors.validate()?;
        self.transform.prior.validate()?;
        self.transform.init.validate()?;
        match self.basis {
            BasisChoice::Moran { rank } if rank == 0 => {
                return Err(HgtError::Config("basis.rank must be at least 1".into()))
            }
            BasisChoice::ThinPlate {
                region_knots,
                shared_knots,
            } if region_knots < 2 || shared_knots < 2 => {
                return Err(HgtError::Config(
                    "thin-plate grids need at least 2 knots".into(),
                ))
            }
            _ => {}
        }
        if self.link == LinkMode::Linear && self.split.validation_days.is_empty() {
            return Err(HgtError::Config(
                "link.mode = linear needs validation days".into(),
            ));
        }
        if !self.split.test_days.is_empty() && self.forecast_draws == 0 {
            return Err(HgtError::Config("forecast.draws must be positive".into()));
        }
        Ok(())
    }
}

/// Stable label of the series a row belongs to.
pub fn series_label(obs: &Observation) -> String {
    match obs.kind {
        ResponseKind::Poisson => {
            let what = if obs.death_flag {
                "deaths"
            } else if obs.recovery_flag {
                "recoveries"
            } else {
                "cases"
            };
            format!("poisson:{}:{what}", obs.region.as_deref().unwrap_or(""))
        }
        kind => kind.name().to_string(),
    }
}

/// Per-kind intercepts, death and recovery indicators (when some count row
/// carries them) and region indicators with the first region as baseline.
pub fn design_matrix(dataset: &MultiResponseDataset) -> Result<DesignMatrix> {
    let kinds = dataset.kinds_present();
    let obs = &dataset.observations;
    let has_death = obs.iter().any(|o| o.death_flag);
    let has_recovery = obs.iter().any(|o| o.recovery_flag);
    let regions = dataset.regions();
    let mut labels: Vec<String> = kinds.iter().map(|k| format!("{k}:intercept")).collect();
    if has_death {
        labels.push("death_flag".into());
    }
    if has_recovery {
        labels.push("recovery_flag".into());
    }
    let region_start = labels.len();
    labels.extend(regions.iter().skip(1).map(|r| format!("region:{r}")));
    let region_index: HashMap<&str, usize> = regions
        .iter()
        .enumerate()
        .map(|(i, r)| (r.as_str(), i))
        .collect();
    let mut x = DMatrix::zeros(obs.len(), labels.len());
    for (i, o) in obs.iter().enumerate() {
        let k = kinds
            .iter()
            .position(|k| *k == o.kind)
            .expect("kind present");
        x[(i, k)] = 1.0;
        let mut col = kinds.len();
        if has_death {
            x[(i, col)] = f64::from(u8::from(o.death_flag));
            col += 1;
        }
        if has_recovery {
            x[(i, col)] = f64::from(u8::from(o.recovery_flag));
        }
        if let Some(r) = &o.region {
            let idx = region_index[r.as_str()];
            if idx > 0 {
                x[(i, region_start + idx - 1)] = 1.0;
            }
        }
    }
    let design = DesignMatrix::new(x, labels)?;
    design.check_full_rank()?;
    Ok(design)
}

/// Links consecutive days of the same series and every pair of rows
/// observed on the same day.
pub fn temporal_adjacency(dataset: &MultiResponseDataset) -> DMatrix<f64> {
    let obs = &dataset.observations;
    let n = obs.len();
    let mut w = DMatrix::zeros(n, n);
    let mut by_series: HashMap<String, Vec<usize>> = HashMap::new();
    let mut by_day: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, o) in obs.iter().enumerate() {
        by_series.entry(series_label(o)).or_default().push(i);
        by_day.entry(o.day).or_default().push(i);
    }
    for rows in by_series.values() {
        for &a in rows {
            for &b in rows {
                if obs[a].day + 1 == obs[b].day {
                    w[(a, b)] = 1.0;
                    w[(b, a)] = 1.0;
                }
            }
        }
    }
    for rows in by_day.values() {
        for &a in rows {
            for &b in rows {
                if a != b {
                    w[(a, b)] = 1.0;
                }
            }
        }
    }
    w
}

/// Geometry, design, basis and model, everything that precedes sampling.
pub struct Prepared {
    /// Rows used by any split, in input order.
    pub geometry: MultiResponseDataset,
    pub train_rows: Vec<usize>,
    pub validation_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub design: DesignMatrix,
    pub basis: BasisMatrix,
    pub layout: Option<JointLayout>,
    pub model: SmeModel,
    pub train: MultiResponseDataset,
}

pub fn prepare(dataset: &MultiResponseDataset, config: &FitConfig) -> Result<Prepared> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let train_end = config.split.train_end_for(dataset);
    let in_split = |day: usize| {
        day <= train_end
            || config.split.validation_days.contains(&day)
            || config.split.test_days.contains(&day)
    };
    let rows: Vec<usize> = (0..dataset.len())
        .filter(|&i| in_split(dataset.observations[i].day))
        .collect();
    let geometry = dataset.subset(&rows);
    let pick = |pred: &dyn Fn(usize) -> bool| -> Vec<usize> {
        (0..geometry.len())
            .filter(|&i| pred(geometry.observations[i].day))
            .collect()
    };
    let train_rows = pick(&|d| d <= train_end);
    let validation_rows = pick(&|d| config.split.validation_days.contains(&d));
    let test_rows = pick(&|d| config.split.test_days.contains(&d));
    if train_rows.is_empty() {
        return Err(
            HgtError::Config(format!("no observations on or before day {train_end}"))
                .in_stage("split"),
        );
    }
    let train = geometry.subset(&train_rows);
    check_forecast_geometry(&train, &geometry.subset(&validation_rows))
        .map_err(|e| e.in_stage("split"))?;
    check_forecast_geometry(&train, &geometry.subset(&test_rows))
        .map_err(|e| e.in_stage("split"))?;

    let design = design_matrix(&geometry).map_err(|e| e.in_stage("design"))?;
    let (basis, layout) = match config.basis {
        BasisChoice::ThinPlate {
            region_knots,
            shared_knots,
        } => {
            let (b, l) = KnotGrid::equally_spaced(region_knots)
                .and_then(|r| KnotGrid::equally_spaced(shared_knots).map(|s| (r, s)))
                .and_then(|(r, s)| assemble_joint_basis(&geometry, &r, &s))
                .map_err(|e| e.in_stage("basis"))?;
            (b, Some(l))
        }
        BasisChoice::Moran { rank } => {
            let w = temporal_adjacency(&geometry);
            let b = morans_basis(&design, &w, rank.min(geometry.len()))
                .map_err(|e| e.in_stage("basis"))?;
            (b, None)
        }
    };
    let model = SmeModel::new(
        design.matrix.clone(),
        basis.matrix.clone(),
        train_rows.clone(),
        config.priors,
    )
    .map_err(|e| e.in_stage("model"))?;
    Ok(Prepared {
        geometry,
        train_rows,
        validation_rows,
        test_rows,
        design,
        basis,
        layout,
        model,
        train,
    })
}

/// Algorithm 1 on the training rows, one chain per configured chain.
pub fn sample_chains(prepared: &Prepared, config: &FitConfig) -> Result<Vec<ChainOutput>> {
    run_chains(
        &prepared.train.observations,
        &config.transform,
        &prepared.model,
        &config.chain,
        &prepared.train.fingerprint(),
    )
    .map_err(|e| e.in_stage("algorithm1"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub chains: Vec<ChainOutput>,
    pub kappa: Vec<ValidationLink>,
    pub forecast: Option<ForecastOutput>,
    /// 95% residual intervals on the training cells.
    pub residuals: IntervalReport,
    /// Share of test values inside their 95% predictive interval.
    pub coverage: Option<f64>,
}

/// Algorithms 2 and 3 plus residual and coverage diagnostics.
pub fn complete(
    prepared: &Prepared,
    config: &FitConfig,
    chains: Vec<ChainOutput>,
) -> Result<FitReport> {
    let fingerprint = prepared.train.fingerprint();
    if let Some(c) = chains.iter().find(|c| c.fingerprint != fingerprint) {
        return Err(HgtError::Config(format!(
            "chain {} was fitted to data with fingerprint {}, not {fingerprint}",
            c.chain, c.fingerprint
        ))
        .in_stage("load"));
    }
    let kappa = if prepared.validation_rows.is_empty() {
        Vec::new()
    } else {
        let validation = prepared.geometry.subset(&prepared.validation_rows);
        run_algorithm2(
            &prepared.model,
            &chains,
            &validation.observations,
            &prepared.validation_rows,
            config.link,
            &config.chain,
            &config.transform.slice,
        )
        .map_err(|e| e.in_stage("algorithm2"))?
    };
    let (forecast, coverage) = if prepared.test_rows.is_empty() {
        (None, None)
    } else {
        let cells: Vec<ForecastCell> = prepared
            .test_rows
            .iter()
            .map(|&r| ForecastCell::from_observation(r, &prepared.geometry.observations[r]))
            .collect();
        let out = run_algorithm3(
            &prepared.model,
            &chains,
            &kappa,
            &cells,
            config.forecast_draws,
            config.chain.seed,
        )
        .map_err(|e| e.in_stage("algorithm3"))?;
        let draws: Vec<(usize, Vec<f64>)> = prepared
            .test_rows
            .iter()
            .copied()
            .zip(out.draws.iter().cloned())
            .collect();
        let held: Vec<(usize, f64)> = prepared
            .test_rows
            .iter()
            .map(|&r| (r, prepared.geometry.observations[r].value))
            .collect();
        let cov =
            predictive_coverage(&draws, &held, 0.05).map_err(|e| e.in_stage("diagnostics"))?;
        (Some(out), Some(cov))
    };
    let pooled = pooled_draws(&chains);
    let residuals = residual_intervals(&pooled, 0.05).map_err(|e| e.in_stage("diagnostics"))?;
    Ok(FitReport {
        chains,
        kappa,
        forecast,
        residuals,
        coverage,
    })
}

pub fn run_fit(
    dataset: &MultiResponseDataset,
    config: &FitConfig,
) -> Result<(Prepared, FitReport)> {
    let prepared = prepare(dataset, config)?;
    let chains = sample_chains(&prepared, config)?;
    let report = complete(&prepared, config, chains)?;
    Ok((prepared, report))
}

fn pooled_draws(chains: &[ChainOutput]) -> Vec<StoredDraw> {
    chains
        .iter()
        .flat_map(|c| c.draws.iter().cloned())
        .collect()
}

/// Names of the stored parameter coordinates, design labels for beta.
pub fn theta_names(prepared: &Prepared) -> Vec<String> {
    let mut names: Vec<String> = prepared
        .design
        .labels
        .iter()
        .map(|l| format!("beta[{l}]"))
        .collect();
    names.extend((0..prepared.basis.ncols()).map(|k| format!("eta[{k}]")));
    names.extend(["sigma2", "sigma_eta2", "sigma_xi2"].map(String::from));
    names
}

/// Names from a dump's layout, for use without the design.
pub fn theta_names_from_layout(layout: &[(String, usize)]) -> Vec<String> {
    layout
        .iter()
        .flat_map(|(name, len)| {
            if *len == 1 {
                vec![name.clone()]
            } else {
                (0..*len).map(|k| format!("{name}[{k}]")).collect()
            }
        })
        .collect()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn write_chain_dumps(chains: &[ChainOutput], dir: &Path) -> Result<()> {
    for c in chains {
        let mut w = create(dir, &format!("chain_{}.dump", c.chain))?;
        write_dump(c, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

/// Reads `chain_<k>.dump` for k = 0, 1, ... until one is missing.
pub fn read_chain_dumps(dir: &Path) -> Result<Vec<ChainOutput>> {
    let mut chains = Vec::new();
    loop {
        let path = dir.join(format!("chain_{}.dump", chains.len()));
        if !path.exists() {
            break;
        }
        let mut c = read_dump(BufReader::new(File::open(&path)?))?;
        c.chain = chains.len();
        chains.push(c);
    }
    if chains.is_empty() {
        return Err(HgtError::Config(format!(
            "no chain_0.dump in {}",
            dir.display()
        )));
    }
    Ok(chains)
}

/// Posterior summaries of the hyperparameters and stored parameters.
pub fn write_summary(
    chains: &[ChainOutput],
    names: &[String],
    kappa: &[ValidationLink],
    dir: &Path,
) -> Result<()> {
    let pooled = pooled_draws(chains);
    let hyper: Vec<Vec<f64>> = pooled.iter().map(|d| d.hyper.to_vec()).collect();
    let mut ids: Vec<String> = TransformHyper::NAMES
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut summaries = Vec::new();
    for j in 0..ids.len() {
        let col: Vec<f64> = hyper.iter().map(|h| h[j]).collect();
        summaries.push(summarize(&col, &DEFAULT_PERCENTILES)?);
    }
    ids.extend(names.iter().cloned());
    summaries.extend(summarize_columns(
        &pooled,
        |d| d.theta.as_slice(),
        &DEFAULT_PERCENTILES,
    )?);
    for (j, name) in ValidationLink::NAMES.iter().enumerate() {
        if kappa.is_empty() {
            break;
        }
        let col: Vec<f64> = kappa.iter().map(|k| k.to_vec()[j]).collect();
        ids.push(format!("kappa[{name}]"));
        summaries.push(summarize(&col, &DEFAULT_PERCENTILES)?);
    }
    write_long_csv(
        create(dir, "summary.csv")?,
        "parameter",
        summary_rows(&ids, &summaries),
    )
}

/// Potential scale reduction of the hyperparameters and scalar parameters.
/// Needs at least two chains; otherwise nothing is written.
pub fn write_rhat(chains: &[ChainOutput], names: &[String], dir: &Path) -> Result<bool> {
    if chains.len() < 2 || chains.iter().any(|c| c.draws.len() < 10) {
        return Ok(false);
    }
    let mut wtr = csv::Writer::from_writer(create(dir, "rhat.csv")?);
    wtr.write_record(["parameter", "rhat"])?;
    for (j, name) in TransformHyper::NAMES.iter().enumerate() {
        let per_chain: Vec<Vec<f64>> = chains
            .iter()
            .map(|c| c.draws.iter().map(|d| d.hyper.to_vec()[j]).collect())
            .collect();
        wtr.write_record([name.to_string(), gelman_rubin(&per_chain)?.to_string()])?;
    }
    for (j, name) in names.iter().enumerate() {
        if name.starts_with("eta[") {
            continue;
        }
        let per_chain: Vec<Vec<f64>> = chains
            .iter()
            .map(|c| c.draws.iter().map(|d| d.theta[j]).collect())
            .collect();
        wtr.write_record([name.clone(), gelman_rubin(&per_chain)?.to_string()])?;
    }
    wtr.flush()?;
    Ok(true)
}

/// Per training cell: median and 95% interval of `h - y`.
pub fn write_residuals(
    residuals: &IntervalReport,
    train: &[Observation],
    dir: &Path,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(dir, "residuals.csv")?);
    wtr.write_record([
        "cell",
        "series",
        "day",
        "median",
        "lower",
        "upper",
        "contains_zero",
    ])?;
    for (i, obs) in train.iter().enumerate() {
        let (lo, hi) = residuals.intervals[i];
        wtr.write_record([
            i.to_string(),
            series_label(obs),
            obs.day.to_string(),
            residuals.medians[i].to_string(),
            lo.to_string(),
            hi.to_string(),
            u8::from(lo <= 0.0 && 0.0 <= hi).to_string(),
        ])?;
    }
    wtr.write_record([
        "all",
        "",
        "",
        "",
        "",
        "",
        &residuals.containment.to_string(),
    ])?;
    wtr.flush()?;
    Ok(())
}

/// Observed training values against the posterior mean and 95% band of
/// the data-scale mean `c g^{-1}(y)`.
pub fn write_fitted_vs_observed(
    chains: &[ChainOutput],
    train: &[Observation],
    dir: &Path,
) -> Result<()> {
    let pooled = pooled_draws(chains);
    let mut wtr = csv::Writer::from_writer(create(dir, "fitted_vs_observed.csv")?);
    wtr.write_record([
        "cell",
        "series",
        "day",
        "observed",
        "fitted_mean",
        "fitted_lower",
        "fitted_upper",
    ])?;
    let mut v = Vec::with_capacity(pooled.len());
    for (i, obs) in train.iter().enumerate() {
        v.clear();
        v.extend(
            pooled
                .iter()
                .map(|d| obs.scale() * obs.kind.inverse_link(d.y[i])),
        );
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.sort_by(|a, b| a.total_cmp(b));
        wtr.write_record([
            i.to_string(),
            series_label(obs),
            obs.day.to_string(),
            obs.value.to_string(),
            mean.to_string(),
            nearest_rank(&v, 2.5).to_string(),
            nearest_rank(&v, 97.5).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Trajectory of the shared thin-plate block over the training days.
pub fn shared_effect(
    prepared: &Prepared,
    chains: &[ChainOutput],
) -> Result<Option<Vec<DaySummary>>> {
    let Some(layout) = &prepared.layout else {
        return Ok(None);
    };
    let p = prepared.design.ncols();
    let shared = layout.shared.clone();
    let eta: Vec<DVector<f64>> = pooled_draws(chains)
        .iter()
        .map(|d| DVector::from_column_slice(&d.theta[p + shared.start..p + shared.end]))
        .collect();
    // One row per training day: the shared block depends on the day only.
    let mut days: Vec<usize> = prepared.train.observations.iter().map(|o| o.day).collect();
    days.sort_unstable();
    days.dedup();
    let first_row: Vec<usize> = days
        .iter()
        .map(|d| {
            prepared
                .train_rows
                .iter()
                .copied()
                .find(|&r| prepared.geometry.observations[r].day == *d)
                .expect("day has a row")
        })
        .collect();
    let s = prepared
        .basis
        .matrix
        .select_rows(&first_row)
        .columns(shared.start, shared.len())
        .into_owned();
    Ok(Some(shared_effect_summary(&eta, &s, &days)?))
}

pub fn write_shared_effect(summary: &[DaySummary], dir: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(dir, "shared_effect.csv")?);
    wtr.write_record(["day", "mean", "lower", "upper"])?;
    for d in summary {
        wtr.write_record([
            d.day.to_string(),
            d.mean.to_string(),
            d.lower.to_string(),
            d.upper.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_kappa(kappa: &[ValidationLink], dir: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(dir, "kappa.csv")?);
    let mut header = vec!["draw".to_string()];
    header.extend(ValidationLink::NAMES.iter().map(|s| s.to_string()));
    wtr.write_record(&header)?;
    for (b, k) in kappa.iter().enumerate() {
        let mut rec = vec![(b + 1).to_string()];
        rec.extend(k.to_vec().iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_forecast(prepared: &Prepared, forecast: &ForecastOutput, dir: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(dir, "forecast.csv")?);
    wtr.write_record([
        "row", "series", "day", "observed", "mean", "variance", "lower", "upper",
    ])?;
    for (k, cell) in forecast.cells.iter().enumerate() {
        let obs = &prepared.geometry.observations[cell.row];
        let mut v = forecast.draws[k].clone();
        v.sort_by(|a, b| a.total_cmp(b));
        wtr.write_record([
            cell.row.to_string(),
            series_label(obs),
            obs.day.to_string(),
            obs.value.to_string(),
            forecast.mean[k].to_string(),
            forecast.variance[k].to_string(),
            nearest_rank(&v, 2.5).to_string(),
            nearest_rank(&v, 97.5).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Every report of a completed fit except the chain dumps.
pub fn write_reports(prepared: &Prepared, report: &FitReport, dir: &Path) -> Result<()> {
    let names = theta_names(prepared);
    write_summary(&report.chains, &names, &report.kappa, dir)?;
    write_rhat(&report.chains, &names, dir)?;
    write_residuals(&report.residuals, &prepared.train.observations, dir)?;
    write_fitted_vs_observed(&report.chains, &prepared.train.observations, dir)?;
    if let Some(summary) = shared_effect(prepared, &report.chains)? {
        write_shared_effect(&summary, dir)?;
    }
    if !report.kappa.is_empty() {
        write_kappa(&report.kappa, dir)?;
    }
    if let Some(f) = &report.forecast {
        write_forecast(prepared, f, dir)?;
    }
    Ok(())
}
