//! Friedman-surface simulation design and the replication harness that
//! scores HGT with the mixed effects model against the saturated predictor.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::{knn_adjacency, morans_basis, DesignMatrix};
use crate::data::{MultiResponseDataset, Observation, ResponseKind};
use crate::diagnostics::{quadratic_r_squared, residual_intervals, rmse};
use crate::engine::{run_chains, ChainConfig, ChainOutput, TransformSettings};
use crate::error::{HgtError, Result};
use crate::samplers::{sample_binomial, sample_normal, sample_poisson, RandomStream};
use crate::sme::{SmeModel, SmePriors};
use crate::transform::data_scale_posterior_mean;

pub const COVARIATES: usize = 10;

/// `10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5`.
pub fn friedman_h(x: &[f64; COVARIATES]) -> f64 {
    10.0 * (std::f64::consts::PI * x[0] * x[1]).sin()
        + 20.0 * (x[2] - 0.5).powi(2)
        + 10.0 * x[3]
        + 5.0 * x[4]
}

#[derive(Clone, Debug, PartialEq)]
pub struct FriedmanConfig {
    /// Latent cells per response kind.
    pub total_cells: usize,
    /// Observed cells per kind (Gaussian, binomial, Poisson).
    pub observed: [usize; 3],
    pub trials: u64,
    pub replicates: usize,
    pub seed: u64,
    pub hide_x2: bool,
    pub iterations: usize,
    pub burn_in: usize,
    pub chains: usize,
    /// Moran basis rank.
    pub basis_rank: usize,
    /// Neighbours in the covariate k-NN graph.
    pub neighbours: usize,
}

impl Default for FriedmanConfig {
    fn default() -> Self {
        Self {
            total_cells: 1000,
            observed: [350, 350, 200],
            trials: 300,
            replicates: 20,
            seed: 2020,
            hide_x2: true,
            iterations: 2000,
            burn_in: 1000,
            chains: 1,
            basis_rank: 500,
            neighbours: 10,
        }
    }
}

impl FriedmanConfig {
    /// Continuous-only design: 800 observed Gaussian cells out of 1000.
    pub fn continuous_only() -> Self {
        Self {
            observed: [800, 0, 0],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.observed.iter().any(|&c| c > self.total_cells) {
            return Err(HgtError::Config(format!(
                "observed counts {:?} exceed the {} latent cells",
                self.observed, self.total_cells
            )));
        }
        if self.observed.iter().sum::<usize>() == 0 {
            return Err(HgtError::Config("no observed cells".into()));
        }
        if self.trials == 0 || self.replicates == 0 {
            return Err(HgtError::Config(
                "trials and replicates must be positive".into(),
            ));
        }
        self.chain_config(0).validate()
    }

    fn chain_config(&self, replicate: usize) -> ChainConfig {
        ChainConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: 1,
            seed: self.seed.wrapping_add(1 + replicate as u64),
            chains: self.chains,
        }
    }

    pub fn kinds_present(&self) -> Vec<ResponseKind> {
        ResponseKind::ALL
            .into_iter()
            .filter(|k| self.observed[k.index()] > 0)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FriedmanCell {
    pub kind: ResponseKind,
    pub covariates: [f64; COVARIATES],
    pub h: f64,
}

impl FriedmanCell {
    /// True data-scale mean: h, logistic(h) (a probability) or exp(h).
    pub fn truth(&self) -> f64 {
        self.kind.inverse_link(self.h)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FriedmanData {
    /// Every latent cell, grouped by kind.
    pub cells: Vec<FriedmanCell>,
    /// Indices into `cells` of the observed cells, in dataset order.
    pub observed: Vec<usize>,
    pub dataset: MultiResponseDataset,
    pub hide_x2: bool,
}

impl FriedmanData {
    /// Covariates visible to the fitted model (x2 dropped when hidden).
    pub fn fitted_covariates(&self, cell: usize) -> Vec<f64> {
        let x = &self.cells[cell].covariates;
        x.iter()
            .enumerate()
            .filter(|(k, _)| !(self.hide_x2 && *k == 1))
            .map(|(_, v)| *v)
            .collect()
    }

    /// Block-expanded design over the observed cells: for every kind present,
    /// an intercept and the fitted covariates, nonzero only on that kind's rows.
    pub fn design(&self) -> Result<DesignMatrix> {
        let kinds = self.dataset.kinds_present();
        let q = if self.hide_x2 {
            COVARIATES - 1
        } else {
            COVARIATES
        };
        let width = kinds.len() * (q + 1);
        let n = self.observed.len();
        let mut x = DMatrix::zeros(n, width);
        let mut labels = Vec::with_capacity(width);
        for kind in &kinds {
            labels.push(format!("{kind}:intercept"));
            for k in 0..COVARIATES {
                if !(self.hide_x2 && k == 1) {
                    labels.push(format!("{kind}:x{}", k + 1));
                }
            }
        }
        for (row, &cell) in self.observed.iter().enumerate() {
            let block = kinds
                .iter()
                .position(|k| *k == self.cells[cell].kind)
                .expect("observed kind is present");
            let start = block * (q + 1);
            x[(row, start)] = 1.0;
            for (k, v) in self.fitted_covariates(cell).into_iter().enumerate() {
                x[(row, start + 1 + k)] = v;
            }
        }
        DesignMatrix::new(x, labels)
    }

    /// Fitted covariates of the observed cells, one row per cell.
    pub fn covariate_points(&self) -> DMatrix<f64> {
        let q = if self.hide_x2 {
            COVARIATES - 1
        } else {
            COVARIATES
        };
        let mut pts = DMatrix::zeros(self.observed.len(), q);
        for (row, &cell) in self.observed.iter().enumerate() {
            for (k, v) in self.fitted_covariates(cell).into_iter().enumerate() {
                pts[(row, k)] = v;
            }
        }
        pts
    }
}

/// Draws one replicate: covariates i.i.d. Uniform(0, 1) for every latent
/// cell, the surface `h`, and observations for the first `observed[j]`
/// cells of each kind.
pub fn generate_multiresponse(
    config: &FriedmanConfig,
    stream: &mut RandomStream,
) -> Result<FriedmanData> {
    config.validate()?;
    let mut cells = Vec::new();
    let mut observed = Vec::new();
    let mut observations = Vec::new();
    for kind in config.kinds_present() {
        for i in 0..config.total_cells {
            let mut x = [0.0; COVARIATES];
            for v in x.iter_mut() {
                *v = stream.uniform();
            }
            let h = friedman_h(&x);
            if i < config.observed[kind.index()] {
                let obs = match kind {
                    ResponseKind::Gaussian => {
                        Observation::gaussian(sample_normal(stream, h, 1.0)?, 1)
                    }
                    ResponseKind::Binomial => {
                        let p = kind.inverse_link(h);
                        Observation::binomial(
                            sample_binomial(stream, config.trials, p)?,
                            config.trials,
                            1,
                        )
                    }
                    ResponseKind::Poisson => {
                        Observation::poisson(sample_poisson(stream, h.exp())? as u64, 1)
                    }
                };
                observed.push(cells.len());
                observations.push(obs);
            }
            cells.push(FriedmanCell {
                kind,
                covariates: x,
                h,
            });
        }
    }
    Ok(FriedmanData {
        cells,
        observed,
        dataset: MultiResponseDataset::new(observations)?,
        hide_x2: config.hide_x2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    HgtSme,
    Saturated,
    Truth,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::HgtSme, Method::Saturated, Method::Truth];

    pub fn name(self) -> &'static str {
        match self {
            Method::HgtSme => "hgt-sme",
            Method::Saturated => "saturated",
            Method::Truth => "truth",
        }
    }
}

impl FromStr for Method {
    type Err = HgtError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                HgtError::Config(format!(
                    "unknown method `{s}`; available methods: {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRow {
    pub replicate: usize,
    pub method: Method,
    /// Data-scale RMSE over the observed cells (binomial on the probability scale).
    pub rmse: f64,
    /// RMSE restricted to each kind, `None` for kinds not observed.
    pub rmse_by_kind: [Option<f64>; 3],
    /// Residual zero-containment fraction (HGT methods only).
    pub containment: Option<f64>,
    /// Quadratic-fit R^2 of the posterior-median residual on the hidden x2.
    pub residual_x2_r2: Option<f64>,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

/// Per-replicate output of [`run_benchmark`].
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateResult {
    pub rows: Vec<BenchmarkRow>,
    /// (x2, posterior-median residual) for each observed cell, when HGT ran.
    pub residual_vs_x2: Vec<(f64, f64)>,
}

fn scores(estimate: &[f64], data: &FriedmanData) -> Result<(f64, [Option<f64>; 3])> {
    let truth: Vec<f64> = data
        .observed
        .iter()
        .map(|&c| data.cells[c].truth())
        .collect();
    let total = rmse(estimate, &truth)?;
    let mut by_kind = [None; 3];
    for kind in ResponseKind::ALL {
        let idx: Vec<usize> = (0..truth.len())
            .filter(|&i| data.cells[data.observed[i]].kind == kind)
            .collect();
        if !idx.is_empty() {
            let e: Vec<f64> = idx.iter().map(|&i| estimate[i]).collect();
            let t: Vec<f64> = idx.iter().map(|&i| truth[i]).collect();
            by_kind[kind.index()] = Some(rmse(&e, &t)?);
        }
    }
    Ok((total, by_kind))
}

/// Fits the mixed effects model with the HGT composite sampler.
pub fn fit_hgt_sme(
    config: &FriedmanConfig,
    data: &FriedmanData,
    replicate: usize,
) -> Result<Vec<ChainOutput>> {
    let x = data.design()?;
    let w = knn_adjacency(&data.covariate_points(), config.neighbours)?;
    let r = config.basis_rank.min(data.observed.len());
    let s = morans_basis(&x, &w, r)?;
    let model = SmeModel::training_only(x.matrix, s.matrix, SmePriors::default())?;
    run_chains(
        &data.dataset.observations,
        &TransformSettings::default(),
        &model,
        &config.chain_config(replicate),
        &data.dataset.fingerprint(),
    )
}

/// Pointwise posterior mean of `g^{-1}(y)` (binomial as a probability).
pub fn posterior_mean_surface(
    chains: &[ChainOutput],
    observations: &[Observation],
) -> Result<Vec<f64>> {
    let draws: Vec<_> = chains.iter().flat_map(|c| c.draws.iter()).collect();
    if draws.is_empty() {
        return Err(HgtError::EmptyChain);
    }
    Ok(observations
        .iter()
        .enumerate()
        .map(|(i, obs)| {
            draws
                .iter()
                .map(|d| obs.kind.inverse_link(d.y[i]))
                .sum::<f64>()
                / draws.len() as f64
        })
        .collect())
}

/// Saturated predictor averaged over the hyperparameter draws, binomial
/// divided by the trials.
pub fn saturated_surface(chains: &[ChainOutput], observations: &[Observation]) -> Result<Vec<f64>> {
    let draws: Vec<_> = chains.iter().flat_map(|c| c.draws.iter()).collect();
    if draws.is_empty() {
        return Err(HgtError::EmptyChain);
    }
    Ok(observations
        .iter()
        .map(|obs| {
            draws
                .iter()
                .map(|d| data_scale_posterior_mean(obs, &d.hyper) / obs.scale())
                .sum::<f64>()
                / draws.len() as f64
        })
        .collect())
}

fn failed_row(replicate: usize, method: Method, err: &HgtError, seconds: f64) -> BenchmarkRow {
    BenchmarkRow {
        replicate,
        method,
        rmse: f64::NAN,
        rmse_by_kind: [None; 3],
        containment: None,
        residual_x2_r2: None,
        wall_seconds: seconds,
        error: Some(err.to_string()),
    }
}

/// Generates and scores one replicate. Fit failures become rows carrying the error.
pub fn run_replicate(
    config: &FriedmanConfig,
    methods: &[Method],
    replicate: usize,
) -> Result<ReplicateResult> {
    let mut stream = RandomStream::new(config.seed, (1u64 << 32) + replicate as u64);
    let data = generate_multiresponse(config, &mut stream)?;
    let mut rows = Vec::new();
    let mut residual_vs_x2 = Vec::new();
    let needs_chain = methods.iter().any(|m| *m != Method::Truth);
    let start = Instant::now();
    let chains = if needs_chain {
        Some(fit_hgt_sme(config, &data, replicate))
    } else {
        None
    };
    let fit_seconds = start.elapsed().as_secs_f64();
    for &method in methods {
        let t0 = Instant::now();
        let row = match method {
            Method::Truth => {
                let est: Vec<f64> = data
                    .observed
                    .iter()
                    .map(|&c| data.cells[c].truth())
                    .collect();
                let (total, by_kind) = scores(&est, &data)?;
                BenchmarkRow {
                    replicate,
                    method,
                    rmse: total,
                    rmse_by_kind: by_kind,
                    containment: None,
                    residual_x2_r2: None,
                    wall_seconds: t0.elapsed().as_secs_f64(),
                    error: None,
                }
            }
            Method::HgtSme | Method::Saturated => match chains.as_ref().expect("chain requested") {
                Err(e) => failed_row(replicate, method, e, fit_seconds),
                Ok(chains) => {
                    let obs = &data.dataset.observations;
                    let outcome = (|| -> Result<BenchmarkRow> {
                        if method == Method::Saturated {
                            let est = saturated_surface(chains, obs)?;
                            let (total, by_kind) = scores(&est, &data)?;
                            return Ok(BenchmarkRow {
                                replicate,
                                method,
                                rmse: total,
                                rmse_by_kind: by_kind,
                                containment: None,
                                residual_x2_r2: None,
                                wall_seconds: t0.elapsed().as_secs_f64(),
                                error: None,
                            });
                        }
                        let est = posterior_mean_surface(chains, obs)?;
                        let (total, by_kind) = scores(&est, &data)?;
                        let pooled: Vec<_> = chains
                            .iter()
                            .flat_map(|c| c.draws.iter().cloned())
                            .collect();
                        let report = residual_intervals(&pooled, 0.05)?;
                        let x2: Vec<f64> = data
                            .observed
                            .iter()
                            .map(|&c| data.cells[c].covariates[1])
                            .collect();
                        let r2 = quadratic_r_squared(&x2, &report.medians)?;
                        residual_vs_x2 =
                            x2.into_iter().zip(report.medians.iter().copied()).collect();
                        Ok(BenchmarkRow {
                            replicate,
                            method,
                            rmse: total,
                            rmse_by_kind: by_kind,
                            containment: Some(report.containment),
                            residual_x2_r2: Some(r2),
                            wall_seconds: fit_seconds + t0.elapsed().as_secs_f64(),
                            error: None,
                        })
                    })();
                    outcome.unwrap_or_else(|e| failed_row(replicate, method, &e, fit_seconds))
                }
            },
        };
        rows.push(row);
    }
    Ok(ReplicateResult {
        rows,
        residual_vs_x2,
    })
}

/// Runs every replicate (in parallel on the current rayon pool) and returns
/// the results in replicate order.
pub fn run_benchmark(config: &FriedmanConfig, methods: &[Method]) -> Result<Vec<ReplicateResult>> {
    config.validate()?;
    if methods.is_empty() {
        return Err(HgtError::Config("no methods requested".into()));
    }
    (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(config, methods, r))
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Columns: replicate, method, rmse, containment_fraction, wall_seconds.
pub fn write_benchmark_csv<W: Write>(results: &[ReplicateResult], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "replicate",
        "method",
        "rmse",
        "containment_fraction",
        "wall_seconds",
    ])?;
    for row in results.iter().flat_map(|r| r.rows.iter()) {
        wtr.write_record([
            row.replicate.to_string(),
            row.method.name().to_string(),
            row.rmse.to_string(),
            opt(row.containment),
            format!("{:.3}", row.wall_seconds),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Per-kind RMSE, residual diagnostics and fit errors.
/// Columns: replicate, method, statistic, value.
pub fn write_benchmark_details_csv<W: Write>(results: &[ReplicateResult], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["replicate", "method", "statistic", "value"])?;
    for row in results.iter().flat_map(|r| r.rows.iter()) {
        let rep = row.replicate.to_string();
        let m = row.method.name();
        for kind in ResponseKind::ALL {
            if let Some(v) = row.rmse_by_kind[kind.index()] {
                wtr.write_record([rep.as_str(), m, &format!("rmse_{kind}"), &v.to_string()])?;
            }
        }
        if let Some(v) = row.residual_x2_r2 {
            wtr.write_record([rep.as_str(), m, "residual_x2_quadratic_r2", &v.to_string()])?;
        }
        if let Some(e) = &row.error {
            wtr.write_record([rep.as_str(), m, "error", e])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Settings of the synthetic multi-series dataset drawn from the fitted
/// model class: one Gaussian and one binomial series, and cases, deaths and
/// recoveries counts in every region, all observed daily.
#[derive(Clone, Debug, PartialEq)]
pub struct CovidLikeConfig {
    pub days: usize,
    pub regions: usize,
    pub trials: u64,
    pub gaussian_variance: f64,
    pub sigma_eta: f64,
    pub sigma_xi: f64,
    pub region_knots: usize,
    pub shared_knots: usize,
}

impl Default for CovidLikeConfig {
    fn default() -> Self {
        Self {
            days: 78,
            regions: 20,
            trials: 100,
            gaussian_variance: 0.01,
            sigma_eta: 1.0,
            sigma_xi: 0.1,
            region_knots: 10,
            shared_knots: 25,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovidLikeData {
    pub dataset: MultiResponseDataset,
    /// Latent `y` of every row.
    pub y: Vec<f64>,
}

/// Draws `y = X beta + S eta + xi` over the joint thin-plate basis and the
/// pipeline design, then data by kind.
pub fn generate_covid_like(
    config: &CovidLikeConfig,
    stream: &mut RandomStream,
) -> Result<CovidLikeData> {
    if config.days < 2 || config.regions == 0 || config.trials == 0 {
        return Err(HgtError::Config(
            "need at least 2 days, 1 region and 1 trial".into(),
        ));
    }
    // Geometry first, with placeholder values.
    let mut rows = Vec::new();
    for day in 1..=config.days {
        rows.push(Observation::gaussian(0.0, day));
        rows.push(Observation::binomial(0, config.trials, day));
        for r in 0..config.regions {
            let region = format!("region{:02}", r + 1);
            rows.push(Observation::poisson(0, day).with_region(region.clone()));
            rows.push(
                Observation::poisson(0, day)
                    .with_region(region.clone())
                    .with_flags(true, false),
            );
            rows.push(
                Observation::poisson(0, day)
                    .with_region(region)
                    .with_flags(false, true),
            );
        }
    }
    let geometry = MultiResponseDataset::new(rows)?;
    let x = crate::pipeline::design_matrix(&geometry)?;
    let (s, _) = crate::basis::assemble_joint_basis(
        &geometry,
        &crate::basis::KnotGrid::equally_spaced(config.region_knots)?,
        &crate::basis::KnotGrid::equally_spaced(config.shared_knots)?,
    )?;
    let mut beta = Vec::with_capacity(x.ncols());
    for label in &x.labels {
        beta.push(match label.as_str() {
            "gaussian:intercept" => 0.5,
            "binomial:intercept" => -0.5,
            "poisson:intercept" => 3.5,
            "death_flag" => -1.5,
            "recovery_flag" => -0.7,
            _ => sample_normal(stream, 0.0, 0.09)?,
        });
    }
    let mut eta = Vec::with_capacity(s.ncols());
    for _ in 0..s.ncols() {
        eta.push(sample_normal(stream, 0.0, config.sigma_eta.powi(2))?);
    }
    let mut y = Vec::with_capacity(geometry.len());
    let mut observations = Vec::with_capacity(geometry.len());
    for (i, obs) in geometry.observations.iter().enumerate() {
        let xb: f64 = x.matrix.row(i).iter().zip(&beta).map(|(a, b)| a * b).sum();
        let se: f64 = s.matrix.row(i).iter().zip(&eta).map(|(a, b)| a * b).sum();
        let yi = xb + se + sample_normal(stream, 0.0, config.sigma_xi.powi(2))?;
        let mean = obs.kind.inverse_link(yi);
        let mut o = obs.clone();
        o.value = match obs.kind {
            ResponseKind::Gaussian => sample_normal(stream, yi, config.gaussian_variance)?,
            ResponseKind::Binomial => sample_binomial(stream, config.trials, mean)? as f64,
            ResponseKind::Poisson => sample_poisson(stream, mean)?,
        };
        y.push(yi);
        observations.push(o);
    }
    Ok(CovidLikeData {
        dataset: MultiResponseDataset::new(observations)?,
        y,
    })
}
