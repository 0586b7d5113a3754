//! The composite sampler (training), the validation-link fit and
//! forecasting, plus the plug-in contract for preferred models and the
//! chain dump format.
//!
//! # Chain dump format
//!
//! A dump is UTF-8 text. Leading lines start with `# ` and carry metadata,
//! one `key value` pair per line, in this order:
//!
//! ```text
//! # hgt-chain-dump 1
//! # fingerprint <sha256 of the training data>
//! # seed <u64>
//! # chain <index>
//! # iterations <B>
//! # burn_in <b0>
//! # thin <thin>
//! # model <name>
//! # theta_layout <name>:<len>,<name>:<len>,...
//! ```
//!
//! Each remaining line is one stored iteration: tab-separated
//! `name=v1,v2,...` fields in the fixed order `iteration`, `h`, `gamma`, `y`,
//! `theta`. `gamma` lists (v, binomial alpha, binomial kappa, Poisson alpha,
//! Poisson kappa). Floats are written with 17 significant digits
//! (`{:.16e}`), which round-trips every `f64` exactly.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::data::{MultiResponseDataset, Observation, ResponseKind};
use crate::error::{HgtError, Result};
use crate::samplers::{
    sample_binomial, sample_normal, sample_poisson, slice_sample, Interval, RandomStream,
    SliceConfig,
};
use crate::transform::{
    sample_h_all, update_hyperparameters, TransformHyper, TransformHyperPrior, TransformState,
};

/// A continuous-data model plugged into step 4 of the composite sampler.
///
/// Rows passed to [`PreferredModel::predict`] index the model's full
/// geometry (training, validation and test rows), while `h` and the returned
/// `y` of [`PreferredModel::draw`] cover the training rows only.
pub trait PreferredModel: Sync {
    type State: Clone + Send;

    fn name(&self) -> &str;

    /// Number of training rows.
    fn n_train(&self) -> usize;

    fn init(&self) -> Result<Self::State>;

    /// One MCMC transition of `(y, theta)` given `h`.
    fn draw(
        &self,
        stream: &mut RandomStream,
        h: &[f64],
        state: &mut Self::State,
    ) -> Result<(Vec<f64>, Vec<f64>)>;

    /// Names and lengths of the blocks of the parameter record `theta`.
    fn parameter_layout(&self) -> Vec<(String, usize)>;

    /// A fresh latent draw at `rows` for the parameter record `theta`.
    fn predict(&self, stream: &mut RandomStream, theta: &[f64], rows: &[usize])
        -> Result<Vec<f64>>;
}

/// `y = h` with an empty parameter record.
#[derive(Clone, Copy, Debug)]
pub struct IdentityModel {
    pub n: usize,
}

impl PreferredModel for IdentityModel {
    type State = ();

    fn name(&self) -> &str {
        "identity"
    }

    fn n_train(&self) -> usize {
        self.n
    }

    fn init(&self) -> Result<()> {
        Ok(())
    }

    fn draw(&self, _: &mut RandomStream, h: &[f64], _: &mut ()) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((h.to_vec(), Vec::new()))
    }

    fn parameter_layout(&self) -> Vec<(String, usize)> {
        Vec::new()
    }

    fn predict(&self, _: &mut RandomStream, _: &[f64], _: &[usize]) -> Result<Vec<f64>> {
        Err(HgtError::Unsupported(
            "the identity model has no out-of-sample predictions".into(),
        ))
    }
}

/// Sub-stream roles within a chain. Steps 2-3 and step 4 draw from separate
/// streams, so swapping preferred models leaves the transformation draws'
/// random numbers untouched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamRole {
    Transform = 0,
    Preferred = 1,
    Validation = 2,
    Forecast = 3,
}

pub fn stream_for(seed: u64, chain: usize, role: StreamRole) -> RandomStream {
    RandomStream::new(seed, chain as u64 * 4 + role as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chains: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            burn_in: 1000,
            thin: 1,
            seed: 1,
            chains: 1,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(HgtError::Config(format!(
                "need 0 <= burn_in < iterations, got burn_in {} iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 || self.chains == 0 {
            return Err(HgtError::Config("thin and chains must be positive".into()));
        }
        Ok(())
    }

    /// Whether 1-based iteration `b` is stored.
    pub fn keeps(&self, b: usize) -> bool {
        b > self.burn_in && (b - self.burn_in) % self.thin == 0
    }

    pub fn kept_count(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Settings of the transformation layer (steps 2-3).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TransformSettings {
    pub init: TransformHyper,
    pub prior: TransformHyperPrior,
    pub slice: SliceConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoredDraw {
    /// 1-based iteration index.
    pub iteration: usize,
    pub h: Vec<f64>,
    pub hyper: TransformHyper,
    pub y: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput {
    pub chain: usize,
    pub seed: u64,
    pub fingerprint: String,
    pub config: ChainConfig,
    pub model: String,
    pub theta_layout: Vec<(String, usize)>,
    pub draws: Vec<StoredDraw>,
}

/// Everything one iteration produced, passed to an observer.
#[derive(Debug)]
pub struct IterationRecord<'a> {
    pub iteration: usize,
    /// Hyperparameters conditioned on in step 2 (the previous iteration's).
    pub hyper_used: &'a TransformHyper,
    pub h: &'a [f64],
    pub hyper_new: &'a TransformHyper,
    pub y: &'a [f64],
    pub theta: &'a [f64],
}

/// Composite sampler for one chain.
pub fn run_algorithm1<M: PreferredModel>(
    observations: &[Observation],
    settings: &TransformSettings,
    model: &M,
    config: &ChainConfig,
    chain: usize,
    fingerprint: &str,
) -> Result<ChainOutput> {
    run_algorithm1_observed(
        observations,
        settings,
        model,
        config,
        chain,
        fingerprint,
        |_| {},
    )
}

pub fn run_algorithm1_observed<M, F>(
    observations: &[Observation],
    settings: &TransformSettings,
    model: &M,
    config: &ChainConfig,
    chain: usize,
    fingerprint: &str,
    mut observer: F,
) -> Result<ChainOutput>
where
    M: PreferredModel,
    F: FnMut(&IterationRecord<'_>),
{
    config.validate()?;
    settings.init.validate()?;
    settings.prior.validate()?;
    settings.slice.validate()?;
    if observations.is_empty() {
        return Err(HgtError::domain("training split is empty"));
    }
    if model.n_train() != observations.len() {
        return Err(HgtError::Dimension(format!(
            "preferred model expects {} training rows, data has {}",
            model.n_train(),
            observations.len()
        )));
    }
    let mut transform_stream = stream_for(config.seed, chain, StreamRole::Transform);
    let mut model_stream = stream_for(config.seed, chain, StreamRole::Preferred);
    let mut state = TransformState {
        h: vec![0.0; observations.len()],
        hyper: settings.init,
    };
    let mut model_state = model.init()?;
    let mut draws = Vec::with_capacity(config.kept_count());

    for b in 1..=config.iterations {
        sample_h_all(
            &mut transform_stream,
            observations,
            &state.hyper,
            &mut state.h,
        )
        .map_err(|e| e.at_iteration(b))?;
        let hyper_new = update_hyperparameters(
            &mut transform_stream,
            &state,
            observations,
            &settings.prior,
            &settings.slice,
        )
        .map_err(|e| e.at_iteration(b))?;
        let (y, theta) = model
            .draw(&mut model_stream, &state.h, &mut model_state)
            .map_err(|e| HgtError::PreferredModel {
                iteration: b,
                source: Box::new(e),
            })?;
        observer(&IterationRecord {
            iteration: b,
            hyper_used: &state.hyper,
            h: &state.h,
            hyper_new: &hyper_new,
            y: &y,
            theta: &theta,
        });
        if config.keeps(b) {
            draws.push(StoredDraw {
                iteration: b,
                h: state.h.clone(),
                hyper: hyper_new,
                y,
                theta,
            });
        }
        state.hyper = hyper_new;
    }
    Ok(ChainOutput {
        chain,
        seed: config.seed,
        fingerprint: fingerprint.to_string(),
        config: *config,
        model: model.name().to_string(),
        theta_layout: model.parameter_layout(),
        draws,
    })
}

/// Runs `config.chains` chains in parallel on the current rayon pool.
pub fn run_chains<M: PreferredModel>(
    observations: &[Observation],
    settings: &TransformSettings,
    model: &M,
    config: &ChainConfig,
    fingerprint: &str,
) -> Result<Vec<ChainOutput>> {
    config.validate()?;
    (0..config.chains)
        .into_par_iter()
        .map(|c| run_algorithm1(observations, settings, model, config, c, fingerprint))
        .collect()
}

fn pooled(chains: &[ChainOutput]) -> Result<Vec<&StoredDraw>> {
    let draws: Vec<&StoredDraw> = chains.iter().flat_map(|c| c.draws.iter()).collect();
    if draws.is_empty() {
        Err(HgtError::EmptyChain)
    } else {
        Ok(draws)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkMode {
    Identity,
    Linear,
}

impl std::str::FromStr for LinkMode {
    type Err = HgtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(LinkMode::Identity),
            "linear" => Ok(LinkMode::Linear),
            other => Err(HgtError::Config(format!(
                "unknown link mode `{other}` (expected identity or linear)"
            ))),
        }
    }
}

/// Linear recalibration `kappa_j0 + kappa_j1 * y` on the link scale, per kind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationLink {
    pub intercept: [f64; 3],
    pub slope: [f64; 3],
}

impl Default for ValidationLink {
    fn default() -> Self {
        Self::identity()
    }
}

impl ValidationLink {
    pub const NAMES: [&'static str; 6] = [
        "gaussian_intercept",
        "binomial_intercept",
        "poisson_intercept",
        "gaussian_slope",
        "binomial_slope",
        "poisson_slope",
    ];

    pub fn identity() -> Self {
        Self {
            intercept: [0.0; 3],
            slope: [1.0; 3],
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn apply(&self, kind: ResponseKind, y: f64) -> f64 {
        let j = kind.index();
        self.intercept[j] + self.slope[j] * y
    }

    /// `(k10, k20, k30, k11, k21, k31)`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.intercept
            .iter()
            .chain(self.slope.iter())
            .copied()
            .collect()
    }

    fn component(&mut self, c: usize) -> &mut f64 {
        if c < 3 {
            &mut self.intercept[c]
        } else {
            &mut self.slope[c - 3]
        }
    }
}

/// Log likelihood of the validation cells of `kind` under link-scale means
/// `kappa_j0 + kappa_j1 * y`.
fn link_log_likelihood(
    observations: &[Observation],
    cells: &[usize],
    ystar: &[f64],
    intercept: f64,
    slope: f64,
    gaussian_variance: f64,
) -> f64 {
    let mut total = 0.0;
    for &i in cells {
        let obs = &observations[i];
        let eta = intercept + slope * ystar[i];
        let z = obs.value;
        total += match obs.kind {
            ResponseKind::Gaussian => -(z - eta).powi(2) / (2.0 * gaussian_variance),
            ResponseKind::Binomial => z * eta - obs.scale() * crate::data::softplus(eta),
            ResponseKind::Poisson => z * eta - eta.exp(),
        };
    }
    total
}

/// Validation-stage fit of the link recalibration. Returns the stored
/// `kappa` draws (burn-in and thinning from `config`); identity mode skips
/// the stage and returns no draws.
pub fn run_algorithm2<M: PreferredModel>(
    model: &M,
    chains: &[ChainOutput],
    validation: &[Observation],
    rows: &[usize],
    mode: LinkMode,
    config: &ChainConfig,
    slice: &SliceConfig,
) -> Result<Vec<ValidationLink>> {
    if mode == LinkMode::Identity {
        return Ok(Vec::new());
    }
    config.validate()?;
    if validation.is_empty() {
        return Err(HgtError::domain("validation split is empty"));
    }
    if validation.len() != rows.len() {
        return Err(HgtError::Dimension(format!(
            "{} validation observations but {} geometry rows",
            validation.len(),
            rows.len()
        )));
    }
    let draws = pooled(chains)?;
    let mut stream = stream_for(config.seed, 0, StreamRole::Validation);
    let mut cells: [Vec<usize>; 3] = Default::default();
    for (i, obs) in validation.iter().enumerate() {
        cells[obs.kind.index()].push(i);
    }
    let components: Vec<usize> = [0usize, 1, 2, 3, 4, 5]
        .into_iter()
        .filter(|c| !cells[c % 3].is_empty())
        .collect();

    let mut kappa = ValidationLink::identity();
    let mut out = Vec::with_capacity(config.kept_count());
    for b in 1..=config.iterations {
        let d = draws[stream.index(draws.len())];
        let ystar = model
            .predict(&mut stream, &d.theta, rows)
            .map_err(|e| e.at_iteration(b))?;
        let v = d.hyper.gaussian_variance;
        for &c in &components {
            let j = c % 3;
            let current = *kappa.component(c);
            let (a0, a1) = (kappa.intercept[j], kappa.slope[j]);
            let target = |x: f64| {
                let (i0, i1) = if c < 3 { (x, a1) } else { (a0, x) };
                link_log_likelihood(validation, &cells[j], &ystar, i0, i1, v)
            };
            let next = slice_sample(&mut stream, target, current, Interval::real_line(), slice)
                .map_err(|e| e.for_parameter(format!("kappa {}", ValidationLink::NAMES[c])))
                .map_err(|e| e.at_iteration(b))?;
            *kappa.component(c) = next;
        }
        if config.keeps(b) {
            out.push(kappa);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastCell {
    /// Row in the preferred model's geometry.
    pub row: usize,
    pub kind: ResponseKind,
    /// Trials for binomial cells, 1 otherwise.
    pub scale: f64,
}

impl ForecastCell {
    pub fn from_observation(row: usize, obs: &Observation) -> Self {
        Self {
            row,
            kind: obs.kind,
            scale: obs.scale(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastOutput {
    pub cells: Vec<ForecastCell>,
    /// Predictive draws, one vector per cell.
    pub draws: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Errors if the test geometry references count regions never seen in training.
pub fn check_forecast_geometry(
    train: &MultiResponseDataset,
    test: &MultiResponseDataset,
) -> Result<()> {
    let known = train.regions();
    let mut unseen: Vec<String> = test
        .regions()
        .into_iter()
        .filter(|r| !known.contains(r))
        .collect();
    if unseen.is_empty() {
        Ok(())
    } else {
        unseen.sort();
        Err(HgtError::domain(format!(
            "test rows reference regions unseen in training: {}",
            unseen.join(", ")
        )))
    }
}

/// Posterior predictive draws at the test cells. `kappa_draws` empty means
/// the identity link.
pub fn run_algorithm3<M: PreferredModel>(
    model: &M,
    chains: &[ChainOutput],
    kappa_draws: &[ValidationLink],
    cells: &[ForecastCell],
    iterations: usize,
    seed: u64,
) -> Result<ForecastOutput> {
    if iterations == 0 {
        return Err(HgtError::Config("forecast needs at least one draw".into()));
    }
    let draws = pooled(chains)?;
    let rows: Vec<usize> = cells.iter().map(|c| c.row).collect();
    let mut stream = stream_for(seed, 0, StreamRole::Forecast);
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(iterations); cells.len()];
    let identity = ValidationLink::identity();
    for b in 1..=iterations {
        let d = draws[stream.index(draws.len())];
        let kappa = if kappa_draws.is_empty() {
            &identity
        } else {
            &kappa_draws[stream.index(kappa_draws.len())]
        };
        let ystar = model
            .predict(&mut stream, &d.theta, &rows)
            .map_err(|e| e.at_iteration(b))?;
        for (k, cell) in cells.iter().enumerate() {
            let p = cell.kind.inverse_link(kappa.apply(cell.kind, ystar[k]));
            let z = match cell.kind {
                ResponseKind::Gaussian => sample_normal(&mut stream, p, d.hyper.gaussian_variance),
                ResponseKind::Binomial => {
                    sample_binomial(&mut stream, cell.scale as u64, p).map(|z| z as f64)
                }
                ResponseKind::Poisson => sample_poisson(&mut stream, p),
            }
            .map_err(|e| e.at_observation(k).at_iteration(b))?;
            out[k].push(z);
        }
    }
    let mean: Vec<f64> = out
        .iter()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let variance = out
        .iter()
        .zip(&mean)
        .map(|(v, m)| {
            if v.len() < 2 {
                0.0
            } else {
                v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
            }
        })
        .collect();
    Ok(ForecastOutput {
        cells: cells.to_vec(),
        draws: out,
        mean,
        variance,
    })
}

/// Monte Carlo covariance of the data-scale means `c g^{-1}(y)` of two
/// training cells across the stored draws.
pub fn cross_covariance(
    chains: &[ChainOutput],
    observations: &[Observation],
    a: usize,
    b: usize,
) -> Result<f64> {
    let draws = pooled(chains)?;
    for &i in &[a, b] {
        if i >= observations.len() {
            return Err(HgtError::Dimension(format!(
                "cell {i} outside {} training cells",
                observations.len()
            )));
        }
    }
    let value = |d: &StoredDraw, i: usize| {
        let obs = &observations[i];
        obs.scale() * obs.kind.inverse_link(d.y[i])
    };
    let n = draws.len();
    if n < 2 {
        return Ok(0.0);
    }
    let xa: Vec<f64> = draws.iter().map(|d| value(d, a)).collect();
    let xb: Vec<f64> = draws.iter().map(|d| value(d, b)).collect();
    let ma = xa.iter().sum::<f64>() / n as f64;
    let mb = xb.iter().sum::<f64>() / n as f64;
    Ok(xa
        .iter()
        .zip(&xb)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (n - 1) as f64)
}

fn write_floats<W: Write>(w: &mut W, name: &str, values: &[f64]) -> std::io::Result<()> {
    write!(w, "\t{name}=")?;
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            w.write_all(b",")?;
        }
        write!(w, "{v:.16e}")?;
    }
    Ok(())
}

pub fn write_dump<W: Write>(chain: &ChainOutput, mut w: W) -> Result<()> {
    writeln!(w, "# hgt-chain-dump 1")?;
    writeln!(w, "# fingerprint {}", chain.fingerprint)?;
    writeln!(w, "# seed {}", chain.seed)?;
    writeln!(w, "# chain {}", chain.chain)?;
    writeln!(w, "# iterations {}", chain.config.iterations)?;
    writeln!(w, "# burn_in {}", chain.config.burn_in)?;
    writeln!(w, "# thin {}", chain.config.thin)?;
    writeln!(w, "# model {}", chain.model)?;
    let layout: Vec<String> = chain
        .theta_layout
        .iter()
        .map(|(n, l)| format!("{n}:{l}"))
        .collect();
    writeln!(w, "# theta_layout {}", layout.join(","))?;
    for d in &chain.draws {
        write!(w, "iteration={}", d.iteration)?;
        write_floats(&mut w, "h", &d.h)?;
        write_floats(&mut w, "gamma", &d.hyper.to_vec())?;
        write_floats(&mut w, "y", &d.y)?;
        write_floats(&mut w, "theta", &d.theta)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_error(line: usize, message: impl Into<String>) -> HgtError {
    HgtError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_floats(line: usize, text: &str) -> Result<Vec<f64>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| parse_error(line, format!("`{t}` is not a number")))
        })
        .collect()
}

/// Reads a dump written by [`write_dump`]. The number of chains in the
/// returned config is 1; the seed, burn-in and thinning are restored.
pub fn read_dump<R: BufRead>(reader: R) -> Result<ChainOutput> {
    let mut meta: Vec<(String, String)> = Vec::new();
    let mut draws = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        if let Some(rest) = line.strip_prefix("# ") {
            let (key, value) = rest.split_once(' ').unwrap_or((rest, ""));
            meta.push((key.to_string(), value.to_string()));
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let expect = ["iteration", "h", "gamma", "y", "theta"];
        if fields.len() != expect.len() {
            return Err(parse_error(
                lineno,
                format!("expected {} fields", expect.len()),
            ));
        }
        let mut values = Vec::new();
        for (field, name) in fields.iter().zip(expect) {
            let v = field
                .strip_prefix(name)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| parse_error(lineno, format!("expected field `{name}=`")))?;
            values.push(v);
        }
        let iteration = values[0]
            .parse()
            .map_err(|_| parse_error(lineno, "bad iteration index"))?;
        draws.push(StoredDraw {
            iteration,
            h: parse_floats(lineno, values[1])?,
            hyper: TransformHyper::from_slice(&parse_floats(lineno, values[2])?)
                .map_err(|e| parse_error(lineno, e.to_string()))?,
            y: parse_floats(lineno, values[3])?,
            theta: parse_floats(lineno, values[4])?,
        });
    }
    let get = |key: &str| -> Result<&str> {
        meta.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| parse_error(0, format!("dump header lacks `{key}`")))
    };
    let num = |key: &str| -> Result<u64> {
        get(key)?
            .parse()
            .map_err(|_| parse_error(0, format!("dump header `{key}` is not an integer")))
    };
    if get("hgt-chain-dump")? != "1" {
        return Err(parse_error(1, "unsupported dump version"));
    }
    let theta_layout = get("theta_layout")?
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (n, l) = s
                .split_once(':')
                .ok_or_else(|| parse_error(0, format!("bad layout entry `{s}`")))?;
            let len = l
                .parse()
                .map_err(|_| parse_error(0, format!("bad layout length `{l}`")))?;
            Ok((n.to_string(), len))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainOutput {
        chain: num("chain")? as usize,
        seed: num("seed")?,
        fingerprint: get("fingerprint")?.to_string(),
        config: ChainConfig {
            iterations: num("iterations")? as usize,
            burn_in: num("burn_in")? as usize,
            thin: num("thin")? as usize,
            seed: num("seed")?,
            chains: 1,
        },
        model: get("model")?.to_string(),
        theta_layout,
        draws,
    })
}
