//! Spatio-temporal mixed effects model on the transformed data:
//! `Y = X beta + S eta + xi`, with `h ~ N(Y, sigma2)`.
//!
//! Both Gaussian block updates use an eigendecomposition of the Gram matrix
//! (`X'X` or `S'S`) computed once, so each draw is exact and costs O(p^2)
//! or O(r^2) after the `X' r` / `S' r` products.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::diagnostics::nearest_rank;
use crate::engine::PreferredModel;
use crate::error::{HgtError, Result};
use crate::samplers::{sample_inverse_gamma, RandomStream};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmePriors {
    /// Prior variance of each regression coefficient.
    pub beta_variance: f64,
    pub variance_shape: f64,
    pub variance_rate: f64,
    pub eta_shape: f64,
    pub eta_rate: f64,
    pub xi_shape: f64,
    pub xi_rate: f64,
}

impl Default for SmePriors {
    fn default() -> Self {
        Self {
            beta_variance: 100.0,
            variance_shape: 1.0,
            variance_rate: 1.0,
            eta_shape: 1.0,
            eta_rate: 1.0,
            xi_shape: 1.0,
            xi_rate: 1.0,
        }
    }
}

impl SmePriors {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.beta_variance,
            self.variance_shape,
            self.variance_rate,
            self.eta_shape,
            self.eta_rate,
            self.xi_shape,
            self.xi_rate,
        ];
        if fields.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(HgtError::domain("all SME prior constants must be positive"))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmeState {
    pub beta: DVector<f64>,
    pub eta: DVector<f64>,
    pub xi: DVector<f64>,
    pub sigma2: f64,
    pub sigma_eta2: f64,
    pub sigma_xi2: f64,
}

impl SmeState {
    /// Zero effects and unit variances.
    pub fn initial(p: usize, r: usize, n: usize) -> Self {
        Self {
            beta: DVector::zeros(p),
            eta: DVector::zeros(r),
            xi: DVector::zeros(n),
            sigma2: 1.0,
            sigma_eta2: 1.0,
            sigma_xi2: 1.0,
        }
    }
}

/// Which conditionals a sweep visits. All are on by default; tests switch
/// some off to hold parameters fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepControl {
    pub update_beta: bool,
    pub update_eta: bool,
    pub update_xi: bool,
    pub update_variances: bool,
}

impl Default for SweepControl {
    fn default() -> Self {
        Self {
            update_beta: true,
            update_eta: true,
            update_xi: true,
            update_variances: true,
        }
    }
}

#[derive(Clone, Debug)]
struct SpectralGram {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

impl SpectralGram {
    fn new(design: &DMatrix<f64>) -> Self {
        let gram = design.transpose() * design;
        let eig = SymmetricEigen::new(gram);
        // Round-off can leave tiny negative eigenvalues on singular Grams.
        let values = eig.eigenvalues.map(|d| d.max(0.0));
        Self {
            vectors: eig.eigenvectors,
            values,
        }
    }

    /// Precision eigenvalues `d / sigma2 + 1 / prior_var`.
    fn precision(&self, sigma2: f64, prior_var: f64, block: &'static str) -> Result<DVector<f64>> {
        let lambda = self.values.map(|d| d / sigma2 + 1.0 / prior_var);
        let min = lambda.min();
        let max = lambda.max();
        if !(min.is_finite() && max.is_finite() && min > 0.0) {
            return Err(HgtError::NotPositiveDefinite {
                block,
                min_eigenvalue: min,
                max_eigenvalue: max,
            });
        }
        Ok(lambda)
    }

    fn mean(
        &self,
        rhs: &DVector<f64>,
        sigma2: f64,
        prior_var: f64,
        block: &'static str,
    ) -> Result<DVector<f64>> {
        let lambda = self.precision(sigma2, prior_var, block)?;
        let c = self.vectors.transpose() * rhs / sigma2;
        Ok(&self.vectors * c.component_div(&lambda))
    }

    fn draw(
        &self,
        stream: &mut RandomStream,
        rhs: &DVector<f64>,
        sigma2: f64,
        prior_var: f64,
        block: &'static str,
    ) -> Result<DVector<f64>> {
        let lambda = self.precision(sigma2, prior_var, block)?;
        let c = self.vectors.transpose() * rhs / sigma2;
        let m = DVector::from_fn(c.len(), |k, _| {
            c[k] / lambda[k] + stream.standard_normal() / lambda[k].sqrt()
        });
        Ok(&self.vectors * m)
    }
}

/// Gibbs sampler for a fixed `(X, S)` pair.
#[derive(Clone, Debug)]
pub struct SmeSampler {
    x: DMatrix<f64>,
    s: DMatrix<f64>,
    x_gram: SpectralGram,
    s_gram: SpectralGram,
    priors: SmePriors,
    control: SweepControl,
}

impl SmeSampler {
    pub fn new(x: DMatrix<f64>, s: DMatrix<f64>, priors: SmePriors) -> Result<Self> {
        priors.validate()?;
        if x.nrows() != s.nrows() {
            return Err(HgtError::Dimension(format!(
                "X has {} rows but S has {}",
                x.nrows(),
                s.nrows()
            )));
        }
        let x_gram = SpectralGram::new(&x);
        let s_gram = SpectralGram::new(&s);
        Ok(Self {
            x,
            s,
            x_gram,
            s_gram,
            priors,
            control: SweepControl::default(),
        })
    }

    pub fn with_control(mut self, control: SweepControl) -> Self {
        self.control = control;
        self
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn priors(&self) -> &SmePriors {
        &self.priors
    }

    pub fn initial_state(&self) -> SmeState {
        SmeState::initial(self.x.ncols(), self.s.ncols(), self.x.nrows())
    }

    fn check(&self, h: &DVector<f64>, state: &SmeState) -> Result<()> {
        let (n, p, r) = (self.x.nrows(), self.x.ncols(), self.s.ncols());
        if h.len() != n || state.beta.len() != p || state.eta.len() != r || state.xi.len() != n {
            return Err(HgtError::Dimension(format!(
                "expected h and xi of length {n}, beta {p}, eta {r}; got h {}, xi {}, beta {}, eta {}",
                h.len(),
                state.xi.len(),
                state.beta.len(),
                state.eta.len()
            )));
        }
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(state.sigma2) && ok(state.sigma_eta2) && ok(state.sigma_xi2)) {
            return Err(HgtError::domain("SME variances must be positive"));
        }
        Ok(())
    }

    /// Mean of the beta full conditional at the current state.
    pub fn beta_conditional_mean(
        &self,
        h: &DVector<f64>,
        state: &SmeState,
    ) -> Result<DVector<f64>> {
        self.check(h, state)?;
        let resid = h - &self.s * &state.eta - &state.xi;
        self.x_gram.mean(
            &(self.x.transpose() * resid),
            state.sigma2,
            self.priors.beta_variance,
            "beta",
        )
    }

    /// One scan: beta, eta, xi, sigma2, sigma_eta2, sigma_xi2.
    pub fn sweep(
        &self,
        stream: &mut RandomStream,
        h: &DVector<f64>,
        state: &mut SmeState,
    ) -> Result<()> {
        self.check(h, state)?;
        let mut s_eta = &self.s * &state.eta;
        let mut x_beta = &self.x * &state.beta;

        if self.control.update_beta {
            let resid = h - &s_eta - &state.xi;
            state.beta = self.x_gram.draw(
                stream,
                &(self.x.transpose() * resid),
                state.sigma2,
                self.priors.beta_variance,
                "beta",
            )?;
            x_beta = &self.x * &state.beta;
        }

        if self.control.update_eta {
            let resid = h - &x_beta - &state.xi;
            state.eta = self.s_gram.draw(
                stream,
                &(self.s.transpose() * resid),
                state.sigma2,
                state.sigma_eta2,
                "eta",
            )?;
            s_eta = &self.s * &state.eta;
        }

        if self.control.update_xi {
            let v = 1.0 / (1.0 / state.sigma2 + 1.0 / state.sigma_xi2);
            let sd = v.sqrt();
            for i in 0..h.len() {
                let mean = v * (h[i] - x_beta[i] - s_eta[i]) / state.sigma2;
                state.xi[i] = mean + sd * stream.standard_normal();
            }
        }

        if self.control.update_variances {
            let n = h.len() as f64;
            let r = state.eta.len() as f64;
            let resid = h - &x_beta - &s_eta - &state.xi;
            let p = &self.priors;
            state.sigma2 = sample_inverse_gamma(
                stream,
                n / 2.0 + p.variance_shape,
                resid.norm_squared() / 2.0 + p.variance_rate,
            )
            .map_err(|e| e.for_parameter("sigma2"))?;
            state.sigma_eta2 = sample_inverse_gamma(
                stream,
                r / 2.0 + p.eta_shape,
                state.eta.norm_squared() / 2.0 + p.eta_rate,
            )
            .map_err(|e| e.for_parameter("sigma_eta2"))?;
            state.sigma_xi2 = sample_inverse_gamma(
                stream,
                n / 2.0 + p.xi_shape,
                state.xi.norm_squared() / 2.0 + p.xi_rate,
            )
            .map_err(|e| e.for_parameter("sigma_xi2"))?;
        }
        Ok(())
    }
}

/// Stand-alone sweep. Rebuilds the Gram decompositions on every call; use
/// [`SmeSampler`] inside loops.
pub fn gibbs_sweep(
    stream: &mut RandomStream,
    h: &DVector<f64>,
    x: &DMatrix<f64>,
    s: &DMatrix<f64>,
    state: &SmeState,
    priors: &SmePriors,
) -> Result<SmeState> {
    let sampler = SmeSampler::new(x.clone(), s.clone(), *priors)?;
    let mut next = state.clone();
    sampler.sweep(stream, h, &mut next)?;
    Ok(next)
}

pub fn latent_y(state: &SmeState, x: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DVector<f64>> {
    if x.ncols() != state.beta.len()
        || s.ncols() != state.eta.len()
        || x.nrows() != s.nrows()
        || x.nrows() != state.xi.len()
    {
        return Err(HgtError::Dimension(
            "latent_y: X, S and the state do not conform".into(),
        ));
    }
    Ok(x * &state.beta + s * &state.eta + &state.xi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DaySummary {
    pub day: usize,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Per-day posterior summary of `sum_{i: day_i = t} S_i' eta`: mean and the
/// nearest-rank 2.5 and 97.5 percentiles across draws. Days are returned in
/// ascending order.
pub fn shared_effect_summary(
    eta_draws: &[DVector<f64>],
    s: &DMatrix<f64>,
    days: &[usize],
) -> Result<Vec<DaySummary>> {
    if eta_draws.is_empty() {
        return Err(HgtError::EmptyChain);
    }
    if days.len() != s.nrows() {
        return Err(HgtError::Dimension(format!(
            "{} day labels for {} basis rows",
            days.len(),
            s.nrows()
        )));
    }
    let mut unique: Vec<usize> = days.to_vec();
    unique.sort_unstable();
    unique.dedup();
    // Sum the basis rows per day once, then each draw is a dot product.
    let mut day_rows = DMatrix::zeros(unique.len(), s.ncols());
    for (i, &d) in days.iter().enumerate() {
        let k = unique.binary_search(&d).expect("day registered");
        let mut row = day_rows.row_mut(k);
        row += s.row(i);
    }
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(eta_draws.len()); unique.len()];
    for eta in eta_draws {
        if eta.len() != s.ncols() {
            return Err(HgtError::Dimension(format!(
                "eta draw of length {} for {} basis columns",
                eta.len(),
                s.ncols()
            )));
        }
        let totals = &day_rows * eta;
        for (k, v) in totals.iter().enumerate() {
            values[k].push(*v);
        }
    }
    Ok(unique
        .iter()
        .zip(values)
        .map(|(&day, mut v)| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            DaySummary {
                day,
                mean,
                lower: nearest_rank(&v, 2.5),
                upper: nearest_rank(&v, 97.5),
            }
        })
        .collect())
}

/// The mixed effects model as a preferred model over a full geometry
/// (training, validation and test rows), fitted on `train_rows`.
#[derive(Clone, Debug)]
pub struct SmeModel {
    x_all: DMatrix<f64>,
    s_all: DMatrix<f64>,
    train_rows: Vec<usize>,
    sampler: SmeSampler,
}

impl SmeModel {
    pub fn new(
        x_all: DMatrix<f64>,
        s_all: DMatrix<f64>,
        train_rows: Vec<usize>,
        priors: SmePriors,
    ) -> Result<Self> {
        if x_all.nrows() != s_all.nrows() {
            return Err(HgtError::Dimension(format!(
                "X has {} rows but S has {}",
                x_all.nrows(),
                s_all.nrows()
            )));
        }
        if let Some(&bad) = train_rows.iter().find(|&&i| i >= x_all.nrows()) {
            return Err(HgtError::Dimension(format!(
                "training row {bad} outside a geometry of {} rows",
                x_all.nrows()
            )));
        }
        let x = x_all.select_rows(&train_rows);
        let s = s_all.select_rows(&train_rows);
        let sampler = SmeSampler::new(x, s, priors)?;
        Ok(Self {
            x_all,
            s_all,
            train_rows,
            sampler,
        })
    }

    /// Model whose geometry is exactly the training rows.
    pub fn training_only(x: DMatrix<f64>, s: DMatrix<f64>, priors: SmePriors) -> Result<Self> {
        let rows = (0..x.nrows()).collect();
        Self::new(x, s, rows, priors)
    }

    pub fn sampler(&self) -> &SmeSampler {
        &self.sampler
    }

    pub fn p(&self) -> usize {
        self.x_all.ncols()
    }

    pub fn r(&self) -> usize {
        self.s_all.ncols()
    }

    /// Splits a stored parameter record into (beta, eta, sigma2, sigma_eta2, sigma_xi2).
    pub fn unpack<'a>(&self, theta: &'a [f64]) -> Result<(&'a [f64], &'a [f64], f64, f64, f64)> {
        let (p, r) = (self.p(), self.r());
        if theta.len() != p + r + 3 {
            return Err(HgtError::Dimension(format!(
                "parameter record of length {} (expected {})",
                theta.len(),
                p + r + 3
            )));
        }
        Ok((
            &theta[..p],
            &theta[p..p + r],
            theta[p + r],
            theta[p + r + 1],
            theta[p + r + 2],
        ))
    }
}

impl PreferredModel for SmeModel {
    type State = SmeState;

    fn name(&self) -> &str {
        "sme"
    }

    fn n_train(&self) -> usize {
        self.train_rows.len()
    }

    fn init(&self) -> Result<SmeState> {
        Ok(self.sampler.initial_state())
    }

    fn draw(
        &self,
        stream: &mut RandomStream,
        h: &[f64],
        state: &mut SmeState,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let hv = DVector::from_column_slice(h);
        self.sampler.sweep(stream, &hv, state)?;
        let y = latent_y(state, self.sampler.x(), self.sampler.s())?;
        let mut theta = Vec::with_capacity(self.p() + self.r() + 3);
        theta.extend(state.beta.iter());
        theta.extend(state.eta.iter());
        theta.extend([state.sigma2, state.sigma_eta2, state.sigma_xi2]);
        Ok((y.as_slice().to_vec(), theta))
    }

    fn parameter_layout(&self) -> Vec<(String, usize)> {
        vec![
            ("beta".into(), self.p()),
            ("eta".into(), self.r()),
            ("sigma2".into(), 1),
            ("sigma_eta2".into(), 1),
            ("sigma_xi2".into(), 1),
        ]
    }

    fn predict(
        &self,
        stream: &mut RandomStream,
        theta: &[f64],
        rows: &[usize],
    ) -> Result<Vec<f64>> {
        let (beta, eta, _, _, sigma_xi2) = self.unpack(theta)?;
        let sd = sigma_xi2.sqrt();
        rows.iter()
            .map(|&i| {
                if i >= self.x_all.nrows() {
                    return Err(HgtError::Dimension(format!(
                        "prediction row {i} outside a geometry of {} rows",
                        self.x_all.nrows()
                    )));
                }
                let xb: f64 = self.x_all.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
                let se: f64 = self.s_all.row(i).iter().zip(eta).map(|(a, b)| a * b).sum();
                Ok(xb + se + sd * stream.standard_normal())
            })
            .collect()
    }
}
