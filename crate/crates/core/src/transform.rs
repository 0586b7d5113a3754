//! The transformation layer: conjugate (DY) densities, exact draws of the
//! transformed data `h` given the observations, and the updates of the
//! transformation hyperparameters.

use statrs::function::gamma::ln_gamma;

use crate::data::{softplus, Observation, ResponseKind};
use crate::error::{HgtError, Result};
use crate::samplers::{
    sample_gamma, sample_inverse_gamma, sample_log_gamma, sample_logit_beta, sample_normal,
    slice_sample, Interval, RandomStream, SliceConfig,
};

/// Transformation hyperparameters. The Gaussian pair (alpha, kappa) is
/// fixed at (0, 0) and therefore not stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformHyper {
    /// Gaussian observation variance `v`.
    pub gaussian_variance: f64,
    pub binomial_alpha: f64,
    pub binomial_kappa: f64,
    pub poisson_alpha: f64,
    pub poisson_kappa: f64,
}

impl Default for TransformHyper {
    fn default() -> Self {
        Self {
            gaussian_variance: 1.0,
            binomial_alpha: 1.0,
            binomial_kappa: 2.0,
            poisson_alpha: 1.0,
            poisson_kappa: 2.0,
        }
    }
}

impl TransformHyper {
    pub const NAMES: [&'static str; 5] = [
        "gaussian_variance",
        "binomial_alpha",
        "binomial_kappa",
        "poisson_alpha",
        "poisson_kappa",
    ];

    /// Every alpha and `v` set to `value`, both kappas at `2 * value` so that
    /// the binomial kappa > alpha holds.
    pub fn uniform(value: f64) -> Self {
        Self {
            gaussian_variance: value,
            binomial_alpha: value,
            binomial_kappa: 2.0 * value,
            poisson_alpha: value,
            poisson_kappa: 2.0 * value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.gaussian_variance) {
            return Err(HgtError::domain(format!(
                "gaussian variance must be positive, got {}",
                self.gaussian_variance
            )));
        }
        if !ok(self.binomial_alpha) || !(self.binomial_kappa > self.binomial_alpha) {
            return Err(HgtError::domain(format!(
                "binomial hyperparameters need kappa > alpha > 0, got alpha {} kappa {}",
                self.binomial_alpha, self.binomial_kappa
            )));
        }
        if !ok(self.poisson_alpha) || !ok(self.poisson_kappa) {
            return Err(HgtError::domain(format!(
                "poisson hyperparameters must be positive, got alpha {} kappa {}",
                self.poisson_alpha, self.poisson_kappa
            )));
        }
        Ok(())
    }

    /// The DY (alpha, kappa) pair for `kind`.
    pub fn alpha_kappa(&self, kind: ResponseKind) -> (f64, f64) {
        match kind {
            ResponseKind::Gaussian => (0.0, 0.0),
            ResponseKind::Binomial => (self.binomial_alpha, self.binomial_kappa),
            ResponseKind::Poisson => (self.poisson_alpha, self.poisson_kappa),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.gaussian_variance,
            self.binomial_alpha,
            self.binomial_kappa,
            self.poisson_alpha,
            self.poisson_kappa,
        ]
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != 5 {
            return Err(HgtError::Dimension(format!(
                "expected 5 transformation hyperparameters, got {}",
                values.len()
            )));
        }
        Ok(Self {
            gaussian_variance: values[0],
            binomial_alpha: values[1],
            binomial_kappa: values[2],
            poisson_alpha: values[3],
            poisson_kappa: values[4],
        })
    }
}

/// Hyperprior constants. `v ~ IG(a1, b1)`, `alpha_j ~ Gamma(a_j, b_j)`,
/// `kappa_2 - alpha_2 ~ Gamma(zeta_2, eta_2)` and `kappa_3 ~ Gamma(zeta_3, eta_3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformHyperPrior {
    pub variance_shape: f64,
    pub variance_rate: f64,
    pub binomial_alpha_shape: f64,
    pub binomial_alpha_rate: f64,
    pub poisson_alpha_shape: f64,
    pub poisson_alpha_rate: f64,
    pub binomial_kappa_shape: f64,
    pub binomial_kappa_rate: f64,
    pub poisson_kappa_shape: f64,
    pub poisson_kappa_rate: f64,
}

impl Default for TransformHyperPrior {
    fn default() -> Self {
        Self {
            variance_shape: 1.0,
            variance_rate: 1.0,
            binomial_alpha_shape: 1.0,
            binomial_alpha_rate: 1.0,
            poisson_alpha_shape: 1.0,
            poisson_alpha_rate: 1.0,
            binomial_kappa_shape: 1.0,
            binomial_kappa_rate: 1.0,
            poisson_kappa_shape: 1.0,
            poisson_kappa_rate: 1.0,
        }
    }
}

impl TransformHyperPrior {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.variance_shape,
            self.variance_rate,
            self.binomial_alpha_shape,
            self.binomial_alpha_rate,
            self.poisson_alpha_shape,
            self.poisson_alpha_rate,
            self.binomial_kappa_shape,
            self.binomial_kappa_rate,
            self.poisson_kappa_shape,
            self.poisson_kappa_rate,
        ];
        if fields.iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(())
        } else {
            Err(HgtError::domain(
                "all transformation hyperprior constants must be positive",
            ))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransformState {
    pub h: Vec<f64>,
    pub hyper: TransformHyper,
}

/// Unnormalised DY log density `alpha h - kappa psi(h)`.
pub fn dy_log_density(h: f64, alpha: f64, kappa: f64, kind: ResponseKind) -> Result<f64> {
    match kind {
        ResponseKind::Gaussian => {
            if !(alpha.is_finite() && kappa.is_finite() && kappa >= 0.0) {
                return Err(HgtError::domain(format!(
                    "gaussian DY parameters need kappa >= 0, got alpha {alpha} kappa {kappa}"
                )));
            }
        }
        ResponseKind::Binomial => {
            if !(alpha > 0.0 && kappa > alpha && kappa.is_finite()) {
                return Err(HgtError::domain(format!(
                    "binomial DY parameters need kappa > alpha > 0, got alpha {alpha} kappa {kappa}"
                )));
            }
        }
        ResponseKind::Poisson => {
            if !(alpha > 0.0 && kappa > 0.0 && alpha.is_finite() && kappa.is_finite()) {
                return Err(HgtError::domain(format!(
                    "poisson DY parameters must be positive, got alpha {alpha} kappa {kappa}"
                )));
            }
        }
    }
    Ok(alpha * h - kappa * kind.psi(h))
}

/// Exact draw of one transformed datum from its full conditional.
pub fn sample_h_given_z(
    stream: &mut RandomStream,
    obs: &Observation,
    hyper: &TransformHyper,
) -> Result<f64> {
    let z = obs.value;
    match obs.kind {
        ResponseKind::Gaussian => sample_normal(stream, z, hyper.gaussian_variance),
        ResponseKind::Binomial => {
            let b = obs.scale();
            let (a, k) = (hyper.binomial_alpha, hyper.binomial_kappa);
            if !(a > 0.0 && k > a) {
                return Err(HgtError::domain(format!(
                    "binomial conditional is improper: need kappa > alpha > 0, got alpha {a} kappa {k}"
                )));
            }
            sample_logit_beta(stream, a + z, k - a + b - z)
        }
        ResponseKind::Poisson => {
            let (a, k) = (hyper.poisson_alpha, hyper.poisson_kappa);
            if !(a > 0.0 && k > 0.0) {
                return Err(HgtError::domain(format!(
                    "poisson conditional is improper: need alpha > 0 and kappa > 0, got alpha {a} kappa {k}"
                )));
            }
            Ok(sample_log_gamma(stream, a + z)? - (k + 1.0).ln())
        }
    }
}

/// Draws every element of `h` in dataset order.
pub fn sample_h_all(
    stream: &mut RandomStream,
    observations: &[Observation],
    hyper: &TransformHyper,
    h: &mut [f64],
) -> Result<()> {
    if h.len() != observations.len() {
        return Err(HgtError::Dimension(format!(
            "h has length {} but there are {} observations",
            h.len(),
            observations.len()
        )));
    }
    for (i, (obs, slot)) in observations.iter().zip(h.iter_mut()).enumerate() {
        *slot = sample_h_given_z(stream, obs, hyper).map_err(|e| e.at_observation(i))?;
    }
    Ok(())
}

/// Closed-form posterior mean of the data-scale mean: the saturated predictor.
pub fn data_scale_posterior_mean(obs: &Observation, hyper: &TransformHyper) -> f64 {
    let z = obs.value;
    match obs.kind {
        ResponseKind::Gaussian => z,
        ResponseKind::Binomial => {
            let b = obs.scale();
            b * (hyper.binomial_alpha + z) / (hyper.binomial_kappa + b)
        }
        ResponseKind::Poisson => (hyper.poisson_alpha + z) / (hyper.poisson_kappa + 1.0),
    }
}

/// Sufficient statistics of `(z, h)` entering the hyperparameter conditionals.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HyperStatistics {
    pub gaussian_count: usize,
    pub gaussian_sq_residual: f64,
    pub binomial_count: usize,
    pub binomial_h_sum: f64,
    pub binomial_softplus_sum: f64,
    pub poisson_count: usize,
    pub poisson_h_sum: f64,
    pub poisson_exp_sum: f64,
}

impl HyperStatistics {
    pub fn collect(observations: &[Observation], h: &[f64]) -> Result<Self> {
        if h.len() != observations.len() {
            return Err(HgtError::Dimension(format!(
                "h has length {} but there are {} observations",
                h.len(),
                observations.len()
            )));
        }
        let mut s = Self::default();
        for (obs, &hi) in observations.iter().zip(h) {
            match obs.kind {
                ResponseKind::Gaussian => {
                    s.gaussian_count += 1;
                    s.gaussian_sq_residual += (obs.value - hi).powi(2);
                }
                ResponseKind::Binomial => {
                    s.binomial_count += 1;
                    s.binomial_h_sum += hi;
                    s.binomial_softplus_sum += softplus(hi);
                }
                ResponseKind::Poisson => {
                    s.poisson_count += 1;
                    s.poisson_h_sum += hi;
                    s.poisson_exp_sum += hi.exp();
                }
            }
        }
        Ok(s)
    }
}

/// Log full conditional of the binomial alpha on (0, kappa), up to a constant.
pub fn log_conditional_binomial_alpha(
    alpha: f64,
    kappa: f64,
    stats: &HyperStatistics,
    prior: &TransformHyperPrior,
) -> f64 {
    if !(alpha > 0.0 && alpha < kappa) {
        return f64::NEG_INFINITY;
    }
    let n = stats.binomial_count as f64;
    (prior.binomial_alpha_shape - 1.0) * alpha.ln() - prior.binomial_alpha_rate * alpha
        + (prior.binomial_kappa_shape - 1.0) * (kappa - alpha).ln()
        + prior.binomial_kappa_rate * alpha
        - n * (ln_gamma(alpha) + ln_gamma(kappa - alpha))
        + alpha * stats.binomial_h_sum
}

/// Log full conditional of the binomial kappa on (alpha, inf).
pub fn log_conditional_binomial_kappa(
    kappa: f64,
    alpha: f64,
    stats: &HyperStatistics,
    prior: &TransformHyperPrior,
) -> f64 {
    if !(kappa > alpha && kappa.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let n = stats.binomial_count as f64;
    (prior.binomial_kappa_shape - 1.0) * (kappa - alpha).ln() - prior.binomial_kappa_rate * kappa
        + n * (ln_gamma(kappa) - ln_gamma(kappa - alpha))
        - kappa * stats.binomial_softplus_sum
}

/// Log full conditional of the Poisson alpha on (0, inf), up to a constant.
pub fn log_conditional_poisson_alpha(
    alpha: f64,
    kappa: f64,
    stats: &HyperStatistics,
    prior: &TransformHyperPrior,
) -> f64 {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let n = stats.poisson_count as f64;
    (prior.poisson_alpha_shape - 1.0) * alpha.ln() - prior.poisson_alpha_rate * alpha
        + n * (alpha * kappa.ln() - ln_gamma(alpha))
        + alpha * stats.poisson_h_sum
}

/// Log full conditional of the Poisson kappa on (0, inf). It is the
/// `Gamma(zeta_3 + I_3 alpha, eta_3 + sum exp(h))` density, which
/// [`update_hyperparameters`] draws directly.
pub fn log_conditional_poisson_kappa(
    kappa: f64,
    alpha: f64,
    stats: &HyperStatistics,
    prior: &TransformHyperPrior,
) -> f64 {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let n = stats.poisson_count as f64;
    (prior.poisson_kappa_shape - 1.0 + n * alpha) * kappa.ln()
        - (prior.poisson_kappa_rate + stats.poisson_exp_sum) * kappa
}

/// One slice move on `alpha` in (0, kappa), carried out on `u = ln alpha`.
pub fn slice_alpha<F>(
    stream: &mut RandomStream,
    alpha: f64,
    kappa: f64,
    log_conditional: F,
    cfg: &SliceConfig,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let support = Interval::new(f64::NEG_INFINITY, kappa.ln())?;
    let u = slice_sample(
        stream,
        |u| log_conditional(u.exp()) + u,
        alpha.ln(),
        support,
        cfg,
    )?;
    Ok(u.exp())
}

/// One slice move on `kappa` in (alpha, inf), carried out on `w = ln(kappa - alpha)`.
pub fn slice_kappa<F>(
    stream: &mut RandomStream,
    kappa: f64,
    alpha: f64,
    log_conditional: F,
    cfg: &SliceConfig,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let w = slice_sample(
        stream,
        |w| log_conditional(alpha + w.exp()) + w,
        (kappa - alpha).ln(),
        Interval::real_line(),
        cfg,
    )?;
    Ok(alpha + w.exp())
}

/// Fixed-scan update of `v`, then binomial alpha, kappa, then Poisson alpha, kappa.
pub fn update_hyperparameters(
    stream: &mut RandomStream,
    state: &TransformState,
    observations: &[Observation],
    prior: &TransformHyperPrior,
    cfg: &SliceConfig,
) -> Result<TransformHyper> {
    state.hyper.validate()?;
    let stats = HyperStatistics::collect(observations, &state.h)?;
    let mut hyper = state.hyper;

    hyper.gaussian_variance = sample_inverse_gamma(
        stream,
        stats.gaussian_count as f64 / 2.0 + prior.variance_shape,
        stats.gaussian_sq_residual / 2.0 + prior.variance_rate,
    )
    .map_err(|e| e.for_parameter("gaussian_variance"))?;

    let kappa = hyper.binomial_kappa;
    hyper.binomial_alpha = slice_alpha(
        stream,
        hyper.binomial_alpha,
        kappa,
        |a| log_conditional_binomial_alpha(a, kappa, &stats, prior),
        cfg,
    )
    .map_err(|e| e.for_parameter("binomial_alpha"))?;

    let alpha = hyper.binomial_alpha;
    hyper.binomial_kappa = slice_kappa(
        stream,
        hyper.binomial_kappa,
        alpha,
        |k| log_conditional_binomial_kappa(k, alpha, &stats, prior),
        cfg,
    )
    .map_err(|e| e.for_parameter("binomial_kappa"))?;

    let kappa = hyper.poisson_kappa;
    let u = slice_sample(
        stream,
        |u| log_conditional_poisson_alpha(u.exp(), kappa, &stats, prior) + u,
        hyper.poisson_alpha.ln(),
        Interval::real_line(),
        cfg,
    )
    .map_err(|e| e.for_parameter("poisson_alpha"))?;
    hyper.poisson_alpha = u.exp();

    hyper.poisson_kappa = sample_gamma(
        stream,
        prior.poisson_kappa_shape + stats.poisson_count as f64 * hyper.poisson_alpha,
        prior.poisson_kappa_rate + stats.poisson_exp_sum,
    )
    .map_err(|e| e.for_parameter("poisson_kappa"))?
    .max(f64::MIN_POSITIVE);

    // Guard against the log-coordinate round trip landing exactly on a bound.
    if hyper.binomial_kappa <= hyper.binomial_alpha {
        hyper.binomial_kappa = next_up(hyper.binomial_alpha);
    }
    hyper.validate()?;
    Ok(hyper)
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}
