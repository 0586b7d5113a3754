//! Seedable random-variate primitives and a univariate slice sampler.
//!
//! Every draw in the crate goes through a [`RandomStream`]. Streams are
//! ChaCha8 generators keyed by `(seed, stream_id)`, so each chain (and each
//! role inside a chain) gets its own reproducible, independent sequence.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Open01, Poisson, StandardNormal};

use crate::error::{HgtError, Result};

/// Above this rate Poisson draws use a rounded normal approximation.
pub const POISSON_EXACT_LIMIT: f64 = 1.0e6;

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform index in `0..len`. `len` must be non-zero.
    pub fn index(&mut self, len: usize) -> usize {
        self.rng.random_range(0..len)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(HgtError::domain(format!(
            "{name} must be a positive finite number, got {value}"
        )))
    }
}

pub fn sample_normal(stream: &mut RandomStream, mean: f64, variance: f64) -> Result<f64> {
    require_positive("variance", variance)?;
    if !mean.is_finite() {
        return Err(HgtError::domain(format!("mean must be finite, got {mean}")));
    }
    Ok(mean + variance.sqrt() * stream.standard_normal())
}

/// Logarithm of a Gamma(shape, 1) draw, computed without underflow.
///
/// For shape < 1 the draw uses `G_{a} = G_{a+1} U^{1/a}`, kept in log space so
/// very small shapes (which put almost all mass near zero) stay finite.
pub fn sample_log_gamma(stream: &mut RandomStream, shape: f64) -> Result<f64> {
    require_positive("gamma shape", shape)?;
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0)
            .map_err(|e| HgtError::domain(e.to_string()))?
            .sample(stream);
        Ok(g.max(f64::MIN_POSITIVE).ln())
    } else {
        let g: f64 = Gamma::new(shape + 1.0, 1.0)
            .map_err(|e| HgtError::domain(e.to_string()))?
            .sample(stream);
        Ok(g.max(f64::MIN_POSITIVE).ln() + stream.uniform().ln() / shape)
    }
}

pub fn sample_gamma(stream: &mut RandomStream, shape: f64, rate: f64) -> Result<f64> {
    require_positive("gamma shape", shape)?;
    require_positive("gamma rate", rate)?;
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0 / rate)
            .map_err(|e| HgtError::domain(e.to_string()))?
            .sample(stream);
        Ok(g.max(f64::MIN_POSITIVE))
    } else {
        let lg = sample_log_gamma(stream, shape)?;
        Ok((lg - rate.ln()).exp().max(f64::MIN_POSITIVE))
    }
}

/// Logit of a Beta(a, b) draw, `ln G_a - ln G_b`, exact even when the draw
/// itself would round to 0 or 1.
pub fn sample_logit_beta(stream: &mut RandomStream, a: f64, b: f64) -> Result<f64> {
    require_positive("beta shape a", a)?;
    require_positive("beta shape b", b)?;
    let la = sample_log_gamma(stream, a)?;
    let lb = sample_log_gamma(stream, b)?;
    Ok(la - lb)
}

pub fn sample_beta(stream: &mut RandomStream, a: f64, b: f64) -> Result<f64> {
    let logit = sample_logit_beta(stream, a, b)?;
    let p = 1.0 / (1.0 + (-logit).exp());
    Ok(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

pub fn sample_inverse_gamma(stream: &mut RandomStream, shape: f64, rate: f64) -> Result<f64> {
    let g = sample_gamma(stream, shape, rate)?;
    Ok(1.0 / g)
}

/// Poisson draw returned as a float count.
pub fn sample_poisson(stream: &mut RandomStream, rate: f64) -> Result<f64> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(HgtError::domain(format!(
            "poisson rate must be finite and non-negative, got {rate}"
        )));
    }
    if rate == 0.0 {
        return Ok(0.0);
    }
    if rate > POISSON_EXACT_LIMIT {
        let draw = rate + rate.sqrt() * stream.standard_normal();
        return Ok(draw.round().max(0.0));
    }
    let dist = Poisson::new(rate).map_err(|e| HgtError::domain(e.to_string()))?;
    Ok(dist.sample(stream))
}

pub fn sample_binomial(stream: &mut RandomStream, trials: u64, p: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(HgtError::domain(format!(
            "binomial probability must lie in [0, 1], got {p}"
        )));
    }
    let dist = Binomial::new(trials, p).map_err(|e| HgtError::domain(e.to_string()))?;
    Ok(dist.sample(stream))
}

/// A possibly unbounded interval used as the support of a slice sampler.
///
/// Finite endpoints are excluded from proposals (except for a single-point
/// interval, whose only value is returned as is).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(HgtError::domain(format!(
                "invalid interval [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn real_line() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn positive() -> Self {
        Self {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    pub fn is_point(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, x: f64) -> bool {
        if self.is_point() {
            x == self.lower
        } else {
            x > self.lower && x < self.upper
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceConfig {
    pub initial_width: f64,
    pub max_stepout: usize,
    pub max_shrink: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        Self {
            initial_width: 1.0,
            max_stepout: 50,
            max_shrink: 100,
        }
    }
}

impl SliceConfig {
    pub fn new(initial_width: f64, max_stepout: usize, max_shrink: usize) -> Result<Self> {
        let config = Self {
            initial_width,
            max_stepout,
            max_shrink,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("slice initial_width", self.initial_width)?;
        if self.max_stepout == 0 || self.max_shrink == 0 {
            return Err(HgtError::domain(
                "slice max_stepout and max_shrink must be positive",
            ));
        }
        Ok(())
    }
}

/// One stepping-out + shrinkage slice-sampling transition (Neal 2003).
///
/// Candidates whose log density is NaN or outside `support` are treated as
/// lying outside the slice.
pub fn slice_sample<F>(
    stream: &mut RandomStream,
    mut log_density: F,
    current: f64,
    support: Interval,
    config: &SliceConfig,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    config.validate()?;
    if support.is_point() {
        return Ok(support.lower);
    }
    if !support.contains(current) {
        return Err(HgtError::domain(format!(
            "current point {current} lies outside the support [{}, {}]",
            support.lower, support.upper
        )));
    }
    let f0 = log_density(current);
    if f0.is_nan() {
        return Err(HgtError::NanLogDensity(current));
    }
    if f0 == f64::NEG_INFINITY {
        return Err(HgtError::domain(format!(
            "log density is -inf at the current point {current}"
        )));
    }

    let mut eval = |x: f64| -> f64 {
        if !support.contains(x) {
            return f64::NEG_INFINITY;
        }
        let v = log_density(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    // -Exp(1) offset: the slice level is uniform under the density.
    let level = f0 + stream.uniform().ln();
    let w = config.initial_width;
    let m = config.max_stepout;

    let mut left = current - w * stream.uniform();
    let mut right = left + w;
    let mut j = (stream.uniform() * m as f64).floor() as usize;
    let mut k = (m - 1).saturating_sub(j);
    while j > 0 && left > support.lower && level < eval(left) {
        left -= w;
        j -= 1;
    }
    while k > 0 && right < support.upper && level < eval(right) {
        right += w;
        k -= 1;
    }
    left = left.max(support.lower);
    right = right.min(support.upper);

    for _ in 0..config.max_shrink {
        let candidate = left + stream.uniform() * (right - left);
        if level < eval(candidate) {
            return Ok(candidate);
        }
        if candidate < current {
            left = candidate;
        } else {
            right = candidate;
        }
    }
    Err(HgtError::SliceExhausted {
        current,
        lower: left,
        upper: right,
        level,
        max_shrink: config.max_shrink,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, Normal as NormalDist};

    const N: usize = 1_000_000;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    fn ks_one_sample(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / na - j as f64 / nb).abs());
        }
        d
    }

    fn draws(n: usize, mut f: impl FnMut() -> f64) -> Vec<f64> {
        (0..n).map(|_| f()).collect()
    }

    #[test]
    fn same_seed_and_stream_reproduce_exactly() {
        let mut a = RandomStream::new(42, 3);
        let mut b = RandomStream::new(42, 3);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let mut a = RandomStream::new(42, 0);
        let mut b = RandomStream::new(42, 1);
        let n = 200_000;
        let xa = draws(n, || a.standard_normal());
        let xb = draws(n, || b.standard_normal());
        assert_ne!(xa[..8], xb[..8]);
        let corr = xa.iter().zip(&xb).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn normal_moments() {
        let mut s = RandomStream::new(1, 0);
        let xs = draws(N, || sample_normal(&mut s, 0.0, 1.0).unwrap());
        assert!(mean_var(&xs).0.abs() < 0.005);
        let xs = draws(N, || sample_normal(&mut s, 2.0, 4.0).unwrap());
        let v = mean_var(&xs).1;
        assert!((3.95..=4.05).contains(&v), "variance {v}");
    }

    #[test]
    fn normal_rejects_degenerate_variance() {
        let mut s = RandomStream::new(1, 0);
        assert!(matches!(
            sample_normal(&mut s, 5.0, 0.0),
            Err(HgtError::Domain(_))
        ));
        assert!(sample_normal(&mut s, 5.0, -1.0).is_err());
    }

    #[test]
    fn gamma_mean_and_exponential_tail() {
        let mut s = RandomStream::new(2, 0);
        let xs = draws(N, || sample_gamma(&mut s, 6.0, 2.0).unwrap());
        let m = mean_var(&xs).0;
        assert!((2.99..=3.01).contains(&m), "mean {m}");
        let xs = draws(N, || sample_gamma(&mut s, 1.0, 1.0).unwrap());
        let tail = xs.iter().filter(|&&x| x > 1.0).count() as f64 / N as f64;
        assert!((tail - (-1.0f64).exp()).abs() < 0.005, "tail {tail}");
    }

    #[test]
    fn gamma_small_shape_matches_cdf() {
        // Exercises the shape < 1 boost path.
        let mut s = RandomStream::new(3, 0);
        let xs = draws(200_000, || sample_gamma(&mut s, 0.3, 2.0).unwrap());
        let dist = GammaDist::new(0.3, 2.0).unwrap();
        let d = ks_one_sample(xs, |x| dist.cdf(x));
        assert!(d < 1.63 / (200_000f64).sqrt(), "ks {d}");
    }

    #[test]
    fn log_gamma_stays_finite_for_tiny_shapes() {
        let mut s = RandomStream::new(4, 0);
        for _ in 0..10_000 {
            let lg = sample_log_gamma(&mut s, 1e-4).unwrap();
            assert!(lg.is_finite());
        }
    }

    #[test]
    fn gamma_rejects_zero_shape() {
        let mut s = RandomStream::new(2, 0);
        assert!(sample_gamma(&mut s, 0.0, 1.0).is_err());
        assert!(sample_gamma(&mut s, 1.0, 0.0).is_err());
        assert!(sample_log_gamma(&mut s, f64::NAN).is_err());
    }

    #[test]
    fn beta_uniform_ks_and_mean() {
        let mut s = RandomStream::new(5, 0);
        let xs = draws(N, || sample_beta(&mut s, 1.0, 1.0).unwrap());
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
        let d = ks_one_sample(xs, |x| x.clamp(0.0, 1.0));
        assert!(d < 0.002, "ks {d}");
        let xs = draws(N, || sample_beta(&mut s, 6.0, 96.0).unwrap());
        let m = mean_var(&xs).0;
        assert!((0.0585..=0.0591).contains(&m), "mean {m}");
    }

    #[test]
    fn beta_rejects_negative_shape() {
        let mut s = RandomStream::new(5, 0);
        assert!(sample_beta(&mut s, -1.0, 1.0).is_err());
    }

    #[test]
    fn inverse_gamma_mean_and_reciprocal() {
        let mut s = RandomStream::new(6, 0);
        let xs = draws(N, || sample_inverse_gamma(&mut s, 3.0, 4.0).unwrap());
        let m = mean_var(&xs).0;
        assert!((1.99..=2.01).contains(&m), "mean {m}");

        let n = 100_000;
        let recip = draws(n, || 1.0 / sample_inverse_gamma(&mut s, 3.0, 4.0).unwrap());
        let direct = draws(n, || sample_gamma(&mut s, 3.0, 4.0).unwrap());
        let d = ks_two_sample(recip, direct);
        // Two-sample KS critical value at level 0.01.
        let crit = 1.628 * (2.0 / n as f64).sqrt();
        assert!(d < crit, "ks {d} >= {crit}");
    }

    #[test]
    fn inverse_gamma_rejects_zero_rate() {
        let mut s = RandomStream::new(6, 0);
        assert!(sample_inverse_gamma(&mut s, 1.0, 0.0).is_err());
    }

    #[test]
    fn poisson_and_binomial_moments() {
        let mut s = RandomStream::new(7, 0);
        let xs = draws(200_000, || sample_poisson(&mut s, 3.5).unwrap());
        let (m, v) = mean_var(&xs);
        assert!((m - 3.5).abs() < 0.02 && (v - 3.5).abs() < 0.06);
        let big = sample_poisson(&mut s, 1e9).unwrap();
        assert!((big - 1e9).abs() < 1e6);
        assert_eq!(sample_poisson(&mut s, 0.0).unwrap(), 0.0);
        assert!(sample_poisson(&mut s, -1.0).is_err());
        let xs = draws(200_000, || {
            sample_binomial(&mut s, 100, 0.3).unwrap() as f64
        });
        let (m, v) = mean_var(&xs);
        assert!((m - 30.0).abs() < 0.05 && (v - 21.0).abs() < 0.3);
        assert!(sample_binomial(&mut s, 10, 1.5).is_err());
    }

    fn run_chain(
        s: &mut RandomStream,
        n: usize,
        start: f64,
        support: Interval,
        logp: impl Fn(f64) -> f64,
    ) -> Vec<f64> {
        let cfg = SliceConfig::default();
        let mut x = start;
        (0..n)
            .map(|_| {
                x = slice_sample(s, &logp, x, support, &cfg).unwrap();
                x
            })
            .collect()
    }

    #[test]
    fn slice_preserves_standard_normal() {
        let mut s = RandomStream::new(8, 0);
        let xs = run_chain(&mut s, 100_000, 0.0, Interval::real_line(), |x| {
            -0.5 * x * x
        });
        let normal = NormalDist::new(0.0, 1.0).unwrap();
        let d = ks_one_sample(xs, |x| normal.cdf(x));
        assert!(d < 0.01, "ks {d}");
    }

    #[test]
    fn slice_preserves_gamma_on_half_line() {
        let mut s = RandomStream::new(9, 0);
        let xs = run_chain(&mut s, 100_000, 1.0, Interval::positive(), |x| x.ln() - x);
        assert!(xs.iter().all(|&x| x > 0.0));
        let m = mean_var(&xs).0;
        assert!((1.97..=2.03).contains(&m), "mean {m}");
        let dist = GammaDist::new(2.0, 1.0).unwrap();
        let d = ks_one_sample(xs, |x| dist.cdf(x));
        assert!(d < 0.01, "ks {d}");
    }

    #[test]
    fn slice_preserves_beta_on_bounded_interval() {
        let mut s = RandomStream::new(10, 0);
        let support = Interval::new(0.0, 1.0).unwrap();
        // Beta(2, 5): CDF has a closed form.
        let xs = run_chain(&mut s, 100_000, 0.3, support, |x| {
            x.ln() + 4.0 * (1.0 - x).ln()
        });
        // I_x(2,5) = 1 - (1-x)^6 - 6x(1-x)^5
        let exact = |x: f64| 1.0 - (1.0 - x).powi(6) - 6.0 * x * (1.0 - x).powi(5);
        let d = ks_one_sample(xs, exact);
        assert!(d < 0.01, "ks {d}");
    }

    #[test]
    fn slice_on_point_support_returns_point() {
        let mut s = RandomStream::new(11, 0);
        let support = Interval::new(3.0, 3.0).unwrap();
        let x = slice_sample(&mut s, |_| 0.0, 3.0, support, &SliceConfig::default()).unwrap();
        assert_eq!(x, 3.0);
    }

    #[test]
    fn slice_errors_on_nan_current() {
        let mut s = RandomStream::new(12, 0);
        let r = slice_sample(
            &mut s,
            |_| f64::NAN,
            0.5,
            Interval::real_line(),
            &SliceConfig::default(),
        );
        assert!(matches!(r, Err(HgtError::NanLogDensity(_))));
    }

    #[test]
    fn slice_reports_exhaustion() {
        // A spike narrower than anything 3 halvings can reach.
        let mut s = RandomStream::new(13, 0);
        let cfg = SliceConfig::new(1.0e6, 1, 3).unwrap();
        let r = slice_sample(
            &mut s,
            |x: f64| if x.abs() < 1e-9 { 0.0 } else { -1e300 },
            0.0,
            Interval::real_line(),
            &cfg,
        );
        assert!(matches!(
            r,
            Err(HgtError::SliceExhausted { max_shrink: 3, .. })
        ));
    }

    #[test]
    fn slice_config_rejects_zero_fields() {
        assert!(SliceConfig::new(0.0, 1, 1).is_err());
        assert!(SliceConfig::new(1.0, 0, 1).is_err());
        assert!(SliceConfig::new(1.0, 1, 0).is_err());
    }
}
