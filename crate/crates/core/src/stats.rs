//! Small statistical helpers shared by the samplers and probes: Monte-Carlo
//! means with standard errors, a two-sample energy statistic, and a
//! Kolmogorov-Smirnov distance against the uniform law.

use num_complex::Complex64;
use rand::Rng;

/// `e(t) = exp(2πit)`.
pub fn e2pi(t: f64) -> Complex64 {
    let a = std::f64::consts::TAU * t;
    Complex64::new(a.cos(), a.sin())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn mean_stderr(samples: &[f64]) -> MeanStderr {
    let n = samples.len();
    if n == 0 {
        return MeanStderr { mean: 0.0, stderr: 0.0, n: 0 };
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanStderr { mean, stderr: 0.0, n };
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    MeanStderr { mean, stderr: (var / n as f64).sqrt(), n }
}

/// Monte-Carlo mean of complex samples with a scalar standard error
/// (the larger of the real and imaginary component errors).
pub fn complex_mean_stderr(samples: &[Complex64]) -> (Complex64, f64) {
    let re: Vec<f64> = samples.iter().map(|z| z.re).collect();
    let im: Vec<f64> = samples.iter().map(|z| z.im).collect();
    let mre = mean_stderr(&re);
    let mim = mean_stderr(&im);
    (Complex64::new(mre.mean, mim.mean), mre.stderr.max(mim.stderr))
}

/// Two-sample energy statistic `2·E d(X,Y) - E d(X,X') - E d(Y,Y')`,
/// estimated by `pairs` random pairs per term. The population value is zero
/// exactly when the two laws coincide; `sigma` is the standard error of the
/// estimator, so `|value| <= 3 sigma` is the usual acceptance gate.
#[derive(Clone, Copy, Debug)]
pub struct EnergyReport {
    pub value: f64,
    pub sigma: f64,
    pub pairs: usize,
}

pub fn energy_statistic<T>(
    xs: &[T],
    ys: &[T],
    dist: impl Fn(&T, &T) -> f64,
    pairs: usize,
    rng: &mut impl Rng,
) -> EnergyReport {
    assert!(xs.len() >= 2 && ys.len() >= 2, "energy statistic needs two samples per side");
    let draw = |a: &[T], b: &[T], cross: bool, rng: &mut dyn rand::RngCore| -> MeanStderr {
        let mut obs = Vec::with_capacity(pairs);
        for _ in 0..pairs {
            let i = rng.gen_range(0..a.len());
            let j = loop {
                let j = rng.gen_range(0..b.len());
                if cross || j != i {
                    break j;
                }
            };
            obs.push(dist(&a[i], &b[j]));
        }
        mean_stderr(&obs)
    };
    let xy = draw(xs, ys, true, rng);
    let xx = draw(xs, xs, false, rng);
    let yy = draw(ys, ys, false, rng);
    let value = 2.0 * xy.mean - xx.mean - yy.mean;
    let sigma =
        (4.0 * xy.stderr * xy.stderr + xx.stderr * xx.stderr + yy.stderr * yy.stderr).sqrt();
    EnergyReport { value, sigma, pairs }
}

/// One-sample Kolmogorov-Smirnov distance of points in `[0,1)` against the
/// uniform distribution. Gate `D <= 2/sqrt(n)` corresponds to p ~ 1e-3.
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let hi = (i as f64 + 1.0) / n - x;
        let lo = x - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Standard 3-sigma style gate for a KS distance.
pub fn ks_gate(n: usize) -> f64 {
    2.0 / (n as f64).sqrt()
}
