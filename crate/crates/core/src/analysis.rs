//! Rate-distortion bound, synthetic sources, distortion measurement and
//! representation-point shape statistics.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT};

use crate::encoder::{encode_tensor, subset_sums, EncoderConfig};
use crate::error::{Result, SbvrError};
use crate::rtn::rtn_mse;
use crate::types::CoefficientSet;

/// Smallest achievable squared error for a Gaussian source of variance
/// `sigma2` at `rate` bits per sample: `sigma2 * 2^(-2 * rate)`.
pub fn rd_bound(sigma2: f64, rate: f64) -> Result<f64> {
    if !(sigma2 >= 0.0 && rate >= 0.0) || !sigma2.is_finite() || rate.is_nan() {
        return Err(SbvrError::Validation(format!(
            "rd_bound needs sigma2 >= 0 and rate >= 0, got {sigma2} and {rate}"
        )));
    }
    Ok(sigma2 * (-2.0 * rate).exp2())
}

/// Distribution of synthetic weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Gaussian { mean: f64, std: f64 },
    Laplace { scale: f64 },
    Uniform { lo: f64, hi: f64 },
    StudentT { df: f64 },
}

impl Source {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Source::Gaussian { mean, std } => mean.is_finite() && std.is_finite() && std > 0.0,
            Source::Laplace { scale } => scale.is_finite() && scale > 0.0,
            Source::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Source::StudentT { df } => df.is_finite() && df > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SbvrError::Validation(format!(
                "invalid source parameters: {self}"
            )))
        }
    }

    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        let out = match *self {
            Source::Gaussian { mean, std } => {
                let d = Normal::new(mean, std).map_err(|e| SbvrError::Validation(e.to_string()))?;
                d.sample_iter(rng).take(n).collect()
            }
            Source::Laplace { scale } => (0..n)
                .map(|_| {
                    // inverse CDF on u in (-1/2, 1/2)
                    let u: f64 = rng.random::<f64>() - 0.5;
                    -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
                })
                .collect(),
            Source::Uniform { lo, hi } => (0..n).map(|_| rng.random_range(lo..hi)).collect(),
            Source::StudentT { df } => {
                let d = StudentT::new(df).map_err(|e| SbvrError::Validation(e.to_string()))?;
                d.sample_iter(rng).take(n).collect()
            }
        };
        Ok(out)
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Source::Gaussian { mean, std } => write!(f, "gaussian:{mean}:{std}"),
            Source::Laplace { scale } => write!(f, "laplace:{scale}"),
            Source::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            Source::StudentT { df } => write!(f, "student_t:{df}"),
        }
    }
}

/// Parses `gaussian[:mean:std]`, `laplace[:scale]`, `uniform[:lo:hi]` or `student_t[:df]`.
impl FromStr for Source {
    type Err = SbvrError;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let params = parts
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| SbvrError::Validation(format!("bad source parameter {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let src = match (name, params.as_slice()) {
            ("gaussian", []) => Source::Gaussian {
                mean: 0.0,
                std: 1.0,
            },
            ("gaussian", [mean, std]) => Source::Gaussian {
                mean: *mean,
                std: *std,
            },
            ("laplace", []) => Source::Laplace { scale: 1.0 },
            ("laplace", [scale]) => Source::Laplace { scale: *scale },
            ("uniform", []) => Source::Uniform { lo: -1.0, hi: 1.0 },
            ("uniform", [lo, hi]) => Source::Uniform { lo: *lo, hi: *hi },
            ("student_t", []) => Source::StudentT { df: 3.0 },
            ("student_t", [df]) => Source::StudentT { df: *df },
            _ => return Err(SbvrError::Validation(format!("unknown source spec {s:?}"))),
        };
        src.validate()?;
        Ok(src)
    }
}

/// A synthetic dataset: `groups` groups of `group_size` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub source: Source,
    pub group_size: usize,
    pub groups: usize,
    pub seed: u64,
}

impl SourceSpec {
    pub fn generate(&self) -> Result<Vec<f64>> {
        if self.group_size < 2 || self.groups == 0 {
            return Err(SbvrError::Validation(format!(
                "need group_size >= 2 and groups >= 1, got {} and {}",
                self.group_size, self.groups
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.source.sample(self.group_size * self.groups, &mut rng)
    }
}

/// Derives an independent per-trial seed from a master seed.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = master.wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantizer {
    Sbvr,
    Rtn,
}

impl fmt::Display for Quantizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantizer::Sbvr => "sbvr",
            Quantizer::Rtn => "rtn",
        })
    }
}

impl FromStr for Quantizer {
    type Err = SbvrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sbvr" => Ok(Quantizer::Sbvr),
            "rtn" => Ok(Quantizer::Rtn),
            _ => Err(SbvrError::Validation(format!("unknown quantizer {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distortion {
    pub quantizer: Quantizer,
    pub bits: usize,
    pub mse: f64,
    /// Bits per element including amortized per-group side information.
    pub effective_rate: f64,
    pub sample_variance: f64,
    /// `rd_bound(sample_variance, effective_rate)`.
    pub bound: f64,
    pub per_group_mse: Vec<f64>,
}

impl Distortion {
    pub fn below_bound(&self) -> bool {
        self.mse < self.bound
    }
}

/// Unbiased sample variance.
pub fn sample_variance(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0)
}

/// Quantizes a synthetic dataset group by group and measures squared error.
///
/// SBVR's rate is `K + |coefficient cache| * K * 32 / elements`; RTN's is
/// `bits + 32 / group_size` for its per-group step size.
pub fn measure_distortion(
    quantizer: Quantizer,
    spec: &SourceSpec,
    bits: usize,
    config: &EncoderConfig,
) -> Result<Distortion> {
    let data = spec.generate()?;
    let total = data.len() as f64;
    let (per_group_mse, effective_rate) = match quantizer {
        Quantizer::Sbvr => {
            let cfg = EncoderConfig {
                bits,
                group_size: spec.group_size,
                ..config.clone()
            };
            let (tensor, report) = encode_tensor(&data, spec.groups, spec.group_size, &cfg)?;
            let overhead = (tensor.coeff_cache().len() * bits * 32) as f64 / total;
            (report.group_mse, bits as f64 + overhead)
        }
        Quantizer::Rtn => {
            let mses = data
                .chunks_exact(spec.group_size)
                .map(|g| rtn_mse(g, bits as u32))
                .collect::<Result<Vec<_>>>()?;
            (mses, bits as f64 + 32.0 / spec.group_size as f64)
        }
    };
    let mse = per_group_mse.iter().sum::<f64>() / per_group_mse.len() as f64;
    let sample_variance = sample_variance(&data);
    Ok(Distortion {
        quantizer,
        bits,
        mse,
        effective_rate,
        sample_variance,
        bound: rd_bound(sample_variance, effective_rate)?,
        per_group_mse,
    })
}

/// Excess kurtosis `m4 / m2^2 - 3` with population moments.
pub fn excess_kurtosis(points: &[f64]) -> Result<f64> {
    if points.len() < 4 {
        return Err(SbvrError::Validation(format!(
            "kurtosis needs at least 4 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<f64>() / n;
    let (m2, m4) = points.iter().fold((0.0, 0.0), |(m2, m4), x| {
        let d = (x - mean) * (x - mean);
        (m2 + d, m4 + d * d)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    if m2 <= (f64::EPSILON * mean.abs()).powi(2) {
        return Err(SbvrError::Degenerate("points have zero variance".into()));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

/// All `2^K` subset sums (with multiplicity) of `{r^0, ..., r^(K-1)}`.
pub fn representation_points(r: f64, k: usize) -> Result<Vec<f64>> {
    let cs = CoefficientSet::geometric(r, 1.0, 0.0, k)?;
    Ok(subset_sums(&cs).values().to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KurtosisRow {
    pub ratio: f64,
    pub kurtosis: f64,
}

/// Excess kurtosis of the representation points for each ratio (`s = 1`, `b = 0`).
pub fn kurtosis_sweep(r_values: &[f64], k: usize) -> Result<Vec<KurtosisRow>> {
    r_values
        .iter()
        .map(|&r| {
            if r == 0.0 || !r.is_finite() || r.abs() > 1.0 + 1e-9 {
                return Err(SbvrError::Validation(format!(
                    "ratio {r} must be nonzero with |r| <= 1"
                )));
            }
            Ok(KurtosisRow {
                ratio: r,
                kurtosis: excess_kurtosis(&representation_points(r, k)?)?,
            })
        })
        .collect()
}

pub fn kurtosis_csv(rows: &[KurtosisRow], k: usize) -> String {
    let mut out = String::from("r,k,excess_kurtosis\n");
    for row in rows {
        let _ = writeln!(out, "{},{k},{}", row.ratio, row.kurtosis);
    }
    out
}

pub fn distortion_csv_header() -> &'static str {
    "source,quantizer,bits,group_size,groups,seed,mse,effective_rate,sample_variance,rd_bound,below_bound"
}

pub fn distortion_csv_row(spec: &SourceSpec, d: &Distortion) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        spec.source,
        d.quantizer,
        d.bits,
        spec.group_size,
        spec.groups,
        spec.seed,
        d.mse,
        d.effective_rate,
        d.sample_variance,
        d.bound,
        d.below_bound()
    )
}
