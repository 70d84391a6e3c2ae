use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sbvr_core::activation::quantize_activation_groups;
use sbvr_core::analysis::{
    derive_seed, distortion_csv_header, distortion_csv_row, kurtosis_csv, kurtosis_sweep,
    measure_distortion, Quantizer, Source, SourceSpec,
};
use sbvr_core::gemv::{bench_gemv, gemv_reference_f64, rotate_input};
use sbvr_core::io::{self, FormatError};
use sbvr_core::{dequantize_activation, encode_tensor, ActivationScale, EncoderConfig, SbvrError};

use crate::{BenchArgs, GemvArgs, QuantizeArgs, RdArgs, StatsArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input, or a rejected shape.
    Usage(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<SbvrError> for CliError {
    fn from(e: SbvrError) -> Self {
        match e {
            SbvrError::Invariant(_) => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn read_input(path: &Path, what: &str) -> Result<Vec<u8>, CliError> {
    fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn format_error(path: &Path, e: FormatError) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

pub fn quantize(a: QuantizeArgs) -> Result<(), CliError> {
    let raw = read_input(&a.input, "input")?;
    let matrix = io::parse_raw_f32(&raw, a.rows, a.cols).map_err(|e| format_error(&a.input, e))?;
    let config = EncoderConfig {
        bits: a.bits,
        group_size: a.group,
        cache_enabled: a.cache.on(),
        deterministic: a.deterministic.on(),
        hadamard_seed: a.hadamard.on().then_some(a.seed),
        ..EncoderConfig::default()
    };
    let (tensor, report) = encode_tensor(&matrix, a.rows, a.cols, &config)?;
    let bytes = io::to_bytes(&tensor);
    write_output(&a.out, &bytes)?;

    if let Some(path) = &a.report_csv {
        let mut csv = String::from("group,row,mse\n");
        let per_row = tensor.groups_per_row();
        for (g, mse) in report.group_mse.iter().enumerate() {
            let _ = writeln!(csv, "{g},{},{mse}", g / per_row);
        }
        write_output(path, csv.as_bytes())?;
    }

    println!("rows={}", a.rows);
    println!("cols={}", a.cols);
    println!("bits={}", a.bits);
    println!("group_size={}", a.group);
    println!("groups={}", report.group_mse.len());
    println!("mean_mse={}", report.mean_mse);
    println!("cache_hits={}", report.cache_hits);
    println!("cache_hit_rate={}", report.hit_rate());
    println!("cache_size={}", report.cache_size);
    println!("wall_time_s={}", report.wall_time.as_secs_f64());
    println!("bytes={}", bytes.len());
    println!("out={}", a.out.display());
    Ok(())
}

/// Largest `|got - want| / max(|want|, 1e-3 * max|want|)`; the floor keeps
/// outputs that cancel to nearly zero from dominating.
fn max_relative_error(got: &[f64], want: &[f64]) -> f64 {
    let peak = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    got.iter()
        .zip(want)
        .map(|(g, w)| {
            let diff = (g - w).abs();
            if diff == 0.0 {
                0.0
            } else {
                diff / w.abs().max(1e-3 * peak).max(f64::MIN_POSITIVE)
            }
        })
        .fold(0.0, f64::max)
}

pub fn gemv(a: GemvArgs) -> Result<(), CliError> {
    let bytes = read_input(&a.weights, "weights")?;
    let w = io::from_bytes(&bytes).map_err(|e| format_error(&a.weights, e))?;
    let raw = read_input(&a.activation, "activation")?;
    if raw.len() != w.cols() * 4 {
        return Err(CliError::Usage(format!(
            "activation holds {} bytes; the weights need {} columns ({} bytes)",
            raw.len(),
            w.cols(),
            w.cols() * 4
        )));
    }
    let x = io::parse_raw_f32(&raw, 1, w.cols()).map_err(|e| format_error(&a.activation, e))?;
    let x = rotate_input(&w, &x)?;
    let qa = quantize_activation_groups(&x, w.group_size(), a.abits, ActivationScale::HalfRange)?;
    let y = sbvr_core::gemv(&w, &qa)?;

    if let Some(path) = &a.out {
        write_output(path, &io::raw_f32_bytes(y.iter().copied()))?;
    }
    println!("rows={}", w.rows());
    println!("cols={}", w.cols());
    println!("abits={}", a.abits);
    if a.check.on() {
        let xq: Vec<f64> = qa.iter().flat_map(dequantize_activation).collect();
        let reference = gemv_reference_f64(&w, &xq)?;
        let got: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let max_abs = got
            .iter()
            .zip(&reference)
            .map(|(g, r)| (g - r).abs())
            .fold(0.0, f64::max);
        println!("max_abs_err={max_abs}");
        println!("max_rel_err={}", max_relative_error(&got, &reference));
    }
    if let Some(path) = &a.out {
        println!("out={}", path.display());
    }
    Ok(())
}

fn emit_csv(csv: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            write_output(p, csv.as_bytes())?;
            println!("csv={}", p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<(), CliError> {
    let rows = kurtosis_sweep(&a.r, a.k)?;
    let csv = kurtosis_csv(&rows, a.k);
    if a.csv.is_some() {
        for row in &rows {
            println!("kurtosis[{}]={}", row.ratio, row.kurtosis);
        }
    }
    emit_csv(&csv, a.csv.as_deref())
}

pub fn rd(a: RdArgs) -> Result<(), CliError> {
    let source: Source = a.source.parse()?;
    if a.k_min == 0 || a.k_min > a.k_max {
        return Err(CliError::Usage(format!(
            "bit range {}..={} is empty",
            a.k_min, a.k_max
        )));
    }
    if a.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let quantizers = a
        .quantizer
        .iter()
        .map(|q| q.parse::<Quantizer>())
        .collect::<Result<Vec<_>, _>>()?;

    let mut csv = format!("{}\n", distortion_csv_header());
    let mut violations = 0;
    let mut runs = 0;
    for run in 0..a.seeds {
        let spec = SourceSpec {
            source,
            group_size: a.group,
            groups: a.groups,
            seed: derive_seed(a.seed, run),
        };
        for k in a.k_min..=a.k_max {
            for &q in &quantizers {
                let config = EncoderConfig {
                    bits: k,
                    group_size: a.group,
                    ..EncoderConfig::default()
                };
                let d = measure_distortion(q, &spec, k, &config)?;
                violations += d.below_bound() as usize;
                runs += 1;
                csv.push_str(&distortion_csv_row(&spec, &d));
                csv.push('\n');
            }
        }
    }
    emit_csv(&csv, a.csv.as_deref())?;
    eprintln!("runs={runs}");
    eprintln!("bound_violations={violations}");
    Ok(())
}

pub fn bench(a: BenchArgs) -> Result<(), CliError> {
    let b = bench_gemv(a.rows, a.cols, a.group, a.bits, a.abits, a.repeats, a.seed)?;
    let dense_fma = a.group as f64;
    let fma = b.counts.fmas_per_group();
    let fields = [
        ("rows", b.rows.to_string()),
        ("cols", b.cols.to_string()),
        ("group_size", b.group_size.to_string()),
        ("weight_bits", b.weight_bits.to_string()),
        ("activation_bits", b.activation_bits.to_string()),
        ("repeats", b.repeats.to_string()),
        ("fma_per_group", fma.to_string()),
        ("dense_fma_per_group", dense_fma.to_string()),
        ("fma_reduction", (dense_fma / fma).to_string()),
        (
            "word_ands_per_group",
            b.counts.word_ands_per_group().to_string(),
        ),
        ("packed_ns", b.packed_ns.to_string()),
        ("dense_ns", b.dense_ns.to_string()),
        ("dense_over_packed", b.ratio.to_string()),
    ];
    for (k, v) in &fields {
        println!("{k}={v}");
    }
    if let Some(path) = &a.csv {
        let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
        let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
        let csv = format!("{}\n{}\n", header.join(","), values.join(","));
        write_output(path, csv.as_bytes())?;
        println!("csv={}", path.display());
    }
    Ok(())
}
