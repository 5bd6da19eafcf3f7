//! The reduce -> magnify -> score batch experiment and the epsilon sweep.
//!
//! Each image is padded to block-divisible dimensions, reduced with every
//! enabled method (the deviation-based reducer once per epsilon, with unit
//! channel weights), magnified back by nearest neighbour, cropped to the
//! original size, and scored with SSIM and MSE against the original. Rows
//! are sorted by (image, method, eps) before writing, so CSV output is
//! byte-identical across runs up to the timing column.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use devfuse_core::baselines::{penalty_reduce, reduce_plain, AggregatorId};
use devfuse_core::metrics::{mse, nn_magnify, ssim_image, SsimConfig};
use devfuse_core::{
    fuse, reduce_blocks, DeviationSpec, FusedMatrix, MultiMatrix, PadMode, SolverConfig, WeightSpec,
};

use crate::error::{Error, Result};
use crate::image_io::{load_image, SUPPORTED_EXTENSIONS};
use crate::util::atomic_write;

/// One enabled reduction method.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// Deviation-based reduction; evaluated once per requested epsilon.
    Md,
    Mean,
    Median,
    Gaussian,
    GeometricMean,
    KAlpha(f64),
    CenteredOwa,
    Penalty,
    Min,
    Max,
}

impl Method {
    /// Parses a single token: `md`, `mean`, `median`, `gaussian`, `geomean`,
    /// `k<alpha>`, `cowa`, `penalty`, `min`, `max`.
    pub fn parse(token: &str) -> Result<Method> {
        Ok(match token {
            "md" => Method::Md,
            "mean" => Method::Mean,
            "median" => Method::Median,
            "gaussian" => Method::Gaussian,
            "geomean" => Method::GeometricMean,
            "cowa" => Method::CenteredOwa,
            "penalty" => Method::Penalty,
            "min" => Method::Min,
            "max" => Method::Max,
            t if t.starts_with('k') => {
                let alpha: f64 = t[1..]
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad K-alpha method token: {t}")))?;
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::invalid(format!("K-alpha out of [0, 1]: {t}")));
                }
                Method::KAlpha(alpha)
            }
            other => return Err(Error::invalid(format!("unknown method: {other}"))),
        })
    }

    /// Parses a comma-separated method list.
    pub fn parse_list(list: &str) -> Result<Vec<Method>> {
        list.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Method::parse)
            .collect()
    }

    /// The name used in CSV rows and CLI flags.
    pub fn label(&self) -> String {
        match self {
            Method::Md => "md".into(),
            Method::Mean => "mean".into(),
            Method::Median => "median".into(),
            Method::Gaussian => "gaussian".into(),
            Method::GeometricMean => "geomean".into(),
            Method::KAlpha(a) => format!("k{a}"),
            Method::CenteredOwa => "cowa".into(),
            Method::Penalty => "penalty".into(),
            Method::Min => "min".into(),
            Method::Max => "max".into(),
        }
    }

    /// All methods compared in the batch experiment.
    pub fn default_set() -> Vec<Method> {
        vec![
            Method::Md,
            Method::Mean,
            Method::Median,
            Method::Gaussian,
            Method::GeometricMean,
            Method::KAlpha(0.25),
            Method::KAlpha(0.5),
            Method::KAlpha(0.75),
            Method::CenteredOwa,
            Method::Penalty,
        ]
    }

    fn aggregator(&self) -> Option<AggregatorId> {
        match self {
            Method::Md | Method::Penalty => None,
            Method::Mean => Some(AggregatorId::Mean),
            Method::Median => Some(AggregatorId::Median),
            Method::Gaussian => Some(AggregatorId::Gaussian),
            Method::GeometricMean => Some(AggregatorId::GeometricMean),
            Method::KAlpha(a) => Some(AggregatorId::KAlpha(*a)),
            Method::CenteredOwa => Some(AggregatorId::CenteredOwa),
            Method::Min => Some(AggregatorId::Min),
            Method::Max => Some(AggregatorId::Max),
        }
    }
}

/// Batch experiment settings.
#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub methods: Vec<Method>,
    pub r: usize,
    pub eps_list: Vec<f64>,
    pub ssim: SsimConfig,
    pub threads: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            methods: Method::default_set(),
            r: 2,
            eps_list: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            ssim: SsimConfig::default(),
            threads: 1,
        }
    }
}

/// One scored reduction of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub image: String,
    pub method: String,
    pub r: usize,
    pub eps: Option<f64>,
    pub ssim: f64,
    pub mse: f64,
    pub wall_time_ns: u64,
}

/// Reduces a (block-divisible) matrix with one method; returns the reduced
/// matrix and the wall time of the reduction step alone.
pub fn reduce_matrix(
    padded: &MultiMatrix,
    method: &Method,
    r: usize,
    eps: Option<f64>,
) -> Result<(FusedMatrix, u64)> {
    let started = Instant::now();
    let reduced = match method {
        Method::Md => {
            let eps = eps.ok_or_else(|| Error::invalid("md reduction needs an epsilon"))?;
            let spec = DeviationSpec::epsilon(eps)?;
            fuse(
                padded,
                r,
                &spec,
                &WeightSpec::unit(padded.channels()),
                &SolverConfig::default(),
            )?
        }
        Method::Penalty => {
            let candidates = AggregatorId::default_penalty_candidates();
            reduce_blocks(padded, r, |block| {
                Ok(penalty_reduce(block, &candidates)?.tuple)
            })?
        }
        plain => {
            let id = plain.aggregator().expect("plain method");
            reduce_blocks(padded, r, |block| {
                (0..block.channels())
                    .map(|k| reduce_plain(block.channel_values(k), &id))
                    .collect::<std::result::Result<Vec<f64>, devfuse_core::Error>>()
            })?
        }
    };
    Ok((reduced, started.elapsed().as_nanos() as u64))
}

/// Full per-image pipeline for one method: pad, reduce, magnify, crop,
/// score against the original.
pub fn score_reduction(
    original: &MultiMatrix,
    method: &Method,
    r: usize,
    eps: Option<f64>,
    ssim_cfg: &SsimConfig,
) -> Result<(f64, f64, u64)> {
    let padded = original.pad(r, PadMode::Replicate)?;
    let (reduced, elapsed) = reduce_matrix(&padded, method, r, eps)?;
    let magnified = nn_magnify(&reduced, r)?;
    let recon = magnified.crop(original.rows(), original.cols())?;
    Ok((
        ssim_image(original, &recon, ssim_cfg)?,
        mse(original, &recon)?,
        elapsed,
    ))
}

/// Scores every enabled method (MD once per epsilon) on one image.
pub fn evaluate_image(
    id: &str,
    original: &MultiMatrix,
    opts: &ExperimentOptions,
) -> Result<Vec<ReductionReport>> {
    let mut rows = Vec::new();
    for method in &opts.methods {
        let eps_slots: Vec<Option<f64>> = match method {
            Method::Md => opts.eps_list.iter().map(|&e| Some(e)).collect(),
            _ => vec![None],
        };
        for eps in eps_slots {
            let (ssim, mse, ns) = score_reduction(original, method, opts.r, eps, &opts.ssim)?;
            rows.push(ReductionReport {
                image: id.to_string(),
                method: method.label(),
                r: opts.r,
                eps,
                ssim,
                mse,
                wall_time_ns: ns,
            });
        }
    }
    Ok(rows)
}

/// Decodable images in `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| SUPPORTED_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    Ok(paths)
}

fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_corpus(dir: &Path) -> Result<Vec<(String, MultiMatrix)>> {
    let mut corpus = Vec::new();
    for path in list_images(dir)? {
        match load_image(&path) {
            Ok(img) => corpus.push((image_id(&path), img.matrix)),
            Err(e) => eprintln!("warning: skipping {}: {e}", path.display()),
        }
    }
    if corpus.is_empty() {
        return Err(Error::invalid("no decodable images"));
    }
    Ok(corpus)
}

fn sort_reports(rows: &mut [ReductionReport]) {
    rows.sort_by(|a, b| {
        (a.image.as_str(), a.method.as_str())
            .cmp(&(b.image.as_str(), b.method.as_str()))
            .then_with(|| {
                a.eps
                    .unwrap_or(f64::NEG_INFINITY)
                    .total_cmp(&b.eps.unwrap_or(f64::NEG_INFINITY))
            })
    });
}

/// Fans `work` items out over up to `threads` OS threads while preserving
/// nothing about ordering; callers sort afterwards.
fn parallel_flat_map<T, R, F>(items: Vec<T>, threads: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<Vec<R>> + Sync,
{
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 {
        let mut out = Vec::new();
        for item in &items {
            out.extend(f(item)?);
        }
        return Ok(out);
    }
    let chunk_len = items.len().div_ceil(threads);
    let chunks: Vec<&[T]> = items.chunks(chunk_len).collect();
    let f = &f;
    let results: Vec<Result<Vec<R>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    for item in chunk {
                        out.extend(f(item)?);
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Runs the batch experiment over every decodable image in `dir`.
///
/// Undecodable files are skipped with a warning; an empty directory is an
/// error. When `out_csv` is given the sorted rows are written atomically.
pub fn run_reduction_experiment(
    dir: &Path,
    opts: &ExperimentOptions,
    out_csv: Option<&Path>,
) -> Result<Vec<ReductionReport>> {
    let corpus = load_corpus(dir)?;
    let mut rows = parallel_flat_map(corpus, opts.threads, |(id, matrix)| {
        evaluate_image(id, matrix, opts)
    })?;
    sort_reports(&mut rows);
    if let Some(path) = out_csv {
        atomic_write(path, reports_to_csv(&rows).as_bytes())?;
    }
    Ok(rows)
}

/// CSV columns: `image,method,r,eps,ssim,mse,time_ns`; `eps` is empty for
/// methods without one.
pub fn reports_to_csv(rows: &[ReductionReport]) -> String {
    let mut out = String::from("image,method,r,eps,ssim,mse,time_ns\n");
    for row in rows {
        let eps = row.eps.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.image, row.method, row.r, eps, row.ssim, row.mse, row.wall_time_ns
        );
    }
    out
}

/// Mean SSIM and MSE per (method, eps) group, sorted by group key.
pub fn method_means(rows: &[ReductionReport]) -> Vec<(String, f64, f64)> {
    let mut groups: Vec<(String, Vec<&ReductionReport>)> = Vec::new();
    for row in rows {
        let key = match row.eps {
            Some(e) => format!("{} eps={e}", row.method),
            None => row.method.clone(),
        };
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, list)) => list.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    groups.sort_by(|a, b| a.0.cmp(&b.0));
    groups
        .into_iter()
        .map(|(key, list)| {
            let n = list.len() as f64;
            let ssim = list.iter().map(|r| r.ssim).sum::<f64>() / n;
            let mse = list.iter().map(|r| r.mse).sum::<f64>() / n;
            (key, ssim, mse)
        })
        .collect()
}

/// For each epsilon, the number of images where the deviation-based
/// reduction beats every competitor method strictly on SSIM.
pub fn epsilon_sweep(
    dir: &Path,
    competitors: &[Method],
    eps_list: &[f64],
    r: usize,
    threads: usize,
    ssim_cfg: &SsimConfig,
    out_csv: Option<&Path>,
) -> Result<Vec<(f64, usize)>> {
    let competitors: Vec<Method> = competitors
        .iter()
        .filter(|m| !matches!(m, Method::Md))
        .cloned()
        .collect();
    let corpus = load_corpus(dir)?;

    // per image: (ssim of MD at each eps, best competitor ssim)
    let per_image = parallel_flat_map(corpus, threads, |(_, matrix)| {
        let mut md_scores = Vec::with_capacity(eps_list.len());
        for &eps in eps_list {
            let (ssim, _, _) = score_reduction(matrix, &Method::Md, r, Some(eps), ssim_cfg)?;
            md_scores.push(ssim);
        }
        let mut best_other = f64::NEG_INFINITY;
        for method in &competitors {
            let (ssim, _, _) = score_reduction(matrix, method, r, None, ssim_cfg)?;
            best_other = best_other.max(ssim);
        }
        Ok(vec![(md_scores, best_other)])
    })?;

    let counts: Vec<(f64, usize)> = eps_list
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let count = per_image.iter().filter(|(md, best)| md[i] > *best).count();
            (eps, count)
        })
        .collect();

    if let Some(path) = out_csv {
        let mut csv = String::from("eps,best_count\n");
        for (eps, count) in &counts {
            let _ = writeln!(csv, "{eps},{count}");
        }
        atomic_write(path, csv.as_bytes())?;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_tokens_round_trip() {
        let list = "md,mean,median,gaussian,geomean,k0.25,k0.5,k0.75,cowa,penalty";
        let methods = Method::parse_list(list).unwrap();
        assert_eq!(methods.len(), 10);
        let labels: Vec<String> = methods.iter().map(Method::label).collect();
        assert_eq!(labels.join(","), list);
        assert!(Method::parse("nope").is_err());
        assert!(Method::parse("k1.5").is_err());
    }

    #[test]
    fn md_at_huge_epsilon_matches_mean_reducer() {
        let img = crate::synth::synthetic_image(32, 32, 3, 5);
        let cfg = SsimConfig::default();
        let (md_ssim, md_mse, _) = score_reduction(&img, &Method::Md, 2, Some(1e6), &cfg).unwrap();
        let (mean_ssim, mean_mse, _) = score_reduction(&img, &Method::Mean, 2, None, &cfg).unwrap();
        assert!((md_ssim - mean_ssim).abs() < 1e-6);
        assert!((md_mse - mean_mse).abs() < 1e-6);
    }

    #[test]
    fn constant_image_scores_perfectly_for_all_methods() {
        let img = devfuse_core::MultiMatrix::filled(12, 12, 3, 0.5).unwrap();
        let opts = ExperimentOptions {
            eps_list: vec![1.0],
            ..Default::default()
        };
        for row in evaluate_image("const", &img, &opts).unwrap() {
            assert_eq!(row.ssim, 1.0, "{}", row.method);
            assert_eq!(row.mse, 0.0, "{}", row.method);
        }
    }

    #[test]
    fn report_row_counts() {
        let img = crate::synth::synthetic_image(8, 8, 3, 1);
        let opts = ExperimentOptions {
            methods: vec![Method::Md, Method::Mean, Method::Median],
            eps_list: vec![1.0, 2.0, 4.0],
            ..Default::default()
        };
        let rows = evaluate_image("a", &img, &opts).unwrap();
        // 3 eps rows for md + 1 each for mean and median
        assert_eq!(rows.len(), 5);
    }

    #[test]
    fn csv_is_deterministic_apart_from_timing() {
        let dir = tempfile::tempdir().unwrap();
        for seed in 0..3 {
            let img = crate::synth::synthetic_image(16, 16, 3, seed);
            crate::image_io::save_image(&img, &dir.path().join(format!("img{seed}.png"))).unwrap();
        }
        let opts = ExperimentOptions {
            methods: vec![Method::Md, Method::Mean],
            eps_list: vec![1.0, 32.0],
            threads: 2,
            ..Default::default()
        };
        let a = run_reduction_experiment(dir.path(), &opts, None).unwrap();
        let b = run_reduction_experiment(dir.path(), &opts, None).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            let mut x = x.clone();
            let mut y = y.clone();
            x.wall_time_ns = 0;
            y.wall_time_ns = 0;
            assert_eq!(x, y);
        }
    }

    #[test]
    fn empty_directory_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let err =
            run_reduction_experiment(dir.path(), &ExperimentOptions::default(), None).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("no decodable images"));
    }

    #[test]
    fn sweep_with_md_only_counts_every_image() {
        let dir = tempfile::tempdir().unwrap();
        for seed in 0..4 {
            let img = crate::synth::synthetic_image(8, 8, 3, seed);
            crate::image_io::save_image(&img, &dir.path().join(format!("i{seed}.png"))).unwrap();
        }
        let cfg = SsimConfig::default();
        // no competitors: every image counts for every eps
        let counts = epsilon_sweep(dir.path(), &[], &[1.0, 4.0], 2, 1, &cfg, None).unwrap();
        assert_eq!(counts, vec![(1.0, 4), (4.0, 4)]);
        // empty eps list: empty table
        let counts = epsilon_sweep(dir.path(), &[], &[], 2, 1, &cfg, None).unwrap();
        assert!(counts.is_empty());
    }
}
