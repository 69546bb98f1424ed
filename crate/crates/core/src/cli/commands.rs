use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Method, Protocol};
use super::output::{fmt, Artifacts};
use crate::aslrc::{solve, Decomposition, SolverConfig};
use crate::classifier::{predict_labels, train_with_projection, ClassifierConfig, LabelMatrix};
use crate::corruption::{
    add_gaussian_noise_snr, corrupt_random_pixels, invert_pixels, synth_blobs,
    synth_nonnegative_subspaces, synth_subspaces,
};
use crate::error::{Error, Result};
use crate::latlrr::latlrr_solve;
use crate::matrix_io::{
    images_to_matrix, load_matrix_csv, load_pgm, recovery_panel, DataMatrix, ImageGrid,
};
use crate::metrics::{classification_accuracy, offblock_ratio, reconstruction_accuracy};

/// Size of the synthetic image-like matrix `denoise` uses without `input`.
const SYNTH_IMAGE_DIM: usize = 64;
const SYNTH_IMAGE_SAMPLES_PER_SUBSPACE: usize = 32;

pub fn run_method(method: Method, x: &DataMatrix, solver: &SolverConfig) -> Result<Decomposition> {
    match method {
        Method::Aslrc => solve(x, solver),
        Method::Latlrr => latlrr_solve(x, solver.lambda, solver),
    }
}

/// Load a CSV matrix, one PGM image (a single column) or a directory of PGM
/// images (one column each, in file-name order). Returns the image size
/// when the data came from images.
pub fn load_input(
    path: &Path,
    size: Option<(usize, usize)>,
) -> Result<(DataMatrix, Option<(usize, usize)>)> {
    let is_pgm = |p: &Path| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let images = if path.is_dir() {
        let mut paths: Vec<_> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| is_pgm(p))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::Format(format!(
                "no .pgm files in {}",
                path.display()
            )));
        }
        paths
    } else if is_pgm(path) {
        vec![path.to_path_buf()]
    } else {
        return Ok((load_matrix_csv(path)?, size));
    };

    let first = load_pgm(&images[0], size)?;
    let (w, h) = (first.width, first.height);
    let mut grids: Vec<ImageGrid> = vec![first];
    for p in &images[1..] {
        grids.push(load_pgm(p, Some((w, h)))?);
    }
    Ok((images_to_matrix(&grids)?, Some((w, h))))
}

/// One 1-based class index per non-blank line; returned 0-based.
pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<usize>() {
            Ok(l) if l >= 1 => labels.push(l - 1),
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected a 1-based class index, got {line:?}"),
                })
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(labels)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var("LOLREC_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidConfig(format!("LOLREC_THREADS={v:?} is not a count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

/// Evaluate `f` on every task in parallel; results keep task order.
fn par_map<T: Sync, R: Send>(
    tasks: &[T],
    f: impl Fn(&T) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    thread_pool()?.install(|| tasks.par_iter().map(f).collect())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn decompose(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("decompose needs an input".into()))?;
    let (x, size) = out.phase("load", |_| load_input(input, cfg.image_size()))?;
    let (w, h) = match size.or(cfg.image_size()) {
        Some((w, h)) if w * h == x.dim() => (w, h),
        _ => (1, x.dim()),
    };
    let solver = cfg.solver();
    let results = out.phase("solve", |_| {
        par_map(&cfg.methods, |&m| run_method(m, &x, &solver))
    })?;

    out.phase("write", |out| {
        let mut summary = Vec::new();
        for (m, d) in cfg.methods.iter().zip(&results) {
            let name = m.name();
            out.write_matrix(&format!("{name}_z.csv"), &d.z)?;
            out.write_matrix(&format!("{name}_l.csv"), &d.l)?;
            out.write_matrix(&format!("{name}_e.csv"), &d.e)?;
            out.write_matrix(&format!("{name}_xz.csv"), &d.principal)?;
            out.write_matrix(&format!("{name}_lx.csv"), &d.salient)?;
            out.write_trace(&format!("{name}_trace.csv"), &d.trace)?;
            let panel = recovery_panel(
                &[&x, &d.principal, &d.salient, &d.e],
                w,
                h,
                cfg.panel_samples,
            )?;
            out.write_pgm(&format!("{name}_recovery.pgm"), &panel)?;
            summary.push(vec![
                name.to_string(),
                d.iterations.to_string(),
                d.converged.to_string(),
                fmt(d.residual),
            ]);
        }
        out.write_table(
            "decompose.csv",
            &["method", "iterations", "converged", "residual"],
            &summary,
        )
    })
}

fn corrupt(
    protocol: Protocol,
    clean: &DMatrix<f64>,
    level: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    match protocol {
        Protocol::Random => corrupt_random_pixels(clean, level, seed),
        Protocol::Invert => Ok(invert_pixels(&(clean * 255.0), level, seed)? / 255.0),
        Protocol::Gaussian => add_gaussian_noise_snr(clean, level, seed),
    }
}

pub fn denoise(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let clean = out.phase("load", |_| match &cfg.input {
        Some(p) => load_input(p, cfg.image_size()).map(|(x, _)| x),
        None => synth_nonnegative_subspaces(
            SYNTH_IMAGE_DIM,
            3,
            3,
            SYNTH_IMAGE_SAMPLES_PER_SUBSPACE,
            cfg.seed,
        )
        .map(|(x, _)| x),
    })?;
    let levels = match cfg.protocol {
        Protocol::Gaussian => &cfg.snrs,
        Protocol::Random | Protocol::Invert => &cfg.pcts,
    };
    let solver = cfg.solver();
    let tasks: Vec<(usize, u64, Method)> = (0..levels.len())
        .flat_map(|i| {
            (0..cfg.repeats as u64).flat_map(move |r| cfg.methods.iter().map(move |&m| (i, r, m)))
        })
        .collect();

    let scores = out.phase("solve", |_| {
        par_map(&tasks, |&(i, r, m)| {
            let noisy = corrupt(cfg.protocol, &clean, levels[i], cfg.seed + r)?;
            let d = run_method(m, &DataMatrix::new(noisy)?, &solver)?;
            Ok((
                reconstruction_accuracy(&clean, &d.principal)?,
                reconstruction_accuracy(&clean, &(&d.l * clean.as_matrix()))?,
            ))
        })
    })?;

    let protocol = serde_json::to_value(cfg.protocol).expect("protocol serializes");
    let protocol = protocol.as_str().unwrap_or_default();
    let mut rows = Vec::new();
    for (i, &level) in levels.iter().enumerate() {
        for &m in &cfg.methods {
            let picked: Vec<(f64, f64)> = tasks
                .iter()
                .zip(&scores)
                .filter(|((ti, _, tm), _)| *ti == i && *tm == m)
                .map(|(_, s)| *s)
                .collect();
            let n = picked.len() as f64;
            let rec = picked.iter().map(|s| s.0).sum::<f64>() / n;
            let emb = picked.iter().map(|s| s.1).sum::<f64>() / n;
            rows.push(vec![
                "denoise".to_string(),
                protocol.to_string(),
                fmt(level),
                m.name().to_string(),
                fmt(rec),
                fmt(emb),
            ]);
        }
    }
    out.phase("write", |out| {
        out.write_table(
            "denoise.csv",
            &[
                "experiment",
                "protocol",
                "level",
                "method",
                "zeta_reconstruction",
                "zeta_embedding",
            ],
            &rows,
        )
    })
}

/// Labelled data for `classify` and `grid`: the configured input, or
/// Gaussian blobs.
fn labelled_data(cfg: &ExperimentConfig) -> Result<(DataMatrix, Vec<usize>, usize)> {
    let (x, labels) = match (&cfg.input, &cfg.labels) {
        (Some(x), Some(l)) => (load_input(x, cfg.image_size())?.0, load_labels(l)?),
        (None, None) => synth_blobs(
            cfg.classes,
            cfg.blob_dim,
            cfg.blob_per_class,
            cfg.blob_spread,
            cfg.seed,
        )?,
        _ => {
            return Err(Error::InvalidConfig(
                "input and labels must be given together".into(),
            ))
        }
    };
    if labels.len() != x.n_samples() {
        return Err(Error::dim(format!(
            "{} labels for {} samples",
            labels.len(),
            x.n_samples()
        )));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    Ok((x, labels, classes))
}

/// Per class, shuffle with `seed` and keep the first `n_train` indices for
/// training; the rest are for testing.
pub fn split_indices(
    labels: &[usize],
    classes: usize,
    n_train: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&j| labels[j] == c).collect();
        if idx.len() <= n_train {
            return Err(Error::InsufficientSamples {
                required: n_train + 1,
                got: idx.len(),
            });
        }
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    Ok((train, test))
}

pub struct SplitOutcome {
    pub accuracy: f64,
    pub predicted: Vec<usize>,
    pub soft: DMatrix<f64>,
}

/// Decompose the training part, train on its salient features and score the
/// held-out part.
pub fn run_split(
    x: &DataMatrix,
    labels: &[usize],
    classes: usize,
    (train, test): (&[usize], &[usize]),
    method: Method,
    solver: &SolverConfig,
) -> Result<SplitOutcome> {
    let x_train = DataMatrix::new(x.select_columns(train))?;
    let x_test = x.select_columns(test);
    let y_train: Vec<usize> = train.iter().map(|&j| labels[j]).collect();
    let y_test: Vec<usize> = test.iter().map(|&j| labels[j]).collect();

    let d = run_method(method, &x_train, solver)?;
    let h = LabelMatrix::from_labels(&y_train, classes)?;
    let model = train_with_projection(&d.l, &x_train, &h, &ClassifierConfig::from(solver))?;
    let (predicted, soft) = predict_labels(&model, &x_test)?;
    Ok(SplitOutcome {
        accuracy: classification_accuracy(&predicted, &y_test)?,
        predicted,
        soft,
    })
}

pub fn classify(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let (x, labels, classes) = out.phase("load", |_| labelled_data(cfg))?;
    let solver = cfg.solver();
    let tasks: Vec<(usize, Method, u64)> = cfg
        .train_per_class
        .iter()
        .flat_map(|&n| {
            cfg.methods
                .iter()
                .flat_map(move |&m| (0..cfg.splits as u64).map(move |s| (n, m, s)))
        })
        .collect();

    let outcomes = out.phase("solve", |_| {
        par_map(&tasks, |&(n, m, s)| {
            let (train, test) = split_indices(&labels, classes, n, cfg.seed + s)?;
            run_split(&x, &labels, classes, (&train, &test), m, &solver)
        })
    })?;

    out.phase("write", |out| {
        let mut per_split = Vec::new();
        let mut summary = Vec::new();
        for (chunk_tasks, chunk) in tasks.chunks(cfg.splits).zip(outcomes.chunks(cfg.splits)) {
            let (n, m, _) = chunk_tasks[0];
            let accs: Vec<f64> = chunk.iter().map(|o| o.accuracy).collect();
            for ((_, _, s), a) in chunk_tasks.iter().zip(&accs) {
                per_split.push(vec![
                    n.to_string(),
                    m.name().to_string(),
                    s.to_string(),
                    fmt(*a),
                ]);
            }
            let (mean, std) = mean_std(&accs);
            summary.push(vec![
                "classify".to_string(),
                n.to_string(),
                m.name().to_string(),
                fmt(mean),
                fmt(std),
                cfg.splits.to_string(),
            ]);
            if n == cfg.train_per_class[0] {
                let first = &chunk[0];
                let text: String = first
                    .predicted
                    .iter()
                    .map(|l| format!("{}\n", l + 1))
                    .collect();
                out.write_bytes(&format!("{}_predictions.csv", m.name()), text.as_bytes())?;
                out.write_matrix(&format!("{}_soft.csv", m.name()), &first.soft)?;
            }
        }
        out.write_table(
            "classify_splits.csv",
            &["train_per_class", "method", "split", "accuracy"],
            &per_split,
        )?;
        out.write_table(
            "classify.csv",
            &[
                "experiment",
                "train_per_class",
                "method",
                "mean_accuracy",
                "std_accuracy",
                "splits",
            ],
            &summary,
        )
    })
}

pub fn bench_synth(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let (x, labels) = out.phase("generate", |_| synth_subspaces(&cfg.subspace_spec()))?;
    let solver = cfg.solver();
    let results = out.phase("solve", |_| {
        par_map(&cfg.methods, |&m| run_method(m, &x, &solver))
    })?;
    out.phase("write", |out| {
        let mut rows = Vec::new();
        for (m, d) in cfg.methods.iter().zip(&results) {
            out.write_trace(&format!("{}_trace.csv", m.name()), &d.trace)?;
            rows.push(vec![
                m.name().to_string(),
                d.iterations.to_string(),
                d.converged.to_string(),
                fmt(d.residual),
                fmt(offblock_ratio(&d.z, &labels)?),
            ]);
        }
        out.write_table(
            "bench.csv",
            &[
                "method",
                "iterations",
                "converged",
                "final_residual",
                "offblock_ratio",
            ],
            &rows,
        )
    })
}

pub fn grid(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<()> {
    let (x, labels, classes) = out.phase("load", |_| labelled_data(cfg))?;
    let n_train = cfg.train_per_class[0];
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..cfg.splits as u64)
        .map(|s| split_indices(&labels, classes, n_train, cfg.seed + s))
        .collect::<Result<_>>()?;
    let tasks: Vec<(f64, f64, usize)> = cfg
        .grid
        .iter()
        .flat_map(|&a| {
            cfg.grid
                .iter()
                .flat_map(move |&b| (0..cfg.splits).map(move |s| (a, b, s)))
        })
        .collect();

    let accs = out.phase("solve", |_| {
        par_map(&tasks, |&(alpha, beta, s)| {
            let solver = SolverConfig {
                alpha,
                beta,
                ..cfg.solver()
            };
            let (train, test) = &splits[s];
            run_split(&x, &labels, classes, (train, test), Method::Aslrc, &solver)
                .map(|o| o.accuracy)
        })
    })?;

    let rows: Vec<Vec<String>> = tasks
        .chunks(cfg.splits)
        .zip(accs.chunks(cfg.splits))
        .map(|(t, a)| {
            let (mean, std) = mean_std(a);
            vec![
                fmt(t[0].0),
                fmt(t[0].1),
                fmt(cfg.lambda),
                fmt(mean),
                fmt(std),
            ]
        })
        .collect();
    out.phase("write", |out| {
        out.write_table(
            "grid.csv",
            &["alpha", "beta", "lambda", "mean_accuracy", "std_accuracy"],
            &rows,
        )
    })
}
