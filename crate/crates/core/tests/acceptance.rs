//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lolrec::aslrc::{
    augmented_lagrangian, primal_sweep, solve, update_l, update_multipliers_and_mu, update_r,
    update_z, AslrcState, SolverConfig, ZSystem,
};
use lolrec::classifier::{predict_labels, train_with_projection, ClassifierConfig, LabelMatrix};
use lolrec::cli::commands::{run_split, split_indices};
use lolrec::cli::Method;
use lolrec::corruption::{
    corrupt_random_pixels, synth_blobs, synth_nonnegative_subspaces, synth_subspaces, SubspaceSpec,
};
use lolrec::latlrr::latlrr_solve;
use lolrec::matrix_io::{save_pgm, DataMatrix, ImageGrid};
use lolrec::metrics::{offblock_ratio, reconstruction_accuracy};
use lolrec::prox::{
    column_l21_shrink, l1_norm, l21_norm, nuclear_norm, scalar_shrink, svt, weighted_shrink,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(budget: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    check(
        took < budget,
        format!(
            "{detail}; {:.1}s of {}s budget",
            took.as_secs_f64(),
            budget.as_secs()
        ),
    )
}

fn uniform(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn gaussian(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// Smallest objective over random perturbations of `p` must not beat `p`.
fn beats_perturbations(
    p: &DMatrix<f64>,
    objective: impl Fn(&DMatrix<f64>) -> f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let base = objective(p);
    (0..200i32).all(|k| {
        let scale = 10f64.powi(-(k % 5));
        let candidate = p + gaussian(p.nrows(), p.ncols(), rng) * scale;
        objective(&candidate) >= base - 1e-12 * (1.0 + base.abs())
    })
}

fn prox_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    for inst in 0..50 {
        let (r, c) = (rng.random_range(2..7), rng.random_range(2..7));
        let v = gaussian(r, c, &mut rng) * 2.0;
        let tau = rng.random_range(0.0..2.0);
        let sq = |y: &DMatrix<f64>| 0.5 * (y - &v).norm_squared();

        let p = svt(&v, tau).unwrap();
        if !beats_perturbations(&p, |y| sq(y) + tau * nuclear_norm(y).unwrap(), &mut rng) {
            failures.push(format!("svt#{inst}"));
        }
        let p = column_l21_shrink(&v, tau).unwrap();
        if !beats_perturbations(&p, |y| sq(y) + tau * l21_norm(y), &mut rng) {
            failures.push(format!("l21#{inst}"));
        }
        let t = DMatrix::from_fn(r, c, |_, _| rng.random_range(0.0..2.0));
        let p = weighted_shrink(&v, &t).unwrap();
        if !beats_perturbations(
            &p,
            |y| sq(y) + l1_norm(&t.component_mul(&y.abs())),
            &mut rng,
        ) {
            failures.push(format!("weighted#{inst}"));
        }
    }

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x: f64 = rng.random_range(-3.0..3.0);
        let eps: f64 = rng.random_range(0.0..2.0);
        let step = 1e-4;
        let best = (0..=60_000)
            .map(|i| -3.0 + i as f64 * step)
            .min_by(|a, b| {
                let f = |y: f64| 0.5 * (y - x).powi(2) + eps * y.abs();
                f(*a).total_cmp(&f(*b))
            })
            .unwrap();
        worst = worst.max((best - scalar_shrink(x, eps).unwrap()).abs());
    }
    if worst > 1e-4 {
        failures.push(format!("scalar grid gap {worst:.2e}"));
    }
    let detail = format!(
        "50 instances x 3 operators x 200 perturbations, {} failures; scalar grid gap {worst:.1e}",
        failures.len()
    );
    if !failures.is_empty() {
        return Err(format!("{detail}: {failures:?}"));
    }
    within(Duration::from_secs(10), start, detail)
}

fn random_state(d: usize, n: usize, rng: &mut ChaCha8Rng) -> AslrcState {
    let mut s = AslrcState::zeros(d, n, rng.random_range(0.5..2.0));
    for m in [
        &mut s.z, &mut s.j, &mut s.q, &mut s.r, &mut s.s, &mut s.w, &mut s.y2, &mut s.y4,
        &mut s.y5, &mut s.y6,
    ] {
        *m = uniform(n, n, rng);
    }
    for m in [&mut s.l, &mut s.f, &mut s.y3] {
        *m = uniform(d, d, rng);
    }
    s.e = uniform(d, n, rng);
    s.y1 = uniform(d, n, rng);
    s
}

fn fd_gradient(
    state: &AslrcState,
    x: &DMatrix<f64>,
    cfg: &SolverConfig,
    block: fn(&mut AslrcState) -> &mut DMatrix<f64>,
) -> DMatrix<f64> {
    let h = 1e-3;
    let mut probe = state.clone();
    let (r, c) = block(&mut probe).shape();
    DMatrix::from_fn(r, c, |i, j| {
        let orig = block(&mut probe)[(i, j)];
        block(&mut probe)[(i, j)] = orig + h;
        let up = augmented_lagrangian(&probe, x, cfg).unwrap();
        block(&mut probe)[(i, j)] = orig - h;
        let down = augmented_lagrangian(&probe, x, cfg).unwrap();
        block(&mut probe)[(i, j)] = orig;
        (up - down) / (2.0 * h)
    })
}

fn subproblem_optimality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (d, n) = (12, 15);
    let mut worst_grad: f64 = 0.0;
    let mut worst_rise = f64::NEG_INFINITY;
    for _ in 0..20 {
        let x = uniform(d, n, &mut rng);
        let cfg = SolverConfig::with_weights(
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..1.0),
        );
        let mut s = random_state(d, n, &mut rng);
        let fresh = s.clone();

        let blocks: [fn(&mut AslrcState) -> &mut DMatrix<f64>; 3] =
            [|s| &mut s.l, |s| &mut s.z, |s| &mut s.r];
        for (k, block) in blocks.into_iter().enumerate() {
            let before = fd_gradient(&s, &x, &cfg, block).norm();
            let value = match k {
                0 => update_l(&s, &x, &cfg),
                1 => update_z(&s, &x),
                _ => update_r(&s, &x, &cfg),
            }
            .unwrap();
            *block(&mut s) = value;
            let after = fd_gradient(&s, &x, &cfg, block).norm();
            worst_grad = worst_grad.max(after / before.max(1.0));
        }

        let zsys = ZSystem::new(&x).unwrap();
        let mut s = fresh;
        for _ in 0..3 {
            let before = augmented_lagrangian(&s, &x, &cfg).unwrap();
            primal_sweep(&mut s, &x, &cfg, &zsys).unwrap();
            let after = augmented_lagrangian(&s, &x, &cfg).unwrap();
            worst_rise = worst_rise.max((after - before) / before.abs());
            update_multipliers_and_mu(&mut s, &x, &cfg);
        }
    }
    let detail = format!(
        "worst relative gradient at L/Z/R updates {worst_grad:.1e} (tol 1e-6); worst relative sweep change {worst_rise:.1e} (tol 1e-8)"
    );
    if worst_grad > 1e-6 || worst_rise > 1e-8 {
        return Err(detail);
    }
    within(Duration::from_secs(60), start, detail)
}

fn feasibility() -> Outcome {
    let start = Instant::now();
    let (x, _) = synth_subspaces(&SubspaceSpec::default()).unwrap();
    let d = solve(&x, &SolverConfig::default()).unwrap();
    let detail = format!(
        "converged={} residual {:.2e} after {} iterations (need < 1e-6 within <= 200)",
        d.converged, d.residual, d.iterations
    );
    if !(d.converged && d.residual < 1e-6 && d.iterations <= 200) {
        return Err(detail);
    }
    within(Duration::from_secs(60), start, detail)
}

fn block_diagonality() -> Outcome {
    let (x, labels) = synth_subspaces(&SubspaceSpec::default()).unwrap();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for alpha in [1e-2, 1.0, 1e2] {
        for beta in [1e-2, 1.0] {
            let d = solve(&x, &SolverConfig::with_weights(alpha, beta, 0.015)).unwrap();
            let r = offblock_ratio(&d.z, &labels).unwrap();
            if r < best.0 {
                best = (r, alpha, beta);
            }
        }
    }
    let base = latlrr_solve(&x, 0.015, &SolverConfig::default()).unwrap();
    let base_ratio = offblock_ratio(&base.z, &labels).unwrap();
    check(
        best.0 <= 0.2 && best.0 < base_ratio,
        format!(
            "AS-LRC off-block {:.2e} (alpha={:e}, beta={:e}) vs LatLRR {:.2e}",
            best.0, best.1, best.2, base_ratio
        ),
    )
}

fn denoising() -> Outcome {
    let start = Instant::now();
    let pcts = [10.0, 20.0, 30.0, 40.0, 50.0];
    let cfg = SolverConfig::with_weights(0.01, 0.01, 0.1);
    let mut ours = [0.0; 5];
    let mut base = [0.0; 5];
    for seed in 0..5u64 {
        let (clean, _) = synth_nonnegative_subspaces(64, 3, 3, 32, seed).unwrap();
        for (i, &pct) in pcts.iter().enumerate() {
            let noisy = DataMatrix::new(corrupt_random_pixels(&clean, pct, seed).unwrap()).unwrap();
            let a = solve(&noisy, &cfg).unwrap();
            let b = latlrr_solve(&noisy, cfg.lambda, &cfg).unwrap();
            ours[i] += reconstruction_accuracy(&clean, &a.principal).unwrap() / 5.0;
            base[i] += reconstruction_accuracy(&clean, &b.principal).unwrap() / 5.0;
        }
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let margin = ours.iter().zip(&base).all(|(a, b)| *a >= b - 0.02);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|z| format!("{z:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let detail = format!("zeta AS-LRC [{}] LatLRR [{}]", fmt(&ours), fmt(&base));
    if !(decreasing(&ours) && decreasing(&base) && margin) {
        return Err(detail);
    }
    within(Duration::from_secs(600), start, detail)
}

fn classifier() -> Outcome {
    let (x, labels) = synth_blobs(3, 20, 60, 0.1, 0).unwrap();
    let solver = SolverConfig::default();
    let mut accs = Vec::new();
    for split in 0..10 {
        let (train, test) = split_indices(&labels, 3, 30, split).unwrap();
        accs.push(
            run_split(
                &x,
                &labels,
                3,
                (train.as_slice(), test.as_slice()),
                Method::Aslrc,
                &solver,
            )
            .unwrap()
            .accuracy,
        );
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;

    let (train, test) = split_indices(&labels, 3, 30, 0).unwrap();
    let x_train = DataMatrix::new(x.select_columns(&train)).unwrap();
    let y_train: Vec<usize> = train.iter().map(|&j| labels[j]).collect();
    let d = solve(&x_train, &solver).unwrap();
    let model = train_with_projection(
        &d.l,
        &x_train,
        &LabelMatrix::from_labels(&y_train, 3).unwrap(),
        &ClassifierConfig::from(&solver),
    )
    .unwrap();
    let x_test = x.select_columns(&test);
    let (pred, _) = predict_labels(&model, &x_test).unwrap();
    let invariant = [1e-3, 0.5, 3.7, 1e3]
        .iter()
        .all(|&c| predict_labels(&model, &(&x_test * c)).unwrap().0 == pred);
    check(
        mean >= 0.95 && invariant,
        format!("mean accuracy {mean:.3} over 10 splits (need >= 0.95); argmax invariant under scaling: {invariant}"),
    )
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "pgm"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn run_cli(args: &[&str], threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lolrec"))
        .args(args)
        .env("LOLREC_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let images = root.path().join("images");
    fs::create_dir(&images).unwrap();
    let (x, _) = synth_nonnegative_subspaces(48, 2, 2, 5, 3).unwrap();
    for (j, col) in x.column_iter().enumerate() {
        let pixels = col.iter().map(|v| (v * 255.0).round() as u8).collect();
        save_pgm(
            &ImageGrid::new(8, 6, pixels).unwrap(),
            images.join(format!("img{j:02}.pgm")),
        )
        .unwrap();
    }
    let config = root.path().join("config.json");
    fs::write(
        &config,
        r#"{"pcts": [10, 30], "train_per_class": [10], "splits": 3, "blob_per_class": 20,
            "grid": [0.01, 1.0], "image_width": 8, "image_height": 6, "panel_samples": 4}"#,
    )
    .unwrap();

    let commands = ["decompose", "denoise", "classify", "bench-synth", "grid"];
    let mut compared = 0;
    for cmd in commands {
        let mut runs = Vec::new();
        for (k, threads) in ["1", "2"].iter().enumerate() {
            let out = root.path().join(format!("{cmd}-{k}"));
            let mut args = vec![
                cmd,
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "7",
            ];
            if cmd == "decompose" {
                args.extend(["--input", images.to_str().unwrap()]);
            }
            run_cli(&args, threads)?;
            runs.push(artifacts(&out));
        }
        if runs[0].is_empty() || runs[0] != runs[1] {
            return Err(format!("{cmd}: artifacts differ between identical runs"));
        }
        compared += runs[0].len();
    }
    Ok(format!(
        "{} subcommands, {compared} CSV/PGM artifacts byte-identical across repeated runs",
        commands.len()
    ))
}

fn mu_schedule() -> Outcome {
    let cfg = SolverConfig::default();
    let x = DMatrix::from_element(2, 3, 1.0);
    let mut s = AslrcState::zeros(2, 3, cfg.mu0);
    let mut worst: f64 = 0.0;
    let mut k = 0;
    while cfg.mu0 * cfg.eta.powi(k + 1) < cfg.mu_max {
        update_multipliers_and_mu(&mut s, &x, &cfg);
        k += 1;
        let expect = cfg.mu0 * cfg.eta.powi(k);
        worst = worst.max((s.mu - expect).abs() / expect);
    }
    update_multipliers_and_mu(&mut s, &x, &cfg);
    let capped = s.mu == cfg.mu_max;

    let root = tempfile::tempdir().unwrap();
    let config = root.path().join("capped.json");
    fs::write(
        &config,
        r#"{"mu_max": 0.01, "max_iter": 120, "methods": ["aslrc"]}"#,
    )
    .unwrap();
    let mut rows_ok = true;
    for (name, extra) in [
        ("default", None),
        ("capped", Some(config.to_str().unwrap())),
    ] {
        let out = root.path().join(name);
        let mut args = vec![
            "bench-synth",
            "--method",
            "aslrc",
            "--out",
            out.to_str().unwrap(),
        ];
        if let Some(c) = extra {
            args.extend(["--config", c]);
        }
        run_cli(&args, "1")?;
        let trace = fs::read_to_string(out.join("aslrc_trace.csv")).unwrap();
        let bench = fs::read_to_string(out.join("bench.csv")).unwrap();
        let iterations: usize = bench
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        let mus: Vec<f64> = trace
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
            .collect();
        let its: Vec<usize> = trace
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        let cap = if extra.is_some() { 0.01 } else { 1e10 };
        rows_ok &= trace.starts_with("iteration,residual,mu,lagrangian\n")
            && mus.len() == iterations
            && its == (1..=iterations).collect::<Vec<_>>()
            && mus.windows(2).all(|w| w[1] >= w[0])
            && mus.iter().all(|&m| m <= cap)
            && (extra.is_none() || mus.last() == Some(&cap));
    }
    check(
        worst <= 1e-12 && capped && rows_ok,
        format!("{k} uncapped steps, worst relative error {worst:.1e}; cap holds: {capped}; trace rows well-formed: {rows_ok}"),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("prox-operator oracles", prox_oracles),
        (
            "subproblem optimality and sweep monotonicity",
            subproblem_optimality,
        ),
        ("feasibility at convergence", feasibility),
        ("block-diagonality vs LatLRR", block_diagonality),
        ("denoising comparison", denoising),
        ("out-of-sample classifier", classifier),
        ("CLI determinism", determinism),
        ("penalty schedule and trace", mu_schedule),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
