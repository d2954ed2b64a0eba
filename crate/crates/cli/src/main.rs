//! `ising-conc`: diagnostics, norms, tail bounds and Monte Carlo validation
//! for polynomials of Ising models.

mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use ising_conc::bounds::{multilevel_bound, BoundForm};
use ising_conc::examples::{
    calibration_seed, case_grid, chain_bonds, cubic_chain_scaling, gumbel_matrix, gumbel_vector, negative_control,
    quadratic_form_poly, run_envelope_case_with, standard_suite, validation_seed, EnvelopeBound, EnvelopeCase,
    EnvelopeOutcome, ProtocolOptions,
};
use ising_conc::mc::{default_burn_in, sample_statistic, SampleOptions};
use ising_conc::norms::{
    all_partition_norms, latala_vector_norm, matrix_norm_12p, matrix_norm_1_2_p_with, partition_norm_with, NormOptions,
    NormResult, Partition,
};
use ising_conc::{entropy, io, IsingModel, SymmetricTensor, TetrahedralPolynomial};

use output::{num, Run};

#[derive(Parser, Debug)]
#[command(
    name = "ising-conc",
    version,
    about = "Concentration bounds for polynomials of Ising models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dobrushin diagnostics, β and the approximate tensorization constant.
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Glauber samples of a polynomial statistic.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        poly: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sweeps before recording; defaults to ⌈10·n·ln 2/ρ⌉.
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long, default_value_t = 1)]
        thinning: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Partition norms of a tensor, or interpolation norms with `--p`.
    Norms {
        #[arg(long)]
        tensor: PathBuf,
        /// Block list such as `{1,2}{3}`; all partitions when omitted.
        #[arg(long)]
        partition: Option<String>,
        /// Moment parameter: Latała norm for vectors, the two matrix norms
        /// for matrices.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Multilevel tail bound on a t-grid.
    Bound {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        poly: PathBuf,
        /// `start:end:points`.
        #[arg(long)]
        tgrid: String,
        /// `c=value`; defaults to `c=1`.
        #[arg(long)]
        constants: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Calibrate on one seed, check the envelope on another.
    Validate {
        #[arg(long, required_unless_present = "suite")]
        model: Option<PathBuf>,
        #[arg(long, conflicts_with = "tensor")]
        poly: Option<PathBuf>,
        /// Nonnegative definite matrix; checks the two-sided quadratic-form bound.
        #[arg(long)]
        tensor: Option<PathBuf>,
        /// Runs the built-in twelve-case suite on `n` sites instead.
        #[arg(long, value_name = "N", conflicts_with_all = ["model", "poly", "tensor"])]
        suite: Option<usize>,
        #[arg(long)]
        tgrid: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Fixed constants (`c=…` or `C=…`); skips calibration.
        #[arg(long)]
        constants: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Per-trial check of approximate tensorization on random functions.
    VerifyAt {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Built-in reproductions.
    Example {
        #[arg(value_enum)]
        name: ExampleName,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ExampleName {
    /// Degree-3 chain polynomial: norm table and fitted exponents.
    #[value(name = "ex2.5")]
    Ex25,
    /// Bond law of the one-dimensional chain.
    ChainBonds,
    /// Interpolation norms of `a_ij = 1/(i+j)²`.
    GumbelMatrix,
    /// Latała norm of `(1, 1/2, …, 1/n)`.
    GumbelVector,
}

fn parse_tgrid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, k] = parts.as_slice() else {
        bail!("--tgrid: expected start:end:points, got {spec:?}");
    };
    let a: f64 = a.trim().parse().with_context(|| format!("--tgrid: bad start {a:?}"))?;
    let b: f64 = b.trim().parse().with_context(|| format!("--tgrid: bad end {b:?}"))?;
    let k: usize = k
        .trim()
        .parse()
        .with_context(|| format!("--tgrid: bad point count {k:?}"))?;
    if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < a || k == 0 || (k == 1 && a != b) {
        bail!("--tgrid: need 0 ≤ start ≤ end and a positive point count, got {spec:?}");
    }
    if k == 1 {
        return Ok(vec![a]);
    }
    Ok((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect())
}

fn parse_constants(spec: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("--constants: expected name=value, got {item:?}"))?;
        let v: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("--constants: bad value for {name}"))?;
        if !(v.is_finite() && v > 0.0) {
            bail!("--constants: {name} must be positive and finite");
        }
        out.insert(name.trim().to_string(), v);
    }
    Ok(out)
}

/// Strength of a bound from user constants: `c`, or `1/C` for threshold bounds.
fn strength_from(constants: &BTreeMap<String, f64>, threshold: bool) -> Result<f64> {
    let (want, other) = if threshold { ("C", "c") } else { ("c", "C") };
    if let Some(name) = constants.keys().find(|k| k.as_str() != want) {
        if name == other {
            bail!("--constants: this bound takes {want}, not {other}");
        }
        if name == "K" {
            bail!("--constants: K is fixed at 1; scale C instead");
        }
        bail!("--constants: unknown constant {name}");
    }
    let v = constants
        .get(want)
        .ok_or_else(|| anyhow!("--constants: missing {want}"))?;
    Ok(if threshold { 1.0 / v } else { *v })
}

fn load_model(run: &mut Run, path: &Path) -> Result<IsingModel> {
    let src = run.read_input("model", path)?;
    io::parse_model(&src).with_context(|| format!("model file {}", path.display()))
}

fn load_poly(run: &mut Run, path: &Path) -> Result<TetrahedralPolynomial> {
    let src = run.read_input("poly", path)?;
    io::parse_polynomial(&src).with_context(|| format!("polynomial file {}", path.display()))
}

fn load_tensor(run: &mut Run, path: &Path) -> Result<SymmetricTensor> {
    let src = run.read_input("tensor", path)?;
    io::parse_tensor(&src).with_context(|| format!("tensor file {}", path.display()))
}

fn to_matrix(t: &SymmetricTensor) -> Result<DMatrix<f64>> {
    if t.order() != 2 {
        bail!("tensor: expected a matrix (order 2), got order {}", t.order());
    }
    Ok(DMatrix::from_row_slice(t.dim(), t.dim(), t.data()))
}

fn check(model_path: &Path, out: &Path) -> Result<u8> {
    let mut run = Run::new(out, "check")?;
    let model = load_model(&mut run, model_path)?;
    let d = model.dobrushin();
    let at = entropy::at_report(&model);
    let mut rows = vec![
        ("n", model.n().to_string()),
        ("rho", num(d.rho)),
        ("max_row_sum", num(d.max_row_sum)),
        ("alpha", num(d.alpha)),
        ("dobrushin", d.holds.to_string()),
        ("beta", num(at.beta)),
        ("beta_exact", at.beta_exact.to_string()),
        ("influence_opnorm", num(at.influence_opnorm)),
        ("at_constant", num(at.at_constant)),
    ];
    if d.holds {
        rows.push(("burn_in", default_burn_in(&model)?.to_string()));
    }
    for (k, v) in &rows {
        println!("{k} = {v}");
    }
    let rows: Vec<Vec<String>> = rows.into_iter().map(|(k, v)| vec![k.to_string(), v]).collect();
    run.csv("check.csv", &["quantity", "value"], &rows)?;
    run.finish()?;
    Ok(0)
}

fn sample(model_path: &Path, poly_path: &Path, opts: SampleOptions, out: &Path) -> Result<u8> {
    let mut run = Run::new(out, "sample")?;
    let model = load_model(&mut run, model_path)?;
    let poly = load_poly(&mut run, poly_path)?;
    if poly.n() != model.n() {
        bail!("polynomial has n = {} but the model has n = {}", poly.n(), model.n());
    }
    run.seed("root", opts.seed);
    run.param("samples", opts.samples);
    run.param("thinning", opts.thinning);
    run.param("chains", opts.chains);
    let s = sample_statistic(&model, &poly, &opts).context("mc: sampling")?;
    run.param("burn_in", s.burn_in);
    println!("samples = {}", s.values.len());
    println!("burn_in = {}", s.burn_in);
    println!("mean = {}", num(s.mean()));
    println!("variance = {}", num(s.variance()));
    println!("chain_mean_spread = {}", num(s.mean_spread));
    let rows: Vec<Vec<String>> = s
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), num(*v)])
        .collect();
    run.csv("samples.csv", &["index", "value"], &rows)?;
    run.finish()?;
    Ok(0)
}

fn witness_rows(label: &str, r: &NormResult, rows: &mut Vec<Vec<String>>) {
    for (b, w) in r.witness.iter().enumerate() {
        for (i, v) in w.iter().enumerate() {
            rows.push(vec![label.to_string(), b.to_string(), i.to_string(), num(*v)]);
        }
    }
}

fn norms(tensor_path: &Path, partition: Option<&str>, p: Option<f64>, opts: NormOptions, out: &Path) -> Result<u8> {
    let mut run = Run::new(out, "norms")?;
    let tensor = load_tensor(&mut run, tensor_path)?;
    run.seed("norms", opts.seed);
    run.param("restarts", opts.restarts);
    let mut table = Vec::new();
    let mut witness = Vec::new();
    if let Some(p) = p {
        run.param("p", p);
        match tensor.order() {
            1 => {
                let v = latala_vector_norm(tensor.data(), p).context("norms: Latała norm")?;
                println!("{{1}},p = {}", num(v));
                table.push(vec!["{1},p".into(), num(v), "true".into(), "0".into(), "true".into()]);
            }
            2 => {
                let a = to_matrix(&tensor)?;
                let hs = matrix_norm_12p(&a, p).context("norms: {1,2},p norm")?;
                let r = matrix_norm_1_2_p_with(&a, p, &opts, &[]).context("norms: {1}{2},p norm")?;
                println!("{{1,2}},p = {}", num(hs));
                println!("{{1}}{{2}},p = {} (restarts {})", num(r.value), r.restarts_used);
                table.push(vec![
                    "{1,2},p".into(),
                    num(hs),
                    "true".into(),
                    "0".into(),
                    "true".into(),
                ]);
                table.push(vec![
                    "{1}{2},p".into(),
                    num(r.value),
                    r.converged.to_string(),
                    r.restarts_used.to_string(),
                    r.exact.to_string(),
                ]);
                witness_rows("{1}{2},p", &r, &mut witness);
            }
            d => bail!("norms: --p needs a vector or a matrix, got order {d}"),
        }
    } else {
        let results: Vec<(Partition, NormResult)> = match partition {
            Some(spec) => {
                let part = Partition::parse(spec).with_context(|| format!("--partition {spec:?}"))?;
                if part.d() != tensor.order() {
                    bail!(
                        "--partition {spec:?} covers {} indices, tensor has order {}",
                        part.d(),
                        tensor.order()
                    );
                }
                run.param("partition", part.to_string());
                let r = partition_norm_with(&tensor, &part, &opts, &[]).context("norms: partition norm")?;
                vec![(part, r)]
            }
            None => all_partition_norms(&tensor, &opts).context("norms: partition norms")?,
        };
        for (part, r) in &results {
            let label = part.to_string();
            println!(
                "{label} = {} (converged {}, restarts {}, exact {})",
                num(r.value),
                r.converged,
                r.restarts_used,
                r.exact
            );
            table.push(vec![
                label.clone(),
                num(r.value),
                r.converged.to_string(),
                r.restarts_used.to_string(),
                r.exact.to_string(),
            ]);
            witness_rows(&label, r, &mut witness);
        }
    }
    run.csv(
        "norms.csv",
        &["partition", "value", "converged", "restarts", "exact"],
        &table,
    )?;
    run.csv("witness.csv", &["partition", "block", "index", "value"], &witness)?;
    run.finish()?;
    Ok(0)
}

fn bound(model_path: &Path, poly_path: &Path, tgrid: &str, constants: Option<&str>, out: &Path) -> Result<u8> {
    let mut run = Run::new(out, "bound")?;
    let grid = parse_tgrid(tgrid)?;
    let constants = constants.map(parse_constants).transpose()?.unwrap_or_default();
    let c = if constants.is_empty() {
        1.0
    } else {
        strength_from(&constants, false)?
    };
    let model = load_model(&mut run, model_path)?;
    let poly = load_poly(&mut run, poly_path)?;
    if poly.n() != model.n() {
        bail!("polynomial has n = {} but the model has n = {}", poly.n(), model.n());
    }
    run.param("tgrid", tgrid);
    let law = model.exact_law().context("model: exact law")?;
    let b = multilevel_bound(&poly, &law, c).context("bounds: multilevel bound")?;
    run.constants(&b.constants());
    let BoundForm::Exponential { levels, .. } = &b.form else {
        unreachable!("multilevel bounds are exponential")
    };
    let rows: Vec<Vec<String>> = grid
        .iter()
        .map(|&t| {
            let ev = b.evaluate(t);
            let k = ev.branch.map(|i| levels[i].k.to_string()).unwrap_or_default();
            vec![num(t), num(ev.bound), k, b.level_label(ev.branch)]
        })
        .collect();
    for l in levels {
        println!("k = {} {} = {}", l.k, l.label, num(l.norm));
    }
    run.csv("bound.csv", &["t", "bound", "k", "partition"], &rows)?;
    run.finish()?;
    Ok(0)
}

fn envelope_rows(o: &EnvelopeOutcome) -> Vec<Vec<String>> {
    o.rows
        .iter()
        .map(|r| {
            vec![
                num(r.t),
                num(r.survival),
                num(r.stderr),
                num(r.bound),
                o.bound.level_label(r.branch),
                r.violated.to_string(),
            ]
        })
        .collect()
}

const ENVELOPE_HEADER: [&str; 6] = ["t", "survival", "stderr", "bound", "branch", "violated"];

struct ValidateArgs<'a> {
    model: Option<&'a Path>,
    poly: Option<&'a Path>,
    tensor: Option<&'a Path>,
    suite: Option<usize>,
    tgrid: Option<&'a str>,
    samples: usize,
    seed: u64,
    constants: Option<&'a str>,
    out: &'a Path,
}

fn validate(a: ValidateArgs<'_>) -> Result<u8> {
    let mut run = Run::new(a.out, "validate")?;
    let opts = ProtocolOptions {
        samples: a.samples,
        seed: a.seed,
        ..ProtocolOptions::default()
    };
    if opts.samples == 0 {
        bail!("--samples must be positive");
    }
    run.seed("root", a.seed);
    run.seed("calibration", calibration_seed(a.seed));
    run.seed("validation", validation_seed(a.seed));
    run.param("samples", a.samples);
    run.param("chains", opts.chains);
    let grid = a.tgrid.map(parse_tgrid).transpose()?;
    if let Some(g) = a.tgrid {
        run.param("tgrid", g);
    }
    let constants = a.constants.map(parse_constants).transpose()?;

    if let Some(n) = a.suite {
        if constants.is_some() {
            bail!("--constants cannot be combined with --suite");
        }
        run.param("suite_n", n);
        let cases = standard_suite(n, a.seed).context("examples: test suite")?;
        let mut summary = Vec::new();
        let mut total = 0;
        let mut heaviest: Option<(f64, usize)> = None;
        let mut outcomes = Vec::new();
        for case in &cases {
            let g = match &grid {
                Some(g) => g.clone(),
                None => case_grid(case, &opts)?,
            };
            let o =
                run_envelope_case_with(case, &g, &opts, None).with_context(|| format!("validate: {}", case.name))?;
            total += o.violations;
            if heaviest.is_none_or(|(k, _)| o.kurtosis > k) {
                heaviest = Some((o.kurtosis, outcomes.len()));
            }
            run.csv(
                &format!("envelope_{}.csv", o.name),
                &ENVELOPE_HEADER,
                &envelope_rows(&o),
            )?;
            outcomes.push(o);
        }
        let control = match heaviest {
            Some((_, i)) => Some((i, negative_control(&outcomes[i])?)),
            None => None,
        };
        for (i, o) in outcomes.iter().enumerate() {
            let ctrl = match control {
                Some((j, v)) if j == i => v.to_string(),
                _ => String::new(),
            };
            println!(
                "{:<22} {:<15} strength {:<12} violations {} kurtosis {:.3}{}",
                o.name,
                o.kind.to_string(),
                num(o.strength),
                o.violations,
                o.kurtosis,
                if ctrl.is_empty() {
                    String::new()
                } else {
                    format!(" negative-control violations {ctrl}")
                }
            );
            summary.push(vec![
                o.name.clone(),
                o.kind.to_string(),
                num(o.strength),
                o.violations.to_string(),
                num(o.kurtosis),
                ctrl,
            ]);
            for (k, v) in o.bound.constants() {
                run.constants(&BTreeMap::from([(format!("{}.{k}", o.name), v)]));
            }
        }
        run.csv(
            "suite.csv",
            &[
                "case",
                "bound",
                "strength",
                "violations",
                "kurtosis",
                "negative_control_violations",
            ],
            &summary,
        )?;
        run.finish()?;
        println!("total violations = {total}");
        return Ok(u8::from(total > 0));
    }

    let model_path = a.model.ok_or_else(|| anyhow!("--model is required"))?;
    let model = load_model(&mut run, model_path)?;
    let case = match (a.poly, a.tensor) {
        (Some(p), None) => EnvelopeCase {
            name: "input".into(),
            poly: load_poly(&mut run, p)?,
            model: model.clone(),
            bound: EnvelopeBound::Multilevel,
            matrix: None,
        },
        (None, Some(t)) => {
            let m = to_matrix(&load_tensor(&mut run, t)?)?;
            EnvelopeCase {
                name: "input".into(),
                poly: quadratic_form_poly(&m)?,
                model: model.clone(),
                bound: EnvelopeBound::Quadratic,
                matrix: Some(m),
            }
        }
        _ => bail!("validate needs exactly one of --poly or --tensor"),
    };
    if case.poly.n() != model.n() {
        bail!(
            "statistic has n = {} but the model has n = {}",
            case.poly.n(),
            model.n()
        );
    }
    let strength = constants
        .as_ref()
        .map(|c| strength_from(c, case.bound == EnvelopeBound::Quadratic))
        .transpose()?;
    run.param("calibrated", strength.is_none());
    let g = match grid {
        Some(g) => g,
        None => case_grid(&case, &opts)?,
    };
    let o = run_envelope_case_with(&case, &g, &opts, strength).context("validate")?;
    run.constants(&o.bound.constants());
    run.csv("envelope.csv", &ENVELOPE_HEADER, &envelope_rows(&o))?;
    run.finish()?;
    println!("bound = {}", o.kind);
    for (k, v) in o.bound.constants() {
        println!("{k} = {}", num(v));
    }
    println!("violations = {}", o.violations);
    Ok(u8::from(o.violations > 0))
}

fn verify_at(model_path: &Path, trials: usize, seed: u64, out: &Path) -> Result<u8> {
    let mut run = Run::new(out, "verify-at")?;
    let model = load_model(&mut run, model_path)?;
    run.seed("root", seed);
    run.param("trials", trials);
    let v = entropy::verify_at(&model, trials, seed).context("entropy: approximate tensorization check")?;
    run.constants(&BTreeMap::from([("at_constant".to_string(), v.constant)]));
    let rows: Vec<Vec<String>> = v
        .trials
        .iter()
        .map(|t| vec![t.trial.to_string(), num(t.ent), num(t.bound), num(t.ratio)])
        .collect();
    run.csv("verify_at.csv", &["trial", "ent", "bound", "ratio"], &rows)?;
    run.finish()?;
    println!("constant = {}", num(v.constant));
    println!("max_ratio = {}", num(v.max_ratio));
    println!("violations = {}", v.violations);
    Ok(u8::from(v.violations > 0))
}

fn example(name: ExampleName, samples: usize, seed: u64, out: &Path) -> Result<u8> {
    let mut run = Run::new(out, "example")?;
    let opts = NormOptions::default();
    match name {
        ExampleName::Ex25 => {
            run.param("example", "ex2.5");
            let ns = [6, 8, 10, 12, 14];
            run.param("n", ns);
            run.seed("norms", opts.seed);
            let r = cubic_chain_scaling(&ns, &opts).context("examples: cubic chain")?;
            let rows: Vec<Vec<String>> = r
                .rows
                .iter()
                .map(|x| {
                    vec![
                        x.n.to_string(),
                        num(x.a123),
                        num(x.a12_3),
                        num(x.a1_2_3),
                        num(x.mean_gradient_sq),
                        num(x.variance),
                    ]
                })
                .collect();
            let header = ["n", "a_123", "a_12_3", "a_1_2_3", "mean_gradient_sq", "variance"];
            run.csv("ex2_5.csv", &header, &rows)?;
            let slopes: Vec<Vec<String>> = header[1..]
                .iter()
                .zip(r.slopes)
                .map(|(h, s)| vec![h.to_string(), num(s)])
                .collect();
            run.csv("ex2_5_slopes.csv", &["quantity", "slope"], &slopes)?;
            println!(
                "{:>4} {:>12} {:>12} {:>12} {:>14} {:>12}",
                "n", "{1,2,3}", "{1,2}{3}", "{1}{2}{3}", "mean_grad_sq", "var"
            );
            for x in &r.rows {
                println!(
                    "{:>4} {:>12.6} {:>12.6} {:>12.6} {:>14.6} {:>12.6}",
                    x.n, x.a123, x.a12_3, x.a1_2_3, x.mean_gradient_sq, x.variance
                );
            }
            println!(
                "slope {:>12.4} {:>12.4} {:>12.4} {:>14.4} {:>12.4}",
                r.slopes[0], r.slopes[1], r.slopes[2], r.slopes[3], r.slopes[4]
            );
        }
        ExampleName::ChainBonds => {
            run.param("example", "chain-bonds");
            run.param("samples", samples);
            run.seed("root", seed);
            let n = 10;
            let r = chain_bonds(n, samples, seed).context("examples: chain bonds")?;
            let mut rows: Vec<Vec<String>> = r
                .exact
                .iter()
                .enumerate()
                .map(|(i, e)| vec![format!("bond_{}", i + 1), num(*e)])
                .collect();
            rows.push(vec!["formula".into(), num(r.formula)]);
            rows.push(vec!["max_pair_dependence".into(), num(r.max_pair_dependence)]);
            rows.push(vec!["sampled".into(), num(r.sampled)]);
            rows.push(vec!["sampled_stderr".into(), num(r.sampled_stderr)]);
            run.csv("chain_bonds.csv", &["quantity", "value"], &rows)?;
            println!("formula = {}", num(r.formula));
            println!(
                "max |exact - formula| = {:e}",
                r.exact.iter().map(|e| (e - r.formula).abs()).fold(0.0, f64::max)
            );
            println!("max pair dependence = {:e}", r.max_pair_dependence);
            println!("sampled = {} ± {}", num(r.sampled), num(r.sampled_stderr));
        }
        ExampleName::GumbelMatrix => {
            run.param("example", "gumbel-matrix");
            let ns = [50, 100, 200, 500];
            let ps = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0];
            run.param("n", ns);
            run.param("p", ps);
            run.seed("norms", opts.seed);
            let rows = gumbel_matrix(&ns, &ps, &opts).context("examples: inverse-square matrix")?;
            let out_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        num(r.p),
                        num(r.norm_12p),
                        num(r.norm_1_2p),
                        num(r.norm_1_2p_over_log()),
                    ]
                })
                .collect();
            run.csv(
                "gumbel_matrix.csv",
                &["n", "p", "norm_12p", "norm_1_2p", "norm_1_2p_over_log_p"],
                &out_rows,
            )?;
            for r in &rows {
                println!(
                    "n = {:>3} p = {:>3} {{1,2}},p = {:.6} {{1}}{{2}},p / ln p = {:.6}",
                    r.n,
                    r.p,
                    r.norm_12p,
                    r.norm_1_2p_over_log()
                );
            }
        }
        ExampleName::GumbelVector => {
            run.param("example", "gumbel-vector");
            let n = 10_000;
            let ps: Vec<f64> = (0..=10).map(|k| 2f64.powi(k)).collect();
            run.param("n", n);
            run.param("p", &ps);
            let rows = gumbel_vector(n, &ps).context("examples: harmonic vector")?;
            let out_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.p),
                        num(r.value),
                        num(r.rearrangement),
                        num(r.value / r.p.ln().max(1.0)),
                    ]
                })
                .collect();
            run.csv(
                "gumbel_vector.csv",
                &["p", "value", "rearrangement", "value_over_log_p"],
                &out_rows,
            )?;
            for r in &rows {
                println!(
                    "p = {:>5} norm = {:.6} rearrangement = {:.6}",
                    r.p, r.value, r.rearrangement
                );
            }
        }
    }
    run.finish()?;
    Ok(0)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("ISING_CONC_THREADS") {
        let k: usize = v
            .trim()
            .parse()
            .with_context(|| format!("ISING_CONC_THREADS: expected a positive integer, got {v:?}"))?;
        if k == 0 {
            bail!("ISING_CONC_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Check { model, out } => check(&model, &out),
        Command::Sample {
            model,
            poly,
            samples,
            seed,
            burn_in,
            thinning,
            out,
        } => {
            if samples == 0 || thinning == 0 {
                bail!("--samples and --thinning must be positive");
            }
            let opts = SampleOptions {
                samples,
                burn_in,
                thinning,
                seed,
                ..SampleOptions::default()
            };
            sample(&model, &poly, opts, &out)
        }
        Command::Norms {
            tensor,
            partition,
            p,
            restarts,
            seed,
            out,
        } => {
            if restarts == 0 {
                bail!("--restarts must be positive");
            }
            let opts = NormOptions {
                restarts,
                seed,
                ..NormOptions::default()
            };
            norms(&tensor, partition.as_deref(), p, opts, &out)
        }
        Command::Bound {
            model,
            poly,
            tgrid,
            constants,
            out,
        } => bound(&model, &poly, &tgrid, constants.as_deref(), &out),
        Command::Validate {
            model,
            poly,
            tensor,
            suite,
            tgrid,
            samples,
            seed,
            constants,
            out,
        } => validate(ValidateArgs {
            model: model.as_deref(),
            poly: poly.as_deref(),
            tensor: tensor.as_deref(),
            suite,
            tgrid: tgrid.as_deref(),
            samples,
            seed,
            constants: constants.as_deref(),
            out: &out,
        }),
        Command::VerifyAt {
            model,
            trials,
            seed,
            out,
        } => verify_at(&model, trials, seed, &out),
        Command::Example {
            name,
            samples,
            seed,
            out,
        } => example(name, samples, seed, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
