use std::path::{Path, PathBuf};

use ccm_core::analysis::{verify_threshold, verify_threshold2, worst_case_condition, AnalysisOptions, Budget};
use ccm_core::decoders::decode;
use ccm_core::io::{load_matrix, save_cmx1, save_csv};
use ccm_core::rng::derive_seed;
use ccm_core::schemes::{
    build_mds_matvec, build_poly_matmul, encode, worker_compute, EncodingPlan, MdsGenerator, SchemeParams,
};
use ccm_core::sim::{batch_reports, simulate, summarize, write_trace, DelayModel};
use ccm_core::{direct_product, random_matrix, CcmError, CompletionPattern, EntryDistribution, Matrix, Result};
use serde::Serialize;
use serde_json::json;

use crate::config::{Action, ExperimentConfig, Format, Payload};
use crate::{Cli, Command};

/// Seed streams derived from the top-level seed.
const STREAM_A: u64 = 0;
const STREAM_B: u64 = 1;
const STREAM_SIM: u64 = 2;

/// Vandermonde preset rows: (N, tau, published value).
const VANDERMONDE_PRESET: [(usize, usize, f64); 3] = [(15, 13, 1.689e6), (15, 12, 1.695e6), (30, 28, 2.293e13)];

struct Ctx {
    cfg: Option<ExperimentConfig>,
    seed: u64,
    out: Option<PathBuf>,
    format: Format,
}

impl Ctx {
    fn config(&self, action: Action) -> Result<&ExperimentConfig> {
        let cfg = self
            .cfg
            .as_ref()
            .ok_or_else(|| CcmError::Config("this command needs --config PATH".into()))?;
        cfg.check_action(action)?;
        Ok(cfg)
    }
}

/// Runs the selected command. `Ok(false)` means the command ran but its
/// check did not pass.
pub fn run(cli: &Cli) -> Result<bool> {
    let cfg = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let ctx = Ctx {
        seed: cli.seed.or(cfg.as_ref().and_then(|c| c.seed)).unwrap_or(0),
        out: cli.out.clone().or(cfg.as_ref().and_then(|c| c.out.clone())),
        format: cli
            .format
            .or(cfg.as_ref().and_then(|c| c.format))
            .unwrap_or(Format::Json),
        cfg,
    };
    match &cli.command {
        Command::Multiply { simulate_stragglers } => multiply(&ctx, simulate_stragglers.as_deref()),
        Command::Verify => verify(&ctx),
        Command::Cond { table1 } => cond(&ctx, *table1),
        Command::Simulate => simulate_cmd(&ctx),
        Command::Demo => demo(&ctx),
    }
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    emit(path, &bytes)
}

fn payload(cfg: &ExperimentConfig, seed: u64) -> Result<(Matrix, Matrix)> {
    match &cfg.payload {
        None => Err(CcmError::Config(
            "config needs a payload ({r,t,w} or {a,b} file paths)".into(),
        )),
        Some(Payload::Generated(g)) => Ok((
            random_matrix(g.t, g.r, derive_seed(seed, STREAM_A), g.entries)?,
            random_matrix(g.t, g.w, derive_seed(seed, STREAM_B), g.entries)?,
        )),
        Some(Payload::Files(f)) => Ok((load_matrix(&f.a)?, load_matrix(&f.b)?)),
    }
}

fn multiply(ctx: &Ctx, flag: Option<&[usize]>) -> Result<bool> {
    let cfg = ctx.config(Action::Multiply)?;
    let plan = cfg.scheme.build()?;
    let stragglers: Vec<usize> = flag.map(<[usize]>::to_vec).unwrap_or_else(|| cfg.stragglers.clone());
    if let Some(&w) = stragglers.iter().find(|&&w| w >= plan.workers()) {
        return Err(CcmError::Config(format!(
            "straggler {w} out of range for N={}",
            plan.workers()
        )));
    }
    let (a, b) = payload(cfg, ctx.seed)?;

    let blocks = encode(&plan, &a, &b)?;
    let mut results = Vec::new();
    let mut flops = vec![0u64; plan.workers()];
    let mut counts = vec![0; plan.workers()];
    for w in (0..plan.workers()).filter(|w| !stragglers.contains(w)) {
        let (res, f) = worker_compute(&blocks[w], &plan.assignments[w])?;
        counts[w] = res.len();
        flops[w] = f.0;
        results.extend(res);
    }
    let product = decode(&plan, &results)?;
    let (reference, _) = direct_product(&a, &b)?;
    let residual = product.relative_error(&reference);

    let out = ctx.out.clone().unwrap_or_else(|| PathBuf::from("product.cmx1"));
    match ctx.format {
        Format::Json => save_cmx1(&product, &out)?,
        Format::Csv => save_csv(&product, &out)?,
    }
    let sidecar = json!({
        "scheme": cfg.scheme,
        "product": out,
        "shape": [product.rows(), product.cols()],
        "stragglers": stragglers,
        "pattern": CompletionPattern::prefix(counts),
        "decode_method": plan.decode_method,
        "worker_flops": flops,
        "residual": residual,
    });
    let side_path = PathBuf::from(format!("{}.json", out.display()));
    emit_json(Some(&side_path), &sidecar)?;
    println!("{}", serde_json::to_string(&sidecar)?);
    Ok(true)
}

fn verify(ctx: &Ctx) -> Result<bool> {
    let cfg = ctx.config(Action::Verify)?;
    let plan = cfg.scheme.build()?;
    let opts = cfg.analysis_options(ctx.seed);
    let rep = match cfg.budget()? {
        Budget::Workers(t) => verify_threshold(&plan, t, &opts)?,
        Budget::Stages(t) => verify_threshold2(&plan, t, &opts)?,
    };
    match ctx.format {
        Format::Json => emit_json(ctx.out.as_deref(), &json!({ "scheme": cfg.scheme, "report": rep }))?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "holds",
                "patterns_checked",
                "unknowns",
                "counterexample",
                "counterexample_rank",
            ])?;
            w.write_record([
                rep.holds.to_string(),
                rep.patterns_checked.to_string(),
                rep.unknowns.to_string(),
                rep.counterexample
                    .as_ref()
                    .map(serde_json::to_string)
                    .transpose()?
                    .unwrap_or_default(),
                rep.counterexample_rank.map(|r| r.to_string()).unwrap_or_default(),
            ])?;
            emit(ctx.out.as_deref(), &into_bytes(w)?)?;
        }
    }
    Ok(rep.holds)
}

fn into_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| CcmError::Io(e.into_error()))
}

fn cond(ctx: &Ctx, table1: bool) -> Result<bool> {
    if !table1 {
        let cfg = ctx.config(Action::Cond)?;
        let plan = cfg.scheme.build()?;
        let rep = worst_case_condition(&plan, cfg.budget()?, &cfg.analysis_options(ctx.seed))?;
        match ctx.format {
            Format::Json => emit_json(ctx.out.as_deref(), &json!({ "scheme": cfg.scheme, "report": rep }))?,
            Format::Csv => {
                let mut buf = Vec::new();
                rep.write_csv(&mut buf)?;
                emit(ctx.out.as_deref(), &buf)?;
            }
        }
        return Ok(true);
    }
    let opts = AnalysisOptions::default();
    let mut rows = Vec::new();
    for (n, tau, published) in VANDERMONDE_PRESET {
        let plan = build_mds_matvec(tau, n, MdsGenerator::Vandermonde { eval_points: None })?;
        let rep = worst_case_condition(&plan, Budget::Workers(tau), &opts)?;
        rows.push((n, tau, published, rep));
    }
    match ctx.format {
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|(n, tau, published, rep)| json!({ "N": n, "tau": tau, "published": published, "report": rep }))
                .collect();
            emit_json(ctx.out.as_deref(), &v)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["N", "tau", "worst", "published", "patterns", "argmax_pattern"])?;
            for (n, tau, published, rep) in &rows {
                w.write_record([
                    n.to_string(),
                    tau.to_string(),
                    format!("{:e}", rep.worst),
                    format!("{published:e}"),
                    rep.patterns_evaluated.to_string(),
                    serde_json::to_string(&rep.argmax_pattern)?,
                ])?;
            }
            emit(ctx.out.as_deref(), &into_bytes(w)?)?;
        }
    }
    Ok(true)
}

fn trace_to(path: &Path, reports: &[ccm_core::sim::SimReport]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trace(reports, std::io::BufWriter::new(file))
}

fn simulate_cmd(ctx: &Ctx) -> Result<bool> {
    let cfg = ctx.config(Action::Simulate)?;
    let plan = cfg.scheme.build()?;
    let delay = cfg
        .delay
        .clone()
        .ok_or_else(|| CcmError::Config("config needs a delay model".into()))?;
    let sim_seed = derive_seed(ctx.seed, STREAM_SIM);
    let reports = match cfg.trials {
        Some(trials) => batch_reports(&plan, &delay, trials, sim_seed)?,
        None => {
            let data = cfg.payload.as_ref().map(|_| payload(cfg, ctx.seed)).transpose()?;
            vec![simulate(&plan, data.as_ref().map(|(a, b)| (a, b)), &delay, sim_seed)?]
        }
    };
    if let Some(path) = &cfg.trace {
        trace_to(path, &reports)?;
    }
    match ctx.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_trace(&reports, &mut buf)?;
            emit(ctx.out.as_deref(), &buf)?;
        }
        Format::Json if cfg.trials.is_some() => emit_json(
            ctx.out.as_deref(),
            &json!({ "scheme": cfg.scheme, "summary": summarize(&plan, &reports) }),
        )?,
        Format::Json => emit_json(
            ctx.out.as_deref(),
            &json!({ "scheme": cfg.scheme, "report": reports[0] }),
        )?,
    }
    Ok(true)
}

fn demo(ctx: &Ctx) -> Result<bool> {
    let plan: EncodingPlan = build_poly_matmul(2, 2, 6, None)?;
    let unit = EntryDistribution::Uniform { low: -1.0, high: 1.0 };
    let a = random_matrix(8, 8, derive_seed(ctx.seed, STREAM_A), unit)?;
    let b = random_matrix(8, 8, derive_seed(ctx.seed, STREAM_B), unit)?;
    let delay = DelayModel::Exponential { rate: 1.0 };
    let rep = simulate(&plan, Some((&a, &b)), &delay, derive_seed(ctx.seed, STREAM_SIM))?;
    let ok = rep.decoded_ok && rep.residual.is_some_and(|r| r <= 1e-8);
    let scheme = SchemeParams::PolyMatmul {
        m: 2,
        n: 2,
        workers: 6,
        eval_points: None,
    };
    emit_json(ctx.out.as_deref(), &json!({ "scheme": scheme, "report": rep }))?;
    Ok(ok)
}
