use serde::Serialize;

use rsplab::bloch::{equator_demo, n3_impossibility_scan, ImpossibilityReport};
use rsplab::protocol::{run_rsp, ProbRule, RspTranscript};
use rsplab::qmath::seeded_rng;
use rsplab::rsp_eq::{
    completeness_rank, feasibility_scan, oblivious_bound_report, ObliviousBoundReport,
    ScanReport, StateSampler,
};

use crate::config::{resolve, Cli, Command, Common, OutputFormat, Resolved};
use crate::output::Emitter;
use crate::Failure;

const FIDELITY_TOL: f64 = 1e-9;

pub fn run(cli: Cli) -> Result<(), Failure> {
    let (name, common) = match cli.command {
        Command::DemoRsp(c) => ("demo-rsp", c),
        Command::Scan(c) => ("scan", c),
        Command::Bounds(c) => ("bounds", c),
        Command::BlochImpossibility(c) => ("bloch-impossibility", c),
        Command::EquatorDemo(c) => ("equator-demo", c),
    };
    let cfg = resolve(common)?;
    let mut out = Emitter::open(cfg.common.out.as_deref(), cfg.common.output)?;
    let result = match name {
        "demo-rsp" => demo_rsp(&cfg, &mut out),
        "scan" => scan(&cfg, &mut out),
        "bounds" => bounds(&cfg, &mut out),
        "bloch-impossibility" => bloch_impossibility(&cfg, &mut out),
        _ => equator(&cfg, &mut out),
    };
    // flush whatever was written even when a property failed
    out.finish()?;
    result
}

fn require_qubit(cfg: &Resolved, what: &str) -> Result<(), Failure> {
    if cfg.d() != 2 {
        return Err(Failure::Config(format!("{what} requires d = 2, got {}", cfg.d())));
    }
    Ok(())
}

#[derive(Serialize)]
struct TranscriptRecord<'a> {
    sample: u64,
    #[serde(flatten)]
    transcript: &'a RspTranscript,
}

#[derive(Serialize)]
struct ErrorRecord {
    sample: u64,
    error: String,
}

#[derive(Serialize)]
struct DemoSummary {
    subcommand: &'static str,
    family: String,
    d: usize,
    n: usize,
    samples: u64,
    seed: u64,
    failures: usize,
    min_fidelity: f64,
    classical_cost: f64,
    passed: bool,
}

const TRANSCRIPT_COLUMNS: [&str; 6] = [
    "sample",
    "outcome",
    "outcome_probability",
    "fidelity",
    "classical_cost",
    "error",
];

fn transcript_row(i: u64, t: &RspTranscript) -> Vec<String> {
    vec![
        i.to_string(),
        t.outcome.to_string(),
        t.outcome_probability.to_string(),
        t.fidelity.to_string(),
        t.classical_cost.to_string(),
        String::new(),
    ]
}

fn demo_rsp(cfg: &Resolved, out: &mut Emitter) -> Result<(), Failure> {
    let c = &cfg.common;
    if out.format == OutputFormat::Csv {
        out.csv_row(&TRANSCRIPT_COLUMNS)?;
    }
    let mut failures = 0;
    let mut min_fidelity = f64::INFINITY;
    for i in 0..c.samples {
        let mut rng = seeded_rng(c.seed, i);
        let phi = cfg
            .sampler
            .sample(cfg.d(), &mut rng)
            .map_err(|e| Failure::Config(e.to_string()))?;
        match run_rsp(&phi, &cfg.family, &mut rng) {
            Ok(t) => {
                min_fidelity = min_fidelity.min(t.fidelity);
                if t.fidelity < 1.0 - FIDELITY_TOL {
                    failures += 1;
                }
                match out.format {
                    OutputFormat::Json => out.json(&TranscriptRecord {
                        sample: i,
                        transcript: &t,
                    })?,
                    OutputFormat::Csv => out.csv_row(&transcript_row(i, &t))?,
                }
            }
            Err(e) => {
                failures += 1;
                match out.format {
                    OutputFormat::Json => out.json(&ErrorRecord {
                        sample: i,
                        error: e.to_string(),
                    })?,
                    OutputFormat::Csv => {
                        let mut row = vec![i.to_string()];
                        row.extend(std::iter::repeat_n(String::new(), 4));
                        row.push(e.to_string());
                        out.csv_row(&row)?
                    }
                }
            }
        }
    }
    let summary = DemoSummary {
        subcommand: "demo-rsp",
        family: c.family.label(),
        d: cfg.d(),
        n: cfg.family.n(),
        samples: c.samples,
        seed: c.seed,
        failures,
        min_fidelity,
        classical_cost: cfg.family.classical_cost(),
        passed: failures == 0,
    };
    if out.format == OutputFormat::Json {
        out.json(&serde_json::json!({ "summary": summary }))?;
    }
    if failures > 0 {
        return Err(Failure::Property(format!(
            "{failures} of {} samples failed or fell below fidelity 1 - {FIDELITY_TOL:e}",
            c.samples
        )));
    }
    Ok(())
}

fn scan_row(r: &ScanReport) -> Vec<String> {
    vec![
        r.n.to_string(),
        r.d.to_string(),
        r.count.to_string(),
        r.feasible_fraction.to_string(),
        r.max_residual.to_string(),
        r.min_residual.to_string(),
        r.seed.to_string(),
    ]
}

const SCAN_COLUMNS: [&str; 7] = [
    "n",
    "d",
    "count",
    "feasible_fraction",
    "max_residual",
    "min_residual",
    "seed",
];

fn run_scan(cfg: &Resolved, sampler: StateSampler) -> Result<ScanReport, Failure> {
    let c = &cfg.common;
    feasibility_scan(
        cfg.family.unitaries(),
        sampler,
        c.samples as usize,
        c.tol,
        c.seed,
    )
    .map_err(|e| Failure::Config(e.to_string()))
}

fn scan(cfg: &Resolved, out: &mut Emitter) -> Result<(), Failure> {
    let report = run_scan(cfg, cfg.sampler)?;
    match out.format {
        OutputFormat::Json => out.json(&report),
        OutputFormat::Csv => {
            out.csv_row(&SCAN_COLUMNS)?;
            out.csv_row(&scan_row(&report))
        }
    }
}

#[derive(Serialize)]
struct BoundsReport {
    family: String,
    d: usize,
    n: usize,
    probabilities: Vec<f64>,
    /// Set when the family's rule depends on the state and uniform `p`
    /// was substituted for the oblivious analysis.
    probabilities_substituted: bool,
    oblivious: ObliviousBoundReport,
    completeness_rank: usize,
    holevo_bound_satisfied: bool,
    statements: Vec<String>,
    family_scan: Option<ScanReport>,
    n3_check: Option<ImpossibilityReport>,
}

fn bounds(cfg: &Resolved, out: &mut Emitter) -> Result<(), Failure> {
    let c = &cfg.common;
    let (d, n) = (cfg.d(), cfg.family.n());
    let uniform = vec![1.0 / n as f64; n];
    let (p, substituted) = match cfg.family.prob_rule() {
        ProbRule::Uniform => (uniform, false),
        ProbRule::Fixed(p) => (p.clone(), false),
        ProbRule::StateDependent { .. } => (uniform, true),
    };
    let config = |e: rsplab::Error| Failure::Config(e.to_string());
    let oblivious = oblivious_bound_report(cfg.family.unitaries(), &p).map_err(config)?;

    let phi = StateSampler::Haar
        .sample(d, &mut seeded_rng(c.seed, 0))
        .map_err(config)?;
    let rank = completeness_rank(cfg.family.unitaries(), &phi).map_err(config)?;

    let mut statements = Vec::new();
    if oblivious.is_identity {
        statements.push("X†X = I".to_string());
        if n == d * d {
            statements.push(format!("n = d² = {n}"));
        }
        if oblivious.uniform_probabilities == Some(true) {
            statements.push(format!("p_m = 1/{n}"));
        }
        statements.push(format!(
            "classical cost 2·log₂{d} ≈ {:.4} bits",
            2.0 * (d as f64).log2()
        ));
    } else {
        statements.push("X†X ≠ I".to_string());
        statements.push(format!(
            "oblivious protocol needs n ≥ d² = {}; family has n = {n}",
            d * d
        ));
    }
    statements.push(format!("completeness rank {rank} (Holevo bound needs ≥ {d})"));

    let family_scan = if n < d * d {
        Some(run_scan(cfg, StateSampler::Haar)?)
    } else {
        None
    };
    let n3_check = if d == 2 {
        Some(n3_impossibility_scan(c.samples as usize, c.seed, c.tol).map_err(config)?)
    } else {
        None
    };
    if let Some(r) = &n3_check {
        statements.push(format!(
            "n = 3 determinant 4χxχyχz verified on {} samples, {} infeasible",
            r.count, r.infeasible
        ));
    }
    let passed = n3_check.as_ref().is_none_or(|r| r.passed);

    let report = BoundsReport {
        family: c.family.label(),
        d,
        n,
        probabilities: p,
        probabilities_substituted: substituted,
        completeness_rank: rank,
        holevo_bound_satisfied: rank >= d,
        statements,
        family_scan,
        n3_check,
        oblivious,
    };
    match out.format {
        OutputFormat::Json => out.json(&report)?,
        OutputFormat::Csv => {
            out.csv_row(&["field", "value"])?;
            let o = &report.oblivious;
            let mut rows: Vec<(&str, String)> = vec![
                ("family", report.family.clone()),
                ("d", d.to_string()),
                ("n", n.to_string()),
                ("is_identity", o.is_identity.to_string()),
                ("gram_defect", o.gram_defect.to_string()),
                ("bound_satisfied", o.bound_satisfied.to_string()),
                ("classical_cost_bits", o.classical_cost_bits.to_string()),
                ("completeness_rank", rank.to_string()),
            ];
            if let Some(s) = &report.family_scan {
                rows.push(("family_scan_feasible_fraction", s.feasible_fraction.to_string()));
            }
            if let Some(r) = &report.n3_check {
                rows.push(("n3_infeasible", r.infeasible.to_string()));
                rows.push(("n3_max_det_error", r.max_det_error.to_string()));
            }
            for s in &report.statements {
                rows.push(("statement", s.clone()));
            }
            for (k, v) in rows {
                out.csv_row(&[k, v.as_str()])?;
            }
        }
    }
    if !passed {
        return Err(Failure::Property("n = 3 determinant check failed".into()));
    }
    Ok(())
}

fn bloch_impossibility(cfg: &Resolved, out: &mut Emitter) -> Result<(), Failure> {
    require_qubit(cfg, "bloch-impossibility")?;
    let c = &cfg.common;
    let r = n3_impossibility_scan(c.samples as usize, c.seed, c.tol)
        .map_err(|e| Failure::Config(e.to_string()))?;
    match out.format {
        OutputFormat::Json => out.json(&r)?,
        OutputFormat::Csv => {
            out.csv_row(&[
                "count",
                "seed",
                "tube",
                "infeasible",
                "min_residual",
                "max_det_error",
                "worst_chi_x",
                "worst_chi_y",
                "worst_chi_z",
                "passed",
            ])?;
            out.csv_row(&[
                r.count.to_string(),
                r.seed.to_string(),
                r.tube.to_string(),
                r.infeasible.to_string(),
                r.min_residual.to_string(),
                r.max_det_error.to_string(),
                r.worst_chi.x().to_string(),
                r.worst_chi.y().to_string(),
                r.worst_chi.z().to_string(),
                r.passed.to_string(),
            ])?;
        }
    }
    if !r.passed {
        return Err(Failure::Property(format!(
            "{} of {} samples infeasible, min residual {:e}",
            r.infeasible, r.count, r.min_residual
        )));
    }
    Ok(())
}

fn equator(cfg: &Resolved, out: &mut Emitter) -> Result<(), Failure> {
    require_qubit(cfg, "equator-demo")?;
    let c: &Common = &cfg.common;
    let sampler = c.sampler.map_or(StateSampler::Equatorial, Into::into);
    let (report, transcripts) = equator_demo(c.samples as usize, c.seed, sampler)
        .map_err(|e| Failure::Property(e.to_string()))?;
    match out.format {
        OutputFormat::Json => {
            for (i, t) in transcripts.iter().enumerate() {
                out.json(&TranscriptRecord {
                    sample: i as u64,
                    transcript: t,
                })?;
            }
            out.json(&serde_json::json!({ "summary": report }))?;
        }
        OutputFormat::Csv => {
            out.csv_row(&TRANSCRIPT_COLUMNS)?;
            for (i, t) in transcripts.iter().enumerate() {
                out.csv_row(&transcript_row(i as u64, t))?;
            }
        }
    }
    if !report.passed {
        return Err(Failure::Property(format!(
            "max fidelity defect {:e}, {} of {} off-equator states rejected",
            report.max_fidelity_defect, report.off_equator_rejected, report.off_equator_trials
        )));
    }
    Ok(())
}
