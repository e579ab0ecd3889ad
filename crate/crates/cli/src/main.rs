//! Batch front-end: ingest crystal / type / group-data JSON, run analyses,
//! and emit JSON reports or ASCII/SVG polygon renderings.
//!
//! Exit codes: 0 success, 2 malformed input, 3 precision insufficient after
//! the auto-raise cap, 4 verification failure. Output is byte-identical for
//! identical (input, seed, precision).

mod render;

use clap::{Parser, Subcommand, ValueEnum};
use fcrystal_core::codec;
use fcrystal_core::crystal::{build_mu_ordinary, mu_ordinary_polygon, ObCrystal, TypeDF};
use fcrystal_core::deformation::{
    build_g_univ, canonical_first_break, check_f_stability, check_structural_criterion, SeriesRing,
};
use fcrystal_core::error::Error as CoreError;
use fcrystal_core::hodge_newton::{breakpoints, hn_decompose};
use fcrystal_core::kottwitz::theorem_hypotheses;
use fcrystal_core::polygon::{rat_int, LatticePoint, Polygon};
use fcrystal_core::witt::WittRing;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

/// Hard ceiling for automatic precision raising.
const AUTO_RAISE_CAP: u32 = 1024;

#[derive(Parser)]
#[command(
    name = "fcrystal",
    version,
    about = "Exact Newton/Hodge polygon calculus for graded F-crystals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Working-precision override; rejected when below the policy minimum.
    #[arg(long, global = true)]
    precision: Option<u32>,

    /// Seed recorded in the report (analyses themselves are deterministic).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Recompute the reduced Newton polygon on every block and assert they
    /// agree (slow path, cross-validation).
    #[arg(long, global = true)]
    debug_all_blocks: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Ascii,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// All polygons, the type when minuscule, breakpoints and eligibility.
    Analyze { input: PathBuf },
    /// Hodge-Newton decomposition at the breakpoint with abscissa x1.
    Hn {
        input: PathBuf,
        /// Abscissa on the full (height h) Newton polygon.
        #[arg(long)]
        x1: u64,
    },
    /// Build the extremal module of a minuscule type and verify it.
    MuOrdinary {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        r: usize,
        /// Comma-separated type function values, one per block.
        #[arg(long, value_delimiter = ',')]
        f: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        p: u64,
    },
    /// Slope-vector hypotheses for group data.
    Kottwitz { input: PathBuf },
    /// Deformation stability of a type at a filtration cut.
    Deform {
        input: PathBuf,
        /// Cut rank; defaults to the type's canonical first break.
        #[arg(long)]
        dprime: Option<usize>,
    },
    /// Dual polygon and breakpoint pairing for a self-dual polygon.
    Dualize {
        input: PathBuf,
        /// Half the height of the polygon.
        #[arg(long)]
        n: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &CoreError) -> u8 {
    match e {
        CoreError::PrecisionInsufficient { .. } => 3,
        CoreError::Verification(_) | CoreError::NonStabilizing(_) => 4,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<String, CoreError> {
    let report = match &cli.command {
        Command::Analyze { input } => cmd_analyze(cli, input)?,
        Command::Hn { input, x1 } => cmd_hn(cli, input, *x1)?,
        Command::MuOrdinary { d, r, f, p } => cmd_mu_ordinary(cli, *d, *r, f, *p)?,
        Command::Kottwitz { input } => cmd_kottwitz(cli, input)?,
        Command::Deform { input, dprime } => cmd_deform(cli, input, *dprime)?,
        Command::Dualize { input, n } => cmd_dualize(cli, input, *n)?,
    };
    Ok(match cli.format {
        Format::Json => serde_json::to_string_pretty(&report.json).expect("serializable report"),
        Format::Ascii => report.ascii,
        Format::Svg => report.svg,
    })
}

/// One report in all three renderings.
struct Report {
    json: Value,
    ascii: String,
    svg: String,
}

fn read_json(path: &PathBuf) -> Result<Value, CoreError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CoreError::parse(format!("invalid JSON: {e}")))
}

/// Precision bookkeeping shared by the crystal-consuming commands: the
/// policy minimum is computed (raising precision as needed just to compute
/// it), an override below the minimum is rejected with the minimum in the
/// message, and the analysis itself reruns at doubled precision whenever it
/// reports a retryable shortfall, up to the cap.
fn with_precision<T>(
    c: &ObCrystal,
    override_prec: Option<u32>,
    policy_name: &str,
    policy: impl Fn(&ObCrystal) -> Result<u32, CoreError>,
    f: impl Fn(&ObCrystal) -> Result<T, CoreError>,
) -> Result<(T, Value), CoreError> {
    let input_prec = c.ring().precision();
    let mut probe = input_prec;
    let policy_min = loop {
        match policy(&c.lift_to_at_least(probe)?) {
            Ok(p) => break p,
            Err(e) if e.is_precision() && probe < AUTO_RAISE_CAP => {
                probe = (probe * 2).min(AUTO_RAISE_CAP);
            }
            Err(e) => return Err(e),
        }
    };
    let mut work = match override_prec {
        Some(o) => {
            if o < policy_min {
                return Err(CoreError::parse(format!(
                    "precision override {o} is below the policy minimum {policy_min}"
                )));
            }
            o
        }
        None => input_prec.max(policy_min),
    };
    loop {
        let lifted = c.lift_to_at_least(work)?;
        match f(&lifted) {
            Ok(value) => {
                let meta = json!({
                    "input": input_prec,
                    "effective": work.max(input_prec),
                    "policy_minimum": policy_min,
                    "policy": policy_name,
                });
                return Ok((value, meta));
            }
            Err(e) if e.is_precision() && work < AUTO_RAISE_CAP => {
                work = (work * 2).min(AUTO_RAISE_CAP);
            }
            Err(e) => return Err(e),
        }
    }
}

fn seed_value(cli: &Cli) -> Value {
    match cli.seed {
        Some(s) => Value::from(s),
        None => Value::Null,
    }
}

struct AnalyzeData {
    nu: Polygon,
    nu_red: Polygon,
    hodge: Polygon,
    mubar: Polygon,
    mubar_red: Polygon,
    per_block: Vec<Polygon>,
    relative_positions: Vec<Polygon>,
    type_df: Option<TypeDF>,
    bps: Vec<fcrystal_core::BreakpointInfo>,
    all_blocks: Option<Vec<Polygon>>,
}

fn cmd_analyze(cli: &Cli, input: &PathBuf) -> Result<Report, CoreError> {
    let c = codec::crystal_from_json(&read_json(input)?)?;
    let debug_all = cli.debug_all_blocks;
    let (data, precision_meta) = with_precision(
        &c,
        cli.precision,
        "newton: t*hodge_total + n + 8",
        |c| c.newton_policy_min(),
        |c| {
            let nu = c.newton()?;
            let nu_red = c.newton_reduced()?;
            let all_blocks = if debug_all {
                let all = c.newton_reduced_all_blocks()?;
                for poly in &all {
                    if *poly != nu_red {
                        return Err(CoreError::Verification(
                            "block Newton polygons disagree".into(),
                        ));
                    }
                }
                Some(all)
            } else {
                None
            };
            Ok(AnalyzeData {
                nu,
                nu_red,
                hodge: c.hodge()?,
                mubar: c.sigma_hodge()?,
                mubar_red: c.sigma_hodge_reduced()?,
                per_block: c.per_block_hodge_of_phi()?,
                relative_positions: c.hodge_blocks()?,
                type_df: c.type_of().ok(),
                bps: breakpoints(c)?,
                all_blocks,
            })
        },
    )?;

    let mu_ordinary = data.nu == data.mubar;
    let mut json_report = json!({
        "command": "analyze",
        "crystal": {
            "p": c.ring().p(),
            "m": c.ring().degree(),
            "r": c.block_count(),
            "d": c.block_rank(),
            "a": c.twist(),
            "height": c.height(),
        },
        "precision": precision_meta,
        "seed": seed_value(cli),
        "polygons": {
            "newton": codec::polygon_to_json(&data.nu),
            "newton_reduced": codec::polygon_to_json(&data.nu_red),
            "hodge": codec::polygon_to_json(&data.hodge),
            "sigma_hodge": codec::polygon_to_json(&data.mubar),
            "sigma_hodge_reduced": codec::polygon_to_json(&data.mubar_red),
            "per_block_hodge": data.per_block.iter().map(codec::polygon_to_json).collect::<Vec<_>>(),
            "relative_positions": data.relative_positions.iter().map(codec::polygon_to_json).collect::<Vec<_>>(),
        },
        "minuscule": data.type_df.is_some(),
        "type": data.type_df.as_ref().map(|t| json!({"d": t.d, "r": t.r, "f": t.f})).unwrap_or(Value::Null),
        "mu_ordinary": mu_ordinary,
        "breakpoints": data.bps.iter().map(|b| json!({
            "x1": b.full.x1,
            "x2": codec::rational_to_json(&b.full.x2),
            "reduced_x1": b.reduced.x1,
            "eligible": b.eligible,
        })).collect::<Vec<_>>(),
    });
    if let Some(all) = &data.all_blocks {
        json_report.as_object_mut().unwrap().insert(
            "debug_all_blocks".into(),
            Value::Array(all.iter().map(codec::polygon_to_json).collect()),
        );
    }

    let mut ascii = vec![
        render::polygon_ascii("newton      ", &data.nu),
        render::polygon_ascii("sigma_hodge ", &data.mubar),
        render::polygon_ascii("hodge       ", &data.hodge),
        format!("mu-ordinary: {mu_ordinary}"),
    ];
    for b in &data.bps {
        ascii.push(format!(
            "breakpoint {} reduced x1={} eligible={}",
            b.full, b.reduced.x1, b.eligible
        ));
    }
    let svg = render::polygons_svg(&[("newton", &data.nu), ("sigma_hodge", &data.mubar)]);
    Ok(Report {
        json: json_report,
        ascii: ascii.join("\n"),
        svg,
    })
}

fn cmd_hn(cli: &Cli, input: &PathBuf, x1: u64) -> Result<Report, CoreError> {
    let c = codec::crystal_from_json(&read_json(input)?)?;
    let ((dec, x), precision_meta) = with_precision(
        &c,
        cli.precision,
        "decomposition: max(newton policy, 2*hodge_total + 16)",
        |c| c.decomposition_policy_min(),
        |c| {
            let nu = c.newton()?;
            let x2 = nu.value_at_int(x1)?;
            let x = LatticePoint::new(x1, x2);
            Ok((hn_decompose(c, &x)?, x))
        },
    )?;
    let mut json_report = codec::decomposition_to_json(&dec)?;
    let obj = json_report.as_object_mut().unwrap();
    obj.insert("command".into(), Value::from("hn"));
    obj.insert("precision".into(), precision_meta);
    obj.insert("seed".into(), seed_value(cli));

    let nu1 = dec.c1.newton()?;
    let nu2 = dec.c2.newton()?;
    let ascii = vec![
        format!("decomposition at {x}: all checks pass"),
        render::polygon_ascii("low  newton ", &nu1),
        render::polygon_ascii("high newton ", &nu2),
        dec.report.to_string(),
    ]
    .join("\n");
    let svg = render::polygons_svg(&[("low", &nu1), ("high", &nu2)]);
    Ok(Report {
        json: json_report,
        ascii,
        svg,
    })
}

fn cmd_mu_ordinary(
    cli: &Cli,
    d: usize,
    r: usize,
    f: &[usize],
    p: u64,
) -> Result<Report, CoreError> {
    let t = TypeDF::new(d, r, f.to_vec())?;
    let formula = mu_ordinary_polygon(&t);
    // policy-sufficient precision for the diagonal model: the composite has
    // divisor total = sum of entries, linearization is trivial at m = r
    let total: u64 = formula.total().to_integer().try_into().unwrap_or(0);
    let precision = (total as u32 + d as u32 + 16).max(16);
    let base = match cli.precision {
        Some(o) => {
            if o < precision {
                return Err(CoreError::parse(format!(
                    "precision override {o} is below the policy minimum {precision}"
                )));
            }
            o
        }
        None => precision,
    };
    let ring = WittRing::with_default_poly(p, r, base)?;
    let c = build_mu_ordinary(ring, &t, 1)?;
    let mubar_red = c.sigma_hodge_reduced()?;
    let nu = c.newton()?;
    let mubar = c.sigma_hodge()?;
    let verified = formula == mubar_red && nu == mubar;
    if !verified {
        return Err(CoreError::Verification(
            "built module does not match the closed form".into(),
        ));
    }
    let bp_count = mubar.breakpoint_count_bounded(&rat_int(0), &rat_int(1));
    let json_report = json!({
        "command": "mu_ordinary",
        "precision": { "effective": base, "policy_minimum": precision, "policy": "hodge_total + d + 16" },
        "seed": seed_value(cli),
        "type": {"d": d, "r": r, "f": f},
        "crystal": codec::crystal_to_json(&c),
        "sigma_hodge_reduced": codec::polygon_to_json(&mubar_red),
        "newton": codec::polygon_to_json(&nu),
        "mu_ordinary_verified": verified,
        "breakpoint_count": bp_count,
        "distinct_f_values": t.distinct_f_values(),
    });
    let ascii = vec![
        format!("type d={d} r={r} f={f:?}"),
        render::polygon_ascii("sigma_hodge_reduced", &mubar_red),
        render::polygon_ascii("newton             ", &nu),
        format!("mu-ordinary verified: {verified}, breakpoints: {bp_count}"),
    ]
    .join("\n");
    let svg = render::polygons_svg(&[("newton", &nu), ("sigma_hodge", &mubar)]);
    Ok(Report {
        json: json_report,
        ascii,
        svg,
    })
}

fn cmd_kottwitz(cli: &Cli, input: &PathBuf) -> Result<Report, CoreError> {
    let g = codec::group_data_from_json(&read_json(input)?)?;
    let verdict = theorem_hypotheses(&g)?;
    let json_report = json!({
        "command": "kottwitz",
        "seed": seed_value(cli),
        "data": codec::group_data_to_json(&g),
        "non_minuscule": g.non_minuscule,
        "verdict": {
            "dominance_in_levi": verdict.dominance_in_levi,
            "kappa_match": verdict.kappa_match,
            "strict_separation": verdict.strict_separation,
            "all": verdict.all(),
        },
    });
    let ascii = format!(
        "dominance_in_levi={} kappa_match={} strict_separation={} all={}",
        verdict.dominance_in_levi,
        verdict.kappa_match,
        verdict.strict_separation,
        verdict.all()
    );
    let nu_p = Polygon::from_slopes(&g.nu)?;
    let mu_p = Polygon::from_slopes(&g.mu)?;
    let svg = render::polygons_svg(&[("newton", &nu_p), ("hodge", &mu_p)]);
    Ok(Report {
        json: json_report,
        ascii,
        svg,
    })
}

fn cmd_deform(cli: &Cli, input: &PathBuf, dprime: Option<usize>) -> Result<Report, CoreError> {
    let job = codec::deform_job_from_json(&read_json(input)?)?;
    let t = &job.type_df;
    let ring = match &job.defining_poly {
        Some(poly) => WittRing::new(job.p, job.m, job.precision, poly.clone())?,
        None => WittRing::with_default_poly(job.p, job.m, job.precision)?,
    };
    let series = SeriesRing::for_type(ring, t, job.max_degree)?;
    let u = build_g_univ(t, series)?;
    let canonical = canonical_first_break(t);
    let cuts: Vec<usize> = match dprime {
        Some(k) => vec![k],
        None => canonical.into_iter().collect(),
    };
    if cuts.is_empty() {
        return Err(CoreError::domain(
            "type has no nontrivial filtration cut (f is constantly d); pass --dprime",
        ));
    }
    let mut checks = Vec::new();
    let mut ascii = vec![format!(
        "type d={} r={} f={:?} K={} (canonical cut: {:?})",
        t.d, t.r, t.f, job.max_degree, canonical
    )];
    for cut in cuts {
        let structural = check_structural_criterion(t, cut);
        let verdict = check_f_stability(&u, cut)?;
        let witness = verdict.witness.as_ref().map(|(block, row, col, term)| {
            json!({"block": block, "row": row, "col": col, "term": term})
        });
        ascii.push(format!(
            "cut d'={cut}: structural={structural} f_stability={}{}",
            verdict.stable,
            verdict
                .witness
                .as_ref()
                .map(|(b, r, c, term)| format!("  witness: block {b} entry ({r},{c}) = {term}"))
                .unwrap_or_default()
        ));
        checks.push(json!({
            "dprime": cut,
            "structural_criterion": structural,
            "f_stability": verdict.stable,
            "witness": witness.unwrap_or(Value::Null),
        }));
    }
    let json_report = json!({
        "command": "deform",
        "seed": seed_value(cli),
        "type": {"d": t.d, "r": t.r, "f": t.f},
        "K": job.max_degree,
        "canonical_dprime": canonical.map(Value::from).unwrap_or(Value::Null),
        "checks": checks,
    });
    let formula = mu_ordinary_polygon(t);
    let svg = render::polygons_svg(&[("sigma_hodge_reduced", &formula)]);
    Ok(Report {
        json: json_report,
        ascii: ascii.join("\n"),
        svg,
    })
}

fn cmd_dualize(cli: &Cli, input: &PathBuf, n: u64) -> Result<Report, CoreError> {
    let p = codec::polygon_from_json(&read_json(input)?)?;
    let dual = p.dual()?;
    let mut pairings = Vec::new();
    let mut ascii = vec![
        render::polygon_ascii("polygon", &p),
        render::polygon_ascii("dual   ", &dual),
    ];
    if p.height() == 2 * n && p.is_self_dual() {
        for bp in p.breakpoints() {
            let (paired, ok) = fcrystal_core::polarized_dual_check(&p, &bp, n)?;
            ascii.push(format!("breakpoint {bp} pairs with {paired} (breakpoint: {ok})"));
            pairings.push(json!({
                "x1": bp.x1,
                "x2": codec::rational_to_json(&bp.x2),
                "paired_x1": paired.x1,
                "paired_x2": codec::rational_to_json(&paired.x2),
                "paired_is_breakpoint": ok,
            }));
        }
    }
    let json_report = json!({
        "command": "dualize",
        "seed": seed_value(cli),
        "n": n,
        "self_dual": p.is_self_dual() && p.height() == 2 * n,
        "polygon": codec::polygon_to_json(&p),
        "dual": codec::polygon_to_json(&dual),
        "breakpoint_pairings": pairings,
    });
    let svg = render::polygons_svg(&[("polygon", &p), ("dual", &dual)]);
    Ok(Report {
        json: json_report,
        ascii: ascii.join("\n"),
        svg,
    })
}
