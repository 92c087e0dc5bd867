use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use redmoment::certification::{
    self, achieved_delta, certify, covariance_report, covariance_report_from_moments, CertificationPlan,
    CertificationResult, CovarianceReport,
};
use redmoment::invariants::INVARIANT_NAMES;
use redmoment::moment::{
    homogeneous_block, isotropic_threshold_3rd, mes_lambda_min, ppt_threshold, purity_threshold, threshold_scan,
    ScanVariant, WitnessValue,
};
use redmoment::protocol::{run_protocol, run_protocol_summary, ProtocolConfig};
use redmoment::{build_mbar, compute_invariants, get_maps, make_state, witness as exact_witness, FamilyParams, InversionMaps};

use crate::manifest::{config_hash, sidecar, RunManifest};
use crate::ranges::{parse_f64_range, parse_usize_range};
use crate::{BenchmarkArgs, CliError, CliResult, Context, Outcome, PlanArgs, SimulateArgs, Suite, WitnessArgs};

/// `λ_min(M̄)` of the two-qubit maximally entangled state, `(11 - √265)/16`.
pub const MES2_E4: f64 = -0.329_926_287_256_232;
/// Third-order isotropic threshold at `d = 3` to four decimals.
pub const ISO3_THRESHOLD: f64 = 0.4606;
/// Affine threshold of the biased two-qubit family, independent of `x`.
pub const BIASED_P_AFF: f64 = 0.5;
/// Homogeneous-block threshold of the biased family at `x = 1/2`.
pub const BIASED_P_HOM_HALF: f64 = 0.608;

/// Maps are built automatically by `witness` up to this local dimension.
const WITNESS_MAPS_MAX_DIM: usize = 4;
/// Numeric MES witness is evaluated up to this `d`; beyond it only the closed form.
const MES_NUMERIC_MAX_D: usize = 24;
/// Isotropic thresholds are scanned numerically up to this `d`.
const ISO_SCAN_MAX_D: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct GoldenCheck {
    pub check: String,
    pub expected: f64,
    pub got: f64,
    pub tol: f64,
    pub pass: bool,
}

impl GoldenCheck {
    fn new(check: impl Into<String>, expected: f64, got: f64, tol: f64) -> Self {
        Self { check: check.into(), expected, got, tol, pass: (expected - got).abs() <= tol }
    }

    fn sign(check: impl Into<String>, expected_negative: bool, got: f64) -> Self {
        let pass = (got < 0.0) == expected_negative;
        Self { check: check.into(), expected: if expected_negative { -1.0 } else { 1.0 }, got, tol: 0.0, pass }
    }
}

fn golden_for_state(params: &FamilyParams, w: &WitnessValue) -> Vec<GoldenCheck> {
    let mut checks = Vec::new();
    match *params {
        FamilyParams::MaxEntangled { d } => {
            checks.push(GoldenCheck::new(format!("mes_closed_form_d{d}"), mes_lambda_min(d), w.e4, 1e-9));
            if d == 2 {
                checks.push(GoldenCheck::new("mes_d2_value", MES2_E4, w.e4, 1e-9));
            }
        }
        FamilyParams::Isotropic { d, p } => {
            let t = isotropic_threshold_3rd(d);
            if (p - t).abs() > 1e-9 {
                checks.push(GoldenCheck::sign(format!("isotropic_sign_vs_threshold_{t:.6}"), p > t, w.e4));
            }
        }
        FamilyParams::BiasedTwoQubit { p, .. } => {
            if (p - BIASED_P_AFF).abs() > 1e-9 {
                checks.push(GoldenCheck::sign("biased_sign_vs_affine_threshold", p > BIASED_P_AFF, w.e4));
            }
        }
        FamilyParams::MaximallyMixed { .. } => checks.push(GoldenCheck::new("maximally_mixed_zero", 0.0, w.e4, 1e-12)),
        FamilyParams::ProductPure { .. } => {
            let ok = w.e4 >= -1e-12;
            checks.push(GoldenCheck { check: "product_nonnegative".into(), expected: 0.0, got: w.e4, tol: 1e-12, pass: ok });
        }
        FamilyParams::Custom(_) => {}
    }
    checks
}

fn maps_for(d_a: usize, d_b: usize, ctx: &Context) -> CliResult<Arc<InversionMaps>> {
    Ok(get_maps(d_a, d_b, ctx.cache_dir.as_deref(), ctx.exec)?)
}

fn write_json_with_manifest(path: &PathBuf, mut value: Value, manifest: RunManifest) -> CliResult<()> {
    value["manifest"] = json!(manifest.hash);
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(&value)? + "\n")?;
    let mut manifest = manifest;
    manifest.record(path);
    manifest.finish(&sidecar(path))?;
    Ok(())
}

pub fn witness(args: &WitnessArgs, ctx: &Context) -> CliResult<Outcome> {
    let (params, rho) = args.source.resolve()?;
    let (d_a, d_b) = rho.dims();
    let x = compute_invariants(&rho);
    let mbar = build_mbar(&x, d_b)?;
    let hom = homogeneous_block(&mbar)?.lambda_min();
    let maps = if d_a.max(d_b) <= WITNESS_MAPS_MAX_DIM { Some(maps_for(d_a, d_b, ctx)?) } else { None };
    let w = exact_witness(&rho, maps.as_deref());
    let golden = golden_for_state(&params, &w);
    let golden_ok = golden.iter().all(|g| g.pass);

    let invariants: serde_json::Map<String, Value> = INVARIANT_NAMES
        .iter()
        .zip(x.to_array())
        .map(|(n, v)| (n.to_string(), json!(v)))
        .collect();
    let value = json!({
        "source": args.source.describe(),
        "d_a": d_a,
        "d_b": d_b,
        "invariants": invariants,
        "tr_rho3": x.tr_rho3,
        "mbar": mbar.rows(),
        "e4": w.e4,
        "e4_tilde": w.e4_tilde,
        "op_norm": maps.as_ref().map(|m| m.op_norm),
        "homogeneous_lambda_min": hom,
        "verdict": w.verdict,
        "golden": golden,
        "golden_ok": golden_ok,
    });

    let mut text = String::new();
    let _ = writeln!(text, "state      {} ({d_a}x{d_b})", args.source.describe());
    for (n, v) in INVARIANT_NAMES.iter().zip(x.to_array()) {
        let _ = writeln!(text, "{n:<10} {v:.12}");
    }
    let _ = writeln!(text, "M̄:");
    for row in mbar.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>14.9}")).collect();
        let _ = writeln!(text, "  {}", cells.join(" "));
    }
    let _ = writeln!(text, "e4         {:.12}", w.e4);
    if let (Some(t), Some(m)) = (w.e4_tilde, &maps) {
        let _ = writeln!(text, "e4_tilde   {t:.12}  (op_norm {:.9})", m.op_norm);
    }
    let _ = writeln!(text, "hom_lmin   {hom:.12}");
    let _ = writeln!(text, "verdict    {:?}", w.verdict);
    for g in &golden {
        let _ = writeln!(text, "golden     {} {}", g.check, if g.pass { "ok" } else { "FAILED" });
    }

    if let Some(path) = &args.out {
        let manifest = RunManifest::start("witness", json!({ "source": args.source.describe() }), ctx.seed);
        write_json_with_manifest(path, value.clone(), manifest)?;
    }
    Ok(Outcome { text, json: value, golden_ok })
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    golden: Vec<GoldenCheck>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn mes_table(ds: &[usize]) -> CliResult<Table> {
    let mut t = Table { header: vec!["d", "e4_closed_form", "e4_numeric", "abs_diff"], rows: vec![], golden: vec![] };
    for &d in ds {
        if d < 2 {
            return Err(CliError::Input(format!("d={d} must be at least 2")));
        }
        let closed = mes_lambda_min(d);
        let numeric = if d <= MES_NUMERIC_MAX_D {
            Some(exact_witness(&make_state(&FamilyParams::MaxEntangled { d })?, None).e4)
        } else {
            None
        };
        if let Some(n) = numeric {
            t.golden.push(GoldenCheck::new(format!("mes_d{d}"), closed, n, 1e-10));
        }
        if d == 2 {
            t.golden.push(GoldenCheck::new("mes_d2_value", MES2_E4, closed, 1e-12));
        }
        let diff = numeric.map(|n| (n - closed).abs());
        t.rows.push(vec![d.to_string(), format!("{closed:?}"), fmt_opt(numeric), fmt_opt(diff)]);
    }
    Ok(t)
}

fn isotropic_table(ds: &[usize]) -> CliResult<Table> {
    let mut t = Table {
        header: vec!["d", "p_ppt", "p_purity", "p_third_order", "p_third_order_scan", "abs_diff"],
        rows: vec![],
        golden: vec![],
    };
    for &d in ds {
        if d < 2 {
            return Err(CliError::Input(format!("d={d} must be at least 2")));
        }
        let closed = isotropic_threshold_3rd(d);
        let (ppt, pur) = (ppt_threshold(d), purity_threshold(d));
        let scan = if d <= ISO_SCAN_MAX_D {
            Some(threshold_scan(&FamilyParams::Isotropic { d, p: 0.0 }, ScanVariant::Affine4)?)
        } else {
            None
        };
        if let Some(s) = scan {
            t.golden.push(GoldenCheck::new(format!("isotropic_scan_d{d}"), closed, s, 1e-8));
            if d == 3 {
                t.golden.push(GoldenCheck::new("isotropic_d3_value", ISO3_THRESHOLD, s, 1e-4));
            }
        }
        let ordered = ppt < closed && closed < pur;
        t.golden.push(GoldenCheck {
            check: format!("isotropic_ordering_d{d}"),
            expected: 1.0,
            got: if ordered { 1.0 } else { 0.0 },
            tol: 0.0,
            pass: ordered,
        });
        let diff = scan.map(|s| (s - closed).abs());
        t.rows.push(vec![
            d.to_string(),
            format!("{ppt:?}"),
            format!("{pur:?}"),
            format!("{closed:?}"),
            fmt_opt(scan),
            fmt_opt(diff),
        ]);
    }
    Ok(t)
}

fn biased_table(xs: &[f64]) -> CliResult<Table> {
    let mut t = Table { header: vec!["x", "p_aff", "p_hom"], rows: vec![], golden: vec![] };
    for &x in xs {
        let fam = FamilyParams::BiasedTwoQubit { x, p: 0.0 };
        fam.validate()?;
        let aff = threshold_scan(&fam, ScanVariant::Affine4).ok();
        let hom = threshold_scan(&fam, ScanVariant::Homogeneous3).ok();
        if x > 0.0 && x < 1.0 {
            t.golden.push(GoldenCheck::new(format!("biased_aff_x{x}"), BIASED_P_AFF, aff.unwrap_or(f64::NAN), 1e-6));
        }
        if (x - 0.5).abs() < 1e-12 {
            t.golden.push(GoldenCheck::new("biased_hom_x0.5", BIASED_P_HOM_HALF, hom.unwrap_or(f64::NAN), 5e-3));
        }
        t.rows.push(vec![format!("{x:?}"), fmt_opt(aff), fmt_opt(hom)]);
    }
    Ok(t)
}

pub fn benchmark(args: &BenchmarkArgs, ctx: &Context) -> CliResult<Outcome> {
    let (suite, table) = match args.suite {
        Suite::Mes => ("mes", mes_table(&parse_usize_range(args.d.as_deref().unwrap_or("2..8"))?)?),
        Suite::Isotropic => ("isotropic", isotropic_table(&parse_usize_range(args.d.as_deref().unwrap_or("2..8"))?)?),
        Suite::Biased => ("biased", biased_table(&parse_f64_range(args.x.as_deref().unwrap_or("0.1..0.9"), 0.1)?)?),
    };
    let golden_ok = table.golden.iter().all(|g| g.pass);
    let config = json!({ "suite": suite, "d": args.d, "x": args.x });
    let hash = config_hash("benchmark", &config, ctx.seed);

    let mut csv = format!("# manifest={hash}\n{}\n", table.header.join(","));
    for row in &table.rows {
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    if let Some(path) = &args.out {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, &csv)?;
        let mut manifest = RunManifest::start("benchmark", config, ctx.seed);
        manifest.record(path);
        manifest.finish(&sidecar(path))?;
    }
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let obj: serde_json::Map<String, Value> = table
                .header
                .iter()
                .zip(r)
                .map(|(h, v)| (h.to_string(), v.parse::<f64>().map(|f| json!(f)).unwrap_or(Value::Null)))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let value = json!({ "suite": suite, "rows": rows, "golden": table.golden, "golden_ok": golden_ok, "manifest": hash });
    let mut text = if args.out.is_some() { String::new() } else { csv };
    for g in table.golden.iter().filter(|g| !g.pass) {
        let _ = writeln!(text, "# golden FAILED {}: expected {} got {} (tol {})", g.check, g.expected, g.got, g.tol);
    }
    Ok(Outcome { text, json: value, golden_ok })
}

/// Result of [`simulate`], kept structured for programmatic callers.
#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub outcome: Outcome,
    pub plan: CertificationPlan,
    pub certification: CertificationResult,
    pub exact_e4_tilde: f64,
    pub covariance: Option<CovarianceReport>,
    pub files: Vec<PathBuf>,
}

fn simulate_plan(args: &SimulateArgs) -> CliResult<CertificationPlan> {
    if !(args.epsilon > 0.0 && args.epsilon.is_finite()) {
        return Err(CliError::Input(format!("epsilon={} must be positive", args.epsilon)));
    }
    match (args.delta, args.nu, args.ns) {
        (Some(delta), None, None) => Ok(certification::plan(args.epsilon, delta)?),
        (None, Some(n_u), Some(n_s)) => {
            if n_s < 3 || n_u < 1 {
                return Err(CliError::Input("need --nu >= 1 and --ns >= 3".into()));
            }
            Ok(CertificationPlan {
                epsilon: args.epsilon,
                delta: achieved_delta(n_u, n_s, args.epsilon),
                n_tot: n_u * n_s as u64,
                n_u,
                n_s,
            })
        }
        _ => Err(CliError::Input("give either --delta or both --nu and --ns".into())),
    }
}

pub fn simulate(args: &SimulateArgs, ctx: &Context) -> CliResult<SimulateReport> {
    let plan = simulate_plan(args)?;
    let (_, rho) = args.source.resolve()?;
    let (d_a, d_b) = rho.dims();
    let maps = maps_for(d_a, d_b, ctx)?;
    let exact = exact_witness(&rho, Some(&maps));
    let exact_e4_tilde = exact.e4_tilde.expect("maps given");

    let cfg = ProtocolConfig { n_u: plan.n_u, n_s: plan.n_s, master_seed: ctx.seed, state: rho };
    let (global, covariance, records) = if args.out.is_some() {
        let run = run_protocol(&cfg, ctx.exec)?;
        let per: Vec<_> = run.records.iter().map(|r| r.y_hat).collect();
        let cov = covariance_report(&per, plan.n_s).ok();
        (run.global, cov, Some(run.records))
    } else {
        let s = run_protocol_summary(&cfg, ctx.exec)?;
        (s.global, covariance_report_from_moments(&s.moments, plan.n_s).ok(), None)
    };
    let cert = certify(&global, &maps, &plan)?;

    let note = if exact_e4_tilde >= 0.0 {
        Some("state is not detected by the exact witness; certification is not expected".to_string())
    } else if plan.epsilon >= exact_e4_tilde.abs() {
        let eps = 0.5 * exact_e4_tilde.abs();
        let suggestion = certification::plan(eps, plan.delta.clamp(1e-12, 1.0 - 1e-12)).ok();
        Some(format!(
            "epsilon {} is not below |e4_tilde| = {:.6}; use epsilon < {:.6} (e.g. {:.6} needs n_tot = {})",
            plan.epsilon,
            exact_e4_tilde.abs(),
            exact_e4_tilde.abs(),
            eps,
            suggestion.map(|p| p.n_tot.to_string()).unwrap_or_else(|| "?".into())
        ))
    } else {
        None
    };

    let config = json!({
        "source": args.source.describe(),
        "epsilon": args.epsilon,
        "delta": args.delta,
        "nu": args.nu,
        "ns": args.ns,
    });
    let hash = config_hash("simulate", &config, ctx.seed);
    let value = json!({
        "e4_tilde_hat": cert.e4_tilde_hat,
        "epsilon": cert.epsilon,
        "delta_requested": cert.delta_requested,
        "delta_achieved": cert.delta_achieved,
        "n_tot": cert.n_tot,
        "certified": cert.certified,
        "margin": cert.margin,
        "n_u": plan.n_u,
        "n_s": plan.n_s,
        "source": args.source.describe(),
        "d_a": d_a,
        "d_b": d_b,
        "master_seed": ctx.seed,
        "op_norm": maps.op_norm,
        "exact_e4": exact.e4,
        "exact_e4_tilde": exact_e4_tilde,
        "covariance": covariance,
        "note": note,
        "manifest": hash,
    });

    let mut files = Vec::new();
    if let (Some(dir), Some(records)) = (&args.out, &records) {
        std::fs::create_dir_all(dir)?;
        let mut manifest = RunManifest::start("simulate", config, ctx.seed);

        let rec_path = dir.join("records.jsonl");
        let mut w = BufWriter::new(File::create(&rec_path)?);
        writeln!(w, "{}", json!({ "manifest": hash, "n_u": plan.n_u, "n_s": plan.n_s, "master_seed": ctx.seed }))?;
        for r in records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        manifest.record(&rec_path);

        let report_path = dir.join("report.json");
        std::fs::write(&report_path, serde_json::to_string_pretty(&value)? + "\n")?;
        manifest.record(&report_path);
        files.push(rec_path);
        files.push(report_path);
        files.push(manifest.finish(&dir.join("manifest.json"))?);
    }

    let mut text = String::new();
    let _ = writeln!(text, "state           {} ({d_a}x{d_b})", args.source.describe());
    let _ = writeln!(text, "budget          n_u={} n_s={} n_tot={}", plan.n_u, plan.n_s, cert.n_tot);
    let _ = writeln!(text, "e4_tilde_hat    {:.9}", cert.e4_tilde_hat);
    let _ = writeln!(text, "exact e4_tilde  {exact_e4_tilde:.9}");
    let _ = writeln!(text, "epsilon         {}", cert.epsilon);
    let _ = writeln!(text, "delta           requested {} achieved {:.6}", cert.delta_requested, cert.delta_achieved);
    let _ = writeln!(text, "certified       {} (margin {:.9})", cert.certified, cert.margin);
    if let Some(n) = value["note"].as_str() {
        let _ = writeln!(text, "note            {n}");
    }

    Ok(SimulateReport {
        outcome: Outcome { text, json: value, golden_ok: true },
        plan,
        certification: cert,
        exact_e4_tilde,
        covariance,
        files,
    })
}

pub fn plan(args: &PlanArgs) -> CliResult<Outcome> {
    let p = certification::plan(args.epsilon, args.delta)?;
    let text = format!(
        "epsilon {} delta {}\nn_tot = {} (n_u = {} settings x n_s = {} shots)\n",
        p.epsilon, p.delta, p.n_tot, p.n_u, p.n_s
    );
    Ok(Outcome { text, json: serde_json::to_value(p)?, golden_ok: true })
}
