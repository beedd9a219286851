//! The `gvna` command surface.
//!
//! Every verb writes one report to standard output, either as JSON or as
//! `key: value` lines in a fixed field order. Exit codes: `0` success, `1`
//! input error, `2` an invariant breach (`INCONSISTENT`).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::basis::build_basis;
use crate::cocycle::{kleppner_holds_with, normalize_cocycle, twisted_icc_with, Cocycle};
use crate::conjugacy::is_icc;
use crate::constructors::{
    brute_force_arrow, deaconu_renault, essentially_free, full_relation, globalize, group_bundle, group_groupoid,
    klein_four_cocycle, partial_action_groupoid, random_bundle, random_dr, random_groupoid, random_partial_action,
    random_twisted, sn_bundle, stabilizer_diagnostic, FiniteGroupTable, RandomParams, SN_BUNDLE_MAX,
};
use crate::format::{
    parse_dr, parse_groupoid_with, parse_partial_action, write_dr, write_groupoid, write_partial_action,
    GroupoidDocument,
};
use crate::groupoid::{MeasuredGroupoid, UnitSpace};
use crate::vna::{factoriality_report, Tolerances, TwistedVna, CONSISTENT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INCONSISTENT: i32 = 2;

/// Environment variable holding the default containment tolerance.
pub const TOL_ENV: &str = "GVNA_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "gvna", version, about = "Factoriality of twisted groupoid von Neumann algebras")]
pub struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: OutputFormat,
    /// Containment tolerance for algebra comparisons.
    #[arg(long, env = TOL_ENV, default_value_t = 1e-8, global = true)]
    pub tol: f64,
    /// Relative singular-value cutoff for ranks and null spaces.
    #[arg(long, default_value_t = 1e-9, global = true)]
    pub rank_tol: f64,
    /// Holonomy and phase comparison tolerance.
    #[arg(long, default_value_t = 1e-9, global = true)]
    pub holonomy_tol: f64,
    /// Allowed deviation of `|ω|` from 1 when reading cocycles.
    #[arg(long, default_value_t = 1e-12, global = true)]
    pub modulus_tol: f64,
    /// Cocycle identity and reconstruction tolerance.
    #[arg(long, default_value_t = 1e-10, global = true)]
    pub identity_tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a groupoid file.
    Validate { path: PathBuf },
    /// Full factoriality report.
    Report { path: PathBuf },
    /// Untwisted icc verdict with witnesses.
    Icc { path: PathBuf },
    /// Central-set search for the file's cocycle (trivial if absent).
    TwistedIcc { path: PathBuf },
    /// Kleppner's condition for the file's cocycle.
    Kleppner { path: PathBuf },
    /// Numerical center against the invariant subalgebra.
    Center { path: PathBuf },
    /// Fourier decomposition of random elements along a symmetric basis.
    Fourier {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Tolerance on the Parseval identity.
        #[arg(long, default_value_t = 1e-9)]
        parseval_tol: f64,
    },
    /// Emit an instance in the text format.
    Gen {
        #[arg(value_enum)]
        family: Family,
        /// Size parameter (units, or N for the symmetric-group bundle).
        #[arg(long, short = 'n', default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Group spec for `group` and `group-bundle`, e.g. `cyclic 3` or `product cyclic 2 ; cyclic 2`.
        #[arg(long, default_value = "cyclic 2")]
        group: String,
    },
    /// Reports over a range of seeded random instances, in parallel.
    Corpus {
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        start: u64,
        #[arg(long)]
        twisted: bool,
        #[arg(long, default_value_t = 12)]
        max_units: usize,
        #[arg(long, default_value_t = 60)]
        max_arrows: usize,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Globalize a partial action and check the restriction isomorphism.
    Globalize {
        path: PathBuf,
        /// Print the enveloping transformation groupoid instead of the report.
        #[arg(long)]
        emit: bool,
    },
    /// Isotropy scan of a Deaconu–Renault system.
    DrScan {
        path: PathBuf,
        /// Override the file's bound on `|k|`.
        #[arg(long)]
        bound: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    FullRelation,
    Group,
    GroupBundle,
    Klein,
    KleinTwisted,
    SnBundle,
    Random,
    RandomTwisted,
    RandomBundle,
    PartialAction,
    Dr,
}

impl Cli {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rank: self.rank_tol,
            containment: self.tol,
            holonomy: self.holonomy_tol,
            modulus: self.modulus_tol,
            identity: self.identity_tol,
            ..Tolerances::default()
        }
    }
}

/// An outcome ready for printing.
enum Output {
    Report { value: Value, consistent: bool },
    Document(String),
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load(cli: &Cli, path: &Path) -> Result<GroupoidDocument, String> {
    let text = read(path)?;
    parse_groupoid_with(&text, cli.modulus_tol, cli.identity_tol).map_err(|e| format!("{}: {e}", path.display()))
}

fn normalized(g: &MeasuredGroupoid, c: Option<&Cocycle>) -> Cocycle {
    match c {
        Some(c) if !c.is_normalized() => normalize_cocycle(g, c),
        Some(c) => c.clone(),
        None => Cocycle::trivial(g),
    }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable")
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    let scalar = |v: &Value| match v {
        Value::Bool(b) => yes_no(*b).to_string(),
        Value::Null => "-".to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(xs) if xs.iter().any(|x| x.as_str().is_some_and(|s| s.contains(' '))) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::Array(xs) if xs.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let items: Vec<String> = xs.iter().map(scalar).collect();
            let joined = if items.is_empty() { "-".to_string() } else { items.join(" ") };
            out.push_str(&format!("{prefix}: {joined}\n"));
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        other => out.push_str(&format!("{prefix}: {}\n", scalar(other))),
    }
}

/// `key: value` rendering with nested keys joined by dots.
pub fn render_text(v: &Value) -> String {
    let mut out = String::new();
    flatten("", v, &mut out);
    out
}

fn report_value(g: &MeasuredGroupoid, c: Option<&Cocycle>, tol: &Tolerances) -> Result<(Value, bool), String> {
    let r = factoriality_report(g, &c.cloned().unwrap_or_else(|| Cocycle::trivial(g)), tol).map_err(|e| e.to_string())?;
    let consistent = r.consistent();
    let mut v = to_value(&r);
    if let Value::Object(m) = &mut v {
        m.insert("FACTOR".into(), json!(yes_no(r.factor)));
    }
    Ok((v, consistent))
}

fn run_command(cli: &Cli) -> Result<Output, String> {
    let tol = cli.tolerances();
    match &cli.command {
        Command::Validate { path } => {
            let d = load(cli, path)?;
            let g = &d.groupoid;
            let value = json!({
                "units": g.n_units(),
                "arrows": g.n_arrows(),
                "nonsingular": g.flags().nonsingular,
                "pmp": g.flags().pmp,
                "cocycle": d.cocycle.is_some(),
                "cocycle_normalized": d.cocycle.as_ref().map(Cocycle::is_normalized),
                "status": "valid",
            });
            Ok(Output::Report { value, consistent: true })
        }
        Command::Report { path } => {
            let d = load(cli, path)?;
            let (value, consistent) = report_value(&d.groupoid, d.cocycle.as_ref(), &tol)?;
            Ok(Output::Report { value, consistent })
        }
        Command::Icc { path } => {
            let d = load(cli, path)?;
            let v = is_icc(&d.groupoid);
            let consistent = v.icc == v.definitional_icc;
            Ok(Output::Report { value: to_value(&v), consistent })
        }
        Command::TwistedIcc { path } => {
            let d = load(cli, path)?;
            let g = &d.groupoid;
            let w = normalized(g, d.cocycle.as_ref());
            let v = twisted_icc_with(g, &w, tol.holonomy);
            let value = json!({
                "twisted_icc": v.icc,
                "central_set": v.certificate.as_ref().map(|c| c.support.names(g)),
                "certificate_residual": v.certificate.as_ref().map(|c| c.residual(g, &w)),
            });
            let consistent = v.certificate.as_ref().is_none_or(|c| c.residual(g, &w) <= tol.holonomy);
            Ok(Output::Report { value, consistent })
        }
        Command::Kleppner { path } => {
            let d = load(cli, path)?;
            let g = &d.groupoid;
            let w = normalized(g, d.cocycle.as_ref());
            let v = kleppner_holds_with(g, &w, tol.holonomy);
            let value = json!({
                "kleppner": v.holds,
                "witness": v.witness.map(|h| g.arrow_name(h).to_string()),
            });
            Ok(Output::Report { value, consistent: true })
        }
        Command::Center { path } => {
            let d = load(cli, path)?;
            let g = &d.groupoid;
            let w = normalized(g, d.cocycle.as_ref());
            let vna = TwistedVna::with_tolerances(g, &w, tol).map_err(|e| e.to_string())?;
            let center = vna.center();
            let inv = vna.invariant_subalgebra();
            let r1 = inv.contains_residual(&center);
            let r2 = center.contains_residual(&inv);
            let predicted = crate::cocycle::predicted_center_dim(g, &w, tol.holonomy);
            let equal = r1 <= tol.containment && r2 <= tol.containment && center.dim() == inv.dim();
            let ticc = twisted_icc_with(g, &w, tol.holonomy).icc;
            let value = json!({
                "l2_dim": vna.dim(),
                "center_dim": center.dim(),
                "predicted_center_dim": predicted,
                "invariant_dim": inv.dim(),
                "center_in_invariant_residual": r1,
                "invariant_in_center_residual": r2,
                "center_equals_invariant": equal,
                "twisted_icc": ticc,
                "spectral": to_value(&center.spectral),
            });
            Ok(Output::Report { value, consistent: predicted == center.dim() && equal == ticc })
        }
        Command::Fourier { path, seed, count, parseval_tol } => {
            let d = load(cli, path)?;
            let g = &d.groupoid;
            let w = normalized(g, d.cocycle.as_ref());
            let vna = TwistedVna::with_tolerances(g, &w, tol).map_err(|e| e.to_string())?;
            let basis = build_basis(g, true);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let (mut worst_res, mut worst_star_a, mut worst_a_star) = (0.0f64, 0.0f64, 0.0f64);
            for _ in 0..*count {
                let a = vna.random_element(&mut rng);
                let f = vna.fourier(&a, &basis).map_err(|e| e.to_string())?;
                worst_res = worst_res.max(f.residual);
                worst_star_a = worst_star_a.max((f.coefficient_norm_sq - f.phi_a_star_a).abs());
                worst_a_star = worst_a_star.max((f.coefficient_norm_sq - f.phi_a_a_star).abs());
            }
            let pmp = g.flags().pmp;
            let consistent = worst_res <= tol.identity && worst_a_star <= *parseval_tol && (!pmp || worst_star_a <= *parseval_tol);
            let value = json!({
                "pmp": pmp,
                "basis_blocks": basis.len(),
                "basis": basis.blocks.iter().map(|b| b.arrows().names(g).join(",")).collect::<Vec<_>>(),
                "elements": count,
                "max_reconstruction_residual": worst_res,
                "max_parseval_gap_phi_a_star_a": worst_star_a,
                "max_parseval_gap_phi_a_a_star": worst_a_star,
            });
            Ok(Output::Report { value, consistent })
        }
        Command::Gen { family, n, seed, group } => generate(*family, *n, *seed, group).map(Output::Document),
        Command::Corpus { count, start, twisted, max_units, max_arrows, jobs } => {
            let params = RandomParams { max_units: *max_units, max_arrows: *max_arrows, ..RandomParams::default() };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(*jobs).build().map_err(|e| e.to_string())?;
            let seeds: Vec<u64> = (*start..start + count).collect();
            let rows: Vec<Result<CorpusRow, String>> =
                pool.install(|| seeds.par_iter().map(|&s| corpus_row(&params, s, *twisted, &tol)).collect());
            let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
            let summary = CorpusSummary::of(&rows);
            let consistent = summary.inconsistent == 0;
            let value = json!({ "params": to_value(&params), "twisted": twisted, "summary": to_value(&summary), "instances": to_value(&rows) });
            Ok(Output::Report { value, consistent })
        }
        Command::Globalize { path, emit } => {
            let p = parse_partial_action(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
            let glob = globalize(&p).map_err(|e| e.to_string())?;
            if *emit {
                return Ok(Output::Document(write_groupoid(&glob.groupoid, None)));
            }
            let partial = partial_action_groupoid(&p).map_err(|e| e.to_string())?;
            let value = json!({
                "group_order": p.group.order(),
                "partial_units": p.space.len(),
                "global_units": glob.global.space.len(),
                "global_arrows": glob.groupoid.n_arrows(),
                "domain_is_transversal": glob.domain_is_transversal,
                "borel_full": glob.fullness.borel_full,
                "mu_full": glob.fullness.mu_full,
                "restriction_isomorphic": glob.isomorphism.is_ok(),
                "isomorphism_error": glob.isomorphism.as_ref().err(),
                "icc_partial": is_icc(&partial).icc,
                "icc_global": is_icc(&glob.groupoid).icc,
                "induced_witness": stabilizer_diagnostic(&glob.global, &glob.groupoid).map(|d| to_value(&d)),
            });
            let consistent = glob.domain_is_transversal && glob.fullness.mu_full && glob.isomorphism.is_ok();
            Ok(Output::Report { value, consistent })
        }
        Command::DrScan { path, bound } => {
            let mut d = parse_dr(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
            if let Some(b) = bound {
                d.bound = *b;
            }
            let view = deaconu_renault(&d)?;
            let free = essentially_free(&d)?;
            let n = d.sigma.len();
            let b = d.bound as i64;
            let mut mismatches = 0;
            for x in 0..n {
                for y in 0..n {
                    for k in -b..=b {
                        let fast = view.arrows.binary_search(&crate::constructors::DrArrow { x, k, y }).is_ok();
                        if fast != brute_force_arrow(&d, x, k, y) {
                            mismatches += 1;
                        }
                    }
                }
            }
            let b_n: serde_json::Map<String, Value> = view
                .b_n
                .iter()
                .map(|(k, xs)| (k.to_string(), json!(xs.iter().map(|&x| d.space.names[x].clone()).collect::<Vec<_>>())))
                .collect();
            let mu: serde_json::Map<String, Value> = view.b_n_measure.iter().map(|(k, m)| (k.to_string(), json!(m))).collect();
            let value = json!({
                "points": n,
                "bound": d.bound,
                "arrows": view.arrows.len(),
                "periods": view.periods,
                "tails": view.tails,
                "b_n": b_n,
                "b_n_measure": mu,
                "essentially_free": free.essentially_free,
                "some_b_n_positive": free.some_b_n_positive,
                "scan_conclusive": free.scan_conclusive,
                "note": free.note,
                "brute_force_mismatches": mismatches,
            });
            Ok(Output::Report { value, consistent: mismatches == 0 })
        }
    }
}

fn generate(family: Family, n: usize, seed: u64, group: &str) -> Result<String, String> {
    let params = RandomParams::default();
    let spec = |s: &str| FiniteGroupTable::from_spec(s).map_err(|e| e.to_string());
    Ok(match family {
        Family::FullRelation => {
            if n == 0 {
                return Err("full relation needs n >= 1".into());
            }
            write_groupoid(&full_relation(n), None)
        }
        Family::Group => write_groupoid(&group_groupoid(&spec(group)?), None),
        Family::GroupBundle => {
            if n == 0 {
                return Err("group bundle needs n >= 1".into());
            }
            let fiber = spec(group)?;
            write_groupoid(&group_bundle(&vec![fiber; n], UnitSpace::uniform(n)), None)
        }
        Family::Klein => write_groupoid(&group_groupoid(&FiniteGroupTable::klein_four()), None),
        Family::KleinTwisted => {
            let g = group_groupoid(&FiniteGroupTable::klein_four());
            write_groupoid(&g, Some(&klein_four_cocycle(&g)))
        }
        Family::SnBundle => {
            if !(2..=SN_BUNDLE_MAX).contains(&n) {
                return Err(format!("sn-bundle needs 2 <= n <= {SN_BUNDLE_MAX}"));
            }
            write_groupoid(&sn_bundle(n), None)
        }
        Family::Random => write_groupoid(&random_groupoid(&params, seed), None),
        Family::RandomTwisted => {
            let t = random_twisted(&params, seed);
            write_groupoid(&t.groupoid, Some(&t.cocycle))
        }
        Family::RandomBundle => write_groupoid(&random_bundle(seed).0, None),
        Family::PartialAction => write_partial_action(&random_partial_action(seed)),
        Family::Dr => write_dr(&random_dr(seed)),
    })
}

#[derive(Debug, Clone, Serialize)]
struct CorpusRow {
    seed: u64,
    units: usize,
    arrows: usize,
    ergodic: bool,
    icc: bool,
    twisted_icc: bool,
    kleppner: bool,
    center_dim: usize,
    invariant_dim: usize,
    factor: bool,
    verdict: String,
}

fn corpus_row(params: &RandomParams, seed: u64, twisted: bool, tol: &Tolerances) -> Result<CorpusRow, String> {
    let (g, w) = if twisted {
        let t = random_twisted(params, seed);
        (t.groupoid, t.cocycle)
    } else {
        let g = random_groupoid(params, seed);
        let w = Cocycle::trivial(&g);
        (g, w)
    };
    let r = factoriality_report(&g, &w, tol).map_err(|e| format!("seed {seed}: {e}"))?;
    Ok(CorpusRow {
        seed,
        units: r.units,
        arrows: r.arrows,
        ergodic: r.ergodic,
        icc: r.icc,
        twisted_icc: r.twisted_icc,
        kleppner: r.kleppner,
        center_dim: r.center_dim,
        invariant_dim: r.invariant_dim,
        factor: r.factor,
        verdict: r.verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
struct CorpusSummary {
    instances: usize,
    consistent: usize,
    inconsistent: usize,
    ergodic: usize,
    icc: usize,
    twisted_icc: usize,
    factors: usize,
    /// Ergodic instances where Kleppner's condition holds but the algebra is not a factor.
    kleppner_converse_failures: Vec<u64>,
}

impl CorpusSummary {
    fn of(rows: &[CorpusRow]) -> Self {
        let count = |f: &dyn Fn(&CorpusRow) -> bool| rows.iter().filter(|r| f(r)).count();
        let consistent = count(&|r| r.verdict == CONSISTENT);
        CorpusSummary {
            instances: rows.len(),
            consistent,
            inconsistent: rows.len() - consistent,
            ergodic: count(&|r| r.ergodic),
            icc: count(&|r| r.icc),
            twisted_icc: count(&|r| r.twisted_icc),
            factors: count(&|r| r.factor),
            kleppner_converse_failures: rows.iter().filter(|r| r.ergodic && r.kleppner && !r.factor).map(|r| r.seed).collect(),
        }
    }
}

/// Run a parsed command, writing the report to `out` and input errors to `err`; returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match run_command(cli) {
        Ok(Output::Document(text)) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Ok(Output::Report { value, consistent }) => {
            let mut value = value;
            if let Value::Object(m) = &mut value {
                if !m.contains_key("verdict") {
                    m.insert("verdict".into(), json!(if consistent { CONSISTENT } else { crate::vna::INCONSISTENT }));
                }
            }
            let text = match cli.format {
                OutputFormat::Json => serde_json::to_string_pretty(&value).expect("serializable") + "\n",
                OutputFormat::Text => render_text(&value),
            };
            let _ = out.write_all(text.as_bytes());
            if consistent {
                EXIT_OK
            } else {
                EXIT_INCONSISTENT
            }
        }
        Err(msg) => {
            let text = match cli.format {
                OutputFormat::Json => serde_json::to_string_pretty(&json!({ "error": msg })).expect("serializable") + "\n",
                OutputFormat::Text => format!("error: {msg}\n"),
            };
            let _ = err.write_all(text.as_bytes());
            EXIT_INPUT
        }
    }
}

/// Parse arguments and run; argument errors exit with `1`.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_INPUT
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            }
        }
    }
}
