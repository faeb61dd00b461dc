//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::cache::{Cache, CACHE_ENV};
use crate::detector::{growth_verdict, residue_scan, untwisted_crosscheck, CrosscheckReport, GrowthVerdict, HEURISTIC_DISCLAIMER};
use crate::ff::prime_power;
use crate::fp::{abelianization, parse_presentation, Abelianization, Presentation};
use crate::lietype::{common_overfield, d_part, includes, LieClass, LieError, XType};
use crate::matgrp::{GroupError, DEFAULT_CAP};
use crate::phi::{compute_record, random_search, Budget, ImageCount, PhiContext, PhiError, PhiRecord};
use crate::unitary::{classify_prime, mu_obstruction, p7_scan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

const DEFAULT_QS: &[u64] = &[4, 5, 7, 8, 9, 11, 13];

#[derive(Parser, Debug)]
#[command(name = "liequot", version, about = "Count and classify Lie-type quotients of finitely presented groups")]
struct Cli {
    /// JSON-lines results cache (overrides the LIEQUOT_CACHE variable).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug, Clone)]
struct ClassArgs {
    #[arg(long = "class", default_value = "A1")]
    xtype: XType,
    /// Twist: 1 for untwisted, 2 for unitary.
    #[arg(long, default_value_t = 1)]
    d: u8,
}

impl ClassArgs {
    fn class(&self) -> Result<LieClass, LieError> {
        LieClass::new(self.xtype, self.d)
    }
}

#[derive(Args, Debug, Clone)]
struct Limits {
    /// Largest group enumerated exactly.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Work units before giving up; unlimited when absent.
    #[arg(long)]
    budget: Option<u64>,
}

impl Limits {
    fn budget(&self) -> Budget {
        self.budget.map_or_else(Budget::unlimited, Budget::new)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Abelian invariants of the presented group.
    Abel { presentation: String },
    /// Exact solution counts, one JSON line per q.
    Count {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<u64>,
        #[command(flatten)]
        limits: Limits,
        /// Sample this many random tuples instead of enumerating.
        #[arg(long)]
        random: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        presentation: String,
    },
    /// Same-type images found at each q.
    Classify {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<u64>,
        #[command(flatten)]
        limits: Limits,
        presentation: String,
    },
    /// Growth of the counts across a window of fields.
    Growth {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_QS.to_vec())]
        q: Vec<u64>,
        #[command(flatten)]
        limits: Limits,
        presentation: String,
    },
    /// Which exponents e give images over F_{p^e}.
    Residue {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        e_max: u32,
        #[command(flatten)]
        limits: Limits,
        presentation: String,
    },
    /// Inclusion of twisted groups over subfields.
    Incl {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        e: Option<u64>,
        #[arg(long)]
        f: Option<u64>,
        /// Exponents for a common overfield query.
        #[arg(long, value_delimiter = ',')]
        exponents: Vec<u64>,
    },
    /// Prime classes of Q(sqrt -2) and the scalar obstruction.
    Unitary {
        #[command(subcommand)]
        action: UnitaryAction,
    },
    /// End-to-end summary for one presentation.
    Report {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_QS.to_vec())]
        q: Vec<u64>,
        /// Fields for the unitary-versus-linear comparison.
        #[arg(long, value_delimiter = ',', default_values_t = vec![3u64, 4])]
        crosscheck_q: Vec<u64>,
        #[arg(long, default_value_t = 20)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        limits: Limits,
        presentation: String,
    },
}

#[derive(Subcommand, Debug)]
enum UnitaryAction {
    /// Split status and class of one prime.
    Prime { p: u64 },
    /// All P7 primes below the limit.
    P7 {
        #[arg(long, default_value_t = 100_000)]
        limit: u64,
    },
    /// Search for a scalar mu with mu^(q+1) = 1 and mu^m = -1.
    Mu {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        m: u64,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Budget(String),
}

impl From<PhiError> for Failure {
    fn from(e: PhiError) -> Self {
        match e {
            PhiError::BudgetExceeded(_) | PhiError::Lie(LieError::Group(GroupError::CapExceeded { .. })) => {
                Failure::Budget(e.to_string())
            }
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<LieError> for Failure {
    fn from(e: LieError) -> Self {
        PhiError::from(e).into()
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Reads a presentation from a file when the argument names one.
fn load_presentation(arg: &str) -> Result<Presentation, Failure> {
    let path = PathBuf::from(arg);
    let text = if !arg.trim_start().starts_with('<') && path.is_file() {
        std::fs::read_to_string(&path)?
    } else {
        arg.to_string()
    };
    parse_presentation(&text).map_err(|e| Failure::Input(e.to_string()))
}

fn abel_json(a: &Abelianization) -> serde_json::Value {
    json!({
        "free_rank": a.free_rank,
        "torsion": a.torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "summary": a.to_string(),
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

struct Runner {
    cache: Option<Cache>,
    format: Format,
    out: Vec<String>,
}

impl Runner {
    fn emit(&mut self, line: impl Into<String>) {
        self.out.push(line.into());
    }

    fn record(&self, pres: &Presentation, class: LieClass, q: u64, limits: &Limits, budget: &Budget) -> Result<PhiRecord, Failure> {
        if let Some(cache) = &self.cache {
            if let Some(rec) = cache.lookup(&pres.hash, class, q, true)? {
                return Ok(rec);
            }
        }
        let ctx = PhiContext::new(class, q, limits.cap)?;
        let rec = compute_record(pres, &ctx, budget)?;
        if let Some(cache) = &self.cache {
            cache.append(&rec)?;
        }
        Ok(rec)
    }

    fn records(&self, pres: &Presentation, class: LieClass, qs: &[u64], limits: &Limits) -> Result<Vec<PhiRecord>, Failure> {
        let budget = limits.budget();
        qs.iter().map(|&q| self.record(pres, class, q, limits, &budget)).collect()
    }

    fn growth_text(&mut self, v: &GrowthVerdict) {
        self.emit(format!("class {}^{}: {:?}", v.xtype, v.d, v.verdict));
        match (v.rho, v.rho_interval) {
            (Some(r), Some((lo, hi))) => self.emit(format!("  exponent {r:.3} (95% interval {lo:.3}..{hi:.3})")),
            (Some(r), None) => self.emit(format!("  exponent {r:.3}")),
            _ => self.emit("  exponent: too few nonzero points"),
        }
        for p in &v.points {
            self.emit(format!("  q = {:>3}  |Phi| = {:>14}  orbits = {}", p.q, p.n_phi, p.orbit_count));
        }
        for n in &v.notes {
            self.emit(format!("  note: {n}"));
        }
        self.emit(format!("  {}", v.disclaimer));
    }

    fn crosscheck_text(&mut self, r: &CrosscheckReport) {
        self.emit(format!("unitary vs linear A2 images ({} random trials per field):", r.trials));
        for row in &r.rows {
            self.emit(format!("  q = {:>3}  unitary {:?}  linear {:?}", row.q, row.unitary, row.linear));
        }
        if r.unmatched_characteristics.is_empty() {
            self.emit("  every characteristic with unitary images also shows linear ones");
        } else {
            self.emit(format!("  unitary-only characteristics: {:?}", r.unmatched_characteristics));
        }
        self.emit(format!("  {}", r.disclaimer));
    }

    fn run(&mut self, command: Command) -> Result<(), Failure> {
        match command {
            Command::Abel { presentation } => {
                let pres = load_presentation(&presentation)?;
                let a = abelianization(&pres);
                match self.format {
                    Format::Text => self.emit(a.to_string()),
                    Format::Json => self.emit(abel_json(&a).to_string()),
                }
            }
            Command::Count {
                class,
                q,
                limits,
                random,
                seed,
                presentation,
            } => {
                let pres = load_presentation(&presentation)?;
                let class = class.class()?;
                for &q in &q {
                    let rec = match random {
                        Some(trials) => random_record(&pres, class, q, trials, seed, limits.cap)?,
                        None => self.record(&pres, class, q, &limits, &limits.budget())?,
                    };
                    self.emit(to_json(&rec));
                }
            }
            Command::Classify {
                class,
                q,
                limits,
                presentation,
            } => {
                let pres = load_presentation(&presentation)?;
                let class = class.class()?;
                let recs = self.records(&pres, class, &q, &limits)?;
                for rec in &recs {
                    let p = prime_power(rec.q).map_or(0, |x| x.0);
                    let labels: Vec<serde_json::Value> = rec
                        .images
                        .iter()
                        .map(|i| json!({"image": i.descriptor().label(class.xtype, p), "order": i.order, "s_count": i.s_count}))
                        .collect();
                    match self.format {
                        Format::Json => self.emit(json!({"q": rec.q, "images": labels}).to_string()),
                        Format::Text => {
                            if labels.is_empty() {
                                self.emit(format!("q = {}: no same-type images", rec.q));
                            }
                            for l in labels {
                                self.emit(format!("q = {}: {} (order {}), {} orbits", rec.q, l["image"].as_str().unwrap_or(""), l["order"], l["s_count"]));
                            }
                        }
                    }
                }
            }
            Command::Growth {
                class,
                q,
                limits,
                presentation,
            } => {
                let pres = load_presentation(&presentation)?;
                let class = class.class()?;
                let recs = self.records(&pres, class, &q, &limits)?;
                let v = growth_verdict(class, &recs);
                match self.format {
                    Format::Json => self.emit(to_json(&v)),
                    Format::Text => self.growth_text(&v),
                }
            }
            Command::Residue {
                class,
                p,
                e_max,
                limits,
                presentation,
            } => {
                let pres = load_presentation(&presentation)?;
                let class = class.class()?;
                let r = residue_scan(p, class, &pres, e_max, limits.cap, &limits.budget())?;
                match self.format {
                    Format::Json => self.emit(to_json(&r)),
                    Format::Text => {
                        let bits: String = r.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                        self.emit(format!("p = {p}, e = 1..{}: {bits}", r.bits.len()));
                        match (r.onset, r.period) {
                            (Some(b), Some(n)) => self.emit(format!("  proposed period {n} from e = {b}")),
                            _ => self.emit("  no period proposed"),
                        }
                        if r.truncated {
                            self.emit("  scan truncated by budget or cap");
                        }
                        self.emit(format!("  {}", r.disclaimer));
                    }
                }
            }
            Command::Incl { d, e, f, exponents } => {
                if d == 0 {
                    return Err(Failure::Input("d must be positive".into()));
                }
                let mut result = serde_json::Map::new();
                match (e, f) {
                    (Some(e), Some(f)) if e > 0 && f > 0 => {
                        result.insert("includes".into(), json!(includes(d, e, f)));
                    }
                    (Some(e), None) if e > 0 => {
                        result.insert("d_part".into(), json!(d_part(d, e)));
                    }
                    (None, None) => {}
                    _ => return Err(Failure::Input("need positive --e (and optionally --f)".into())),
                }
                if !exponents.is_empty() {
                    let c = common_overfield(d, &exponents).map_err(|e| Failure::Input(e.to_string()))?;
                    result.insert("common_overfield".into(), json!(c));
                }
                if result.is_empty() {
                    return Err(Failure::Input("nothing to compute: give --e, --f or --exponents".into()));
                }
                match self.format {
                    Format::Json => self.emit(serde_json::Value::Object(result).to_string()),
                    Format::Text => {
                        for (k, v) in result {
                            if k == "includes" {
                                self.emit(v.to_string());
                            } else {
                                self.emit(format!("{k}: {v}"));
                            }
                        }
                    }
                }
            }
            Command::Unitary { action } => self.unitary(action)?,
            Command::Report {
                class,
                q,
                crosscheck_q,
                trials,
                seed,
                limits,
                presentation,
            } => {
                let pres = load_presentation(&presentation)?;
                let class = class.class()?;
                let abel = abelianization(&pres);
                let recs = self.records(&pres, class, &q, &limits)?;
                let verdict = growth_verdict(class, &recs);
                let cross = untwisted_crosscheck(&pres, &crosscheck_q, trials, seed, limits.cap)?;
                match self.format {
                    Format::Json => self.emit(
                        json!({
                            "presentation": pres.canonical(),
                            "hash": pres.hash,
                            "abelianization": abel_json(&abel),
                            "records": recs,
                            "growth": verdict,
                            "crosscheck": cross,
                        })
                        .to_string(),
                    ),
                    Format::Text => {
                        self.emit(format!("presentation {}", pres.canonical()));
                        self.emit(format!("hash {}", pres.hash));
                        self.emit(format!("abelianization: {abel}"));
                        for r in &recs {
                            let p = prime_power(r.q).map_or(0, |x| x.0);
                            let labels: Vec<String> = r.images.iter().map(|i| i.descriptor().label(class.xtype, p)).collect();
                            self.emit(format!(
                                "q = {:>3}: |Phi0| = {}, |Phi| = {}, orbits = {}, images {:?}",
                                r.q, r.n_phi0, r.n_phi, r.orbit_count, labels
                            ));
                        }
                        self.growth_text(&verdict);
                        self.crosscheck_text(&cross);
                    }
                }
            }
        }
        Ok(())
    }

    fn unitary(&mut self, action: UnitaryAction) -> Result<(), Failure> {
        let input = |e: crate::unitary::UnitaryError| Failure::Input(e.to_string());
        match action {
            UnitaryAction::Prime { p } => {
                let c = classify_prime(p).map_err(input)?;
                match self.format {
                    Format::Json => self.emit(to_json(&c)),
                    Format::Text => self.emit(format!("p = {}  {:?}  residue field {}  class {:?}", c.p, c.status, c.residue_size, c.class)),
                }
            }
            UnitaryAction::P7 { limit } => {
                if limit < 3 {
                    return Err(Failure::Input("limit must be at least 3".into()));
                }
                let found = p7_scan(limit);
                match self.format {
                    Format::Json => self.emit(json!({"limit": limit, "p7": found, "disclaimer": HEURISTIC_DISCLAIMER}).to_string()),
                    Format::Text => {
                        self.emit(format!("P7 primes below {limit}: {}", found.len()));
                        for c in found {
                            self.emit(format!("  {}", c.p));
                        }
                        self.emit(format!("  {HEURISTIC_DISCLAIMER}"));
                    }
                }
            }
            UnitaryAction::Mu { q, m } => {
                let r = mu_obstruction(q, m).map_err(input)?;
                match self.format {
                    Format::Json => self.emit(to_json(&r)),
                    Format::Text => self.emit(match r.witness_order {
                        Some(o) => format!("q = {q}, m = {m}: mu exists (order {o})"),
                        None => format!("q = {q}, m = {m}: no mu; the reflection image lies outside PSU_{m}({q})"),
                    }),
                }
            }
        }
        Ok(())
    }
}

/// Record of a random search: counts are sample tallies, never exact.
fn random_record(pres: &Presentation, class: LieClass, q: u64, trials: u64, seed: u64, cap: usize) -> Result<PhiRecord, Failure> {
    if trials == 0 {
        return Err(Failure::Input("--random needs at least one trial".into()));
    }
    let r = random_search(pres, class, q, trials, seed, cap)?;
    Ok(PhiRecord {
        hash: pres.hash.clone(),
        xtype: class.xtype,
        d: class.d,
        q,
        n_phi0: r.satisfying,
        n_phi: r.kept,
        orbit_count: 0,
        images: r
            .found
            .iter()
            .map(|d| ImageCount {
                e0: d.e0,
                twist: d.twist,
                variant_index: d.variant_index,
                order: d.order,
                s_count: 0,
            })
            .collect(),
        exact: false,
    })
}

/// Parses `argv`, runs the command, and writes its output to stdout.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let cache_path = cli.cache.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
    let mut runner = Runner {
        cache: cache_path.map(Cache::new),
        format: cli.format,
        out: Vec::new(),
    };
    let result = runner.run(cli.command);
    for line in &runner.out {
        println!("{line}");
    }
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            EXIT_INPUT
        }
        Err(Failure::Budget(m)) => {
            eprintln!("budget exhausted: {m}");
            EXIT_BUDGET
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(run(["liequot", "abel", "<x,y | x^2, y^3, (x*y)^7>"]), EXIT_OK);
        assert_eq!(run(["liequot", "abel", "<x | y>"]), EXIT_INPUT);
        assert_eq!(run(["liequot", "nonsense"]), EXIT_INPUT);
        assert_eq!(run(["liequot", "incl", "--d", "2", "--e", "1", "--f", "2"]), EXIT_OK);
        assert_eq!(
            run(["liequot", "count", "--q", "7", "--budget", "10", "<x,y | x^2,y^3,(xy)^7>"]),
            EXIT_BUDGET
        );
        assert_eq!(run(["liequot", "count", "--class", "A2", "--d", "2", "--q", "2", "<x|>"]), EXIT_INPUT);
    }
}
