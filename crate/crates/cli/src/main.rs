//! `mdkit`: runs the verification suites and prints a JSON report.
//!
//! Exit codes: 0 when every check passes, 1 when a verification fails,
//! 2 on usage or configuration errors.

use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use mdkit::complex::{build_en_zp, check_free_action, coindex_bounds, reduced_homology, FreeZpComplex};
use mdkit::finite::{
    embed_into_universal, marker_greedy, marker_search, verify_marker_transfer, FiniteSystem, MarkerVerdict,
};
use mdkit::meandim::{
    choose_time_division, cover_d_bounds, cover_ord, headline_pipeline, Cover, OpenLattice, COVER_D_CAP,
};
use mdkit::report::{Checker, Report, SuiteReport, Verdict};
use mdkit::scalar::parse_rational;
use mdkit::shift::{
    check_membership, count_periodic_sft_enumerate, count_periodic_sft_transfer, periodic_witness,
    verify_conjugacy_diagram, SubshiftSpec, DEFAULT_DENOM, DEFAULT_MAX_ATTEMPTS,
};
use mdkit::tower::{q_factorial, run_section_suite, tower_aperiodicity_report, SectionSuiteConfig};
use mdkit::{Error, Rational, Scalar, System, Tower};

#[derive(Parser)]
#[command(name = "mdkit", version, about = "Exact verification suites for torus subshifts, towers, complexes, markers and mean dimension bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factorial tower: section maps and aperiodicity certificates.
    #[command(subcommand)]
    Tower(TowerCmd),
    /// Subshifts of (S^N)^Z.
    #[command(subcommand)]
    Shift(ShiftCmd),
    /// Free Z_p simplicial complexes.
    #[command(subcommand)]
    Complex(ComplexCmd),
    /// Marker search on finite systems.
    #[command(subcommand)]
    Markers(MarkersCmd),
    /// Embed a finite metric system into the gap-1 universal shift.
    Embed(EmbedArgs),
    /// Cover calculus and mean dimension bounds.
    #[command(subcommand)]
    Mdim(MdimCmd),
}

#[derive(Args)]
struct SeedArg {
    /// Seed for every random draw.
    #[arg(long, env = "MDKIT_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum TowerCmd {
    /// Section identity, section range and factor-map checks at one level.
    Verify {
        #[arg(long)]
        m: usize,
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value = "1/2")]
        delta: String,
        /// Input window as start:end (end exclusive); defaults to a window
        /// of length 3·q(m) reaching every block case.
        #[arg(long)]
        window: Option<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_DENOM)]
        denom: i64,
        /// Only use the zero anchor.
        #[arg(long)]
        zero_anchor_only: bool,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Per-prime emptiness certificates and top-level periodic witnesses.
    Aperiodicity {
        /// Tower spec JSON; overrides --N, --delta and --m-max.
        #[arg(long)]
        spec: Option<String>,
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value = "1/2")]
        delta: String,
        #[arg(long, default_value_t = 5)]
        m_max: usize,
        #[arg(long, default_value_t = 13)]
        p_max: u64,
    },
}

#[derive(Subcommand)]
enum ShiftCmd {
    /// Periodic point counts of a binary subshift of finite type.
    CountPeriodic {
        /// Comma-separated forbidden words of one length.
        #[arg(long, default_value = "000,111")]
        forbidden: String,
        #[arg(long, default_value_t = 14)]
        n_max: usize,
    },
    /// Commuting square between (P_p X(N,m,δ), σ^m) and (P_p X(N,1,δ), σ).
    Conjugacy {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: u64,
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value = "1/2")]
        delta: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_DENOM)]
        denom: i64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Explicit period-p point of X(N,m,δ).
    Witness {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: u64,
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value = "1/2")]
        delta: String,
    },
}

#[derive(Subcommand)]
enum ComplexCmd {
    /// Build E_nZ_p and report its free action, dimension and homology.
    EnZp {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: usize,
    },
    /// Sound coindex bounds of a complex.
    Coindex {
        /// `en-zp:p=3,n=2` or a complex JSON file.
        #[arg(long)]
        complex: String,
        #[arg(long, default_value_t = 2)]
        n_max: usize,
    },
}

#[derive(Subcommand)]
enum MarkersCmd {
    /// Exhaustive (or greedy) N-marker search.
    Search {
        /// `cycles:3,5` or a system JSON file.
        #[arg(long)]
        system: String,
        #[arg(long = "N")]
        n_marker: usize,
        #[arg(long)]
        greedy: bool,
    },
    /// Marker transfer between a system and its 1/n-time system.
    Transfer {
        #[arg(long)]
        system: String,
        #[arg(long)]
        n: usize,
        #[arg(long = "N")]
        n_marker: usize,
    },
}

#[derive(Args)]
struct EmbedArgs {
    /// `cycles:3,5` or a system JSON file with a metric.
    #[arg(long)]
    system: String,
    /// Attach the metric with every off-diagonal distance equal to this value.
    #[arg(long)]
    uniform_metric: Option<String>,
    #[arg(long)]
    epsilon: String,
}

#[derive(Subcommand)]
enum MdimCmd {
    /// Exact D of a cover on a finite open lattice.
    #[command(name = "D", alias = "d")]
    D {
        /// `interval`, `discrete:<n>`, `en-zp:p=2,n=1` (face poset) or a lattice JSON file.
        #[arg(long, default_value = "interval")]
        lattice: String,
        /// Cover members as JSON lists of atom indices, e.g. [[0,1],[1,2]].
        #[arg(long)]
        cover: String,
        #[arg(long, default_value_t = COVER_D_CAP)]
        cap: u64,
    },
    /// Ambient shift bound at each level, inverse limit, then time division.
    Pipeline {
        #[arg(long = "N")]
        dim: u64,
        #[arg(long, conflicts_with = "eta")]
        time_division: Option<u64>,
        /// Target η; picks the smallest n of the form ⌊N/η⌋ + 1.
        #[arg(long)]
        eta: Option<String>,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

type Outcome = Result<(String, Value, SuiteReport, Value), Error>;

fn q(text: &str) -> Result<Rational, Error> {
    parse_rational(text)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, Error> {
    let text = std::fs::read_to_string(Path::new(path)).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{path}: {e}")))
}

fn load_system(text: &str) -> Result<System, Error> {
    if text.starts_with("cycles:") {
        FiniteSystem::parse_shorthand(text)
    } else {
        read_json(text)
    }
}

/// Parses `en-zp:p=3,n=2`.
fn parse_en_zp(text: &str) -> Result<Option<(u64, usize)>, Error> {
    let Some(body) = text.strip_prefix("en-zp:") else { return Ok(None) };
    let (mut p, mut n) = (None, None);
    for part in body.split(',') {
        match part.trim().split_once('=') {
            Some(("p", v)) => p = v.parse().ok(),
            Some(("n", v)) => n = v.parse().ok(),
            _ => return Err(Error::Parse(format!("bad generator {text:?}"))),
        }
    }
    match (p, n) {
        (Some(p), Some(n)) => Ok(Some((p, n))),
        _ => Err(Error::Parse(format!("generator {text:?} needs p and n"))),
    }
}

fn load_complex(text: &str) -> Result<FreeZpComplex, Error> {
    match parse_en_zp(text)? {
        Some((p, n)) => build_en_zp(p, n),
        None => read_json(text),
    }
}

fn load_lattice(text: &str) -> Result<OpenLattice, Error> {
    if text == "interval" {
        return Ok(OpenLattice::interval_model());
    }
    if let Some(n) = text.strip_prefix("discrete:") {
        return OpenLattice::discrete(n.parse().map_err(|_| Error::Parse(format!("bad lattice {text:?}")))?);
    }
    match parse_en_zp(text)? {
        Some((p, n)) => OpenLattice::face_poset(&build_en_zp(p, n)?, 1 << 16),
        None => read_json(text),
    }
}

fn parse_window(text: &str) -> Result<(i64, usize), Error> {
    let bad = || Error::Parse(format!("window must be start:end with start < end, got {text:?}"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let start: i64 = a.trim().parse().map_err(|_| bad())?;
    let end: i64 = b.trim().parse().map_err(|_| bad())?;
    if end <= start {
        return Err(bad());
    }
    Ok((start, (end - start) as usize))
}

fn single(name: &str, statement: &str, ok: bool, witness: Value) -> SuiteReport {
    let mut c = Checker::new(name, statement);
    c.check(ok, || witness);
    SuiteReport { checks: vec![c.finish()] }
}

fn run_tower(cmd: TowerCmd) -> Outcome {
    match cmd {
        TowerCmd::Verify { m, dim, delta, window, samples, denom, zero_anchor_only, seed } => {
            let delta = q(&delta)?;
            let (start, len) = match window {
                Some(w) => parse_window(&w)?,
                None => {
                    let big = q_factorial(m)? as i64;
                    let small = q_factorial(m.saturating_sub(1).max(1))? as i64;
                    (small + 1 - 2 * big, 3 * big as usize)
                }
            };
            let cfg = SectionSuiteConfig {
                m,
                dim,
                delta,
                start,
                len,
                samples,
                seed: seed.seed,
                denom,
                random_anchors: !zero_anchor_only,
            };
            let out = run_section_suite(&cfg)?;
            let config = serde_json::to_value(&cfg).expect("serializable");
            let cases: Value = out.case_counts.iter().map(|(k, v)| (format!("{k:?}"), json!(v))).collect::<serde_json::Map<_, _>>().into();
            Ok(("tower verify".into(), config, out.suite, json!({ "case_counts": cases })))
        }
        TowerCmd::Aperiodicity { spec, dim, delta, m_max, p_max } => {
            let spec: Tower = match spec {
                Some(path) => read_json(&path)?,
                None => Tower::new(dim, q(&delta)?, m_max)?,
            };
            spec.validate()?;
            let out = tower_aperiodicity_report(&spec, p_max)?;
            let config = json!({ "spec": spec, "p_max": p_max });
            Ok(("tower aperiodicity".into(), config, out.suite.clone(), json!({ "certificates": out.certificates })))
        }
    }
}

fn run_shift(cmd: ShiftCmd) -> Outcome {
    match cmd {
        ShiftCmd::CountPeriodic { forbidden, n_max } => {
            let words: Vec<String> = forbidden.split(',').map(|w| w.trim().to_string()).collect();
            let mut agree = Checker::new("transfer equals enumeration", "tr(A^n) = #{circular words of length n avoiding F}");
            let mut counts = Vec::new();
            for n in 1..=n_max {
                let t = count_periodic_sft_transfer(&words, n)?;
                if n <= 20 {
                    let e = count_periodic_sft_enumerate(&words, n)?;
                    agree.check(t == e, || json!({ "n": n, "transfer": t.to_string(), "enumeration": e.to_string() }));
                }
                counts.push(json!({ "n": n, "count": t.to_string() }));
            }
            let config = json!({ "forbidden": words, "n_max": n_max });
            Ok(("shift count-periodic".into(), config, SuiteReport { checks: vec![agree.finish()] }, json!({ "counts": counts })))
        }
        ShiftCmd::Conjugacy { p, m, dim, delta, samples, denom, seed } => {
            let d = q(&delta)?;
            let out = verify_conjugacy_diagram(dim, m, &d, p, samples, seed.seed, denom, DEFAULT_MAX_ATTEMPTS)?;
            let config = json!({ "p": p, "m": m, "N": dim, "delta": d.to_fraction_string(), "samples": samples, "denom": denom, "seed": seed.seed });
            Ok(("shift conjugacy".into(), config, out.suite.clone(), json!({ "k": out.k })))
        }
        ShiftCmd::Witness { p, m, dim, delta } => {
            let d = q(&delta)?;
            let w = periodic_witness(dim, m, &d, p)?;
            let report = check_membership(&SubshiftSpec::gap_space(dim, m as usize, d.clone())?, &w)?;
            let suite = single(
                "witness membership",
                "the explicit period-p point satisfies ρ_N(x_n, x_{n+m}) ≥ δ for all n",
                report.passed(),
                json!(report.first_failure().map(|c| c.index)),
            );
            let config = json!({ "p": p, "m": m, "N": dim, "delta": d.to_fraction_string() });
            Ok(("shift witness".into(), config, suite, json!({ "witness": w })))
        }
    }
}

fn homology_summary(k: &FreeZpComplex) -> Value {
    let top = k.dim().max(0) as usize;
    (0..=top).map(|d| json!({ "degree": d, "group": reduced_homology(k, d) })).collect()
}

fn run_complex(cmd: ComplexCmd) -> Outcome {
    match cmd {
        ComplexCmd::EnZp { p, n } => {
            let k = build_en_zp(p, n)?;
            let mut suite = SuiteReport::default();
            suite.extend(single("free action", "no non-identity g fixes a simplex", check_free_action(&k), Value::Null));
            suite.extend(single("dimension", "dim E_nZ_p = n", k.dim() == n as i64, json!(k.dim())));
            let mut conn = Checker::new("homological connectivity", "reduced homology vanishes in degrees ≤ n − 1");
            for d in 0..n {
                let h = reduced_homology(&k, d);
                conn.check(h.is_trivial(), || json!({ "degree": d, "group": h }));
            }
            suite.push(conn.finish());
            let result = json!({
                "vertices": k.vertices().len(),
                "simplices": k.num_simplices(),
                "euler_characteristic": k.euler_characteristic(),
                "homology": homology_summary(&k),
                "complex": k,
            });
            Ok(("complex en-zp".into(), json!({ "p": p, "n": n }), suite, result))
        }
        ComplexCmd::Coindex { complex, n_max } => {
            let k = load_complex(&complex)?;
            let b = coindex_bounds(&k, n_max)?;
            let suite = single(
                "interval",
                "lower ≤ upper",
                b.upper.is_none_or(|u| b.lower <= u),
                json!({ "lower": b.lower, "upper": b.upper }),
            );
            Ok(("complex coindex".into(), json!({ "complex": complex, "n_max": n_max }), suite, json!({ "bound": b })))
        }
    }
}

fn run_markers(cmd: MarkersCmd) -> Outcome {
    match cmd {
        MarkersCmd::Search { system, n_marker, greedy } => {
            let sys = load_system(&system)?;
            let cert = if greedy { marker_greedy(&sys, n_marker) } else { marker_search(&sys, n_marker)? };
            let config = json!({ "system": system, "N": n_marker, "greedy": greedy });
            let suite = cert.transcript.clone();
            let verdict = cert.verdict;
            debug_assert!(greedy || verdict != MarkerVerdict::Unknown);
            Ok(("markers search".into(), config, suite, json!({ "verdict": verdict, "certificate": cert })))
        }
        MarkersCmd::Transfer { system, n, n_marker } => {
            let sys = load_system(&system)?;
            let out = verify_marker_transfer(&sys, n, n_marker)?;
            let config = json!({ "system": system, "n": n, "N": n_marker });
            Ok(("markers transfer".into(), config, out.suite.clone(), json!({ "backward_markers": out.backward_markers })))
        }
    }
}

fn run_embed(args: EmbedArgs) -> Outcome {
    let mut sys = load_system(&args.system)?;
    if let Some(d) = &args.uniform_metric {
        let d = q(d)?;
        let n = sys.len();
        let metric = (0..n).map(|i| (0..n).map(|j| if i == j { Rational::from_int(0) } else { d.clone() }).collect()).collect();
        sys = sys.with_metric(metric)?;
    }
    let eps = q(&args.epsilon)?;
    let out = embed_into_universal(&sys, &eps)?;
    let config = json!({ "system": args.system, "uniform_metric": args.uniform_metric, "epsilon": eps.to_fraction_string() });
    let result = json!({ "N": out.dim, "delta": out.delta.to_fraction_string(), "sequences": out.sequences });
    Ok(("embed".into(), config, out.suite.clone(), result))
}

fn run_mdim(cmd: MdimCmd) -> Outcome {
    match cmd {
        MdimCmd::D { lattice, cover, cap } => {
            let l = load_lattice(&lattice)?;
            let members: Vec<Vec<usize>> =
                serde_json::from_str(&cover).map_err(|e| Error::Parse(format!("cover: {e}")))?;
            let c = Cover::from_indices(&l, &members)?;
            let r = cover_d_bounds(&l, &c, cap)?;
            let ord = cover_ord(&c);
            let mut suite = single("D at most ord", "D(c) ≤ ord(c)", r.upper <= ord, json!({ "D": r.upper, "ord": ord }));
            suite.extend(single("search finished", "the refinement search is exhaustive within the cap", r.exact, json!(r.explored)));
            let config = json!({ "lattice": lattice, "cover": members, "cap": cap });
            Ok(("mdim D".into(), config, suite, json!({ "ord": ord, "D": r })))
        }
        MdimCmd::Pipeline { dim, time_division, eta, levels } => {
            let mut suite = SuiteReport::default();
            let n = match (&eta, time_division) {
                (Some(e), _) => {
                    let e = q(e)?;
                    let n = choose_time_division(dim, &e)?;
                    let bound = Rational::from_int(dim as i64) / Rational::from_int(n as i64);
                    suite.extend(single("below target", "N/n < η", bound < e, json!({ "n": n })));
                    n
                }
                (None, Some(n)) => n,
                (None, None) => return Err(Error::Arity("pass --time-division or --eta".into())),
            };
            let b = headline_pipeline::<Rational>(dim, levels, n)?;
            let expected = Rational::from_int(dim as i64) / Rational::from_int(n as i64);
            suite.extend(single(
                "pipeline arithmetic",
                "AmbientShift(N) → InverseLimit → TimeDivision(n) gives [0, N/n]",
                b.lower == Rational::from_int(0) && b.upper.as_ref() == Some(&expected),
                json!(b.to_string()),
            ));
            let config = json!({ "N": dim, "time_division": time_division, "eta": eta, "levels": levels });
            Ok(("mdim pipeline".into(), config, suite, json!({ "n": n, "bound": b })))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Tower(c) => run_tower(c),
        Command::Shift(c) => run_shift(c),
        Command::Complex(c) => run_complex(c),
        Command::Markers(c) => run_markers(c),
        Command::Embed(a) => run_embed(a),
        Command::Mdim(c) => run_mdim(c),
    };
    match outcome {
        Ok((command, config, suite, result)) => {
            let report = Report::new(command, config, suite, result);
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            let s = &report.summary;
            eprintln!(
                "{}: {} ({} checks, {} failed, {} vacuous)",
                report.command,
                if s.verdict == Verdict::Pass { "pass" } else { "FAIL" },
                s.checks,
                s.failed,
                s.vacuous
            );
            for c in report.checks.iter().filter(|c| c.verdict == Verdict::Fail) {
                eprintln!("  failed: {} ({})", c.name, c.statement);
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
