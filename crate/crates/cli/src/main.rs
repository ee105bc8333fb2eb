//! `pdlkit`: one binary for parsing, proving, checking, deciding the
//! starred normal forms, encoding machines and eliminating cuts.
//!
//! Exit codes: 0 positive verdict or success, 1 negative verdict, 2 usage
//! or shape error, 3 bound exceeded.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use pdlkit::atm::{self, AtmSpec};
use pdlkit::calculus::{check, transform, CheckOptions, CheckResult, Derivation, System, TransformArgs, TransformKind};
use pdlkit::cutelim::{self, Elimination};
use pdlkit::expansion::{build_refutation_tree, decide_bcne_detailed, Bcne};
use pdlkit::formula::{parse, parse_formula, parse_sequent, Parsed};
use pdlkit::ordinal::{o_formula, o_sequent};
use pdlkit::prover::{prove, ProofResult};
use pdlkit::qbf::{decide_bdne_via, emit_qbf, export_qdimacs, qbf_eval, Via};
use pdlkit::semantics::{sequent_valid_bounded, SearchBounds};
use pdlkit::{PdlError, Result};

#[derive(Parser)]
#[command(name = "pdlkit", version, about = "Sequent-calculus toolkit for propositional dynamic logic")]
struct Cli {
    /// Structured output on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a formula or sequent and print its canonical form.
    Parse { text: String },
    /// Print the seq-negation of a formula.
    Negate { text: String },
    /// Print the complexity ordinal of a formula or sequent.
    Ordinal { text: String },
    /// Search for a derivation.
    Prove {
        sequent: String,
        #[arg(long, default_value = "seq00")]
        system: String,
        #[arg(long)]
        emit_derivation: Option<PathBuf>,
        #[arg(long)]
        emit_trace: bool,
    },
    /// Check a derivation file.
    Check {
        derivation: PathBuf,
        #[arg(long, default_value = "seq0")]
        system: String,
        #[arg(long)]
        cut: bool,
        #[arg(long)]
        upgrades: bool,
        #[arg(long)]
        weak: bool,
    },
    /// Apply an admissible transformation (w, c, or-inv, and-inv1, ...).
    Invert {
        derivation: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long, default_value_t = 0)]
        depth: usize,
        /// Sequent added by `w`.
        #[arg(long)]
        weaken: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the k-th expansion of a starred expression `<p*>A | Z`.
    Expand {
        text: String,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Decide a BCNE.
    DecideBcne {
        text: String,
        #[arg(long)]
        emit_expansion: bool,
        #[arg(long)]
        emit_refutation: Option<PathBuf>,
    },
    /// Decide a BDNE.
    DecideBdne {
        text: String,
        #[arg(long, default_value = "f")]
        via: String,
        #[arg(long)]
        emit_qdimacs: Option<PathBuf>,
    },
    /// Translate a BDNE into a quantified Boolean formula.
    EmitQbf {
        text: String,
        #[arg(long)]
        qdimacs: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Encode acceptance of an alternating machine.
    EncodeAtm {
        spec: PathBuf,
        #[arg(long)]
        negate: bool,
        #[arg(long)]
        repair_endmarkers: bool,
    },
    /// Search for a countermodel to a sequent.
    Countermodel {
        sequent: String,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Eliminate the cuts of a Seq0+Cut derivation.
    Cutelim {
        derivation: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        trace: bool,
    },
}

/// Search bounds, overridable through `PDLKIT_BOUNDS="key=value,..."`.
#[derive(Debug, Clone, Copy)]
struct Bounds {
    frame_size: usize,
    depth: Option<usize>,
    clause_budget: usize,
    refutation_nodes: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { frame_size: 1 << 16, depth: None, clause_budget: 1 << 22, refutation_nodes: 1 << 20 }
    }
}

impl Bounds {
    fn from_env() -> Result<Bounds> {
        let mut b = Bounds::default();
        let Ok(text) = std::env::var("PDLKIT_BOUNDS") else { return Ok(b) };
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| PdlError::Invalid(format!("PDLKIT_BOUNDS entry `{item}` is not key=value")))?;
            let n: usize = value
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| PdlError::Invalid(format!("bound `{key}` must be a positive integer")))?;
            match key.trim() {
                "frame_size" => b.frame_size = n,
                "depth" => b.depth = Some(n),
                "clause_budget" => b.clause_budget = n,
                "refutation_nodes" => b.refutation_nodes = n,
                k => return Err(PdlError::Invalid(format!("unknown bound `{k}`"))),
            }
        }
        Ok(b)
    }
}

/// What a subcommand reports: its verdict, a JSON record and plain text.
struct Report {
    verdict: bool,
    json: Value,
    text: String,
}

impl Report {
    fn ok(json: Value, text: impl Into<String>) -> Report {
        Report { verdict: true, json, text: text.into() }
    }
}

fn read_arg(text: &str) -> Result<String> {
    if text == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| PdlError::Invalid(e.to_string()))?;
        Ok(s.trim().to_string())
    } else {
        Ok(text.to_string())
    }
}

fn read_file(p: &Path) -> Result<String> {
    fs::read_to_string(p).map_err(|e| PdlError::Invalid(format!("{}: {e}", p.display())))
}

fn write_file(p: &Path, s: &str) -> Result<()> {
    fs::write(p, s).map_err(|e| PdlError::Invalid(format!("{}: {e}", p.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable value")
}

fn run(cmd: Cmd, bounds: Bounds) -> Result<Report> {
    match cmd {
        Cmd::Parse { text } => {
            let text = read_arg(&text)?;
            Ok(match parse(&text)? {
                Parsed::Formula(f) => {
                    let frags: Vec<String> = f.classify().iter().map(|g| g.to_string()).collect();
                    Report::ok(json!({"kind": "formula", "text": f.to_string(), "ast": to_json(&f), "fragments": frags}), f.to_string())
                }
                Parsed::Sequent(s) => Report::ok(json!({"kind": "sequent", "text": s.to_string(), "ast": to_json(&s)}), s.to_string()),
            })
        }
        Cmd::Negate { text } => {
            let f = parse_formula(&read_arg(&text)?)?.negate();
            Ok(Report::ok(json!({"text": f.to_string(), "ast": to_json(&f)}), f.to_string()))
        }
        Cmd::Ordinal { text } => {
            let o = match parse(&read_arg(&text)?)? {
                Parsed::Formula(f) => o_formula(&f),
                Parsed::Sequent(s) => o_sequent(&s),
            };
            Ok(Report::ok(json!({"ordinal": o.to_string()}), o.to_string()))
        }
        Cmd::Prove { sequent, system, emit_derivation, emit_trace } => {
            let sys: System = system.parse()?;
            if sys != System::Seq00 {
                return Err(PdlError::Invalid(format!("proof search is available for seq00 only, not {system}")));
            }
            let s = parse_sequent(&read_arg(&sequent)?)?;
            Ok(match prove(&s)? {
                ProofResult::Proved(d) => {
                    if let Some(p) = &emit_derivation {
                        write_file(p, &d.to_json())?;
                    }
                    Report::ok(
                        json!({"verdict": "proved", "height": d.height(), "size": d.size()}),
                        format!("proved (height {}, {} inferences)", d.height(), d.size()),
                    )
                }
                ProofResult::Refuted(t) => {
                    let mut text = "refuted".to_string();
                    if emit_trace {
                        text.push_str(&format!("\ntrace: {}", t.encode()));
                        for step in &t.path {
                            text.push_str(&format!("\n  {:?}: {}", step.kind, step.sequent));
                        }
                    }
                    let mut j = json!({"verdict": "refuted", "trace": t.encode()});
                    if emit_trace {
                        j["path"] = to_json(&t.path);
                    }
                    Report { verdict: false, json: j, text }
                }
            })
        }
        Cmd::Check { derivation, system, cut, upgrades, weak } => {
            let d = Derivation::from_json(&read_file(&derivation)?)?;
            let mut opts = CheckOptions::new(system.parse()?);
            if cut {
                opts = opts.with_cut();
            }
            if upgrades {
                opts = opts.with_upgrades();
            }
            if weak {
                opts = opts.with_weak();
            }
            Ok(match check(&opts, &d) {
                CheckResult::Valid => Report::ok(json!({"valid": true}), "valid"),
                CheckResult::Invalid { path, sequent, reason } => Report {
                    verdict: false,
                    json: json!({"valid": false, "path": path, "sequent": sequent, "reason": reason}),
                    text: format!("invalid at {path:?} `{sequent}`: {reason}"),
                },
            })
        }
        Cmd::Invert { derivation, kind, formula, depth, weaken, output } => {
            let d = Derivation::from_json(&read_file(&derivation)?)?;
            let kind: TransformKind = kind.replace(['-', '_'], "").parse()?;
            let args = match (kind, formula, weaken) {
                (TransformKind::W, _, Some(w)) => TransformArgs::Weaken(parse_sequent(&w)?),
                (TransformKind::W, _, None) => return Err(PdlError::Invalid("`w` needs --weaken".into())),
                (TransformKind::GenVec, ..) => return Err(PdlError::Invalid("gen-vec is not available from the command line".into())),
                (_, Some(f), _) => TransformArgs::Target { formula: parse_formula(&f)?, depth },
                (_, None, _) => return Err(PdlError::Invalid(format!("{kind:?} needs --formula"))),
            };
            let out = transform(kind, &d, &args)?;
            emit_derivation(&out, output.as_deref())
        }
        Cmd::Expand { text, k } => {
            let e = Bcne::parse(&parse_formula(&read_arg(&text)?)?)?;
            let k = k.unwrap_or(e.shape.bound() + 1);
            let s = e.expansion(k);
            Ok(Report::ok(json!({"k": k, "sequent": s.to_string(), "size": s.size()}), s.to_string()))
        }
        Cmd::DecideBcne { text, emit_expansion, emit_refutation } => {
            let f = parse_formula(&read_arg(&text)?)?;
            let dec = decide_bcne_detailed(&f)?;
            let mut j = json!({"valid": dec.valid, "n": dec.n});
            let mut out = (if dec.valid { "valid" } else { "not valid" }).to_string();
            if emit_expansion {
                j["expansion"] = json!(dec.expansion.to_string());
                out.push_str(&format!("\nexpansion: {}", dec.expansion));
            }
            if let (Some(p), false) = (&emit_refutation, dec.valid) {
                let e = Bcne::parse(&f)?;
                let tree = build_refutation_tree(&e.shape, &e.pi(), dec.n + 1, bounds.refutation_nodes)?
                    .ok_or_else(|| PdlError::Invalid("expansion is derivable; no refutation tree".into()))?;
                write_file(p, &serde_json::to_string_pretty(&tree).unwrap())?;
            }
            Ok(Report { verdict: dec.valid, json: j, text: out })
        }
        Cmd::DecideBdne { text, via, emit_qdimacs } => {
            let f = parse_formula(&read_arg(&text)?)?;
            let via: Via = via.parse()?;
            let valid = decide_bdne_via(&f, via)?;
            if let Some(p) = &emit_qdimacs {
                write_file(p, &export_qdimacs(&emit_qbf(&f)?, bounds.clause_budget)?)?;
            }
            let j = json!({"valid": valid, "via": to_json(&via)});
            Ok(Report { verdict: valid, json: j, text: (if valid { "valid" } else { "not valid" }).into() })
        }
        Cmd::EmitQbf { text, qdimacs, output } => {
            let q = emit_qbf(&parse_formula(&read_arg(&text)?)?)?;
            let body = if qdimacs { export_qdimacs(&q, bounds.clause_budget)? } else { serde_json::to_string_pretty(&q).unwrap() };
            let value = qbf_eval(&q);
            let j = json!({"nodes": q.nodes.len(), "value": value});
            match output {
                Some(p) => {
                    write_file(&p, &body)?;
                    Ok(Report::ok(j, format!("{} nodes written to {}", q.nodes.len(), p.display())))
                }
                None => Ok(Report::ok(j, body)),
            }
        }
        Cmd::EncodeAtm { spec, negate, repair_endmarkers } => {
            let m = AtmSpec::from_json(&read_file(&spec)?)?.compile()?;
            let f = if negate {
                let (shape, z) = atm::encode_negation_bdne(&m, repair_endmarkers);
                atm::render_bdne(&shape, &z)
            } else {
                atm::encode_accepts(&m, repair_endmarkers)
            };
            Ok(Report::ok(json!({"formula": f.to_string(), "size": f.size()}), f.to_string()))
        }
        Cmd::Countermodel { sequent, size, depth } => {
            let s = parse_sequent(&read_arg(&sequent)?)?;
            let mut b = SearchBounds::for_sequent(&s);
            b.size = size.unwrap_or(bounds.frame_size);
            if let Some(d) = depth.or(bounds.depth) {
                b.depth = d;
            }
            let v = sequent_valid_bounded(&s, b);
            match &v.countermodel {
                Some((frame, world)) => Ok(Report::ok(
                    json!({"countermodel": true, "frame": to_json(frame), "world": world}),
                    format!("countermodel at world {world}\n{}", serde_json::to_string(frame).unwrap()),
                )),
                None if v.authoritative => Ok(Report { verdict: false, json: json!({"countermodel": false, "valid": true}), text: "valid".into() }),
                None => Err(PdlError::Bound("no countermodel within the bounds; the search was not exhaustive".into())),
            }
        }
        Cmd::Cutelim { derivation, output, trace } => {
            let d = Derivation::from_json(&read_file(&derivation)?)?;
            let opts = CheckOptions::new(System::Seq0).with_cut().with_upgrades();
            if let CheckResult::Invalid { path, reason, .. } = check(&opts, &d) {
                return Err(PdlError::Invalid(format!("input is not a Seq0+Cut derivation (at {path:?}: {reason})")));
            }
            let e = cutelim::eliminate(&d)?;
            let mut rep = emit_derivation(&e.derivation, output.as_deref())?;
            rep.json = json!({
                "deg": e.deg.to_string(),
                "alpha": e.alpha.to_string(),
                "height_in": e.height_in.to_string(),
                "height_out": e.height_out.to_string(),
                "bound": e.bound.to_string(),
                "steps": e.steps.len(),
            });
            if trace {
                rep.json["trace"] = to_json(&e.steps);
                rep.text = format!("{}\n{}", trace_text(&e), rep.text);
            }
            Ok(rep)
        }
    }
}

fn trace_text(e: &Elimination) -> String {
    let mut out = format!("deg {}  alpha {}  h {}  bound phi(alpha, h) = {}", e.deg, e.alpha, e.height_in, e.bound);
    for (i, s) in e.steps.iter().enumerate() {
        out.push_str(&format!(
            "\nR{i}: rho {} {:?} on `{}`  deg {} -> {}  h1 {} h2 {}  h {} < {}",
            s.rho, s.case, s.cut, s.deg_before, s.deg_after, s.h_left, s.h_right, s.height, s.bound
        ));
    }
    out.push_str(&format!("\nresult height {}", e.height_out));
    out
}

fn emit_derivation(d: &Derivation, output: Option<&Path>) -> Result<Report> {
    let body = d.to_json();
    let j = json!({"height": d.height(), "size": d.size()});
    match output {
        Some(p) => {
            write_file(p, &body)?;
            Ok(Report::ok(j, format!("wrote {} (height {})", p.display(), d.height())))
        }
        None => Ok(Report::ok(j, body)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Bounds::from_env().and_then(|b| run(cli.cmd, b));
    match result {
        Ok(rep) => {
            if cli.json {
                println!("{}", rep.json);
            } else {
                println!("{}", rep.text);
            }
            ExitCode::from(if rep.verdict { 0 } else { 1 })
        }
        Err(e) => {
            let code = if matches!(e, PdlError::Bound(_)) { 3 } else { 2 };
            if cli.json {
                println!("{}", json!({"error": e.to_string(), "exit": code}));
            }
            eprintln!("pdlkit: {e}");
            ExitCode::from(code)
        }
    }
}
