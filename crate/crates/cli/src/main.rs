use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use linefree::bounds::{alpha_fgr, alpha_from_set, bounds_report, BoundsOptions};
use linefree::certify::{certify, replay, Certificate, CertifyOptions, Verdict};
use linefree::constructions::{hypercube, Family};
use linefree::search::{default_threads, max_free_exact, BoundKind, PointOrder, SearchConfig};
use linefree::verifier::verify;
use linefree::{parse_grid, render_grid, render_tikz, PointSet, SpaceSpec, VERSION};

const EXIT_PROGRESSION: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_UNKNOWN: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(
    name = "linefree",
    version,
    about = "Progression-free subsets of F_p^n"
)]
struct Cli {
    /// Worker threads for search and certificates (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Include wall times and node counts in the output.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Common {
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Run the built-in examples of this subcommand and exit.
    #[arg(long)]
    selftest: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Hypercube,
    Layered,
    Sqrt,
    Qr,
    Fig70,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Hypercube => Family::Hypercube,
            FamilyArg::Layered => Family::Layered,
            FamilyArg::Sqrt => Family::Sqrt,
            FamilyArg::Qr => Family::Qr,
            FamilyArg::Fig70 => Family::Fig70,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Natural,
    Greedy,
}

#[derive(Subcommand)]
enum Command {
    /// Build a line-free set from a known family.
    Construct {
        #[arg(long, value_enum, required_unless_present = "selftest")]
        family: Option<FamilyArg>,
        #[arg(short, required_unless_present = "selftest")]
        p: Option<u32>,
        /// Dimension; defaults to 3.
        #[arg(short, default_value_t = 3)]
        n: u32,
        #[arg(short)]
        o: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Check a grid file for k-term progressions.
    Verify {
        #[arg(short, required_unless_present = "selftest")]
        k: Option<u32>,
        #[arg(required_unless_present = "selftest")]
        file: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Exact maximum of a k-progression-free set by branch and bound.
    Search {
        #[arg(short, required_unless_present = "selftest")]
        p: Option<u32>,
        #[arg(short, required_unless_present = "selftest")]
        n: Option<u32>,
        #[arg(short, required_unless_present = "selftest")]
        k: Option<u32>,
        /// Wall-clock budget, e.g. 60s or 5m.
        #[arg(long, value_parser = humantime::parse_duration)]
        budget: Option<Duration>,
        /// Node budget.
        #[arg(long)]
        nodes: Option<u64>,
        /// Grid file with a known free set to start from.
        #[arg(long)]
        warm: Option<PathBuf>,
        /// Fix a coordinate frame outside the set (sound, much faster).
        #[arg(long)]
        fix_frame: bool,
        #[arg(long, value_enum, default_value = "greedy")]
        order: OrderArg,
        /// Use only the cardinality bound.
        #[arg(long)]
        weak_bound: bool,
        /// Write the best set as a grid file.
        #[arg(short)]
        o: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Lower and upper bounds on r_k(F_p^n).
    Bounds {
        #[arg(short, required_unless_present = "selftest")]
        p: Option<u32>,
        #[arg(short, required_unless_present = "selftest")]
        n: Option<u32>,
        /// Progression length; defaults to p.
        #[arg(short)]
        k: Option<u32>,
        /// Skip the certificate-based upper bound.
        #[arg(long)]
        no_certify: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Certify that no line-free set of the target size exists in F_p^3.
    Certify {
        #[arg(short, required_unless_present_any = ["selftest", "replay"])]
        p: Option<u32>,
        #[arg(long, required_unless_present_any = ["selftest", "replay"])]
        target: Option<u32>,
        /// Use the line bounds of the hand proofs.
        #[arg(long)]
        paper_faithful: bool,
        /// Give up after sweeping this many vectors.
        #[arg(long)]
        max_vectors: Option<u64>,
        #[arg(long, value_parser = humantime::parse_duration)]
        budget: Option<Duration>,
        /// Re-check a certificate JSON file instead of producing one.
        #[arg(long, conflicts_with_all = ["p", "target"])]
        replay: Option<PathBuf>,
        /// Write the certificate JSON.
        #[arg(short)]
        o: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Growth rate size^(1/n), or the sunflower-free rate for p.
    Rate {
        #[arg(long, requires = "dim", conflicts_with = "fgr")]
        size: Option<u64>,
        #[arg(long, requires = "size")]
        dim: Option<u32>,
        #[arg(long, requires = "p")]
        fgr: bool,
        #[arg(short)]
        p: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Cartesian product of two grid files.
    Product {
        #[arg(required_unless_present = "selftest")]
        a: Option<PathBuf>,
        #[arg(required_unless_present = "selftest")]
        b: Option<PathBuf>,
        #[arg(short, required_unless_present = "selftest")]
        o: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print a grid file as text or TikZ.
    Render {
        #[arg(required_unless_present = "selftest")]
        file: Option<PathBuf>,
        #[arg(long)]
        tikz: bool,
        #[command(flatten)]
        common: Common,
    },
}

struct Ctx {
    threads: usize,
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        threads: cli.threads.unwrap_or_else(default_threads).max(1),
        timing: cli.timing,
    };
    match run(cli.command, &ctx) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cmd: Command, ctx: &Ctx) -> Result<u8> {
    match cmd {
        Command::Construct {
            family,
            p,
            n,
            o,
            common,
        } => {
            if common.selftest {
                return selftest("construct", selftest_construct());
            }
            construct(
                family.unwrap().into(),
                p.unwrap(),
                n,
                o.as_deref(),
                common.json,
            )
        }
        Command::Verify { k, file, common } => {
            if common.selftest {
                return selftest("verify", selftest_verify());
            }
            let set = read_grid(file.as_deref().unwrap())?.1;
            verify_cmd(&set, k.unwrap(), common.json)
        }
        Command::Search {
            p,
            n,
            k,
            budget,
            nodes,
            warm,
            fix_frame,
            order,
            weak_bound,
            o,
            common,
        } => {
            if common.selftest {
                return selftest("search", selftest_search(ctx));
            }
            let warm_start = warm.as_deref().map(read_grid).transpose()?.map(|d| d.1);
            let cfg = SearchConfig {
                order: match order {
                    OrderArg::Natural => PointOrder::Natural,
                    OrderArg::Greedy => PointOrder::GreedyDegree,
                },
                bound: if weak_bound {
                    BoundKind::Cardinality
                } else {
                    BoundKind::LineCapacity
                },
                warm_start,
                time_budget: budget,
                node_budget: nodes,
                threads: ctx.threads,
                fix_frame,
            };
            search_cmd(
                p.unwrap(),
                n.unwrap(),
                k.unwrap(),
                &cfg,
                o.as_deref(),
                common.json,
                ctx,
            )
        }
        Command::Bounds {
            p,
            n,
            k,
            no_certify,
            common,
        } => {
            if common.selftest {
                return selftest("bounds", selftest_bounds());
            }
            let p = p.unwrap();
            let defaults = BoundsOptions::default();
            let opts = BoundsOptions {
                certify: !no_certify,
                certify_options: CertifyOptions {
                    threads: ctx.threads,
                    ..defaults.certify_options
                },
                ..defaults
            };
            let report = bounds_report(p, n.unwrap(), k.unwrap_or(p), &opts)?;
            if common.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render_text());
            }
            Ok(0)
        }
        Command::Certify {
            p,
            target,
            paper_faithful,
            max_vectors,
            budget,
            replay: replay_file,
            o,
            common,
        } => {
            if common.selftest {
                return selftest("certify", selftest_certify(ctx));
            }
            if let Some(path) = replay_file {
                return replay_cmd(&path, common.json);
            }
            let opts = CertifyOptions {
                paper_faithful,
                threads: ctx.threads,
                max_vectors,
                time_budget: budget,
                ..CertifyOptions::default()
            };
            let start = Instant::now();
            let cert = certify(p.unwrap(), target.unwrap(), &opts)?;
            let elapsed = start.elapsed();
            if let Some(path) = &o {
                write_file(path, &format!("{}\n", serde_json::to_string_pretty(&cert)?))?;
            }
            if common.json {
                let mut v = serde_json::to_value(&cert)?;
                if ctx.timing {
                    v["wall_time_ms"] = json!(elapsed.as_millis() as u64);
                }
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                print!("{}", cert.render_text());
                if ctx.timing {
                    println!("time: {} ms", elapsed.as_millis());
                }
            }
            Ok(verdict_code(&cert))
        }
        Command::Rate {
            size,
            dim,
            fgr,
            p,
            common,
        } => {
            if common.selftest {
                return selftest("rate", selftest_rate());
            }
            let rate = match (size, dim, fgr, p) {
                (Some(s), Some(d), false, _) => alpha_from_set(s, d)?,
                (None, None, true, Some(p)) => alpha_fgr(p)?,
                _ => bail!("give either --size S --dim N or --fgr -p P"),
            };
            if common.json {
                let mut v = serde_json::to_value(&rate)?;
                v["version"] = json!(VERSION);
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                println!("{}", rate.base);
            }
            Ok(0)
        }
        Command::Product { a, b, o, common } => {
            if common.selftest {
                return selftest("product", selftest_product());
            }
            product_cmd(&a.unwrap(), &b.unwrap(), &o.unwrap(), common.json)
        }
        Command::Render { file, tikz, common } => {
            if common.selftest {
                return selftest("render", selftest_render());
            }
            let (k, set) = read_grid(file.as_deref().unwrap())?;
            if common.json {
                let mut v = set_json(&set, k);
                v["grid"] = json!(render_grid(&set, k));
                if tikz {
                    v["tikz"] = json!(render_tikz(&set));
                }
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else if tikz {
                print!("{}", render_tikz(&set));
            } else {
                print!("{}", render_grid(&set, k));
            }
            Ok(0)
        }
    }
}

fn read_grid(path: &Path) -> Result<(u32, PointSet)> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let doc = parse_grid(&text).with_context(|| format!("in {}", path.display()))?;
    Ok((doc.k, doc.set))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn set_json(set: &PointSet, k: u32) -> Value {
    let space = set.space();
    json!({
        "version": VERSION,
        "p": space.p(),
        "n": space.n(),
        "k": k,
        "size": set.len(),
        "points": set.points().map(|pt| pt.0).collect::<Vec<_>>(),
    })
}

fn table(rows: &[(&str, String)]) -> String {
    let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(a, b)| format!("{a:<w$}  {b}\n"))
        .collect()
}

fn construct(family: Family, p: u32, n: u32, out: Option<&Path>, as_json: bool) -> Result<u8> {
    let set = family.build(p, n)?;
    let space = set.space();
    let k = space.p();
    let report = verify(&set, k)?;
    ensure!(report.free, "{family} construction contains a progression");
    let grid = render_grid(&set, k);
    if let Some(path) = out {
        write_file(path, &grid)?;
    }
    if as_json {
        let mut v = set_json(&set, k);
        v["family"] = json!(family.to_string());
        v["free"] = json!(true);
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else if out.is_some() {
        print!(
            "{}",
            table(&[
                ("family", family.to_string()),
                ("space", format!("F_{}^{}", space.p(), space.n())),
                ("size", set.len().to_string()),
                ("free", "yes".into()),
            ])
        );
    } else {
        print!("{grid}");
    }
    Ok(0)
}

fn verify_cmd(set: &PointSet, k: u32, as_json: bool) -> Result<u8> {
    let report = verify(set, k)?;
    if as_json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let mut rows = vec![
            ("space", format!("F_{}^{}", report.p, report.n)),
            ("k", k.to_string()),
            ("size", report.size.to_string()),
            ("free", if report.free { "yes" } else { "no" }.to_string()),
        ];
        if let Some(w) = &report.witness {
            rows.push(("base", format!("{:?}", w.base)));
            rows.push(("direction", format!("{:?}", w.dir)));
            rows.push(("step", w.step.to_string()));
        }
        print!("{}", table(&rows));
    }
    Ok(if report.free { 0 } else { EXIT_PROGRESSION })
}

fn search_cmd(
    p: u32,
    n: u32,
    k: u32,
    cfg: &SearchConfig,
    out: Option<&Path>,
    as_json: bool,
    ctx: &Ctx,
) -> Result<u8> {
    let res = max_free_exact(p, n, k, cfg)?;
    if let Some(path) = out {
        write_file(path, &render_grid(&res.best, k))?;
    }
    if as_json {
        let mut v = set_json(&res.best, k);
        v["optimal"] = json!(res.optimal);
        if ctx.timing {
            v["nodes"] = json!(res.nodes);
            v["wall_time_ms"] = json!(res.wall_time.as_millis() as u64);
        }
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        let mut rows = vec![
            ("space", format!("F_{p}^{n}")),
            ("k", k.to_string()),
            ("size", res.size().to_string()),
            (
                "optimal",
                if res.optimal {
                    "yes"
                } else {
                    "no (budget reached)"
                }
                .to_string(),
            ),
        ];
        if ctx.timing {
            rows.push(("nodes", res.nodes.to_string()));
            rows.push(("time", format!("{} ms", res.wall_time.as_millis())));
        }
        print!("{}", table(&rows));
        print!("{}", render_grid(&res.best, k));
    }
    Ok(if res.optimal { 0 } else { EXIT_BUDGET })
}

fn verdict_code(cert: &Certificate) -> u8 {
    match cert.verdict {
        Verdict::Infeasible => 0,
        Verdict::Unknown => EXIT_UNKNOWN,
    }
}

fn replay_cmd(path: &Path, as_json: bool) -> Result<u8> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let cert: Certificate =
        serde_json::from_str(&text).with_context(|| format!("in {}", path.display()))?;
    replay(&cert).context("replay failed")?;
    let verdict = serde_json::to_value(cert.verdict)?;
    if as_json {
        let v = json!({
            "version": VERSION,
            "replay": "ok",
            "p": cert.instance.p,
            "target": cert.instance.target,
            "verdict": verdict,
        });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        print!(
            "{}",
            table(&[
                ("replay", "ok".into()),
                (
                    "instance",
                    format!("p={} target={}", cert.instance.p, cert.instance.target)
                ),
                ("verdict", verdict.as_str().unwrap_or_default().to_string()),
            ])
        );
    }
    Ok(verdict_code(&cert))
}

fn product_cmd(a: &Path, b: &Path, out: &Path, as_json: bool) -> Result<u8> {
    let (ka, sa) = read_grid(a)?;
    let (kb, sb) = read_grid(b)?;
    // A progression in A x B projects to a progression in A or in B, so the
    // product avoids the longer of the two lengths.
    let k = ka.max(kb);
    let prod = sa.product(&sb)?;
    let report = verify(&prod, k)?;
    write_file(out, &render_grid(&prod, k))?;
    if as_json {
        let mut v = set_json(&prod, k);
        v["free"] = json!(report.free);
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        let space = prod.space();
        print!(
            "{}",
            table(&[
                ("space", format!("F_{}^{}", space.p(), space.n())),
                ("k", k.to_string()),
                ("size", prod.len().to_string()),
                ("free", if report.free { "yes" } else { "no" }.to_string()),
            ])
        );
    }
    Ok(if report.free { 0 } else { EXIT_PROGRESSION })
}

fn selftest(name: &str, checks: Result<()>) -> Result<u8> {
    checks.with_context(|| format!("{name} selftest failed"))?;
    println!("{name} selftest: ok");
    Ok(0)
}

fn selftest_construct() -> Result<()> {
    ensure!(
        hypercube(5, 3)?.len() == 64,
        "hypercube(5,3) must have 64 points"
    );
    let cube = hypercube(3, 2)?;
    ensure!(
        cube.len() == 4 && verify(&cube, 3)?.free,
        "hypercube(3,2) must be 4 free points"
    );
    ensure!(Family::Qr.build(5, 3).is_err(), "qr must reject p = 5");
    Ok(())
}

fn selftest_verify() -> Result<()> {
    let full = PointSet::full(SpaceSpec::new(5, 3)?);
    ensure!(
        verify(&full, 5)?.witness.is_some(),
        "full F_5^3 must contain a line"
    );
    let empty = PointSet::empty(SpaceSpec::new(5, 3)?);
    ensure!(verify(&empty, 5)?.free, "the empty set is free");
    Ok(())
}

fn selftest_search(ctx: &Ctx) -> Result<()> {
    let cfg = SearchConfig {
        threads: ctx.threads,
        ..SearchConfig::default()
    };
    for (p, n, k, want) in [(3, 1, 3, 2), (5, 1, 4, 3)] {
        let res = max_free_exact(p, n, k, &cfg)?;
        ensure!(
            res.optimal && res.size() == want,
            "r_{k}(F_{p}^{n}) must be {want}, got {}",
            res.size()
        );
    }
    Ok(())
}

fn selftest_bounds() -> Result<()> {
    let opts = BoundsOptions {
        certify: false,
        ..BoundsOptions::default()
    };
    let r = bounds_report(3, 1, 3, &opts)?;
    for key in ["ap", "sziklai"] {
        let got = r.upper.get(key).map(|e| e.value.as_str());
        ensure!(
            got == Some("2"),
            "{key} bound for (3,1) must be 2, got {got:?}"
        );
    }
    Ok(())
}

fn selftest_certify(ctx: &Ctx) -> Result<()> {
    let opts = CertifyOptions {
        threads: ctx.threads,
        ..CertifyOptions::default()
    };
    let cert = certify(5, 80, &opts)?;
    ensure!(
        cert.verdict == Verdict::Infeasible,
        "T = 80 in F_5^3 must be infeasible"
    );
    replay(&cert)?;
    Ok(())
}

fn selftest_rate() -> Result<()> {
    let r = alpha_from_set(64, 3)?;
    ensure!(
        r.base == "4.000",
        "rate of 64 in dimension 3 must be 4.000, got {}",
        r.base
    );
    Ok(())
}

fn selftest_product() -> Result<()> {
    let prod = hypercube(5, 2)?.product(&hypercube(5, 1)?)?;
    ensure!(prod == hypercube(5, 3)?, "box times box must be the box");
    let empty = PointSet::empty(SpaceSpec::new(5, 1)?);
    ensure!(
        hypercube(5, 2)?.product(&empty)?.is_empty(),
        "S x empty must be empty"
    );
    Ok(())
}

fn selftest_render() -> Result<()> {
    let text = render_grid(&hypercube(3, 2)?, 3);
    let body: Vec<&str> = text.lines().skip(3).collect();
    ensure!(
        body == ["XX.", "XX.", "..."],
        "hypercube(3,2) must render as a 2x2 corner, got {body:?}"
    );
    Ok(())
}
