use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lucas_core::interpreter::{check_tree, CalcItem, CalcTree, ProblemBlock, Session};
use lucas_core::knowledge::KnowledgeBase;
use lucas_core::specification::{refine, ProblemInstance, SpecError};
use lucas_core::terms::{parse, render, Signature};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "lucas", version, about = "Check, solve and query calculations against a knowledge base")]
struct Cli {
    /// Knowledge base directory.
    #[arg(long, global = true, env = "LUCAS_KB", default_value = "./kb")]
    kb: PathBuf,
    /// Where instance ids given without a path are looked up.
    #[arg(long, global = true, env = "LUCAS_INSTANCES", default_value = "./instances")]
    instances: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay every step of a calculation file.
    Check { calc: PathBuf },
    /// Solve an instance automatically and print the calculation.
    Solve {
        instance: String,
        /// Also print one JSON line per rewrite after the calculation.
        #[arg(long)]
        trace: bool,
    },
    /// Find the most specific problem below `--root` matching an instance.
    Refine {
        instance: String,
        /// Problem key, parts separated by commas.
        #[arg(long)]
        root: String,
    },
    /// Everything to learn before the given problems, in order.
    Prereq {
        #[arg(required = true)]
        keys: Vec<String>,
    },
    /// Report dangling links, suspicious rules and dead program code.
    Lint { kb_dir: PathBuf },
    /// Run the session service.
    Serve {
        #[arg(long, env = "LUCAS_STORE", default_value = "./store")]
        store: PathBuf,
        #[arg(long, env = "LUCAS_PORT", default_value_t = 8080)]
        port: u16,
    },
}

/// Failure with its exit code: 1 when something did not verify, 2 for
/// unusable input.
struct Fail(u8, String);

fn usage(m: impl ToString) -> Fail {
    Fail(2, m.to_string())
}

fn out(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn print(v: &Value) {
    out(&serde_json::to_string_pretty(v).expect("json"));
}

fn load_kb(dir: &Path) -> Result<KnowledgeBase, Fail> {
    KnowledgeBase::load(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))
}

fn instance_path(cli: &Cli, name: &str) -> PathBuf {
    let p = PathBuf::from(name);
    if p.exists() || name.ends_with(".json") {
        return p;
    }
    cli.instances.join(format!("{name}.json"))
}

fn load_instance(cli: &Cli, kb: &KnowledgeBase, name: &str) -> Result<ProblemInstance, Fail> {
    let p = instance_path(cli, name);
    ProblemInstance::load(&p, &kb.signature).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("lucas: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Fail> {
    match &cli.cmd {
        Cmd::Check { calc } => {
            let kb = load_kb(&cli.kb)?;
            let text = std::fs::read_to_string(calc).map_err(|e| usage(format!("{}: {e}", calc.display())))?;
            let tree: CalcTree = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", calc.display())))?;
            match check_tree(&kb, &tree) {
                Ok(()) => {
                    print(&json!({ "ok": true }));
                    Ok(())
                }
                Err(d) => {
                    print(&json!({ "ok": false, "divergence": { "id": d.id, "reason": d.reason } }));
                    Err(Fail(1, format!("diverges at {d}")))
                }
            }
        }
        Cmd::Solve { instance, trace } => {
            let kb = load_kb(&cli.kb)?;
            let inst = load_instance(cli, &kb, instance)?;
            let mut s = Session::new(inst);
            s.skip_specification(&kb).map_err(usage)?;
            let solved = s.auto_solve(&kb);
            let tree = s.tree().expect("solving session has a tree");
            if *trace {
                out(&serde_json::to_string(tree).expect("json"));
                let mut lines = Vec::new();
                trace_block(&tree.root, &kb.signature, &mut lines);
                for l in lines {
                    out(&l);
                }
            } else {
                print(&json!(tree));
            }
            if let Err(e) = solved {
                return Err(Fail(1, format!("not solved: {e}")));
            }
            match tree.root.postcondition.as_deref() {
                Some("false") => Err(Fail(1, "result violates the post-condition".into())),
                _ => Ok(()),
            }
        }
        Cmd::Refine { instance, root } => {
            let kb = load_kb(&cli.kb)?;
            let inst = load_instance(cli, &kb, instance)?;
            let root: Vec<String> = root.split(',').map(|s| s.trim().to_string()).collect();
            match refine(&kb, &inst, &root) {
                Ok(r) => {
                    let visited: Vec<Value> = r.visited.iter().map(|(k, m)| json!({ "key": k, "matched": m })).collect();
                    print(&json!({ "key": r.key, "visited": visited }));
                    Ok(())
                }
                Err(e @ SpecError::NoMatch(_)) => {
                    print(&json!({ "key": null }));
                    Err(Fail(1, e.to_string()))
                }
                Err(e) => Err(usage(e)),
            }
        }
        Cmd::Prereq { keys } => {
            let kb = load_kb(&cli.kb)?;
            let items = kb.knowledge_closure(keys).map_err(usage)?;
            let order: Vec<String> = items.iter().map(|i| i.to_string()).collect();
            print(&json!({ "items": items, "order": order }));
            Ok(())
        }
        Cmd::Lint { kb_dir } => {
            let kb = load_kb(kb_dir)?;
            let issues = kb.lint();
            print(&json!(issues));
            if issues.is_empty() {
                Ok(())
            } else {
                Err(Fail(1, format!("{} issue(s)", issues.len())))
            }
        }
        Cmd::Serve { store, port } => {
            let cfg = lucas_service::Config { kb: cli.kb.clone(), store: store.clone(), instances: cli.instances.clone(), port: *port };
            let rt = tokio::runtime::Runtime::new().map_err(usage)?;
            rt.block_on(lucas_service::serve(&cfg)).map_err(usage)
        }
    }
}

fn sub(text: &str, path: &[usize], sig: &Signature) -> Option<String> {
    let t = parse(text, sig).ok()?.stripped();
    Some(render(t.subterm_at(path).ok()?, sig))
}

/// One line per recorded rewrite, in calculation order.
fn trace_block(b: &ProblemBlock, sig: &Signature, out: &mut Vec<String>) {
    let mut prev: Option<String> = None;
    for item in &b.solution {
        trace_item(item, &mut prev, sig, out);
    }
}

fn trace_item(item: &CalcItem, prev: &mut Option<String>, sig: &Signature, out: &mut Vec<String>) {
    match item {
        CalcItem::Problem(p) => {
            trace_block(p, sig, out);
            *prev = p.result.clone();
        }
        CalcItem::Step(s) => {
            for d in &s.detail {
                trace_item(d, prev, sig, out);
            }
            if let (Some(r), Some(before)) = (&s.rule, prev.as_deref()) {
                if let (Some(b), Some(a)) = (sub(before, &r.path, sig), sub(&s.term, &r.path, sig)) {
                    out.push(json!({ "rule": r.rule, "path": r.path, "before": b, "after": a }).to_string());
                }
            }
            *prev = Some(s.term.clone());
        }
    }
}
