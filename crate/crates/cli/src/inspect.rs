//! The `inspect` command: a readable replay of a search trace.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use strucprove::search::{read_trace, TraceError, TraceEvent, TraceRecord};

pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>, TraceError> {
    read_trace(BufReader::new(File::open(path)?))
}

/// One line per event, plus indented detail lines for pruning.
pub fn render(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let head = format!("[iter {} {}]", r.iter, r.trace_id);
        match &r.event {
            TraceEvent::DemoSelected { guessed, demos } => {
                let list: Vec<String> = demos.iter().map(|(id, s)| format!("{id} ({s:.3})")).collect();
                writeln!(out, "{head} demonstrations: {}", list.join(", ")).unwrap();
                writeln!(out, "    guessed: {guessed}").unwrap();
            }
            TraceEvent::Retrieved { sentences, failed_samples } => {
                let ids: Vec<String> = sentences.iter().map(ToString::to_string).collect();
                write!(out, "{head} retrieved: {}", ids.join(", ")).unwrap();
                if *failed_samples > 0 {
                    write!(out, " ({failed_samples} samples unparsed)").unwrap();
                }
                out.push('\n');
            }
            TraceEvent::Proposed { steps, finish, rejected } => {
                writeln!(out, "{head} proposed {} step(s){}", steps.len(), if *finish { ", finish" } else { "" }).unwrap();
                for s in steps {
                    writeln!(out, "    + {s}").unwrap();
                }
                for s in rejected {
                    writeln!(out, "    x {s}").unwrap();
                }
            }
            TraceEvent::Evaluated { step, score, defaulted } => {
                let note = if *defaulted { " (default)" } else { "" };
                writeln!(out, "{head} score {score:>2}{note}: {step}").unwrap();
            }
            TraceEvent::Pruned { kept, removed, guard_fired } => {
                writeln!(out, "{head} prune: kept {}, removed {}", kept.len(), removed.len()).unwrap();
                for (s, score) in kept {
                    writeln!(out, "    keep   {score:>2} {s}").unwrap();
                }
                for p in removed {
                    writeln!(out, "    prune  {:>2} {} [{}]", p.score, p.step, p.rule.tag()).unwrap();
                }
                if *guard_fired {
                    writeln!(out, "    guard kept the best structurally pruned step").unwrap();
                }
            }
            TraceEvent::Hint { node, text } => writeln!(out, "{head} hint after {node}: {text}").unwrap(),
            TraceEvent::Extended { step, child } => writeln!(out, "{head} extend -> {child}: {step}").unwrap(),
            TraceEvent::Dropped { reason, count } => writeln!(out, "{head} dropped {count}: {reason}").unwrap(),
            TraceEvent::Terminated { reached, proof, nested } => {
                writeln!(out, "{head} {}", if *reached { "hypothesis reached" } else { "search ended without a proof" })
                    .unwrap();
                writeln!(out, "    chain:  {}", proof.as_deref().unwrap_or("-")).unwrap();
                writeln!(out, "    nested: {}", nested.as_deref().unwrap_or("-")).unwrap();
            }
        }
    }
    out
}
