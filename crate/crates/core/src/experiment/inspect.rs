use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rlws::{ActionSet, DecisionRecord};
use crate::sim::{read_events, IssueEvent, Outcome};

pub fn read_decisions<R: BufRead>(input: R, name: &str) -> Result<Vec<DecisionRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(t.parse().map_err(|msg| Error::Parse {
            path: name.to_string(),
            line: i + 1,
            msg,
        })?);
    }
    Ok(out)
}

/// Decisions that chose NO_INSTR right after a NO_INSTR decision of the
/// same scheduler slot although another action was feasible.
pub fn repeated_no_instr(records: &[DecisionRecord]) -> Vec<usize> {
    let mut last: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if r.actions != ActionSet::Pipeline {
            continue;
        }
        let prev = last.insert((r.sm, r.slot), r.action);
        if prev == Some(0) && r.action == 0 && r.feasible & !1 != 0 {
            out.push(i);
        }
    }
    out
}

pub fn summarize_decisions(records: &[DecisionRecord]) -> String {
    let mut s = String::new();
    let n = records.len();
    let _ = writeln!(s, "decisions: {n}");
    if n == 0 {
        return s;
    }
    let explored = records.iter().filter(|r| r.explored).count();
    let _ = writeln!(s, "explored: {explored} ({:.4})", explored as f64 / n as f64);
    let mut by_action: BTreeMap<(u8, &str), usize> = BTreeMap::new();
    for r in records {
        *by_action.entry((r.action, r.actions.action_name(r.action as usize))).or_default() += 1;
    }
    for ((_, name), c) in by_action {
        let _ = writeln!(s, "action {name}: {c} ({:.4})", c as f64 / n as f64);
    }
    for phase in [1u8, 2] {
        let c = records.iter().filter(|r| r.phase == phase).count();
        let _ = writeln!(s, "phase {phase}: {c}");
    }
    let rewards: Vec<f64> = records.iter().filter_map(|r| r.reward_prev).collect();
    if !rewards.is_empty() {
        let _ = writeln!(s, "mean reward: {:.4}", rewards.iter().sum::<f64>() / rewards.len() as f64);
    }
    let _ = writeln!(
        s,
        "cycles: {}..={}",
        records.iter().map(|r| r.cycle).min().unwrap_or(0),
        records.iter().map(|r| r.cycle).max().unwrap_or(0)
    );
    let _ = writeln!(s, "repeated NO_INSTR with alternatives: {}", repeated_no_instr(records).len());
    s
}

pub fn summarize_events(events: &[IssueEvent]) -> String {
    let mut s = String::new();
    let issues = events.iter().filter(|e| matches!(e.outcome, Outcome::Issue { .. })).count();
    let _ = writeln!(s, "events: {}", events.len());
    let _ = writeln!(s, "issues: {issues}");
    let mut stalls: BTreeMap<String, usize> = BTreeMap::new();
    for e in events {
        if let Outcome::Stall(c) = e.outcome {
            *stalls.entry(c.token().to_string()).or_default() += 1;
        }
    }
    for (c, n) in stalls {
        let _ = writeln!(s, "stall {c}: {n}");
    }
    s
}

/// Summary of a decision log or an issue-event log, detected from content.
pub fn inspect_log(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    if first.is_empty() || first.parse::<DecisionRecord>().is_ok() {
        let records = read_decisions(text.as_bytes(), &name)?;
        Ok(format!("decision log {name}\n{}", summarize_decisions(&records)))
    } else {
        let events = read_events(text.as_bytes(), &name)?;
        Ok(format!("issue log {name}\n{}", summarize_events(&events)))
    }
}
