use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::run::{CellResult, RunStats};
use crate::error::{Error, Result};
use crate::rlws::theta_to_text;

/// Column order of `runs.csv`.
pub const RUNS_HEADER: [&str; 15] = [
    "kernel",
    "policy",
    "seed",
    "cycles",
    "instructions",
    "ipc",
    "stall_dependency",
    "stall_barrier",
    "stall_structural",
    "stall_idle",
    "stall_no_instr",
    "l1_hit_rate",
    "l2_hit_rate",
    "explore_fraction",
    "group_switches",
];

pub const RUNS_FILE: &str = "runs.csv";
pub const SPEEDUPS_FILE: &str = "speedups.csv";
pub const RANKS_FILE: &str = "ranks.csv";
pub const SPEEDUPS_DAT_FILE: &str = "speedups.dat";
pub const DECISIONS_DIR: &str = "decisions";
pub const THETA_DIR: &str = "theta";

/// Per-kernel speedups over a baseline, their geometric means and a rank
/// table.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub kernels: Vec<String>,
    pub policies: Vec<String>,
    /// `speedups[k][p]`: geometric mean over seeds of
    /// `cycles(baseline) / cycles(policy)`.
    pub speedups: Vec<Vec<f64>>,
    pub geomean: Vec<f64>,
    /// `ranks[k][p]`: 1 + number of policies strictly faster on kernel `k`.
    pub ranks: Vec<Vec<usize>>,
    /// `rank_histogram[p][r - 1]`: kernels on which policy `p` ranked `r`.
    pub rank_histogram: Vec<Vec<usize>>,
}

pub fn geomean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

fn first_seen<'a>(it: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in it {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

/// Builds the comparison. Kernels and policies keep their first-appearance
/// order; every policy must have run the baseline's seeds on every kernel.
pub fn compare(stats: &[RunStats], baseline: &str) -> Result<Comparison> {
    let kernels = first_seen(stats.iter().map(|s| s.kernel.as_str()));
    let policies = first_seen(stats.iter().map(|s| s.policy.as_str()));
    if !policies.iter().any(|p| p == baseline) {
        return Err(Error::Config(format!(
            "baseline `{baseline}` is not among the compared policies ({})",
            policies.join(", ")
        )));
    }
    let mut speedups = Vec::with_capacity(kernels.len());
    for k in &kernels {
        let base: Vec<&RunStats> = stats.iter().filter(|s| &s.kernel == k && s.policy == baseline).collect();
        let mut row = Vec::with_capacity(policies.len());
        for p in &policies {
            let ratios = base
                .iter()
                .map(|b| {
                    stats
                        .iter()
                        .find(|s| &s.kernel == k && &s.policy == p && s.seed == b.seed)
                        .map(|s| b.cycles as f64 / s.cycles.max(1) as f64)
                        .ok_or_else(|| Error::Config(format!("no run of `{p}` on `{k}` with seed {}", b.seed)))
                })
                .collect::<Result<Vec<f64>>>()?;
            row.push(geomean(&ratios));
        }
        speedups.push(row);
    }
    let geo: Vec<f64> = (0..policies.len())
        .map(|p| geomean(&speedups.iter().map(|r| r[p]).collect::<Vec<_>>()))
        .collect();
    let ranks: Vec<Vec<usize>> = speedups
        .iter()
        .map(|row| row.iter().map(|&v| 1 + row.iter().filter(|&&o| o > v).count()).collect())
        .collect();
    let mut hist = vec![vec![0; policies.len()]; policies.len()];
    for row in &ranks {
        for (p, &r) in row.iter().enumerate() {
            hist[p][r - 1] += 1;
        }
    }
    Ok(Comparison {
        baseline: baseline.to_string(),
        kernels,
        policies,
        speedups,
        geomean: geo,
        ranks,
        rank_histogram: hist,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

/// `runs.csv` contents; an empty slice yields the header alone.
pub fn write_runs_csv(path: &Path, stats: &[RunStats]) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(&err)?;
    w.write_record(RUNS_HEADER).map_err(&err)?;
    for s in stats {
        w.serialize(s).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunStats>> {
    let err = csv_err(path);
    let mut r = csv::Reader::from_path(path).map_err(&err)?;
    let header: Vec<String> = r.headers().map_err(&err)?.iter().map(str::to_string).collect();
    if header != RUNS_HEADER {
        return Err(Error::Config(format!(
            "{}: unexpected header; expected {}",
            path.display(),
            RUNS_HEADER.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(&err)).collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn speedups_csv(c: &Comparison) -> String {
    let mut out = format!("kernel,{}\n", c.policies.join(","));
    for (k, row) in c.kernels.iter().zip(&c.speedups) {
        out.push_str(k);
        for v in row {
            out.push_str(&format!(",{v:.6}"));
        }
        out.push('\n');
    }
    out.push_str("GEOMEAN");
    for v in &c.geomean {
        out.push_str(&format!(",{v:.6}"));
    }
    out.push('\n');
    out
}

pub fn ranks_csv(c: &Comparison) -> String {
    let ranks: Vec<String> = (1..=c.policies.len()).map(|r| format!("rank_{r}")).collect();
    let mut out = format!("policy,geomean,{}\n", ranks.join(","));
    for (p, name) in c.policies.iter().enumerate() {
        let counts: Vec<String> = c.rank_histogram[p].iter().map(|n| n.to_string()).collect();
        out.push_str(&format!("{name},{:.6},{}\n", c.geomean[p], counts.join(",")));
    }
    out
}

/// Whitespace-separated series for bar charts: one row per kernel plus a
/// GEOMEAN row, one column per policy.
pub fn speedups_dat(c: &Comparison) -> String {
    let mut out = format!("# speedup over {}\n# index kernel {}\n", c.baseline, c.policies.join(" "));
    let geo = "GEOMEAN".to_string();
    let rows = c.kernels.iter().zip(&c.speedups).chain(std::iter::once((&geo, &c.geomean)));
    for (i, (k, row)) in rows.enumerate() {
        out.push_str(&format!("{i} {k}"));
        for v in row {
            out.push_str(&format!(" {v:.6}"));
        }
        out.push('\n');
    }
    out
}

/// Plain-text summary table.
pub fn render_table(c: &Comparison) -> String {
    let width = c.kernels.iter().map(|k| k.len()).max().unwrap_or(0).max(7);
    let mut out = format!("speedup over {}\n{:<width$}", c.baseline, "kernel");
    for p in &c.policies {
        out.push_str(&format!(" {p:>10}"));
    }
    out.push('\n');
    for (k, row) in c.kernels.iter().zip(&c.speedups) {
        out.push_str(&format!("{k:<width$}"));
        for v in row {
            out.push_str(&format!(" {v:>10.4}"));
        }
        out.push('\n');
    }
    out.push_str(&format!("{:<width$}", "GEOMEAN"));
    for v in &c.geomean {
        out.push_str(&format!(" {v:>10.4}"));
    }
    out.push('\n');
    out
}

pub fn decision_log_name(s: &RunStats) -> String {
    let clean = |t: &str| t.replace(|c: char| !c.is_ascii_alphanumeric() && c != '_' && c != '-', "_");
    format!("{}__{}__seed{}.log", clean(&s.kernel), clean(&s.policy), s.seed)
}

/// Writes `runs.csv`, the decision logs of learned-policy runs that recorded
/// them, weight matrices when `export_theta` is set, and, given a
/// comparison, `speedups.csv`, `ranks.csv` and `speedups.dat`. Returns the
/// written paths.
pub fn emit(
    out: &Path,
    cells: &[CellResult],
    comparison: Option<&Comparison>,
    export_theta: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    let stats: Vec<RunStats> = cells.iter().map(|c| c.stats.clone()).collect();
    let runs = out.join(RUNS_FILE);
    write_runs_csv(&runs, &stats)?;
    written.push(runs);
    let logged: Vec<&CellResult> = cells.iter().filter(|c| !c.decisions.is_empty()).collect();
    if !logged.is_empty() {
        let dir = out.join(DECISIONS_DIR);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for c in logged {
            let path = dir.join(decision_log_name(&c.stats));
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = std::io::BufWriter::new(f);
            for d in &c.decisions {
                writeln!(w, "{d}").map_err(|e| Error::io(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    let with_theta: Vec<&CellResult> = cells.iter().filter(|c| c.theta.is_some()).collect();
    if export_theta && !with_theta.is_empty() {
        let dir = out.join(THETA_DIR);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for c in with_theta {
            let (cfg, thetas) = c.theta.as_ref().expect("filtered");
            let mut text = String::new();
            for (sm, t) in thetas.iter().enumerate() {
                text.push_str(&format!("# sm {sm}\n{}", theta_to_text(t, cfg)));
            }
            let path = dir.join(decision_log_name(&c.stats).replace(".log", ".theta"));
            write_text(&path, &text)?;
            written.push(path);
        }
    }
    if let Some(c) = comparison {
        for (name, text) in [
            (SPEEDUPS_FILE, speedups_csv(c)),
            (RANKS_FILE, ranks_csv(c)),
            (SPEEDUPS_DAT_FILE, speedups_dat(c)),
        ] {
            let path = out.join(name);
            write_text(&path, &text)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(kernel: &str, policy: &str, seed: u64, cycles: u64) -> RunStats {
        RunStats {
            kernel: kernel.into(),
            policy: policy.into(),
            seed,
            cycles,
            instructions: 100,
            ipc: 100.0 / cycles as f64,
            stall_dependency: 0,
            stall_barrier: 0,
            stall_structural: 0,
            stall_idle: 0,
            stall_no_instr: 0,
            l1_hit_rate: 0.0,
            l2_hit_rate: 0.0,
            explore_fraction: 0.0,
            group_switches: 0,
        }
    }

    #[test]
    fn baseline_against_itself_is_one() {
        let s = vec![row("a", "lrr", 0, 100), row("b", "lrr", 0, 300)];
        let c = compare(&s, "lrr").unwrap();
        assert_eq!(c.speedups, vec![vec![1.0], vec![1.0]]);
        assert_eq!(c.geomean, vec![1.0]);
    }

    #[test]
    fn geomean_of_reciprocal_speedups() {
        let s = vec![
            row("a", "lrr", 0, 100),
            row("a", "x", 0, 50),
            row("b", "lrr", 0, 100),
            row("b", "x", 0, 200),
        ];
        let c = compare(&s, "lrr").unwrap();
        assert!((c.geomean[1] - 1.0).abs() < 1e-12);
        assert!(compare(&s, "gto").is_err());
    }

    #[test]
    fn rank_histogram_sums_to_kernel_count() {
        let mut s = Vec::new();
        for (k, cycles) in [("a", [100, 90, 120, 80]), ("b", [100, 100, 70, 130]), ("c", [50, 60, 55, 40])] {
            for (p, c) in ["lrr", "gto", "tl", "rlws"].iter().zip(cycles) {
                s.push(row(k, p, 0, c));
            }
        }
        let c = compare(&s, "lrr").unwrap();
        for h in &c.rank_histogram {
            assert_eq!(h.iter().sum::<usize>(), 3);
        }
        assert_eq!(c.ranks[0], vec![3, 2, 4, 1]);
    }
}
