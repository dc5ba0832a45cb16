//! Line-oriented kernel file format.
//!
//! ```text
//! WSKERNEL 1
//! NAME <name>
//! WARPS_PER_TB <n>
//! RESOURCES <registers> <shared-bytes>
//! SALT <u64>
//! TBS <n>
//! TB <tb-id>
//! WARP <warp-in-tb> <instruction-count>
//! INSTR <SP|SFU|GMEM|STC|BAR> [lat=<class>] [dst=<reg>] [src=<reg>[,<reg>]] [loc=<pattern>,<param>,<region>,<ordinal>] [div]
//! ...
//! END
//! ```
//!
//! `<pattern>` is one of `stream` (param = stride bytes), `reuse` (param =
//! window lines) or `random` (param = pool lines). Blank lines and lines
//! starting with `#` are ignored. `lat=` is written only when the latency
//! class differs from the kind's default.

use std::fmt::Write as _;
use std::path::Path;

use super::spec::{KernelSpec, TbResources, TbSpec};
use crate::error::{Error, Result};
use crate::sim::{AccessPattern, InstrKind, Instruction, LocalityTag};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "WSKERNEL";

pub fn to_text(spec: &KernelSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(s, "NAME {}", spec.name);
    let _ = writeln!(s, "WARPS_PER_TB {}", spec.warps_per_tb);
    let _ = writeln!(s, "RESOURCES {} {}", spec.resources.registers, spec.resources.shared_mem);
    let _ = writeln!(s, "SALT {}", spec.addr_salt);
    let _ = writeln!(s, "TBS {}", spec.tbs.len());
    for (t, tb) in spec.tbs.iter().enumerate() {
        let _ = writeln!(s, "TB {t}");
        for (w, prog) in tb.warps.iter().enumerate() {
            let _ = writeln!(s, "WARP {w} {}", prog.len());
            for instr in prog {
                write_instr(&mut s, instr);
            }
        }
    }
    s.push_str("END\n");
    s
}

fn write_instr(s: &mut String, i: &Instruction) {
    s.push_str("INSTR ");
    s.push_str(i.kind.token());
    if i.latency_class != i.kind.default_latency_class() {
        let _ = write!(s, " lat={}", i.latency_class);
    }
    if let Some(d) = i.dest {
        let _ = write!(s, " dst={d}");
    }
    if !i.srcs.is_empty() {
        let srcs: Vec<String> = i.srcs.iter().map(|r| r.to_string()).collect();
        let _ = write!(s, " src={}", srcs.join(","));
    }
    if let Some(tag) = i.locality {
        let (name, param) = match tag.pattern {
            AccessPattern::Stream { stride } => ("stream", stride),
            AccessPattern::Reuse { window } => ("reuse", window),
            AccessPattern::Random { pool } => ("random", pool),
        };
        let _ = write!(s, " loc={name},{param},{},{}", tag.region, tag.ordinal);
    }
    if i.divergent {
        s.push_str(" div");
    }
    s.push('\n');
}

pub fn save(spec: &KernelSpec, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(spec)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<KernelSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text, &path.display().to_string())
}

struct Lines<'a> {
    name: &'a str,
    iter: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, name: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)>> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Lines {
            name,
            iter: it.peekable(),
            last: 0,
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.name.to_string(),
            line,
            msg: msg.into(),
        }
    }

    /// Next line, which must start with `keyword`; returns its fields.
    fn expect(&mut self, keyword: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.iter.next() {
            None => Err(self.err(self.last + 1, format!("unexpected end of file, expected {keyword}"))),
            Some((n, line)) => {
                self.last = n;
                let mut fields = line.split_whitespace();
                let head = fields.next().unwrap_or("");
                if head != keyword {
                    return Err(self.err(n, format!("expected {keyword}, found `{head}`")));
                }
                Ok((n, fields.collect()))
            }
        }
    }

    fn number<T: std::str::FromStr>(&self, line: usize, fields: &[&str], idx: usize, what: &str) -> Result<T> {
        fields
            .get(idx)
            .ok_or_else(|| self.err(line, format!("missing {what}")))?
            .parse()
            .map_err(|_| self.err(line, format!("invalid {what} `{}`", fields[idx])))
    }
}

pub fn from_text(text: &str, name: &str) -> Result<KernelSpec> {
    let mut lines = Lines::new(text, name);
    let (n, f) = lines.expect(MAGIC)?;
    let version: u32 = lines.number(n, &f, 0, "format version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let (_, f) = lines.expect("NAME")?;
    let kernel_name = f.join(" ");
    let (n, f) = lines.expect("WARPS_PER_TB")?;
    let warps_per_tb: usize = lines.number(n, &f, 0, "warp count")?;
    let (n, f) = lines.expect("RESOURCES")?;
    let resources = TbResources {
        registers: lines.number(n, &f, 0, "register demand")?,
        shared_mem: lines.number(n, &f, 1, "shared-memory demand")?,
    };
    let (n, f) = lines.expect("SALT")?;
    let addr_salt: u64 = lines.number(n, &f, 0, "salt")?;
    let (n, f) = lines.expect("TBS")?;
    let num_tbs: usize = lines.number(n, &f, 0, "TB count")?;

    let mut tbs = Vec::with_capacity(num_tbs);
    for t in 0..num_tbs {
        let (n, f) = lines.expect("TB")?;
        let id: usize = lines.number(n, &f, 0, "TB id")?;
        if id != t {
            return Err(lines.err(n, format!("expected TB {t}, found TB {id}")));
        }
        let mut warps = Vec::with_capacity(warps_per_tb);
        for w in 0..warps_per_tb {
            let (n, f) = lines.expect("WARP")?;
            let wid: usize = lines.number(n, &f, 0, "warp index")?;
            if wid != w {
                return Err(lines.err(n, format!("expected WARP {w}, found WARP {wid}")));
            }
            let len: usize = lines.number(n, &f, 1, "instruction count")?;
            let mut prog = Vec::with_capacity(len);
            for _ in 0..len {
                let (n, f) = lines.expect("INSTR")?;
                let instr = parse_instr(&f).map_err(|m| lines.err(n, m))?;
                instr.validate().map_err(|m| lines.err(n, m))?;
                prog.push(instr);
            }
            warps.push(prog);
        }
        tbs.push(TbSpec { warps });
    }
    lines.expect("END")?;
    if let Some((n, l)) = lines.iter.next() {
        return Err(lines.err(n, format!("trailing content after END: `{l}`")));
    }
    let spec = KernelSpec {
        name: kernel_name,
        warps_per_tb,
        resources,
        addr_salt,
        tbs,
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_instr(fields: &[&str]) -> Result<Instruction, String> {
    let kind: InstrKind = fields.first().ok_or("missing instruction kind")?.parse()?;
    let mut instr = Instruction::new(kind);
    let reg = |v: &str| v.parse::<u8>().map_err(|_| format!("invalid register `{v}`"));
    for field in &fields[1..] {
        if *field == "div" {
            instr.divergent = true;
            continue;
        }
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("unexpected token `{field}`"))?;
        match key {
            "lat" => {
                instr.latency_class = value
                    .parse()
                    .map_err(|_| format!("invalid latency class `{value}`"))?
            }
            "dst" => instr.dest = Some(reg(value)?),
            "src" => {
                instr.srcs = value.split(',').map(reg).collect::<Result<_, _>>()?;
            }
            "loc" => instr.locality = Some(parse_loc(value)?),
            _ => return Err(format!("unknown attribute `{key}`")),
        }
    }
    Ok(instr)
}

fn parse_loc(value: &str) -> Result<LocalityTag, String> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("locality `{value}` needs pattern,param,region,ordinal"));
    }
    let num = |s: &str| s.parse::<u32>().map_err(|_| format!("invalid number `{s}` in locality"));
    let param = num(parts[1])?;
    let pattern = match parts[0] {
        "stream" => AccessPattern::Stream { stride: param },
        "reuse" => AccessPattern::Reuse { window: param },
        "random" => AccessPattern::Random { pool: param },
        p => return Err(format!("unknown access pattern `{p}` (valid: stream, reuse, random)")),
    };
    Ok(LocalityTag {
        pattern,
        region: parts[2]
            .parse()
            .map_err(|_| format!("invalid region `{}`", parts[2]))?,
        ordinal: num(parts[3])?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> KernelSpec {
        let prog = vec![
            Instruction::new(InstrKind::GlobalMem)
                .with_dest(1)
                .with_locality(LocalityTag {
                    pattern: AccessPattern::Reuse { window: 4 },
                    region: 2,
                    ordinal: 7,
                }),
            Instruction::new(InstrKind::Sp).with_dest(2).with_srcs(&[1]).divergent(true),
            Instruction::barrier(),
            Instruction::new(InstrKind::Sfu),
        ];
        KernelSpec::uniform(
            "tiny kernel",
            2,
            2,
            TbResources {
                registers: 512,
                shared_mem: 64,
            },
            prog,
        )
    }

    #[test]
    fn save_then_load_is_identity() {
        let k = small();
        let text = to_text(&k);
        assert_eq!(from_text(&text, "mem").unwrap(), k);
    }

    #[test]
    fn truncated_file_names_line() {
        let text = to_text(&small());
        let cut: Vec<&str> = text.lines().take(10).collect();
        let err = from_text(&cut.join("\n"), "k.txt").unwrap_err();
        assert!(err.to_string().starts_with("k.txt:11: unexpected end of file"), "{err}");
    }

    #[test]
    fn unknown_kind_lists_valid_kinds() {
        let text = to_text(&small()).replacen("INSTR SFU", "INSTR FMA", 1);
        let err = from_text(&text, "k").unwrap_err().to_string();
        assert!(err.contains("unknown instruction kind `FMA`"), "{err}");
        assert!(err.contains("SP, SFU, GMEM, STC, BAR"), "{err}");
    }

    #[test]
    fn version_mismatch() {
        let text = to_text(&small()).replacen("WSKERNEL 1", "WSKERNEL 9", 1);
        assert!(matches!(
            from_text(&text, "k"),
            Err(Error::Version { found: 9, expected: 1 })
        ));
    }
}
