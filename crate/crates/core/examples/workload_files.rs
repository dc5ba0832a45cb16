//! Build a kernel from a custom TOML template, write it in the text kernel
//! format, read it back and show the first lines of the file.

use warpsched::workload::{generate, load, save, KernelTemplate};
use warpsched::Error;

const TEMPLATE: &str = r#"
name = "custom_reuse"
num_tbs = 12
warps_per_tb = 4
instr_count = 60
dependency_density = 0.4
divergence_prob = 0.05
barrier_every = 20
seed = 11

[mix]
sp = 0.55
sfu = 0.1
global_mem = 0.25
stc_mem = 0.1

[global_locality]
regions = 2
pattern = { kind = "reuse", window = 4 }

[resources]
registers = 1024
shared_mem = 2048
"#;

fn main() -> warpsched::Result<()> {
    let t = KernelTemplate::from_toml(TEMPLATE)?;
    let kernel = generate(&t)?;

    let dir = std::env::temp_dir().join("warpsched-workload-example");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join("custom_reuse.kernel");
    save(&kernel, &path)?;
    assert_eq!(load(&path)?, kernel);

    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    println!("{} ({} lines)", path.display(), text.lines().count());
    for line in text.lines().take(12) {
        println!("  {line}");
    }
    Ok(())
}
