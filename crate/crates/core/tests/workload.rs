use proptest::prelude::*;
use warpsched::sim::InstrKind;
use warpsched::workload::{
    from_text, generate, load, save, standard_suite, template, template_names, to_text, KernelTemplate, Mix,
};
use warpsched::Error;

fn kind_counts(t: &KernelTemplate) -> [usize; 5] {
    let k = generate(t).unwrap();
    let mut c = [0; 5];
    for i in k.program(0, 0) {
        c[InstrKind::ALL.iter().position(|&x| x == i.kind).unwrap()] += 1;
    }
    c
}

#[test]
fn instruction_mix_follows_binomial() {
    let mut t = template("compute_sfu").unwrap();
    t.instr_count = 20_000;
    t.barrier_every = None;
    t.mix = Mix {
        sp: 0.5,
        sfu: 0.2,
        global_mem: 0.2,
        stc_mem: 0.1,
    };
    for seed in 0..5 {
        t.seed = seed;
        let c = kind_counts(&t);
        let n = t.instr_count as f64;
        for (i, p) in t.mix.weights().iter().enumerate() {
            let sd = (n * p * (1.0 - p)).sqrt();
            assert!(
                (c[i] as f64 - n * p).abs() <= 3.0 * sd,
                "seed {seed} kind {i}: {} vs {}",
                c[i],
                n * p
            );
        }
        assert_eq!(c[4], 0);
    }
}

#[test]
fn pure_sp_mix_has_only_sp() {
    let mut t = template("compute_sp").unwrap();
    t.mix = Mix {
        sp: 1.0,
        sfu: 0.0,
        global_mem: 0.0,
        stc_mem: 0.0,
    };
    t.barrier_every = None;
    assert_eq!(kind_counts(&t), [t.instr_count, 0, 0, 0, 0]);
}

#[test]
fn barriers_align_across_a_tb() {
    let k = generate(&template("barrier_heavy").unwrap()).unwrap();
    for tb in &k.tbs {
        let positions = |p: &Vec<warpsched::sim::Instruction>| -> Vec<usize> {
            p.iter().enumerate().filter(|(_, i)| i.kind == InstrKind::Barrier).map(|(j, _)| j).collect()
        };
        let first = positions(&tb.warps[0]);
        assert!(!first.is_empty());
        for w in &tb.warps {
            assert_eq!(w.len(), tb.warps[0].len());
            assert_eq!(positions(w), first);
        }
    }
}

#[test]
fn generation_is_deterministic_in_the_seed() {
    let t = template("divergent").unwrap();
    assert_eq!(generate(&t).unwrap(), generate(&t).unwrap());
    let mut other = t.clone();
    other.seed ^= 1;
    assert_ne!(generate(&t).unwrap(), generate(&other).unwrap());
}

#[test]
fn suite_covers_the_workload_classes() {
    let names = template_names();
    assert!(standard_suite().len() >= 12);
    for n in ["compute_sp", "mem_stream", "mem_reuse", "barrier_heavy", "divergent", "few_tb", "many_small_tb"] {
        assert!(names.iter().any(|x| x == n), "{n}");
    }
    for t in standard_suite() {
        t.validate().unwrap();
        let back = KernelTemplate::from_toml(&t.to_toml()).unwrap();
        assert_eq!(back, t);
    }
}

#[test]
fn invalid_templates_are_rejected() {
    let mut t = template("barrier_heavy").unwrap();
    t.barrier_every = Some(t.instr_count);
    assert!(matches!(generate(&t), Err(Error::Template(_))));
    let mut t = template("mem_stream").unwrap();
    t.mix.sp += 0.5;
    assert!(matches!(generate(&t), Err(Error::Template(_))));
}

#[test]
fn file_round_trip() {
    let k = generate(&template("divergent").unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.kernel");
    save(&k, &path).unwrap();
    assert_eq!(load(&path).unwrap(), k);
}

#[test]
fn malformed_files_report_the_line() {
    let k = generate(&template("few_tb").unwrap()).unwrap();
    let text = to_text(&k);

    let lines: Vec<&str> = text.lines().collect();
    let truncated = lines[..lines.len() / 2].join("\n");
    assert!(matches!(from_text(&truncated, "t"), Err(Error::Parse { .. })));

    let bad = text.replacen("INSTR SP", "INSTR FMA", 1);
    let line = text.lines().position(|l| l.starts_with("INSTR SP")).unwrap() + 1;
    match from_text(&bad, "t") {
        Err(Error::Parse { line: l, msg, .. }) => {
            assert_eq!(l, line);
            assert!(msg.contains("FMA"), "{msg}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }

    let newer = text.replacen("WSKERNEL 1", "WSKERNEL 2", 1);
    assert!(matches!(from_text(&newer, "t"), Err(Error::Version { found: 2, .. })));
    assert!(from_text(&format!("{text}INSTR SP\n"), "t").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn text_format_round_trips(
        tbs in 1usize..6,
        wpt in 1usize..5,
        instrs in 1usize..40,
        mem in 0.0f64..0.5,
        stc in 0.0f64..0.3,
        deps in 0.0f64..1.0,
        div in 0.0f64..0.5,
        seed in any::<u64>(),
        pattern in 0u8..3,
    ) {
        let mut t = template("mem_reuse").unwrap();
        t.num_tbs = tbs;
        t.warps_per_tb = wpt;
        t.instr_count = instrs;
        t.mix = Mix { sp: 1.0 - mem - stc, sfu: 0.0, global_mem: mem, stc_mem: stc };
        t.dependency_density = deps;
        t.divergence_prob = div;
        t.barrier_every = (instrs > 4).then_some(instrs / 2);
        t.global_locality.pattern = match pattern {
            0 => warpsched::sim::AccessPattern::Stream { stride: 64 },
            1 => warpsched::sim::AccessPattern::Reuse { window: 3 },
            _ => warpsched::sim::AccessPattern::Random { pool: 512 },
        };
        t.seed = seed;
        let k = generate(&t).unwrap();
        let back = from_text(&to_text(&k), "prop").unwrap();
        prop_assert_eq!(back, k);
    }
}
