//! Measures world enumeration with one worker against the default pool.
//!
//! Both fixtures are choice-heavy: `scale` has twelve independent ground
//! choice points, `mail_cand` a single select over hundreds of tuples.

use causalog::ast::validate_theory;
use causalog::structures::load_structure;
use causalog::{enumerate_models, parse_theory, Budget};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::fs;
use std::path::PathBuf;

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name);
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("read {}: {e}", p.display()))
}

fn bench_enumeration(c: &mut Criterion) {
    let cases = [
        ("scale", "scale.foc", "scale.json"),
        ("mail_cand", "mail_cand.foc", "mail_two.json"),
    ];
    let mut group = c.benchmark_group("enumerate");
    group.sample_size(10);
    for (label, tf, sf) in cases {
        let t = parse_theory(&corpus(tf)).unwrap();
        validate_theory(&t).unwrap();
        let s = load_structure(&corpus(sf), &t).unwrap();
        for (arm, jobs) in [("jobs-1", Some(1)), ("parallel", None)] {
            let budget = Budget { jobs, ..Budget::default() };
            group.bench_with_input(
                BenchmarkId::new(label, arm),
                &budget,
                |b, budget| {
                    b.iter(|| {
                        let set = enumerate_models(&t, &s, budget).unwrap();
                        assert!(!set.budget_hit);
                        set.models.len()
                    })
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_enumeration);
criterion_main!(benches);
