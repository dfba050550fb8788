//! Relocation-candidate analysis over a large synthetic codebase: rayon
//! data-parallel path vs the sequential fallback. Run with
//! `cargo bench -p microsplit-core`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use microsplit_core::facts::{parse_facts, CodeFacts};
use microsplit_core::isolation::{
    relocation_candidates, relocation_candidates_sequential, Policy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A deterministic codebase of `n_classes` classes spread over 8 clusters,
/// each with ~30 members, dense intra-class edges (so components are
/// non-trivial) and a sprinkling of cross-class calls.
fn synthetic_facts(n_classes: usize) -> CodeFacts {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut doc = serde_json::json!({
        "clusters": (0..8).map(|i| format!("k{i}")).collect::<Vec<_>>(),
        "classes": [],
        "calls": [],
        "accesses": []
    });
    for c in 0..n_classes {
        let methods: Vec<_> = (0..20).map(|m| serde_json::json!({"name": format!("m{m}")})).collect();
        let fields: Vec<_> = (0..10)
            .map(|f| serde_json::json!({"name": format!("f{f}"), "type": {"kind": "primitive"}}))
            .collect();
        doc["classes"].as_array_mut().unwrap().push(serde_json::json!({
            "name": format!("C{c}"),
            "cluster": format!("k{}", c % 8),
            "fields": fields,
            "methods": methods
        }));
    }
    let calls = doc["calls"].as_array_mut().unwrap();
    for c in 0..n_classes {
        for _ in 0..40 {
            let from = format!("C{c}.m{}/0", rng.gen_range(0..20));
            if rng.gen_bool(0.8) {
                calls.push(serde_json::json!({"from": from, "to": format!("C{c}.m{}/0", rng.gen_range(0..20))}));
            } else {
                let other = rng.gen_range(0..n_classes);
                calls.push(serde_json::json!({"from": from, "to": format!("C{other}.m{}/0", rng.gen_range(0..20))}));
            }
        }
    }
    let accesses = doc["accesses"].as_array_mut().unwrap();
    for c in 0..n_classes {
        for _ in 0..15 {
            accesses.push(serde_json::json!({
                "from": format!("C{c}.m{}/0", rng.gen_range(0..20)),
                "field": format!("C{c}.f{}", rng.gen_range(0..10)),
                "mode": "read"
            }));
        }
    }
    parse_facts(&doc.to_string()).expect("synthetic facts parse")
}

fn bench_relocation(c: &mut Criterion) {
    let mut group = c.benchmark_group("relocation_candidates");
    for n_classes in [50usize, 200, 800] {
        let facts = synthetic_facts(n_classes);
        group.bench_with_input(BenchmarkId::new("parallel", n_classes), &facts, |b, facts| {
            b.iter(|| relocation_candidates(facts, Policy::PaperSimple))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n_classes), &facts, |b, facts| {
            b.iter(|| relocation_candidates_sequential(facts, Policy::PaperSimple))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_relocation);
criterion_main!(benches);
