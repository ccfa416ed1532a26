use truthdiscover::eval::{generate, SynthConfig};
use truthdiscover::pipeline::assemble;
use truthdiscover::rdf::SourcePolicy;

#[test]
fn every_gold_value_is_a_candidate() {
    for seed in 0..3 {
        let synth = generate(&SynthConfig { seed, n_entities: 200, ..Default::default() }).unwrap();
        let corpus = assemble(&synth.statements, SourcePolicy::Host, None);
        assert_eq!(corpus.store.conflict_sets().len(), synth.gold.len());
        for ((entity, predicate), truth) in synth.gold.iter() {
            let set = corpus.store.find_conflict(entity, predicate).expect("gold key has a conflict set");
            assert!(set.len() >= 2);
            assert!(set.values().any(|v| v == truth), "{entity} {predicate}: {truth} missing");
        }
    }
}

#[test]
fn claim_counts_are_heavy_tailed() {
    let synth = generate(&SynthConfig::default()).unwrap();
    let mut counts = synth.conflict_claims.clone();
    counts.sort_unstable();
    let total: usize = counts.iter().sum();
    let median = counts[counts.len() / 2];
    let mean = total as f64 / counts.len() as f64;
    let top_tenth: usize = counts.iter().rev().take(counts.len() / 10).sum();
    assert!((median as f64) < mean / 2.0, "median {median}, mean {mean}");
    assert!(top_tenth * 2 > total, "top 10% hold {top_tenth} of {total}");
}

#[test]
fn seed_fixes_everything() {
    let cfg = SynthConfig { n_entities: 80, seed: 9, ..Default::default() };
    let (a, b) = (generate(&cfg).unwrap(), generate(&cfg).unwrap());
    let text = |c: &truthdiscover::eval::SynthCorpus| {
        let mut buf = Vec::new();
        c.write_ntriples(&mut buf).unwrap();
        c.gold.write_tsv(&mut buf).unwrap();
        buf
    };
    assert_eq!(text(&a), text(&b));
}

#[test]
fn noiseless_sources_always_agree_with_gold() {
    let cfg = SynthConfig { n_entities: 50, reliability_range: (1.0, 1.0), ..Default::default() };
    let synth = generate(&cfg).unwrap();
    let corpus = assemble(&synth.statements, SourcePolicy::Host, None);
    // perfectly reliable sources never disagree, except where the generator
    // has to inject one false value to make a conflict
    for set in corpus.store.conflict_sets() {
        let truth = synth.gold.get(&set.entity, &set.predicate).unwrap();
        let gold_support = set.objects.iter().find(|o| &o.value == truth).unwrap().sources.len();
        let other: usize = set.objects.iter().filter(|o| &o.value != truth).map(|o| o.sources.len()).sum();
        assert!(gold_support >= 1 && other >= 1);
    }
}
