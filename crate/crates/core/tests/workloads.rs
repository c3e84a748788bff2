use replisim_core::model::{RequestKind, SystemConfig};
use replisim_core::workload::{
    fixture_sequence, fixture_sequences, gen_fixed, gen_random, load_sequence, parse_sequence, save_sequence,
    SequenceError, WorkloadMode, WorkloadSpec,
};

fn read_fraction(seq: &[replisim_core::Request]) -> f64 {
    seq.iter().filter(|r| r.kind == RequestKind::Read).count() as f64 / seq.len() as f64
}

#[test]
fn degenerate_probabilities() {
    let cfg = SystemConfig::standard();
    for seed in 0..10 {
        let reads = gen_random(&WorkloadSpec::new(&cfg, WorkloadMode::RandomSize, 100, 1.0, seed)).unwrap();
        assert!(reads.iter().all(|r| r.kind == RequestKind::Read));
        let writes = gen_random(&WorkloadSpec::new(&cfg, WorkloadMode::RandomSize, 100, 0.0, seed)).unwrap();
        assert!(writes.iter().all(|r| r.kind == RequestKind::Write));
    }
    let one = gen_fixed(&WorkloadSpec::new(&cfg, WorkloadMode::FixedSize, 1, 1.0, 3)).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].kind, RequestKind::Read);
}

#[test]
fn fixed_lengths() {
    let cfg = SystemConfig::standard();
    for n in [100, 1000] {
        for p in [0.1, 0.5, 0.9] {
            assert_eq!(gen_fixed(&WorkloadSpec::new(&cfg, WorkloadMode::FixedSize, n, p, 9)).unwrap().len(), n);
        }
    }
}

#[test]
fn read_fraction_within_three_sigma() {
    let cfg = SystemConfig::standard();
    let n = 10_000;
    let sigma = (0.25 / n as f64).sqrt();
    for seed in 0..5 {
        let seq = gen_fixed(&WorkloadSpec::new(&cfg, WorkloadMode::FixedSize, n, 0.5, seed)).unwrap();
        assert!((read_fraction(&seq) - 0.5).abs() <= 3.0 * sigma, "seed {seed}");
    }
}

#[test]
fn mean_read_fraction_over_seeds() {
    let cfg = SystemConfig::standard();
    let mean: f64 = (0..100)
        .map(|seed| read_fraction(&gen_random(&WorkloadSpec::new(&cfg, WorkloadMode::RandomSize, 100, 0.5, seed)).unwrap()))
        .sum::<f64>()
        / 100.0;
    assert!((0.47..=0.53).contains(&mean), "{mean}");
}

#[test]
fn generation_is_seed_deterministic() {
    let cfg = SystemConfig::standard();
    let spec = WorkloadSpec::new(&cfg, WorkloadMode::RandomSize, 100, 0.3, 42);
    assert_eq!(gen_random(&spec).unwrap(), gen_random(&spec).unwrap());
    let other = WorkloadSpec { seed: 43, ..spec.clone() };
    assert_ne!(gen_random(&spec).unwrap(), gen_random(&other).unwrap());
}

#[test]
fn fixtures() {
    let cfg = SystemConfig::standard();
    let all = fixture_sequences(&cfg).unwrap();
    let names: Vec<&str> = all.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["A", "B", "C", "D", "E", "F"]);
    let lens: Vec<usize> = all.iter().map(|f| f.requests.len()).collect();
    assert_eq!(lens, [22, 11, 20, 12, 15, 11]);
    for f in &all {
        for r in &f.requests {
            assert!(!r.requester.is_server() && r.requester.index() < 7);
            assert!(r.object.index() < 5);
        }
    }
    let b = fixture_sequence(&cfg, "b").unwrap().unwrap();
    let text: Vec<String> = b.requests.iter().map(|r| cfg.display_request(r)).collect();
    assert_eq!(
        text,
        [
            "R p3 o2", "W p6 o4", "R p3 o4", "W p2 o4", "R p5 o4", "W p1 o5", "W p3 o2", "R p6 o2", "R p5 o3", "R p4 o3",
            "W p3 o2"
        ]
    );
    assert_eq!((b.reference_orad, b.reference_adrw), (180, 188));
    let sum = |f: fn(&replisim_core::workload::FixtureSequence) -> u64| all.iter().map(f).sum::<u64>();
    assert_eq!(sum(|f| f.reference_orad), 1594);
    assert_eq!(sum(|f| f.reference_adrw), 1690);
}

#[test]
fn sequence_file_round_trip() {
    let cfg = SystemConfig::standard();
    let seq = gen_fixed(&WorkloadSpec::new(&cfg, WorkloadMode::FixedSize, 1000, 0.5, 5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seq.txt");
    save_sequence(&cfg, &seq, &path).unwrap();
    assert_eq!(load_sequence(&cfg, &path).unwrap(), seq);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let cfg = SystemConfig::standard();
    assert!(parse_sequence(&cfg, "").unwrap().is_empty());
    assert!(parse_sequence(&cfg, "# only a comment\n\n").unwrap().is_empty());

    let err = parse_sequence(&cfg, "R p1 o1\nX p1 o1\n").unwrap_err();
    assert!(matches!(err, SequenceError::Parse { line: 2, .. }), "{err}");

    let err = parse_sequence(&cfg, "R p1 o1\n# note\nW p9 o1\n").unwrap_err();
    assert!(matches!(err, SequenceError::UnknownNode { line: 3, .. }), "{err}");
    assert!(err.to_string().contains("p9"));

    let err = parse_sequence(&cfg, "R p1 o7\n").unwrap_err();
    assert!(matches!(err, SequenceError::UnknownObject { line: 1, .. }));

    let err = parse_sequence(&cfg, "R p1\n").unwrap_err();
    assert_eq!(err.line(), Some(1));

    // s2 does not serve o1 in the standard layout
    let err = parse_sequence(&cfg, "R s2 o1\n").unwrap_err();
    assert!(matches!(err, SequenceError::Invalid { line: 1, .. }));
}
