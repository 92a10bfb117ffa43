use scatter_cs::harness::{run, ExperimentConfig, ExperimentKind, Table};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(kind);
    c.trials = 4;
    c.seed = 17;
    match kind {
        ExperimentKind::Dt => c.omega = vec![5.0, 10.0],
        ExperimentKind::Resonance => c.trials = 2,
        _ => c.side = c.side.min(6),
    }
    c
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn every_kind_produces_a_rectangular_table() {
    for kind in ExperimentKind::ALL {
        let t = run(&small(kind)).unwrap_or_else(|e| panic!("{kind}: {e}"));
        assert_eq!(t.experiment, kind.to_string());
        assert!(!t.rows.is_empty(), "{kind}");
        assert!(t.rows.iter().all(|r| r.len() == t.columns.len()), "{kind}");
    }
}

#[test]
fn csv_round_trips_and_is_thread_independent() {
    for kind in [ExperimentKind::Coherence, ExperimentKind::Recovery, ExperimentKind::Reciprocity] {
        let cfg = small(kind);
        let a = in_pool(1, || run(&cfg).unwrap().to_csv().unwrap());
        let b = in_pool(3, || run(&cfg).unwrap().to_csv().unwrap());
        assert_eq!(a, b, "{kind}");
        let back = Table::from_csv(&a).unwrap();
        assert_eq!(back.to_csv().unwrap(), a);
    }
}

#[test]
fn seed_changes_the_draws() {
    let mut cfg = small(ExperimentKind::Coherence);
    let a = run(&cfg).unwrap();
    cfg.seed += 1;
    let b = run(&cfg).unwrap();
    let mu = a.column("mu").unwrap();
    assert_ne!(a.rows[0][mu], b.rows[0][mu]);
}

#[test]
fn summary_counts_match_trial_flags() {
    let t = run(&small(ExperimentKind::Coherence)).unwrap();
    let (rec, pass, passes) = (t.column("record").unwrap(), t.column("pass").unwrap(), t.column("passes").unwrap());
    let flagged = t.rows.iter().filter(|r| r[rec] == "trial" && r[pass] == "true").count();
    let summary = t.rows.iter().find(|r| r[rec] == "summary").unwrap();
    assert_eq!(summary[passes], flagged.to_string());
}

#[test]
fn config_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let text = format!(
        "[experiment]\nkind = \"mc-recovery\"\ntrials = 3\nseed = 9\noutput = {:?}\n\
         [lattice]\nside = 5\n[sensors]\nn = 12\np = 3\n[target]\nsparsity = [1, 2]\n[physics]\nomega = 15.0\n",
        out.to_str().unwrap()
    );
    let cfg = ExperimentConfig::from_toml(&text, ExperimentKind::Coherence).unwrap();
    assert_eq!(cfg.kind, ExperimentKind::Recovery);
    let t = run(&cfg).unwrap();
    t.write(cfg.output.as_deref().unwrap()).unwrap();
    let back = Table::from_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rec = back.column("record").unwrap();
    assert_eq!(back.rows.iter().filter(|r| r[rec] == "trial").count(), 6);
    assert_eq!(back.rows.iter().filter(|r| r[rec] == "summary").count(), 2);
}

#[test]
fn invalid_configs_are_config_errors() {
    for text in [
        "[lattice]\ndim = 4\n",
        "[physics]\nomega = [10.0, -5.0]\n",
        "[target]\nsparsity = 1000\n",
        "[experiment]\nmodel = \"exact\"\n",
        "[bogus]\nx = 1\n",
    ] {
        let err = ExperimentConfig::from_toml(text, ExperimentKind::Recovery)
            .and_then(|c| c.validate().map(|_| c))
            .unwrap_err();
        assert!(err.is_config(), "{text}: {err}");
    }
}
