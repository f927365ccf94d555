//! Round trips of every on-disk format.

use std::path::Path;

use proptest::prelude::*;
use robreg::config::MAX_SEED;
use robreg::instance_io::{
    instance_csv, metadata_for, metadata_toml, parse_instance_csv, parse_metadata, read_instance, write_instance,
};
use robreg::report::{rows_from_csv, rows_to_csv, ReplicateRow};
use robreg::Config;
use robreg_core::datagen::generate;
use robreg_core::{Matrix, RegressionInstance};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e3f64..1e3,
        Just(0.0),
        Just(-0.0),
    ]
}

fn row() -> impl Strategy<Value = ReplicateRow> {
    (
        (
            any::<usize>(),
            any::<u64>(),
            0usize..100_000,
            0usize..1000,
            0usize..100,
            0usize..100_000,
        ),
        ("[a-z_]{1,12}", "[a-z_]{1,12}", "robust|lasso|huber_lasso_unweighted"),
        (proptest::option::of(finite()), any::<bool>(), 0.0f64..1e4),
        proptest::option::of("[ -~\n]{1,40}"),
    )
        .prop_map(
            |((cell, seed, n, d, s, o), (law, contamination, estimator), (err, success, wall), error)| ReplicateRow {
                suite: "o_scaling".into(),
                cell,
                seed,
                n,
                d,
                s,
                o,
                covariate_law: law,
                contamination,
                estimator,
                l2_error: err,
                success,
                wall_time: wall,
                error,
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn report_rows_round_trip(rows in proptest::collection::vec(row(), 0..20)) {
        let text = rows_to_csv(&rows).unwrap();
        prop_assert_eq!(rows_from_csv(&text).unwrap(), rows);
    }

    #[test]
    fn instance_csv_round_trips_bitwise(n in 1usize..20, d in 3usize..6, data in proptest::collection::vec(finite(), 200)) {
        let y: Vec<f64> = data[..n].to_vec();
        let x = Matrix::from_vec(n, d, data[n..n + n * d].to_vec()).unwrap();
        let inst = RegressionInstance::new(y.clone(), x.clone(), None).unwrap();
        let (y2, x2, flags) = parse_instance_csv(Path::new("p.csv"), &instance_csv(&inst)).unwrap();
        prop_assert_eq!(y2.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), y.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(
            x2.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            x.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        prop_assert!(flags.iter().all(|f| !f));
    }

    #[test]
    fn generated_instances_survive_disk(seed in 0..=MAX_SEED, o in 0usize..30, kind in 0usize..4) {
        let mut config = Config::default();
        config.generate.seed = seed;
        config.generate.n = 60;
        config.generate.d = 5;
        let kinds = ["none", "oblivious", "leverage", "adaptive_response"];
        let text = format!("[generate]\ncontamination = \"{}\"\no = {}\n", kinds[kind], if kind == 0 { 0 } else { o });
        config.generate = Config::parse(&text).unwrap().generate;
        config.generate.seed = seed;
        let spec = config.generate.to_spec().unwrap();
        let generated = generate(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.csv");
        write_instance(&path, &generated.instance, Some(&config.generate), false).unwrap();
        let file = read_instance(&path).unwrap();
        prop_assert_eq!(&file.instance, &generated.instance);
        let meta = file.metadata.unwrap();
        prop_assert_eq!(meta.generate.as_ref().unwrap().to_spec().unwrap(), spec);
        let toml = metadata_toml(&metadata_for(&generated.instance, Some(&config.generate))).unwrap();
        prop_assert_eq!(parse_metadata(Path::new("i.toml"), &toml).unwrap(), meta);
    }
}

#[test]
fn config_round_trips_through_toml() {
    let mut c = Config::default();
    c.generate.n = 321;
    c.tuning.c_o = 2.5;
    c.bench.o_values = Some(vec![0, 7]);
    c.output.record_timings = false;
    let text = toml::to_string(&c).unwrap();
    assert_eq!(Config::parse(&text).unwrap(), c);
    assert_eq!(Config::parse("").unwrap(), Config::default());
}

#[test]
fn seeds_beyond_toml_range_are_rejected() {
    let mut c = Config::default();
    c.generate.seed = MAX_SEED + 1;
    assert!(c.generate.to_spec().unwrap_err().to_string().contains("generate.seed"));
}

#[test]
fn metadata_errors_carry_lines() {
    let err = parse_metadata(Path::new("m.toml"), "n = 3\nd = 3\nbogus = 1\n").unwrap_err();
    assert!(err.to_string().starts_with("m.toml:3:"), "{err}");
}
