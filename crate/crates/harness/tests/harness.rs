use std::fs;

use dldl::metrics::{baseline_recover, chebyshev, Metric};
use dldl::{fit, Distributions, Features, HyperParams, OneErrorVariant};
use dldl_harness::{
    binarize, grid_search, load_dataset, read_report, run_experiment, split, synth_dataset, with_binarized_labels,
    write_dataset, write_report, DatasetFormat, ExperimentConfig, GridSpec, HarnessError, LdlDataset, ReportFormat,
    SplitSpec, SynthSpec,
};
use ndarray::{array, Array2};

fn quick_params(seed: u64) -> HyperParams {
    HyperParams { k_neighbors: 5, outer_iters: 2, admm_max_iters: 30, seed, ..HyperParams::default() }
}

fn labelled_synth(n: usize, m: usize, c: usize, seed: u64) -> LdlDataset {
    with_binarized_labels(&synth_dataset(&SynthSpec::new(n, m, c, seed)).unwrap(), 0.01).unwrap()
}

fn small_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        grid: GridSpec::single(1.0, 0.01, 0.1),
        params: quick_params(seed),
        ..ExperimentConfig::new(seed)
    }
}

#[test]
fn load_dataset_examples() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.csv");
    fs::write(&ok, "f0,f1,d0,d1\n0.5,1.0,0.25,0.75\n-1,2,1.0,0.0\n").unwrap();
    let ds = load_dataset(&ok, DatasetFormat::CsvLd).unwrap();
    assert_eq!(ds.n_samples(), 2);
    assert!(ds.d_true.is_some());

    let bad_sum = dir.path().join("sum.csv");
    fs::write(&bad_sum, "f0,d0,d1\n0.5,0.5,0.4\n").unwrap();
    assert!(matches!(load_dataset(&bad_sum, DatasetFormat::CsvLd), Err(HarnessError::RowSumViolation { .. })));

    let zero = dir.path().join("zero.csv");
    fs::write(&zero, "f0,y0,y1,y2\n0.5,1,0,0\n0.1,0,0,0\n").unwrap();
    assert!(matches!(load_dataset(&zero, DatasetFormat::CsvLogical), Err(HarnessError::AllZeroLabelRow { .. })));
}

#[test]
fn dataset_round_trips_through_csv() {
    let ds = labelled_synth(20, 3, 4, 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.csv");
    write_dataset(&ds, &path).unwrap();
    let back = load_dataset(&path, DatasetFormat::CsvLd).unwrap();
    assert_eq!(back.x, ds.x);
    assert_eq!(back.y, ds.y);
    let (a, b) = (back.d_true.unwrap(), ds.d_true.unwrap());
    for (u, v) in a.values().iter().zip(b.values().iter()) {
        assert!((u - v).abs() <= 1e-15);
    }
}

#[test]
fn binarize_examples() {
    let d = Distributions::new(array![[0.5, 0.495, 0.005], [0.2, 0.2, 0.6]]).unwrap();
    assert_eq!(binarize(&d, 0.01).unwrap().values(), array![[1, 1, 0], [1, 1, 1]]);
    let strict = Distributions::new(array![[0.01, 0.99]]).unwrap();
    assert_eq!(binarize(&strict, 0.01).unwrap().values(), array![[0, 1]]);
    let uniform = Distributions::new(Array2::from_elem((1, 5), 0.2)).unwrap();
    assert_eq!(binarize(&uniform, 0.01).unwrap().values(), Array2::<u8>::ones((1, 5)));
}

#[test]
fn split_partitions_samples() {
    let ds = labelled_synth(10, 2, 3, 0);
    let (train, val, test) = split(&ds, &SplitSpec::new(0)).unwrap();
    assert_eq!((train.n_samples(), val.n_samples(), test.n_samples()), (6, 2, 2));
    let again = split(&ds, &SplitSpec::new(0)).unwrap();
    assert_eq!(again.0, train);
    assert_eq!(again.2, test);

    let (i_train, i_val, i_test) = SplitSpec::new(3).indices(23).unwrap();
    let mut all: Vec<usize> = i_train.into_iter().chain(i_val).chain(i_test).collect();
    all.sort_unstable();
    assert_eq!(all, (0..23).collect::<Vec<_>>());

    let five = labelled_synth(5, 2, 3, 1);
    let (a, b, c) = split(&five, &SplitSpec::new(1)).unwrap();
    assert_eq!((a.n_samples(), b.n_samples(), c.n_samples()), (3, 1, 1));
    let four = labelled_synth(4, 2, 3, 1);
    assert!(matches!(split(&four, &SplitSpec::new(1)), Err(HarnessError::TooFewSamples(4))));
}

#[test]
fn sparsified_truth_zeros_are_logical_zeros() {
    let ds = labelled_synth(60, 4, 5, 8);
    let y = ds.y.as_ref().unwrap();
    for (d, l) in ds.d_true.as_ref().unwrap().values().iter().zip(y.values().iter()) {
        assert_eq!(*d == 0.0, *l == 0);
    }
}

#[test]
fn recovered_zeros_follow_ground_truth_zeros() {
    let ds = labelled_synth(40, 4, 5, 2);
    let y = ds.y.as_ref().unwrap();
    let result = fit(&ds.x, y, &quick_params(2), None).unwrap();
    for (d, t) in result.d.values().iter().zip(ds.d_true.as_ref().unwrap().values().iter()) {
        if *t == 0.0 {
            assert_eq!(*d, 0.0);
        }
    }
}

#[test]
fn single_cell_grid_selects_it() {
    let ds = labelled_synth(40, 3, 4, 1);
    let (train, val, _) = split(&ds, &SplitSpec::new(1)).unwrap();
    let result = grid_search(&train, &val, &GridSpec::single(0.1, 1.0, 10.0), &quick_params(1)).unwrap();
    assert_eq!(result.best_index, [0, 0, 0]);
    assert_eq!((result.best.alpha, result.best.beta, result.best.gamma), (0.1, 1.0, 10.0));
    assert_eq!(result.records.len(), 1);
    assert_eq!(result.records[0].score, Some(result.best_score));
}

#[test]
fn grid_ties_go_to_the_earliest_cell() {
    // One positive label per row pins D, so alpha and beta cannot change the fitted weights.
    let x = Features::new(array![
        [0.0, 0.1], [0.2, 0.0], [0.1, 0.3], [1.0, 1.1], [0.9, 1.2], [1.2, 0.8], [0.5, 0.4], [0.6, 0.7],
    ])
    .unwrap();
    let d = Distributions::new(array![
        [1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0],
    ])
    .unwrap();
    let train = with_binarized_labels(&LdlDataset { name: "t".into(), x: x.clone(), d_true: Some(d.clone()), y: None }, 0.01)
        .unwrap();
    let val = train.clone();
    let grid = GridSpec {
        alpha_grid: vec![10.0, 0.1],
        beta_grid: vec![1.0, 0.5],
        gamma_grid: vec![0.1],
        selection_metric: Metric::Chebyshev,
    };
    let params = HyperParams { k_neighbors: 3, outer_iters: 1, ..HyperParams::default() };
    let result = grid_search(&train, &val, &grid, &params).unwrap();
    let scores: Vec<f64> = result.records.iter().map(|r| r.score.unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] == w[1]), "{scores:?}");
    assert_eq!(result.best_index, [0, 0, 0]);
    assert_eq!(result.best.alpha, 10.0);
}

#[test]
fn grid_result_does_not_depend_on_thread_count() {
    let ds = labelled_synth(40, 3, 4, 6);
    let (train, val, _) = split(&ds, &SplitSpec::new(6)).unwrap();
    let grid = GridSpec {
        alpha_grid: vec![0.01, 1.0],
        beta_grid: vec![0.01, 1.0],
        gamma_grid: vec![0.1, 1.0],
        selection_metric: Metric::Chebyshev,
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| grid_search(&train, &val, &grid, &quick_params(6)).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn default_grid_selects_the_best_validation_cell() {
    let ds = labelled_synth(100, 5, 4, 0);
    let (train, val, _) = split(&ds, &SplitSpec::new(0)).unwrap();
    let params = HyperParams { seed: 0, ..HyperParams::default() };
    let result = grid_search(&train, &val, &GridSpec::default(), &params).unwrap();
    assert_eq!(result.records.len(), 180);
    for rec in &result.records {
        let s = rec.score.expect("every cell fits");
        assert!(result.best_score <= s);
    }
    let first_best = result.records.iter().position(|r| r.score == Some(result.best_score)).unwrap();
    assert_eq!(result.records[first_best].index, result.best_index);
}

#[test]
fn experiment_recovers_positive_top_labels() {
    let ds = synth_dataset(&SynthSpec::new(200, 10, 5, 0)).unwrap();
    let report = run_experiment(&ds, &small_config(0)).unwrap();
    assert_eq!(report.recovery.one_error, 0.0);
    assert_eq!(report.recovery.one_error_variant, OneErrorVariant::Top1Irrelevant);
    assert_eq!(report.split_sizes, [120, 40, 40]);
    assert!(report.timings.is_none());
    for m in Metric::ALL {
        assert!(report.recovery.get(m).is_finite());
        assert!(report.predictive.get(m).is_finite());
    }
}

#[test]
fn experiment_is_reproducible() {
    let ds = synth_dataset(&SynthSpec::new(60, 4, 4, 3)).unwrap();
    let a = run_experiment(&ds, &small_config(3)).unwrap();
    let b = run_experiment(&ds, &small_config(3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn experiment_requires_ground_truth() {
    let ds = labelled_synth(30, 3, 4, 0);
    let no_truth = LdlDataset { d_true: None, ..ds };
    assert!(matches!(run_experiment(&no_truth, &small_config(0)), Err(HarnessError::MissingGroundTruth(_))));
}

#[test]
fn reports_round_trip_and_tabulate() {
    let ds = synth_dataset(&SynthSpec::new(50, 3, 4, 5)).unwrap();
    let cfg = ExperimentConfig { record_timings: true, ..small_config(5) };
    let report = run_experiment(&ds, &cfg).unwrap();
    assert!(report.timings.is_some());
    let dir = tempfile::tempdir().unwrap();

    let path = dir.path().join("report.json");
    write_report(&report, &path, ReportFormat::Text).unwrap();
    assert_eq!(read_report(&path).unwrap(), report);

    let tables = dir.path().join("tables");
    let files = write_report(&report, &tables, ReportFormat::Csv).unwrap();
    assert_eq!(files.len(), 2);
    for f in files {
        let text = fs::read_to_string(f).unwrap();
        let lines: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
        assert_eq!(lines.len(), 3);
        let header = &lines[0];
        assert_eq!(header.len(), 10);
        assert_eq!(header[0], "method");
        assert_eq!(header[9], "avg_rank");
        let value_cols: Vec<usize> = (0..header.len()).filter(|&j| Metric::ALL.iter().any(|m| m.name() == header[j])).collect();
        let value_cells: usize = lines[1..].iter().map(|row| value_cols.iter().filter(|&&j| row[j].parse::<f64>().is_ok()).count()).sum();
        assert_eq!(value_cells, 8);
        assert_eq!(lines[1][0], "dldl");
        assert_eq!(lines[2][0], "baseline");
    }

    assert!(matches!(write_report(&report, "", ReportFormat::Text), Err(HarnessError::Io { .. })));
}

#[test]
fn default_fit_beats_the_baseline() {
    let ds = labelled_synth(200, 10, 5, 0);
    let y = ds.y.as_ref().unwrap();
    let result = fit(&ds.x, y, &HyperParams::default(), None).unwrap();
    let truth = ds.d_true.as_ref().unwrap().values();
    let ours = chebyshev(truth, result.d.values()).unwrap();
    let base = chebyshev(truth, baseline_recover::<f64>(y).values()).unwrap();
    assert!(ours < base, "{ours} vs {base}");
}
