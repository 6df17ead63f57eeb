use ulab::harness::csv::{read_curve_csv, read_sweep_csv, write_curve_csv, write_sweep_csv, SWEEP_HEADER};
use ulab::harness::curve::{curve_matrix_seed, curve_signal_seed};
use ulab::harness::*;
use ulab::lines::{phase_line, LineMethod, SeSettings};
use ulab::rng::{derive, stream};
use ulab::{Error, Status};

fn vamp_bayes() -> SolverSpec {
    SolverSpec::new(SolverKind::Vamp, ModeKind::Bayes)
}

fn small_sweep(seed: u64) -> SweepConfig {
    SweepConfig {
        ensemble: EnsembleSpec::new(EnsembleKind::Gaussian),
        solver: vamp_bayes(),
        n: 120,
        alpha_grid: vec![0.3, 0.7],
        rho_grid: vec![0.1, 0.4],
        runs_per_cell: 3,
        success_mse: 1e-6,
        base_seed: seed,
    }
}

fn csv_bytes(grid: &PhaseGrid) -> Vec<u8> {
    let mut out = Vec::new();
    write_sweep_csv(grid, &mut out).unwrap();
    out
}

#[test]
fn easy_cell_always_succeeds() {
    let cfg = SweepConfig {
        alpha_grid: vec![0.99],
        rho_grid: vec![0.1],
        n: 200,
        ..small_sweep(1)
    };
    let grid = sweep(&cfg).unwrap();
    let c = grid.cell(0, 0);
    assert_eq!((c.runs, c.errors), (3, 0));
    assert_eq!(c.success_fraction, 1.0);
    assert_eq!(c.failure_fraction, 0.0);
    assert!(c.mean_mse < 1e-10 && c.median_mse <= c.mean_mse * 3.0 + 1e-30);
}

#[test]
fn sweep_output_is_reproducible() {
    let a = sweep(&small_sweep(7)).unwrap();
    let b = sweep(&small_sweep(7)).unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| sweep(&small_sweep(7)).unwrap());
    assert_eq!(a, serial);
    assert_ne!(a, sweep(&small_sweep(8)).unwrap());
}

#[test]
fn grid_cells_follow_their_seeds() {
    // a cell is the solve of the instance its derived seeds describe
    let cfg = SweepConfig {
        runs_per_cell: 1,
        ..small_sweep(3)
    };
    let grid = sweep(&cfg).unwrap();
    let seed = ulab::rng::cell_seed(3, 1, 0, 0);
    let mut inst = Instance::sample(
        &cfg.ensemble,
        cfg.n,
        0.3,
        0.4,
        derive(seed, stream::MATRIX),
        derive(seed, stream::SIGNAL),
    )
    .unwrap();
    let r = run_solver(&cfg.solver, &mut inst, f64::NAN, seed);
    assert_eq!(grid.cell(1, 0).mean_mse, r.mse().unwrap());
}

#[test]
fn multi_solver_sweep_matches_single_sweeps() {
    let cfg = small_sweep(5);
    let l1 = SolverSpec::new(SolverKind::Vamp, ModeKind::L1);
    let both = sweep_multi(&cfg, &[vamp_bayes(), l1]).unwrap();
    assert_eq!(both[0], sweep(&cfg).unwrap());
    assert_eq!(both[1], sweep(&SweepConfig { solver: l1, ..cfg }).unwrap());
}

#[test]
fn errored_runs_are_counted_not_fatal() {
    let mut solver = vamp_bayes();
    solver.settings.damping = Some(0.0);
    let grid = sweep(&SweepConfig {
        solver,
        ..small_sweep(2)
    })
    .unwrap();
    for c in &grid.cells {
        assert_eq!(c.errors, 3);
        assert_eq!(c.failure_fraction, 1.0);
        assert_eq!(c.success_fraction, 0.0);
        assert!(c.mean_mse.is_nan());
    }
    assert!(String::from_utf8(csv_bytes(&grid)).unwrap().contains("nan"));
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        SweepConfig {
            alpha_grid: vec![],
            ..small_sweep(1)
        },
        SweepConfig {
            alpha_grid: vec![0.5, 0.5],
            ..small_sweep(1)
        },
        SweepConfig {
            rho_grid: vec![1.2],
            ..small_sweep(1)
        },
        SweepConfig {
            runs_per_cell: 0,
            ..small_sweep(1)
        },
        SweepConfig { n: 0, ..small_sweep(1) },
    ];
    for cfg in bad {
        assert!(matches!(sweep(&cfg), Err(Error::Config(_))));
    }
}

fn synthetic_grid(alpha: &[f64], rho: &[f64], sf: &[f64]) -> PhaseGrid {
    let mut cells = Vec::new();
    for (i, &r) in rho.iter().enumerate() {
        for (j, &a) in alpha.iter().enumerate() {
            let f = sf[i * alpha.len() + j];
            cells.push(CellSummary {
                alpha: a,
                rho: r,
                runs: 4,
                mean_mse: if f > 0.5 { 1e-9 } else { 0.1 },
                median_mse: 0.0,
                success_fraction: f,
                failure_fraction: 1.0 - f,
                mean_iterations: 12.5,
                errors: 0,
            });
        }
    }
    PhaseGrid {
        alpha_grid: alpha.to_vec(),
        rho_grid: rho.to_vec(),
        cells,
    }
}

#[test]
fn boundary_interpolates_the_half_crossing() {
    let grid = synthetic_grid(
        &[0.2, 0.4, 0.6, 0.8],
        &[0.1, 0.3, 0.5],
        &[0.0, 0.25, 0.75, 1.0, 0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0],
    );
    let b = grid.empirical_boundary();
    assert_eq!(b[0].0, 0.1);
    assert!((b[0].1.unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(b[1].1, None);
    assert_eq!(b[2].1, Some(0.2));
}

#[test]
fn sweep_csv_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/sweep.csv");
    let grid = synthetic_grid(&[0.25, 0.75], &[0.125, 0.5], &[0.0, 1.0, 0.25, 1.0]);
    csv::write_file(&path, |w| write_sweep_csv(&grid, w)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some(SWEEP_HEADER));
    assert_eq!(text.lines().nth(1), Some("0.25,0.125,4,0.1,0,0,1,12.5"));
    assert_eq!(read_sweep_csv(&path).unwrap(), grid);

    let partial = dir.path().join("partial.csv");
    let rows: Vec<&str> = text.lines().take(4).collect();
    std::fs::write(&partial, rows.join("\n")).unwrap();
    assert!(matches!(read_sweep_csv(&partial), Err(Error::Config(_))));
    std::fs::write(&partial, "a,b\n").unwrap();
    assert!(matches!(read_sweep_csv(&partial), Err(Error::Config(_))));
}

#[test]
fn heatmap_of_a_single_cell() {
    let grid = synthetic_grid(&[0.5], &[0.5], &[1.0]);
    let svg = heatmap_svg(&grid, None).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<title>").count(), 1);
    assert!(svg.contains(r#"<g id="legend">"#));
    assert!(!svg.contains(r#"id="line""#));
    assert!(svg.contains(&format!(r#"fill="{}""#, mse_color(1e-9))));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.svg");
    let line = phase_line(LineMethod::BayesHard, &[0.3, 0.6], &SeSettings::default()).unwrap();
    let big = synthetic_grid(&[0.25, 0.75], &[0.25, 0.75], &[0.0, 1.0, 0.0, 0.5]);
    render_heatmap(&big, Some(&line), &path).unwrap();
    let svg = std::fs::read_to_string(&path).unwrap();
    assert_eq!(svg.matches("<title>").count(), 4);
    assert!(svg.contains(r#"<polyline id="line""#));
    assert!(matches!(
        render_heatmap(&big, None, &dir.path().join("missing/dir/h.svg")),
        Err(Error::Config(_))
    ));
}

#[test]
fn tiny_alpha_recovers_nothing() {
    // with almost no measurements the posterior mean stays near zero
    let rho = 0.3;
    let cfg = SweepConfig {
        alpha_grid: vec![0.05],
        rho_grid: vec![rho],
        n: 1000,
        runs_per_cell: 4,
        ..small_sweep(11)
    };
    let c = sweep(&cfg).unwrap().cells[0].clone();
    assert!(c.mean_mse > 0.8 * rho && c.mean_mse < 1.1 * rho, "{}", c.mean_mse);
    assert_eq!(c.success_fraction, 0.0);
}

#[test]
fn every_ensemble_recovers_above_the_line() {
    let kinds = [
        EnsembleKind::Gaussian,
        EnsembleKind::Dct,
        EnsembleKind::Hadamard,
        EnsembleKind::RfmRelu,
        EnsembleKind::RfmSign,
        EnsembleKind::RfmTanh,
        EnsembleKind::RotInvariant,
    ];
    for kind in kinds {
        let mut inst = Instance::sample(&EnsembleSpec::new(kind), 500, 0.8, 0.2, 61, 62).unwrap();
        if kind.power_of_two() {
            assert_eq!(inst.op.n(), 512);
        }
        let r = run_solver(&vamp_bayes(), &mut inst, f64::NAN, 63);
        assert!(r.mse().unwrap() < 1e-6, "{kind}: {r:?}");
    }
}

#[test]
fn comparison_agrees_far_from_the_line() {
    let cfg = CompareConfig {
        ensemble: EnsembleSpec::new(EnsembleKind::Gaussian),
        mode: ModeKind::Bayes,
        settings: SolverSettings::default(),
        n: 300,
        alpha_grid: vec![0.25, 0.9],
        rho_grid: vec![0.2],
        runs_per_cell: 3,
        success_mse: 1e-6,
        band: 0.02,
        base_seed: 4,
    };
    let rep = compare_amp_vamp(&cfg).unwrap();
    assert_eq!((rep.considered, rep.excluded), (6, 0));
    assert_eq!(rep.agreement_rate, 1.0);
    for p in &rep.pairs {
        let (a, v) = (p.amp.mse().unwrap(), p.vamp.mse().unwrap());
        if p.alpha > 0.5 {
            assert!(a < 1e-8 && v < 1e-8, "{p:?}");
        } else {
            assert!(a > 1e-2 && v > 1e-2, "{p:?}");
        }
    }
    assert!(rep.mse_correlation > 0.9);

    // a band around the line removes its neighbours
    let banded = compare_amp_vamp(&CompareConfig {
        alpha_grid: vec![0.36, 0.9],
        band: 0.05,
        ..cfg
    })
    .unwrap();
    assert_eq!((banded.considered, banded.excluded), (3, 3));
    assert!(banded.pairs.iter().all(|p| p.excluded == (p.alpha < 0.5)));
}

#[test]
fn curve_records_and_points() {
    let cfg = CurveConfig {
        ensembles: vec![
            EnsembleSpec::new(EnsembleKind::Gaussian),
            EnsembleSpec::new(EnsembleKind::Dct),
        ],
        solver: vamp_bayes(),
        n: 128,
        alpha_grid: vec![0.3, 0.8],
        rho_grid: vec![0.1, 0.25],
        runs: 2,
        base_seed: 9,
    };
    let recs = mse_curve(&cfg).unwrap();
    assert_eq!(recs.len(), 2 * 2 * 2 * 2);
    assert!(recs[..8].iter().all(|r| r.rho == 0.1));
    assert_eq!(recs, mse_curve(&cfg).unwrap());
    let pts = curve_points(&recs);
    assert_eq!(pts.len(), 8);
    for p in &pts {
        assert_eq!((p.runs, p.errors), (2, 0));
        if p.alpha == 0.8 {
            assert!(p.mean_mse < 1e-6, "{p:?}");
        }
    }

    // the operator of a task does not depend on rho, and the signal not on the ensemble
    let m0 = curve_matrix_seed(9, EnsembleKind::Gaussian, 1, 0);
    assert_ne!(m0, curve_matrix_seed(9, EnsembleKind::Dct, 1, 0));
    assert_ne!(curve_signal_seed(9, 0, 1, 0), curve_signal_seed(9, 1, 1, 0));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    csv::write_file(&path, |w| write_curve_csv(&recs, w)).unwrap();
    let rows = read_curve_csv(&path).unwrap();
    assert_eq!(rows.len(), recs.len());
    for (row, rec) in rows.iter().zip(&recs) {
        assert_eq!(
            (row.ensemble, row.rho, row.alpha, row.run),
            (rec.ensemble, rec.rho, rec.alpha, rec.run)
        );
        let mse = rec.result.mse().unwrap();
        assert!((row.mse - mse).abs() <= 1e-5 * mse);
        assert_eq!(row.status, rec.result.status().unwrap().as_str());
    }
}

#[test]
fn solve_instance_exposes_the_trajectory() {
    let mut inst = Instance::sample(&EnsembleSpec::new(EnsembleKind::Gaussian), 200, 0.7, 0.1, 1, 2).unwrap();
    let spec = SolverSpec::new(SolverKind::Amp, ModeKind::Bayes);
    let t = solve_instance(&spec, &mut inst, 1.0, 3).unwrap();
    assert_eq!(t.status, Status::Converged);
    let r = run_solver(&spec, &mut inst, 1.0, 3);
    assert_eq!(r.iterations(), Some(t.iterations()));
    assert_eq!(r.mse(), t.final_mse());
}

#[test]
fn file_config_drives_the_experiments() {
    let file = FileConfig::from_toml(
        r#"
        ensembles = ["gaussian", "haar-wavelet"]
        rho_grid = [0.2]
        runs = 2
        "#,
    )
    .unwrap();
    let curve = file.curve_config().unwrap();
    assert_eq!(curve.ensembles.len(), 2);
    assert_eq!(curve.n, 1000);
    assert_eq!(curve.alpha_grid, desk_grid());
    let cmp = FileConfig {
        preset: Preset::Full,
        ..file.clone()
    }
    .compare_config()
    .unwrap();
    assert_eq!((cmp.n, cmp.runs_per_cell), (1000, 2));
    assert_eq!(file.line_rhos().unwrap(), vec![0.2]);
    assert!(FileConfig::from_toml("rho_grid = [0.01]").unwrap().line_rhos().is_err());
    assert_eq!("full".parse::<Preset>().unwrap(), Preset::Full);
    assert!("huge".parse::<Preset>().is_err());
}

#[test]
fn damping_defaults_follow_the_mode() {
    let bayes = SolverSpec::new(SolverKind::Vamp, ModeKind::Bayes);
    let l1 = SolverSpec::new(SolverKind::Vamp, ModeKind::L1);
    assert_eq!(bayes.vamp_config(0.2, 0).damping, DEFAULT_DAMPING_BAYES);
    assert_eq!(l1.vamp_config(0.2, 0).damping, DEFAULT_DAMPING_L1);
    let mut fixed = l1;
    fixed.settings.damping = Some(0.5);
    assert_eq!(fixed.vamp_config(0.2, 0).damping, 0.5);
    let f = FileConfig::from_toml("[settings]\ndamping = 0.9").unwrap();
    assert_eq!(f.settings.damping, Some(0.9));
}
