use dtn_cli::commands::*;
use dtn_cli::config::*;
use dtn_cli::convergence::*;
use dtn_cli::plot::scatter_svg;
use dtn_cli::report::*;
use dtn_cli::CliError;
use dtn_core::linalg::C64;
use dtn_core::Region;
use std::process::Command;

fn small_disk(out: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig::from_text("shape = disk\nregion = 0 1 -1 0\nlevel = 2\n").unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

#[test]
fn config_file_sets_every_key() {
    let text = "\
shape = square   # comment
R = 0.85
N = 15
region = 0, 2, -3, 0
level = 3
search_level = 2
n_quad = 24
threshold = 0.05
min_cell = 1e-3
seed = 11
dedupe_radius = 2e-6
residual_tol = 1e-9
workers = 2
out_dir = somewhere
";
    let cfg = RunConfig::from_text(text).unwrap();
    assert_eq!(cfg.shape, ShapeSpec::Square);
    assert_eq!((cfg.radius, cfg.n_max, cfg.level, cfg.search_level), (0.85, 15, 3, 2));
    assert_eq!(cfg.region, Region::new([0.0, 2.0], [-3.0, 0.0]));
    assert_eq!(cfg.sim.n_quad, 24);
    assert_eq!(cfg.sim.threshold, 0.05);
    assert_eq!(cfg.sim.min_cell, 1e-3);
    assert_eq!(cfg.sim.probe_seed, 11);
    assert_eq!(cfg.sim.dedupe_radius, 2e-6);
    assert_eq!(cfg.sim.residual_tol, 1e-9);
    assert_eq!(cfg.sim.workers, 2);
    assert_eq!(cfg.out_dir.to_str(), Some("somewhere"));
    assert_eq!(RunConfig::from_text(&cfg.to_text()).unwrap(), cfg);
    assert!(cfg.validate().is_ok());
    for key in KEYS {
        assert!(cfg.to_text().contains(&format!("{key} = ")), "{key}");
    }
}

#[test]
fn config_errors_name_the_problem() {
    let e = RunConfig::from_text("colour = blue").unwrap_err().to_string();
    assert!(e.contains("line 1") && e.contains("colour"), "{e}");
    assert!(RunConfig::from_text("N = many").is_err());
    assert!(RunConfig::from_text("region = 0 1 2").is_err());
    assert!(RunConfig::from_text("just words").is_err());
    assert_eq!(RunConfig::from_text("").unwrap(), RunConfig::default());
}

#[test]
fn validation_rejects_bad_runs() {
    let ok = RunConfig::default();
    assert!(ok.validate().is_ok());
    let upper = RunConfig {
        region: Region::new([0.0, 1.0], [1.0, 2.0]),
        ..ok.clone()
    };
    assert!(matches!(upper.validate(), Err(CliError::Config(_))));
    let left = RunConfig {
        region: Region::new([-1.0, 1.0], [-1.0, 0.0]),
        ..ok.clone()
    };
    assert!(left.validate().is_err());
    let tight = RunConfig {
        shape: ShapeSpec::Square,
        radius: 0.7,
        ..ok.clone()
    };
    assert!(tight.validate().is_err());
    let levels = RunConfig {
        level: 2,
        search_level: 3,
        ..ok
    };
    assert!(levels.validate().is_err());
}

#[test]
fn invalid_region_fails_before_any_assembly() {
    let cfg = RunConfig {
        region: Region::new([0.0, 1.0], [1.0, 2.0]),
        level: 9,
        ..RunConfig::default()
    };
    let t = std::time::Instant::now();
    assert!(run(&cfg).is_err());
    assert!(t.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn pole_csv_round_trips_exactly() {
    let rows = vec![
        PoleRow {
            re_k: 0.1 + 0.2,
            im_k: -std::f64::consts::PI / 3.0,
            residual: 1.234_567_890_123_456_7e-17,
            group_size: 3,
            cell_center_re: 0.30000000000000004,
            cell_center_im: -1.0471975511965976,
        },
        PoleRow {
            re_k: 1e-300,
            im_k: -5e-324,
            residual: 0.0,
            group_size: 1,
            cell_center_re: 2.0,
            cell_center_im: -0.5,
        },
    ];
    let text = write_poles_csv(&rows).unwrap();
    assert!(text.starts_with(&format!("{POLE_HEADER}\n")));
    assert_eq!(read_poles_csv(&text).unwrap(), rows);
    assert!(read_poles_csv("a,b\n1,2\n").is_err());
    assert!(read_poles_csv(&write_poles_csv(&[]).unwrap()).unwrap().is_empty());
}

#[test]
fn reference_csv_carries_oracle_residuals() {
    let text = cmd_reference(&Region::new([0.0, 4.0], [-4.0, 0.0]), 12).unwrap();
    let rows = read_poles_csv(&text).unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.residual <= 1e-12 && r.group_size == 1));
    assert!((rows[0].k() - C64::new(0.501184, -0.643547)).norm() < 1e-5);
}

#[test]
fn convergence_table_of_a_second_order_sequence() {
    let exact = [C64::new(0.5, -0.6), C64::new(1.4, -0.8)];
    let levels: Vec<(usize, f64, Vec<C64>)> = (1..=4)
        .map(|j| {
            let h = 0.1 / 2f64.powi(j as i32 - 1);
            let poles = exact.iter().map(|k| k * (1.0 + 0.3 * h * h)).collect();
            (j, h, poles)
        })
        .collect();
    let rows = convergence_table(&levels, &levels[3].2);
    assert_eq!(rows.len(), 4);
    for i in 0..2 {
        let o = finest_order(&rows, i).unwrap();
        assert!((o - 2.0).abs() < 1e-3, "{o}");
        assert!(rows[3].errors[i].is_none());
        assert!(rows[2].orders[i].is_none());
        assert!(rows[1].orders[i].is_some());
    }
    let csv = table_csv(&rows);
    assert!(csv.starts_with("level,h,re_k1,im_k1,err1,order1,re_k2"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn convergence_chain_breaks_beyond_match_radius() {
    let levels = vec![
        (1, 0.2, vec![C64::new(1.0, -1.0)]),
        (2, 0.1, vec![C64::new(1.3, -1.0)]),
        (3, 0.05, vec![C64::new(1.31, -1.0)]),
    ];
    let rows = convergence_table(&levels, &[C64::new(1.31, -1.0)]);
    assert_eq!(rows[0].poles[0], None);
    assert!(rows[1].errors[0].is_some());
    assert_eq!(finest_order(&rows, 0), None);
}

#[test]
fn svg_glyphs_and_determinism() {
    let r = Region::new([0.0, 4.0], [-4.0, 0.0]);
    let a = scatter_svg(&r, &[C64::new(1.0, -1.0)], &[C64::new(2.0, -2.0)]);
    assert_eq!(a.matches("<circle").count(), 1);
    assert_eq!(a.matches("<path").count(), 1);
    assert_eq!(a, scatter_svg(&r, &[C64::new(1.0, -1.0)], &[C64::new(2.0, -2.0)]));
    let empty = scatter_svg(&r, &[], &[]);
    assert_eq!(empty.matches("<circle").count() + empty.matches("<path").count(), 0);
    assert!(empty.contains("<line"));
    for doc in [&a, &empty] {
        let mut reader = quick_xml::Reader::from_str(doc);
        let mut depth = 0i32;
        loop {
            match reader.read_event().expect("well-formed") {
                quick_xml::events::Event::Start(_) => depth += 1,
                quick_xml::events::Event::End(_) => depth -= 1,
                quick_xml::events::Event::Eof => break,
                _ => {}
            }
        }
        assert_eq!(depth, 0);
    }
}

#[test]
fn plot_command_reads_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("p.csv");
    std::fs::write(&f, cmd_reference(&Region::new([0.0, 2.0], [-1.0, 0.0]), 4).unwrap()).unwrap();
    let svg = cmd_plot(&Region::new([0.0, 2.0], [-1.0, 0.0]), &[f.clone()], &[f]).unwrap();
    assert_eq!(svg.matches("<circle").count(), 2);
    assert!(cmd_plot(&Region::new([0.0, 2.0], [-1.0, 0.0]), &[dir.path().join("missing.csv")], &[]).is_err());
}

#[test]
fn scatter_check_converges_and_rejects_zero() {
    let cfg = RunConfig::default();
    assert!(cmd_scatter_check(&cfg, 0.0, 2).is_err());
    assert!(cmd_scatter_check(&RunConfig { shape: ShapeSpec::Square, radius: 0.85, ..cfg.clone() }, 1.0, 2).is_err());
    let check = cmd_scatter_check(&cfg, 1.0, 3).unwrap();
    for w in check.levels.windows(2) {
        assert!(w[1].relative_l2_error < w[0].relative_l2_error);
    }
    assert!(check.orders.iter().all(|o| (1.7..=2.3).contains(o)), "{:?}", check.orders);
}

#[test]
fn solve_writes_consistent_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_disk(dir.path());
    let out = cmd_solve(&cfg, true).unwrap();
    let csv = read_poles_file(&out.csv_path).unwrap();
    assert_eq!(csv, out.report.poles);
    assert_eq!(csv.len(), 1);
    assert!((csv[0].k() - C64::new(0.501184, -0.643547)).norm() < 1e-3);
    let json = SolveReport::from_json(&std::fs::read_to_string(&out.json_path).unwrap()).unwrap();
    assert_eq!(json, out.report);
    assert_eq!(json.levels.len(), 2);
    let mesh = dtn_core::mesh::import_mesh(&std::fs::read_to_string(dir.path().join("mesh.txt")).unwrap()).unwrap();
    let mode = std::fs::read_to_string(dir.path().join("mode_1.txt")).unwrap();
    assert_eq!(mode.lines().count(), mesh.n_vertices() + 1);
    assert_eq!(mesh.n_vertices(), json.levels[1].ndof);
}

#[test]
fn convergence_command_matches_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_disk(dir.path());
    let (rows, run) = cmd_convergence(&cfg, 2).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].poles[0], Some(run.poles()[0].lambda));
    assert!(rows[0].errors[0].unwrap() < 1e-3);
    let path = write_convergence(&cfg, &rows).unwrap();
    assert!(std::fs::read_to_string(path).unwrap().starts_with("level,h,"));
}

#[test]
fn binary_reports_errors_with_nonzero_exit() {
    let bin = env!("CARGO_BIN_EXE_dtnres");
    let out = Command::new(bin)
        .args(["solve", "--region", "0 1 1 2"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Im <= 0"));
    let out = Command::new(bin).args(["plot"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("<svg"));
    let out = Command::new(bin)
        .args(["reference", "--region", "0 1 -1 0", "--m-max", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
}

#[test]
fn workers_env_overrides_file() {
    let mut cfg = RunConfig::default();
    std::env::set_var(WORKERS_ENV, "3");
    cfg.apply_env().unwrap();
    std::env::remove_var(WORKERS_ENV);
    assert_eq!(cfg.sim.workers, 3);
}

#[test]
fn checked_in_configs_parse() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (name, shape, r) in [("disk", ShapeSpec::Disk, 1.25), ("square", ShapeSpec::Square, 0.85), ("lshape", ShapeSpec::LShape, 0.85)] {
        let cfg = RunConfig::from_file(&root.join(format!("{name}.conf"))).unwrap();
        assert_eq!(cfg.shape, shape);
        assert_eq!(cfg.radius, r);
        assert_eq!(cfg.level, 5);
        assert!(cfg.validate().is_ok());
    }
}
