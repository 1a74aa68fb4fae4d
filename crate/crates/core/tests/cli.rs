//! The CLI is a thin shell: every subcommand's behavior equals the
//! corresponding library call, outputs are deterministic, and exit
//! codes follow the 0/1/2 convention.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use primsketch::cli::RecordsFile;
use primsketch::{
    abstract_sketch, parse_ndjson, primitive_set, FitConfig, Gamma, Grid, DEFAULT_KAPPA,
};

const FIXTURE: &str = concat!(
    r#"{"word":"face","key_id":"f0","drawing":[[[40,80,120,160,200],[100,60,40,60,100]],[[80,80],[140,180]],[[160,160],[140,180]]]}"#,
    "\n",
    r#"{"word":"box","key_id":"b0","drawing":[[[40,40,200,200,40],[40,200,200,40,40]]]}"#,
    "\n"
);

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_primsketch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_fixture(dir: &Path) -> String {
    let path = dir.join("in.ndjson");
    fs::write(&path, FIXTURE).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn abstract_writes_records_svg_and_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let out = dir.path().join("rec.json");
    let svg_dir = dir.path().join("svg");
    let status = run(&[
        "abstract",
        "--input",
        &input,
        "--out",
        out.to_str().unwrap(),
        "--svg",
        svg_dir.to_str().unwrap(),
        "--grid",
        "24",
        "--refine-iters",
        "40",
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));

    let file: RecordsFile = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(file.schema_version, 1);
    assert_eq!(file.sketches.len(), 2);
    assert_eq!(file.sketches[0].records.len(), 3);
    assert_eq!(file.sketches[1].records.len(), 1);

    // the same call through the library yields the same records
    let sketches = parse_ndjson(FIXTURE.as_bytes()).unwrap();
    let grid = Grid::new(24).unwrap();
    let cfg = FitConfig {
        max_refine_iters: 40,
        ..FitConfig::default()
    };
    for (sk, cli_ps) in sketches.iter().zip(&file.sketches) {
        let lib_ps =
            abstract_sketch(sk, primitive_set(), &grid, Gamma::default(), &cfg, DEFAULT_KAPPA)
                .unwrap();
        assert_eq!(lib_ps.records.len(), cli_ps.records.len());
        for (a, b) in lib_ps.records.iter().zip(&cli_ps.records) {
            assert_eq!(a.id, b.id);
            assert!((a.theta1 - b.theta1).abs() < 1e-12);
            assert!((a.sx - b.sx).abs() < 1e-12);
            assert!((a.theta2 - b.theta2).abs() < 1e-12);
            assert!((a.w - b.w).abs() < 1e-9);
        }
    }

    let svgs: Vec<_> = fs::read_dir(&svg_dir).unwrap().collect();
    assert_eq!(svgs.len(), 2);
}

#[test]
fn abstract_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let mut bytes = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name);
        let status = run(&[
            "abstract",
            "--input",
            &input,
            "--out",
            out.to_str().unwrap(),
            "--grid",
            "16",
            "--refine-iters",
            "30",
        ]);
        assert!(status.status.success());
        bytes.push(fs::read(&out).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn sw_method_shares_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let out = dir.path().join("sw.json");
    let status = run(&[
        "abstract",
        "--input",
        &input,
        "--out",
        out.to_str().unwrap(),
        "--grid",
        "16",
        "--method",
        "sw",
    ]);
    assert!(status.status.success());
    let file: RecordsFile = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    for ps in &file.sketches {
        for rec in &ps.records {
            assert!(matches!(
                rec.id,
                primsketch::PrimitiveId::Line | primsketch::PrimitiveId::Arc
            ));
        }
    }
}

#[test]
fn budget_prints_kept_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let out = dir.path().join("rec.json");
    assert!(run(&[
        "abstract", "--input", &input, "--out", out.to_str().unwrap(), "--grid", "16",
        "--refine-iters", "20",
    ])
    .status
    .success());
    let output = run(&[
        "budget",
        "--input",
        &input,
        "--records",
        out.to_str().unwrap(),
        "--fractions",
        "0.1,0.2,0.3",
    ]);
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    // first fixture sketch: strokes of 5, 2, 2 points -> 2 + 1 + 1 = 4
    // human messages; 30% of 4 keeps 1
    assert!(text.contains("f0\thuman\t4\t1\t1\t1"), "stdout:\n{text}");
    assert!(text.contains("f0\tprimitive\t3\t1\t1\t1"), "stdout:\n{text}");
    assert!(text.contains("mean primitive/human message ratio"), "stdout:\n{text}");
}

#[test]
fn stats_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let rec = dir.path().join("rec.json");
    assert!(run(&[
        "abstract", "--input", &input, "--out", rec.to_str().unwrap(), "--grid", "16",
        "--refine-iters", "20",
    ])
    .status
    .success());
    let json_out = dir.path().join("stats.json");
    let csv_out = dir.path().join("stats.csv");
    let output = run(&[
        "stats",
        "--records",
        rec.to_str().unwrap(),
        "--out",
        json_out.to_str().unwrap(),
        "--csv",
        csv_out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let stats: serde_json::Value = serde_json::from_slice(&fs::read(&json_out).unwrap()).unwrap();
    assert_eq!(stats["total_records"], 4);
    let csv = fs::read_to_string(&csv_out).unwrap();
    assert!(csv.starts_with("category,line,arc,circle,corner,triangle,square,u_shape"));
    assert!(csv.contains("face,"));
    assert!(csv.contains("box,"));
}

#[test]
fn render_handles_both_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let rec = dir.path().join("rec.json");
    assert!(run(&[
        "abstract", "--input", &input, "--out", rec.to_str().unwrap(), "--grid", "16",
        "--refine-iters", "20",
    ])
    .status
    .success());
    let out_dir = dir.path().join("render");
    let output = run(&[
        "render",
        "--input",
        &input,
        "--records",
        rec.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let names: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 4);
    assert!(names.iter().any(|n| n.starts_with("primitive_")));
    for name in &names {
        let svg = fs::read_to_string(out_dir.join(name)).unwrap();
        assert!(svg.starts_with("<svg"));
    }
}

#[test]
fn fit_debug_dumps_fields_and_losses() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let out_dir = dir.path().join("debug");
    let output = run(&[
        "fit-debug",
        "--input",
        &input,
        "--sketch",
        "0",
        "--stroke",
        "0",
        "--grid",
        "16",
        "--refine-iters",
        "20",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stroke_field = fs::read(out_dir.join("stroke_field.bin")).unwrap();
    let parsed = primsketch::field::read_field_dump(&stroke_field[..]).unwrap();
    assert_eq!(parsed.resolution(), 16);
    assert!(parsed.values().iter().all(|&v| v > 0.0 && v <= 1.0));
    for id in primsketch::PrimitiveId::ALL {
        assert!(out_dir.join(format!("candidate_{id}.bin")).exists());
    }
    let fits: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("fits.json")).unwrap()).unwrap();
    assert_eq!(fits.as_array().unwrap().len(), 7);
    assert!(fits[0]["coarse_top"].as_array().unwrap().len() == 10);
}

#[test]
fn exit_codes_follow_convention() {
    // usage error: unknown flag
    let usage = bin().args(["abstract", "--nope"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    // usage error: unknown subcommand
    let unknown = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
    // input error: missing file
    let dir = tempfile::tempdir().unwrap();
    let missing = bin()
        .args([
            "abstract",
            "--input",
            dir.path().join("absent.ndjson").to_str().unwrap(),
            "--out",
            dir.path().join("o.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    let err = String::from_utf8_lossy(&missing.stderr);
    assert!(err.contains("absent.ndjson"), "stderr: {err}");
    // help exits cleanly
    let help = bin().args(["--help"]).output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}
