use std::path::Path;

use linattn::io::{read_tensor, write_tensor};
use linattn::{cli, run_method, AttnInputs, BlockParams, MaskKind, MethodId, Tensor};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn linattn(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("linattn").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_two_rows(dir: &Path) {
    write_tensor(
        &Tensor::from_rows(&[&[2.0], &[3.0]]).unwrap(),
        dir.join("B.ldt"),
    )
    .unwrap();
    write_tensor(
        &Tensor::from_rows(&[&[1.0], &[4.0]]).unwrap(),
        dir.join("C.ldt"),
    )
    .unwrap();
    write_tensor(
        &Tensor::from_rows(&[&[5.0], &[6.0]]).unwrap(),
        dir.join("V.ldt"),
    )
    .unwrap();
}

fn decode_args<'a>(dir: &'a str, out: &'a str) -> Vec<String> {
    [
        "decode",
        "--b",
        &format!("{dir}/B.ldt"),
        "--c",
        &format!("{dir}/C.ldt"),
        "--v",
        &format!("{dir}/V.ldt"),
        "--out",
        out,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn run_owned(args: Vec<String>) -> Outcome {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    linattn(&refs)
}

#[test]
fn verify_small_grid_passes() {
    let o = linattn(&[
        "verify", "--seqlen", "1,5,33", "--rank", "2", "--dim", "3", "--bh", "1x2",
    ]);
    assert_eq!(o.code, 0, "{}{}", o.stdout, o.stderr);
    assert!(o.stdout.contains("fleet-tiled"));
}

#[test]
fn verify_vanilla_single_row() {
    assert_eq!(
        linattn(&["verify", "--methods", "vanilla", "--seqlen", "1"]).code,
        0
    );
}

#[test]
fn verify_failure_exits_one() {
    let o = linattn(&[
        "verify",
        "--methods",
        "fleet",
        "--seqlen",
        "4",
        "--rank",
        "1",
        "--dim",
        "1",
        "--bh",
        "1x1",
        "--dtype",
        "f32",
        "--tol",
        "1e-12",
    ]);
    assert_eq!(o.code, 1);
    assert!(o.stdout.contains("first violation"));
    assert_eq!(linattn(&["verify", "--seqlen", "4", "--tol=-1"]).code, 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(linattn(&["verify", "--methods", "nosuch"]).code, 2);
    assert_eq!(linattn(&["verify", "--dtype", "f16"]).code, 2);
    assert_eq!(linattn(&["frobnicate"]).code, 2);
    assert_eq!(linattn(&[]).code, 2);
    assert_eq!(linattn(&["bench", "--format", "xml"]).code, 2);
    assert_eq!(linattn(&["bench", "--seqlen", "0"]).code, 2);
    assert_eq!(
        linattn(&["bench", "--repeats", "2", "--drop-extremes"]).code,
        2
    );
}

#[test]
fn help_exits_zero() {
    let o = linattn(&["--help"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("complexity"));
}

#[test]
fn decode_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    write_two_rows(dir.path());
    let d = dir.path().to_str().unwrap();
    let out = format!("{d}/O.ldt");

    let mut args = decode_args(d, &out);
    args.extend(["--method".into(), "fleet".into()]);
    let o = run_owned(args);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(read_tensor(&out).unwrap().as_f64().unwrap(), &[10.0, 87.0]);

    let mut args = decode_args(d, &out);
    args.extend([
        "--method".into(),
        "recursion".into(),
        "--decay".into(),
        "--gamma".into(),
        "0.5".into(),
    ]);
    assert_eq!(run_owned(args).code, 0);
    assert_eq!(read_tensor(&out).unwrap().as_f64().unwrap(), &[10.0, 79.5]);
}

#[test]
fn decode_matches_library_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let g = linattn(&[
        "gen",
        "--batch",
        "2",
        "--heads",
        "3",
        "--seqlen",
        "70",
        "--rank",
        "5",
        "--dim",
        "4",
        "--seed",
        "9",
        "--out-dir",
        d,
    ]);
    assert_eq!(g.code, 0, "{}", g.stderr);
    let inputs = AttnInputs::new(
        read_tensor(dir.path().join("B.ldt")).unwrap(),
        read_tensor(dir.path().join("C.ldt")).unwrap(),
        read_tensor(dir.path().join("V.ldt")).unwrap(),
        vec![0.9, 0.5, 0.99],
        MaskKind::ExpDecay,
    )
    .unwrap();
    let out = format!("{d}/O.ldt");
    for id in MethodId::KERNELS {
        let mut args = decode_args(d, &out);
        args.extend([
            "--method".into(),
            id.name().into(),
            "--decay".into(),
            "--gamma".into(),
            "0.9,0.5,0.99".into(),
        ]);
        assert_eq!(run_owned(args).code, 0);
        let want = run_method(id, &inputs, &BlockParams::default())
            .unwrap()
            .output;
        assert!(read_tensor(&out).unwrap().bitwise_eq(&want), "{id}");
    }
}

#[test]
fn decode_auto_reports_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(
        linattn(&[
            "gen",
            "--batch",
            "16",
            "--seqlen",
            "20",
            "--rank",
            "2",
            "--dim",
            "2",
            "--out-dir",
            d
        ])
        .code,
        0
    );
    let out = format!("{d}/O.ldt");
    let o = run_owned(decode_args(d, &out));
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stderr.contains("resolved: row-based"), "{}", o.stderr);
}

#[test]
fn decode_shape_mismatch_names_axis() {
    let dir = tempfile::tempdir().unwrap();
    write_two_rows(dir.path());
    write_tensor(
        &Tensor::from_rows(&[&[5.0], &[6.0], &[7.0]]).unwrap(),
        dir.path().join("V.ldt"),
    )
    .unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run_owned(decode_args(d, &format!("{d}/O.ldt")));
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("sequence"), "{}", o.stderr);
}

#[test]
fn decode_gamma_requires_decay() {
    let dir = tempfile::tempdir().unwrap();
    write_two_rows(dir.path());
    let d = dir.path().to_str().unwrap();
    let mut args = decode_args(d, &format!("{d}/O.ldt"));
    args.extend(["--gamma".into(), "0.5".into()]);
    assert_eq!(run_owned(args).code, 2);
}

#[test]
fn gen_is_deterministic_and_shaped() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = linattn(&[
            "gen",
            "--heads",
            "3",
            "--seqlen",
            "16",
            "--rank",
            "4",
            "--dim",
            "5",
            "--seed",
            "1",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.code, 0);
    }
    for name in ["B.ldt", "C.ldt", "V.ldt"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap()
        );
    }
    assert_eq!(
        read_tensor(a.path().join("V.ldt")).unwrap().dims(),
        &[1, 3, 16, 5]
    );
    assert_eq!(
        linattn(&["gen", "--seqlen", "0", "--rank", "1", "--dim", "1"]).code,
        2
    );
}

#[test]
fn explain_default_table() {
    let o = linattn(&["explain", "--seqlen", "128"]);
    assert!(o.stdout.starts_with("vanilla"), "{}", o.stdout);
    let o = linattn(&["explain", "--seqlen", "129"]);
    assert!(o.stdout.starts_with("two-level-block"));
    let o = linattn(&["explain", "--batch", "32", "--seqlen", "129"]);
    assert!(o.stdout.starts_with("row-based"));
}

#[test]
fn complexity_classes() {
    for (m, class) in [("recursion", "N log N"), ("fleet", "N "), ("vanilla", "N²")] {
        let o = linattn(&["complexity", "--method", m]);
        assert_eq!(o.code, 0, "{}", o.stdout);
        assert!(o.stdout.contains(&format!("best {class}")), "{}", o.stdout);
    }
    // a grid too narrow to fit is a usage error
    assert_eq!(linattn(&["complexity", "--seqlen", "64,128"]).code, 2);
}

#[test]
fn bench_markdown_and_csv() {
    let o = linattn(&[
        "bench",
        "--methods",
        "fleet,row-based",
        "--seqlen",
        "128,512",
        "--repeats",
        "3",
        "--warmup",
        "0",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(
        o.stdout.contains("| fleet |") && o.stdout.contains(" ± "),
        "{}",
        o.stdout
    );

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let o = linattn(&[
        "bench",
        "--methods",
        "block-based",
        "--seqlen",
        "64",
        "--repeats",
        "5",
        "--drop-extremes",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.code, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), linattn::bench::CSV_HEADER);
    assert!(lines.next().unwrap().ends_with(",ok"));
}

#[test]
fn bench_oom_row_keeps_exit_zero() {
    let o = linattn(&[
        "bench",
        "--methods",
        "vanilla,row-based",
        "--seqlen",
        "4096",
        "--repeats",
        "1",
        "--warmup",
        "0",
        "--format",
        "csv",
        "--mem-cap-bytes",
        "1000",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(
        o.stdout
            .contains("vanilla,1,1,4096,16,16,binary,1,f32,,,,OOM"),
        "{}",
        o.stdout
    );
    assert!(o.stdout.contains("row-based,1,1,4096"));
}
