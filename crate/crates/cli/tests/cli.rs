use std::process::Command;

fn disperse(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_disperse"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn generate_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    let out = disperse(&[
        "generate",
        "--construction",
        "hh-modified",
        "--d",
        "2",
        "--n",
        "432",
        "--seed",
        "5",
        "-o",
        file.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.starts_with("# disperse-pointset v1 d=2 "));

    let out = disperse(&["evaluate", "--exact", file.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["volume"].is_string());
    assert!(v["volume_f64"].as_f64().unwrap() > 0.0);
    assert_eq!(v["witness"]["kind"], "cube");

    // Determinism: same seed, same bytes.
    let file2 = dir.path().join("q.txt");
    let out = disperse(&[
        "generate",
        "--construction",
        "hh-modified",
        "--d",
        "2",
        "--n",
        "432",
        "--seed",
        "5",
        "-o",
        file2.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(text, std::fs::read_to_string(&file2).unwrap());
}

#[test]
fn missing_seed_is_an_error_with_category() {
    let out = disperse(&[
        "generate",
        "--construction",
        "hh-modified",
        "--d",
        "2",
        "--n",
        "432",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("category=invalid-parameter"), "{err}");
}

#[test]
fn bad_input_reports_format_category() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    std::fs::write(&file, "not a pointset\n").unwrap();
    let out = disperse(&["evaluate", "--exact", file.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("category=format"), "{err}");
}

#[test]
fn out_of_range_coordinate_reports_category() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("oor.txt");
    std::fs::write(
        &file,
        "# disperse-pointset v1 d=1 n=1 coord=rational space=cube\n9/8\n",
    )
    .unwrap();
    let out = disperse(&["evaluate", "--exact", file.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("category=coordinate-out-of-range"));
}

#[test]
fn preprocess_cache_feeds_derand_generate() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.txt");
    let out = disperse(&["preprocess", "--d", "2", "-o", cache.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let p1 = dir.path().join("a.txt");
    let p2 = dir.path().join("b.txt");
    for p in [&p1, &p2] {
        let out = disperse(&[
            "generate",
            "--construction",
            "derand",
            "--d",
            "2",
            "--n",
            "432",
            "--cache",
            cache.to_str().unwrap(),
            "-o",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(
        std::fs::read_to_string(&p1).unwrap(),
        std::fs::read_to_string(&p2).unwrap()
    );
}

#[test]
fn verify_good_boxes_passes_on_generated_set() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    let out = disperse(&[
        "generate",
        "--construction",
        "hh-modified",
        "--d",
        "2",
        "--n",
        "432",
        "--seed",
        "9",
        "-o",
        file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = disperse(&[
        "verify-good-boxes",
        "--n",
        "432",
        "--preset",
        "desk",
        file.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("pass:"));
}

#[test]
fn bench_emits_versioned_csv_in_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.txt");
    std::fs::write(
        &config,
        "# disperse-bench v1\n\
         row construction=hh-modified d=2 n=432 seed=1\n\
         row construction=toroidal d=2 n=864 seed=2\n",
    )
    .unwrap();
    let out = disperse(&["bench", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# disperse-bench-csv v1");
    assert!(lines[1].starts_with("construction,d,n,method,measured_volume"));
    assert!(lines[2].starts_with("hh-modified,2,"));
    assert!(lines[3].starts_with("toroidal,2,"));

    // Empty suite: header only.
    std::fs::write(&config, "# disperse-bench v1\n").unwrap();
    let out = disperse(&["bench", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
}

#[test]
fn bound_theorem_1_prints_value() {
    let out = disperse(&["bound", "--theorem", "1", "--d", "3", "--n", "100000"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("m_3(100000) >="));
}
