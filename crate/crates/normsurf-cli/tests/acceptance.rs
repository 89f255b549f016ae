//! Acceptance criterion 10: every CLI command, run twice with 1 and 8
//! workers, emits byte-identical output.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_normsurf")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../normsurf/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn scratch_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("normsurf-acc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[String]) -> (String, Option<i32>) {
    let output = Command::new(bin())
        .args(args)
        .env_remove("NORMSURF_CACHE")
        .output()
        .expect("binary runs");
    (String::from_utf8_lossy(&output.stdout).into_owned(), output.status.code())
}

#[test]
fn criterion_10_cli_determinism() {
    let dir = scratch_dir();
    let torus = dir.join("torus.json");
    std::fs::write(
        &torus,
        r#"{"coords":[[0,0,0,0,0,1,0,0,0,0],[0,0,0,0,0,1,0,0,0,0]]}"#,
    )
    .unwrap();
    let link = dir.join("link.json");
    std::fs::write(&link, r#"{"coords":[[1,1,1,1,0,0,0,0,0,0],[1,1,1,1,0,0,0,0,0,0]]}"#)
        .unwrap();
    let t1 = dir.join("t1.json");
    std::fs::write(
        &t1,
        r#"{"coords":[[1,1,0,0,1,0,0,0,0,0],[1,1,1,1,0,0,0,0,0,0]]}"#,
    )
    .unwrap();
    let t2 = dir.join("t2.json");
    std::fs::write(
        &t2,
        r#"{"coords":[[1,1,1,1,0,0,0,0,0,0],[0,0,1,1,1,0,0,0,0,0]]}"#,
    )
    .unwrap();
    let sup = dir.join("support.json");
    std::fs::write(
        &sup,
        r#"{"support":[{"tris":[true,false,true,false],"mids":[{"kind":"quad","type":1}]},{"tris":[true,false,true,false],"mids":[{"kind":"quad","type":1}]},{"tris":[false,false,false,false],"mids":[{"kind":"quad","type":2}]}]}"#,
    )
    .unwrap();

    let two = fixture("two_tet.json");
    let three = fixture("three_tet.json");
    let g2 = fixture("genus2.json");
    let ts = |s: &str| s.to_string();
    let torus_s = torus.to_string_lossy().into_owned();
    let link_s = link.to_string_lossy().into_owned();
    let t1_s = t1.to_string_lossy().into_owned();
    let t2_s = t2.to_string_lossy().into_owned();
    let sup_s = sup.to_string_lossy().into_owned();

    let commands: Vec<Vec<String>> = vec![
        vec![ts("validate"), two.clone()],
        vec![ts("skeleton"), two.clone()],
        vec![ts("vertex-link"), two.clone()],
        vec![ts("match-eqs"), two.clone()],
        vec![ts("enum"), two.clone(), ts("--mode"), ts("vertex")],
        vec![ts("enum"), two.clone(), ts("--mode"), ts("fundamental")],
        vec![ts("enum"), g2.clone(), ts("--mode"), ts("fundamental"), ts("--emit"), ts("jsonl")],
        vec![ts("classify"), two.clone(), torus_s.clone()],
        vec![ts("sum"), two.clone(), torus_s.clone(), link_s.clone()],
        vec![ts("decompose"), two.clone(), link_s.clone()],
        vec![ts("carrier"), three.clone(), ts("--support"), sup_s.clone()],
        vec![
            ts("flare-check"),
            three.clone(),
            ts("--support"),
            sup_s.clone(),
            ts("--component"),
            ts("0"),
            ts("--direction"),
            ts("outward"),
            ts("--max-weight"),
            ts("8"),
        ],
        vec![ts("intersect"), g2.clone(), t1_s.clone(), t2_s.clone()],
        vec![ts("balanced-reduce"), ts("--signs"), ts("++--+-")],
        vec![ts("regular-check"), g2.clone(), t1_s.clone(), t2_s.clone()],
        vec![
            ts("genus-scan"),
            g2.clone(),
            ts("--genus"),
            ts("2"),
            ts("--coeff-bound"),
            ts("2"),
            ts("--emit"),
            ts("jsonl"),
        ],
    ];

    let mut pass = true;
    for cmd in &commands {
        let mut outputs = Vec::new();
        for workers in ["1", "8"] {
            for _ in 0..2 {
                let mut args = cmd.clone();
                args.push("--workers".into());
                args.push(workers.into());
                outputs.push(run(&args));
            }
        }
        let ok = outputs.windows(2).all(|w| w[0] == w[1])
            && outputs[0].1 == Some(0);
        if !ok {
            eprintln!("command differs or failed: {cmd:?}");
            pass = false;
        }
    }
    println!(
        "criterion 10 {} — every CLI command, run twice with workers 1 and 8, emits byte-identical output",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::fs::remove_dir_all(&dir);
    assert!(pass);
}
