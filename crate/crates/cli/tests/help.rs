use std::process::Command;

fn help(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_tperc")).args(args).arg("--help").output().unwrap();
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

fn assert_mentions(text: &str, words: &[&str]) {
    for w in words {
        assert!(text.contains(w), "help is missing {w:?}:\n{text}");
    }
}

#[test]
fn top_level_help() {
    let h = help(&[]);
    assert_mentions(&h, &["--seed", "--config", "--threads", "edges", "depth", "patches", "penalty", "bench", "terrain", "stream"]);
    assert_mentions(&h, &["0  success", "2  input error", "3  empty mesh", "4  patch attempt budget exhausted", "TOML", ".obj", ".stl", ".tpm"]);
}

#[test]
fn subcommand_help_covers_flags_units_and_schemas() {
    let cases: [(&str, &[&str]); 7] = [
        ("edges", &["--mesh", "--tau", "(rad)", "--radius", "(m)", "--grid", "--out", "--raw", "TPE1", "reduction ratio", "0 edges"]),
        (
            "depth",
            &["--mesh", "--input", "--camera", "--pipeline", "sim", "real", "none", "--out", "<STEM>.json", "<STEM>.f32", "hfov_deg", "look_at", "orientation_wxyz", "(m)", "(degrees)", "-1"],
        ),
        ("patches", &["--mesh", "--radius", "--delta", "(m)", "--count", "--max-attempts", "--out", "[x, y, z]", "status 4"]),
        (
            "penalty",
            &["--mesh", "--edges", "--traj", "--out", "--radius", "--epsilon", "(m/s)", "--support-tol", "--foot-grid", "qw, qx, qy, qz", "wx, wy, wz", "(rad/s)", "t, r_vol, landing_area"],
        ),
        ("bench", &["--suite", "--sizes", "--runs", "--json", "depth", "penetration", "raycast", "patches", "(ms)"]),
        ("terrain", &["--kind", "--spec", "--out", "meters", "radians"]),
        ("stream", &["TPD1", "little-endian f32", "normalized"]),
    ];
    for (cmd, words) in cases {
        let h = help(&[cmd]);
        assert_mentions(&h, words);
        assert_mentions(&h, &["--seed", "--config", "--threads"]);
    }
}
