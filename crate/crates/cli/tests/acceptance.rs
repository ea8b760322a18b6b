//! Acceptance criterion 10: end-to-end determinism of the full pipeline —
//! two runs of the golden config produce byte-identical sample files and
//! JSON summaries (timestamps excluded, i.e. everything but the manifest),
//! and a 1-thread run agrees with a 4-thread run.

mod common;

use tempfile::TempDir;

use gbs_cli::{load_config, run, Stage};

use common::{dir_snapshot, golden_config, write_config};

#[test]
fn criterion_10_determinism() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), &golden_config());
    let loaded = load_config(&path).unwrap();

    run(&loaded, Stage::Report, Some(1)).unwrap();
    let single = dir_snapshot(&dir.path().join("out"));
    run(&loaded, Stage::Report, Some(1)).unwrap();
    let repeat = dir_snapshot(&dir.path().join("out"));
    run(&loaded, Stage::Report, Some(4)).unwrap();
    let threaded = dir_snapshot(&dir.path().join("out"));

    assert_eq!(single.len(), repeat.len());
    assert_eq!(single.len(), threaded.len());
    let mut compared = 0usize;
    for (which, other) in [("rerun", &repeat), ("4-thread", &threaded)] {
        for ((name_a, bytes_a), (name_b, bytes_b)) in single.iter().zip(other.iter()) {
            assert_eq!(name_a, name_b);
            if name_a == "manifest.json" {
                continue; // sole carrier of the wall-clock timestamp
            }
            assert_eq!(
                bytes_a, bytes_b,
                "{name_a} differs between the 1-thread run and the {which} run"
            );
            compared += 1;
        }
    }
    // Sanity: the comparison actually covered sample files and summaries.
    assert!(single.iter().any(|(n, _)| n.starts_with("samples-")));
    assert!(single.iter().any(|(n, _)| n == "validation-summary.json"));
    assert!(compared >= 2 * (single.len() - 1));
    println!(
        "criterion 10: {} artifacts byte-identical across rerun and thread counts",
        single.len() - 1
    );
    println!("criterion 10: PASS");
}
