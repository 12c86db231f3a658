use std::path::PathBuf;
use std::process::Command;

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/blm.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["blm_model_parse", "blm_integrate", "blm_string_free", "blm_last_error", "BLM_STATUS_VIOLATIONS"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let probe = tempfile::tempdir().unwrap();
    let src = probe.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"blm.h\"\nint main(void) { BlmModel *m = 0; return blm_model_parse(\"\", &m) == BLM_STATUS_OK; }\n",
    )
    .unwrap();
    for (compiler, extra) in [("cc", vec!["-std=c99"]), ("c++", vec!["-x", "c++"])] {
        let Ok(status) = Command::new(compiler)
            .args(&extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(dir.join("include"))
            .arg(&src)
            .status()
        else {
            eprintln!("{compiler} unavailable; skipping");
            continue;
        };
        assert!(status.success(), "{compiler} rejected the header");
    }
}
