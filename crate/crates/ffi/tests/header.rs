use std::path::Path;
use std::process::Command;

const PROGRAM: &str = r#"
#include "stpp.h"

int main(void) {
    double w[4] = {0, 1, 0, 1}, iv[2] = {0, 1};
    StppPattern *p = NULL;
    StppStatus s = stpp_sim_poisson(100.0, w, iv, 1, &p);
    size_t n = stpp_pattern_len(p);
    stpp_pattern_free(p);
    return s == STPP_STATUS_OK && n > 0 ? 0 : 1;
}
"#;

/// The generated header parses as C99 and declares what a caller needs.
#[test]
fn header_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("stpp.h").is_file());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler found; skipping");
            return;
        }
    };
    assert!(status.success());
}
