//! The committed C header must match what cbindgen generates from the
//! current source. Regenerate with:
//!
//! ```text
//! STREL_BLESS_HEADER=1 cargo test -p strel-capi --test header_sync
//! ```

use std::path::Path;

#[test]
fn committed_header_is_current() {
    let crate_dir = env!("CARGO_MANIFEST_DIR");
    let config = cbindgen::Config::from_file(Path::new(crate_dir).join("cbindgen.toml"))
        .expect("cbindgen.toml parses");
    let mut generated = Vec::new();
    cbindgen::Builder::new()
        .with_crate(crate_dir)
        .with_config(config)
        .generate()
        .expect("cbindgen accepts the crate")
        .write(&mut generated);
    let generated = String::from_utf8(generated).expect("header is utf-8");

    let committed_path = Path::new(crate_dir).join("include/strel.h");
    if std::env::var_os("STREL_BLESS_HEADER").is_some() {
        std::fs::write(&committed_path, &generated).expect("header writes");
        return;
    }
    let committed = std::fs::read_to_string(&committed_path)
        .expect("include/strel.h exists; bless it with STREL_BLESS_HEADER=1");
    assert_eq!(
        committed, generated,
        "include/strel.h is stale; regenerate with STREL_BLESS_HEADER=1"
    );
}
