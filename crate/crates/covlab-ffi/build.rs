use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("manifest dir"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("cbindgen.toml parses");

    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            // The committed header keeps C consumers buildable without a
            // Rust toolchain; OUT_DIR gets a copy for build-system use.
            let out = PathBuf::from(env::var("OUT_DIR").expect("out dir")).join("covlab.h");
            bindings.write_to_file(&out);
            bindings.write_to_file(crate_dir.join("include/covlab.h"));
        }
        // Syntax errors surface through cargo itself with better spans;
        // failing here would just mask them.
        Err(cbindgen::Error::ParseSyntaxError { .. }) => {}
        Err(e) => panic!("header generation failed: {e}"),
    }
}
