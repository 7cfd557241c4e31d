use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR not set");

    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("SPRINT_H".to_string()),
        sys_includes: vec!["stdint.h".to_string(), "stddef.h".to_string()],
        header: Some("/* C interface for the sprint sparse retrieval engine. */".to_string()),
        cpp_compat: true,
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: true,
            rename_variants: cbindgen::RenameRule::ScreamingSnakeCase,
            ..Default::default()
        },
        ..Default::default()
    };

    let bindings = cbindgen::generate_with_config(&crate_dir, config)
        .expect("cbindgen failed to generate the C header");

    let out_dir = PathBuf::from(env::var("OUT_DIR").expect("OUT_DIR not set"));
    bindings.write_to_file(out_dir.join("sprint.h"));
    // Kept in-tree so C consumers can include it without running cargo.
    bindings.write_to_file(PathBuf::from(&crate_dir).join("include").join("sprint.h"));

    println!("cargo:rerun-if-changed=src/lib.rs");
}
