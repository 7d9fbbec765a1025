//! Acceptance checks for `jmatrix`, run with `cargo test -p jmatrix-validation --test acceptance`.
