//! Holds the `acceptance` test target; run it with
//! `cargo test -p cgmy-eds-verification --test acceptance`.
