use std::ffi::OsString;

/// Placeholder while subcommands land.
pub fn run<I: IntoIterator<Item = OsString>>(_argv: I) -> i32 {
    2
}
