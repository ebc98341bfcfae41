//! Command-line pipelines. The binary is a thin dispatcher over this module.

/// Placeholder during bring-up; the full command set lands with the
/// pipeline modules.
pub fn run_from_args<I, T>(_args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    eprintln!("parafix: commands not wired up yet");
    2
}
