//! The `genbayes` command line: generate synthetic data, train, sample,
//! evaluate and benchmark, writing CSV artifacts plus the resolved config.
//!
//! Exit codes are 0 on success, 2 for usage errors and 1 for runtime
//! failures.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgMatches, Command};

pub mod commands;
pub mod config;
pub mod model;

use config::{Key, Settings, UsageError, SEED_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

struct Sub {
    name: &'static str,
    about: &'static str,
    keys: fn() -> Vec<Key>,
    run: fn(&mut Settings) -> anyhow::Result<()>,
}

const SUBCOMMANDS: [Sub; 5] = [
    Sub {
        name: "generate",
        about: "Simulate a synthetic causal dataset with ground truth",
        keys: commands::generate::keys,
        run: commands::generate::run,
    },
    Sub {
        name: "train",
        about: "Train the causal quantile network or the posterior engine",
        keys: commands::train::keys,
        run: commands::train::run,
    },
    Sub {
        name: "sample",
        about: "Draw effect or parameter posteriors from a checkpoint",
        keys: commands::sample::keys,
        run: commands::sample::run,
    },
    Sub {
        name: "evaluate",
        about: "Score a checkpoint against ground truth",
        keys: commands::evaluate::keys,
        run: commands::evaluate::run,
    },
    Sub {
        name: "benchmark",
        about: "Seeded replications of generate, train and evaluate",
        keys: commands::benchmark::keys,
        run: commands::benchmark::run,
    },
];

fn cli() -> Command {
    let mut cmd = Command::new("genbayes")
        .about("Generative quantile networks for Bayesian computation and causal effects")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for sub in &SUBCOMMANDS {
        let mut c = Command::new(sub.name)
            .about(sub.about)
            .arg(Arg::new("config").long("config").value_name("FILE").help("key = value settings file"))
            .arg(Arg::new("out").long("out").value_name("DIR").default_value(".").help("Output directory"));
        for k in (sub.keys)() {
            let help = match k.default {
                Some(d) => format!("{} [default: {d}]", k.help),
                None => k.help.to_owned(),
            };
            c = c.arg(
                Arg::new(k.name)
                    .long(k.name)
                    .value_name("VALUE")
                    .allow_hyphen_values(true)
                    .help(help),
            );
        }
        cmd = cmd.subcommand(c);
    }
    cmd
}

fn settings(keys: &[Key], m: &ArgMatches) -> anyhow::Result<Settings> {
    let flags: Vec<(String, String)> = keys
        .iter()
        .filter_map(|k| m.get_one::<String>(k.name).map(|v| (k.name.to_owned(), v.clone())))
        .collect();
    let env_seed = std::env::var(SEED_ENV).ok();
    let file = m.get_one::<String>("config").map(PathBuf::from);
    let out = PathBuf::from(m.get_one::<String>("out").expect("defaulted"));
    Settings::resolve(keys, file.as_deref(), &flags, env_seed.as_deref(), out)
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (name, sub_m) = matches.subcommand().expect("subcommand required");
    let sub = SUBCOMMANDS.iter().find(|s| s.name == name).expect("registered");
    let result = settings(&(sub.keys)(), sub_m).and_then(|mut s| (sub.run)(&mut s));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn keys_are_unique_per_command() {
        for sub in &SUBCOMMANDS {
            let keys = (sub.keys)();
            for (i, k) in keys.iter().enumerate() {
                assert!(keys[i + 1..].iter().all(|o| o.name != k.name), "{} repeats {}", sub.name, k.name);
                assert!(k.name != "out" && k.name != "config");
            }
        }
    }
}
