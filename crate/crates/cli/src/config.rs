//! Command-line and file configuration.
//!
//! Every command has a fixed set of keys. Values come from a flat
//! `key = value` file (`--config`), then `NAGSTAB_<KEY>` environment
//! variables, then `--key value` flags, each overriding the one before.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, UsageError> {
    value
        .parse()
        .map_err(|_| usage(format!("line {line}: cannot parse `{value}` for key `{key}`")))
}

/// Applies one file entry; flags and environment values already present win.
pub trait Schema {
    const KEYS: &'static [&'static str];
    fn config_path(&self) -> Option<&Path>;
    fn fill(&mut self, key: &str, value: &str, line: usize) -> Result<(), UsageError>;
    /// Resolved `key=value` pairs for the run record.
    fn echo(&self) -> Vec<(String, String)>;
}

macro_rules! command_args {
    ($name:ident { $( $(#[$doc:meta])* $field:ident : $ty:ty = ($key:literal, $env:literal) ),* $(,)? }) => {
        #[derive(Args, Debug, Default, Clone, PartialEq)]
        pub struct $name {
            /// File of `key = value` lines; flags and environment override it
            #[arg(long)]
            pub config: Option<PathBuf>,
            $(
                $(#[$doc])*
                #[arg(long = $key, env = $env)]
                pub $field: Option<$ty>,
            )*
        }

        impl Schema for $name {
            const KEYS: &'static [&'static str] = &[$($key),*];

            fn config_path(&self) -> Option<&Path> {
                self.config.as_deref()
            }

            fn fill(&mut self, key: &str, value: &str, line: usize) -> Result<(), UsageError> {
                match key {
                    $( $key => {
                        if self.$field.is_none() {
                            self.$field = Some(parse_value(key, value, line)?);
                        }
                    } )*
                    _ => {
                        return Err(usage(format!(
                            "line {line}: unknown key `{key}`; this command accepts {}",
                            Self::KEYS.join(", ")
                        )))
                    }
                }
                Ok(())
            }

            fn echo(&self) -> Vec<(String, String)> {
                let mut out = Vec::new();
                $( if let Some(v) = &self.$field {
                    out.push(($key.to_string(), format!("{v:?}").trim_matches('"').to_string()));
                } )*
                out
            }
        }
    };
}

command_args!(ConstructArgs {
    /// Lipschitz constant
    g: f64 = ("G", "NAGSTAB_G"),
    /// Smoothness
    beta: f64 = ("beta", "NAGSTAB_BETA"),
    /// Step size, at most 1/beta
    eta: f64 = ("eta", "NAGSTAB_ETA"),
    /// Initial perturbation
    eps: f64 = ("eps", "NAGSTAB_EPS"),
    /// Write the construction in text form here
    out: PathBuf = ("out", "NAGSTAB_OUT"),
});

command_args!(DivergeArgs {
    g: f64 = ("G", "NAGSTAB_G"),
    beta: f64 = ("beta", "NAGSTAB_BETA"),
    eta: f64 = ("eta", "NAGSTAB_ETA"),
    eps: f64 = ("eps", "NAGSTAB_EPS"),
    /// Horizon; defaults past the floor clause
    t: usize = ("T", "NAGSTAB_T"),
    /// Per-step CSV path
    out: PathBuf = ("out", "NAGSTAB_OUT"),
});

command_args!(Figure2Args {
    /// eta * beta preset: 0.5 or 0.1
    preset: String = ("preset", "NAGSTAB_PRESET"),
    g: f64 = ("G", "NAGSTAB_G"),
    beta: f64 = ("beta", "NAGSTAB_BETA"),
    eta: f64 = ("eta", "NAGSTAB_ETA"),
    eps: f64 = ("eps", "NAGSTAB_EPS"),
    t: usize = ("T", "NAGSTAB_T"),
    out: PathBuf = ("out", "NAGSTAB_OUT"),
});

command_args!(UniformArgs {
    g: f64 = ("G", "NAGSTAB_G"),
    beta: f64 = ("beta", "NAGSTAB_BETA"),
    eta: f64 = ("eta", "NAGSTAB_ETA"),
    /// Sample size, at least 4
    n: usize = ("n", "NAGSTAB_N"),
    t: usize = ("T", "NAGSTAB_T"),
    /// Per-step CSV of the gap
    out: PathBuf = ("out", "NAGSTAB_OUT"),
    /// Scenario text export
    export: PathBuf = ("export", "NAGSTAB_EXPORT"),
});

command_args!(QuadnormArgs {
    trials: usize = ("trials", "NAGSTAB_TRIALS"),
    /// Longest prefix
    t: usize = ("T", "NAGSTAB_T"),
    seed: u64 = ("seed", "NAGSTAB_SEED"),
    /// CSV of the first violating schedule (header only if none)
    out: PathBuf = ("out", "NAGSTAB_OUT"),
});

command_args!(VariantsArgs {
    /// variant1, variant2 or all
    variant: String = ("variant", "NAGSTAB_VARIANT"),
    beta: f64 = ("beta", "NAGSTAB_BETA"),
    t: usize = ("T", "NAGSTAB_T"),
    trials: usize = ("trials", "NAGSTAB_TRIALS"),
    seed: u64 = ("seed", "NAGSTAB_SEED"),
});

command_args!(VerifyArgs {
    g: f64 = ("G", "NAGSTAB_G"),
    beta: f64 = ("beta", "NAGSTAB_BETA"),
    eta: f64 = ("eta", "NAGSTAB_ETA"),
    eps: f64 = ("eps", "NAGSTAB_EPS"),
    n: usize = ("n", "NAGSTAB_N"),
    t: usize = ("T", "NAGSTAB_T"),
    trials: usize = ("trials", "NAGSTAB_TRIALS"),
    seed: u64 = ("seed", "NAGSTAB_SEED"),
    /// Verify a stored construction instead of the default grid
    input: PathBuf = ("input", "NAGSTAB_INPUT"),
});

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Build the hard function and check its consistency
    Construct(ConstructArgs),
    /// Divergence of NAG on the hard function, per step
    Diverge(DivergeArgs),
    /// Run every checker on the default grid or on a stored construction
    #[command(alias = "verify-all")]
    Verify(VerifyArgs),
    /// Uniform-stability reduction and gap
    Uniform(UniformArgs),
    /// Transfer-matrix norm bound and counterexample
    Quadnorm(QuadnormArgs),
    /// Equivalence of the two literature variants with canonical NAG
    Variants(VariantsArgs),
    /// Divergence data of the two figure presets
    Figure2(Figure2Args),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Construct(_) => "construct",
            Command::Diverge(_) => "diverge",
            Command::Verify(_) => "verify",
            Command::Uniform(_) => "uniform",
            Command::Quadnorm(_) => "quadnorm",
            Command::Variants(_) => "variants",
            Command::Figure2(_) => "figure2",
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "nagstab", version, about = "Stability experiments for Nesterov's accelerated gradient")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Parses `key = value` lines, skipping blanks and `#` comments.
pub fn parse_config_text(text: &str) -> Result<Vec<(usize, String, String)>, UsageError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("line {}: expected `key = value`, found `{line}`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(usage(format!("line {}: empty key or value in `{line}`", i + 1)));
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn apply_file<S: Schema>(args: &mut S) -> Result<(), UsageError> {
    let Some(path) = args.config_path().map(Path::to_path_buf) else {
        return Ok(());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    for (line, k, v) in parse_config_text(&text)? {
        args.fill(&k, &v, line)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn check_step(eta: Option<f64>, beta: Option<f64>) -> Result<(), UsageError> {
    let (eta, beta) = (eta.unwrap_or(0.5), beta.unwrap_or(1.0));
    if !(eta > 0.0 && beta > 0.0) {
        return Err(usage(format!("eta and beta must be positive, got eta = {eta}, beta = {beta}")));
    }
    if eta * beta > 1.0 + 1e-12 {
        return Err(usage(format!("eta must satisfy eta <= 1/beta, got eta = {eta}, beta = {beta}")));
    }
    Ok(())
}

/// Merges the config file into the parsed flags and validates the keys that
/// every command shares.
pub fn resolve(mut cmd: Command) -> Result<Command, UsageError> {
    match &mut cmd {
        Command::Construct(a) => {
            apply_file(a)?;
            check_step(a.eta, a.beta)?;
        }
        Command::Diverge(a) => {
            apply_file(a)?;
            check_step(a.eta, a.beta)?;
        }
        Command::Figure2(a) => {
            apply_file(a)?;
            if let Some(p) = &a.preset {
                if p != "0.5" && p != "0.1" {
                    return Err(usage(format!("unknown preset `{p}`; use 0.5 or 0.1")));
                }
            }
            check_step(a.eta, a.beta)?;
        }
        Command::Uniform(a) => {
            apply_file(a)?;
            check_step(a.eta.or(Some(1.0)), a.beta)?;
        }
        Command::Quadnorm(a) => apply_file(a)?,
        Command::Variants(a) => {
            apply_file(a)?;
            if let Some(v) = &a.variant {
                if !matches!(v.as_str(), "variant1" | "variant2" | "all") {
                    return Err(usage(format!("unknown variant `{v}`; use variant1, variant2 or all")));
                }
            }
        }
        Command::Verify(a) => {
            apply_file(a)?;
            check_step(a.eta, a.beta)?;
        }
    }
    Ok(cmd)
}

/// Parses arguments (including the program name) and resolves the config.
pub fn parse_config<I, T>(args: I) -> Result<Command, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(args).map(|c| c.command)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        let mut v = vec!["nagstab"];
        v.extend_from_slice(args);
        parse_config(v).unwrap()
    }

    #[test]
    fn construct_flags() {
        let Command::Construct(a) = parse(&["construct", "--G", "1", "--beta", "1", "--eta", "0.5", "--eps", "1e-5"])
        else {
            panic!()
        };
        assert_eq!((a.g, a.beta, a.eta, a.eps), (Some(1.0), Some(1.0), Some(0.5), Some(1e-5)));
        assert!(resolve(Command::Construct(a)).is_ok());
    }

    #[test]
    fn step_size_above_inverse_smoothness_is_rejected() {
        let cmd = parse(&["construct", "--eta", "2", "--beta", "1"]);
        assert!(resolve(cmd).unwrap_err().0.contains("eta <= 1/beta"));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\nseed = 42\ntrials = 3\n").unwrap();
        let p = path.to_str().unwrap();
        let Command::Quadnorm(a) = resolve(parse(&["quadnorm", "--config", p, "--seed", "7"])).unwrap() else {
            panic!()
        };
        assert_eq!((a.seed, a.trials), (Some(7), Some(3)));
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "seed = 42\nwarp = 9\n").unwrap();
        let err = resolve(parse(&["quadnorm", "--config", path.to_str().unwrap()])).unwrap_err();
        assert!(err.0.contains("unknown key `warp`"), "{err}");
        std::fs::write(&path, "seed = forty\n").unwrap();
        let err = resolve(parse(&["quadnorm", "--config", path.to_str().unwrap()])).unwrap_err();
        assert!(err.0.contains("`forty`"), "{err}");
    }

    #[test]
    fn unknown_flags_and_numbers_fail_to_parse() {
        assert!(parse_config(["nagstab", "construct", "--warp", "1"]).is_err());
        assert!(parse_config(["nagstab", "construct", "--eta", "fast"]).is_err());
        assert!(parse_config(["nagstab", "teleport"]).is_err());
        // keys belong to commands
        assert!(parse_config(["nagstab", "construct", "--seed", "1"]).is_err());
    }

    #[test]
    fn config_lines() {
        let v = parse_config_text("a = 1\n\n  # x\nb=2").unwrap();
        assert_eq!(v, vec![(1, "a".into(), "1".into()), (4, "b".into(), "2".into())]);
        assert!(parse_config_text("novalue").is_err());
    }
}
