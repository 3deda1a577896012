//! Experiment descriptors: a TOML file whose fields can be overridden from
//! the command line.

use std::fmt;
use std::path::{Path, PathBuf};

use mipstar::instances::SuccinctGraph;
use mipstar::FieldSpec;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GenInstance,
    Prove,
    Estimate,
    Mlgame,
    QuantumEval,
    CheckLemmas,
    BiasAudit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GenInstance => "gen-instance",
            Command::Prove => "prove",
            Command::Estimate => "estimate",
            Command::Mlgame => "mlgame",
            Command::QuantumEval => "quantum-eval",
            Command::CheckLemmas => "check-lemmas",
            Command::BiasAudit => "bias-audit",
        }
    }

    /// What the experiment exercises; printed as the summary header.
    pub fn anchor(self) -> &'static str {
        match self {
            Command::GenInstance => "arithmetized succinct 3-coloring constraint",
            Command::Prove => "five-test protocol runs: consistency, linearity, AND test",
            Command::Estimate => "five-test protocol acceptance with Hoeffding interval",
            Command::Mlgame => "multilinearity game: consistency and axis-parallel linearity tests",
            Command::QuantumEval => "multilinearity game with entangled players",
            Command::CheckLemmas => "gentle measurement, expansion and trace-norm Cauchy-Schwarz inequalities",
            Command::BiasAudit => "powering small-bias set: exhaustive pattern bias",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every field a descriptor may carry. Which ones are used depends on the
/// command.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Descriptor {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    /// Output prefix; `.csv`, `.jsonl` and `.instance` are appended.
    pub output: Option<PathBuf>,
    /// A bundled instance name or an edge-list file.
    pub instance: Option<String>,
    pub field: Option<String>,
    pub alpha: Option<u64>,
    /// Protocol strategies, one per prover or one for all three.
    pub strategies: Option<Vec<String>>,
    pub colors: Option<Vec<u8>>,
    pub rate: Option<f64>,
    pub value: Option<u64>,
    pub repetitions: Option<usize>,
    pub beta: Option<f64>,
    /// Players `r` of the multilinearity game.
    pub players: Option<usize>,
    /// Variables `n` of the multilinearity game.
    pub variables: Option<usize>,
    /// Classical strategy description for `mlgame` and `quantum-eval`.
    pub strategy: Option<String>,
    pub strategy_file: Option<PathBuf>,
    /// Local dimension of a random projective strategy.
    pub dimension: Option<usize>,
    pub instances: Option<usize>,
    pub max_dim: Option<usize>,
    /// Number of indices `K` of the small-bias set, a power of two.
    pub indices: Option<u64>,
    pub mprime: Option<u32>,
    /// Directory that relative paths in the descriptor resolve against.
    #[serde(skip)]
    pub base: PathBuf,
}

impl Descriptor {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let mut d: Descriptor =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        d.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = d.base.clone();
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        rebase(&mut d.output);
        rebase(&mut d.strategy_file);
        if let Some(inst) = &d.instance {
            if bundled(inst).is_none() && Path::new(inst).is_relative() {
                d.instance = Some(base.join(inst).to_string_lossy().into_owned());
            }
        }
        Ok(d)
    }

    /// The seed, required for stochastic commands.
    pub fn require_seed(&self, command: Command) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage(format!("`{command}` is stochastic and needs a seed (--seed)")))
    }

    pub fn require<T: Clone>(value: &Option<T>, what: &str, command: Command) -> Result<T, CliError> {
        value
            .clone()
            .ok_or_else(|| CliError::Usage(format!("`{command}` needs `{what}`")))
    }

    pub fn field_spec(&self, default: &str) -> Result<FieldSpec, CliError> {
        parse_field(self.field.as_deref().unwrap_or(default))
    }

    pub fn graph(&self, command: Command) -> Result<SuccinctGraph, CliError> {
        let name = Self::require(&self.instance, "instance", command)?;
        if let Some(text) = bundled(&name) {
            return SuccinctGraph::parse(text).map_err(|e| CliError::Internal(format!("bundled `{name}`: {e}")));
        }
        let text = std::fs::read_to_string(&name)
            .map_err(|e| CliError::Usage(format!("cannot read instance {name}: {e}")))?;
        SuccinctGraph::parse(&text).map_err(|e| CliError::Usage(format!("{name}: {e}")))
    }
}

pub const BUNDLED: [(&str, &str); 3] = [
    ("triangle", include_str!("../instances/triangle.graph")),
    ("k4", include_str!("../instances/k4.graph")),
    ("four-cycle", include_str!("../instances/four-cycle.graph")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// `gf4`, `gf64`, `gf2^k`, or `gf2^k:<modulus>` with a hex or decimal
/// modulus. Degrees 6, 18 and 54 select the tower fields.
pub fn parse_field(text: &str) -> Result<FieldSpec, CliError> {
    let bad = |msg: String| CliError::Usage(format!("bad field `{text}`: {msg}"));
    let lower = text.trim().to_ascii_lowercase();
    let (degree, modulus) = match lower.as_str() {
        "gf4" => return Ok(FieldSpec::gf4()),
        "gf64" => return Ok(FieldSpec::gf64()),
        other => {
            let rest = other
                .strip_prefix("gf2^")
                .ok_or_else(|| bad("expected gf4, gf64, gf2^k or gf2^k:<modulus>".into()))?;
            match rest.split_once(':') {
                Some((k, m)) => (k, Some(m)),
                None => (rest, None),
            }
        }
    };
    let k: u32 = degree.parse().map_err(|_| bad("degree is not an integer".into()))?;
    match modulus {
        Some(m) => {
            let m = match m.strip_prefix("0x") {
                Some(h) => u64::from_str_radix(h, 16),
                None => m.parse(),
            }
            .map_err(|_| bad("modulus is not an integer".into()))?;
            FieldSpec::custom(k, m).map_err(|e| bad(e.to_string()))
        }
        None => match k {
            2 => Ok(FieldSpec::gf4()),
            6 => Ok(FieldSpec::gf64()),
            18 => Ok(FieldSpec::gf2_18()),
            54 => FieldSpec::tower(3).map_err(|e| bad(e.to_string())),
            _ => FieldSpec::binary(k).map_err(|e| bad(e.to_string())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_instances_match_builders() {
        assert_eq!(SuccinctGraph::parse(bundled("triangle").unwrap()).unwrap(), SuccinctGraph::triangle());
        assert_eq!(SuccinctGraph::parse(bundled("k4").unwrap()).unwrap(), SuccinctGraph::k4());
        assert_eq!(SuccinctGraph::parse(bundled("four-cycle").unwrap()).unwrap(), SuccinctGraph::four_cycle());
    }

    #[test]
    fn field_names() {
        assert_eq!(parse_field("gf4").unwrap(), FieldSpec::gf4());
        assert_eq!(parse_field("GF2^6").unwrap(), FieldSpec::gf64());
        assert_eq!(parse_field("gf2^18").unwrap(), FieldSpec::gf2_18());
        assert_eq!(parse_field("gf2^3:0xb").unwrap().modulus(), 0xb);
        assert_eq!(parse_field("gf2^5").unwrap().k(), 5);
        assert!(parse_field("gf2^3:0x9").is_err());
        assert!(parse_field("gf3").is_err());
    }

    #[test]
    fn unknown_descriptor_keys_are_rejected() {
        assert!(toml::from_str::<Descriptor>("sed = 3").is_err());
        let d: Descriptor = toml::from_str("command = \"bias-audit\"\nindices = 8\nmprime = 6").unwrap();
        assert_eq!(d.command, Some(Command::BiasAudit));
    }
}
