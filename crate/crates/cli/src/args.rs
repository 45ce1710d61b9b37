use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "nilprog",
    version,
    about = "Nilpotent groups, Lie algebras and progressions"
)]
pub struct Cli {
    /// Worker threads (output does not depend on this).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for randomized corpora.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Enumeration budget (number of elements).
    #[arg(long, global = true, default_value_t = nilprog::prog::DEFAULT_BUDGET)]
    pub budget: u64,
    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Replay a saved manifest; other flags except --workers are ignored.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Save the manifest of this invocation.
    #[arg(long, global = true)]
    pub save_manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

/// Everything that determines the output of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    #[serde(flatten)]
    pub command: Command,
    pub seed: u64,
    pub budget: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Hall basis of the free nilpotent group of rank r and step s.
    Hall {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        step: usize,
        /// Include the commutator table.
        #[arg(long)]
        #[serde(default)]
        table: bool,
    },
    /// Collected (Mal'cev) coordinates of a word such as "x2 x1^-1".
    Collect {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        step: usize,
        #[arg(long, allow_hyphen_values = true)]
        word: String,
    },
    /// BCH product and bracket of two vectors, or the structure constants and
    /// series coefficients when no vectors are given.
    Bch {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        step: usize,
        #[arg(long, allow_hyphen_values = true, requires = "y")]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true, requires = "x")]
        y: Option<String>,
    },
    /// Nilpotent box approximation of a box in a Lie lattice.
    Box {
        /// Box lengths, one per coordinate.
        #[arg(long)]
        lengths: String,
        #[arg(long, value_enum, default_value_t = Algebra::Free)]
        #[serde(default)]
        algebra: Algebra,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        step: Option<usize>,
        /// Project along this primitive central vector first.
        #[arg(long, allow_hyphen_values = true)]
        quotient: Option<String>,
        #[arg(long, value_enum, default_value_t = Mode::Relaxed)]
        #[serde(default)]
        mode: Mode,
        /// Double the lengths until the body is strictly thick.
        #[arg(long)]
        #[serde(default)]
        prescale: bool,
    },
    /// Successive minima and a Mahler basis for an axis box.
    Minima {
        /// Lattice basis columns, e.g. "1,0;1/2,1/2".
        #[arg(long, allow_hyphen_values = true)]
        basis: String,
        #[arg(long)]
        lengths: String,
    },
    /// Proper coset progression from a progression and a homomorphism.
    Properize {
        #[arg(long)]
        input: PathBuf,
        /// Overrides the m of the input.
        #[arg(long)]
        m: Option<String>,
        #[arg(long, default_value_t = 100)]
        #[serde(default = "default_probes")]
        probes: usize,
        /// Use the direct abelian route (step 1, abelian target).
        #[arg(long)]
        #[serde(default)]
        abelian: bool,
    },
    /// Cayley ball sizes |S^n| as CSV.
    Grow {
        #[arg(long, value_enum, default_value_t = Group::Heisenberg)]
        #[serde(default)]
        group: Group,
        /// standard, box:a,b,c, cubic:n or interval:k.
        #[arg(long, default_value = "standard")]
        #[serde(default = "default_gens")]
        gens: String,
        #[arg(long)]
        modulus: Option<i64>,
        #[arg(long)]
        nmax: u32,
    },
    /// Growth persistence across a family of generating sets.
    Persist {
        #[arg(long, value_enum, default_value_t = Family::Cubic)]
        #[serde(default)]
        family: Family,
        /// Family parameters, e.g. "1,2".
        #[arg(long)]
        ns: String,
        #[arg(long = "M", default_value = "1")]
        #[serde(rename = "M")]
        big_m: String,
        #[arg(long = "D", default_value = "3")]
        #[serde(rename = "D")]
        big_d: String,
        #[arg(long)]
        rmax: u32,
    },
    /// Sumset cover exponent of a symmetric set in a box.
    Rom8 {
        /// JSON list of points; a random symmetric set is drawn otherwise.
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long)]
        lengths: String,
        /// Inclusion probability of each ± pair for random sets.
        #[arg(long, default_value = "1/4")]
        #[serde(default = "default_density")]
        density: String,
        /// Required density |A| / (L_1 ⋯ L_d).
        #[arg(long, default_value = "1/4")]
        #[serde(default = "default_density")]
        c: String,
        #[arg(long, default_value_t = 64)]
        #[serde(default = "default_max_k")]
        max_k: u32,
    },
    /// Run a named invariant suite (all, hall, nilalg, latgeo, bilu, growth,
    /// determinism or criterionN).
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn default_probes() -> usize {
    100
}

fn default_gens() -> String {
    "standard".into()
}

fn default_density() -> String {
    "1/4".into()
}

fn default_max_k() -> u32 {
    64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algebra {
    #[default]
    Free,
    Abelian,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Strict,
    #[default]
    Relaxed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Integers,
    #[default]
    Heisenberg,
    Cyclic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Heisenberg,
    #[default]
    Cubic,
}
