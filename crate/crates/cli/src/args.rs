use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "freediv", version, about = "Exact divisor theory on metric graphs")]
pub struct Cli {
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Add the wall time to the report. Reports are otherwise byte-identical
    /// across reruns.
    #[arg(long, global = true)]
    pub timing: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DivisorInput {
    /// Graph file in line format or JSON.
    #[arg(long)]
    pub graph: PathBuf,

    /// Divisor, e.g. `2u - v + e:a@1/2` or `(v:u, 2), (e:a@1/2, -1)`.
    #[arg(long, allow_hyphen_values = true)]
    pub divisor: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduced divisor at a point, with the firing script that reaches it.
    Reduce {
        #[command(flatten)]
        input: DivisorInput,
        /// Base point, e.g. `v:u` or `e:a@1/3`.
        #[arg(long)]
        point: String,
    },

    /// Burning algorithm from a point.
    Burn {
        #[command(flatten)]
        input: DivisorInput,
        #[arg(long)]
        point: String,
    },

    /// Linear equivalence of two divisors, cross-checked on the Jacobian.
    /// Exits 1 when they are not equivalent.
    Equivalent {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        d1: String,
        #[arg(long, allow_hyphen_values = true)]
        d2: String,
    },

    /// Rank, the rank of `K - D`, and the Riemann-Roch check.
    Rank {
        #[command(flatten)]
        input: DivisorInput,
    },

    /// Base-point scan on a lattice. Exits 1 when a base point is found.
    FreeCheck {
        #[command(flatten)]
        input: DivisorInput,
        #[arg(long, default_value_t = 4)]
        resolution: u32,
    },

    /// Abel-Jacobi image of a divisor.
    AbelJacobi {
        #[command(flatten)]
        input: DivisorInput,
        /// Base point; defaults to the first vertex.
        #[arg(long)]
        base: Option<String>,
    },

    /// Search for a free divisor of degree 2r+a and rank r on a genus-g
    /// graph and certify it.
    VerifyTheorem2 {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        r: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        budget: usize,
        #[arg(long, default_value_t = 4)]
        resolution: u32,
        /// Worker threads; the result does not depend on it.
        #[arg(long)]
        jobs: Option<usize>,
    },

    /// Hyperelliptic chain of circles with the divisor rE + F.
    Hyperelliptic {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        r: i64,
        #[arg(long, default_value_t = 0)]
        f: usize,
        #[arg(long, default_value_t = 4)]
        resolution: u32,
    },
}
