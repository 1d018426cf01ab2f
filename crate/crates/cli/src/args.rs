use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "prerand", version, about = "Distances, causality, geodesics, cut loci and magnetic orbits for pre-Randers metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the scenario with its metric in another representation.
    Convert {
        #[command(flatten)]
        common: Common,
        /// Target section: pre_randers, som or killing_submersion.
        #[arg(long)]
        into: Option<String>,
    },
    /// Grid pre-distances: a pair, a field, a ball indicator or the full matrix.
    Distance {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        task: TaskArgs,
        /// Emit the full d_F matrix.
        #[arg(long, conflicts_with = "to")]
        all: bool,
        /// Add ball indicators of this radius to the field output.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Pre-geodesics by integration, shooting or periodic search.
    Geodesic {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        task: TaskArgs,
        /// Initial velocity for an initial value problem.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_pair, conflicts_with_all = ["to", "periodic"])]
        dir: Option<[f64; 2]>,
    },
    /// Causal ladder and Harris classification.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Write the horizon functions d_F(from, .) and -d_F(., from) here.
        #[arg(long)]
        horizon: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
        from: Option<[f64; 2]>,
    },
    /// Harris weight, its cycle and the delta table.
    Weight {
        #[command(flatten)]
        common: Common,
    },
    /// Distance to a set, its cut locus and the refinement table.
    Cutlocus {
        #[command(flatten)]
        common: Common,
        /// `point x,y` or `circle cx,cy,r`.
        #[arg(long, num_args = 2, value_names = ["KIND", "SPEC"])]
        target: Option<Vec<String>>,
        /// Grid sizes for the refinement table.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        /// Write the refinement table here instead of the output header.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Magnetic orbits of a given energy.
    Magnetic {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        task: TaskArgs,
        /// Field strength B, an expression in x and y.
        #[arg(long = "B")]
        b: Option<String>,
        #[arg(long)]
        energy: Option<f64>,
        /// Initial direction; scaled to the energy.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_pair, conflicts_with_all = ["to", "periodic"])]
        dir: Option<[f64; 2]>,
    },
    /// Run the acceptance suite.
    Selftest {
        /// Run a single criterion.
        #[arg(long)]
        criterion: Option<usize>,
    },
}

/// Scenario source and numeric knobs shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Scenario file.
    #[arg(long, conflicts_with = "builtin")]
    pub config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Grid size per axis.
    #[arg(long, alias = "grid")]
    pub n: Option<usize>,
    /// Neighbour stencil: 8, 16 or 32.
    #[arg(long)]
    pub stencil: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub w_max: Option<i64>,
    #[arg(long)]
    pub eps_shoot_rel: Option<f64>,
    #[arg(long)]
    pub convexity_budget: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TaskArgs {
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    pub from: Option<[f64; 2]>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    pub to: Option<[f64; 2]>,
    /// Closed orbit in this winding class.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_winding, conflicts_with = "to")]
    pub periodic: Option<[i64; 2]>,
    /// Initial heading angle in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub heading: Option<f64>,
    /// Parameter length of an initial value problem.
    #[arg(long)]
    pub span: Option<f64>,
}

fn parse_list<T: std::str::FromStr>(s: &str, len: usize) -> Result<Vec<T>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != len {
        return Err(format!("expected {len} comma-separated numbers, got `{s}`"));
    }
    parts.iter().map(|p| p.parse::<T>().map_err(|_| format!("`{p}` is not a number"))).collect()
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v = parse_list::<f64>(s, 2)?;
    Ok([v[0], v[1]])
}

fn parse_winding(s: &str) -> Result<[i64; 2], String> {
    let v = parse_list::<i64>(s, 2)?;
    Ok([v[0], v[1]])
}

pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v = parse_list::<f64>(s, 3)?;
    Ok([v[0], v[1], v[2]])
}
