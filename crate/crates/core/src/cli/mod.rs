//! Command-line front end: `map`, `eval`, `sweep` and `oracle`.
//!
//! Exit codes: 0 on success (including flagged fallbacks), 2 on validation
//! errors, 3 when the exact solver refuses an instance above its limit.

pub mod mapfile;
pub mod sweep;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::evalcost::{evaluate, instance_fingerprint, reduction};
use crate::grid::{dims_create, Grid};
use crate::mappers::{blocked_map, run_one, Aggregate, Algorithm, Flag, NodeConfig};
use crate::oracle::{brute_force_optimal, solve_np_instance, three_way_to_grid, DEFAULT_LIMIT};
use crate::stencil::{Builtin, Stencil, StencilFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

/// Row-chain instances from the partition reduction prune well; allow larger ones.
pub const NP_DEFAULT_LIMIT: usize = 18;

#[derive(Debug, Parser)]
#[command(
    name = "cartreorder",
    version,
    about = "Stencil-aware rank reordering for Cartesian process grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a rank mapping and write it as `old new` lines.
    Map(MapArgs),
    /// Score a mapping file (directed inter-node edge counts).
    Eval(EvalArgs),
    /// Reduction sweep against the blocked mapping, as CSV.
    Sweep(SweepArgs),
    /// Exact solver and 3-way partition instance generator.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Args, Default)]
struct InstanceArgs {
    /// Grid extents, e.g. `5x4`.
    #[arg(long)]
    dims: Option<String>,
    /// Process count; the grid comes from a balanced factorisation.
    #[arg(long)]
    p: Option<usize>,
    /// Number of dimensions for `--p`.
    #[arg(long)]
    ndims: Option<usize>,
    /// Periodic flags per dimension, e.g. `0x1`.
    #[arg(long)]
    periods: Option<String>,
    /// Builtin stencil (`nn`, `component`, `nn-hops`) or a JSON stencil file.
    #[arg(long)]
    stencil: Option<String>,
    /// Flattened offsets as `k:o0,o1,...`.
    #[arg(long, allow_hyphen_values = true)]
    flat: Option<String>,
    /// Processes per node (all nodes equal).
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated processes per node.
    #[arg(long)]
    sizes: Option<String>,
    /// How heterogeneous sizes collapse to one `n`: mean, min or max.
    #[arg(long, default_value = "mean")]
    aggregate: String,
}

impl InstanceArgs {
    fn is_empty(&self) -> bool {
        self.dims.is_none()
            && self.p.is_none()
            && self.stencil.is_none()
            && self.flat.is_none()
            && self.n.is_none()
            && self.sizes.is_none()
    }

    fn grid(&self) -> Result<Grid> {
        let dims = match (&self.dims, self.p) {
            (Some(d), None) => parse_list(d, 'x')?,
            (None, Some(p)) => {
                let d = self
                    .ndims
                    .ok_or_else(|| Error::InvalidGrid("--p needs --ndims".into()))?;
                if p == 0 || d == 0 {
                    return Err(Error::InvalidGrid(
                        "--p and --ndims must be positive".into(),
                    ));
                }
                dims_create(p, d)
            }
            _ => {
                return Err(Error::InvalidGrid(
                    "give exactly one of --dims or --p".into(),
                ))
            }
        };
        let periods = match &self.periods {
            None => vec![false; dims.len()],
            Some(s) => parse_list::<u8>(s, 'x')?
                .into_iter()
                .map(|v| v != 0)
                .collect(),
        };
        Grid::with_periods(dims, periods)
    }

    fn stencil(&self, ndims: usize) -> Result<Stencil> {
        let s = match (&self.stencil, &self.flat) {
            (Some(name), None) => match name.parse::<Builtin>() {
                Ok(b) => Stencil::builtin(b, ndims)?,
                Err(_) => {
                    let text = fs::read_to_string(name)
                        .map_err(|e| Error::InvalidStencil(format!("{name}: {e}")))?;
                    let file: StencilFile = serde_json::from_str(&text)
                        .map_err(|e| Error::InvalidStencil(format!("{name}: {e}")))?;
                    Stencil::try_from(file)?
                }
            },
            (None, Some(flat)) => {
                let (k, values) = flat.split_once(':').ok_or_else(|| {
                    Error::InvalidStencil(format!("--flat expects k:list, got '{flat}'"))
                })?;
                let k = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidStencil(format!("bad neighbor count '{k}'")))?;
                Stencil::parse_flat(ndims, k, &parse_list(values, ',')?)?
            }
            _ => {
                return Err(Error::InvalidStencil(
                    "give exactly one of --stencil or --flat".into(),
                ))
            }
        };
        if s.ndims() != ndims {
            return Err(Error::DimensionMismatch {
                stencil: s.ndims(),
                grid: ndims,
            });
        }
        Ok(s)
    }

    fn nodes(&self, p: usize) -> Result<NodeConfig> {
        let rule: Aggregate = self.aggregate.parse()?;
        match (&self.sizes, self.n) {
            (Some(s), None) => NodeConfig::new(parse_list(s, ',')?, rule),
            (None, Some(n)) => {
                if n == 0 || !p.is_multiple_of(n) {
                    return Err(Error::InvalidNodes(format!(
                        "{p} processes do not split into nodes of {n}; use --sizes"
                    )));
                }
                NodeConfig::new(vec![n; p / n], rule)
            }
            _ => Err(Error::InvalidNodes(
                "give exactly one of --n or --sizes".into(),
            )),
        }
    }

    fn instance(&self) -> Result<(Grid, Stencil, NodeConfig)> {
        let grid = self.grid()?;
        let stencil = self.stencil(grid.ndims())?;
        let nodes = self.nodes(grid.size())?;
        nodes.check_grid(&grid)?;
        Ok((grid, stencil, nodes))
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, sep: char) -> Result<Vec<T>> {
    s.split(sep)
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidGrid(format!("cannot parse '{t}' in '{s}'")))
        })
        .collect()
}

#[derive(Debug, Args)]
struct MapArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// blocked, random, hyperplane, kdtree, strips or nodecart.
    #[arg(long)]
    algo: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Mapping file written by `map`.
    #[arg(long)]
    mapping: PathBuf,
    /// Optional instance description; must match the file header.
    #[command(flatten)]
    instance: InstanceArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value = "10,13,16,19,22,25,28,31")]
    nodes: String,
    #[arg(long, default_value = "10,13,16,19,22,25,28,31,32")]
    ppn: String,
    #[arg(long, default_value = "2,3")]
    ndims: String,
    #[arg(long, default_value = "nn,component,nn-hops")]
    stencils: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum OracleCommand {
    /// Print the grid instance built from a 3-way partition multiset.
    NpGen {
        /// Comma-separated multiset, e.g. `6,3,3,2,2,2`.
        multiset: String,
    },
    /// Minimum directed j_sum by exhaustive branch and bound.
    Solve {
        /// Solve the instance generated from this multiset.
        #[arg(long)]
        np: Option<String>,
        #[command(flatten)]
        instance: InstanceArgs,
        /// Largest process count attempted (default 12, or 18 with `--np`).
        #[arg(long)]
        limit: Option<usize>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::OracleLimit { .. } => EXIT_REFUSED,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: e.to_string(),
    }
}

fn emit(
    text: &str,
    path: Option<&PathBuf>,
    out: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(io_failure),
        None => out.write_all(text.as_bytes()).map_err(io_failure),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_INVALID;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Map(a) => cmd_map(a, out, err),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Oracle(c) => cmd_oracle(c, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn cmd_map(
    a: MapArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    let (grid, stencil, nodes) = a.instance.instance()?;
    let algorithm: Algorithm = a.algo.parse()?;
    let outcome = run_one(algorithm, &grid, &stencil, &nodes, a.seed)?;
    for flag in &outcome.flags {
        match flag {
            Flag::Skipped(why) => {
                return Err(Error::InvalidNodes(format!("{algorithm}: {why}")).into())
            }
            Flag::BlockedFallback(why) => {
                let _ = writeln!(
                    err,
                    "warning: {algorithm}: {why}; using the blocked mapping"
                );
            }
        }
    }
    let mapping = outcome.mapping.expect("unskipped outcomes carry a mapping");
    let flags = outcome.flags.iter().map(|f| f.code().to_string()).collect();
    let header = mapfile::Header::new(&grid, &stencil, &nodes, &mapping, flags);
    emit(&mapfile::render(&header, &mapping), a.out.as_ref(), out)
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let text = fs::read_to_string(&a.mapping).map_err(io_failure)?;
    let file = mapfile::parse(&text)?;
    if !a.instance.is_empty() {
        let (g, s, n) = a.instance.instance()?;
        if instance_fingerprint(&g, &s, &n) != file.header.instance {
            return Err(Error::InstanceMismatch.into());
        }
    }
    let cost = evaluate(&file.grid, &file.stencil, &file.mapping, &file.nodes)?;
    let base = evaluate(
        &file.grid,
        &file.stencil,
        &blocked_map(&file.grid),
        &file.nodes,
    )?;
    let red = reduction(&cost, &base)?;
    let report = json!({
        "instance": file.header.instance,
        "algorithm": file.header.algorithm,
        "edges": "directed",
        "j_sum": cost.j_sum,
        "j_max": cost.j_max,
        "per_node": cost.per_node,
        "bottleneck_node": cost.bottleneck_node,
        "blocked": { "j_sum": base.j_sum, "j_max": base.j_max },
        "reduction_vs_blocked": { "sum": red.sum_ratio, "max": red.max_ratio },
    });
    emit(&format!("{report:#}\n"), None, out)
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let spec = sweep::SweepSpec {
        node_counts: parse_list(&a.nodes, ',')?,
        procs_per_node: parse_list(&a.ppn, ',')?,
        dims_set: parse_list(&a.ndims, ',')?,
        stencils: a
            .stencils
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_>>()?,
        seed: a.seed,
    };
    let rows = sweep::run_sweep(&spec)?;
    emit(&sweep::render_csv(&rows, &spec), a.out.as_ref(), out)
}

fn cmd_oracle(c: OracleCommand, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match c {
        OracleCommand::NpGen { multiset } => {
            let inst = three_way_to_grid(&parse_list(&multiset, ',')?)?;
            let doc = json!({
                "multiset": inst.multiset,
                "dims": inst.grid.dims(),
                "stencil": StencilFile::from(&inst.stencil),
                "node_sizes": inst.node_sizes,
                "q": inst.q,
                "edges": "directed",
            });
            emit(&format!("{doc:#}\n"), None, out)
        }
        OracleCommand::Solve {
            np,
            instance,
            limit,
        } => {
            let (result, dims) = match np {
                Some(list) => {
                    let inst = three_way_to_grid(&parse_list(&list, ',')?)?;
                    let limit = limit.unwrap_or(NP_DEFAULT_LIMIT);
                    (solve_np_instance(&inst, limit)?, inst.grid.dims().to_vec())
                }
                None => {
                    let (grid, stencil, nodes) = instance.instance()?;
                    (
                        brute_force_optimal(
                            &grid,
                            &stencil,
                            nodes.sizes(),
                            limit.unwrap_or(DEFAULT_LIMIT),
                        )?,
                        grid.dims().to_vec(),
                    )
                }
            };
            let doc = json!({
                "dims": dims,
                "edges": "directed",
                "optimal_j_sum": result.optimal_j_sum,
                "witness": result.witness,
                "nodes_expanded": result.nodes_expanded,
            });
            emit(&format!("{doc:#}\n"), None, out)
        }
    }
}
