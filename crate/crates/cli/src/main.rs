use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use isolect::decay::{
    classify_initial_rate, refit_lambda, sample_curves, Curve, DecayParams, DEFAULT_ANCHOR_T0,
    DEFAULT_LAMBDA, DEFAULT_SHIFT,
};
use isolect::formats::{
    parse_cognacy, parse_matrix, parse_tree_description, write_annotated_tree, write_cognacy,
    write_distance_table, write_fit_report, write_matrix, write_tree_description,
};
use isolect::simulate::{recovery_trial, simulate_replicates, SimulationConfig};
use isolect::svg::render_svg;
use isolect::{
    build_dendrogram, case_one, coincidence_from_cognacy, distance_from_coincidence,
    distance_matrix, fit_report, redistribute_residuals, CognacyTable, CoincidenceMatrix,
    Dendrogram, NodeRef, Reconstruction,
};

#[derive(Parser, Debug)]
#[command(name = "isolect", version)]
#[command(about = "Reconstruct language-family dendrograms from basic-list coincidence data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert coincidence percentages to swadesh distances
    Distances(InputArgs),
    /// Reconstruct a dendrogram and write the tree, fit report and dates
    Build(BuildArgs),
    /// Run the reconstruction with and without borrowed slots and compare
    CompareBorrowings(CompareArgs),
    /// Tabulate times for distances under every decay law
    Calibrate(CalibrateArgs),
    /// Simulate cognacy tables on a known tree and reconstruct them
    Simulate(SimulateArgs),
    /// Draw a tree description as SVG
    Render(RenderArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Matrix,
    Cognacy,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Matrix (comma-separated) or cognacy table (tab-separated)
    #[arg(long)]
    input: PathBuf,

    #[arg(long, value_enum, default_value = "matrix")]
    format: Format,

    /// Drop slots flagged as borrowed (cognacy input only)
    #[arg(long)]
    exclude_borrowed: bool,

    /// Round coefficients to whole percentages before use
    #[arg(long)]
    round_matrix: bool,

    /// Output directory. Prints to stdout if omitted (distances only).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Copy)]
struct DecayArgs {
    /// Replacement rate per millennium
    #[arg(long, default_value_t = DEFAULT_LAMBDA, allow_negative_numbers = true)]
    lambda: f64,

    /// Exponent of time in the general retention law
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,

    /// Anchor time (millennia) of the refitted linear law
    #[arg(long, default_value_t = DEFAULT_ANCHOR_T0, allow_negative_numbers = true)]
    t0: f64,

    /// Swadesh shift of the borrowing-excluded law
    #[arg(long, default_value_t = DEFAULT_SHIFT, allow_negative_numbers = true)]
    shift: f64,
}

impl DecayArgs {
    fn params(&self) -> isolect::Result<DecayParams> {
        DecayParams::new(self.lambda, self.alpha, self.shift)
    }
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    input: InputArgs,

    #[command(flatten)]
    decay: DecayArgs,

    /// Also write tree.svg
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Cognacy table with borrowed flags
    #[arg(long)]
    input: PathBuf,

    #[arg(long)]
    out_dir: PathBuf,

    #[arg(long)]
    svg: bool,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Comma-separated swadesh distances
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,

    #[command(flatten)]
    decay: DecayArgs,

    /// Upper end of the sampled curve grid
    #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
    l_max: f64,

    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    step: f64,

    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// TOML file with `tree`, `slots`, `seed` and `replicates`
    #[arg(long)]
    config: PathBuf,

    /// Override the configured seed
    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Tree description (tree.toml)
    #[arg(long)]
    input: PathBuf,

    /// Output file. Prints to stdout if omitted.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct SimulationFile {
    tree: PathBuf,
    slots: usize,
    seed: u64,
    replicates: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn out_dir(dir: &Path) -> Result<&Path> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn load(args: &InputArgs) -> Result<(CoincidenceMatrix, Option<CognacyTable>)> {
    let text = read(&args.input)?;
    let (m, table) = match args.format {
        Format::Matrix => {
            if args.exclude_borrowed {
                bail!(isolect::Error::InvalidParameter(
                    "--exclude-borrowed needs --format cognacy".into()
                ));
            }
            (parse_matrix(&text)?, None)
        }
        Format::Cognacy => {
            let t = parse_cognacy(&text)?;
            if args.exclude_borrowed && !t.has_borrowings() {
                eprintln!("warning: no slots are flagged as borrowed; nothing to exclude");
            }
            (
                coincidence_from_cognacy(&t, args.exclude_borrowed)?,
                Some(t),
            )
        }
    };
    let m = if args.round_matrix { m.rounded()? } else { m };
    Ok((m, table))
}

fn clade_name(t: &Dendrogram, n: NodeRef) -> String {
    let labels: Vec<String> = t.clade_labels(n).into_iter().collect();
    format!("{{{}}}", labels.join(","))
}

fn write_steps(r: &Reconstruction) -> String {
    let mut out = String::from(
        "node\tleft\tright\tpair_L\tchain_width\tdepth\tleft_vertical\tright_vertical\tattach\tclamp_residual\n",
    );
    for s in &r.steps {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{}\t{:.3}",
            clade_name(&r.tree, s.node),
            s.left_name,
            s.right_name,
            s.pair_distance,
            s.chain_width,
            s.depth,
            s.left_vertical,
            s.right_vertical,
            match s.attach {
                isolect::Side::Left => "left",
                isolect::Side::Right => "right",
            },
            s.clamp_residual
        );
    }
    out
}

/// Depth of every chain and of the deep root point, in swadesh and in time
/// under each decay law.
fn write_dates(t: &Dendrogram, p: &DecayParams, t0: f64) -> Result<String> {
    let mut rows: Vec<(String, f64)> = (0..t.chains().len())
        .map(|c| (clade_name(t, NodeRef::Chain(c)), t.depth(NodeRef::Chain(c))))
        .collect();
    if let Some(g) = t
        .with_root_variant(isolect::RootVariant::DeepPoint)?
        .root_geometry()
    {
        rows.push(("root".into(), g.depth));
    }
    let mut out = String::from("node\tdepth_L");
    for c in Curve::ALL {
        let _ = write!(out, "\t{}", c.name());
    }
    out.push('\n');
    for (name, depth) in rows {
        // Divergence time is set by the distance between lects, twice the depth.
        let _ = write!(out, "{name}\t{depth:.3}");
        for c in Curve::ALL {
            let _ = write!(out, "\t{:.3}", c.time(2.0 * depth, p, t0)?);
        }
        out.push('\n');
    }
    Ok(out)
}

struct Built {
    matrix: CoincidenceMatrix,
    recon: Reconstruction,
    tree: Dendrogram,
}

fn reconstruct(m: CoincidenceMatrix) -> Result<Built> {
    let recon = build_dendrogram(&m)?;
    for w in &recon.warnings {
        eprintln!("warning: {w}");
    }
    let tree = redistribute_residuals(&recon.tree, &m)?;
    Ok(Built {
        matrix: m,
        recon,
        tree,
    })
}

fn write_tree_files(dir: &Path, prefix: &str, b: &Built, svg: bool) -> Result<()> {
    write(
        dir,
        &format!("{prefix}tree.toml"),
        &write_tree_description(&b.tree),
    )?;
    write(
        dir,
        &format!("{prefix}tree.txt"),
        &write_annotated_tree(&b.tree),
    )?;
    write(dir, &format!("{prefix}steps.tsv"), &write_steps(&b.recon))?;
    write(
        dir,
        &format!("{prefix}fit.tsv"),
        &write_fit_report(&fit_report(&b.tree, &b.matrix)?),
    )?;
    if svg {
        write(dir, &format!("{prefix}tree.svg"), &render_svg(&b.tree))?;
    }
    Ok(())
}

fn cmd_distances(args: &InputArgs) -> Result<()> {
    let (m, _) = load(args)?;
    let table = write_distance_table(&m, &distance_matrix(&m));
    match &args.out_dir {
        Some(dir) => write(out_dir(dir)?, "distances.tsv", &table),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn cmd_build(args: &BuildArgs) -> Result<()> {
    let params = args.decay.params()?;
    let Some(dir) = &args.input.out_dir else {
        bail!(isolect::Error::InvalidParameter(
            "build needs --out-dir".into()
        ));
    };
    let dir = out_dir(dir)?;
    let (m, _) = load(&args.input)?;
    if m.len() == 2 {
        let fam = case_one(distance_from_coincidence(m.get(0, 1)).value())?;
        println!(
            "two languages at L = {:.3}: from pure divergence of {:.3} each to a contemporary chain of width {:.3}",
            fam.total,
            fam.pure_divergence(),
            fam.contemporary_chain_width()
        );
    }
    let built = reconstruct(m)?;
    write(
        dir,
        "distances.tsv",
        &write_distance_table(&built.matrix, &distance_matrix(&built.matrix)),
    )?;
    write_tree_files(dir, "", &built, args.svg)?;
    write(
        dir,
        "dates.tsv",
        &write_dates(&built.tree, &params, args.decay.t0)?,
    )?;
    if let Some(link) = built.tree.root_link() {
        println!("root link {:.3}", link.length);
    }
    for (c, ch) in built.tree.chains().iter().enumerate() {
        let n = NodeRef::Chain(c);
        println!(
            "{}: width {:.3}, depth {:.3}",
            clade_name(&built.tree, n),
            ch.width,
            built.tree.depth(n)
        );
    }
    Ok(())
}

fn chain_rows(t: &Dendrogram) -> Vec<(BTreeSet<String>, String, f64, f64)> {
    (0..t.chains().len())
        .map(|c| {
            let n = NodeRef::Chain(c);
            (
                t.clade_labels(n),
                clade_name(t, n),
                t.chains()[c].width,
                t.depth(n),
            )
        })
        .collect()
}

fn compare_report(with: &Built, without: &Built) -> String {
    let mut out = String::from("kind\titem\twith_borrowings\twithout_borrowings\tdelta\n");
    let mut row = |kind: &str, item: &str, a: Option<f64>, b: Option<f64>| {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        let d = a.zip(b).map(|(a, b)| b - a);
        let _ = writeln!(out, "{kind}\t{item}\t{}\t{}\t{}", f(a), f(b), f(d));
    };
    let (dw, dn) = (
        distance_matrix(&with.matrix),
        distance_matrix(&without.matrix),
    );
    for (i, j, l) in dw.pairs() {
        let item = format!("{}-{}", dw.labels()[i], dw.labels()[j]);
        row("distance", &item, Some(l), Some(dn.get(i, j)));
    }
    let other = chain_rows(&without.tree);
    for (clade, name, width, depth) in chain_rows(&with.tree) {
        let m = other.iter().find(|o| o.0 == clade);
        row("chain_width", &name, Some(width), m.map(|o| o.2));
        row("chain_depth", &name, Some(depth), m.map(|o| o.3));
    }
    for (clade, name, width, depth) in &other {
        if with.tree.find_clade(clade).is_none() {
            row("chain_width", name, None, Some(*width));
            row("chain_depth", name, None, Some(*depth));
        }
    }
    row(
        "root_link",
        "root",
        with.tree.root_link().map(|l| l.length),
        without.tree.root_link().map(|l| l.length),
    );
    out
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let table = parse_cognacy(&read(&args.input)?)?;
    let dir = out_dir(&args.out_dir)?;
    let with = reconstruct(coincidence_from_cognacy(&table, false)?)?;
    write(dir, "with_borrowings.csv", &write_matrix(&with.matrix))?;
    write_tree_files(dir, "with_borrowings_", &with, args.svg)?;
    if !table.has_borrowings() {
        eprintln!("warning: no slots are flagged as borrowed; ran once");
        return Ok(());
    }
    let without = reconstruct(coincidence_from_cognacy(&table, true)?)?;
    write(
        dir,
        "without_borrowings.csv",
        &write_matrix(&without.matrix),
    )?;
    write_tree_files(dir, "without_borrowings_", &without, args.svg)?;
    let report = compare_report(&with, &without);
    write(dir, "comparison.tsv", &report)?;
    println!(
        "{} of {} slots dropped as borrowed",
        table.borrowed_slot_count(),
        table.list_size()
    );
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    let p = args.decay.params()?;
    let t0 = args.decay.t0;
    let mut times = String::from("L");
    for c in Curve::ALL {
        let _ = write!(times, "\t{}", c.name());
    }
    times.push('\n');
    for &l in &args.values {
        let _ = write!(times, "{l:.3}");
        for c in Curve::ALL {
            let _ = write!(times, "\t{:.3}", c.time(l, &p, t0)?);
        }
        times.push('\n');
    }
    let mut curves = String::from("curve\tL\tt\n");
    for s in sample_curves(args.l_max, args.step, &p, t0)? {
        for (l, t) in &s.points {
            let _ = writeln!(curves, "{}\t{l:.3}\t{t:.3}", s.curve.name());
        }
    }
    let rate = classify_initial_rate(p.alpha)?;
    match &args.out_dir {
        Some(dir) => {
            let dir = out_dir(dir)?;
            write(dir, "times.tsv", &times)?;
            write(dir, "curves.tsv", &curves)?;
        }
        None => print!("{times}"),
    }
    eprintln!(
        "initial decay rate for alpha = {}: {rate:?}; refitted lambda {:.4}",
        p.alpha,
        refit_lambda(&p, t0)?
    );
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let text = read(&args.config)?;
    let file: SimulationFile = toml::from_str(&text).map_err(|e| {
        isolect::Error::InvalidParameter(format!("{}: {}", args.config.display(), e.message()))
    })?;
    let tree_path = args
        .config
        .parent()
        .map_or_else(|| file.tree.clone(), |p| p.join(&file.tree));
    let tree = parse_tree_description(&read(&tree_path)?)?;
    let cfg = SimulationConfig {
        tree,
        slots: file.slots,
        seed: args.seed.unwrap_or(file.seed),
        replicates: file.replicates,
    };
    cfg.validate()?;
    let dir = out_dir(&args.out_dir)?;
    for (r, t) in simulate_replicates(&cfg)?.iter().enumerate() {
        write(dir, &format!("cognacy_{r:03}.tsv"), &write_cognacy(t))?;
    }
    let report = recovery_trial(&cfg)?;
    let mut out = String::from("replicate\titem\ttruth\treconstructed\terror\n");
    for (r, trial) in report.trials.iter().enumerate() {
        let _ = writeln!(out, "{r}\ttopology_match\t-\t{}\t-", trial.topology_match);
        for l in &trial.lengths {
            let _ = writeln!(
                out,
                "{r}\t{}\t{:.3}\t{:.3}\t{:.3}",
                l.what,
                l.truth,
                l.reconstructed,
                l.error()
            );
        }
    }
    write(dir, "recovery.tsv", &out)?;
    println!(
        "topology recovered in all replicates: {}; max length error {:.3}",
        report.all_topologies_match(),
        report.max_abs_error()
    );
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> Result<()> {
    let tree = parse_tree_description(&read(&args.input)?)?;
    let svg = render_svg(&tree);
    match &args.svg {
        Some(path) => fs::write(path, svg).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{svg}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Distances(a) => cmd_distances(a),
        Command::Build(a) => cmd_build(a),
        Command::CompareBorrowings(a) => cmd_compare(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Render(a) => cmd_render(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e
                .chain()
                .find_map(|c| c.downcast_ref::<isolect::Error>())
                .is_some_and(isolect::Error::is_validation);
            ExitCode::from(if validation { 2 } else { 1 })
        }
    }
}
