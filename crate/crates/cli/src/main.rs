mod checks;
mod gallery;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hausdorff::calculus::{commutator, commutator_defect, leibniz_defect};
use hausdorff::representation::random_operator_report;
use hausdorff::vonneumann::expect;
use hausdorff::{
    build_space, represent, sample, AlgebraElement, BaseFunction, DensityField, Derivation,
    DiffSpace, Expr, Groupoid, SpaceSpec, Symbols,
};
use sha2::{Digest, Sha256};

use checks::Ctx;
use report::{RunReport, Table};

#[derive(Parser)]
#[command(name = "hausdorff", version, about = "Groupoid algebras of finite non-Hausdorff spaces")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Opts {
    /// Space configuration (JSON)
    #[arg(long, global = true)]
    space: Option<PathBuf>,
    /// Bundled example to use instead of --space
    #[arg(long, global = true)]
    example: Option<String>,
    /// Output directory for report.txt and CSV tables
    #[arg(long, global = true, default_value = "hausdorff-out")]
    out: PathBuf,
    /// Relative tolerance for algebraic identities
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
    /// Tolerance for state normalization
    #[arg(long, global = true, default_value_t = 1e-9)]
    norm_tol: f64,
    /// Seed for randomized checks
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random cases per randomized check
    #[arg(long, global = true, default_value_t = 20)]
    cases: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Hausdorff relation, quotient and generator consistency
    Space {
        #[command(subcommand)]
        cmd: SpaceCmd,
    },
    /// Pair groupoid of the Hausdorff relation
    Groupoid {
        #[command(subcommand)]
        cmd: GroupoidCmd,
    },
    /// Convolution algebra
    Algebra {
        #[command(subcommand)]
        cmd: AlgebraCmd,
    },
    /// Lifted derivations
    Calculus {
        #[command(subcommand)]
        cmd: CalculusCmd,
    },
    /// Fiberwise representation
    Rep {
        #[command(subcommand)]
        cmd: RepCmd,
    },
    /// States and commutants
    Vn {
        #[command(subcommand)]
        cmd: VnCmd,
    },
    /// Deformation chain
    Deform {
        #[command(subcommand)]
        cmd: DeformCmd,
    },
    /// Property suite over the bundled examples
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
    /// Bundled example spaces
    Gallery {
        #[command(subcommand)]
        cmd: GalleryCmd,
    },
}

#[derive(Subcommand)]
enum SpaceCmd {
    Analyze,
}

#[derive(Subcommand)]
enum GroupoidCmd {
    Build,
}

#[derive(Subcommand)]
enum AlgebraCmd {
    /// Convolve two elements given as expressions in x1..xn, y1..yn
    Conv {
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
    },
    CheckLaws,
}

#[derive(Subcommand)]
enum CalculusCmd {
    Leibniz {
        /// Comma-separated derivation coefficients in x1..xn
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
    },
    Commutator {
        #[arg(long)]
        p: Option<String>,
        /// Base function in x1..xn
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        a: Option<String>,
    },
}

#[derive(Subcommand)]
enum RepCmd {
    Build {
        #[arg(long)]
        a: Option<String>,
    },
    Check,
}

#[derive(Subcommand)]
enum VnCmd {
    Commutant,
    StateCheck {
        /// Density field CSV with columns point,row,col,re,im
        #[arg(long)]
        density: Option<PathBuf>,
    },
    Expect {
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        density: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DeformCmd {
    Sweep,
}

#[derive(Subcommand)]
enum VerifyCmd {
    All,
}

#[derive(Subcommand)]
enum GalleryCmd {
    List,
}

/// Exit 2: unusable input. Exit 1 is reserved for failed checks.
#[derive(Debug)]
struct ConfigError(String);

impl<E: std::fmt::Display> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.to_string())
    }
}

type Res<T> = Result<T, ConfigError>;

struct Input {
    space: Arc<DiffSpace>,
    hasher: Sha256,
    label: String,
}

fn load(opts: &Opts) -> Res<Input> {
    let (text, label) = match (&opts.space, &opts.example) {
        (Some(_), Some(_)) => return Err(ConfigError("give either --space or --example, not both".into())),
        (Some(path), None) => (
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?,
            path.display().to_string(),
        ),
        (None, Some(name)) => (
            gallery::get(name)
                .ok_or_else(|| format!("unknown example `{name}`; try `hausdorff gallery list`"))?
                .to_string(),
            name.clone(),
        ),
        (None, None) => return Err(ConfigError("missing --space <path> or --example <name>".into())),
    };
    let space = parse_space(&text).map_err(|e| format!("{label}: {}", e.0))?;
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    Ok(Input {
        space: Arc::new(space),
        hasher,
        label,
    })
}

fn parse_space(text: &str) -> Res<DiffSpace> {
    Ok(build_space(&SpaceSpec::from_json(text)?)?)
}

fn ctx(opts: &Opts, prefix: &str) -> Ctx {
    Ctx {
        tol: opts.tol,
        norm_tol: opts.norm_tol,
        seed: opts.seed,
        cases: opts.cases,
        prefix: prefix.to_string(),
    }
}

fn element(g: &Arc<Groupoid>, src: &Option<String>, ctx: &Ctx, stream: u64) -> Res<AlgebraElement> {
    match src {
        Some(s) => Ok(AlgebraElement::from_expression(g, s).map_err(|e| format!("element `{s}`: {e}"))?),
        None => Ok(sample::polynomial_element(&mut ctx.rng(100 + stream), g)),
    }
}

fn derivation(space: &DiffSpace, src: &Option<String>, ctx: &Ctx) -> Res<Derivation> {
    match src {
        Some(s) => {
            let parts: Vec<&str> = s.split(',').map(str::trim).collect();
            Ok(Derivation::from_expressions(space, &parts).map_err(|e| format!("derivation `{s}`: {e}"))?)
        }
        None => Ok(sample::derivation(&mut ctx.rng(200), space)),
    }
}

fn base_function(space: &DiffSpace, src: &Option<String>, ctx: &Ctx) -> Res<BaseFunction> {
    match src {
        Some(s) => Ok(BaseFunction::from_expression(space, s).map_err(|e| format!("function `{s}`: {e}"))?),
        None => Ok(sample::base_function(&mut ctx.rng(300), space)),
    }
}

fn density(g: &Arc<Groupoid>, path: &Option<PathBuf>, hasher: &mut Sha256) -> Res<DensityField> {
    let Some(path) = path else {
        return Ok(DensityField::uniform(g));
    };
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    hasher.update(&bytes);
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let rows = rdr
        .deserialize::<(u64, usize, usize, f64, f64)>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(checks::density_from_rows(g, &rows)?)
}

fn element_table(name: &str, a: &AlgebraElement) -> Res<Table> {
    let mut buf = Vec::new();
    a.write_csv(&mut buf)?;
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let mut t = Table {
        name: name.to_string(),
        header,
        rows: Vec::new(),
    };
    for rec in rdr.records() {
        t.rows.push(rec?.iter().map(String::from).collect());
    }
    Ok(t)
}

fn is_heisenberg_pair(p: &Option<String>, f: &Option<String>, dim: usize) -> Option<usize> {
    let f = Expr::parse(f.as_deref()?, Symbols::Point { dim }).ok()?;
    let Expr::Var(i) = f else { return None };
    let coeffs: Vec<Expr> = p
        .as_deref()?
        .split(',')
        .map(|s| Expr::parse(s.trim(), Symbols::Point { dim }))
        .collect::<Result<_, _>>()
        .ok()?;
    let unit = coeffs.len() == dim
        && coeffs.iter().enumerate().all(|(k, c)| {
            c.is_constant() && c.eval(&[]) == if k == i { 1.0 } else { 0.0 }
        });
    unit.then_some(i)
}

fn run(cli: &Cli) -> Res<Option<RunReport>> {
    let opts = &cli.opts;
    let c = ctx(opts, "");
    let mut input = match &cli.command {
        Command::Gallery { cmd: GalleryCmd::List } => {
            for name in gallery::names() {
                println!("{name}");
            }
            return Ok(None);
        }
        Command::Verify { cmd: VerifyCmd::All } => return verify_all(opts).map(Some),
        _ => load(opts)?,
    };
    let space = input.space.clone();
    let g = checks::hausdorff_groupoid(&space)?;
    let mut r = RunReport::new(command_name(&cli.command), String::new());
    r.note(format!("space: {}", input.label));
    r.note(format!("tolerances: identities {:e}, normalization {:e}", opts.tol, opts.norm_tol));
    match &cli.command {
        Command::Space { cmd: SpaceCmd::Analyze } => checks::space_section(&mut r, &space, &c)?,
        Command::Groupoid { cmd: GroupoidCmd::Build } => checks::groupoid_section(&mut r, &g, &c)?,
        Command::Algebra { cmd: AlgebraCmd::Conv { a, b } } => {
            let (ea, eb) = (element(&g, a, &c, 0)?, element(&g, b, &c, 1)?);
            let ab = ea.convolve(&eb)?;
            r.table(element_table("a", &ea)?);
            r.table(element_table("b", &eb)?);
            r.table(element_table("product", &ab)?);
            r.info("algebra.product_max_abs", ab.max_abs(), "");
        }
        Command::Algebra { cmd: AlgebraCmd::CheckLaws } => checks::algebra_laws_section(&mut r, &g, &c)?,
        Command::Calculus { cmd: CalculusCmd::Leibniz { p, a, b } } => {
            let pd = derivation(&space, p, &c)?;
            let (ea, eb) = (element(&g, a, &c, 0)?, element(&g, b, &c, 1)?);
            let d = leibniz_defect(&pd, &ea, &eb)?;
            r.check("calculus.leibniz", d.relative(), opts.tol);
            r.info("calculus.leibniz_abs", d.max_abs, format!("scale {}", d.scale));
        }
        Command::Calculus { cmd: CalculusCmd::Commutator { p, f, a } } => {
            let pd = derivation(&space, p, &c)?;
            let bf = base_function(&space, f, &c)?;
            let ea = element(&g, a, &c, 0)?;
            let d = commutator_defect(&pd, &bf, &ea)?;
            r.check("calculus.commutator", d.relative(), opts.tol);
            let comm = commutator(&pd, &bf, &ea)?;
            r.table(element_table("commutator", &comm)?);
            if let Some(i) = is_heisenberg_pair(p, f, space.dimension()) {
                let dev = comm.max_abs_diff(&ea)? / ea.max_abs().max(1.0);
                r.check(format!("calculus.heisenberg_x{}", i + 1), dev, opts.tol);
            }
        }
        Command::Rep { cmd: RepCmd::Build { a } } => {
            let ea = element(&g, a, &c, 0)?;
            let op = represent(&ea);
            r.table(checks::class_matrix_table("class_matrices".into(), &op));
            let rep = random_operator_report(&op);
            r.count("rep.random_operator_conditions", usize::from(!rep.measurable) + usize::from(!rep.essentially_bounded));
            r.info("rep.ess_sup", rep.ess_sup, rep.measurability_note);
            r.info("rep.direct_sum_dim", op.direct_sum_dim() as f64, "");
        }
        Command::Rep { cmd: RepCmd::Check } => checks::rep_section(&mut r, &g, &c)?,
        Command::Vn { cmd: VnCmd::Commutant } => checks::commutant_section(&mut r, &g, &c)?,
        Command::Vn { cmd: VnCmd::StateCheck { density: dpath } } => {
            let field = density(&g, dpath, &mut input.hasher)?;
            checks::state_section(&mut r, &g, field, &c)?;
        }
        Command::Vn { cmd: VnCmd::Expect { a, density: dpath } } => {
            let field = density(&g, dpath, &mut input.hasher)?;
            let ea = element(&g, a, &c, 0)?;
            if let Some(state) = checks::state_section(&mut r, &g, field, &c)? {
                let v = expect(&state, &represent(&ea))?;
                let mut t = Table::new("expectation", &["re", "im"]);
                t.push(vec![checks::num(v.re), checks::num(v.im)]);
                r.table(t);
                r.info("vn.expectation_re", v.re, format!("im {}", v.im));
            }
        }
        Command::Deform { cmd: DeformCmd::Sweep } => checks::deform_section(&mut r, &space, &c)?,
        Command::Verify { .. } | Command::Gallery { .. } => unreachable!(),
    }
    r.digest = format!("{:x}", input.hasher.finalize());
    Ok(Some(r))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Space { .. } => "space analyze",
        Command::Groupoid { .. } => "groupoid build",
        Command::Algebra { cmd: AlgebraCmd::Conv { .. } } => "algebra conv",
        Command::Algebra { .. } => "algebra check-laws",
        Command::Calculus { cmd: CalculusCmd::Leibniz { .. } } => "calculus leibniz",
        Command::Calculus { .. } => "calculus commutator",
        Command::Rep { cmd: RepCmd::Build { .. } } => "rep build",
        Command::Rep { .. } => "rep check",
        Command::Vn { cmd: VnCmd::Commutant } => "vn commutant",
        Command::Vn { cmd: VnCmd::StateCheck { .. } } => "vn state-check",
        Command::Vn { .. } => "vn expect",
        Command::Deform { .. } => "deform sweep",
        Command::Verify { .. } => "verify all",
        Command::Gallery { .. } => "gallery list",
    }
}

fn verify_all(opts: &Opts) -> Res<RunReport> {
    let mut configs: Vec<(String, String)> = gallery::GALLERY
        .iter()
        .map(|(n, s)| (n.to_string(), s.to_string()))
        .collect();
    if let Some(path) = &opts.space {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let stem = path.file_stem().map_or("input".into(), |s| s.to_string_lossy().into_owned());
        configs.push((stem, text));
    }
    let mut hasher = Sha256::new();
    let mut r = RunReport::new("verify all", String::new());
    r.note(format!("tolerances: identities {:e}, normalization {:e}", opts.tol, opts.norm_tol));
    let mut summary = Table::new("summary", &["config", "checks", "failures", "skips"]);
    for (name, text) in &configs {
        hasher.update(text.as_bytes());
        let space = Arc::new(parse_space(text).map_err(|e| format!("{name}: {}", e.0))?);
        let c = ctx(opts, name);
        let before = r.checks.len();
        let g = checks::hausdorff_groupoid(&space)?;
        checks::space_section(&mut r, &space, &c)?;
        checks::groupoid_section(&mut r, &g, &c)?;
        checks::algebra_laws_section(&mut r, &g, &c)?;
        checks::rep_section(&mut r, &g, &c)?;
        checks::state_section(&mut r, &g, DensityField::uniform(&g), &c)?;
        checks::commutant_section(&mut r, &g, &c)?;
        checks::deform_section(&mut r, &space, &c)?;
        checks::calculus_section(&mut r, &g, &c)?;
        let mine = &r.checks[before..];
        let count = |s| mine.iter().filter(|k| k.status == s).count();
        summary.push(vec![
            name.clone(),
            mine.len().to_string(),
            count(report::Status::Fail).to_string(),
            count(report::Status::Skip).to_string(),
        ]);
    }
    r.table(summary);
    r.digest = format!("{:x}", hasher.finalize());
    Ok(r)
}

fn finish(mut r: RunReport, out: &Path, start: Instant) -> ExitCode {
    r.elapsed = start.elapsed();
    if let Err(e) = r.write(out) {
        eprintln!("error: writing {}: {e}", out.display());
        return ExitCode::from(2);
    }
    print!("{}", r.render());
    if r.passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} check(s) failed", r.failures());
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Some(r)) => finish(r, &cli.opts.out, start),
        Ok(None) => ExitCode::SUCCESS,
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
