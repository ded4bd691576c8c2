use anyhow::{bail, Context, Result};
use artipg::canonical::to_canonical_string;
use artipg::dataset::{generate_dataset, DatasetError, DatasetManifest, DetailSettings, GenerationJob, MANIFEST_NAME};
use artipg::exemplars::{exemplar_text, CATEGORIES};
use artipg::export::Format;
use artipg::program::{parse_program, serialize_program, validate_program};
use artipg::rules::ManipulationConfig;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "artipg", version, about = "Procedural generation of annotated articulated point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from the built-in exemplars.
    Generate(GenerateArgs),
    /// Check a structure program and report diagnostics.
    Validate {
        /// Program file, or the name of a built-in exemplar.
        program: String,
    },
    /// Print the canonical form of a program.
    Fmt {
        program: String,
        /// Rewrite the file in place.
        #[arg(long)]
        write: bool,
    },
    /// Print the manifest record of a generated object.
    Inspect {
        /// Object id or path to one of its files.
        object: String,
        /// Dataset directory, used when `object` is an id.
        #[arg(long, default_value = ".")]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    PlyAscii,
    PlyBinaryLe,
    SidecarJson,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::PlyAscii => Format::PlyAscii,
            FormatArg::PlyBinaryLe => Format::PlyBinaryLe,
            FormatArg::SidecarJson => Format::SidecarJson,
        }
    }
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Exemplar category, repeatable; `all` selects every exemplar.
    #[arg(long = "category")]
    categories: Vec<String>,
    /// Number of objects [default: 1].
    #[arg(long)]
    count: Option<usize>,
    /// Master seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON job file; flags take precedence over its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Points per object [default: 2048].
    #[arg(long)]
    points: Option<usize>,
    /// Output format, repeatable [default: ply-binary-le and sidecar-json].
    #[arg(long = "format", value_enum)]
    formats: Vec<FormatArg>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Continuous perturbation half-width as a fraction of each range [default: 0.2].
    #[arg(long)]
    cpa_scale: Option<f64>,
    /// Disable discrete parameter changes.
    #[arg(long)]
    no_dpa: bool,
    /// Disable template swaps and part drops.
    #[arg(long)]
    no_apa: bool,
    /// Export the bare structure surface without geometric details.
    #[arg(long)]
    no_detail: bool,
    /// Keep every joint at its rest value.
    #[arg(long)]
    no_articulate: bool,
}

/// Config file schema: manipulation settings and job fields side by side.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct JobFile {
    categories: Option<Vec<String>>,
    count: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    points_per_object: Option<usize>,
    formats: Option<Vec<Format>>,
    jobs: Option<usize>,
    articulate: Option<bool>,
    detail: Option<DetailSettings>,
    cpa_scale: Option<f64>,
    dpa_enabled: Option<bool>,
    apa_enabled: Option<bool>,
    apa_drop_prob: Option<f64>,
    max_repair_iters: Option<u32>,
}

fn build_job(args: GenerateArgs) -> Result<GenerationJob> {
    let file: JobFile = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => JobFile::default(),
    };
    let mut categories = if args.categories.is_empty() { file.categories.unwrap_or_default() } else { args.categories };
    if categories.is_empty() || categories.iter().any(|c| c == "all") {
        categories = CATEGORIES.iter().map(|c| c.to_string()).collect();
    }
    let Some(out) = args.out.or(file.out) else {
        bail!("no output directory given (--out)");
    };
    let mut job = GenerationJob::new(categories, args.count.or(file.count).unwrap_or(1), args.seed.or(file.seed).unwrap_or(0), out);
    let d = ManipulationConfig::default();
    job.manipulation = ManipulationConfig {
        seed: 0,
        cpa_scale: args.cpa_scale.or(file.cpa_scale).unwrap_or(d.cpa_scale),
        dpa_enabled: !args.no_dpa && file.dpa_enabled.unwrap_or(d.dpa_enabled),
        apa_enabled: !args.no_apa && file.apa_enabled.unwrap_or(d.apa_enabled),
        apa_drop_prob: file.apa_drop_prob.unwrap_or(d.apa_drop_prob),
        max_repair_iters: file.max_repair_iters.unwrap_or(d.max_repair_iters),
    };
    if let Some(k) = args.points.or(file.points_per_object) {
        job.points_per_object = k;
    }
    if !args.formats.is_empty() {
        job.formats = args.formats.into_iter().map(Format::from).collect();
    } else if let Some(f) = file.formats {
        job.formats = f;
    }
    job.formats.sort();
    job.formats.dedup();
    if let Some(d) = file.detail {
        job.detail = d;
    }
    job.detail.enabled &= !args.no_detail;
    job.articulate = !args.no_articulate && file.articulate.unwrap_or(true);
    job.jobs = args.jobs.or(file.jobs).unwrap_or(0);
    Ok(job)
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let job = build_job(args)?;
    let manifest = match generate_dataset(&job) {
        Ok(m) => m,
        Err(DatasetError::InvalidJob(m)) => bail!("invalid job: {m}"),
        Err(e) => return Err(e.into()),
    };
    let t = &manifest.totals;
    println!("{} of {} objects written to {}", t.succeeded, t.requested, job.out.display());
    for r in manifest.objects.iter().filter(|r| !r.ok) {
        eprintln!("{}: {}", r.object_id, r.error.as_deref().unwrap_or("failed"));
    }
    Ok(if t.failed > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn load_program_text(name: &str) -> Result<String> {
    let path = Path::new(name);
    if !path.exists() {
        if let Some(t) = exemplar_text(name) {
            return Ok(t.to_string());
        }
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {name}"))
}

fn validate(name: &str) -> Result<ExitCode> {
    let program = parse_program(&load_program_text(name)?).with_context(|| format!("parsing {name}"))?;
    let diagnostics = validate_program(&program);
    for d in &diagnostics {
        println!("{d}");
    }
    if diagnostics.is_empty() {
        println!("{name}: ok");
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn fmt(name: &str, write: bool) -> Result<ExitCode> {
    let program = parse_program(&load_program_text(name)?).with_context(|| format!("parsing {name}"))?;
    let text = serialize_program(&program);
    if write {
        std::fs::write(name, &text).with_context(|| format!("writing {name}"))?;
    } else {
        println!("{text}");
    }
    Ok(ExitCode::SUCCESS)
}

fn inspect(object: &str, dir: &Path) -> Result<ExitCode> {
    let path = Path::new(object);
    let (dir, id) = if path.is_file() {
        let file = path.file_name().and_then(|f| f.to_str()).unwrap_or_default();
        let id = file.split('.').next().unwrap_or_default().to_string();
        let root = path.parent().and_then(Path::parent).unwrap_or(Path::new("."));
        (root.to_path_buf(), id)
    } else {
        (dir.to_path_buf(), object.to_string())
    };
    let manifest_path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
    let manifest: DatasetManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", manifest_path.display()))?;
    let Some(record) = manifest.objects.iter().find(|r| r.object_id == id) else {
        bail!("no object `{id}` in {}", manifest_path.display());
    };
    println!("{}", to_canonical_string(record)?);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Validate { program } => validate(&program),
        Command::Fmt { program, write } => fmt(&program, write),
        Command::Inspect { object, dir } => inspect(&object, &dir),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
