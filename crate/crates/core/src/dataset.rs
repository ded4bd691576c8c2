//! Batch generation: manipulation, detail recovery, labeling and export of
//! many objects, with a manifest of content hashes.

use crate::annotate::{compile_regions, part_poses, propagate_labels, AnnotateError, PointLabel, Vocabulary};
use crate::canonical::to_canonical_string;
use crate::detail::pseudo::{pseudo_real_cloud, BumpParams};
use crate::detail::{complete_invisible, compute_deformation, encode_relative, Binding, DetailError, DetailField, Frame};
use crate::exemplars::exemplar;
use crate::export::{write_ply, ExportError, Format, JointRecord, PartPoseRecord, PlyCloud};
use crate::math::{derive_seed, quat_wxyz, rng_from_seed, Pt3, Vec3};
use crate::primitive::{sample_surface, PrimitiveError};
use crate::program::{elaborate, Structure, StructureError, StructureProgram};
use crate::recovery::{build_mapping, migrate_details, DetailScaling, MappingStats, RecoveryError};
use crate::rules::{manipulate, AlterationTrace, ManipulationConfig, RuleError};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const TOOLBOX_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SCHEMA_VERSION: &str = "artipg-dataset/1";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Primitive(#[from] PrimitiveError),
    #[error(transparent)]
    Detail(#[from] DetailError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error(transparent)]
    Export(#[from] ExportError),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("exemplar `{category}`: {source}")]
    Exemplar { category: String, source: PipelineError },
    #[error("every object failed; first error: {0}")]
    AllFailed(String),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// How the per-category detail field is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetailSettings {
    /// Off: every object gets the bare structure surface.
    pub enabled: bool,
    /// Size of the synthetic target cloud per category.
    pub target_points: usize,
    /// Structure samples carrying the detail field.
    pub structure_samples: usize,
    pub bumps: BumpParams,
    pub scaling: DetailScaling,
}

impl Default for DetailSettings {
    fn default() -> Self {
        DetailSettings {
            enabled: true,
            target_points: 8192,
            structure_samples: 4096,
            bumps: BumpParams::default(),
            scaling: DetailScaling::Absolute,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationJob {
    /// Exemplars, used round-robin.
    pub categories: Vec<String>,
    pub count: usize,
    pub seed: u64,
    /// `seed` is replaced per object.
    pub manipulation: ManipulationConfig,
    pub points_per_object: usize,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub detail: DetailSettings,
    /// Draw joint values uniformly within their ranges.
    pub articulate: bool,
    /// Worker threads; 0 uses the available parallelism.
    pub jobs: usize,
}

impl GenerationJob {
    pub fn new(categories: Vec<String>, count: usize, seed: u64, out: PathBuf) -> Self {
        GenerationJob {
            categories,
            count,
            seed,
            manipulation: ManipulationConfig::default(),
            points_per_object: 2048,
            out,
            formats: vec![Format::PlyBinaryLe, Format::SidecarJson],
            detail: DetailSettings::default(),
            articulate: true,
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidJob(m));
        if self.count == 0 {
            return bad("count must be at least 1".into());
        }
        if self.points_per_object == 0 {
            return bad("points_per_object must be at least 1".into());
        }
        if self.categories.is_empty() {
            return bad("no categories".into());
        }
        if self.formats.is_empty() {
            return bad("no output formats".into());
        }
        if let Some(c) = self.categories.iter().find(|c| exemplar(c).is_none()) {
            return bad(format!("unknown category `{c}`"));
        }
        self.manipulation.validate().or_else(|e| bad(e.to_string()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest<T: Serialize>(v: &T) -> Result<String, ExportError> {
    Ok(sha256_hex(to_canonical_string(v)?.as_bytes()))
}

/// A category's original structure with its completed relative details.
#[derive(Debug, Clone)]
pub struct Source {
    pub category: String,
    pub program: StructureProgram,
    pub structure: Structure,
    pub relative: DetailField,
    pub vocabulary: Vocabulary,
}

pub fn prepare_source(category: &str, index: usize, job: &GenerationJob) -> Result<Source, PipelineError> {
    let program = exemplar(category).expect("validated category");
    let structure = elaborate(&program, None)?;
    let vocabulary = Vocabulary::of(&program)?;
    let relative = if job.detail.enabled {
        // source streams count down from the top so they never meet object streams
        let seed = derive_seed(job.seed, u64::MAX - index as u64);
        let target = pseudo_real_cloud(&structure, job.detail.target_points, seed, job.detail.bumps)?;
        let xs = sample_surface(
            &structure.instances,
            job.detail.structure_samples,
            &|i, p| structure.is_visible(i, p),
            derive_seed(seed, 1),
        )?;
        let world = compute_deformation(&xs, &target, category)?;
        complete_invisible(&structure, &encode_relative(&world, &structure.instances)?)?
    } else {
        DetailField {
            bindings: Vec::new(),
            vectors: Vec::new(),
            frame: Frame::SurfaceRelative,
            source: category.to_string(),
            unsourced: structure
                .instances
                .iter()
                .enumerate()
                .flat_map(|(i, inst)| inst.patches().map(move |p| (i, p)))
                .collect(),
        }
    };
    Ok(Source { category: category.to_string(), program, structure, relative, vocabulary })
}

/// One generated object before serialization.
#[derive(Debug, Clone)]
pub struct LabeledObject {
    pub object_id: String,
    pub index: usize,
    pub category: String,
    pub seed: u64,
    pub config: ManipulationConfig,
    pub program: StructureProgram,
    pub structure: Structure,
    pub trace: AlterationTrace,
    pub points: Vec<Pt3>,
    pub normals: Vec<Vec3>,
    pub bindings: Vec<Binding>,
    pub labels: Vec<PointLabel>,
    pub part_poses: Vec<PartPoseRecord>,
    pub joints: Vec<JointRecord>,
    pub stats: MappingStats,
    pub vocabulary: Vocabulary,
}

pub fn object_id(category: &str, index: usize) -> String {
    format!("{category}_{index:05}")
}

fn joint_records(s: &Structure) -> Vec<JointRecord> {
    s.joints
        .iter()
        .zip(&s.joint_values)
        .map(|(j, &value)| {
            let link = s.links[j.child].as_ref().expect("jointed instance has a link");
            let frame = s.instances[link.parent].pose * link.anchor;
            let axis = frame.rotation * j.direction;
            let origin = frame * Pt3::from(j.origin);
            JointRecord {
                id: j.name.clone(),
                kind: j.kind,
                axis: [axis.x, axis.y, axis.z],
                origin: [origin.x, origin.y, origin.z],
                value,
                range: j.range,
            }
        })
        .collect()
}

pub fn generate_object(source: &Source, job: &GenerationJob, index: usize) -> Result<LabeledObject, PipelineError> {
    let seed = derive_seed(job.seed, index as u64);
    let config = ManipulationConfig { seed, ..job.manipulation.clone() };
    let (program, trace) = manipulate(&source.program, &config)?;
    let rest = elaborate(&program, None)?;
    let mut values = BTreeMap::new();
    if job.articulate {
        let mut rng = rng_from_seed(derive_seed(seed, 1));
        for j in &rest.joints {
            values.insert(j.name.clone(), rng.random_range(j.range[0]..=j.range[1]));
        }
    }
    let structure = if values.is_empty() { rest } else { elaborate(&program, Some(&values))? };
    let samples = sample_surface(
        &structure.instances,
        job.points_per_object,
        &|i, p| structure.is_visible(i, p),
        derive_seed(seed, 2),
    )?;
    let mapping = build_mapping(&source.structure, &structure, &trace, &samples)?;
    let (points, stats) = migrate_details(&source.relative, &mapping, &source.structure, &structure, job.detail.scaling)?;
    let bindings: Vec<Binding> = mapping.entries.iter().map(|e| e.target).collect();
    let regions = compile_regions(&program)?;
    let labels = propagate_labels(&structure, &regions, &source.vocabulary, &bindings)?;
    let part_poses = part_poses(&structure)
        .into_iter()
        .map(|p| PartPoseRecord {
            id: p.id,
            label: p.label,
            scale: p.scale,
            quat: quat_wxyz(&p.rotation),
            t: p.translation.into(),
            center: p.center.into(),
        })
        .collect();
    Ok(LabeledObject {
        object_id: object_id(&source.category, index),
        index,
        category: source.category.clone(),
        seed,
        config,
        joints: joint_records(&structure),
        program,
        structure,
        trace,
        points,
        normals: samples.iter().map(|s| s.normal).collect(),
        bindings,
        labels,
        part_poses,
        stats,
        vocabulary: source.vocabulary.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub object_id: String,
    pub category: String,
    pub seed: u64,
    pub vocabulary: Vocabulary,
    pub part_poses: Vec<PartPoseRecord>,
    pub joints: Vec<JointRecord>,
    pub trace: AlterationTrace,
    pub trace_digest: String,
    pub nosource_fraction: f64,
    pub mapping: MappingStats,
    /// Per point: instance, patch, u, v.
    pub bindings: Vec<(usize, u16, f64, f64)>,
    /// Per point: offset from the bound surface point in its (n, t, b) frame.
    pub detail: Vec<[f32; 3]>,
    pub program: StructureProgram,
}

fn detail_vectors(o: &LabeledObject) -> Result<Vec<[f32; 3]>, ExportError> {
    let mut field = DetailField {
        bindings: o.bindings.clone(),
        vectors: Vec::new(),
        frame: Frame::World,
        source: String::new(),
        unsourced: Vec::new(),
    };
    let bare = crate::detail::bound_positions(&field, &o.structure.instances)
        .map_err(|e| ExportError::Malformed(e.to_string()))?;
    field.vectors = o.points.iter().zip(&bare).map(|(p, q)| p - q).collect();
    let rel = encode_relative(&field, &o.structure.instances).map_err(|e| ExportError::Malformed(e.to_string()))?;
    Ok(rel.vectors.iter().map(|v| [v.x as f32, v.y as f32, v.z as f32]).collect())
}

pub fn sidecar(o: &LabeledObject) -> Result<Sidecar, ExportError> {
    Ok(Sidecar {
        object_id: o.object_id.clone(),
        category: o.category.clone(),
        seed: o.seed,
        vocabulary: o.vocabulary.clone(),
        part_poses: o.part_poses.clone(),
        joints: o.joints.clone(),
        trace: o.trace.clone(),
        trace_digest: digest(&o.trace)?,
        nosource_fraction: o.stats.no_source_fraction(),
        mapping: o.stats.clone(),
        bindings: o.bindings.iter().map(|b| (b.instance, b.patch.0, b.uv[0], b.uv[1])).collect(),
        detail: detail_vectors(o)?,
        program: o.program.clone(),
    })
}

pub fn ply_cloud(o: &LabeledObject) -> PlyCloud {
    let f = |v: &Vec3| [v.x as f32, v.y as f32, v.z as f32];
    PlyCloud {
        positions: o.points.iter().map(|p| f(&p.coords)).collect(),
        normals: o.normals.iter().map(f).collect(),
        labels: o.labels.clone(),
    }
}

pub fn export_object(o: &LabeledObject, format: Format) -> Result<Vec<u8>, ExportError> {
    match format {
        Format::SidecarJson => Ok(to_canonical_string(&sidecar(o)?)?.into_bytes()),
        f => write_ply(&ply_cloud(o), f),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub format: Format,
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub object_id: String,
    pub index: usize,
    pub category: String,
    pub seed: u64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nosource_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<MappingStats>,
    pub files: Vec<FileRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub requested: usize,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: String,
    pub toolbox_version: String,
    pub seed: u64,
    pub points_per_object: usize,
    pub config_digest: String,
    /// Label vocabulary per category.
    pub labels: BTreeMap<String, Vocabulary>,
    pub totals: Totals,
    pub objects: Vec<ObjectRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn write(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    std::fs::write(path, bytes).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
}

type Outcome = (ObjectRecord, Vec<(PathBuf, Vec<u8>)>);

fn run_one(job: &GenerationJob, sources: &[Source], index: usize) -> Outcome {
    let source = &sources[index % sources.len()];
    let id = object_id(&source.category, index);
    let seed = derive_seed(job.seed, index as u64);
    let config = ManipulationConfig { seed, ..job.manipulation.clone() };
    let config_digest = digest(&config).expect("validated config serializes");
    let mut record = ObjectRecord {
        object_id: id.clone(),
        index,
        category: source.category.clone(),
        seed,
        ok: false,
        error: None,
        config_digest,
        trace_digest: None,
        nosource_fraction: None,
        mapping: None,
        files: Vec::new(),
    };
    let result = generate_object(source, job, index).and_then(|o| {
        let trace_digest = digest(&o.trace)?;
        let mut files = Vec::new();
        for &f in &job.formats {
            let bytes = export_object(&o, f)?;
            let rel = format!("objects/{id}.{}", f.extension());
            files.push((f, rel, bytes));
        }
        Ok((o, trace_digest, files))
    });
    match result {
        Ok((o, trace_digest, files)) => {
            record.ok = true;
            record.trace_digest = Some(trace_digest);
            record.nosource_fraction = Some(o.stats.no_source_fraction());
            record.mapping = Some(o.stats.clone());
            let mut out = Vec::new();
            for (format, path, bytes) in files {
                record.files.push(FileRecord { format, path: path.clone(), sha256: sha256_hex(&bytes) });
                out.push((job.out.join(path), bytes));
            }
            (record, out)
        }
        Err(e) => {
            record.error = Some(e.to_string());
            (record, Vec::new())
        }
    }
}

/// Generates `job.count` objects into `job.out` and writes the manifest
/// last. Output bytes depend only on the job, not on thread count.
pub fn generate_dataset(job: &GenerationJob) -> Result<DatasetManifest, DatasetError> {
    job.validate()?;
    let objects_dir = job.out.join("objects");
    std::fs::create_dir_all(&objects_dir).map_err(|source| DatasetError::Io { path: objects_dir.clone(), source })?;
    let sources: Vec<Source> = job
        .categories
        .iter()
        .enumerate()
        .map(|(i, c)| prepare_source(c, i, job).map_err(|source| DatasetError::Exemplar { category: c.clone(), source }))
        .collect::<Result<_, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(job.jobs)
        .build()
        .map_err(|e| DatasetError::InvalidJob(e.to_string()))?;
    let mut records = Vec::with_capacity(job.count);
    const CHUNK: usize = 64;
    for start in (0..job.count).step_by(CHUNK) {
        let end = (start + CHUNK).min(job.count);
        let outcomes: Vec<Outcome> = pool.install(|| (start..end).into_par_iter().map(|k| run_one(job, &sources, k)).collect());
        for (record, files) in outcomes {
            for (path, bytes) in files {
                write(&path, &bytes)?;
            }
            records.push(record);
        }
    }
    let succeeded = records.iter().filter(|r| r.ok).count();
    if succeeded == 0 {
        let first = records[0].error.clone().unwrap_or_default();
        return Err(DatasetError::AllFailed(first));
    }
    let manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION.to_string(),
        toolbox_version: TOOLBOX_VERSION.to_string(),
        seed: job.seed,
        points_per_object: job.points_per_object,
        config_digest: digest(&ManipulationConfig { seed: job.seed, ..job.manipulation.clone() })?,
        labels: sources.iter().map(|s| (s.category.clone(), s.vocabulary.clone())).collect(),
        totals: Totals { requested: job.count, succeeded, failed: job.count - succeeded },
        objects: records,
    };
    let text = to_canonical_string(&manifest).map_err(ExportError::from)?;
    write(&job.out.join(MANIFEST_NAME), text.as_bytes())?;
    Ok(manifest)
}
