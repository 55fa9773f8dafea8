use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::{json, Value};

use ctsdf::mesh::{marching_cubes, sample_vertex_channel, write_ply_with, PlyFormat, TriMesh};
use ctsdf::morpho::{curvature_fields, measure, CSV_HEADER};
use ctsdf::narrowband::{
    select_narrowband, solve_narrowband_with, CPConfig, NarrowbandSolution, DEFAULT_STENCIL,
};
use ctsdf::phantom::{phantom_geometry, synth_density, AnalyticSurface};
use ctsdf::phases::{estimate_phases, reconstruct_density};
use ctsdf::study::{check_spacings, run_study, Stage, DEFAULT_MIN_SPACING, STUDY_CSV_HEADER};
use ctsdf::sweep::{reattach_sign, sweep_unsigned, SweepConfig, SweepOrder};
use ctsdf::volume::{gaussian_smooth, read_metaimage, write_metaimage_with, ElementType};
use ctsdf::{ScalarField, SplineInterpolant};

use crate::config::{parse, pick, require, FileConfig};
use crate::error::{io_error, CliError};
use crate::provenance::Provenance;

type CmdResult = Result<(), CliError>;

/// Settings shared by every command.
pub struct Context {
    pub file: FileConfig,
    pub threads: Option<usize>,
}

impl Context {
    fn provenance(&self, stage: &str, config: Value) -> Provenance {
        Provenance::new(stage, config, self.threads)
    }
}

fn write_volume(field: &ScalarField, path: &Path, prov: &Provenance) -> CmdResult {
    let extra = [("Provenance".to_string(), prov.line())];
    write_metaimage_with(field, path, ElementType::Double, &extra)?;
    Ok(())
}

fn write_text(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_error(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("i/o error on stdout: {e}")))
        }
    }
}

fn emit_json(mut report: Value, prov: &Provenance, path: Option<&Path>) -> CmdResult {
    report["provenance"] = serde_json::to_value(prov).expect("provenance serialises");
    let mut text = serde_json::to_string_pretty(&report).expect("report serialises");
    text.push('\n');
    write_text(path, &text)
}

fn path_json(p: &Option<PathBuf>) -> Value {
    p.as_ref()
        .map_or(Value::Null, |p| json!(p.display().to_string()))
}

fn has_crossing(psi: &ScalarField) -> CmdResult {
    let neg = psi.values.iter().any(|&v| v < 0.0);
    let pos = psi.values.iter().any(|&v| v >= 0.0);
    if neg && pos {
        Ok(())
    } else {
        Err(ctsdf::Error::NoZeroCrossing.into())
    }
}

fn check_floor(h: f64, min_spacing: f64) -> CmdResult {
    if h >= min_spacing {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "spacing {h} is below the memory floor {min_spacing} (raise it with --min-spacing)"
        )))
    }
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// sphere, torus, double_spheres, cylinder or slab.
    #[arg(long)]
    surface: Option<String>,
    /// Grid spacing; must divide 20.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write the biphasic density instead of the signed distance.
    #[arg(long)]
    density: bool,
    #[arg(long, allow_hyphen_values = true)]
    rho1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rho2: Option<f64>,
    /// Width of the density transition (world units).
    #[arg(long)]
    eps_synth: Option<f64>,
    #[arg(long)]
    min_spacing: Option<f64>,
}

pub fn phantom(a: PhantomArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let surface = require(a.surface, f.surface.clone(), "surface")?;
    let h = match a.h {
        Some(h) => h,
        None => match f.h.clone().map(|s| s.into_vec()).as_deref() {
            Some([h]) => *h,
            Some(_) => return Err(CliError::Usage("phantom takes a single `h`".into())),
            None => {
                return Err(CliError::Usage(
                    "`h` is required (flag or config file)".into(),
                ))
            }
        },
    };
    let output = require(a.output, f.output.clone(), "output")?;
    let density = a.density || f.density.unwrap_or(false);
    let rho1 = pick(a.rho1, f.rho1, 100.0);
    let rho2 = pick(a.rho2, f.rho2, 0.0);
    let eps_synth = pick(a.eps_synth, f.eps_synth, 2.0);
    let min_spacing = pick(a.min_spacing, f.min_spacing, DEFAULT_MIN_SPACING);

    let shape = AnalyticSurface::by_name(&surface)?;
    check_floor(h, min_spacing)?;
    let phi = shape.sample(phantom_geometry(h)?);
    let field = if density {
        synth_density(&phi, rho1, rho2, eps_synth)?
    } else {
        phi
    };

    let mut config = json!({
        "surface": surface, "h": h, "output": path_json(&Some(output.clone())),
        "density": density, "min_spacing": min_spacing,
    });
    if density {
        config["rho1"] = json!(rho1);
        config["rho2"] = json!(rho2);
        config["eps_synth"] = json!(eps_synth);
    }
    let prov = ctx.provenance("phantom", config);
    write_volume(&field, &output, &prov)?;
    let report = json!({
        "dims": field.geometry.dims,
        "spacing": field.geometry.spacing,
        "origin": field.geometry.origin,
        "min": field.min(),
        "max": field.max(),
    });
    emit_json(report, &prov, None)
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Density volume (MetaImage).
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Signed distance output, or ψ with --psi-only.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write the implicit surface ψ here.
    #[arg(long)]
    psi_output: Option<PathBuf>,
    /// Stop after ψ = T - Gσ * ρ.
    #[arg(long)]
    psi_only: bool,
    /// Gaussian standard deviation (world units); 0 disables smoothing.
    #[arg(long)]
    sigma: Option<f64>,
    /// Density threshold T.
    #[arg(long, short = 't', allow_hyphen_values = true)]
    threshold: Option<f64>,
    /// Width of the cross-shaped band stencil (odd).
    #[arg(long)]
    stencil: Option<usize>,
    /// first or high.
    #[arg(long)]
    order: Option<String>,
}

fn solve_band(psi: &ScalarField, stencil: usize) -> Result<NarrowbandSolution, CliError> {
    let mask = select_narrowband(psi, stencil)?;
    let interp = SplineInterpolant::new(psi, 3)?;
    let cp = CPConfig::for_spacing(psi.geometry.min_spacing());
    Ok(solve_narrowband_with(&interp, psi, &mask, &cp)?)
}

pub fn embed(a: EmbedArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let input = require(a.input, f.input.clone(), "input")?;
    let output = require(a.output, f.output.clone(), "output")?;
    let psi_output = a.psi_output.or(f.psi_output.clone());
    let psi_only = a.psi_only || f.psi_only.unwrap_or(false);
    let sigma = pick(a.sigma, f.sigma, 0.0);
    let threshold = require(a.threshold, f.threshold, "threshold")?;
    let stencil = pick(a.stencil, f.stencil, DEFAULT_STENCIL);
    let order_name = pick(a.order, f.order.clone(), "high".to_string());
    let order: SweepOrder = parse(&order_name, "order")?;

    let config = json!({
        "input": path_json(&Some(input.clone())), "output": path_json(&Some(output.clone())),
        "psi_output": path_json(&psi_output), "psi_only": psi_only,
        "sigma": sigma, "threshold": threshold, "stencil": stencil, "order": order_name,
    });
    let prov = ctx.provenance("embed", config);

    let rho = read_metaimage(&input)?;
    let psi = gaussian_smooth(&rho, sigma)?.map(|r| threshold - r);
    has_crossing(&psi)?;
    if psi_only {
        write_volume(&psi, &output, &prov)?;
        let report = json!({"psi": {"min": psi.min(), "max": psi.max()}});
        return emit_json(report, &prov, None);
    }

    let band = solve_band(&psi, stencil)?;
    let (unsigned, sweep) = sweep_unsigned(&band, psi.geometry, &SweepConfig::with_order(order))?;
    let phi = reattach_sign(&unsigned, &psi)?;
    if let Some(p) = &psi_output {
        write_volume(&psi, p, &prov)?;
    }
    write_volume(&phi, &output, &prov)?;
    let report = json!({
        "narrowband": band.stats,
        "sweep": sweep,
        "phi": {"min": phi.min(), "max": phi.max()},
    });
    emit_json(report, &prov, None)
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Field whose values near its zero level are kept as seeds.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    stencil: Option<usize>,
    /// first or high.
    #[arg(long)]
    order: Option<String>,
}

/// Re-extends a field from its own narrowband values.
pub fn sweep(a: SweepArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let input = require(a.input, f.input.clone(), "input")?;
    let output = require(a.output, f.output.clone(), "output")?;
    let stencil = pick(a.stencil, f.stencil, DEFAULT_STENCIL);
    let order_name = pick(a.order, f.order.clone(), "high".to_string());
    let order: SweepOrder = parse(&order_name, "order")?;
    let config = json!({
        "input": path_json(&Some(input.clone())), "output": path_json(&Some(output.clone())),
        "stencil": stencil, "order": order_name,
    });
    let prov = ctx.provenance("sweep", config);

    let field = read_metaimage(&input)?;
    has_crossing(&field)?;
    let seed = NarrowbandSolution::from_values(select_narrowband(&field, stencil)?, &field)?;
    let (unsigned, report) =
        sweep_unsigned(&seed, field.geometry, &SweepConfig::with_order(order))?;
    let phi = reattach_sign(&unsigned, &field)?;
    write_volume(&phi, &output, &prov)?;
    let report = json!({"seed_voxels": seed.stats.band_voxels, "sweep": report});
    emit_json(report, &prov, None)
}

#[derive(Debug, Args)]
pub struct PhasesArgs {
    /// Signed distance volume φ.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Density volume ρ on the same grid.
    #[arg(long)]
    rho: Option<PathBuf>,
    /// Smoothing applied to ρ before estimation (world units).
    #[arg(long)]
    sigma: Option<f64>,
    /// Heaviside width as a multiple of the spacing.
    #[arg(long)]
    eps_morph: Option<f64>,
    /// Write the reconstructed two-phase density here.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

pub fn phases(a: PhasesArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let input = require(a.input, f.input.clone(), "input")?;
    let rho_path = require(a.rho, f.rho.clone(), "rho")?;
    let sigma = pick(a.sigma, f.sigma, 0.0);
    let eps_morph = pick(a.eps_morph, f.eps_morph, 2.0);
    let output = a.output.or(f.output.clone());
    let config = json!({
        "input": path_json(&Some(input.clone())), "rho": path_json(&Some(rho_path.clone())),
        "sigma": sigma, "eps_morph": eps_morph, "output": path_json(&output),
    });
    let prov = ctx.provenance("phases", config);

    let phi = read_metaimage(&input)?;
    let rho = gaussian_smooth(&read_metaimage(&rho_path)?, sigma)?;
    let eps = eps_morph * phi.geometry.min_spacing();
    let est = estimate_phases(&rho, &phi, eps)?;
    if let Some(p) = &output {
        write_volume(&reconstruct_density(&phi, &est)?, p, &prov)?;
    }
    emit_json(json!({"phases": est}), &prov, None)
}

#[derive(Debug, Args)]
pub struct MorphoArgs {
    /// Signed distance volume φ.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Optional density volume; adds phase densities to the report.
    #[arg(long)]
    rho: Option<PathBuf>,
    /// Smoothing applied to ρ before phase estimation (world units).
    #[arg(long)]
    sigma: Option<f64>,
    /// Heaviside / Dirac width as a multiple of the spacing.
    #[arg(long)]
    eps_morph: Option<f64>,
    /// JSON report path (stdout if absent).
    #[arg(long)]
    json: Option<PathBuf>,
    /// One-row CSV report.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Zero level set as PLY with H and K vertex channels.
    #[arg(long)]
    mesh: Option<PathBuf>,
}

fn curvature_mesh(phi: &ScalarField, level: f64) -> Result<(TriMesh, usize), CliError> {
    let mesh = marching_cubes(phi, level);
    if mesh.is_empty() {
        return Err(ctsdf::Error::EmptySurface.into());
    }
    let c = curvature_fields(phi)?;
    let (mesh, out_h) = sample_vertex_channel(mesh, &SplineInterpolant::new(&c.mean, 1)?, "H")?;
    let (mesh, out_k) = sample_vertex_channel(mesh, &SplineInterpolant::new(&c.gaussian, 1)?, "K")?;
    Ok((mesh, out_h.max(out_k)))
}

pub fn morpho(a: MorphoArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let input = require(a.input, f.input.clone(), "input")?;
    let rho_path = a.rho.or(f.rho.clone());
    let sigma = pick(a.sigma, f.sigma, 0.0);
    let eps_morph = pick(a.eps_morph, f.eps_morph, 2.0);
    let json_path = a.json.or(f.json.clone());
    let csv_path = a.csv.or(f.csv.clone());
    let mesh_path = a.mesh.or(f.mesh.clone());
    let config = json!({
        "input": path_json(&Some(input.clone())), "rho": path_json(&rho_path),
        "sigma": sigma, "eps_morph": eps_morph, "json": path_json(&json_path),
        "csv": path_json(&csv_path), "mesh": path_json(&mesh_path),
    });
    let prov = ctx.provenance("morpho", config);

    // Read and compute everything before writing, so failures leave no files.
    let phi = read_metaimage(&input)?;
    let rho = match &rho_path {
        Some(p) => Some(gaussian_smooth(&read_metaimage(p)?, sigma)?),
        None => None,
    };
    let eps = eps_morph * phi.geometry.min_spacing();
    let report = measure(&phi, eps)?;
    let est = match &rho {
        Some(r) => Some(estimate_phases(r, &phi, eps)?),
        None => None,
    };
    let mesh = match &mesh_path {
        Some(_) => Some(curvature_mesh(&phi, 0.0)?),
        None => None,
    };

    if let (Some(p), Some((m, _))) = (&mesh_path, &mesh) {
        write_ply_with(
            m,
            p,
            PlyFormat::BinaryLittleEndian,
            &[format!("provenance {}", prov.line())],
        )?;
    }
    if let Some(p) = &csv_path {
        let text = format!(
            "# provenance {}\n{CSV_HEADER}\n{}\n",
            prov.line(),
            report.csv_row()
        );
        write_text(Some(p), &text)?;
    }
    let mut out = json!({"morphometry": report});
    if let Some(e) = est {
        out["phases"] = json!(e);
    }
    if let Some((m, outside)) = &mesh {
        out["mesh"] = json!({"vertices": m.vertices.len(), "triangles": m.triangles.len(), "outside_vertices": outside});
    }
    emit_json(out, &prov, json_path.as_deref())
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// Signed distance volume φ.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// PLY output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Iso-level to extract.
    #[arg(long, allow_hyphen_values = true)]
    level: Option<f64>,
    /// ascii or binary.
    #[arg(long)]
    format: Option<String>,
    /// Add mean (H) and Gaussian (K) curvature vertex channels.
    #[arg(long)]
    channels: bool,
}

pub fn mesh(a: MeshArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let input = require(a.input, f.input.clone(), "input")?;
    let output = require(a.output, f.output.clone(), "output")?;
    let level = pick(a.level, f.level, 0.0);
    let format_name = pick(a.format, f.format.clone(), "binary".to_string());
    let format: PlyFormat = parse(&format_name, "format")?;
    let channels = a.channels || f.channels.unwrap_or(false);
    let config = json!({
        "input": path_json(&Some(input.clone())), "output": path_json(&Some(output.clone())),
        "level": level, "format": format_name, "channels": channels,
    });
    let prov = ctx.provenance("mesh", config);

    let phi = read_metaimage(&input)?;
    let (m, outside) = if channels {
        curvature_mesh(&phi, level)?
    } else {
        let m = marching_cubes(&phi, level);
        if m.is_empty() {
            return Err(ctsdf::Error::EmptySurface.into());
        }
        (m, 0)
    };
    write_ply_with(
        &m,
        &output,
        format,
        &[format!("provenance {}", prov.line())],
    )?;
    let report = json!({
        "vertices": m.vertices.len(),
        "triangles": m.triangles.len(),
        "components": m.component_count(),
        "euler_characteristic": m.euler_characteristic(),
        "closed": m.is_closed_manifold(),
        "area": m.area(),
        "outside_vertices": outside,
    });
    emit_json(report, &prov, None)
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// sphere, torus, double_spheres, cylinder or slab.
    #[arg(long)]
    surface: Option<String>,
    /// Spacings, coarsest first, each half the previous.
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<f64>>,
    /// narrowband, sweep-first or sweep-high.
    #[arg(long)]
    stage: Option<String>,
    #[arg(long)]
    min_spacing: Option<f64>,
    /// CSV output (stdout if absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

pub fn verify(a: VerifyArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let surface = require(a.surface, f.surface.clone(), "surface")?;
    let hs = require(a.h, f.h.clone().map(|s| s.into_vec()), "h")?;
    let stage_name = pick(a.stage, f.stage.clone(), "narrowband".to_string());
    let stage: Stage = parse(&stage_name, "stage")?;
    let min_spacing = pick(a.min_spacing, f.min_spacing, DEFAULT_MIN_SPACING);
    let output = a.output.or(f.output.clone());
    let config = json!({
        "surface": surface, "h": hs, "stage": stage.label(),
        "min_spacing": min_spacing, "output": path_json(&output),
    });
    let prov = ctx.provenance("verify", config);

    let shape = AnalyticSurface::by_name(&surface)?;
    check_spacings(&hs, min_spacing)?;
    let rows = run_study(&shape, &hs, stage, min_spacing)?;
    let mut text = format!("# provenance {}\n{STUDY_CSV_HEADER}\n", prov.line());
    for r in &rows {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    write_text(output.as_deref(), &text)
}
