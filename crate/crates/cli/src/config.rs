//! Scene configuration: versioned structured text with explicit defaults,
//! validated at load and echoed verbatim into the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use splat_core::fluid::FluidParams;
use splat_core::xpbd::SolverSettings;
use splat_core::math::Vec3;

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_ANISO_THRESHOLD: f64 = 1.1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("invalid field {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("missing file for {field}: {path}")]
    MissingFile { field: String, path: PathBuf },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub fluid: Option<FluidConfig>,
    #[serde(default)]
    pub bodies: Vec<BodyConfig>,
    pub cameras: Vec<CameraConfig>,
    #[serde(default)]
    pub lights: Vec<LightConfig>,
    #[serde(default)]
    pub env: Option<EnvConfig>,
    #[serde(default)]
    pub render: RenderConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub dt: f64,
    pub fluid_iterations: usize,
    pub solid_iterations: usize,
    pub gravity: [f64; 3],
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        SolverConfig {
            dt: s.dt,
            fluid_iterations: s.fluid_iterations,
            solid_iterations: s.solid_iterations,
            gravity: [s.gravity.x, s.gravity.y, s.gravity.z],
        }
    }
}

impl SolverConfig {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            dt: self.dt,
            fluid_iterations: self.fluid_iterations,
            solid_iterations: self.solid_iterations,
            gravity: Vec3::new(self.gravity[0], self.gravity[1], self.gravity[2]),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidConfig {
    pub rest_density: f64,
    pub spacing: f64,
    // Optional overrides of the spacing-derived defaults.
    pub kernel_radius: Option<f64>,
    pub particle_mass: Option<f64>,
    pub particle_radius: Option<f64>,
    pub tension_distance: Option<f64>,
    pub occlusion_threshold: Option<f64>,
    pub surface_update_stride: Option<usize>,
    pub tension_compliance: Option<f64>,
    pub spacing_compliance: Option<f64>,
    pub velocity_smoothing: Option<f64>,
    pub one_sided_density: Option<bool>,
    pub printed_occlusion_angle: Option<bool>,
    #[serde(default)]
    pub blocks: Vec<FluidBlockConfig>,
    #[serde(default)]
    pub emitters: Vec<EmitterConfig>,
}

impl FluidConfig {
    pub fn params(&self) -> FluidParams {
        let mut p = FluidParams::from_spacing(self.rest_density, self.spacing);
        if let Some(v) = self.kernel_radius {
            p.kernel_radius = v;
        }
        if let Some(v) = self.particle_mass {
            p.particle_mass = v;
        }
        if let Some(v) = self.particle_radius {
            p.particle_radius = v;
        }
        if let Some(v) = self.tension_distance {
            p.tension_distance = v;
        }
        if let Some(v) = self.occlusion_threshold {
            p.occlusion_threshold = v;
        }
        if let Some(v) = self.surface_update_stride {
            p.surface_update_stride = v;
        }
        if let Some(v) = self.tension_compliance {
            p.tension_compliance = v;
        }
        if let Some(v) = self.spacing_compliance {
            p.spacing_compliance = v;
        }
        if let Some(v) = self.velocity_smoothing {
            p.velocity_smoothing = v;
        }
        if let Some(v) = self.one_sided_density {
            p.one_sided_density = v;
        }
        if let Some(v) = self.printed_occlusion_angle {
            p.printed_occlusion_angle = v;
        }
        p
    }

    /// The fully resolved parameter set, for the manifest echo.
    pub fn resolved(&self) -> FluidConfig {
        let p = self.params();
        FluidConfig {
            rest_density: self.rest_density,
            spacing: self.spacing,
            kernel_radius: Some(p.kernel_radius),
            particle_mass: Some(p.particle_mass),
            particle_radius: Some(p.particle_radius),
            tension_distance: Some(p.tension_distance),
            occlusion_threshold: Some(p.occlusion_threshold),
            surface_update_stride: Some(p.surface_update_stride),
            tension_compliance: Some(p.tension_compliance),
            spacing_compliance: Some(p.spacing_compliance),
            velocity_smoothing: Some(p.velocity_smoothing),
            one_sided_density: Some(p.one_sided_density),
            printed_occlusion_angle: Some(p.printed_occlusion_angle),
            blocks: self.blocks.clone(),
            emitters: self.emitters.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidBlockConfig {
    pub origin: [f64; 3],
    pub count: [usize; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub origin: [f64; 3],
    /// Emission direction; the particle patch is perpendicular to it.
    pub direction: [f64; 3],
    /// Patch size in particles (width x height).
    pub size: [usize; 2],
    pub speed: f64,
    /// Steps between bursts.
    pub every: u64,
    #[serde(default)]
    pub start: u64,
    pub stop: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub mesh: PathBuf,
    pub mode: BodyModeConfig,
    #[serde(default)]
    pub compliance: f64,
    pub sample_radius: f64,
    #[serde(default = "default_body_density")]
    pub density: f64,
    #[serde(default)]
    pub pinned: bool,
    #[serde(default)]
    pub damping: f64,
    pub kernels: Option<PathBuf>,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub translate: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default)]
    pub sample_seed: u64,
}

fn default_body_density() -> f64 {
    1000.0
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyModeConfig {
    Rigid,
    Deformable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub id: String,
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    #[serde(default = "default_fov")]
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_near")]
    pub near: f64,
}

fn default_up() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

fn default_fov() -> f64 {
    55.0
}

fn default_near() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightConfig {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    #[serde(default = "default_light_fov")]
    pub fov_deg: f64,
}

fn default_light_fov() -> f64 {
    90.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub map: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    pub shadows: bool,
    pub foam: bool,
    pub absorption: [f64; 3],
    pub refraction_offset_px: f64,
    pub fluid_specular: f64,
    pub fluid_roughness: f64,
    pub background: [f32; 3],
    pub shadow_blur: usize,
    pub shadow_bias: f64,
    pub shadow_resolution_factor: usize,
    pub foam_min_speed: f64,
    pub foam_divergence_threshold: f64,
    pub foam_lifetime: f64,
    pub foam_seed_stride: u64,
    pub foam_base_radius_px: f64,
    pub foam_reference_depth: f64,
    pub foam_curve_strength: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        let foam = splat_render::foam::FoamParams::default();
        RenderConfig {
            shadows: true,
            foam: true,
            absorption: [0.30, 0.12, 0.06],
            refraction_offset_px: 8.0,
            fluid_specular: 1.0,
            fluid_roughness: 0.05,
            background: [0.0; 3],
            shadow_blur: 2,
            shadow_bias: 0.02,
            shadow_resolution_factor: 3,
            foam_min_speed: foam.min_speed,
            foam_divergence_threshold: foam.divergence_threshold,
            foam_lifetime: foam.lifetime,
            foam_seed_stride: foam.seed_stride,
            foam_base_radius_px: foam.base_radius_px,
            foam_reference_depth: foam.reference_depth,
            foam_curve_strength: foam.curve_strength,
        }
    }
}

impl RenderConfig {
    pub fn foam_params(&self) -> splat_render::foam::FoamParams {
        let mut p = splat_render::foam::FoamParams::default();
        p.min_speed = self.foam_min_speed;
        p.divergence_threshold = self.foam_divergence_threshold;
        p.lifetime = self.foam_lifetime;
        p.seed_stride = self.foam_seed_stride.max(1);
        p.base_radius_px = self.foam_base_radius_px;
        p.reference_depth = self.foam_reference_depth;
        p.curve_strength = self.foam_curve_strength;
        p
    }

    pub fn options(&self) -> splat_render::RenderOptions {
        let mut o = splat_render::RenderOptions::default();
        o.absorption = self.absorption;
        o.refraction_offset_px = self.refraction_offset_px;
        o.fluid_specular = self.fluid_specular;
        o.fluid_roughness = self.fluid_roughness;
        o.shadows = self.shadows;
        o.shadow.blur = self.shadow_blur;
        o.shadow.bias = self.shadow_bias;
        o.shadow_resolution_factor = self.shadow_resolution_factor;
        o.foam_enabled = self.foam;
        o.foam = self.foam_params();
        o.background_color = self.background;
        o
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Anisotropy ratio threshold `a`.
    pub aniso_threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { aniso_threshold: DEFAULT_ANISO_THRESHOLD }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: PathBuf::from("out") }
    }
}

impl SceneConfig {
    /// Parse, validate, and resolve relative paths against the config
    /// file's directory.
    pub fn load(path: &Path) -> Result<SceneConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: SceneConfig = toml::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn from_str_validated(text: &str) -> Result<SceneConfig, ConfigError> {
        let config: SceneConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        for body in &mut self.bodies {
            fix(&mut body.mesh);
            if let Some(k) = &mut body.kernels {
                fix(k);
            }
        }
        if let Some(env) = &mut self.env {
            fix(&mut env.map);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        self.solver
            .settings()
            .validate()
            .map_err(|reason| invalid("solver", reason))?;

        if self.cameras.is_empty() {
            return Err(invalid("cameras", "at least one camera is required"));
        }
        let mut ids = std::collections::HashSet::new();
        for cam in &self.cameras {
            if !ids.insert(cam.id.clone()) {
                return Err(invalid("cameras.id", format!("duplicate camera id {:?}", cam.id)));
            }
            if cam.width == 0 || cam.height == 0 {
                return Err(invalid("cameras", "width and height must be positive"));
            }
            if !(cam.fov_deg > 0.0 && cam.fov_deg < 180.0) {
                return Err(invalid("cameras.fov_deg", format!("got {}", cam.fov_deg)));
            }
            if cam.near <= 0.0 {
                return Err(invalid("cameras.near", format!("got {}", cam.near)));
            }
        }

        if let Some(fluid) = &self.fluid {
            if !(fluid.rest_density.is_finite() && fluid.rest_density > 0.0) {
                return Err(invalid(
                    "fluid.rest_density",
                    format!("must be positive, got {}", fluid.rest_density),
                ));
            }
            if !(fluid.spacing.is_finite() && fluid.spacing > 0.0) {
                return Err(invalid(
                    "fluid.spacing",
                    format!("must be positive, got {}", fluid.spacing),
                ));
            }
            fluid
                .params()
                .validate()
                .map_err(|reason| invalid("fluid", reason))?;
            for (i, block) in fluid.blocks.iter().enumerate() {
                if block.count.iter().any(|&c| c == 0) {
                    return Err(invalid(
                        &format!("fluid.blocks[{i}].count"),
                        "all counts must be positive",
                    ));
                }
            }
            for (i, emitter) in fluid.emitters.iter().enumerate() {
                if emitter.every == 0 {
                    return Err(invalid(&format!("fluid.emitters[{i}].every"), "must be >= 1"));
                }
                let d = emitter.direction;
                if (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() < 1e-9 {
                    return Err(invalid(
                        &format!("fluid.emitters[{i}].direction"),
                        "must be non-zero",
                    ));
                }
            }
        }

        for (i, body) in self.bodies.iter().enumerate() {
            if !body.mesh.exists() {
                return Err(ConfigError::MissingFile {
                    field: format!("bodies[{i}].mesh"),
                    path: body.mesh.clone(),
                });
            }
            if let Some(kernels) = &body.kernels {
                if !kernels.exists() {
                    return Err(ConfigError::MissingFile {
                        field: format!("bodies[{i}].kernels"),
                        path: kernels.clone(),
                    });
                }
            }
            if !(body.sample_radius.is_finite() && body.sample_radius > 0.0) {
                return Err(invalid(
                    &format!("bodies[{i}].sample_radius"),
                    format!("must be positive, got {}", body.sample_radius),
                ));
            }
            if !(body.density.is_finite() && body.density > 0.0) {
                return Err(invalid(
                    &format!("bodies[{i}].density"),
                    format!("must be positive, got {}", body.density),
                ));
            }
            if body.compliance < 0.0 || body.damping < 0.0 {
                return Err(invalid(
                    &format!("bodies[{i}]"),
                    "compliance and damping must be non-negative",
                ));
            }
            if body.scale <= 0.0 {
                return Err(invalid(&format!("bodies[{i}].scale"), "must be positive"));
            }
        }

        if let Some(env) = &self.env {
            if !env.map.exists() {
                return Err(ConfigError::MissingFile {
                    field: "env.map".into(),
                    path: env.map.clone(),
                });
            }
        }

        if let Some(domain) = &self.domain {
            for axis in 0..3 {
                if !(domain.min[axis] < domain.max[axis]) {
                    return Err(invalid("domain", "min must be strictly below max per axis"));
                }
            }
        }

        if !(self.metrics.aniso_threshold >= 1.0) {
            return Err(invalid(
                "metrics.aniso_threshold",
                format!("must be at least 1, got {}", self.metrics.aniso_threshold),
            ));
        }

        Ok(())
    }

    /// Fully resolved copy (every default made explicit) for the manifest.
    pub fn resolved(&self) -> SceneConfig {
        let mut out = self.clone();
        out.fluid = self.fluid.as_ref().map(|f| f.resolved());
        out
    }

    pub fn camera(&self, id: &str) -> Option<&CameraConfig> {
        self.cameras.iter().find(|c| c.id == id)
    }
}

impl CameraConfig {
    pub fn build(&self) -> splat_render::Camera {
        splat_render::Camera::look_at(
            Vec3::new(self.position[0], self.position[1], self.position[2]),
            Vec3::new(self.look_at[0], self.look_at[1], self.look_at[2]),
            Vec3::new(self.up[0], self.up[1], self.up[2]),
            self.fov_deg,
            self.width,
            self.height,
            self.near,
        )
    }
}

impl LightConfig {
    /// Light-view camera at the main camera's resolution (the renderer
    /// scales it up by the shadow factor).
    pub fn build(&self, reference: &CameraConfig) -> splat_render::Camera {
        splat_render::Camera::look_at(
            Vec3::new(self.position[0], self.position[1], self.position[2]),
            Vec3::new(self.look_at[0], self.look_at[1], self.look_at[2]),
            Vec3::Y,
            self.fov_deg,
            reference.width,
            reference.height,
            reference.near,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [fluid]
        rest_density = 1000.0
        spacing = 0.05

        [[fluid.blocks]]
        origin = [0.0, 0.0, 0.0]
        count = [4, 5, 6]

        [[cameras]]
        id = "main"
        position = [0.0, 0.5, -2.0]
        look_at = [0.0, 0.0, 0.0]
        width = 64
        height = 48
    "#;

    #[test]
    fn minimal_config_applies_defaults() {
        let config = SceneConfig::from_str_validated(MINIMAL).unwrap();
        assert_eq!(config.solver.dt, 0.005);
        assert_eq!(config.solver.fluid_iterations, 10);
        assert_eq!(config.solver.solid_iterations, 50);
        assert_eq!(config.metrics.aniso_threshold, 1.1);
        let resolved = config.resolved();
        let fluid = resolved.fluid.unwrap();
        assert_eq!(fluid.kernel_radius, Some(0.1));
        assert_eq!(fluid.surface_update_stride, Some(2));
    }

    #[test]
    fn negative_rest_density_names_the_field() {
        let bad = MINIMAL.replace("rest_density = 1000.0", "rest_density = -5.0");
        let err = SceneConfig::from_str_validated(&bad).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("rest_density"), "error was: {text}");
    }

    #[test]
    fn missing_camera_is_rejected() {
        let bad = r#"
            [fluid]
            rest_density = 1000.0
            spacing = 0.05
        "#;
        assert!(SceneConfig::from_str_validated(bad).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = format!("{MINIMAL}\n[solver]\nnot_a_field = 3\n");
        assert!(SceneConfig::from_str_validated(&bad).is_err());
    }

    #[test]
    fn manifest_round_trips_through_toml() {
        let config = SceneConfig::from_str_validated(MINIMAL).unwrap();
        let text = toml::to_string_pretty(&config.resolved()).unwrap();
        let back = SceneConfig::from_str_validated(&text).unwrap();
        assert_eq!(back.solver.dt, config.solver.dt);
        assert_eq!(
            back.fluid.as_ref().unwrap().kernel_radius,
            Some(0.1)
        );
    }
}
