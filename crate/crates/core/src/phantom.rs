//! Synthetic co-registered T1/FLAIR volumes with white-matter and lesion
//! ground truth.
//!
//! Geometry is built in millimetres so that anisotropic spacing yields
//! physically round structures. Each case has a brain ellipsoid, an inner
//! white-matter ellipsoid, N non-touching spherical lesions fully inside the
//! white matter, and (by default) a lesion-like confounder in grey matter.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::morphology::{dilate, Connectivity};
use crate::volume::nifti::{read_mask, read_nifti, write_mask, write_nifti, Datatype};
use crate::volume::{BinaryMask3D, Grid, Volume, Volume3D};

/// Mean intensity of each tissue class in one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TissueIntensities {
    pub background: f32,
    pub grey_matter: f32,
    pub white_matter: f32,
    pub lesion: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub lesion_count: [usize; 2],
    /// Lesion radius range in in-plane voxels (millimetres along z).
    pub lesion_radius: [f64; 2],
    pub t1: TissueIntensities,
    pub flair: TissueIntensities,
    pub noise_std: f32,
    /// Place a lesion-like blob outside the white matter.
    pub confounder: bool,
    pub confounder_radius: f64,
    /// Relative random jitter of the ellipsoid semi-axes.
    pub shape_jitter: f64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            dims: [64, 64, 8],
            spacing: [1.0, 1.0, 3.0],
            lesion_count: [2, 5],
            lesion_radius: [3.0, 5.0],
            t1: TissueIntensities { background: 0.0, grey_matter: 0.45, white_matter: 0.75, lesion: 0.3 },
            flair: TissueIntensities { background: 0.0, grey_matter: 0.5, white_matter: 0.4, lesion: 0.95 },
            noise_std: 0.02,
            confounder: true,
            confounder_radius: 2.5,
            shape_jitter: 0.06,
        }
    }
}

/// Noise level below which per-case intensity ordering is asserted in tests.
pub const ORDERING_NOISE_BOUND: f32 = 0.05;
const PLACEMENT_ATTEMPTS: usize = 2000;

impl PhantomConfig {
    pub fn validate(&self) -> Result<()> {
        Grid::new(self.dims, self.spacing)?;
        let [lo, hi] = self.lesion_count;
        if lo > hi {
            return Err(Error::InvalidArgument(format!("lesion_count range [{lo}, {hi}] is inverted")));
        }
        let [rlo, rhi] = self.lesion_radius;
        if !(rlo > 0.0 && rlo <= rhi) {
            return Err(Error::InvalidArgument(format!("lesion_radius range [{rlo}, {rhi}] invalid")));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::InvalidArgument("noise_std must be non-negative".into()));
        }
        let wm = self.white_matter_axes(1.0);
        if rhi >= wm[0].min(wm[1]) {
            return Err(Error::InvalidArgument(format!("lesion radius {rhi} does not fit inside white matter")));
        }
        Ok(())
    }

    fn extent_mm(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.dims[k] as f64 * self.spacing[k])
    }

    fn brain_axes(&self, scale: f64) -> [f64; 3] {
        let e = self.extent_mm();
        [0.45 * e[0] * scale, 0.47 * e[1] * scale, 0.8 * e[2]]
    }

    fn white_matter_axes(&self, scale: f64) -> [f64; 3] {
        let e = self.extent_mm();
        [0.25 * e[0] * scale, 0.30 * e[1] * scale, 0.7 * e[2]]
    }
}

/// One generated subject.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomCase {
    pub id: String,
    pub seed: u64,
    pub t1: Volume3D,
    pub flair: Volume3D,
    pub wm_truth: BinaryMask3D,
    pub wmh_truth: BinaryMask3D,
    pub lesion_count: usize,
    /// Lesion centres in voxel coordinates.
    pub lesion_centres: Vec<[usize; 3]>,
}

struct Ball {
    centre: [f64; 3],
    radius: f64,
}

impl Ball {
    fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).map(|k| (p[k] - self.centre[k]).powi(2)).sum::<f64>() <= self.radius * self.radius
    }
}

fn ellipsoid(grid: &Grid, centre: [f64; 3], axes: [f64; 3]) -> BinaryMask3D {
    let data = (0..grid.len())
        .map(|i| {
            let p = position(grid, grid.coords(i));
            (0..3).map(|k| ((p[k] - centre[k]) / axes[k]).powi(2)).sum::<f64>() <= 1.0
        })
        .collect();
    Volume::from_vec(*grid, data).expect("grid-sized")
}

fn position(grid: &Grid, c: [usize; 3]) -> [f64; 3] {
    [0, 1, 2].map(|k| (c[k] as f64 + 0.5) * grid.spacing[k])
}

fn rasterize(grid: &Grid, ball: &Ball) -> Vec<usize> {
    let range = |k: usize| {
        let s = grid.spacing[k];
        let lo = ((ball.centre[k] - ball.radius) / s - 0.5).floor().max(0.0) as usize;
        let hi = (((ball.centre[k] + ball.radius) / s - 0.5).ceil().max(0.0) as usize).min(grid.dims[k] - 1);
        lo..=hi
    };
    let mut out = Vec::new();
    for z in range(2) {
        for y in range(1) {
            for x in range(0) {
                if ball.contains(position(grid, [x, y, z])) {
                    out.push(grid.index(x, y, z));
                }
            }
        }
    }
    out
}

pub fn generate_case(cfg: &PhantomConfig, seed: u64) -> Result<PhantomCase> {
    cfg.validate()?;
    let grid = Grid::new(cfg.dims, cfg.spacing)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extent = cfg.extent_mm();
    let centre = [0, 1, 2].map(|k| extent[k] / 2.0 + if k < 2 { rng.random_range(-2.0..=2.0) } else { 0.0 });
    let mut jitter = || 1.0 + rng.random_range(-cfg.shape_jitter..=cfg.shape_jitter);
    let brain = ellipsoid(&grid, centre, cfg.brain_axes(jitter()));
    let wm_axes = cfg.white_matter_axes(jitter());
    let wm = ellipsoid(&grid, centre, wm_axes).and(&brain)?;

    // lesions: fully inside white matter, separated by at least one voxel
    let n_lesions = rng.random_range(cfg.lesion_count[0]..=cfg.lesion_count[1]);
    let mut wmh = Volume::filled(grid, false);
    let mut centres = Vec::with_capacity(n_lesions);
    let mut halo = wmh.clone();
    for _ in 0..n_lesions {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let radius = rng.random_range(cfg.lesion_radius[0]..=cfg.lesion_radius[1]);
            let c = [0, 1, 2].map(|k| {
                let reach = wm_axes[k].min(extent[k] / 2.0);
                centre[k] + rng.random_range(-reach..=reach)
            });
            let voxels = rasterize(&grid, &Ball { centre: c, radius });
            if voxels.is_empty() || !voxels.iter().all(|&i| wm.data()[i]) {
                continue;
            }
            if voxels.iter().any(|&i| halo.data()[i]) {
                continue;
            }
            for &i in &voxels {
                wmh.data_mut()[i] = true;
            }
            halo = dilate(&wmh, 1, Connectivity::Vertex26);
            centres.push([0, 1, 2].map(|k| (c[k] / grid.spacing[k]).floor() as usize));
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::InfeasiblePlacement(format!(
                "lesion {} of {n_lesions} after {PLACEMENT_ATTEMPTS} attempts",
                centres.len() + 1
            )));
        }
    }

    // confounder: in grey matter, clear of the white matter by more than the refinement dilation
    let mut confounder = vec![false; grid.len()];
    if cfg.confounder {
        let keep_out = dilate(&wm, 3, Connectivity::Face6);
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let c = [0, 1, 2].map(|k| rng.random_range(0.0..extent[k]));
            let voxels = rasterize(&grid, &Ball { centre: c, radius: cfg.confounder_radius });
            if !voxels.is_empty() && voxels.iter().all(|&i| brain.data()[i] && !keep_out.data()[i]) {
                for &i in &voxels {
                    confounder[i] = true;
                }
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::InfeasiblePlacement("confounder outside white matter".into()));
        }
    }

    let noise = Normal::new(0.0f32, cfg.noise_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut render = |tissue: &TissueIntensities, confounder_value: f32| -> Volume3D {
        let data = (0..grid.len())
            .map(|i| {
                let base = if wmh.data()[i] {
                    tissue.lesion
                } else if confounder[i] {
                    confounder_value
                } else if wm.data()[i] {
                    tissue.white_matter
                } else if brain.data()[i] {
                    tissue.grey_matter
                } else {
                    tissue.background
                };
                base + noise.sample(&mut rng)
            })
            .collect();
        Volume::from_vec(grid, data).expect("grid-sized")
    };
    // the confounder is hyperintense on FLAIR and unremarkable on T1
    let t1 = render(&cfg.t1, cfg.t1.grey_matter);
    let flair = render(&cfg.flair, cfg.flair.lesion);

    Ok(PhantomCase {
        id: String::new(),
        seed,
        t1,
        flair,
        wm_truth: wm,
        wmh_truth: wmh,
        lesion_count: n_lesions,
        lesion_centres: centres,
    })
}

/// Case seeds are drawn from one stream seeded by `seed`; ids are `case_000`, ….
pub fn generate_dataset(cfg: &PhantomConfig, n_cases: usize, seed: u64) -> Result<Vec<PhantomCase>> {
    let mut stream = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..n_cases).map(|_| stream.random()).collect();
    seeds
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut case = generate_case(cfg, s)?;
            case.id = format!("case_{i:03}");
            Ok(case)
        })
        .collect()
}

/// SHA-256 over every case's id and voxel data, as lowercase hex.
pub fn dataset_hash(cases: &[PhantomCase]) -> String {
    let mut h = Sha256::new();
    for c in cases {
        h.update(c.id.as_bytes());
        for v in [&c.t1, &c.flair] {
            for x in v.data() {
                h.update(x.to_le_bytes());
            }
        }
        for m in [&c.wm_truth, &c.wmh_truth] {
            h.update(m.data().iter().map(|&b| b as u8).collect::<Vec<u8>>());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCase {
    pub id: String,
    pub seed: u64,
    pub lesion_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub seed: u64,
    pub config: PhantomConfig,
    pub cases: Vec<ManifestCase>,
    pub hash: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CASE_FILES: [&str; 4] = ["t1.nii", "flair.nii", "wm.nii", "wmh.nii"];

/// Write `dir/<id>/{t1,flair,wm,wmh}.nii` and `dir/manifest.json`.
pub fn write_dataset(dir: &Path, cfg: &PhantomConfig, seed: u64, cases: &[PhantomCase]) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    for c in cases {
        let d = dir.join(&c.id);
        fs::create_dir_all(&d)?;
        write_nifti(&c.t1, d.join(CASE_FILES[0]), Datatype::Float32)?;
        write_nifti(&c.flair, d.join(CASE_FILES[1]), Datatype::Float32)?;
        write_mask(&c.wm_truth, d.join(CASE_FILES[2]))?;
        write_mask(&c.wmh_truth, d.join(CASE_FILES[3]))?;
    }
    let manifest = Manifest {
        format_version: 1,
        seed,
        config: cfg.clone(),
        cases: cases
            .iter()
            .map(|c| ManifestCase { id: c.id.clone(), seed: c.seed, lesion_count: c.lesion_count })
            .collect(),
        hash: dataset_hash(cases),
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Load a dataset written by [`write_dataset`]. Lesion centres are not stored.
pub fn read_dataset(dir: &Path) -> Result<(Manifest, Vec<PhantomCase>)> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    let cases = manifest
        .cases
        .iter()
        .map(|m| {
            let d = dir.join(&m.id);
            Ok(PhantomCase {
                id: m.id.clone(),
                seed: m.seed,
                t1: read_nifti(d.join(CASE_FILES[0]))?,
                flair: read_nifti(d.join(CASE_FILES[1]))?,
                wm_truth: read_mask(d.join(CASE_FILES[2]))?,
                wmh_truth: read_mask(d.join(CASE_FILES[3]))?,
                lesion_count: m.lesion_count,
                lesion_centres: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, cases))
}
