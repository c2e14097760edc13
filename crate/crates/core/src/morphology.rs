//! Binary-mask machinery: connected components, largest component,
//! dilation and border extraction.
//!
//! "Scan order" below is storage order (x fastest, then y, then z).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{BinaryMask3D, Grid, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connectivity {
    /// Face neighbours in 3-D.
    #[serde(rename = "6")]
    Face6,
    /// Face and edge neighbours in 3-D.
    #[serde(rename = "18")]
    Edge18,
    /// All 26 neighbours in 3-D.
    #[serde(rename = "26")]
    Vertex26,
    /// Edge neighbours within one axial plane.
    #[serde(rename = "4")]
    Planar4,
    /// All 8 neighbours within one axial plane.
    #[serde(rename = "8")]
    Planar8,
}

impl Connectivity {
    pub fn offsets(self) -> Vec<[isize; 3]> {
        let mut out = Vec::new();
        for dz in -1isize..=1 {
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let nonzero = (dx != 0) as u8 + (dy != 0) as u8 + (dz != 0) as u8;
                    let keep = match self {
                        Connectivity::Face6 => nonzero == 1,
                        Connectivity::Edge18 => nonzero == 1 || nonzero == 2,
                        Connectivity::Vertex26 => nonzero >= 1,
                        Connectivity::Planar4 => dz == 0 && nonzero == 1,
                        Connectivity::Planar8 => dz == 0 && nonzero >= 1,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "6" => Some(Connectivity::Face6),
            "18" => Some(Connectivity::Edge18),
            "26" => Some(Connectivity::Vertex26),
            "4" => Some(Connectivity::Planar4),
            "8" => Some(Connectivity::Planar8),
            _ => None,
        }
    }
}

/// Default connectivity for counting individual lesions.
pub const LESION_CONNECTIVITY: Connectivity = Connectivity::Vertex26;

#[inline]
fn neighbor(grid: &Grid, at: [usize; 3], d: [isize; 3]) -> Option<usize> {
    let mut c = [0usize; 3];
    for axis in 0..3 {
        let v = at[axis] as isize + d[axis];
        if v < 0 || v >= grid.dims[axis] as isize {
            return None;
        }
        c[axis] = v as usize;
    }
    Some(grid.index(c[0], c[1], c[2]))
}

/// Per-voxel component labels; 0 is background, components are `1..=count`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    pub labels: Volume<u32>,
    pub count: usize,
}

impl LabelVolume {
    /// Voxel count of each component, indexed by `label − 1`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &l in self.labels.data() {
            if l > 0 {
                sizes[l as usize - 1] += 1;
            }
        }
        sizes
    }

    pub fn component(&self, label: u32) -> BinaryMask3D {
        self.labels.map(|l| l == label)
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Label connected foreground voxels. Labels are assigned in the scan order
/// of each component's first voxel.
pub fn connected_components(mask: &BinaryMask3D, connectivity: Connectivity) -> LabelVolume {
    let grid = *mask.grid();
    // neighbours already visited in scan order
    let backward: Vec<[isize; 3]> = connectivity
        .offsets()
        .into_iter()
        .filter(|d| (d[2], d[1], d[0]) < (0, 0, 0))
        .collect();
    let data = mask.data();
    let mut provisional = vec![0u32; grid.len()];
    let mut sets = DisjointSet { parent: vec![0] };
    for (i, &fg) in data.iter().enumerate() {
        if !fg {
            continue;
        }
        let at = grid.coords(i);
        let mut label = 0u32;
        for &d in &backward {
            if let Some(j) = neighbor(&grid, at, d) {
                let lj = provisional[j];
                if lj != 0 {
                    if label == 0 {
                        label = lj;
                    } else {
                        sets.union(label, lj);
                    }
                }
            }
        }
        if label == 0 {
            label = sets.parent.len() as u32;
            sets.parent.push(label);
        }
        provisional[i] = label;
    }
    let mut remap = vec![0u32; sets.parent.len()];
    let mut count = 0u32;
    let labels: Vec<u32> = provisional
        .iter()
        .map(|&l| {
            if l == 0 {
                return 0;
            }
            let root = sets.find(l) as usize;
            if remap[root] == 0 {
                count += 1;
                remap[root] = count;
            }
            remap[root]
        })
        .collect();
    LabelVolume { labels: Volume::from_vec(grid, labels).expect("same grid"), count: count as usize }
}

/// The component with the most voxels; ties go to the lowest label, which
/// is the one whose first voxel comes first in scan order.
pub fn largest_component(mask: &BinaryMask3D, connectivity: Connectivity) -> Result<BinaryMask3D> {
    let cc = connected_components(mask, connectivity);
    if cc.count == 0 {
        return Err(Error::EmptyMask("largest_component input"));
    }
    let sizes = cc.sizes();
    let mut best = 0;
    for (i, &s) in sizes.iter().enumerate() {
        if s > sizes[best] {
            best = i;
        }
    }
    Ok(cc.component(best as u32 + 1))
}

/// `radius` rounds of dilation by the structuring element of `connectivity`
/// (the centre plus its neighbour offsets). Radius 0 is the identity.
pub fn dilate(mask: &BinaryMask3D, radius: usize, connectivity: Connectivity) -> BinaryMask3D {
    let grid = *mask.grid();
    let offsets = connectivity.offsets();
    let mut current = mask.clone();
    for _ in 0..radius {
        let mut next = current.clone();
        for (i, &fg) in current.data().iter().enumerate() {
            if !fg {
                continue;
            }
            let at = grid.coords(i);
            for &d in &offsets {
                if let Some(j) = neighbor(&grid, at, d) {
                    next.data_mut()[j] = true;
                }
            }
        }
        current = next;
    }
    current
}

/// Foreground voxels with a face neighbour outside the mask or outside the volume.
pub fn border_voxels(mask: &BinaryMask3D) -> Vec<[usize; 3]> {
    let grid = *mask.grid();
    let faces = Connectivity::Face6.offsets();
    let data = mask.data();
    data.iter()
        .enumerate()
        .filter(|&(_, &fg)| fg)
        .map(|(i, _)| grid.coords(i))
        .filter(|&at| faces.iter().any(|&d| neighbor(&grid, at, d).is_none_or(|j| !data[j])))
        .collect()
}
