//! Exact Euclidean distance transform on an anisotropic grid.
//!
//! Separable lower-envelope-of-parabolas algorithm (Felzenszwalb &
//! Huttenlocher), one pass per axis with the squared spacing as weight.

use crate::volume::Grid;

/// Squared distance (mm²) from every voxel to the nearest site; `INFINITY`
/// everywhere when there are no sites.
pub fn squared_distance_transform(grid: &Grid, sites: &[bool]) -> Vec<f64> {
    let [nx, ny, nz] = grid.dims;
    let mut f: Vec<f64> = sites.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let n_max = nx.max(ny).max(nz);
    let mut line = vec![0.0; n_max];
    let mut out = vec![0.0; n_max];
    let mut env = Envelope::with_capacity(n_max);
    let strides = [1, nx, nx * ny];
    for axis in 0..3 {
        let len = grid.dims[axis];
        let w = grid.spacing[axis] * grid.spacing[axis];
        let stride = strides[axis];
        // every line along `axis` starts at a voxel whose `axis` coordinate is 0
        for start in 0..grid.len() {
            if grid.coords(start)[axis] != 0 {
                continue;
            }
            for i in 0..len {
                line[i] = f[start + i * stride];
            }
            env.transform(&line[..len], w, &mut out[..len]);
            for i in 0..len {
                f[start + i * stride] = out[i];
            }
        }
    }
    f
}

struct Envelope {
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self { v: Vec::with_capacity(n), z: Vec::with_capacity(n + 1) }
    }

    /// out[q] = min_p w·(q − p)² + f[p] over finite f[p].
    fn transform(&mut self, f: &[f64], w: f64, out: &mut [f64]) {
        self.v.clear();
        self.z.clear();
        let intersect = |p: usize, q: usize| {
            let (p, q) = (p as f64, q as f64);
            ((f[q as usize] + w * q * q) - (f[p as usize] + w * p * p)) / (2.0 * w * (q - p))
        };
        for q in 0..f.len() {
            if !f[q].is_finite() {
                continue;
            }
            loop {
                match self.v.last() {
                    None => {
                        self.v.push(q);
                        self.z.push(f64::NEG_INFINITY);
                        break;
                    }
                    Some(&p) => {
                        let s = intersect(p, q);
                        if s <= *self.z.last().expect("z tracks v") {
                            self.v.pop();
                            self.z.pop();
                        } else {
                            self.v.push(q);
                            self.z.push(s);
                            break;
                        }
                    }
                }
            }
        }
        if self.v.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            let qf = q as f64;
            while k + 1 < self.v.len() && self.z[k + 1] < qf {
                k += 1;
            }
            let p = self.v[k];
            let d = qf - p as f64;
            *o = w * d * d + f[p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(grid: &Grid, sites: &[bool]) -> Vec<f64> {
        let pts: Vec<[usize; 3]> = (0..grid.len()).filter(|&i| sites[i]).map(|i| grid.coords(i)).collect();
        (0..grid.len())
            .map(|i| {
                let a = grid.coords(i);
                pts.iter()
                    .map(|b| {
                        (0..3)
                            .map(|k| {
                                let d = (a[k] as f64 - b[k] as f64) * grid.spacing[k];
                                d * d
                            })
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_on_pseudorandom_sites() {
        let grid = Grid::new([7, 5, 4], [0.9, 1.3, 3.0]).unwrap();
        let mut state = 12345u64;
        for density in [1u64, 5, 30] {
            let sites: Vec<bool> = (0..grid.len())
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 33) % 100 < density
                })
                .collect();
            let fast = squared_distance_transform(&grid, &sites);
            let slow = brute(&grid, &sites);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-9 || (a.is_infinite() && b.is_infinite()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn no_sites_is_infinite() {
        let grid = Grid::new([3, 3, 3], [1.0; 3]).unwrap();
        assert!(squared_distance_transform(&grid, &[false; 27]).iter().all(|d| d.is_infinite()));
    }
}
