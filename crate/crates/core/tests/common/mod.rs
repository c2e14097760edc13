//! Independent brute-force oracles and shared fixtures for the integration
//! tests. Nothing here calls into the metric or morphology code under test.

#![allow(dead_code)]

pub mod fuzz;

use std::collections::VecDeque;

use rand::Rng;
use wmhseg::metrics::TeamSummary;
use wmhseg::volume::{BinaryMask3D, Grid, Volume};

pub fn mask_from_fn(dims: [usize; 3], spacing: [f64; 3], f: impl Fn(usize, usize, usize) -> bool) -> BinaryMask3D {
    let grid = Grid::new(dims, spacing).unwrap();
    let mut m = Volume::filled(grid, false);
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                m.set(x, y, z, f(x, y, z));
            }
        }
    }
    m
}

/// A few random boxes and balls plus salt noise; `empty` with probability 1/20.
pub fn random_mask(rng: &mut impl Rng, dims: [usize; 3], spacing: [f64; 3]) -> BinaryMask3D {
    if rng.random_bool(0.05) {
        return mask_from_fn(dims, spacing, |_, _, _| false);
    }
    let blobs: Vec<([f64; 3], f64, bool)> = (0..rng.random_range(0..5))
        .map(|_| {
            let c = dims.map(|d| rng.random_range(0.0..d as f64));
            (c, rng.random_range(0.5..4.0), rng.random_bool(0.5))
        })
        .collect();
    let salt = rng.random_range(0.0..0.03);
    let noise: Vec<bool> = (0..dims.iter().product::<usize>()).map(|_| rng.random_bool(salt)).collect();
    mask_from_fn(dims, spacing, |x, y, z| {
        let p = [x as f64, y as f64, z as f64];
        let in_blob = blobs.iter().any(|(c, r, ball)| {
            if *ball {
                (0..3).map(|i| (p[i] - c[i]).powi(2)).sum::<f64>() <= r * r
            } else {
                (0..3).all(|i| (p[i] - c[i]).abs() <= *r)
            }
        });
        in_blob || noise[x + dims[0] * (y + dims[1] * z)]
    })
}

/// A perturbed copy: random voxels flipped, sometimes shifted by one voxel.
pub fn perturb(rng: &mut impl Rng, m: &BinaryMask3D) -> BinaryMask3D {
    let [nx, ny, nz] = m.dims();
    let shift = if rng.random_bool(0.3) { 1 } else { 0 };
    let flip = rng.random_range(0.0..0.05);
    let flips: Vec<bool> = (0..nx * ny * nz).map(|_| rng.random_bool(flip)).collect();
    mask_from_fn(m.dims(), m.spacing(), |x, y, z| {
        let src = x >= shift && m.get(x - shift, y, z);
        src ^ flips[x + nx * (y + ny * z)]
    })
}

fn foreground(m: &BinaryMask3D) -> Vec<[usize; 3]> {
    let [nx, ny, nz] = m.dims();
    let mut out = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if m.get(x, y, z) {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

pub fn oracle_dice(p: &BinaryMask3D, g: &BinaryMask3D) -> f64 {
    let a = foreground(p).len();
    let b = foreground(g).len();
    let both = foreground(p).iter().filter(|&&[x, y, z]| g.get(x, y, z)).count();
    if a + b == 0 { 1.0 } else { 2.0 * both as f64 / (a + b) as f64 }
}

pub fn oracle_avd(p: &BinaryMask3D, g: &BinaryMask3D) -> Option<f64> {
    let a = foreground(p).len() as f64;
    let b = foreground(g).len() as f64;
    (b > 0.0).then(|| 100.0 * (a - b).abs() / b)
}

/// Foreground voxels with at least one of the six face neighbours off or outside.
pub fn oracle_border(m: &BinaryMask3D) -> Vec<[usize; 3]> {
    let d = m.dims();
    foreground(m)
        .into_iter()
        .filter(|&[x, y, z]| {
            let p = [x as i64, y as i64, z as i64];
            (0..3).any(|axis| {
                [-1i64, 1].iter().any(|&s| {
                    let mut q = p;
                    q[axis] += s;
                    q[axis] < 0 || q[axis] >= d[axis] as i64 || !m.get(q[0] as usize, q[1] as usize, q[2] as usize)
                })
            })
        })
        .collect()
}

fn directed(from: &[[usize; 3]], to: &[[usize; 3]], s: [f64; 3]) -> f64 {
    let mut d: Vec<f64> = from
        .iter()
        .map(|a| {
            to.iter()
                .map(|b| {
                    (0..3).map(|i| ((a[i] as f64 - b[i] as f64) * s[i]).powi(2)).sum::<f64>().sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // smallest value with at least 95% of the values at or below it
    let n = d.len();
    let k = (0..n).find(|&k| 100 * (k + 1) >= 95 * n).unwrap();
    d[k]
}

/// O(n²) pairwise-distance H95.
pub fn oracle_h95(p: &BinaryMask3D, g: &BinaryMask3D) -> Option<f64> {
    let (bp, bg) = (oracle_border(p), oracle_border(g));
    if bp.is_empty() || bg.is_empty() {
        return None;
    }
    let s = g.spacing();
    Some(directed(&bp, &bg, s).max(directed(&bg, &bp, s)))
}

/// Breadth-first flood fill with 26-connectivity; 0 is background, labels from 1.
pub fn flood_fill(m: &BinaryMask3D) -> (Vec<usize>, usize) {
    let [nx, ny, nz] = m.dims();
    let idx = |x: usize, y: usize, z: usize| x + nx * (y + ny * z);
    let mut label = vec![0usize; nx * ny * nz];
    let mut next = 0;
    for [x, y, z] in foreground(m) {
        if label[idx(x, y, z)] != 0 {
            continue;
        }
        next += 1;
        label[idx(x, y, z)] = next;
        let mut queue = VecDeque::from([[x, y, z]]);
        while let Some([cx, cy, cz]) = queue.pop_front() {
            for dz in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (qx, qy, qz) = (cx as i64 + dx, cy as i64 + dy, cz as i64 + dz);
                        if qx < 0 || qy < 0 || qz < 0 || qx >= nx as i64 || qy >= ny as i64 || qz >= nz as i64 {
                            continue;
                        }
                        let (qx, qy, qz) = (qx as usize, qy as usize, qz as usize);
                        if m.get(qx, qy, qz) && label[idx(qx, qy, qz)] == 0 {
                            label[idx(qx, qy, qz)] = next;
                            queue.push_back([qx, qy, qz]);
                        }
                    }
                }
            }
        }
    }
    (label, next)
}

/// (detected reference lesions, reference lesions, matched predicted lesions, predicted lesions).
pub fn oracle_lesions(p: &BinaryMask3D, g: &BinaryMask3D) -> (usize, usize, usize, usize) {
    let (lp, np) = flood_fill(p);
    let (lg, ng) = flood_fill(g);
    let detected = (1..=ng).filter(|&k| (0..lg.len()).any(|i| lg[i] == k && lp[i] != 0)).count();
    let matched = (1..=np).filter(|&k| (0..lp.len()).any(|i| lp[i] == k && lg[i] != 0)).count();
    (detected, ng, matched, np)
}

pub fn oracle_recall(p: &BinaryMask3D, g: &BinaryMask3D) -> f64 {
    let (detected, ng, _, _) = oracle_lesions(p, g);
    if ng == 0 { 1.0 } else { detected as f64 / ng as f64 }
}

pub fn oracle_f1(p: &BinaryMask3D, g: &BinaryMask3D) -> f64 {
    let (_, ng, matched, np) = oracle_lesions(p, g);
    let precision = if np == 0 {
        if ng == 0 { 1.0 } else { 0.0 }
    } else {
        matched as f64 / np as f64
    };
    let recall = oracle_recall(p, g);
    if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) }
}

/// Top five teams over all testing data (team, Dice, H95, AVD%, recall, F1).
pub fn challenge_table_all_scanners() -> Vec<TeamSummary> {
    vec![
        TeamSummary::new("sysu_media", 0.80, 6.3, 21.9, 0.84, 0.76),
        TeamSummary::new("cain", 0.78, 6.8, 21.7, 0.83, 0.70),
        TeamSummary::new("nlp_logix", 0.77, 7.2, 18.4, 0.73, 0.78),
        TeamSummary::new("nih_cidi_2", 0.75, 7.35, 27.26, 0.81, 0.69),
        TeamSummary::new("nic-vicorob", 0.77, 8.3, 28.5, 0.75, 0.71),
    ]
}

/// Top five teams on the two scanners unseen in training.
pub fn challenge_table_unseen_scanners() -> Vec<TeamSummary> {
    vec![
        TeamSummary::new("sysu_media", 0.74, 11.0, 26.2, 0.87, 0.72),
        TeamSummary::new("nih_cidi_2", 0.70, 9.7, 21.9, 0.79, 0.68),
        TeamSummary::new("cain", 0.74, 14.1, 28.4, 0.82, 0.66),
        TeamSummary::new("nic-vicorob", 0.71, 13.5, 56.3, 0.81, 0.62),
        TeamSummary::new("nlp_logix", 0.68, 13.0, 27.9, 0.66, 0.73),
    ]
}
