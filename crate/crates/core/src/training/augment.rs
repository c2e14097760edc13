//! Right-angle rotations and flips (the dihedral group of the square).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diff::{Array4, Shape4};

/// `flip` (mirror x) is applied first, then `quarter_turns` counter-clockwise rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dihedral {
    pub quarter_turns: u8,
    pub flip: bool,
}

impl Dihedral {
    pub const IDENTITY: Dihedral = Dihedral { quarter_turns: 0, flip: false };

    pub fn all() -> [Dihedral; 8] {
        let mut out = [Self::IDENTITY; 8];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = Dihedral { quarter_turns: (i % 4) as u8, flip: i >= 4 };
        }
        out
    }

    /// Uniform draw; for non-square planes only the four shape-preserving
    /// elements are eligible.
    pub fn sample(rng: &mut impl Rng, square: bool) -> Self {
        if square {
            Self::all()[rng.random_range(0..8)]
        } else {
            let i = rng.random_range(0..4);
            Dihedral { quarter_turns: if i % 2 == 0 { 0 } else { 2 }, flip: i >= 2 }
        }
    }

    pub fn output_dims(&self, h: usize, w: usize) -> (usize, usize) {
        if self.quarter_turns % 2 == 1 { (w, h) } else { (h, w) }
    }

    /// Source `(row, col)` in an `h × w` input for output position `(r, c)`.
    fn source(&self, r: usize, c: usize, h: usize, w: usize) -> (usize, usize) {
        // undo the rotations one quarter turn at a time
        let (mut r, mut c) = (r, c);
        let (mut oh, mut ow) = self.output_dims(h, w);
        for _ in 0..self.quarter_turns % 4 {
            // output (r, c) of a CCW turn reads (c, rows − 1 − r) of its source
            let (pr, pc) = (c, oh - 1 - r);
            r = pr;
            c = pc;
            std::mem::swap(&mut oh, &mut ow);
        }
        debug_assert_eq!((oh, ow), (h, w));
        if self.flip {
            c = w - 1 - c;
        }
        (r, c)
    }

    /// Apply to every channel plane of every batch item.
    pub fn apply(&self, x: &Array4) -> Array4 {
        let s = x.shape();
        let (oh, ow) = self.output_dims(s.h, s.w);
        let mut out = Array4::zeros(Shape4::new(s.n, s.c, oh, ow));
        // the index map is the same for every plane
        let map: Vec<usize> = (0..oh * ow)
            .map(|i| {
                let (r, c) = self.source(i / ow, i % ow, s.h, s.w);
                r * s.w + c
            })
            .collect();
        for n in 0..s.n {
            for c in 0..s.c {
                let src = x.plane(n, c);
                for (d, &m) in out.plane_mut(n, c).iter_mut().zip(&map) {
                    *d = src[m];
                }
            }
        }
        out
    }
}

/// Apply one random element identically to an image and its label.
pub fn augment(image: &Array4, label: &Array4, rng: &mut impl Rng) -> (Array4, Array4, Dihedral) {
    let s = image.shape();
    let t = Dihedral::sample(rng, s.h == s.w);
    (t.apply(image), t.apply(label), t)
}
