//! Maps between the unconstrained sampling space and constrained parameter
//! blocks (simplex rows, positive scalars, unconstrained reals).
//!
//! Samplers always work in the unconstrained space; families describe their
//! natural parameter space as a sequence of named blocks and receive both the
//! constrained values and the log-Jacobian correction for priors stated on
//! the constrained space.

use crate::error::{Error, Result};

/// A single block transform from unconstrained coordinates to a constrained set.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    /// Identity on `len` real coordinates.
    Identity { len: usize },
    /// Softmax onto the interior of the `len`-simplex, with the last
    /// coordinate pinned to zero. Uses `len - 1` unconstrained coordinates.
    Simplex { len: usize },
    /// `exp` onto the positive reals. Uses one unconstrained coordinate.
    Positive,
}

impl Transform {
    pub fn unconstrained_len(&self) -> usize {
        match self {
            Transform::Identity { len } => *len,
            Transform::Simplex { len } => len - 1,
            Transform::Positive => 1,
        }
    }

    pub fn constrained_len(&self) -> usize {
        match self {
            Transform::Identity { len } => *len,
            Transform::Simplex { len } => *len,
            Transform::Positive => 1,
        }
    }
}

/// A named block within a parameter layout.
#[derive(Debug, Clone)]
pub struct Block {
    pub name: String,
    pub transform: Transform,
}

/// Ordered sequence of blocks describing a family's parameter space.
#[derive(Debug, Clone, Default)]
pub struct ConstraintLayout {
    blocks: Vec<Block>,
}

/// Constrained parameter values, one vector per block, in layout order.
#[derive(Debug, Clone)]
pub struct ConstrainedPoint {
    blocks: Vec<(String, Vec<f64>)>,
}

impl ConstrainedPoint {
    /// All blocks in layout order.
    pub fn blocks(&self) -> &[(String, Vec<f64>)] {
        &self.blocks
    }

    /// The values of the block at `index` in layout order.
    pub fn block(&self, index: usize) -> &[f64] {
        &self.blocks[index].1
    }

    /// The values of the first block with the given name.
    ///
    /// # Panics
    ///
    /// Panics when no block carries that name; block names are fixed at
    /// family construction, so a miss is a programming error.
    pub fn named(&self, name: &str) -> &[f64] {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .unwrap_or_else(|| panic!("no parameter block named `{name}`"))
    }
}

impl ConstraintLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity(mut self, name: &str, len: usize) -> Self {
        self.blocks.push(Block {
            name: name.to_string(),
            transform: Transform::Identity { len },
        });
        self
    }

    pub fn simplex(mut self, name: &str, len: usize) -> Self {
        assert!(len >= 1, "simplex block needs at least one coordinate");
        self.blocks.push(Block {
            name: name.to_string(),
            transform: Transform::Simplex { len },
        });
        self
    }

    pub fn positive(mut self, name: &str) -> Self {
        self.blocks.push(Block {
            name: name.to_string(),
            transform: Transform::Positive,
        });
        self
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Number of unconstrained coordinates consumed by the whole layout.
    pub fn unconstrained_dim(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.transform.unconstrained_len())
            .sum()
    }

    /// Applies every block transform to an unconstrained vector.
    ///
    /// This is a total function on vectors of the right length: any finite
    /// input maps to a valid constrained point.
    ///
    /// # Panics
    ///
    /// Panics when `u` does not have exactly `unconstrained_dim()` entries.
    pub fn to_constrained(&self, u: &[f64]) -> ConstrainedPoint {
        assert_eq!(
            u.len(),
            self.unconstrained_dim(),
            "unconstrained vector length does not match layout"
        );
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut offset = 0;
        for block in &self.blocks {
            let take = block.transform.unconstrained_len();
            let slice = &u[offset..offset + take];
            offset += take;
            let values = match &block.transform {
                Transform::Identity { .. } => slice.to_vec(),
                Transform::Simplex { len } => pinned_softmax(slice, *len),
                Transform::Positive => vec![slice[0].exp()],
            };
            out.push((block.name.clone(), values));
        }
        ConstrainedPoint { blocks: out }
    }

    /// Log absolute determinant of the Jacobian of `to_constrained`,
    /// summed over blocks.
    ///
    /// Used to express priors stated on the constrained space as densities
    /// over the unconstrained sampling space.
    pub fn log_jacobian(&self, u: &[f64]) -> f64 {
        assert_eq!(
            u.len(),
            self.unconstrained_dim(),
            "unconstrained vector length does not match layout"
        );
        let mut total = 0.0;
        let mut offset = 0;
        for block in &self.blocks {
            let take = block.transform.unconstrained_len();
            let slice = &u[offset..offset + take];
            offset += take;
            match &block.transform {
                Transform::Identity { .. } => {}
                Transform::Simplex { len } => {
                    // det of the pinned softmax restricted to the first
                    // len-1 simplex coordinates is the product of all
                    // simplex entries.
                    let p = pinned_softmax(slice, *len);
                    total += p.iter().map(|&x| x.ln()).sum::<f64>();
                }
                Transform::Positive => total += slice[0],
            }
        }
        total
    }

    /// Inverse map: recovers unconstrained coordinates from constrained
    /// block values. Intended for building parameter points from natural
    /// values (true parameters in experiments, prior draws).
    ///
    /// Simplex blocks require strictly positive entries; entries need not be
    /// normalized (only ratios to the last entry matter).
    pub fn from_constrained(&self, blocks: &[Vec<f64>]) -> Result<Vec<f64>> {
        if blocks.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: self.blocks.len(),
                got: blocks.len(),
            });
        }
        let mut out = Vec::with_capacity(self.unconstrained_dim());
        for (block, values) in self.blocks.iter().zip(blocks) {
            if values.len() != block.transform.constrained_len() {
                return Err(Error::DimensionMismatch {
                    expected: block.transform.constrained_len(),
                    got: values.len(),
                });
            }
            match &block.transform {
                Transform::Identity { .. } => out.extend_from_slice(values),
                Transform::Simplex { len } => {
                    let last = values[*len - 1];
                    if values.iter().any(|&v| v <= 0.0) {
                        return Err(Error::Config(format!(
                            "simplex block `{}` needs strictly positive entries",
                            block.name
                        )));
                    }
                    for &v in &values[..*len - 1] {
                        out.push(v.ln() - last.ln());
                    }
                }
                Transform::Positive => {
                    if values[0] <= 0.0 {
                        return Err(Error::Config(format!(
                            "positive block `{}` needs a positive value",
                            block.name
                        )));
                    }
                    out.push(values[0].ln());
                }
            }
        }
        Ok(out)
    }
}

/// Softmax over `(u_1, .., u_{len-1}, 0)` with a max shift for stability.
fn pinned_softmax(u: &[f64], len: usize) -> Vec<f64> {
    debug_assert_eq!(u.len(), len - 1);
    let mut max = 0.0f64; // the pinned coordinate
    for &v in u {
        if v > max {
            max = v;
        }
    }
    let mut out = Vec::with_capacity(len);
    let mut sum = 0.0;
    for &v in u {
        let e = (v - max).exp();
        sum += e;
        out.push(e);
    }
    let pinned = (-max).exp();
    sum += pinned;
    out.push(pinned);
    for v in &mut out {
        *v /= sum;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simplex3() -> ConstraintLayout {
        ConstraintLayout::new().simplex("p", 3)
    }

    #[test]
    fn zero_logits_give_uniform_simplex() {
        let p = simplex3().to_constrained(&[0.0, 0.0]);
        let third = 1.0 / 3.0;
        for &v in p.named("p") {
            assert!((v - third).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_with_pinned_last_coordinate() {
        // exp(ln 2) : exp(0) : exp(0) = 2 : 1 : 1 -> (0.5, 0.25, 0.25)
        let p = simplex3().to_constrained(&[2.0f64.ln(), 0.0]);
        let got = p.named("p");
        assert!((got[0] - 0.5).abs() < 1e-15);
        assert!((got[1] - 0.25).abs() < 1e-15);
        assert!((got[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn positive_block_maps_zero_to_one() {
        let layout = ConstraintLayout::new().positive("scale");
        let p = layout.to_constrained(&[0.0]);
        assert_eq!(p.named("scale")[0], 1.0);
        assert_eq!(layout.log_jacobian(&[0.0]), 0.0);
        assert_eq!(layout.log_jacobian(&[2.5]), 2.5);
    }

    #[test]
    fn identity_block_passes_through() {
        let layout = ConstraintLayout::new().identity("w", 3);
        let p = layout.to_constrained(&[1.0, -2.0, 0.5]);
        assert_eq!(p.named("w"), &[1.0, -2.0, 0.5]);
        assert_eq!(layout.log_jacobian(&[1.0, -2.0, 0.5]), 0.0);
    }

    #[test]
    fn mixed_layout_dimensions() {
        let layout = ConstraintLayout::new()
            .simplex("a", 4)
            .identity("b", 2)
            .positive("c");
        assert_eq!(layout.unconstrained_dim(), 3 + 2 + 1);
        let u = [0.1, -0.3, 0.2, 5.0, -5.0, 1.0];
        let p = layout.to_constrained(&u);
        assert_eq!(p.named("a").len(), 4);
        assert_eq!(p.named("b"), &[5.0, -5.0]);
        assert!((p.named("c")[0] - 1.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn simplex_log_jacobian_matches_finite_difference_determinant() {
        // For the 3-simplex the free coordinates are (p_0, p_1) as functions
        // of (u_0, u_1); the analytic log|det| is ln(p_0 p_1 p_2). Check it
        // against a central-difference determinant.
        let layout = simplex3();
        let u = [0.7, -0.4];
        let h = 1e-6;
        let eval = |u: &[f64]| {
            let p = layout.to_constrained(u);
            [p.named("p")[0], p.named("p")[1]]
        };
        let mut jac = [[0.0f64; 2]; 2];
        for j in 0..2 {
            let mut up = u;
            let mut dn = u;
            up[j] += h;
            dn[j] -= h;
            let fu = eval(&up);
            let fd = eval(&dn);
            for i in 0..2 {
                jac[i][j] = (fu[i] - fd[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let expected = det.abs().ln();
        let got = layout.log_jacobian(&u);
        assert!(
            (got - expected).abs() < 1e-7,
            "analytic {got}, finite-difference {expected}"
        );
    }

    #[test]
    fn from_constrained_round_trips_simplex() {
        let layout = simplex3();
        let u = layout
            .from_constrained(&[vec![0.5, 0.25, 0.25]])
            .expect("valid simplex");
        let p = layout.to_constrained(&u);
        let got = p.named("p");
        assert!((got[0] - 0.5).abs() < 1e-12);
        assert!((got[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn from_constrained_rejects_nonpositive_simplex_entries() {
        let layout = simplex3();
        assert!(layout.from_constrained(&[vec![0.5, 0.5, 0.0]]).is_err());
    }

    proptest! {
        #[test]
        fn simplex_output_is_a_distribution(u in proptest::collection::vec(-30.0f64..30.0, 4)) {
            let layout = ConstraintLayout::new().simplex("p", 5);
            let p = layout.to_constrained(&u);
            let values = p.named("p");
            let sum: f64 = values.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for &v in values {
                prop_assert!(v >= 0.0);
            }
        }

        #[test]
        fn round_trip_through_unconstrained(u in proptest::collection::vec(-8.0f64..8.0, 2)) {
            let layout = ConstraintLayout::new().simplex("p", 3);
            let p = layout.to_constrained(&u);
            let back = layout.from_constrained(&[p.named("p").to_vec()]).unwrap();
            let again = layout.to_constrained(&back);
            for (a, b) in p.named("p").iter().zip(again.named("p")) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
