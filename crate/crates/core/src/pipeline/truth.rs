//! Reference labels for test grids.
//!
//! ANNNI points use the transition curves directly. Off the `h = 1` line the
//! cluster model has no closed-form boundaries, so its points are labelled
//! from order parameters of the solved ground state: the cluster string
//! order for the SPT phase and the staggered `zz` correlation for the
//! antiferromagnet. A cluster point counts as far from a boundary when all
//! of its grid neighbours share its label.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hamiltonian::{Model, Pauli};
use crate::labels::{annni_boundary_distance, annni_label, PhaseLabel};
use crate::mps::Mps;

/// Order threshold for the cluster oracle.
pub const ORDER_THRESHOLD: f64 = 0.3;
/// ANNNI points closer than this to a transition curve are not scored.
pub const ANNNI_MARGIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOrder {
    /// `|<X Z . Z . ... Z X>|` across the middle of the chain.
    pub string: f64,
    /// `-<Z_a Z_b>` at odd separation; positive in the Neel state.
    pub staggered: f64,
}

/// Bulk probe sites (1-based): a string `(a, b)` with `b - a` even, and a
/// correlation partner `b - 1` at odd distance from `a`.
fn probe_sites(n: usize) -> (usize, usize) {
    let a = (n / 4).max(1);
    let mut b = n + 1 - a;
    if (b - a) % 2 != 0 {
        b -= 1;
    }
    (a, b)
}

pub fn cluster_order(state: &Mps) -> Result<ClusterOrder> {
    let n = state.n_sites();
    let (a, b) = probe_sites(n);
    let string = state.cluster_string_order(a, b)?.abs();
    let zz = state.pauli_expectation(&[(a - 1, Pauli::Z), (b - 2, Pauli::Z)])?.re;
    Ok(ClusterOrder { string, staggered: -zz })
}

pub fn cluster_label_from_order(o: ClusterOrder) -> PhaseLabel {
    if o.staggered > ORDER_THRESHOLD && o.staggered >= o.string {
        PhaseLabel::Antiferromagnetic
    } else if o.string > ORDER_THRESHOLD {
        PhaseLabel::Spt
    } else {
        PhaseLabel::Paramagnetic
    }
}

/// Reference label and scoring mask for every grid point. `states` holds the
/// state fed to the classifier at each point (used by the cluster oracle);
/// points are ordered with `k` outermost on a `counts` grid.
pub fn grid_truth(
    model: Model,
    points: &[(f64, f64)],
    counts: (usize, usize),
    states: &[&Mps],
) -> Result<Vec<(PhaseLabel, bool)>> {
    match model {
        Model::Annni => points
            .iter()
            .map(|&(k, h)| Ok((annni_label(k, h)?, annni_boundary_distance(k, h) > ANNNI_MARGIN)))
            .collect(),
        Model::Cluster => {
            let labels = states
                .iter()
                .map(|s| cluster_order(s).map(cluster_label_from_order))
                .collect::<Result<Vec<_>>>()?;
            let (nk, nh) = counts;
            let at = |i: usize, j: usize| labels[i * nh + j];
            let mut out = Vec::with_capacity(labels.len());
            for i in 0..nk {
                for j in 0..nh {
                    let mut far = true;
                    for di in -1i64..=1 {
                        for dj in -1i64..=1 {
                            let (ii, jj) = (i as i64 + di, j as i64 + dj);
                            if ii >= 0 && jj >= 0 && (ii as usize) < nk && (jj as usize) < nh {
                                far &= at(ii as usize, jj as usize) == at(i, j);
                            }
                        }
                    }
                    out.push((at(i, j), far));
                }
            }
            Ok(out)
        }
    }
}
