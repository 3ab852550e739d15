//! Four-player hierarchical Nash game with a segment of lower-level
//! equilibria and a unique selected equilibrium `(−50, 15, 50, 35)`.
//!
//! Lower level: player ν minimizes `h_ν(y) + φ_ν(y^ν)`,
//!
//! ```text
//! h_1 = ½(y¹)² + y¹(y² + 2y³ + y⁴ − 100)      φ_1 = ι[−100, 50]
//! h_2 = ½(y²)² + y²(y¹ + y³ + y⁴ − 50)        φ_2 = max{−10(y² − 15), 0} + ι[0, 50]
//! h_3 = ½(y³)² + y³(y² + y⁴ − 100)            φ_3 = ι[0, 100]
//! h_4 = ½(y⁴)² + y⁴(y¹ + y² + y³ − 50)        φ_4 = ι[0, 50]
//! ```
//!
//! The printed source repeats `y²` inside `h_4`; [`GnepReading::Printed`]
//! builds that version for comparison. It is not monotone.
//!
//! Upper level: player 1 controls `(y², y⁴)` with cost
//! `(y² − 20)² + (y⁴ − 50)² + (y² + y⁴)(y¹ + y³)`, player 2 controls
//! `(y¹, y³)` with cost `(y¹)² + y¹(y² + y³) + (y³)² + y³(y² + y⁴)`.

use crate::combined::CombinedData;
use crate::error::{Error, Result};
use crate::gap::SegmentSet;
use crate::linalg::{vector, Matrix, Vector};
use crate::operator::OperatorSpec;
use crate::problem::{HierarchicalProblem, LowerSet};
use crate::prox::{ProxTerm, ScalarTerm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GnepReading {
    /// `h_4` with a single `y²`.
    #[default]
    Corrected,
    /// `h_4` exactly as printed, with `y²` twice.
    Printed,
}

pub fn solution() -> Vector {
    vector(&[-50.0, 15.0, 50.0, 35.0])
}

/// `{(−50, s, 50, 50 − s) : 15 ≤ s ≤ 50}`.
pub fn lower_segment() -> SegmentSet {
    SegmentSet::new(
        vector(&[-50.0, 0.0, 50.0, 50.0]),
        vector(&[0.0, 1.0, 0.0, -1.0]),
        15.0,
        50.0,
    )
    .expect("valid segment")
}

/// Lower-level cost of player `nu` (0-based) at the joint profile `y`.
pub fn lower_cost(reading: GnepReading, nu: usize, y: &Vector) -> f64 {
    let (y1, y2, y3, y4) = (y[0], y[1], y[2], y[3]);
    match nu {
        0 => 0.5 * y1 * y1 + y1 * (y2 + 2.0 * y3 + y4 - 100.0),
        1 => 0.5 * y2 * y2 + y2 * (y1 + y3 + y4 - 50.0),
        2 => 0.5 * y3 * y3 + y3 * (y2 + y4 - 100.0),
        3 => match reading {
            GnepReading::Corrected => 0.5 * y4 * y4 + y4 * (y1 + y2 + y3 - 50.0),
            GnepReading::Printed => 0.5 * y4 * y4 + y4 * (y1 + y2 + y2 + y3 - 50.0),
        },
        _ => panic!("player index out of range"),
    }
}

/// Upper-level costs `(h_1, h_2)`.
pub fn upper_costs(y: &Vector) -> (f64, f64) {
    let (y1, y2, y3, y4) = (y[0], y[1], y[2], y[3]);
    (
        (y2 - 20.0).powi(2) + (y4 - 50.0).powi(2) + (y2 + y4) * (y1 + y3),
        y1 * y1 + y1 * (y2 + y3) + y3 * y3 + y3 * (y2 + y4),
    )
}

/// `F2 = M2·y − q2`.
pub fn lower_matrix(reading: GnepReading) -> (Matrix, Vector) {
    let row4 = match reading {
        GnepReading::Corrected => [1.0, 1.0, 1.0, 1.0],
        GnepReading::Printed => [1.0, 2.0, 1.0, 1.0],
    };
    #[rustfmt::skip]
    let m = Matrix::from_row_slice(4, 4, &[
        1.0, 1.0, 2.0, 1.0,
        1.0, 1.0, 1.0, 1.0,
        0.0, 1.0, 1.0, 1.0,
        row4[0], row4[1], row4[2], row4[3],
    ]);
    (m, vector(&[100.0, 50.0, 100.0, 50.0]))
}

/// `F1 = M1·y − q1`.
pub fn upper_matrix() -> (Matrix, Vector) {
    #[rustfmt::skip]
    let m = Matrix::from_row_slice(4, 4, &[
        2.0, 1.0, 1.0, 0.0,
        1.0, 2.0, 1.0, 0.0,
        1.0, 1.0, 2.0, 1.0,
        1.0, 0.0, 1.0, 2.0,
    ]);
    (m, vector(&[0.0, 40.0, 0.0, 100.0]))
}

fn central_diff(f: impl Fn(&Vector) -> f64, y: &Vector, i: usize, h: f64) -> f64 {
    let mut p = y.clone();
    let mut m = y.clone();
    p[i] += h;
    m[i] -= h;
    (f(&p) - f(&m)) / (2.0 * h)
}

/// Finite-difference pseudo-gradients of the cost functions at `y`:
/// `(F2(y), F1(y))`, each component differentiated in its owner's variable.
pub fn fd_pseudo_gradients(reading: GnepReading, y: &Vector, h: f64) -> (Vector, Vector) {
    let f2 = Vector::from_fn(4, |i, _| central_diff(|z| lower_cost(reading, i, z), y, i, h));
    let f1 = Vector::from_fn(4, |i, _| {
        // player 1 owns coordinates 1 and 3 (0-based), player 2 owns 0 and 2
        if i % 2 == 1 {
            central_diff(|z| upper_costs(z).0, y, i, h)
        } else {
            central_diff(|z| upper_costs(z).1, y, i, h)
        }
    });
    (f2, f1)
}

/// Largest deviation between the hard-coded affine maps and finite
/// differences of the cost functions over a fixed set of probe points.
pub fn fd_cross_check(reading: GnepReading) -> f64 {
    let (m2, q2) = lower_matrix(reading);
    let (m1, q1) = upper_matrix();
    let probes = [
        solution(),
        vector(&[0.0, 10.0, 0.0, 0.0]),
        vector(&[-100.0, 50.0, 100.0, 0.0]),
        vector(&[12.5, -3.0, 7.25, 41.0]),
        vector(&[-37.0, 22.0, 64.0, 18.0]),
    ];
    probes
        .iter()
        .map(|y| {
            let (fd2, fd1) = fd_pseudo_gradients(reading, y, 1e-3);
            let e2 = (&m2 * y - &q2 - fd2).amax();
            let e1 = (&m1 * y - &q1 - fd1).amax();
            e2.max(e1)
        })
        .fold(0.0, f64::max)
}

pub fn lower_prox() -> ProxTerm {
    ProxTerm::separable(vec![
        ScalarTerm::interval(-100.0, 50.0).expect("valid"),
        ScalarTerm::hinge_box(1.0, -10.0, 15.0, 0.0, 50.0).expect("valid"),
        ScalarTerm::interval(0.0, 100.0).expect("valid"),
        ScalarTerm::interval(0.0, 50.0).expect("valid"),
    ])
}

/// The hierarchical game under the single-`y²` reading, with `z*` and the
/// lower segment attached.
pub fn build_gnep() -> HierarchicalProblem {
    build_gnep_with(GnepReading::Corrected).expect("corrected reading passes its own check")
}

/// Builds either reading. The affine maps are cross-checked against finite
/// differences of the matching cost functions (tolerance 1e−6). Only the
/// corrected reading gets ground truth: under the printed reading `z*` is
/// not a lower-level equilibrium.
pub fn build_gnep_with(reading: GnepReading) -> Result<HierarchicalProblem> {
    let dev = fd_cross_check(reading);
    if dev > 1e-6 {
        return Err(Error::config(format!(
            "GNEP gradients disagree with finite differences by {dev:.3e}"
        )));
    }
    let (m2, q2) = lower_matrix(reading);
    let (m1, q1) = upper_matrix();
    let data = CombinedData::new(
        OperatorSpec::affine("gnep.F2", m2, -q2),
        OperatorSpec::affine("gnep.F1", m1, -q1),
        lower_prox(),
        ProxTerm::Zero,
    )?;
    match reading {
        GnepReading::Corrected => Ok(HierarchicalProblem::new("gnep", data)
            .with_solution(solution())?
            .with_lower_set(LowerSet::Segment(lower_segment()))),
        GnepReading::Printed => Ok(HierarchicalProblem::new("gnep_printed", data)),
    }
}
