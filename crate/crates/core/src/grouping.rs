//! Pseudo-inverse AWV designs driven only by steering vectors: the
//! multi-direction design that puts unit gain on every path, its random-subset
//! variant for more paths than antennas, and multipath grouping, which merges
//! paths falling in one angle segment into a single equivalent direction.

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{steering_vector, ArrayConfig, MultipathChannel};
use crate::error::{Error, Result};
use crate::linalg::{dot, gram_right_pseudo_apply, norm, normalized, CMatrix};
use crate::solution::{BeamformingSolution, DesignDiagnostics, GroupAssignment};

/// Resampling budget for the random-subset design.
pub const SUBSET_RETRIES: usize = 10;
/// Norm under which a group's summed steering vectors count as cancelled.
pub const CANCELLED_GROUP_NORM: f64 = 1e-12;

/// Transmit and receive steering vectors of every path.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringSet {
    pub arrays: ArrayConfig,
    pub tx: Vec<Vec<Complex64>>,
    pub rx: Vec<Vec<Complex64>>,
    /// Cosine angles when known; required for angle-based grouping.
    pub omega_t: Option<Vec<f64>>,
    pub omega_r: Option<Vec<f64>>,
}

impl SteeringSet {
    pub fn from_channel(channel: &MultipathChannel) -> Self {
        Self {
            arrays: channel.arrays(),
            tx: channel.tx_steering_all().to_vec(),
            rx: channel.rx_steering_all().to_vec(),
            omega_t: Some(channel.paths().iter().map(|p| p.omega_t).collect()),
            omega_r: Some(channel.paths().iter().map(|p| p.omega_r).collect()),
        }
    }

    /// Steering vectors without angle information, e.g. from training.
    pub fn from_vectors(
        arrays: ArrayConfig,
        tx: Vec<Vec<Complex64>>,
        rx: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        if tx.len() != rx.len() || tx.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "steering set",
                expected: tx.len(),
                actual: rx.len(),
            });
        }
        if tx.iter().any(|v| v.len() != arrays.n_t) || rx.iter().any(|v| v.len() != arrays.n_r) {
            return Err(Error::InvalidArgument("steering vector length does not match array".into()));
        }
        Ok(Self {
            arrays,
            tx,
            rx,
            omega_t: None,
            omega_r: None,
        })
    }

    pub fn num_paths(&self) -> usize {
        self.tx.len()
    }
}

/// Per-path target gains; `b` at the transmitter, `a` at the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVectors {
    pub b: Vec<Complex64>,
    pub a: Vec<Complex64>,
}

impl GainVectors {
    pub fn ones(num_paths: usize) -> Self {
        Self {
            b: vec![Complex64::new(1.0, 0.0); num_paths],
            a: vec![Complex64::new(1.0, 0.0); num_paths],
        }
    }
}

/// Solution of `A^H x = gains` with minimum norm.
#[derive(Debug, Clone, PartialEq)]
pub struct RightInverseDesign {
    /// Unnormalized minimum-norm solution.
    pub raw: Vec<Complex64>,
    /// `raw` scaled to unit norm.
    pub awv: Vec<Complex64>,
    /// `||A^H raw - gains|| / ||gains||` over all columns.
    pub residual: f64,
}

/// Minimum-norm `x` with `columns[i]^H x = gains[i]` for every `i`.
///
/// Columns that repeat an earlier column bit-for-bit with the same target gain
/// are one constraint, not two, and are solved once. Repeats with a different
/// gain have no solution.
pub fn right_inverse_design(columns: &[Vec<Complex64>], gains: &[Complex64]) -> Result<RightInverseDesign> {
    if columns.len() != gains.len() || columns.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "right-inverse design",
            expected: columns.len(),
            actual: gains.len(),
        });
    }
    let mut kept: Vec<usize> = Vec::with_capacity(columns.len());
    for i in 0..columns.len() {
        match kept.iter().find(|&&k| columns[k] == columns[i]) {
            Some(&k) if gains[k] == gains[i] => {}
            Some(_) => return Err(Error::RankDeficient { rcond: 0.0 }),
            None => kept.push(i),
        }
    }
    let distinct: Vec<&Vec<Complex64>> = kept.iter().map(|&i| &columns[i]).collect();
    let a = CMatrix::from_columns(&distinct)?;
    let rhs: Vec<Complex64> = kept.iter().map(|&i| gains[i]).collect();
    let raw = gram_right_pseudo_apply(&a, &rhs)?;
    let residual = columns
        .iter()
        .zip(gains)
        .map(|(col, g)| (dot(col, &raw) - g).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / norm(gains);
    let awv = normalized(&raw).ok_or(Error::RankDeficient { rcond: 0.0 })?;
    Ok(RightInverseDesign { raw, awv, residual })
}

fn design_pair(
    scheme: &'static str,
    tx_cols: &[Vec<Complex64>],
    b: &[Complex64],
    rx_cols: &[Vec<Complex64>],
    a: &[Complex64],
) -> Result<(BeamformingSolution, DesignDiagnostics)> {
    let t = right_inverse_design(tx_cols, b)?;
    let a_conj: Vec<Complex64> = a.iter().map(|z| z.conj()).collect();
    let r = right_inverse_design(rx_cols, &a_conj)?;
    let diag = DesignDiagnostics {
        residual_t: t.residual,
        residual_r: r.residual,
        ..Default::default()
    };
    Ok((BeamformingSolution::one_shot(scheme, t.awv, r.awv), diag))
}

/// Unit gain along every path at both ends. Needs `L <= min(n_t, n_r)`.
pub fn parkpan_beamform(steering: &SteeringSet, gains: &GainVectors) -> Result<BeamformingSolution> {
    let l = steering.num_paths();
    if gains.a.len() != l || gains.b.len() != l {
        return Err(Error::DimensionMismatch {
            context: "gain vectors",
            expected: l,
            actual: gains.a.len().min(gains.b.len()),
        });
    }
    if l > steering.arrays.min_size() {
        return Err(Error::Infeasible(format!(
            "{l} paths exceed min(n_t, n_r) = {}",
            steering.arrays.min_size()
        )));
    }
    let (sol, diag) = design_pair("park_pan", &steering.tx, &gains.b, &steering.rx, &gains.a)?;
    Ok(BeamformingSolution {
        design: Some(diag),
        ..sol
    })
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

fn select_and_design<R: Rng + ?Sized>(
    columns: &[Vec<Complex64>],
    gains: &[Complex64],
    size: usize,
    rng: &mut R,
) -> Result<(RightInverseDesign, Option<Vec<usize>>)> {
    let l = columns.len();
    if l <= size {
        return Ok((right_inverse_design(columns, gains)?, None));
    }
    let mut last = Error::RankDeficient { rcond: 0.0 };
    for _ in 0..=SUBSET_RETRIES {
        let mut idx = index::sample(rng, l, size).into_vec();
        idx.sort_unstable();
        match right_inverse_design(&pick(columns, &idx), &pick(gains, &idx)) {
            Ok(d) => return Ok((d, Some(idx))),
            Err(e @ Error::RankDeficient { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Infeasible(format!(
        "no invertible subset of {size} out of {l} paths after {SUBSET_RETRIES} retries ({last})"
    )))
}

/// Like [`parkpan_beamform`], but an end with more paths than antennas keeps
/// a uniformly drawn subset of as many paths as it has antennas. The two ends
/// draw independently; a singular subset is redrawn.
pub fn parkpan_star_beamform<R: Rng + ?Sized>(
    steering: &SteeringSet,
    gains: &GainVectors,
    rng: &mut R,
) -> Result<BeamformingSolution> {
    let l = steering.num_paths();
    if l <= steering.arrays.min_size() {
        let sol = parkpan_beamform(steering, gains)?;
        return Ok(BeamformingSolution {
            scheme: "park_pan_star",
            ..sol
        });
    }
    let (t, tx_sel) = select_and_design(&steering.tx, &gains.b, steering.arrays.n_t, rng)?;
    let a_conj: Vec<Complex64> = gains.a.iter().map(|z| z.conj()).collect();
    let (r, rx_sel) = select_and_design(&steering.rx, &a_conj, steering.arrays.n_r, rng)?;
    let diag = DesignDiagnostics {
        residual_t: t.residual,
        residual_r: r.residual,
        tx_selection: tx_sel,
        rx_selection: rx_sel,
        ..Default::default()
    };
    Ok(BeamformingSolution {
        design: Some(diag),
        ..BeamformingSolution::one_shot("park_pan_star", t.awv, r.awv)
    })
}

/// How paths are assigned to angle segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingMethod {
    /// Interval membership of the known cosine angle.
    #[default]
    Angle,
    /// Peak of the Bartlett spectrum over segment-center beams.
    Bartlett,
}

fn segment_lower(i: usize, n: usize) -> f64 {
    -1.0 + 2.0 * i as f64 / n as f64
}

/// Segment (1-indexed) of `[-1 + 2(i-1)/n, -1 + 2i/n)` holding `omega`.
pub fn segment_of(omega: f64, n: usize) -> usize {
    let mut i = (((omega + 1.0) * n as f64 / 2.0).floor().max(0.0) as usize).min(n - 1);
    // settle rounding against the printed interval ends
    while i > 0 && omega < segment_lower(i, n) {
        i -= 1;
    }
    while i + 1 < n && omega >= segment_lower(i + 1, n) {
        i += 1;
    }
    i + 1
}

pub fn group_by_angle(omegas: &[f64], segment_count: usize) -> Result<GroupAssignment> {
    if segment_count == 0 {
        return Err(Error::InvalidArgument("segment count must be positive".into()));
    }
    let mut groups = GroupAssignment::new();
    for (l, &w) in omegas.iter().enumerate() {
        if !(-1.0..1.0).contains(&w) {
            return Err(Error::InvalidArgument(format!("cosine angle {w} outside [-1, 1)")));
        }
        groups.entry(segment_of(w, segment_count)).or_default().push(l);
    }
    Ok(groups)
}

/// Segment-center beams `v_i` at `-1 + (2i - 1)/n`, `i = 1..=n`.
pub fn bartlett_dictionary(n: usize) -> Vec<Vec<Complex64>> {
    (1..=n)
        .map(|i| {
            steering_vector(n, -1.0 + (2 * i - 1) as f64 / n as f64)
                .expect("segment centers lie inside [-1, 1)")
        })
        .collect()
}

/// Correlations within this relative margin of the peak count as a tie.
const BARTLETT_TIE: f64 = 1e-12;

pub fn group_by_bartlett(vectors: &[Vec<Complex64>], segment_count: usize) -> Result<GroupAssignment> {
    if segment_count == 0 {
        return Err(Error::InvalidArgument("segment count must be positive".into()));
    }
    let dict = bartlett_dictionary(segment_count);
    let mut groups = GroupAssignment::new();
    for (l, h) in vectors.iter().enumerate() {
        if h.len() != segment_count {
            return Err(Error::DimensionMismatch {
                context: "Bartlett grouping",
                expected: segment_count,
                actual: h.len(),
            });
        }
        let corr: Vec<f64> = dict.iter().map(|v| dot(v, h).norm()).collect();
        let peak = corr.iter().copied().fold(0.0, f64::max);
        let winner = corr
            .iter()
            .position(|&c| c >= peak * (1.0 - BARTLETT_TIE))
            .expect("dictionary is non-empty");
        groups.entry(winner + 1).or_default().push(l);
    }
    Ok(groups)
}

/// Normalized sum of the members. Bit-identical repeats are counted once,
/// which leaves the normalized sum unchanged and keeps a single-direction
/// group exactly equal to that direction.
pub fn equivalent_steering(members: &[&[Complex64]]) -> Result<Vec<Complex64>> {
    let Some(first) = members.first() else {
        return Err(Error::InvalidArgument("empty group".into()));
    };
    let mut distinct: Vec<&[Complex64]> = Vec::with_capacity(members.len());
    for m in members {
        if m.len() != first.len() {
            return Err(Error::DimensionMismatch {
                context: "group member",
                expected: first.len(),
                actual: m.len(),
            });
        }
        if !distinct.contains(m) {
            distinct.push(m);
        }
    }
    if distinct.len() == 1 {
        return Ok(distinct[0].to_vec());
    }
    let mut sum = vec![Complex64::new(0.0, 0.0); first.len()];
    for m in &distinct {
        for (s, z) in sum.iter_mut().zip(m.iter()) {
            *s += z;
        }
    }
    if norm(&sum) <= CANCELLED_GROUP_NORM {
        return Err(Error::DegenerateGroup { segment: 0 });
    }
    Ok(normalized(&sum).expect("non-zero sum"))
}

/// Groups of one end and their equivalent steering vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathGroups {
    pub segment_count: usize,
    pub groups: GroupAssignment,
    /// One vector per non-empty group, in increasing segment order.
    pub equivalent_vectors: Vec<Vec<Complex64>>,
}

impl MultipathGroups {
    pub fn build(
        vectors: &[Vec<Complex64>],
        omegas: Option<&[f64]>,
        segment_count: usize,
        method: GroupingMethod,
    ) -> Result<Self> {
        let groups = match (method, omegas) {
            (GroupingMethod::Angle, Some(w)) => group_by_angle(w, segment_count)?,
            (GroupingMethod::Angle, None) => {
                return Err(Error::InvalidArgument(
                    "angle grouping needs cosine angles; use Bartlett grouping".into(),
                ))
            }
            (GroupingMethod::Bartlett, _) => group_by_bartlett(vectors, segment_count)?,
        };
        let equivalent_vectors = groups
            .iter()
            .map(|(&segment, members)| {
                let refs: Vec<&[Complex64]> = members.iter().map(|&l| vectors[l].as_slice()).collect();
                equivalent_steering(&refs).map_err(|e| match e {
                    Error::DegenerateGroup { .. } => Error::DegenerateGroup { segment },
                    other => other,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            segment_count,
            groups,
            equivalent_vectors,
        })
    }

    pub fn nonempty_count(&self) -> usize {
        self.groups.len()
    }
}

/// Pseudo-inverse design on the equivalent steering vectors of each end, with
/// all-ones gains of the reduced length.
pub fn mpg_beamform(steering: &SteeringSet, method: GroupingMethod) -> Result<BeamformingSolution> {
    let tx = MultipathGroups::build(
        &steering.tx,
        steering.omega_t.as_deref(),
        steering.arrays.n_t,
        method,
    )?;
    let rx = MultipathGroups::build(
        &steering.rx,
        steering.omega_r.as_deref(),
        steering.arrays.n_r,
        method,
    )?;
    let b = GainVectors::ones(tx.nonempty_count()).b;
    let a = GainVectors::ones(rx.nonempty_count()).a;
    let (sol, diag) = design_pair("mpg", &tx.equivalent_vectors, &b, &rx.equivalent_vectors, &a)?;
    Ok(BeamformingSolution {
        design: Some(DesignDiagnostics {
            tx_groups: Some(tx.groups),
            rx_groups: Some(rx.groups),
            ..diag
        }),
        ..sol
    })
}
