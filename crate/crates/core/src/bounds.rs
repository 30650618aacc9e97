//! Rate bounds for wiretapped string OT.
//!
//! Closed forms for the erasure broadcast channel, plus the general
//! max-min lower bound for channels that split into a "good" sub-channel
//! pair (W0, V0) and a "bad" pair (W1, V1). The max-min is a linear program
//! in (γ1, γ2, τ1, t); it is solved exactly by enumerating vertices, with a
//! brute-force grid search kept alongside as an independent check.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::BoundsError;

/// min{ε3(1−ε1), ε1, ½(ε1ε2 + ε3(1−ε1))}.
fn capacity_expression(p: &ChannelParams) -> f64 {
    let eve = p.eps3 * (1.0 - p.eps1);
    eve.min(p.eps1).min(0.5 * (p.eps1 * p.eps2 + eve))
}

/// Upper bound on the OT rate for honest-but-curious users.
pub fn upper_bound(params: &ChannelParams) -> f64 {
    capacity_expression(params)
}

/// Achievable rate of the erasure protocol; `None` when ε2 < ε3, where the
/// protocol does not apply. Shares the arithmetic of [`upper_bound`], so
/// the two agree bit for bit whenever this is `Some`.
pub fn lower_bound_besbc(params: &ChannelParams) -> Option<f64> {
    (params.eps2 >= params.eps3).then(|| capacity_expression(params))
}

/// Closed-form achievable rate obtained by evaluating the general bound at
/// the two corner points (γ1 = 1−ε1, γ1−γ2 = min(ε1, 1−ε1), τ1 = 0).
///
/// For ε2 < ε3 this is achievable but not always the optimum of the general
/// bound; [`general_lower_bound`] can exceed it.
pub fn corollary_rate(params: &ChannelParams) -> f64 {
    let ChannelParams { eps1, eps2, eps3 } = *params;
    if eps2 >= eps3 {
        capacity_expression(params)
    } else if eps1 <= 0.5 {
        eps1.min((1.0 - 2.0 * eps1) * eps3 + eps1 * eps2)
            .min(0.5 * ((1.0 - eps1) * eps3 + eps1 * eps2))
    } else {
        (1.0 - eps1) * eps2
    }
}

/// A broadcast channel that behaves like (W0 → Bob, V0 → Eve) or
/// (W1 → Bob, V1 → Eve) per use, with the mixture weights of `eps`.
///
/// Matrices are row-stochastic, indexed `[x][y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralChannelSpec {
    pub w0: Vec<Vec<f64>>,
    pub w1: Vec<Vec<f64>>,
    pub v0: Vec<Vec<f64>>,
    pub v1: Vec<Vec<f64>>,
    pub eps: ChannelParams,
    /// Input distribution.
    pub p: Vec<f64>,
}

const STOCHASTIC_TOL: f64 = 1e-12;

impl GeneralChannelSpec {
    /// The erasure channel in this form: the good sub-channels are
    /// noiseless, the bad ones always erase. Uniform input.
    pub fn besbc(eps: ChannelParams) -> Self {
        let identity = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let erase = vec![vec![1.0], vec![1.0]];
        Self {
            w0: identity.clone(),
            w1: erase.clone(),
            v0: identity,
            v1: erase,
            eps,
            p: vec![0.5, 0.5],
        }
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        self.eps.validate()?;
        let total: f64 = self.p.iter().sum();
        if self.p.iter().any(|&v| !(v.is_finite() && v >= 0.0)) || (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(BoundsError::BadInputDistribution(total));
        }
        for (name, m) in [("W0", &self.w0), ("W1", &self.w1), ("V0", &self.v0), ("V1", &self.v1)] {
            check_stochastic(name, m, self.p.len())?;
        }
        Ok(())
    }
}

fn check_stochastic(name: &'static str, m: &[Vec<f64>], inputs: usize) -> Result<(), BoundsError> {
    if m.len() != inputs {
        return Err(BoundsError::InputAlphabet {
            name,
            expected: inputs,
            found: m.len(),
        });
    }
    let width = m.first().map_or(0, Vec::len);
    for (row, entries) in m.iter().enumerate() {
        if entries.len() != width || width == 0 || entries.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(BoundsError::BadEntry { name });
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(BoundsError::NotStochastic { name, row, sum });
        }
    }
    Ok(())
}

/// I(X;Y) in bits for X ~ p and channel `w[x][y]`.
pub fn mutual_information(p: &[f64], w: &[Vec<f64>]) -> f64 {
    let outputs = w.first().map_or(0, Vec::len);
    let q: Vec<f64> = (0..outputs)
        .map(|y| p.iter().zip(w).map(|(px, row)| px * row[y]).sum())
        .collect();
    let mut info = 0.0;
    for (px, row) in p.iter().zip(w) {
        for (wy, qy) in row.iter().zip(&q) {
            let joint = px * wy;
            if joint > 0.0 {
                info += joint * (wy / qy).log2();
            }
        }
    }
    info
}

/// Differences of sub-channel capacities, in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub c0: f64,
    pub c11: f64,
    pub c12: f64,
    pub c21: f64,
    pub c22: f64,
    pub cg: f64,
    pub cb: f64,
    pub cn: f64,
}

impl RateConstants {
    /// Constants of the erasure channel in closed form.
    pub fn besbc(eps: &ChannelParams) -> Self {
        Self::from_parts(1.0, 0.0, 1.0, -1.0, 0.0, eps)
    }

    fn from_parts(c0: f64, c11: f64, c12: f64, c21: f64, c22: f64, eps: &ChannelParams) -> Self {
        Self {
            c0,
            c11,
            c12,
            c21,
            c22,
            cg: (1.0 - eps.eps3) * c11 + eps.eps3 * c12,
            cb: (1.0 - eps.eps2) * c21 + eps.eps2 * c22,
            cn: (1.0 - eps.eps2) * c11 + eps.eps2 * c12,
        }
    }

    fn is_finite(&self) -> bool {
        [self.c0, self.cg, self.cb].iter().all(|v| v.is_finite())
    }
}

pub fn channel_constants(spec: &GeneralChannelSpec) -> Result<RateConstants, BoundsError> {
    spec.validate()?;
    let iy0 = mutual_information(&spec.p, &spec.w0);
    let iy1 = mutual_information(&spec.p, &spec.w1);
    let iz0 = mutual_information(&spec.p, &spec.v0);
    let iz1 = mutual_information(&spec.p, &spec.v1);
    Ok(RateConstants::from_parts(
        iy0 - iy1,
        iy0 - iz0,
        iy0 - iz1,
        iy1 - iz0,
        iy1 - iz1,
        &spec.eps,
    ))
}

/// How many coordinates of each kind go into G and B, as fractions of n:
/// G takes γ1 from the good part and τ1 from the bad part, B takes γ2 and τ2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub gamma1: f64,
    pub gamma2: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl OperatingPoint {
    pub fn beta(&self) -> f64 {
        self.gamma1 + self.tau1
    }

    pub fn is_feasible(&self, eps1: f64, tol: f64) -> bool {
        let OperatingPoint { gamma1, gamma2, tau1, tau2 } = *self;
        [gamma1, gamma2, tau1, tau2].iter().all(|&v| v >= -tol)
            && gamma2 <= gamma1 + tol
            && gamma1 <= 1.0 - eps1 + tol
            && tau1.max(tau2) <= eps1 + tol
            && ((gamma1 + tau1) - (gamma2 + tau2)).abs() <= tol
            && gamma1 + tau1 <= 1.0 + tol
    }
}

/// The four rate constraints at `point`; the achievable rate there is their minimum.
pub fn rate_expressions(c: &RateConstants, eps1: f64, point: &OperatingPoint) -> [f64; 4] {
    let OperatingPoint { gamma1, gamma2, tau1, tau2 } = *point;
    let d = (gamma1 - gamma2) * c.c0;
    [
        d,
        gamma1 * c.cg + tau1 * c.cb,
        gamma2 * c.cg + tau2 * c.cb + d,
        0.5 * ((gamma1 + gamma2).min(1.0 - eps1) * c.cg + (tau1 + tau2).min(eps1) * c.cb + d),
    ]
}

pub fn rate_at(c: &RateConstants, eps1: f64, point: &OperatingPoint) -> f64 {
    rate_expressions(c, eps1, point).into_iter().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub rate: f64,
    pub argmax: OperatingPoint,
}

// Variables: [γ1, γ2, τ1, t]; τ2 = γ1 − γ2 + τ1.
type Row = [f64; 4];

const G1: Row = [1.0, 0.0, 0.0, 0.0];
const G2: Row = [0.0, 1.0, 0.0, 0.0];
const T1: Row = [0.0, 0.0, 1.0, 0.0];
const T2: Row = [1.0, -1.0, 1.0, 0.0];
const T: Row = [0.0, 0.0, 0.0, 1.0];

fn lin(terms: &[(f64, Row)]) -> Row {
    let mut out = [0.0; 4];
    for (k, row) in terms {
        for (o, r) in out.iter_mut().zip(row) {
            *o += k * r;
        }
    }
    out
}

/// `coef · v ≤ rhs`.
#[derive(Debug, Clone, Copy)]
struct Constraint {
    coef: Row,
    rhs: f64,
}

fn le(coef: Row, rhs: f64) -> Constraint {
    Constraint { coef, rhs }
}

/// `t ≤ coef · v + constant`.
fn t_below(coef: Row, constant: f64) -> Constraint {
    le(lin(&[(1.0, T), (-1.0, coef)]), constant)
}

/// One side of `min(linear, constant)`: the linear part and the constant.
#[derive(Debug, Clone, Copy)]
struct Affine {
    coef: Row,
    constant: f64,
}

/// The concave pieces of `min(a, b) · scale`, as alternatives that all bound
/// t together, or as regions (when scale < 0) each with a single piece.
fn min_times(a: Affine, b: Affine, scale: f64) -> Vec<(Vec<Affine>, Option<Constraint>)> {
    if scale >= 0.0 {
        vec![(vec![a, b], None)]
    } else {
        let a_minus_b = lin(&[(1.0, a.coef), (-1.0, b.coef)]);
        let gap = b.constant - a.constant;
        vec![
            (vec![a], Some(le(a_minus_b, gap))),
            (vec![b], Some(le(lin(&[(-1.0, a_minus_b)]), -gap))),
        ]
    }
}

const FEAS_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-10;

#[allow(clippy::needless_range_loop)]
fn solve4(mut a: [Row; 4], mut b: [f64; 4]) -> Option<Row> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..4 {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..4 {
                        a[row][k] -= f * a[col][k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
    }
    Some([b[0] / a[0][0], b[1] / a[1][1], b[2] / a[2][2], b[3] / a[3][3]])
}

/// Every vertex of `{v : constraints}` that maximizes t.
fn optimal_vertices(constraints: &[Constraint]) -> Vec<Row> {
    let m = constraints.len();
    let mut best = f64::NEG_INFINITY;
    let mut winners: Vec<Row> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                for l in k + 1..m {
                    let pick = [i, j, k, l].map(|idx| constraints[idx]);
                    let Some(v) = solve4(pick.map(|c| c.coef), pick.map(|c| c.rhs)) else {
                        continue;
                    };
                    let feasible = constraints.iter().all(|c| {
                        c.coef.iter().zip(&v).map(|(a, x)| a * x).sum::<f64>() <= c.rhs + FEAS_TOL
                    });
                    if !feasible {
                        continue;
                    }
                    if v[3] > best + TIE_TOL {
                        best = v[3];
                        winners.clear();
                        winners.push(v);
                    } else if v[3] >= best - TIE_TOL {
                        winners.push(v);
                    }
                }
            }
        }
    }
    winners
}

// Rounds away solver noise so reported points read cleanly.
fn tidy(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Exact maximum over the feasible polytope of the minimum of
/// [`rate_expressions`].
///
/// When several points attain the maximum, the one with the largest γ1,
/// then the largest γ1 − γ2, then the smallest τ1 is returned.
pub fn general_lower_bound(c: &RateConstants, eps1: f64) -> Result<LowerBound, BoundsError> {
    if !c.is_finite() || !eps1.is_finite() {
        return Err(BoundsError::NonFinite);
    }
    if !(0.0..=1.0).contains(&eps1) {
        return Err(BoundsError::Channel(crate::error::ChannelError::InvalidProbability {
            name: "eps1",
            value: eps1,
        }));
    }

    let polytope = [
        le(lin(&[(-1.0, G2)]), 0.0),
        le(lin(&[(1.0, G2), (-1.0, G1)]), 0.0),
        le(G1, 1.0 - eps1),
        le(lin(&[(-1.0, T1)]), 0.0),
        le(T1, eps1),
        le(lin(&[(-1.0, T2)]), 0.0),
        le(T2, eps1),
        le(lin(&[(1.0, G1), (1.0, T1)]), 1.0),
    ];
    let diff = lin(&[(c.c0, G1), (-c.c0, G2)]);
    let plain = [
        t_below(diff, 0.0),
        t_below(lin(&[(c.cg, G1), (c.cb, T1)]), 0.0),
        t_below(lin(&[(c.cg, G2), (c.cb, T2), (1.0, diff)]), 0.0),
    ];
    let good = min_times(
        Affine { coef: lin(&[(1.0, G1), (1.0, G2)]), constant: 0.0 },
        Affine { coef: [0.0; 4], constant: 1.0 - eps1 },
        c.cg,
    );
    let bad = min_times(
        Affine { coef: lin(&[(1.0, T1), (1.0, T2)]), constant: 0.0 },
        Affine { coef: [0.0; 4], constant: eps1 },
        c.cb,
    );

    let mut candidates = Vec::new();
    for (good_pieces, good_region) in &good {
        for (bad_pieces, bad_region) in &bad {
            let mut cons: Vec<Constraint> = polytope.iter().chain(&plain).copied().collect();
            cons.extend(good_region.iter().chain(bad_region));
            for g in good_pieces {
                for b in bad_pieces {
                    // 2t ≤ g·CG + b·CB + (γ1 − γ2)C0
                    let coef = lin(&[(0.5 * c.cg, g.coef), (0.5 * c.cb, b.coef), (0.5, diff)]);
                    cons.push(t_below(coef, 0.5 * (c.cg * g.constant + c.cb * b.constant)));
                }
            }
            candidates.extend(optimal_vertices(&cons));
        }
    }

    let best = candidates
        .iter()
        .map(|v| v[3])
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(BoundsError::EmptyFeasibleSet);
    }
    let key = |v: &Row| [v[0], v[0] - v[1], -v[2]];
    let v = candidates
        .iter()
        .filter(|v| v[3] >= best - TIE_TOL)
        .copied()
        .reduce(|acc, v| {
            let (ka, kv) = (key(&acc), key(&v));
            for (a, b) in ka.iter().zip(&kv) {
                if b > &(a + 1e-9) {
                    return v;
                }
                if a > &(b + 1e-9) {
                    return acc;
                }
            }
            acc
        })
        .expect("non-empty");
    let argmax = OperatingPoint {
        gamma1: tidy(v[0]),
        gamma2: tidy(v[1]),
        tau1: tidy(v[2]),
        tau2: tidy(v[0] - v[1] + v[2]),
    };
    Ok(LowerBound {
        rate: rate_at(c, eps1, &argmax),
        argmax,
    })
}

/// Brute-force maximum over a grid with `resolution` steps per axis.
///
/// Every grid point is feasible and the polytope's corners are on the grid,
/// so the result never exceeds the exact optimum and converges to it as
/// the resolution grows.
pub fn grid_lower_bound(c: &RateConstants, eps1: f64, resolution: usize) -> Result<LowerBound, BoundsError> {
    if resolution < 2 {
        return Err(BoundsError::CoarseGrid(resolution));
    }
    if !c.is_finite() || !eps1.is_finite() {
        return Err(BoundsError::NonFinite);
    }
    let steps = resolution as f64;
    let linspace = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * (i as f64 / steps);
    let mut best: Option<LowerBound> = None;
    for i in 0..=resolution {
        let gamma1 = linspace(0.0, 1.0 - eps1, i);
        let tau1_max = eps1.min(1.0 - gamma1);
        for j in 0..=resolution {
            let tau1 = linspace(0.0, tau1_max, j);
            // τ2 = γ1 + τ1 − γ2 ∈ [0, ε1] and 0 ≤ γ2 ≤ γ1.
            let gamma2_min = (gamma1 + tau1 - eps1).max(0.0);
            if gamma2_min > gamma1 + 1e-15 {
                continue;
            }
            for k in 0..=resolution {
                let gamma2 = linspace(gamma2_min, gamma1, k);
                let point = OperatingPoint {
                    gamma1,
                    gamma2,
                    tau1,
                    tau2: gamma1 + tau1 - gamma2,
                };
                let rate = rate_at(c, eps1, &point);
                if best.is_none_or(|b| rate > b.rate) {
                    best = Some(LowerBound { rate, argmax: point });
                }
            }
        }
    }
    best.ok_or(BoundsError::EmptyFeasibleSet)
}

/// Every bound for one erasure channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    pub upper: f64,
    pub lower_t2: Option<f64>,
    pub corollary: f64,
    pub general_lower: f64,
    pub argmax: OperatingPoint,
}

impl RateBounds {
    pub fn gap(&self) -> f64 {
        self.upper - self.general_lower
    }
}

pub fn besbc_bounds(params: &ChannelParams) -> Result<RateBounds, BoundsError> {
    params.validate()?;
    let general = general_lower_bound(&RateConstants::besbc(params), params.eps1)?;
    Ok(RateBounds {
        upper: upper_bound(params),
        lower_t2: lower_bound_besbc(params),
        corollary: corollary_rate(params),
        general_lower: general.rate,
        argmax: general.argmax,
    })
}
