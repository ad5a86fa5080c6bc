//! Big-M encoding of continuous piecewise-affine characteristics.
//!
//! A curve is a list of segments `y = intercept + slope * x` on `[lo, hi]`,
//! consecutive segments sharing a knee. The encoding adds one binary `z_k`
//! per segment with `Σ z_k = 1`; segment `k` restricts `x` to its interval
//! and pins `y` to its line, both relaxed by `M (1 - z_k)`. With `x` fixed,
//! the only feasible `y` is the curve value; at a knee two assignments are
//! feasible and both give the same value.

use serde::{Deserialize, Serialize};

use crate::case::{HydrogenSource, RenewableSource, VoltVarCurve};
use crate::error::{Error, Result};

use super::{BigMRecord, MilpModel, Sense, Tag, VarId, VarKey};

const KNEE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl Segment {
    fn at(&self, x: f64) -> f64 {
        if self.slope == 0.0 {
            self.intercept
        } else {
            self.intercept + self.slope * x
        }
    }

    fn meets(&self, xl: f64, xu: f64) -> bool {
        self.lo <= xu && self.hi >= xl
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCurve {
    pub segments: Vec<Segment>,
}

impl PiecewiseCurve {
    /// Zero below the zero-crossing, droop line, saturation above the knee.
    pub fn electrolyzer(hs: &HydrogenSource) -> Self {
        let zero = hs.f_ely_knee - hs.p_ely_max / hs.d_ely;
        PiecewiseCurve {
            segments: vec![
                Segment { lo: f64::NEG_INFINITY, hi: zero, slope: 0.0, intercept: 0.0 },
                Segment {
                    lo: zero,
                    hi: hs.f_ely_knee,
                    slope: hs.d_ely,
                    intercept: hs.p_ely_max - hs.d_ely * hs.f_ely_knee,
                },
                Segment { lo: hs.f_ely_knee, hi: f64::INFINITY, slope: 0.0, intercept: hs.p_ely_max },
            ],
        }
    }

    pub fn fuel_cell(hs: &HydrogenSource) -> Self {
        let zero = hs.f_fc_knee + hs.p_fc_max / hs.d_fc;
        PiecewiseCurve {
            segments: vec![
                Segment { lo: f64::NEG_INFINITY, hi: hs.f_fc_knee, slope: 0.0, intercept: hs.p_fc_max },
                Segment {
                    lo: hs.f_fc_knee,
                    hi: zero,
                    slope: -hs.d_fc,
                    intercept: hs.p_fc_max + hs.d_fc * hs.f_fc_knee,
                },
                Segment { lo: zero, hi: f64::INFINITY, slope: 0.0, intercept: 0.0 },
            ],
        }
    }

    /// Droop curve of a renewable for one MPP value.
    pub fn renewable(rs: &RenewableSource, mpp: f64) -> Self {
        let zero = rs.f_knee + mpp / rs.d_droop;
        PiecewiseCurve {
            segments: vec![
                Segment { lo: f64::NEG_INFINITY, hi: rs.f_knee, slope: 0.0, intercept: mpp },
                Segment {
                    lo: rs.f_knee,
                    hi: zero,
                    slope: -rs.d_droop,
                    intercept: mpp + rs.d_droop * rs.f_knee,
                },
                Segment { lo: zero, hi: f64::INFINITY, slope: 0.0, intercept: 0.0 },
            ],
        }
    }

    /// Five segments: generation cap, generation droop, dead band,
    /// absorption droop, absorption cap.
    pub fn volt_var(c: &VoltVarCurve) -> Self {
        let gen_sat = if c.d_gen > 0.0 {
            c.u_gen_start - c.q_gen_max / c.d_gen
        } else {
            f64::NEG_INFINITY
        };
        let abs_sat = if c.d_abs > 0.0 {
            c.u_abs_start + c.q_abs_max / c.d_abs
        } else {
            f64::INFINITY
        };
        PiecewiseCurve {
            segments: vec![
                Segment { lo: f64::NEG_INFINITY, hi: gen_sat, slope: 0.0, intercept: c.q_gen_max },
                Segment {
                    lo: gen_sat,
                    hi: c.u_gen_start,
                    slope: -c.d_gen,
                    intercept: c.d_gen * c.u_gen_start,
                },
                Segment { lo: c.u_gen_start, hi: c.u_abs_start, slope: 0.0, intercept: 0.0 },
                Segment {
                    lo: c.u_abs_start,
                    hi: abs_sat,
                    slope: -c.d_abs,
                    intercept: c.d_abs * c.u_abs_start,
                },
                Segment { lo: abs_sat, hi: f64::INFINITY, slope: 0.0, intercept: -c.q_abs_max },
            ],
        }
    }

    /// Ordered, contiguous and continuous at every finite knee.
    pub fn check(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Model("piecewise curve has no segments".into()));
        }
        for s in &self.segments {
            if !(s.lo <= s.hi) || !s.slope.is_finite() || !s.intercept.is_finite() {
                return Err(Error::Model(format!("malformed segment {s:?}")));
            }
        }
        for w in self.segments.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.hi != b.lo {
                return Err(Error::Model(format!(
                    "segments are not contiguous: {} vs {}",
                    a.hi, b.lo
                )));
            }
            let knee = a.hi;
            if knee.is_finite() {
                let (ya, yb) = (a.at(knee), b.at(knee));
                if (ya - yb).abs() > KNEE_TOL * (1.0 + ya.abs().max(yb.abs())) {
                    return Err(Error::Model(format!(
                        "non-continuous segments at {knee}: {ya} vs {yb}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Curve value by segment lookup. The closed-form evaluators in
    /// [`crate::response`] are the reference; this is for bookkeeping only.
    pub fn value(&self, x: f64) -> f64 {
        let seg = self
            .segments
            .iter()
            .find(|s| x >= s.lo && x <= s.hi)
            .unwrap_or_else(|| self.segments.last().unwrap());
        seg.at(x)
    }
}

/// Relaxation constants for one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentBigM {
    /// Relaxes the segment's input interval.
    pub input: f64,
    /// Relaxes the segment's output line.
    pub output: f64,
}

/// Per-segment big-M constants over the box `input × output`.
///
/// `input` is the input range, `output` is `|slope| · input range + output
/// range`. Both make the relaxed rows vacuous anywhere in the box for every
/// segment that meets the input range.
pub fn compute_big_m(
    curve: &PiecewiseCurve,
    input: (f64, f64),
    output: (f64, f64),
) -> Result<Vec<SegmentBigM>> {
    let finite = [input.0, input.1, output.0, output.1].iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::Model(format!(
            "big-M needs finite bounds, got input {input:?} output {output:?}"
        )));
    }
    let x_range = (input.1 - input.0).max(0.0);
    let y_range = (output.1 - output.0).max(0.0);
    Ok(curve
        .segments
        .iter()
        .map(|s| SegmentBigM {
            input: x_range,
            output: s.slope.abs() * x_range + y_range,
        })
        .collect())
}

/// Add the segment-selection encoding of `y = curve(x)` to `model`.
///
/// Input and output bounds are read from the variables. Segments that do not
/// meet the input range get an indicator fixed to zero and no rows. Returns
/// the indicator ids in segment order.
pub fn linearize_piecewise_affine(
    model: &mut MilpModel,
    curve: &PiecewiseCurve,
    x: VarId,
    y: VarId,
    big_m: &[SegmentBigM],
    segment_key: impl Fn(usize) -> VarKey,
    tag: Tag,
) -> Result<Vec<VarId>> {
    curve.check()?;
    let (xl, xu) = (model.vars[x].lb, model.vars[x].ub);
    let (yl, yu) = (model.vars[y].lb, model.vars[y].ub);
    let required = compute_big_m(curve, (xl, xu), (yl, yu))?;
    if big_m.len() != curve.segments.len() {
        return Err(Error::Model("one big-M pair per segment required".into()));
    }
    for (k, (given, need)) in big_m.iter().zip(&required).enumerate() {
        let slack = 1e-12 * (1.0 + need.output.abs());
        if given.input < need.input - slack || given.output < need.output - slack {
            return Err(Error::Model(format!(
                "insufficient M for segment {k}: {given:?} < {need:?}"
            )));
        }
    }

    let mut z = Vec::with_capacity(curve.segments.len());
    for (k, seg) in curve.segments.iter().enumerate() {
        let live = seg.meets(xl, xu);
        let zk = model.add_var(segment_key(k), 0.0, if live { 1.0 } else { 0.0 }, true);
        z.push(zk);
        if !live {
            continue;
        }
        let m = big_m[k];
        // x >= lo - M (1 - z)
        if seg.lo > xl {
            model.add_constraint(&[(x, 1.0), (zk, -m.input)], Sense::Ge, seg.lo - m.input, tag);
        }
        // x <= hi + M (1 - z)
        if seg.hi < xu {
            model.add_constraint(&[(x, 1.0), (zk, m.input)], Sense::Le, seg.hi + m.input, tag);
        }
        // |y - slope x - intercept| <= M (1 - z)
        model.add_constraint(
            &[(y, 1.0), (x, -seg.slope), (zk, m.output)],
            Sense::Le,
            seg.intercept + m.output,
            tag,
        );
        model.add_constraint(
            &[(y, 1.0), (x, -seg.slope), (zk, -m.output)],
            Sense::Ge,
            seg.intercept - m.output,
            tag,
        );
    }
    let ones: Vec<(VarId, f64)> = z.iter().map(|&v| (v, 1.0)).collect();
    model.add_constraint(&ones, Sense::Eq, 1.0, tag);

    let worst = big_m.iter().fold((0.0f64, 0.0f64), |acc, m| {
        (acc.0.max(m.input), acc.1.max(m.output))
    });
    model.big_m.push(BigMRecord {
        block: format!("{tag} {}", segment_key(0)),
        input: worst.0,
        output: worst.1,
    });
    Ok(z)
}
